import pytest

from imputeshap.config import ARMS, ConfigError, load_config, parse_groups, parse_text

BASIC = "datasets = diabetes_style\n"


def test_defaults():
    c = parse_text(BASIC)
    assert c.rates == (0.2, 0.4, 0.6, 0.8)
    assert c.methods == ARMS
    assert c.repetitions == 10 and c.base_seed == 0 and c.jobs == 1
    assert c.downstream_for("regression") == "linear"
    assert c.downstream_for("classification") == "gbt"
    assert c.datasets[0].target == "target"


def test_full_parse(tmp_path):
    (tmp_path / "d.csv").write_text("a,y\n1,2\n")
    text = """
# comment
datasets = mine
dataset.mine.path = d.csv
dataset.mine.target = y
dataset.mine.task = regression
rates = 0.1, 0.3
methods = mean, dimv
repetitions = 2   # inline comment
shapley.background = train_sample:5
impute.dimv.lam = 0.5
gbt.n_trees = 7
"""
    (tmp_path / "c.cfg").write_text(text)
    c = load_config(tmp_path / "c.cfg")
    assert c.datasets[0].path == str(tmp_path / "d.csv")
    assert c.rates == (0.1, 0.3) and c.methods == ("mean", "dimv") and c.repetitions == 2
    assert c.imputers == {"dimv": {"lam": 0.5}}
    assert c.gbt.n_trees == 7


@pytest.mark.parametrize("extra", [
    "rates = 1.0", "rates = 0.2, 0.2", "methods = mean, knn", "repetitions = 0", "bogus = 1",
    "shapley.mode = kernel", "shapley.background = train_sample:0", "impute.mice.ridge = -1",
    "impute.knn.k = 3", "test_fraction = 1", "jobs = 0", "standardize = maybe", "repetitions = two",
    "downstream = forest", "shapley.max_p = 40", "gbt.learning_rate = 0",
])
def test_invalid_values_rejected(extra):
    with pytest.raises(ConfigError):
        parse_text(BASIC + extra + "\n")


def test_linear_downstream_rejects_classification():
    with pytest.raises(ConfigError, match="classification"):
        parse_text("datasets = glass_style\ndownstream = linear\n")


def test_retrain_needs_linear():
    with pytest.raises(ConfigError):
        parse_text("datasets = glass_style\nshapley.mode = retrain\n")
    assert parse_text(BASIC + "shapley.mode = retrain\n").shapley.mode == "retrain"


def test_datasets_required_unless_checking():
    with pytest.raises(ConfigError):
        parse_text("rates = 0.2\n")
    assert parse_text("theory.seeds = 2\n", require_datasets=False).theory.seeds == 2


def test_unknown_dataset_without_path():
    with pytest.raises(ConfigError):
        parse_text("datasets = nowhere\n")


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/x.cfg")


def test_digest_ignores_output_location_and_jobs():
    a = parse_text(BASIC)
    assert a.digest() == a.with_overrides(output_dir="elsewhere", jobs=4).digest()
    assert a.digest() != a.with_overrides(base_seed=1).digest()


def test_parse_groups():
    assert parse_groups("none", 36) is None
    assert len(parse_groups("blocks:6:2", 36)) == 9
    with pytest.raises(ConfigError):
        parse_groups("blocks:5:2", 36)
    with pytest.raises(ConfigError):
        parse_groups("stripes", 36)


def test_digits_default_groups():
    assert parse_text("datasets = digits_slice\n").datasets[0].groups == "blocks:6:2"
