"""Benchmark of how missing-data handling distorts Shapley explanations.

Modules: :mod:`~imputeshap.data` (tables, masks, splits),
:mod:`~imputeshap.impute` (five imputers), :mod:`~imputeshap.model` (linear
and boosted-tree predictors), :mod:`~imputeshap.shapley` (exact
attributions), :mod:`~imputeshap.theory` (executable identities),
:mod:`~imputeshap.metrics`, and the runner in :mod:`~imputeshap.experiment`
driven by :mod:`~imputeshap.cli`.
"""

__version__ = "0.1.0"
