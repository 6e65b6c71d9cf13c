"""Deterministic SVG rendering of importance bars and beeswarm plots.

The SVG is written by hand (no plotting library) so the same inputs always
give the same bytes.  Numeric attributes are fixed-precision strings.
Every dot carries ``data-shap`` and ``data-sample`` attributes, and dots
for missing entries carry ``class="missing"`` with a gray fill, so tests
can read the structure back.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .rng import stream
from .shapley import GlobalImportance, ShapleyMatrix, beeswarm_export, global_importance

MISSING_FILL = "#9e9e9e"
LOW_COLOR = (0x00, 0x8B, 0xFB)
HIGH_COLOR = (0xFF, 0x00, 0x52)
ARM_COLORS = ("#4d4d4d", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2",
              "#17becf")

LABEL_W = 190.0
PLOT_W = 420.0
ROW_H = 26.0
TOP = 40.0


def fmt_number(v: float) -> str:
    """Three decimals with trailing zeros stripped, keeping at least one."""
    s = f"{v:.3f}".rstrip("0")
    return s + "0" if s.endswith(".") else s


def _c(v: float) -> str:
    return f"{v:.2f}"


def _header(width: float, height: float, title: str) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_c(width)}" height="{_c(height)}" '
        f'viewBox="0 0 {_c(width)} {_c(height)}" font-family="sans-serif" font-size="12">',
        f'<text class="title" x="{_c(width / 2)}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>',
    ]


def color_for(value: float) -> str:
    if not np.isfinite(value):
        return MISSING_FILL
    t = min(1.0, max(0.0, float(value)))
    rgb = [round(lo + (hi - lo) * t) for lo, hi in zip(LOW_COLOR, HIGH_COLOR)]
    return "#{:02x}{:02x}{:02x}".format(*rgb)


def importance_bar_svg(gi: GlobalImportance, title: str = "mean |SHAP value|") -> str:
    """Horizontal bars, most important feature on top, value label after each bar."""
    p = len(gi.feature_names)
    top = float(gi.importance.max()) if p and gi.importance.max() > 0 else 1.0
    height = TOP + ROW_H * p + 30
    width = LABEL_W + PLOT_W + 70
    out = _header(width, height, title)
    for rank, j in enumerate(gi.order):
        y = TOP + rank * ROW_H
        v = float(gi.importance[j])
        w = PLOT_W * v / top
        name = escape(gi.feature_names[j])
        out.append(f'<g class="feature" data-feature="{name}" data-rank="{rank}">')
        out.append(f'<text x="{_c(LABEL_W - 8)}" y="{_c(y + ROW_H * 0.62)}" text-anchor="end">{name}</text>')
        out.append(f'<rect class="bar" x="{_c(LABEL_W)}" y="{_c(y + 4)}" width="{_c(w)}" '
                   f'height="{_c(ROW_H - 8)}" fill="{ARM_COLORS[1]}" data-value="{v!r}"/>')
        out.append(f'<text class="value" x="{_c(LABEL_W + w + 5)}" y="{_c(y + ROW_H * 0.62)}">{fmt_number(v)}</text>')
        out.append("</g>")
    out.append(f'<line x1="{_c(LABEL_W)}" y1="{_c(TOP)}" x2="{_c(LABEL_W)}" y2="{_c(TOP + ROW_H * p)}" stroke="#333"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _swarm_offsets(xs: np.ndarray, band: float, dot: float, rng: np.random.Generator) -> np.ndarray:
    """Vertical offsets: dots sharing a pixel bin are stacked alternately
    above and below the center line; overflow is scattered with seeded jitter."""
    offsets = np.zeros(xs.size)
    bins = np.floor(xs / dot).astype(np.int64)
    jitter = rng.uniform(-band, band, size=xs.size)
    count: dict[int, int] = {}
    for i in np.argsort(xs, kind="stable"):
        k = count.get(bins[i], 0)
        count[bins[i]] = k + 1
        off = ((k + 1) // 2) * (1 if k % 2 else -1) * dot * 0.8
        offsets[i] = off if abs(off) <= band else jitter[i]
    return offsets


def beeswarm_svg(phi: ShapleyMatrix, title: str = "SHAP values", class_label: int | None = None,
                 jitter_seed: int = 0) -> str:
    """One horizontal band per feature (ordered by importance), one dot per
    explained row at its attribution; missing entries in gray."""
    records = beeswarm_export(phi, class_label=class_label)
    values = phi.for_class(class_label)
    lim = float(np.abs(values).max()) if values.size else 0.0
    lim = lim if lim > 0 else 1.0
    x0 = LABEL_W + PLOT_W / 2
    scale = (PLOT_W / 2 - 8) / lim
    p, m = phi.p, phi.m
    height = TOP + ROW_H * p + 40
    width = LABEL_W + PLOT_W + 40
    out = _header(width, height, title)
    out.append(f'<line class="zero" x1="{_c(x0)}" y1="{_c(TOP)}" x2="{_c(x0)}" y2="{_c(TOP + ROW_H * p)}" '
               f'stroke="#999" data-x="{_c(x0)}"/>')
    for rank in range(p):
        block = records[rank * m:(rank + 1) * m]
        name = escape(block[0].feature) if block else ""
        cy = TOP + rank * ROW_H + ROW_H / 2
        out.append(f'<g class="feature" data-feature="{name}" data-rank="{rank}">')
        out.append(f'<text x="{_c(LABEL_W - 8)}" y="{_c(cy + 4)}" text-anchor="end">{name}</text>')
        xs = np.array([x0 + r.shap_value * scale for r in block])
        rng = stream(jitter_seed, "beeswarm", rank)
        offs = _swarm_offsets(xs, ROW_H * 0.4, 4.0, rng) if block else []
        for r, x, dy in zip(block, xs, offs):
            cls = ' class="missing"' if r.was_missing else ""
            out.append(f'<circle{cls} cx="{_c(x)}" cy="{_c(cy + dy)}" r="2.5" fill="{color_for(r.color_value)}" '
                       f'data-sample="{r.sample_id}" data-shap="{r.shap_value!r}"/>')
        out.append("</g>")
    axis_y = TOP + ROW_H * p + 18
    for v in (-lim, 0.0, lim):
        out.append(f'<text class="tick" x="{_c(x0 + v * scale)}" y="{_c(axis_y)}" text-anchor="middle">'
                   f'{fmt_number(v)}</text>')
    out.append(f'<rect x="{_c(LABEL_W + PLOT_W + 10)}" y="{_c(TOP)}" width="8" height="8" fill="{MISSING_FILL}"/>')
    out.append(f'<text x="{_c(LABEL_W + PLOT_W + 10)}" y="{_c(TOP + 20)}" font-size="9">missing</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def comparison_svg(importances: Mapping[str, GlobalImportance], title: str = "importance by arm") -> str:
    """Grouped bars: one group per feature, one bar per arm.  Features are
    ordered by the first arm's ranking (the reference when present)."""
    arms = list(importances)
    if not arms:
        raise ValueError("need at least one arm")
    first = importances[arms[0]]
    names = first.feature_names
    for a in arms[1:]:
        if importances[a].feature_names != names:
            raise ValueError(f"arm {a!r} has different features")
    top = max(float(importances[a].importance.max()) for a in arms)
    top = top if top > 0 else 1.0
    bar_h = max(3.0, (ROW_H * 1.6) / len(arms))
    group_h = bar_h * len(arms) + 8
    height = TOP + group_h * len(names) + 20 + 16 * len(arms)
    width = LABEL_W + PLOT_W + 70
    out = _header(width, height, title)
    for rank, j in enumerate(first.order):
        y = TOP + rank * group_h
        name = escape(names[j])
        out.append(f'<g class="feature" data-feature="{name}" data-rank="{rank}">')
        out.append(f'<text x="{_c(LABEL_W - 8)}" y="{_c(y + group_h / 2)}" text-anchor="end">{name}</text>')
        for k, a in enumerate(arms):
            v = float(importances[a].importance[j])
            out.append(f'<rect class="bar" data-arm="{escape(a)}" x="{_c(LABEL_W)}" y="{_c(y + k * bar_h)}" '
                       f'width="{_c(PLOT_W * v / top)}" height="{_c(bar_h - 1)}" '
                       f'fill="{ARM_COLORS[k % len(ARM_COLORS)]}" data-value="{v!r}"/>')
        out.append("</g>")
    ly = TOP + group_h * len(names) + 10
    for k, a in enumerate(arms):
        out.append(f'<rect x="{_c(LABEL_W)}" y="{_c(ly + 16 * k)}" width="10" height="10" '
                   f'fill="{ARM_COLORS[k % len(ARM_COLORS)]}"/>')
        out.append(f'<text x="{_c(LABEL_W + 16)}" y="{_c(ly + 16 * k + 9)}">{escape(a)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def _write(path, text: str) -> Path:
    path = Path(path)
    path.write_text(text, encoding="utf-8")
    return path


def write_bar(path, phi: ShapleyMatrix, class_label: int | None = None, title: str = "mean |SHAP value|") -> Path:
    return _write(path, importance_bar_svg(global_importance(phi, class_label=class_label), title))


def write_beeswarm(path, phi: ShapleyMatrix, class_label: int | None = None, title: str = "SHAP values",
                   jitter_seed: int = 0) -> Path:
    return _write(path, beeswarm_svg(phi, title, class_label, jitter_seed))


def write_comparison(path, phis: Mapping[str, ShapleyMatrix], class_label: int | None = None,
                     title: str = "importance by arm") -> Path:
    return _write(path, comparison_svg({a: global_importance(p, class_label=class_label) for a, p in phis.items()},
                                       title))


__all__: Sequence[str] = ["beeswarm_svg", "color_for", "comparison_svg", "fmt_number", "importance_bar_svg",
                          "write_bar", "write_beeswarm", "write_comparison", "MISSING_FILL"]
