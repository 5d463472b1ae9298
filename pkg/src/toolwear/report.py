"""Report emission: explanation CSVs, waterfall SVGs, importance bar charts.

SVGs are assembled as plain strings (no plotting dependency) with fixed
number formatting, so outputs are byte-reproducible and diffable; the CSVs
carry the same numbers at full precision for external plotting.
"""

from __future__ import annotations

import csv

import numpy as np

from .shapley import GlobalImportance, ShapleyExplanation

RED = "#d62728"    # pushes the score up (toward worn)
BLUE = "#1f77b4"   # pushes the score down


def write_explanation_csv(path, expl: ShapleyExplanation, feature_names,
                          feature_values, predicted_class: int,
                          true_class: int) -> None:
    """Per-instance explanation: preamble rows, then one row per feature."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["base_value", repr(expl.base_value), ""])
        w.writerow(["explained_output", repr(expl.explained_output), ""])
        w.writerow(["target_class", expl.target_class, ""])
        w.writerow(["backend", expl.backend, ""])
        w.writerow(["predicted_class", predicted_class, ""])
        w.writerow(["true_class", true_class, ""])
        w.writerow(["feature", "phi", "feature_value"])
        for i, name in enumerate(feature_names):
            w.writerow([name, repr(float(expl.phi[i])),
                        repr(float(feature_values[i]))])


def write_global_importance_csv(path, gi: GlobalImportance) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "mean_abs_phi_class1", "rank"])
        for rank, idx in enumerate(gi.ranking, start=1):
            w.writerow([gi.feature_names[idx],
                        repr(float(gi.mean_abs_phi[idx])), rank])


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def waterfall_svg(expl: ShapleyExplanation, feature_names, feature_values,
                  predicted_class: int, true_class: int) -> str:
    """Waterfall from the base value to the model output, largest |phi|
    first, red for positive contributions and blue for negative."""
    m = expl.M
    order = sorted(range(m), key=lambda i: (-abs(float(expl.phi[i])), i))
    # cumulative walk: start at base, apply contributions in display order
    levels = [expl.base_value]
    for i in order:
        levels.append(levels[-1] + float(expl.phi[i]))

    width, row_h, top, bottom, left, right = 720, 30, 56, 46, 210, 30
    height = top + row_h * m + bottom
    lo = min(levels)
    hi = max(levels)
    span = (hi - lo) or 1.0
    pad = 0.08 * span
    lo, hi = lo - pad, hi + pad

    def sx(v: float) -> float:
        return left + (v - lo) / (hi - lo) * (width - left - right)

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" font-family="monospace" font-size="12">',
           f'<text x="{left}" y="18">prediction walk: class-'
           f'{expl.target_class} score {_fmt(expl.base_value)} → '
           f'{_fmt(expl.explained_output)}</text>',
           f'<text x="{left}" y="34">predicted={predicted_class} '
           f'true={true_class} backend={expl.backend}</text>']
    for guide, label in ((expl.base_value, "base"),
                         (expl.explained_output, "output")):
        gx = _fmt(sx(guide))
        out.append(f'<line x1="{gx}" y1="{top - 10}" x2="{gx}" '
                   f'y2="{height - bottom + 14}" stroke="#999" '
                   'stroke-dasharray="4,3"/>')
        out.append(f'<text x="{gx}" y="{height - bottom + 28}" '
                   f'text-anchor="middle">{label} {_fmt(guide)}</text>')
    for row, i in enumerate(order):
        phi = float(expl.phi[i])
        y = top + row * row_h
        x0, x1 = sx(levels[row]), sx(levels[row + 1])
        bar_x = min(x0, x1)
        bar_w = max(abs(x1 - x0), 0.75)
        color = RED if phi >= 0 else BLUE
        out.append(f'<text x="{left - 8}" y="{y + 17}" text-anchor="end">'
                   f'{feature_names[i]}={_fmt(float(feature_values[i]))}'
                   '</text>')
        out.append(f'<rect x="{_fmt(bar_x)}" y="{y + 6}" '
                   f'width="{_fmt(bar_w)}" height="16" fill="{color}"/>')
        anchor, tx = ("start", max(x0, x1) + 4) if phi >= 0 \
            else ("end", min(x0, x1) - 4)
        out.append(f'<text x="{_fmt(tx)}" y="{y + 17}" '
                   f'text-anchor="{anchor}">{phi:+.4f}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def importance_svg(gi: GlobalImportance) -> str:
    """Horizontal bar chart of mean |phi| per feature, ranked."""
    m = len(gi.feature_names)
    width, row_h, top, bottom, left, right = 640, 30, 40, 16, 150, 90
    height = top + row_h * m + bottom
    peak = float(np.max(gi.mean_abs_phi)) or 1.0
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
           f'height="{height}" font-family="monospace" font-size="12">',
           f'<text x="{left}" y="20">global importance: '
           'mean |phi| over explained instances</text>']
    for row, idx in enumerate(gi.ranking):
        y = top + row * row_h
        value = float(gi.mean_abs_phi[idx])
        bar = (width - left - right) * (value / peak)
        out.append(f'<text x="{left - 8}" y="{y + 17}" text-anchor="end">'
                   f'{gi.feature_names[idx]}</text>')
        out.append(f'<rect x="{left}" y="{y + 6}" width="{_fmt(bar)}" '
                   f'height="16" fill="{RED}"/>')
        out.append(f'<text x="{_fmt(left + bar + 6)}" y="{y + 17}">'
                   f'{_fmt(value)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
