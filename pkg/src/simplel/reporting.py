"""Render experiment reports as markdown tables, raw CSV, or an SVG plot.

All output is generated with explicit float formatting so repeated
renders of the same report are byte-identical.
"""

from __future__ import annotations

import io

import numpy as np

from .bench import (NOISE_CLASSES, RECORD_FIELDS, ExperimentReport,
                    lower_median, noise_class)
from .errors import ParameterError

_CLASS_LABELS = {"small": "small", "medium": "medium", "large": "large",
                 "fifty": "50%"}

_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22")


def render_report(report: ExperimentReport, format: str) -> str:
    """Serialize a report; formats are ``markdown``, ``csv``, ``svg``."""
    if not report.records:
        raise ParameterError("report has no records")
    if format == "markdown":
        return _render_markdown(report)
    if format == "csv":
        return _render_csv(report)
    if format == "svg":
        return _render_svg(report)
    raise ParameterError(f"unknown report format {format!r}")


def _present_classes(report):
    present = {noise_class(r.level) for r in report.records}
    return [c for c in NOISE_CLASSES if c in present]


def _render_markdown(report: ExperimentReport) -> str:
    config = report.config
    rules = list(config.rules)
    lines = ["# Experiment report", ""]
    lines.append(f"- problem: `{config.problem}`")
    lines.append(f"- metric: {config.metric}")
    levels = ", ".join(f"{lv:g}" for lv in config.noise_levels)
    lines.append(f"- noise levels: {levels}")
    lines.append(f"- runs per level: {config.runs_per_level}")
    lines.append(f"- seed base: {config.seed_base}")
    if config.penalty:
        lines.append(f"- penalty: {config.penalty}")
    lines += ["", "## Median efficiency ratio J", ""]
    lines.append("| noise class | " + " | ".join(rules) + " |")
    lines.append("|---" * (len(rules) + 1) + "|")
    for cls in _present_classes(report):
        cells = []
        for rule in rules:
            value = report.medians.get(rule, {}).get(cls)
            cells.append("n/a" if value is None else f"{value:.3f}")
        lines.append(f"| {_CLASS_LABELS[cls]} | " + " | ".join(cells) + " |")
    if report.condition_records:
        lines += ["", "## Measured condition constants (medians)", ""]
        lines.append("| noise class | C1 (MC1) | C2 (MC2) | D (regularity) |")
        lines.append("|---|---|---|---|")
        by_class: dict = {}
        for rec in report.condition_records:
            by_class.setdefault(noise_class(rec.level), []).append(rec)
        for cls in _present_classes(report):
            recs = by_class.get(cls)
            if not recs:
                continue
            c1 = lower_median([r.c1 for r in recs])
            c2 = lower_median([r.c2 for r in recs])
            d = lower_median([r.d_reg for r in recs])
            lines.append(f"| {_CLASS_LABELS[cls]} | {c1:.4g} | {c2:.4g} | {d:.4g} |")
    if report.config.penalty and "qo-right" in report.config.rules:
        lines += ["", f"- clamp fraction of qo-right evaluations: "
                      f"{report.clamp_fraction:.3%}"]
    if report.notes:
        lines += ["", "## Notes", ""]
        lines += [f"- {note}" for note in report.notes]
    return "\n".join(lines) + "\n"


def _render_csv(report: ExperimentReport) -> str:
    buf = io.StringIO()
    buf.write(",".join(RECORD_FIELDS) + "\r\n")
    for r in report.records:
        buf.write(",".join([f"{r.level:.17g}", str(r.seed), r.rule,
                            f"{r.alpha_star:.17g}", str(int(r.interior)),
                            f"{r.J:.17g}", f"{r.selected_error:.17g}",
                            f"{r.min_error:.17g}"]) + "\r\n")
    return buf.getvalue()


def _scale(values, lo, hi, out_lo, out_hi):
    span = hi - lo
    if span <= 0:
        span = 1.0
    return out_lo + (np.asarray(values) - lo) / span * (out_hi - out_lo)


def _polyline(xs, ys, color, width=1.5):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    return (f'<polyline fill="none" stroke="{color}" '
            f'stroke-width="{width}" points="{pts}"/>')


def _render_svg(report: ExperimentReport) -> str:
    sample = report.curve_sample
    if sample is None:
        raise ParameterError("report carries no curve sample to plot")
    w, h = 960, 420
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
             f'viewBox="0 0 {w} {h}">',
             f'<rect width="{w}" height="{h}" fill="white"/>']

    # left panel: log-log L-curve with the rules' selected points
    x0, x1, y0, y1 = 60, 450, 370, 30
    lx, ly = sample.log_residual2, sample.log_solution2
    lo_x, hi_x = float(np.min(lx)), float(np.max(lx))
    lo_y, hi_y = float(np.min(ly)), float(np.max(ly))
    xs = _scale(lx, lo_x, hi_x, x0, x1)
    ys = _scale(ly, lo_y, hi_y, y0, y1)
    parts.append(f'<rect x="{x0}" y="{y1}" width="{x1 - x0}" height="{y0 - y1}" '
                 f'fill="none" stroke="#cccccc"/>')
    parts.append(_polyline(xs, ys, "#333333"))
    for i, (name, idx) in enumerate(zip(sample.rule_names, sample.selected_indices)):
        color = _PALETTE[i % len(_PALETTE)]
        parts.append(f'<circle cx="{xs[idx]:.2f}" cy="{ys[idx]:.2f}" r="5" '
                     f'fill="none" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{x1 - 150}" y="{y1 + 16 + 14 * i}" '
                     f'font-size="11" fill="{color}">{name}</text>')
    parts.append(f'<text x="{(x0 + x1) // 2 - 60}" y="{y0 + 30}" font-size="12">'
                 f'log10 squared residual norm</text>')
    parts.append(f'<text x="{x0 - 50}" y="{y1 - 10}" font-size="12">'
                 f'log10 squared solution norm</text>')

    # right panel: rule objectives, min-max normalized over the grid
    x0b, x1b = 530, 920
    la = np.log10(sample.alphas)
    lo_a, hi_a = float(np.min(la)), float(np.max(la))
    xb = _scale(la, lo_a, hi_a, x0b, x1b)
    parts.append(f'<rect x="{x0b}" y="{y1}" width="{x1b - x0b}" height="{y0 - y1}" '
                 f'fill="none" stroke="#cccccc"/>')
    for i, name in enumerate(sample.rule_names):
        vals = np.asarray(sample.rule_values[i], dtype=float)
        finite = np.isfinite(vals)
        if not np.any(finite):
            continue
        lo_v, hi_v = float(np.min(vals[finite])), float(np.max(vals[finite]))
        norm = _scale(np.where(finite, vals, lo_v), lo_v, hi_v, y0, y1)
        color = _PALETTE[i % len(_PALETTE)]
        parts.append(_polyline(xb[finite], norm[finite], color, width=1.2))
        idx = sample.selected_indices[i]
        parts.append(f'<circle cx="{xb[idx]:.2f}" cy="{norm[idx]:.2f}" r="4" '
                     f'fill="{color}"/>')
    parts.append(f'<text x="{(x0b + x1b) // 2 - 40}" y="{y0 + 30}" font-size="12">'
                 f'log10 alpha</text>')
    parts.append(f'<text x="{x0b - 20}" y="{y1 - 10}" font-size="12">'
                 f'rule objectives (min-max scaled), selected points marked</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
