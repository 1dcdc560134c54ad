"""Figure presets: plot-data CSV plus a dependency-free SVG rendering.

Colors: population black, naive blue, corrected red; 95% bands dashed.
"""

import csv
from pathlib import Path

import numpy as np

from ..errors import UnknownFigure
from .config import DEFAULT_SEED, FIGURES, SCENARIOS
from .runner import format_float, run_replicates, summarize

COLORS = {"population": "black", "naive": "blue", "corrected": "red"}
PANEL_W, PANEL_H, MARGIN = 420, 320, 50
PLOT_FIELDS = ("panel", "series", "mu_p", "mean", "q025", "q975")


def figure_scenarios(fig_id, replicates=None, base_seed=DEFAULT_SEED, parallelism=1):
    if fig_id not in FIGURES:
        raise UnknownFigure(fig_id)
    configs = []
    for name in FIGURES[fig_id]:
        cfg = SCENARIOS[name].with_(base_seed=base_seed, parallelism=parallelism)
        if replicates is not None:
            cfg = cfg.with_(replicates=replicates)
        configs.append((name, cfg))
    return configs


def plot_rows(fig_id, summaries):
    """Long-format rows ``(panel, series, mu_p, mean, q025, q975)``.

    Returns figures track ``mu' w``; frontier figures track the risk.
    """
    prefix = "returns" if fig_id.startswith("returns") else "f"
    rows = []
    for panel, summary in summaries:
        for mu_p, stats in summary.items():
            if prefix == "returns":
                rows.append((panel, "population", mu_p, mu_p, mu_p, mu_p))
            else:
                rows.append((panel, "population", mu_p) + stats["f_theo"])
            rows.append((panel, "naive", mu_p) + stats[f"{prefix}_naive"])
            rows.append((panel, "corrected", mu_p) + stats[f"{prefix}_corrected"])
    return rows


def write_plot_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PLOT_FIELDS)
        for panel, series, *nums in rows:
            writer.writerow([panel, series] + [format_float(x) for x in nums])


def _scale(lo, hi, a, b):
    span = hi - lo if hi > lo else 1.0
    return lambda v: a + (v - lo) / span * (b - a)


def _polyline(xs, ys, color, dashed=False):
    pts = " ".join(f"{x:.2f},{y:.2f}" for x, y in zip(xs, ys))
    dash = ' stroke-dasharray="5,4"' if dashed else ""
    return f'<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{pts}"/>'


def _panel_svg(title, series, x0, y0, xlabel, ylabel, frontier):
    """One panel; ``series`` maps name -> (mu_p, mean, lo, hi) arrays."""
    parts = []
    if frontier:
        xs_all = np.concatenate([np.concatenate([s[1], s[2], s[3]]) for s in series.values()])
        ys_all = np.concatenate([s[0] for s in series.values()])
    else:
        xs_all = np.concatenate([s[0] for s in series.values()])
        ys_all = np.concatenate([np.concatenate([s[1], s[2], s[3]]) for s in series.values()])
    fx = _scale(xs_all.min(), xs_all.max(), x0 + MARGIN, x0 + PANEL_W - 10)
    fy = _scale(ys_all.min(), ys_all.max(), y0 + PANEL_H - MARGIN, y0 + 25)
    left, right = x0 + MARGIN, x0 + PANEL_W - 10
    top, bottom = y0 + 25, y0 + PANEL_H - MARGIN
    parts.append(f'<rect x="{left}" y="{top}" width="{right - left}" height="{bottom - top}" fill="none" stroke="#888"/>')
    parts.append(f'<text x="{x0 + PANEL_W / 2:.1f}" y="{y0 + 16}" text-anchor="middle" font-size="13">{title}</text>')
    parts.append(f'<text x="{x0 + PANEL_W / 2:.1f}" y="{y0 + PANEL_H - 12}" text-anchor="middle" font-size="11">{xlabel}</text>')
    parts.append(
        f'<text x="{x0 + 14}" y="{y0 + PANEL_H / 2:.1f}" text-anchor="middle" font-size="11" '
        f'transform="rotate(-90 {x0 + 14} {y0 + PANEL_H / 2:.1f})">{ylabel}</text>'
    )
    for tick in np.linspace(xs_all.min(), xs_all.max(), 5):
        parts.append(f'<text x="{fx(tick):.1f}" y="{bottom + 14}" text-anchor="middle" font-size="9">{tick:.3g}</text>')
    for tick in np.linspace(ys_all.min(), ys_all.max(), 5):
        parts.append(f'<text x="{left - 4}" y="{fy(tick) + 3:.1f}" text-anchor="end" font-size="9">{tick:.3g}</text>')
    for name, (mu_p, mean, lo, hi) in series.items():
        color = COLORS[name]
        if frontier:
            parts.append(_polyline(map(fx, mean), map(fy, mu_p), color))
            if name != "population":
                parts.append(_polyline(map(fx, lo), map(fy, mu_p), color, dashed=True))
                parts.append(_polyline(map(fx, hi), map(fy, mu_p), color, dashed=True))
        else:
            parts.append(_polyline(map(fx, mu_p), map(fy, mean), color))
            if name != "population":
                parts.append(_polyline(map(fx, mu_p), map(fy, lo), color, dashed=True))
                parts.append(_polyline(map(fx, mu_p), map(fy, hi), color, dashed=True))
    return parts


def render_svg(fig_id, rows, titles):
    frontier = not fig_id.startswith("returns")
    panels = list(dict.fromkeys(r[0] for r in rows))
    ncol = 2
    nrow = (len(panels) + 1) // 2
    width, height = ncol * PANEL_W, nrow * PANEL_H
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]
    if frontier:
        xlabel, ylabel = "risk (w' Sigma w)", "target return"
    else:
        xlabel, ylabel = "target return", "realized mu' w"
    for i, panel in enumerate(panels):
        series = {}
        for name in ("population", "naive", "corrected"):
            sel = np.array([r[2:] for r in rows if r[0] == panel and r[1] == name], dtype=float)
            series[name] = (sel[:, 0], sel[:, 1], sel[:, 2], sel[:, 3])
        x0, y0 = (i % ncol) * PANEL_W, (i // ncol) * PANEL_H
        parts.extend(_panel_svg(titles.get(panel, panel), series, x0, y0, xlabel, ylabel, frontier))
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def reproduce_figure(fig_id, out_dir, replicates=None, base_seed=DEFAULT_SEED, parallelism=1):
    """Run the preset scenarios of ``fig_id`` and write ``<fig_id>.csv`` and ``.svg``."""
    configs = figure_scenarios(fig_id, replicates, base_seed, parallelism)
    summaries = [(name, summarize(run_replicates(cfg))) for name, cfg in configs]
    rows = plot_rows(fig_id, summaries)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path, svg_path = out / f"{fig_id}.csv", out / f"{fig_id}.svg"
    write_plot_csv(rows, csv_path)
    titles = {name: cfg.label for name, cfg in configs}
    svg_path.write_text(render_svg(fig_id, rows, titles))
    return csv_path, svg_path
