"""Report figures rendered to PNG with the non-interactive Agg backend."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}
BAND_COLORS = {"infinite": "#4c9a6a", "finite": "#d9a43b", "redesign": "#c0504d"}
SCALE = {"mass_kg": (1e3, "mass [g]"), "max_vm_stress_pa": (1e-6, "max von Mises [MPa]"),
         "max_disp_m": (1e3, "max displacement [mm]")}


def _axis(metric):
    return SCALE.get(metric, (1.0, metric))


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_pareto(records, front, objectives, path) -> Path:
    (sx, lx), (sy, ly) = _axis(objectives[0][1]), _axis(objectives[1][1])
    mx, my = objectives[0][1], objectives[1][1]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.4))
        xs = [r[mx] * sx for r in records if r.get(mx) is not None and r.get(my) is not None]
        ys = [r[my] * sy for r in records if r.get(mx) is not None and r.get(my) is not None]
        ax.scatter(xs, ys, s=12, c="0.6", label="cases")
        fx = [p.objectives[0] * sx for p in front]
        fy = [p.objectives[1] * sy for p in front]
        ax.plot(fx, fy, "o-", ms=4, color="#1f5fa8", label=f"front ({len(front)})")
        ax.set_xlabel(lx)
        ax.set_ylabel(ly)
        ax.legend(frameon=False)
        return _save(fig, path)


def plot_correlations(correlations, path) -> Path:
    params = sorted({c.parameter for c in correlations})
    metrics = sorted({c.metric for c in correlations})
    grid = np.full((len(params), len(metrics)), np.nan)
    for c in correlations:
        if c.r is not None:
            grid[params.index(c.parameter), metrics.index(c.metric)] = c.r
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(1.2 + 1.1 * len(metrics), 0.8 + 0.45 * len(params)))
        im = ax.imshow(np.ma.masked_invalid(grid), cmap="RdBu_r", vmin=-1, vmax=1, aspect="auto")
        ax.set_xticks(range(len(metrics)), [_axis(m)[1] for m in metrics], rotation=30, ha="right")
        ax.set_yticks(range(len(params)), params)
        for i in range(len(params)):
            for j in range(len(metrics)):
                ax.text(j, i, "n/a" if np.isnan(grid[i, j]) else f"{grid[i, j]:.2f}", ha="center", va="center",
                        fontsize=7)
        fig.colorbar(im, ax=ax, label="Pearson r")
        return _save(fig, path)


def plot_census(census, path) -> Path:
    bands = list(census["counts"])
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(3.6, 2.8))
        bars = ax.bar(bands, [census["percent"][b] for b in bands], color=[BAND_COLORS.get(b, "0.5") for b in bands])
        for bar, b in zip(bars, bands):
            ax.annotate(str(census["counts"][b]), (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                        ha="center", va="bottom", fontsize=8)
        ax.set_ylabel("share of cases [%]")
        ax.set_ylim(0, 105)
        return _save(fig, path)


def plot_spectrum(records, path, steps=None) -> Path:
    from .solver import LOAD_SPECTRUM

    steps = steps or LOAD_SPECTRUM
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3.0))
        x = np.arange(1, len(steps) + 1)
        for r in records:
            per = r.get("per_step_max_vm_pa")
            if per:
                ax.plot(x, np.asarray(per) * 1e-6, color="#1f5fa8", alpha=0.35, lw=0.8)
        ax.set_xticks(x, [s.name.replace("_", " ") for s in steps], rotation=35, ha="right")
        ax.set_ylabel("max von Mises [MPa]")
        return _save(fig, path)


def render_report(report, records, out_dir) -> dict[str, Path]:
    out_dir = Path(out_dir)
    paths = {}
    if len(report.front) and len(report.objectives) >= 2:
        paths["pareto"] = plot_pareto(records, report.front, report.objectives, out_dir / "pareto_front.png")
    if report.correlations:
        paths["correlations"] = plot_correlations(report.correlations, out_dir / "correlations.png")
    if report.census["total"]:
        paths["census"] = plot_census(report.census, out_dir / "fatigue_bands.png")
    if any(r.get("per_step_max_vm_pa") for r in records):
        paths["spectrum"] = plot_spectrum(records, out_dir / "load_spectrum.png")
    return paths
