"""Report rendering: delimited tables plus matplotlib figures on disk.

Used by the CLI report paths (``pressure compare --report-dir``,
``eval --report-dir``).  Figures are rendered headless (Agg).
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .pressure import OffloadReport, Recording  # noqa: E402
from .recommender import EvalReport  # noqa: E402

HEATMAP_SCALE_KPA = 300.0  # fixed display scale, configurable per call


def _peak_grid(rec: Recording) -> np.ndarray:
    return np.max(np.stack([f.grid for f in rec.frames]), axis=0)


def _save_heatmap(rec: Recording, title: str, path: Path, vmax: float) -> None:
    fig, ax = plt.subplots(figsize=(4, 6))
    im = ax.imshow(_peak_grid(rec), cmap="inferno", vmin=0.0, vmax=vmax, origin="lower")
    ax.set_title(title)
    ax.set_xlabel("medial -> lateral")
    ax.set_ylabel("heel -> toes")
    fig.colorbar(im, ax=ax, label="peak pressure (kPa)")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_offload_report(report: OffloadReport, baseline: Recording,
                        intervention: Recording, outdir: str | Path,
                        scale_max_kpa: float = HEATMAP_SCALE_KPA) -> list[Path]:
    """Write the zone table (CSV) and the comparison figures; returns paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    table = outdir / "offload_report.csv"
    with table.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([
            "zone", "ppp_baseline_kpa", "ppp_intervention_kpa", "ppp_reduction_pct",
            "pti_baseline_kpas", "pti_intervention_kpas", "pti_reduction_pct",
            "contact_area_baseline_cm2", "contact_area_intervention_cm2", "met",
        ])
        for z in report.zones:
            d = z.to_json_dict()
            writer.writerow([
                d["zone"], d["ppp_baseline_kpa"], d["ppp_intervention_kpa"],
                d["ppp_reduction_pct"], d["pti_baseline_kpas"], d["pti_intervention_kpas"],
                d["pti_reduction_pct"], d["contact_area_baseline_cm2"],
                d["contact_area_intervention_cm2"], d["met"],
            ])
    written.append(table)

    for rec, name in ((baseline, "baseline"), (intervention, "intervention")):
        path = outdir / f"heatmap_{name}.png"
        _save_heatmap(rec, f"{name} peak pressure", path, scale_max_kpa)
        written.append(path)

    fig, ax = plt.subplots(figsize=(6, 4))
    zones = [z.zone for z in report.zones]
    reductions = [z.ppp_reduction_pct if z.ppp_reduction_pct is not None else 0.0
                  for z in report.zones]
    colors = ["tab:green" if z.met else "tab:red" for z in report.zones]
    ax.bar(zones, reductions, color=colors)
    if report.target.reduction_min_pct is not None:
        ax.axhline(report.target.reduction_min_pct, ls="--", c="k", lw=1,
                   label=f"target {report.target.reduction_min_pct:g}%")
        ax.legend()
    ax.set_ylabel("peak pressure reduction (%)")
    ax.set_title("offloading by zone (green = goal met)")
    ax.tick_params(axis="x", rotation=30)
    fig.tight_layout()
    bars = outdir / "reduction_bars.png"
    fig.savefig(bars, dpi=120)
    plt.close(fig)
    written.append(bars)
    return written


def save_eval_report(report: EvalReport, outdir: str | Path) -> list[Path]:
    """Write per-feature accuracy as CSV and a bar figure; returns paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    written = []

    table = outdir / "model_accuracy.csv"
    with table.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "accuracy"])
        for feature, acc in sorted(report.per_feature.items()):
            writer.writerow([feature, "n/a" if acc is None else acc])
        writer.writerow(["macro_average", report.macro_average])
    written.append(table)

    scored = {f: a for f, a in sorted(report.per_feature.items()) if a is not None}
    fig, ax = plt.subplots(figsize=(10, 4))
    ax.bar(list(scored), list(scored.values()), color="tab:blue")
    ax.axhline(report.macro_average, ls="--", c="k", lw=1,
               label=f"macro average {report.macro_average:.2f}")
    ax.set_ylim(0, 1.05)
    ax.set_ylabel(f"accuracy ({report.protocol})")
    ax.tick_params(axis="x", rotation=90, labelsize=7)
    ax.legend()
    fig.tight_layout()
    figure = outdir / "model_accuracy.png"
    fig.savefig(figure, dpi=120)
    plt.close(fig)
    written.append(figure)
    return written
