"""Plantar pressure analytics: PPP, PTI, contact area and offloading reports.

Recordings are pre-segmented pressure grids over time (kPa, seconds,
cm^2).  The pressure-time integral is the trapezoidal integral of the
masked per-frame peak.  All metrics are pure functions over immutable
recordings.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np


class PressureError(ValueError):
    """Malformed recording data or infeasible metric request."""


@dataclass(frozen=True)
class PressureFrame:
    t: float
    grid: np.ndarray  # rows x cols, kPa
    cell_area_cm2: float

    def __post_init__(self) -> None:
        grid = np.asarray(self.grid, dtype=float)
        grid.setflags(write=False)
        object.__setattr__(self, "grid", grid)
        if grid.ndim != 2:
            raise PressureError("pressure grid must be two-dimensional")
        if np.any(grid < 0):
            raise PressureError("negative pressure")
        if self.cell_area_cm2 <= 0:
            raise PressureError("cell area must be positive")


@dataclass(frozen=True)
class Recording:
    frames: tuple[PressureFrame, ...]
    side: str = "left"
    condition: str = "in_shoe"
    label: str = ""

    def __post_init__(self) -> None:
        if not self.frames:
            raise PressureError("recording needs at least one frame")
        if self.side not in ("left", "right"):
            raise PressureError(f"unknown side {self.side!r}")
        if self.condition not in ("barefoot_static", "barefoot_dynamic", "in_shoe"):
            raise PressureError(f"unknown condition {self.condition!r}")
        shape = self.frames[0].grid.shape
        area = self.frames[0].cell_area_cm2
        last_t = -math.inf
        for f in self.frames:
            if f.grid.shape != shape or f.cell_area_cm2 != area:
                raise PressureError("grid geometry must be constant within a recording")
            if f.t <= last_t:
                raise PressureError("non-monotone time")
            last_t = f.t

    @property
    def shape(self) -> tuple[int, int]:
        return self.frames[0].grid.shape

    @property
    def cell_area_cm2(self) -> float:
        return self.frames[0].cell_area_cm2


@dataclass(frozen=True)
class ZoneMask:
    name: str
    cells: frozenset[tuple[int, int]]

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", frozenset((int(r), int(c)) for r, c in self.cells))

    def indices(self) -> tuple[np.ndarray, np.ndarray]:
        rows = np.fromiter((r for r, _ in sorted(self.cells)), dtype=int, count=len(self.cells))
        cols = np.fromiter((c for _, c in sorted(self.cells)), dtype=int, count=len(self.cells))
        return rows, cols

    def check_bounds(self, shape: tuple[int, int]) -> None:
        for r, c in self.cells:
            if not (0 <= r < shape[0] and 0 <= c < shape[1]):
                raise PressureError(f"mask {self.name!r} cell {(r, c)} outside grid {shape}")


# ---------------------------------------------------------------------------
# CSV ingestion
# ---------------------------------------------------------------------------

def parse_recording(csv_text: str, cell_area_cm2: float | None = None,
                    side: str = "left", condition: str = "in_shoe",
                    label: str = "") -> Recording:
    """Parse the delimited recording format.

    Header: ``t,<rows>x<cols>,cell_area_cm2=<area>``; each following line is
    ``t_k,v11,v12,...`` row-major in kPa.
    """
    lines = [ln.strip() for ln in csv_text.strip().splitlines() if ln.strip()]
    if not lines:
        raise PressureError("empty recording")
    header = [p.strip() for p in lines[0].split(",")]
    if len(header) != 3 or header[0] != "t" or "x" not in header[1] \
            or not header[2].startswith("cell_area_cm2="):
        raise PressureError(f"malformed header {lines[0]!r}")
    try:
        rows, cols = (int(p) for p in header[1].split("x"))
        header_area = float(header[2].split("=", 1)[1])
    except ValueError:
        raise PressureError(f"malformed header {lines[0]!r}") from None
    if rows <= 0 or cols <= 0:
        raise PressureError("grid dimensions must be positive")
    if cell_area_cm2 is not None and not math.isclose(cell_area_cm2, header_area):
        raise PressureError(
            f"cell area {cell_area_cm2} disagrees with header {header_area}"
        )
    area = header_area

    frames = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 1 + rows * cols:
            raise PressureError(
                f"ragged row: expected {1 + rows * cols} values, found {len(parts)}"
            )
        try:
            t = float(parts[0])
            values = np.array([float(p) for p in parts[1:]], dtype=float)
        except ValueError as exc:
            raise PressureError(f"non-numeric value: {exc}") from None
        if np.any(values < 0):
            raise PressureError("negative pressure")
        frames.append(PressureFrame(t=t, grid=values.reshape(rows, cols), cell_area_cm2=area))
    if not frames:
        raise PressureError("recording has no frames")
    return Recording(frames=tuple(frames), side=side, condition=condition, label=label)


def format_recording(rec: Recording) -> str:
    rows, cols = rec.shape
    out = [f"t,{rows}x{cols},cell_area_cm2={rec.cell_area_cm2:g}"]
    for f in rec.frames:
        out.append(",".join([f"{f.t:g}"] + [f"{v:g}" for v in f.grid.ravel()]))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------

def _masked_peak(frame: PressureFrame, mask: ZoneMask) -> float:
    rows, cols = mask.indices()
    return float(frame.grid[rows, cols].max())


def peak_pressure(rec: Recording, mask: ZoneMask) -> float:
    """Peak plantar pressure: max over all frames and masked cells, kPa."""
    if not mask.cells:
        raise PressureError("empty mask")
    mask.check_bounds(rec.shape)
    return max(_masked_peak(f, mask) for f in rec.frames)


def pressure_time_integral(rec: Recording, mask: ZoneMask) -> float:
    """Trapezoidal integral over time of the masked per-frame peak, kPa*s."""
    if not mask.cells:
        raise PressureError("empty mask")
    if len(rec.frames) < 2:
        raise PressureError("pressure-time integral needs at least two frames")
    mask.check_bounds(rec.shape)
    peaks = [_masked_peak(f, mask) for f in rec.frames]
    times = [f.t for f in rec.frames]
    total = 0.0
    for i in range(len(peaks) - 1):
        total += 0.5 * (peaks[i] + peaks[i + 1]) * (times[i + 1] - times[i])
    return total


def contact_area(frame: PressureFrame, threshold_kpa: float = 5.0,
                 mask: ZoneMask | None = None) -> float:
    """Loaded area: count of cells strictly above threshold times cell area."""
    if mask is None:
        count = int(np.count_nonzero(frame.grid > threshold_kpa))
    else:
        rows, cols = mask.indices()
        count = int(np.count_nonzero(frame.grid[rows, cols] > threshold_kpa))
    return count * frame.cell_area_cm2


def recording_contact_area(rec: Recording, mask: ZoneMask,
                           threshold_kpa: float = 5.0) -> float:
    """Peak per-frame contact area within the mask over the recording."""
    mask.check_bounds(rec.shape)
    return max(contact_area(f, threshold_kpa, mask) for f in rec.frames)


# ---------------------------------------------------------------------------
# Anatomical zoning
# ---------------------------------------------------------------------------

def anatomical_masks(rows: int, cols: int, heel_fraction: float = 0.30,
                     midfoot_fraction: float = 0.60,
                     mth_band_fraction: tuple[float, float] = (0.60, 0.75)) -> list[ZoneMask]:
    """Deterministic zoning of a heel-at-row-0 grid.

    Coarse zones (heel/midfoot/forefoot) partition the rows; metatarsal and
    hallux sub-zones live inside the forefoot and are pairwise disjoint.
    Row ranges are half-open with floor rounding; column 0 is the medial
    border.
    """
    if rows < 10:
        raise PressureError(f"grid too small for anatomical zoning: {rows} rows")
    heel_end = math.floor(rows * heel_fraction)
    mid_end = math.floor(rows * midfoot_fraction)
    mth_start = math.floor(rows * mth_band_fraction[0])
    mth_end = math.floor(rows * mth_band_fraction[1])

    def block(r0: int, r1: int, c0: int = 0, c1: int | None = None) -> frozenset:
        c1 = cols if c1 is None else c1
        return frozenset((r, c) for r in range(r0, r1) for c in range(c0, c1))

    forefoot_start = mid_end
    hallux_start = forefoot_start + (rows - forefoot_start) // 2
    medial_cols = cols // 2
    mth1_cols = max(1, cols // 3)

    return [
        ZoneMask("heel", block(0, heel_end)),
        ZoneMask("midfoot", block(heel_end, mid_end)),
        ZoneMask("forefoot", block(mid_end, rows)),
        ZoneMask("mth1", block(mth_start, mth_end, 0, mth1_cols)),
        ZoneMask("mth2_5", block(mth_start, mth_end, mth1_cols, cols)),
        ZoneMask("hallux", block(hallux_start, rows, 0, medial_cols)),
    ]


# ---------------------------------------------------------------------------
# Offloading comparison
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OffloadTarget:
    """Goal semantics: met when any configured criterion holds."""

    ppp_max_kpa: Optional[float] = 200.0
    reduction_min_pct: Optional[float] = 30.0

    def __post_init__(self) -> None:
        if self.ppp_max_kpa is None and self.reduction_min_pct is None:
            raise PressureError("target needs ppp_max_kpa or reduction_min_pct")

    def met(self, ppp_intervention: float, reduction_pct: Optional[float]) -> bool:
        if self.ppp_max_kpa is not None and ppp_intervention <= self.ppp_max_kpa:
            return True
        if self.reduction_min_pct is not None and reduction_pct is not None \
                and reduction_pct >= self.reduction_min_pct:
            return True
        return False

    def to_json_dict(self) -> dict:
        return {"ppp_max_kpa": self.ppp_max_kpa, "reduction_min_pct": self.reduction_min_pct}


@dataclass(frozen=True)
class ZoneComparison:
    zone: str
    ppp_baseline_kpa: float
    ppp_intervention_kpa: float
    ppp_reduction_pct: Optional[float]  # None when baseline is zero
    pti_baseline_kpas: float
    pti_intervention_kpas: float
    pti_reduction_pct: Optional[float]
    contact_area_baseline_cm2: float
    contact_area_intervention_cm2: float
    met: bool

    def to_json_dict(self) -> dict:
        def pct(v):
            return "n/a" if v is None else v
        return {
            "zone": self.zone,
            "ppp_baseline_kpa": self.ppp_baseline_kpa,
            "ppp_intervention_kpa": self.ppp_intervention_kpa,
            "ppp_reduction_pct": pct(self.ppp_reduction_pct),
            "pti_baseline_kpas": self.pti_baseline_kpas,
            "pti_intervention_kpas": self.pti_intervention_kpas,
            "pti_reduction_pct": pct(self.pti_reduction_pct),
            "contact_area_baseline_cm2": self.contact_area_baseline_cm2,
            "contact_area_intervention_cm2": self.contact_area_intervention_cm2,
            "met": self.met,
        }


@dataclass(frozen=True)
class OffloadReport:
    zones: tuple[ZoneComparison, ...]
    target: OffloadTarget

    @property
    def all_met(self) -> bool:
        return all(z.met for z in self.zones)

    def zone(self, name: str) -> ZoneComparison:
        for z in self.zones:
            if z.zone == name:
                return z
        raise KeyError(name)

    def to_json_dict(self) -> dict:
        return {
            "target": self.target.to_json_dict(),
            "all_met": self.all_met,
            "zones": [z.to_json_dict() for z in self.zones],
        }


def _reduction_pct(baseline: float, intervention: float) -> Optional[float]:
    if baseline <= 0:
        return None
    return 100.0 * (baseline - intervention) / baseline


def compare(baseline: Recording, intervention: Recording,
            masks: Sequence[ZoneMask] | None = None,
            target: OffloadTarget | None = None,
            contact_threshold_kpa: float = 5.0) -> OffloadReport:
    """Baseline-vs-intervention offloading report per zone."""
    target = target or OffloadTarget()
    if baseline.shape != intervention.shape \
            or baseline.cell_area_cm2 != intervention.cell_area_cm2:
        raise PressureError("recordings have mismatched grid geometry")
    if masks is None:
        masks = anatomical_masks(*baseline.shape)
    zones = []
    for mask in masks:
        ppp_b = peak_pressure(baseline, mask)
        ppp_i = peak_pressure(intervention, mask)
        red = _reduction_pct(ppp_b, ppp_i)
        pti_b = pressure_time_integral(baseline, mask)
        pti_i = pressure_time_integral(intervention, mask)
        zones.append(ZoneComparison(
            zone=mask.name,
            ppp_baseline_kpa=ppp_b,
            ppp_intervention_kpa=ppp_i,
            ppp_reduction_pct=red,
            pti_baseline_kpas=pti_b,
            pti_intervention_kpas=pti_i,
            pti_reduction_pct=_reduction_pct(pti_b, pti_i),
            contact_area_baseline_cm2=recording_contact_area(
                baseline, mask, contact_threshold_kpa),
            contact_area_intervention_cm2=recording_contact_area(
                intervention, mask, contact_threshold_kpa),
            met=target.met(ppp_i, red),
        ))
    return OffloadReport(zones=tuple(zones), target=target)
