import math
import random

import numpy as np
import pytest

from pedocds.pressure import (
    OffloadTarget,
    PressureError,
    PressureFrame,
    Recording,
    ZoneMask,
    anatomical_masks,
    compare,
    contact_area,
    format_recording,
    parse_recording,
    peak_pressure,
    pressure_time_integral,
    recording_contact_area,
)

from conftest import data_text


def mask_all(rows, cols, name="all"):
    return ZoneMask(name, frozenset((r, c) for r in range(rows) for c in range(cols)))


def rec_from(frames, cell_area=1.0):
    return Recording(frames=tuple(
        PressureFrame(t=t, grid=np.array(grid, dtype=float), cell_area_cm2=cell_area)
        for t, grid in frames
    ))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------

def test_parse_two_frame_csv():
    csv = "t,2x2,cell_area_cm2=0.25\n0.0,100,220,50,80\n0.1,90,180,60,70\n"
    rec = parse_recording(csv)
    assert len(rec.frames) == 2
    assert rec.shape == (2, 2)
    assert rec.cell_area_cm2 == 0.25
    assert rec.frames[0].grid[0, 1] == 220.0


def test_parse_rejects_non_monotone_time():
    csv = "t,1x1,cell_area_cm2=1\n0.1,5\n0.1,6\n"
    with pytest.raises(PressureError, match="non-monotone time"):
        parse_recording(csv)


def test_parse_rejects_negative_pressure():
    csv = "t,1x2,cell_area_cm2=1\n0.0,5,-3\n"
    with pytest.raises(PressureError, match="negative pressure"):
        parse_recording(csv)


def test_parse_rejects_ragged_rows():
    csv = "t,2x2,cell_area_cm2=1\n0.0,1,2,3\n"
    with pytest.raises(PressureError, match="ragged"):
        parse_recording(csv)


def test_parse_rejects_bad_header():
    with pytest.raises(PressureError, match="header"):
        parse_recording("time,2x2,area=1\n0,1,2,3,4\n")


def test_format_round_trip():
    csv = "t,2x2,cell_area_cm2=0.25\n0,100,220,50,80\n0.1,90,180,60,70\n"
    rec = parse_recording(csv)
    again = parse_recording(format_recording(rec))
    assert again.shape == rec.shape
    for a, b in zip(again.frames, rec.frames):
        assert a.t == b.t and np.array_equal(a.grid, b.grid)


# ---------------------------------------------------------------------------
# metrics (spec examples)
# ---------------------------------------------------------------------------

def test_peak_pressure_all_and_column():
    rec = rec_from([(0.0, [[100, 220], [50, 80]]), (0.1, [[90, 180], [60, 70]])])
    assert peak_pressure(rec, mask_all(2, 2)) == 220.0
    col0 = ZoneMask("col0", frozenset({(0, 0), (1, 0)}))
    assert peak_pressure(rec, col0) == 100.0


def test_peak_pressure_zero_frame():
    rec = rec_from([(0.0, [[0.0, 0.0], [0.0, 0.0]])])
    assert peak_pressure(rec, mask_all(2, 2)) == 0.0


def test_peak_pressure_empty_mask():
    rec = rec_from([(0.0, [[1.0]])])
    with pytest.raises(PressureError, match="empty mask"):
        peak_pressure(rec, ZoneMask("empty", frozenset()))


def test_pti_constant_integrand():
    rec = rec_from([(0.0, [[200.0]]), (0.2, [[200.0]])])
    assert pressure_time_integral(rec, mask_all(1, 1)) == pytest.approx(40.0)


def test_pti_hand_case_30():
    rec = rec_from([(0.0, [[200.0]]), (0.1, [[150.0]]), (0.2, [[100.0]])])
    assert pressure_time_integral(rec, mask_all(1, 1)) == pytest.approx(30.0, rel=1e-9)


def test_pti_zero_frames_integral():
    rec = rec_from([(0.0, [[0.0]]), (0.1, [[0.0]])])
    assert pressure_time_integral(rec, mask_all(1, 1)) == 0.0


def test_pti_needs_two_frames():
    rec = rec_from([(0.0, [[5.0]])])
    with pytest.raises(PressureError, match="two frames"):
        pressure_time_integral(rec, mask_all(1, 1))


def test_contact_area_examples():
    frame = PressureFrame(0.0, np.array([[100.0, 220.0], [50.0, 4.0]]), 0.25)
    assert contact_area(frame, 5.0) == pytest.approx(0.75)
    assert contact_area(frame, 1000.0) == 0.0
    allpos = PressureFrame(0.0, np.array([[1.0, 2.0], [3.0, 4.0]]), 0.25)
    assert contact_area(allpos, 0.0) == pytest.approx(4 * 0.25)


def test_contact_area_strictly_above_threshold():
    frame = PressureFrame(0.0, np.array([[5.0, 5.1]]), 1.0)
    assert contact_area(frame, 5.0) == 1.0


# ---------------------------------------------------------------------------
# anatomical masks
# ---------------------------------------------------------------------------

def rows_of(mask):
    return sorted({r for r, _ in mask.cells})


def test_masks_20_rows():
    masks = {m.name: m for m in anatomical_masks(20, 8)}
    assert rows_of(masks["heel"]) == list(range(0, 6))
    assert rows_of(masks["midfoot"]) == list(range(6, 12))
    assert rows_of(masks["forefoot"]) == list(range(12, 20))
    assert rows_of(masks["mth1"]) == list(range(12, 15))
    assert rows_of(masks["mth2_5"]) == list(range(12, 15))
    assert rows_of(masks["hallux"]) == list(range(16, 20))


def test_masks_10_rows():
    masks = {m.name: m for m in anatomical_masks(10, 4)}
    assert rows_of(masks["heel"]) == [0, 1, 2]


def test_masks_grid_too_small():
    with pytest.raises(PressureError, match="too small"):
        anatomical_masks(5, 4)


def test_coarse_masks_partition_and_subzones_disjoint():
    masks = {m.name: m for m in anatomical_masks(20, 8)}
    coarse = [masks["heel"], masks["midfoot"], masks["forefoot"]]
    union = set().union(*(m.cells for m in coarse))
    assert len(union) == sum(len(m.cells) for m in coarse) == 20 * 8
    sub = [masks["mth1"], masks["mth2_5"], masks["hallux"]]
    assert sum(len(m.cells) for m in sub) == len(set().union(*(m.cells for m in sub)))
    for m in sub:
        assert m.cells <= masks["forefoot"].cells


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def two_frame(grid_fn, scale2=0.5):
    g0 = grid_fn()
    g1 = [[v * scale2 for v in row] for row in g0]
    return rec_from([(0.0, g0), (0.1, g1)])


def test_compare_forefoot_reduction_35():
    baseline = parse_recording(data_text("pressure/baseline.csv"))
    intervention = parse_recording(data_text("pressure/intervention.csv"))
    report = compare(baseline, intervention,
                     target=OffloadTarget(ppp_max_kpa=None, reduction_min_pct=30.0))
    forefoot = report.zone("forefoot")
    assert forefoot.ppp_baseline_kpa == pytest.approx(300.0)
    assert forefoot.ppp_intervention_kpa == pytest.approx(195.0)
    assert forefoot.ppp_reduction_pct == pytest.approx(35.0, rel=1e-9)
    assert forefoot.met


def test_compare_identical_recordings_zero_reduction():
    rec = two_frame(lambda: [[10.0 * (r + 1)] * 4 for r in range(10)])
    report = compare(rec, rec, target=OffloadTarget(ppp_max_kpa=None,
                                                    reduction_min_pct=1.0))
    for zone in report.zones:
        assert zone.ppp_reduction_pct == 0.0
        assert not zone.met
    assert not report.all_met


def test_compare_zero_baseline_uses_absolute_target():
    base = rec_from([(0.0, [[0.0] * 4 for _ in range(10)]),
                     (0.1, [[0.0] * 4 for _ in range(10)])])
    inter = two_frame(lambda: [[50.0] * 4 for _ in range(10)])
    report = compare(base, inter, target=OffloadTarget(ppp_max_kpa=60.0,
                                                       reduction_min_pct=30.0))
    for zone in report.zones:
        assert zone.ppp_reduction_pct is None
        assert zone.to_json_dict()["ppp_reduction_pct"] == "n/a"
        assert zone.met  # 50 <= 60
    report2 = compare(base, inter, target=OffloadTarget(ppp_max_kpa=40.0,
                                                        reduction_min_pct=30.0))
    assert not report2.all_met


def test_compare_geometry_mismatch():
    a = rec_from([(0.0, [[1.0]]), (0.1, [[1.0]])])
    b = rec_from([(0.0, [[1.0, 2.0]]), (0.1, [[1.0, 2.0]])])
    with pytest.raises(PressureError, match="mismatch"):
        compare(a, b, masks=[mask_all(1, 1)])


def test_reduction_sign_antisymmetry():
    base = two_frame(lambda: [[100.0 + r] * 4 for r in range(10)])
    inter = two_frame(lambda: [[80.0 + r] * 4 for r in range(10)])
    fwd = compare(base, inter)
    rev = compare(inter, base)
    for zf, zr in zip(fwd.zones, rev.zones):
        assert math.copysign(1, zf.ppp_reduction_pct) == -math.copysign(1, zr.ppp_reduction_pct)


# ---------------------------------------------------------------------------
# invariants vs brute force
# ---------------------------------------------------------------------------

def brute_ppp(rec, mask):
    best = 0.0
    for frame in rec.frames:
        for (r, c) in mask.cells:
            best = max(best, float(frame.grid[r][c]))
    return best


def brute_pti(rec, mask):
    peaks = []
    for frame in rec.frames:
        peaks.append(max(float(frame.grid[r][c]) for (r, c) in mask.cells))
    total = 0.0
    for i in range(len(peaks) - 1):
        dt = rec.frames[i + 1].t - rec.frames[i].t
        total += 0.5 * (peaks[i] + peaks[i + 1]) * dt
    return total


def brute_area(frame, threshold):
    count = 0
    rows, cols = frame.grid.shape
    for r in range(rows):
        for c in range(cols):
            if float(frame.grid[r][c]) > threshold:
                count += 1
    return count * frame.cell_area_cm2


def random_recording(rng, rows, cols, n_frames):
    frames = []
    t = 0.0
    for _ in range(n_frames):
        grid = [[rng.uniform(0, 400) for _ in range(cols)] for _ in range(rows)]
        frames.append((t, grid))
        t += rng.uniform(0.01, 0.2)
    return rec_from(frames, cell_area=rng.choice([0.25, 0.5, 1.0]))


def test_metrics_match_brute_force_on_random_grids():
    rng = random.Random(7)
    for _ in range(100):
        rows, cols = rng.randint(2, 6), rng.randint(2, 6)
        rec = random_recording(rng, rows, cols, rng.randint(2, 5))
        cells = [(r, c) for r in range(rows) for c in range(cols)]
        picked = rng.sample(cells, rng.randint(1, len(cells)))
        mask = ZoneMask("m", frozenset(picked))
        assert peak_pressure(rec, mask) == pytest.approx(brute_ppp(rec, mask), rel=1e-9)
        assert pressure_time_integral(rec, mask) == pytest.approx(
            brute_pti(rec, mask), rel=1e-9)
        threshold = rng.uniform(0, 300)
        frame = rec.frames[0]
        assert contact_area(frame, threshold) == pytest.approx(
            brute_area(frame, threshold), rel=1e-9)


def test_ppp_union_of_disjoint_masks():
    rng = random.Random(11)
    rec = random_recording(rng, 5, 5, 3)
    a = ZoneMask("a", frozenset({(0, 0), (1, 1), (2, 2)}))
    b = ZoneMask("b", frozenset({(3, 3), (4, 4), (0, 4)}))
    union = ZoneMask("u", a.cells | b.cells)
    assert peak_pressure(rec, union) == max(peak_pressure(rec, a), peak_pressure(rec, b))


def test_pti_additive_over_time_split():
    rng = random.Random(13)
    rec = random_recording(rng, 3, 3, 5)
    mask = mask_all(3, 3)
    mid = 2
    first = Recording(frames=rec.frames[: mid + 1])
    second = Recording(frames=rec.frames[mid:])
    total = pressure_time_integral(rec, mask)
    assert total == pytest.approx(
        pressure_time_integral(first, mask) + pressure_time_integral(second, mask),
        rel=1e-9)


def test_contact_area_nonincreasing_in_threshold():
    rng = random.Random(17)
    rec = random_recording(rng, 4, 4, 2)
    frame = rec.frames[0]
    thresholds = sorted(rng.uniform(0, 400) for _ in range(10))
    areas = [contact_area(frame, th) for th in thresholds]
    assert all(a >= b for a, b in zip(areas, areas[1:]))


def test_recording_contact_area_is_max_over_frames():
    rec = rec_from([(0.0, [[10.0, 0.0]]), (0.1, [[10.0, 10.0]])])
    assert recording_contact_area(rec, mask_all(1, 2), 5.0) == 2.0
