import math

import numpy as np
import pytest

import oracles
from topohough.cubical_ph import Topology, superlevel_pd
from topohough.detect import (
    Detection, PreparedImage, baseline_candidates, detect_baseline, detect_ph, prepare, tune_parameter,
    tune_prepared,
)
from topohough.experiments import NoiseExpConfig, two_line_scene
from topohough.geometry import LineSpec, PixelSet, quantize, sample_line
from topohough.hough import Accumulator, HoughGrid, accumulate, cell_to_line, line_params_of, line_to_cell

SMALL = HoughGrid(40, 30, 20.0)


def _acc(votes, grid=SMALL):
    return Accumulator(grid, np.asarray(votes, dtype=np.int64), 0)


def _two_peak_scene():
    """Field whose diagram has (230, -inf), (210, 40) and noise with persistence <= 43.

    Two line peaks sit on a floor of 5 joined by a corridor at 40; a 215 noise
    peak hangs off the 230 peak through a 180 saddle and small bumps are
    scattered elsewhere.
    """
    v = np.full(SMALL.shape, 5)
    v[10, 5], v[30, 20] = 230, 210
    v[10, 6:21] = 40
    v[11:31, 20] = 40
    v[30, 20] = 210
    v[11, 5], v[12, 5] = 180, 215          # noise cluster next to the strong line
    v[3, 25], v[35, 2], v[20, 12] = 48, 30, 20
    return _acc(v)


def test_scene_diagram():
    pd = superlevel_pd(_two_peak_scene().votes)
    got = sorted(((p.birth, p.death) for p in pd), key=lambda t: -(t[0] - t[1]))
    assert got[:2] == [(230, -math.inf), (210, 40.0)]
    assert all(b - d <= 43 for b, d in got[2:])
    assert (215, 180.0) in got


def test_ph_keeps_two_lines_at_nu_100():
    dets = detect_ph(_two_peak_scene(), 100)
    assert [d.source_cell for d in dets] == [(10, 5), (30, 20)]
    assert dets[0].score == math.inf and dets[1].score == 170


def test_nu_above_every_finite_persistence():
    dets = detect_ph(_two_peak_scene(), 10_000)
    assert len(dets) == 1 and dets[0].source_cell == (10, 5)


def test_baseline_vertical_cut():
    acc = _two_peak_scene()
    cells = {d.source_cell for d in detect_baseline(acc, 200)}
    # the cut at 200 admits the 215 noise peak together with both lines
    assert (12, 5) in cells and {(10, 5), (30, 20)} <= cells
    # raising the cut above the noise to get rid of it loses the 210 line
    cells = {d.source_cell for d in detect_baseline(acc, 216)}
    assert (12, 5) not in cells and (30, 20) not in cells
    # persistence separates what the vote count cannot
    assert (12, 5) not in {d.source_cell for d in detect_ph(acc, 100)}


def test_baseline_at_global_max():
    acc = accumulate(quantize(sample_line(LineSpec(0.7, 30, 80), rng=1)))
    dets = detect_baseline(acc, acc.votes.max())
    assert len(dets) >= 1
    assert acc.votes[dets[0].source_cell] == acc.votes.max()


def test_baseline_relative_threshold():
    acc = _two_peak_scene()
    assert detect_baseline(acc, 0.95, relative=True) == detect_baseline(acc, 0.95 * 230)


def test_single_pixel_baseline():
    acc = accumulate(PixelSet([(37, 101)]))
    v = acc.votes
    assert np.all(v.sum(axis=0) == 1)
    want = set()
    for i, j in zip(*np.nonzero(v)):
        left = v[i, j - 1] if j else -1
        right = v[i, j + 1] if j + 1 < v.shape[1] else -1
        up = v[i - 1, j] if i else -1
        down = v[i + 1, j] if i + 1 < v.shape[0] else -1
        if v[i, j] > left and v[i, j] >= right and v[i, j] > up and v[i, j] >= down:
            want.add((int(i), int(j)))
    got = {d.source_cell for d in detect_baseline(acc, 1)}
    assert got == want and len(got) > 0


def test_clean_parallel_lines():
    # normals on a theta cell centre; unrounded points put every vote of a line in one cell
    m = math.tan(math.radians(45.5))
    specs = [LineSpec(m, 60, 100), LineSpec(m, -60, 100)]
    rng = np.random.default_rng(5)
    pts = sample_line(specs[0], rng=rng).concat(sample_line(specs[1], rng=rng))
    acc = accumulate(pts)
    assert np.array_equal(acc.votes, oracles.accumulator(pts.points, acc.grid))
    dets = detect_ph(acc, 50)
    assert len(dets) == 2
    for spec in specs:
        ti, tj = line_to_cell(acc.grid, line_params_of(spec))
        assert any(abs(d.source_cell[0] - ti) <= 1 and abs(d.source_cell[1] - tj) <= 1 for d in dets)


def test_rounded_pixels_split_line_peaks():
    # rounding to pixels spreads a line over neighbouring rho bins, so the peak stays well below n
    m = math.tan(math.radians(45.5))
    rng = np.random.default_rng(5)
    acc = accumulate(quantize(sample_line(LineSpec(m, 60, 100), rng=rng)))
    assert acc.votes.max() < 80


def test_invalid_thresholds():
    acc = _two_peak_scene()
    with pytest.raises(ValueError):
        detect_ph(acc, 0)
    with pytest.raises(ValueError):
        detect_baseline(acc, -1)


def test_ph_invariant_to_constant_shift():
    acc = _two_peak_scene()
    a = [d.source_cell for d in detect_ph(acc, 30)]
    b = [d.source_cell for d in detect_ph(acc.shifted(17), 30)]
    assert a == b


def test_ph_detections_shrink_with_nu():
    rng = np.random.default_rng(2)
    cfg = NoiseExpConfig()
    pts, _ = two_line_scene(rng, 70, 150, 120, 10, cfg)
    acc = accumulate(quantize(pts))
    counts = [len(detect_ph(acc, nu)) for nu in (1, 2, 5, 10, 20, 50, 100)]
    assert counts == sorted(counts, reverse=True)
    cells = [set(d.source_cell for d in detect_ph(acc, nu)) for nu in (1, 5, 20)]
    assert cells[2] <= cells[1] <= cells[0]


def test_detections_sorted_by_score():
    dets = detect_ph(_two_peak_scene(), 1)
    keys = [(-d.score, d.source_cell) for d in dets]
    assert keys == sorted(keys)
    assert all(isinstance(d, Detection) for d in dets)


# --- tuning ------------------------------------------------------------------------

def _tuning_scene():
    """Isolated peaks on a zero floor: lines at persistence inf and 150, noise at 50, 40, 30."""
    grid = HoughGrid()
    v = np.zeros(grid.shape, dtype=np.int64)
    lines = [(300, 45), (420, 45)]
    v[lines[0]], v[lines[1]] = 200, 150
    for cell, h in (((100, 120), 50), ((600, 10), 40), ((50, 170), 30)):
        v[cell] = h
    truth = [cell_to_line(grid, *c) for c in lines]
    return Accumulator(grid, v, 0), truth


def test_tuning_prefers_clean_threshold():
    acc, truth = _tuning_scene()
    m80 = [d for d in detect_ph(acc, 80)]
    m10 = [d for d in detect_ph(acc, 10)]
    assert len(m80) == 2 and len(m10) == 5
    res = tune_parameter([(acc, truth)], "ph", grid=[10, 80], eps_eval=2.0)
    assert res.best_param == 80 and res.best_f1 == 100.0
    assert dict(res.grid)[10] == pytest.approx(100 * 2 * (2 / 5) / (1 + 2 / 5))


def test_tuning_single_candidate():
    acc, truth = _tuning_scene()
    assert tune_parameter([(acc, truth)], "baseline", grid=[7], eps_eval=2.0).best_param == 7


def test_tuning_ties_go_to_larger():
    acc, truth = _tuning_scene()
    res = tune_parameter([(acc, truth)], "ph", grid=[60, 70, 80], eps_eval=2.0)
    assert res.best_param == 80
    assert {f for _, f in res.grid} == {100.0}


def test_tuning_default_grid():
    acc, truth = _tuning_scene()
    res = tune_parameter([(acc, truth)], "baseline", eps_eval=2.0)
    assert [p for p, _ in res.grid] == list(map(float, range(1, 201)))
    assert 51 <= res.best_param <= 150
    assert res.best_param == 150


def test_tuning_errors():
    acc, truth = _tuning_scene()
    with pytest.raises(ValueError):
        tune_parameter([], "ph", eps_eval=2.0)
    with pytest.raises(ValueError):
        tune_parameter([(acc, truth)], "ph", grid=[], eps_eval=2.0)
    with pytest.raises(ValueError):
        tune_parameter([(acc, truth)], "hough", eps_eval=2.0)


def test_prepared_prefix_matches_direct_evaluation():
    from topohough.metrics import match_lines
    rng = np.random.default_rng(8)
    cfg = NoiseExpConfig()
    pts, truth = two_line_scene(rng, 60, 150, 120, 12, cfg)
    acc = accumulate(quantize(pts))
    prep = prepare(baseline_candidates(acc), truth, 12)
    assert isinstance(prep, PreparedImage)
    for tau in (1, 5, 10, 15, 20, 30):
        direct = match_lines(detect_baseline(acc, tau), truth, 12)
        got = prep.match(tau)
        assert (got.tp, got.fp, got.fn) == (direct.tp, direct.fp, direct.fn)
    assert tune_prepared([prep], [5.0]).best_param == 5.0
