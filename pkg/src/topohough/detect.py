"""Line detectors on a Hough accumulator and F1-driven threshold tuning.

``detect_ph`` keeps superlevel components whose persistence reaches ``nu``;
``detect_baseline`` keeps 4-neighbour local maxima whose vote count reaches
``tau`` (ties between equal neighbours go to the lower row-major index).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .cubical_ph import PersistenceDiagram, Topology, superlevel_pd
from .hough import Accumulator, LineParams, accumulate, cell_to_line
from .metrics import MatchResult, band_candidates, greedy_match, scores


class Detection(NamedTuple):
    line: LineParams
    score: float
    source_cell: tuple[int, int]


def _to_detections(acc: Accumulator, cells, scores_) -> list[Detection]:
    n_theta = acc.grid.n_theta
    order = sorted(range(len(scores_)), key=lambda k: (-scores_[k], cells[k][0] * n_theta + cells[k][1]))
    out = []
    for k in order:
        i, j = int(cells[k][0]), int(cells[k][1])
        out.append(Detection(cell_to_line(acc.grid, i, j), float(scores_[k]), (i, j)))
    return out


def ph_candidates(acc: Accumulator, pd: PersistenceDiagram | None = None) -> list[Detection]:
    """Every diagram feature as a detection scored by persistence (essential: +inf)."""
    if pd is None:
        pd = superlevel_pd(acc.votes, Topology.MOEBIUS)
    return _to_detections(acc, pd.cells, pd.persistence)


def detect_ph(acc: Accumulator, nu: float, pd: PersistenceDiagram | None = None) -> list[Detection]:
    """Lines whose superlevel component (Moebius-glued) has persistence >= ``nu``."""
    if not nu > 0:
        raise ValueError(f"persistence threshold must be positive, got {nu}")
    return [d for d in ph_candidates(acc, pd) if d.score >= nu]


def baseline_candidates(acc: Accumulator) -> list[Detection]:
    """All nonzero 4-neighbour local maxima scored by vote count."""
    votes = acc.votes
    mask = np.zeros(votes.shape, dtype=np.bool_)
    _kernels.local_maxima(np.ascontiguousarray(votes), mask)
    mask &= votes > 0
    ii, jj = np.nonzero(mask)
    return _to_detections(acc, np.column_stack([ii, jj]), votes[ii, jj])


def detect_baseline(acc: Accumulator, tau: float, relative: bool = False) -> list[Detection]:
    """Fixed-threshold detector.

    With ``relative=True``, ``tau`` is a fraction of the global maximum vote count.
    """
    if not tau > 0:
        raise ValueError(f"vote threshold must be positive, got {tau}")
    if relative:
        tau = tau * int(acc.votes.max())
    return [d for d in baseline_candidates(acc) if d.score >= tau]


# --- tuning ---------------------------------------------------------------------

@dataclass
class TuningResult:
    best_param: float
    best_f1: float
    grid: list[tuple[float, float]] = field(default_factory=list)


@dataclass
class PreparedImage:
    """Scored candidate detections of one image plus the in-band candidate matches.

    For any threshold the detections form a prefix of ``scores`` (sorted
    descending), so a threshold sweep only re-runs the greedy matching on the
    in-band pairs.
    """

    scores: np.ndarray
    band: list
    n_truth: int

    def match(self, param: float) -> MatchResult:
        k = int(np.searchsorted(-self.scores, -param, side="right"))
        return greedy_match([c for c in self.band if c[2] < k], k, self.n_truth)


def prepare(dets: Sequence[Detection], truth: Sequence[LineParams], eps: float,
            n_w: int = 256) -> PreparedImage:
    return PreparedImage(
        np.array([d.score for d in dets], dtype=np.float64),
        band_candidates([d.line for d in dets], truth, eps, n_w),
        len(truth),
    )


def default_grid(prepared: Sequence[PreparedImage]) -> list[float]:
    """``1..max finite score`` over the dataset (persistence for PH, votes for baseline)."""
    top = 1
    for p in prepared:
        finite = p.scores[np.isfinite(p.scores)]
        if len(finite):
            top = max(top, int(finite.max()))
    return [float(v) for v in range(1, top + 1)]


def tune_prepared(prepared: Sequence[PreparedImage], grid: Sequence[float]) -> TuningResult:
    if not prepared:
        raise ValueError("empty dataset")
    if not grid:
        raise ValueError("empty parameter grid")
    table = []
    for param in grid:
        total = MatchResult(0, 0, 0)
        for p in prepared:
            total = total + p.match(param)
        table.append((float(param), scores(total).f1))
    best_param, best_f1 = max(table, key=lambda t: (t[1], t[0]))
    return TuningResult(best_param, best_f1, table)


def tune_parameter(dataset, method: str, grid: Sequence[float] | None = None, eps_eval=None,
                   n_w: int = 256) -> TuningResult:
    """Pick the threshold maximising micro-averaged F1 over ``dataset``.

    ``dataset`` holds ``(points, truth_lines)`` pairs where ``points`` is anything
    :func:`accumulate` accepts (or an :class:`Accumulator`). ``eps_eval`` is the
    matching band, either one value or one per image. Ties go to the larger
    parameter.
    """
    if not dataset:
        raise ValueError("empty dataset")
    if grid is not None and not len(grid):
        raise ValueError("empty parameter grid")
    if eps_eval is None:
        raise ValueError("eps_eval is required")
    if method not in ("ph", "baseline"):
        raise ValueError(f"unknown method {method!r}")
    eps_list = list(eps_eval) if np.ndim(eps_eval) else [eps_eval] * len(dataset)
    prepared = []
    for (points, truth), eps in zip(dataset, eps_list):
        acc = points if isinstance(points, Accumulator) else accumulate(points)
        dets = ph_candidates(acc) if method == "ph" else baseline_candidates(acc)
        prepared.append(prepare(dets, truth, eps, n_w))
    if grid is None:
        grid = default_grid(prepared)
    return tune_prepared(prepared, grid)

