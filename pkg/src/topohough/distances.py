"""Distances for the stability experiment.

* ``wasserstein1_points``: optimal-transport cost between equal-size point sets.
* ``bottleneck``: bottleneck distance between finite superlevel diagrams
  (points ``(birth, death)`` with ``birth >= death``).
"""
from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching
from scipy.spatial.distance import cdist


class InstabilityWitness(ArithmeticError):
    """Output moved (``d_B > 0``) although the input did not (``d_W == 0``)."""


def _xy(ps) -> np.ndarray:
    return np.asarray(getattr(ps, "points", ps), dtype=np.float64).reshape(-1, 2)


def wasserstein1_points(a, b, convention: str = "sum") -> float:
    """Minimum over bijections of the summed (or mean) Euclidean distance."""
    a, b = _xy(a), _xy(b)
    if len(a) != len(b):
        raise ValueError(f"point sets differ in size: {len(a)} vs {len(b)}")
    if convention not in ("sum", "mean"):
        raise ValueError(f"unknown convention {convention!r}")
    if not len(a):
        return 0.0
    cost = cdist(a, b)
    r, c = linear_sum_assignment(cost)
    total = float(cost[r, c].sum())
    return total / len(a) if convention == "mean" else total


def _diagram(d) -> np.ndarray:
    arr = np.asarray(d, dtype=np.float64).reshape(-1, 2)
    if not np.all(np.isfinite(arr)):
        raise ValueError("bottleneck distance takes finite pairs only; drop essential classes first")
    return arr


def _saturates(heavy: np.ndarray, close: np.ndarray) -> bool:
    """Whether every row in ``heavy`` can be matched to a distinct column of ``close``."""
    rows = np.flatnonzero(heavy)
    if not len(rows):
        return True
    sub = close[rows]
    if not sub.any(axis=1).all():
        return False
    match = maximum_bipartite_matching(csr_matrix(sub), perm_type="column")
    return bool((match >= 0).all())


def bottleneck(d1, d2) -> float:
    """Bottleneck distance with L-infinity ground metric and diagonal matching.

    A point ``(b, d)`` costs ``(b - d) / 2`` to send to the diagonal. The value
    is the smallest candidate ``delta`` for which a partial matching exists
    that uses only pairs within ``delta`` and leaves unmatched only points
    within ``delta`` of the diagonal. Such a matching exists iff the points of
    each diagram that are farther than ``delta`` from the diagonal can each be
    matched into the other diagram (Mendelsohn-Dulmage), so each test is two
    one-sided bipartite matchings.
    """
    a, b = _diagram(d1), _diagram(d2)
    half_a = np.abs(a[:, 0] - a[:, 1]) / 2.0
    half_b = np.abs(b[:, 0] - b[:, 1]) / 2.0
    upper = max(half_a.max(initial=0.0), half_b.max(initial=0.0))
    if not len(a) or not len(b):
        return float(upper)
    dist = cdist(a, b, metric="chebyshev")
    # an edge can only decide the value if one endpoint is still off-diagonal at that distance
    useful = (dist <= upper) & (dist < np.maximum(half_a[:, None], half_b[None, :]))
    cands = np.unique(np.concatenate([dist[useful], half_a, half_b, [0.0]]))

    def feasible(delta):
        close = dist <= delta
        return _saturates(half_a > delta, close) and _saturates(half_b > delta, close.T)

    lo, hi = 0, len(cands) - 1  # cands[hi] == upper is always feasible
    while lo < hi:
        mid = (lo + hi) // 2
        if feasible(cands[mid]):
            hi = mid
        else:
            lo = mid + 1
    return float(cands[lo])


def lipschitz_ratio(d_b: float, d_w: float) -> float:
    """``d_B / d_W``; ``0`` when both vanish.

    Raises :class:`InstabilityWitness` when ``d_W == 0 < d_B``.
    """
    if d_w == 0:
        if d_b == 0:
            return 0.0
        raise InstabilityWitness(f"d_B={d_b} with d_W=0")
    if d_w < 0 or d_b < 0 or math.isnan(d_b) or math.isnan(d_w):
        raise ValueError("distances must be non-negative numbers")
    return d_b / d_w
