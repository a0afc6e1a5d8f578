"""Matching detections to ground truth and detection scores.

A detection ``(rho', theta')`` is correct for a truth line ``(rho, theta)``
when ``|rho' - rho| <= eps`` and ``|theta' - theta| <= 2 eps / n_w``, with the
difference taken on the Moebius quotient. Matching is one-to-one and greedy by
``|d_rho|``. Accuracy is the critical success index ``tp / (tp + fp + fn)``
because a detection task has no true negatives.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ACCURACY_DEFINITION = "csi: tp/(tp+fp+fn)"


@dataclass
class MatchResult:
    tp: int
    fp: int
    fn: int
    pairs: list[tuple[int, int]] = field(default_factory=list)

    def __add__(self, other: "MatchResult") -> "MatchResult":
        return MatchResult(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float


def _as_array(lines) -> np.ndarray:
    rows = [ln.line if hasattr(ln, "line") else ln for ln in lines]
    return np.asarray(rows, dtype=np.float64).reshape(-1, 2)


def band_candidates(detections: Sequence, truth: Sequence, eps: float, n_w: int = 256) -> list:
    """All in-band ``(d_rho, d_theta, det_idx, truth_idx)`` tuples in greedy order.

    Each detection is compared through its representatives ``(rho, theta)`` and
    ``(-rho, theta +- pi)``; the closest in-band one is kept.
    """
    if not eps > 0:
        raise ValueError(f"band half-width must be positive, got {eps}")
    tol_theta = 2.0 * eps / n_w
    d, t = _as_array(detections), _as_array(truth)
    if not len(d) or not len(t):
        return []
    best_r = np.full((len(d), len(t)), np.inf)
    best_t = np.full((len(d), len(t)), np.inf)
    for sign, shift in ((1.0, 0.0), (-1.0, math.pi), (-1.0, -math.pi)):
        dr = np.abs(sign * d[:, 0:1] - t[None, :, 0])
        dt = np.abs(d[:, 1:2] + shift - t[None, :, 1])
        ok = (dr <= eps) & (dt <= tol_theta)
        better = ok & ((dr < best_r) | ((dr == best_r) & (dt < best_t)))
        best_r = np.where(better, dr, best_r)
        best_t = np.where(better, dt, best_t)
    di, ti = np.nonzero(np.isfinite(best_r))
    out = [(float(best_r[a, b]), float(best_t[a, b]), int(a), int(b)) for a, b in zip(di, ti)]
    out.sort()
    return out


def greedy_match(candidates, n_det: int, n_truth: int) -> MatchResult:
    used_d, used_t, pairs = set(), set(), []
    for _, _, di, ti in candidates:
        if di in used_d or ti in used_t:
            continue
        used_d.add(di)
        used_t.add(ti)
        pairs.append((di, ti))
    tp = len(pairs)
    return MatchResult(tp, n_det - tp, n_truth - tp, pairs)


def match_lines(detections: Sequence, truth: Sequence, eps: float, n_w: int = 256) -> MatchResult:
    """One-to-one matching of ``(rho, theta)`` detections against truth lines."""
    return greedy_match(band_candidates(detections, truth, eps, n_w), len(detections), len(truth))


def scores(mr: MatchResult) -> Metrics:
    """Accuracy (CSI), precision, recall and F1 in percent; 0 where undefined."""
    tp, fp, fn = mr.tp, mr.fp, mr.fn

    def ratio(a, b):
        return 100.0 * a / b if b else 0.0

    prec, rec = ratio(tp, tp + fp), ratio(tp, tp + fn)
    f1 = 2 * prec * rec / (prec + rec) if prec + rec else 0.0
    return Metrics(ratio(tp, tp + fp + fn), prec, rec, f1)
