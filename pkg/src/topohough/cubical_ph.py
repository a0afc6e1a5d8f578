"""0-dimensional superlevel persistence of 2D integer fields.

Cells are 8-connected. With Moebius topology the first and last columns are
additionally glued with the row index reflected (``i -> n_rows-1-i``), which
is the rho-sign flip of the Hough plane at ``theta = +-pi/2``.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels


class Topology(str, enum.Enum):
    PLANAR = "planar"
    MOEBIUS = "moebius"


@dataclass(frozen=True)
class PersistencePair:
    birth: int
    death: float  # -inf for the essential class
    birth_cell: tuple[int, int]

    @property
    def persistence(self) -> float:
        return self.birth - self.death

    @property
    def essential(self) -> bool:
        return self.death == -math.inf


class PersistenceDiagram:
    """Superlevel diagram sorted by persistence (descending, ties by birth cell index).

    Stored column-wise: ``births``, ``deaths`` (``-inf`` for essential classes)
    and ``cells`` (``(k, 2)`` birth-cell indices).
    """

    def __init__(self, births, deaths, cells, shape):
        self.births = np.asarray(births, dtype=np.int64)
        self.deaths = np.asarray(deaths, dtype=np.float64)
        self.cells = np.asarray(cells, dtype=np.int64).reshape(-1, 2)
        self.shape = tuple(shape)

    def __len__(self):
        return len(self.births)

    def __iter__(self):
        for b, d, (i, j) in zip(self.births, self.deaths, self.cells):
            yield PersistencePair(int(b), float(d), (int(i), int(j)))

    def __repr__(self):
        return f"PersistenceDiagram({len(self)} pairs, essential={int(self.essential_mask.sum())})"

    @property
    def pairs(self) -> list[PersistencePair]:
        return list(self)

    @property
    def persistence(self) -> np.ndarray:
        return self.births - self.deaths

    @property
    def essential_mask(self) -> np.ndarray:
        return np.isneginf(self.deaths)

    def finite(self) -> np.ndarray:
        """``(k, 2)`` array of finite ``(birth, death)`` points."""
        m = ~self.essential_mask
        return np.column_stack([self.births[m], self.deaths[m]]).astype(np.float64)

    def essential_births(self) -> np.ndarray:
        return self.births[self.essential_mask]


def neighbors(shape, cell, topology=Topology.MOEBIUS) -> list[tuple[int, int]]:
    """King-move neighbours of ``cell``, plus the reflected seam cells under Moebius."""
    n_rows, n_cols = shape
    i, j = cell
    if not (0 <= i < n_rows and 0 <= j < n_cols):
        raise IndexError(f"cell {cell} outside field of shape {shape}")
    out = []
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            ii, jj = i + di, j + dj
            if (di or dj) and 0 <= ii < n_rows and 0 <= jj < n_cols:
                out.append((ii, jj))
    if Topology(topology) is Topology.MOEBIUS:
        seams = []
        if j == 0:
            seams.append(n_cols - 1)
        if j == n_cols - 1:
            seams.append(0)
        for jj in seams:
            for d in (-1, 0, 1):
                ii = n_rows - 1 - i + d
                if 0 <= ii < n_rows:
                    out.append((ii, jj))
    seen = set()
    return [c for c in out if c != (i, j) and not (c in seen or seen.add(c))]


def superlevel_pd(values, topology=Topology.MOEBIUS, *, kernel=None) -> PersistenceDiagram:
    """Persistence diagram of the superlevel filtration ``{v >= r}``.

    Cells enter in decreasing value (ties: increasing row-major index). When
    components meet, the one whose birth cell entered later dies at the current
    value. Zero-persistence pairs are dropped; components that never die get
    death ``-inf``.
    """
    a = np.asarray(values)
    if a.ndim != 2:
        raise ValueError("field must be 2-dimensional")
    n_rows, n_cols = a.shape
    flat = np.ascontiguousarray(a.ravel(), dtype=np.float64)
    order = np.argsort(-flat, kind="stable").astype(np.int64)
    kernel = kernel or _kernels.superlevel_pairs
    cells, deaths, _ = kernel(flat, order, n_rows, n_cols, Topology(topology) is Topology.MOEBIUS)
    births = flat[cells]
    pers = births - deaths
    idx = np.lexsort((cells, -pers))
    cells = cells[idx]
    return PersistenceDiagram(
        births[idx].astype(np.int64), deaths[idx],
        np.column_stack([cells // n_cols, cells % n_cols]), (n_rows, n_cols),
    )


def write_pd_csv(pd: PersistenceDiagram, path) -> None:
    """``birth,death,persistence,i_rho,i_theta``; essential death written as ``inf-death``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["birth", "death", "persistence", "i_rho", "i_theta"])
        for p in pd:
            if p.essential:
                w.writerow([p.birth, "inf-death", "inf", *p.birth_cell])
            else:
                w.writerow([p.birth, int(p.death), int(p.persistence), *p.birth_cell])


def read_pd_csv(path, shape=(0, 0)) -> PersistenceDiagram:
    b, d, c = [], [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            b.append(int(row["birth"]))
            d.append(-math.inf if row["death"] == "inf-death" else float(row["death"]))
            c.append((int(row["i_rho"]), int(row["i_theta"])))
    return PersistenceDiagram(b, d, c, shape)
