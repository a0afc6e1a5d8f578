"""Rho-theta grid and accumulator voting.

A line is ``rho = x cos(theta) + y sin(theta)`` with ``theta`` in
``[-pi/2, pi/2)``. Cell centres are ``rho(i) = (i + 1/2 - n_rho/2) * d_rho`` and
``theta(j) = -pi/2 + (j + 1/2) * d_theta``, so reflecting ``i -> n_rho-1-i``
negates rho exactly when ``n_rho`` is even.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import _kernels
from .geometry import LineSpec, PixelSet, PointSet


class LineParams(NamedTuple):
    rho: float
    theta: float

    @classmethod
    def canonical(cls, rho: float, theta: float) -> "LineParams":
        """Fold ``theta`` into ``[-pi/2, pi/2)`` using ``(rho, theta + pi) == (-rho, theta)``."""
        k = math.floor((theta + math.pi / 2) / math.pi)
        theta = theta - k * math.pi
        if theta >= math.pi / 2:  # float edge
            theta -= math.pi
            k += 1
        return cls(-rho if k % 2 else rho, theta)


def line_params_of(spec: LineSpec) -> LineParams:
    """Normal form of ``y = m x + b``."""
    nx, ny = spec.normal
    return LineParams.canonical(float(spec.intercept * ny), math.atan2(ny, nx))


@dataclass(frozen=True)
class HoughGrid:
    n_rho: int = 724
    n_theta: int = 180
    rho_max: float = 363.0

    def __post_init__(self):
        if self.n_rho < 2 or self.n_rho % 2:
            raise ValueError(f"n_rho must be even and >= 2, got {self.n_rho}")
        if self.n_theta < 1:
            raise ValueError(f"n_theta must be positive, got {self.n_theta}")
        if not self.rho_max > 0:
            raise ValueError("rho_max must be positive")

    @classmethod
    def for_image(cls, n_w: int, n_h: int, n_rho: int = 724, n_theta: int = 180) -> "HoughGrid":
        """Grid whose rho range covers the image diagonal, rounded up to a whole pixel."""
        return cls(n_rho, n_theta, float(math.ceil(math.hypot(n_w, n_h))))

    @property
    def delta_rho(self) -> float:
        return 2.0 * self.rho_max / self.n_rho

    @property
    def delta_theta(self) -> float:
        return math.pi / self.n_theta

    @property
    def rhos(self) -> np.ndarray:
        return (np.arange(self.n_rho) + 0.5 - self.n_rho // 2) * self.delta_rho

    @property
    def thetas(self) -> np.ndarray:
        return -math.pi / 2 + (np.arange(self.n_theta) + 0.5) * self.delta_theta

    @property
    def shape(self):
        return self.n_rho, self.n_theta


@dataclass(frozen=True, eq=False)
class Accumulator:
    grid: HoughGrid
    votes: np.ndarray
    n_points: int

    def __post_init__(self):
        if self.votes.shape != self.grid.shape:
            raise ValueError(f"votes shape {self.votes.shape} does not match grid {self.grid.shape}")
        self.votes.setflags(write=False)

    def shifted(self, c: int) -> "Accumulator":
        """Copy with ``c`` phantom votes added to every cell."""
        return Accumulator(self.grid, self.votes + c, self.n_points)


def _coords(points) -> np.ndarray:
    if isinstance(points, PixelSet):
        return points.pixels.astype(np.float64)
    if isinstance(points, PointSet):
        return points.points
    return np.asarray(points, dtype=np.float64).reshape(-1, 2)


def accumulate(points, grid: HoughGrid | None = None) -> Accumulator:
    """Vote every point once per theta column into the rho bin containing its sinusoid.

    ``points`` may be a :class:`PixelSet` (binarised image), a :class:`PointSet`
    (continuous coordinates) or an ``(M, 2)`` array.
    """
    grid = grid or HoughGrid()
    xy = np.ascontiguousarray(_coords(points))
    th = grid.thetas
    votes = np.zeros(grid.shape, dtype=np.int64)
    bad = _kernels.vote(
        np.ascontiguousarray(xy[:, 0]), np.ascontiguousarray(xy[:, 1]),
        np.cos(th), np.sin(th), float(grid.rho_max), grid.n_rho, votes,
    )
    if bad >= 0:
        raise ValueError(
            f"point {tuple(xy[bad])} has |rho| > rho_max={grid.rho_max}; grid too small for the image"
        )
    return Accumulator(grid, votes, len(xy))


def cell_to_line(grid: HoughGrid, i: int, j: int) -> LineParams:
    if not (0 <= i < grid.n_rho and 0 <= j < grid.n_theta):
        raise IndexError(f"cell ({i}, {j}) outside grid {grid.shape}")
    return LineParams(
        (i + 0.5 - grid.n_rho // 2) * grid.delta_rho,
        -math.pi / 2 + (j + 0.5) * grid.delta_theta,
    )


def line_to_cell(grid: HoughGrid, lp: LineParams) -> tuple[int, int]:
    rho, theta = lp
    if not -grid.rho_max <= rho <= grid.rho_max:
        raise ValueError(f"rho={rho} outside [-{grid.rho_max}, {grid.rho_max}]")
    if not -math.pi / 2 <= theta < math.pi / 2:
        raise ValueError(f"theta={theta} outside [-pi/2, pi/2)")
    i = math.floor((rho + grid.rho_max) * grid.n_rho / (2.0 * grid.rho_max))
    j = math.floor((theta + math.pi / 2) * grid.n_theta / math.pi)
    return min(i, grid.n_rho - 1), min(j, grid.n_theta - 1)


# --- accumulator CSV ------------------------------------------------------------

def write_accumulator_csv(acc: Accumulator, path) -> None:
    """Sparse dump: a ``# n_rho=..,n_theta=..,rho_max=..`` line, then ``i_rho,i_theta,votes``."""
    g = acc.grid
    ii, jj = np.nonzero(acc.votes)
    with open(path, "w") as fh:
        fh.write(f"# n_rho={g.n_rho},n_theta={g.n_theta},rho_max={g.rho_max!r},n_points={acc.n_points}\n")
        fh.write("i_rho,i_theta,votes\n")
        for i, j in zip(ii, jj):
            fh.write(f"{i},{j},{acc.votes[i, j]}\n")


def read_accumulator_csv(path) -> Accumulator:
    with open(path) as fh:
        meta_line = fh.readline()
        if not meta_line.startswith("#"):
            raise ValueError("accumulator CSV is missing its grid header line")
        meta = dict(kv.split("=", 1) for kv in meta_line[1:].strip().split(","))
        grid = HoughGrid(int(meta["n_rho"]), int(meta["n_theta"]), float(meta["rho_max"]))
        if fh.readline().strip() != "i_rho,i_theta,votes":
            raise ValueError("unexpected accumulator CSV header")
        votes = np.zeros(grid.shape, dtype=np.int64)
        for row in fh:
            if row.strip():
                i, j, v = (int(t) for t in row.split(","))
                votes[i, j] = v
    return Accumulator(grid, votes, int(meta.get("n_points", 0)))
