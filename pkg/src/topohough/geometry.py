"""Synthetic scenes: points sampled on lines, orthogonal noise, binarisation.

Points live in continuous image coordinates ``(x, y)`` with ``0 <= x < n_w``
and ``0 <= y < n_h``. A binarised image is the set of integer pixels obtained
by rounding.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DEFAULT_SIZE = (256, 256)


@dataclass(frozen=True)
class LineSpec:
    """Line ``y = slope * x + intercept`` carrying ``n`` sample points."""

    slope: float
    intercept: float
    n: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"need at least one sample point, got n={self.n}")

    @property
    def normal(self) -> np.ndarray:
        """Unit normal ``(-m, 1) / sqrt(1 + m^2)``."""
        v = np.array([-self.slope, 1.0])
        return v / np.hypot(self.slope, 1.0)


@dataclass
class PointSet:
    points: np.ndarray
    n_w: int = DEFAULT_SIZE[0]
    n_h: int = DEFAULT_SIZE[1]

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        if not np.all(np.isfinite(self.points)):
            raise ValueError("point coordinates must be finite")

    def __len__(self):
        return len(self.points)

    @property
    def bounds(self):
        return self.n_w, self.n_h

    def concat(self, other: "PointSet") -> "PointSet":
        if self.bounds != other.bounds:
            raise ValueError("cannot concatenate point sets with different bounds")
        return PointSet(np.vstack([self.points, other.points]), self.n_w, self.n_h)


@dataclass
class PixelSet:
    """Occupied pixels of a binarised image, unique and sorted by ``(x, y)``."""

    pixels: np.ndarray = field(default_factory=lambda: np.empty((0, 2), dtype=np.int64))
    n_w: int = DEFAULT_SIZE[0]
    n_h: int = DEFAULT_SIZE[1]

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.int64).reshape(-1, 2)
        inside = (px[:, 0] >= 0) & (px[:, 0] < self.n_w) & (px[:, 1] >= 0) & (px[:, 1] < self.n_h)
        if not inside.all():
            raise ValueError("pixel outside image bounds")
        self.pixels = np.unique(px, axis=0) if len(px) else px

    def __len__(self):
        return len(self.pixels)

    @property
    def bounds(self):
        return self.n_w, self.n_h

    def to_image(self) -> np.ndarray:
        """Binary image of shape ``(n_h, n_w)``, row index = y."""
        img = np.zeros((self.n_h, self.n_w), dtype=np.uint8)
        img[self.pixels[:, 1], self.pixels[:, 0]] = 1
        return img

    @classmethod
    def from_image(cls, img) -> "PixelSet":
        img = np.asarray(img)
        ys, xs = np.nonzero(img)
        return cls(np.column_stack([xs, ys]), n_w=img.shape[1], n_h=img.shape[0])


def _segment(spec: LineSpec, bounds) -> tuple[np.ndarray, np.ndarray]:
    """Endpoints of the part of the line inside ``[0, n_w-1] x [0, n_h-1]``."""
    n_w, n_h = bounds
    m, b = spec.slope, spec.intercept
    lo, hi = 0.0, float(n_w - 1)
    if m == 0:
        if not 0 <= b <= n_h - 1:
            raise ValueError(f"line y = {b} misses the {n_w}x{n_h} image")
    else:
        xa, xb = sorted(((0 - b) / m, (n_h - 1 - b) / m))
        lo, hi = max(lo, xa), min(hi, xb)
    if lo > hi:
        raise ValueError(f"line y = {m}*x + {b} misses the {n_w}x{n_h} image")
    return np.array([lo, m * lo + b]), np.array([hi, m * hi + b])


def sample_line(spec: LineSpec, bounds=DEFAULT_SIZE, rng=None) -> PointSet:
    """Draw ``spec.n`` points uniformly along the in-image segment of the line.

    Sampling is uniform in the segment parameter, which for a fixed slope is the
    same as uniform in ``x`` and uniform in arc length. ``y`` is evaluated from
    the line equation so every point lies on the line up to rounding.
    """
    rng = np.random.default_rng(rng)
    start, end = _segment(spec, bounds)
    x = start[0] + rng.random(spec.n) * (end[0] - start[0])
    y = spec.slope * x + spec.intercept
    return PointSet(np.column_stack([x, y]), *bounds)


def perturb(ps: PointSet, spec: LineSpec, eps: float, rng=None) -> PointSet:
    """Shift each point along the line normal by ``delta ~ Normal(0, eps^2)``.

    Per-axis displacement components then have standard deviation
    ``eps * |n_x|`` and ``eps * |n_y|``; for slope 1 both equal ``eps / sqrt(2)``.
    """
    if eps < 0:
        raise ValueError(f"noise level must be non-negative, got {eps}")
    if eps == 0:
        return PointSet(ps.points.copy(), ps.n_w, ps.n_h)
    rng = np.random.default_rng(rng)
    delta = rng.normal(0.0, eps, size=len(ps))
    return PointSet(ps.points + delta[:, None] * spec.normal[None, :], ps.n_w, ps.n_h)


def round_half_away(v):
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.floor(np.abs(v) + 0.5)


def quantize(ps: PointSet) -> PixelSet:
    """Round to pixels (half away from zero), drop out-of-bounds, collapse duplicates."""
    px = round_half_away(ps.points).astype(np.int64)
    keep = (px[:, 0] >= 0) & (px[:, 0] < ps.n_w) & (px[:, 1] >= 0) & (px[:, 1] < ps.n_h)
    return PixelSet(px[keep], ps.n_w, ps.n_h)


# --- I/O ---------------------------------------------------------------------

def write_points_csv(ps: PointSet, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y"])
        for x, y in ps.points:
            w.writerow([f"{x:.9g}", f"{y:.9g}"])


def read_points_csv(path, bounds=DEFAULT_SIZE) -> PointSet:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    pts = np.array([[float(r["x"]), float(r["y"])] for r in rows]).reshape(-1, 2)
    return PointSet(pts, *bounds)


def write_pgm(px: PixelSet, path, binary: bool = True) -> None:
    """Write a binarised image as PGM (P5 when ``binary`` else plain P2), maxval 255."""
    img = px.to_image() * 255
    header = f"{'P5' if binary else 'P2'}\n{px.n_w} {px.n_h}\n255\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        if binary:
            fh.write(img.astype(np.uint8).tobytes())
        else:
            for row in img:
                fh.write((" ".join(str(v) for v in row) + "\n").encode("ascii"))


def _pgm_tokens(data: bytes, count: int, pos: int):
    tokens = []
    n = len(data)
    while len(tokens) < count:
        while pos < n and data[pos : pos + 1].isspace():
            pos += 1
        if pos < n and data[pos : pos + 1] == b"#":
            while pos < n and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < n and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PGM header")
        tokens.append(data[start:pos])
    return tokens, pos


def read_pgm(path) -> PixelSet:
    """Read a P2 or P5 PGM; every nonzero pixel is occupied."""
    data = Path(path).read_bytes()
    (magic, w, h, maxval), pos = _pgm_tokens(data, 4, 0)
    w, h, maxval = int(w), int(h), int(maxval)
    if magic == b"P5":
        dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
        raw = data[pos + 1 :]
        img = np.frombuffer(raw, dtype=dtype, count=w * h).reshape(h, w)
    elif magic == b"P2":
        vals, _ = _pgm_tokens(data, w * h, pos)
        img = np.array([int(v) for v in vals]).reshape(h, w)
    else:
        raise ValueError(f"unsupported PGM magic {magic!r}")
    return PixelSet.from_image(img)
