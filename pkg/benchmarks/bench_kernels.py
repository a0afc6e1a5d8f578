"""Time the compiled kernels against their uncompiled fallbacks.

    python benchmarks/bench_kernels.py [--repeat N]

Inputs mimic one noise-experiment image: ~270 pixels voted into a 724 x 180
accumulator, then its superlevel diagram and 4-neighbour local maxima.
"""
import argparse
import timeit

import numpy as np

from topohough import _kernels as K
from topohough._accel import HAVE_NUMBA
from topohough.experiments import NoiseExpConfig, two_line_scene
from topohough.geometry import quantize
from topohough.hough import HoughGrid, accumulate


def inputs():
    grid = HoughGrid()
    pts, _ = two_line_scene(np.random.default_rng(0), 75, 150, 120, 8, NoiseExpConfig())
    xy = quantize(pts).pixels.astype(np.float64)
    votes = accumulate(xy, grid).votes
    flat = np.ascontiguousarray(votes.ravel(), dtype=np.float64)
    order = np.argsort(-flat, kind="stable").astype(np.int64)
    return grid, xy, votes, flat, order


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    grid, xy, votes, flat, order = inputs()
    cos_t, sin_t = np.cos(grid.thetas), np.sin(grid.thetas)
    mask = np.zeros(votes.shape, dtype=np.bool_)

    cases = {
        "vote": (
            lambda: K.vote_numba(xy[:, 0].copy(), xy[:, 1].copy(), cos_t, sin_t, grid.rho_max, grid.n_rho,
                                 np.zeros(grid.shape, np.int64)),
            lambda: K.vote_numpy(xy[:, 0].copy(), xy[:, 1].copy(), cos_t, sin_t, grid.rho_max, grid.n_rho,
                                 np.zeros(grid.shape, np.int64)),
        ),
        "superlevel": (
            lambda: K.superlevel_numba(flat, order, *votes.shape, True),
            lambda: K.superlevel_python(flat, order, *votes.shape, True),
        ),
        "local_max": (
            lambda: K.local_max_numba(votes, mask),
            lambda: K.local_max_numpy(votes, mask),
        ),
    }
    print(f"{'kernel':<12}{'numba ms':>12}{'fallback ms':>14}{'speedup':>10}")
    for name, (fast, slow) in cases.items():
        fast()  # compile / load cache
        n_fast = max(1, args.repeat * 10)
        t_fast = min(timeit.repeat(fast, number=n_fast, repeat=3)) / n_fast
        t_slow = min(timeit.repeat(slow, number=1, repeat=args.repeat))
        print(f"{name:<12}{1e3 * t_fast:>12.3f}{1e3 * t_slow:>14.3f}{t_slow / t_fast:>9.1f}x")


if __name__ == "__main__":
    main()
