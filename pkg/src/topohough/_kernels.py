"""Hot loops: accumulator voting, superlevel union-find, 4-neighbour local maxima.

Each kernel has a compiled variant (``*_numba``) and an uncompiled fallback;
the public names ``vote``, ``superlevel_pairs`` and ``local_maxima`` are bound
according to :data:`topohough._accel.USE_NUMBA`. Voting and local maxima fall
back to vectorised numpy (``*_numpy``). Union-find has no vectorised form, so
``superlevel_python`` is the same loop run by the interpreter.
"""
import numpy as np

from ._accel import USE_NUMBA, njit


# --- voting ------------------------------------------------------------------

def _vote_loop(xs, ys, cos_t, sin_t, rho_max, n_rho, out):
    """Add one vote per point per theta column into ``out``.

    Returns the index of the first point whose rho leaves ``[-rho_max, rho_max]``
    (``out`` is then partially filled), or -1.
    """
    scale = n_rho / (2.0 * rho_max)
    n_theta = cos_t.shape[0]
    for p in range(xs.shape[0]):
        for j in range(n_theta):
            r = xs[p] * cos_t[j] + ys[p] * sin_t[j]
            if r < -rho_max or r > rho_max:
                return p
            i = int(np.floor((r + rho_max) * scale))
            if i >= n_rho:
                i = n_rho - 1
            out[i, j] += 1
    return -1


vote_numba = njit(_vote_loop)


def vote_numpy(xs, ys, cos_t, sin_t, rho_max, n_rho, out):
    n_theta = cos_t.shape[0]
    if xs.shape[0] == 0:
        return -1
    r = xs[:, None] * cos_t[None, :] + ys[:, None] * sin_t[None, :]
    bad = (r < -rho_max) | (r > rho_max)
    if bad.any():
        return int(np.flatnonzero(bad.any(axis=1))[0])
    i = np.floor((r + rho_max) * (n_rho / (2.0 * rho_max))).astype(np.int64)
    np.minimum(i, n_rho - 1, out=i)
    flat = i * n_theta + np.arange(n_theta)[None, :]
    out += np.bincount(flat.ravel(), minlength=n_rho * n_theta).reshape(n_rho, n_theta)
    return -1


# --- superlevel persistence ---------------------------------------------------

def _superlevel_loop(values, order, n_rows, n_cols, moebius):
    """Union-find over cells visited in ``order`` (decreasing value).

    ``values`` is the flattened row-major field. Returns ``(birth_cells,
    death_values, essential)`` with one entry per component that died with
    positive persistence or never died.
    """
    n = n_rows * n_cols
    parent = np.full(n, -1, dtype=np.int64)
    size = np.zeros(n, dtype=np.int64)
    oldest = np.zeros(n, dtype=np.int64)  # birth cell of the component rooted here
    rank = np.empty(n, dtype=np.int64)
    for k in range(n):
        rank[order[k]] = k
    birth_cells = np.empty(n, dtype=np.int64)
    deaths = np.empty(n, dtype=np.float64)
    essential = np.zeros(n, dtype=np.bool_)
    n_out = 0
    nb = np.empty(11, dtype=np.int64)

    for k in range(n):
        c = order[k]
        v = values[c]
        i = c // n_cols
        j = c - i * n_cols
        parent[c] = c
        size[c] = 1
        oldest[c] = c

        m = 0
        for di in range(-1, 2):
            ii = i + di
            if ii < 0 or ii >= n_rows:
                continue
            for dj in range(-1, 2):
                jj = j + dj
                if (di == 0 and dj == 0) or jj < 0 or jj >= n_cols:
                    continue
                nb[m] = ii * n_cols + jj
                m += 1
        if moebius:
            for side in range(2):
                if side == 0 and j != 0:
                    continue
                if side == 1 and j != n_cols - 1:
                    continue
                jj = n_cols - 1 if side == 0 else 0
                for d in range(-1, 2):
                    ii = n_rows - 1 - i + d
                    if 0 <= ii < n_rows:
                        nb[m] = ii * n_cols + jj
                        m += 1

        for t in range(m):
            q = nb[t]
            if parent[q] < 0:
                continue
            rq = q
            while parent[rq] != rq:
                parent[rq] = parent[parent[rq]]
                rq = parent[rq]
            rc = c
            while parent[rc] != rc:
                parent[rc] = parent[parent[rc]]
                rc = parent[rc]
            if rq == rc:
                continue
            if rank[oldest[rq]] < rank[oldest[rc]]:
                elder, younger = rq, rc
            else:
                elder, younger = rc, rq
            dead = oldest[younger]
            if values[dead] > v:
                birth_cells[n_out] = dead
                deaths[n_out] = v
                n_out += 1
            keep = oldest[elder]
            if size[elder] >= size[younger]:
                parent[younger] = elder
                size[elder] += size[younger]
                oldest[elder] = keep
            else:
                parent[elder] = younger
                size[younger] += size[elder]
                oldest[younger] = keep

    for c in range(n):
        if parent[c] == c:
            birth_cells[n_out] = oldest[c]
            deaths[n_out] = -np.inf
            essential[n_out] = True
            n_out += 1
    return birth_cells[:n_out], deaths[:n_out], essential[:n_out]


superlevel_python = _superlevel_loop
superlevel_numba = njit(_superlevel_loop)


# --- baseline local maxima ----------------------------------------------------

def _local_max_loop(a, out):
    n_rows, n_cols = a.shape
    for i in range(n_rows):
        for j in range(n_cols):
            v = a[i, j]
            ok = True
            if j > 0 and not v > a[i, j - 1]:
                ok = False
            elif j < n_cols - 1 and not v >= a[i, j + 1]:
                ok = False
            elif i > 0 and not v > a[i - 1, j]:
                ok = False
            elif i < n_rows - 1 and not v >= a[i + 1, j]:
                ok = False
            out[i, j] = ok
    return out


local_max_numba = njit(_local_max_loop)


def local_max_numpy(a, out):
    p = np.pad(a.astype(np.int64), 1, constant_values=-1)
    c = p[1:-1, 1:-1]
    out[...] = (c > p[1:-1, :-2]) & (c >= p[1:-1, 2:]) & (c > p[:-2, 1:-1]) & (c >= p[2:, 1:-1])
    return out


if USE_NUMBA:
    vote, superlevel_pairs, local_maxima = vote_numba, superlevel_numba, local_max_numba
else:
    vote, superlevel_pairs, local_maxima = vote_numpy, superlevel_python, local_max_numpy
