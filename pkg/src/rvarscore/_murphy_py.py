"""Pure numpy twin of ``_murphy_kernel``; same signatures and results."""
import numpy as np

# Observations per block; bounds temporary memory to ~8 * _BLOCK * grid chunk.
_BLOCK = 1 << 15
_GRID_CHUNK = 16


def _prep(alpha, beta, x1, x2, y):
    w = beta - alpha
    i1 = (y <= x1).astype(float)
    i2 = (y <= x2).astype(float)
    c1 = i1 - alpha
    c2 = i2 - beta
    return c1, c2, c1 * (x1 - y) / w, c2 * (x2 - y) / w


def _elem(v, x1, x2, x3, y, c1, c2, q1, q2):
    # v has shape (k, 1); per-observation arrays have shape (b,).
    jy = (v <= y).astype(float)
    i3 = v <= x3
    l1 = c1 * ((v <= x1).astype(float) - jy)
    l2 = c2 * ((v <= x2).astype(float) - jy)
    l3 = np.where(i3, q2, q1) + (i3.astype(float) - jy) * (v - y)
    return l1, l2, l3


def _accumulate(grid, n, compute):
    m = grid.size
    sums = np.zeros((m, 3))
    sq = np.zeros((m, 3))
    for j0 in range(0, m, _GRID_CHUNK):
        v = grid[j0:j0 + _GRID_CHUNK, None]
        for i0 in range(0, n, _BLOCK):
            for k, arr in enumerate(compute(v, slice(i0, i0 + _BLOCK))):
                sums[j0:j0 + v.shape[0], k] += arr.sum(axis=1)
                sq[j0:j0 + v.shape[0], k] += (arr * arr).sum(axis=1)
    return sums, sq


def murphy_sums(alpha, beta, x1, x2, x3, y, grid):
    x1, x2, x3, y, grid = (np.asarray(a, dtype=float) for a in (x1, x2, x3, y, grid))
    c1, c2, q1, q2 = _prep(alpha, beta, x1, x2, y)

    def compute(v, s):
        return _elem(v, x1[s], x2[s], x3[s], y[s], c1[s], c2[s], q1[s], q2[s])

    return _accumulate(grid, y.size, compute)


def murphy_diff_sums(alpha, beta, f1, f2, f3, g1, g2, g3, y, grid):
    arrs = [np.asarray(a, dtype=float) for a in (f1, f2, f3, g1, g2, g3, y, grid)]
    f1, f2, f3, g1, g2, g3, y, grid = arrs
    fp = _prep(alpha, beta, f1, f2, y)
    gp = _prep(alpha, beta, g1, g2, y)

    def compute(v, s):
        a = _elem(v, f1[s], f2[s], f3[s], y[s], *(p[s] for p in fp))
        b = _elem(v, g1[s], g2[s], g3[s], y[s], *(p[s] for p in gp))
        return tuple(ai - bi for ai, bi in zip(a, b))

    return _accumulate(grid, y.size, compute)
