"""Numba kernels for the nonlinear Gauss-Seidel sweeps.

The scalar subproblem at a vertex x solves

    g(t) = sum_y mu_xy * sign(u_y - t) * |u_y - t|^(p-1) = 0

on the bracket [min_y u_y, max_y u_y]; g is continuous and strictly
decreasing there, so the root is unique. Two root-finders share the bracket
and the 1e-13 / 60-iteration stopping rule: Illinois false position
(default, fewer pow() calls) and plain bisection (cross-check path).
p = 2 uses the closed-form weighted average.

Color-class sweeps update an independent set in parallel; since no two
vertices in a class are adjacent, results are identical to updating them
sequentially, and independent of thread count.
"""

import numpy as np
from numba import njit, prange

BRACKET_TOL = 1e-13
MAX_SCALAR_ITERS = 60
# safeguarded false position halves the bracket only every other step in the
# worst case; give it the iteration budget matching the same bracket target
MAX_ILLINOIS_ITERS = 120

METHOD_ILLINOIS = 0
METHOD_BISECTION = 1


@njit(cache=True)
def _g_at(indptr, indices, weights, u, x, t, pm1):
    g = 0.0
    for e in range(indptr[x], indptr[x + 1]):
        d = u[indices[e]] - t
        if d > 0.0:
            g += weights[e] * d ** pm1
        elif d < 0.0:
            g -= weights[e] * (-d) ** pm1
    return g


@njit(cache=True)
def _scalar_solve(indptr, indices, weights, u, x, pm1, method):
    start = indptr[x]
    end = indptr[x + 1]
    if end == start:
        return u[x]
    if pm1 == 1.0:
        num = 0.0
        den = 0.0
        for e in range(start, end):
            num += weights[e] * u[indices[e]]
            den += weights[e]
        return num / den
    lo = 1e300
    hi = -1e300
    for e in range(start, end):
        v = u[indices[e]]
        if v < lo:
            lo = v
        if v > hi:
            hi = v
    if hi - lo <= 0.0:
        return lo
    a = lo
    b = hi
    fa = _g_at(indptr, indices, weights, u, x, a, pm1)
    fb = _g_at(indptr, indices, weights, u, x, b, pm1)
    if fa <= 0.0:
        return a
    if fb >= 0.0:
        return b
    if method == METHOD_BISECTION:
        for _ in range(MAX_SCALAR_ITERS):
            t = 0.5 * (a + b)
            ft = _g_at(indptr, indices, weights, u, x, t, pm1)
            if ft > 0.0:
                a = t
            elif ft < 0.0:
                b = t
            else:
                return t
            if b - a <= BRACKET_TOL:
                break
        return 0.5 * (a + b)
    side = 0
    width_2ago = b - a
    for it in range(MAX_ILLINOIS_ITERS):
        denom = fb - fa
        if denom == 0.0:
            t = 0.5 * (a + b)
        else:
            t = (a * fb - b * fa) / denom
            if not (a < t < b):
                t = 0.5 * (a + b)
        # dovetail with bisection: guarantee the bracket halves every 2 steps
        if it >= 2 and (b - a) > 0.25 * width_2ago:
            t = 0.5 * (a + b)
        if it % 2 == 0:
            width_2ago = b - a
        ft = _g_at(indptr, indices, weights, u, x, t, pm1)
        if ft > 0.0:
            a = t
            fa = ft
            if side == 1:
                fb *= 0.5
            side = 1
        elif ft < 0.0:
            b = t
            fb = ft
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            return t
        if b - a <= BRACKET_TOL:
            break
    return 0.5 * (a + b)


@njit(cache=True)
def sweep_sequential(indptr, indices, weights, u, order, pm1, method):
    for k in range(order.shape[0]):
        x = order[k]
        u[x] = _scalar_solve(indptr, indices, weights, u, x, pm1, method)


@njit(cache=True, parallel=True)
def sweep_color_class(indptr, indices, weights, u, ids, pm1, method):
    for i in prange(ids.shape[0]):
        x = ids[i]
        u[x] = _scalar_solve(indptr, indices, weights, u, x, pm1, method)


@njit(cache=True)
def residual_fill(indptr, indices, weights, mvec, u, free, pm1, out):
    """Per-vertex |Delta_p u| over `free`; returns the maximum."""
    worst = 0.0
    for k in range(free.shape[0]):
        x = free[k]
        acc = 0.0
        ux = u[x]
        for e in range(indptr[x], indptr[x + 1]):
            d = u[indices[e]] - ux
            if d > 0.0:
                acc += weights[e] * d ** pm1
            elif d < 0.0:
                acc -= weights[e] * (-d) ** pm1
        r = abs(acc) / mvec[x]
        out[x] = r
        if r > worst:
            worst = r
    return worst


@njit(cache=True)
def greedy_coloring(indptr, indices, in_set, order):
    """Greedy proper coloring of the subgraph induced on `in_set`.

    Returns an int32 color per vertex (-1 outside the set). Lattice windows
    come out 2-colored (bipartite).
    """
    n = indptr.shape[0] - 1
    colors = np.full(n, -1, dtype=np.int32)
    taken = np.zeros(64, dtype=np.uint8)
    for k in range(order.shape[0]):
        x = order[k]
        for i in range(64):
            taken[i] = 0
        for e in range(indptr[x], indptr[x + 1]):
            y = indices[e]
            if in_set[y] and colors[y] >= 0 and colors[y] < 64:
                taken[colors[y]] = 1
        c = 0
        while c < 64 and taken[c] == 1:
            c += 1
        colors[x] = c
    return colors
