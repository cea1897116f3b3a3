"""p-Dirichlet energy, the graph p-Laplacian, and the Dirichlet solver.

The solver is nonlinear Gauss-Seidel: each sweep visits free vertices in
fixed id order and re-solves the scalar optimality condition at one vertex
(closed form for p = 2, bracketed root-finding otherwise). Coordinate-wise
exact minimization of the separable convex energy makes the per-sweep energy
nonincreasing and convergence unconditional.

Large solves (free region >= ``ACCEL_THRESHOLD`` vertices) get a warm start
from iteratively reweighted linear Laplacians (AMG-backed); the Gauss-Seidel
polish always runs afterwards and is what certifies the residual contract
``max |Delta_p u| <= tol`` on the free set.

All degenerate powers are evaluated as sign(t)|t|^(p-1), which is continuous
at t = 0 for every p > 1; the classical |t|^(p-2) coefficient never appears.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels
from .errors import EmptyBoundary, InvalidExponent, NonFiniteBoundary
from .graph import VertexSet, WeightedGraph, induced_subgraph, vertex_boundary

__all__ = [
    "PExponent",
    "PotentialSolution",
    "p_energy",
    "p_laplacian_at",
    "p_laplacian_vector",
    "solve_dirichlet",
    "greens_identity_check",
]

ACCEL_THRESHOLD = 4000
SWEEPS_PER_ROUND = 40
MAX_ACCEL_ROUNDS = 10
ENERGY_REL_TOL = 1e-12

# comfort zone for the exponent; outside it results carry a conditioning flag
P_FLAG_LOW = 1.05
P_FLAG_HIGH = 12.0


@dataclass(frozen=True)
class PExponent:
    """Exponent p > 1 with its derived conjugate quantities."""

    p: float
    pm1: float = field(init=False)
    inv_pm1: float = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if not np.isfinite(p) or p <= 1.0:
            raise InvalidExponent(f"p must be a finite real > 1, got {p}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "pm1", p - 1.0)
        object.__setattr__(self, "inv_pm1", 1.0 / (p - 1.0))

    @classmethod
    def coerce(cls, p):
        return p if isinstance(p, PExponent) else cls(float(p))

    @property
    def conditioning_flag(self):
        return self.p < P_FLAG_LOW or self.p > P_FLAG_HIGH


@dataclass
class PotentialSolution:
    """Solution of a free-set Dirichlet problem.

    ``u`` is indexed by the original graph ids (NaN where undefined).
    ``energy`` uses the closure convention: edges with both endpoints in
    closure(free_set). ``meta["residuals"]`` holds per-vertex |Delta_p u|
    on the free set.
    """

    u: np.ndarray
    free_set: VertexSet
    max_residual: float
    energy: float
    sweeps: int
    converged: bool
    meta: dict = field(default_factory=dict)


def as_vertex_set(g, obj):
    if isinstance(obj, VertexSet):
        if obj.n != g.n:
            raise ValueError("vertex set belongs to a different graph")
        return obj
    arr = np.asarray(obj)
    if arr.dtype == bool:
        return VertexSet.from_mask(arr)
    return VertexSet(arr, g.n)


def _phi(t, pm1):
    return np.sign(t) * np.abs(t) ** pm1


def p_energy(g, u, omega=None, p=2.0):
    """p-Dirichlet energy over unordered edges with both endpoints in omega.

    This is the half-double-sum convention D_p(u; omega); omega=None sums
    over every edge whose endpoint values are both defined (non-NaN).
    """
    pe = PExponent.coerce(p)
    u = np.asarray(u, dtype=np.float64)
    rows = g.directed_rows()
    cols = g.indices
    du = u[cols] - u[rows]
    mask = np.isfinite(u[rows]) & np.isfinite(u[cols])
    if omega is not None:
        om = as_vertex_set(g, omega).mask()
        mask &= om[rows] & om[cols]
    if not mask.any():
        return 0.0
    return 0.5 * float(np.sum(g.weights[mask] * np.abs(du[mask]) ** pe.p))


def p_laplacian_at(g, u, x, p):
    """Delta_p u(x) = (1/m(x)) sum_y mu_xy sign(du)|du|^(p-1)."""
    pe = PExponent.coerce(p)
    sl = slice(g.indptr[x], g.indptr[x + 1])
    du = np.asarray(u)[g.indices[sl]] - u[x]
    return float(np.sum(g.weights[sl] * _phi(du, pe.pm1)) / g.vertex_measure[x])


def p_laplacian_vector(g, u, p):
    """Delta_p u at every vertex whose neighborhood values are defined.

    Edges with an undefined (NaN) endpoint are treated as absent, which
    matches evaluating on the subgraph induced by the defined vertices.
    """
    pe = PExponent.coerce(p)
    u = np.asarray(u, dtype=np.float64)
    rows = g.directed_rows()
    cols = g.indices
    du = u[cols] - u[rows]
    contrib = g.weights * _phi(du, pe.pm1)
    ok = np.isfinite(contrib)
    div = np.bincount(rows[ok], weights=contrib[ok], minlength=g.n)
    out = div / g.vertex_measure
    out[~np.isfinite(u)] = np.nan
    return out


def _materialize_data(boundary, boundary_data):
    if callable(boundary_data):
        vals = np.array([float(boundary_data(int(v))) for v in boundary.ids])
    elif isinstance(boundary_data, Mapping):
        try:
            vals = np.array([float(boundary_data[int(v)]) for v in boundary.ids])
        except KeyError as e:
            raise EmptyBoundary(f"boundary vertex {e} has no datum") from e
    else:
        arr = np.asarray(boundary_data, dtype=np.float64)
        vals = arr[boundary.ids]
    if vals.size and not np.all(np.isfinite(vals)):
        raise NonFiniteBoundary("boundary data must be finite")
    return vals


def _closure_energy(sub, rows, u, pe):
    du = u[sub.indices] - u[rows]
    return 0.5 * float(np.sum(sub.weights * np.abs(du) ** pe.p))


def _color_classes(sub, free_new):
    in_set = np.zeros(sub.n, dtype=np.bool_)
    in_set[free_new] = True
    colors = _kernels.greedy_coloring(sub.indptr, sub.indices, in_set, free_new)
    ncol = int(colors[free_new].max()) + 1 if free_new.size else 0
    return [free_new[colors[free_new] == c] for c in range(ncol)]


class _IrlsState:
    """Precomputed structure + AMG hierarchy reuse across IRLS iterations."""

    def __init__(self, sub, rows, free_new):
        import scipy.sparse as sp

        self.sp = sp
        self.sub = sub
        self.rows = rows
        self.free = free_new
        m = sub.n
        free_mask = np.zeros(m, dtype=bool)
        free_mask[free_new] = True
        self.free_mask = free_mask
        new_id = np.full(m, -1, dtype=np.int64)
        new_id[free_new] = np.arange(free_new.size)
        cols = sub.indices
        self.ff_entries = np.flatnonzero(free_mask[rows] & free_mask[cols])
        self.fb_entries = np.flatnonzero(free_mask[rows] & ~free_mask[cols])
        r_ff = new_id[rows[self.ff_entries]]
        c_ff = new_id[cols[self.ff_entries]]
        order = np.lexsort((c_ff, r_ff))
        self.ff_sorted = self.ff_entries[order]
        nf = free_new.size
        indptr = np.zeros(nf + 1, dtype=np.int64)
        np.add.at(indptr, r_ff[order] + 1, 1)
        self.Aff_indptr = np.cumsum(indptr)
        self.Aff_indices = c_ff[order]
        self.fb_rows_new = new_id[rows[self.fb_entries]]
        self.fb_cols = cols[self.fb_entries]
        self.ml = None
        self.ml_age = 0
        self.eps_exp = 2

    def laplacian_and_rhs(self, om, u):
        sp = self.sp
        nf = self.free.size
        rowsum = np.bincount(self.rows, weights=om, minlength=self.sub.n)[self.free]
        Aff = sp.csr_matrix((om[self.ff_sorted], self.Aff_indices, self.Aff_indptr),
                            shape=(nf, nf))
        b = np.bincount(self.fb_rows_new,
                        weights=om[self.fb_entries] * u[self.fb_cols],
                        minlength=nf)
        Lff = sp.diags(rowsum) - Aff
        return Lff.tocsr(), b


def _irls_warm_start(sub, rows, free_new, u, pe, *, state=None, max_iters=30,
                     target_tol=None, rel_energy_stop=1e-12):
    """Reweighted-Laplacian warm start; mutates u on the free slots.

    Each step solves a linear Dirichlet problem with edge weights
    w*(du^2+eps^2)^((p-2)/2), with eps decreasing geometrically across
    iterations (continued across rounds via `state`), and backtracks along
    the update direction so the true p-energy never increases. Stops when
    the p-Laplacian residual on the free set falls under 0.3 * target_tol.
    """
    try:
        import pyamg
    except ImportError:
        pyamg = None
    if pyamg is None and free_new.size > 150_000:
        return {"iters": 0, "skipped": "pyamg unavailable"}, state
    import scipy.sparse.linalg as spla

    if state is None:
        state = _IrlsState(sub, rows, free_new)
    stats = {"iters": 0, "energies": [], "residual": None}
    energy = _closure_energy(sub, rows, u, pe)
    stats["energies"].append(energy)
    mvec = sub.vertex_measure
    res_buf = np.full(sub.n, np.nan)
    for it in range(max_iters):
        du = u[sub.indices] - u[rows]
        if pe.p == 2.0:
            om = sub.weights
        else:
            absdu = np.abs(du)
            nz = absdu[absdu > 0]
            if nz.size == 0:
                break
            scale = float(np.percentile(nz, 90))
            eps = scale * max(10.0 ** (-state.eps_exp), 1e-13)
            state.eps_exp = min(state.eps_exp + 1, 13)
            om = sub.weights * (du * du + eps * eps) ** ((pe.p - 2.0) / 2.0)
        Lff, b = state.laplacian_and_rhs(om, u)
        x0 = u[free_new]
        use_amg = pyamg is not None and free_new.size > 1500
        if use_amg:
            rebuild = state.ml is None or state.ml_age >= 6
            if rebuild:
                state.ml = pyamg.ruge_stuben_solver(Lff, max_coarse=100)
                state.ml_age = 0
            state.ml_age += 1
            M = state.ml.aspreconditioner(cycle="V")
            if pe.p == 2.0:
                rtol = 1e-12
            else:
                # inexact Picard: early linear solves only need to outpace the
                # outer contraction; the Gauss-Seidel polish owns the contract
                rtol = 1e-2 if it < 4 else (1e-4 if it < 10 else 1e-6)
            iters = [0]
            cb = lambda xk: iters.__setitem__(0, iters[0] + 1)  # noqa: E731
            v, info = spla.cg(Lff, b, x0=x0, M=M, rtol=rtol, atol=0.0,
                              maxiter=200, callback=cb)
            if info != 0 or iters[0] > 30:
                state.ml = pyamg.ruge_stuben_solver(Lff, max_coarse=100)
                state.ml_age = 1
                if info != 0:
                    M = state.ml.aspreconditioner(cycle="V")
                    v, info = spla.cg(Lff, b, x0=x0, M=M, rtol=rtol, atol=0.0,
                                      maxiter=400)
        else:
            v = state.sp.linalg.spsolve(Lff, b)
        step = v - x0
        accepted = False
        alpha = 1.0
        for _ in range(10):
            u_try = u.copy()
            u_try[free_new] = x0 + alpha * step
            e_try = _closure_energy(sub, rows, u_try, pe)
            if e_try <= energy * (1 + 1e-14) + 1e-300:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            break
        u[free_new] = x0 + alpha * step
        rel = (energy - e_try) / max(abs(energy), 1e-300)
        energy = e_try
        stats["energies"].append(energy)
        stats["iters"] = it + 1
        if target_tol is not None:
            res = _kernels.residual_fill(sub.indptr, sub.indices, sub.weights,
                                         mvec, u, free_new, pe.pm1, res_buf)
            stats["residual"] = float(res)
            if res <= 0.3 * target_tol:
                break
        if pe.p == 2.0:
            break
        if rel < rel_energy_stop and state.eps_exp >= 13:
            break
    return stats, state


def solve_dirichlet(g, omega, boundary_data, p, tol=1e-10,
                    *, mode="gs", scalar_method="illinois", max_sweeps=None,
                    warm_start=None, accelerate="auto", energy_rel_tol=ENERGY_REL_TOL):
    """Solve Delta_p u = 0 on omega with u = boundary_data on its boundary.

    Parameters
    ----------
    omega : VertexSet (or ids/mask)
        Finite free set; every component must see the vertex boundary.
    boundary_data : mapping, callable, or full-length array
        Values on the vertex boundary of omega.
    tol : float
        Residual contract: max over omega of |Delta_p u| <= tol.
    mode : "gs" | "redblack"
        Fixed-order sweeps, or color-class sweeps (parallel, same fixed
        point, thread-count invariant).
    scalar_method : "illinois" | "bisection"
        Root-finder for the scalar subproblem (same bracket and stopping
        rule; bisection is the cross-check path).
    warm_start : array or None
        Full-length initial guess; clamped into the boundary-data envelope.
    accelerate : "auto" | bool
        IRLS warm start for large free sets ("auto": >= 4000 vertices).

    Returns a :class:`PotentialSolution`; non-convergence is reported via
    ``converged=False``, never silently.
    """
    pe = PExponent.coerce(p)
    omega = as_vertex_set(g, omega)
    if len(omega) == 0:
        raise ValueError("free set is empty")
    if len(omega) == g.n:
        raise EmptyBoundary("free set is the whole graph; no boundary exists")
    bnd = vertex_boundary(g, omega)
    if len(bnd) == 0:
        raise EmptyBoundary("free set has no vertex boundary")
    data = _materialize_data(bnd, boundary_data)

    clos = omega.union(bnd)
    sub, new_of_old, old_of_new = induced_subgraph(g, clos)
    free_new = new_of_old[omega.ids]
    bnd_new = new_of_old[bnd.ids]
    rows = sub.directed_rows()

    # every free component must reach the boundary: BFS from the boundary
    reached = np.zeros(sub.n, dtype=bool)
    reached[bnd_new] = True
    frontier = bnd_new
    while frontier.size:
        starts = sub.indptr[frontier]
        counts = sub.indptr[frontier + 1] - starts
        total = int(counts.sum())
        if total == 0:
            break
        excl = np.cumsum(counts) - counts
        pos = np.repeat(starts - excl, counts) + np.arange(total)
        nxt = sub.indices[pos]
        nxt = np.unique(nxt[~reached[nxt]])
        reached[nxt] = True
        frontier = nxt
    if not reached[free_new].all():
        missing = old_of_new[free_new[~reached[free_new]]]
        raise EmptyBoundary(
            f"{missing.size} free vertices (e.g. {missing[:5].tolist()}) lie in a "
            "component with no boundary")

    dmin = float(data.min())
    dmax = float(data.max())
    u = np.empty(sub.n)
    u[bnd_new] = data
    if warm_start is not None:
        ws = np.asarray(warm_start, dtype=np.float64)[omega.ids]
        ws = np.where(np.isfinite(ws), ws, 0.5 * (dmin + dmax))
        u[free_new] = np.clip(ws, dmin, dmax)
    else:
        u[free_new] = data.mean()

    flags = []
    if pe.conditioning_flag:
        flags.append("p outside the [1.05, 12] comfort zone; conditioning degrades")

    import time as _time

    accel = (accelerate is True) or (accelerate == "auto" and free_new.size >= ACCEL_THRESHOLD)
    irls_info = None
    irls_state = None
    t_irls = 0.0
    if accel:
        _t0 = _time.perf_counter()
        irls_info, irls_state = _irls_warm_start(
            sub, rows, free_new, u, pe, target_tol=tol,
            max_iters=1 if pe.p == 2.0 else 30)
        t_irls += _time.perf_counter() - _t0

    method = _kernels.METHOD_BISECTION if scalar_method == "bisection" else _kernels.METHOD_ILLINOIS
    if mode not in ("gs", "redblack"):
        raise ValueError(f"unknown mode {mode!r}")
    classes = _color_classes(sub, free_new) if mode == "redblack" else None

    if max_sweeps is None:
        # 200 sweeps per free vertex, floored so tiny stiff problems keep
        # enough budget for the rescue rounds to finish their job
        max_sweeps = max(5000, 200 * free_new.size)
    energy_every = 1 if sub.n <= 200_000 else 5
    mvec = sub.vertex_measure
    res_arr = np.full(sub.n, np.nan)

    energy_trace = []
    energy = _closure_energy(sub, rows, u, pe)
    prev_energy = energy
    sweeps = 0
    converged = False
    stagnated = False
    best_res = np.inf
    res_history = []

    def one_sweep():
        if classes is None:
            _kernels.sweep_sequential(sub.indptr, sub.indices, sub.weights, u,
                                      free_new, pe.pm1, method)
        else:
            for ids in classes:
                _kernels.sweep_color_class(sub.indptr, sub.indices, sub.weights, u,
                                           ids, pe.pm1, method)

    t_sweeps = 0.0
    max_rounds = MAX_ACCEL_ROUNDS
    irls_in_play = accel  # stagnation can pull IRLS in as a rescue at any size
    for rnd in range(max_rounds):
        if irls_in_play and rnd > 0:
            _t0 = _time.perf_counter()
            extra, irls_state = _irls_warm_start(sub, rows, free_new, u, pe,
                                                 state=irls_state, max_iters=6,
                                                 target_tol=tol)
            if irls_info is None:
                irls_info = extra
            else:
                irls_info["iters"] = irls_info.get("iters", 0) + extra.get("iters", 0)
            t_irls += _time.perf_counter() - _t0
        if rnd == max_rounds - 1:
            budget = max_sweeps - sweeps
        elif irls_in_play:
            budget = SWEEPS_PER_ROUND
        else:
            # plain sweeps get a chance, then an IRLS rescue round if stuck
            budget = min(max_sweeps - sweeps, 400)
        _t0 = _time.perf_counter()
        for _ in range(max(0, budget)):
            one_sweep()
            sweeps += 1
            res = _kernels.residual_fill(sub.indptr, sub.indices, sub.weights,
                                         mvec, u, free_new, pe.pm1, res_arr)
            res_history.append(res)
            best_res = min(best_res, res)
            if sweeps % energy_every == 0 or res <= tol:
                energy = _closure_energy(sub, rows, u, pe)
                energy_trace.append(energy)
                rel_de = abs(energy - prev_energy) / max(abs(energy), 1e-300) / energy_every
                prev_energy = energy
                if res <= tol and rel_de <= energy_rel_tol:
                    converged = True
                    break
            if sweeps >= max_sweeps:
                break
            if len(res_history) >= 120 and res > tol:
                if res >= 0.999 * res_history[-120]:
                    stagnated = True
                    break
        t_sweeps += _time.perf_counter() - _t0
        if converged or sweeps >= max_sweeps:
            break
        if irls_info is not None and irls_info.get("skipped"):
            break  # no rescue available (pyamg missing on a large problem)
        if stagnated and rnd >= max_rounds - 1:
            break
        # budget exhausted or stagnated: pull IRLS in for the next round
        irls_in_play = True
        stagnated = False
        res_history.clear()

    res = _kernels.residual_fill(sub.indptr, sub.indices, sub.weights,
                                 mvec, u, free_new, pe.pm1, res_arr)
    energy = _closure_energy(sub, rows, u, pe)
    if not energy_trace:
        energy_trace.append(energy)
    converged = bool(res <= tol)

    u_full = np.full(g.n, np.nan)
    u_full[old_of_new] = u
    res_full = np.full(g.n, np.nan)
    res_full[old_of_new] = res_arr
    res_full[bnd.ids] = 0.0

    meta = {
        "p": pe.p,
        "tol": tol,
        "mode": mode,
        "scalar_method": scalar_method,
        "residuals": res_full,
        "energy_trace": energy_trace,
        "energy_convention": "energy_closure",
        "accelerated": bool(accel),
        "irls": irls_info,
        "flags": flags,
        "stagnated": stagnated,
        "boundary_ids": bnd.ids,
        "max_sweeps": max_sweeps,
        "seconds_irls": t_irls,
        "seconds_sweeps": t_sweeps,
    }
    return PotentialSolution(u=u_full, free_set=omega, max_residual=float(res),
                             energy=energy, sweeps=sweeps, converged=converged,
                             meta=meta)


def greens_identity_check(g, omega, f, g_fn, p):
    """Evaluate both sides of the discrete Green identity on a finite omega.

    Returns (lhs, rhs, abs_gap) where
    lhs  = sum_{x in omega} Delta_p f(x) g(x) m(x)
    rhs  = -1/2 sum_{x,y in omega} |df|^(p-2) df dg mu_xy
           + sum_{x in omega, y in boundary} |df|^(p-2) df g(x) mu_xy
    and the gap is pure floating-point accumulation error.
    """
    pe = PExponent.coerce(p)
    fv = np.array([f(i) for i in range(g.n)], dtype=np.float64) if callable(f) \
        else np.asarray(f, dtype=np.float64)
    gv = np.array([g_fn(i) for i in range(g.n)], dtype=np.float64) if callable(g_fn) \
        else np.asarray(g_fn, dtype=np.float64)
    om = as_vertex_set(g, omega).mask()
    rows = g.directed_rows()
    cols = g.indices
    df = fv[cols] - fv[rows]
    phi = g.weights * _phi(df, pe.pm1)
    div = np.bincount(rows, weights=phi, minlength=g.n)
    lhs = float(np.sum(div[om] * gv[om]))
    inside = om[rows] & om[cols]
    crossing = om[rows] & ~om[cols]
    rhs = -0.5 * float(np.sum(phi[inside] * (gv[cols[inside]] - gv[rows[inside]])))
    rhs += float(np.sum(phi[crossing] * gv[rows[crossing]]))
    return lhs, rhs, abs(lhs - rhs)
