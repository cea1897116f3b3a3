"""Condenser potentials, p-capacities, flux identities, and exhaustion limits.

Energy-counting conventions (recorded on every result):

* ``global-cap``  — the condenser domain is the whole (truncated) graph; the
  value is the full-graph energy of the potential, all incident edges
  counted, including direct source-sink edges.
* ``subdomain-Cp`` — a proper subdomain; only edges with both endpoints in
  the domain are counted (the half-double-sum over the domain).

Reported values carry an uncertainty of p * max_residual * (plate boundary
weight sum), which turns the solver tolerance into checkable error bars.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ClosureEscapesU,
    DisconnectedFreeComponent,
    EmptyBoundary,
    MonotonicityViolation,
    WindowTooSmall,
)
from .graph import VertexSet, ball, closure, induced_subgraph
from .plaplace import (
    PExponent,
    PotentialSolution,
    as_vertex_set,
    p_energy,
    solve_dirichlet,
)

__all__ = [
    "Condenser",
    "CapacityResult",
    "condenser_potential",
    "capacity",
    "level_set_flux",
    "sigma_measure",
    "capacity_exhaustion",
    "capacity_exhaustion_on",
    "ExhaustionResult",
    "ball_capacity_bounds_check",
    "BallBoundsResult",
    "level_set_sandwich_check",
    "SandwichResult",
]


@dataclass(frozen=True)
class Condenser:
    """Source plate at potential 1, sink plate at 0, inside a domain.

    ``domain=None`` means the whole graph (the global capacity convention).
    """

    source: VertexSet
    sink: VertexSet
    p: PExponent
    domain: Optional[VertexSet] = None

    def __post_init__(self):
        object.__setattr__(self, "p", PExponent.coerce(self.p))
        if len(self.source) == 0 or len(self.sink) == 0:
            raise ValueError("both plates must be nonempty")
        if len(self.source.intersection(self.sink)) > 0:
            raise ValueError("plates must be disjoint")
        if self.domain is not None:
            if not self.source.issubset(self.domain) or not self.sink.issubset(self.domain):
                raise ValueError("plates must lie inside the domain")


@dataclass
class CapacityResult:
    value: float
    uncertainty: float
    convention: str
    p: float
    sizes: dict
    potential: PotentialSolution
    flux_at_source: float
    flux_at_sink: float
    sigma_mass_on_source: float

    @property
    def sweeps(self):
        return self.potential.sweeps

    @property
    def converged(self):
        return self.potential.converged

    def to_json_dict(self):
        return {
            "value": self.value,
            "uncertainty": self.uncertainty,
            "convention": self.convention,
            "p": self.p,
            "sizes": self.sizes,
            "sweeps": self.sweeps,
            "converged": self.converged,
            "flux_at_source": self.flux_at_source,
            "flux_at_sink": self.flux_at_sink,
            "sigma_mass_on_source": self.sigma_mass_on_source,
            "max_residual": self.potential.max_residual,
        }


def condenser_potential(g, cond: Condenser, tol=1e-8, **solve_kw) -> PotentialSolution:
    """p-potential: u=1 on the source, u=0 on the sink, p-harmonic between.

    The potential is indexed by the original graph; vertices outside the
    condenser domain are NaN. A free component touching neither plate has
    its value set by nothing and raises :class:`DisconnectedFreeComponent`.
    """
    if cond.domain is not None and len(cond.domain) < g.n:
        gD, new_of_old, old_of_new = induced_subgraph(g, cond.domain)
        src = VertexSet(new_of_old[cond.source.ids], gD.n, _checked=False)
        snk = VertexSet(new_of_old[cond.sink.ids], gD.n, _checked=False)
    else:
        gD, new_of_old, old_of_new = g, None, None
        src, snk = cond.source, cond.sink

    plates = src.union(snk)
    free = plates.complement()
    u_d = np.full(gD.n, np.nan)
    u_d[src.ids] = 1.0
    u_d[snk.ids] = 0.0

    if len(free) > 0:
        membership = np.zeros(gD.n)
        membership[src.ids] = 1.0
        try:
            sol = solve_dirichlet(gD, free, membership, cond.p, tol=tol, **solve_kw)
        except EmptyBoundary as e:
            raise DisconnectedFreeComponent(str(e)) from e
        u_d[free.ids] = sol.u[free.ids]
        max_res = sol.max_residual
        sweeps = sol.sweeps
        converged = sol.converged
        energy = sol.energy
        meta = dict(sol.meta)
        res_d = meta.get("residuals")
    else:
        max_res, sweeps, converged, energy = 0.0, 0, True, None
        meta = {"p": cond.p.p, "tol": tol, "flags": [], "residuals": None}
        res_d = None
        energy = p_energy(gD, u_d, None, cond.p)

    if old_of_new is not None:
        u_full = np.full(g.n, np.nan)
        u_full[old_of_new] = u_d
        res_full = np.full(g.n, np.nan)
        if res_d is not None:
            res_full[old_of_new] = res_d
        meta["residuals"] = res_full
        free_orig = VertexSet(old_of_new[free.ids], g.n, _checked=False)
    else:
        u_full = u_d
        free_orig = free
        if meta.get("residuals") is None:
            meta["residuals"] = np.full(g.n, np.nan)

    meta["domain_size"] = gD.n
    return PotentialSolution(u=u_full, free_set=free_orig, max_residual=max_res,
                             energy=energy, sweeps=sweeps, converged=converged,
                             meta=meta)


def _plate_cut_weight(g, u, cond):
    """Total weight of edges leaving the plates (toward defined vertices)."""
    rows = g.directed_rows()
    cols = g.indices
    plate = np.zeros(g.n, dtype=bool)
    plate[cond.source.ids] = True
    plate[cond.sink.ids] = True
    ok = plate[rows] & ~plate[cols] & np.isfinite(u[cols])
    return float(g.weights[ok].sum())


def capacity(g, cond: Condenser, tol=1e-8, potential=None, **solve_kw) -> CapacityResult:
    """Condenser p-capacity (effective conductance) with its potential.

    value = energy of the p-potential under the condenser's convention;
    flux fields evaluate the level-set flux at t=1 and t=0, and
    ``sigma_mass_on_source`` sums sigma = -Delta_p u * mu over the source.
    """
    pot = potential if potential is not None else condenser_potential(g, cond, tol=tol, **solve_kw)
    u = pot.u
    value = p_energy(g, u, None, cond.p)
    convention = "global-cap" if cond.domain is None or len(cond.domain) == g.n else "subdomain-Cp"
    flux1 = level_set_flux(g, u, 1.0, cond.p, source=cond.source)
    flux0 = level_set_flux(g, u, 0.0, cond.p)
    sig = sigma_measure(g, u, cond.p)
    sigma_on_k = float(np.nansum(sig[cond.source.ids]))
    uncertainty = cond.p.p * pot.max_residual * _plate_cut_weight(g, u, cond)
    sizes = {
        "source": len(cond.source),
        "sink": len(cond.sink),
        "free": len(pot.free_set),
        "domain": int(len(cond.domain)) if cond.domain is not None else g.n,
    }
    return CapacityResult(value=value, uncertainty=float(uncertainty),
                          convention=convention, p=cond.p.p, sizes=sizes,
                          potential=pot, flux_at_source=flux1, flux_at_sink=flux0,
                          sigma_mass_on_source=sigma_on_k)


def level_set_flux(g, u, t, p, source=None):
    """Flux h_{p,t}(u) across the superlevel cut Gamma_t = {u > t}.

    At t=1 the cut is the edge boundary of the source plate (pass `source`;
    without it, {u >= 1} is used, which coincides for condenser potentials).
    For a converged potential this is constant in t and equals the capacity.
    """
    pe = PExponent.coerce(p)
    u = np.asarray(u, dtype=np.float64)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    if t == 1.0:
        gamma = source.mask() if source is not None else (u >= 1.0)
    else:
        with np.errstate(invalid="ignore"):
            gamma = u > t
    gamma &= np.isfinite(u)
    rows = g.directed_rows()
    cols = g.indices
    cut = gamma[rows] & ~gamma[cols] & np.isfinite(u[cols])
    if not cut.any():
        return 0.0
    dr = np.abs(u[rows[cut]] - u[cols[cut]])
    return float(np.sum(g.weights[cut] * dr ** pe.pm1))


def sigma_measure(g, u, p):
    """Per-vertex sigma(x) = -Delta_p u(x) * mu(x) (canonical measure).

    Computed as the plain edge sum -sum_y mu_xy sign(du)|du|^(p-1), so the
    vertex measure never enters. Edges into undefined (NaN) vertices are
    treated as absent. sigma vanishes on the free region of a converged
    potential (up to tol * mu) and sums to the capacity over the source.
    """
    pe = PExponent.coerce(p)
    u = np.asarray(u, dtype=np.float64)
    rows = g.directed_rows()
    cols = g.indices
    du = u[cols] - u[rows]
    contrib = g.weights * np.sign(du) * np.abs(du) ** pe.pm1
    ok = np.isfinite(contrib)
    div = np.bincount(rows[ok], weights=contrib[ok], minlength=g.n)
    out = -div
    out[~np.isfinite(u)] = np.nan
    return out


@dataclass
class ExhaustionResult:
    rows: list           # (radius, value, increment)
    estimate: float
    err_proxy: float
    uncertainties: list
    converged_all: bool

    @property
    def values(self):
        return [v for (_, v, _) in self.rows]

    @property
    def radii(self):
        return [r for (r, _, _) in self.rows]


def _check_nonincreasing(rows, uncertainties, strict):
    for i in range(1, len(rows)):
        slack = uncertainties[i] + uncertainties[i - 1] + 1e-12
        if rows[i][1] > rows[i - 1][1] + slack:
            msg = (f"capacity sequence increased at radius {rows[i][0]}: "
                   f"{rows[i - 1][1]} -> {rows[i][1]}")
            if strict:
                raise MonotonicityViolation(msg)
            warnings.warn(msg)


def capacity_exhaustion(family, k_spec, p, radii, *, center=None, tol=1e-8,
                        strict_monotone=True, **solve_kw) -> ExhaustionResult:
    """cap_p(K, B_R) along growing lattice balls; nonincreasing in R.

    The radius-R condenser grounds the sphere at hop distance exactly R and
    counts edges inside B_R (so on Z^1 with K={o} the value is exactly 1/R:
    two arms of R unit-resistance edges in series, in parallel).

    `family` provides windows (see :class:`~pharmonic.lattice.LatticeFamily`);
    `k_spec` is a set spec (dict/pydantic) or a callable window -> VertexSet.
    The last value is the capacity estimate; the last decrement is its error
    proxy.
    """
    from .setspec import resolve_set

    radii = [int(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    pe = PExponent.coerce(p)
    rows = []
    uncs = []
    conv = True
    for R in radii:
        g, win = family.window(R)
        K = k_spec(win) if callable(k_spec) else resolve_set(k_spec, win)
        if len(K) == 0:
            raise ValueError("source set is empty in the window")
        B = win.l1_ball(R, center=center)
        inner = win.l1_ball(R - 1, center=center)
        if not K.issubset(inner):
            raise WindowTooSmall(f"source set must lie strictly inside the ball of radius {R}")
        shell = B.difference(inner)
        cap = capacity(g, Condenser(K, shell, pe, domain=B), tol=tol, **solve_kw)
        inc = cap.value - rows[-1][1] if rows else 0.0
        rows.append((R, cap.value, inc))
        uncs.append(cap.uncertainty)
        conv &= cap.converged
    _check_nonincreasing(rows, uncs, strict_monotone)
    return ExhaustionResult(rows=rows, estimate=rows[-1][1],
                            err_proxy=abs(rows[-1][2]) if len(rows) > 1 else float("nan"),
                            uncertainties=uncs, converged_all=conv)


def capacity_exhaustion_on(g, x0, K, p, radii, *, tol=1e-8, strict_monotone=True,
                           **solve_kw) -> ExhaustionResult:
    """Fixed-graph variant of :func:`capacity_exhaustion` (hop-metric balls)."""
    radii = [int(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    pe = PExponent.coerce(p)
    K = as_vertex_set(g, K)
    rows = []
    uncs = []
    conv = True
    for R in radii:
        B = ball(g, x0, R)
        if len(B) == g.n:
            raise WindowTooSmall(f"ball of radius {R} saturates the graph")
        inner = ball(g, x0, R - 1)
        if not K.issubset(inner):
            raise WindowTooSmall(f"source set must lie strictly inside the ball of radius {R}")
        shell = B.difference(inner)
        cap = capacity(g, Condenser(K, shell, pe, domain=B), tol=tol, **solve_kw)
        inc = cap.value - rows[-1][1] if rows else 0.0
        rows.append((R, cap.value, inc))
        uncs.append(cap.uncertainty)
        conv &= cap.converged
    _check_nonincreasing(rows, uncs, strict_monotone)
    return ExhaustionResult(rows=rows, estimate=rows[-1][1],
                            err_proxy=abs(rows[-1][2]) if len(rows) > 1 else float("nan"),
                            uncertainties=uncs, converged_all=conv)


@dataclass
class BallBoundsResult:
    cap: CapacityResult
    upper_bound: float
    upper_holds: bool
    lower_ratio: float
    lower_hypothesis: bool   # True when R < 2r as the lower-bound lemma assumes


def ball_capacity_bounds_check(g, x0, r, R, p, tol=1e-8, **solve_kw) -> BallBoundsResult:
    """Check cap_p(B(r), B(R)) <= mu(B(R)) / (R-r)^p and record the lower ratio.

    The ratio cap * R^p / mu(B(R)) is the empirical constant of the
    complementary lower bound; no specific constant is asserted (the lemma's
    C_b is existential).
    """
    if not 0 < r < R:
        raise ValueError("need 0 < r < R")
    pe = PExponent.coerce(p)
    B1 = ball(g, x0, r)
    B2 = ball(g, x0, R)
    if len(B2) == g.n:
        raise WindowTooSmall(f"ball of radius {R} saturates the graph")
    Z = B2.complement()
    cap = capacity(g, Condenser(B1, Z, pe), tol=tol, **solve_kw)
    mu_b2 = float(g.canonical_measure[B2.ids].sum())
    upper = mu_b2 / (R - r) ** pe.p
    holds = cap.value <= upper + cap.uncertainty
    ratio = cap.value * R ** pe.p / mu_b2
    return BallBoundsResult(cap=cap, upper_bound=upper, upper_holds=bool(holds),
                            lower_ratio=ratio, lower_hypothesis=bool(R < 2 * r))


@dataclass
class SandwichResult:
    lhs: float
    mid: float
    rhs: float
    holds: bool
    level: float


def level_set_sandwich_check(g, cond: Condenser, lam, tol=1e-8, **solve_kw) -> SandwichResult:
    """Check lambda^(p-1) cap(Gamma) <= cap(K) <= lambda^(p-1) cap(closure(Gamma)).

    Gamma is the strict superlevel set {u > lambda} of the condenser
    potential; its closure must avoid the sink (:class:`ClosureEscapesU`
    otherwise). The inequalities are asserted up to propagated solver
    uncertainty.
    """
    if not 0.0 < lam < 1.0:
        raise ValueError("lambda must lie in (0, 1)")
    pe = cond.p
    base = capacity(g, cond, tol=tol, **solve_kw)
    u = base.potential.u
    with np.errstate(invalid="ignore"):
        gamma = VertexSet.from_mask((u > lam) & np.isfinite(u))
    gamma_bar = closure(g, gamma)
    if cond.domain is not None and not gamma_bar.issubset(cond.domain):
        raise ClosureEscapesU("closure of the level set leaves the domain")
    if len(gamma_bar.intersection(cond.sink)) > 0:
        raise ClosureEscapesU("closure of the level set touches the sink")
    cap_g = capacity(g, Condenser(gamma, cond.sink, pe, cond.domain), tol=tol, **solve_kw)
    cap_gbar = capacity(g, Condenser(gamma_bar, cond.sink, pe, cond.domain), tol=tol, **solve_kw)
    lam_pow = lam ** pe.pm1
    lhs = lam_pow * cap_g.value
    mid = base.value
    rhs = lam_pow * cap_gbar.value
    slack = base.uncertainty + lam_pow * (cap_g.uncertainty + cap_gbar.uncertainty) + 1e-12
    holds = (lhs <= mid + slack) and (mid <= rhs + slack)
    return SandwichResult(lhs=lhs, mid=mid, rhs=rhs, holds=bool(holds), level=lam)
