"""Finite-scale testers for p-parabolicity, p-massiveness, and D_p-massiveness.

Every verdict is a heuristic over finitely many window radii and ships with
its numeric evidence (sequence, increments, extrapolated limit with a
one-increment error proxy, margins). Massiveness sequences v_k solve, on
Omega_k = B_k intersect Omega, the Dirichlet problem with data 1 on the
part of the boundary belonging to Omega^c and 0 on the truncation part;
the comparison principle makes v_k(x0) NONDECREASING (the escape proxy
1 - v_k decreases), and Omega behaves massively when the limit stays
below 1 by a margin.

Thresholds live in :class:`VerdictThresholds`; the spec-level ones are
massive-like (limit <= 1 - 0.02 with last increment <= 0.005), parabolic-like
(three consecutive dyadic capacity ratios <= 0.9), and non-parabolic-like
(flattening above a positive floor, last decrement <= 5% of the value).
"""

from __future__ import annotations

import warnings as _warnings
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .capacity import Condenser, ExhaustionResult, capacity, capacity_exhaustion
from .errors import (
    Omega1NotSubset,
    SetsIntersect,
    WindowTooSmall,
    X0OutsideOmega,
)
from .graph import VertexSet, ball, vertex_boundary
from .plaplace import PExponent, solve_dirichlet

__all__ = [
    "VerdictThresholds",
    "MassivenessEvidence",
    "ParabolicityEvidence",
    "DpMassivenessEvidence",
    "LiouvilleReport",
    "GapProbeReport",
    "massiveness_sequence",
    "parabolicity_sequence",
    "dp_massiveness_probe",
    "liouville_construct",
    "uniqueness_gap_probe",
]


@dataclass(frozen=True)
class VerdictThresholds:
    massive_limit_gap: float = 0.02        # massive-like: limit <= 1 - gap
    massive_max_increment: float = 0.005
    parabolic_ratio: float = 0.9           # parabolic-like: ratios <= this ...
    parabolic_consecutive: int = 3         # ... for this many consecutive steps
    flat_increment_frac: float = 0.05      # non-parabolic-like flattening
    slow_trend_ratio: float = 0.65         # per-octave rate ratios above this ...
    slow_trend_value: float = 0.60         # ... with the value already this high
    growth_increment_frac: float = 0.10    # Dp probe: still growing above this


DEFAULT_THRESHOLDS = VerdictThresholds()


@dataclass
class MassivenessEvidence:
    radii: List[int]
    values: List[float]
    increments: List[float]
    limit: float
    err_proxy: float
    verdict: str
    margin: float
    x0: List[int]
    p: float
    notes: List[str] = field(default_factory=list)

    def rows(self):
        return list(zip(self.radii, self.values, self.increments))

    def summary_dict(self):
        return {
            "radii": self.radii,
            "values": self.values,
            "limit": self.limit,
            "err_proxy": self.err_proxy,
            "verdict": self.verdict,
            "margin": self.margin,
            "p": self.p,
            "notes": self.notes,
        }


def _classify_massiveness(values, radii, th: VerdictThresholds):
    """Verdict for a nondecreasing v_k sequence bounded by 1.

    Growth is measured per octave of the radius (robust to non-dyadic
    radii). Massive-like needs the one-increment extrapolated limit at
    least the configured gap below 1, with a small last increment;
    non-massive-like fires either when the limit reaches 1 or on the
    slow-trend heuristic (per-octave rates decaying non-geometrically
    while the value is already high), which is the desk-scale signature
    of logarithmic convergence to 1.
    """
    notes = []
    v_last = values[-1]
    if len(values) >= 2:
        incs = np.diff(values)
        d_last = float(incs[-1])
        octaves = np.diff(np.log2(np.asarray(radii, dtype=float)))
        rates = incs / np.maximum(octaves, 1e-12)
    else:
        incs = np.array([])
        rates = np.array([])
        d_last = float("nan")
    # conservative one-increment extrapolation (monotone sequence)
    limit = min(1.0, v_last + (d_last if np.isfinite(d_last) else 0.0))
    err = abs(d_last) if np.isfinite(d_last) else float("inf")

    ratio = None
    pos_idx = np.flatnonzero(rates > 1e-12)
    if pos_idx.size >= 3:
        tail = rates[pos_idx][-3:]
        ratio = float(np.median(tail[1:] / tail[:-1]))
    elif pos_idx.size == 2:
        ratio = float(rates[pos_idx][1] / rates[pos_idx][0])
    slow = ratio is not None and ratio >= th.slow_trend_ratio

    heading_to_one = slow and v_last >= th.slow_trend_value
    if (np.isfinite(err) and limit + err <= 1.0 - th.massive_limit_gap
            and d_last <= th.massive_max_increment and not heading_to_one):
        verdict = "massive-like"
        margin = 1.0 - th.massive_limit_gap - (limit + err)
    elif limit >= 1.0 - th.massive_limit_gap or heading_to_one:
        verdict = "non-massive-like"
        margin = limit - (1.0 - th.massive_limit_gap)
        if heading_to_one and limit < 1.0 - th.massive_limit_gap:
            notes.append("non-geometric per-octave rates trending toward 1")
            margin = v_last - th.slow_trend_value
    else:
        verdict = "inconclusive"
        margin = 0.0
    return verdict, float(limit), float(err), float(margin), (ratio, notes)


def massiveness_sequence(family, omega_spec, x0_coord, p, radii, tol=1e-8, *,
                         thresholds: VerdictThresholds = DEFAULT_THRESHOLDS,
                         **solve_kw) -> MassivenessEvidence:
    """v_k(x0) across window radii for Omega given as a lattice set spec.

    Per radius k: solve on Omega_k = B(x0-origin, k) intersect Omega with
    data 1 on the Omega^c part of the boundary, 0 on the truncation part,
    and record v_k(x0). The sequence is checked nondecreasing (comparison
    principle) up to solver slack.
    """
    from .setspec import resolve_set

    pe = PExponent.coerce(p)
    radii = [int(r) for r in radii]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly increasing")
    x0_coord = np.asarray(x0_coord, dtype=np.int64)
    values = []
    notes = []
    slack = max(1e-6, 2.0 * tol)
    prev = None  # (coords, u values) reused as the next radius' warm start
    for k in radii:
        g, win = family.window(k)
        omega = omega_spec(win) if callable(omega_spec) else resolve_set(omega_spec, win)
        x0 = win.id_of(x0_coord)
        if x0 not in omega:
            raise X0OutsideOmega(f"x0 {x0_coord.tolist()} is not in omega")
        bk = win.l1_ball(k)
        omega_k = omega.intersection(bk)
        if x0 not in omega_k:
            raise X0OutsideOmega(f"x0 {x0_coord.tolist()} lies outside the ball of radius {k}")
        bnd = vertex_boundary(g, omega_k)
        omask = omega.mask()
        data = np.zeros(g.n)
        data[bnd.ids] = np.where(omask[bnd.ids], 0.0, 1.0)
        warm = None
        if prev is not None:
            warm = np.full(g.n, np.nan)
            warm[win.id_of(prev[0])] = prev[1]
        sol = solve_dirichlet(g, omega_k, data, pe, tol=tol, warm_start=warm,
                              **solve_kw)
        if not sol.converged:
            notes.append(f"radius {k}: solver stopped at residual {sol.max_residual:.2e}")
        values.append(float(sol.u[x0]))
        defined = np.flatnonzero(np.isfinite(sol.u))
        prev = (win.coords_of(defined), sol.u[defined])
        if len(values) >= 2 and values[-1] < values[-2] - slack:
            notes.append(
                f"monotonicity violation at radius {k}: {values[-2]} -> {values[-1]}")

    verdict, limit, err, margin, (ratio, cnotes) = _classify_massiveness(values, radii, thresholds)
    notes.extend(cnotes)
    incs = [0.0] + list(np.diff(values))
    return MassivenessEvidence(radii=radii, values=values, increments=incs,
                               limit=limit, err_proxy=err, verdict=verdict,
                               margin=margin, x0=[int(c) for c in np.atleast_1d(x0_coord)],
                               p=pe.p, notes=notes)


@dataclass
class ParabolicityEvidence:
    exhaustion: ExhaustionResult
    verdict: str
    estimate: float
    err_proxy: float
    p: float
    notes: List[str] = field(default_factory=list)

    def rows(self):
        return self.exhaustion.rows

    def summary_dict(self):
        return {
            "radii": self.exhaustion.radii,
            "values": self.exhaustion.values,
            "verdict": self.verdict,
            "estimate": self.estimate,
            "err_proxy": self.err_proxy,
            "p": self.p,
            "notes": self.notes,
        }


def _classify_parabolicity(values, th: VerdictThresholds):
    notes = []
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return "inconclusive", notes
    ratios = v[1:] / np.maximum(v[:-1], 1e-300)
    k = th.parabolic_consecutive
    parabolic = ratios.size >= k and bool(np.all(ratios[-k:] <= th.parabolic_ratio))
    dec_last = v[-2] - v[-1]
    flat = v[-1] > 0 and dec_last <= th.flat_increment_frac * v[-1]
    if parabolic and flat:
        notes.append("both decay and flattening criteria matched")
        return "inconclusive", notes
    if parabolic:
        return "parabolic-like", notes
    if flat:
        return "non-parabolic-like", notes
    return "inconclusive", notes


def parabolicity_sequence(family, k_spec, p, radii, *, center=None, tol=1e-8,
                          thresholds: VerdictThresholds = DEFAULT_THRESHOLDS,
                          **solve_kw) -> ParabolicityEvidence:
    """cap_p(K, B_R) along growing windows with a parabolicity verdict.

    Decreasing toward 0 (sustained dyadic ratios <= 0.9): parabolic-like;
    flattening above a positive floor (last decrement <= 5% of the value):
    non-parabolic-like.
    """
    pe = PExponent.coerce(p)
    ex = capacity_exhaustion(family, k_spec, pe, radii, center=center, tol=tol,
                             strict_monotone=False, **solve_kw)
    verdict, notes = _classify_parabolicity(ex.values, thresholds)
    if not ex.converged_all:
        notes.append("some solves stopped before the residual tolerance")
    # extrapolated limit: last value minus last decrement (conservative)
    est = max(0.0, ex.values[-1] - (ex.values[-2] - ex.values[-1])) if len(ex.values) > 1 \
        else ex.values[-1]
    err = abs(ex.rows[-1][2]) if len(ex.values) > 1 else float("nan")
    return ParabolicityEvidence(exhaustion=ex, verdict=verdict, estimate=float(est),
                                err_proxy=float(err), p=pe.p, notes=notes)


@dataclass
class DpMassivenessEvidence:
    parabolicity: ParabolicityEvidence
    cap_rows: List[tuple]
    cap_bounded: bool
    verdict: str
    p: float
    notes: List[str] = field(default_factory=list)

    def summary_dict(self):
        return {
            "verdict": self.verdict,
            "omega1_parabolicity": self.parabolicity.verdict,
            "cap_rows": [list(r) for r in self.cap_rows],
            "cap_bounded": self.cap_bounded,
            "p": self.p,
            "notes": self.notes,
        }


def dp_massiveness_probe(family, omega_spec, omega1_spec, p, radii, *,
                         tol=1e-8, cap_window_factor=2,
                         thresholds: VerdictThresholds = DEFAULT_THRESHOLDS,
                         **solve_kw) -> DpMassivenessEvidence:
    """Probe the D_p-massiveness criterion for a given candidate Omega_1.

    Runs (a) a parabolicity sequence for Omega_1 as an induced subgraph and
    (b) the exhaustion sequence cap_p(Omega_1 ∩ B_R, Omega) across radii
    (窗口 shell left free: the sink is Omega^c only). Dp-massive-like
    requires Omega_1 non-parabolic-like AND a bounded (flattening) capacity
    sequence.
    """
    from .lattice import LatticeFamily
    from .setspec import resolve_set

    pe = PExponent.coerce(p)
    radii = [int(r) for r in radii]
    notes = []

    # (a) parabolicity of the induced subgraph of Omega_1
    g_big, win_big = family.window(max(radii))
    om_big = omega_spec(win_big) if callable(omega_spec) else resolve_set(omega_spec, win_big)
    om1_big = omega1_spec(win_big) if callable(omega1_spec) else resolve_set(omega1_spec, win_big)
    if not om1_big.issubset(om_big):
        raise Omega1NotSubset("Omega_1 must be a subset of Omega")
    from .graph import induced_subgraph
    g1, new_of_old, old_of_new = induced_subgraph(g_big, om1_big)
    coords = win_big.coords_of(om1_big.ids)
    seed_local = int(np.argmin(np.abs(coords).sum(axis=1)))
    from .capacity import capacity_exhaustion_on
    usable = [r for r in radii if r <= max(radii) // 2] or radii[:max(1, len(radii) - 1)]
    try:
        ex1 = capacity_exhaustion_on(g1, seed_local, VertexSet(np.array([seed_local]), g1.n),
                                     pe, usable, tol=tol, strict_monotone=False, **solve_kw)
        parab_verdict, pnotes = _classify_parabolicity(ex1.values, thresholds)
        parab = ParabolicityEvidence(exhaustion=ex1, verdict=parab_verdict,
                                     estimate=ex1.estimate, err_proxy=ex1.err_proxy,
                                     p=pe.p, notes=pnotes)
    except WindowTooSmall as e:
        parab = ParabolicityEvidence(
            exhaustion=ExhaustionResult(rows=[], estimate=float("nan"),
                                        err_proxy=float("nan"), uncertainties=[],
                                        converged_all=True),
            verdict="inconclusive", estimate=float("nan"), err_proxy=float("nan"),
            p=pe.p, notes=[f"induced parabolicity probe skipped: {e}"])

    # (b) exhaustion of cap_p(Omega_1 ∩ B_R, Omega)
    fam2 = LatticeFamily(d=family.d, w=family.w, margin=family.margin,
                         factor=cap_window_factor, vertex_budget=family.vertex_budget)
    cap_rows = []
    for R in radii:
        g, win = fam2.window(R)
        om = omega_spec(win) if callable(omega_spec) else resolve_set(omega_spec, win)
        om1 = omega1_spec(win) if callable(omega1_spec) else resolve_set(omega1_spec, win)
        if not om1.issubset(om):
            raise Omega1NotSubset("Omega_1 must be a subset of Omega")
        K = om1.intersection(win.l1_ball(R))
        Z = om.complement()
        if len(Z) == 0:
            raise ValueError("Omega must have a nonempty complement in the window")
        if len(K) == 0:
            raise ValueError("Omega_1 does not meet the ball of radius "
                             f"{R} in the window")
        cap = capacity(g, Condenser(K, Z, pe), tol=tol, **solve_kw)
        inc = cap.value - cap_rows[-1][1] if cap_rows else 0.0
        cap_rows.append((R, cap.value, inc))

    v = [r[1] for r in cap_rows]
    if len(v) >= 2 and v[-1] > 0:
        rel_inc = (v[-1] - v[-2]) / v[-1]
        bounded = rel_inc <= thresholds.growth_increment_frac
    else:
        bounded = False
        rel_inc = float("nan")
    notes.append(f"last relative increment of cap_p(Omega_1∩B_R, Omega): {rel_inc:.3g}")

    if parab.verdict == "non-parabolic-like" and bounded:
        verdict = "Dp-massive-like"
    elif parab.verdict == "parabolic-like" or (len(v) >= 2 and not bounded):
        verdict = "not-Dp-massive-like"
    else:
        verdict = "inconclusive"
    return DpMassivenessEvidence(parabolicity=parab, cap_rows=cap_rows,
                                 cap_bounded=bool(bounded), verdict=verdict,
                                 p=pe.p, notes=notes)


@dataclass
class LiouvilleReport:
    margin: float
    core_min_1: float
    core_max_2: float
    sup_omega1: float
    inf_omega1: float
    window_radius: int
    p: float
    u: np.ndarray
    warnings: List[str] = field(default_factory=list)


def _escape_potential(g, win, omega, radius, pe, tol, **solve_kw):
    """Single-window escape solve: 0 on the Omega^c side, 1 on the truncation side."""
    omega_k = omega.intersection(win.l1_ball(radius))
    bnd = vertex_boundary(g, omega_k)
    omask = omega.mask()
    data = np.zeros(g.n)
    data[bnd.ids] = np.where(omask[bnd.ids], 1.0, 0.0)
    sol = solve_dirichlet(g, omega_k, data, pe, tol=tol, **solve_kw)
    return sol


def _depth_from_complement(g, omega):
    """Hop distance to Omega^c for every vertex (0 outside omega)."""
    dist = np.zeros(g.n, dtype=np.int64)
    inside = omega.mask()
    frontier = omega.complement().ids
    d = 0
    seen = ~inside
    while frontier.size:
        d += 1
        starts = g.indptr[frontier]
        counts = g.indptr[frontier + 1] - starts
        total = int(counts.sum())
        if total == 0:
            break
        excl = np.cumsum(counts) - counts
        pos = np.repeat(starts - excl, counts) + np.arange(total)
        nxt = np.unique(g.indices[pos])
        nxt = nxt[~seen[nxt]]
        if nxt.size == 0:
            break
        seen[nxt] = True
        dist[nxt] = d
        frontier = nxt
    return dist


def liouville_construct(family, omega1_spec, omega2_spec, p, window_radius,
                        tol=1e-8, *, core_radius=None, core_depth=None,
                        thresholds: VerdictThresholds = DEFAULT_THRESHOLDS,
                        **solve_kw) -> LiouvilleReport:
    """Truncation-scale rendering of the two-massive-sets construction.

    Boundary data on the window ring is the escape potential of Omega_1
    (zero off Omega_1), mirroring the proof's use of the admissible function
    of Omega_1 as the datum pushed to infinity; the nonconstancy margin is
    min over the Omega_1 core minus max over the Omega_2 core. Cores are
    vertices deep inside each set (hop distance to the complement >=
    core_depth) within the core radius.

    Non-massive inputs are allowed: a warning is recorded and the margin is
    expected to shrink as the window grows.
    """
    from .setspec import resolve_set

    pe = PExponent.coerce(p)
    R = int(window_radius)
    g, win = family.window(R)
    om1 = omega1_spec(win) if callable(omega1_spec) else resolve_set(omega1_spec, win)
    om2 = omega2_spec(win) if callable(omega2_spec) else resolve_set(omega2_spec, win)
    if len(om2) == 0 or len(om1) == 0:
        raise ValueError("both sets must be nonempty in the window")
    if len(om1.intersection(om2)) > 0:
        raise SetsIntersect("the two sets must be disjoint")

    warn = []
    e1 = _escape_potential(g, win, om1, R, pe, tol, **solve_kw)
    e2 = _escape_potential(g, win, om2, R, pe, tol, **solve_kw)
    # massiveness sniff test: escape from a fixed core must not collapse as
    # the truncation recedes (two-radius comparison at the same probe set)
    probe_ball = win.l1_ball(max(2, R // 4))
    for name, sol, om in (("Omega_1", e1, om1), ("Omega_2", e2, om2)):
        half = _escape_potential(g, win, om, max(3, R // 2), pe, tol, **solve_kw)
        probes = om.intersection(probe_ball)
        dcomp = _depth_from_complement(g, om)
        core = probes.ids[dcomp[probes.ids] >= min(2, max(1, R // 8))]
        if core.size == 0:
            core = probes.ids
        now = float(np.nanmax(sol.u[core])) if core.size else 0.0
        before = float(np.nanmax(half.u[core])) if core.size else 0.0
        if now < 0.02 or (before > 1e-9 and now <= 0.75 * before):
            msg = (f"{name} does not look massive at this window "
                   f"(core escape {before:.3g} -> {now:.3g} as the truncation "
                   "recedes); margin is expected to vanish")
            warn.append(msg)
            _warnings.warn(msg)

    ring_ball = win.l1_ball(R - 1)
    bnd = vertex_boundary(g, ring_ball)
    data = np.zeros(g.n)
    om1_mask = om1.mask()
    e1_vals = np.where(np.isfinite(e1.u), e1.u, 0.0)
    data[bnd.ids] = np.where(om1_mask[bnd.ids], e1_vals[bnd.ids], 0.0)
    sol = solve_dirichlet(g, ring_ball, data, pe, tol=tol, **solve_kw)
    u = sol.u

    core_radius = int(core_radius) if core_radius is not None else max(2, R - 2)
    core_depth = int(core_depth) if core_depth is not None else max(2, R // 8)
    inner = win.l1_ball(min(core_radius, R - 2))
    d1 = _depth_from_complement(g, om1)
    d2 = _depth_from_complement(g, om2)
    core1 = VertexSet.from_mask(inner.mask() & om1.mask() & (d1 >= core_depth))
    core2 = VertexSet.from_mask(inner.mask() & om2.mask() & (d2 >= core_depth))
    if len(core1) == 0 or len(core2) == 0:
        raise ValueError("cores are empty; reduce core_depth or grow the window")

    core_min_1 = float(np.nanmin(u[core1.ids]))
    core_max_2 = float(np.nanmax(u[core2.ids]))
    in1 = om1.intersection(ring_ball)
    vals1 = u[in1.ids]
    vals1 = vals1[np.isfinite(vals1)]
    return LiouvilleReport(margin=core_min_1 - core_max_2,
                           core_min_1=core_min_1, core_max_2=core_max_2,
                           sup_omega1=float(vals1.max()) if vals1.size else float("nan"),
                           inf_omega1=float(vals1.min()) if vals1.size else float("nan"),
                           window_radius=R, p=pe.p, u=u, warnings=warn)


@dataclass
class GapProbeReport:
    rows: List[tuple]          # (radius, sup gap over the observation set)
    trend: str
    observe_radius: int
    p: float
    notes: List[str] = field(default_factory=list)

    def summary_dict(self):
        return {
            "rows": [list(r) for r in self.rows],
            "trend": self.trend,
            "observe_radius": self.observe_radius,
            "p": self.p,
            "notes": self.notes,
        }


def uniqueness_gap_probe(family, omega_spec, f_data, p, radii, tol=1e-8, *,
                         observe_radius=None, **solve_kw) -> GapProbeReport:
    """Minimal vs inflated exterior solutions and their sup-gap trend.

    Per radius k the minimal solution uses boundary data f on the Omega^c
    side and 0 on the truncation side; the inflated one replaces the outer 0
    by c = max f + 1 (the proof's constant). The gap is measured over
    Omega intersect B(observe_radius). A gap flattening above a positive
    floor is the massive (nonuniqueness) signature; decay toward 0 is the
    uniqueness signature.
    """
    from .setspec import resolve_set

    pe = PExponent.coerce(p)
    radii = [int(r) for r in radii]
    observe = int(observe_radius) if observe_radius is not None else radii[0]
    rows = []
    notes = []
    for k in radii:
        g, win = family.window(k)
        omega = omega_spec(win) if callable(omega_spec) else resolve_set(omega_spec, win)
        omega_k = omega.intersection(win.l1_ball(k))
        bnd = vertex_boundary(g, omega_k)
        omask = omega.mask()
        inner_side = ~omask[bnd.ids]
        if callable(f_data):
            coords = win.coords_of(bnd.ids)
            fvals = np.array([float(f_data(tuple(c))) for c in coords])
        else:
            fvals = np.full(bnd.ids.size, float(f_data))
        c = float(fvals[inner_side].max() if inner_side.any() else fvals.max()) + 1.0
        data_min = np.zeros(g.n)
        data_infl = np.zeros(g.n)
        data_min[bnd.ids] = np.where(inner_side, fvals, 0.0)
        data_infl[bnd.ids] = np.where(inner_side, fvals, c)
        u_min = solve_dirichlet(g, omega_k, data_min, pe, tol=tol, **solve_kw)
        u_infl = solve_dirichlet(g, omega_k, data_infl, pe, tol=tol, **solve_kw)
        obs = omega_k.intersection(win.l1_ball(observe))
        if len(obs) == 0:
            raise ValueError("observation set is empty; increase observe_radius")
        gap = float(np.nanmax(u_infl.u[obs.ids] - u_min.u[obs.ids]))
        rows.append((k, gap))
    gaps = np.array([r[1] for r in rows])
    if gaps.size >= 3 and np.all(gaps[1:] / np.maximum(gaps[:-1], 1e-300) <= 0.9):
        trend = "vanishing"
    elif gaps.size >= 2 and gaps[-1] > 0 and abs(gaps[-2] - gaps[-1]) <= 0.1 * gaps[-1]:
        trend = "flattening"
    else:
        trend = "inconclusive"
    return GapProbeReport(rows=rows, trend=trend, observe_radius=observe,
                          p=pe.p, notes=notes)
