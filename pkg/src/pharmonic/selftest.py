"""Invariant self-test battery, exposed via the CLI/service as `selftest`.

Checks: comparison principle, maximum principle, per-sweep energy
monotonicity, capacity monotonicity/symmetry/homogeneity, warm-start
invariance, thread-count invariance, and the Green identity gap. All run on
small graphs in a few minutes; any failure makes the battery exit nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List

import numpy as np

from .capacity import Condenser, capacity
from .graph import VertexSet
from .lattice import lattice_box
from .oracles import random_connected_graph
from .plaplace import greens_identity_check, solve_dirichlet

__all__ = ["CheckResult", "run_selftest"]

SEED = 20260810


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail}"


def _solve_setup(rng, n_lo=12, n_hi=40):
    n = int(rng.integers(n_lo, n_hi))
    g = random_connected_graph(rng, n, wmin=0.5, wmax=4.0)
    k = int(rng.integers(2, max(3, n // 4)))
    bnd = rng.choice(n, size=k, replace=False)
    free = np.setdiff1d(np.arange(n), bnd)
    return g, VertexSet(free, n), bnd


def _check_comparison(rng, reps, tol):
    worst = -np.inf
    for _ in range(reps):
        g, free, bnd = _solve_setup(rng)
        p = float(rng.choice([1.3, 2.0, 2.7]))
        f = {int(b): float(rng.normal()) for b in bnd}
        h = {b: v + abs(rng.normal()) for b, v in f.items()}
        uf = solve_dirichlet(g, free, f, p, tol=tol)
        uh = solve_dirichlet(g, free, h, p, tol=tol)
        worst = max(worst, float(np.nanmax(uf.u - uh.u)))
    passed = worst <= 1e-8
    return CheckResult("comparison_principle", passed,
                       f"max(u_f - u_h) = {worst:.2e} for f <= h")


def _check_maximum(rng, reps, tol):
    worst = 0.0
    for _ in range(reps):
        g, free, bnd = _solve_setup(rng)
        p = float(rng.choice([1.3, 2.0, 2.7]))
        f = {int(b): float(rng.normal()) for b in bnd}
        sol = solve_dirichlet(g, free, f, p, tol=tol)
        lo, hi = min(f.values()), max(f.values())
        over = max(float(np.nanmax(sol.u) - hi), float(lo - np.nanmin(sol.u)))
        worst = max(worst, over)
    passed = worst <= 1e-8
    return CheckResult("maximum_principle", passed,
                       f"max envelope violation = {worst:.2e}")


def _check_energy_monotone(rng, reps, tol):
    worst = 0.0
    for _ in range(reps):
        g, free, bnd = _solve_setup(rng)
        p = float(rng.choice([1.3, 2.0, 2.7]))
        f = {int(b): float(rng.normal()) for b in bnd}
        sol = solve_dirichlet(g, free, f, p, tol=tol, accelerate=False)
        tr = np.asarray(sol.meta["energy_trace"])
        if tr.size >= 2:
            rises = np.diff(tr)
            worst = max(worst, float(rises.max() / max(tr[0], 1e-300)))
    passed = worst <= 1e-11
    return CheckResult("energy_monotone_per_sweep", passed,
                       f"max relative per-sweep energy rise = {worst:.2e}")


def _capacity_battery(rng):
    g, win = lattice_box(2, 8)
    K = win.l1_ball(1)
    K2 = win.l1_ball(2)
    Z = win.l1_ball(6).complement()
    return g, win, K, K2, Z


def _check_capacity_monotone(rng, tol):
    g, win, K, K2, Z = _capacity_battery(rng)
    res = []
    for p in (1.5, 2.0, 3.0):
        c1 = capacity(g, Condenser(K, Z, p), tol=tol)
        c2 = capacity(g, Condenser(K2, Z, p), tol=tol)
        res.append(c2.value + c1.uncertainty + c2.uncertainty >= c1.value)
    return CheckResult("capacity_monotonicity", all(res),
                       "cap(K) <= cap(K') for K within K' at p in {1.5, 2, 3}")


def _check_capacity_symmetry(rng, tol):
    g, win, K, K2, Z = _capacity_battery(rng)
    worst = 0.0
    for p in (1.5, 2.0, 3.0):
        a = capacity(g, Condenser(K, Z, p), tol=tol)
        b = capacity(g, Condenser(Z, K, p), tol=tol)
        worst = max(worst, abs(a.value - b.value) / max(a.value, 1e-300))
    return CheckResult("capacity_symmetry", worst <= 1e-6,
                       f"max relative plate-swap gap = {worst:.2e}")


def _check_capacity_homogeneity(rng, tol):
    g, win, K, K2, Z = _capacity_battery(rng)
    from .graph import WeightedGraph

    c = 3.7
    g_scaled = WeightedGraph(g.n, g.indptr, g.indices, g.weights * c)
    worst_v = 0.0
    worst_u = 0.0
    for p in (1.5, 2.7):
        a = capacity(g, Condenser(K, Z, p), tol=tol)
        b = capacity(g_scaled, Condenser(K, Z, p), tol=tol)
        worst_v = max(worst_v, abs(b.value - c * a.value) / max(c * a.value, 1e-300))
        worst_u = max(worst_u, float(np.nanmax(np.abs(b.potential.u - a.potential.u))))
    passed = worst_v <= 1e-6 and worst_u <= 1e-6
    return CheckResult("capacity_homogeneity", passed,
                       f"value rel gap {worst_v:.2e}, potential sup gap {worst_u:.2e} under weight scaling")


def _check_warm_start(rng, tol):
    g, win, K, K2, Z = _capacity_battery(rng)
    worst = 0.0
    for p in (1.4, 2.0, 3.0):
        base = capacity(g, Condenser(K, Z, p), tol=tol)
        from .capacity import condenser_potential
        re = condenser_potential(g, Condenser(K, Z, p), tol=tol,
                                 warm_start=base.potential.u, accelerate=False)
        worst = max(worst, float(np.nanmax(np.abs(re.u - base.potential.u))))
    return CheckResult("warm_start_invariance", worst <= 1e-7,
                       f"sup change after warm-start re-solve = {worst:.2e}")


def _check_thread_invariance(rng, tol):
    import numba

    g, win, K, K2, Z = _capacity_battery(rng)
    worst = 0.0
    for p in (1.5, 2.6):
        cond = Condenser(K, Z, p)
        numba.set_num_threads(1)
        a = capacity(g, cond, tol=tol, mode="redblack")
        numba.set_num_threads(min(2, numba.config.NUMBA_NUM_THREADS))
        b = capacity(g, cond, tol=tol, mode="redblack")
        worst = max(worst, float(np.nanmax(np.abs(a.potential.u - b.potential.u))))
    return CheckResult("thread_count_invariance", worst <= 1e-13,
                       f"sup potential gap between 1 and 2 threads = {worst:.2e}")


def _check_greens(rng, reps):
    worst = 0.0
    for _ in range(reps):
        d = int(rng.integers(3, 7))
        g, win = lattice_box(2, d, 1.0)
        f = rng.normal(size=g.n)
        h = rng.normal(size=g.n)
        ids = rng.choice(g.n, size=g.n // 2, replace=False)
        om = VertexSet(ids, g.n)
        p = float(rng.choice([1.4, 2.5, 3.0]))
        _, _, gap = greens_identity_check(g, om, f, h, p)
        worst = max(worst, gap)
    return CheckResult("greens_identity", worst <= 1e-10,
                       f"max absolute gap = {worst:.2e}")


def run_selftest(level="full", seed=SEED) -> List[CheckResult]:
    """Run the invariant battery; `level="quick"` shrinks repetition counts."""
    rng = np.random.Generator(np.random.Philox(seed))
    reps = 8 if level == "full" else 3
    tol = 1e-11
    checks = [
        _check_comparison(rng, reps, tol),
        _check_maximum(rng, reps, tol),
        _check_energy_monotone(rng, reps, tol),
        _check_capacity_monotone(rng, tol),
        _check_capacity_symmetry(rng, tol),
        _check_capacity_homogeneity(rng, tol),
        _check_warm_start(rng, tol),
        _check_thread_invariance(rng, tol),
        _check_greens(rng, reps),
    ]
    return checks
