"""Independent correctness oracles.

Three deliberately separate code paths from the production solver:

* :func:`linear_dirichlet_p2` — the p=2 problem as a sparse linear system
  (scipy direct/CG; no numba, no AMG warm start).
* :func:`bruteforce_condenser` — coordinate descent with golden-section line
  minimization on tiny condensers, multi-start.
* :func:`mc_escape_probability` — mu-weighted random walks (counter-based
  Philox streams, reproducible).
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np

from .errors import TooManyFreeVertices, X0OutsideOmega
from .graph import vertex_boundary
from .plaplace import as_vertex_set

__all__ = [
    "OracleResult",
    "MCEstimate",
    "linear_dirichlet_p2",
    "bruteforce_condenser",
    "mc_escape_probability",
    "random_connected_graph",
]

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class OracleResult:
    value: float
    method: str
    tol: float
    spread: float = 0.0
    samples: int = 0
    stderr: float = 0.0
    detail: dict = field(default_factory=dict)


def linear_dirichlet_p2(g, omega, boundary_data):
    """Exact p=2 Dirichlet solve via scipy sparse linear algebra.

    Returns the full-length solution array (boundary values filled, NaN
    outside the closure). Residual of the linear system is driven below
    1e-12; independent of the nonlinear sweep kernels.
    """
    import scipy.sparse as sp
    import scipy.sparse.linalg as spla

    omega = as_vertex_set(g, omega)
    bnd = vertex_boundary(g, omega)
    if len(bnd) == 0:
        raise ValueError("free set has no boundary")
    if callable(boundary_data):
        data = np.array([float(boundary_data(int(v))) for v in bnd.ids])
    elif isinstance(boundary_data, dict):
        data = np.array([float(boundary_data[int(v)]) for v in bnd.ids])
    else:
        data = np.asarray(boundary_data, dtype=np.float64)[bnd.ids]

    u = np.full(g.n, np.nan)
    u[bnd.ids] = data
    A = sp.csr_matrix((g.weights, g.indices, g.indptr), shape=(g.n, g.n))
    free = omega.ids
    Af = A[free]
    deg = np.asarray(Af.sum(axis=1)).ravel()
    mask = np.zeros(g.n)
    mask[bnd.ids] = data
    b = Af @ mask
    Lff = (sp.diags(deg) - Af[:, free]).tocsr()
    if free.size <= 60_000:
        x = spla.spsolve(Lff, b)
    else:
        M = sp.diags(1.0 / Lff.diagonal())
        x, info = spla.cg(Lff, b, M=M, rtol=1e-13, atol=0.0, maxiter=20 * free.size)
        if info != 0:
            raise RuntimeError(f"CG did not converge (info={info})")
    resid = np.abs(Lff @ x - b)
    scale = max(1.0, float(np.abs(b).max()))
    if resid.max() > 1e-10 * scale:
        # one refinement pass
        dx = spla.spsolve(Lff, b - Lff @ x) if free.size <= 60_000 else 0.0
        x = x + dx
    u[free] = x
    return u


def _condenser_energy(g, u, p):
    """Full-graph p-energy by direct loop; local to the oracle on purpose."""
    total = 0.0
    for x in range(g.n):
        for e in range(g.indptr[x], g.indptr[x + 1]):
            y = g.indices[e]
            if y > x:
                d = u[y] - u[x]
                total += g.weights[e] * abs(d) ** p
    return total


def bruteforce_condenser(g, cond, seed=1234) -> OracleResult:
    """Minimize the condenser energy by coordinate descent with golden section.

    Requires at most 12 free vertices. Runs from the mean start plus five
    random starts; convexity makes all runs agree (spread reported, expected
    <= 1e-8).
    """
    plates = cond.source.union(cond.sink)
    free = plates.complement()
    if len(free) > 12:
        raise TooManyFreeVertices(f"{len(free)} free vertices exceeds the brute-force cap of 12")
    p = cond.p.p
    base = np.zeros(g.n)
    base[cond.source.ids] = 1.0

    rng = np.random.Generator(np.random.Philox(seed))
    starts = [np.full(len(free), 0.5)]
    for _ in range(5):
        starts.append(rng.uniform(0.0, 1.0, size=len(free)))

    def line_min(u, x):
        lo = float(u[g.indices[g.indptr[x]:g.indptr[x + 1]]].min()) if g.indptr[x + 1] > g.indptr[x] else u[x]
        hi = float(u[g.indices[g.indptr[x]:g.indptr[x + 1]]].max()) if g.indptr[x + 1] > g.indptr[x] else u[x]
        if hi - lo <= 0:
            return lo

        def local(t):
            s = 0.0
            for e in range(g.indptr[x], g.indptr[x + 1]):
                s += g.weights[e] * abs(u[g.indices[e]] - t) ** p
            return s

        a, b = lo, hi
        c = b - GOLDEN * (b - a)
        d = a + GOLDEN * (b - a)
        fc, fd = local(c), local(d)
        while b - a > 1e-12:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - GOLDEN * (b - a)
                fc = local(c)
            else:
                a, c, fc = c, d, fd
                d = a + GOLDEN * (b - a)
                fd = local(d)
        return 0.5 * (a + b)

    best = []
    for s in starts:
        u = base.copy()
        u[free.ids] = s
        prev = _condenser_energy(g, u, p)
        for _ in range(500):
            for x in free.ids:
                u[x] = line_min(u, x)
            now = _condenser_energy(g, u, p)
            if prev - now <= 1e-14 * max(1.0, abs(now)):
                break
            prev = now
        best.append(now)
    best = np.array(best)
    return OracleResult(value=float(best.min()), method="coordinate-descent",
                        tol=1e-12, spread=float(best.max() - best.min()),
                        detail={"starts": len(starts), "seed": seed})


@dataclass
class MCEstimate:
    radius: int
    p_hat: float
    stderr: float
    samples: int
    censored: int


def mc_escape_probability(g, omega, x0, samples, horizon_radii, seed=2718,
                          max_steps_factor=200) -> list:
    """Estimate P(walk from x0 reaches hop radius R before hitting omega^c).

    mu-weighted nearest-neighbor walk; one Philox stream per run, seed
    recorded in the results. Walks still alive after max_steps_factor * R^2
    steps are counted as absorbed and reported as censored.
    """
    omega = as_vertex_set(g, omega)
    if x0 not in omega:
        raise X0OutsideOmega(f"start vertex {x0} is not in omega")
    absorbing = omega.complement().mask()
    dist = _hop_distances(g, x0)
    cumw = np.cumsum(g.weights)
    base = np.concatenate(([0.0], cumw))[g.indptr[:-1]]
    mu = g.canonical_measure

    out = []
    for R in sorted(int(r) for r in horizon_radii):
        rng = np.random.Generator(np.random.Philox(key=[seed, R]))
        pos = np.full(samples, x0, dtype=np.int64)
        alive = np.ones(samples, dtype=bool)
        escaped = np.zeros(samples, dtype=bool)
        max_steps = max_steps_factor * R * R
        for _ in range(max_steps):
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            v = pos[idx]
            r = rng.random(idx.size) * mu[v]
            e = np.searchsorted(cumw, base[v] + r, side="right")
            nxt = g.indices[e]
            pos[idx] = nxt
            hit = absorbing[nxt]
            far = dist[nxt] >= R
            escaped[idx[far & ~hit]] = True
            alive[idx] = ~(hit | far)
        censored = int(alive.sum())
        p_hat = float(escaped.sum()) / samples
        stderr = float(np.sqrt(max(p_hat * (1 - p_hat), 1.0 / samples) / samples))
        out.append(MCEstimate(radius=R, p_hat=p_hat, stderr=stderr,
                              samples=samples, censored=censored))
    return out


def _hop_distances(g, x0):
    dist = np.full(g.n, np.iinfo(np.int64).max, dtype=np.int64)
    dist[x0] = 0
    frontier = np.array([x0], dtype=np.int64)
    d = 0
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
        nxt = nxt[dist[nxt] > d]
        if nxt.size == 0:
            break
        dist[nxt] = d
        frontier = nxt
    return dist


def random_connected_graph(rng, n, extra_edges=None, wmin=0.1, wmax=10.0):
    """Random connected weighted graph: random attachment tree + extra edges.

    Used by the oracle-equivalence battery and the self-test suite.
    """
    from .graph import build_graph

    if n < 2:
        raise ValueError("need at least two vertices")
    if extra_edges is None:
        extra_edges = n // 2
    edges = {}
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges[(u, v)] = float(rng.uniform(wmin, wmax))
    tries = 0
    while len(edges) < n - 1 + extra_edges and tries < 20 * extra_edges + 20:
        a = int(rng.integers(0, n))
        b = int(rng.integers(0, n))
        tries += 1
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key in edges:
            continue
        edges[key] = float(rng.uniform(wmin, wmax))
    return build_graph([(a, b, w) for (a, b), w in edges.items()], n)
