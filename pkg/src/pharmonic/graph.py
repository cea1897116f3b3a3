"""Weighted-graph data model, hop metric, and vertex-set calculus.

The graph is a symmetric weighted adjacency stored in CSR form (both
directions of every undirected edge are present). The canonical vertex
measure mu(x) = sum_{y~x} mu_xy is cached at build time and is the default
vertex measure; an explicit override is allowed but only changes the
normalization of the p-Laplacian, never energies or capacities.

Graphs are immutable after construction and safe for concurrent reads.
"""

from __future__ import annotations

import math
import numpy as np

from .errors import (
    DuplicateEdge,
    IdOutOfRange,
    NonPositiveWeight,
    SelfLoop,
    XNotInSet,
)

__all__ = [
    "WeightedGraph",
    "VertexSet",
    "build_graph",
    "graph_distance",
    "ball",
    "vertex_boundary",
    "edge_boundary",
    "closure",
    "component_of",
    "components",
    "check_p0",
    "induced_subgraph",
]


class WeightedGraph:
    """Immutable symmetric weighted graph in CSR layout.

    Attributes
    ----------
    n : int
        Number of vertices (dense ids 0..n-1).
    indptr, indices, weights : numpy arrays
        CSR adjacency; every undirected edge appears in both row x and row y
        with the same positive weight.
    vertex_measure : numpy array, float
        Vertex measure m(x). Defaults to the canonical measure
        mu(x) = sum of incident edge weights.
    """

    __slots__ = ("n", "indptr", "indices", "weights", "vertex_measure", "_mu", "_rows")

    def __init__(self, n, indptr, indices, weights, vertex_measure=None):
        self.n = int(n)
        self.indptr = np.ascontiguousarray(indptr, dtype=np.int64)
        self.indices = np.ascontiguousarray(indices, dtype=np.int64)
        self.weights = np.ascontiguousarray(weights, dtype=np.float64)
        self._rows = None
        mu = np.zeros(self.n)
        if self.indices.size:
            np.add.at(mu, self._row_ids(), self.weights)
        self._mu = mu
        if vertex_measure is None:
            self.vertex_measure = self._mu
        else:
            vm = np.ascontiguousarray(vertex_measure, dtype=np.float64)
            if vm.shape != (self.n,) or not np.all(vm > 0):
                raise ValueError("vertex_measure must be positive with length n")
            self.vertex_measure = vm
        for a in (self.indptr, self.indices, self.weights, self._mu):
            a.setflags(write=False)

    def _row_ids(self):
        counts = np.diff(self.indptr)
        return np.repeat(np.arange(self.n, dtype=np.int64), counts)

    @property
    def canonical_measure(self):
        """mu(x) = sum of incident edge weights, cached at build time."""
        return self._mu

    @property
    def edge_count(self):
        return self.indices.size // 2

    def neighbors(self, x):
        return self.indices[self.indptr[x]:self.indptr[x + 1]]

    def neighbor_weights(self, x):
        return self.weights[self.indptr[x]:self.indptr[x + 1]]

    def directed_rows(self):
        """Row index of every directed CSR entry (length = 2 * edge_count)."""
        if self._rows is None:
            rows = self._row_ids()
            rows.setflags(write=False)
            self._rows = rows
        return self._rows

    def __repr__(self):
        return f"WeightedGraph(n={self.n}, edges={self.edge_count})"


class VertexSet:
    """Sorted, duplicate-free set of vertex ids bound to a graph size.

    Supports the usual set algebra plus mask conversion. Construction
    validates ids against the graph's vertex count.
    """

    __slots__ = ("ids", "n")

    def __init__(self, ids, n, *, _checked=False):
        arr = np.asarray(ids, dtype=np.int64)
        if not _checked:
            arr = np.unique(arr)
            if arr.size and (arr[0] < 0 or arr[-1] >= n):
                raise IdOutOfRange(f"vertex ids outside [0, {n})")
        self.ids = arr
        self.n = int(n)
        self.ids.setflags(write=False)

    @classmethod
    def from_mask(cls, mask):
        mask = np.asarray(mask, dtype=bool)
        return cls(np.flatnonzero(mask), mask.size, _checked=True)

    @classmethod
    def empty(cls, g_or_n):
        n = g_or_n.n if isinstance(g_or_n, WeightedGraph) else int(g_or_n)
        return cls(np.empty(0, dtype=np.int64), n, _checked=True)

    @classmethod
    def full(cls, g_or_n):
        n = g_or_n.n if isinstance(g_or_n, WeightedGraph) else int(g_or_n)
        return cls(np.arange(n, dtype=np.int64), n, _checked=True)

    def mask(self):
        m = np.zeros(self.n, dtype=bool)
        m[self.ids] = True
        return m

    def union(self, other):
        self._check(other)
        return VertexSet(np.union1d(self.ids, other.ids), self.n, _checked=True)

    def intersection(self, other):
        self._check(other)
        return VertexSet(np.intersect1d(self.ids, other.ids, assume_unique=True),
                         self.n, _checked=True)

    def difference(self, other):
        self._check(other)
        return VertexSet(np.setdiff1d(self.ids, other.ids, assume_unique=True),
                         self.n, _checked=True)

    def complement(self):
        m = ~self.mask()
        return VertexSet.from_mask(m)

    def issubset(self, other):
        self._check(other)
        return np.isin(self.ids, other.ids, assume_unique=True).all()

    def _check(self, other):
        if self.n != other.n:
            raise ValueError("vertex sets belong to different graphs")

    def __contains__(self, x):
        i = np.searchsorted(self.ids, x)
        return i < self.ids.size and self.ids[i] == x

    def __len__(self):
        return int(self.ids.size)

    def __iter__(self):
        return iter(self.ids.tolist())

    def __eq__(self, other):
        return (isinstance(other, VertexSet) and self.n == other.n
                and np.array_equal(self.ids, other.ids))

    def __hash__(self):
        return hash((self.n, self.ids.tobytes()))

    def __repr__(self):
        return f"VertexSet(|S|={len(self)}, n={self.n})"


def build_graph(edges, vertex_count, vertex_measure=None):
    """Build a :class:`WeightedGraph` from an undirected edge list.

    Parameters
    ----------
    edges : iterable of (x, y, weight) or tuple of three arrays
        Undirected edges; each unordered pair may appear once.
    vertex_count : int
        Number of vertices.

    Raises
    ------
    NonPositiveWeight, SelfLoop, DuplicateEdge, IdOutOfRange
    """
    n = int(vertex_count)
    if n <= 0:
        raise IdOutOfRange("vertex_count must be positive")
    if isinstance(edges, tuple) and len(edges) == 3:
        xs, ys, ws = (np.asarray(a) for a in edges)
    else:
        rows = list(edges)
        if rows:
            xs = np.array([r[0] for r in rows])
            ys = np.array([r[1] for r in rows])
            ws = np.array([r[2] for r in rows], dtype=np.float64)
        else:
            xs = ys = np.empty(0, dtype=np.int64)
            ws = np.empty(0, dtype=np.float64)
    xs = xs.astype(np.int64)
    ys = ys.astype(np.int64)
    ws = ws.astype(np.float64)

    if xs.size:
        if xs.min() < 0 or ys.min() < 0 or xs.max() >= n or ys.max() >= n:
            bad = np.flatnonzero((xs < 0) | (ys < 0) | (xs >= n) | (ys >= n))[0]
            raise IdOutOfRange(f"edge ({xs[bad]}, {ys[bad]}) outside [0, {n})")
        if np.any(xs == ys):
            bad = np.flatnonzero(xs == ys)[0]
            raise SelfLoop(f"self-loop at vertex {xs[bad]}")
        if not np.all(np.isfinite(ws) & (ws > 0)):
            bad = np.flatnonzero(~(np.isfinite(ws) & (ws > 0)))[0]
            raise NonPositiveWeight(f"edge ({xs[bad]}, {ys[bad]}) has weight {ws[bad]}")
        lo = np.minimum(xs, ys)
        hi = np.maximum(xs, ys)
        key = lo * n + hi
        uniq, counts = np.unique(key, return_counts=True)
        if np.any(counts > 1):
            k = uniq[np.argmax(counts > 1)]
            raise DuplicateEdge(f"edge ({k // n}, {k % n}) appears more than once")

    src = np.concatenate([xs, ys])
    dst = np.concatenate([ys, xs])
    wts = np.concatenate([ws, ws])
    order = np.lexsort((dst, src))
    src, dst, wts = src[order], dst[order], wts[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return WeightedGraph(n, indptr, dst, wts, vertex_measure=vertex_measure)


def _gather_neighbors(g, vertices):
    """Concatenated neighbor ids of `vertices` (with repetitions)."""
    starts = g.indptr[vertices]
    counts = g.indptr[vertices + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    excl = np.cumsum(counts) - counts
    pos = np.repeat(starts - excl, counts) + np.arange(total)
    return g.indices[pos]


def graph_distance(g, x, y):
    """Hop distance between x and y; ``math.inf`` when unreachable."""
    if x == y:
        return 0
    seen = np.zeros(g.n, dtype=bool)
    seen[x] = True
    frontier = np.array([x], dtype=np.int64)
    d = 0
    while frontier.size:
        d += 1
        nxt = _gather_neighbors(g, frontier)
        nxt = nxt[~seen[nxt]]
        if nxt.size == 0:
            break
        nxt = np.unique(nxt)
        seen[nxt] = True
        if seen[y]:
            return d
        frontier = nxt
    return math.inf


def ball(g, center, r):
    """Closed hop-metric ball B(center, r) as a :class:`VertexSet`."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    seen = np.zeros(g.n, dtype=bool)
    seen[center] = True
    frontier = np.array([center], dtype=np.int64)
    for _ in range(int(r)):
        nxt = _gather_neighbors(g, frontier)
        nxt = nxt[~seen[nxt]]
        if nxt.size == 0:
            break
        nxt = np.unique(nxt)
        seen[nxt] = True
        frontier = nxt
    return VertexSet.from_mask(seen)


def vertex_boundary(g, omega):
    """Vertices outside omega adjacent to omega."""
    nbrs = _gather_neighbors(g, omega.ids)
    m = np.zeros(g.n, dtype=bool)
    m[nbrs] = True
    m[omega.ids] = False
    return VertexSet.from_mask(m)


def edge_boundary(g, omega):
    """Crossing edges, oriented from omega: arrays (x, y, weight).

    Each crossing edge is listed exactly once with x in omega and y outside.
    """
    inside = omega.mask()
    starts = g.indptr[omega.ids]
    counts = g.indptr[omega.ids + 1] - starts
    total = int(counts.sum())
    if total == 0:
        return (np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0, float))
    excl = np.cumsum(counts) - counts
    pos = np.repeat(starts - excl, counts) + np.arange(total)
    xs = np.repeat(omega.ids, counts)
    ys = g.indices[pos]
    ws = g.weights[pos]
    keep = ~inside[ys]
    return xs[keep], ys[keep], ws[keep]


def closure(g, omega):
    """omega together with its vertex boundary."""
    return omega.union(vertex_boundary(g, omega))


def component_of(g, omega, x):
    """Connected component of x in the subgraph induced on omega."""
    inside = omega.mask()
    if not inside[x]:
        raise XNotInSet(f"vertex {x} not in the given set")
    seen = np.zeros(g.n, dtype=bool)
    seen[x] = True
    frontier = np.array([x], dtype=np.int64)
    while frontier.size:
        nxt = _gather_neighbors(g, frontier)
        nxt = nxt[inside[nxt] & ~seen[nxt]]
        if nxt.size == 0:
            break
        nxt = np.unique(nxt)
        seen[nxt] = True
        frontier = nxt
    return VertexSet.from_mask(seen)


def components(g, omega):
    """All connected components of the subgraph induced on omega."""
    remaining = omega.mask()
    out = []
    while remaining.any():
        x = int(np.argmax(remaining))
        comp = component_of(g, VertexSet.from_mask(remaining), x)
        out.append(comp)
        remaining[comp.ids] = False
    return out


def check_p0(g):
    """Smallest p0 such that mu_xy / mu(x) >= 1/p0 on every directed edge.

    Returns max over directed edges of mu(x) / mu_xy; the graph satisfies the
    uniform-ellipticity condition with any p0 at least this value.
    """
    if g.indices.size == 0:
        raise ValueError("check_p0 needs at least one edge")
    mu_rows = np.repeat(g.canonical_measure, np.diff(g.indptr))
    return float(np.max(mu_rows / g.weights))


def induced_subgraph(g, keep):
    """Subgraph induced on `keep`, with dense renumbering.

    Returns ``(sub, new_of_old, old_of_new)`` where ``new_of_old`` maps old
    ids to new ids (-1 outside) and ``old_of_new`` is the inverse array.
    Vertex order (hence solver visitation order) follows old-id order.
    """
    ids = keep.ids if isinstance(keep, VertexSet) else np.unique(np.asarray(keep, dtype=np.int64))
    new_of_old = np.full(g.n, -1, dtype=np.int64)
    new_of_old[ids] = np.arange(ids.size)
    starts = g.indptr[ids]
    counts = g.indptr[ids + 1] - starts
    total = int(counts.sum())
    excl = np.cumsum(counts) - counts
    pos = np.repeat(starts - excl, counts) + np.arange(total) if total else np.empty(0, np.int64)
    cols = g.indices[pos]
    wts = g.weights[pos]
    keep_e = new_of_old[cols] >= 0
    cols = new_of_old[cols[keep_e]]
    wts = wts[keep_e]
    row_counts = np.zeros(ids.size, dtype=np.int64)
    if total:
        rows_rep = np.repeat(np.arange(ids.size), counts)
        np.add.at(row_counts, rows_rep[keep_e], 1)
    indptr = np.concatenate(([0], np.cumsum(row_counts)))
    vm = None
    if g.vertex_measure is not g.canonical_measure:
        vm = g.vertex_measure[ids]
    sub = WeightedGraph(ids.size, indptr, cols, wts, vertex_measure=vm)
    return sub, new_of_old, ids.copy()
