"""Z^d lattice windows and the example set families (thorns, cylinders, axes).

A window is the L-infinity box {-R..R}^d with nearest-neighbor edges of a
constant weight (default 1/(2d), which makes the canonical measure of every
interior vertex exactly 1). Infinite-lattice experiments are rendered on
growing windows; the window radius is always carried along in results.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import SizeOverflow
from .graph import VertexSet, WeightedGraph

__all__ = [
    "LatticeWindow",
    "LatticeFamily",
    "lattice_box",
    "thorn_set",
    "cylinder_set",
    "axis_set",
]

DEFAULT_VERTEX_BUDGET = 80_000_000


@dataclass(frozen=True)
class LatticeWindow:
    """Coordinate <-> id bijection for the box {-R..R}^d."""

    d: int
    R: int
    w: float

    @property
    def side(self):
        return 2 * self.R + 1

    @property
    def n(self):
        return self.side ** self.d

    def id_of(self, coords):
        """Dense id of one coordinate tuple or an (m, d) array of them."""
        c = np.asarray(coords, dtype=np.int64)
        single = c.ndim == 1
        c = np.atleast_2d(c)
        if c.shape[1] != self.d:
            raise ValueError(f"expected {self.d} coordinates")
        if np.any(np.abs(c) > self.R):
            raise ValueError("coordinate outside the window")
        ids = np.zeros(c.shape[0], dtype=np.int64)
        for ax in range(self.d):
            ids = ids * self.side + (c[:, ax] + self.R)
        return int(ids[0]) if single else ids

    def coords_of(self, ids):
        """Inverse of :meth:`id_of`; returns an (m, d) int array."""
        v = np.atleast_1d(np.asarray(ids, dtype=np.int64)).copy()
        out = np.empty((v.size, self.d), dtype=np.int64)
        for ax in range(self.d - 1, -1, -1):
            out[:, ax] = v % self.side - self.R
            v //= self.side
        return out

    @property
    def origin(self):
        return self.id_of(np.zeros(self.d, dtype=np.int64))

    def all_coords(self):
        """Coordinates of every window vertex, id order, shape (n, d)."""
        return self.coords_of(np.arange(self.n))

    def shell(self):
        """Vertices on the truncation boundary (L-infinity norm == R)."""
        c = self.all_coords()
        return VertexSet.from_mask(np.abs(c).max(axis=1) == self.R)

    def l1_ball(self, r, center=None):
        """Vertices with L1 distance <= r from `center` (hop-metric ball)."""
        c = self.all_coords()
        if center is not None:
            c = c - np.asarray(center, dtype=np.int64)
        return VertexSet.from_mask(np.abs(c).sum(axis=1) <= r)


def lattice_box(d, R, w=None, vertex_budget=DEFAULT_VERTEX_BUDGET):
    """Build the Z^d window graph on {-R..R}^d.

    Edge weight defaults to 1/(2d). Raises :class:`SizeOverflow` when the
    vertex count exceeds `vertex_budget`.
    """
    if d < 1 or R < 1:
        raise ValueError("need d >= 1 and R >= 1")
    if w is None:
        w = 1.0 / (2 * d)
    if w <= 0:
        raise ValueError("edge weight must be positive")
    side = 2 * R + 1
    n = side ** d
    if n > vertex_budget:
        raise SizeOverflow(f"({side})^{d} = {n} vertices exceeds budget {vertex_budget}")
    win = LatticeWindow(d=d, R=R, w=float(w))
    ids = np.arange(n, dtype=np.int64)
    coords = win.coords_of(ids)
    srcs = []
    dsts = []
    stride = 1
    for ax in range(d - 1, -1, -1):
        m = coords[:, ax] < R
        srcs.append(ids[m])
        dsts.append(ids[m] + stride)
        stride *= side
    src = np.concatenate(srcs)
    dst = np.concatenate(dsts)
    src_all = np.concatenate([src, dst])
    dst_all = np.concatenate([dst, src])
    w_all = np.full(src_all.size, float(w))
    order = np.lexsort((dst_all, src_all))
    src_all, dst_all, w_all = src_all[order], dst_all[order], w_all[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src_all + 1, 1)
    indptr = np.cumsum(indptr)
    g = WeightedGraph(n, indptr, dst_all, w_all)
    return g, win


def _f_table(window, f, f_squared):
    """Squared-threshold lookup for x1 in 0..R, exact when possible."""
    xs = np.arange(window.R + 1, dtype=np.int64)
    if f_squared is not None:
        tab = np.asarray([float(f_squared(int(v))) for v in xs])
    else:
        vals = np.asarray([float(f(int(v))) for v in xs])
        if np.any(vals < 0):
            raise ValueError("thorn profile must be nonnegative")
        if np.any(np.diff(vals) < 0):
            raise ValueError("thorn profile must be nondecreasing")
        tab = vals * vals
    return tab


def thorn_set(window, f, f_squared=None):
    """Thorn {(x1, x') : x1 >= 0, ||x'|| <= f(x1)} inside the window.

    ``||x'||`` is the Euclidean norm on the remaining d-1 coordinates.
    Membership compares ||x'||^2 <= f(x1)^2; pass `f_squared` to make the
    comparison exact for rational profiles (e.g. f(n) = sqrt(n) uses
    f_squared(n) = n).
    """
    c = window.all_coords()
    x1 = c[:, 0]
    rsq = (c[:, 1:] ** 2).sum(axis=1).astype(np.float64)
    tab = _f_table(window, f, f_squared)
    mask = x1 >= 0
    mask[mask] = rsq[mask] <= tab[x1[mask]]
    return VertexSet.from_mask(mask)


def cylinder_set(window, h, r):
    """Cylinder {(x1, x') : 0 <= x1 <= h, ||x'|| <= r}."""
    if h < 0 or r < 0 or h > window.R or r > window.R:
        raise ValueError("need 0 <= h, r <= R")
    c = window.all_coords()
    x1 = c[:, 0]
    rsq = (c[:, 1:] ** 2).sum(axis=1)
    return VertexSet.from_mask((x1 >= 0) & (x1 <= h) & (rsq <= r * r))


def axis_set(window):
    """The full first coordinate axis (both signs) inside the window."""
    c = window.all_coords()
    rsq = (c[:, 1:] ** 2).sum(axis=1) if window.d > 1 else np.zeros(window.n, dtype=np.int64)
    return VertexSet.from_mask(rsq == 0)


@dataclass(frozen=True)
class LatticeFamily:
    """Provider of growing Z^d windows for exhaustion-style drivers.

    ``window(R)`` returns the box of radius ``factor*R + margin`` so a ball
    of radius R always has its vertex boundary inside the window.
    """

    d: int
    w: Optional[float] = None
    margin: int = 1
    factor: int = 1
    vertex_budget: int = DEFAULT_VERTEX_BUDGET

    def window(self, R):
        return lattice_box(self.d, self.factor * int(R) + self.margin,
                           w=self.w, vertex_budget=self.vertex_budget)
