"""File formats: pgraph v1 edge lists, vertex-set files, and CSV renderers.

pgraph v1::

    pgraph v1 <n>
    x y weight        # one line per undirected edge, ASCII decimal

Vertex sets are one id per line. CSV renderers return strings; a
"# generated: <timestamp>" comment header is included unless deterministic
output is requested.
"""

from __future__ import annotations

import datetime
import math
from typing import Iterable

import numpy as np

from .errors import FormatError
from .graph import VertexSet, WeightedGraph, build_graph

__all__ = [
    "write_pgraph",
    "read_pgraph",
    "write_vertex_set",
    "read_vertex_set",
    "potential_csv",
    "sequence_csv",
]


def _fmt(x):
    """Shortest round-trip decimal for a float."""
    return repr(float(x))


def write_pgraph(path, g: WeightedGraph):
    with open(path, "w") as fh:
        fh.write(f"pgraph v1 {g.n}\n")
        rows = g.directed_rows()
        keep = rows < g.indices
        for x, y, w in zip(rows[keep], g.indices[keep], g.weights[keep]):
            fh.write(f"{x} {y} {_fmt(w)}\n")


def read_pgraph(path) -> WeightedGraph:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 3 or header[0] != "pgraph" or header[1] != "v1":
            raise FormatError("expected header 'pgraph v1 <n>'")
        try:
            n = int(header[2])
        except ValueError as e:
            raise FormatError(f"bad vertex count {header[2]!r}") from e
        xs, ys, ws = [], [], []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"line {lineno}: expected 'x y weight'")
            try:
                xs.append(int(parts[0]))
                ys.append(int(parts[1]))
                ws.append(float(parts[2]))
            except ValueError as e:
                raise FormatError(f"line {lineno}: {e}") from e
    return build_graph((np.array(xs, dtype=np.int64),
                        np.array(ys, dtype=np.int64),
                        np.array(ws)), n)


def write_vertex_set(path, vs: VertexSet):
    with open(path, "w") as fh:
        for i in vs.ids:
            fh.write(f"{i}\n")


def read_vertex_set(path, n) -> VertexSet:
    ids = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                ids.append(int(line))
            except ValueError as e:
                raise FormatError(f"line {lineno}: {e}") from e
    return VertexSet(np.array(ids, dtype=np.int64), n)


def _header_lines(deterministic):
    if deterministic:
        return []
    ts = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return [f"# generated: {ts}"]


def potential_csv(solution, deterministic=False) -> str:
    """CSV `vertex,u,residual` over vertices where the potential is defined."""
    lines = _header_lines(deterministic)
    lines.append("vertex,u,residual")
    u = solution.u
    res = solution.meta.get("residuals")
    for v in np.flatnonzero(np.isfinite(u)):
        r = res[v] if res is not None and math.isfinite(res[v]) else 0.0
        lines.append(f"{v},{_fmt(u[v])},{_fmt(r)}")
    return "\n".join(lines) + "\n"


def sequence_csv(rows: Iterable, deterministic=False, header="R,value,increment") -> str:
    """CSV for (R, value, increment) sequences."""
    lines = _header_lines(deterministic)
    lines.append(header)
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(lines) + "\n"
