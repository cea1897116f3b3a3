import numpy as np
import pytest

import pharmonic as ph
from pharmonic.errors import FormatError
from pharmonic.io import (
    potential_csv,
    read_pgraph,
    read_vertex_set,
    sequence_csv,
    write_pgraph,
    write_vertex_set,
)


class TestPgraphFormat:
    def test_roundtrip(self, tmp_path):
        rng = np.random.Generator(np.random.Philox(9))
        g = ph.random_connected_graph(rng, 25)
        path = tmp_path / "g.pgraph"
        write_pgraph(path, g)
        g2 = read_pgraph(path)
        assert g2.n == g.n
        assert np.array_equal(g2.indptr, g.indptr)
        assert np.array_equal(g2.indices, g.indices)
        assert np.array_equal(g2.weights, g.weights)

    def test_header_line(self, tmp_path):
        g = ph.build_graph([(0, 1, 0.125)], 2)
        path = tmp_path / "g.pgraph"
        write_pgraph(path, g)
        text = path.read_text().splitlines()
        assert text[0] == "pgraph v1 2"
        assert text[1] == "0 1 0.125"

    def test_bad_header(self, tmp_path):
        p = tmp_path / "bad.pgraph"
        p.write_text("nonsense\n")
        with pytest.raises(FormatError):
            read_pgraph(p)

    def test_bad_edge_line(self, tmp_path):
        p = tmp_path / "bad.pgraph"
        p.write_text("pgraph v1 3\n0 1\n")
        with pytest.raises(FormatError):
            read_pgraph(p)

    def test_duplicate_edge_detected(self, tmp_path):
        p = tmp_path / "dup.pgraph"
        p.write_text("pgraph v1 3\n0 1 1.0\n1 0 2.0\n")
        with pytest.raises(ph.PharmonicError):
            read_pgraph(p)


class TestVertexSetFile:
    def test_roundtrip(self, tmp_path):
        vs = ph.VertexSet([3, 1, 7], 10)
        path = tmp_path / "s.ids"
        write_vertex_set(path, vs)
        assert read_vertex_set(path, 10) == vs


class TestCsv:
    def test_potential_csv_columns(self):
        g = ph.build_graph([(0, 1, 1.0), (1, 2, 1.0)], 3)
        sol = ph.solve_dirichlet(g, ph.VertexSet([1], 3), {0: 0.0, 2: 1.0}, 2.0)
        text = potential_csv(sol, deterministic=True)
        lines = text.strip().split("\n")
        assert lines[0] == "vertex,u,residual"
        assert len(lines) == 4
        assert lines[2].startswith("1,0.5")

    def test_timestamp_header_toggle(self):
        g = ph.build_graph([(0, 1, 1.0)], 2)
        c = ph.Condenser(ph.VertexSet([0], 2), ph.VertexSet([1], 2), 2.0)
        pot = ph.condenser_potential(g, c)
        with_ts = potential_csv(pot, deterministic=False)
        without = potential_csv(pot, deterministic=True)
        assert with_ts.startswith("# generated:")
        assert not without.startswith("#")

    def test_sequence_csv(self):
        text = sequence_csv([(2, 0.5, 0.0), (4, 0.25, -0.25)], deterministic=True)
        assert text == "R,value,increment\n2,0.5,0.0\n4,0.25,-0.25\n"
