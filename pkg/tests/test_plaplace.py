import numpy as np
import pytest

import pharmonic as ph
from pharmonic.errors import EmptyBoundary, InvalidExponent, NonFiniteBoundary


def path_graph(n, w=1.0):
    return ph.build_graph([(i, i + 1, w) for i in range(n - 1)], n)


class TestPExponent:
    def test_valid(self):
        pe = ph.PExponent(1.5)
        assert pe.pm1 == 0.5 and pe.inv_pm1 == 2.0

    @pytest.mark.parametrize("bad", [1.0, 0.5, 0.0, -3.0, float("nan"), float("inf")])
    def test_invalid(self, bad):
        with pytest.raises(InvalidExponent):
            ph.PExponent(bad)

    def test_comfort_zone_flag(self):
        assert ph.PExponent(1.01).conditioning_flag
        assert ph.PExponent(20.0).conditioning_flag
        assert not ph.PExponent(2.0).conditioning_flag


class TestEnergy:
    def test_constant_is_zero(self):
        g = path_graph(4)
        assert ph.p_energy(g, np.ones(4), None, 2.7) == 0.0

    def test_single_edge_p3(self):
        g = ph.build_graph([(0, 1, 1.0)], 2)
        assert ph.p_energy(g, np.array([0.0, 1.0]), None, 3.0) == 1.0

    def test_path_half_steps(self):
        g = path_graph(3)
        u = np.array([0.0, 0.5, 1.0])
        assert ph.p_energy(g, u, ph.VertexSet.full(g), 2.0) == pytest.approx(0.5)

    def test_omega_restriction(self):
        g = path_graph(3)
        u = np.array([0.0, 0.5, 1.0])
        # only the edge (0,1) lies inside {0,1}
        assert ph.p_energy(g, u, ph.VertexSet([0, 1], 3), 2.0) == pytest.approx(0.25)


class TestPLaplacian:
    def test_constant(self):
        g = path_graph(3)
        assert ph.p_laplacian_at(g, np.full(3, 2.5), 1, 1.5) == 0.0

    def test_symmetric_gradients_cancel(self):
        g = path_graph(3)
        u = np.array([0.0, 0.5, 1.0])
        for p in (1.5, 2.0, 3.3):
            assert ph.p_laplacian_at(g, u, 1, p) == pytest.approx(0.0, abs=1e-15)

    def test_star_p3(self):
        g = ph.build_graph([(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)], 4)
        u = np.array([0.0, 1.0, 1.0, -2.0])
        assert ph.p_laplacian_at(g, u, 0, 3.0) == pytest.approx(-2.0 / 3.0)


class TestSolveDirichlet:
    def test_constant_data(self):
        g = path_graph(5)
        sol = ph.solve_dirichlet(g, ph.VertexSet([1, 2, 3], 5), {0: 2.0, 4: 2.0}, 2.5)
        assert np.allclose(sol.u, 2.0)
        assert sol.max_residual <= 1e-12

    @pytest.mark.parametrize("p", [1.3, 2.0, 3.5])
    def test_path_linear(self, p):
        g = path_graph(4)
        sol = ph.solve_dirichlet(g, ph.VertexSet([1, 2], 4), {0: 0.0, 3: 1.0}, p,
                                 tol=1e-12)
        assert sol.converged
        assert np.allclose(sol.u, [0, 1 / 3, 2 / 3, 1], atol=1e-9)

    def test_grid_linear_function_p2(self):
        g, win = ph.lattice_box(2, 2)
        coords = win.all_coords()
        exact = 0.7 * coords[:, 0] + 1.3 * coords[:, 1]
        interior = win.l1_ball(10).difference(win.shell())
        sol = ph.solve_dirichlet(g, interior, exact, 2.0, tol=1e-12)
        assert np.nanmax(np.abs(sol.u - exact)) <= 1e-8

    def test_affine_equivariance(self):
        g = path_graph(6)
        om = ph.VertexSet([1, 2, 3, 4], 6)
        rng = np.random.Generator(np.random.Philox(3))
        f = {0: float(rng.normal()), 5: float(rng.normal())}
        a, b = 2.5, -1.0
        s1 = ph.solve_dirichlet(g, om, f, 2.6, tol=1e-12)
        s2 = ph.solve_dirichlet(g, om, {k: a * v + b for k, v in f.items()}, 2.6,
                                tol=1e-12)
        assert np.nanmax(np.abs(s2.u - (a * s1.u + b))) <= 1e-8

    def test_energy_trace_monotone(self):
        g, win = ph.lattice_box(2, 3)
        om = win.l1_ball(3).difference(win.shell())
        bnd = ph.vertex_boundary(g, om)
        rng = np.random.Generator(np.random.Philox(11))
        data = {int(v): float(rng.normal()) for v in bnd.ids}
        sol = ph.solve_dirichlet(g, om, data, 1.7, tol=1e-11, accelerate=False)
        tr = np.asarray(sol.meta["energy_trace"])
        assert (np.diff(tr) <= 1e-12 * max(1.0, tr[0])).all()

    def test_residual_matches_independent_recompute(self):
        g, win = ph.lattice_box(2, 2)
        om = win.l1_ball(2).difference(win.shell())
        sol = ph.solve_dirichlet(g, om, lambda v: 0.1 * v, 2.4, tol=1e-11)
        res = max(abs(ph.p_laplacian_at(g, sol.u, int(x), 2.4)) for x in om.ids)
        assert res == pytest.approx(sol.max_residual, rel=1e-6, abs=1e-14)
        assert res <= 1e-11

    def test_empty_boundary_component(self):
        g = ph.build_graph([(0, 1, 1.0), (2, 3, 1.0)], 4)
        with pytest.raises(EmptyBoundary):
            ph.solve_dirichlet(g, ph.VertexSet([1, 2, 3], 4), {0: 1.0}, 2.0)

    def test_whole_graph_rejected(self):
        g = path_graph(3)
        with pytest.raises(EmptyBoundary):
            ph.solve_dirichlet(g, ph.VertexSet.full(g), {}, 2.0)

    def test_nonfinite_data_rejected(self):
        g = path_graph(3)
        with pytest.raises(NonFiniteBoundary):
            ph.solve_dirichlet(g, ph.VertexSet([1], 3), {0: float("nan"), 2: 1.0}, 2.0)

    def test_nonconvergence_reported_not_silent(self):
        g = path_graph(30)
        om = ph.VertexSet(np.arange(1, 29), 30)
        sol = ph.solve_dirichlet(g, om, {0: 0.0, 29: 1.0}, 2.0, tol=1e-12,
                                 max_sweeps=3, accelerate=False)
        assert not sol.converged
        assert sol.sweeps == 3

    def test_redblack_matches_gs(self):
        g, win = ph.lattice_box(2, 3)
        om = win.l1_ball(3).difference(win.shell())
        bnd = ph.vertex_boundary(g, om)
        data = {int(v): float(np.sin(v)) for v in bnd.ids}
        a = ph.solve_dirichlet(g, om, data, 2.3, tol=1e-12)
        b = ph.solve_dirichlet(g, om, data, 2.3, tol=1e-12, mode="redblack")
        assert np.nanmax(np.abs(a.u - b.u)) <= 1e-9

    def test_bisection_matches_illinois(self):
        g, win = ph.lattice_box(2, 2)
        om = win.l1_ball(2).difference(win.shell())
        data = lambda v: float(np.cos(v))  # noqa: E731
        a = ph.solve_dirichlet(g, om, data, 1.6, tol=1e-12)
        b = ph.solve_dirichlet(g, om, data, 1.6, tol=1e-12, scalar_method="bisection")
        assert np.nanmax(np.abs(a.u - b.u)) <= 1e-9

    def test_p_extreme_flagged(self):
        g = path_graph(4)
        sol = ph.solve_dirichlet(g, ph.VertexSet([1, 2], 4), {0: 0.0, 3: 1.0}, 1.02)
        assert sol.meta["flags"]

    def test_vertex_measure_override_does_not_affect_harmonicity(self):
        g = path_graph(5)
        m = 3.0 * g.canonical_measure
        g2 = ph.WeightedGraph(g.n, g.indptr, g.indices, g.weights, vertex_measure=m)
        om = ph.VertexSet([1, 2, 3], 5)
        a = ph.solve_dirichlet(g, om, {0: 0.0, 4: 1.0}, 2.6, tol=1e-12)
        b = ph.solve_dirichlet(g2, om, {0: 0.0, 4: 1.0}, 2.6, tol=1e-12)
        assert np.nanmax(np.abs(a.u - b.u)) <= 1e-10
        # the override rescales the pointwise laplacian but not its zero set
        assert ph.p_laplacian_at(g2, a.u, 2, 2.6) == pytest.approx(
            ph.p_laplacian_at(g, a.u, 2, 2.6) / 3.0)


class TestComparisonAndMaximum:
    @pytest.mark.parametrize("p", [1.4, 2.0, 2.8])
    def test_comparison_principle(self, p):
        rng = np.random.Generator(np.random.Philox(17))
        for _ in range(5):
            g = ph.random_connected_graph(rng, 25)
            bnd = rng.choice(25, size=4, replace=False)
            om = ph.VertexSet(np.setdiff1d(np.arange(25), bnd), 25)
            f = {int(b): float(rng.normal()) for b in bnd}
            h = {b: v + abs(rng.normal()) for b, v in f.items()}
            uf = ph.solve_dirichlet(g, om, f, p, tol=1e-11)
            uh = ph.solve_dirichlet(g, om, h, p, tol=1e-11)
            assert np.nanmax(uf.u - uh.u) <= 2e-8

    def test_maximum_principle(self):
        rng = np.random.Generator(np.random.Philox(23))
        g = ph.random_connected_graph(rng, 40)
        bnd = rng.choice(40, size=6, replace=False)
        om = ph.VertexSet(np.setdiff1d(np.arange(40), bnd), 40)
        f = {int(b): float(rng.normal()) for b in bnd}
        sol = ph.solve_dirichlet(g, om, f, 1.5, tol=1e-11)
        assert np.nanmax(sol.u) <= max(f.values()) + 1e-9
        assert np.nanmin(sol.u) >= min(f.values()) - 1e-9


class TestGreensIdentity:
    def test_constant_f(self):
        g, _ = ph.lattice_box(2, 2)
        lhs, rhs, gap = ph.greens_identity_check(
            g, ph.VertexSet(np.arange(5, 15), g.n), np.ones(g.n),
            np.random.default_rng(0).normal(size=g.n), 2.5)
        assert lhs == rhs == 0.0

    def test_random_grid(self):
        rng = np.random.Generator(np.random.Philox(29))
        g, _ = ph.lattice_box(2, 2, 1.0)  # 4x4-ish grid (radius 2 box, 25 vertices)
        f = rng.normal(size=g.n)
        h = rng.normal(size=g.n)
        om = ph.VertexSet(rng.choice(g.n, size=12, replace=False), g.n)
        _, _, gap = ph.greens_identity_check(g, om, f, h, 2.5)
        assert gap <= 1e-10

    def test_g_constant_reduces_to_flux(self):
        g = path_graph(5)
        rng = np.random.Generator(np.random.Philox(31))
        f = rng.normal(size=5)
        om = ph.VertexSet([1, 2, 3], 5)
        lhs, rhs, gap = ph.greens_identity_check(g, om, f, np.ones(5), 2.0)
        assert gap <= 1e-12
