import numpy as np
import pytest

import pharmonic as ph
from pharmonic.errors import TooManyFreeVertices, X0OutsideOmega


class TestLinearOracle:
    def test_path_interpolation(self):
        g = ph.build_graph([(i, i + 1, 1.0) for i in range(3)], 4)
        u = ph.linear_dirichlet_p2(g, ph.VertexSet([1, 2], 4), {0: 0.0, 3: 1.0})
        assert np.allclose(u, [0, 1 / 3, 2 / 3, 1], atol=1e-12)

    def test_constant_data(self):
        g = ph.build_graph([(i, i + 1, 1.0) for i in range(4)], 5)
        u = ph.linear_dirichlet_p2(g, ph.VertexSet([1, 2, 3], 5), {0: 3.0, 4: 3.0})
        assert np.allclose(u, 3.0)

    def test_matches_nonlinear_solver_at_p2(self):
        rng = np.random.Generator(np.random.Philox(101))
        worst = 0.0
        for _ in range(8):
            n = int(rng.integers(15, 120))
            g = ph.random_connected_graph(rng, n)
            bnd = rng.choice(n, size=3, replace=False)
            om = ph.VertexSet(np.setdiff1d(np.arange(n), bnd), n)
            data = {int(b): float(rng.normal()) for b in bnd}
            u_nl = ph.solve_dirichlet(g, om, data, 2.0, tol=1e-12).u
            u_li = ph.linear_dirichlet_p2(g, om, data)
            worst = max(worst, float(np.nanmax(np.abs(u_nl - u_li))))
        assert worst <= 1e-6


class TestBruteForce:
    def test_two_vertex(self):
        g = ph.build_graph([(0, 1, 1.3)], 2)
        c = ph.Condenser(ph.VertexSet([0], 2), ph.VertexSet([1], 2), 2.0)
        res = ph.bruteforce_condenser(g, c)
        assert res.value == pytest.approx(1.3)

    def test_path_p25(self):
        g = ph.build_graph([(i, i + 1, 1.0) for i in range(4)], 5)
        c = ph.Condenser(ph.VertexSet([0], 5), ph.VertexSet([4], 5), 2.5)
        res = ph.bruteforce_condenser(g, c)
        assert res.value == pytest.approx(4.0 ** (-1.5), abs=1e-8)
        assert res.spread <= 1e-8

    def test_triangle_cross_validates_capacity(self):
        g = ph.build_graph([(0, 1, 1.0), (1, 2, 2.0), (0, 2, 0.5)], 3)
        c = ph.Condenser(ph.VertexSet([0], 3), ph.VertexSet([2], 3), 1.8)
        cap = ph.capacity(g, c, tol=1e-13)
        res = ph.bruteforce_condenser(g, c)
        assert cap.value == pytest.approx(res.value, abs=1e-8)

    def test_too_many_free(self):
        g = ph.build_graph([(i, i + 1, 1.0) for i in range(19)], 20)
        c = ph.Condenser(ph.VertexSet([0], 20), ph.VertexSet([19], 20), 2.0)
        with pytest.raises(TooManyFreeVertices):
            ph.bruteforce_condenser(g, c)


class TestMonteCarlo:
    def test_x0_outside(self):
        g, win = ph.lattice_box(2, 4)
        om = win.l1_ball(0).complement()
        with pytest.raises(X0OutsideOmega):
            ph.mc_escape_probability(g, om, win.origin, 100, [2])

    def test_blocked_start_never_escapes(self):
        g, win = ph.lattice_box(2, 5)
        # omega^c is the full ring at distance 1 around x0: walk absorbed instantly
        ring = win.l1_ball(1).difference(win.l1_ball(0))
        om = ring.complement()
        est = ph.mc_escape_probability(g, om, win.origin, 2000, [4], seed=7)
        assert est[0].p_hat == 0.0

    def test_z2_recurrence_decay(self):
        g, win = ph.lattice_box(2, 40)
        om = win.l1_ball(0).complement()
        x0 = win.id_of((1, 0))
        est = ph.mc_escape_probability(g, om, x0, 30_000, [8, 32], seed=13)
        assert est[0].p_hat > est[1].p_hat  # escape gets harder with distance

    def test_matches_potential_on_z2(self):
        g, win = ph.lattice_box(2, 9)
        o = win.origin
        B = win.l1_ball(8)
        shell = B.difference(win.l1_ball(7))
        cond = ph.Condenser(ph.VertexSet([o], g.n), shell, 2.0, domain=B)
        cap = ph.capacity(g, cond, tol=1e-12)
        x0 = win.id_of((1, 0))
        om = ph.VertexSet.from_mask(~(np.arange(g.n) == o))
        est = ph.mc_escape_probability(g, om, x0, 60_000, [8], seed=21)
        expected = 1.0 - cap.potential.u[x0]
        assert abs(est[0].p_hat - expected) <= 3 * est[0].stderr

    def test_reproducible(self):
        g, win = ph.lattice_box(2, 6)
        om = win.l1_ball(0).complement()
        x0 = win.id_of((1, 0))
        a = ph.mc_escape_probability(g, om, x0, 5000, [4], seed=5)
        b = ph.mc_escape_probability(g, om, x0, 5000, [4], seed=5)
        assert a[0].p_hat == b[0].p_hat


class TestRandomGraphs:
    def test_connected(self):
        rng = np.random.Generator(np.random.Philox(3))
        for _ in range(5):
            n = int(rng.integers(5, 60))
            g = ph.random_connected_graph(rng, n)
            assert len(ph.component_of(g, ph.VertexSet.full(g), 0)) == n

    def test_weight_range(self):
        rng = np.random.Generator(np.random.Philox(4))
        g = ph.random_connected_graph(rng, 30, wmin=0.1, wmax=10.0)
        assert g.weights.min() >= 0.1 and g.weights.max() <= 10.0
