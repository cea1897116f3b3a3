import numpy as np
import pytest

import pharmonic as ph
from pharmonic.errors import (
    ClosureEscapesU,
    DisconnectedFreeComponent,
    WindowTooSmall,
)


def path_graph(n, w=1.0):
    return ph.build_graph([(i, i + 1, w) for i in range(n - 1)], n)


def path_condenser(n_edges, p, w=1.0):
    g = path_graph(n_edges + 1, w)
    return g, ph.Condenser(ph.VertexSet([0], g.n), ph.VertexSet([n_edges], g.n), p)


class TestCondenserPotential:
    def test_two_vertex(self):
        g = ph.build_graph([(0, 1, 1.0)], 2)
        c = ph.Condenser(ph.VertexSet([0], 2), ph.VertexSet([1], 2), 2.0)
        pot = ph.condenser_potential(g, c)
        assert pot.u[0] == 1.0 and pot.u[1] == 0.0
        assert pot.max_residual == 0.0 and pot.converged

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_path_linear(self, p):
        g, c = path_condenser(4, p)
        pot = ph.condenser_potential(g, c, tol=1e-12)
        assert np.allclose(pot.u, [1.0, 0.75, 0.5, 0.25, 0.0], atol=1e-9)

    def test_range_envelope(self):
        g, win = ph.lattice_box(2, 4)
        c = ph.Condenser(win.l1_ball(1), win.shell(), 1.7)
        pot = ph.condenser_potential(g, c, tol=1e-10)
        assert np.nanmin(pot.u) >= -1e-12 and np.nanmax(pot.u) <= 1 + 1e-12

    def test_rotation_symmetry_z2(self):
        g, win = ph.lattice_box(2, 5)
        c = ph.Condenser(win.l1_ball(1), win.l1_ball(4).complement(), 2.0)
        pot = ph.condenser_potential(g, c, tol=1e-10)
        coords = win.coords_of(np.arange(win.n))
        rot = win.id_of(np.stack([-coords[:, 1], coords[:, 0]], axis=1))
        assert np.nanmax(np.abs(pot.u - pot.u[rot])) <= 1e-8

    def test_disconnected_free_component(self):
        # 0 -1- 2 path plus isolated pair 3-4 inside the domain
        g = ph.build_graph([(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)], 5)
        c = ph.Condenser(ph.VertexSet([0], 5), ph.VertexSet([2], 5), 2.0)
        with pytest.raises(DisconnectedFreeComponent):
            ph.condenser_potential(g, c)


class TestCapacityValues:
    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_series_law_n10(self, p):
        g, c = path_condenser(10, p)
        cap = ph.capacity(g, c, tol=1e-12)
        assert cap.value == pytest.approx(10.0 ** (1 - p), abs=1e-6)

    def test_two_vertex_weight(self):
        g = ph.build_graph([(0, 1, 2.5)], 2)
        c = ph.Condenser(ph.VertexSet([0], 2), ph.VertexSet([1], 2), 1.7)
        assert ph.capacity(g, c).value == pytest.approx(2.5)

    def test_parallel_plate_edges(self):
        # plates {0,1} and {2,3}; edges 0-2 (w1), 1-3 (w2) are forced
        w1, w2 = 0.7, 1.9
        g = ph.build_graph([(0, 2, w1), (1, 3, w2)], 4)
        c = ph.Condenser(ph.VertexSet([0, 1], 4), ph.VertexSet([2, 3], 4), 2.5)
        assert ph.capacity(g, c).value == pytest.approx(w1 + w2)

    def test_general_weights_series_law(self):
        rng = np.random.Generator(np.random.Philox(37))
        ws = rng.uniform(0.2, 3.0, size=5)
        g = ph.build_graph([(i, i + 1, float(w)) for i, w in enumerate(ws)], 6)
        p = 2.4
        c = ph.Condenser(ph.VertexSet([0], 6), ph.VertexSet([5], 6), p)
        expected = float(np.sum(ws ** (-1 / (p - 1)))) ** (-(p - 1))
        cap = ph.capacity(g, c, tol=1e-12)
        assert cap.value == pytest.approx(expected, rel=1e-8)
        oracle = ph.bruteforce_condenser(g, c)
        assert cap.value == pytest.approx(oracle.value, abs=1e-8)

    def test_convention_tags(self):
        g, win = ph.lattice_box(2, 3)
        full = ph.Condenser(win.l1_ball(0), win.shell(), 2.0)
        assert ph.capacity(g, full).convention == "global-cap"
        sub = ph.Condenser(win.l1_ball(0), win.l1_ball(3).difference(win.l1_ball(2)),
                           2.0, domain=win.l1_ball(3))
        assert ph.capacity(g, sub).convention == "subdomain-Cp"

    def test_json_keys(self):
        g, c = path_condenser(4, 2.0)
        d = ph.capacity(g, c).to_json_dict()
        for key in ("value", "uncertainty", "convention", "p", "sizes", "sweeps"):
            assert key in d

    def test_p2_capacity_matches_linear_oracle(self):
        rng = np.random.Generator(np.random.Philox(53))
        for _ in range(5):
            n = int(rng.integers(15, 150))
            g = ph.random_connected_graph(rng, n)
            c = ph.Condenser(ph.VertexSet([0], n), ph.VertexSet([n - 1], n), 2.0)
            cap = ph.capacity(g, c, tol=1e-12)
            plates = c.source.union(c.sink)
            u_lin = ph.linear_dirichlet_p2(g, plates.complement(),
                                           {0: 1.0, n - 1: 0.0})
            assert np.nanmax(np.abs(u_lin - cap.potential.u)) <= 1e-6
            cap_lin = ph.p_energy(g, u_lin, None, 2.0)
            assert cap.value == pytest.approx(cap_lin, rel=1e-6)


class TestFluxAndSigma:
    @pytest.mark.parametrize("p", [1.3, 2.0, 2.7])
    def test_flux_conservation_path(self, p):
        g, c = path_condenser(6, p)
        cap = ph.capacity(g, c, tol=1e-12)
        for t in np.linspace(0.05, 0.95, 7):
            h = ph.level_set_flux(g, cap.potential.u, float(t), p)
            assert h == pytest.approx(cap.value, rel=1e-9)

    def test_flux_endpoints_match(self):
        g, c = path_condenser(5, 2.3)
        cap = ph.capacity(g, c, tol=1e-12)
        assert cap.flux_at_source == pytest.approx(cap.value, rel=1e-9)
        assert cap.flux_at_sink == pytest.approx(cap.value, rel=1e-9)

    def test_constant_u_zero_flux(self):
        g = path_graph(4)
        assert ph.level_set_flux(g, np.full(4, 0.4), 0.2, 2.0) == 0.0

    def test_sigma_identities(self):
        g, c = path_condenser(7, 1.8)
        cap = ph.capacity(g, c, tol=1e-12)
        sig = ph.sigma_measure(g, cap.potential.u, 1.8)
        assert np.nansum(sig[c.source.ids]) == pytest.approx(cap.value, rel=1e-8)
        free = cap.potential.free_set
        assert np.nanmax(np.abs(sig[free.ids])) <= 1e-11
        # two-vertex condenser: sigma(source) equals the edge weight
        g2 = ph.build_graph([(0, 1, 1.0)], 2)
        c2 = ph.Condenser(ph.VertexSet([0], 2), ph.VertexSet([1], 2), 2.0)
        cap2 = ph.capacity(g2, c2)
        sig2 = ph.sigma_measure(g2, cap2.potential.u, 2.0)
        assert sig2[0] == pytest.approx(1.0)


class TestMonotoneSymmetricHomogeneous:
    def test_monotone_in_source(self):
        g, win = ph.lattice_box(2, 5)
        Z = win.shell()
        small = ph.capacity(g, ph.Condenser(win.l1_ball(1), Z, 2.2), tol=1e-10)
        big = ph.capacity(g, ph.Condenser(win.l1_ball(2), Z, 2.2), tol=1e-10)
        assert big.value + big.uncertainty + small.uncertainty >= small.value

    def test_domain_monotone(self):
        g, win = ph.lattice_box(2, 5)
        K = win.l1_ball(1)
        Z = win.l1_ball(3).difference(win.l1_ball(2))
        inner = ph.capacity(g, ph.Condenser(K, Z, 2.0, domain=win.l1_ball(3)), tol=1e-10)
        outer = ph.capacity(g, ph.Condenser(K, Z, 2.0), tol=1e-10)
        # larger domain admits more admissible functions but counts more edges;
        # with the sink separating, value cannot increase when the domain shrinks
        assert inner.value <= outer.value + 1e-8


class TestExhaustion:
    def test_z1_exact_inverse_radius(self):
        fam = ph.LatticeFamily(d=1)
        ex = ph.capacity_exhaustion(fam, {"kind": "ball", "r": 0}, 2.0, [2, 4, 8],
                                    tol=1e-13)
        for R, v, _ in ex.rows:
            assert v == pytest.approx(1.0 / R, abs=1e-10)

    def test_monotone_nonincreasing(self):
        fam = ph.LatticeFamily(d=2)
        ex = ph.capacity_exhaustion(fam, {"kind": "ball", "r": 0}, 2.0, [2, 4, 8],
                                    tol=1e-11)
        vals = ex.values
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))

    def test_source_must_fit(self):
        fam = ph.LatticeFamily(d=2)
        with pytest.raises(WindowTooSmall):
            ph.capacity_exhaustion(fam, {"kind": "ball", "r": 4}, 2.0, [4])

    def test_fixed_graph_variant(self):
        g, win = ph.lattice_box(2, 9)
        ex = ph.capacity_exhaustion_on(g, win.origin, win.l1_ball(0), 2.0, [2, 4, 8],
                                       tol=1e-11)
        assert len(ex.rows) == 3
        with pytest.raises(WindowTooSmall):
            ph.capacity_exhaustion_on(g, win.origin, win.l1_ball(0), 2.0, [32])


class TestBallBounds:
    @pytest.mark.parametrize("d,r,R,p", [(2, 4, 8, 1.5), (2, 4, 8, 2.0),
                                         (3, 5, 9, 1.5)])
    def test_upper_bound_holds(self, d, r, R, p):
        g, win = ph.lattice_box(d, R + 2)
        res = ph.ball_capacity_bounds_check(g, win.origin, r, R, p, tol=1e-9)
        assert res.upper_holds
        assert res.lower_hypothesis == (R < 2 * r)
        assert res.lower_ratio > 0

    def test_adjacent_radii_trivial_bound(self):
        g, win = ph.lattice_box(2, 6)
        res = ph.ball_capacity_bounds_check(g, win.origin, 3, 4, 2.0, tol=1e-9)
        mu_b2 = float(g.canonical_measure[ph.ball(g, win.origin, 4).ids].sum())
        assert res.upper_bound == pytest.approx(mu_b2)
        assert res.upper_holds


class TestSandwich:
    def test_path_half_level(self):
        g, c = path_condenser(4, 2.0)
        res = ph.level_set_sandwich_check(g, c, 0.5, tol=1e-12)
        assert res.holds
        assert res.lhs <= res.mid + 1e-9 <= res.rhs + 2e-9

    def test_z2_annulus(self):
        g, win = ph.lattice_box(2, 6)
        c = ph.Condenser(win.l1_ball(1), win.l1_ball(5).complement(), 2.0)
        res = ph.level_set_sandwich_check(g, c, 0.3, tol=1e-10)
        assert res.holds

    def test_level_near_one_collapses_to_source(self):
        g, c = path_condenser(4, 2.0)
        res = ph.level_set_sandwich_check(g, c, 0.9, tol=1e-12)
        assert res.holds
        assert res.lhs <= res.mid + 1e-9

    def test_closure_escape_raises(self):
        g, c = path_condenser(3, 2.0)
        # tiny lambda: the superlevel set reaches the sink's neighbor shell
        with pytest.raises(ClosureEscapesU):
            ph.level_set_sandwich_check(g, c, 0.05, tol=1e-12)
