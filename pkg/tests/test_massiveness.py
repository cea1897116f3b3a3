import pytest

import pharmonic as ph
from pharmonic.errors import Omega1NotSubset, SetsIntersect, X0OutsideOmega
from pharmonic.massiveness import DEFAULT_THRESHOLDS, _classify_massiveness

POINT_COMPLEMENT = {"kind": "complement", "of": {"kind": "ball", "r": 0}}


class TestClassifier:
    def test_geometric_low_limit_is_massive(self):
        vals = [0.2707, 0.3028, 0.3210, 0.3306, 0.3355]
        v, limit, err, margin, _ = _classify_massiveness(vals, [4, 8, 16, 32, 64],
                                                         DEFAULT_THRESHOLDS)
        assert v == "massive-like" and margin > 0.5

    def test_slow_high_value_is_non_massive(self):
        vals = [0.3981, 0.5038, 0.5851, 0.6463, 0.6749, 0.6928]
        v, *_ = _classify_massiveness(vals, [4, 8, 16, 32, 48, 64], DEFAULT_THRESHOLDS)
        assert v == "non-massive-like"

    def test_slow_low_value_stays_massive(self):
        vals = [0.1316, 0.1780, 0.2088, 0.2268, 0.2332, 0.2365]
        v, limit, *_ = _classify_massiveness(vals, [4, 8, 16, 32, 48, 64],
                                             DEFAULT_THRESHOLDS)
        assert v == "massive-like" and limit < 0.25

    def test_limit_at_one_is_non_massive(self):
        vals = [0.90, 0.95, 0.975, 0.988]
        v, *_ = _classify_massiveness(vals, [4, 8, 16, 32], DEFAULT_THRESHOLDS)
        assert v == "non-massive-like"

    def test_big_increment_is_inconclusive(self):
        vals = [0.1, 0.2, 0.3, 0.35]
        v, *_ = _classify_massiveness(vals, [4, 8, 16, 32], DEFAULT_THRESHOLDS)
        assert v == "inconclusive"


class TestMassivenessSequence:
    def test_z1_halfline_values_exact(self):
        # Omega = {x >= 1} in Z^1: v_k(1) = k/(k+1), nondecreasing toward 1
        fam = ph.LatticeFamily(d=1)
        spec = {"kind": "halfspace", "axis": 0, "lo": 1}
        ev = ph.massiveness_sequence(fam, spec, (1,), 2.0, [2, 4, 8], tol=1e-12)
        assert ev.values == pytest.approx([2 / 3, 4 / 5, 8 / 9], abs=1e-9)
        assert all(b >= a - 1e-9 for a, b in zip(ev.values, ev.values[1:]))

    def test_x0_outside_raises(self):
        fam = ph.LatticeFamily(d=2)
        with pytest.raises(X0OutsideOmega):
            ph.massiveness_sequence(fam, POINT_COMPLEMENT, (0, 0), 2.0, [4])

    def test_values_in_unit_interval(self):
        fam = ph.LatticeFamily(d=2)
        ev = ph.massiveness_sequence(fam, POINT_COMPLEMENT, (1, 0), 2.0, [2, 4, 8],
                                     tol=1e-10)
        assert all(-1e-12 <= v <= 1 + 1e-12 for v in ev.values)

    def test_domain_monotonicity_of_solutions(self):
        # bigger omega (smaller complement) gives a pointwise smaller v
        fam = ph.LatticeFamily(d=2)
        big = ph.massiveness_sequence(fam, POINT_COMPLEMENT, (2, 0), 2.0, [4, 8],
                                      tol=1e-11)
        small_omega = {"kind": "complement", "of": {"kind": "ball", "r": 1}}
        small = ph.massiveness_sequence(fam, small_omega, (2, 0), 2.0, [4, 8],
                                        tol=1e-11)
        assert all(b >= a - 1e-9 for a, b in zip(big.values, small.values))


class TestParabolicity:
    def test_z1_exact(self):
        fam = ph.LatticeFamily(d=1)
        ev = ph.parabolicity_sequence(fam, {"kind": "ball", "r": 0}, 2.0,
                                      [2, 4, 8, 16], tol=1e-13)
        for R, v, _ in ev.rows():
            assert v == pytest.approx(1.0 / R, abs=1e-10)
        assert ev.verdict == "parabolic-like"

    def test_rows_csv_shape(self):
        from pharmonic.io import sequence_csv

        fam = ph.LatticeFamily(d=2)
        ev = ph.parabolicity_sequence(fam, {"kind": "ball", "r": 0}, 2.0, [2, 4, 8],
                                      tol=1e-10)
        csv = sequence_csv(ev.rows(), deterministic=True)
        lines = csv.strip().split("\n")
        assert lines[0] == "R,value,increment"
        assert len(lines) == 4


class TestDpProbe:
    def test_subset_violation(self):
        fam = ph.LatticeFamily(d=2)
        with pytest.raises(Omega1NotSubset):
            ph.dp_massiveness_probe(fam, {"kind": "ball", "r": 1},
                                    {"kind": "ball", "r": 2}, 2.0, [4, 8])

    def test_infinite_complement_grows(self):
        # Omega = Z^2 minus the axis: mu(Omega^c) infinite, capacity grows
        fam = ph.LatticeFamily(d=2)
        omega = {"kind": "complement", "of": {"kind": "axis"}}
        ev = ph.dp_massiveness_probe(fam, omega, omega, 1.5, [2, 4, 8], tol=1e-8)
        vals = [r[1] for r in ev.cap_rows]
        assert vals[-1] > vals[0]
        assert not ev.cap_bounded
        assert ev.verdict in ("not-Dp-massive-like", "inconclusive")


class TestLiouvilleAndGap:
    def test_sets_must_be_disjoint(self):
        fam = ph.LatticeFamily(d=2)
        spec = {"kind": "halfspace", "axis": 0, "lo": 0}
        with pytest.raises(SetsIntersect):
            ph.liouville_construct(fam, spec, spec, 2.0, 8)

    def test_z2_margin_small_with_fixed_cores(self):
        fam = ph.LatticeFamily(d=2)
        om1 = {"kind": "halfspace", "axis": 0, "lo": 2}
        om2 = {"kind": "halfspace", "axis": 0, "hi": -2}
        with pytest.warns(UserWarning):
            rep_small = ph.liouville_construct(fam, om1, om2, 2.0, 10, tol=1e-9,
                                               core_radius=5, core_depth=2)
            rep_big = ph.liouville_construct(fam, om1, om2, 2.0, 20, tol=1e-9,
                                             core_radius=5, core_depth=2)
        assert rep_big.margin < rep_small.margin + 0.05
        assert rep_big.warnings  # half-planes are not massive on Z^2

    def test_gap_probe_z2_point_complement_vanishes(self):
        fam = ph.LatticeFamily(d=2)
        rep = ph.uniqueness_gap_probe(fam, POINT_COMPLEMENT, 0.0, 2.0,
                                      [4, 8, 16, 32], tol=1e-10, observe_radius=2)
        gaps = [g for _, g in rep.rows]
        assert gaps[-1] < gaps[0]
        assert rep.trend in ("vanishing", "inconclusive")

    def test_gap_probe_constant_data_minimal_solution(self):
        fam = ph.LatticeFamily(d=2)
        rep = ph.uniqueness_gap_probe(fam, POINT_COMPLEMENT, 1.0, 2.0, [4, 8],
                                      tol=1e-10, observe_radius=2)
        assert all(g >= -1e-12 for _, g in rep.rows)

    def test_z3_halfspace_margin(self):
        # opposite half-spaces shifted apart: positive separation at R=32
        fam = ph.LatticeFamily(d=3)
        om1 = {"kind": "halfspace", "axis": 0, "lo": 2}
        om2 = {"kind": "halfspace", "axis": 0, "hi": -2}
        import warnings

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = ph.liouville_construct(fam, om1, om2, 2.0, 32, tol=1e-8)
        assert rep.margin > 0.2

    def test_gap_probe_z3_flattens(self):
        fam = ph.LatticeFamily(d=3)
        rep = ph.uniqueness_gap_probe(fam, POINT_COMPLEMENT, 0.0, 2.0,
                                      [4, 8, 16, 32], tol=1e-8, observe_radius=2)
        gaps = [g for _, g in rep.rows]
        assert gaps[-1] > 0.5  # inflated solution stays separated from minimal
        assert rep.trend == "flattening"
