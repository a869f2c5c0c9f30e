"""Derivative-free search for large Hardy ratios."""

import math

import numpy as np
import pytest

from hardylab.errors import DegenerateFamilyError, DomainError
from hardylab.extremal import (
    BumpMixture,
    FixedFunction,
    Intermediate,
    Main,
    SplineProfile,
    constant_growth_profile,
    maximize_ratio,
    recompute_ratio,
)
from hardylab.functions import Constant, SmoothBump, TestFunction
from hardylab.geometry import Interval
from hardylab.hardy import verify_intermediate, verify_main

E = math.e
BUMP = TestFunction(SmoothBump((1.0,), 0.6, 1.0))


@pytest.fixture(scope="module")
def k1_run():
    return maximize_ratio(BumpMixture(1), Main(2, E), budget=300, restarts=5, seed=0)


class TestFamilies:
    def test_bump_support_inside(self):
        fam = BumpMixture(2)
        rng = np.random.default_rng(0)
        b = np.array(fam.bounds())
        for _ in range(50):
            p = rng.uniform(b[:, 0], b[:, 1])
            u = fam.build(p)
            np.testing.assert_array_equal(u(np.array([0.0, 2.0])), 0.0)

    def test_bump_k1_known_tv(self):
        u = BumpMixture(1).build([0.7, 0.5, -1.5])
        assert u.known_tv == 3.0

    def test_spline_tv_and_ends(self):
        u = SplineProfile(3).build([0.5, -0.5, 1.0])
        assert u.known_tv == pytest.approx(0.5 + 1.0 + 1.5 + 1.0)
        np.testing.assert_array_equal(u(np.array([0.0, 2.0])), 0.0)

    def test_bad_family(self):
        with pytest.raises(DomainError):
            BumpMixture(0)
        with pytest.raises(DomainError):
            SplineProfile(0)


class TestMaximize:
    def test_singleton_equals_verifier(self):
        res = maximize_ratio(FixedFunction(BUMP), Main(2, E))
        assert res.best_ratio == verify_main(BUMP, Interval(1.0), 2, E, explicit=False).measured_constant
        assert res.restart_dispersion == 0.0

    def test_singleton_intermediate(self):
        res = maximize_ratio(FixedFunction(BUMP), Intermediate(0.5, 2, E))
        rep = verify_intermediate(BUMP, Interval(1.0), 0.5, 2, E, explicit=False)
        assert res.best_ratio == rep.measured_constant

    def test_dispersion_and_recompute(self, k1_run):
        assert k1_run.restart_dispersion < 0.1
        again = recompute_ratio(BumpMixture(1), Main(2, E), k1_run.best_params)
        assert again == pytest.approx(k1_run.best_ratio, rel=1e-9)

    def test_incumbent_beats_search_noise(self, k1_run):
        # the coarse search value and the fine re-evaluation agree closely
        assert k1_run.search_ratio == pytest.approx(k1_run.best_ratio, rel=1e-6)

    def test_monotone_traces(self, k1_run):
        for r in k1_run.restarts:
            assert np.all(np.diff(r.trace) >= 0)
            assert len(r.trace) == r.evaluations

    def test_lower_bound_property(self, k1_run):
        # the incumbent dominates a fixed member of the family
        fixed = verify_main(BUMP, Interval(1.0), 2, E, explicit=False).measured_constant
        assert k1_run.best_ratio >= fixed

    def test_amplitude_quotiented(self, k1_run):
        other = maximize_ratio(BumpMixture(1, amplitude_bound=0.5), Main(2, E), budget=300, restarts=5, seed=0)
        assert other.best_ratio == pytest.approx(k1_run.best_ratio, rel=1e-9)

    def test_seed_reproducible(self, k1_run):
        again = maximize_ratio(BumpMixture(1), Main(2, E), budget=300, restarts=5, seed=0)
        assert again.to_dict() == k1_run.to_dict()

    def test_workers_do_not_matter(self, k1_run):
        par = maximize_ratio(BumpMixture(1), Main(2, E), budget=300, restarts=5, seed=0, workers=3)
        assert par.to_dict() == k1_run.to_dict()

    def test_degenerate(self):
        with pytest.raises(DegenerateFamilyError):
            maximize_ratio(FixedFunction(TestFunction(Constant(1.0))), Main(2, E))

    def test_budget_and_restart_floor(self):
        with pytest.raises(DomainError):
            maximize_ratio(BumpMixture(1), Main(2, E), budget=50)
        with pytest.raises(DomainError):
            maximize_ratio(BumpMixture(1), Main(2, E), restarts=2)

    def test_budget_stability(self, k1_run):
        more = maximize_ratio(BumpMixture(1), Main(2, E), budget=600, restarts=5, seed=0)
        assert more.best_ratio == pytest.approx(k1_run.best_ratio, rel=0.05)


class TestGrowthProfile:
    def test_rows_and_trend(self):
        rows = constant_growth_profile(BumpMixture(1), lambda m: Main(m, E), range(2, 7), budget=150, restarts=3)
        assert [r["m"] for r in rows] == [2, 3, 4, 5, 6]
        ratios = [r["best_ratio"] for r in rows]
        assert all(b <= a for a, b in zip(ratios[:-1], ratios[1:]))
        for r in rows:
            assert r["raw_ratio"] == pytest.approx(r["best_ratio"] * 2.0 ** r["m"], rel=1e-15)

    def test_first_row_matches_search(self):
        rows = constant_growth_profile(BumpMixture(1), lambda m: Main(m, E), [2], budget=150, restarts=3, seed=4)
        res = maximize_ratio(BumpMixture(1), Main(2, E), budget=150, restarts=3, seed=4)
        assert rows[0]["best_ratio"] == res.best_ratio
