"""Gagliardo seminorms, the s -> 1 limit and Poincare-type measurements.

The bump and clamped-linear reference seminorms were frozen from a 20-digit
mpmath nested quadrature in the variables (t, y) with every breakpoint and
sign change of the increment supplied explicitly.
"""

import json
import math

import numpy as np
import pytest
from scipy import integrate

from hardylab.errors import BudgetTooSmallError, DomainError, GeometryError, ZeroSeminormError
from hardylab.functions import (
    ClampedLinear,
    Constant,
    Dilation,
    Linear,
    SmoothBump,
    Step,
    Sum,
    TensorProfile,
    TestFunction,
    tv_seminorm,
)
from hardylab.geometry import AxisBox, Polygon2D, Rectangle
from hardylab.seminorms import (
    SeminormEstimate,
    avg_chain_check,
    bbm_constant,
    bbm_limit_sweep,
    bv_poincare_measure,
    cutoff_multiplication_check,
    gagliardo_1d,
    gagliardo_2d_tensor,
    gagliardo_linear_closed_form,
    gagliardo_nd,
    layer_pair_seminorm_sum,
    measured_poincare_constant,
    poincare_measure,
    tensor_profile_bound_factor,
)

BUMP_SEMINORM_HALF = 5.2662662001086628903  # bump (0.5, 0.3, 1) on (0, 1), s = 1/2
CLAMPED_SEMINORM_HALF = 3.1716642991403926382  # clip((x - 0.2)/0.4, 0, 1) on (0, 1), s = 1/2
LINEAR_2D_HALF = 5.121234566172058  # x_1 on the unit square, s = 1/2

LIN = TestFunction(Linear())
BUMP = TestFunction(SmoothBump((0.5,), 0.3, 1.0))
SQUARE = Polygon2D.unit_square()


def step_seminorm(s):
    """Unit jump at the midpoint of (0, 2): 2 (2 - 2^{1-s}) / (s (1-s))."""
    return 2 * (2 - 2 ** (1 - s)) / (s * (1 - s))


def linear_2d_oracle(s):
    """x_1 on the unit square via the overlap identity G(h) = |h1| (1 - |h1|) (1 - |h2|)."""
    # polar coordinates remove the origin singularity; 4 symmetric quadrants
    g = lambda r, t: r ** (-1 - s) * (r * math.cos(t)) * (1 - r * math.cos(t)) * (1 - r * math.sin(t))  # noqa: E731
    tc = math.pi / 4
    v1 = integrate.dblquad(g, 0, tc, 0, lambda t: 1 / math.cos(t), epsabs=1e-13, epsrel=1e-12)[0]
    v2 = integrate.dblquad(g, tc, math.pi / 2, 0, lambda t: 1 / math.sin(t), epsabs=1e-13, epsrel=1e-12)[0]
    return 4 * (v1 + v2)


class TestGagliardo1D:
    @pytest.mark.parametrize("s", [0.5, 0.7, 0.9, 0.99])
    def test_linear_closed_form(self, s):
        est = gagliardo_1d(LIN, (0.0, 1.0), s)
        assert est.method == "AdaptiveQuadrature1D" and est.std_error == 0
        assert est.value == pytest.approx(2 / ((1 - s) * (2 - s)), rel=1e-10)

    def test_examples(self):
        assert gagliardo_1d(LIN, (0.0, 1.0), 0.5).value == pytest.approx(8 / 3, rel=1e-10)
        assert gagliardo_1d(LIN, (0.0, 1.0), 0.9).value == pytest.approx(18.181818181818183, rel=1e-10)

    def test_constant_zero(self):
        assert gagliardo_1d(TestFunction(Constant(3.0)), (0.0, 1.0), 0.5).value == 0.0

    @pytest.mark.parametrize("s", [0.3, 0.5, 0.9, 0.99])
    def test_step_closed_form(self, s):
        u = TestFunction(Step((1.0,), (1.0,)))
        assert gagliardo_1d(u, (0.0, 2.0), s).value == pytest.approx(step_seminorm(s), rel=1e-9)

    def test_bump_mpmath(self):
        assert gagliardo_1d(BUMP, (0.0, 1.0), 0.5).value == pytest.approx(BUMP_SEMINORM_HALF, rel=1e-10)

    def test_clamped_mpmath(self):
        u = TestFunction(ClampedLinear(0.2, 0.6))
        assert gagliardo_1d(u, (0.0, 1.0), 0.5).value == pytest.approx(CLAMPED_SEMINORM_HALF, rel=1e-10)

    def test_interval_scaling(self):
        # [x]_{W^{s,1}((0, L))} = L^{2-s} [x]_{W^{s,1}((0, 1))}
        est = gagliardo_1d(LIN, (0.0, 3.0), 0.6)
        assert est.value == pytest.approx(gagliardo_linear_closed_form(0.6, L=3.0).value, rel=1e-10)

    def test_invalid_s(self):
        for s in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(DomainError):
                gagliardo_1d(LIN, (0.0, 1.0), s)

    def test_layer_pair_summation(self):
        for u in (LIN, BUMP, TestFunction(ClampedLinear(0.05, 0.3))):
            total, bound = layer_pair_seminorm_sum(u, -6, 0.5)
            assert total <= bound


class TestGagliardo2D:
    def test_linear_oracle(self):
        assert LINEAR_2D_HALF == pytest.approx(linear_2d_oracle(0.5), rel=1e-10)

    def test_tensor_linear(self):
        u = TestFunction(Linear((1.0, 0.0)))
        est = gagliardo_2d_tensor(u, SQUARE, 0.5)
        assert est.method == "TensorQuadrature"
        assert est.value == pytest.approx(LINEAR_2D_HALF, rel=1e-12)

    def test_tensor_rotation_invariance(self):
        a = gagliardo_2d_tensor(TestFunction(Linear((1.0, 0.0))), SQUARE, 0.7).value
        b = gagliardo_2d_tensor(TestFunction(Linear((0.0, 1.0))), SQUARE, 0.7).value
        assert a == pytest.approx(b, rel=1e-12)

    def test_mc_within_three_sigma_of_tensor(self):
        u = TestFunction(Linear((1.0, 0.0)))
        est = gagliardo_nd(u, SQUARE, 0.5, budget=200_000, seed=11)
        assert abs(est.value - LINEAR_2D_HALF) <= 3 * est.std_error

    def test_mc_constant_zero(self):
        est = gagliardo_nd(TestFunction(Constant(1.0, 2)), SQUARE, 0.5, budget=20_000, seed=0)
        assert est.value == 0.0 and est.std_error == 0.0

    def test_mc_deterministic_and_worker_independent(self):
        u = TestFunction(SmoothBump((0.5, 0.5), 0.3, 1.0))
        a = gagliardo_nd(u, SQUARE, 0.5, budget=50_000, seed=5)
        b = gagliardo_nd(u, SQUARE, 0.5, budget=50_000, seed=5)
        c = gagliardo_nd(u, SQUARE, 0.5, budget=50_000, seed=5, workers=4)
        assert a == b == c

    def test_mc_std_error_calibrated(self):
        u = TestFunction(Linear((1.0, 0.0)))
        runs = [gagliardo_nd(u, SQUARE, 0.5, budget=20_000, seed=k) for k in range(20)]
        spread = np.std([r.value for r in runs], ddof=1)
        reported = np.mean([r.std_error for r in runs])
        assert 0.5 <= spread / reported <= 2.0

    def test_budget_too_small(self):
        u = TestFunction(SmoothBump((0.5, 0.5), 0.05, 1.0))
        with pytest.raises(BudgetTooSmallError):
            gagliardo_nd(u, SQUARE, 0.9, budget=2_000, seed=0)

    def test_tensor_profile_bound(self):
        profile = SmoothBump((0.0,), 0.5, 1.0)
        u = TestFunction(TensorProfile(profile))
        box = AxisBox(2, 1, 1.0)
        s = 0.5
        one_d = gagliardo_1d(TestFunction(profile), (-1.0, 1.0), s).value
        mc = gagliardo_nd(u, box, s, budget=400_000, seed=2)
        assert mc.value + 3 * mc.std_error <= tensor_profile_bound_factor(s) * 1.0 * one_d
        # the deterministic oracle on the same rectangle agrees with MC
        tq = gagliardo_2d_tensor(u, box, s, n_theta=48, n_r=48, n_x=48)
        assert abs(tq.value - mc.value) <= 3 * mc.std_error + 2e-3 * tq.value

    def test_bound_factor_is_kernel_integral(self):
        s = 0.3
        direct = integrate.quad(lambda t: (1 + t * t) ** (-(2 + s) / 2), -np.inf, np.inf)[0]
        assert tensor_profile_bound_factor(s) == pytest.approx(direct, rel=1e-12)

    def test_polygon_mc(self):
        # the square with an extra collinear vertex takes the general polygon path
        tri = Polygon2D([(0, 0), (1, 0), (1, 1), (0.5, 1.0), (0, 1)])
        u = TestFunction(Linear((1.0, 0.0)))
        est = gagliardo_nd(u, tri, 0.5, budget=200_000, seed=3)
        assert abs(est.value - LINEAR_2D_HALF) <= 3 * est.std_error


class TestBBM:
    def test_constants(self):
        assert bbm_constant(1) == 2.0
        assert bbm_constant(2) == pytest.approx(4.0, rel=1e-15)
        assert bbm_constant(3) == pytest.approx(2 * math.pi, rel=1e-15)

    def test_constant_is_sphere_integral(self):
        v = integrate.quad(lambda t: abs(math.cos(t)), 0, 2 * math.pi, points=[math.pi / 2, 3 * math.pi / 2])[0]
        assert bbm_constant(2) == pytest.approx(v, rel=1e-12)

    def test_linear_sweep(self):
        sweep = bbm_limit_sweep(LIN, (0.0, 1.0), [0.9, 0.95, 0.99])
        vals = [v for _, v in sweep]
        np.testing.assert_allclose(vals, [2 / (2 - s) for s, _ in sweep], rtol=1e-10)
        assert vals[0] < vals[1] < vals[2]
        assert abs(vals[-1] - 2.0) / 2.0 < 0.02

    def test_bump_and_step_limit(self):
        u = TestFunction(Sum((Step((0.3,), (0.5,)), SmoothBump((0.6,), 0.2, 1.0))))
        (_, v), = bbm_limit_sweep(u, (0.0, 1.0), [0.999])
        assert v == pytest.approx(bbm_constant(1) * 2.5, rel=2e-3)

    def test_constant_zero(self):
        assert bbm_limit_sweep(TestFunction(Constant(1.0)), (0.0, 1.0), [0.9]) == [(0.9, 0.0)]

    def test_2d_linear_tends_to_four(self):
        u = TestFunction(Linear((1.0, 0.0)))
        v = (1 - 0.99) * gagliardo_2d_tensor(u, SQUARE, 0.99).value
        assert v == pytest.approx(bbm_constant(2), rel=0.03)

    def test_invalid_dimension(self):
        with pytest.raises(DomainError):
            bbm_constant(0)


class TestPoincare:
    def test_linear_example(self):
        m = poincare_measure(LIN, (0.0, 1.0), 0.5)
        assert m.measured_constant == pytest.approx(0.1875, rel=1e-10)
        assert m.oscillation == pytest.approx(0.25) and m.seminorm == pytest.approx(8 / 3)

    @pytest.mark.parametrize("base", [Linear(), SmoothBump((0.4,), 0.3, 1.0), ClampedLinear(0.2, 0.7)])
    def test_scaling_invariance(self, base):
        vals = [
            poincare_measure(TestFunction(Dilation(base, lam)), (0.0, lam), 0.5).measured_constant
            for lam in (1 / 3, 1.0, 3.0)
        ]
        assert max(vals) / min(vals) - 1 < 1e-8

    def test_odd_function_numerator(self):
        u = TestFunction(Linear((1.0,), -0.5))
        m = poincare_measure(u, (0.0, 1.0), 0.5)
        assert m.oscillation == pytest.approx(0.25, abs=1e-14)

    def test_constant_raises(self):
        with pytest.raises(ZeroSeminormError):
            poincare_measure(TestFunction(Constant(2.0)), (0.0, 1.0), 0.5)

    def test_battery_max(self):
        battery = [LIN, BUMP, TestFunction(Step((0.5,), (1.0,)))]
        c = measured_poincare_constant(battery + [TestFunction(Constant(1.0))], [0.5, 0.9])
        singles = [poincare_measure(u, (0.0, 1.0), s).measured_constant for u in battery for s in (0.5, 0.9)]
        assert c == max(singles)

    def test_to_dict(self):
        d = poincare_measure(LIN, (0.0, 1.0), 0.5).to_dict()
        assert json.loads(json.dumps(d))["d"] == 1


class TestAvgChain:
    def test_halves(self):
        lhs, rhs, holds = avg_chain_check(LIN, (0.0, 0.5), (0.5, 1.0), (0.0, 1.0), 0.5)
        assert lhs == pytest.approx(0.5, abs=1e-14)
        c = 0.1875
        assert rhs == pytest.approx(c * 0.5 * 2 * (8 / 3), rel=1e-10)
        assert holds

    def test_small_far_sets(self):
        for E, F in [((0.0, 0.01), (0.9, 0.91)), ((0.1, 0.1001), (0.95, 1.0))]:
            lhs, rhs, holds = avg_chain_check(BUMP, E, F, (0.0, 1.0), 0.5)
            assert holds and rhs > lhs

    def test_not_contained(self):
        with pytest.raises(GeometryError):
            avg_chain_check(LIN, (0.0, 0.5), (0.5, 1.2), (0.0, 1.0), 0.5)

    def test_overlapping(self):
        with pytest.raises(GeometryError):
            avg_chain_check(LIN, (0.0, 0.6), (0.5, 1.0), (0.0, 1.0), 0.5)


class TestBVPoincare:
    def test_linear(self):
        assert bv_poincare_measure(LIN, (0.0, 1.0)) == pytest.approx(0.25, rel=1e-12)

    def test_step(self):
        assert bv_poincare_measure(TestFunction(Step((1.0,), (1.0,))), (0.0, 2.0)) == pytest.approx(1.0, rel=1e-12)

    def test_constant_shift(self):
        u = TestFunction(Sum((BUMP.descriptor, Constant(4.0))))
        assert bv_poincare_measure(u, (0.0, 1.0)) == pytest.approx(bv_poincare_measure(BUMP, (0.0, 1.0)), rel=1e-10)

    def test_bounded_over_battery(self):
        battery = [
            LIN,
            BUMP,
            TestFunction(Step((0.2,), (1.0,))),
            TestFunction(ClampedLinear(0.4, 0.5)),
            TestFunction(SmoothBump((0.1,), 0.05, 3.0)),
        ]
        vals = [bv_poincare_measure(u, (0.0, 1.0)) for u in battery]
        assert max(vals) <= 0.5 + 1e-12  # int |u - (u)| <= TV/2 on a unit interval

    def test_constant_raises(self):
        with pytest.raises(ZeroSeminormError):
            bv_poincare_measure(TestFunction(Constant(1.0)), (0.0, 1.0))


class TestCutoff:
    def test_one_and_zero(self):
        assert cutoff_multiplication_check(LIN, TestFunction(Constant(1.0)), (0.0, 1.0), 0.5) == pytest.approx(1.0)
        assert cutoff_multiplication_check(LIN, TestFunction(Constant(0.0)), (0.0, 1.0), 0.5) == 0.0

    def test_clamped_stable_under_refinement(self):
        xi = TestFunction(ClampedLinear(0.2, 0.6))
        coarse = cutoff_multiplication_check(TestFunction(Linear(), 256), xi, (0.0, 1.0), 0.5)
        fine = cutoff_multiplication_check(TestFunction(Linear(), 4096), xi, (0.0, 1.0), 0.5)
        assert abs(coarse / fine - 1) < 0.02
        assert np.isfinite(fine) and fine > 0


class TestEstimateRecord:
    def test_json_fields(self):
        est = gagliardo_nd(TestFunction(Linear((1.0, 0.0))), SQUARE, 0.5, budget=20_000, seed=9)
        d = json.loads(json.dumps(est.to_dict()))
        assert {"value", "std_error", "method", "s", "seed", "budget"} <= set(d)
        assert d["seed"] == 9 and d["method"] == "MonteCarloPairs"

    def test_closed_form_zero_error(self):
        with pytest.raises(DomainError):
            SeminormEstimate(1.0, 0.1, "Closed-form", 0.5)

    def test_unknown_method(self):
        with pytest.raises(DomainError):
            SeminormEstimate(1.0, 0.0, "Guess", 0.5)

    def test_bv_tag(self):
        assert SeminormEstimate(2.0, 0.0, "Closed-form", "BV").s == "BV"


def test_rectangle_region_tensor():
    u = TestFunction(Linear((1.0, 0.0)))
    a = gagliardo_2d_tensor(u, Rectangle(0, 1, 0, 1), 0.5).value
    assert a == pytest.approx(LINEAR_2D_HALF, rel=1e-12)
    assert tv_seminorm(u, Rectangle(0, 1, 0, 1)) == pytest.approx(1.0, rel=1e-8)
