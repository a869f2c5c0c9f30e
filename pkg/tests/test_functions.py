"""Analytic test functions: averages, L1 norms and total variation."""

import json

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hardylab.errors import DomainError, GeometryError
from hardylab.functions import (
    Affine,
    BoundaryPlateau,
    ClampedLinear,
    Constant,
    Dilation,
    Linear,
    Product,
    SmoothBump,
    Step,
    Sum,
    TensorProfile,
    TestFunction,
    average,
    descriptor_from_dict,
    export_grid_csv,
    l1_norm,
    mean_oscillation_integral,
    tv_numeric,
    tv_seminorm,
)
from hardylab.geometry import AxisBox, Interval, Polygon2D, Rectangle


def mp_bump_integral_1d(radius, amplitude):
    """int of the 1D bump over its support, by mpmath."""
    with mp.workdps(30):
        v = mp.quad(lambda x: mp.e * mp.exp(-1 / (1 - x**2)), [-1, 0, 1])
        return float(amplitude * radius * v)


def mp_bump_integral_2d(radius, amplitude):
    with mp.workdps(30):
        v = mp.quad(lambda r: mp.e * mp.exp(-1 / (1 - r**2)) * r, [0, 1])
        return float(amplitude * 2 * mp.pi * radius**2 * v)


LIN = TestFunction(Linear())
BUMP = TestFunction(SmoothBump((0.5,), 0.3, 1.7))


class TestAverage:
    def test_linear(self):
        assert average(LIN, (0.0, 1.0)) == pytest.approx(0.5, abs=1e-15)
        assert average(LIN, (0.0, 0.5)) == pytest.approx(0.25, abs=1e-15)

    def test_bump_support(self):
        expected = mp_bump_integral_1d(0.3, 1.7) / 0.6
        assert average(BUMP, (0.2, 0.8)) == pytest.approx(expected, rel=1e-6)

    def test_bump_2d(self):
        u = TestFunction(SmoothBump((0.5, 0.5), 0.3, 1.0))
        expected = mp_bump_integral_2d(0.3, 1.0)
        assert average(u, Polygon2D.unit_square()) == pytest.approx(expected, rel=1e-6)

    def test_bounded_by_sup(self):
        for E in [(0.0, 1.0), (0.3, 0.4), (0.55, 0.9)]:
            assert abs(average(BUMP, E)) <= 1.7

    def test_odd_perturbation_invisible(self):
        u = TestFunction(Sum((SmoothBump((0.5,), 0.3, 1.0), Linear((3.0,), -1.5))))
        base = TestFunction(SmoothBump((0.5,), 0.3, 1.0))
        assert average(u, (0.0, 1.0)) == pytest.approx(average(base, (0.0, 1.0)), abs=1e-14)

    def test_empty_region(self):
        with pytest.raises(GeometryError):
            average(LIN, (0.5, 0.5))

    def test_interval_domain(self):
        assert average(LIN, Interval(1.0)) == pytest.approx(1.0)

    def test_rectangle_linear(self):
        u = TestFunction(Linear((1.0, 2.0)))
        assert average(u, Rectangle(0, 2, 0, 1)) == pytest.approx(2.0, rel=1e-13)

    def test_triangle_linear(self):
        # centroid of (0,0), (3,0), (0,3) is (1, 1)
        u = TestFunction(Linear((1.0, 1.0)))
        assert average(u, Polygon2D([(0, 0), (3, 0), (0, 3)])) == pytest.approx(2.0, rel=1e-12)


class TestL1:
    def test_linear(self):
        assert l1_norm(LIN, (0.0, 1.0)) == pytest.approx(0.5, abs=1e-15)

    def test_sign_change(self):
        u = TestFunction(Linear((1.0,), -0.3))
        assert l1_norm(u, (0.0, 1.0)) == pytest.approx(0.5 * (0.09 + 0.49), rel=1e-13)

    def test_step(self):
        assert l1_norm(TestFunction(Step((1.0,), (1.0,))), Interval(1.0)) == pytest.approx(1.0, abs=1e-13)

    def test_bump(self):
        assert l1_norm(BUMP, (0.0, 1.0)) == pytest.approx(mp_bump_integral_1d(0.3, 1.7), rel=1e-6)

    def test_mean_oscillation_linear(self):
        assert mean_oscillation_integral(LIN, (0.0, 1.0)) == pytest.approx(0.25, abs=1e-14)


class TestTotalVariation:
    def test_linear(self):
        assert tv_seminorm(LIN, (0.0, 1.0)) == pytest.approx(1.0, abs=1e-14)

    def test_step_height_two(self):
        u = TestFunction(Step((1.0,), (2.0,)))
        assert tv_seminorm(u, Interval(1.0)) == pytest.approx(2.0)

    def test_bump_twice_amplitude(self):
        assert tv_seminorm(BUMP, (0.0, 1.0)) == pytest.approx(3.4, rel=1e-6)

    def test_known_tv_returned(self):
        u = TestFunction(SmoothBump((0.5,), 0.3, 1.0), known_tv=2.0)
        assert tv_seminorm(u, (0.0, 1.0)) == 2.0

    def test_numeric_converges_to_known(self):
        errs = [abs(tv_numeric(BUMP.with_grid(g), (0.0, 1.0)) - 3.4) for g in (16, 64, 256)]
        assert errs[-1] < 1e-8
        assert errs[-1] <= errs[0]

    @settings(max_examples=25, deadline=None)
    @given(st.floats(-5, 5))
    def test_constant_shift_invariant(self, c):
        u = TestFunction(Affine(BUMP.descriptor, 1.0, c))
        assert tv_seminorm(u, (0.0, 1.0)) == pytest.approx(3.4, rel=1e-6)

    def test_mean_removed_same_tv(self):
        c = average(BUMP, (0.0, 1.0))
        u = TestFunction(Affine(BUMP.descriptor, 1.0, -c))
        assert tv_seminorm(u, (0.0, 1.0)) == pytest.approx(tv_seminorm(BUMP, (0.0, 1.0)), rel=1e-12)

    def test_linear_2d(self):
        u = TestFunction(Linear((0.6, 0.8)))
        assert tv_seminorm(u, Polygon2D.unit_square()) == pytest.approx(1.0, rel=1e-8)

    def test_tensor_profile_2d(self):
        # TV of u'(x_1) on I x (0, h) is h * TV(u')
        u = TestFunction(TensorProfile(SmoothBump((0.0,), 0.5, 1.0)))
        assert tv_seminorm(u, AxisBox(2, 1, 1.0)) == pytest.approx(2.0, rel=1e-5)

    def test_plateau_1d(self):
        u = TestFunction(BoundaryPlateau(1.0, 0.05, 0.2, Interval(1.0)))
        assert tv_seminorm(u, Interval(1.0)) == pytest.approx(2.0, rel=1e-10)

    def test_no_derivative(self):
        class Opaque(Constant):
            def derivative(self, x):
                raise NotImplementedError

        with pytest.raises(DomainError):
            tv_numeric(TestFunction(Opaque()), (0.0, 1.0))


class TestDescriptors:
    def test_bump_vanishes_outside_support(self):
        x = np.array([0.0, 0.19, 0.81, 1.0])
        np.testing.assert_array_equal(BUMP(x), 0.0)
        assert BUMP(np.array([0.5]))[0] == pytest.approx(1.7)

    def test_tensor_constant_in_last_variable(self):
        u = TensorProfile(SmoothBump((0.0,), 0.5, 1.0))
        x = np.array([[0.1, 0.0], [0.1, 0.3], [0.1, 0.99]])
        assert np.ptp(u(x)) == 0.0

    def test_plateau_collar(self):
        u = BoundaryPlateau(2.0, 0.1, 0.3, Interval(1.0))
        np.testing.assert_allclose(u(np.array([0.05, 0.1, 1.95])), 2.0)
        np.testing.assert_allclose(u(np.array([0.4, 1.0, 1.6])), 0.0)

    def test_plateau_square(self):
        u = BoundaryPlateau(1.0, 0.05, 0.1, Polygon2D.unit_square())
        np.testing.assert_allclose(u(np.array([[0.02, 0.5], [0.5, 0.5]])), [1.0, 0.0])

    def test_plateau_rejects_zero(self):
        with pytest.raises(DomainError):
            BoundaryPlateau(0.0, 0.1, 0.2, Interval(1.0))

    def test_derivatives_match_differences(self):
        x = np.linspace(0.05, 0.95, 37)
        h = 1e-6
        for d in [SmoothBump((0.5,), 0.3, 1.7), ClampedLinear(0.2, 0.6), Dilation(Linear(), 3.0)]:
            fd = (d(x + h) - d(x - h)) / (2 * h)
            mask = np.all(np.abs(x[:, None] - d.breakpoints()[None, :]) > 2 * h, axis=1)
            np.testing.assert_allclose(d.derivative(x)[mask], fd[mask], atol=1e-6)

    @pytest.mark.parametrize(
        "d",
        [
            Linear(),
            Constant(2.0),
            SmoothBump((0.5, 0.5), 0.3, 1.0),
            TensorProfile(),
            Step((0.3, 0.7), (1.0, -2.0), 0.5),
            BoundaryPlateau(1.0, 0.1, 0.2, Interval(1.0)),
            ClampedLinear(0.1, 0.4),
            Dilation(Linear(), 2.0),
            Sum((Linear(), Step())),
            Product(Linear(), ClampedLinear()),
        ],
    )
    def test_json_roundtrip(self, d):
        assert descriptor_from_dict(json.loads(json.dumps(d.to_dict()))) == d

    def test_function_roundtrip(self):
        u = TestFunction(SmoothBump((0.5,), 0.3, 1.0), 256, known_tv=2.0)
        assert TestFunction.from_dict(json.loads(json.dumps(u.to_dict()))) == u


def test_export_grid_csv(tmp_path):
    path = tmp_path / "u.csv"
    export_grid_csv(LIN, (0.0, 1.0), path, grid=4)
    rows = path.read_text().splitlines()
    assert rows[0] == "x,value"
    assert rows[-1] == "1,1"
    assert len(rows) == 6
