"""
Tests for the monotone nonlinearity families.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pnlsep.exceptions import DomainError, RangeError, RejectedInputError
from pnlsep.models.nonlinearity import (
    PROJECTION_MIN_SLOPE,
    TANH_SATURATION,
    Cubic,
    Identity,
    InverseOf,
    MonotonePWL,
    ScaledTanh,
    project_increasing,
)

FD_STEP = 1e-5


def pwl_example():
    knots = np.array([-2.0, -0.5, 0.0, 1.0, 3.0])
    return MonotonePWL(knots=knots, values=np.array([-3.0, -1.0, 0.2, 0.9, 4.0]))


def constructible():
    return [Identity(), ScaledTanh(a=2.0), Cubic(c=0.0), Cubic(c=0.5), pwl_example()]


def shifted(f, theta):
    # No projection, so finite differences see the raw parameters
    if isinstance(f, MonotonePWL):
        return f.with_params(theta, min_slope=0.0)
    return f.with_params(theta)


class TestEval:
    def test_identity(self):
        assert Identity().eval(3.7) == 3.7

    def test_scaled_tanh_is_odd(self):
        assert ScaledTanh(a=2.0).eval(0.0) == 0.0

    def test_cubic(self):
        assert Cubic(c=0.5).eval(-2.0) == pytest.approx(-6.0)
        assert Cubic(c=0.3).eval(2.0) == pytest.approx(4.4)

    def test_pwl_interpolates_and_extrapolates(self):
        f = pwl_example()
        assert f.eval(-0.5) == pytest.approx(-1.0)
        assert f.eval(0.5) == pytest.approx(0.55)
        # End-segment slopes beyond the knots
        assert f.eval(-3.0) == pytest.approx(-3.0 - 4.0 / 3.0)
        assert f.eval(4.0) == pytest.approx(4.0 + 3.1 / 2.0)

    def test_outside_domain(self):
        with pytest.raises(DomainError):
            Cubic(c=0.3, domain=(-1.0, 1.0)).eval(np.array([0.0, 2.0]))

    def test_nan_is_outside_domain(self):
        with pytest.raises(DomainError):
            Identity().eval(np.nan)

    def test_elementwise_shape(self):
        z = np.linspace(-1, 1, 12).reshape(3, 4)
        for f in constructible():
            assert np.shape(f.eval(z)) == z.shape


class TestDeriv:
    def test_identity(self):
        assert np.all(Identity().deriv(np.array([-4.0, 0.0, 9.0])) == 1.0)

    def test_cubic(self):
        assert Cubic(c=0.3).deriv(2.0) == pytest.approx(4.6)

    def test_pwl_right_continuous(self):
        f = pwl_example()
        assert f.deriv(0.0) == pytest.approx(0.7)
        assert f.deriv(-1e-12) == pytest.approx(1.2 / 0.5)

    @pytest.mark.parametrize("f", [ScaledTanh(a=1.5), Cubic(c=0.3)], ids=["scaled_tanh", "cubic"])
    def test_matches_finite_difference(self, f):
        z = np.linspace(-2.0, 2.0, 41)
        numeric = (f.eval(z + FD_STEP) - f.eval(z - FD_STEP)) / (2 * FD_STEP)
        np.testing.assert_allclose(f.deriv(z), numeric, rtol=1e-6)


class TestInverse:
    def test_identity(self):
        assert Identity().inverse(5.0) == 5.0

    def test_scaled_tanh(self):
        assert ScaledTanh(a=1.0).inverse(np.tanh(0.7)) == pytest.approx(0.7, abs=1e-10)

    def test_cubic_fixed_point(self):
        assert Cubic(c=1.0).inverse(2.0) == pytest.approx(1.0, abs=1e-10)

    def test_pwl_exact(self):
        f = pwl_example()
        z = np.linspace(-5.0, 5.0, 101)
        np.testing.assert_allclose(f.inverse(f.eval(z)), z, atol=1e-12)

    def test_outside_image(self):
        with pytest.raises(RangeError):
            ScaledTanh(a=1.0).inverse(1.5)

    def test_outside_bounded_image(self):
        with pytest.raises(RangeError):
            Cubic(c=0.0, domain=(-1.0, 1.0)).inverse(2.0)

    def test_rejects_non_positive_tolerance(self):
        with pytest.raises(RejectedInputError):
            Cubic(c=1.0).inverse(2.0, tol=0.0)

    @pytest.mark.parametrize("f", constructible(), ids=lambda f: f.family)
    def test_inverse_consistency(self, f, rng):
        z = rng.uniform(-3.0, 3.0, size=1000)
        np.testing.assert_allclose(f.inverse(f.eval(z), 1e-10), z, atol=1e-8)

    def test_inverse_of_swaps_domain_and_image(self):
        base = ScaledTanh(a=1.0)
        inverse = InverseOf(base=base)
        assert inverse.domain == base.image
        assert inverse.eval(np.tanh(0.3)) == pytest.approx(0.3, abs=1e-10)
        assert inverse.deriv(0.0) == pytest.approx(1.0)
        assert inverse.inverse(0.3) == pytest.approx(np.tanh(0.3))
        assert inverse.n_params == 0

    def test_artanh_fit_compensates_tanh(self):
        knots = np.linspace(-0.99, 0.99, 399)
        g = MonotonePWL(knots=knots, values=np.arctanh(knots))
        assert g.eval(np.tanh(1.0)) == pytest.approx(1.0, abs=1e-4)

    def test_scaled_tanh_domain_stops_before_saturation(self):
        f = ScaledTanh(a=10.0)
        assert f.domain == pytest.approx((-1.8, 1.8))
        with pytest.raises(DomainError):
            f.eval(2.0)

    def test_inverse_of_accepts_its_whole_domain(self):
        inverse = InverseOf(base=ScaledTanh(a=10.0))
        lo, hi = inverse.domain
        assert -1.0 < lo and hi < 1.0
        np.testing.assert_allclose(inverse.eval(np.array([lo, hi])), [-1.8, 1.8], atol=0.01)
        with pytest.raises(DomainError):
            inverse.eval(1.0)

    def test_explicit_domain_is_clipped(self):
        assert ScaledTanh(a=2.0, domain=(-1.0, 100.0)).domain == pytest.approx((-1.0, 9.0))


class TestParameterGradients:
    def test_identity_has_no_parameters(self):
        assert Identity().param_grad(2.0).shape == (0,)
        assert Identity().deriv_param_grad(2.0).shape == (0,)

    def test_cubic_examples(self):
        np.testing.assert_allclose(Cubic(c=0.3).param_grad(2.0), [8.0])
        np.testing.assert_allclose(Cubic(c=0.3).deriv_param_grad(2.0), [12.0])

    def test_parameter_axis_first(self):
        z = np.linspace(-1, 1, 6).reshape(2, 3)
        f = pwl_example()
        assert f.param_grad(z).shape == (5, 2, 3)
        assert f.deriv_param_grad(z).shape == (5, 2, 3)

    @pytest.mark.parametrize(
        "f", [ScaledTanh(a=1.3), Cubic(c=0.4), pwl_example()], ids=["scaled_tanh", "cubic", "monotone_pwl"]
    )
    def test_match_finite_differences(self, f):
        z = np.array([-2.7, -1.3, -0.2, 0.35, 0.8, 2.2, 3.9])
        analytic_value = f.param_grad(z)
        analytic_slope = f.deriv_param_grad(z)
        theta = f.params
        for k in range(theta.size):
            bump = np.zeros_like(theta)
            bump[k] = FD_STEP
            plus, minus = shifted(f, theta + bump), shifted(f, theta - bump)
            numeric_value = (plus.eval(z) - minus.eval(z)) / (2 * FD_STEP)
            numeric_slope = (plus.deriv(z) - minus.deriv(z)) / (2 * FD_STEP)
            np.testing.assert_allclose(analytic_value[k], numeric_value, rtol=1e-5, atol=1e-9)
            np.testing.assert_allclose(analytic_slope[k], numeric_slope, rtol=1e-5, atol=1e-9)


class TestConstruction:
    def test_rejects_non_increasing_values(self):
        with pytest.raises(RejectedInputError):
            MonotonePWL(knots=np.array([0.0, 1.0, 2.0]), values=np.array([0.0, 1.0, 1.0]))

    def test_rejects_unsorted_knots(self):
        with pytest.raises(RejectedInputError):
            MonotonePWL(knots=np.array([0.0, 2.0, 1.0]), values=np.array([0.0, 1.0, 2.0]))

    def test_rejects_bad_parameters(self):
        with pytest.raises(RejectedInputError):
            ScaledTanh(a=0.0)
        with pytest.raises(RejectedInputError):
            Cubic(c=-0.1)

    def test_rejects_empty_domain(self):
        with pytest.raises(RejectedInputError):
            Identity(domain=(1.0, 1.0))

    def test_instances_are_immutable(self):
        f = pwl_example()
        with pytest.raises(ValueError):
            f.values[0] = 10.0


class TestProjection:
    def test_clamps_slopes(self):
        knots = np.array([0.0, 1.0, 2.0, 4.0])
        projected = project_increasing(knots, np.array([0.0, 2.0, 1.0, 5.0]))
        assert projected[0] == 0.0
        assert np.all(np.diff(projected) / np.diff(knots) >= PROJECTION_MIN_SLOPE * (1 - 1e-12))

    def test_feasible_values_unchanged(self):
        knots = np.array([0.0, 1.0, 2.0])
        values = np.array([-1.0, 0.0, 3.0])
        np.testing.assert_array_equal(project_increasing(knots, values), values)

    def test_with_params_projects(self):
        f = pwl_example().with_params(np.array([0.0, -1.0, -2.0, 5.0, 6.0]))
        assert f.slopes.min() >= PROJECTION_MIN_SLOPE * (1 - 1e-9)

    def test_affine(self):
        f = pwl_example().affine(2.0, -1.0)
        assert f.eval(1.0) == pytest.approx(2.0 * 0.9 - 1.0)
        with pytest.raises(RejectedInputError):
            pwl_example().affine(-1.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(
    c=st.floats(min_value=0.0, max_value=2.0),
    pair=st.tuples(st.floats(-50.0, 50.0), st.floats(-50.0, 50.0)).filter(lambda p: abs(p[0] - p[1]) > 1e-6),
)
def test_eval_preserves_order(c, pair):
    lo, hi = sorted(pair)
    assert Cubic(c=c).eval(lo) < Cubic(c=c).eval(hi)
    assert pwl_example().eval(lo) < pwl_example().eval(hi)


@settings(max_examples=50, deadline=None)
@given(
    a=st.floats(min_value=0.05, max_value=50.0),
    start=st.floats(min_value=-TANH_SATURATION, max_value=TANH_SATURATION - 1.0),
    gap=st.floats(min_value=1.0, max_value=2.0 * TANH_SATURATION),
)
def test_scaled_tanh_strictly_increasing_on_domain(a, start, gap):
    # tanh values are spaced at least one unit of a*z apart; closer pairs can round together near saturation
    f = ScaledTanh(a=a)
    lo, hi = start / a, min(start + gap, TANH_SATURATION) / a
    assert f.domain[0] <= lo < hi <= f.domain[1]
    assert f.eval(lo) < f.eval(hi)
    assert -1.0 < f.image[0] and f.image[1] < 1.0


@settings(max_examples=50, deadline=None)
@given(
    increments=st.lists(st.floats(min_value=1e-3, max_value=10.0), min_size=2, max_size=12),
    z=st.floats(min_value=-100.0, max_value=100.0),
)
def test_pwl_inverse_round_trip(increments, z):
    values = np.concatenate([[0.0], np.cumsum(increments)])
    f = MonotonePWL(knots=np.arange(values.size, dtype=float), values=values)
    assert f.inverse(f.eval(z)) == pytest.approx(z, abs=1e-8)
