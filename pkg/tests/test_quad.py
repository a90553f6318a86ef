import math

import numpy as np
import pytest
from scipy.special import fresnel

from offshell.errors import NotConverged
from offshell.quad import DEFAULT_TOL, Tolerance, Weight, integrate_finite, integrate_semi_infinite


def test_default_tolerances():
    assert (DEFAULT_TOL.rel, DEFAULT_TOL.abs, DEFAULT_TOL.limit) == (1e-9, 1e-12, 10_000)


def test_inverse_sqrt_left():
    r = integrate_finite(lambda x: x**-0.5, 0.0, 1.0, endpoint_weight=Weight.INV_SQRT_LEFT)
    assert r.value == pytest.approx(2.0, rel=1e-12)
    assert r.converged()


def test_inverse_sqrt_right():
    r = integrate_finite(lambda x: (1 - x) ** -0.5, 0.0, 1.0, endpoint_weight=Weight.INV_SQRT_RIGHT)
    assert r.value == pytest.approx(2.0, rel=1e-12)


def test_plain_sine():
    r = integrate_finite(math.sin, 0.0, math.pi)
    assert r.value == pytest.approx(2.0, rel=1e-12)
    assert r.abs_err_estimate >= 0 and r.n_evals > 0


def test_semi_infinite_examples():
    assert integrate_semi_infinite(math.exp, 0.0).value == pytest.approx(1.0, rel=1e-10)
    assert integrate_semi_infinite(lambda x: math.exp(x) * math.cos(x), 0.0).value == pytest.approx(0.5, rel=1e-10)
    assert integrate_semi_infinite(lambda x: x**-2, -1.0).value == pytest.approx(1.0, rel=1e-10)


def test_substitution_with_smooth_factors():
    w = Weight.INV_SQRT_LEFT
    assert integrate_finite(lambda x: x**-0.5, 0, 1, endpoint_weight=w).value == pytest.approx(2.0, rel=1e-11)
    assert integrate_finite(lambda x: x**0.5, 0, 1, endpoint_weight=w).value == pytest.approx(2 / 3, rel=1e-11)
    # int_0^1 cos(x)/sqrt(x) dx = sqrt(2 pi) C(sqrt(2/pi)) with the Fresnel integral C
    exact = math.sqrt(2 * math.pi) * fresnel(math.sqrt(2 / math.pi))[1]
    got = integrate_finite(lambda x: math.cos(x) * x**-0.5, 0, 1, endpoint_weight=w).value
    assert got == pytest.approx(exact, rel=1e-11)


def test_vector_integrand():
    r = integrate_finite(lambda x: np.array([1.0, x, x * x]), 0.0, 2.0)
    np.testing.assert_allclose(r.value, [2.0, 2.0, 8 / 3], rtol=1e-12)


def test_error_estimate_is_conservative():
    cases = [(math.exp, 0.0, 1.0), (lambda x: math.exp(x) * math.cos(x), 0.0, 0.5),
             (lambda x: x**-2, -1.0, 1.0)]
    rng = np.random.default_rng(7)
    hits = total = 0
    for _ in range(40):
        tol = Tolerance(rel=10 ** rng.uniform(-12, -3), abs=1e-300)
        for f, b, exact in cases:
            r = integrate_semi_infinite(f, b, tol)
            hits += r.abs_err_estimate >= abs(r.value - exact)
            total += 1
    assert hits / total >= 0.95


def test_budget_exhaustion_raises():
    with pytest.raises(NotConverged) as exc:
        integrate_finite(lambda x: math.sin(200 * x) * abs(x - 0.3) ** 0.1, 0.0, 1.0, Tolerance(1e-14, 1e-16, 3))
    assert exc.value.estimate > 0


def test_bad_interval():
    with pytest.raises(ValueError):
        integrate_finite(math.sin, 1.0, 1.0)
