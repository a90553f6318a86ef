import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.special import gamma

from offshell.core import O32, O41, FiveVector, Static, direct_R
from offshell.errors import PoleAt, ZeroPrefactor
from offshell.greens import (K_m, KernelOrder, N_m, cone_r2, gamma_signed, gf_denominator, gf_retarded,
                             phi_alpha, ultrahyperbolic_laplacian)


def _far_from_poles(*zs):
    return all(z > 0 or abs(z - round(z)) > 1e-3 for z in zs)


@given(st.floats(-6.5, 6.5))
@settings(max_examples=80)
def test_gamma_signed_matches_scipy(z):
    assume(_far_from_poles(z) and abs(z) > 1e-300)  # Gamma overflows a double below that
    sign, lg = gamma_signed(z)
    assert sign * math.exp(lg) == pytest.approx(gamma(z), rel=1e-12)


@given(st.floats(0.05, 7.9), st.sampled_from([1, 3]))
@settings(max_examples=80)
def test_N_matches_direct_gamma_product(alpha, p):
    m = 5
    assume(_far_from_poles((2 + alpha - m) / 2, (1 - alpha) / 2, alpha))
    direct = (2 * math.pi ** ((m - 3) / 2) * math.sin(math.pi * p / 2)
              * gamma((2 + alpha - m) / 2) * gamma((1 - alpha) / 2) * gamma(alpha))
    assert N_m(alpha, m, p) == pytest.approx(direct, rel=1e-11)


@given(st.floats(0.05, 7.9), st.sampled_from([1, 3]))
@settings(max_examples=80)
def test_K_matches_direct_gamma_product(alpha, p):
    m = 5
    args = ((alpha - m + 2) / 2, alpha, (1 - alpha) / 2, (alpha - p + 2) / 2, (p - alpha) / 2)
    assume(_far_from_poles(*args))
    direct = (math.pi ** ((m - 1) / 2) * gamma(args[0]) * gamma(args[1]) * gamma(args[2])
              / (gamma(args[3]) * gamma(args[4])))
    assert K_m(alpha, m, p) == pytest.approx(direct, rel=1e-11)


def test_green_function_denominators():
    assert gf_denominator(5, 1) == pytest.approx(-4 * math.pi**2, rel=1e-12)
    assert gf_denominator(5, 3) == pytest.approx(4 * math.pi**2, rel=1e-12)


def test_K_finite_at_two():
    assert math.isfinite(K_m(2.0, 5, 1))


@pytest.mark.parametrize("p", [1, 3])
def test_K_pole_at_alpha_equal_p(p):
    with pytest.raises(PoleAt):
        K_m(float(p), 5, p)


def test_even_p_prefactor_vanishes():
    with pytest.raises(ZeroPrefactor):
        N_m(2.5, 5, 4)
    with pytest.raises(ZeroPrefactor):
        gf_denominator(5, 2)


def test_normalizations_blow_up_as_alpha_to_zero():
    ks = [abs(K_m(a)) for a in (1e-2, 1e-4, 1e-6)]
    ns = [abs(N_m(a)) for a in (1e-2, 1e-4, 1e-6)]
    assert ks[0] < ks[1] < ks[2] and ks[2] > 1e6
    assert ns[0] < ns[1] < ns[2] and ns[2] > 1e6


def test_N_at_two_is_eight_pi_squared():
    # 2 pi Gamma(-1/2)^2 Gamma(2) = 2 pi (4 pi)
    assert N_m(2.0) == pytest.approx(8 * math.pi**2, rel=1e-13)


def test_phi_alpha_support_and_value():
    order = KernelOrder(2.0)
    inside = FiveVector(2, 0, 0, 0, 1)
    assert phi_alpha(inside, order) == pytest.approx(3**-1.5 / (8 * math.pi**2), rel=1e-13)
    assert phi_alpha(FiveVector(0, 1, 0, 0, 0.5), order) == 0.0
    assert phi_alpha(FiveVector(2, 0, 0, 0, -1), order) == 0.0


def test_gf_retarded_values():
    val = gf_retarded(FiveVector(2, 0, 0, 0, 1), O41)
    assert val == pytest.approx(-(3**-1.5) / (4 * math.pi**2), rel=1e-13)
    assert val == pytest.approx(-4.87482e-3, rel=1e-5)
    assert gf_retarded(FiveVector(2, 0, 0, 0, -1)) == 0.0
    assert gf_retarded(FiveVector(0, 1, 0, 0, 0.5)) == 0.0
    # on the cone boundary
    assert gf_retarded(FiveVector(5, 3, 0, 0, 4)) == 0.0


def test_green_function_is_twice_the_order_two_kernel():
    x = FiveVector(2.0, 0.3, -0.4, 0.1, 1.0)
    assert gf_retarded(x, O41) == pytest.approx(-2 * phi_alpha(x, KernelOrder(2.0, 5, 1), O41), rel=1e-13)


pts = st.tuples(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))


@given(pts)
@settings(max_examples=100)
def test_gf_sign_by_signature(v):
    x = FiveVector(*v)
    assert gf_retarded(x, O41) <= 0.0
    assert gf_retarded(x, O32) >= 0.0


@given(pts, st.sampled_from([O41, O32]))
@settings(max_examples=100)
def test_gf_matches_kernel_of_point_source(v, sig):
    x = FiveVector(*v)
    # a source at rest at the origin, evaluated at tau' = 0, sees the same cone function
    R = direct_R(x, Static(), 0.0, sig)
    assert R == pytest.approx(cone_r2(FiveVector(x.t, x.x, x.y, x.z, x.tau), sig), abs=1e-12)
    assume(not 0 < R < 1e-100)
    expect = 0.0 if (x.tau <= 0 or R <= 0) else -sig.sigma5 / (4 * math.pi**2) * R**-1.5
    assert gf_retarded(x, sig) == pytest.approx(expect, rel=1e-12)


def _cone_points(sig, n, seed):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        v = FiveVector(*rng.uniform(-1.5, 1.5, 5))
        if v.tau > 0.3 and cone_r2(v, sig) > 0.5:
            out.append(v)
    return out


@pytest.mark.parametrize("sig", [O41, O32])
@pytest.mark.parametrize("alpha", [4.0, 6.0, 4.5])
def test_laplacian_descent(sig, alpha):
    order, lower = KernelOrder(alpha, 5, sig.p_eff), KernelOrder(alpha - 2, 5, sig.p_eff)
    for x in _cone_points(sig, 4, int(alpha * 10) + sig.p_eff):
        target = -phi_alpha(x, lower, sig)
        e1 = abs(ultrahyperbolic_laplacian(lambda y: phi_alpha(y, order, sig), x, sig, 1e-2) - target)
        e2 = abs(ultrahyperbolic_laplacian(lambda y: phi_alpha(y, order, sig), x, sig, 5e-3) - target)
        assert e2 < 1e-3 * abs(target)
        assert 3.0 < e1 / e2 < 5.0
