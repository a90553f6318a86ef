import math

import numpy as np
import pytest

from offshell.core import O32, O41, FiveVector, Hyperbolic, Static, Uniform, boost_shift
from offshell.quad import Tolerance
from offshell.regfp import RegParams
from offshell.solver import (FieldTensor, Flag, SolverParams, field_from_potential_check, field_tensor,
                             lorentz_force, potential, self_force, zero_mode)

HYP = Hyperbolic(1.0)
SMOOTH = [(0.5, -0.3, 1.0, -1.5), (0.2, 0.6, 0.8, -1.0), (-0.4, 1.3, 1.2, -0.7), (1.0, -0.6, 0.5, -2.0)]


def _boost(alpha):
    ch, sh = math.cosh(alpha), math.sinh(alpha)
    L = np.eye(4)
    L[:2, :2] = [[ch, -sh], [-sh, ch]]
    return L


def test_empty_support_gives_zeros():
    obs = FiveVector.axisymmetric(0.0, -3.0, 1.0, -8.0)
    pv, rep = potential(obs, HYP, O41)
    ft, rep_f = field_tensor(obs, HYP, O41)
    assert rep.n_roots == 0 and rep.segments_used == 0
    assert np.all(pv.as_array() == 0.0)
    assert np.all(ft.as_array() == 0.0)
    assert field_from_potential_check(obs, HYP, O41) == 0.0


def test_static_potential_matches_oracle():
    obs = FiveVector.axisymmetric(1.0, math.sqrt(2.0), 0.0, 0.0)
    pv, rep = potential(obs, Static(), O41)
    # with the other sign of tau^2 R is quadratic and the finite part is nonzero
    a, _ = potential(obs, Static(), O32)
    b, _ = potential(obs, Static(), O32, oracle=True)
    assert np.max(np.abs(a.as_array())) > 1e-3
    assert np.allclose(a.as_array(), b.as_array(), rtol=1e-6, atol=0)
    ref, _ = potential(obs, Static(), O41, oracle=True)
    assert rep.n_roots == 1 and rep.segments_used == 1
    # R = -1 - 2 tau' has no scale, so the finite part of its -3/2 power vanishes
    assert np.max(np.abs(pv.as_array())) < 1e-12
    assert np.max(np.abs(ref.as_array())) < 1e-9
    # a source at rest drives only a_t and a_tau
    assert pv.a_x == 0.0 and pv.a_rho == 0.0


@pytest.mark.parametrize("p", SMOOTH)
def test_engine_matches_cutoff_oracle(p):
    obs = FiveVector.axisymmetric(*p)
    for fn in (potential, field_tensor):
        v, rep = fn(obs, HYP, O41)
        ref, _ = fn(obs, HYP, O41, oracle=True)
        v, ref = v.as_array(), ref.as_array()
        assert not rep.flags
        assert np.max(np.abs(v - ref)) <= 1e-5 * np.max(np.abs(ref))


def test_axisymmetry():
    t, x, rho, tau = SMOOTH[0]
    a = field_tensor(FiveVector(t, x, rho, 0.0, tau), HYP, O41)[0].as_array()
    c, s = math.cos(0.7), math.sin(0.7)
    b = field_tensor(FiveVector(t, x, rho * c, rho * s, tau), HYP, O41)[0].as_array()
    assert np.allclose(a, b, rtol=1e-9, atol=1e-12 * np.max(np.abs(a)))
    pa = potential(FiveVector(t, x, 0.0, rho, tau), HYP, O41)[0]
    assert pa.a_rho == 0.0


def test_antisymmetric_reconstruction():
    ft = field_tensor(FiveVector.axisymmetric(*SMOOTH[1]), HYP, O41)[0]
    m = ft.matrix()
    assert np.array_equal(m, -m.T)
    assert FieldTensor.from_matrix(m) == ft


@pytest.mark.parametrize("h", [0.05, 0.2])
def test_offset_invariance(h):
    obs = FiveVector.axisymmetric(*SMOOTH[2])
    base = field_tensor(obs, HYP, O41)[0].as_array()
    other = field_tensor(obs, HYP, O41, SolverParams(reg=RegParams(h=h)))[0].as_array()
    assert np.max(np.abs(other - base)) <= 1e-6 * np.max(np.abs(base))


@pytest.mark.parametrize("alpha", [-0.6, 0.4])
def test_boost_shift_covariance(alpha):
    obs = FiveVector.axisymmetric(*SMOOTH[0])
    L = _boost(alpha)
    f0 = field_tensor(obs, HYP, O41)[0].matrix()
    f1 = field_tensor(boost_shift(obs, alpha), HYP, O41)[0].matrix()
    assert np.allclose(f1, L @ f0 @ L.T, rtol=0, atol=1e-7 * np.max(np.abs(f0)))
    a0 = potential(obs, HYP, O41)[0].as_array()
    a1 = potential(boost_shift(obs, alpha), HYP, O41)[0].as_array()
    assert np.allclose(a1, L @ a0, rtol=0, atol=1e-7 * np.max(np.abs(a0)))


def test_field_from_potential_second_order():
    obs = FiveVector.axisymmetric(*SMOOTH[0])
    e1 = field_from_potential_check(obs, HYP, O41, step=1e-2)
    e2 = field_from_potential_check(obs, HYP, O41, step=5e-3)
    assert field_from_potential_check(obs, HYP, O41, step=1e-3) <= 1e-3
    assert 3.0 < e1 / e2 < 5.0


def test_field_from_potential_needs_endpoint_term():
    # R(tau) > 0 here, so the upper limit of the history contributes to d/dtau
    obs = FiveVector.axisymmetric(1.0, 0.8, 1.0, -0.5)
    assert field_from_potential_check(obs, HYP, O41) < 1e-4
    assert field_from_potential_check(obs, HYP, O41, SolverParams(endpoint_term=False)) > 1e-2


def test_near_shock_flag_and_singular_point():
    from scipy.optimize import brentq
    from offshell.core import RetardationKernel
    t, x, tau = -2.0, 1.6, 0.5
    k0 = RetardationKernel(FiveVector.axisymmetric(t, x, 0.0, tau), HYP, O32)
    s_star = brentq(k0.rdot, -3.0, -2.5, xtol=1e-15)
    rho_c = math.sqrt(-k0.r(s_star))
    ft, rep = field_tensor(FiveVector.axisymmetric(t, x, rho_c, tau), HYP, O32)
    assert Flag.SINGULAR in rep.flags
    assert np.all(np.isnan(ft.as_array()))
    _, rep = potential(FiveVector.axisymmetric(t, x, rho_c * (1 - 1e-6), tau), HYP, O32)
    assert Flag.NEAR_SHOCK in rep.flags


def test_q_scaling():
    obs = FiveVector.axisymmetric(*SMOOTH[1])
    a1 = field_tensor(obs, HYP, O41)[0].as_array()
    a3 = field_tensor(obs, HYP, O41, SolverParams(q=3.0))[0].as_array()
    assert np.allclose(a3, 3 * a1, rtol=1e-14, atol=0)


def test_self_force_uniform_is_zero():
    for w in (Static(), Uniform.boosted(0.7)):
        for sig in (O41, O32):
            r = self_force(w, 0.3, sig)
            assert np.all(r.value == 0.0)


def test_self_force_hyperbolic():
    vals = [self_force(HYP, 0.0, O41, delta=d).value for d in (0.1, 0.05, 0.025)]
    for v in vals:
        assert np.max(np.abs(v)) > 0
    signs = {tuple(np.sign(np.round(v, 14))) for v in vals}
    assert len(signs) == 1
    v2 = self_force(HYP, 0.0, O41, q=2.0).value
    assert np.allclose(v2, 4 * self_force(HYP, 0.0, O41).value, rtol=1e-14, atol=0)


def test_self_force_is_stationary_along_the_boost():
    # the hyperbola is boost invariant, so the force at tau is the boosted force at 0
    v0 = self_force(HYP, 0.0, O41).value
    v1 = self_force(HYP, 0.5, O41).value
    L = np.eye(4)
    ch, sh = math.cosh(0.5), math.sinh(0.5)
    L[:2, :2] = [[ch, sh], [sh, ch]]
    assert np.allclose(v1, L @ v0, rtol=1e-8, atol=1e-12 * np.max(np.abs(v0)))


def test_lorentz_force():
    zero = FieldTensor()
    assert np.all(lorentz_force(zero, [1.0, 0, 0, 1.0]) == 0)
    f = FieldTensor(f_xtau=2.0)
    out = lorentz_force(f, [1.0, 0.0, 0.0, 1.0], e0=1.5)
    assert out[1] == pytest.approx(1.5 * 2.0)
    assert out[0] == 0 and out[2] == 0
    g = FieldTensor(f_xt=0.3, f_trho=-0.2, f_ttau=0.1)
    xd = [1.2, 0.4, 0.1, 1.0]
    assert np.allclose(lorentz_force(f, xd, 2.0) + lorentz_force(g, xd, 2.0),
                       2.0 * lorentz_force(FieldTensor.from_matrix(f.matrix() + g.matrix()), xd))


def test_zero_mode_vanishes_left_of_both_fronts():
    res = zero_mode([0.0, -1.0, 1.0, 0.0], HYP, O41, tol=Tolerance(rel=1e-4, abs=1e-12, limit=100))
    assert np.all(res.F.as_array() == 0.0)
    assert np.all(res.A[:3] == 0.0)


def test_zero_mode_truncation_flag():
    obs4 = [1.0, 0.0, 1.0, 0.0]
    tol = Tolerance(rel=1e-3, abs=1e-10, limit=30)
    # the light-cone time of this point is -0.4812; a window starting just below it cuts the spike
    narrow = zero_mode(obs4, HYP, O41, tau_window=(-0.49, 2.0), tol=tol)
    wide = zero_mode(obs4, HYP, O41, tau_window=(-3.0, 2.0), tol=tol)
    assert Flag.TRUNCATED in narrow.report.flags
    assert wide.report.info["truncation_residual"] < narrow.report.info["truncation_residual"]
