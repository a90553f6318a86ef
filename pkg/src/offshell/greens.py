"""Ultrahyperbolic Riesz-type kernels, their normalizations and the tau-retarded Green functions."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .core import O41, FiveVector, Signature
from .errors import PoleAt, ZeroPrefactor


def _is_pole(z: float) -> bool:
    return z <= 0 and abs(z - round(z)) < 1e-13


def gamma_signed(z: float, label: str = "") -> tuple[int, float]:
    """(sign, log|Gamma(z)|), with reflection for negative z.

    Values like Gamma(-1/2) appear in every normalization constant; taking
    logs keeps products of several Gammas finite.
    """
    if _is_pole(z):
        raise PoleAt(z, label)
    if z > 0:
        return 1, math.lgamma(z)
    # Gamma(z) Gamma(1 - z) = pi / sin(pi z)
    s = math.sin(math.pi * z)
    sign = 1 if s > 0 else -1
    return sign, math.log(math.pi) - math.log(abs(s)) - math.lgamma(1.0 - z)


def _prod(factors) -> float:
    sign, log = 1, 0.0
    for z, label in factors:
        sg, lg = gamma_signed(z, label)
        sign *= sg
        log += lg
    return sign, log


def K_m(alpha: float, m: int = 5, p: int = 1) -> float:
    num_s, num_l = _prod([((alpha - m + 2) / 2, "(alpha-m+2)/2"), (alpha, "alpha"), ((1 - alpha) / 2, "(1-alpha)/2")])
    den_s, den_l = _prod([((alpha - p + 2) / 2, "(alpha-p+2)/2"), ((p - alpha) / 2, "(p-alpha)/2")])
    return num_s * den_s * math.exp((m - 1) / 2 * math.log(math.pi) + num_l - den_l)


def _sin_half_pi(p: int) -> float:
    if p % 2 == 0:
        raise ZeroPrefactor(p)
    return 1.0 if p % 4 == 1 else -1.0


def N_m(alpha: float, m: int = 5, p: int = 1) -> float:
    """2 pi^{(m-3)/2} sin(pi p/2) Gamma((2+alpha-m)/2) Gamma((1-alpha)/2) Gamma(alpha)."""
    sp = _sin_half_pi(p)
    s, lg = _prod([((2 + alpha - m) / 2, "(2+alpha-m)/2"), ((1 - alpha) / 2, "(1-alpha)/2"), (alpha, "alpha")])
    return 2.0 * sp * s * math.exp((m - 3) / 2 * math.log(math.pi) + lg)


def gf_denominator(m: int = 5, p: int = 1) -> float:
    """2 pi^{m/2-1} sin(pi p/2) Gamma((4-m)/2): the denominator of the alpha = 2 Green function."""
    sp = _sin_half_pi(p)
    s, lg = gamma_signed((4 - m) / 2, "(4-m)/2")
    return 2.0 * sp * s * math.exp((m / 2 - 1) * math.log(math.pi) + lg)


@dataclass(frozen=True)
class KernelOrder:
    alpha: float
    m: int = 5
    p: int = 1

    def normalization(self) -> float:
        return N_m(self.alpha, self.m, self.p)


def cone_r2(x5: FiveVector, sig: Signature = O41) -> float:
    """r^2 = -sigma5 (x.x + sigma5 tau^2), positive inside the cone."""
    s5 = sig.sigma5
    xx = -x5.t**2 + x5.x**2 + x5.y**2 + x5.z**2
    return -s5 * (xx + s5 * x5.tau**2)


def _rpow(r2: float, e: float) -> float:
    """r2**e, with inf instead of OverflowError for r2 at the edge of the double range."""
    try:
        return r2**e
    except OverflowError:
        return math.inf


def phi_alpha(x5: FiveVector, order: KernelOrder, sig: Signature = O41) -> float:
    """r_+^{alpha - m} / N_m(alpha), supported on the forward (tau > 0) cone interior."""
    if x5.tau <= 0:
        return 0.0
    r2 = cone_r2(x5, sig)
    if r2 <= 0:
        return 0.0
    return _rpow(r2, (order.alpha - order.m) / 2) / N_m(order.alpha, order.m, order.p)


def gf_retarded(x5: FiveVector, sig: Signature = O41) -> float:
    """-sigma5 theta(tau) theta(r^2) r^{-3} / (4 pi^2); zero on and outside the cone."""
    if x5.tau <= 0:
        return 0.0
    r2 = cone_r2(x5, sig)
    if r2 <= 0:
        return 0.0
    return -sig.sigma5 / (4 * math.pi**2) * _rpow(r2, -1.5)


def ultrahyperbolic_laplacian(f, x5: FiveVector, sig: Signature = O41, step: float = 1e-3) -> float:
    """Central-difference form operator with + on the p_eff directions of the cone form.

    The cone form's metric is (sigma5, -sigma5, -sigma5, -sigma5, -1) over
    (t, x, y, z, tau); the operator uses the same signs.
    """
    base = x5.array
    f0 = f(x5)
    total = 0.0
    for i, w in enumerate(sig.cone_metric):
        hi, lo = base.copy(), base.copy()
        hi[i] += step
        lo[i] -= step
        total += w * (f(FiveVector(*hi)) - 2 * f0 + f(FiveVector(*lo))) / step**2
    return total
