"""Finite-part (canonical) regularization of  integral R^{-lambda} phi  across a simple root of R.

Near a root s0 with R(s0) = 0 and psi = phi / Rdot viewed as a function of R,

    FP = R1 + R2 + R3
    R1 = int_{s0}^{s0+h} R^{-lam} [phi - Rdot (psi0 + psi1 R)] ds    (psi1 only for lam = 5/2)
    R2 = sum_j psi_j R_h^{j-lam+1} / (j! (j-lam+1))
    R3 = int over the rest of the segment of R^{-lam} phi

with psi0 = phi/Rdot and psi1 = phidot/Rdot^2 - phi Rddot/Rdot^3 at s0.
The subtracted bracket in R1 vanishes to the order that leaves an
integrable d^{-1/2} singularity, but evaluating it directly would cancel
almost all digits near s0.  R1 is therefore built from Taylor series about
the root with the vanishing leading coefficients set to exactly zero.
A root at the upper end of a segment is mapped to a lower end by s -> -s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq

from .errors import ExtrapolationUnstable, SegmentTooShort, ShockTooClose
from .expoly import EXP_LIMIT, ExpPoly, basis
from .quad import DEFAULT_TOL, Tolerance, Weight, integrate_finite, integrate_semi_infinite
from .roots import EndFlag, Segment

TAYLOR_ORDER = 48
H_MIN = 1e-8
# beyond this many e-folds of certified decay the tail is dropped
TAIL_EFOLDS = 40.0


@dataclass(frozen=True)
class RegParams:
    h: float = 0.1
    shock_guard: float = 1e-6       # relative to the size of the Rdot terms
    tol: Tolerance = DEFAULT_TOL
    taylor_order: int = TAYLOR_ORDER

    def __post_init__(self):
        if not self.h > H_MIN:
            raise ValueError(f"h must exceed {H_MIN}")


class ExpPolyKernel:
    """R and a (vector) numerator phi as exponential polynomials in s."""

    def __init__(self, R: ExpPoly, phi: ExpPoly):
        if phi.rate != R.rate and any(n != 0 for n, _ in phi.structure()):
            raise ValueError("R and phi must share the exponential rate")
        self.R = R
        self.Rd = R.deriv()
        self.Rdd = self.Rd.deriv()
        self.phi_ep = phi
        self.phid_ep = phi.deriv()
        self.decay_rate = R.rate if any(n != 0 for n, _ in R.structure()) else None
        self._mask = R.nonzero | phi.nonzero
        self._phi_flat = phi.coef.reshape(-1, *phi.coef.shape[-2:])

    def r_phi(self, s):
        """(R, flattened phi) from one shared basis evaluation."""
        b = basis(s, self.R.rate, self._mask)
        return math.fsum((self.R.coef * b).ravel()), np.einsum("knd,nd->k", self._phi_flat, b)

    @property
    def shape(self) -> tuple:
        return self.phi_ep.shape

    def r(self, s):
        return self.R.fsum(s)

    def rdot(self, s):
        return self.Rd.fsum(s)

    def rddot(self, s):
        return self.Rdd.fsum(s)

    def phi(self, s):
        return np.asarray(self.phi_ep(s), dtype=float)

    def phidot(self, s):
        return np.asarray(self.phid_ep(s), dtype=float)

    def rdot_scale(self, s) -> float:
        return self.Rd.scale(s)

    def taylor(self, s0: float, order: int):
        rc = self.R.taylor(s0, order)
        # compensated low-order coefficients; r0 is the root itself
        rc[0] = 0.0
        rc[1] = self.rdot(s0)
        if order >= 2:
            rc[2] = 0.5 * self.rddot(s0)
        return rc, np.atleast_2d(self.phi_ep.taylor(s0, order).reshape(-1, order + 1))


def _tail_cutoff(kernel, lam: float, b: float) -> float:
    if kernel.decay_rate is None:
        return -math.inf
    return b - TAIL_EFOLDS / ((lam - 1.0) * kernel.decay_rate)


def _integrand(kernel, lam: float, lower_cut: float = -math.inf):
    zero = np.zeros(int(np.prod(kernel.shape, dtype=int)))

    def f(s):
        if s < lower_cut:
            return zero
        R, phi = kernel.r_phi(s)
        if R <= 0.0:
            return zero
        v = R ** (-lam) * phi
        return v if np.all(np.isfinite(v)) else zero

    return f


def regular_integral(kernel, lo: float, hi: float, lam: float, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Plain integral of R^{-lam} phi over [lo, hi] (lo may be -inf) where R > 0."""
    if kernel.decay_rate is not None:
        # R^{-lam} phi has long decayed once the growing exponential gets this large
        hi = min(hi, (EXP_LIMIT - 50.0) / kernel.decay_rate)
    if hi <= lo:
        return np.zeros(int(np.prod(kernel.shape, dtype=int)))
    if math.isinf(lo):
        cut = _tail_cutoff(kernel, lam, hi)
        return np.atleast_1d(integrate_semi_infinite(_integrand(kernel, lam, cut), hi, tol).value)
    return np.atleast_1d(integrate_finite(_integrand(kernel, lam), lo, hi, tol).value)


def _series_eval(c: np.ndarray, d: float) -> np.ndarray:
    """Power series along the last axis of c, evaluated at 0 <= d <= h."""
    return c @ (d ** np.arange(c.shape[-1]))


def _subtraction_data(kernel, s0: float, orient: int, lam: float, order: int):
    """Oriented Taylor data about the root: R(d) = d Q(d), bracket = d^m H(d)."""
    rc, pc = kernel.taylor(s0, order)
    sgn = np.array([orient**k for k in range(order + 1)], dtype=float)
    rc = rc * sgn
    pc = pc * sgn
    r1, r2 = rc[1], rc[2]
    if not r1 > 0:
        raise ShockTooClose(f"oriented Rdot = {r1:g} at the root is not positive")
    p0, p1 = pc[:, 0], pc[:, 1]
    psi0 = p0 / r1
    psi1 = p1 / r1**2 - p0 * (2 * r2) / r1**3
    m = 2 if lam > 2 else 1
    # Rdot series S_k = (k+1) r_{k+1}
    S = np.zeros(order + 1)
    S[:-1] = rc[1:] * np.arange(1, order + 1)
    bracket_coef = psi0[:, None] * S[None, :]
    if m == 2:
        # psi1 * Rdot * R, truncated product of series
        SR = np.convolve(S, rc)[: order + 1]
        bracket_coef = bracket_coef + psi1[:, None] * SR[None, :]
    G = pc - bracket_coef
    G[:, :m] = 0.0
    Q = rc[1:]
    H = G[:, m:]
    return dict(rc=rc, Q=Q, H=H, S=S, psi=(psi0, psi1), m=m, r1=r1)


def finite_part_segment(kernel, seg: Segment, lam: float, params: RegParams = RegParams()) -> np.ndarray:
    """Finite part over a segment with exactly one ConeRoot end.

    Returns an array shaped like ``kernel.phi``.
    """
    lo_root = seg.lo_flag is EndFlag.CONE_ROOT
    hi_root = seg.hi_flag is EndFlag.CONE_ROOT
    if lo_root == hi_root:
        raise ValueError("finite_part_segment needs exactly one ConeRoot end")
    if lam not in (1.5, 2.5):
        raise ValueError("lambda must be 3/2 or 5/2")
    s0 = seg.lo if lo_root else seg.hi
    orient = 1 if lo_root else -1
    length = seg.hi - seg.lo
    h = params.h
    if length < h:
        h = 0.5 * length
        if h < H_MIN:
            raise SegmentTooShort(f"segment length {length:g} leaves no room for the offset interval")

    data = _subtraction_data(kernel, s0, orient, lam, params.taylor_order)
    Q, H, S, m = data["Q"], data["H"], data["S"], data["m"]

    # guard: oriented Rdot must stay away from zero on the offset interval
    guard = params.shock_guard * kernel.rdot_scale(s0)
    probe = np.linspace(0.0, h, 33)
    rd_probe = np.array([_series_eval(S, d) for d in probe])
    if np.min(rd_probe) <= guard:
        raise ShockTooClose(f"Rdot drops to {np.min(rd_probe):g} within h={h:g} of the root at {s0:g}")

    def r1_integrand(d):
        # R^{-lam} d^m H = d^{m - lam} Q^{-lam} H with m - lam = -1/2
        return d ** (m - lam) * _series_eval(Q, d) ** (-lam) * _series_eval(H, d)

    R1 = np.atleast_1d(integrate_finite(r1_integrand, 0.0, h, params.tol, Weight.INV_SQRT_LEFT).value)

    Rh = h * _series_eval(Q, h)
    psi0, psi1 = data["psi"]
    R2 = psi0 * Rh ** (1 - lam) / (1 - lam)
    if m == 2:
        R2 = R2 + psi1 * Rh ** (2 - lam) / (2 - lam)

    if lo_root:
        R3 = regular_integral(kernel, s0 + h, seg.hi, lam, params.tol)
    else:
        R3 = regular_integral(kernel, seg.lo, s0 - h, lam, params.tol)
    return (R1 + R2 + R3).reshape(kernel.shape)


def segment_integral(kernel, seg: Segment, lam: float, params: RegParams = RegParams()) -> np.ndarray:
    """Finite-part integral over any plan segment (none, one or two ConeRoot ends)."""
    lo_root = seg.lo_flag is EndFlag.CONE_ROOT
    hi_root = seg.hi_flag is EndFlag.CONE_ROOT
    if lo_root and hi_root:
        mid = 0.5 * (seg.lo + seg.hi)
        a = finite_part_segment(kernel, Segment(seg.lo, mid, EndFlag.CONE_ROOT, EndFlag.INTERIOR), lam, params)
        b = finite_part_segment(kernel, Segment(mid, seg.hi, EndFlag.INTERIOR, EndFlag.CONE_ROOT), lam, params)
        return a + b
    if lo_root or hi_root:
        return finite_part_segment(kernel, seg, lam, params)
    return regular_integral(kernel, seg.lo, seg.hi, lam, params.tol).reshape(kernel.shape)


# ---------------------------------------------------------------------------
# independent oracle: cut off at R = eps, subtract the divergences, extrapolate


def _quadpack(fun, a, b, n):
    out = np.zeros(n)
    for i in range(n):
        out[i] = quad(lambda s: fun(s)[i], a, b, epsabs=1e-14, epsrel=1e-12, limit=500)[0]
    return out


def hadamard_oracle(kernel, seg: Segment, lam: float, eps_list: Optional[list] = None,
                    h0: float = 0.1) -> np.ndarray:
    """Finite part by epsilon cut-off and Richardson extrapolation (QUADPACK quadrature).

    ``eps_list`` must be a geometric sequence with ratio 1/2.
    """
    n = int(np.prod(kernel.shape, dtype=int))
    lo_root = seg.lo_flag is EndFlag.CONE_ROOT
    hi_root = seg.hi_flag is EndFlag.CONE_ROOT
    if lo_root and hi_root:
        raise ValueError("split two-root segments before calling the oracle")
    if not (lo_root or hi_root):
        return _oracle_plain(kernel, seg.lo, seg.hi, lam, n).reshape(kernel.shape)

    s0 = seg.lo if lo_root else seg.hi
    orient = 1 if lo_root else -1
    span = min(h0, 0.5 * (seg.hi - seg.lo)) if math.isfinite(seg.hi - seg.lo) else h0
    s_h = s0 + orient * span
    Rh = kernel.r(s_h)
    rd = orient * kernel.rdot(s0)
    rdd = kernel.rddot(s0)
    phi0 = kernel.phi(s0).ravel()
    phid = orient * kernel.phidot(s0).ravel()
    psi0 = phi0 / rd
    psi1 = phid / rd**2 - phi0 * rdd / rd**3
    if eps_list is None:
        eps_list = [0.5 * Rh / 2**i for i in range(9)]
    eps_list = list(eps_list)

    far = _oracle_plain(kernel, *((s_h, seg.hi) if lo_root else (seg.lo, s_h)), lam, n)
    f = _integrand(kernel, lam)
    est = []
    counter = 0.0
    for eps in eps_list:
        if not 0 < eps < Rh:
            raise ValueError("eps values must lie in (0, R_h)")
        a, b = (s0, s_h) if lo_root else (s_h, s0)
        s_eps = brentq(lambda s: kernel.r(s) - eps, a, b, xtol=1e-15, rtol=1e-15)
        near = _quadpack(f, s_eps, s_h, n) if lo_root else _quadpack(f, s_h, s_eps, n)
        # the bracketing tolerance leaves R(s_eps) slightly off eps; the integrand is
        # large there, so move the cut to R = eps at first order
        near = near + (kernel.r(s_eps) - eps) / (orient * kernel.rdot(s_eps)) * f(s_eps)
        ct = psi0 * eps ** (1 - lam) / (1 - lam)
        if lam > 2:
            ct = ct + psi1 * eps ** (2 - lam) / (2 - lam)
        counter = max(counter, float(np.max(np.abs(ct))))
        est.append(near + far + ct)
    return _richardson(np.array(est), lam, floor=1e-9 * counter).reshape(kernel.shape)


def _oracle_plain(kernel, lo, hi, lam, n):
    if hi <= lo:
        return np.zeros(n)
    f = _integrand(kernel, lam, _tail_cutoff(kernel, lam, hi) if math.isinf(lo) else -math.inf)
    if math.isinf(lo):
        cut = _tail_cutoff(kernel, lam, hi)
        if math.isfinite(cut):
            return _quadpack(f, cut, hi, n)
        return _quadpack(f, -np.inf, hi, n)
    return _quadpack(f, lo, hi, n)


def _richardson(est: np.ndarray, lam: float, max_levels: int = 5, floor: float = 0.0) -> np.ndarray:
    """Eliminate eps^{1/2}, eps^{3/2}, ... from estimates at eps_0 / 2^i.

    Returns the newest entry of the level whose change from the previous
    level is smallest.
    """
    table = est.copy()
    lasts = [table[-1]]
    for j in range(min(max_levels, len(est) - 1)):
        fac = 2.0 ** (0.5 + j)
        table = (fac * table[1:] - table[:-1]) / (fac - 1.0)
        lasts.append(table[-1])
    diffs = [np.max(np.abs(lasts[j] - lasts[j - 1])) for j in range(1, len(lasts))]
    if not diffs:
        return lasts[0]
    j = int(np.argmin(diffs)) + 1
    best = lasts[j]
    if not np.all(np.isfinite(best)):
        raise ExtrapolationUnstable("non-finite extrapolation")
    # a finite part that cancels to ~0 is judged against the size of the subtracted terms
    scale = max(np.max(np.abs(best)), floor, 1e-300)
    if diffs[j - 1] > 1e-3 * scale:
        raise ExtrapolationUnstable(f"successive extrapolants differ by {diffs[j - 1]:g}")
    return best
