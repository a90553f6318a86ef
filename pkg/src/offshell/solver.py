"""Potentials, field tensor, zero modes, self-force and the 5D Lorentz force.

Normalizations (q = source charge):

    a^alpha    = -(q sigma5 / 4 pi^2)  FP int theta(R) R^{-3/2} zdot^alpha dtau'
    f^{alpha beta} = (3 q sigma5 / 8 pi^2) FP int theta(R) R^{-5/2} phi^{alpha beta} dtau'
                     + (upper-limit term, see ``field_tensor``)
    phi^{alpha beta} = zdot^beta d^alpha R - zdot^alpha d^beta R

Axisymmetric components refer to the observation point's (rho, phi)
frame around the x axis.  Five-index order is (t, x, y, z, tau).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import O41, FiveVector, Hyperbolic, RetardationKernel, Signature, Uniform, Worldline, mdot
from .errors import RangeExceeded, ShockTooClose
from .expoly import ExpPoly
from .quad import Tolerance, Weight, integrate_finite, integrate_semi_infinite
from .regfp import ExpPolyKernel, RegParams, hadamard_oracle, segment_integral
from .roots import (EndFlag, RootOptions, Segment, Singularity, classify_singularity, find_roots,
                    plan_segments)

T, X, Y, Z, TAU = range(5)
PAIRS = [(i, j) for i in range(5) for j in range(i + 1, 5)]
_PAIR_INDEX = {p: n for n, p in enumerate(PAIRS)}


class Flag(enum.Enum):
    NEAR_SHOCK = "NearShock"
    TRUNCATED = "Truncated"
    SINGULAR = "Singular"


@dataclass(frozen=True)
class SolverParams:
    q: float = 1.0
    reg: RegParams = field(default_factory=RegParams)
    roots: RootOptions = field(default_factory=RootOptions)
    endpoint_term: bool = True


@dataclass(frozen=True)
class PotentialVector:
    a_t: float
    a_x: float
    a_rho: float
    a_tau: float

    def as_array(self) -> np.ndarray:
        return np.array([self.a_t, self.a_x, self.a_rho, self.a_tau])


_FT_FIELDS = ("f_xt", "f_xrho", "f_xtau", "f_ttau", "f_trho", "f_rhotau")
# (row, col) in the reduced (t, x, rho, tau) = (0, 1, 2, 3) index set
_FT_SLOTS = {"f_xt": (1, 0), "f_xrho": (1, 2), "f_xtau": (1, 3), "f_ttau": (0, 3), "f_trho": (0, 2),
             "f_rhotau": (2, 3)}


@dataclass(frozen=True)
class FieldTensor:
    f_xt: float = 0.0
    f_xrho: float = 0.0
    f_xtau: float = 0.0
    f_ttau: float = 0.0
    f_trho: float = 0.0
    f_rhotau: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in _FT_FIELDS])

    def matrix(self) -> np.ndarray:
        """Full antisymmetric tensor over (t, x, rho, tau)."""
        m = np.zeros((4, 4))
        for name, (i, j) in _FT_SLOTS.items():
            v = getattr(self, name)
            m[i, j] = v
            m[j, i] = -v
        return m

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> FieldTensor:
        return cls(**{name: float(m[i, j]) for name, (i, j) in _FT_SLOTS.items()})

    @classmethod
    def nan(cls) -> FieldTensor:
        return cls(*([math.nan] * 6))


@dataclass
class EvalReport:
    value: object
    n_roots: int = 0
    segments_used: int = 0
    flags: set = field(default_factory=set)
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# assembly helpers


def _rho_frame(obs: FiveVector) -> np.ndarray:
    rho = obs.rho
    if rho == 0.0:
        return np.array([1.0, 0.0])
    return np.array([obs.y, obs.z]) / rho


def _phi_numerators(k: RetardationKernel) -> ExpPoly:
    comps = []
    for i, j in PAIRS:
        comps.append(k.zdot5[j] * k.grad[i] - k.zdot5[i] * k.grad[j])
    return ExpPoly.stack(comps)


def _project_potential(a5: np.ndarray, obs: FiveVector) -> PotentialVector:
    e = _rho_frame(obs)
    return PotentialVector(float(a5[T]), float(a5[X]), float(a5[Y] * e[0] + a5[Z] * e[1]), float(a5[TAU]))


def _full_5x5(pairs: np.ndarray) -> np.ndarray:
    m = np.zeros((5, 5))
    for n, (i, j) in enumerate(PAIRS):
        m[i, j] = pairs[n]
        m[j, i] = -pairs[n]
    return m


def _project_field(m5: np.ndarray, obs: FiveVector) -> FieldTensor:
    e = _rho_frame(obs)
    # basis change (t, x, y, z, tau) -> (t, x, rho, tau)
    P = np.zeros((4, 5))
    P[0, T] = 1.0
    P[1, X] = 1.0
    P[2, Y], P[2, Z] = e
    P[3, TAU] = 1.0
    return FieldTensor.from_matrix(P @ m5 @ P.T)


def _integrate_plan(kernel: ExpPolyKernel, plan, lam: float, params: SolverParams, report: EvalReport,
                    oracle: bool = False) -> np.ndarray:
    total = np.zeros(kernel.shape)
    for seg in plan.segments:
        if oracle:
            total = total + _oracle_segment(kernel, seg, lam, params.reg.h)
        else:
            total = total + segment_integral(kernel, seg, lam, params.reg)
        report.segments_used += 1
    return total


def _oracle_segment(kernel, seg: Segment, lam: float, h: float) -> np.ndarray:
    lo_root = seg.lo_flag is EndFlag.CONE_ROOT
    hi_root = seg.hi_flag is EndFlag.CONE_ROOT
    if lo_root and hi_root:
        mid = 0.5 * (seg.lo + seg.hi)
        return (hadamard_oracle(kernel, Segment(seg.lo, mid, EndFlag.CONE_ROOT, EndFlag.INTERIOR), lam, h0=h)
                + hadamard_oracle(kernel, Segment(mid, seg.hi, EndFlag.INTERIOR, EndFlag.CONE_ROOT), lam, h0=h))
    return hadamard_oracle(kernel, seg, lam, h0=h)


def _prepare(obs: FiveVector, w: Worldline, sig: Signature, params: SolverParams):
    k = RetardationKernel(obs, w, sig)
    roots = find_roots(obs, w, sig, params.roots, kernel=k)
    report = EvalReport(None, n_roots=len(roots))
    for r in roots:
        c = classify_singularity(r, k, params.roots)
        if c.kind is Singularity.SHOCK:
            report.flags.add(Flag.SINGULAR)
        elif c.kind is Singularity.NEAR_SHOCK:
            report.flags.add(Flag.NEAR_SHOCK)
    plan = plan_segments(roots, obs, w, sig, kernel=k)
    return k, plan, report


# ---------------------------------------------------------------------------
# public evaluators


def potential(obs: FiveVector, w: Worldline, sig: Signature = O41, params: SolverParams = SolverParams(),
              oracle: bool = False):
    """a^alpha at ``obs``; ``oracle=True`` swaps the finite-part engine for the cut-off oracle."""
    k, plan, report = _prepare(obs, w, sig, params)
    if Flag.SINGULAR in report.flags:
        pv = PotentialVector(*([math.nan] * 4))
        report.value = pv
        return pv, report
    kern = ExpPolyKernel(k.R, k.zdot5)
    try:
        integral = _integrate_plan(kern, plan, 1.5, params, report, oracle)
    except ShockTooClose:
        report.flags.add(Flag.SINGULAR)
        pv = PotentialVector(*([math.nan] * 4))
        report.value = pv
        return pv, report
    a5 = -params.q * sig.sigma5 / (4 * math.pi**2) * integral
    pv = _project_potential(a5, obs)
    report.value = pv
    report.info["a5"] = a5
    return pv, report


def field_tensor(obs: FiveVector, w: Worldline, sig: Signature = O41, params: SolverParams = SolverParams(),
                 oracle: bool = False):
    """f^{alpha beta} at ``obs``.

    Besides the integral over R^{-5/2}, the tau-derivative of the potential
    picks up a term from the upper limit tau' = tau of the history, where the
    integrand is -(q sigma5/4pi^2) R(tau)^{-3/2} zdot(tau) whenever R(tau) > 0.
    It is included (``params.endpoint_term``) so that f = d a - d a holds.
    """
    k, plan, report = _prepare(obs, w, sig, params)
    if Flag.SINGULAR in report.flags:
        ft = FieldTensor.nan()
        report.value = ft
        return ft, report
    kern = ExpPolyKernel(k.R, _phi_numerators(k))
    try:
        integral = _integrate_plan(kern, plan, 2.5, params, report, oracle)
    except ShockTooClose:
        report.flags.add(Flag.SINGULAR)
        ft = FieldTensor.nan()
        report.value = ft
        return ft, report
    m5 = _full_5x5(3 * params.q * sig.sigma5 / (8 * math.pi**2) * integral)
    if params.endpoint_term:
        try:
            R_end = k.r(obs.tau)
        except RangeExceeded:
            R_end = math.inf  # the term decays like exp(-g tau / 2) there
        if 0 < R_end < math.inf:
            zd = np.asarray(k.zdot5(obs.tau))
            edge = -params.q * sig.sigma5 / (4 * math.pi**2) * R_end**-1.5 * zd
            m5[TAU, :] += edge
            m5[:, TAU] -= edge
            m5[TAU, TAU] = 0.0
            report.info["endpoint"] = edge
    ft = _project_field(m5, obs)
    report.value = ft
    return ft, report


_GRAD_SIGN = np.array([-1.0, 1.0, 1.0, 1.0, 1.0])  # raise spacetime index; tau left as d/dtau


def field_from_potential_check(obs: FiveVector, w: Worldline, sig: Signature = O41,
                               params: SolverParams = SolverParams(), step: float = 1e-3) -> float:
    """Max |f(finite differences of a) - f(field_tensor)| / max|f| over the reported components."""
    ft, _ = field_tensor(obs, w, sig, params)
    base = obs.array
    da = np.zeros((5, 5))  # da[mu, beta] = d^mu a^beta
    for mu in range(5):
        hi, lo = base.copy(), base.copy()
        hi[mu] += step
        lo[mu] -= step
        ap = potential(FiveVector(*hi), w, sig, params)[1].info.get("a5", np.zeros(5))
        am = potential(FiveVector(*lo), w, sig, params)[1].info.get("a5", np.zeros(5))
        da[mu] = _GRAD_SIGN[mu] * (ap - am) / (2 * step)
    fd = _project_field(da - da.T, obs).as_array()
    ref = ft.as_array()
    scale = np.max(np.abs(ref))
    if scale == 0.0:
        return float(np.max(np.abs(fd)))
    return float(np.max(np.abs(fd - ref)) / scale)


# ---------------------------------------------------------------------------
# zero mode


def light_cone_times(obs4, w: Worldline) -> list:
    """Source parameters s with (x - z(s))^2 = 0, ascending."""
    o = FiveVector(*obs4[:4], tau=0.0)
    k = RetardationKernel(o, w, O41, tau_term=False)
    return [r.tau_root for r in find_roots(o, w, O41, RootOptions(upper=math.inf), kernel=k)]


@dataclass(frozen=True)
class ZeroModeResult:
    A: np.ndarray                # (A_t, A_x, A_rho, A_tau) tau-integrals of a
    F: FieldTensor               # spacetime block from derivatives of A
    report: EvalReport


def _potential_tau_integral(obs4, w, sig, params: SolverParams, tau_window, tol: Tolerance, stats: dict):
    """int a^alpha dtau over the window; the upper end may be +inf."""
    t, x, y, z = obs4
    lo, hi = tau_window
    crit = [c for c in light_cone_times(obs4, w) if lo < c < hi]

    def a_of(tau):
        pv, rep = potential(FiveVector(t, x, y, z, tau), w, sig, params)
        if Flag.SINGULAR in rep.flags:
            stats["singular"] += 1
            return np.zeros(5)
        stats["flags"] |= rep.flags
        a = rep.info.get("a5", np.zeros(5))
        # the peak is taken on the smooth factor left after removing |tau - tau_c|^{-1/2}
        near = min((abs(tau - c) for c in crit), default=1.0)
        stats["peak"] = max(stats["peak"], float(np.max(np.abs(a))) * math.sqrt(min(near, 1.0)))
        return a

    total = np.zeros(5)
    finite_hi = hi if math.isfinite(hi) else (max(crit) if crit else lo) + 10.0
    nodes = [lo] + crit + [finite_hi]
    for a, b in zip(nodes[:-1], nodes[1:]):
        # a(tau) ~ |tau - tau_c|^{-1/2} next to a light-cone time: split and weight both ends
        mid = 0.5 * (a + b)
        left_w = Weight.INV_SQRT_LEFT if a in crit else Weight.NONE
        right_w = Weight.INV_SQRT_RIGHT if b in crit else Weight.NONE
        total += integrate_finite(a_of, a, mid, tol, left_w).value
        total += integrate_finite(a_of, mid, b, tol, right_w).value
    if not math.isfinite(hi):
        total += integrate_semi_infinite(lambda u: a_of(-u), -finite_hi, tol).value
    ends = [float(np.max(np.abs(a_of(lo))))]
    if math.isfinite(hi):
        ends.append(float(np.max(np.abs(a_of(hi)))))
    return total, max(ends)


def default_tau_window(obs4, w: Worldline) -> tuple:
    """Lower end 40 units before the earliest light-cone time (exponential decay there); open above."""
    crit = light_cone_times(obs4, w)
    anchor = min(crit) if crit else float(obs4[0])
    return (anchor - 40.0, math.inf)


def zero_mode(obs4, w: Worldline, sig: Signature = O41, tau_window: Optional[tuple] = None,
              params: SolverParams = SolverParams(), step: float = 1e-2,
              tol: Tolerance = Tolerance(rel=1e-5, abs=1e-12, limit=200)) -> ZeroModeResult:
    """tau-integrated potential and field at a spacetime point.

    The pointwise field has a non-integrable |tau - tau_c|^{-3/2} spike where
    a light-cone time tau_c meets the end of the history, so F is obtained
    from central differences (``step``) of the integrable potential zero
    mode instead of integrating f over tau directly.  ``tau_window`` may
    have an infinite upper end (the default).
    """
    obs4 = np.asarray(obs4, dtype=float)
    if tau_window is None:
        tau_window = default_tau_window(obs4, w)
    stats = {"peak": 0.0, "flags": set(), "singular": 0}
    report = EvalReport(None)

    A, end = _potential_tau_integral(obs4, w, sig, params, tau_window, tol, stats)
    resid = end / stats["peak"] if stats["peak"] > 0 else 0.0
    report.info["truncation_residual"] = resid
    if resid > 1e-3:
        report.flags.add(Flag.TRUNCATED)

    rho = math.hypot(obs4[2], obs4[3])
    e = np.array([1.0, 0.0]) if rho == 0 else obs4[2:4] / rho
    # F^{mu nu} = d^mu A^nu - d^nu A^mu in the (t, x, rho) block
    dA = np.zeros((3, 5))
    dirs = [np.array([1.0, 0, 0, 0]), np.array([0, 1.0, 0, 0]), np.array([0, 0, e[0], e[1]])]
    signs = [-1.0, 1.0, 1.0]
    for i, d in enumerate(dirs):
        Ap, _ = _potential_tau_integral(obs4 + step * d, w, sig, params, tau_window, tol, stats)
        Am, _ = _potential_tau_integral(obs4 - step * d, w, sig, params, tau_window, tol, stats)
        dA[i] = signs[i] * (Ap - Am) / (2 * step)
    report.flags |= stats["flags"]
    if stats["singular"]:
        report.info["singular_samples"] = stats["singular"]
    # components of A along (t, x, rho)
    dA3 = np.stack([dA[:, T], dA[:, X], dA[:, Y] * e[0] + dA[:, Z] * e[1]], axis=1)
    m = np.zeros((4, 4))
    m[:3, :3] = dA3 - dA3.T
    Ared = np.array([A[T], A[X], A[Y] * e[0] + A[Z] * e[1], A[TAU]])
    report.value = Ared
    return ZeroModeResult(Ared, FieldTensor.from_matrix(m), report)


# ---------------------------------------------------------------------------
# self-force


def _sinhc_m1(v: float) -> float:
    """sinh(v)/v - 1 without cancellation."""
    if abs(v) < 0.1:
        v2 = v * v
        return v2 / 6 * (1 + v2 / 20 * (1 + v2 / 42 * (1 + v2 / 72 * (1 + v2 / 110))))
    return math.sinh(v) / v - 1.0


def _self_terms(w: Worldline, tau: float, d: float, s5: int):
    """R, a.s, a.b and the 4-vectors b = zdot(tau - d), s = z(tau) - z(tau - d)."""
    if isinstance(w, Hyperbolic):
        g = w.g
        u = 0.5 * g * d
        sh_u = math.sinh(u)
        # (z(tau) - z(s))^2 = -(4/g^2) sinh^2(g d/2)
        if s5 == 1:
            # R = d^2 [(sinh u / u)^2 - 1]
            c = _sinhc_m1(u)
            R = d * d * c * (2.0 + c)
        else:
            R = -4.0 * sh_u**2 / g**2 - d * d
        mid = g * (tau - 0.5 * d)
        sep = np.array([2 * math.cosh(mid) * sh_u / g, 2 * math.sinh(mid) * sh_u / g, 0.0, 0.0])
        s_src = tau - d
        b = np.array([math.cosh(g * s_src), math.sinh(g * s_src), 0.0, 0.0])
        # zdot(tau).sep = -sinh(g d)/g ; add sigma5 d
        if s5 == 1:
            a_s = -d * _sinhc_m1(g * d)
        else:
            a_s = -math.sinh(g * d) / g - d
        # zdot(tau).zdot(s) = -cosh(g d)
        a_b = -2.0 * sh_u**2 if s5 == 1 else -math.cosh(g * d) - 1.0
        return R, a_s, a_b, b, sep
    u = np.array(w.u)
    uu = mdot(u, u)
    R = -s5 * uu * d * d - d * d
    return R, uu * d + s5 * d, uu + s5, u, u * d


@dataclass(frozen=True)
class SelfForceResult:
    value: np.ndarray
    delta: float
    flags: frozenset


def self_force(w: Worldline, tau: float, sig: Signature = O41, q: float = 1.0, delta: float = 0.05,
               tol: Tolerance = Tolerance(rel=1e-10, abs=1e-300)) -> SelfForceResult:
    """(3 sigma5 q^2/8pi^2) xdot_alpha(tau) int_{-inf}^{tau-delta} R^{-5/2}[xdot^mu d^alpha R - xdot^alpha d^mu R].

    R is the self-kernel -sigma5 (x(tau) - x(tau'))^2 - (tau - tau')^2.  The
    coincidence limit is not renormalized: the history is cut at
    tau' = tau - delta and delta is reported with the result.
    """
    s5 = sig.sigma5
    if isinstance(w, Uniform) and not isinstance(w, Hyperbolic):
        R_test = _self_terms(w, tau, 1.0, s5)[0]
        # R is a fixed multiple of d^2: identically zero or of one sign; the bracket cancels for any d
        flags = frozenset() if R_test <= 0 else frozenset({Flag.SINGULAR})
        return SelfForceResult(np.zeros(4), delta, flags)

    def integrand(d):
        R, a_s, a_b, b, sep = _self_terms(w, tau, d, s5)
        if R <= 0.0:
            return np.zeros(4)
        c = -2.0 * s5 * (b * a_s - a_b * sep)
        return R**-2.5 * c

    if isinstance(w, Hyperbolic):
        # decay ~ exp(-(3/2) g d); stop after 40/g
        d_max = delta + 40.0 / w.g
        val = integrate_finite(integrand, delta, d_max, tol).value
    else:  # pragma: no cover - only two worldline kinds exist
        val = integrate_semi_infinite(lambda s: integrand(-s), -delta, tol).value
    return SelfForceResult(3 * s5 * q * q / (8 * math.pi**2) * np.asarray(val), delta, frozenset())


# ---------------------------------------------------------------------------
# Lorentz force


def lorentz_force(f: FieldTensor, xdot, e0: float = 1.0, sig: Signature = O41) -> np.ndarray:
    """e0 (xdot^nu f^mu_nu + f^mu_5) over (t, x, rho, tau).

    ``xdot`` is (t, x, rho, tau) with xdot^tau = 1; the tau row gives the
    rate of change of the mass-like component.
    """
    xdot = np.asarray(xdot, dtype=float)
    m = f.matrix()
    lower = np.array([-1.0, 1.0, 1.0])
    out = m[:, :3] @ (lower * xdot[:3]) + sig.sigma5 * m[:, 3] * xdot[3]
    return e0 * out
