"""Retardation roots of R(tau') and the integration-segment plan built from them.

Roots are located by a derivative cascade rather than a sampling scan.
For R = P(s) + B e^{gs} + C e^{-gs} with deg P <= 2, the third derivative
g^3 (B e^{gs} - C e^{-gs}) has at most one root, known in closed form.
Each lower derivative is monotone between consecutive roots of the one
above, so its roots are bracketed exactly and refined with Brent's method.
Sign at -inf (and +inf) follows from the dominant exponential, which
certifies that no root is missed on the unbounded tails.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .core import O41, FiveVector, RetardationKernel, Signature, Worldline
from .errors import RangeExceeded, ScanInconclusive
from .expoly import ExpPoly

TOL_ROOT = 1e-12
SHOCK_TOL = 1e-8
NEAR_SHOCK_TOL = 1e-3


class RootKind(enum.Enum):
    SIMPLE = "simple"
    COMMON = "common"          # R = Rdot = 0 (shock)
    DEGENERATE = "degenerate"  # Rddot also ~ 0


class EndFlag(enum.Enum):
    INTERIOR = "interior"
    CONE_ROOT = "cone_root"


@dataclass(frozen=True)
class RootRecord:
    tau_root: float
    Rdot_at_root: float
    kind: RootKind
    bracket: tuple


@dataclass(frozen=True)
class Segment:
    lo: float           # may be -inf
    hi: float
    lo_flag: EndFlag
    hi_flag: EndFlag

    @property
    def semi_infinite(self) -> bool:
        return math.isinf(self.lo)


@dataclass(frozen=True)
class SegmentPlan:
    segments: tuple
    n_roots: int


@dataclass(frozen=True)
class RootOptions:
    tol_root: float = TOL_ROOT
    shock_tol: float = SHOCK_TOL
    near_shock_tol: float = NEAR_SHOCK_TOL
    upper: Optional[float] = None   # defaults to the observation tau


def _sign(v: float) -> int:
    return int(v > 0) - int(v < 0)


class _Cascade:
    """Roots of R and its derivatives on (-inf, upper]."""

    def __init__(self, R: ExpPoly, upper: float):
        self.upper = upper
        st = R.structure()
        self.has_exp = any(n != 0 for n, _ in st)
        poly_deg = max([d for n, d in st if n == 0], default=0)
        if any(abs(n) > 1 or (n != 0 and d > 0) for n, d in st):
            raise NotImplementedError("root cascade supports P(s) + B e^{gs} + C e^{-gs} only")
        if self.has_exp and poly_deg > 2:
            raise NotImplementedError("polynomial part of degree > 2 with exponentials")
        self.top = 3 if self.has_exp else poly_deg
        self.levels = [R]
        for _ in range(self.top):
            self.levels.append(self.levels[-1].deriv())
        c = R.coef
        self.B, self.C, self.g = c[3, 0], c[1, 0], R.rate
        self.poly = c[2, : poly_deg + 1].copy()

    def value(self, k: int, s: float) -> float:
        return self.levels[k].fsum(s)

    def sign_at(self, k: int, s: float) -> int:
        """Sign of R^{(k)}(s); beyond the exp range the dominant tail decides."""
        try:
            return _sign(self.value(k, s))
        except RangeExceeded:
            return self._tail_sign(k, 1 if s > 0 else -1)

    def _tail_sign(self, k: int, direction: int) -> int:
        """Sign of R^{(k)} as s -> direction * inf."""
        dom = self.C if direction < 0 else self.B
        if self.has_exp and dom != 0:
            return _sign(dom) * (direction ** k if direction < 0 else 1)
        p = np.polynomial.polynomial.polyder(self.poly, k) if k else self.poly
        p = np.trim_zeros(np.atleast_1d(p), "b")
        if len(p) == 0:
            # only the decaying exponential is left
            if direction < 0:
                return _sign(self.B)
            return _sign(self.C) * (-1) ** k
        return _sign(p[-1]) * (direction ** (len(p) - 1))

    def _in_range(self, k: int, s: float) -> bool:
        if not math.isfinite(s):
            return False
        try:
            self.value(k, s)
        except RangeExceeded:
            return False
        return True

    def _top_roots(self) -> list:
        if not self.has_exp:
            return []
        B, C, g = self.B, self.C, self.g
        if B == 0 or C == 0 or _sign(B) != _sign(C):
            return []
        return [math.log(C / B) / (2 * g)]

    def _bracket_tail(self, k: int, edge: float, tail: int, direction: int) -> float:
        step = 1.0
        for _ in range(60):
            probe = edge + direction * step
            try:
                if _sign(self.value(k, probe)) == tail:
                    return probe
            except RangeExceeded as exc:
                raise ScanInconclusive(f"tail bracket for derivative {k} left the representable range") from exc
            step *= 2.0
        raise ScanInconclusive(f"no tail bracket for derivative {k}")

    def roots(self, k: int, crit: list, upper: float, tol: float) -> list:
        """Sign changes of level k on (-inf, upper], given sorted roots of level k+1."""
        crit = [c for c in crit if c < upper]
        found = []
        pts = crit + [upper]
        prev_edge, prev_sign = None, self._tail_sign(k, -1)
        for p in pts:
            sp = self.sign_at(k, p) if math.isfinite(p) else self._tail_sign(k, 1)
            if sp == 0:
                found.append((p, (p, p)))
            elif prev_sign != 0 and sp != prev_sign:
                p_ok = self._in_range(k, p)
                anchor = p if p_ok else (prev_edge if prev_edge is not None else 0.0)
                lo = prev_edge if prev_edge is not None else self._bracket_tail(k, anchor, prev_sign, -1)
                hi = p if p_ok else self._bracket_tail(k, anchor, sp, 1)
                f = lambda s: self.value(k, s)  # noqa: E731
                r = brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
                found.append((r, (lo, hi)))
            prev_edge, prev_sign = p, sp
        return found

    def run(self, tol: float):
        crit = sorted(self._top_roots())
        result = []
        for k in range(self.top - 1, -1, -1):
            result = self.roots(k, crit, self.upper, tol)
            crit = sorted(r for r, _ in result)
        return result


def _kernel(obs, w, sig, tau_term=True) -> RetardationKernel:
    return RetardationKernel(obs, w, sig, tau_term=tau_term)


def find_roots(obs: FiveVector, w: Worldline, sig: Signature = O41, opts: RootOptions = RootOptions(),
               kernel: Optional[RetardationKernel] = None) -> list:
    """All sign changes of R on (-inf, tau], ascending."""
    k = kernel or _kernel(obs, w, sig)
    upper = obs.tau if opts.upper is None else opts.upper
    casc = _Cascade(k.R, upper)
    out = []
    for r, br in casc.run(opts.tol_root):
        rd = k.rdot(r)
        scale = k.Rd.scale(r)
        if abs(rd) <= opts.shock_tol * scale:
            kind = RootKind.DEGENERATE if abs(k.rddot(r)) <= opts.shock_tol * k.Rdd.scale(r) else RootKind.COMMON
        else:
            kind = RootKind.SIMPLE
        out.append(RootRecord(r, rd, kind, br))
    return out


def certified_window(obs: FiveVector, w: Worldline, sig: Signature = O41, margin: float = 1.0) -> tuple:
    """(lo, tau) such that R and all cascade derivatives are monotone with fixed sign below lo."""
    k = _kernel(obs, w, sig)
    casc = _Cascade(k.R, obs.tau)
    pts = list(casc._top_roots())
    crit = sorted(pts)
    for lvl in range(casc.top - 1, -1, -1):
        crit = sorted(r for r, _ in casc.roots(lvl, crit, obs.tau, TOL_ROOT))
        pts += crit
    pts = [p for p in pts if p < obs.tau]
    lo = min(pts + [obs.tau]) - margin
    return lo, obs.tau


def plan_segments(roots: list, obs: FiveVector, w: Worldline, sig: Signature = O41,
                  kernel: Optional[RetardationKernel] = None) -> SegmentPlan:
    """Pieces of (-inf, tau] on which R >= 0."""
    k = kernel or _kernel(obs, w, sig)
    tau = obs.tau
    rs = sorted(r.tau_root for r in roots)
    if rs and rs[-1] >= tau:
        rs[-1] = tau  # root sitting at the upper limit
    edges = [-math.inf] + rs + ([tau] if not rs or rs[-1] < tau else [])
    segs = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        # R has one sign on the piece, so any representable interior point will do
        if math.isinf(lo):
            probe = min(hi - 1.0, 0.0)
        else:
            probe = lo + min(1.0, 0.5 * (hi - lo))
        if k.r(probe) <= 0:
            continue
        lo_flag = EndFlag.CONE_ROOT if (not math.isinf(lo) and lo in rs) else EndFlag.INTERIOR
        hi_flag = EndFlag.CONE_ROOT if hi in rs else EndFlag.INTERIOR
        segs.append(Segment(lo, hi, lo_flag, hi_flag))
    return SegmentPlan(tuple(segs), len(roots))


class Singularity(enum.Enum):
    REGULAR = "regular"
    SHOCK = "shock"
    NEAR_SHOCK = "near_shock"


@dataclass(frozen=True)
class SingularityInfo:
    kind: Singularity
    distance: float = math.nan        # |Rdot| at the root
    velocity_null: Optional[bool] = None
    velocity_spacelike: Optional[bool] = None
    details: dict = field(default_factory=dict)


def classify_singularity(root: RootRecord, kernel: RetardationKernel, opts: RootOptions = RootOptions()
                         ) -> SingularityInfo:
    s = root.tau_root
    rd = kernel.rdot(s)
    scale = kernel.Rd.scale(s)
    if abs(rd) <= opts.shock_tol * scale:
        # at a common root the 4-separation sigma and zdot.sigma vanish together (in the tau-free sense)
        z, zd, _, _ = kernel.worldline.state(s)
        sep = kernel.obs.x4 - z
        ss = float(-sep[0] ** 2 + sep[1:] @ sep[1:])
        zs = float(-zd[0] * sep[0] + zd[1:] @ sep[1:])
        return SingularityInfo(Singularity.SHOCK, abs(rd), velocity_null=abs(ss) <= opts.shock_tol * (sep @ sep + 1),
                               velocity_spacelike=ss > 0, details={"sigma_sq": ss, "zdot_sigma": zs})
    if abs(rd) <= opts.near_shock_tol * scale:
        return SingularityInfo(Singularity.NEAR_SHOCK, abs(rd))
    return SingularityInfo(Singularity.REGULAR, abs(rd))


@dataclass(frozen=True)
class MeshSpec:
    x_range: tuple        # (lo, hi, n)
    t_range: tuple
    rho_values: tuple = (1.0,)
    tau_values: tuple = (0.0,)

    def __post_init__(self):
        for name in ("x_range", "t_range"):
            lo, hi, n = getattr(self, name)
            if int(n) < 2:
                raise ValueError(f"{name} needs n >= 2")
            if not hi > lo:
                raise ValueError(f"{name} needs hi > lo")
        if any(r <= 0 for r in self.rho_values):
            raise ValueError("rho values must be > 0")
        if not self.tau_values:
            raise ValueError("need at least one tau value")

    @property
    def xs(self) -> np.ndarray:
        lo, hi, n = self.x_range
        return np.linspace(lo, hi, int(n))

    @property
    def ts(self) -> np.ndarray:
        lo, hi, n = self.t_range
        return np.linspace(lo, hi, int(n))


def root_count_map(mesh: MeshSpec, w: Worldline, sig: Signature = O41, rho: Optional[float] = None,
                   tau: Optional[float] = None) -> np.ndarray:
    """Root counts on the (t, x) grid of one (rho, tau) slice; shape (n_t, n_x); -1 where inconclusive."""
    rho = mesh.rho_values[0] if rho is None else rho
    tau = mesh.tau_values[0] if tau is None else tau
    out = np.zeros((len(mesh.ts), len(mesh.xs)), dtype=int)
    for i, t in enumerate(mesh.ts):
        for j, x in enumerate(mesh.xs):
            try:
                out[i, j] = len(find_roots(FiveVector.axisymmetric(t, x, rho, tau), w, sig))
            except ScanInconclusive:
                out[i, j] = -1
    return out
