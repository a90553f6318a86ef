"""Metric conventions, source worldlines and the retardation kernel R(tau').

Conventions (c = 1):

* 4D metric diag(-1, +1, +1, +1); index order (t, x, y, z).
* Five-vectors append the universal time tau as index 4.
* sigma5 is the sign of tau^2 in the 5D metric.
* R(tau') = -sigma5 [ (x - z(tau'))^2 + sigma5 (tau - tau')^2 ].
* The tau component of a gradient is the plain partial derivative d/dtau;
  the spacetime components are raised with the 4D metric.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import RangeExceeded
from .expoly import EXP_LIMIT, ExpPoly

ETA4 = np.array([-1.0, 1.0, 1.0, 1.0])


def mdot(a, b) -> float:
    """Minkowski product of two 4-vectors."""
    return float(-a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3])


@dataclass(frozen=True)
class Signature:
    """5D metric signature.

    ``p_eff``/``q_eff`` count the + and - signs of the cone form
    r^2 = -sigma5 (x^2 + sigma5 tau^2), which is the count entering the
    Green-function normalization (not the metric's own count).
    """

    sigma5: int = 1

    def __post_init__(self):
        if self.sigma5 not in (1, -1):
            raise ValueError("sigma5 must be +1 or -1")

    @property
    def p_eff(self) -> int:
        return 1 if self.sigma5 == 1 else 3

    @property
    def q_eff(self) -> int:
        return 5 - self.p_eff

    @property
    def cone_metric(self) -> np.ndarray:
        """Diagonal of the cone quadratic form over (t, x, y, z, tau)."""
        s = self.sigma5
        return np.array([s, -s, -s, -s, -1.0])

    @classmethod
    def from_code(cls, code: Union[int, str]) -> Signature:
        code = int(code)
        if code == 41:
            return cls(1)
        if code == 32:
            return cls(-1)
        raise ValueError(f"unknown signature code {code} (expected 41 or 32)")


O41 = Signature(1)
O32 = Signature(-1)


@dataclass(frozen=True)
class FiveVector:
    t: float
    x: float
    y: float = 0.0
    z: float = 0.0
    tau: float = 0.0

    def __post_init__(self):
        for name in ("t", "x", "y", "z", "tau"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"non-finite component {name}={v}")
            object.__setattr__(self, name, v)

    @property
    def x4(self) -> np.ndarray:
        return np.array([self.t, self.x, self.y, self.z])

    @property
    def array(self) -> np.ndarray:
        return np.array([self.t, self.x, self.y, self.z, self.tau])

    @property
    def rho(self) -> float:
        return math.hypot(self.y, self.z)

    @classmethod
    def axisymmetric(cls, t: float, x: float, rho: float, tau: float) -> FiveVector:
        return cls(t, x, rho, 0.0, tau)

    def replace(self, **kw) -> FiveVector:
        d = dict(t=self.t, x=self.x, y=self.y, z=self.z, tau=self.tau)
        d.update(kw)
        return FiveVector(**d)


# --------------------------------------------------------------------------
# worldlines


@dataclass(frozen=True)
class Hyperbolic:
    """z^0 = t0 + sinh(g s)/g,  z^1 = z0 + cosh(g s)/g."""

    g: float = 1.0
    z0: float = 0.0
    t0: float = 0.0

    def __post_init__(self):
        if not self.g > 0:
            raise ValueError("hyperbolic worldline needs g > 0")

    @property
    def rate(self) -> float:
        return self.g

    def position(self) -> ExpPoly:
        g = self.g
        zero = ExpPoly.zeros(rate=g)
        zt = ExpPoly.exp(1, 0.5 / g, g) + ExpPoly.exp(-1, -0.5 / g, g) + self.t0
        zx = ExpPoly.exp(1, 0.5 / g, g) + ExpPoly.exp(-1, 0.5 / g, g) + self.z0
        return ExpPoly.stack([zt, zx, zero, zero])

    def state(self, s: float):
        g = self.g
        if abs(g * s) > EXP_LIMIT:
            raise RangeExceeded(s, EXP_LIMIT / g)
        sh, ch = math.sinh(g * s), math.cosh(g * s)
        z = np.array([self.t0 + sh / g, self.z0 + ch / g, 0.0, 0.0])
        zd = np.array([ch, sh, 0.0, 0.0])
        zdd = np.array([g * sh, g * ch, 0.0, 0.0])
        zddd = np.array([g * g * ch, g * g * sh, 0.0, 0.0])
        return z, zd, zdd, zddd

    def self_interval(self, s_obs: float, s_src: float) -> float:
        """(z(s_obs) - z(s_src))^2, free of cancellation: -(4/g^2) sinh^2(g d / 2)."""
        return -4.0 * math.sinh(0.5 * self.g * (s_obs - s_src)) ** 2 / self.g**2


@dataclass(frozen=True)
class Uniform:
    """z^mu(s) = x0^mu + u^mu s."""

    u: tuple = (1.0, 0.0, 0.0, 0.0)
    x0: tuple = (0.0, 0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(float(v) for v in self.u))
        object.__setattr__(self, "x0", tuple(float(v) for v in self.x0))
        if len(self.u) != 4 or len(self.x0) != 4:
            raise ValueError("u and x0 must be 4-vectors")

    rate = 1.0

    @classmethod
    def boosted(cls, v: float, x0=(0.0, 0.0, 0.0, 0.0)) -> Uniform:
        """Unit-normalized 4-velocity moving along x with speed v."""
        gam = 1.0 / math.sqrt(1.0 - v * v)
        return cls((gam, gam * v, 0.0, 0.0), x0)

    def position(self) -> ExpPoly:
        return ExpPoly.stack([ExpPoly.poly([a, b]) for a, b in zip(self.x0, self.u)])

    def state(self, s: float):
        u = np.array(self.u)
        z = np.array(self.x0) + u * s
        return z, u, np.zeros(4), np.zeros(4)

    def self_interval(self, s_obs: float, s_src: float) -> float:
        d = s_obs - s_src
        return mdot(self.u, self.u) * d * d


@dataclass(frozen=True)
class Static(Uniform):
    """A source at rest at spatial position x0[1:], z^0 = x0[0] + s."""

    def __init__(self, x0=(0.0, 0.0, 0.0, 0.0)):
        super().__init__((1.0, 0.0, 0.0, 0.0), x0)


Worldline = Union[Hyperbolic, Uniform]


def worldline_state(w: Worldline, tau_src: float):
    """(z, zdot, zddot, zdddot) at source parameter ``tau_src``."""
    if not math.isfinite(tau_src):
        raise ValueError("tau_src must be finite")
    return w.state(float(tau_src))


# --------------------------------------------------------------------------
# retardation kernel


@dataclass(frozen=True)
class KernelState:
    tau_src: float
    R: float
    Rdot: float
    Rddot: float
    gradR: np.ndarray = field(repr=False)


class RetardationKernel:
    """R(tau'), its tau'-derivatives and the numerators for one observation point.

    With ``tau_term=False`` the (tau - tau')^2 piece is dropped and sigma5 is
    forced to +1, giving the ordinary (3,1) light-cone function
    -(x - z(s))^2 used for Lienard-Wiechert retardation.
    """

    def __init__(self, obs: FiveVector, w: Worldline, sig: Signature = O41, tau_term: bool = True):
        self.obs = obs
        self.worldline = w
        self.sig = sig if tau_term else O41
        self.tau_term = tau_term
        s5 = self.sig.sigma5
        rate = w.rate
        z = w.position()
        sep = ExpPoly.const(obs.x4, rate) - z                     # x - z(s), 4 comps
        sq = sep * (sep * ETA4)
        q = sq[0] + sq[1] + sq[2] + sq[3]                        # (x - z)^2
        dtau = ExpPoly.poly([obs.tau, -1.0], rate)               # tau - s
        R = -s5 * q
        if tau_term:
            R = R - dtau * dtau
        self.R = R
        self.Rd = R.deriv()
        self.Rdd = self.Rd.deriv()
        zd = z.deriv()
        one = ExpPoly.const(1.0, rate)
        self.zdot5 = ExpPoly.stack([zd[0], zd[1], zd[2], zd[3], one])
        self.zddot5 = self.zdot5.deriv()
        grad = [sep[i] * (-2.0 * s5) for i in range(4)]
        grad.append(dtau * (-2.0 if tau_term else 0.0))
        self.grad = ExpPoly.stack(grad)

    # scalars -----------------------------------------------------------------
    def r(self, s: float) -> float:
        return self.R.fsum(s)

    def rdot(self, s: float) -> float:
        return self.Rd.fsum(s)

    def rddot(self, s: float) -> float:
        return self.Rdd.fsum(s)

    def state(self, s: float) -> KernelState:
        return KernelState(s, self.r(s), self.rdot(s), self.rddot(s), np.asarray(self.grad(s)))

    def coefficients(self) -> dict:
        """R in the form c0 + c1 s + c2 s^2 + B exp(g s) + C exp(-g s)."""
        c = self.R.coef
        extra = {(n, d) for (n, d) in self.R.structure() if not (n == 0 and d <= 2) and not (abs(n) == 1 and d == 0)}
        if extra:
            raise NotImplementedError(f"kernel has unsupported terms {sorted(extra)}")
        return dict(c0=c[2, 0], c1=c[2, 1], c2=c[2, 2], B=c[3, 0], C=c[1, 0], g=self.R.rate)


def kernel_state(obs: FiveVector, w: Worldline, tau_src: float, sig: Signature = O41) -> KernelState:
    worldline_state(w, tau_src)  # range check
    return RetardationKernel(obs, w, sig).state(tau_src)


def direct_R(obs: FiveVector, w: Worldline, tau_src: float, sig: Signature = O41) -> float:
    """R straight from the definition (no cancellation control); for cross-checks."""
    z = worldline_state(w, tau_src)[0]
    d = obs.x4 - z
    return -sig.sigma5 * (mdot(d, d) + sig.sigma5 * (obs.tau - tau_src) ** 2)


def kernel_consistency_check(obs: FiveVector, w: Worldline, tau_src: float, sig: Signature = O41,
                             step: float = 1e-5):
    """|analytic - central difference| for Rdot and each gradR component."""
    k = RetardationKernel(obs, w, sig)
    st = k.state(tau_src)
    fd = (k.r(tau_src + step) - k.r(tau_src - step)) / (2 * step)
    err_rdot = abs(st.Rdot - fd)
    err_grad = np.zeros(5)
    metric = np.array([-1.0, 1.0, 1.0, 1.0, 1.0])
    base = obs.array
    for i in range(5):
        hi, lo = base.copy(), base.copy()
        hi[i] += step
        lo[i] -= step
        rp = RetardationKernel(FiveVector(*hi), w, sig).r(tau_src)
        rm = RetardationKernel(FiveVector(*lo), w, sig).r(tau_src)
        err_grad[i] = abs(st.gradR[i] - metric[i] * (rp - rm) / (2 * step))
    return err_rdot, err_grad


def boost_shift(obs: FiveVector, alpha: float) -> FiveVector:
    """Image of ``obs`` under the symmetry of the t0 = z0 = 0 hyperbola that pairs with tau' -> tau' - alpha.

    A boost of rapidity b carries z(s) to z(s + b), so the source shift by
    -alpha pairs with rapidity -alpha and tau -> tau - alpha.
    """
    ch, sh = math.cosh(alpha), -math.sinh(alpha)
    return obs.replace(x=obs.x * ch + obs.t * sh, t=obs.x * sh + obs.t * ch, tau=obs.tau - alpha)
