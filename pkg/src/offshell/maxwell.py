"""Maxwell-side references: Lienard-Wiechert potential, H_phi of a uniformly accelerated charge,
and the Lorentz-Dirac radiation-reaction term.

Normalization of the potential (Heaviside-Lorentz, c = 1): with the light-cone
function R3(s) = -(x - z(s))^2 and its derivative Rdot3 = 2 zdot.(x - z),

    A^mu = e zdot^mu(s0) / (2 pi (-Rdot3(s0))) = e zdot^mu / (4 pi (-zdot.(x - z)))

at the retarded root s0.  For a charge at rest -zdot.(x - z) = r, so
A^0 = e / (4 pi r).
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .core import ETA4, Hyperbolic, Worldline, mdot
from .errors import NoRetardedRoot, ShockSingular

SHOCK_TOL = 1e-12


def _quadratic_roots(a: float, b: float, c: float) -> list:
    """Real roots of a x^2 + b x + c without cancellation."""
    if a == 0.0:
        return [] if b == 0.0 else [-c / b]
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    q = -0.5 * (b + math.copysign(math.sqrt(disc), b))
    if q == 0.0:
        return [0.0]
    return sorted({q / a, c / q})


def retarded_time(obs4, w: Worldline) -> float:
    """Source parameter s0 with (x - z(s0))^2 = 0 and x^0 > z^0(s0)."""
    obs4 = np.asarray(obs4, dtype=float)
    if isinstance(w, Hyperbolic):
        g = w.g
        T = obs4[0] - w.t0
        X = obs4[1] - w.z0
        rho2 = obs4[2] ** 2 + obs4[3] ** 2
        # with u = exp(g s):  (T - X) u^2 + g (X^2 + rho^2 - T^2 + 1/g^2) u - (T + X) = 0
        cands = []
        for u in _quadratic_roots(T - X, g * (X * X + rho2 - T * T + 1 / g**2), -(T + X)):
            if u > 0:
                s = math.log(u) / g
                if T > (u - 1 / u) / (2 * g):
                    cands.append(s)
    else:
        u = np.array(w.u)
        sep = obs4 - np.array(w.x0)
        # (sep - u s)^2 = sep^2 - 2 (u.sep) s + (u.u) s^2
        cands = [s for s in _quadratic_roots(mdot(u, u), -2 * mdot(u, sep), mdot(sep, sep))
                 if sep[0] - u[0] * s > 0]
    if not cands:
        raise NoRetardedRoot(f"no retarded light-cone intersection for {obs4.tolist()}")
    return max(cands)


def lw_potential(obs4, w: Worldline, e: float = 1.0) -> np.ndarray:
    s0 = retarded_time(obs4, w)
    z, zd, _, _ = w.state(s0)
    sep = np.asarray(obs4, dtype=float) - z
    rdot = 2.0 * mdot(zd, sep)
    if abs(rdot) <= SHOCK_TOL * (np.abs(zd) @ np.abs(sep)):
        raise ShockSingular(f"Rdot vanishes at the retarded point s0={s0:g}")
    return e * zd / (2 * math.pi * (-rdot))


class Region(enum.Enum):
    GATED = "gated"
    ACTIVE = "active"


@dataclass(frozen=True)
class MaxwellField:
    H_phi: float
    region: Region


def hphi_hyperbolic(t: float, x: float, rho: float, e: float = 1.0, g: float = 1.0) -> MaxwellField:
    """Azimuthal magnetic field of a charge on x^2 - t^2 = 1/g^2 (vertex at the origin frame)."""
    if not rho > 0:
        raise ValueError("rho must be > 0")
    if x + t < 0:
        return MaxwellField(0.0, Region.GATED)
    ig2 = 1.0 / g**2
    den = ((ig2 - rho**2 + t**2 - x**2) ** 2 + 4 * ig2 * rho**2) ** 1.5
    return MaxwellField(8 * e * ig2 * rho * t / den, Region.ACTIVE)


def ld_radiation_reaction(w: Worldline, tau: float, e: float = 1.0) -> np.ndarray:
    """(2 e^2/3) [dddot z - (ddot z . ddot z) dot z] with metric (-,+,+,+).

    Built from the exponential-polynomial form of z so that the invariant
    ddot z . ddot z reduces exactly to a constant before evaluation.
    """
    z = w.position()
    zd = z.deriv()
    zdd = zd.deriv()
    zddd = zdd.deriv()
    sq = zdd * (zdd * ETA4)
    a2 = sq[0] + sq[1] + sq[2] + sq[3]
    gam = zddd - a2 * zd
    return (2 * e * e / 3) * np.asarray(gam(tau), dtype=float)
