"""Adaptive 1D quadrature with inverse-square-root endpoint weights and semi-infinite ranges.

Backed by :func:`scipy.integrate.quad_vec` (adaptive Gauss-Kronrod); this
module supplies the variable changes and the error contract on top of it.
Integrands may return scalars or arrays.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec

from .errors import NotConverged

TOL_REL = 1e-9
TOL_ABS = 1e-12
LIMIT = 10_000


class Weight(enum.Enum):
    NONE = "none"
    INV_SQRT_LEFT = "inv_sqrt_left"
    INV_SQRT_RIGHT = "inv_sqrt_right"


@dataclass(frozen=True)
class Tolerance:
    rel: float = TOL_REL
    abs: float = TOL_ABS
    limit: int = LIMIT


DEFAULT_TOL = Tolerance()


@dataclass(frozen=True)
class QuadResult:
    value: object  # float or ndarray
    abs_err_estimate: float
    n_evals: int

    def converged(self, tol: Tolerance = DEFAULT_TOL) -> bool:
        scale = float(np.max(np.abs(self.value)))
        return self.abs_err_estimate <= max(tol.abs, tol.rel * scale)


def _run(g, lo, hi, tol: Tolerance) -> QuadResult:
    val, err, info = quad_vec(g, lo, hi, epsabs=tol.abs, epsrel=tol.rel, limit=tol.limit,
                              norm="max", full_output=True)
    if not info.success:
        raise NotConverged(float(err))
    val = float(val) if np.ndim(val) == 0 else np.asarray(val)
    return QuadResult(val, float(err), int(info.neval))


def integrate_finite(f, a: float, b: float, tol: Tolerance = DEFAULT_TOL,
                     endpoint_weight: Weight = Weight.NONE) -> QuadResult:
    """Integral of ``f`` over [a, b].

    With an InvSqrt weight ``f`` itself may blow up like |x - end|^{-1/2} at
    the named end; the substitution x = end +- u^2 makes the integrand smooth.
    """
    if not a < b:
        raise ValueError(f"need a < b, got [{a}, {b}]")
    if endpoint_weight is Weight.NONE:
        return _run(f, a, b, tol)
    L = np.sqrt(b - a)
    if endpoint_weight is Weight.INV_SQRT_LEFT:
        return _run(lambda u: 2.0 * u * f(a + u * u), 0.0, L, tol)
    return _run(lambda u: 2.0 * u * f(b - u * u), 0.0, L, tol)


def integrate_semi_infinite(f, b: float, tol: Tolerance = DEFAULT_TOL) -> QuadResult:
    """Integral of ``f`` over (-inf, b] via s = b - (1 - v)/v, v in (0, 1]."""

    # Gauss-Kronrod nodes are interior, so v = 0 is never evaluated
    def g(v):
        return f(b - (1.0 - v) / v) / (v * v)

    return _run(g, 0.0, 1.0, tol)
