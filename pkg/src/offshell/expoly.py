"""Exponential polynomials  sum_n p_n(s) exp(n g s)  with exact symbolic products.

The hyperbolic worldline produces quantities like (x - z(s))^2 whose naive
evaluation subtracts terms of size exp(2|s|).  Representing every kernel
quantity as an exponential polynomial lets the large terms cancel in the
coefficients (cosh^2 - sinh^2 -> 1) before any number is evaluated.
"""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .errors import RangeExceeded

NEXP = 5        # exponent indices n = -2..2
NDEG = 5        # polynomial degrees 0..4
_N = np.arange(-2, 3)
_D = np.arange(NDEG)
# exp(n g s) overflows beyond this argument
EXP_LIMIT = 700.0


def _conv_tensor(size: int, offset: int) -> np.ndarray:
    """T[i, j, k] = 1 when (i - offset) + (j - offset) == k - offset."""
    t = np.zeros((size, size, size))
    for i in range(size):
        for j in range(size):
            k = i + j - offset
            if 0 <= k < size:
                t[i, j, k] = 1.0
    return t


_TN = _conv_tensor(NEXP, 2)
_TD = _conv_tensor(NDEG, 0)


class ExpPoly:
    """Array-valued exponential polynomial.

    ``coef[..., n + 2, d]`` multiplies ``s**d * exp(n * rate * s)``.
    """

    __slots__ = ("coef", "rate", "_nz")

    def __init__(self, coef: np.ndarray, rate: float = 1.0):
        coef = np.asarray(coef, dtype=float)
        if coef.shape[-2:] != (NEXP, NDEG):
            raise ValueError(f"bad coefficient shape {coef.shape}")
        self.coef = coef
        self.rate = float(rate)
        self._nz = None

    @property
    def nonzero(self) -> np.ndarray:
        """(NEXP, NDEG) mask of terms carrying a coefficient in any component."""
        if self._nz is None:
            self._nz = np.any(self.coef.reshape(-1, NEXP, NDEG) != 0.0, axis=0)
        return self._nz

    # construction ---------------------------------------------------------
    @classmethod
    def zeros(cls, shape: Sequence[int] = (), rate: float = 1.0) -> ExpPoly:
        return cls(np.zeros((*shape, NEXP, NDEG)), rate)

    @classmethod
    def const(cls, c, rate: float = 1.0) -> ExpPoly:
        c = np.asarray(c, dtype=float)
        out = np.zeros((*c.shape, NEXP, NDEG))
        out[..., 2, 0] = c
        return cls(out, rate)

    @classmethod
    def poly(cls, coeffs: Sequence[float], rate: float = 1.0) -> ExpPoly:
        """Scalar polynomial c0 + c1 s + c2 s^2 + ..."""
        out = np.zeros((NEXP, NDEG))
        out[2, : len(coeffs)] = coeffs
        return cls(out, rate)

    @classmethod
    def exp(cls, n: int, c: float, rate: float) -> ExpPoly:
        out = np.zeros((NEXP, NDEG))
        out[n + 2, 0] = c
        return cls(out, rate)

    @classmethod
    def stack(cls, items: Sequence[ExpPoly]) -> ExpPoly:
        rate = _common_rate(items)
        return cls(np.stack([it.coef for it in items]), rate)

    # algebra --------------------------------------------------------------
    @property
    def shape(self) -> tuple:
        return self.coef.shape[:-2]

    def __getitem__(self, idx) -> ExpPoly:
        if not isinstance(idx, tuple):
            idx = (idx,)
        return ExpPoly(self.coef[idx + (slice(None), slice(None))], self.rate)

    def __add__(self, other) -> ExpPoly:
        if not isinstance(other, ExpPoly):
            other = ExpPoly.const(other, self.rate)
        rate = _common_rate([self, other])
        return ExpPoly(self.coef + other.coef, rate)

    __radd__ = __add__

    def __neg__(self) -> ExpPoly:
        return ExpPoly(-self.coef, self.rate)

    def __sub__(self, other) -> ExpPoly:
        return self + (-other if isinstance(other, ExpPoly) else -np.asarray(other))

    def __rsub__(self, other) -> ExpPoly:
        return (-self) + other

    def __mul__(self, other) -> ExpPoly:
        if not isinstance(other, ExpPoly):
            c = np.asarray(other, dtype=float)
            return ExpPoly(self.coef * c[..., None, None], self.rate)
        rate = _common_rate([self, other])
        a, b = np.broadcast_arrays(self.coef, other.coef)
        out = np.einsum("...ab,...ce,acn,bed->...nd", a, b, _TN, _TD)
        # detect truncation: the full product must fit into the fixed window
        total = np.abs(a).sum(axis=(-2, -1)) * np.abs(b).sum(axis=(-2, -1))
        kept = np.einsum("...ab,...ce,acn,bed->...", np.abs(a), np.abs(b), _TN, _TD)
        if np.any(kept < total * (1 - 1e-12) - 1e-300):
            raise OverflowError("exponential polynomial product exceeds the fixed window")
        return ExpPoly(out, rate)

    __rmul__ = __mul__

    def deriv(self) -> ExpPoly:
        c = self.coef
        out = c * (_N * self.rate)[:, None]
        out[..., :, :-1] += c[..., :, 1:] * _D[1:]
        return ExpPoly(out, self.rate)

    # evaluation -----------------------------------------------------------
    def _basis(self, s: float) -> np.ndarray:
        return basis(s, self.rate, self.nonzero)

    def __call__(self, s: float):
        """Plain evaluation (vector quantities)."""
        val = np.einsum("...nd,nd->...", self.coef, self._basis(s))
        return float(val) if val.ndim == 0 else val

    def terms(self, s: float) -> np.ndarray:
        return self.coef * self._basis(s)

    def fsum(self, s: float) -> float:
        """Correctly rounded sum of the individually rounded terms (scalars only)."""
        return math.fsum(self.terms(s).ravel())

    def scale(self, s: float) -> float:
        """Sum of term magnitudes; the natural size against which cancellation is judged."""
        return float(np.abs(self.terms(s)).sum())

    def taylor(self, s0: float, order: int) -> np.ndarray:
        """Taylor coefficients c_k of f(s0 + d) = sum_k c_k d^k, shape (*shape, order + 1)."""
        k = np.arange(order + 1)
        lf = np.array([math.lgamma(i + 1) for i in k])
        out = np.zeros((*self.shape, order + 1))
        for row, n in enumerate(_N):
            c = self.coef[..., row, :]
            if not np.any(c):
                continue
            arg = n * self.rate * s0
            if abs(arg) > EXP_LIMIT:
                raise RangeExceeded(s0, EXP_LIMIT / max(abs(self.rate), 1e-300))
            # p(s0 + d) as a polynomial in d
            shifted = np.zeros((*self.shape, NDEG))
            for d in range(NDEG):
                for j in range(d + 1):
                    shifted[..., j] += c[..., d] * math.comb(d, j) * s0 ** (d - j)
            if n == 0:
                ser = np.zeros(order + 1)
                ser[0] = 1.0
            else:
                nr = n * self.rate
                with np.errstate(divide="ignore"):
                    mag = np.where(k > 0, k * math.log(abs(nr)), 0.0) - lf
                ser = np.exp(mag) * np.where((nr < 0) & (k % 2 == 1), -1.0, 1.0)
            ser = ser * math.exp(arg)
            for j in range(NDEG):
                if not np.any(shifted[..., j]):
                    continue
                out[..., j:] += shifted[..., j, None] * ser[: order + 1 - j]
        return out

    def structure(self) -> dict:
        """Nonzero (n, d) positions, for callers that need a specific form."""
        return {(int(_N[i]), int(d)) for i, d in zip(*np.nonzero(self.nonzero))}


def basis(s: float, rate: float, mask: np.ndarray) -> np.ndarray:
    """B[n, d] = s**d exp(n g s) on ``mask``, zero elsewhere."""
    active = mask.any(axis=1)
    arg = _N * rate * s
    if np.any(np.abs(arg[active]) > EXP_LIMIT):
        raise RangeExceeded(s, EXP_LIMIT / max(abs(rate), 1e-300))
    e = np.exp(np.where(active, arg, 0.0))
    with np.errstate(over="ignore", invalid="ignore"):
        b = e[:, None] * s ** _D[None, :]
    return np.where(mask, b, 0.0)


def _common_rate(items: Sequence[ExpPoly]) -> float:
    rates = {it.rate for it in items if np.any(it.coef[..., [0, 1, 3, 4], :])}
    if len(rates) > 1:
        raise ValueError(f"mixed exponential rates {rates}")
    return rates.pop() if rates else items[0].rate
