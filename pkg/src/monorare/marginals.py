"""Univariate input laws and their cdf/quantile pairs.

The distributional transform maps a physical input ``y`` to ``F(y)`` in the
unit interval; evaluation goes the other way through the quantile. All
functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numba
import numpy as np

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


# -- special functions -------------------------------------------------------


@numba.vectorize(["float64(float64)"], cache=True)
def norm_cdf(z):
    return 0.5 * math.erfc(-z / _SQRT2)


@numba.njit(cache=True)
def _norm_ppf_lower(u):
    # rational start (error < 4.5e-4) then Halley steps on erfc
    t = math.sqrt(-2.0 * math.log(u))
    z = -(t - (2.515517 + 0.802853 * t + 0.010328 * t * t)
          / (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t))
    for _ in range(6):
        err = 0.5 * math.erfc(-z / _SQRT2) - u
        dens = math.exp(-0.5 * z * z) / _SQRT2PI
        if dens == 0.0:
            break
        step = err / dens
        step = step / (1.0 + 0.5 * z * step)
        z -= step
        if abs(step) <= 1e-15 * max(1.0, abs(z)):
            break
    return z


@numba.vectorize(["float64(float64)"], cache=True)
def norm_ppf(u):
    if not (0.0 < u < 1.0):
        if u == 0.0:
            return -np.inf
        if u == 1.0:
            return np.inf
        return np.nan
    if u <= 0.5:
        return _norm_ppf_lower(u)
    return -_norm_ppf_lower(1.0 - u)


@numba.njit(cache=True)
def _erlang_lower(a, z):
    """Regularized lower incomplete gamma P(a, z) for integer a >= 1."""
    if z <= 0.0:
        return 0.0
    if z < a + 1.0:
        # series: e^-z z^a / a! * sum_j z^j / ((a+1)...(a+j))
        term = 1.0
        total = 1.0
        j = 1
        while j < 1000:
            term *= z / (a + j)
            total += term
            if term < 1e-17 * total:
                break
            j += 1
        return math.exp(-z + a * math.log(z) - math.lgamma(a + 1.0)) * total
    # finite Poisson sum for the upper tail
    term = 1.0
    total = 1.0
    for k in range(1, int(a)):
        term *= z / k
        total += term
    return 1.0 - math.exp(-z) * total


@numba.vectorize(["float64(float64, float64, float64)"], cache=True)
def erlang_cdf(y, shape, scale):
    return _erlang_lower(shape, y / scale)


@numba.vectorize(["float64(float64, float64, float64)"], cache=True)
def erlang_ppf(u, shape, scale):
    if u == 0.0:
        return 0.0
    if not (0.0 < u < 1.0):
        return np.inf if u == 1.0 else np.nan
    a = shape
    lo = 0.0
    hi = a + 10.0 * math.sqrt(a) + 10.0
    while _erlang_lower(a, hi) < u:
        lo = hi
        hi *= 2.0
    # leading series term gives a good start in the lower tail
    z = math.exp((math.log(u) + math.lgamma(a + 1.0)) / a)
    if not (lo < z < hi):
        z = 0.5 * (lo + hi)
    for _ in range(200):
        f = _erlang_lower(a, z) - u
        if f < 0.0:
            lo = z
        else:
            hi = z
        dens = math.exp((a - 1.0) * math.log(z) - z - math.lgamma(a))
        nz = z - f / dens if dens > 0.0 else 0.5 * (lo + hi)
        if not (lo < nz < hi):
            nz = 0.5 * (lo + hi)
        if abs(nz - z) <= 1e-13 * max(1.0, z) or hi - lo <= 1e-15 * max(1.0, hi):
            z = nz
            break
        z = nz
    return z * scale


def beta2_cdf(x: float, b: float) -> float:
    """Cdf of Beta(2, b): 1 - (1 - x)^b (1 + b x)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    return 1.0 - (1.0 - x) ** b * (1.0 + b * x)


def beta2_ppf(u: float, b: float, tol: float = 1e-15) -> float:
    """Quantile of Beta(2, b) by bisection on the closed-form cdf."""
    if not 0.0 < u < 1.0:
        raise ValueError(f"probability must lie in (0, 1), got {u}")
    lo, hi = 0.0, 1.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if beta2_cdf(mid, b) < u:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# -- marginal families --------------------------------------------------------


def _check_u(u, lower_finite: bool, upper_finite: bool) -> np.ndarray:
    arr = np.asarray(u, dtype=float)
    if np.any(np.isnan(arr)) or np.any((arr < 0.0) | (arr > 1.0)):
        raise ValueError("probabilities must lie in [0, 1]")
    if not lower_finite and np.any(arr == 0.0):
        raise ValueError("quantile at 0 is infinite for this law")
    if not upper_finite and np.any(arr == 1.0):
        raise ValueError("quantile at 1 is infinite for this law")
    return arr


def _out(arr):
    return float(arr) if np.ndim(arr) == 0 else arr


@dataclass(frozen=True)
class Marginal:
    """Base class; subclasses define ``support``, ``_cdf`` and ``_ppf``."""

    family: ClassVar[str] = ""

    @property
    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def cdf(self, y):
        lo, hi = self.support
        arr = np.asarray(y, dtype=float)
        inner = np.clip(arr, lo, hi)
        res = np.where(arr <= lo, 0.0, np.where(arr >= hi, 1.0, self._cdf(inner)))
        return _out(res)

    def quantile(self, u):
        lo, hi = self.support
        arr = _check_u(u, math.isfinite(lo), math.isfinite(hi))
        res = np.clip(self._ppf(arr), lo, hi)
        return _out(res)

    def to_dict(self) -> dict:
        out = {"family": self.family}
        out.update(self.__dict__)
        return out


@dataclass(frozen=True)
class Uniform(Marginal):
    low: float = 0.0
    high: float = 1.0
    family: ClassVar[str] = "uniform"

    def __post_init__(self):
        if not self.low < self.high:
            raise ValueError("uniform needs low < high")

    @property
    def support(self):
        return (self.low, self.high)

    def _cdf(self, y):
        return (y - self.low) / (self.high - self.low)

    def _ppf(self, u):
        return self.low + u * (self.high - self.low)


@dataclass(frozen=True)
class Gamma(Marginal):
    """Gamma law with integer shape (Erlang), closed-form cdf."""

    shape: int = 1
    scale: float = 1.0
    family: ClassVar[str] = "gamma"

    def __post_init__(self):
        if int(self.shape) != self.shape or self.shape < 1:
            raise ValueError("gamma shape must be a positive integer")
        if self.scale <= 0:
            raise ValueError("gamma scale must be positive")

    @property
    def support(self):
        return (0.0, math.inf)

    def _cdf(self, y):
        return erlang_cdf(y, float(self.shape), float(self.scale))

    def _ppf(self, u):
        return erlang_ppf(u, float(self.shape), float(self.scale))


@dataclass(frozen=True)
class TruncatedGumbel(Marginal):
    loc: float = 0.0
    scale: float = 1.0
    lower: float = -math.inf
    upper: float = math.inf
    family: ClassVar[str] = "gumbel"

    def __post_init__(self):
        if self.scale <= 0 or not self.lower < self.upper:
            raise ValueError("invalid gumbel parameters")

    @property
    def support(self):
        return (self.lower, self.upper)

    def _raw(self, y):
        return np.exp(-np.exp(-(y - self.loc) / self.scale))

    def _mass(self):
        return float(self._raw(self.lower)), float(self._raw(self.upper))

    def _cdf(self, y):
        fa, fb = self._mass()
        return (self._raw(y) - fa) / (fb - fa)

    def _ppf(self, u):
        fa, fb = self._mass()
        with np.errstate(divide="ignore"):
            return self.loc - self.scale * np.log(-np.log(fa + u * (fb - fa)))


@dataclass(frozen=True)
class TruncatedNormal(Marginal):
    mean: float = 0.0
    sd: float = 1.0
    lower: float = -math.inf
    upper: float = math.inf
    family: ClassVar[str] = "normal"

    def __post_init__(self):
        if self.sd <= 0 or not self.lower < self.upper:
            raise ValueError("invalid normal parameters")

    @property
    def support(self):
        return (self.lower, self.upper)

    def _std(self):
        return (self.lower - self.mean) / self.sd, (self.upper - self.mean) / self.sd

    def _cdf(self, y):
        a, b = self._std()
        z = (y - self.mean) / self.sd
        if a > 0:
            # work with upper tails to keep precision
            return (norm_cdf(-a) - norm_cdf(-z)) / (norm_cdf(-a) - norm_cdf(-b))
        return (norm_cdf(z) - norm_cdf(a)) / (norm_cdf(b) - norm_cdf(a))

    def _ppf(self, u):
        a, b = self._std()
        if a > 0:
            qa, qb = norm_cdf(-a), norm_cdf(-b)
            z = -norm_ppf(qa - u * (qa - qb))
        else:
            pa, pb = norm_cdf(a), norm_cdf(b)
            z = norm_ppf(pa + u * (pb - pa))
        return self.mean + self.sd * z


@dataclass(frozen=True)
class Triangular(Marginal):
    low: float = 0.0
    mode: float = 0.5
    high: float = 1.0
    family: ClassVar[str] = "triangular"

    def __post_init__(self):
        if not (self.low <= self.mode <= self.high and self.low < self.high):
            raise ValueError("triangular needs low <= mode <= high, low < high")

    @property
    def support(self):
        return (self.low, self.high)

    def _cdf(self, y):
        a, c, b = self.low, self.mode, self.high
        with np.errstate(divide="ignore", invalid="ignore"):
            left = (y - a) ** 2 / ((b - a) * (c - a))
            right = 1.0 - (b - y) ** 2 / ((b - a) * (b - c))
        return np.where(y <= c, left, right)

    def _ppf(self, u):
        a, c, b = self.low, self.mode, self.high
        split = (c - a) / (b - a)
        return np.where(
            u <= split,
            a + np.sqrt(u * (b - a) * (c - a)),
            b - np.sqrt((1.0 - u) * (b - a) * (b - c)),
        )


FAMILIES: dict[str, type[Marginal]] = {
    cls.family: cls for cls in (Uniform, Gamma, TruncatedGumbel, TruncatedNormal, Triangular)
}


def marginal_from_dict(spec: dict) -> Marginal:
    spec = dict(spec)
    family = spec.pop("family", None)
    if family not in FAMILIES:
        raise ValueError(f"unknown marginal family {family!r}; known: {sorted(FAMILIES)}")
    for key in ("lower", "upper"):
        if spec.get(key) is None:
            spec.pop(key, None)
    return FAMILIES[family](**spec)
