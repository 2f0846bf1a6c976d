"""Probability objects on the alphabet {-1, 0, +1} and the entropy functionals.

Index convention used everywhere in the package: arrays of length 3 are
ordered ``(minus, hole, plus)``, so ``array[s + 1]`` is the mass of symbol ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SYMBOLS = (-1, 0, 1)

# total-variation tolerance for set-membership decisions on measures
MEASURE_TOL = 1e-9
_SUM_TOL = 1e-12
_TINY = 1e-300


class DomainError(ValueError):
    """An argument lies outside the domain of a formula."""


class ZeroComponentError(DomainError):
    """A measure that must be strictly positive has a zero component."""


class SupportError(DomainError):
    """Absolute continuity between two measures fails."""


@dataclass(frozen=True)
class SpinMeasure:
    p_minus: float
    p_zero: float
    p_plus: float

    def __post_init__(self):
        vals = (self.p_minus, self.p_zero, self.p_plus)
        if any(not math.isfinite(v) for v in vals):
            raise DomainError(f"non-finite probabilities {vals}")
        if min(vals) < -_SUM_TOL:
            raise DomainError(f"negative probability in {vals}")
        if abs(sum(vals) - 1.0) > _SUM_TOL:
            raise DomainError(f"probabilities sum to {sum(vals)!r}, not 1")
        # clip rounding noise so that downstream logs see exact zeros
        if min(vals) < 0:
            object.__setattr__(self, "p_minus", max(self.p_minus, 0.0))
            object.__setattr__(self, "p_zero", max(self.p_zero, 0.0))
            object.__setattr__(self, "p_plus", max(self.p_plus, 0.0))

    @classmethod
    def from_array(cls, arr, normalize: bool = False) -> "SpinMeasure":
        a = np.asarray(arr, dtype=float)
        if normalize:
            a = a / a.sum()
        return cls(float(a[0]), float(a[1]), float(a[2]))

    @classmethod
    def uniform(cls) -> "SpinMeasure":
        return cls(1 / 3, 1 / 3, 1 / 3)

    @classmethod
    def delta(cls, s: int) -> "SpinMeasure":
        arr = np.zeros(3)
        arr[s + 1] = 1.0
        return cls.from_array(arr)

    def as_array(self) -> np.ndarray:
        return np.array([self.p_minus, self.p_zero, self.p_plus])

    def __getitem__(self, s: int) -> float:
        return (self.p_minus, self.p_zero, self.p_plus)[s + 1]

    @property
    def occupied(self) -> float:
        return self.p_minus + self.p_plus

    @property
    def is_symmetric(self) -> bool:
        return abs(self.p_plus - self.p_minus) <= MEASURE_TOL

    def flip(self) -> "SpinMeasure":
        """Image under the spin exchange + <-> -."""
        return SpinMeasure(self.p_plus, self.p_zero, self.p_minus)

    def tv(self, other: "SpinMeasure") -> float:
        return 0.5 * float(np.abs(self.as_array() - other.as_array()).sum())

    def close_to(self, other: "SpinMeasure", tol: float = MEASURE_TOL) -> bool:
        return self.tv(other) <= tol


@dataclass(frozen=True)
class OccCoords:
    """Occupation density ``x`` and magnetization ``m`` on occupied sites."""

    x: float
    m: float
    degenerate: bool = False

    def __post_init__(self):
        if not (-_SUM_TOL <= self.x <= 1 + _SUM_TOL):
            raise DomainError(f"occupation density {self.x} outside [0, 1]")
        if abs(self.m) > 1 + _SUM_TOL:
            raise DomainError(f"magnetization {self.m} outside [-1, 1]")
        if self.degenerate and self.m != 0.0:
            raise DomainError("degenerate coordinates must carry m = 0")


@dataclass(frozen=True)
class FieldCoords:
    h: float
    l: float  # noqa: E741


@dataclass(frozen=True)
class ModelParams:
    """Repulsion ``beta`` (any sign) and a-priori measure ``alpha``."""

    beta: float
    alpha: SpinMeasure

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise DomainError("beta must be finite")
        if not isinstance(self.alpha, SpinMeasure):
            object.__setattr__(self, "alpha", SpinMeasure.from_array(self.alpha))


def symmetric_alpha(alpha0: float, h: float = 0.0) -> SpinMeasure:
    """A-priori measure with hole mass ``alpha0`` and field ``h`` on the spins."""
    if not (0.0 <= alpha0 <= 1.0):
        raise DomainError(f"alpha0={alpha0} outside [0, 1]")
    occ = 1.0 - alpha0
    w_plus = 1.0 / (1.0 + math.exp(-2.0 * h))
    return SpinMeasure(occ * (1.0 - w_plus), alpha0, occ * w_plus)


def to_occ_coords(nu: SpinMeasure) -> OccCoords:
    x = 1.0 - nu.p_zero
    if x <= 0.0:
        return OccCoords(0.0, 0.0, degenerate=True)
    m = (nu.p_plus - nu.p_minus) / x
    return OccCoords(min(x, 1.0), max(-1.0, min(1.0, m)))


def from_occ_coords(c: OccCoords) -> SpinMeasure:
    x, m = c.x, c.m
    return SpinMeasure(0.5 * x * (1.0 - m), 1.0 - x, 0.5 * x * (1.0 + m))


def field_coords(alpha: SpinMeasure) -> FieldCoords:
    a = alpha.as_array()
    if np.any(a <= 0):
        raise ZeroComponentError(f"field coordinates need a positive measure, got {a}")
    return FieldCoords(0.5 * math.log(a[2] / a[0]), math.log((1.0 - a[1]) / a[1]))


def _xlogx_ratio(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    # p log(p/q) with 0 log 0 = 0; caller guarantees q > 0 where p > 0
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * (np.log(p[pos]) - np.log(np.maximum(q[pos], _TINY)))
    return out


def relative_entropy(nu: SpinMeasure, alpha: SpinMeasure) -> float:
    p, q = nu.as_array(), alpha.as_array()
    if np.any((p > 0) & (q <= 0)):
        raise SupportError(f"{nu} is not absolutely continuous w.r.t. {alpha}")
    return max(float(_xlogx_ratio(p, q).sum()), 0.0)


def _check_m(m):
    if np.any(np.abs(m) > 1 + _SUM_TOL):
        raise DomainError("spin entropy needs |m| <= 1")


def spin_entropy(m):
    """Negative binary entropy of ``(1 -/+ m)/2``; equals ``-log 2`` at ``m = 0``."""
    _check_m(m)
    m = np.clip(np.asarray(m, dtype=float), -1.0, 1.0)
    lo, hi = 0.5 * (1.0 - m), 0.5 * (1.0 + m)
    val = lo * np.log(np.maximum(lo, _TINY)) + hi * np.log(np.maximum(hi, _TINY))
    return float(val) if val.ndim == 0 else val


def spin_entropy_prime(m):
    """Derivative of :func:`spin_entropy`, i.e. ``atanh(m)``."""
    _check_m(m)
    return np.arctanh(m)


def occ_entropy(x):
    """Relative entropy of Bernoulli(x) occupation w.r.t. Bernoulli(2/3)."""
    if np.any((np.asarray(x) < -_SUM_TOL) | (np.asarray(x) > 1 + _SUM_TOL)):
        raise DomainError("occupation entropy needs 0 <= x <= 1")
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    e = 1.0 - x
    val = e * np.log(np.maximum(3.0 * e, _TINY)) + x * np.log(np.maximum(1.5 * x, _TINY))
    return float(val) if val.ndim == 0 else val
