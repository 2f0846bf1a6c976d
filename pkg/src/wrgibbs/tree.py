"""Boundary laws of the soft-core model on the regular tree with ``k + 1`` neighbours.

A tree-invariant splitting Gibbs measure corresponds to a positive fixed point
``(l_minus, l_plus)`` (hole component normalized to 1) of

    l'(s) = (alpha(s) / alpha(0)) * [sum_s' Q(s, s') l(s') / sum_s' l(s')]^k,

with ``Q(s, s') = exp(-beta)`` for opposite spins and 1 otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measures import DomainError, SpinMeasure, ZeroComponentError

__all__ = [
    "BoundaryLaw",
    "TreeParams",
    "recursion_step",
    "find_fixed_points",
    "multiplicity",
    "critical_beta",
    "critical_scan",
    "iterate_from_symmetric",
    "hole_probability",
]

DEDUP_TOL = 1e-8
RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class BoundaryLaw:
    l_minus: float
    l_plus: float

    def __post_init__(self):
        if not (self.l_minus > 0 and self.l_plus > 0 and math.isfinite(self.l_minus)
                and math.isfinite(self.l_plus)):
            raise DomainError("boundary law components must be positive and finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.l_minus, self.l_plus])

    def swap(self) -> "BoundaryLaw":
        return BoundaryLaw(self.l_plus, self.l_minus)


@dataclass(frozen=True)
class TreeParams:
    k: int
    beta: float
    alpha: SpinMeasure

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError("offspring number k must be a positive integer")
        if not math.isfinite(self.beta):
            raise DomainError("beta must be finite")
        if not isinstance(self.alpha, SpinMeasure):
            object.__setattr__(self, "alpha", SpinMeasure.from_array(self.alpha))
        if min(self.alpha.as_array()) <= 0:
            raise ZeroComponentError("tree recursion needs a positive a-priori measure")

    @property
    def log_c(self) -> np.ndarray:
        a = self.alpha.as_array()
        return np.log(np.array([a[0], a[2]]) / a[1])


def _log_map(y, k, beta, log_c):
    """Log-domain recursion on arrays ``y = (log l_minus, log l_plus)`` of shape (..., 2)."""
    ym, yp = y[..., 0], y[..., 1]
    top = max(0.0, float(np.max(y))) if np.ndim(y) == 1 else np.maximum(0.0, np.max(y, axis=-1))
    em, ep, e0 = np.exp(ym - top), np.exp(yp - top), np.exp(-top)
    q = math.exp(-beta)
    log_den = np.log(e0 + em + ep)
    out_m = log_c[0] + k * (np.log(em + e0 + q * ep) - log_den)
    out_p = log_c[1] + k * (np.log(ep + e0 + q * em) - log_den)
    return np.stack([out_m, out_p], axis=-1)


def _log_jac(y, k, beta):
    """Jacobian of :func:`_log_map` with respect to ``y``; shape (..., 2, 2)."""
    lm, lp = np.exp(y[..., 0]), np.exp(y[..., 1])
    q = math.exp(-beta)
    den = 1.0 + lm + lp
    nm = lm + 1.0 + q * lp
    npl = lp + 1.0 + q * lm
    J = np.empty(y.shape[:-1] + (2, 2))
    J[..., 0, 0] = k * (lm / nm - lm / den)
    J[..., 0, 1] = k * (q * lp / nm - lp / den)
    J[..., 1, 0] = k * (q * lm / npl - lm / den)
    J[..., 1, 1] = k * (lp / npl - lp / den)
    return J


def recursion_step(l: BoundaryLaw, params: TreeParams) -> BoundaryLaw:
    y = np.log(l.as_array())
    out = np.exp(_log_map(y, params.k, params.beta, params.log_c))
    return BoundaryLaw(float(out[0]), float(out[1]))


def _box(params: TreeParams):
    # the bracket ratio lies between min(1, e^-beta) and max(1, e^-beta)
    lo = params.log_c + params.k * min(0.0, -params.beta)
    hi = params.log_c + params.k * max(0.0, -params.beta)
    return lo, hi


def find_fixed_points(params: TreeParams, n_starts: int = 64, damped_steps: int = 64,
                      newton_steps: int = 60) -> list:
    """All fixed points reachable from a log-space grid of starts.

    Each start runs damped iteration (factor 0.5) and, separately, Newton on
    ``log F(y) - y``; Newton also captures fixed points unstable under iteration.
    """
    k, beta, log_c = params.k, params.beta, params.log_c
    lo, hi = _box(params)
    side = max(2, int(round(math.sqrt(n_starts))))
    pad = 1e-3 + 0.02 * (hi - lo)
    g0 = np.linspace(lo[0] - pad[0], hi[0] + pad[0], side)
    g1 = np.linspace(lo[1] - pad[1], hi[1] + pad[1], side)
    Y0 = np.stack(np.meshgrid(g0, g1, indexing="ij"), axis=-1).reshape(-1, 2)
    Yd = Y0.copy()
    for _ in range(damped_steps):
        Yd = 0.5 * Yd + 0.5 * _log_map(Yd, k, beta, log_c)
    Y = np.concatenate([Y0, Yd])
    eye = np.eye(2)
    for _ in range(newton_steps):
        G = _log_map(Y, k, beta, log_c) - Y
        J = _log_jac(Y, k, beta) - eye
        try:
            step = np.linalg.solve(J, -G[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = -G
        bad = ~np.isfinite(step).all(axis=-1)
        step[bad] = -G[bad]
        step = np.clip(step, -1.0, 1.0)
        Y = Y + step
        Y = np.clip(Y, lo - 1.0, hi + 1.0)
    res = np.max(np.abs(np.exp(_log_map(Y, k, beta, log_c)) - np.exp(Y)) / np.maximum(1.0, np.exp(Y)), axis=-1)
    found = []
    for y in Y[np.argsort(res)][np.sort(res) < RESIDUAL_TOL]:
        l = np.exp(y)
        if all(np.max(np.abs(l - f.as_array()) / np.maximum(1.0, f.as_array())) > DEDUP_TOL for f in found):
            found.append(BoundaryLaw(float(l[0]), float(l[1])))
    found.sort(key=lambda b: (b.l_plus - b.l_minus, b.l_plus))
    return found


def multiplicity(params: TreeParams) -> int:
    return len(find_fixed_points(params))


def hole_probability(l: BoundaryLaw, params: TreeParams) -> float:
    """Single-site hole probability of the splitting measure built on ``l``."""
    a = params.alpha.as_array()
    # site weights at the root: alpha(s) times the product over k+1 incoming messages
    lm, lp = l.l_minus, l.l_plus
    q = math.exp(-params.beta)
    k1 = params.k + 1
    logs = np.array([
        math.log(a[0]) + k1 * math.log(lm + 1 + q * lp),
        math.log(a[1]) + k1 * math.log(1 + lm + lp),
        math.log(a[2]) + k1 * math.log(lp + 1 + q * lm),
    ])
    w = np.exp(logs - logs.max())
    return float(w[1] / w.sum())


def iterate_from_symmetric(params: TreeParams, steps: int = 1000, damping: float = 0.5):
    """Damped iteration from ``l = (1, 1)``; returns the final law and the last step size."""
    y = np.zeros(2)
    last = math.inf
    for _ in range(steps):
        new = (1 - damping) * _log_map(y, params.k, params.beta, params.log_c) + damping * y
        last = float(np.max(np.abs(new - y)))
        y = new
    l = np.exp(y)
    return BoundaryLaw(float(l[0]), float(l[1])), last


def critical_beta(k: int, alpha: SpinMeasure, beta_lo: float, beta_hi: float, tol: float = 1e-4) -> float:
    """Bisection on the multiplicity indicator ``count > 1`` between the two brackets.

    ``beta_lo`` must give a unique fixed point and ``beta_hi`` several; works in
    either direction of ``beta``.
    """
    def multi(b):
        return multiplicity(TreeParams(k, b, alpha)) > 1

    if multi(beta_lo) or not multi(beta_hi):
        raise DomainError("brackets must straddle the onset of multiplicity")
    lo, hi = beta_lo, beta_hi
    while abs(hi - lo) > tol:
        mid = 0.5 * (lo + hi)
        if multi(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def critical_scan(k: int, alpha0_ladder, beta_max: float = 30.0, step: float = 0.25,
                  antiferro: bool = False, tol: float = 1e-4) -> list:
    """Per ``alpha(0)``, the first ``beta`` (scanning away from 0) with several fixed points.

    Rows are ``(alpha0, beta_crit)``; ``beta_crit`` is ``nan`` when no onset is
    found within ``beta_max``.
    """
    from .measures import symmetric_alpha

    if k < 2:
        raise DomainError("critical scans need k >= 2")
    sign = -1.0 if antiferro else 1.0
    rows = []
    for a0 in alpha0_ladder:
        alpha = symmetric_alpha(float(a0))
        prev = 0.0
        crit = math.nan
        b = step
        while b <= beta_max + 1e-12:
            if multiplicity(TreeParams(k, sign * b, alpha)) > 1:
                crit = critical_beta(k, alpha, sign * prev, sign * b, tol)
                break
            prev = b
            b += step
        rows.append((float(a0), crit))
    return rows
