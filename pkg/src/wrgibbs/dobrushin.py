"""Dobrushin interdependence for the lattice soft-core and hard-core models.

Single-site kernels depend on the neighbours only through the count triple
``(n_plus, n_minus, n_zero)``, so the sup over boundary conditions is an
enumeration over count triples of the other ``degree - 1`` neighbours and over
pairs of values at the distinguished neighbour ``j``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .measures import DomainError, ModelParams, SpinMeasure

__all__ = [
    "EmptySupportError",
    "NeighborContext",
    "DobrushinReport",
    "DobrushinRegion",
    "single_site_kernel",
    "dobrushin_coefficient",
    "dobrushin_coefficient_bruteforce",
    "dobrushin_region",
    "first_layer_dobrushin",
    "first_layer_threshold",
]

_J_PAIRS = ((1, -1), (1, 0), (0, -1))


class EmptySupportError(DomainError):
    """The hard-core constraints leave no admissible symbol."""


@dataclass(frozen=True)
class NeighborContext:
    n_plus: int
    n_minus: int
    n_zero: int

    def __post_init__(self):
        if min(self.n_plus, self.n_minus, self.n_zero) < 0:
            raise DomainError("neighbour counts must be nonnegative")

    @property
    def degree(self) -> int:
        return self.n_plus + self.n_minus + self.n_zero

    @classmethod
    def from_symbols(cls, symbols) -> "NeighborContext":
        s = list(symbols)
        return cls(s.count(1), s.count(-1), s.count(0))

    def with_neighbor(self, s: int) -> "NeighborContext":
        return NeighborContext(self.n_plus + (s == 1), self.n_minus + (s == -1), self.n_zero + (s == 0))


@dataclass(frozen=True)
class DobrushinReport:
    c_value: float
    max_entry: float
    degree: int
    worst_pair: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return self.c_value < 1.0


def _weights(alpha, beta, n_plus, n_minus, hardcore, tilt=None):
    """Unnormalized kernel weights, broadcasting over leading axes; order (-, 0, +)."""
    a = np.asarray(alpha, dtype=float)
    n_plus = np.asarray(n_plus, dtype=float)
    n_minus = np.asarray(n_minus, dtype=float)
    if hardcore:
        w_m = a[..., 0] * (n_plus == 0)
        w_p = a[..., 2] * (n_minus == 0)
    else:
        w_m = a[..., 0] * np.exp(-beta * n_plus)
        w_p = a[..., 2] * np.exp(-beta * n_minus)
    w = np.stack(np.broadcast_arrays(w_m, a[..., 1] + 0 * w_m, w_p), axis=-1)
    if tilt is not None:
        w = w * tilt
    return w


def single_site_kernel(context: NeighborContext, params: ModelParams,
                       hardcore: bool = False) -> SpinMeasure:
    w = _weights(params.alpha.as_array(), params.beta, context.n_plus, context.n_minus, hardcore)
    z = w.sum()
    if z <= 0:
        raise EmptySupportError(f"no admissible symbol in context {context}")
    return SpinMeasure.from_array(w / z, normalize=True)


@lru_cache(maxsize=None)
def _contexts(degree: int):
    """Count triples of the ``degree - 1`` other neighbours."""
    n = degree - 1
    return tuple((p, m, n - p - m) for p in range(n + 1) for m in range(n + 1 - p))


def _tilts(t):
    if t is None:
        return [(None, None)]
    from .two_layer import flip_kernel

    k = flip_kernel(t).matrix
    # column eta of the kernel: weight p_t(omega, eta) for omega in (-, 0, +)
    return [(eta, k[:, eta + 1]) for eta in (-1, 0, 1)]


def _sup_tv(alpha, beta, degree, hardcore, t=None):
    """Vectorized enumeration over an ``(N, 3)`` array of a-priori measures.

    Returns the sup of the total variation, the index of the maximizing
    ``(eta, context, j pair)`` combination and the list of combinations.
    """
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    combos = []
    tvs = []
    for eta, tilt in _tilts(t):
        for (p, m, z) in _contexts(degree):
            for a, b in _J_PAIRS:
                w1 = _weights(alpha, beta, p + (a == 1), m + (a == -1), hardcore, tilt)
                w2 = _weights(alpha, beta, p + (b == 1), m + (b == -1), hardcore, tilt)
                z1, z2 = w1.sum(-1), w2.sum(-1)
                ok = (z1 > 0) & (z2 > 0)
                with np.errstate(invalid="ignore", divide="ignore"):
                    tv = 0.5 * np.abs(w1 / z1[:, None] - w2 / z2[:, None]).sum(-1)
                tvs.append(np.where(ok, tv, 0.0))
                combos.append({"eta_i": eta, "context": NeighborContext(p, m, z), "j_values": (a, b)})
    tvs = np.stack(tvs, axis=-1)
    arg = np.argmax(tvs, axis=-1)
    return tvs[np.arange(len(alpha)), arg], arg, combos


def _report(alpha, beta, degree, hardcore, t=None) -> DobrushinReport:
    if degree < 1:
        raise DomainError("degree must be at least 1")
    cmax, arg, combos = _sup_tv(alpha.as_array(), beta, degree, hardcore, t)
    C = float(cmax[0])
    w = dict(combos[int(arg[0])])
    w["tv"] = C
    return DobrushinReport(degree * C, C, degree, w)


def dobrushin_coefficient(params: ModelParams, degree: int, hardcore: bool = False) -> DobrushinReport:
    """``c = degree * C`` for the static single-site kernel."""
    return _report(params.alpha, params.beta, degree, hardcore)


def dobrushin_coefficient_bruteforce(params: ModelParams, degree: int, hardcore: bool = False) -> float:
    """Same quantity by enumerating labelled neighbour tuples; for small degrees only."""
    best = 0.0
    for rest in itertools.product((-1, 0, 1), repeat=degree - 1):
        for a, b in itertools.product((-1, 0, 1), repeat=2):
            try:
                k1 = single_site_kernel(NeighborContext.from_symbols(rest + (a,)), params, hardcore)
                k2 = single_site_kernel(NeighborContext.from_symbols(rest + (b,)), params, hardcore)
            except EmptySupportError:
                continue
            best = max(best, k1.tv(k2))
    return degree * best


def first_layer_dobrushin(params: ModelParams, t: float, degree: int,
                          hardcore: bool = False) -> DobrushinReport:
    """Dobrushin coefficient of the time-0 model constrained on a time-``t`` outcome.

    The kernel at site ``i`` is tilted by ``p_t(omega_i, eta_i)``; the sup runs
    over ``eta_i`` as well. Conditionings with empty support are skipped.
    """
    if t <= 0:
        raise DomainError("first-layer analysis needs t > 0")
    return _report(params.alpha, params.beta, degree, hardcore, t)


def first_layer_threshold(params: ModelParams, degree: int, hardcore: bool = False,
                          t_max: float = 10.0, tol: float = 1e-6) -> float:
    """Largest ``t`` such that the first-layer condition holds on ``(0, t]``, by bisection.

    Returns ``inf`` when it holds up to ``t_max``; assumes a single crossing.
    """
    def c(t):
        return first_layer_dobrushin(params, t, degree, hardcore).c_value

    if c(t_max) < 1.0:
        return math.inf
    lo, hi = 0.0, t_max
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid > 0 and c(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# regions in the (alpha(+1), alpha(-1)) projection


@dataclass
class DobrushinRegion:
    beta: float
    degree: int
    alpha_plus: np.ndarray
    alpha_minus: np.ndarray
    c_values: np.ndarray
    boundary: np.ndarray  # ordered (n, 2) array of (alpha_plus, alpha_minus)
    boundary_keys: list
    hardcore: bool = False

    @property
    def satisfied(self) -> np.ndarray:
        return self.c_values < 1.0

    def contains(self, alpha_plus: float, alpha_minus: float) -> bool:
        a = np.array([[alpha_minus, 1.0 - alpha_plus - alpha_minus, alpha_plus]])
        return bool(self.degree * _sup_tv(a, self.beta, self.degree, self.hardcore)[0][0] < 1.0)

    def conic_fits(self, min_points: int = 6) -> dict:
        """Least-squares conic per boundary arc sharing a witness; maps key to (coeffs, residual).

        The residual is the largest first-order geometric distance ``|Q|/|grad Q|``.
        """
        out = {}
        keys = np.array([hash(k) for k in self.boundary_keys])
        for k in dict.fromkeys(self.boundary_keys):
            pts = self.boundary[keys == hash(k)]
            if len(pts) < min_points:
                continue
            x, y = pts[:, 0], pts[:, 1]
            A = np.stack([x * x, x * y, y * y, x, y, np.ones_like(x)], axis=1)
            scale = np.linalg.norm(A, axis=0)
            _, _, vt = np.linalg.svd(A / scale, full_matrices=False)
            coef = vt[-1] / scale
            q = A @ coef
            gx = 2 * coef[0] * x + coef[1] * y + coef[3]
            gy = coef[1] * x + 2 * coef[2] * y + coef[4]
            res = float(np.max(np.abs(q) / np.hypot(gx, gy)))
            out[k] = (coef, res)
        return out


def _simplex_alpha(ap, am):
    return np.stack([am, 1.0 - ap - am, ap], axis=-1)


def _witness_key(ap, am, beta, degree, hardcore):
    a = _simplex_alpha(np.array([ap]), np.array([am]))
    _, arg, combos = _sup_tv(a, beta, degree, hardcore)
    w = combos[int(arg[0])]
    ctx = w["context"]
    # the total variation is a fixed rational function only while the sign pattern is fixed
    ka, kb = (single_site_kernel(ctx.with_neighbor(s), ModelParams(beta, SpinMeasure.from_array(
        a[0], normalize=True)), hardcore).as_array() for s in w["j_values"])
    signs = tuple(int(v) for v in np.sign(np.round(ka - kb, 14)))
    return (ctx.n_plus, ctx.n_minus, ctx.n_zero) + w["j_values"] + signs


def _chain(points):
    """Order points into a polyline by greedy nearest-neighbour chaining."""
    if len(points) == 0:
        return np.arange(0)
    pts = np.asarray(points)
    remaining = set(range(len(pts)))
    start = int(np.lexsort((pts[:, 1], pts[:, 0]))[0])
    order = [start]
    remaining.discard(start)
    while remaining:
        idx = np.fromiter(remaining, dtype=int)
        d = np.hypot(*(pts[idx] - pts[order[-1]]).T)
        nxt = int(idx[np.argmin(d)])
        order.append(nxt)
        remaining.discard(nxt)
    return np.array(order)


def dobrushin_region(beta: float, degree: int, grid: int = 200, hardcore: bool = False) -> DobrushinRegion:
    """Flag every grid point of the projected simplex and locate the boundary ``c = 1``."""
    i, j = np.meshgrid(np.arange(grid + 1), np.arange(grid + 1), indexing="ij")
    keep = i + j <= grid
    ap, am = i[keep] / grid, j[keep] / grid
    cvals = degree * _sup_tv(_simplex_alpha(ap, am), beta, degree, hardcore)[0]
    lookup = {(a, b): k for k, (a, b) in enumerate(zip(i[keep], j[keep]))}

    def f(u, v):
        a = _simplex_alpha(np.array([u]), np.array([v]))
        return degree * _sup_tv(a, beta, degree, hardcore)[0][0] - 1.0

    pts, keys = [], []
    for (a, b), k in lookup.items():
        for da, db in ((1, 0), (0, 1)):
            k2 = lookup.get((a + da, b + db))
            if k2 is None or (cvals[k] < 1.0) == (cvals[k2] < 1.0):
                continue
            p0 = np.array([ap[k], am[k]])
            p1 = np.array([ap[k2], am[k2]])
            s = brentq(lambda s_: f(*(p0 + s_ * (p1 - p0))), 0.0, 1.0, xtol=1e-15, rtol=1e-14)
            pt = p0 + s * (p1 - p0)
            pts.append(pt)
            keys.append(_witness_key(pt[0], pt[1], beta, degree, hardcore))
    order = _chain(pts)
    boundary = np.array(pts)[order] if pts else np.zeros((0, 2))
    keys = [keys[o] for o in order]
    return DobrushinRegion(float(beta), degree, ap, am, cvals, boundary, keys, hardcore)
