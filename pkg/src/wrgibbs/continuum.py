"""Continuum two-colour model in a square box with a hard-core interspecies constraint.

A cloud is valid when no plus and minus point are closer than ``2a``. The
sampler is a birth/death/flip Metropolis chain whose reference measure is the
two-colour Poisson process with intensities ``lambda_plus`` and ``lambda_minus``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy import integrate
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .measures import DomainError
from .rng import generator

__all__ = [
    "InvalidCloudError",
    "MarkedCloud",
    "ClusterDecomposition",
    "MoveMix",
    "sample_poisson",
    "wr_mcmc",
    "wr_mcmc_trace",
    "percolation",
    "sign_rigidity_check",
    "reentrance_time",
    "evolve_cloud",
    "crossing_probability",
    "small_box_occupation",
]


class InvalidCloudError(DomainError):
    """A plus and a minus point sit closer than ``2a``."""


@dataclass
class MarkedCloud:
    points: np.ndarray  # (n, 2) positions in [0, S]^2
    marks: np.ndarray  # (n,) entries in {-1, +1}
    radius: float
    box_side: float

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        self.marks = np.asarray(self.marks, dtype=np.int8).ravel()
        if len(self.points) != len(self.marks):
            raise DomainError("one mark per point")
        if self.radius <= 0 or self.box_side <= 0:
            raise DomainError("radius and box side must be positive")
        if np.any((self.points < 0) | (self.points > self.box_side)):
            raise DomainError("points must lie in the box")
        if not np.isin(self.marks, (-1, 1)).all():
            raise DomainError("marks must be +1 or -1")

    def __len__(self):
        return len(self.marks)

    def overlapping_pairs(self) -> np.ndarray:
        """Index pairs at distance strictly below ``2a``."""
        if len(self) < 2:
            return np.zeros((0, 2), dtype=int)
        tree = cKDTree(self.points)
        pairs = tree.query_pairs(2.0 * self.radius, output_type="ndarray")
        if len(pairs) == 0:
            return pairs.reshape(0, 2)
        d = np.linalg.norm(self.points[pairs[:, 0]] - self.points[pairs[:, 1]], axis=1)
        return pairs[d < 2.0 * self.radius]

    @property
    def is_valid(self) -> bool:
        p = self.overlapping_pairs()
        return bool(np.all(self.marks[p[:, 0]] == self.marks[p[:, 1]]))

    @property
    def counts(self):
        return int((self.marks == 1).sum()), int((self.marks == -1).sum())


@dataclass(frozen=True)
class ClusterDecomposition:
    labels: np.ndarray
    sizes: np.ndarray
    spanning: bool
    spanning_clusters: tuple = ()

    @property
    def n_clusters(self) -> int:
        return len(self.sizes)


@dataclass(frozen=True)
class MoveMix:
    birth: float = 0.4
    death: float = 0.4
    flip: float = 0.2

    def __post_init__(self):
        if min(self.birth, self.death, self.flip) < 0 or abs(self.birth + self.death + self.flip - 1) > 1e-12:
            raise DomainError("move probabilities must be nonnegative and sum to 1")
        if self.birth != self.death:
            raise DomainError("birth and death probabilities must match")


def sample_poisson(lambda_plus: float, lambda_minus: float, box_side: float, seed=0,
                   radius: float = 0.5) -> MarkedCloud:
    if lambda_plus < 0 or lambda_minus < 0:
        raise DomainError("intensities must be nonnegative")
    rng = generator(seed)
    area = box_side * box_side
    n_p, n_m = rng.poisson(lambda_plus * area), rng.poisson(lambda_minus * area)
    pts = rng.uniform(0.0, box_side, size=(n_p + n_m, 2))
    marks = np.concatenate([np.ones(n_p), -np.ones(n_m)])
    return MarkedCloud(pts, marks, radius, box_side)


# ---------------------------------------------------------------------------
# sampler


@numba.njit(cache=True)
def _conflicts(xs, ys, ms, n, x, y, m, r2, skip):
    for k in range(n):
        if k != skip and ms[k] != m:
            dx = xs[k] - x
            dy = ys[k] - y
            if dx * dx + dy * dy < r2:
                return True
    return False


@numba.njit(cache=True)
def _mcmc(xs, ys, ms, n, lam_p, lam_m, a, side, p_birth, p_death, u, counts):
    """Run ``len(u)`` Metropolis steps in place; returns the final point count.

    ``u[s]`` holds six uniforms: move type, x, y, colour, index, accept.
    ``counts[s]`` records the number of points after step ``s``.
    """
    lam = lam_p + lam_m
    area = side * side
    r2 = 4.0 * a * a
    for s in range(u.shape[0]):
        mv = u[s, 0]
        if mv < p_birth:
            if n >= xs.shape[0]:
                return -1
            x = u[s, 1] * side
            y = u[s, 2] * side
            m = 1 if u[s, 3] * lam < lam_p else -1
            ratio = p_death * lam * area / (p_birth * (n + 1))
            if u[s, 5] < ratio and not _conflicts(xs, ys, ms, n, x, y, m, r2, -1):
                xs[n] = x
                ys[n] = y
                ms[n] = m
                n += 1
        elif mv < p_birth + p_death:
            if n > 0:
                k = min(int(u[s, 4] * n), n - 1)
                ratio = p_birth * n / (p_death * lam * area)
                if u[s, 5] < ratio:
                    n -= 1
                    xs[k] = xs[n]
                    ys[k] = ys[n]
                    ms[k] = ms[n]
        elif n > 0:
            k = min(int(u[s, 4] * n), n - 1)
            m = -ms[k]
            num = lam_p if m == 1 else lam_m
            den = lam_p if ms[k] == 1 else lam_m
            if u[s, 5] * den < num and not _conflicts(xs, ys, ms, n, xs[k], ys[k], m, r2, k):
                ms[k] = m
        counts[s] = n
    return n


def _check_args(lambda_plus, lambda_minus, a, box_side):
    if a <= 0 or box_side <= 0:
        raise DomainError("need a > 0 and a positive box side")
    if lambda_plus < 0 or lambda_minus < 0 or lambda_plus + lambda_minus <= 0:
        raise DomainError("intensities must be nonnegative and not both zero")


class _Sampler:
    def __init__(self, lambda_plus, lambda_minus, a, box_side, seed, mix: MoveMix | None = None):
        _check_args(lambda_plus, lambda_minus, a, box_side)
        self.lp, self.lm, self.a, self.S = float(lambda_plus), float(lambda_minus), float(a), float(box_side)
        self.mix = mix or MoveMix()
        self.rng = generator(seed)
        cap = int(max(64, 4 * (self.lp + self.lm) * self.S ** 2 + 64))
        self.xs, self.ys = np.zeros(cap), np.zeros(cap)
        self.ms = np.zeros(cap, dtype=np.int8)
        self.n = 0

    def _grow(self):
        cap = 2 * len(self.xs)
        for name in ("xs", "ys", "ms"):
            old = getattr(self, name)
            new = np.zeros(cap, dtype=old.dtype)
            new[:len(old)] = old
            setattr(self, name, new)

    def run(self, steps: int, chunk: int = 65536) -> np.ndarray:
        counts = np.empty(steps, dtype=np.int64)
        done = 0
        while done < steps:
            m = min(chunk, steps - done)
            u = self.rng.random((m, 6))
            while True:
                xs, ys, ms = self.xs.copy(), self.ys.copy(), self.ms.copy()
                part = np.empty(m, dtype=np.int64)
                n = _mcmc(xs, ys, ms, self.n, self.lp, self.lm, self.a, self.S,
                          self.mix.birth, self.mix.death, u, part)
                if n >= 0:
                    break
                self._grow()
            self.xs, self.ys, self.ms, self.n = xs, ys, ms, n
            counts[done:done + m] = part
            done += m
        return counts

    def cloud(self) -> MarkedCloud:
        n = self.n
        return MarkedCloud(np.stack([self.xs[:n], self.ys[:n]], axis=1), self.ms[:n].copy(),
                           self.a, self.S)


def wr_mcmc(lambda_plus: float, lambda_minus: float, a: float, box_side: float, steps: int,
            seed=0, mix: MoveMix | None = None) -> MarkedCloud:
    """State after ``steps`` Metropolis steps started from the empty box."""
    s = _Sampler(lambda_plus, lambda_minus, a, box_side, seed, mix)
    s.run(steps)
    return s.cloud()


def wr_mcmc_trace(lambda_plus: float, lambda_minus: float, a: float, box_side: float, burn_in: int,
                  n_states: int, thin: int, seed=0, mix: MoveMix | None = None) -> list:
    """``n_states`` clouds from one chain, ``thin`` steps apart after ``burn_in``."""
    s = _Sampler(lambda_plus, lambda_minus, a, box_side, seed, mix)
    s.run(burn_in)
    out = []
    for _ in range(n_states):
        s.run(thin)
        out.append(s.cloud())
    return out


# ---------------------------------------------------------------------------
# clusters


def percolation(cloud: MarkedCloud) -> ClusterDecomposition:
    """Connected components of the overlap graph and the left-right crossing flag."""
    n = len(cloud)
    if n == 0:
        return ClusterDecomposition(np.zeros(0, dtype=int), np.zeros(0, dtype=int), False)
    pairs = cloud.overlapping_pairs()
    adj = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    k, labels = connected_components(adj, directed=False)
    # relabel by first appearance in order of position so ids do not depend on input order
    order = np.lexsort((cloud.points[:, 1], cloud.points[:, 0]))
    first = {}
    for i in order:
        first.setdefault(labels[i], len(first))
    labels = np.array([first[l] for l in labels])
    sizes = np.bincount(labels, minlength=k)
    x = cloud.points[:, 0]
    left = set(labels[x - cloud.radius <= 0.0])
    right = set(labels[x + cloud.radius >= cloud.box_side])
    span = tuple(sorted(left & right))
    return ClusterDecomposition(labels, sizes, bool(span), span)


def sign_rigidity_check(cloud: MarkedCloud) -> bool:
    """Every cluster of overlapping discs carries a single sign."""
    if not cloud.is_valid:
        raise InvalidCloudError("cloud violates the interspecies hard-core constraint")
    dec = percolation(cloud)
    if len(cloud) == 0:
        return True
    lo = np.full(dec.n_clusters, 2)
    hi = np.full(dec.n_clusters, -2)
    np.minimum.at(lo, dec.labels, cloud.marks)
    np.maximum.at(hi, dec.labels, cloud.marks)
    return bool(np.all(lo == hi))


def reentrance_time(lambda_plus: float, lambda_minus: float) -> float:
    if lambda_minus < 0:
        raise DomainError("intensities must be nonnegative")
    if lambda_plus < lambda_minus:
        raise DomainError("reentrance time needs lambda_plus > lambda_minus")
    if lambda_plus == lambda_minus:
        if lambda_plus == 0:
            raise DomainError("reentrance time needs lambda_plus > lambda_minus")
        return math.inf
    return 0.5 * math.log((lambda_plus + lambda_minus) / (lambda_plus - lambda_minus))


def evolve_cloud(cloud: MarkedCloud, t: float, seed=0) -> MarkedCloud:
    """Independent mark flips; the result is generally not a valid cloud."""
    if t < 0:
        raise DomainError("time must be nonnegative")
    f = -0.5 * math.expm1(-2.0 * t)
    flips = generator(seed).random(len(cloud)) < f
    return MarkedCloud(cloud.points.copy(), np.where(flips, -cloud.marks, cloud.marks),
                       cloud.radius, cloud.box_side)


def crossing_probability(lam: float, a: float, box_side: float, n_seeds: int, steps: int,
                         seed=0) -> tuple:
    """Fraction of independent symmetric-intensity chains whose final cloud crosses the box.

    Returns ``(estimate, stderr)``; chain ``i`` uses the child seed ``i``.
    """
    from .rng import child_seeds

    hits = np.array([percolation(wr_mcmc(lam, lam, a, box_side, steps, s)).spanning
                     for s in child_seeds(seed, n_seeds)], dtype=float)
    p = hits.mean()
    return float(p), float(math.sqrt(p * (1 - p) / n_seeds))


def small_box_occupation(lambda_plus: float, lambda_minus: float, a: float, box_side: float) -> np.ndarray:
    """Law of the point count truncated to at most two points, by numeric integration.

    Entry ``n`` is the weight of ``n`` points normalized over ``n <= 2``.
    """
    r = 2.0 * a
    S = box_side

    # area of {(x, y) in box^2 : |x - y| < r} through the displacement density
    def inner(v, u):
        return (S - abs(u)) * (S - abs(v))

    near, _ = integrate.dblquad(inner, -min(r, S), min(r, S),
                                lambda u: -math.sqrt(max(r * r - u * u, 0.0)) if abs(u) < r else 0.0,
                                lambda u: math.sqrt(max(r * r - u * u, 0.0)) if abs(u) < r else 0.0,
                                epsabs=1e-12, epsrel=1e-12)
    area = S * S
    w0 = 1.0
    w1 = (lambda_plus + lambda_minus) * area
    w2 = 0.5 * ((lambda_plus ** 2 + lambda_minus ** 2) * area * area
                + 2.0 * lambda_plus * lambda_minus * (area * area - near))
    w = np.array([w0, w1, w2])
    return w / w.sum()
