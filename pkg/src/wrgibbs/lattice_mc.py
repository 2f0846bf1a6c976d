"""Heat-bath sampling of the lattice models, spin-flip evolution and conditional estimates.

Sites of a box are stored as a flat vector followed by ghost sites carrying the
boundary values; a neighbour table indexes into that extended vector. The
sweep kernel is compiled with numba and consumes uniforms drawn beforehand
from the chain's own numpy generator, so results depend only on the seed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numba
import numpy as np

from .dobrushin import EmptySupportError
from .measures import DomainError, ModelParams, SpinMeasure
from .rng import child_generators, generator
from .two_layer import flip_kernel

__all__ = [
    "InsufficientStatisticsError",
    "Box",
    "LatticeConfig",
    "CondEstimate",
    "gibbs_sample",
    "evolve",
    "conditional_estimate",
    "checkerboard_pattern",
    "exact_small_volume",
    "exact_conditional",
    "rejection_estimate",
    "heat_bath_matrix",
    "enumerate_box",
]

BOUNDARIES = ("all_plus", "all_minus", "all_hole", "free")
EXACT_MAX_SITES = 12
_CHUNK = 256


class InsufficientStatisticsError(RuntimeError):
    """No sample satisfied the conditioning."""


@dataclass(frozen=True)
class Box:
    """A ``d``-dimensional box of side ``L`` with a fixed or free boundary.

    ``boundary`` is one of :data:`BOUNDARIES` or an explicit ring: an array of
    shape ``(L + 2,) * d`` whose outer layer holds the boundary symbols.
    """

    L: int
    d: int = 2
    boundary: object = "all_hole"

    def __post_init__(self):
        if self.L < 1 or self.d < 1:
            raise DomainError("box needs L >= 1 and d >= 1")
        if isinstance(self.boundary, str):
            if self.boundary not in BOUNDARIES:
                raise DomainError(f"unknown boundary {self.boundary!r}")
        else:
            ring = np.asarray(self.boundary)
            if ring.shape != (self.L + 2,) * self.d or not np.isin(ring, (-1, 0, 1)).all():
                raise DomainError("explicit ring must be a padded array over {-1, 0, 1}")

    @property
    def shape(self):
        return (self.L,) * self.d

    @property
    def n_sites(self) -> int:
        return self.L ** self.d

    @property
    def origin(self):
        return (self.L // 2,) * self.d

    def padded_boundary(self) -> np.ndarray:
        if isinstance(self.boundary, str):
            # free boundary: absent neighbours contribute no counts, like holes
            val = {"all_plus": 1, "all_minus": -1}.get(self.boundary, 0)
            return np.full((self.L + 2,) * self.d, val, dtype=np.int8)
        return np.asarray(self.boundary, dtype=np.int8)

    def layout(self):
        """Neighbour table into the extended vector and the ghost values."""
        pad = self.padded_boundary()
        pshape = pad.shape
        inner = np.zeros(pshape, dtype=bool)
        inner[(slice(1, -1),) * self.d] = True
        ext_index = -np.ones(pshape, dtype=np.int64)
        ext_index[inner] = np.arange(self.n_sites)
        ghosts = np.argwhere(~inner)
        ext_index[tuple(ghosts.T)] = self.n_sites + np.arange(len(ghosts))
        ghost_vals = pad[tuple(ghosts.T)].astype(np.int8)
        nbr = np.empty((self.n_sites, 2 * self.d), dtype=np.int64)
        coords = np.argwhere(inner)
        for k in range(self.d):
            for s, sign in enumerate((-1, 1)):
                c = coords.copy()
                c[:, k] += sign
                nbr[:, 2 * k + s] = ext_index[tuple(c.T)]
        return nbr, ghost_vals

    def parity_order(self) -> np.ndarray:
        par = np.indices(self.shape).sum(axis=0).ravel() % 2
        return np.concatenate([np.nonzero(par == 0)[0], np.nonzero(par == 1)[0]])

    def flat(self, idx) -> int:
        return int(np.ravel_multi_index(idx, self.shape))


@dataclass
class LatticeConfig:
    box: Box
    spins: np.ndarray
    hardcore: bool = False

    def __post_init__(self):
        self.spins = np.asarray(self.spins, dtype=np.int8).reshape(self.box.shape)
        if not np.isin(self.spins, (-1, 0, 1)).all():
            raise DomainError("spins must lie in {-1, 0, 1}")

    @property
    def is_valid(self) -> bool:
        """No adjacent +/- pair inside the box or against the boundary ring."""
        if not self.hardcore:
            return True
        return _hardcore_valid(self.spins, self.box)


def _hardcore_valid(spins, box: Box) -> bool:
    nbr, ghosts = box.layout()
    ext = np.concatenate([spins.ravel(), ghosts])
    prod = ext[:box.n_sites, None].astype(int) * ext[nbr]
    return not np.any(prod == -1)


@dataclass(frozen=True)
class CondEstimate:
    probabilities: SpinMeasure
    stderr: np.ndarray
    n_samples: int
    accepted: int | None = None

    @property
    def plus(self) -> float:
        return self.probabilities.p_plus


# ---------------------------------------------------------------------------
# compiled kernel


@numba.njit(cache=True)
def _local_weights(ext, k, nbr, alpha, beta, hardcore, tilt, out):
    n_p = 0
    n_m = 0
    for j in range(nbr.shape[1]):
        v = ext[nbr[k, j]]
        if v == 1:
            n_p += 1
        elif v == -1:
            n_m += 1
    if hardcore:
        out[0] = alpha[0] * tilt[k, 0] if n_p == 0 else 0.0
        out[2] = alpha[2] * tilt[k, 2] if n_m == 0 else 0.0
    else:
        out[0] = alpha[0] * tilt[k, 0] * math.exp(-beta * n_p)
        out[2] = alpha[2] * tilt[k, 2] * math.exp(-beta * n_m)
    out[1] = alpha[1] * tilt[k, 1]
    return out[0] + out[1] + out[2]


@numba.njit(cache=True)
def _sweeps(ext, nbr, order, alpha, beta, hardcore, tilt, uniforms):
    """Systematic-scan heat-bath sweeps; returns -1 on an empty local support."""
    w = np.empty(3)
    for s in range(uniforms.shape[0]):
        for k in order:
            z = _local_weights(ext, k, nbr, alpha, beta, hardcore, tilt, w)
            if z <= 0.0:
                return -1
            u = uniforms[s, k] * z
            if u < w[0]:
                ext[k] = -1
            elif u < w[0] + w[1]:
                ext[k] = 0
            else:
                ext[k] = 1
    return 0


class _Chain:
    def __init__(self, params: ModelParams, box: Box, hardcore: bool, rng, init=None, tilt=None):
        self.box = box
        self.nbr, ghosts = box.layout()
        self.order = box.parity_order()
        self.alpha = params.alpha.as_array()
        self.beta = float(params.beta)
        self.hardcore = bool(hardcore)
        self.tilt = np.ones((box.n_sites, 3)) if tilt is None else np.ascontiguousarray(tilt, dtype=float)
        spins = np.zeros(box.n_sites, dtype=np.int8) if init is None else np.asarray(init, np.int8).ravel()
        self.ext = np.concatenate([spins, ghosts]).astype(np.int8)
        self.rng = rng
        if hardcore and not _hardcore_valid(self.ext[:box.n_sites].reshape(box.shape), box):
            raise DomainError("inadmissible hard-core start")

    @property
    def spins(self) -> np.ndarray:
        return self.ext[:self.box.n_sites].reshape(self.box.shape).copy()

    def run(self, n: int) -> None:
        done = 0
        while done < n:
            m = min(_CHUNK, n - done)
            u = self.rng.random((m, self.box.n_sites))
            if _sweeps(self.ext, self.nbr, self.order, self.alpha, self.beta, self.hardcore,
                       self.tilt, u) < 0:
                raise EmptySupportError("a site lost every admissible symbol")
            done += m


def _as_box(box, d=2, boundary="all_hole") -> Box:
    if isinstance(box, Box):
        return box
    return Box(int(box), d, boundary)


def gibbs_sample(params: ModelParams, box, boundary="all_hole", hardcore: bool = False,
                 sweeps: int = 1000, seed=0, init=None, d: int = 2) -> LatticeConfig:
    """Configuration after ``sweeps`` heat-bath sweeps from ``init`` (all holes by default)."""
    b = _as_box(box, d, boundary)
    ch = _Chain(params, b, hardcore, generator(seed), init)
    ch.run(sweeps)
    return LatticeConfig(b, ch.spins, hardcore)


def evolve(config: LatticeConfig, t: float, seed=0) -> LatticeConfig:
    """Independent spin flips with probability ``(1 - exp(-2t))/2``; holes untouched."""
    f = flip_kernel(t).flip
    rng = generator(seed)
    flips = rng.random(config.spins.shape) < f
    out = np.where(flips & (config.spins != 0), -config.spins, config.spins)
    return LatticeConfig(config.box, out, config.hardcore)


# ---------------------------------------------------------------------------
# conditional probabilities of the time-evolved field


def checkerboard_pattern(box: Box, radius: int, far_sign: int) -> np.ndarray:
    """Time-t conditioning: checkerboard on ``1 <= |i|_inf <= radius``, ``far_sign`` beyond.

    Entry at the origin is 0 and is ignored (the origin is unconditioned).
    """
    if far_sign not in (-1, 1):
        raise DomainError("far ring sign must be +1 or -1")
    idx = np.indices(box.shape) - np.array(box.origin).reshape((-1,) + (1,) * box.d)
    linf = np.abs(idx).max(axis=0)
    if radius < 1 or radius > linf.max():
        raise DomainError("annulus must fit inside the box")
    cb = np.where(np.abs(idx).sum(axis=0) % 2 == 0, 1, -1)
    eta = np.where(linf <= radius, cb, far_sign).astype(np.int8)
    eta[box.origin] = 0
    return eta


def _tilt(eta: np.ndarray, t: float, origin_flat: int) -> np.ndarray:
    k = flip_kernel(t).matrix
    tilt = k[:, eta.ravel() + 1].T.copy()
    tilt[origin_flat] = 1.0
    return tilt


def conditional_estimate(params: ModelParams, t: float, radius: int = 2, far_sign: int = 1,
                         box=16, n_samples: int = 2000, seed=0, burn_in: int = 1000, thin: int = 10,
                         chains: int = 8, hardcore: bool = False, eta=None, d: int = 2,
                         boundary="free", start: str = "far") -> CondEstimate:
    """Estimate ``mu_t(eta_origin | eta elsewhere)`` for the checkerboard conditioning.

    The first-layer law of ``omega`` given ``eta`` on the other sites is
    ``mu(omega) prod_i p_t(omega_i, eta_i)``; it is sampled by heat-bath and the
    estimate averages ``E[p_t(omega_0, s) | omega off 0]``. ``stderr`` is the
    spread of the chain means. ``n_samples`` is the total over all chains.
    Chains start with every spin on the far sign (``start="far"``), on the
    opposite sign (``"opposite"``) or uniformly random (``"random"``).
    """
    b = _as_box(box, d, boundary)
    if eta is None:
        eta = checkerboard_pattern(b, radius, far_sign)
    eta = np.asarray(eta, dtype=np.int8).reshape(b.shape)
    org = b.flat(b.origin)
    tilt = _tilt(eta, t, org)
    kern = flip_kernel(t).matrix
    if start not in ("far", "opposite", "random"):
        raise DomainError(f"unknown start {start!r}")
    per_chain = max(1, -(-n_samples // chains))
    means = np.empty((chains, 3))
    for c, rng in enumerate(child_generators(seed, chains)):
        # holes in eta force holes; spins start according to ``start``
        sign = {"far": far_sign, "opposite": -far_sign}.get(start, 0)
        spins = np.full(b.n_sites, sign, dtype=np.int8) if sign else \
            rng.choice(np.array([-1, 1], dtype=np.int8), b.n_sites)
        init = np.where(eta.ravel() == 0, 0, spins).astype(np.int8)
        init[org] = 0
        try:
            ch = _Chain(params, b, hardcore, rng, init, tilt)
        except DomainError as exc:
            raise InsufficientStatisticsError(f"conditioning admits no configuration: {exc}") from exc
        try:
            ch.run(burn_in)
            obs = np.empty((per_chain, 3))
            for s_idx in range(per_chain):
                ch.run(thin)
                obs[s_idx] = _origin_law(ch, org) @ kern
        except EmptySupportError as exc:
            raise InsufficientStatisticsError(str(exc)) from exc
        means[c] = obs.mean(axis=0)
    p = means.mean(axis=0)
    se = means.std(axis=0, ddof=1) / math.sqrt(chains) if chains > 1 else np.full(3, np.nan)
    return CondEstimate(SpinMeasure.from_array(np.clip(p, 0, None), normalize=True), se,
                        per_chain * chains)


def _origin_law(ch: _Chain, org: int) -> np.ndarray:
    w = np.empty(3)
    z = _local_weights(ch.ext, org, ch.nbr, ch.alpha, ch.beta, ch.hardcore, ch.tilt, w)
    return w / z


def rejection_estimate(params: ModelParams, t: float, eta: np.ndarray, box: Box, n_samples: int,
                       seed=0, burn_in: int = 200, thin: int = 5, hardcore: bool = False) -> CondEstimate:
    """Literal estimate: sample ``mu``, evolve, keep samples matching ``eta`` off the origin."""
    g_chain, g_flip = child_generators(seed, 2)
    ch = _Chain(params, box, hardcore, g_chain)
    ch.run(burn_in)
    org = box.flat(box.origin)
    mask = np.ones(box.n_sites, dtype=bool)
    mask[org] = False
    target = np.asarray(eta, dtype=np.int8).ravel()
    f = flip_kernel(t).flip
    hits = []
    for _ in range(n_samples):
        ch.run(thin)
        om = ch.ext[:box.n_sites]
        fl = g_flip.random(box.n_sites) < f
        et = np.where(fl & (om != 0), -om, om)
        if np.array_equal(et[mask], target[mask]):
            hits.append(et[org])
    if not hits:
        raise InsufficientStatisticsError("no sample matched the conditioning")
    h = np.array(hits)
    p = np.array([(h == s).mean() for s in (-1, 0, 1)])
    se = np.sqrt(p * (1 - p) / len(h))
    return CondEstimate(SpinMeasure.from_array(p, normalize=True), se, n_samples, len(h))


# ---------------------------------------------------------------------------
# exact enumeration oracles


def enumerate_box(params: ModelParams, box: Box, hardcore: bool = False):
    """All configurations of a small box with their unnormalized Gibbs weights."""
    if box.n_sites > EXACT_MAX_SITES:
        raise DomainError(f"exact enumeration limited to {EXACT_MAX_SITES} sites")
    nbr, ghosts = box.layout()
    states = np.array(list(itertools.product((-1, 0, 1), repeat=box.n_sites)), dtype=np.int64)
    ext = np.concatenate([states, np.broadcast_to(ghosts, (len(states), len(ghosts)))], axis=1)
    a = params.alpha.as_array()
    logw = np.log(np.where(a[states + 1] > 0, a[states + 1], 1e-300)).sum(axis=1)
    logw[(a[states + 1] <= 0).any(axis=1)] = -np.inf
    prod = states[:, :, None] * ext[:, nbr]  # (n_states, sites, 2d)
    # internal bonds appear twice, boundary bonds once
    internal = nbr < box.n_sites
    bad_int = ((prod == -1) & internal).sum(axis=(1, 2)) / 2
    bad_bd = ((prod == -1) & ~internal).sum(axis=(1, 2))
    n_bad = bad_int + bad_bd
    if hardcore:
        logw = np.where(n_bad > 0, -np.inf, logw)
    else:
        logw = logw - params.beta * n_bad
    return states, np.exp(logw - np.max(logw))


def exact_small_volume(params: ModelParams, box: Box, hardcore: bool = False) -> SpinMeasure:
    """Exact origin marginal of the finite-volume Gibbs measure."""
    states, w = enumerate_box(params, box, hardcore)
    if w.sum() <= 0:
        raise EmptySupportError("boundary admits no configuration")
    org = box.flat(box.origin)
    return SpinMeasure.from_array([w[states[:, org] == s].sum() for s in (-1, 0, 1)], normalize=True)


def exact_conditional(params: ModelParams, t: float, eta: np.ndarray, box: Box,
                      hardcore: bool = False) -> SpinMeasure:
    """Exact ``mu_t(eta_origin | eta elsewhere)`` on a small box by enumerating ``omega``."""
    states, w = enumerate_box(params, box, hardcore)
    k = flip_kernel(t).matrix
    org = box.flat(box.origin)
    e = np.asarray(eta, dtype=np.int64).ravel()
    mask = np.ones(box.n_sites, dtype=bool)
    mask[org] = False
    like = np.prod(k[states[:, mask] + 1, e[mask] + 1], axis=1)
    ww = w * like
    probs = [(ww * k[states[:, org] + 1, s + 1]).sum() for s in (-1, 0, 1)]
    return SpinMeasure.from_array(probs, normalize=True)


def heat_bath_matrix(params: ModelParams, box: Box, site: int, hardcore: bool = False):
    """Transition matrix of one heat-bath update at ``site`` over all box configurations."""
    states, _ = enumerate_box(params, box, hardcore)
    nbr, ghosts = box.layout()
    index = {tuple(s): i for i, s in enumerate(states)}
    P = np.zeros((len(states), len(states)))
    a = params.alpha.as_array()
    ones = np.ones((box.n_sites, 3))
    w = np.empty(3)
    for i, s in enumerate(states):
        ext = np.concatenate([s, ghosts]).astype(np.int8)
        z = _local_weights(ext, site, nbr, a, float(params.beta), hardcore, ones, w)
        if z <= 0:
            continue
        for v in (-1, 0, 1):
            s2 = s.copy()
            s2[site] = v
            P[i, index[tuple(s2)]] += w[v + 1] / z
    return states, P
