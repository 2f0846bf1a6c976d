"""Two-layer large-deviation analysis of the spin-flip evolved mean-field models.

The joint law of (time-0, time-t) single-site pairs has rate

    J(q) = beta q0(+) q0(-) + H(q | alpha x p_t) + p(beta, alpha)

where ``q0`` is the first marginal and the pressure ``p`` makes ``min J = 0``.
Fixing the second marginal gives the first-layer problem; a time-t empirical
measure is *bad* when that problem has several global minimizers.

Two independent routes feed the same line scanner:

* the Widom-Rowlinson route minimizes ``J`` over the two free entries of the
  3x3 coupling for a fixed time-t measure;
* the Curie-Weiss Ising route works on the two-point alphabet, where the
  optimal coupling for fixed marginals is available in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import xlogy

from . import mf_equilibrium as mfe
from .measures import (
    DomainError,
    ModelParams,
    OccCoords,
    SpinMeasure,
    SupportError,
    to_occ_coords,
)

EPS_GAP = 1e-8
DELTA_SEP = 1e-3
SIMPLEX_STEP = 400

__all__ = [
    "FlipKernel",
    "JointMeasure",
    "BadPoint",
    "BadSet",
    "flip_kernel",
    "joint_rate",
    "constrained_min",
    "ising_bad_set",
    "wiro_bad_line",
    "wiro_bad_set",
    "pullback_bad_line",
    "pullback_bad_set",
    "typical_evolution",
    "atypicality_check",
    "mapping_check",
    "MappingReport",
]


@dataclass(frozen=True)
class FlipKernel:
    t: float
    matrix: np.ndarray

    @property
    def flip(self) -> float:
        return float(self.matrix[2, 0])

    @property
    def stay(self) -> float:
        return float(self.matrix[2, 2])

    def apply(self, nu: SpinMeasure) -> SpinMeasure:
        return SpinMeasure.from_array(nu.as_array() @ self.matrix, normalize=True)


def flip_kernel(t: float) -> FlipKernel:
    if t < 0:
        raise DomainError("time must be nonnegative")
    if math.isinf(t):
        f = 0.5
    else:
        f = -0.5 * math.expm1(-2.0 * t)
    s = 1.0 - f
    mat = np.array([[s, 0.0, f], [0.0, 1.0, 0.0], [f, 0.0, s]])
    return FlipKernel(float(t), mat)


@dataclass(frozen=True)
class JointMeasure:
    """Joint law of (time-0, time-t) symbols, rows indexed by the time-0 symbol."""

    q: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        if q.shape != (3, 3) or np.any(q < -1e-15) or abs(q.sum() - 1.0) > 1e-12:
            raise DomainError("joint measure must be a nonnegative 3x3 array summing to 1")
        object.__setattr__(self, "q", np.clip(q, 0.0, None))

    @property
    def first(self) -> SpinMeasure:
        return SpinMeasure.from_array(self.q.sum(axis=1), normalize=True)

    @property
    def second(self) -> SpinMeasure:
        return SpinMeasure.from_array(self.q.sum(axis=0), normalize=True)


def joint_rate(q: JointMeasure, params: ModelParams, t: float) -> float:
    ref = params.alpha.as_array()[:, None] * flip_kernel(t).matrix
    qq = q.q
    if np.any((qq > 0) & (ref <= 0)):
        raise SupportError("coupling charges a transition the reference forbids")
    first = qq.sum(axis=1)
    rel = float(np.sum(xlogy(qq, qq) - xlogy(qq, np.where(ref > 0, ref, 1.0))))
    return params.beta * first[2] * first[0] + rel + mfe.pressure(params)


# ---------------------------------------------------------------------------
# backends: each scans a line of time-t measures parametrized by magnetization b


class _WiroLine:
    """First-layer problem on the row of time-t measures with occupation ``x``.

    State per point: ``(f1, f2)`` with ``q[+,+] = nu_t(+) f1`` and
    ``q[-,-] = nu_t(-) f2``; the remaining spin entries follow from the
    second-marginal constraint and ``q[0,0] = nu_t(0)``.
    """

    seeds_1d = np.array([0.06, 0.27, 0.5, 0.73, 0.94])

    def __init__(self, params: ModelParams, t: float, x: float):
        self.beta = float(params.beta)
        a = params.alpha.as_array()
        k = flip_kernel(t)
        s, f = k.stay, k.flip
        self.x = x
        self.lw_pp, self.lw_mp = math.log(a[2] * s), math.log(a[0] * f)
        self.lw_mm, self.lw_pm = math.log(a[0] * s), math.log(a[2] * f)
        hole = 1.0 - x
        self.const = (xlogy(hole, hole) - xlogy(hole, a[1]) if hole > 0 else 0.0)
        self.const += mfe.pressure(params)

    def _split(self, b):
        npl = 0.5 * self.x * (1.0 + b)
        nmi = 0.5 * self.x * (1.0 - b)
        return np.where(np.abs(npl) < 1e-15, 0.0, npl), np.where(np.abs(nmi) < 1e-15, 0.0, nmi)

    def _entries(self, b, f1, f2):
        npl, nmi = self._split(b)
        return npl, nmi, npl * f1, npl * (1.0 - f1), nmi * f2, nmi * (1.0 - f2)

    def value(self, b, f1, f2):
        npl, nmi, qpp, qmp, qmm, qpm = self._entries(b, f1, f2)
        u = qpp + qpm
        v = qmm + qmp
        ent = (xlogy(qpp, qpp) - qpp * self.lw_pp + xlogy(qmp, qmp) - qmp * self.lw_mp
               + xlogy(qmm, qmm) - qmm * self.lw_mm + xlogy(qpm, qpm) - qpm * self.lw_pm)
        return self.beta * u * v + ent + self.const

    def magnetization(self, b, f1, f2):
        npl, nmi, qpp, qmp, qmm, qpm = self._entries(b, f1, f2)
        return ((qpp + qpm) - (qmm + qmp)) / self.x

    def _step(self, b, npl, nmi, f1, f2, val):
        """One safeguarded Newton step; returns the new iterate and whether it was accepted."""
        beta = self.beta
        act1, act2 = npl > 0, nmi > 0
        qpp, qmp = npl * f1, npl * (1.0 - f1)
        qmm, qpm = nmi * f2, nmi * (1.0 - f2)
        u, v = qpp + qpm, qmm + qmp
        with np.errstate(divide="ignore", invalid="ignore"):
            g1 = np.where(act1, npl * (beta * (v - u) + np.log(qpp / qmp) - self.lw_pp + self.lw_mp), 0.0)
            g2 = np.where(act2, nmi * (beta * (u - v) + np.log(qmm / qpm) - self.lw_mm + self.lw_pm), 0.0)
            c1 = np.where(act1, npl * npl * (1.0 / qpp + 1.0 / qmp), 1.0)
            c2 = np.where(act2, nmi * nmi * (1.0 / qmm + 1.0 / qpm), 1.0)
        h11 = c1 - np.where(act1, 2.0 * beta * npl * npl, 0.0)
        h22 = c2 - np.where(act2, 2.0 * beta * nmi * nmi, 0.0)
        h12 = np.where(act1 & act2, 2.0 * beta * npl * nmi, 0.0)
        det = h11 * h22 - h12 * h12
        pd = (h11 > 0) & (det > 1e-300)
        # Newton where the Hessian is positive definite, entropy-preconditioned descent elsewhere
        with np.errstate(divide="ignore", invalid="ignore"):
            d1 = np.where(pd, -(h22 * g1 - h12 * g2) / det, -g1 / c1)
            d2 = np.where(pd, -(h11 * g2 - h12 * g1) / det, -g2 / c2)
        d1 = np.where(act1, d1, 0.0)
        d2 = np.where(act2, d2, 0.0)
        step = np.ones_like(f1)
        with np.errstate(divide="ignore", invalid="ignore"):
            for f, d in ((f1, d1), (f2, d2)):
                lim = np.where(d > 0, (1.0 - f) / d, np.where(d < 0, -f / d, np.inf))
                step = np.minimum(step, 0.9 * lim)
        slope = g1 * d1 + g2 * d2
        accepted = np.zeros(f1.shape, dtype=bool)
        new1, new2, newv = f1.copy(), f2.copy(), val.copy()
        for _ in range(40):
            pend = ~accepted
            if not pend.any():
                break
            c_1 = f1 + step * d1
            c_2 = f2 + step * d2
            cv = self.value(b, c_1, c_2)
            ok = pend & ((cv <= val + 1e-4 * step * slope + 1e-15 * np.abs(val))
                         | (np.abs(step * slope) < 1e-15 * (1.0 + np.abs(val))))
            new1 = np.where(ok, c_1, new1)
            new2 = np.where(ok, c_2, new2)
            newv = np.where(ok, cv, newv)
            accepted |= ok
            step = np.where(ok, step, 0.5 * step)
        return new1, new2, newv, accepted

    def descend(self, b, f1, f2, max_iter: int = 200, tol: float = 1e-12):
        b = np.asarray(b, dtype=float)
        npl, nmi = self._split(b)
        f1 = np.where(npl > 0, np.array(f1, dtype=float), 0.5)
        f2 = np.where(nmi > 0, np.array(f2, dtype=float), 0.5)
        val = self.value(b, f1, f2)
        idx = np.arange(b.size)
        for _ in range(max_iter):
            if idx.size == 0:
                break
            n1, n2, nv, acc = self._step(b[idx], npl[idx], nmi[idx], f1[idx], f2[idx], val[idx])
            moved = np.maximum(np.abs(n1 - f1[idx]), np.abs(n2 - f2[idx]))
            f1[idx], f2[idx], val[idx] = n1, n2, nv
            idx = idx[acc & (moved > tol)]
        return val, self.magnetization(b, f1, f2), np.stack([f1, f2], axis=-1)

    def all_minima(self, bs, extra_seeds=None):
        bs = np.asarray(bs, dtype=float)
        s1, s2 = np.meshgrid(self.seeds_1d, self.seeds_1d, indexing="ij")
        seeds = np.stack([s1.ravel(), s2.ravel()], axis=-1)
        if extra_seeds is not None:
            seeds = np.concatenate([seeds, extra_seeds])
        ns = len(seeds)
        bb = np.repeat(bs, ns)
        f1 = np.tile(seeds[:, 0], len(bs))
        f2 = np.tile(seeds[:, 1], len(bs))
        val, mag, st = self.descend(bb, f1, f2)
        return _group_minima(val.reshape(len(bs), ns), mag.reshape(len(bs), ns),
                             st.reshape(len(bs), ns, 2))

    def continue_from(self, bs, states):
        states = np.asarray(states)
        return self.descend(np.asarray(bs, dtype=float), states[:, 0], states[:, 1])


class _IsingLine:
    """Curie-Weiss first-layer problem ``-beta_I a^2/2 + E(a, b)`` at fixed ``beta_I``.

    ``E(a, b)`` is the relative entropy of the optimal coupling between the
    start law ``((1+a)/2, (1-a)/2)`` and the end law ``((1+b)/2, (1-b)/2)``
    with respect to ``uniform x p_t``.
    """

    def __init__(self, beta_i: float, t: float, n_grid: int = 801):
        k = flip_kernel(t)
        self.beta = float(beta_i)
        self.s, self.f = k.stay, k.flip
        self.r = (self.s / self.f) ** 2
        self.grid = np.cos(np.pi * (np.arange(n_grid) + 0.5) / n_grid)[::-1]

    def _coupling(self, a, b):
        up, um = 0.5 * (1.0 + a), 0.5 * (1.0 - a)
        vp = 0.5 * (1.0 + b)
        r = self.r
        lo = np.maximum(0.0, up + vp - 1.0)
        hi = np.minimum(up, vp)
        qa = 1.0 - r
        qb = um - vp + r * (up + vp)
        qc = -r * up * vp
        if abs(qa) < 1e-14:
            c = -qc / qb
        else:
            disc = np.sqrt(np.maximum(qb * qb - 4.0 * qa * qc, 0.0))
            qq = -0.5 * (qb + np.copysign(disc, qb))
            with np.errstate(divide="ignore", invalid="ignore"):
                r1 = qq / qa
                r2 = np.where(qq != 0, qc / qq, r1)
            in1 = (r1 >= lo - 1e-14) & (r1 <= hi + 1e-14)
            c = np.where(in1, r1, r2)
        c = np.clip(c, lo, hi)
        qpp = c
        qpm = up - c
        qmp = vp - c
        qmm = um - vp + c
        return (np.maximum(qpp, 0.0), np.maximum(qpm, 0.0), np.maximum(qmp, 0.0),
                np.maximum(qmm, 0.0))

    def value(self, a, b):
        qpp, qpm, qmp, qmm = self._coupling(a, b)
        ls, lf = math.log(0.5 * self.s), math.log(0.5 * self.f)
        ent = (xlogy(qpp, qpp) - qpp * ls + xlogy(qmm, qmm) - qmm * ls
               + xlogy(qpm, qpm) - qpm * lf + xlogy(qmp, qmp) - qmp * lf)
        return -0.5 * self.beta * a * a + ent

    def derivs(self, a, b):
        qpp, qpm, qmp, qmm = self._coupling(a, b)
        r = self.r
        lfs = math.log(self.f / self.s)
        with np.errstate(divide="ignore", invalid="ignore"):
            cp = (qpp + r * qmp) / (2.0 * (qmm + qpp + r * (qmp + qpm)))
            # either end-state column gives the same slope at the optimal coupling
            plus_col = np.asarray(b) >= 0
            d1 = np.where(plus_col, np.log(qpp / qmp) + lfs, np.log(qpm / qmm) - lfs)
            d2 = np.where(plus_col, cp * (1.0 / qpp + 1.0 / qmp),
                          (0.5 - cp) * (1.0 / qpm + 1.0 / qmm))
        return -self.beta * a + 0.5 * d1, -self.beta + 0.5 * d2

    def descend(self, b, a, max_iter: int = 100, tol: float = 1e-12):
        b = np.asarray(b, dtype=float)
        a = np.array(a, dtype=float)
        val = self.value(a, b)
        active = np.ones(a.shape, dtype=bool)
        for _ in range(max_iter):
            if not active.any():
                break
            d1, d2 = self.derivs(a, b)
            d1 = np.nan_to_num(d1)
            step = np.where(d2 > 0, -d1 / np.where(d2 > 0, d2, 1.0), -np.sign(d1) * 0.05)
            step = np.clip(step, -0.2, 0.2)
            lim = np.where(step > 0, 0.9 * (1.0 - a), np.where(step < 0, 0.9 * (1.0 + a), 0.0))
            step = np.sign(step) * np.minimum(np.abs(step), lim)
            step = np.where(active, step, 0.0)
            accepted = np.zeros_like(active)
            new_a, new_v = a.copy(), val.copy()
            for _ in range(40):
                pending = active & ~accepted
                if not pending.any():
                    break
                cand = a + step
                cv = self.value(cand, b)
                ok = pending & ((cv <= val + 1e-15 * np.abs(val) + 1e-300)
                                | (np.abs(step * d1) < 1e-15 * (1.0 + np.abs(val))))
                new_a = np.where(ok, cand, new_a)
                new_v = np.where(ok, cv, new_v)
                accepted |= ok
                step = np.where(ok, step, 0.5 * step)
            moved = np.abs(new_a - a)
            gain = val - new_v
            a, val = new_a, new_v
            # stiff lines (tiny t) locate a only to ~1e-10; stop once moves stop paying
            stalled = (moved < 1e-8) & (gain <= 1e-14 * (1.0 + np.abs(val)))
            active &= accepted & (moved > tol) & ~stalled
        return val, a.copy(), a[:, None].copy()

    def all_minima(self, bs):
        bs = np.asarray(bs, dtype=float)
        A, B = np.meshgrid(self.grid, bs)
        d1, _ = self.derivs(A, B)
        # pad with the open ends so minima beyond the outermost nodes are bracketed too
        edges = np.concatenate([[-1.0], self.grid, [1.0]])
        d1 = np.concatenate([np.full((len(bs), 1), -np.inf), d1, np.full((len(bs), 1), np.inf)], axis=1)
        sign_ch = (d1[:, :-1] < 0) & (d1[:, 1:] >= 0)
        rows, cols = np.nonzero(sign_ch)
        lo = edges[cols].copy()
        hi = edges[cols + 1].copy()
        bb = bs[rows]
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            dm, _ = self.derivs(mid, bb)
            right = dm < 0
            lo = np.where(right, mid, lo)
            hi = np.where(right, hi, mid)
        amin = 0.5 * (lo + hi)
        vals = self.value(amin, bb)
        out = [[] for _ in bs]
        for i, a_, v_ in zip(rows, amin, vals):
            out[i].append((float(v_), float(a_), np.array([a_])))
        for lst in out:
            lst.sort(key=lambda e: e[0])
        return out

    def continue_from(self, bs, states):
        return self.descend(np.asarray(bs, dtype=float), np.asarray(states)[:, 0])


def _group_minima(val, mag, st, tol: float = 1e-7):
    """Deduplicate converged seeds per scan point; returns lists sorted by value."""
    out = []
    order = np.argsort(val, axis=1, kind="stable")
    for i in range(val.shape[0]):
        o = order[i]
        _, first = np.unique(np.round(mag[i, o] / tol), return_index=True)
        keep = o[np.sort(first)]
        out.append([(float(val[i, k]), float(mag[i, k]), st[i, k].copy()) for k in keep])
    return out


# ---------------------------------------------------------------------------
# line scanner


@dataclass
class BadPoint:
    """A time-t measure with non-unique first-layer minimizers.

    ``x`` is the occupation of the time-t measure (1 for the Ising alphabet),
    ``m`` its magnetization, ``minimizers`` the start magnetizations of the
    competing global minimizers and ``gap`` their rate difference.
    """

    x: float
    m: float
    minimizers: tuple
    gap: float
    grid_index: int | None = None
    discontinuous: bool = True

    @property
    def branch(self) -> str:
        if abs(self.m) <= DELTA_SEP:
            return "stem"
        return "upper" if self.m > 0 else "lower"

    @property
    def measure(self) -> SpinMeasure:
        x, m = self.x, self.m
        return SpinMeasure(0.5 * x * (1.0 - m), 1.0 - x, 0.5 * x * (1.0 + m))


@dataclass
class BadSet:
    kind: str
    beta: float
    t: float
    points: list = field(default_factory=list)
    grid: int | None = None

    def __len__(self):
        return len(self.points)

    @property
    def magnetizations(self) -> np.ndarray:
        return np.array([p.m for p in self.points])

    @property
    def measures(self) -> list:
        return [p.measure for p in self.points]

    def flagged(self) -> set:
        """Scan-grid cells ``(round(x * grid), grid_index)`` carrying a bad point."""
        g = self.grid or 1
        return {(int(round(p.x * g)), p.grid_index) for p in self.points}


def _global(mins, eps_gap, delta_sep):
    best = mins[0][0]
    tied = [e for e in mins if e[0] - best <= eps_gap]
    distinct = []
    for e in sorted(tied, key=lambda e: -e[1]):
        if all(abs(e[1] - d[1]) > delta_sep for d in distinct):
            distinct.append(e)
    return distinct  # ties broken toward larger start magnetization


def _scan_line(backend, bs, x: float, eps_gap: float, delta_sep: float, depth: int = 0):
    bs = np.asarray(bs, dtype=float)
    minima = backend.all_minima(bs)
    glob = [_global(m, eps_gap, delta_sep) for m in minima]
    out = []
    for i, g in enumerate(glob):
        if len(g) >= 2:
            out.append(BadPoint(x, float(bs[i]), tuple(e[1] for e in g), abs(g[0][0] - g[1][0]), i))
    if len(bs) < 2:
        return out
    # continuation of each cell's end-point minimizers across the cell
    left_states = np.array([g[-1][2] for g in glob[:-1]])
    right_states = np.array([g[0][2] for g in glob[1:]])
    _, mag_lr, _ = backend.continue_from(bs[1:], left_states)
    _, mag_rl, _ = backend.continue_from(bs[:-1], right_states)
    g_mag = np.array([g[0][1] for g in glob])
    cells = []
    for i in range(len(bs) - 1):
        gl, gr = glob[i], glob[i + 1]
        # a tied end point explains the jump if one of its minimizers continues smoothly
        if len(gl) >= 2 or len(gr) >= 2:
            continue
        if abs(mag_lr[i] - gr[0][1]) > delta_sep or abs(mag_rl[i] - gl[0][1]) > delta_sep:
            cells.append(i)
    # a narrow hysteresis loop can hide inside one cell: subdivide cells whose
    # change of the global minimizer is a local peak
    dm = np.abs(np.diff(g_mag))
    pad = np.concatenate([[0.0], dm, [0.0]])
    for i in range(len(dm)):
        if i in cells or depth >= 4 or len(glob[i]) >= 2 or len(glob[i + 1]) >= 2:
            continue
        if dm[i] > delta_sep and dm[i] > 1.5 * max(pad[i], pad[i + 2]):
            sub = np.linspace(bs[i], bs[i + 1], 17)
            found = _scan_line(backend, sub, x, eps_gap, delta_sep, depth + 1)
            out.extend(_reindex(p, i, bs) for p in found
                       if abs(p.m - bs[i]) > 0 and abs(p.m - bs[i + 1]) > 0)
    if not cells:
        out.sort(key=lambda p: p.m)
        return out
    cells = np.array(cells)
    lo = bs[cells].copy()
    hi = bs[cells + 1].copy()
    s_l = np.array([glob[i][0][2] for i in cells])
    s_r = np.array([glob[i + 1][0][2] for i in cells])
    m_l = g_mag[cells].copy()
    m_r = g_mag[cells + 1].copy()
    v_l = np.empty(len(cells))
    v_r = np.empty(len(cells))
    for _ in range(55):
        mid = 0.5 * (lo + hi)
        vl, ml, sl = backend.continue_from(mid, s_l)
        vr, mr, sr = backend.continue_from(mid, s_r)
        merged = np.abs(ml - mr) <= 0.1 * delta_sep
        left_alive = np.abs(ml - m_l) <= np.abs(ml - m_r)
        go_right = np.where(merged, left_alive, vl < vr)
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
        s_l = np.where(go_right[:, None], sl, s_l)
        m_l = np.where(go_right, ml, m_l)
        s_r = np.where(go_right[:, None], s_r, sr)
        m_r = np.where(go_right, m_r, mr)
        v_l = np.where(go_right, vl, v_l)
        v_r = np.where(go_right, v_r, vr)
        if np.all(hi - lo < 1e-14):
            break
    b_star = 0.5 * (lo + hi)
    vl, ml, _ = backend.continue_from(b_star, s_l)
    vr, mr, _ = backend.continue_from(b_star, s_r)
    check = backend.all_minima(b_star)
    for k, i in enumerate(cells):
        if abs(ml[k] - mr[k]) <= delta_sep or abs(vl[k] - vr[k]) > eps_gap:
            continue
        lowest = min(vl[k], vr[k])
        third = [e for e in check[k] if e[0] < lowest - eps_gap
                 and abs(e[1] - ml[k]) > delta_sep and abs(e[1] - mr[k]) > delta_sep]
        if third:
            # a lower third branch owns b_star; rescan the two half cells
            if depth < 3:
                sub = _scan_line(backend, [bs[i], b_star[k], bs[i + 1]], x, eps_gap, delta_sep,
                                 depth + 1)
                out.extend(_reindex(p, i, bs) for p in sub)
            continue
        j = i if abs(b_star[k] - bs[i]) <= abs(bs[i + 1] - b_star[k]) else i + 1
        pair = tuple(sorted((float(ml[k]), float(mr[k])), reverse=True))
        out.append(BadPoint(x, float(b_star[k]), pair, float(abs(vl[k] - vr[k])), j))
    out.sort(key=lambda p: p.m)
    return out


def _reindex(p: BadPoint, i: int, bs) -> BadPoint:
    p.grid_index = i if abs(p.m - bs[i]) <= abs(bs[i + 1] - p.m) else i + 1
    return p


# ---------------------------------------------------------------------------
# public scans


def constrained_min(nu_t: SpinMeasure, params: ModelParams, t: float, eps_gap: float = EPS_GAP,
                    delta_sep: float = DELTA_SEP, seed_grid: int = 64) -> mfe.MaximizerSet:
    """Global minimizers of the joint rate with second marginal ``nu_t``.

    Returned points are the first marginals in occupation coordinates; ``value``
    is the minimal rate and ``gap_to_next`` the distance to the next local minimum.
    """
    x = nu_t.occupied
    if x <= 0 or t == 0:
        if t == 0:
            q = np.diag(nu_t.as_array())
            val = joint_rate(JointMeasure(q), params, 0.0)
        else:
            val = joint_rate(JointMeasure(np.diag([0.0, 1.0, 0.0])), params, t)
        pt = to_occ_coords(nu_t)
        return mfe.MaximizerSet([pt], val, math.inf, [(pt, val)])
    line = _WiroLine(params, t, x)
    b = (nu_t.p_plus - nu_t.p_minus) / x
    g = (np.arange(seed_grid) + 0.5) / seed_grid
    G1, G2 = np.meshgrid(g, g, indexing="ij")
    vals = line.value(np.full(G1.shape, b), G1, G2)
    P = np.pad(vals, 1, constant_values=np.inf)
    loc = np.ones_like(vals, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di or dj:
                loc &= vals <= P[1 + di:1 + di + seed_grid, 1 + dj:1 + dj + seed_grid]
    extra = np.stack([G1[loc], G2[loc]], axis=-1)
    mins = line.all_minima(np.array([b]), extra_seeds=extra)[0]
    top = _global(mins, eps_gap, delta_sep)
    pts = [OccCoords(x, max(-1.0, min(1.0, e[1]))) for e in top]
    local = [(OccCoords(x, max(-1.0, min(1.0, e[1]))), e[0]) for e in mins]
    others = [e[0] for e in mins if all(abs(e[1] - d[1]) > 1e-7 for d in top)]
    gap = (min(others) - top[0][0]) if others else math.inf
    return mfe.MaximizerSet(pts, top[0][0], gap, local)


def ising_bad_set(beta_i: float, t: float, bs=None, n: int = 401, eps_gap: float = EPS_GAP,
                  delta_sep: float = DELTA_SEP) -> BadSet:
    """Bad magnetizations of the spin-flip evolved Curie-Weiss model.

    ``bs`` is the magnetization scan grid (default ``n`` equispaced points).
    """
    if beta_i < 0 or t < 0:
        raise DomainError("need beta_I >= 0 and t >= 0")
    out = BadSet("ising", float(beta_i), float(t))
    if t == 0:
        return out
    if bs is None:
        bs = np.linspace(-1.0, 1.0, n)
    out.points = _scan_line(_IsingLine(beta_i, t), np.sort(bs), 1.0, eps_gap, delta_sep)
    return out


def _row_grid(grid: int, j: int):
    """Magnetizations of barycentric grid points with hole mass ``j / grid`` (ascending)."""
    occ = grid - j
    i = np.arange(occ + 1)  # minus count
    return ((occ - 2 * i) / occ)[::-1]


def _require_symmetric(params: ModelParams):
    if not params.alpha.is_symmetric:
        raise DomainError("bad-set relation is stated for symmetric alpha")


def wiro_bad_line(params: ModelParams, t: float, x: float, bs, eps_gap: float = EPS_GAP,
                  delta_sep: float = DELTA_SEP, certify: bool = True) -> list:
    """Bad time-t measures on the line of occupation ``x``, scanned over ``bs``.

    With ``certify`` rows whose first-layer problem is provably convex are
    returned empty without scanning.
    """
    if t == 0 or x <= 0:
        return []
    # the first-layer Hessian is D - 2 beta w w^T with w^T D^{-1} w <= x/4,
    # hence positive definite everywhere when beta x / 2 < 1
    if certify and params.beta * x < 2.0:
        return []
    return _scan_line(_WiroLine(params, t, x), np.sort(bs), x, eps_gap, delta_sep)


def wiro_bad_set(params: ModelParams, t: float, grid: int = SIMPLEX_STEP,
                 eps_gap: float = EPS_GAP, delta_sep: float = DELTA_SEP, certify: bool = True) -> BadSet:
    """Scan the barycentric simplex grid of step ``1/grid`` row by row."""
    _require_symmetric(params)
    out = BadSet("wiro", float(params.beta), float(t), grid=grid)
    for j in range(grid):
        x = (grid - j) / grid
        out.points.extend(wiro_bad_line(params, t, x, _row_grid(grid, j), eps_gap, delta_sep, certify))
    return out


def pullback_bad_line(beta: float, t: float, x: float, bs, eps_gap: float = EPS_GAP,
                      delta_sep: float = DELTA_SEP) -> list:
    """Ising bad magnetizations at ``beta_I = beta x / 2`` placed on the row ``x``."""
    ib = ising_bad_set(0.5 * beta * x, t, bs=bs, eps_gap=eps_gap, delta_sep=delta_sep)
    for p in ib.points:
        p.x = x
    return ib.points


def pullback_bad_set(beta: float, t: float, grid: int = SIMPLEX_STEP, eps_gap: float = EPS_GAP,
                     delta_sep: float = DELTA_SEP) -> BadSet:
    """The Ising pull-back on the same rows and grid as :func:`wiro_bad_set`."""
    out = BadSet("ising-pullback", float(beta), float(t), grid=grid)
    if t == 0:
        return out
    for j in range(grid):
        x = (grid - j) / grid
        out.points.extend(pullback_bad_line(beta, t, x, _row_grid(grid, j), eps_gap, delta_sep))
    return out


def typical_evolution(params: ModelParams, t: float) -> list:
    """Time-t images of the equilibrium maximizers."""
    k = flip_kernel(t)
    return [k.apply(nu) for nu in mfe.maximizers(params).measures]


def atypicality_check(params: ModelParams, t: float, grid: int = 200,
                      delta_sep: float = DELTA_SEP) -> tuple:
    """Whether every typical time-t measure stays farther than ``delta_sep`` from the bad set.

    The distance (in ``(x, m)`` coordinates) is the minimum over the simplex scan
    and over an extra scan of the exact row of each typical measure.
    """
    _require_symmetric(params)
    if t == 0:
        return True, math.inf
    typ = [to_occ_coords(nu) for nu in typical_evolution(params, t)]
    bad = wiro_bad_set(params, t, grid=grid).points
    for c in typ:
        bad = bad + wiro_bad_line(params, t, c.x, np.linspace(-1, 1, 2 * grid + 1))
    if not bad:
        return True, math.inf
    pts = np.array([(p.x, p.m) for p in bad])
    dist = min(float(np.min(np.hypot(pts[:, 0] - c.x, pts[:, 1] - c.m))) for c in typ)
    return dist > delta_sep, dist


@dataclass
class MappingReport:
    beta: float
    t: float
    grid: int
    wiro: BadSet
    ising: BadSet
    mismatches: list

    @property
    def ok(self) -> bool:
        return not self.mismatches


def mapping_check(params: ModelParams, t: float, grid: int = SIMPLEX_STEP, m_tol: float = 1e-6,
                  eps_gap: float = EPS_GAP, delta_sep: float = DELTA_SEP) -> MappingReport:
    """Compare the direct scan with the Ising pull-back row by row on the same grid.

    A mismatch is a refined bad point of one route with no partner of the
    other route within ``m_tol`` on the same row.
    """
    _require_symmetric(params)
    wiro = BadSet("wiro", float(params.beta), float(t), grid=grid)
    pull = BadSet("ising-pullback", float(params.beta), float(t), grid=grid)
    bad = []
    for j in range(grid):
        x = (grid - j) / grid
        bs = _row_grid(grid, j)
        w = wiro_bad_line(params, t, x, bs, eps_gap, delta_sep)
        # the Ising route scans every row; beta_I <= 1 rows must come out empty on their own
        i = pullback_bad_line(params.beta, t, x, bs, eps_gap, delta_sep) if t > 0 else []
        wiro.points.extend(w)
        pull.points.extend(i)
        for p in w:
            if not any(abs(p.m - q.m) <= m_tol for q in i):
                bad.append((x, p.m, "wiro only"))
        for q in i:
            if not any(abs(p.m - q.m) <= m_tol for p in w):
                bad.append((x, q.m, "ising only"))
    return MappingReport(float(params.beta), float(t), grid, wiro, pull, bad)
