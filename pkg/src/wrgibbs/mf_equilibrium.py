"""Equilibrium of the mean-field soft-core Widom-Rowlinson model.

The pressure is the supremum of ``-beta nu(1) nu(-1) - I(nu | alpha)`` over
single-site measures ``nu``. Two independent routes are provided:

* :func:`pressure` scans the simplex in ``(x, m)`` coordinates and polishes the
  grid maxima with a damped Newton iteration on the support face of ``alpha``;
* :func:`pressure_decomposed` uses the occupation / Ising split, solving the
  inner magnetization problem by its stationarity equation and the outer
  occupation problem by a one-dimensional bounded search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import optimize

from .measures import (
    DomainError,
    ModelParams,
    SpinMeasure,
    ZeroComponentError,
    field_coords,
    from_occ_coords,
    occ_entropy,
    spin_entropy,
    spin_entropy_prime,
    symmetric_alpha,
    to_occ_coords,
)

__all__ = [
    "ModelParams",
    "MaximizerSet",
    "objective",
    "pressure",
    "pressure_decomposed",
    "maximizers",
    "limiting_kernel",
    "beta_critical",
    "parametrize",
    "critical_exponents",
    "antiferro_scan",
    "finite_volume_pressure",
    "finite_volume_conditional",
]

GRID = 400
TOL_DEG = 1e-9
SEP_MIN = 1e-4
X_JUMP_MIN = 0.05


@dataclass
class MaximizerSet:
    """Global optimizers of a variational problem, in occupation coordinates.

    ``local`` keeps every distinct refined local optimum as ``(point, value)``,
    best first; ``points`` are those within the degeneracy tolerance of the best.
    """

    points: list
    value: float
    gap_to_next: float
    local: list = field(default_factory=list)

    @property
    def measures(self) -> list:
        return [from_occ_coords(p) for p in self.points]

    def __len__(self):
        return len(self.points)


# ---------------------------------------------------------------------------
# raw simplex route


def objective(nu: SpinMeasure, params: ModelParams) -> float:
    """``-beta nu(1) nu(-1) - I(nu | alpha)``; ``-inf`` off the support of alpha."""
    v = nu.as_array()
    a = params.alpha.as_array()
    if np.any((v > 0) & (a <= 0)):
        return -math.inf
    pos = v > 0
    ent = float(np.sum(v[pos] * np.log(v[pos] / a[pos])))
    return -params.beta * v[2] * v[0] - ent


def _objective_grid(nu: np.ndarray, beta: float, alpha: np.ndarray) -> np.ndarray:
    # nu has shape (..., 3); entries assumed > 0 wherever alpha > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(nu > 0, nu * (np.log(nu) - np.log(np.where(alpha > 0, alpha, 1.0))), 0.0)
        bad = np.any((nu > 0) & (alpha <= 0), axis=-1)
    val = -beta * nu[..., 2] * nu[..., 0] - terms.sum(axis=-1)
    return np.where(bad, -np.inf, val)


def _face_newton(nu0: np.ndarray, beta: float, alpha: np.ndarray, tol: float = 1e-13,
                 max_iter: int = 200) -> np.ndarray:
    """Maximize the objective on the support face of ``alpha`` starting from ``nu0``."""
    supp = np.flatnonzero(alpha > 0)
    if supp.size == 1:
        out = np.zeros(3)
        out[supp[0]] = 1.0
        return out
    r = supp[-1]
    free = supp[:-1]
    T = np.zeros((3, free.size))
    for k, s in enumerate(free):
        T[s, k] = 1.0
        T[r, k] = -1.0
    hint = np.zeros((3, 3))
    hint[0, 2] = hint[2, 0] = 1.0

    def value(nu):
        return -beta * nu[2] * nu[0] - float(np.sum(nu[supp] * np.log(nu[supp] / alpha[supp])))

    nu = np.array(nu0, dtype=float)
    nu[alpha <= 0] = 0.0
    nu = np.where(alpha > 0, np.maximum(nu, 1e-15), 0.0)
    nu /= nu.sum()
    f = value(nu)
    for _ in range(max_iter):
        dint = np.array([nu[2], 0.0, nu[0]])
        dent = np.zeros(3)
        dent[supp] = np.log(nu[supp] / alpha[supp]) + 1.0
        grad = T.T @ (-beta * dint - dent)
        inv = np.zeros(3)
        inv[supp] = 1.0 / nu[supp]
        h_ent = -(T.T * inv) @ T
        hess = -beta * T.T @ hint @ T + h_ent
        try:
            ev = np.linalg.eigvalsh(hess)
            use_full = ev.max() < 0
        except np.linalg.LinAlgError:
            use_full = False
        step = -np.linalg.solve(hess if use_full else h_ent, grad)
        dnu = T @ step
        # fraction-to-boundary rule keeps the iterate in the open face
        neg = dnu < 0
        smax = 1.0
        if np.any(neg & (alpha > 0)):
            mask = neg & (alpha > 0)
            smax = min(1.0, 0.95 * float(np.min(-nu[mask] / dnu[mask])))
        s = smax
        slope = float(grad @ step)
        while True:
            cand = nu + s * dnu
            fc = value(cand)
            if fc >= f + 1e-4 * s * slope or s < 1e-16:
                break
            s *= 0.5
        if fc < f and s < 1e-16:
            break
        nu, f = cand, fc
        if float(np.max(np.abs(s * dnu))) < tol:
            break
    return nu


def _grid_candidates(beta: float, alpha: np.ndarray, grid: int) -> list:
    """Local maxima of the objective on a cell-centred grid of the support face."""
    supp = np.flatnonzero(alpha > 0)
    if supp.size == 1:
        out = np.zeros(3)
        out[supp[0]] = 1.0
        return [out]
    if supp.size == 2:
        s = (np.arange(grid) + 0.5) / grid
        nu = np.zeros((grid, 3))
        nu[:, supp[0]] = s
        nu[:, supp[1]] = 1.0 - s
        vals = _objective_grid(nu, beta, alpha)
        padded = np.concatenate([[-np.inf], vals, [-np.inf]])
        loc = (vals >= padded[:-2]) & (vals >= padded[2:])
        return [nu[i] for i in np.flatnonzero(loc)]
    c = (np.arange(grid) + 0.5) / grid
    X, M = np.meshgrid(c, 2.0 * c - 1.0, indexing="ij")
    nu = np.stack([0.5 * X * (1 - M), 1 - X, 0.5 * X * (1 + M)], axis=-1)
    vals = _objective_grid(nu, beta, alpha)
    P = np.pad(vals, 1, constant_values=-np.inf)
    loc = np.ones_like(vals, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            loc &= vals >= P[1 + di:1 + di + grid, 1 + dj:1 + dj + grid]
    idx = np.argwhere(loc)
    # plateaus can flag long runs; keep the best few dozen
    if len(idx) > 64:
        order = np.argsort(-vals[loc])[:64]
        idx = idx[order]
    return [nu[i, j] for i, j in idx]


def _collect(cands, values, tol_deg: float, sep_min: float) -> MaximizerSet:
    order = np.argsort(-np.asarray(values))
    distinct = []
    for k in order:
        c = cands[k]
        if all(math.hypot(c.x - d.x, c.m - d.m) > sep_min for d, _ in distinct):
            distinct.append((c, float(values[k])))
    best = distinct[0][1]
    top = [p for p, v in distinct if best - v <= tol_deg]
    rest = [v for _, v in distinct if best - v > tol_deg]
    gap = best - rest[0] if rest else math.inf
    top.sort(key=lambda p: (-p.m, p.x))
    return MaximizerSet(points=top, value=best, gap_to_next=gap, local=distinct)


def _maximizers_cached(beta: float, alpha: tuple, grid: int, tol_deg: float, sep_min: float):
    a = np.array(alpha)
    cands, vals = [], []
    for nu0 in _grid_candidates(beta, a, grid):
        nu = _face_newton(nu0, beta, a)
        cands.append(to_occ_coords(SpinMeasure.from_array(nu, normalize=True)))
        vals.append(float(_objective_grid(nu[None, :], beta, a)[0]))
    return _collect(cands, vals, tol_deg, sep_min)


_maximizers_lru = lru_cache(maxsize=4096)(_maximizers_cached)


def maximizers(params: ModelParams, grid: int = GRID, tol_deg: float = TOL_DEG,
               sep_min: float = SEP_MIN) -> MaximizerSet:
    """All global maximizers of the pressure variational problem.

    Points are ordered by decreasing magnetization, so for a symmetric pair the
    nonnegative one comes first.
    """
    return _maximizers_lru(float(params.beta), tuple(params.alpha.as_array()), grid, tol_deg, sep_min)


def pressure(params: ModelParams, grid: int = GRID) -> float:
    """Pressure by grid scan of the simplex plus Newton refinement."""
    return maximizers(params, grid=grid).value


# ---------------------------------------------------------------------------
# decomposed (x, m) route


def _inner_magnetization(x: float, beta: float, h: float) -> float:
    """Optimal magnetization of the Ising part at occupation ``x``.

    Stationarity reads ``atanh(m) = beta x m / 2 + h``; for ``h >= 0`` the
    optimum is the unique root in ``(0, 1)`` when one exists, otherwise zero.
    """
    coupling = 0.5 * beta * x
    hh = abs(h)
    if x <= 0.0 or (hh == 0.0 and coupling <= 1.0):
        return 0.0

    def phi(m):
        return math.atanh(m) - coupling * m - hh

    lo = math.sqrt(1.0 - 1.0 / coupling) if hh == 0.0 else 0.0
    hi = 1.0 - 1e-16
    if phi(hi) <= 0.0:
        return math.copysign(hi, h if h != 0 else 1.0)
    root = optimize.brentq(phi, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    return root if h >= 0 else -root


def _decomposed_profile(x: float, beta: float, h: float, l: float) -> tuple:
    m = _inner_magnetization(x, beta, h)
    lc = math.log(2.0 * math.cosh(h))
    ising = 0.25 * beta * x * m * m + h * m - spin_entropy(m) - math.log(2.0)
    occ = -0.25 * beta * x * x + x * (l - lc) - occ_entropy(x)
    return occ + x * ising, m


def _decomposed_max(beta: float, alpha: SpinMeasure, n_scan: int = 2001):
    a = alpha.as_array()
    if np.any(a <= 0):
        raise ZeroComponentError("decomposed pressure needs a strictly positive alpha")
    fc = field_coords(alpha)
    h, l = fc.h, fc.l  # noqa: E741
    xs = np.linspace(0.0, 1.0, n_scan)
    vals = np.array([_decomposed_profile(x, beta, h, l)[0] for x in xs])
    best = -math.inf
    best_x = 0.0
    step = xs[1] - xs[0]
    for i in np.argsort(-vals)[:6]:
        lo, hi = max(0.0, xs[i] - step), min(1.0, xs[i] + step)
        res = optimize.minimize_scalar(lambda x: -_decomposed_profile(x, beta, h, l)[0],
                                       bounds=(lo, hi), method="bounded",
                                       options={"xatol": 1e-13, "maxiter": 500})
        for x, v in ((res.x, -res.fun), (xs[i], vals[i])):
            if v > best:
                best, best_x = v, x
    # the literal boxed formula sits log 3 below the raw supremum; restore it
    const = math.log(a[1]) + math.log(3.0)
    return best + const, best_x, _decomposed_profile(best_x, beta, h, l)[1]


def pressure_decomposed(params: ModelParams) -> float:
    """Pressure through the occupation-density / Ising decomposition."""
    return _decomposed_max(params.beta, params.alpha)[0]


# ---------------------------------------------------------------------------
# kernels and closed forms


def limiting_kernel(nu: SpinMeasure, params: ModelParams) -> SpinMeasure:
    """Single-site conditional of the mean-field measure given empirical law ``nu``."""
    a = params.alpha.as_array()
    w = np.array([
        a[0] * math.exp(-params.beta * nu.p_plus),
        a[1],
        a[2] * math.exp(-params.beta * nu.p_minus),
    ])
    return SpinMeasure.from_array(w, normalize=True)


def beta_critical(alpha: SpinMeasure) -> float:
    if abs(alpha.p_plus - alpha.p_minus) > 1e-12 or alpha.p_plus <= 0:
        raise DomainError("critical repulsion is defined for symmetric alpha with alpha(1) > 0")
    return 2.0 + math.e * alpha.p_zero / alpha.p_plus


def parametrize(m: float, alpha: SpinMeasure) -> tuple:
    """Repulsion and occupation at which ``(x, m)`` is a stationary profile."""
    if not (0.0 < abs(m) < 1.0):
        raise DomainError("parametrization needs 0 < |m| < 1")
    fc = field_coords(alpha)
    h, l = fc.h, fc.l  # noqa: E741
    ip = float(spin_entropy_prime(m))
    g = (ip - h) / m
    expo = -l + math.log(2.0 * math.cosh(h)) + g - m * ip + spin_entropy(m)
    factor = 1.0 + math.exp(expo)
    return 2.0 * g * factor, 1.0 / factor


def _m_of(beta: float, alpha: SpinMeasure, grid: int) -> float:
    ms = maximizers(ModelParams(beta, alpha), grid=grid)
    return max(p.m for p in ms.points)


def critical_exponents(alpha: SpinMeasure, n_points: int = 12, grid: int = GRID) -> tuple:
    """Log-log slopes of ``m(beta, 0)`` above ``beta_c`` and of ``m(beta_c, h)``."""
    bc = beta_critical(alpha)
    a0 = alpha.p_zero
    db = np.geomspace(1e-4, 0.1, n_points)
    mb = np.array([_m_of(bc + d, alpha, grid) for d in db])
    hs = np.geomspace(1e-5, 1e-2, n_points)
    mh = np.array([_m_of(bc, symmetric_alpha(a0, h), grid) for h in hs])
    if np.any(mb <= 0) or np.any(mh <= 0):
        raise RuntimeError("vanishing magnetization inside the fit window")
    exp_beta = np.polyfit(np.log(db), np.log(mb), 1)[0]
    exp_h = np.polyfit(np.log(hs), np.log(mh), 1)[0]
    return float(exp_beta), float(exp_h)


def _global_x(beta: float, alpha: SpinMeasure, grid: int) -> MaximizerSet:
    return maximizers(ModelParams(beta, alpha), grid=grid)


def antiferro_scan(alpha0_grid, beta_grid, grid: int = GRID, x_jump_min: float = X_JUMP_MIN,
                   tol: float = 1e-9) -> list:
    """Locate jumps of the occupation density along negative-``beta`` scans.

    Returns rows ``(alpha0, beta_line, x_low, x_high)``; ``beta_line`` is refined
    by bisection to ``tol`` between the two scan values that bracket the jump.
    """
    betas = np.sort(np.asarray(beta_grid, dtype=float))[::-1]  # from 0 downwards
    if np.any(betas > 0):
        raise DomainError("antiferromagnetic scan expects beta <= 0")
    rows = []
    for a0 in alpha0_grid:
        alpha = symmetric_alpha(float(a0))
        states = []
        for b in betas:
            ms = _global_x(float(b), alpha, grid)
            if any(abs(p.m) > SEP_MIN for p in ms.points):
                raise RuntimeError(f"nonzero magnetization at beta={b}, alpha0={a0}")
            states.append(ms.points[0].x)
        for i in range(len(betas) - 1):
            if abs(states[i + 1] - states[i]) <= x_jump_min:
                continue
            hi_b, lo_b = betas[i], betas[i + 1]
            x_hi_side, x_lo_side = states[i], states[i + 1]
            mid_x = 0.5 * (x_hi_side + x_lo_side)
            phase_hi = x_hi_side > mid_x
            while hi_b - lo_b > tol:
                mb = 0.5 * (hi_b + lo_b)
                xb = _global_x(mb, alpha, grid).points[0].x
                if (xb > mid_x) == phase_hi:
                    hi_b = mb
                else:
                    lo_b = mb
            line = 0.5 * (hi_b + lo_b)
            xa = _global_x(hi_b, alpha, grid).points[0].x
            xb = _global_x(lo_b, alpha, grid).points[0].x
            if abs(xa - xb) <= x_jump_min:
                continue  # steep but continuous; bisection collapsed the bracket
            rows.append((float(a0), float(line), float(min(xa, xb)), float(max(xa, xb))))
    return rows


# ---------------------------------------------------------------------------
# finite-volume references


def finite_volume_pressure(params: ModelParams, n: int) -> float:
    """``(1/N) log`` of the mean-field partition function, by multinomial sums."""
    a = params.alpha.as_array()
    terms = []
    lg = math.lgamma
    for k_plus in range(n + 1):
        for k_minus in range(n + 1 - k_plus):
            k0 = n - k_plus - k_minus
            counts = (k_minus, k0, k_plus)
            if any(c > 0 and a[i] <= 0 for i, c in enumerate(counts)):
                continue
            lw = lg(n + 1) - sum(lg(c + 1) for c in counts)
            lw += sum(c * math.log(a[i]) for i, c in enumerate(counts) if c > 0)
            lw -= params.beta * k_plus * k_minus / n
            terms.append(lw)
    t = np.array(terms)
    top = t.max()
    return float((top + math.log(np.exp(t - top).sum())) / n)


def finite_volume_conditional(counts_rest: tuple, params: ModelParams) -> SpinMeasure:
    """Exact law of site 1 in the size-``N`` measure given the other ``N - 1`` sites.

    ``counts_rest`` are the symbol counts ``(n_minus, n_hole, n_plus)`` of sites 2..N.
    """
    n = sum(counts_rest) + 1
    a = params.alpha.as_array()
    w = np.array([
        a[0] * math.exp(-params.beta * counts_rest[2] / n),
        a[1],
        a[2] * math.exp(-params.beta * counts_rest[0] / n),
    ])
    return SpinMeasure.from_array(w, normalize=True)
