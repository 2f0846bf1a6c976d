"""Command-line front end.

Every subcommand writes one file: a block of ``#``-prefixed metadata lines
(version, config, seed, wall time) followed by a data section, CSV for gridded
data and JSON for scalar summaries. The data section depends only on the
config and the seed.

Parameters come from flags, from a JSON config file (``--config``), or both;
flags win. A config file looks like::

    {"subcommand": "bad-set", "seed": 7, "output": "out.csv",
     "params": {"beta": 5, "alpha0": 0.3333, "t": 0.6}}
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .measures import DomainError, ModelParams, symmetric_alpha

__all__ = [
    "ConfigError",
    "InvariantError",
    "ExperimentConfig",
    "OutputFile",
    "SUBCOMMANDS",
    "load_config",
    "run",
    "read_output",
    "main",
]

OUTPUT_DIR_ENV = "WRGIBBS_OUTPUT_DIR"
EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3
SEED_MAX = 2**64 - 1


class ConfigError(ValueError):
    """Invalid configuration; carries the offending key and, for files, the line."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


class InvariantError(RuntimeError):
    """An internal consistency check on computed results failed."""


# ---------------------------------------------------------------------------
# parameter schemas


def _float(v):
    if isinstance(v, bool):
        raise TypeError("boolean where a number is expected")
    x = float(v)
    if not math.isfinite(x):
        raise ValueError("must be finite")
    return x


def _int(v):
    if isinstance(v, bool) or (isinstance(v, float) and not v.is_integer()):
        raise TypeError("expected an integer")
    return int(v)


def _bool(v):
    if isinstance(v, bool):
        return v
    if isinstance(v, str) and v.lower() in ("true", "1", "yes"):
        return True
    if isinstance(v, str) and v.lower() in ("false", "0", "no"):
        return False
    raise TypeError("expected a boolean")


def _float_list(v):
    if isinstance(v, str):
        v = [s for s in v.split(",") if s.strip()]
    if not isinstance(v, (list, tuple)) or not v:
        raise TypeError("expected a non-empty list of numbers")
    return [_float(x) for x in v]


def _choice(*options):
    def parse(v):
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return v
    return parse


@dataclass(frozen=True)
class _Param:
    parse: object
    default: object
    help: str = ""


SCHEMAS = {
    "pressure": {
        "beta": _Param(_float, 0.0, "repulsion strength"),
        "alpha0": _Param(_float, 1 / 3, "a-priori hole weight"),
        "h": _Param(_float, 0.0, "a-priori field, alpha(+)/alpha(-) = exp(2h)"),
    },
    "phase-diagram": {
        "mode": _Param(_choice("ferro", "antiferro"), "ferro", "ferro or antiferro"),
        "alpha0": _Param(_float_list, [0.2, 1 / 3, 0.5], "comma-separated alpha(0) ladder"),
        "beta_min": _Param(_float, 0.0, "lower end of the beta scan"),
        "beta_max": _Param(_float, 6.0, "upper end of the beta scan"),
        "n_beta": _Param(_int, 25, "number of beta values"),
        "h": _Param(_float, 0.0, "a-priori field (ferro mode)"),
    },
    "bad-set": {
        "beta": _Param(_float, 5.0, "repulsion strength"),
        "alpha0": _Param(_float, 1 / 3, "a-priori hole weight (symmetric alpha)"),
        "t": _Param(_float, 0.6, "flip time"),
        "grid": _Param(_int, 400, "simplex grid steps"),
        "route": _Param(_choice("wiro", "pullback"), "wiro", "direct scan or Ising pull-back"),
    },
    "typical-vs-bad": {
        "beta": _Param(_float, 4.0, "repulsion strength"),
        "alpha0": _Param(_float, 1 / 3, "a-priori hole weight (symmetric alpha)"),
        "t": _Param(_float_list, [0.05, 0.1, 0.2, 0.4, 0.8], "comma-separated times"),
        "grid": _Param(_int, 200, "simplex grid steps"),
    },
    "dobrushin-region": {
        "beta": _Param(_float, 2.0, "repulsion strength"),
        "d": _Param(_int, 2, "lattice dimension (degree 2d)"),
        "grid": _Param(_int, 200, "simplex grid steps"),
        "hardcore": _Param(_bool, False, "hard-core instead of soft-core"),
        "what": _Param(_choice("boundary", "grid"), "boundary", "boundary polyline or every grid point"),
    },
    "lattice-checkerboard": {
        "beta": _Param(_float, 1.2, "repulsion strength"),
        "alpha0": _Param(_float, 1 / 3, "a-priori hole weight"),
        "t": _Param(_float, 1.0, "flip time"),
        "radius": _Param(_int, 3, "checkerboard ring radius"),
        "box": _Param(_int, 16, "box side"),
        "n_samples": _Param(_int, 2000, "samples per estimate"),
        "chains": _Param(_int, 8, "independent chains"),
        "burn_in": _Param(_int, 1000, "burn-in sweeps"),
        "thin": _Param(_int, 10, "sweeps between samples"),
    },
    "continuum-percolation": {
        "lam": _Param(_float_list, [1.0, 2.0, 3.0], "comma-separated per-colour intensities"),
        "a": _Param(_float, 0.5, "disc radius"),
        "side": _Param(_float, 10.0, "box side"),
        "n_seeds": _Param(_int, 10, "independent chains per intensity"),
        "steps": _Param(_int, 50000, "Metropolis steps per chain"),
    },
    "tree-critical": {
        "k": _Param(_int, 2, "offspring number"),
        "alpha0": _Param(_float_list, [0.02, 0.05, 0.1], "comma-separated alpha(0) ladder"),
        "antiferro": _Param(_bool, False, "scan negative beta"),
        "beta_max": _Param(_float, 30.0, "scan range in |beta|"),
        "step": _Param(_float, 0.25, "coarse scan step"),
        "tol": _Param(_float, 1e-4, "bisection tolerance"),
    },
}
SUBCOMMANDS = tuple(SCHEMAS)
FORMATS = {name: "json" if name == "pressure" else "csv" for name in SCHEMAS}
TOP_LEVEL_KEYS = ("subcommand", "seed", "output", "params")


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    output: str | None = None

    def __post_init__(self):
        if self.subcommand not in SCHEMAS:
            raise ConfigError(f"unknown subcommand (choose from {', '.join(SUBCOMMANDS)})",
                              key="subcommand")
        self.seed = _check_seed(self.seed)
        self.params = _validate_params(self.subcommand, self.params)

    def as_dict(self) -> dict:
        return {"subcommand": self.subcommand, "seed": self.seed, "params": self.params}


def _check_seed(seed, line=None):
    try:
        s = _int(seed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), key="seed", line=line) from None
    if not 0 <= s <= SEED_MAX:
        raise ConfigError("seed must be a 64-bit unsigned integer", key="seed", line=line)
    return s


def _validate_params(subcommand: str, params: dict, lines: dict | None = None) -> dict:
    schema = SCHEMAS[subcommand]
    lines = lines or {}
    out = {}
    for key in params:
        if key not in schema:
            raise ConfigError(f"unknown parameter for {subcommand}", key=key, line=lines.get(key))
    for key, spec in schema.items():
        raw = params.get(key, spec.default)
        try:
            out[key] = spec.parse(raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), key=key, line=lines.get(key)) from None
    return out


def _key_lines(text: str) -> dict:
    """First line on which each quoted key appears, for diagnostics."""
    found = {}
    for no, line in enumerate(text.splitlines(), start=1):
        for key in re.findall(r'"([^"\\]+)"\s*:', line):
            found.setdefault(key, no)
    return found


def load_config(path, overrides: dict | None = None, subcommand: str | None = None,
                seed=None, output=None) -> ExperimentConfig:
    """Read a JSON config file and merge flag overrides on top."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON ({exc.msg})", line=exc.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", line=1)
    lines = _key_lines(text)
    for key in raw:
        if key not in TOP_LEVEL_KEYS:
            raise ConfigError("unknown top-level key", key=key, line=lines.get(key))
    sub = raw.get("subcommand", subcommand)
    if subcommand is not None and sub != subcommand:
        raise ConfigError(f"config is for '{sub}', not '{subcommand}'", key="subcommand",
                          line=lines.get("subcommand"))
    if sub not in SCHEMAS:
        raise ConfigError("missing or unknown subcommand", key="subcommand", line=lines.get("subcommand"))
    params = raw.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object", key="params", line=lines.get("params"))
    params = _validate_params(sub, params, lines)
    params.update(overrides or {})
    s = _check_seed(raw.get("seed", 0), lines.get("seed")) if seed is None else seed
    return ExperimentConfig(sub, params, s, output if output is not None else raw.get("output"))


# ---------------------------------------------------------------------------
# output files


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "nan" if math.isnan(v) else format(float(v), ".12g")
    return str(v)


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _round_floats(obj):
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(format(float(obj), ".12g"))
    return obj


def _json_text(obj) -> str:
    return json.dumps(_round_floats(obj), sort_keys=True, indent=2) + "\n"


def _header(config: ExperimentConfig, wall: float) -> str:
    cfg = json.dumps(config.as_dict(), sort_keys=True, separators=(",", ":"))
    return "".join([
        f"# wrgibbs {__version__}\n",
        f"# format: {FORMATS[config.subcommand]}\n",
        f"# config: {cfg}\n",
        f"# seed: {config.seed}\n",
        f"# wall_time_s: {wall:.3f}\n",
    ])


@dataclass
class OutputFile:
    meta: dict
    data: object  # list of row dicts for CSV, parsed object for JSON
    data_text: str

    @property
    def config(self) -> dict:
        return self.meta["config"]


def _parse_cell(s: str):
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        return s


def read_output(path) -> OutputFile:
    """Parse a file written by :func:`run` back into metadata and data."""
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines(keepends=True)
    n = 0
    meta = {}
    while n < len(lines) and lines[n].startswith("#"):
        body = lines[n][1:].strip()
        if n == 0:
            name, _, version = body.partition(" ")
            if name != "wrgibbs":
                raise ValueError("not a wrgibbs output file")
            meta["version"] = version
        else:
            key, _, value = body.partition(":")
            meta[key.strip()] = value.strip()
        n += 1
    for key in ("format", "config", "seed"):
        if key not in meta:
            raise ValueError(f"missing header field '{key}'")
    meta["config"] = json.loads(meta["config"])
    meta["seed"] = int(meta["seed"])
    if "wall_time_s" in meta:
        meta["wall_time_s"] = float(meta["wall_time_s"])
    data_text = "".join(lines[n:])
    if meta["format"] == "json":
        data = json.loads(data_text)
    else:
        rows = list(csv.reader(io.StringIO(data_text)))
        data = [dict(zip(rows[0], map(_parse_cell, r))) for r in rows[1:]]
    return OutputFile(meta, data, data_text)


# ---------------------------------------------------------------------------
# experiments; each returns the data section text


def _symmetric_params(beta, alpha0):
    return ModelParams(beta, symmetric_alpha(alpha0))


def _exp_pressure(p, seed):
    from . import mf_equilibrium as mfe

    params = ModelParams(p["beta"], symmetric_alpha(p["alpha0"], p["h"]))
    ms = mfe.maximizers(params)
    value = mfe.pressure(params)
    dec = mfe.pressure_decomposed(params)
    if not (math.isfinite(value) and abs(value - dec) < 1e-6):
        raise InvariantError(f"pressure routes disagree: {value} vs {dec}")
    return _json_text({
        "pressure": value,
        "pressure_decomposed": dec,
        "maximizers": [{"x": q.x, "m": q.m} for q in ms.points],
        "gap_to_next": ms.gap_to_next if math.isfinite(ms.gap_to_next) else None,
    })


def _exp_phase_diagram(p, seed):
    from . import mf_equilibrium as mfe

    if p["n_beta"] < 2 or p["beta_max"] <= p["beta_min"]:
        raise ConfigError("need n_beta >= 2 and beta_max > beta_min", key="n_beta")
    betas = np.linspace(p["beta_min"], p["beta_max"], p["n_beta"])
    if p["mode"] == "antiferro":
        if p["beta_max"] > 0:
            raise ConfigError("antiferro mode scans beta <= 0", key="beta_max")
        rows = mfe.antiferro_scan(p["alpha0"], betas)
        for r in rows:
            if not r[2] < r[3]:
                raise InvariantError("occupation jump has no width")
        return _csv_text(["alpha0", "beta_line", "x_low", "x_high"], rows)
    rows = []
    for a0 in p["alpha0"]:
        alpha = symmetric_alpha(a0, p["h"])
        bc = mfe.beta_critical(alpha) if p["h"] == 0 else math.nan
        for b in betas:
            ms = mfe.maximizers(ModelParams(float(b), alpha))
            best = max(ms.points, key=lambda q: q.m)  # ties at +-m reported on the + side
            m = 0.0 if abs(best.m) < 1e-9 else best.m  # optimizer round-off
            rows.append((float(b), a0, p["h"], best.x, m, ms.value, len(ms), bc))
    return _csv_text(["beta", "alpha0", "h", "x_star", "m_star", "pressure", "n_maximizers",
                      "beta_c_formula"], rows)


def _exp_bad_set(p, seed):
    from . import two_layer as tl

    params = _symmetric_params(p["beta"], p["alpha0"])
    grid = p["grid"]
    if grid < 2:
        raise ConfigError("grid must be at least 2", key="grid")
    if p["route"] == "wiro":
        pts = tl.wiro_bad_set(params, p["t"], grid).points
    else:
        pts = tl.pullback_bad_set(p["beta"], p["t"], grid).points
    ms = np.array([q.m for q in pts])
    xs = np.array([q.x for q in pts])
    for x, m in zip(xs, ms):
        if not np.any((np.abs(xs - x) < 1e-12) & (np.abs(ms + m) < 1e-6)):
            raise InvariantError(f"bad set not symmetric under m -> -m at x={x}, m={m}")
    branch_ids = {"stem": 0, "upper": 1, "lower": -1}
    # round-off below the refinement tolerance is printed as an exact zero
    rows = sorted(((q.x, 0.0 if abs(q.m) < 1e-12 else q.m, 1, q.gap, branch_ids[q.branch]) for q in pts),
                  key=lambda r: (r[0], r[1]))
    return _csv_text(["x", "m", "bad_flag", "gap", "branch_id"], rows)


def _exp_typical_vs_bad(p, seed):
    from . import two_layer as tl

    params = _symmetric_params(p["beta"], p["alpha0"])
    rows = []
    for t in p["t"]:
        ok, dist = tl.atypicality_check(params, t, p["grid"])
        if ok != (dist > tl.DELTA_SEP):
            raise InvariantError("atypicality verdict inconsistent with the distance")
        rows.append((t, dist, int(ok)))
    return _csv_text(["t", "min_distance", "atypical"], rows)


def _exp_dobrushin_region(p, seed):
    from . import dobrushin as db

    if p["d"] < 1:
        raise ConfigError("dimension must be positive", key="d")
    reg = db.dobrushin_region(p["beta"], 2 * p["d"], p["grid"], p["hardcore"])
    if np.any(reg.c_values < 0):
        raise InvariantError("negative Dobrushin coefficient")
    b = reg.boundary
    if len(b) and (np.any(b < -1e-12) or np.any(b.sum(axis=1) > 1 + 1e-12)):
        raise InvariantError("boundary point outside the simplex")
    if p["what"] == "grid":
        rows = zip(reg.alpha_plus, reg.alpha_minus, reg.c_values, reg.satisfied)
        return _csv_text(["alpha1", "alpha_minus1", "c_value", "satisfied"], rows)
    rows = [(i, float(q[0]), float(q[1])) for i, q in enumerate(b)]
    return _csv_text(["index", "alpha1", "alpha_minus1"], rows)


def _exp_lattice(p, seed):
    from . import lattice_mc as lm
    from .rng import child_seeds

    params = _symmetric_params(p["beta"], p["alpha0"])
    rows = []
    for far, s in zip((1, -1), child_seeds(seed, 2)):
        est = lm.conditional_estimate(params, p["t"], radius=p["radius"], far_sign=far, box=p["box"],
                                      n_samples=p["n_samples"], seed=s, burn_in=p["burn_in"],
                                      thin=p["thin"], chains=p["chains"])
        pr = est.probabilities.as_array()
        if abs(pr.sum() - 1) > 1e-9 or np.any(pr < 0):
            raise InvariantError("conditional law is not a probability vector")
        rows.append([far, *pr, float(est.stderr[2])])
    se = math.hypot(rows[0][4], rows[1][4])
    diff = rows[0][3] - rows[1][3]
    z = diff / se if se > 0 else (0.0 if diff == 0 else math.inf)
    for r in rows:
        r.append(z)
    return _csv_text(["far_sign", "p_minus", "p_zero", "p_plus", "stderr_plus", "separation_z"], rows)


def _exp_continuum(p, seed):
    from . import continuum as ct
    from .rng import child_seeds

    rows = []
    for lam, s in zip(p["lam"], child_seeds(seed, len(p["lam"]))):
        prob, se = ct.crossing_probability(lam, p["a"], p["side"], p["n_seeds"], p["steps"], s)
        if not 0 <= prob <= 1:
            raise InvariantError("crossing probability outside [0, 1]")
        # crossing above one half is the finite-box stand-in for percolation
        rows.append((lam, prob, se, prob > 0.5))
    return _csv_text(["lam", "crossing", "stderr", "percolating_surrogate"], rows)


def _exp_tree(p, seed):
    from . import tree

    if p["k"] < 2:
        raise ConfigError("critical scans need k >= 2", key="k")
    rows = tree.critical_scan(p["k"], p["alpha0"], beta_max=p["beta_max"], step=p["step"],
                              antiferro=p["antiferro"], tol=p["tol"])
    out = []
    for a0, bc in rows:
        if math.isfinite(bc):
            params = tree.TreeParams(p["k"], bc + (-1 if p["antiferro"] else 1) * p["tol"],
                                     symmetric_alpha(a0))
            for law in tree.find_fixed_points(params):
                step = tree.recursion_step(law, params)
                if max(abs(step.l_minus - law.l_minus), abs(step.l_plus - law.l_plus)) > 1e-8:
                    raise InvariantError("reported fixed point fails the recursion")
        out.append((a0, bc, p["k"]))
    return _csv_text(["alpha0", "beta_crit", "k"], out)


EXPERIMENTS = {
    "pressure": _exp_pressure,
    "phase-diagram": _exp_phase_diagram,
    "bad-set": _exp_bad_set,
    "typical-vs-bad": _exp_typical_vs_bad,
    "dobrushin-region": _exp_dobrushin_region,
    "lattice-checkerboard": _exp_lattice,
    "continuum-percolation": _exp_continuum,
    "tree-critical": _exp_tree,
}


def _output_path(config: ExperimentConfig) -> Path | None:
    if config.output == "-":
        return None
    if config.output:
        return Path(config.output)
    base = Path(os.environ.get(OUTPUT_DIR_ENV, "."))
    return base / f"{config.subcommand}.{FORMATS[config.subcommand]}"


def run(config: ExperimentConfig, stream=None) -> Path | None:
    """Run one experiment and write its output; returns the path (None for stdout)."""
    t0 = time.perf_counter()
    try:
        data = EXPERIMENTS[config.subcommand](config.params, config.seed)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    text = _header(config, time.perf_counter() - t0) + data
    path = _output_path(config)
    if path is None:
        (stream or sys.stdout).write(text)
        return None
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


# ---------------------------------------------------------------------------
# argument parsing


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wrgibbs", description="Widom-Rowlinson Gibbs/non-Gibbs workbench")
    ap.add_argument("--version", action="version", version=f"wrgibbs {__version__}")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--seed", type=int, default=None, help="master seed (64-bit)")
    common.add_argument("--out", default=None,
                        help=f"output file, '-' for stdout (default: ${OUTPUT_DIR_ENV} or cwd)")
    r = sub.add_parser("run", parents=[common], help="run the experiment named in a config file")
    r.add_argument("config_file", nargs="?", help="JSON config file")
    for name, schema in SCHEMAS.items():
        sp = sub.add_parser(name, parents=[common], help=f"{name} experiment")
        for key, spec in schema.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                            help=f"{spec.help} (default {spec.default})")
    return ap


def _validate_flag(subcommand, key, value):
    try:
        return SCHEMAS[subcommand][key].parse(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc), key=key) from None


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.subcommand == "run":
            path = args.config_file or args.config
            if not path:
                raise ConfigError("run needs a config file")
            config = load_config(path, seed=None if args.seed is None else _check_seed(args.seed),
                                 output=args.out)
        else:
            flags = {k: v for k, v in vars(args).items()
                     if k in SCHEMAS[args.subcommand] and v is not None}
            flags = {k: _validate_flag(args.subcommand, k, v) for k, v in flags.items()}
            if args.config:
                config = load_config(args.config, flags, args.subcommand,
                                     None if args.seed is None else _check_seed(args.seed), args.out)
            else:
                config = ExperimentConfig(args.subcommand, flags, 0 if args.seed is None else args.seed,
                                          args.out)
        path = run(config)
    except (ConfigError, OSError) as exc:
        print(f"wrgibbs: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"wrgibbs: invariant failed: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    if path is not None:
        print(path)
    return EXIT_OK
