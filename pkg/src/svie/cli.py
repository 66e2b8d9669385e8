"""Command line front end: ``svie simulate | picard | verify``.

Runs are described by a plain-text key/value config (one ``key = value``
per line, ``#`` comments, schema-versioned).  Exit codes: 0 all checks
passed or the solve converged, 1 the Picard iteration did not converge,
2 a check failed or an analysis/configuration error occurred.  Outputs are
deterministic: rerunning an identical config and seed reproduces every
artifact byte for byte, regardless of ``--threads``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import analysis
from .coefficients import (
    AUDIT_SLACK,
    audit_linear_growth,
    audit_modulus,
    coefficient_catalogue,
    domain_sampler,
    modulus_catalogue,
    pair_sampler,
    scale_for_log_modulus,
)
from .errors import ConfigParseError, ConfigurationError, SvieError
from .grid_noise import build_grid, sample_noise_ensemble, sample_noise_path
from .solver import ensemble_simulate, picard_solve

__all__ = ["RunConfig", "parse_config", "emit_config", "load_config", "main"]

SCHEMA = "svie-run/1"

_COEFFICIENT_SETS = ("example", "deterministic_ode", "linear_test", "zero")
_MODULI = ("linear", "log", "quadratic")
_AUDIT_X_BOUND = 10.0
_AUDIT_SAMPLES = 1000
_DOOB_PATHS = 100_000


@dataclass(frozen=True)
class RunConfig:
    """Everything a run needs besides the output directory override.

    ``horizon`` is in model time units, ``jump_rate`` in expected jumps per
    unit time.  ``picard_k_max = None`` means the structural default
    steps + 1, which always suffices at tolerance 0.
    """

    coefficient_set: str = "example"
    modulus: str = "linear"
    horizon: float = 0.5
    steps: int = 128
    paths: int = 1000
    master_seed: int = 1
    jump_coefficient: float = 0.1
    jump_rate: float = 2.0
    picard_tolerance: float = 1e-10
    picard_k_max: int | None = None
    out_dir: str = "out"

    def __post_init__(self):
        if self.coefficient_set not in _COEFFICIENT_SETS:
            raise ConfigurationError(
                f"coefficient_set must be one of {', '.join(_COEFFICIENT_SETS)}, got {self.coefficient_set!r}"
            )
        if self.modulus not in _MODULI:
            raise ConfigurationError(f"modulus must be one of {', '.join(_MODULI)}, got {self.modulus!r}")
        if not (math.isfinite(self.horizon) and self.horizon > 0.0):
            raise ConfigurationError(f"horizon must be finite and positive, got {self.horizon!r}")
        if self.steps < 1:
            raise ConfigurationError(f"steps must be at least 1, got {self.steps!r}")
        if self.paths < 1:
            raise ConfigurationError(f"paths must be at least 1, got {self.paths!r}")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigurationError(f"master_seed must lie in [0, 2^64), got {self.master_seed!r}")
        if not (math.isfinite(self.jump_coefficient) and self.jump_coefficient > 0.0):
            raise ConfigurationError(f"jump_coefficient must be finite and positive, got {self.jump_coefficient!r}")
        if not (math.isfinite(self.jump_rate) and self.jump_rate >= 0.0):
            raise ConfigurationError(f"jump_rate must be finite and non-negative, got {self.jump_rate!r}")
        if not (math.isfinite(self.picard_tolerance) and self.picard_tolerance >= 0.0):
            raise ConfigurationError(
                f"picard_tolerance must be finite and non-negative, got {self.picard_tolerance!r}"
            )
        if self.picard_k_max is not None and self.picard_k_max < 1:
            raise ConfigurationError(f"picard_k_max must be at least 1, got {self.picard_k_max!r}")
        if not self.out_dir:
            raise ConfigurationError("out_dir must be a non-empty path")


_INT_FIELDS = {"steps", "paths", "master_seed", "picard_k_max"}
_FLOAT_FIELDS = {"horizon", "jump_coefficient", "jump_rate", "picard_tolerance"}


def parse_config(text: str) -> RunConfig:
    """Parse the key/value format; errors name the offending field or line."""
    known = {f.name for f in fields(RunConfig)}
    data: dict[str, str] = {}
    schema = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigParseError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key = key.strip()
        value = value.strip()
        if key == "schema":
            schema = value
            continue
        if key not in known:
            raise ConfigParseError(f"line {lineno}: unknown field {key!r}")
        if key in data:
            raise ConfigParseError(f"line {lineno}: duplicate field {key!r}")
        data[key] = value
    if schema is None:
        raise ConfigParseError("missing required field 'schema'")
    if schema != SCHEMA:
        raise ConfigParseError(f"unsupported schema {schema!r}; this build reads {SCHEMA!r}")
    kwargs: dict = {}
    for key, value in data.items():
        try:
            if key in _INT_FIELDS:
                kwargs[key] = int(value)
            elif key in _FLOAT_FIELDS:
                kwargs[key] = float(value)
            else:
                kwargs[key] = value
        except ValueError:
            raise ConfigParseError(f"field {key!r}: cannot parse {value!r}")
    try:
        return RunConfig(**kwargs)
    except ConfigurationError as err:
        raise ConfigParseError(str(err)) from err


def emit_config(config: RunConfig) -> str:
    """Canonical text for a config; parse(emit(c)) == c and emit is stable."""
    lines = [
        "# svie run configuration",
        "# horizon in model time units; jump_rate in expected jumps per unit time",
        f"schema = {SCHEMA}",
        f"coefficient_set = {config.coefficient_set}",
        f"modulus = {config.modulus}",
        f"horizon = {config.horizon!r}",
        f"steps = {config.steps}",
        f"paths = {config.paths}",
        f"master_seed = {config.master_seed}",
        f"jump_coefficient = {config.jump_coefficient!r}",
        f"jump_rate = {config.jump_rate!r}",
        f"picard_tolerance = {config.picard_tolerance!r}",
    ]
    if config.picard_k_max is not None:
        lines.append(f"picard_k_max = {config.picard_k_max}")
    lines.append(f"out_dir = {config.out_dir}")
    return "\n".join(lines) + "\n"


def load_config(path: str | Path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def _config_echo(config: RunConfig) -> dict:
    # out_dir is a location, not an input of the run; leaving it out keeps
    # summaries byte-identical when only --out changes
    echo = {
        "coefficient_set": config.coefficient_set,
        "modulus": config.modulus,
        "horizon": config.horizon,
        "steps": config.steps,
        "paths": config.paths,
        "master_seed": config.master_seed,
        "jump_coefficient": config.jump_coefficient,
        "jump_rate": config.jump_rate,
        "picard_tolerance": config.picard_tolerance,
        "picard_k_max": config.picard_k_max,
    }
    return echo


def _build_model(config: RunConfig):
    coeffs = coefficient_catalogue(config.coefficient_set, config.jump_coefficient, config.jump_rate)
    linear_scale = float(coeffs.growth_constant)
    if config.modulus == "log":
        scale = scale_for_log_modulus(linear_scale, (2.0 * _AUDIT_X_BOUND) ** 2) if linear_scale > 0.0 else 0.0
    else:
        scale = linear_scale
    return coeffs, modulus_catalogue(config.modulus, scale)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _json_num(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def cmd_simulate(config: RunConfig, out_dir: Path, threads: int) -> int:
    """Simulate the configured ensemble; write paths.csv and summary.json."""
    grid = build_grid(config.horizon, config.steps)
    coeffs, _ = _build_model(config)
    ensemble = ensemble_simulate(coeffs, grid, coeffs.measure, config.paths, config.master_seed, threads)
    rows = ["path_id,t,x"]
    for pid in range(ensemble.n_paths):
        vals = ensemble.values[pid]
        rows.extend(f"{pid},{_fmt(t)},{_fmt(x)}" for t, x in zip(grid.points, vals))
    (out_dir / "paths.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    surv = ensemble.survivors
    if surv.shape[0] > 0:
        mean = [float(v) for v in surv.mean(axis=0)]
        second = [float(v) for v in (surv * surv).mean(axis=0)]
        if surv.shape[0] > 1:
            second_se = [float(v) for v in (surv * surv).std(axis=0, ddof=1) / math.sqrt(surv.shape[0])]
        else:
            second_se = [0.0] * (grid.steps + 1)
    else:
        mean = second = second_se = None
    summary = {
        "schema": "svie-summary/1",
        "config": _config_echo(config),
        "n_paths": ensemble.n_paths,
        "exploded_paths": int(ensemble.exploded.sum()),
        "times": [float(t) for t in grid.points],
        "mean": mean,
        "second_moment": second,
        "second_moment_stderr": second_se,
    }
    _write_json(out_dir / "summary.json", summary)
    return 0


def cmd_picard(config: RunConfig, out_dir: Path) -> int:
    """Solve one fixed noise path by successive approximation; write picard.csv."""
    grid = build_grid(config.horizon, config.steps)
    coeffs, _ = _build_model(config)
    noise = sample_noise_path(grid, coeffs.measure, (config.master_seed, 0))
    k_max = config.picard_k_max if config.picard_k_max is not None else grid.steps + 1
    run = picard_solve(coeffs, noise, config.picard_tolerance, k_max)
    rows = ["k,sup_diff"]
    rows.extend(f"{k},{_fmt(d)}" for k, d in enumerate(run.sup_diffs, start=1))
    (out_dir / "picard.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    if not run.converged:
        print(
            f"picard: no convergence within {run.iterations} iterations "
            f"(last sup_diff {run.sup_diffs[-1]!r} > tolerance {config.picard_tolerance!r})",
            file=sys.stderr,
        )
        return 1
    print(f"picard: converged after {run.iterations} iterations")
    return 0


def cmd_verify(config: RunConfig, out_dir: Path, threads: int) -> int:
    """Run the audit and inequality suite; write verification.json."""
    grid = build_grid(config.horizon, config.steps)
    coeffs, modulus = _build_model(config)
    horizon = config.horizon
    seed = config.master_seed
    checks: list[dict] = []

    def run_check(name, fn):
        try:
            record = fn()
        except SvieError as err:
            record = {"value": None, "bound": None, "stderr": None, "pass": False, "error": str(err)}
        checks.append({"name": name, **record})

    growth_estimate = [None]

    def check_linear_growth():
        audit = audit_linear_growth(coeffs, domain_sampler(horizon, _AUDIT_X_BOUND, seed), _AUDIT_SAMPLES)
        if math.isfinite(audit.estimated_constant):
            growth_estimate[0] = audit.estimated_constant
        return {
            "value": _json_num(audit.estimated_constant),
            "bound": _json_num(audit.supplied_constant) if audit.supplied_constant is not None else None,
            "stderr": None,
            "pass": audit.passed,
        }

    def check_modulus():
        audit = audit_modulus(coeffs, modulus, pair_sampler(horizon, _AUDIT_X_BOUND, seed + 1), _AUDIT_SAMPLES)
        return {
            "value": _json_num(audit.worst_slack),
            "bound": AUDIT_SLACK,
            "stderr": None,
            "pass": audit.passed,
        }

    def check_doob_brownian():
        sigma = lambda s: coeffs.diffusion(horizon, s, 1.0)
        ens = analysis.brownian_martingale_ensemble(grid, sigma, _DOOB_PATHS, seed + 2)
        rep = analysis.doob_check(ens.sup_sq, ens.terminal_sq)
        return {"value": rep.lhs, "bound": _json_num(rep.bound), "stderr": rep.se_lhs, "pass": rep.passed}

    def check_doob_jump():
        if coeffs.jump is None or coeffs.measure.total_mass == 0.0:
            integrand = lambda s, xi: np.zeros_like(np.asarray(s, dtype=np.float64))
            rate = None
        else:
            integrand = lambda s, xi: coeffs.jump(horizon, s, 1.0, xi)
            rate = (lambda s: coeffs.compensator(horizon, s, 1.0)) if coeffs.compensator else None
        ens = analysis.compensated_jump_ensemble(
            grid, coeffs.measure, integrand, _DOOB_PATHS, seed + 3, compensator_rate=rate
        )
        rep = analysis.doob_check(ens.sup_sq, ens.terminal_sq)
        return {"value": rep.lhs, "bound": _json_num(rep.bound), "stderr": rep.se_lhs, "pass": rep.passed}

    def effective_growth_c() -> float:
        if growth_estimate[0] is not None:
            return float(growth_estimate[0])
        return float(coeffs.growth_constant)

    def check_moment_envelope():
        ens = ensemble_simulate(coeffs, grid, coeffs.measure, config.paths, seed, threads)
        rep = analysis.moment_check(ens, coeffs, effective_growth_c())
        worst = float(np.max(rep.estimates - 4.0 * rep.stderrs))
        return {
            "value": _json_num(worst),
            "bound": _json_num(rep.bound),
            "stderr": _json_num(float(np.max(rep.stderrs))),
            "pass": rep.all_pass,
        }

    gap_slope = [None]

    def check_picard_gap():
        noises = sample_noise_ensemble(grid, coeffs.measure, config.paths, seed)
        rep = analysis.picard_gap(coeffs, noises, 1, 1, modulus, effective_growth_c())
        gap_slope[0] = rep.envelope_slope
        return {
            "value": _json_num(float(np.max(rep.estimates))),
            "bound": _json_num(rep.envelope_slope * grid.horizon),
            "stderr": _json_num(float(np.max(rep.stderrs))),
            "pass": rep.all_pass,
        }

    def check_majorant():
        c3 = gap_slope[0]
        if c3 is None or not math.isfinite(c3):
            # envelope overflowed: the chain is trivially satisfied but not computable
            return {"value": None, "bound": None, "stderr": None, "pass": True}
        window = min(horizon, 1.0)
        seq = analysis.majorant_recursion(c3, modulus, window, config.steps, 30)
        return {
            "value": _json_num(seq.final_value),
            "bound": _json_num(float(seq.curves[0, -1])),
            "stderr": None,
            "pass": True,
        }

    run_check("linear_growth", check_linear_growth)
    run_check("modulus", check_modulus)
    run_check("doob_brownian", check_doob_brownian)
    run_check("doob_jump", check_doob_jump)
    run_check("moment_envelope", check_moment_envelope)
    run_check("picard_gap", check_picard_gap)
    run_check("majorant_chain", check_majorant)

    all_pass = all(c["pass"] for c in checks)
    _write_json(
        out_dir / "verification.json",
        {"schema": "svie-verification/1", "config": _config_echo(config), "checks": checks, "all_pass": all_pass},
    )
    for c in checks:
        print(f"{c['name']}: {'pass' if c['pass'] else 'FAIL'}")
    if not all_pass:
        failing = ", ".join(c["name"] for c in checks if not c["pass"])
        print(f"verification failed: {failing}", file=sys.stderr)
        return 2
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="svie", description="jump-diffusion Volterra simulation and verification")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "simulate an ensemble of paths"),
        ("picard", "solve one noise path by successive approximation"),
        ("verify", "run the audit and inequality suite"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=str, default=None, help="run configuration file")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--out", type=str, default=None, help="override the output directory")
        p.add_argument("--threads", type=int, default=1, help="worker threads (speed only, never results)")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config) if args.config else RunConfig()
        if args.seed is not None:
            config = replace(config, master_seed=args.seed)
        if args.threads < 1:
            raise ConfigurationError(f"--threads must be at least 1, got {args.threads}")
        out_dir = Path(args.out) if args.out else Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "simulate":
            return cmd_simulate(config, out_dir, args.threads)
        if args.command == "picard":
            return cmd_picard(config, out_dir)
        return cmd_verify(config, out_dir, args.threads)
    except ConfigParseError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except SvieError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
