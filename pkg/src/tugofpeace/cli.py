"""Command-line entry points.

Verbs:
  run       run one experiment, write aggregate.csv / summary.json
            (and traces.csv when enabled)
  oracle    equilibrium report for the configured scenario
  check     run + oracle cross-check; exit 3 when the check fails
  validate  tug-of-war condition sweep; exit 3 on violations

Exit codes: 0 success, 1 usage or config error, 2 runtime failure,
3 cross-check or validation failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .core import sample_targets
from .harness import (
    ConfigError,
    cross_check,
    emit_csv,
    parse_config,
    run_experiment,
    run_tow_validation,
    serialize_config,
)
from .oracle import integrate_ode, minimal_equilibrium, power_control_equilibrium_linear
from .scenarios import PowerControlInstance, instance_to_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tugofpeace",
        description="QoS-learning simulator for tug-of-war games, with equilibrium oracles",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, summary in (
        ("run", "run one experiment and write CSV outputs"),
        ("oracle", "compute the equilibrium report for the configured scenario"),
        ("check", "run the experiment and cross-check it against the oracle"),
        ("validate", "sweep the tug-of-war condition on the configured scenario"),
    ):
        cmd = sub.add_parser(verb, help=summary)
        cmd.add_argument("--config", required=True, metavar="PATH", help="JSON config file")
        cmd.add_argument("--seed", type=int, default=None, help="override base_seed")
        cmd.add_argument("--out", default=None, metavar="DIR", help="override output dir")
        cmd.add_argument("--realizations", type=int, default=None, help="override realizations")
        cmd.add_argument("--threads", type=int, default=1, help="realization fan-out threads")
    return parser


def _load_config(args):
    text = Path(args.config).read_text()
    config = parse_config(text)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed: must be non-negative")
        config = replace(config, base_seed=args.seed)
    if args.realizations is not None:
        if args.realizations < 1:
            raise ConfigError("--realizations: must be at least 1")
        config = replace(config, realizations=args.realizations)
    if getattr(args, "threads", 1) < 1:
        raise ConfigError("--threads: must be at least 1")
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    return config


def _out_dir(config) -> Path:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _dump_json(payload, path: Path):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_run_outputs(config, result, out: Path):
    (out / "config.json").write_text(serialize_config(config) + "\n")
    emit_csv(result.stats, out / "aggregate.csv")
    if config.write_traces:
        emit_csv(result.traces, out / "traces.csv")
    _dump_json(
        {"realizations": [summary.to_dict() for summary in result.summaries]},
        out / "summary.json",
    )


def _spectrum_payload(report):
    if report.spectrum is None:
        return None
    return {
        "eigenvalues": {
            str(game): [[v.real, v.imag] for v in values]
            for game, values in report.spectrum.eigenvalues.items()
        },
        "max_real": report.spectrum.max_real,
        "min_abs_real": report.spectrum.min_abs_real,
        "hyperbolic": report.spectrum.hyperbolic,
    }


def _cmd_run(args) -> int:
    config = _load_config(args)
    result = run_experiment(config, threads=args.threads)
    _write_run_outputs(config, result, _out_dir(config))
    print(f"wrote {config.realizations} realizations to {config.output_dir}")
    return 0


def _cmd_oracle(args) -> int:
    config = _load_config(args)
    streams = np.random.SeedSequence(config.base_seed).spawn(4)
    field_obj = config.scenario.sample(np.random.default_rng(streams[0]))
    lam_bar = sample_targets(config.targets(), np.random.default_rng(streams[1])).lam_bar
    if config.oracle_assignment is not None:
        assignment = np.asarray(config.oracle_assignment, dtype=np.int64)
    else:
        assignment = (np.arange(field_obj.n_players) % field_obj.n_games) + 1
    ode_report = minimal_equilibrium(field_obj, assignment, lam_bar)
    payload = {
        "assignment": assignment.tolist(),
        "lambda_bar": lam_bar.tolist(),
        "instance": instance_to_config(field_obj),
        "ode": {
            "status": ode_report.status,
            "equilibrium": None if ode_report.equilibrium is None else ode_report.equilibrium.tolist(),
            "residual_inf": ode_report.residual_inf,
            "interior": ode_report.interior,
            "minimal": ode_report.minimal,
            "spectrum": _spectrum_payload(ode_report),
        },
    }
    if isinstance(field_obj, PowerControlInstance):
        linear = power_control_equilibrium_linear(field_obj, assignment, lam_bar)
        payload["linear"] = {
            "status": linear.status,
            "equilibrium": linear.equilibrium.tolist(),
            "residual_inf": linear.residual_inf,
            "interior": linear.interior,
        }
        if linear.status == "converged" and ode_report.status == "converged":
            payload["oracle_agreement_inf"] = float(
                np.max(np.abs(linear.equilibrium - ode_report.equilibrium))
            )
    out = _out_dir(config)
    _dump_json(payload, out / "oracle_report.json")
    print(f"oracle status: {payload['ode']['status']} (report in {out}/oracle_report.json)")
    return 0


def _cmd_check(args) -> int:
    config = _load_config(args)
    result = run_experiment(config, threads=args.threads)
    report = cross_check(config, result=result)
    out = _out_dir(config)
    _write_run_outputs(config, result, out)
    _dump_json(report.to_dict(), out / "check_report.json")
    fractions = {k: v for k, v in report.fractions.items() if v is not None}
    print(f"cross-check {'PASS' if report.overall_pass else 'FAIL'}: {fractions}")
    return 0 if report.overall_pass else 3


def _cmd_validate(args) -> int:
    config = _load_config(args)
    report, field_obj, assignment = run_tow_validation(config)
    payload = {
        "ok": report.ok,
        "points": int(report.estimates.shape[0]),
        "step": report.step,
        "tolerance": report.tolerance,
        "same_game_violations": report.same_game_violations,
        "cross_game_violations": report.cross_game_violations,
        "assignment": assignment.tolist(),
        "instance": instance_to_config(field_obj),
    }
    out = _out_dir(config)
    _dump_json(payload, out / "validate_report.json")
    print(
        f"tow-condition sweep {'PASS' if report.ok else 'FAIL'}: "
        f"{len(report.same_game_violations)} same-game, "
        f"{len(report.cross_game_violations)} cross-game violations"
    )
    return 0 if report.ok else 3


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handler = {
        "run": _cmd_run,
        "oracle": _cmd_oracle,
        "check": _cmd_check,
        "validate": _cmd_validate,
    }[args.verb]
    try:
        return handler(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure: report, distinct exit code
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def entrypoint():
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
