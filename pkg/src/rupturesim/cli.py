"""Batch command-line entry point.

Subcommands: ``simulate`` (rupture-punctuated evolution), ``bounds``
(closed-form rupture-time bounds), ``stationary`` (profile dump and
localization check), ``find-periodic`` (return-map fixed-point search),
and ``verify`` (two-period certification of an emitted fixed profile).

Exit codes: 0 success, 1 model violation (or failed verification),
2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import ModelConfig, config_from_dict, config_to_dict, validate
from .errors import (
    ConfigError,
    DomainError,
    ModelViolationError,
    ParseError,
    SimulationError,
)
from .rupture import run_with_rupture, rupture_time_bounds
from .solver import CoupledState, Field, build_grid, constant_field
from .periodic import find_periodic, splice, distinguished_interval, verify_periodic
from . import stationary

PRESETS: dict[str, dict] = {
    "ex1": {
        "omega": 1.0,
        "junctions": [0.1, 0.6, 0.9],
        "jump_strengths": [1.0, 1.0, 1.0],
        "forcing_offset": 3.0,
        "sigma1": 1.0,
        "sigma2": 1.0,
        "tau": 1.0,
        "alpha": 1.0,
        "eta_c": 0.03e-12,
        "eta_a": 0.03,
        "d": 0.1,
        "mode": "decoupled",
        "reduction_case": "case_i",
    },
    "ex2": {
        "omega": 1.0,
        "junctions": [0.1, 0.6, 0.9],
        "jump_strengths": [1.0, 1.0, 1.0],
        "forcing_offset": 3.0,
        "sigma1": 1.0,
        "sigma2": 1.0,
        "tau": 1.0,
        "alpha": 60.0,
        "eta_c": 0.003,
        "eta_a": 0.03,
        "d": 0.1,
        "mode": "decoupled",
        "reduction_case": "case_i",
    },
    "ex3": {
        "omega": 1.0,
        "junctions": [0.1, 0.6, 0.9],
        "jump_strengths": [1.0, 1.0, 1.0],
        "forcing_offset": 3.0,
        "sigma1": 0.5,
        "sigma2": 1.0,
        "tau": 1.0,
        "alpha": 1.0,
        "eta_c": 0.03e-12,
        "eta_a": 0.03,
        "d": 0.1,
        "mode": "coupled",
        "reduction_case": "case_i",
    },
}

COMMANDS = ("simulate", "bounds", "stationary", "find-periodic", "verify")


@dataclass(frozen=True)
class RunManifest:
    """Everything one invocation needs; presets are ex1/ex2/ex3."""

    command: str
    config_source: str
    output_dir: Path
    overrides: tuple[tuple[str, object], ...] = ()
    max_events: int | None = None
    t_end: float | None = None
    eta0: str | None = None
    fp_tol: float | None = None
    max_iter: int | None = None


def preset_config(name: str, overrides: tuple[tuple[str, object], ...] = ()) -> ModelConfig:
    if name not in PRESETS:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    raw = json.loads(json.dumps(PRESETS[name]))
    return config_from_dict(_apply_overrides(raw, overrides))


def _apply_overrides(raw: dict, overrides) -> dict:
    for key, value in overrides:
        parts = key.split(".")
        target = raw
        for part in parts[:-1]:
            target = target.setdefault(part, {})
            if not isinstance(target, dict):
                raise DomainError(f"override path {key!r} does not address an object")
        target[parts[-1]] = value
    return raw


def parse_override(text: str) -> tuple[str, object]:
    if "=" not in text:
        raise DomainError(f"override {text!r} is not of the form key=value")
    key, _, value = text.partition("=")
    try:
        parsed: object = json.loads(value)
    except json.JSONDecodeError:
        parsed = value
    return key.strip(), parsed


def resolve_config(manifest: RunManifest) -> ModelConfig:
    if manifest.config_source in PRESETS:
        return preset_config(manifest.config_source, manifest.overrides)
    text = Path(manifest.config_source).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{manifest.config_source}: {exc}") from exc
    return config_from_dict(_apply_overrides(raw, manifest.overrides))


def make_initial_field(spec: str | None, grid, config: ModelConfig) -> Field:
    """Initial-condition mini-language: ``const:<v>`` or
    ``const_plus_sine:<v>,<amp>,<freq>`` (freq in periods per domain)."""
    if spec is None:
        spec = f"const:{config.eta_a!r}"
    kind, _, args = spec.partition(":")
    try:
        if kind == "const":
            return constant_field(grid, float(args))
        if kind == "const_plus_sine":
            base_s, amp_s, freq_s = args.split(",")
            base, amp, freq = float(base_s), float(amp_s), float(freq_s)
            values = base + amp * np.sin(2.0 * np.pi * freq * grid.nodes / grid.omega)
            return Field(grid, values, 0.0)
    except ValueError as exc:
        raise DomainError(f"bad initial-condition spec {spec!r}: {exc}") from exc
    raise DomainError(f"unknown initial-condition kind {kind!r}")


def write_profile_csv(path: Path, xs: np.ndarray, values: np.ndarray, value_name: str = "value") -> None:
    lines = [f"x,{value_name}"]
    lines.extend(f"{x:.17g},{v:.17g}" for x, v in zip(xs, values))
    path.write_text("\n".join(lines) + "\n")


def read_profile_csv(path: Path, grid) -> Field:
    rows = np.loadtxt(path, delimiter=",", skiprows=1)
    if rows.ndim != 2 or rows.shape[0] != grid.n:
        raise DomainError(f"{path}: expected {grid.n} rows of x,value")
    return Field(grid, rows[:, 1].copy(), 0.0)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _write_manifest(manifest: RunManifest, config: ModelConfig) -> None:
    _write_json(
        manifest.output_dir / "manifest.json",
        {
            "command": manifest.command,
            "config_source": manifest.config_source,
            "overrides": [list(pair) for pair in manifest.overrides],
            "config": config_to_dict(config),
        },
    )


def _initial_state(config: ModelConfig, grid, eta0_spec: str | None):
    """Initial simulation state; coupled runs start from a flat height."""
    eta0 = make_initial_field(eta0_spec, grid, config)
    if config.mode == "coupled":
        h0 = constant_field(grid, 0.0)
        return CoupledState(h0, Field(grid, h0.values + eta0.values, 0.0))
    return eta0


def _cmd_simulate(manifest: RunManifest, config: ModelConfig) -> int:
    grid = build_grid(config)
    state = _initial_state(config, grid, manifest.eta0)
    events, final = run_with_rupture(
        config, state, max_events=manifest.max_events, t_end=manifest.t_end
    )

    out = manifest.output_dir
    records = []
    for j, event in enumerate(events, start=1):
        pre_name = f"profile_eta_pre_ev{j:04d}.csv"
        post_name = f"profile_eta_post_ev{j:04d}.csv"
        write_profile_csv(out / pre_name, grid.nodes, event.pre_profile.values)
        write_profile_csv(out / post_name, grid.nodes, event.post_profile.values)
        if event.post_h is not None:
            write_profile_csv(
                out / f"profile_h_post_ev{j:04d}.csv", grid.nodes, event.post_h.values
            )
        records.append(
            {
                "j": j,
                "t": event.time,
                "reset_intervals": list(event.reset_intervals),
                "min_eta": float(np.min(event.pre_profile.values)),
                "pre_csv": pre_name,
                "post_csv": post_name,
            }
        )
    (out / "events.jsonl").write_text(
        "".join(json.dumps(record) + "\n" for record in records)
    )

    if isinstance(final, CoupledState):
        write_profile_csv(out / "profile_eta_final.csv", grid.nodes, final.eta.values)
        write_profile_csv(out / "profile_h_final.csv", grid.nodes, final.h.values)
        write_profile_csv(out / "profile_zeta_final.csv", grid.nodes, final.zeta.values)
        final_time = final.time
    else:
        write_profile_csv(out / "profile_eta_final.csv", grid.nodes, final.values)
        final_time = final.time
    _write_json(
        out / "report.json",
        {"command": "simulate", "events": len(records), "final_time": final_time},
    )
    return 0


def _cmd_bounds(manifest: RunManifest, config: ModelConfig) -> int:
    grid = build_grid(config)
    eta0 = make_initial_field(manifest.eta0, grid, config)
    report = rupture_time_bounds(config, eta0)
    _write_json(
        manifest.output_dir / "report.json",
        {
            "command": "bounds",
            "t_lower": report.t_lower,
            "t_upper": report.t_upper,
            "lower_applicable": report.lower_applicable,
            "upper_applicable": report.upper_applicable,
        },
    )
    return 0


def _cmd_stationary(manifest: RunManifest, config: ModelConfig) -> int:
    grid = build_grid(config)
    if config.alpha > 0.0:
        profile = stationary.solve_stationary(config)
        report = stationary.check_condition_S(profile, config)
        payload = {
            "command": "stationary",
            "condition_S_holds": report.condition_S_holds,
            "rupture_interval_index": report.rupture_interval_index,
            "eta_a_clearance": report.eta_a_clearance,
            "min_per_interval": [list(pair) for pair in report.min_per_interval],
        }
    else:
        profile = stationary.solve_stationary_alpha0(config)
        payload = {
            "command": "stationary",
            "condition_S_holds": None,
            "note": "localization check refused for the alpha = 0 profile family",
        }
    values = stationary.eval_stationary(profile, grid.nodes)
    write_profile_csv(manifest.output_dir / "stationary.csv", grid.nodes, values, "s")
    _write_json(manifest.output_dir / "report.json", payload)
    return 0


def _cmd_find_periodic(manifest: RunManifest, config: ModelConfig) -> int:
    grid = build_grid(config)
    xi0 = make_initial_field(manifest.eta0, grid, config)
    max_iter = manifest.max_iter if manifest.max_iter is not None else 50
    report = find_periodic(config, xi0, fp_tol=manifest.fp_tol, max_iter=max_iter)

    out = manifest.output_dir
    profile = stationary.solve_stationary(config)
    index = distinguished_interval(profile, config)
    rows = []
    for m, t_r, sup_diff in report.iterates:
        rows.append({"m": m, "t_r": t_r, "sup_diff": sup_diff})
    fixed_name = "fixed_profile.csv"
    write_profile_csv(out / fixed_name, grid.nodes, report.fixed_profile.values)
    post = splice(report.fixed_profile, config, index)
    write_profile_csv(out / "profile_eta_post_fixed.csv", grid.nodes, post.values)
    _write_json(
        out / "report.json",
        {
            "command": "find-periodic",
            "converged": report.converged,
            "period": report.period,
            "distinguished_interval": index,
            "iterates": rows,
            "fixed_csv": fixed_name,
        },
    )
    return 0


def _cmd_verify(manifest: RunManifest, config: ModelConfig) -> int:
    out = manifest.output_dir
    report_path = out / "report.json"
    if report_path.exists():
        previous = json.loads(report_path.read_text())
        if previous.get("command") == "find-periodic" and not previous.get("converged", False):
            print("verify: fixed-point search did not converge", file=sys.stderr)
            return 1
    grid = build_grid(config)
    fixed = read_profile_csv(out / "fixed_profile.csv", grid)
    tol = manifest.fp_tol if manifest.fp_tol is not None else 1.0e-5
    ok = verify_periodic(config, fixed, tol)
    _write_json(
        out / "verify_report.json",
        {"command": "verify", "verified": ok, "tol": tol},
    )
    if not ok:
        print("verify: orbit failed the two-period check", file=sys.stderr)
        return 1
    return 0


_DISPATCH = {
    "simulate": _cmd_simulate,
    "bounds": _cmd_bounds,
    "stationary": _cmd_stationary,
    "find-periodic": _cmd_find_periodic,
    "verify": _cmd_verify,
}


def run(manifest: RunManifest) -> int:
    """Execute one command; exceptions are mapped onto the exit codes."""
    try:
        manifest.output_dir.mkdir(parents=True, exist_ok=True)
        config = resolve_config(manifest)
        _write_manifest(manifest, config)
        report = validate(config)
        if manifest.command == "simulate" and not report.condition_C_holds:
            print(
                "warning: sign condition on the forcing fails; "
                "rupture times are not guaranteed finite",
                file=sys.stderr,
            )
        return _DISPATCH[manifest.command](manifest, config)
    except ModelViolationError as exc:
        print(f"model violation: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (SimulationError, FileNotFoundError, OSError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rupturesim",
        description="Simulate a periodically forced diffusing liquid layer with rupture resets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        source = p.add_mutually_exclusive_group(required=True)
        source.add_argument("--preset", choices=sorted(PRESETS))
        source.add_argument("--config", help="path to a scenario JSON file")
        p.add_argument("--out", default="out", help="output directory (created if absent)")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a scenario field (dotted keys reach numerics)",
        )
        p.add_argument("--max-events", type=int)
        p.add_argument("--t-end", type=float)
        p.add_argument("--eta0", help="initial condition, e.g. const:0.03")
        p.add_argument("--fp-tol", type=float)
        p.add_argument("--max-iter", type=int)
    return parser


def manifest_from_args(args: argparse.Namespace) -> RunManifest:
    overrides = tuple(parse_override(text) for text in args.overrides)
    return RunManifest(
        command=args.command,
        config_source=args.preset if args.preset else args.config,
        output_dir=Path(args.out),
        overrides=overrides,
        max_events=args.max_events,
        t_end=args.t_end,
        eta0=args.eta0,
        fp_tol=args.fp_tol,
        max_iter=args.max_iter,
    )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = manifest_from_args(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
