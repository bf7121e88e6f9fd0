"""Command-line front end.

Five commands cover the pipeline: build the capability table, evaluate the
closed-form nadir, schedule the minimum commitment, run one event in
closed loop, and sweep recovery times. Every command is deterministic:
identical inputs produce byte-identical output files.

Exit codes: 0 success, 2 configuration or input error, 3 infeasible
schedule, 4 rotor-security violation.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import __version__
from .config import (
    StudyConfig,
    build_scenario,
    default_config_path,
    load_study,
)
from .cosim import recovery_sweep, run_scenario
from .dispatch import format_schedule_csv, min_commitment, read_fleet_csv
from .errors import ConfigError, DomainError, RotorSecurityError
from .sfr import derived_constants, nadir_closed_form, settling_frequency
from .surge import build_table, format_table_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_ROTOR_SECURITY = 4

CONFIG_DIR_ENV = "WINDSURGE_CONFIG_DIR"


@dataclass(frozen=True)
class RunManifest:
    command: str
    config_path: str
    output_dir: str
    deterministic: bool
    tool_version: str

    def to_json(self) -> str:
        return json.dumps({
            "command": self.command,
            "config_path": self.config_path,
            "output_dir": self.output_dir,
            "deterministic": self.deterministic,
            "tool_version": self.tool_version,
        }, indent=2, sort_keys=True) + "\n"


def _resolve_config(arg: str | None) -> Path:
    if arg is not None:
        return Path(arg)
    env_dir = os.environ.get(CONFIG_DIR_ENV)
    if env_dir:
        return Path(env_dir) / "default.yaml"
    return default_config_path()


def _write(path: Path, text: str, force: bool) -> None:
    if path.exists() and not force:
        raise ConfigError(f"refusing to overwrite {path} (use --force)")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _emit_manifest(command: str, config_path: Path, out_dir: Path,
                   force: bool) -> None:
    manifest = RunManifest(command=command, config_path=str(config_path),
                           output_dir=str(out_dir), deterministic=True,
                           tool_version=__version__)
    _write(out_dir / f"manifest_{command}.json", manifest.to_json(), force)


def _load(args) -> tuple[StudyConfig, Path]:
    cfg_path = _resolve_config(args.config)
    return load_study(cfg_path), cfg_path


def cmd_table(args) -> int:
    study, cfg_path = _load(args)
    rows = build_table(study.table_speeds, study.t_del, study.turbine)
    out_dir = Path(args.out)
    _write(out_dir / "lookup_table.csv", format_table_csv(rows), args.force)
    _emit_manifest("table", cfg_path, out_dir, args.force)
    print(f"wrote {out_dir / 'lookup_table.csv'} ({len(rows)} rows, "
          f"t_del={study.t_del} s)")
    return EXIT_OK


def cmd_nadir(args) -> int:
    study, cfg_path = _load(args)
    f_min, t_n = nadir_closed_form(study.sfr, study.delta_p_loss)
    f_ss = settling_frequency(study.sfr, study.delta_p_loss)
    der = derived_constants(study.sfr)
    out_dir = Path(args.out)
    csv_text = ("delta_p_loss,f_min_hz,t_n_s,f_settle_hz\n"
                f"{study.delta_p_loss:.6f},{f_min:.6f},{t_n:.6f},{f_ss:.6f}\n")
    _write(out_dir / "nadir.csv", csv_text, args.force)
    _emit_manifest("nadir", cfg_path, out_dir, args.force)
    print(f"loss {study.delta_p_loss!r} pu -> f_min {f_min!r} Hz at "
          f"t_n {t_n!r} s, settling {f_ss!r} Hz")
    print(f"omega_n {der.omega_n!r} rad/s, xi {der.xi!r}, "
          f"omega_d {der.omega_d!r} rad/s")
    return EXIT_OK


def cmd_schedule(args) -> int:
    fleet = read_fleet_csv(args.fleet_csv)
    if args.uplift is None:
        raise ConfigError("schedule requires --uplift (Hz)")
    schedule = min_commitment(fleet, args.uplift)
    out_dir = Path(args.out)
    _write(out_dir / "schedule.csv", format_schedule_csv(schedule, fleet),
           args.force)
    _emit_manifest("schedule", Path(args.fleet_csv), out_dir, args.force)
    if not schedule.feasible:
        print(f"INFEASIBLE: all {len(fleet)} units reach only "
              f"{schedule.predicted_uplift!r} Hz of the required "
              f"{schedule.required_uplift!r} Hz")
        return EXIT_INFEASIBLE
    names = ", ".join(schedule.committed) if schedule.committed else "(none)"
    print(f"commit {len(schedule.committed)} unit(s): {names}")
    print(f"predicted uplift {schedule.predicted_uplift!r} Hz >= required "
          f"{schedule.required_uplift!r} Hz")
    return EXIT_OK


def cmd_simulate(args) -> int:
    study, cfg_path = _load(args)
    scenario = build_scenario(study, dt=args.dt)
    trace, metrics = run_scenario(scenario)
    out_dir = Path(args.out)
    _write(out_dir / "trace.csv", trace.to_csv(), args.force)
    _write(out_dir / "metrics.txt", metrics.format_block(), args.force)
    _write(out_dir / "metrics.csv", metrics.to_csv(), args.force)
    _emit_manifest("simulate", cfg_path, out_dir, args.force)
    sys.stdout.write(metrics.format_block())
    if trace.t_activation is not None:
        print(f"support activated at t={trace.t_activation!r} s")
    return EXIT_OK


def cmd_sweep(args) -> int:
    study, cfg_path = _load(args)
    try:
        values = [float(v) for v in args.t_rec.split(",")]
    except ValueError as exc:
        raise ConfigError(f"bad --t-rec list '{args.t_rec}': {exc}") from exc
    scenario = build_scenario(study, dt=args.dt)
    results = recovery_sweep(scenario, values)
    lines = ["t_rec,second_dip_nadir,time_to_settle"]
    for row in results:
        dip = "" if row["second_dip_nadir"] is None else f"{row['second_dip_nadir']:.6f}"
        lines.append(f"{row['t_rec']:.6f},{dip},{row['time_to_settle']:.6f}")
    out_dir = Path(args.out)
    _write(out_dir / "sweep.csv", "\n".join(lines) + "\n", args.force)
    _emit_manifest("sweep", cfg_path, out_dir, args.force)
    for row in results:
        print(f"t_rec={row['t_rec']:g}s second_dip="
              f"{row['second_dip_nadir']!r} Hz time_to_settle="
              f"{row['time_to_settle']!r} s")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="windsurge",
        description="Fast-frequency-response planning for DFIG wind fleets")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", help="study YAML (default: "
                           f"${CONFIG_DIR_ENV}/default.yaml, else packaged)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--force", action="store_true",
                       help="overwrite existing output files")

    p = sub.add_parser("table", help="capability lookup table over wind speeds")
    common(p)
    p.set_defaults(func=cmd_table)

    p = sub.add_parser("nadir", help="closed-form nadir of the configured event")
    common(p)
    p.set_defaults(func=cmd_nadir)

    p = sub.add_parser("schedule", help="minimum commitment from a fleet CSV")
    p.add_argument("fleet_csv", help="CSV with id,v_w,delta_p_max,sensitivity")
    p.add_argument("--uplift", type=float, required=True,
                   help="required nadir uplift, Hz")
    common(p, needs_config=False)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("simulate", help="closed-loop event simulation")
    common(p)
    p.add_argument("--dt", type=float, default=None,
                   help="override the integration step, s")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="recovery-time trade-off sweep")
    common(p)
    p.add_argument("--dt", type=float, default=None,
                   help="override the integration step, s")
    p.add_argument("--t-rec", default="10,20,40",
                   help="comma-separated recovery durations, s")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except RotorSecurityError as exc:
        print(f"rotor-security violation: {exc}", file=sys.stderr)
        return EXIT_ROTOR_SECURITY
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
