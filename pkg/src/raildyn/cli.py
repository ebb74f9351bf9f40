"""Command-line entry point: ``raildyn <command> [options]``.

Commands write their artifacts into the output directory (``--out``, the
config's ``[outputs] directory`` or ``$RAILDYN_OUT``) and finish with a
``run.json`` manifest of the resolved parameters.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig, load_config, parse_range, track_to_table_units
from .eigen import modal_decompose
from .errors import CalibrationError, ConfigError, LoadPlacementError, NumericalError, RailDynError
from .loading import PulseLoad, load_dof_index, tonnes_to_newtons
from .postprocess import CASES, format_percent, peak_summary, repartition_table, substructure_forces
from .reports import fmt, response_header, write_csv, write_manifest
from .solvers import ResponseHistory, TimeGrid, solve
from .track_model import AssembledSystem, assemble_track, calibrate_element_length

logger = logging.getLogger("raildyn")

PULSE_TAGS = {"rectangular": "rect", "half_sine": "sine"}


# --------------------------------------------------------------------------
# scenario helpers
# --------------------------------------------------------------------------

def resolve_track(config: ScenarioConfig) -> tuple[ScenarioConfig, str]:
    """Apply the optional element-length calibration; returns (config, L source)."""
    if config.calibrate_hz is None:
        return config, "configured"
    result = calibrate_element_length(config.track, config.calibrate_hz, mode=config.calibrate_mode)
    return replace(config, track=config.track.with_length(result.L)), "calibrated"


def _pulse(config: ScenarioConfig, kind: str | None = None) -> PulseLoad:
    return PulseLoad(kind or config.pulse_kind, config.P0, config.t_d, config.omega)


def _grid(config: ScenarioConfig) -> TimeGrid:
    return TimeGrid.for_pulse(config.t_d, config.dt, config.duration)


def _load_dof(config: ScenarioConfig, system: AssembledSystem) -> int:
    if config.load_dof is not None:
        return config.load_dof
    return load_dof_index(system.n_sections, system.dof_map)


def _sleeper_under(system: AssembledSystem, dof: int) -> int:
    """1-based global DOF of the sleeper beneath (or left of) rail DOF ``dof``."""
    node = system.label(dof).number
    sleeper = (node + 1) // 2
    return int(system.sleeper_dofs()[sleeper - 1]) + 1


def select_dofs(selector: str, system: AssembledSystem, load_dof: int) -> list[int]:
    chosen: list[int] = []
    for token in (t.strip() for t in selector.split(",") if t.strip()):
        if token == "load":
            chosen.append(load_dof)
        elif token == "sleeper":
            chosen.append(_sleeper_under(system, load_dof))
        elif token == "sleepers":
            chosen.extend(int(i) + 1 for i in system.sleeper_dofs())
        elif token == "all":
            chosen.extend(range(1, system.n_dof + 1))
        else:
            try:
                index = int(token)
            except ValueError:
                raise ConfigError(f"unknown DOF selector {token!r}", "outputs.dofs") from None
            if not 1 <= index <= system.n_dof:
                raise ConfigError(f"DOF {index} outside 1..{system.n_dof}", "outputs.dofs")
            chosen.append(index)
    return sorted(set(chosen))


def _window(config: ScenarioConfig) -> float | None:
    return config.t_d if config.peak_window == "pulse" else None


def _manifest(config: ScenarioConfig, command: str, L_source: str, system=None, grid=None, extra=None) -> dict:
    track = config.effective_track
    manifest = {
        "command": command,
        "version": __version__,
        "track_si": track.as_dict(),
        "track_table_units": track_to_table_units(track),
        "L_source": L_source,
        "undamped": config.undamped,
        "n_sections": config.n_sections,
        "pulse": {
            "kind": config.pulse_kind,
            "P0_N": config.P0,
            "t_d_s": config.t_d,
            "omega_rad_per_s": _pulse(config).omega,
        },
        "method": config.method,
        "peak_window": config.peak_window,
    }
    if system is not None:
        manifest["n_dof"] = system.n_dof
    if grid is not None:
        manifest["grid"] = {"dt_s": grid.dt, "n_steps": grid.n_steps, "duration_s": grid.dt * grid.n_steps}
    if extra:
        manifest.update(extra)
    return manifest


def _write_frequencies(out: Path, system: AssembledSystem) -> Path:
    basis = modal_decompose(system.M, system.K)
    rows = [(i + 1, f, w) for i, (f, w) in enumerate(zip(basis.frequencies_hz, basis.omega))]
    return write_csv(out / "frequencies.csv", ["mode", "frequency_hz", "omega_rad_per_s"], rows)


def _write_response(path: Path, history: ResponseHistory, system: AssembledSystem, dof: int) -> Path:
    rows = zip(history.times, history.U[:, dof - 1], history.V[:, dof - 1])
    return write_csv(path, response_header(system.label(dof).kind), rows)


def _write_peaks(path: Path, history: ResponseHistory, system: AssembledSystem) -> Path:
    rows = [(p.dof, p.label, p.value, p.time) for p in peak_summary(history, system.dof_map)]
    return write_csv(path, ["dof", "label", "peak_abs_m_or_rad", "time_s"], rows)


def _write_sleeper_loads(path: Path, loads) -> Path:
    rows = zip(loads.sleepers, loads.peak, loads.percent, loads.impulse_share, loads.peak_time)
    return write_csv(path, ["sleeper", "peak_N", "percent_of_P0", "impulse_share_percent", "time_of_peak_s"], rows)


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------

def cmd_frequencies(config: ScenarioConfig) -> dict:
    config, L_source = resolve_track(config)
    system = assemble_track(config.effective_track, config.n_sections)
    out = config.out_dir
    path = _write_frequencies(out, system)
    basis = modal_decompose(system.M, system.K)
    for i, f in enumerate(basis.frequencies_hz[:10]):
        print(f"mode {i + 1:3d}: {f:12.4f} Hz")
    write_manifest(out / "run.json", _manifest(config, "frequencies", L_source, system))
    return {"frequencies": path}


def cmd_respond(config: ScenarioConfig) -> dict:
    config, L_source = resolve_track(config)
    track = config.effective_track
    system = assemble_track(track, config.n_sections)
    load_dof = _load_dof(config, system)
    grid = _grid(config)
    history = solve(system, _pulse(config), config.method, grid, load_dof=load_dof)
    out = config.out_dir
    written = {"frequencies": _write_frequencies(out, system)}
    for dof in select_dofs(config.dofs, system, load_dof):
        written[f"response_{dof}"] = _write_response(out / f"response_{dof}.csv", history, system, dof)
    written["peaks"] = _write_peaks(out / "peaks.csv", history, system)
    loads = substructure_forces(history, track, system.dof_map, config.P0, _window(config))
    written["sleeper_loads"] = _write_sleeper_loads(out / "sleeper_loads.csv", loads)
    peak = np.abs(history.U[:, load_dof - 1]).max()
    print(f"load DOF {load_dof} ({system.label(load_dof)}): peak {peak:.6e}")
    write_manifest(out / "run.json", _manifest(
        config, "respond", L_source, system, grid,
        {"load_dof": load_dof, "load_dof_label": str(system.label(load_dof))},
    ))
    return written


def cmd_compare_pulses(config: ScenarioConfig) -> dict:
    config, L_source = resolve_track(config)
    track = config.effective_track
    system = assemble_track(track, config.n_sections)
    load_dof = _load_dof(config, system)
    grid = _grid(config)
    out = config.out_dir
    histories = {}
    written = {}
    dofs = select_dofs(config.dofs, system, load_dof)
    for kind in ("rectangular", "half_sine"):
        history = solve(system, _pulse(config, kind), config.method, grid, load_dof=load_dof)
        histories[kind] = history
        tag = PULSE_TAGS[kind]
        for dof in dofs:
            written[f"response_{tag}_{dof}"] = _write_response(out / f"response_{tag}_{dof}.csv", history, system, dof)
    rect = peak_summary(histories["rectangular"], system.dof_map)
    sine = peak_summary(histories["half_sine"], system.dof_map)
    rows = []
    for r, s in zip(rect, sine):
        ratio = r.value / s.value if s.value > 0 else float("nan")
        rows.append((r.dof, r.label, r.value, s.value, r.value - s.value, ratio))
    written["compare"] = write_csv(
        out / "compare.csv",
        ["dof", "label", "peak_rect", "peak_sine", "delta_rect_minus_sine", "ratio_rect_over_sine"],
        rows,
    )
    r, s = rect[load_dof - 1], sine[load_dof - 1]
    print(f"load DOF {load_dof}: rect peak {r.value:.6e}, sine peak {s.value:.6e}, delta {r.value - s.value:.6e}")
    write_manifest(out / "run.json", _manifest(
        config, "compare-pulses", L_source, system, grid,
        {"load_dof": load_dof, "load_dof_label": str(system.label(load_dof))},
    ))
    return written


def repartition_loads(config: ScenarioConfig) -> tuple[dict, AssembledSystem]:
    """Sleeper loads for the four damped/undamped x pulse-kind cases."""
    grid = _grid(config)
    loads = {}
    system = None
    for damping, kind in CASES:
        track = config.track.undamped() if damping == "undamped" else config.track
        system = assemble_track(track, config.n_sections)
        method = config.method
        if method == "modal_undamped" and damping == "damped":
            method = "state_space"
        history = solve(system, _pulse(config, kind), method, grid, load_dof=_load_dof(config, system))
        loads[(damping, kind)] = substructure_forces(history, track, system.dof_map, config.P0, _window(config))
    return loads, system


def cmd_repartition(config: ScenarioConfig) -> dict:
    config, L_source = resolve_track(config)
    loads, system = repartition_loads(config)
    lo, hi = config.table_sleepers
    if hi > config.n_sections + 1:
        raise ConfigError(f"track has only {config.n_sections + 1} sleepers", "outputs.sleepers")
    rows = repartition_table(loads, range(lo, hi + 1))
    out = config.out_dir
    header = ["sleeper"] + [f"percent_{d}_{PULSE_TAGS[k]}" for d, k in CASES]
    written = {"repartition": write_csv(
        out / "repartition.csv", header,
        [(row.sleeper, *(format_percent(v, config.threshold) for v in row.values)) for row in rows],
    )}
    long_rows = []
    for (damping, kind), case in loads.items():
        for s, peak, pct, share in zip(case.sleepers, case.peak, case.percent, case.impulse_share):
            long_rows.append((f"{damping}_{PULSE_TAGS[kind]}", s, peak, pct, share))
    written["sleeper_loads"] = write_csv(
        out / "sleeper_loads.csv",
        ["case", "sleeper", "peak_N", "percent_of_P0", "impulse_share_percent"],
        long_rows,
    )
    print("sleeper  " + "  ".join(f"{d[:4]}-{PULSE_TAGS[k]:>4}" for d, k in CASES))
    for row in rows:
        print(f"{row.sleeper:7d}  " + "  ".join(f"{format_percent(v, config.threshold):>9}" for v in row.values))
    write_manifest(out / "run.json", _manifest(
        config, "repartition", L_source, system, _grid(config),
        {"sleepers": [lo, hi], "threshold_percent": config.threshold},
    ))
    return written


def cmd_calibrate(config: ScenarioConfig, target_hz: float, mode: int = 2, tol: float = 1e-3) -> dict:
    out = config.out_dir
    try:
        result = calibrate_element_length(config.track, target_hz, tol=tol, mode=mode)
    except CalibrationError as exc:
        write_csv(out / "calibration.csv", ["L_m", f"f{mode}_hz"], exc.sweep)
        raise
    written = {"calibration": write_csv(out / "calibration.csv", ["L_m", f"f{mode}_hz"], result.sweep)}
    f = result.frequencies_hz
    print(f"L = {result.L:.6f} m  (mode {mode} -> {f[mode - 1]:.4f} Hz)")
    print(f"f1 = {f[0]:.4f} Hz, f2 = {f[1]:.4f} Hz, f3 = {f[2]:.4f} Hz")
    calibrated = replace(config, track=config.track.with_length(result.L))
    write_manifest(out / "run.json", _manifest(
        calibrated, "calibrate", "calibrated", extra={
            "target_hz": target_hz, "mode": mode, "tolerance_hz": tol,
            "L_m": result.L, "section_frequencies_hz": f,
        },
    ))
    return written


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="scenario file (key = value with sections)")
    parser.add_argument("--sections", type=int, help="number of elementary sections N")
    parser.add_argument("--pulse", choices=["rect", "sine"], help="pulse shape")
    parser.add_argument("--td", type=float, help="pulse duration (s)")
    parser.add_argument("--p0-tonnes", type=float, help="pulse amplitude in tonnes-force")
    parser.add_argument("--method", choices=["modal", "state", "newmark"], help="solver")
    parser.add_argument("--dt", type=float, help="time step (s)")
    parser.add_argument("--duration", type=float, help="simulated time (s)")
    parser.add_argument("--out", type=Path, help="output directory (default $RAILDYN_OUT)")
    parser.add_argument("--undamped", action="store_true", default=None, help="drop all damping")
    parser.add_argument("--load-dof", type=int, help="1-based global DOF receiving the load")
    parser.add_argument("--dofs", help="response DOFs: load,sleeper,sleepers,all or 1-based indices")
    parser.add_argument("--peak-window", choices=["pulse", "full"], help="time window for sleeper peaks")
    parser.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="raildyn", description="Transient response of a ballasted track to wheel pulses.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("frequencies", help="natural frequencies of an N-section track")
    _common(p)
    p = sub.add_parser("respond", help="time histories under one pulse")
    _common(p)
    p.add_argument("--compare-pulses", action="store_true", help="run both pulses and write a delta report")
    p = sub.add_parser("compare-pulses", help="rectangular vs half-sine response")
    _common(p)
    p = sub.add_parser("repartition", help="per-sleeper load percentages, four cases")
    _common(p)
    p.add_argument("--sleepers", help="sleeper range, e.g. 13-19")
    p.add_argument("--threshold", type=float, help="percentages below this print as '-'")
    p = sub.add_parser("calibrate", help="find the rail element length matching a frequency")
    _common(p)
    p.add_argument("--target-hz", type=float, default=81.62)
    p.add_argument("--mode", type=int, default=2, help="1-based section mode to match")
    p.add_argument("--tol", type=float, default=1e-3, help="frequency tolerance (Hz)")
    return parser


def config_from_args(args: argparse.Namespace) -> ScenarioConfig:
    config = load_config(args.config)
    return config.with_overrides(
        n_sections=args.sections,
        pulse_kind=args.pulse,
        t_d=args.td,
        P0=None if args.p0_tonnes is None else tonnes_to_newtons(args.p0_tonnes),
        method=args.method,
        dt=args.dt,
        duration=args.duration,
        out_dir=args.out,
        undamped=args.undamped,
        load_dof=args.load_dof,
        dofs=args.dofs,
        peak_window=args.peak_window,
        table_sleepers=parse_range(args.sleepers, "--sleepers") if getattr(args, "sleepers", None) else None,
        threshold=getattr(args, "threshold", None),
    )


def run(config: ScenarioConfig, command: str, **options) -> dict:
    """Execute one command on a resolved config; returns the written files."""
    if command == "frequencies":
        return cmd_frequencies(config)
    if command == "respond":
        if options.get("compare_pulses"):
            return cmd_compare_pulses(config)
        return cmd_respond(config)
    if command == "compare-pulses":
        return cmd_compare_pulses(config)
    if command == "repartition":
        return cmd_repartition(config)
    if command == "calibrate":
        return cmd_calibrate(config, options.get("target_hz", 81.62), options.get("mode", 2), options.get("tol", 1e-3))
    raise ConfigError(f"unknown command {command!r}", "command")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        options = {k: getattr(args, k) for k in ("compare_pulses", "target_hz", "mode", "tol") if hasattr(args, k)}
        written = run(config, args.command, **options)
    except LoadPlacementError as exc:
        print(f"error: {exc}; rerun with --load-dof {exc.nearest} to place it there", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        for L, f in exc.sweep:
            print(f"  L = {fmt(L)} m  f = {fmt(f)} Hz", file=sys.stderr)
        return 3
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 4
    except RailDynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written.values():
        logger.info("wrote %s", path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
