"""Command-line front end: config parsing, experiment runs, data export.

Configs are flat INI files with [device], [experiment], [solver] and
[output] sections, quoting frequencies in GHz, couplings in MHz and
lifetimes in us (the units the quantities are usually quoted in), so
no conversion happens at the boundary.  Runs are deterministic: no randomness anywhere, fixed
reduction orders, and full-precision (17 significant digit) CSV floats,
so repeated runs of one config produce byte-identical artifacts.

Exit codes: 0 success, 2 config error, 3 solver failure, 4 a threshold
miss in --assert mode.
"""

from __future__ import annotations

import argparse
import configparser
import dataclasses
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analytic, metrics, protocols
from . import fockspace as fs
from .dynamics import (
    ControlKnobs,
    DensityMatrix,
    DeviceParams,
    SolverOptions,
    evolve,
    validate_frame,
)
from .errors import BusQEDError, ConfigError, PhysicalityError, SolverError

EXPERIMENTS = ("transfer", "cphase5", "cphase7", "sweep-kappa", "sweep-delta",
               "validate")

#: acceptance thresholds applied by --assert
ASSERT_TRANSFER = (0.9997, 0.0005)
ASSERT_CPHASE5 = (0.9966, 0.0010)
ASSERT_CPHASE5_DURATION = (91.5, 0.1)
ASSERT_VALIDATE_MAX_DEV = 1e-6


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description (device, protocol, solver, output)."""

    device: DeviceParams
    kind: str
    theta: float = math.pi / 4
    theta1: float = math.pi / 4
    theta2: float = math.pi / 4
    variant: str = "sign_minus"
    g_op: float | None = None
    grid_n: int = 16
    points: tuple[float, ...] = ()
    truncation: tuple[int, int, int] = (3, 3, 3)
    solver: SolverOptions = SolverOptions()
    out_dir: str = "out"
    threads: int = 1


def _get_float(section, key, default=None):
    raw = section.get(key)
    if raw is None:
        if default is None:
            raise ConfigError(f"[{section.name}] missing required key {key!r}")
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a number"
                          ) from exc


def _get_int(section, key, default):
    raw = section.get(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not an "
                          f"integer") from exc


def _lifetime_to_rate(section, key, default_rate):
    """Lifetime in us (inf allowed) -> rate in 1/us."""
    raw = section.get(key)
    if raw is None:
        return default_rate
    try:
        lifetime = float(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section.name}] {key} = {raw!r} is not a "
                          f"number") from exc
    if lifetime <= 0:
        raise ConfigError(f"[{section.name}] {key} must be positive (use inf "
                          f"for a lossless channel)")
    return 0.0 if math.isinf(lifetime) else 1.0 / lifetime


_EMPTY: dict = {}


def parse_config(path) -> ExperimentConfig:
    """Read and validate an INI experiment file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path) as handle:
            parser.read_file(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"config parse error in {path}: {exc}") from exc

    class _Section(dict):
        name = "?"

    def section(name):
        if parser.has_section(name):
            return parser[name]
        sec = _Section()
        sec.name = name
        return sec

    dev_sec = section("device")
    defaults = DeviceParams()
    try:
        device = DeviceParams(
            omega_r=_get_float(dev_sec, "omega_r", defaults.omega_r),
            omega_1=_get_float(dev_sec, "omega_1", 0.0) or None,
            omega_2=_get_float(dev_sec, "omega_2", 0.0) or None,
            g_ge=_get_float(dev_sec, "g_ge", defaults.g_ge),
            delta=_get_float(dev_sec, "delta", defaults.delta),
            g_max=_get_float(dev_sec, "g_max", defaults.g_max),
            kappa_1=_lifetime_to_rate(dev_sec, "kappa_1_inv", defaults.kappa_1),
            kappa_2=_lifetime_to_rate(dev_sec, "kappa_2_inv", defaults.kappa_2),
            kappa_r=_lifetime_to_rate(dev_sec, "kappa_r_inv", defaults.kappa_r),
            gamma_ge=_lifetime_to_rate(dev_sec, "gamma_ge_inv",
                                       defaults.gamma_ge),
            gamma_ef=_lifetime_to_rate(dev_sec, "gamma_ef_inv",
                                       defaults.gamma_ef),
            gamma_phi_e=_lifetime_to_rate(dev_sec, "gamma_phi_e_inv",
                                          defaults.gamma_phi_e),
            gamma_phi_f=_lifetime_to_rate(dev_sec, "gamma_phi_f_inv",
                                          defaults.gamma_phi_f),
        )
    except BusQEDError as exc:
        raise ConfigError(f"[device]: {exc}") from exc

    exp = section("experiment")
    kind = exp.get("kind")
    if kind not in EXPERIMENTS:
        raise ConfigError(f"[experiment] kind must be one of {EXPERIMENTS}, "
                          f"got {kind!r}")
    raw_points = exp.get("points", "")
    try:
        points = tuple(float(p) for p in raw_points.split(",") if p.strip())
    except ValueError as exc:
        raise ConfigError(f"[experiment] points = {raw_points!r}: {exc}"
                          ) from exc
    raw_trunc = exp.get("truncation", "3,3,3")
    try:
        truncation = tuple(int(d) for d in raw_trunc.split(","))
        fs.build_space(truncation)
    except (ValueError, BusQEDError) as exc:
        raise ConfigError(f"[experiment] truncation = {raw_trunc!r}: {exc}"
                          ) from exc

    sol = section("solver")
    try:
        sample = sol.get("sample_every")
        solver = SolverOptions(
            method=sol.get("method", "rk45"),
            rtol=_get_float(sol, "rtol", 1e-10),
            atol=_get_float(sol, "atol", 1e-10),
            max_step=_get_float(sol, "max_step", 0.01),
            dt=_get_float(sol, "dt", 0.001),
            sample_every=float(sample) if sample else None,
        )
    except (ValueError, BusQEDError) as exc:
        raise ConfigError(f"[solver]: {exc}") from exc

    out = section("output")
    g_op_raw = exp.get("g_op")
    try:
        return ExperimentConfig(
            device=device,
            kind=kind,
            theta=_get_float(exp, "theta", math.pi / 4),
            theta1=_get_float(exp, "theta1", math.pi / 4),
            theta2=_get_float(exp, "theta2", math.pi / 4),
            variant=exp.get("variant", "sign_minus"),
            g_op=float(g_op_raw) if g_op_raw else None,
            grid_n=_get_int(exp, "grid_n", 16),
            points=points,
            truncation=truncation,
            solver=solver,
            out_dir=out.get("dir", "out"),
            threads=_get_int(exp, "threads", 1),
        )
    except BusQEDError as exc:
        raise ConfigError(str(exc)) from exc


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical INI text for a config; parse(serialize(cfg)) == cfg."""
    dev = cfg.device

    def lifetime(rate):
        return "inf" if rate == 0.0 else repr(1.0 / rate)

    lines = [
        "[device]",
        f"omega_r = {dev.omega_r!r}",
        f"omega_1 = {dev.omega_1!r}",
        f"omega_2 = {dev.omega_2!r}",
        f"g_ge = {dev.g_ge!r}",
        f"delta = {dev.delta!r}",
        f"g_max = {dev.g_max!r}",
        f"kappa_1_inv = {lifetime(dev.kappa_1)}",
        f"kappa_2_inv = {lifetime(dev.kappa_2)}",
        f"kappa_r_inv = {lifetime(dev.kappa_r)}",
        f"gamma_ge_inv = {lifetime(dev.gamma_ge)}",
        f"gamma_ef_inv = {lifetime(dev.gamma_ef)}",
        f"gamma_phi_e_inv = {lifetime(dev.gamma_phi_e)}",
        f"gamma_phi_f_inv = {lifetime(dev.gamma_phi_f)}",
        "",
        "[experiment]",
        f"kind = {cfg.kind}",
        f"theta = {cfg.theta!r}",
        f"theta1 = {cfg.theta1!r}",
        f"theta2 = {cfg.theta2!r}",
        f"variant = {cfg.variant}",
        f"grid_n = {cfg.grid_n}",
        f"truncation = {','.join(str(d) for d in cfg.truncation)}",
        f"threads = {cfg.threads}",
    ]
    if cfg.g_op is not None:
        lines.append(f"g_op = {cfg.g_op!r}")
    if cfg.points:
        lines.append(f"points = {','.join(repr(p) for p in cfg.points)}")
    sol = cfg.solver
    lines += [
        "",
        "[solver]",
        f"method = {sol.method}",
        f"rtol = {sol.rtol!r}",
        f"atol = {sol.atol!r}",
        f"max_step = {sol.max_step!r}",
        f"dt = {sol.dt!r}",
    ]
    if sol.sample_every is not None:
        lines.append(f"sample_every = {sol.sample_every!r}")
    lines += ["", "[output]", f"dir = {cfg.out_dir}", ""]
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# artifact writers


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def _write_json(path: Path, payload) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header: str, rows) -> None:
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def _params_payload(cfg: ExperimentConfig) -> dict:
    payload = dataclasses.asdict(cfg.device)
    payload.update({
        "theta": cfg.theta, "theta1": cfg.theta1, "theta2": cfg.theta2,
        "variant": cfg.variant, "g_op": cfg.g_op,
        "truncation": list(cfg.truncation),
    })
    return payload


def _rho_block_payload(block: np.ndarray) -> dict:
    return {"basis": ["00", "01", "10", "11"],
            "real": block.real.tolist(), "imag": block.imag.tolist()}


# ---------------------------------------------------------------------------
# experiment runners


def _run_transfer(cfg: ExperimentConfig, out: Path) -> dict:
    layout = fs.build_space(cfg.truncation)
    dev = cfg.device
    schedule = protocols.state_transfer_schedule(dev, g_op=cfg.g_op,
                                                 variant=cfg.variant)
    solver = cfg.solver
    if solver.sample_every is None:
        solver = replace(solver, sample_every=0.02)
    psi0 = protocols.initial_state("state_transfer", theta=cfg.theta,
                                   layout=layout)
    traj = evolve(DensityMatrix.from_pure(psi0), dev, schedule, solver)

    targets = [fs.basis_state(layout, 1, 0, 0, "g"),
               fs.basis_state(layout, 0, 1, 0, "g"),
               fs.basis_state(layout, 0, 0, 1, "g")]
    pops = [metrics.population(traj, t) for t in targets]
    rows = zip(traj.times, *pops, traj.observables["trace"],
               traj.observables["purity"])
    _write_csv(out / "trajectory.csv", "t_ns,P1,P2,P3,trace,purity", rows)

    ideal = protocols.ideal_final_state("state_transfer", theta=cfg.theta,
                                        variant=cfg.variant, layout=layout)
    fidelity = metrics.state_fidelity(traj.final_state, ideal)
    payload = {
        "experiment": cfg.kind,
        "fidelity": fidelity,
        "duration_ns": schedule.total_duration,
        "grid_n": None,
        "solver": solver.summary(),
        "params": _params_payload(cfg),
    }
    _write_json(out / "fidelity.json", payload)
    return payload


def _run_cphase(cfg: ExperimentConfig, out: Path) -> dict:
    layout = fs.build_space(cfg.truncation)
    dev = cfg.device
    if cfg.kind == "cphase5":
        schedule = protocols.cphase_schedule_5step(dev)
    else:
        schedule = protocols.cphase_schedule_7step(dev, layout=layout)
    report = metrics.average_gate_fidelity(dev, schedule, grid_n=cfg.grid_n,
                                           layout=layout, opts=cfg.solver,
                                           threads=cfg.threads)

    # single labeled run for the density-matrix block export
    psi0 = protocols.initial_state("cphase", theta1=cfg.theta1,
                                   theta2=cfg.theta2, layout=layout)
    rho0 = DensityMatrix.from_pure(psi0)
    traj = evolve(rho0, dev, schedule, cfg.solver)
    _write_json(out / "rho_logical.json", {
        "theta1": cfg.theta1, "theta2": cfg.theta2,
        "initial": _rho_block_payload(metrics.logical_block(rho0)),
        "final": _rho_block_payload(metrics.logical_block(traj.final_state)),
    })

    payload = {
        "experiment": cfg.kind,
        "fidelity": report.value,
        "duration_ns": schedule.total_duration,
        "grid_n": cfg.grid_n,
        "solver": cfg.solver.summary(),
        "params": _params_payload(cfg),
    }
    _write_json(out / "fidelity.json", payload)
    return payload


def _run_sweep(cfg: ExperimentConfig, out: Path) -> dict:
    layout = fs.build_space(cfg.truncation)
    if cfg.kind == "sweep-kappa":
        points = cfg.points or tuple(x for x, _ in metrics.GAMMA_G_PAIRING)
        result = metrics.sweep_kappa_gamma(cfg.device, points,
                                           grid_n=cfg.grid_n, layout=layout,
                                           opts=cfg.solver,
                                           threads=cfg.threads)
        header = "gamma_inv_us,fidelity,g_ge_mhz,duration_ns"
    else:
        points = cfg.points or (cfg.device.delta,)
        result = metrics.sweep_delta(cfg.device, points, grid_n=cfg.grid_n,
                                     layout=layout, opts=cfg.solver,
                                     threads=cfg.threads)
        header = "delta_ghz,fidelity,g_ge_mhz,duration_ns"
    rows = [(p.x, p.fidelity, p.g_ge, p.duration_ns) for p in result.points]
    _write_csv(out / "sweep.csv", header, rows)
    payload = {
        "experiment": cfg.kind,
        "axis": result.axis,
        "notes": result.notes,
        "grid_n": cfg.grid_n,
        "solver": cfg.solver.summary(),
        "points": [dataclasses.asdict(p) for p in result.points],
        "params": _params_payload(cfg),
    }
    _write_json(out / "sweep.json", payload)
    return payload


def _run_validate(cfg: ExperimentConfig, out: Path) -> dict:
    dev = cfg.device
    layout = fs.build_space(cfg.truncation)
    park = protocols.QUTRIT_PARK_GHZ
    frame_checks = {
        "frame_swap_r1": ControlKnobs(dev.g_max, 0.0, park),
        "frame_swap_r2": ControlKnobs(0.0, dev.g_max, park),
        "frame_chain": ControlKnobs(dev.g_ge, 0.0, dev.omega_r),
        "frame_ef_pulse": ControlKnobs(0.0, 0.0, dev.omega_ef_park),
    }
    checks = {}
    for name, knobs in frame_checks.items():
        checks[name] = validate_frame(dev, knobs, 10.0, layout=layout,
                                      opts=cfg.solver)
    for name, value in analytic.oracle_report(dev, opts=cfg.solver).items():
        checks[f"oracle_{name}"] = value
    for name, value in sorted(checks.items()):
        status = "OK" if value <= ASSERT_VALIDATE_MAX_DEV else "FAIL"
        print(f"{name:24s} {value:12.3e}  {status}")
    payload = {"experiment": "validate", "max_deviation": max(checks.values()),
               "checks": checks, "solver": cfg.solver.summary()}
    _write_json(out / "validate.json", payload)
    return payload


def run(cfg: ExperimentConfig) -> dict:
    """Execute one configured experiment; returns the summary payload."""
    out = Path(cfg.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} not writable: {exc}"
                          ) from exc
    if cfg.kind == "transfer":
        return _run_transfer(cfg, out)
    if cfg.kind in ("cphase5", "cphase7"):
        return _run_cphase(cfg, out)
    if cfg.kind in ("sweep-kappa", "sweep-delta"):
        return _run_sweep(cfg, out)
    return _run_validate(cfg, out)


def print_schedule(cfg: ExperimentConfig) -> str:
    """Human-readable segment table of the configured protocol."""
    dev = cfg.device
    if cfg.kind == "transfer":
        schedule = protocols.state_transfer_schedule(dev, g_op=cfg.g_op,
                                                     variant=cfg.variant)
    elif cfg.kind == "cphase5":
        schedule = protocols.cphase_schedule_5step(dev)
    elif cfg.kind == "cphase7":
        schedule = protocols.cphase_schedule_7step(
            dev, layout=fs.build_space(cfg.truncation))
    else:
        raise ConfigError(f"experiment {cfg.kind!r} has no schedule to print")
    lines = [f"schedule: {schedule.label}",
             f"{'step':>4s} {'g1/2pi MHz':>12s} {'g2/2pi MHz':>12s} "
             f"{'w_ge/2pi GHz':>13s} {'duration ns':>12s}"]
    roman = ("i", "ii", "iii", "iv", "v", "vi", "vii", "viii")
    for index, seg in enumerate(schedule.segments):
        k = seg.knobs
        lines.append(f"{roman[index]:>4s} {k.g1:12.2f} {k.g2:12.2f} "
                     f"{k.omega_ge:13.2f} {seg.duration:12.2f}")
    lines.append(f"{'total':>4s} {'':12s} {'':12s} {'':13s} "
                 f"{schedule.total_duration:12.2f}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# assertion mode


def _assert_payload(cfg: ExperimentConfig, payload: dict) -> list[str]:
    failures = []
    if cfg.kind == "transfer":
        target, tol = ASSERT_TRANSFER
        if abs(payload["fidelity"] - target) > tol:
            failures.append(f"transfer fidelity {payload['fidelity']:.6f} "
                            f"outside {target} +- {tol}")
    elif cfg.kind == "cphase5":
        target, tol = ASSERT_CPHASE5
        if abs(payload["fidelity"] - target) > tol:
            failures.append(f"cphase5 fidelity {payload['fidelity']:.6f} "
                            f"outside {target} +- {tol}")
        target, tol = ASSERT_CPHASE5_DURATION
        if abs(payload["duration_ns"] - target) > tol:
            failures.append(f"cphase5 duration {payload['duration_ns']:.3f} "
                            f"outside {target} +- {tol} ns")
    elif cfg.kind == "validate":
        if payload["max_deviation"] > ASSERT_VALIDATE_MAX_DEV:
            failures.append(f"validation deviation {payload['max_deviation']:g}"
                            f" above {ASSERT_VALIDATE_MAX_DEV:g}")
    else:
        values = [p["fidelity"] for p in payload.get("points", [])]
        if "fidelity" in payload:
            values.append(payload["fidelity"])
        for value in values:
            if not 0.0 <= value <= 1.0 + 1e-9:
                failures.append(f"fidelity {value!r} outside [0, 1]")
    return failures


# ---------------------------------------------------------------------------
# entry point


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    updates = {}
    if args.threads is not None:
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        updates["threads"] = args.threads
    if args.out_dir is not None:
        updates["out_dir"] = args.out_dir
    if args.grid_n is not None:
        if args.grid_n < 4:
            raise ConfigError("--grid-n must be >= 4")
        updates["grid_n"] = args.grid_n
    if args.truncation is not None:
        try:
            dims = tuple(int(d) for d in args.truncation.split(","))
            fs.build_space(dims)
        except (ValueError, BusQEDError) as exc:
            raise ConfigError(f"--truncation {args.truncation!r}: {exc}"
                              ) from exc
        updates["truncation"] = dims
    return replace(cfg, **updates) if updates else cfg


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="busqed",
        description="simulate photon transfer and c-phase gates on "
                    "bus-coupled resonators")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, doc in (("run", "run an experiment and write its artifacts"),
                      ("schedule", "print the segment table of a protocol"),
                      ("validate", "run the frame/oracle cross checks")):
        cmd = sub.add_parser(name, help=doc)
        cmd.add_argument("config", help="path to the INI experiment file")
        cmd.add_argument("--threads", type=int, default=None,
                         help="worker pool size for grid/sweep points")
        cmd.add_argument("--out-dir", default=None)
        cmd.add_argument("--truncation", default=None, metavar="d1,dR,d2")
        cmd.add_argument("--grid-n", type=int, default=None)
        cmd.add_argument("--assert", dest="assert_mode", action="store_true",
                         help="exit 4 unless results meet the reference "
                              "working-point values")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        cfg = _apply_overrides(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        if args.command == "schedule":
            print(print_schedule(cfg))
            return 0
        if args.command == "validate":
            cfg = replace(cfg, kind="validate")
        payload = run(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (SolverError, PhysicalityError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 3
    except BusQEDError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if cfg.kind in ("transfer", "cphase5", "cphase7"):
        print(f"{cfg.kind}: fidelity = {payload['fidelity']:.6f} "
              f"(duration {payload['duration_ns']:.3f} ns)")
    elif cfg.kind.startswith("sweep"):
        for point in payload["points"]:
            print(f"{payload['axis']} = {point['x']:g}: fidelity = "
                  f"{point['fidelity']:.6f} (g_ge {point['g_ge']:g} MHz, "
                  f"{point['duration_ns']:.1f} ns)")
    if args.assert_mode:
        failures = _assert_payload(cfg, payload)
        for failure in failures:
            print(f"assertion failed: {failure}", file=sys.stderr)
        if failures:
            return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
