"""Command-line front end: config-driven runs and bit-stable data emission.

    simcmd {evolve|sweep|analytic|device|preset} --config <path>
           [--out <path>] [--threads N] [--stretch]

Exit codes: 0 success, 2 configuration error, 3 numerical non-convergence
in any emitted row, 4 I/O failure.  Environment overrides are limited to
SIMCMD_OUT_DIR (output directory) and SIMCMD_THREADS (worker count).
"""

import argparse
import hashlib
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import device as device_mod
from . import engine, presets
from .config import RunConfig, parse_config, serialize_config, validate_device
from .errors import ConfigError
from .lindblad import StepControl, default_initial_state, evolve, fidelity_dark
from .model import (
    collapse_ops,
    drive_frame_source,
    sideband_rates,
    sigma_minus_op,
)
from .spectroscopy import (
    analytic_reflection_single,
    analytic_reflection_two_color,
    run_sweep,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_IO = 4


# ---------------------------------------------------------------------------
# bit-stable emission

def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        if math.isnan(value):
            return ""
        return format(float(value), ".17g")
    return str(value)


def _quote(field: str) -> str:
    if any(ch in field for ch in (",", '"', "\n", "\r")):
        return '"' + field.replace('"', '""') + '"'
    return field


def csv_bytes(columns: list[str], rows: list[list]) -> bytes:
    lines = [",".join(_quote(c) for c in columns)]
    for row in rows:
        lines.append(",".join(_quote(format_cell(v)) for v in row))
    return ("\n".join(lines) + "\n").encode("utf-8")


def json_bytes(columns: list[str], rows: list[list]) -> bytes:
    payload = {
        "columns": columns,
        "rows": [[None if v is None else _json_value(v) for v in row] for row in rows],
    }
    return (json.dumps(payload, sort_keys=True, indent=1) + "\n").encode("utf-8")


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return None if math.isnan(value) else float(value)
    return str(value)


def git_blob_sha1(data: bytes) -> str:
    header = f"blob {len(data)}\0".encode("ascii")
    return hashlib.sha1(header + data).hexdigest()


def write_payload(path: Path, data: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise IOError(f"cannot write {path}: {exc}") from exc


def emit_table(
    out_dir: Path,
    stem: str,
    fmt: str,
    columns: list[str],
    rows: list[list],
    meta: dict,
) -> Path:
    """Write one table plus its metadata sidecar; returns the data path."""
    data = csv_bytes(columns, rows) if fmt == "csv" else json_bytes(columns, rows)
    suffix = ".csv" if fmt == "csv" else ".json"
    data_path = out_dir / f"{stem}{suffix}"
    write_payload(data_path, data)

    sidecar = dict(meta)
    sidecar["content_hash"] = f"git-blob-sha1:{git_blob_sha1(data)}"
    sidecar["columns"] = columns
    sidecar["rows_written"] = len(rows)
    side_bytes = (json.dumps(sidecar, sort_keys=True, indent=1, default=_json_value) + "\n").encode()
    write_payload(out_dir / f"{stem}.meta.json", side_bytes)
    return data_path


# ---------------------------------------------------------------------------
# command implementations

def _resolved_meta(cfg: RunConfig, extra: dict) -> dict:
    meta = {
        "config": serialize_config(cfg),
        "threads": cfg.threads,
        "deterministic": cfg.deterministic,
        "mode": cfg.mode,
    }
    meta.update(extra)
    return meta


def cmd_sweep(cfg: RunConfig, out_dir: Path) -> int:
    spec = cfg.sweep_spec()
    start = time.perf_counter()
    table = run_sweep(spec)
    runtime = time.perf_counter() - start

    axis_names = [axis.name for axis in spec.axes]
    columns = [f"{name}_MHz" for name in axis_names]
    columns += ["re_r_num", "im_r_num", "re_r_eff", "im_r_eff", "converged", "ncut"]
    rows = []
    for pt in table.points:
        row = [pt.coords[name] for name in axis_names]
        row += [
            None if pt.r_num is None else pt.r_num.real,
            None if pt.r_num is None else pt.r_num.imag,
            None if pt.r_analytic is None else pt.r_analytic.real,
            None if pt.r_analytic is None else pt.r_analytic.imag,
            pt.converged,
            pt.ncut_used,
        ]
        rows.append(row)
    meta = _resolved_meta(cfg, {"runtime_s": runtime, "sweep": table.meta})
    emit_table(out_dir, Path(cfg.output).stem or "sweep", cfg.fmt, columns, rows, meta)
    return EXIT_OK if table.meta["all_converged"] else EXIT_NONCONVERGED


def cmd_evolve(cfg: RunConfig, out_dir: Path) -> int:
    p = cfg.system
    opts = cfg.evolve_opts
    t_final = float(opts.get("t_final", 2.0))
    ctrl = StepControl(
        dt=float(opts["dt"]) if "dt" in opts else 0.00025,
        record_every=int(opts.get("record_every", 4)),
    )
    observables = {"sigma_minus": sigma_minus_op(p.ncut)}
    c1p = sideband_rates(p)[0]
    if c1p != 0.0:
        observables["f_ds_raw"] = lambda t, rho: complex(fidelity_dark(rho, p, t)[0])
        observables["f_ds"] = lambda t, rho: complex(fidelity_dark(rho, p, t)[1])

    start = time.perf_counter()
    traj = evolve(
        default_initial_state(p),
        drive_frame_source(p),
        collapse_ops(p),
        t_final,
        observables,
        ctrl,
    )
    runtime = time.perf_counter() - start

    sm = traj.records["sigma_minus"]
    columns = ["t_us", "re_sigma_minus", "im_sigma_minus_probe_frame"]
    probe_frame = sm * np.exp(1j * 2.0 * np.pi * p.delta * traj.times)
    rows = [[t, s.real, pf.imag] for t, s, pf in zip(traj.times, sm, probe_frame)]
    if "f_ds" in traj.records:
        columns += ["f_ds_raw", "f_ds"]
        for row, raw, best in zip(rows, traj.records["f_ds_raw"], traj.records["f_ds"]):
            row += [raw.real, best.real]
    meta = _resolved_meta(cfg, {"runtime_s": runtime, "stats": traj.stats})
    emit_table(out_dir, Path(cfg.output).stem or "evolve", cfg.fmt, columns, rows, meta)

    if opts.get("emit_fft", False):
        spectrum = np.fft.rfft(probe_frame.imag) / len(traj.times)
        freqs = np.fft.rfftfreq(len(traj.times), d=float(traj.times[1] - traj.times[0]))
        fft_rows = [[f, abs(a)] for f, a in zip(freqs, np.abs(spectrum)) if f <= 25.0]
        emit_table(
            out_dir,
            (Path(cfg.output).stem or "evolve") + "_fft",
            cfg.fmt,
            ["freq_MHz", "magnitude"],
            fft_rows,
            meta,
        )
    return EXIT_OK


def cmd_analytic(cfg: RunConfig, out_dir: Path) -> int:
    p = cfg.system
    opts = cfg.analytic_opts
    kind = opts.get("kind", "single")
    if kind not in ("single", "two_color"):
        raise ConfigError(f"analytic.kind must be single or two_color, got {kind!r}")
    start_f = float(opts.get("start", p.omega_m - p.omega_g - 10.0))
    stop_f = float(opts.get("stop", p.omega_m - p.omega_g + 10.0))
    count = int(opts.get("count", 401))
    grid = np.linspace(start_f, stop_f, count)
    fn = analytic_reflection_single if kind == "single" else analytic_reflection_two_color
    rows = [[float(d), fn(p, float(d)).real, fn(p, float(d)).imag] for d in grid]
    meta = _resolved_meta(cfg, {"kind": kind})
    emit_table(
        out_dir,
        Path(cfg.output).stem or "analytic",
        cfg.fmt,
        ["delta_MHz", "re_r", "im_r"],
        rows,
        meta,
    )
    return EXIT_OK


def cmd_device(cfg: RunConfig, out_dir: Path) -> int:
    opts = validate_device(cfg.device_opts)
    params = device_mod.DeviceParams(
        ej_sum=float(opts["ej_sum"]),
        ej0=float(opts["ej0"]),
        ec=float(opts["ec"]),
        d0=float(opts["d0"]),
        phi_minus=float(opts["phi_minus"]),
        b_field=float(opts["b_field"]),
        xi=float(opts["xi"]),
        length=float(opts["length"]),
        mass=float(opts["mass"]),
        omega_m=float(opts["omega_m"]),
    )
    e_prime, phi0 = device_mod.effective_ej(params)
    x0 = device_mod.zero_point(params.mass, params.omega_m)
    rows = [
        ["effective_josephson_energy", e_prime, "GHz"],
        ["shifted_phase", phi0, "rad"],
        ["flux_slope", device_mod.flux_slope(params), "GHz/m"],
        ["zero_point_motion", x0, "m"],
        ["flux_swing", device_mod.flux_swing_mphi0(params), "mPhi0"],
    ]
    if opts["qubit"] == "flux":
        alpha = float(opts["alpha"])
        gap = device_mod.flux_qubit_gap(params.ej0, params.ec, alpha)
        sens = device_mod.gap_sensitivity(params, alpha)
        sens_mphi0 = device_mod.per_radian_to_per_mphi0(sens)
        rows += [
            ["qubit_gap", gap, "GHz"],
            ["flux_sensitivity", sens, "GHz/rad"],
            ["flux_sensitivity_mphi0", sens_mphi0, "GHz/mPhi0"],
        ]
    else:
        freq = device_mod.transmon_freq(params.ec, e_prime)
        per_rad, per_mphi0 = device_mod.transmon_sensitivity(
            params.ec, params.ej_sum, params.phi_minus
        )
        sens_mphi0 = per_mphi0
        rows += [
            ["transition_frequency", freq, "GHz"],
            ["flux_sensitivity", per_rad, "GHz/rad"],
            ["flux_sensitivity_mphi0", per_mphi0, "GHz/mPhi0"],
        ]
    r_sens = float(opts.get("r_sens", abs(sens_mphi0)))
    g_amp, factor = device_mod.coupling_amplitude(
        r_sens, params, float(opts["kappa_conv"])
    )
    rows += [
        ["coupling_sensitivity_used", r_sens, "GHz/mPhi0"],
        ["coupling_amplitude", g_amp, "MHz"],
        ["coupling_convention_factor", factor, "1"],
    ]

    for name, value, unit in rows:
        print(f"{name:28s} {format_cell(value):>24s} {unit}")
    meta = _resolved_meta(cfg, {"qubit": opts["qubit"]})
    emit_table(
        out_dir,
        Path(cfg.output).stem or "device",
        cfg.fmt,
        ["quantity", "value", "unit"],
        rows,
        meta,
    )
    return EXIT_OK


def cmd_preset(cfg: RunConfig, out_dir: Path) -> int:
    run = presets.build(cfg.preset, threads=cfg.threads, stretch=cfg.stretch)
    meta_common = _resolved_meta(cfg, {"preset": run.name})
    for stem, kind, columns, rows in run.tables:
        meta = dict(meta_common)
        meta["kind"] = kind
        meta.update({"preset_meta": run.meta})
        emit_table(out_dir, stem, cfg.fmt, columns, rows, meta)
    return EXIT_OK if run.all_converged else EXIT_NONCONVERGED


# ---------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simcmd",
        description=(
            "Simulator for a qubit longitudinally coupled to a mechanical "
            "resonator through a modulated coupling: reflection spectra, "
            "dark-state dynamics and circuit-level estimates."
        ),
    )
    parser.add_argument(
        "mode",
        choices=("evolve", "sweep", "analytic", "device", "preset"),
        help="what to run; must match run.mode in the config",
    )
    parser.add_argument("--config", required=True, help="path to the config document")
    parser.add_argument("--out", help="output directory (overrides run.output)")
    parser.add_argument("--threads", type=int, help="worker count override")
    parser.add_argument(
        "--stretch",
        action="store_true",
        help="include the beyond-desk-scale occupancy in the thermal preset",
    )
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    try:
        cfg = parse_config(text)
        if cfg.mode != args.mode:
            raise ConfigError(
                f"config says mode={cfg.mode!r} but the command line asked for "
                f"{args.mode!r}"
            )
        if args.threads is not None:
            cfg.threads = args.threads
        elif "SIMCMD_THREADS" in os.environ:
            cfg.threads = int(os.environ["SIMCMD_THREADS"])
        if args.stretch:
            cfg.stretch = True
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out_dir = Path(
        args.out or os.environ.get("SIMCMD_OUT_DIR") or Path(cfg.output).parent or "."
    )
    engine.set_threads(cfg.threads)

    try:
        if cfg.mode == "sweep":
            return cmd_sweep(cfg, out_dir)
        if cfg.mode == "evolve":
            return cmd_evolve(cfg, out_dir)
        if cfg.mode == "analytic":
            return cmd_analytic(cfg, out_dir)
        if cfg.mode == "device":
            return cmd_device(cfg, out_dir)
        if cfg.mode == "preset":
            return cmd_preset(cfg, out_dir)
        raise ConfigError(f"unhandled mode {cfg.mode!r}")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except IOError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
