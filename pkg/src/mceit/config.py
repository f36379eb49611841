"""Strict flat key-value configuration documents.

A config is UTF-8 text with ``[section]`` headers and ``key = value`` lines;
``#`` starts a comment.  The schema is closed: unknown sections or keys are
rejected with the offending line number, values are typed and range-checked
at parse time, and a parsed run serializes back to an equivalent document.
No programmable logic lives in configs.
"""

import math
from dataclasses import dataclass, field

from .errors import ConfigError
from .lindblad import StepControl
from .model import SystemParams, params_for_sideband_drive
from .spectroscopy import SWEEPABLE_FIELDS, SweepAxis, SweepSpec

MODES = ("evolve", "sweep", "analytic", "device", "preset")
FORMATS = ("csv", "json")

_BOOL = {"true": True, "false": False, "yes": True, "no": False}

# (section, key) -> python type; bool handled via _BOOL
SCHEMA: dict[tuple[str, str], type] = {
    ("run", "mode"): str,
    ("run", "output"): str,
    ("run", "format"): str,
    ("run", "threads"): int,
    ("run", "deterministic"): bool,
    ("run", "preset"): str,
    ("run", "stretch"): bool,
    ("system", "omega_m"): float,
    ("system", "delta0"): float,
    ("system", "delta_s"): float,
    ("system", "g0"): float,
    ("system", "omega_g"): float,
    ("system", "omega_drv"): float,
    ("system", "omega_pr"): float,
    ("system", "delta"): float,
    ("system", "gamma_d"): float,
    ("system", "gamma_phi"): float,
    ("system", "kappa"): float,
    ("system", "n_th"): float,
    ("system", "ncut"): int,
    ("system", "n_rate"): float,
    ("sweep", "axis"): str,
    ("sweep", "start"): float,
    ("sweep", "stop"): float,
    ("sweep", "count"): int,
    ("sweep", "axis2"): str,
    ("sweep", "start2"): float,
    ("sweep", "stop2"): float,
    ("sweep", "count2"): int,
    ("sweep", "resonant_probe"): bool,
    ("sweep", "window"): float,
    ("sweep", "transient"): float,
    ("sweep", "max_windows"): int,
    ("sweep", "dt"): float,
    ("evolve", "t_final"): float,
    ("evolve", "record_every"): int,
    ("evolve", "dt"): float,
    ("evolve", "emit_fft"): bool,
    ("analytic", "kind"): str,
    ("analytic", "start"): float,
    ("analytic", "stop"): float,
    ("analytic", "count"): int,
    ("device", "qubit"): str,
    ("device", "ej_sum"): float,
    ("device", "ej0"): float,
    ("device", "ec"): float,
    ("device", "d0"): float,
    ("device", "phi_minus"): float,
    ("device", "b_field"): float,
    ("device", "xi"): float,
    ("device", "length"): float,
    ("device", "mass"): float,
    ("device", "omega_m"): float,
    ("device", "alpha"): float,
    ("device", "r_sens"): float,
    ("device", "kappa_conv"): float,
}

SYSTEM_REQUIRED = (
    "omega_m",
    "g0",
    "omega_g",
    "omega_drv",
    "omega_pr",
    "gamma_d",
    "gamma_phi",
    "kappa",
)


@dataclass
class RunConfig:
    """Validated run request."""

    mode: str
    output: str
    fmt: str = "csv"
    threads: int = 1
    deterministic: bool = True
    preset: str | None = None
    stretch: bool = False
    system: SystemParams | None = None
    sweep_axes: list[SweepAxis] = field(default_factory=list)
    resonant_probe: bool = False
    sweep_ctrl_overrides: dict = field(default_factory=dict)
    evolve_opts: dict = field(default_factory=dict)
    analytic_opts: dict = field(default_factory=dict)
    device_opts: dict = field(default_factory=dict)
    raw_sections: dict = field(default_factory=dict)

    def sweep_spec(self) -> SweepSpec:
        if self.system is None or not self.sweep_axes:
            raise ConfigError("sweep mode needs [system] and [sweep] sections")
        ctrl = None
        if self.sweep_ctrl_overrides:
            ctrl = StepControl(
                dt=self.sweep_ctrl_overrides.get("dt"),
                transient=self.sweep_ctrl_overrides.get("transient"),
                window=self.sweep_ctrl_overrides.get("window"),
                max_windows=self.sweep_ctrl_overrides.get("max_windows", 8),
            )
            if ctrl.window is None or ctrl.transient is None:
                # partial overrides fall back to the computed defaults
                from .spectroscopy import _point_params, default_sweep_ctrl

                spec_probe = SweepSpec(
                    base=self.system,
                    axes=self.sweep_axes,
                    resonant_probe=self.resonant_probe,
                )
                params = [
                    _point_params(self.system, coords, self.resonant_probe)
                    for coords in spec_probe.grid()
                ]
                defaults = default_sweep_ctrl(params)
                ctrl.window = ctrl.window or defaults.window
                ctrl.transient = (
                    ctrl.transient if ctrl.transient is not None else defaults.transient
                )
        return SweepSpec(
            base=self.system,
            axes=self.sweep_axes,
            resonant_probe=self.resonant_probe,
            threads=self.threads,
            ctrl=ctrl,
        )


def _parse_value(section, key, text, line_no):
    expected = SCHEMA[(section, key)]
    if expected is bool:
        if text.lower() not in _BOOL:
            raise ConfigError(f"expected a boolean for {key}, got {text!r}", line_no)
        return _BOOL[text.lower()]
    try:
        if expected is int:
            return int(text)
        if expected is float:
            return float(text)
    except ValueError:
        raise ConfigError(
            f"expected {expected.__name__} for {key}, got {text!r}", line_no
        ) from None
    return text


def parse_config(text: str) -> RunConfig:
    """Parse and fully validate a configuration document."""
    sections: dict[str, dict[str, object]] = {}
    current = None
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if current not in {s for s, _ in SCHEMA}:
                raise ConfigError(f"unknown section [{current}]", line_no)
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line_no)
        if current is None:
            raise ConfigError("key outside any [section]", line_no)
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if (current, key) not in SCHEMA:
            raise ConfigError(f"unknown key {key!r} in [{current}]", line_no)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in [{current}]", line_no)
        sections[current][key] = _parse_value(current, key, value, line_no)

    run = sections.get("run", {})
    mode = run.get("mode")
    if mode not in MODES:
        raise ConfigError(f"run.mode must be one of {MODES}, got {mode!r}")
    fmt = run.get("format", "csv")
    if fmt not in FORMATS:
        raise ConfigError(f"run.format must be one of {FORMATS}, got {fmt!r}")
    output = run.get("output", "out")

    cfg = RunConfig(
        mode=mode,
        output=str(output),
        fmt=str(fmt),
        threads=int(run.get("threads", 1)),
        deterministic=bool(run.get("deterministic", True)),
        preset=run.get("preset"),
        stretch=bool(run.get("stretch", False)),
        raw_sections=sections,
    )
    if cfg.threads < 1:
        raise ConfigError("run.threads must be >= 1")

    if "system" in sections:
        cfg.system = _build_system(sections["system"])
    if "sweep" in sections:
        _build_sweep(cfg, sections["sweep"])
    cfg.evolve_opts = dict(sections.get("evolve", {}))
    cfg.analytic_opts = dict(sections.get("analytic", {}))
    cfg.device_opts = dict(sections.get("device", {}))

    if mode == "preset" and not cfg.preset:
        raise ConfigError("preset mode needs run.preset")
    if mode in ("evolve", "sweep", "analytic") and cfg.system is None:
        raise ConfigError(f"{mode} mode needs a [system] section")
    if mode == "sweep" and not cfg.sweep_axes:
        raise ConfigError("sweep mode needs a [sweep] section")
    if mode == "device" and not cfg.device_opts:
        raise ConfigError("device mode needs a [device] section")
    return cfg


def _build_system(values: dict) -> SystemParams:
    missing = [key for key in SYSTEM_REQUIRED if key not in values]
    if missing:
        raise ConfigError(f"[system] missing required keys: {', '.join(missing)}")
    if "delta0" not in values and "delta_s" not in values:
        raise ConfigError("[system] needs either delta0 or delta_s")
    if "delta0" in values and "delta_s" in values:
        raise ConfigError("[system] delta0 and delta_s are mutually exclusive")

    kwargs = {k: v for k, v in values.items() if k not in ("delta_s",)}
    kwargs.setdefault("delta", 0.0)
    kwargs.setdefault("n_th", 0.0)
    kwargs.setdefault("ncut", 6)
    kwargs.setdefault("n_rate", -1.0)
    if "delta_s" in values:
        kwargs["delta0"] = 0.0  # replaced just below
        try:
            probe = SystemParams(**kwargs)
        except Exception as exc:
            raise ConfigError(f"invalid [system] parameters: {exc}") from exc
        return params_for_sideband_drive(probe, float(values["delta_s"]))
    try:
        return SystemParams(**kwargs)
    except Exception as exc:
        raise ConfigError(f"invalid [system] parameters: {exc}") from exc


def _build_sweep(cfg: RunConfig, values: dict) -> None:
    if "axis" not in values:
        raise ConfigError("[sweep] needs an axis")
    axes = [_axis(values, "")]
    if "axis2" in values:
        axes.insert(0, _axis(values, "2"))
    cfg.sweep_axes = axes
    cfg.resonant_probe = bool(values.get("resonant_probe", False))
    for key in ("window", "transient", "max_windows", "dt"):
        if key in values:
            cfg.sweep_ctrl_overrides[key] = values[key]


def _axis(values: dict, suffix: str) -> SweepAxis:
    try:
        name = values[f"axis{suffix}"]
        axis = SweepAxis(
            name=str(name),
            start=float(values[f"start{suffix}"]),
            stop=float(values[f"stop{suffix}"]),
            count=int(values[f"count{suffix}"]),
        )
    except KeyError as exc:
        raise ConfigError(f"[sweep] missing {exc.args[0]}") from None
    except ValueError as exc:
        raise ConfigError(f"invalid [sweep] axis: {exc}") from None
    if axis.name != "delta_s" and axis.name not in SWEEPABLE_FIELDS:
        raise ConfigError(f"[sweep] axis {axis.name!r} not sweepable")
    return axis


def serialize_config(cfg: RunConfig) -> str:
    """Round-trip a RunConfig back into document form."""
    lines = ["[run]"]
    lines.append(f"mode = {cfg.mode}")
    lines.append(f"output = {cfg.output}")
    lines.append(f"format = {cfg.fmt}")
    lines.append(f"threads = {cfg.threads}")
    lines.append(f"deterministic = {'true' if cfg.deterministic else 'false'}")
    if cfg.preset:
        lines.append(f"preset = {cfg.preset}")
    if cfg.stretch:
        lines.append("stretch = true")
    if cfg.system is not None:
        lines.append("")
        lines.append("[system]")
        for name in (
            "omega_m",
            "delta0",
            "g0",
            "omega_g",
            "omega_drv",
            "omega_pr",
            "delta",
            "gamma_d",
            "gamma_phi",
            "kappa",
            "n_th",
            "n_rate",
        ):
            lines.append(f"{name} = {format(getattr(cfg.system, name), '.17g')}")
        lines.append(f"ncut = {cfg.system.ncut}")
    if cfg.sweep_axes:
        lines.append("")
        lines.append("[sweep]")
        suffixes = [""] if len(cfg.sweep_axes) == 1 else ["2", ""]
        for axis, suffix in zip(cfg.sweep_axes, suffixes):
            lines.append(f"axis{suffix} = {axis.name}")
            lines.append(f"start{suffix} = {format(axis.start, '.17g')}")
            lines.append(f"stop{suffix} = {format(axis.stop, '.17g')}")
            lines.append(f"count{suffix} = {axis.count}")
        if cfg.resonant_probe:
            lines.append("resonant_probe = true")
        for key, value in sorted(cfg.sweep_ctrl_overrides.items()):
            lines.append(f"{key} = {value}")
    for section_name, opts in (
        ("evolve", cfg.evolve_opts),
        ("analytic", cfg.analytic_opts),
        ("device", cfg.device_opts),
    ):
        if opts:
            lines.append("")
            lines.append(f"[{section_name}]")
            for key, value in opts.items():
                if isinstance(value, bool):
                    value = "true" if value else "false"
                elif isinstance(value, float):
                    value = format(value, ".17g")
                lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def validate_device(opts: dict) -> dict:
    """Range-check the device section and fill defaults."""
    qubit = opts.get("qubit", "transmon")
    if qubit not in ("transmon", "flux"):
        raise ConfigError(f"device.qubit must be transmon or flux, got {qubit!r}")
    required = ("ej_sum", "ec", "phi_minus", "b_field", "xi", "length", "mass", "omega_m")
    missing = [k for k in required if k not in opts]
    if missing:
        raise ConfigError(f"[device] missing keys: {', '.join(missing)}")
    if qubit == "flux" and ("ej0" not in opts or "alpha" not in opts):
        raise ConfigError("[device] flux qubit needs ej0 and alpha")
    out = dict(opts)
    out["qubit"] = qubit
    out.setdefault("d0", 0.0)
    out.setdefault("ej0", out["ej_sum"])
    out.setdefault("kappa_conv", 2.0 * math.pi)
    return out
