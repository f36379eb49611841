"""Dipole Fourier extraction, reflection coefficients and the sweep engine.

The probe response of the qubit is the Fourier component of <sigma_-(t)> at
the probe beat note; the reflection coefficient follows as
r = -i Gamma_d <sigma_-(delta)> / (2 Omega_pr).  Closed-form expressions for
the single-branch and the two-branch (two-color) regimes provide the
analytic overlays the numerics are checked against.
"""

import time as _time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import engine
from .constants import to_angular
from .errors import DimensionError, UndefinedResponseError
from .lindblad import StepControl, default_initial_state
from .model import SystemParams, params_for_sideband_drive, sideband_rates

SWEEPABLE_FIELDS = (
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
)


# ---------------------------------------------------------------------------
# Fourier extraction

def fourier_component(
    samples: np.ndarray, times: np.ndarray, freq: float
) -> complex:
    """Continuous-convention Fourier amplitude of a sampled series.

    Returns (1/T) sum_k samples_k exp(+i 2 pi freq t_k) dt, so a pure
    exp(-i 2 pi f t) signal returns amplitude 1 at freq = f.  Requires
    uniform sampling; the window must cover at least one period of freq
    when freq is nonzero.
    """
    samples = np.asarray(samples)
    times = np.asarray(times, dtype=float)
    if samples.shape != times.shape or samples.ndim != 1:
        raise DimensionError("samples and times must be matching 1-D arrays")
    if len(times) < 2:
        raise ValueError("need at least two samples")
    spacings = np.diff(times)
    dt = spacings[0]
    if np.abs(spacings - dt).max() > 1e-9 * max(abs(dt), 1e-12):
        raise ValueError("non-uniform sampling")
    duration = dt * len(times)
    if freq != 0.0 and duration < 1.0 / abs(freq):
        raise ValueError(
            f"window {duration:.3g} us shorter than one period of {freq} MHz"
        )
    phases = np.exp(1j * to_angular(freq) * times)
    return complex(np.sum(samples * phases) * dt / duration)


def reflection_from_dipole(sigma_minus_component: complex, p: SystemParams) -> complex:
    """Reflection coefficient -i Gamma_d <sigma_-> / (2 Omega_pr)."""
    if p.omega_pr <= 0.0:
        raise UndefinedResponseError("reflection undefined without a probe")
    return -1j * p.gamma_d * sigma_minus_component / (2.0 * p.omega_pr)


# ---------------------------------------------------------------------------
# analytic reflection coefficients

def _gamma_f(p: SystemParams) -> float:
    return p.gamma_d / 2.0 + 2.0 * p.gamma_phi


def analytic_reflection_single(
    p: SystemParams, delta: float, branch: str = "+"
) -> complex:
    """Single-branch reflection (one sideband resonantly selected).

    Branch '+' is the red-side selection with dip at delta = omega_m -
    omega_g; branch '-' mirrors it at omega_m + omega_g.  Frequency ratios
    make the expression unit-independent, so ordinary MHz go straight in.
    """
    c1p, c1m, _, _ = sideband_rates(p)
    if branch == "+":
        c1, det = c1p, delta - p.omega_m + p.omega_g
    elif branch == "-":
        c1, det = c1m, delta - p.omega_m - p.omega_g
    else:
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    denom = 2.0 * _gamma_f(p) - 2j * det + 4.0 * c1 * c1 / (p.kappa - 2j * det)
    return p.gamma_d / denom


def analytic_reflection_branch(
    p: SystemParams, delta: float, branch: str
) -> complex:
    """One detuned sideband of the two-color regime (drive parked between).

    The qubit detuning is delta - omega_m while the mechanical channel is
    detuned by delta - omega_m -+ omega_g; the real part dips where the
    branch's mechanical denominator resonates.
    """
    c1p, c1m, _, _ = sideband_rates(p)
    det_q = delta - p.omega_m
    if branch == "+":
        c1, det_m = c1p, det_q - p.omega_g
    elif branch == "-":
        c1, det_m = c1m, det_q + p.omega_g
    else:
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    denom = 2.0 * _gamma_f(p) - 2j * det_q + 4.0 * c1 * c1 / (p.kappa - 2j * det_m)
    return p.gamma_d / denom


def analytic_reflection_two_color(p: SystemParams, delta: float) -> complex:
    """Mean optical response of the two branches: (r+ + r-)/2."""
    return 0.5 * (
        analytic_reflection_branch(p, delta, "+")
        + analytic_reflection_branch(p, delta, "-")
    )


# ---------------------------------------------------------------------------
# sweep machinery

@dataclass
class SpectrumPoint:
    """One reflection sample of a sweep."""

    coords: dict[str, float]
    r_num: complex | None
    r_analytic: complex | None
    converged: bool
    ncut_used: int
    wall_time: float
    windows: int = 0
    failed: bool = False

    @property
    def within_reflection_bound(self) -> bool:
        return self.r_num is None or abs(self.r_num) <= 1.0 + 1e-3


@dataclass
class SweepAxis:
    name: str
    start: float
    stop: float
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise ValueError(f"axis {self.name!r} needs at least 2 points")
        if self.name not in SWEEPABLE_FIELDS and self.name != "delta_s":
            raise ValueError(f"axis {self.name!r} is not a sweepable parameter")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.count)


@dataclass
class SweepSpec:
    """Gridded sweep request.

    axes name SystemParams fields or the derived drive detuning 'delta_s'
    (which pins delta0 through the exact dressed-detuning inverse).  With
    resonant_probe set, the probe tracks the dressed qubit (delta =
    omega_m + delta_s).  extract is 'probe' (the per-point probe beat) or
    an explicit frequency in MHz.
    """

    base: SystemParams
    axes: list[SweepAxis]
    extract: str | float = "probe"
    resonant_probe: bool = False
    threads: int = 1
    analytic_overlay: bool = True
    ctrl: StepControl | None = None

    def grid(self) -> list[dict[str, float]]:
        if not 1 <= len(self.axes) <= 2:
            raise ValueError("sweeps support one or two axes")
        if len(self.axes) == 1:
            return [{self.axes[0].name: float(v)} for v in self.axes[0].values()]
        outer, inner = self.axes
        return [
            {outer.name: float(a), inner.name: float(b)}
            for a in outer.values()
            for b in inner.values()
        ]


@dataclass
class SweepTable:
    spec: SweepSpec
    points: list[SpectrumPoint]
    meta: dict = field(default_factory=dict)


def _point_params(
    base: SystemParams, coords: dict[str, float], resonant_probe: bool = False
) -> SystemParams:
    overrides = {k: v for k, v in coords.items() if k != "delta_s"}
    p = base.with_(**overrides) if overrides else base
    if "delta_s" in coords:
        delta = p.omega_m + coords["delta_s"] if resonant_probe else p.delta
        p = params_for_sideband_drive(p, coords["delta_s"], delta=delta)
    elif resonant_probe:
        from .model import stark_detuning

        p = p.with_(delta=stark_detuning(p.delta0, p.omega_drv))
    return p


def default_sweep_ctrl(points: Sequence[SystemParams]) -> StepControl:
    """Window, transient and step defaults shared by a whole sweep."""
    return StepControl(
        transient=max(engine.transient_for(p) for p in points),
        window=max(engine.window_for(p) for p in points),
    )


def steady_reflection(
    p: SystemParams,
    ctrl: StepControl | None = None,
    rho0: np.ndarray | None = None,
    extract_freq: float | None = None,
) -> SpectrumPoint:
    """Single-point quasi-steady reflection through the sweep backend."""
    if ctrl is None:
        ctrl = default_sweep_ctrl([p])
    freq = p.delta if extract_freq is None else extract_freq
    start = _time.perf_counter()
    out = engine.steady_batch(
        [p], [freq], ctrl, rho0_list=None if rho0 is None else [rho0]
    )[0]
    wall = _time.perf_counter() - start
    r = None if out.failed else reflection_from_dipole(out.amplitude, p)
    return SpectrumPoint(
        coords={"delta": p.delta},
        r_num=r,
        r_analytic=None,
        converged=out.converged,
        ncut_used=p.ncut,
        wall_time=wall,
        windows=out.windows,
        failed=out.failed,
    )


def _attach_overlay(p: SystemParams, spec: SweepSpec) -> complex | None:
    """Analytic overlays only where they are defined.

    Single-branch form when the drive sits on a first sideband
    (delta_s = -+omega_g), mean two-branch form when it is parked between
    (delta_s = 0); otherwise no overlay.
    """
    if not spec.analytic_overlay:
        return None
    from .model import stark_detuning

    delta_s = stark_detuning(p.delta0, p.omega_drv) - p.omega_m
    tol = 1e-6 * max(p.omega_m, 1.0)
    if abs(delta_s + p.omega_g) < tol:
        return analytic_reflection_single(p, p.delta, "+")
    if abs(delta_s - p.omega_g) < tol:
        return analytic_reflection_single(p, p.delta, "-")
    if abs(delta_s) < tol and p.omega_g > 0.0:
        return analytic_reflection_two_color(p, p.delta)
    return None


def run_sweep(spec: SweepSpec) -> SweepTable:
    """Execute a gridded sweep; per-point failures are recorded, not raised.

    Points sharing a Fock truncation evolve together in one vectorized
    batch; results are reassembled in grid order regardless of execution
    grouping, and a rerun with the same spec and thread count reproduces
    the table exactly.
    """
    engine.set_threads(spec.threads)
    grid = spec.grid()
    params = [_point_params(spec.base, coords, spec.resonant_probe) for coords in grid]
    ctrl = spec.ctrl if spec.ctrl is not None else default_sweep_ctrl(params)

    extract = [
        p.delta if spec.extract == "probe" else float(spec.extract) for p in params
    ]

    # group by truncation (batch slices must share the matrix dimension)
    order: dict[int, list[int]] = {}
    for idx, p in enumerate(params):
        order.setdefault(p.ncut, []).append(idx)

    outcomes: list[engine.PointOutcome | None] = [None] * len(params)
    walls = np.zeros(len(params))
    start_all = _time.perf_counter()
    for ncut, indices in sorted(order.items()):
        group = [params[i] for i in indices]
        freqs = [extract[i] for i in indices]
        t0 = _time.perf_counter()
        results = engine.steady_batch(group, freqs, ctrl)
        per_point = (_time.perf_counter() - t0) / max(len(indices), 1)
        for i, res in zip(indices, results):
            outcomes[i] = res
            walls[i] = per_point

    points = []
    for coords, p, out, wall in zip(grid, params, outcomes, walls):
        r_num = None if out.failed else reflection_from_dipole(out.amplitude, p)
        points.append(
            SpectrumPoint(
                coords=dict(coords),
                r_num=r_num,
                r_analytic=_attach_overlay(p, spec),
                converged=out.converged,
                ncut_used=p.ncut,
                wall_time=wall,
                windows=out.windows,
                failed=out.failed,
            )
        )
    meta = {
        "points": len(points),
        "threads": spec.threads,
        "window_us": ctrl.window,
        "transient_us": ctrl.transient,
        "dt_us": ctrl.dt if ctrl.dt is not None else min(
            engine.default_dt(p) for p in params
        ),
        "runtime_s": _time.perf_counter() - start_all,
        "all_converged": all(pt.converged for pt in points),
    }
    return SweepTable(spec=spec, points=points, meta=meta)


def converged_ncut(
    p: SystemParams,
    ctrl: StepControl | None = None,
    start: int | None = None,
    r_tol: float = 1e-3,
    hard_cap: int = 256,
) -> tuple[int, bool, list[complex]]:
    """Smallest truncation (by doubling) whose reflection is size-stable.

    Compares the extracted r against a run at ceil(1.5x) the truncation;
    accepts when the change is below r_tol (absolute).  Returns
    (ncut, converged, history).  The hard cap flags failure instead of
    looping forever.
    """
    from .lindblad import default_ncut

    ncut = start if start is not None else default_ncut(p.n_th)
    history: list[complex] = []
    while True:
        r_here = steady_reflection(p.with_(ncut=ncut), ctrl).r_num
        bigger = int(np.ceil(1.5 * ncut))
        r_bigger = steady_reflection(p.with_(ncut=bigger), ctrl).r_num
        history.extend([r_here, r_bigger])
        if r_here is not None and r_bigger is not None and abs(
            r_here - r_bigger
        ) < r_tol:
            return ncut, True, history
        ncut *= 2
        if ncut > hard_cap:
            return hard_cap, False, history
