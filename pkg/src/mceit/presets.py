"""Named runs reproducing the reflection-spectroscopy studies.

Each preset bundles the baseline operating point (mechanical mode at
100 MHz, modulation at 4 MHz, drive 10 MHz, probe 0.2 MHz, qubit rates
3 / 0.25 MHz, mechanical loss 1 kHz) with the figure's sweep geometry:

fig4a   single-color reflection spectrum, drive on the red sideband
fig4b   time evolution at the transparency point (dark-state fidelity and
        dipole series, plus the dipole spectrum as a second table)
fig5    thermal degradation of the fig4a dip (scaled grid around the dip;
        occupancies 0/10/30, 300 behind the stretch flag)
fig6a   map of resonant-probe reflection vs drive detuning and modulation
        frequency (coarse grid; this one is hours-scale, not gated by any
        acceptance bound)
fig6b   resonant-probe cut at 1.5 MHz modulation (third-order dips)
fig7    two-color spectrum with the drive parked between sidebands
fig8    two-color spectra for drive strengths 5/10/15/20 MHz

The thermal presets start from the truncated thermal state at a reduced,
dip-validated truncation rather than the raw occupancy-based starting rule;
steady-state extraction is initial-state independent and the choice is
checked by the truncation-convergence property in the acceptance suite.
"""

from dataclasses import dataclass, field

import numpy as np

from .constants import to_angular
from .lindblad import StepControl, Trajectory, default_initial_state, evolve, fidelity_dark
from .model import (
    SystemParams,
    collapse_ops,
    drive_frame_source,
    fig_default_params,
    params_for_sideband_drive,
    sigma_minus_op,
)
from .spectroscopy import SweepAxis, SweepSpec, SweepTable, run_sweep

PRESET_NAMES = ("fig4a", "fig4b", "fig5", "fig6a", "fig6b", "fig7", "fig8")

# run truncations for the thermal preset; the steady state near the dip is
# optically cold, which the acceptance suite verifies by the 1.5x check
FIG5_NCUT = {0.0: 6, 10.0: 12, 30.0: 16, 300.0: 256}
FIG5_OCCUPANCIES = (0.0, 10.0, 30.0)
FIG5_STRETCH_OCCUPANCY = 300.0


@dataclass
class PresetRun:
    """Computed payloads of one preset, ready for emission."""

    name: str
    tables: list[tuple[str, str, list[str], list[list]]] = field(default_factory=list)
    # (file stem, kind, column names, rows)
    meta: dict = field(default_factory=dict)
    all_converged: bool = True


def base_point() -> SystemParams:
    return fig_default_params()


def _sweep_rows(table: SweepTable, coord: str, offset: float) -> list[list]:
    rows = []
    for pt in table.points:
        x = pt.coords[coord] + offset
        if pt.r_num is None:
            r_re = r_im = None
        else:
            r_re, r_im = pt.r_num.real, pt.r_num.imag
        if pt.r_analytic is None:
            a_re = a_im = None
        else:
            a_re, a_im = pt.r_analytic.real, pt.r_analytic.imag
        rows.append([x, r_re, r_im, a_re, a_im, pt.converged, pt.ncut_used])
    return rows


SWEEP_COLUMNS = [
    "detuning_MHz",
    "re_r_num",
    "im_r_num",
    "re_r_eff",
    "im_r_eff",
    "converged",
    "ncut",
]


def fig4a(threads: int = 1) -> PresetRun:
    base = base_point()
    spec = SweepSpec(
        base=base,
        axes=[SweepAxis("delta", 86.0, 106.0, 81)],
        threads=threads,
    )
    table = run_sweep(spec)
    # figure coordinate is delta - omega_m + omega_g
    rows = _sweep_rows(table, "delta", -base.omega_m + base.omega_g)
    run = PresetRun("fig4a", meta={"sweep": table.meta})
    run.tables.append(("fig4a", "sweep", SWEEP_COLUMNS, rows))
    run.all_converged = table.meta["all_converged"]
    return run


def fig4b(threads: int = 1, t_final: float = 4.0, t_settle: float = 2.0) -> PresetRun:
    p = base_point()  # delta already at the dip
    ctrl = StepControl(dt=0.00025, record_every=4)
    traj = _fig4b_trajectory(p, t_final, ctrl)

    delta_ang = to_angular(p.delta)
    probe_frame = traj.records["sigma_minus"] * np.exp(1j * delta_ang * traj.times)
    rows = [
        [t, f_raw.real, f_max.real, im_sm]
        for t, f_raw, f_max, im_sm in zip(
            traj.times,
            traj.records["f_ds_raw"],
            traj.records["f_ds"],
            probe_frame.imag,
        )
    ]
    run = PresetRun(
        "fig4b",
        meta={"stats": traj.stats, "t_final_us": t_final, "fft_from_us": t_settle},
    )

    run.tables.append(
        ("fig4b", "trajectory", ["t_us", "f_ds_raw", "f_ds", "im_sigma_minus"], rows)
    )

    # dipole spectrum of the settled response; the dc bin is the probe-frame
    # optical response, transient ringing excluded
    settled = traj.times >= t_settle
    series = probe_frame.imag[settled]
    spectrum = np.fft.rfft(series) / len(series)
    dt_rec = float(traj.times[1] - traj.times[0])
    freqs = np.fft.rfftfreq(len(series), d=dt_rec)
    keep = freqs <= 25.0
    fft_rows = [[f, abs(a)] for f, a in zip(freqs[keep], np.abs(spectrum)[keep])]
    run.tables.append(("fig4c", "spectrum", ["freq_MHz", "magnitude"], fft_rows))
    return run


def _fig4b_trajectory(p: SystemParams, t_final: float, ctrl: StepControl) -> Trajectory:
    observables = {
        "sigma_minus": sigma_minus_op(p.ncut),
        "f_ds_raw": lambda t, rho: complex(fidelity_dark(rho, p, t)[0]),
        "f_ds": lambda t, rho: complex(fidelity_dark(rho, p, t)[1]),
    }
    return evolve(
        default_initial_state(p),
        drive_frame_source(p),
        collapse_ops(p),
        t_final,
        observables,
        ctrl,
    )


def fig5(threads: int = 1, stretch: bool = False) -> PresetRun:
    base = base_point()
    occupancies = list(FIG5_OCCUPANCIES) + (
        [FIG5_STRETCH_OCCUPANCY] if stretch else []
    )
    run = PresetRun("fig5", meta={"occupancies": occupancies})
    for n_th in occupancies:
        p = base.with_(n_th=n_th, ncut=FIG5_NCUT[n_th])
        spec = SweepSpec(
            base=p,
            axes=[SweepAxis("delta", 94.0, 98.0, 17)],
            threads=threads,
        )
        table = run_sweep(spec)
        rows = _sweep_rows(table, "delta", -base.omega_m + base.omega_g)
        run.tables.append(
            (f"fig5_nth{int(n_th)}", "sweep", SWEEP_COLUMNS, rows)
        )
        run.meta[f"nth{int(n_th)}"] = table.meta
        run.all_converged = run.all_converged and table.meta["all_converged"]
    return run


def fig6a(threads: int = 1) -> PresetRun:
    base = base_point()
    spec = SweepSpec(
        base=base,
        axes=[
            SweepAxis("omega_g", 0.5, 3.0, 6),
            SweepAxis("delta_s", -9.0, 9.0, 49),
        ],
        resonant_probe=True,
        threads=threads,
        ctrl=None,
    )
    # qualitative map: cap the analysis window (documented in the README)
    from .spectroscopy import default_sweep_ctrl, _point_params

    params = [_point_params(base, c, True) for c in spec.grid()]
    ctrl = default_sweep_ctrl(params)
    ctrl.window = min(ctrl.window, 100.0)
    spec.ctrl = ctrl
    table = run_sweep(spec)
    rows = []
    for pt in table.points:
        r = pt.r_num
        rows.append(
            [
                pt.coords["omega_g"],
                pt.coords["delta_s"],
                None if r is None else r.real,
                None if r is None else r.imag,
                pt.converged,
                pt.ncut_used,
            ]
        )
    run = PresetRun("fig6a", meta={"sweep": table.meta})
    run.tables.append(
        (
            "fig6a",
            "sweep2d",
            ["omega_g_MHz", "delta_s_MHz", "re_r_num", "im_r_num", "converged", "ncut"],
            rows,
        )
    )
    run.all_converged = table.meta["all_converged"]
    return run


def fig6b(threads: int = 1) -> PresetRun:
    base = base_point().with_(omega_g=1.5)
    spec = SweepSpec(
        base=base,
        axes=[SweepAxis("delta_s", -6.0, 6.0, 49)],
        resonant_probe=True,
        threads=threads,
    )
    from .spectroscopy import default_sweep_ctrl, _point_params

    params = [_point_params(base, c, True) for c in spec.grid()]
    ctrl = default_sweep_ctrl(params)
    # the third-order features are millikilohertz narrow; leakage needs are
    # set by the 0.03-deep dips, so a 50 us window suffices and keeps the
    # kappa-limited settling affordable
    ctrl.window = 50.0
    ctrl.max_windows = 8
    spec.ctrl = ctrl
    table = run_sweep(spec)
    rows = []
    for pt in table.points:
        r = pt.r_num
        rows.append(
            [
                pt.coords["delta_s"],
                None if r is None else r.real,
                None if r is None else r.imag,
                pt.converged,
                pt.ncut_used,
            ]
        )
    run = PresetRun("fig6b", meta={"sweep": table.meta})
    run.tables.append(
        (
            "fig6b",
            "sweep",
            ["delta_s_MHz", "re_r_num", "im_r_num", "converged", "ncut"],
            rows,
        )
    )
    run.all_converged = table.meta["all_converged"]
    return run


def fig7(threads: int = 1) -> PresetRun:
    base = params_for_sideband_drive(base_point(), 0.0, delta=100.0)
    spec = SweepSpec(
        base=base,
        axes=[SweepAxis("delta", 90.0, 110.0, 81)],
        threads=threads,
    )
    table = run_sweep(spec)
    rows = _sweep_rows(table, "delta", -base.omega_m)
    run = PresetRun("fig7", meta={"sweep": table.meta})
    run.tables.append(("fig7", "sweep", SWEEP_COLUMNS, rows))
    run.all_converged = table.meta["all_converged"]
    return run


def fig8(threads: int = 1) -> PresetRun:
    # step fine enough to resolve the weakest drive's transparency notch
    run = PresetRun("fig8")
    for drive in (5.0, 10.0, 15.0, 20.0):
        base = params_for_sideband_drive(
            base_point().with_(omega_drv=drive), 0.0, delta=100.0
        )
        spec = SweepSpec(
            base=base,
            axes=[SweepAxis("delta", 94.0, 106.0, 97)],
            threads=threads,
        )
        table = run_sweep(spec)
        rows = _sweep_rows(table, "delta", -base.omega_m)
        run.tables.append(
            (f"fig8_drive{int(drive)}", "sweep", SWEEP_COLUMNS, rows)
        )
        run.meta[f"drive{int(drive)}"] = table.meta
        run.all_converged = run.all_converged and table.meta["all_converged"]
    return run


def build(name: str, threads: int = 1, stretch: bool = False) -> PresetRun:
    if name == "fig4a":
        return fig4a(threads)
    if name == "fig4b":
        return fig4b(threads)
    if name == "fig5":
        return fig5(threads, stretch)
    if name == "fig6a":
        return fig6a(threads)
    if name == "fig6b":
        return fig6b(threads)
    if name == "fig7":
        return fig7(threads)
    if name == "fig8":
        return fig8(threads)
    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")
