import numpy as np
import pytest

from mceit import engine
from mceit.cli import EXIT_OK, main
from mceit.config import parse_config
from mceit.lindblad import StepControl
from mceit.model import fig_default_params, stark_detuning
from mceit.presets import PRESET_NAMES, base_point, build, fig4b
from mceit.spectroscopy import SweepAxis, SweepSpec, run_sweep


def test_preset_names_closed():
    with pytest.raises(ValueError):
        build("fig99")
    assert set(PRESET_NAMES) == {
        "fig4a", "fig4b", "fig5", "fig6a", "fig6b", "fig7", "fig8"
    }


def test_base_point_matches_reference_operating_point():
    p = base_point()
    assert p.omega_m == 100.0
    assert p.g0 == 8.0
    assert p.omega_g == 4.0
    assert p.omega_drv == 10.0
    assert p.omega_pr == 0.2
    assert (p.gamma_d, p.gamma_phi, p.kappa) == (3.0, 0.25, 0.001)
    assert p.n_th == 0.0
    # drive parked on the red sideband: dressed detuning at omega_m - omega_g
    assert stark_detuning(p.delta0, p.omega_drv) == pytest.approx(96.0)
    assert p.delta == 96.0


def test_fig4b_tables_shape():
    run = fig4b(t_final=0.2, t_settle=0.1)
    assert [t[0] for t in run.tables] == ["fig4b", "fig4c"]
    stem, kind, cols, rows = run.tables[0]
    assert cols == ["t_us", "f_ds_raw", "f_ds", "im_sigma_minus"]
    times = [row[0] for row in rows]
    assert all(b > a for a, b in zip(times, times[1:]))
    _, _, fft_cols, fft_rows = run.tables[1]
    assert fft_cols == ["freq_MHz", "magnitude"]
    assert fft_rows[0][0] == 0.0


def test_preset_cli_roundtrip(tmp_path):
    cfg = tmp_path / "p.cfg"
    cfg.write_text("[run]\nmode = preset\npreset = fig4b\noutput = out\n")
    code = main(["preset", "--config", str(cfg), "--out", str(tmp_path)])
    assert code == EXIT_OK
    traj = (tmp_path / "fig4b.csv").read_text().splitlines()
    assert traj[0] == "t_us,f_ds_raw,f_ds,im_sigma_minus"
    fft = (tmp_path / "fig4c.csv").read_text().splitlines()
    assert fft[0] == "freq_MHz,magnitude"
    assert (tmp_path / "fig4b.meta.json").exists()
    assert (tmp_path / "fig4c.meta.json").exists()


def test_two_dimensional_sweep_grid_order():
    base = fig_default_params()
    ctrl = StepControl(transient=0.1, window=0.5, max_windows=1, dt=0.00025)
    spec = SweepSpec(
        base=base,
        axes=[
            SweepAxis("omega_g", 3.0, 4.0, 2),
            SweepAxis("delta", 95.0, 97.0, 2),
        ],
        ctrl=ctrl,
    )
    table = run_sweep(spec)
    coords = [(pt.coords["omega_g"], pt.coords["delta"]) for pt in table.points]
    assert coords == [(3.0, 95.0), (3.0, 97.0), (4.0, 95.0), (4.0, 97.0)]


def test_two_dimensional_config_parse():
    text = """
[run]
mode = sweep
output = map.csv

[system]
omega_m = 100.0
delta_s = 0.0
g0 = 8.0
omega_g = 4.0
omega_drv = 10.0
omega_pr = 0.2
delta = 100.0
gamma_d = 3.0
gamma_phi = 0.25
kappa = 0.001

[sweep]
axis = delta_s
start = -6.0
stop = 6.0
count = 5
axis2 = omega_g
start2 = 1.0
stop2 = 3.0
count2 = 3
resonant_probe = true
"""
    cfg = parse_config(text)
    spec = cfg.sweep_spec()
    assert [a.name for a in spec.axes] == ["omega_g", "delta_s"]
    assert len(spec.grid()) == 15
    assert spec.resonant_probe


def test_window_history_residuals_decrease():
    # damped approach to the periodic steady state at the transparency point
    p = fig_default_params()
    ctrl = StepControl(
        transient=0.4, window=3.125, max_windows=5, eps_ss=1e-9, eps_ss_abs=1e-12
    )
    out = engine.steady_batch([p], [p.delta], ctrl)[0]
    hist = out.history
    residuals = [abs(b - a) for a, b in zip(hist, hist[1:])]
    assert len(residuals) >= 3
    assert all(b < a for a, b in zip(residuals, residuals[1:]))
