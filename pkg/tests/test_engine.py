import numpy as np
import pytest

import mceit.engine as engine
from mceit.errors import DimensionError, StepSizeError
from mceit.lindblad import StepControl, default_initial_state
from mceit.model import (
    collapse_ops,
    drive_frame_source,
    fig_default_params,
    sigma_minus_op,
)


def fast_ctrl(**overrides):
    base = dict(transient=0.2, window=1.0, max_windows=2, dt=0.00025)
    base.update(overrides)
    return StepControl(**base)


class TestAgainstReferencePath:
    def test_matches_generic_integrator(self):
        # same extraction through the drive-frame reference path
        from mceit.lindblad import quasi_steady

        p = fig_default_params()
        ctrl = fast_ctrl(window=2.0, max_windows=3)
        ref = quasi_steady(
            drive_frame_source(p),
            collapse_ops(p),
            default_initial_state(p),
            p.delta,
            ctrl,
            observable=sigma_minus_op(p.ncut),
        )
        out = engine.steady_batch([p], [p.delta], ctrl)[0]
        assert abs(ref.amplitude - out.amplitude) < 2e-4

    def test_numpy_path_matches_kernel(self):
        if not engine.HAVE_NUMBA:
            pytest.skip("kernel unavailable")
        p = fig_default_params()
        points = [p.with_(delta=d) for d in (95.5, 96.0)]
        ctrl = fast_ctrl()
        jit = engine.steady_batch(points, [q.delta for q in points], ctrl)
        engine.HAVE_NUMBA = False
        try:
            plain = engine.steady_batch(points, [q.delta for q in points], ctrl)
        finally:
            engine.HAVE_NUMBA = True
        for a, b in zip(jit, plain):
            assert abs(a.amplitude - b.amplitude) < 1e-12


class TestBatchIndependence:
    def test_slices_bitwise_independent_of_batch_makeup(self):
        p = fig_default_params()
        points = [p.with_(delta=d) for d in (95.0, 96.0, 97.0)]
        ctrl = fast_ctrl()
        together = engine.steady_batch(points, [q.delta for q in points], ctrl)
        for q, joint in zip(points, together):
            alone = engine.steady_batch([q], [q.delta], ctrl)[0]
            assert alone.amplitude == joint.amplitude
            assert alone.windows == joint.windows

    def test_thread_count_does_not_change_bits(self):
        if not engine.HAVE_NUMBA:
            pytest.skip("kernel unavailable")
        p = fig_default_params()
        points = [p.with_(delta=d) for d in np.linspace(95.0, 97.0, 5)]
        ctrl = fast_ctrl()
        engine.set_threads(1)
        one = engine.steady_batch(points, [q.delta for q in points], ctrl)
        engine.set_threads(2)
        two = engine.steady_batch(points, [q.delta for q in points], ctrl)
        engine.set_threads(1)
        for a, b in zip(one, two):
            assert a.amplitude == b.amplitude


class TestGuards:
    def test_mixed_truncations_rejected(self):
        p = fig_default_params()
        with pytest.raises(DimensionError):
            engine.steady_batch(
                [p, p.with_(ncut=8)], [96.0, 96.0], fast_ctrl()
            )

    def test_step_size_guard(self):
        p = fig_default_params()
        with pytest.raises(StepSizeError):
            engine.steady_batch([p], [p.delta], fast_ctrl(dt=0.01))

    def test_nan_initial_state_flagged_not_raised(self):
        p = fig_default_params()
        bad = default_initial_state(p)
        bad = bad.astype(complex)
        bad[0, 0] = np.nan
        out = engine.steady_batch(
            [p], [p.delta], fast_ctrl(), rho0_list=[bad]
        )[0]
        assert out.failed
        assert not out.converged


class TestWindowPolicy:
    def test_line_gap_and_window(self):
        p = fig_default_params()
        assert engine.min_line_gap(p) == pytest.approx(4.0)
        assert engine.window_for(p) == pytest.approx(50.0)


def test_transient_scale():
    p = fig_default_params()
    gamma_f_angular = 2.0 * np.pi * 2.0
    assert engine.transient_for(p) == pytest.approx(10.0 / gamma_f_angular)


def test_default_dt_rule():
    p = fig_default_params()
    assert engine.default_dt(p) == pytest.approx(min(1.0 / 100.0, 1.0 / 96.0) / 64.0)
