import numpy as np
import pytest

from mceit.constants import TWO_PI, to_angular
from mceit.errors import DimensionError, StepSizeError
from mceit.lindblad import (
    StepControl,
    assert_density_matrix,
    default_initial_state,
    default_ncut,
    evolve,
    fidelity_dark,
    lindblad_rhs,
    oracle_propagate,
    quasi_steady,
    thermal_state,
)
from mceit.model import (
    HarmonicHamiltonian,
    fig_default_params,
    sideband_rates,
)
from mceit.operators import (
    annihilation,
    basis_ket,
    coherent_ket,
    creation,
    identity,
    kron,
    number_op,
    phonon_op,
    product_ket,
    projector,
    qubit_op,
    sigmam,
    sigmap,
    sigmax,
    sigmaz,
)


def two_level_channels(gamma_d, gamma_phi):
    return [
        (sigmam(), to_angular(gamma_d)),
        (sigmaz(), to_angular(gamma_phi)),
    ]


class TestLindbladRhs:
    def test_amplitude_damping_rate(self):
        # d rho_ee/dt = -Gamma rho_ee fixes the dissipator convention
        gamma = to_angular(3.0)
        rho = projector(basis_ket(2, 0))
        deriv = lindblad_rhs(np.zeros((2, 2)), [(sigmam(), gamma)], rho)
        assert deriv[0, 0].real == pytest.approx(-gamma, rel=1e-12)
        traj = evolve(
            rho,
            np.zeros((2, 2)),
            [(sigmam(), gamma)],
            1.0 / gamma,
            {"pee": projector(basis_ket(2, 0))},
            StepControl(dt=1e-4, record_every=100),
        )
        assert traj.records["pee"][-1].real == pytest.approx(np.exp(-1.0), abs=1e-6)

    def test_total_coherence_decay_rate(self):
        # sigma_- at Gamma_d/2 plus sigma_z at 2 Gamma_phi
        gamma_d, gamma_phi = 3.0, 0.25
        gamma_f = to_angular(gamma_d / 2.0 + 2.0 * gamma_phi)
        plus = (basis_ket(2, 0) + basis_ket(2, 1)) / np.sqrt(2.0)
        traj = evolve(
            projector(plus),
            np.zeros((2, 2)),
            two_level_channels(gamma_d, gamma_phi),
            0.2,
            {"sm": sigmam()},
            StepControl(dt=1e-4, record_every=50),
        )
        expected = 0.5 * np.exp(-gamma_f * traj.times)
        np.testing.assert_allclose(traj.records["sm"].real, expected, atol=1e-8)

    def test_thermal_fixed_point(self):
        n_th, ncut, kappa = 2.0, 30, 1.0
        channels = [
            (annihilation(ncut), to_angular((n_th + 1.0) * kappa)),
            (creation(ncut), to_angular(n_th * kappa)),
        ]
        rho0 = projector(basis_ket(ncut, 0))
        traj = evolve(
            rho0,
            np.zeros((ncut, ncut)),
            channels,
            3.0,
            {"n": number_op(ncut)},
            StepControl(dt=5e-4, record_every=1000),
        )
        assert traj.records["n"][-1].real == pytest.approx(n_th, abs=1e-3)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            lindblad_rhs(identity(4), [], identity(6))


class TestEvolve:
    def test_closed_purity_conserved(self):
        rng = np.random.default_rng(5)
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = TWO_PI * 0.5 * (m + m.conj().T) / 4.0
        psi = rng.normal(size=4) + 1j * rng.normal(size=4)
        rho0 = projector(psi / np.linalg.norm(psi))
        traj = evolve(
            rho0,
            h,
            [],
            10.0,
            {"purity": lambda t, r: np.trace(r @ r)},
            StepControl(dt=1e-3, record_every=500),
        )
        assert np.abs(traj.records["purity"].real - 1.0).max() < 1e-8

    def test_rabi_closed_form(self):
        omega = 1.0  # MHz
        h = -to_angular(omega) * sigmax()
        traj = evolve(
            projector(basis_ket(2, 1)),
            h,
            [],
            2.0,
            {"sz": sigmaz()},
            StepControl(dt=2.5e-4, record_every=40),
        )
        expected = -np.cos(2.0 * to_angular(omega) * traj.times)
        np.testing.assert_allclose(traj.records["sz"].real, expected, atol=1e-6)

    def test_matches_exact_propagator(self):
        # random static Hamiltonian on 2 (x) 3 with all four channels
        rng = np.random.default_rng(42)
        dim = 6
        m = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        h = TWO_PI * 0.3 * (m + m.conj().T) / dim
        channels = [
            (qubit_op(sigmam(), 3), to_angular(0.5)),
            (qubit_op(sigmaz(), 3), to_angular(0.3)),
            (phonon_op(annihilation(3)), to_angular(0.4)),
            (phonon_op(creation(3)), to_angular(0.15)),
        ]
        rho0 = kron(projector(basis_ket(2, 0)), projector(basis_ket(3, 1)))
        traj = evolve(rho0, h, channels, 5.0, None, StepControl(dt=2.5e-4))
        exact = oracle_propagate(rho0, h, channels, 5.0)
        assert np.linalg.norm(traj.final_state - exact) < 1e-8

    def test_adaptive_matches_fixed(self):
        h = -to_angular(1.0) * sigmax()
        channels = two_level_channels(0.4, 0.1)
        rho0 = projector(basis_ket(2, 1))
        fixed = evolve(rho0, h, channels, 3.0, None, StepControl(dt=1e-4))
        adaptive = evolve(
            rho0, h, channels, 3.0, None, StepControl(adaptive=True, dt=1e-3)
        )
        assert np.abs(fixed.final_state - adaptive.final_state).max() < 1e-7

    def test_step_size_contract(self):
        p = fig_default_params()
        from mceit.model import drive_frame_source

        with pytest.raises(StepSizeError):
            evolve(
                default_initial_state(p),
                drive_frame_source(p),
                [],
                0.01,
                None,
                StepControl(dt=0.01),
            )

    def test_times_strictly_increasing(self):
        traj = evolve(
            projector(basis_ket(2, 1)),
            -to_angular(1.0) * sigmax(),
            [],
            1.0,
            {"sz": sigmaz()},
            StepControl(dt=1e-3, record_every=100),
        )
        assert np.all(np.diff(traj.times) > 0)


class TestQuasiSteady:
    def test_two_level_susceptibility(self):
        # dressed two-level limit: r = Gamma_d / (2 Gamma_f - 2i(delta - d0))
        gamma_d, gamma_phi, omega_pr = 3.0, 0.25, 0.1
        gamma_f = gamma_d / 2.0 + 2.0 * gamma_phi
        d0 = 96.0
        for offset in (0.0, 1.0):
            delta = d0 + offset
            h0 = 0.5 * to_angular(d0) * sigmaz()
            source = HarmonicHamiltonian(
                h0=h0, terms=((delta, -to_angular(omega_pr) * sigmap()),)
            )
            res = quasi_steady(
                source,
                two_level_channels(gamma_d, gamma_phi),
                projector(basis_ket(2, 1)),
                delta,
                StepControl(transient=1.0, window=2.5, max_windows=6),
                observable=sigmam(),
            )
            assert res.converged
            r_num = -1j * gamma_d * res.amplitude / (2.0 * omega_pr)
            r_formula = gamma_d / (2.0 * gamma_f - 2j * (delta - d0))
            assert abs(r_num - r_formula) < 0.02 * abs(r_formula) + 5e-4

    def test_requires_window_and_transient(self):
        with pytest.raises(ValueError):
            quasi_steady(
                np.zeros((2, 2)),
                [],
                projector(basis_ket(2, 1)),
                1.0,
                StepControl(),
                observable=sigmam(),
            )


class TestFidelityDark:
    def test_exact_dark_state(self):
        p = fig_default_params()
        c1p = sideband_rates(p)[0]
        lam = p.omega_pr / c1p
        for t in (0.0, 0.37):
            alpha_t = lam * np.exp(-1j * to_angular(p.omega_m) * t)
            psi = kron(basis_ket(2, 1), coherent_ket(alpha_t, p.ncut))
            raw, best = fidelity_dark(projector(psi), p, t)
            assert raw == pytest.approx(1.0, abs=1e-10)
            assert best == pytest.approx(1.0, abs=1e-10)

    def test_orthogonal_state(self):
        p = fig_default_params()
        raw, best = fidelity_dark(projector(product_ket("e", 0, p.ncut)), p, 0.0)
        assert raw == 0.0
        assert best == 0.0

    def test_phase_maximized_dominates_raw(self):
        p = fig_default_params()
        c1p = sideband_rates(p)[0]
        lam = p.omega_pr / c1p
        psi = kron(basis_ket(2, 1), coherent_ket(lam * np.exp(0.4j), p.ncut))
        raw, best = fidelity_dark(projector(psi), p, 0.0)
        assert best > raw
        assert best == pytest.approx(1.0, abs=1e-4)


class TestOracle:
    def test_identity_at_zero_time(self):
        rng = np.random.default_rng(1)
        m = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        h = (m + m.conj().T) / 2.0
        rho0 = identity(4) / 4.0
        out = oracle_propagate(rho0, h, [(annihilation(4), 0.7)], 0.0)
        np.testing.assert_allclose(out, rho0, atol=1e-12)

    def test_trace_preserved(self):
        rng = np.random.default_rng(2)
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        h = TWO_PI * (m + m.conj().T) / 12.0
        channels = [
            (qubit_op(sigmam(), 3), 1.3),
            (phonon_op(annihilation(3)), 0.6),
        ]
        rho0 = kron(identity(2) / 2.0, projector(basis_ket(3, 2)))
        out = oracle_propagate(rho0, h, channels, 3.0)
        assert abs(np.trace(out) - 1.0) < 1e-12

    def test_dimension_guard(self):
        with pytest.raises(DimensionError):
            oracle_propagate(identity(16) / 16.0, identity(16), [], 1.0)


class TestStateHelpers:
    def test_thermal_state_mean(self):
        rho = thermal_state(2.0, 60)
        nbar = float(np.real(np.trace(rho @ number_op(60))))
        assert nbar == pytest.approx(2.0, abs=1e-6)

    def test_default_initial_state_is_valid(self):
        p = fig_default_params(n_th=3.0, ncut=40)
        assert_density_matrix(default_initial_state(p))

    def test_default_ncut_policy(self):
        assert default_ncut(0.0) == 6
        assert default_ncut(30.0) == 64

    def test_density_checker_rejects_bad_trace(self):
        with pytest.raises(ValueError):
            assert_density_matrix(np.diag([0.7, 0.7]).astype(complex))
