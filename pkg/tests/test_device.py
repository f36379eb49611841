import math

import numpy as np
import pytest

from mceit.constants import PHI0
from mceit.device import (
    DeviceParams,
    coupling_amplitude,
    effective_ej,
    effective_ej_phase_derivative,
    flux_qubit_gap,
    flux_slope,
    flux_swing_mphi0,
    gap_exponent_factor,
    gap_sensitivity,
    per_radian_to_per_mphi0,
    transmon_freq,
    transmon_sensitivity,
    zero_point,
)
from mceit.errors import DomainError, SingularPhaseError


def make_params(**overrides) -> DeviceParams:
    base = dict(
        ej_sum=70.0,
        ej0=100.0,
        ec=2.0,
        d0=0.0,
        phi_minus=math.pi / 3.0,
        b_field=800e-6,
        xi=0.9,
        length=3e-6,
        mass=4e-21,
        omega_m=100.0,
    )
    base.update(overrides)
    return DeviceParams(**base)


class TestEffectiveEj:
    def test_flux_free(self):
        e, phi0 = effective_ej(make_params(phi_minus=0.0))
        assert e == pytest.approx(70.0)
        assert phi0 == 0.0

    def test_symmetric_at_pi_third(self):
        e, phi0 = effective_ej(make_params())
        assert e == pytest.approx(35.0)
        assert phi0 == 0.0

    def test_fully_asymmetric_limit(self):
        # d0 -> 1 collapses the root to 1 and the phase to phi_-
        p = make_params(d0=1.0 - 1e-9, phi_minus=0.7)
        e, phi0 = effective_ej(p)
        assert e == pytest.approx(70.0, rel=1e-8)
        assert phi0 == pytest.approx(0.7, abs=1e-8)

    def test_singular_phase_guard(self):
        with pytest.raises(SingularPhaseError):
            make_params(d0=0.1, phi_minus=math.pi / 2.0 + 1e-4)

    def test_continuity(self):
        for phi in (0.1, 0.8, 1.3):
            a, _ = effective_ej(make_params(d0=0.05, phi_minus=phi))
            b, _ = effective_ej(make_params(d0=0.05, phi_minus=phi + 1e-9))
            assert abs(a - b) < 1e-6 * 70.0


class TestFluxSlope:
    def test_no_field_no_slope(self):
        assert flux_slope(make_params(b_field=0.0)) == 0.0

    def test_symmetric_closed_form(self):
        # oracle: -pi E sin(phi) B xi l / Phi0 for d0 = 0 on the operating
        # quadrant (the general form differentiates E |cos phi|, so the two
        # agree where cos phi > 0)
        rng = np.random.default_rng(3)
        p0 = make_params()
        for phi in rng.uniform(0.05, math.pi / 2.0 - 0.05, size=100):
            p = make_params(phi_minus=float(phi))
            expected = (
                -math.pi * p.ej_sum * math.sin(phi) * p.b_field * p.xi * p.length / PHI0
            )
            got = flux_slope(p)
            assert got == pytest.approx(expected, rel=1e-12)
        assert p0  # silence lint on unused base

    def test_maximal_at_half_quantum_for_symmetric(self):
        phis = np.linspace(0.01, math.pi - 0.01, 401)
        mags = [abs(flux_slope(make_params(phi_minus=float(f)))) for f in phis]
        assert abs(phis[int(np.argmax(mags))] - math.pi / 2.0) < 0.01

    def test_matches_phase_derivative_chain(self):
        p = make_params(d0=0.1, phi_minus=0.9)
        chain = effective_ej_phase_derivative(p) * math.pi * p.b_field * p.xi * p.length / PHI0
        assert flux_slope(p) == pytest.approx(chain, rel=1e-14)

    def test_phase_derivative_against_finite_difference(self):
        for d0, phi in ((0.0, 0.7), (0.2, 1.1), (0.05, 0.4)):
            p = make_params(d0=d0, phi_minus=phi)
            h = 1e-7
            up, _ = effective_ej(make_params(d0=d0, phi_minus=phi + h))
            dn, _ = effective_ej(make_params(d0=d0, phi_minus=phi - h))
            fd = (up - dn) / (2.0 * h)
            assert effective_ej_phase_derivative(p) == pytest.approx(fd, rel=1e-5)


class TestFluxQubitGap:
    def test_gap_closes_at_root_crossing(self):
        assert abs(flux_qubit_gap(100.0, 2.0, 1.0 / math.sqrt(2.0))) < 1e-6

    def test_shape_factor_boundary(self):
        assert gap_exponent_factor(0.5) == pytest.approx(math.sqrt(3.0) / 2.0, abs=1e-12)

    def test_monotone_decreasing_in_alpha(self):
        # the gap rises just above the root crossing at 1/sqrt(2) (prefactor
        # dominated), peaks near alpha = 0.75 for E_J0/E_C = 50, then falls;
        # check the exponent-dominated tail
        ej0, ec = 100.0, 2.0
        alphas = np.linspace(0.78, 0.95, 60)
        gaps = [flux_qubit_gap(ej0, ec, float(a)) for a in alphas]
        assert all(b < a for a, b in zip(gaps, gaps[1:]))

    def test_domain_guard(self):
        with pytest.raises(DomainError):
            flux_qubit_gap(100.0, 2.0, 0.5)
        with pytest.raises(DomainError):
            flux_qubit_gap(100.0, 2.0, 1.0)

    def test_exponent_energy_switch(self):
        a = flux_qubit_gap(100.0, 2.0, 0.8, exponent_energy="ej0")
        b = flux_qubit_gap(100.0, 2.0, 0.8, exponent_energy="ej_prime")
        assert b > a  # alpha < 1 weakens the exponent


class TestGapSensitivity:
    def test_field_independent(self):
        a = gap_sensitivity(make_params(b_field=0.0), 0.75)
        b = gap_sensitivity(make_params(b_field=1e-3), 0.75)
        assert a == b

    def test_within_reported_experimental_range(self):
        # documented scan: |R_f| falls in 0.07-0.7 GHz/mPhi0 somewhere in the
        # operating window of a realistic gradiometric flux qubit
        found = False
        for ej0, ratio in ((200.0, 20.0), (300.0, 20.0), (300.0, 30.0)):
            for alpha in (0.65, 0.7, 0.75):
                for phi in (0.35 * math.pi, 0.45 * math.pi):
                    p = make_params(
                        ej_sum=2.0 * alpha * ej0, ej0=ej0, ec=ej0 / ratio, phi_minus=phi
                    )
                    rf = abs(per_radian_to_per_mphi0(gap_sensitivity(p, alpha)))
                    if 0.07 <= rf <= 0.7:
                        found = True
        assert found

    def test_step_halving_stability(self):
        from mceit.device import _gap_alpha_derivative

        d1 = _gap_alpha_derivative(100.0, 2.0, 0.8, "ej0", step=1e-6)
        d2 = _gap_alpha_derivative(100.0, 2.0, 0.8, "ej0", step=5e-7)
        assert abs(d1 - d2) < 1e-6 * abs(d2)

    def test_matches_parent_finite_difference(self):
        # differentiate gap(phi) = gap(alpha(phi)) directly in phi
        p = make_params(ej_sum=130.0, ej0=100.0, ec=3.0, phi_minus=0.9)
        alpha = effective_ej(p)[0] / p.ej0
        rf = gap_sensitivity(p, alpha)
        h = 1e-6

        def gap_at(phi):
            q = make_params(ej_sum=130.0, ej0=100.0, ec=3.0, phi_minus=phi)
            return flux_qubit_gap(q.ej0, q.ec, effective_ej(q)[0] / q.ej0)

        fd = (gap_at(0.9 + h) - gap_at(0.9 - h)) / (2.0 * h)
        assert rf == pytest.approx(fd, rel=1e-5)


class TestTransmon:
    def test_frequency_value(self):
        assert transmon_freq(2.0, 35.0) == pytest.approx(math.sqrt(560.0) - 2.0)

    def test_root_crossing(self):
        with pytest.warns(UserWarning):
            assert transmon_freq(2.0, 0.25) == pytest.approx(0.0, abs=1e-12)

    def test_sqrt_scaling(self):
        e01 = transmon_freq(2.0, 35.0)
        e01_double = transmon_freq(2.0, 70.0)
        assert (e01_double + 2.0) == pytest.approx(math.sqrt(2.0) * (e01 + 2.0), rel=1e-12)

    def test_sensitivity_paper_point(self):
        per_rad, per_mphi0 = transmon_sensitivity(2.0, 70.0, math.pi / 3.0)
        assert per_rad == pytest.approx(20.49, rel=1e-3)
        assert per_mphi0 == pytest.approx(0.064, rel=0.02)

    def test_sensitivity_vanishes_at_zero_phase(self):
        per_rad, _ = transmon_sensitivity(2.0, 70.0, 0.0)
        assert per_rad == 0.0

    def test_sensitivity_scaling_in_ec(self):
        a, _ = transmon_sensitivity(2.0, 70.0, 1.0)
        b, _ = transmon_sensitivity(8.0, 70.0, 1.0)
        assert b == pytest.approx(2.0 * a, rel=1e-12)

    def test_sensitivity_domain(self):
        with pytest.raises(DomainError):
            transmon_sensitivity(2.0, 70.0, math.pi / 2.0)

    def test_consistency_with_numeric_derivative(self):
        # numeric d E01 / d phi_- through the effective Josephson energy
        ec, ej_sum, phi = 2.0, 70.0, math.pi / 3.0
        per_rad, _ = transmon_sensitivity(ec, ej_sum, phi)
        h = 1e-7

        def e01(f):
            e_prime, _ = effective_ej(make_params(ej_sum=ej_sum, ec=ec, phi_minus=f))
            return transmon_freq(ec, e_prime)

        fd = abs((e01(phi + h) - e01(phi - h)) / (2.0 * h))
        assert per_rad == pytest.approx(fd, rel=1e-6)


class TestZeroPointAndCoupling:
    def test_zero_point_value(self):
        assert zero_point(4e-21, 100.0) == pytest.approx(4.58e-12, rel=0.01)

    def test_mass_scaling(self):
        assert zero_point(16e-21, 100.0) == pytest.approx(zero_point(4e-21, 100.0) / 2.0)

    def test_frequency_scaling(self):
        assert zero_point(4e-21, 400.0) == pytest.approx(zero_point(4e-21, 100.0) / 2.0)

    def test_no_field_no_coupling(self):
        g, _ = coupling_amplitude(0.25, make_params(b_field=0.0))
        assert g == 0.0

    def test_paper_operating_point(self):
        # R = 0.25 GHz/mPhi0, B = 800 uT, l = 3 um, xi = 0.9 -> about 8 MHz
        p = make_params()
        g, factor = coupling_amplitude(0.25, p)
        assert factor == pytest.approx(2.0 * math.pi)
        assert g == pytest.approx(8.0, rel=0.15)

    def test_linear_in_field(self):
        g1, _ = coupling_amplitude(0.25, make_params(b_field=400e-6))
        g2, _ = coupling_amplitude(0.25, make_params(b_field=800e-6))
        assert g2 == pytest.approx(2.0 * g1, rel=1e-12)

    def test_flux_swing_magnitude(self):
        # 800 uT * 0.9 * 3 um * 4.58 pm / Phi0 is a few micro-flux-quanta
        assert flux_swing_mphi0(make_params()) == pytest.approx(4.78e-3, rel=0.02)
