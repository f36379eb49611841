"""Closed-form circuit physics of the flux-mediated qubit-resonator coupling.

Everything here is a pure function of a :class:`DeviceParams` record: the
SQUID's effective Josephson energy and its flux slope, the flux-qubit gap and
the transmon 0-1 frequency, their flux sensitivities, the mechanical
zero-point motion and the achievable modulation amplitude of the coupling.

Units: circuit energies in GHz, lengths/masses/fields in SI, mechanical
frequency as an ordinary frequency in MHz.  Angles in radians.  Conversions
to the simulator's MHz convention are explicit, never implicit.
"""

import math
import warnings
from dataclasses import dataclass

from .constants import HBAR, PHI0, TWO_PI
from .errors import DomainError, SingularPhaseError

# default guard half-width around phi_- = pi/2 for asymmetric junctions
DEFAULT_EPS_PHI = 1e-2


@dataclass(frozen=True)
class DeviceParams:
    """Circuit-level parameters of the SQUID / resonator hybrid.

    ej_sum      total Josephson energy of the SQUID [GHz]
    ej0         Josephson energy of the large junctions [GHz]
    ec          charging energy [GHz]
    d0          junction asymmetry, 0 <= d0 < 1
    phi_minus   flux phase through the SQUID loop [rad]
    b_field     in-plane field amplitude at the beam [T]
    xi          geometric constant of the beam mode shape
    length      beam length [m]
    mass        beam effective mass [kg]
    omega_m     mechanical frequency [MHz, ordinary]
    eps_phi     guard half-width around phi_- = pi/2 when d0 > 0 [rad]
    """

    ej_sum: float
    ej0: float
    ec: float
    d0: float
    phi_minus: float
    b_field: float
    xi: float
    length: float
    mass: float
    omega_m: float
    eps_phi: float = DEFAULT_EPS_PHI

    def __post_init__(self):
        if not 0.0 <= self.d0 < 1.0:
            raise DomainError(f"junction asymmetry must be in [0, 1), got {self.d0}")
        for name in ("ej_sum", "ec", "mass", "omega_m"):
            if getattr(self, name) <= 0.0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")
        _check_phase_guard(self.phi_minus, self.d0, self.eps_phi)


def _check_phase_guard(phi_minus: float, d0: float, eps_phi: float) -> None:
    if d0 > 0.0:
        distance = abs(math.remainder(phi_minus - math.pi / 2.0, math.pi))
        if distance < eps_phi:
            raise SingularPhaseError(
                f"phi_minus = {phi_minus:.6g} rad within {eps_phi:.2g} of the "
                "half-quantum point with asymmetric junctions"
            )


def effective_ej(p: DeviceParams) -> tuple[float, float]:
    """Effective Josephson energy [GHz] and shifted phase [rad] of the SQUID."""
    _check_phase_guard(p.phi_minus, p.d0, p.eps_phi)
    c, s = math.cos(p.phi_minus), math.sin(p.phi_minus)
    e_prime = p.ej_sum * math.sqrt(c * c + p.d0 * p.d0 * s * s)
    phi0 = math.atan(p.d0 * math.tan(p.phi_minus)) if p.d0 > 0.0 else 0.0
    return e_prime, phi0


def effective_ej_phase_derivative(p: DeviceParams) -> float:
    """d E'_J / d phi_-  [GHz/rad], analytic."""
    _check_phase_guard(p.phi_minus, p.d0, p.eps_phi)
    c = math.cos(p.phi_minus)
    root = math.sqrt((1.0 - p.d0 * p.d0) * c * c + p.d0 * p.d0)
    return (
        -p.ej_sum
        * math.sin(2.0 * p.phi_minus)
        * (1.0 - p.d0 * p.d0)
        / (2.0 * root)
    )


def flux_slope(p: DeviceParams) -> float:
    """Displacement slope d E'_J / d(dz) of the Josephson energy [GHz/m].

    The beam displacement modulates the loop flux by B * xi * l * dz, so the
    slope is the phase derivative times pi * B * xi * l / Phi0.  At d0 = 0
    this reduces to -pi * E_J * sin(phi_-) * B * xi * l / Phi0.
    """
    return (
        effective_ej_phase_derivative(p)
        * math.pi
        * p.b_field
        * p.xi
        * p.length
        / PHI0
    )


def gap_exponent_factor(alpha: float) -> float:
    """Shape factor g(alpha) in the flux-qubit gap exponent."""
    if alpha < 0.5:
        raise DomainError(f"shape factor defined for alpha >= 0.5, got {alpha}")
    inv4 = 1.0 / (4.0 * alpha)
    inv2 = 1.0 / (2.0 * alpha)
    return math.sqrt(1.0 - inv4 * inv4) - math.acos(inv2) * inv2


def flux_qubit_gap(
    ej0: float, ec: float, alpha: float, exponent_energy: str = "ej0"
) -> float:
    """Tight-binding gap of the gap-tunable flux qubit [GHz].

    alpha = E'_J / E_J0 must sit in the operating window (0.5, 1).  The
    energy inside the exponent is E_J0 by default; pass
    exponent_energy="ej_prime" to use alpha * E_J0 instead (the expression
    in the literature leaves this choice ambiguous).
    """
    if not 0.5 < alpha < 1.0:
        raise DomainError(f"alpha must be in (0.5, 1), got {alpha}")
    if ej0 <= 0.0 or ec <= 0.0:
        raise DomainError("ej0 and ec must be positive")
    if exponent_energy == "ej0":
        e_exp = ej0
    elif exponent_energy == "ej_prime":
        e_exp = alpha * ej0
    else:
        raise DomainError(f"unknown exponent_energy {exponent_energy!r}")
    prefactor_sq = 4.0 * ej0 * ec * (2.0 * alpha * alpha - 1.0) / alpha
    prefactor = math.copysign(math.sqrt(abs(prefactor_sq)), prefactor_sq)
    exponent = gap_exponent_factor(alpha) * math.sqrt(
        4.0 * alpha * (1.0 + 2.0 * alpha) * e_exp / ec
    )
    return prefactor * math.exp(-exponent)


def _gap_alpha_derivative(
    ej0: float, ec: float, alpha: float, exponent_energy: str, step: float = 1e-6
) -> float:
    """d(gap)/d(alpha) by Richardson-extrapolated central difference."""

    def central(h: float) -> float:
        return (
            flux_qubit_gap(ej0, ec, alpha + h, exponent_energy)
            - flux_qubit_gap(ej0, ec, alpha - h, exponent_energy)
        ) / (2.0 * h)

    d1 = central(step)
    d2 = central(step / 2.0)
    return (4.0 * d2 - d1) / 3.0


def gap_sensitivity(
    p: DeviceParams, alpha: float, exponent_energy: str = "ej0"
) -> float:
    """Flux sensitivity of the flux-qubit gap, d(gap)/d(phi_-) [GHz/rad].

    Chain rule: (d gap/d alpha) * (1/E_J0) * (d E'_J/d phi_-); the first
    factor is numerical (no closed form), the last analytic.
    """
    dgap_dalpha = _gap_alpha_derivative(p.ej0, p.ec, alpha, exponent_energy)
    return dgap_dalpha * (1.0 / p.ej0) * effective_ej_phase_derivative(p)


def per_radian_to_per_mphi0(value_per_rad: float) -> float:
    """Convert a flux sensitivity from GHz/rad to GHz/mPhi0.

    phi_- = pi * Phi_x / Phi0, so one milli-flux-quantum is pi * 1e-3 rad.
    """
    return value_per_rad * math.pi * 1e-3


def transmon_freq(ec: float, e_prime: float) -> float:
    """Transmon 0-1 transition frequency sqrt(8 E_C E'_J) - E_C [GHz]."""
    if ec <= 0.0 or e_prime <= 0.0:
        raise DomainError("ec and e_prime must be positive")
    if e_prime / ec < 10.0:
        warnings.warn(
            f"transmon regime requires E'_J >> E_C; ratio is {e_prime / ec:.2f}",
            stacklevel=2,
        )
    return math.sqrt(8.0 * ec * e_prime) - ec


def transmon_sensitivity(
    ec: float, ej_sum: float, phi_minus: float
) -> tuple[float, float]:
    """Flux sensitivity of the transmon frequency for symmetric junctions.

    Returns (GHz/rad, GHz/mPhi0).  Valid for phi_- in (0, pi/2).
    """
    if not 0.0 <= phi_minus < math.pi / 2.0:
        raise DomainError(
            f"transmon sensitivity needs phi_- in [0, pi/2), got {phi_minus}"
        )
    if ec <= 0.0 or ej_sum <= 0.0:
        raise DomainError("ec and ej_sum must be positive")
    per_rad = math.sqrt(
        2.0 * ec * ej_sum * math.sin(phi_minus) * math.tan(phi_minus)
    )
    return per_rad, per_radian_to_per_mphi0(per_rad)


def zero_point(mass: float, omega_m: float) -> float:
    """Zero-point displacement sqrt(hbar / (2 m omega)) [m]; omega_m in MHz."""
    if mass <= 0.0 or omega_m <= 0.0:
        raise DomainError("mass and omega_m must be positive")
    omega_angular = TWO_PI * omega_m * 1e6
    return math.sqrt(HBAR / (2.0 * mass * omega_angular))


def flux_swing_mphi0(p: DeviceParams) -> float:
    """Flux excursion B * xi * l * x0 through the loop, in mPhi0."""
    x0 = zero_point(p.mass, p.omega_m)
    return p.b_field * p.xi * p.length * x0 / PHI0 * 1e3


def coupling_amplitude(
    r_sens: float, p: DeviceParams, kappa_conv: float = TWO_PI
) -> tuple[float, float]:
    """Achievable modulation amplitude of the coupling [MHz].

    r_sens is a flux sensitivity in GHz/mPhi0.  The product
    r_sens * flux_swing gives the frequency swing per zero-point motion in
    GHz; kappa_conv collects the convention factors between that swing and
    the coupling amplitude quoted as g/2pi (the drive counts both field
    quadratures and the sensitivity is quoted per mPhi0 rather than per
    radian).  The factor actually used is returned alongside the value so
    downstream consumers can audit it.
    """
    if r_sens < 0.0:
        raise DomainError("flux sensitivity must be nonnegative")
    g_mhz = r_sens * flux_swing_mphi0(p) * kappa_conv * 1e3
    return g_mhz, kappa_conv
