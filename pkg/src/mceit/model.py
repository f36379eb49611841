"""System parameters and every Hamiltonian / analytic rate of the hybrid model.

The model is a driven qubit whose frequency is modulated by a mechanical
mode through a longitudinal coupling g(t) sigma_z (b + b^dag) with
g(t) = g0 cos(omega_g t).  Everything is expressed in the frame rotating at
the drive frequency, where the probe appears as a beat note at the
probe-drive detuning delta.

All :class:`SystemParams` fields are ordinary frequencies in MHz (the
omega/2pi numbers); matrices returned by the builders are in angular rad/us,
time in us.  The conversion happens exactly once, here.
"""

import warnings
from dataclasses import dataclass, replace
import numpy as np

from .constants import to_angular
from .errors import DomainError, PoleGuardError
from .operators import (
    annihilation,
    basis_ket,
    coherent_ket,
    creation,
    kron,
    number_op,
    phonon_op,
    qubit_op,
    sigmam,
    sigmap,
    sigmax,
    sigmaz,
)

# warning threshold on the polaron-displacement bound; the perturbative
# expansion behind the sideband rates needs |beta| << 1
BETA_WARN_THRESHOLD = 0.2

# relative guard on omega_m - omega_g before the displacement diverges
POLE_GUARD_REL = 1e-6


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of one simulation, in MHz / dimensionless.

    omega_m     mechanical frequency
    delta0      bare qubit-drive detuning
    g0          coupling-modulation amplitude
    omega_g     coupling-modulation frequency
    omega_drv   drive Rabi frequency
    omega_pr    probe Rabi frequency
    delta       probe-drive detuning
    gamma_d     qubit decay rate
    gamma_phi   qubit pure-dephasing rate
    kappa       mechanical relaxation rate
    n_th        mean thermal phonon number of the mechanical bath
    ncut        Fock truncation
    n_rate      occupation offset <b^dag b> - 1 entering the sideband rates
    """

    omega_m: float
    delta0: float
    g0: float
    omega_g: float
    omega_drv: float
    omega_pr: float
    delta: float
    gamma_d: float
    gamma_phi: float
    kappa: float
    n_th: float = 0.0
    ncut: int = 6
    n_rate: float = -1.0

    def __post_init__(self):
        if self.omega_m <= 0.0:
            raise DomainError(f"omega_m must be positive, got {self.omega_m}")
        if self.omega_g < 0.0:
            raise DomainError(f"omega_g must be nonnegative, got {self.omega_g}")
        if self.omega_g >= self.omega_m:
            raise PoleGuardError(
                f"omega_g = {self.omega_g} must stay strictly below "
                f"omega_m = {self.omega_m}"
            )
        for name in ("gamma_d", "gamma_phi", "kappa", "omega_pr", "omega_drv", "n_th"):
            if getattr(self, name) < 0.0:
                raise DomainError(f"{name} must be nonnegative")
        if self.ncut < 4:
            raise DomainError(f"ncut must be >= 4, got {self.ncut}")
        bound = polaron_displacement_bound(self)
        if bound >= BETA_WARN_THRESHOLD:
            warnings.warn(
                f"displacement bound {bound:.3f} exceeds {BETA_WARN_THRESHOLD}; "
                "the sideband expansion is unreliable here",
                stacklevel=2,
            )

    def with_(self, **overrides) -> "SystemParams":
        return replace(self, **overrides)


@dataclass(frozen=True)
class HarmonicHamiltonian:
    """Hamiltonian of the form h0 + sum_k exp(-i 2 pi f_k t) m_k + h.c.

    h0 is Hermitian, in rad/us; each harmonic is carried by its ordinary
    frequency f_k in MHz together with the (generally non-Hermitian) matrix
    m_k in rad/us.  This decomposition is what the fixed-step integrator
    consumes; :meth:`matrix` materializes the dense Hamiltonian for tests
    and for the generic integration path.
    """

    h0: np.ndarray
    terms: tuple[tuple[float, np.ndarray], ...]

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    def matrix(self, t: float) -> np.ndarray:
        h = self.h0.astype(complex).copy()
        for freq, m in self.terms:
            phase = np.exp(-1j * to_angular(freq) * t)
            h += phase * m
            h += np.conj(phase) * m.conj().T
        return h

    @property
    def fastest_frequency(self) -> float:
        """Fastest coefficient oscillation of H(t), in MHz (accuracy scale)."""
        return max((abs(f) for f, _ in self.terms), default=0.0)

    @property
    def spectral_span(self) -> float:
        """Gershgorin bound on the spectral span of H(t), in MHz.

        Coherences rotate at eigenvalue differences, so this sets the
        explicit integrator's stability ceiling (distinct from the
        coefficient frequencies, which set the accuracy requirement).
        """
        magnitude = np.abs(self.h0).astype(float)
        for _, m in self.terms:
            magnitude += np.abs(m)
            magnitude += np.abs(m).T
        radius = float(magnitude.sum(axis=1).max())  # bound on max |eigenvalue|
        return 2.0 * radius / (2.0 * np.pi)


def _pole_guard(p: SystemParams) -> None:
    if abs(p.omega_m - p.omega_g) < POLE_GUARD_REL * p.omega_m:
        raise PoleGuardError(
            f"omega_g = {p.omega_g} within guard of omega_m = {p.omega_m}"
        )


def drive_frame_hamiltonian(p: SystemParams, t: float) -> np.ndarray:
    """Dense drive-frame Hamiltonian at time t [rad/us]."""
    return drive_frame_source(p).matrix(t)


def drive_frame_source(p: SystemParams) -> HarmonicHamiltonian:
    """Drive-frame Hamiltonian as a harmonic decomposition.

    H(t)/hbar = delta0/2 sigma_z + omega_m n + g0 cos(omega_g t) sigma_z (b+b^dag)
                - omega_drv sigma_x - omega_pr (sigma_+ e^{-i delta t} + h.c.)
    """
    nc = p.ncut
    h0 = (
        0.5 * to_angular(p.delta0) * qubit_op(sigmaz(), nc)
        + to_angular(p.omega_m) * phonon_op(number_op(nc))
        - to_angular(p.omega_drv) * qubit_op(sigmax(), nc)
    )
    coupling = 0.5 * to_angular(p.g0) * kron(sigmaz(), annihilation(nc) + creation(nc))
    probe = -to_angular(p.omega_pr) * qubit_op(sigmap(), nc)
    return HarmonicHamiltonian(h0=h0, terms=((p.omega_g, coupling), (p.delta, probe)))


def interaction_picture_source(p: SystemParams) -> HarmonicHamiltonian:
    """Drive-frame Hamiltonian in the frame co-rotating with the free phonon.

    Removing omega_m b^dag b exactly (b -> b e^{-i omega_m t}) keeps every
    Lindblad channel invariant and leaves the longitudinal coupling as two
    harmonics at omega_m -+ omega_g on sigma_z b.  The stiff Fock ladder
    disappears from the static part, so the stable step size no longer
    shrinks with the truncation.
    """
    nc = p.ncut
    h0 = 0.5 * to_angular(p.delta0) * qubit_op(sigmaz(), nc) - to_angular(
        p.omega_drv
    ) * qubit_op(sigmax(), nc)
    half_g = 0.5 * to_angular(p.g0)
    coupling = half_g * kron(sigmaz(), annihilation(nc))
    probe = -to_angular(p.omega_pr) * qubit_op(sigmap(), nc)
    return HarmonicHamiltonian(
        h0=h0,
        terms=(
            (p.omega_m - p.omega_g, coupling),
            (p.omega_m + p.omega_g, coupling),
            (p.delta, probe),
        ),
    )


def phonon_frame_phases(ncut: int, t: float, omega_m: float) -> np.ndarray:
    """Diagonal of the phonon rotation exp(-i omega_m n t) on the product space."""
    phases = np.exp(-1j * to_angular(omega_m) * t * np.arange(ncut))
    return np.concatenate([phases, phases])


def rotate_to_drive_frame(rho_ip: np.ndarray, p: SystemParams, t: float) -> np.ndarray:
    """Map a phonon-interaction-picture state back to the drive frame."""
    d = phonon_frame_phases(p.ncut, t, p.omega_m)
    return d[:, None] * rho_ip * d.conj()[None, :]


def polaron_displacement(p: SystemParams, t: float) -> complex:
    """Displacement beta(t) that removes the longitudinal coupling.

    The particular solution (free constant set to zero) of the displacement
    equations for g(t) = g0 cos(omega_g t).
    """
    _pole_guard(p)
    phase = to_angular(p.omega_g) * t
    return (
        0.5
        * p.g0
        * (
            np.exp(1j * phase) / (p.omega_m + p.omega_g)
            + np.exp(-1j * phase) / (p.omega_m - p.omega_g)
        )
    )


def polaron_displacement_derivative(p: SystemParams, t: float) -> complex:
    """d beta / dt in rad/us (analytic)."""
    _pole_guard(p)
    wg = to_angular(p.omega_g)
    phase = wg * t
    return (
        0.5
        * p.g0
        * 1j
        * wg
        * (
            np.exp(1j * phase) / (p.omega_m + p.omega_g)
            - np.exp(-1j * phase) / (p.omega_m - p.omega_g)
        )
    )


def polaron_residual(p: SystemParams, t: float) -> complex:
    """Defect g(t) - omega_m beta(t) + i d beta/dt of the displacement equations.

    Zero (to roundoff) for the analytic beta; expressed in rad/us.
    """
    g_t = to_angular(p.g0) * np.cos(to_angular(p.omega_g) * t)
    return (
        g_t
        - to_angular(p.omega_m) * polaron_displacement(p, t)
        + 1j * polaron_displacement_derivative(p, t)
    )


def polaron_displacement_bound(p: SystemParams) -> float:
    """Upper bound g0 sqrt(omega_m^2 + omega_g^2) / (omega_m^2 - omega_g^2) on |beta|."""
    if p.omega_g >= p.omega_m:
        raise PoleGuardError("bound undefined for omega_g >= omega_m")
    return (
        p.g0
        * np.sqrt(p.omega_m**2 + p.omega_g**2)
        / (p.omega_m**2 - p.omega_g**2)
    )


def sideband_rates(p: SystemParams) -> tuple[float, float, float, float]:
    """First- and third-order sideband transition rates (MHz).

    Returns (c1_plus, c1_minus, c3_plus, c3_minus).  The cubic corrections
    carry the occupation offset N = <b^dag b> - 1 supplied as p.n_rate.
    """
    _pole_guard(p)
    n = p.n_rate
    g, om, wg, drv = p.g0, p.omega_m, p.omega_g, p.omega_drv
    diff_sq = om * om - wg * wg
    cubic = 4.0 * n * g**3 * drv / 3.0

    c1 = []
    c3 = []
    for sign in (+1.0, -1.0):
        denom = om - sign * wg
        c1.append(g * drv / denom - cubic * (3.0 * om - sign * wg) / (diff_sq**2))
        c3.append(cubic / (diff_sq * denom))
    return c1[0], c1[1], c3[0], c3[1]


def stark_detuning(delta0: float, omega_drv: float) -> float:
    """Drive-dressed detuning sqrt(delta0^2 + 4 omega_drv^2) [MHz]."""
    return float(np.sqrt(delta0**2 + 4.0 * omega_drv**2))


def delta0_for(delta_tilde: float, omega_drv: float) -> float:
    """Bare detuning that produces a requested dressed detuning [MHz]."""
    radicand = delta_tilde**2 - 4.0 * omega_drv**2
    if radicand < 0.0:
        raise DomainError(
            f"dressed detuning {delta_tilde} below the minimum 2*omega_drv = "
            f"{2.0 * omega_drv}"
        )
    return float(np.sqrt(radicand))


def stark_shift_branch(p: SystemParams, branch: str) -> float:
    """Residual drive-induced shift of the branch resonance [MHz].

    Exact form sqrt((omega_m -+ omega_g)^2 - 4 omega_drv^2) - (omega_m -+ omega_g);
    magnitude is approximately 2 omega_drv^2 / omega_m for weak drive.
    """
    sign = _branch_sign(branch)
    base = p.omega_m - sign * p.omega_g
    radicand = base * base - 4.0 * p.omega_drv**2
    if radicand < 0.0:
        raise DomainError("drive too strong for the dispersive shift expression")
    return float(np.sqrt(radicand) - base)


def _branch_sign(branch: str) -> float:
    if branch == "+":
        return +1.0
    if branch == "-":
        return -1.0
    raise DomainError(f"branch must be '+' or '-', got {branch!r}")


def effective_hamiltonian_single(p: SystemParams, branch: str) -> np.ndarray:
    """Static resonant-branch Hamiltonian C1 sigma_+ b - omega_pr sigma_+ + h.c.

    Valid on resonance (drive detuning pinned to the chosen sideband and the
    probe to the corresponding beat); the caller asserts those conditions.
    Returned in rad/us on the product space.
    """
    c1p, c1m, _, _ = sideband_rates(p)
    c1 = c1p if _branch_sign(branch) > 0 else c1m
    nc = p.ncut
    upper = to_angular(c1) * kron(sigmap(), annihilation(nc)) - to_angular(
        p.omega_pr
    ) * qubit_op(sigmap(), nc)
    return upper + upper.conj().T


def effective_hamiltonian_twocolor(p: SystemParams, t: float) -> np.ndarray:
    """Two-branch effective Hamiltonian for a drive parked between sidebands.

    Both first-order sidebands stay detuned by -+omega_g and the probe term
    beats at omega_m - delta; rad/us on the product space.
    """
    c1p, c1m, _, _ = sideband_rates(p)
    nc = p.ncut
    sp_b = kron(sigmap(), annihilation(nc))
    wg = to_angular(p.omega_g)
    upper = (
        to_angular(c1p) * np.exp(1j * wg * t) * sp_b
        + to_angular(c1m) * np.exp(-1j * wg * t) * sp_b
        - to_angular(p.omega_pr)
        * np.exp(1j * to_angular(p.omega_m - p.delta) * t)
        * qubit_op(sigmap(), nc)
    )
    return upper + upper.conj().T


def dark_state(p: SystemParams) -> np.ndarray:
    """Steady dark state |g> (x) |alpha_lambda>, lambda = omega_pr / C1+."""
    c1p, _, _, _ = sideband_rates(p)
    if c1p == 0.0:
        raise DomainError("dark state undefined: the C1+ sideband rate vanishes")
    lam = p.omega_pr / c1p
    return kron(basis_ket(2, 1), coherent_ket(lam, p.ncut))


def collapse_rates(p: SystemParams) -> tuple[float, float, float, float]:
    """Angular rates (rad/us) of the four dissipation channels.

    Order: qubit decay, qubit dephasing, phonon loss, phonon gain.
    """
    return (
        to_angular(p.gamma_d),
        to_angular(p.gamma_phi),
        to_angular((p.n_th + 1.0) * p.kappa),
        to_angular(p.n_th * p.kappa),
    )


def collapse_ops(p: SystemParams) -> list[tuple[np.ndarray, float]]:
    """Collapse operators with angular rates, promoted to the product space."""
    nc = p.ncut
    g_d, g_phi, k_down, k_up = collapse_rates(p)
    return [
        (qubit_op(sigmam(), nc), g_d),
        (qubit_op(sigmaz(), nc), g_phi),
        (phonon_op(annihilation(nc)), k_down),
        (phonon_op(creation(nc)), k_up),
    ]


def sigma_minus_op(ncut: int) -> np.ndarray:
    """Promoted qubit lowering operator, the recorded dipole observable."""
    return qubit_op(sigmam(), ncut)


def params_for_sideband_drive(
    base: SystemParams, delta_s: float, delta: float | None = None
) -> SystemParams:
    """Pin the bare detuning so the dressed detuning sits at omega_m + delta_s.

    delta_s is the sideband drive detuning; the probe-drive detuning is set
    to `delta` when given.  Uses the exact inverse of the dressed-detuning
    relation, never the weak-drive approximation.
    """
    delta_tilde = base.omega_m + delta_s
    overrides = {"delta0": delta0_for(delta_tilde, base.omega_drv)}
    if delta is not None:
        overrides["delta"] = delta
    return base.with_(**overrides)


def fig_default_params(**overrides) -> SystemParams:
    """Baseline operating point used throughout the reflection studies."""
    base = dict(
        omega_m=100.0,
        delta0=delta0_for(96.0, 10.0),
        g0=8.0,
        omega_g=4.0,
        omega_drv=10.0,
        omega_pr=0.2,
        delta=96.0,
        gamma_d=3.0,
        gamma_phi=0.25,
        kappa=0.001,
        n_th=0.0,
        ncut=6,
        n_rate=0.0,
    )
    base.update(overrides)
    return SystemParams(**base)

