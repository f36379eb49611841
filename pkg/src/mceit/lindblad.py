"""Master-equation integration, steady-state extraction and the exact oracle.

The master equation is
    d rho/dt = -i[H, rho] + sum_k gamma_k D[A_k] rho,
    D[A] rho = (2 A rho A^dag - A^dag A rho - rho A^dag A) / 2,
with H and the rates in rad/us and time in us.

Two integration paths exist:

* :func:`evolve` / :func:`quasi_steady` here integrate a single system with
  arbitrary Hamiltonian sources and channels, by direct matrix products on
  rho (the full superoperator is never formed on this path).  A fixed-step
  classical RK4 is the default; an embedded 4(5) pair with a PI controller
  is available through ``StepControl(adaptive=True)``.
* :mod:`mceit.engine` holds the vectorized fixed-step backend the sweep
  machinery uses; it is cross-checked against this module's reference path
  in the test suite.

:func:`oracle_propagate` is the independent verification route: it builds
the full Liouvillian, exponentiates it and applies it to the vectorized
state.  It shares no stepping code with the integrators.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.linalg import expm

from .constants import TWO_PI, to_angular
from .errors import DimensionError, NanAbortError, StepSizeError
from .model import HarmonicHamiltonian, SystemParams, sideband_rates
from .operators import basis_ket, coherent_ket, kron, projector

logger = logging.getLogger(__name__)

# contract: fixed steps must resolve the fastest Hamiltonian period this many
# times over
MIN_STEPS_PER_PERIOD = 20.0

# default steps per fastest period when no dt is requested; sized so a
# halved step moves extracted amplitudes by well under 1e-4 relative
DEFAULT_STEPS_PER_PERIOD = 64.0

ORACLE_DIM_LIMIT = 12


# ---------------------------------------------------------------------------
# density-matrix helpers

def assert_density_matrix(
    rho: np.ndarray,
    herm_tol: float = 1e-10,
    trace_tol: float = 1e-8,
    eig_floor: float = -1e-8,
) -> None:
    """Validate Hermiticity, unit trace and positivity (on demand, not cheap)."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise DimensionError(f"density matrix must be square, got {rho.shape}")
    herm = np.abs(rho - rho.conj().T).max()
    if herm > herm_tol:
        raise ValueError(f"Hermiticity defect {herm:.3e} exceeds {herm_tol:.1e}")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"trace {tr} off unity by more than {trace_tol:.1e}")
    lo = float(np.linalg.eigvalsh(rho).min())
    if lo < eig_floor:
        raise ValueError(f"minimum eigenvalue {lo:.3e} below {eig_floor:.1e}")


def thermal_state(n_th: float, ncut: int) -> np.ndarray:
    """Truncated, renormalized thermal phonon state."""
    if n_th <= 0.0:
        return projector(basis_ket(ncut, 0))
    ratio = n_th / (n_th + 1.0)
    weights = ratio ** np.arange(ncut)
    weights /= weights.sum()
    return np.diag(weights).astype(complex)


def default_initial_state(p: SystemParams) -> np.ndarray:
    """Ground qubit with a vacuum (or thermal) phonon, per the bath occupancy."""
    qubit = projector(basis_ket(2, 1))
    return kron(qubit, thermal_state(p.n_th, p.ncut))


def default_ncut(n_th: float) -> int:
    """Starting Fock truncation for a thermal occupancy."""
    return max(6, int(math.ceil(n_th + 6.0 * math.sqrt(n_th + 1.0))))


# ---------------------------------------------------------------------------
# reference right-hand side

def lindblad_rhs(
    h: np.ndarray,
    collapses: Sequence[tuple[np.ndarray, float]],
    rho: np.ndarray,
) -> np.ndarray:
    """-i[H, rho] + sum_k rate_k D[A_k] rho by direct matrix products."""
    h = np.asarray(h)
    rho = np.asarray(rho)
    if h.shape != rho.shape:
        raise DimensionError(f"H {h.shape} and rho {rho.shape} differ")
    out = -1j * (h @ rho - rho @ h)
    for op, rate in collapses:
        if op.shape != rho.shape:
            raise DimensionError(f"collapse operator {op.shape} vs rho {rho.shape}")
        if rate == 0.0:
            continue
        op_dag = op.conj().T
        sandwich = op @ rho @ op_dag
        norm_op = op_dag @ op
        out += rate * (sandwich - 0.5 * (norm_op @ rho + rho @ norm_op))
    return out


# ---------------------------------------------------------------------------
# controls and outputs

@dataclass
class StepControl:
    """Integration and steady-state extraction knobs.

    dt            fixed step [us]; None picks 1/40 of the fastest period
    record_every  observable recording cadence in steps
    adaptive      use the embedded 4(5) pair instead of fixed-step RK4
    atol, rtol    adaptive error tolerances (entrywise on rho)
    trace_tol     renormalize-and-log threshold on trace drift
    transient     settling time dropped before extraction windows [us]
    window        analysis window length [us]
    eps_ss        relative window-to-window convergence threshold
    eps_ss_abs    absolute convergence floor
    max_windows   give up (flagged, not raised) after this many windows
    """

    dt: float | None = None
    record_every: int = 1
    adaptive: bool = False
    atol: float = 1e-10
    rtol: float = 1e-8
    trace_tol: float = 1e-7
    renormalize: bool = True
    transient: float | None = None
    window: float | None = None
    eps_ss: float = 1e-3
    eps_ss_abs: float = 1e-6
    max_windows: int = 8
    nan_check_every: int = 1000


@dataclass
class Trajectory:
    """Recorded time series plus the final state and run statistics."""

    times: np.ndarray
    records: dict[str, np.ndarray]
    final_state: np.ndarray
    stats: dict = field(default_factory=dict)


@dataclass
class SteadyResult:
    state: np.ndarray
    amplitude: complex
    converged: bool
    windows: int
    history: list[complex]
    stats: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# generic single-system integrator

class _HamiltonianSource:
    """Uniform view over static / callable / harmonic Hamiltonians.

    Tracks two frequency scales: ``fastest`` (the fastest coefficient
    oscillation, which sets the accuracy requirement on dt) and ``span``
    (a bound on the spectral span, which sets the explicit method's
    stability ceiling since coherences rotate at eigenvalue differences).
    """

    def __init__(self, hamiltonian):
        if isinstance(hamiltonian, HarmonicHamiltonian):
            self._call = hamiltonian.matrix
            self.dim = hamiltonian.dim
            self.fastest = hamiltonian.fastest_frequency
            self.span = hamiltonian.spectral_span
        elif callable(hamiltonian):
            self._call = hamiltonian
            probe = np.asarray(hamiltonian(0.0))
            self.dim = probe.shape[0]
            # time dependence unknown for a bare callable: treat the span as
            # the accuracy scale too (conservative)
            self.span = _spectral_span_mhz(probe)
            self.fastest = self.span
        else:
            mat = np.asarray(hamiltonian, dtype=complex)
            self._call = lambda t, _m=mat: _m
            self.dim = mat.shape[0]
            self.span = _spectral_span_mhz(mat)
            self.fastest = 0.0

    def matrix(self, t: float) -> np.ndarray:
        return np.asarray(self._call(t), dtype=complex)


def _spectral_span_mhz(h: np.ndarray) -> float:
    radius = float(np.abs(h).sum(axis=1).max())
    return 2.0 * radius / TWO_PI


# RK4 is stable for |lambda| dt below ~2.8 on the imaginary axis; keep margin
STABILITY_MARGIN = 2.0


def _default_dt(source: _HamiltonianSource) -> float:
    candidates = []
    if source.fastest > 0.0:
        candidates.append(1.0 / (source.fastest * DEFAULT_STEPS_PER_PERIOD))
    if source.span > 0.0:
        candidates.append(STABILITY_MARGIN / (TWO_PI * source.span) / 2.0)
    return min(candidates) if candidates else 1e-3


def _validate_dt(dt: float, source: _HamiltonianSource) -> None:
    fastest = source.fastest
    if fastest > 0.0 and dt > 1.0 / (fastest * MIN_STEPS_PER_PERIOD):
        raise StepSizeError(
            f"dt = {dt:.3e} us resolves the fastest Hamiltonian frequency "
            f"({fastest:.3f} MHz) fewer than {MIN_STEPS_PER_PERIOD:.0f} times "
            "per period; reduce dt or use the adaptive controller"
        )
    if source.span > 0.0 and dt > STABILITY_MARGIN / (TWO_PI * source.span):
        raise StepSizeError(
            f"dt = {dt:.3e} us exceeds the stability ceiling for a spectral "
            f"span of {source.span:.1f} MHz; reduce dt (or shrink the "
            "truncation, or use the co-rotating sweep backend)"
        )


class _Dissipator:
    """Precomputed channel data for the direct-product right-hand side."""

    def __init__(self, collapses, dim):
        active = [(np.asarray(a, complex), float(r)) for a, r in collapses if r > 0.0]
        for a, _ in active:
            if a.shape != (dim, dim):
                raise DimensionError(f"collapse operator {a.shape} vs dim {dim}")
        if active:
            self.ops = np.stack([a for a, _ in active])
            self.ops_dag = np.stack([a.conj().T for a, _ in active])
            self.rates = np.array([r for _, r in active])
            self.m_half = 0.5 * np.einsum(
                "k,kij->ij", self.rates, self.ops_dag @ self.ops
            )
        else:
            self.ops = None
            self.rates = None
            self.m_half = np.zeros((dim, dim), dtype=complex)

    def jumps(self, rho: np.ndarray) -> np.ndarray:
        if self.ops is None:
            return np.zeros_like(rho)
        sandwich = self.ops @ rho @ self.ops_dag
        return np.einsum("k,kij->ij", self.rates, sandwich)


def _rhs(source, diss, t, rho):
    """RHS via K = iH + M: out = jumps - K rho - (K rho)^dag (rho Hermitian).

    Exact on the Hermitian subspace and Hermiticity-preserving by
    construction; the roundoff-seeded anti-Hermitian component is not damped
    by this form, so steppers re-Hermitize periodically (see _symmetrize).
    """
    k = 1j * source.matrix(t) + diss.m_half
    w = k @ rho
    return diss.jumps(rho) - w - w.conj().T


def _symmetrize(rho: np.ndarray) -> np.ndarray:
    """Project back onto Hermitian matrices (kills roundoff growth modes)."""
    return 0.5 * (rho + rho.conj().T)


# Dormand-Prince 5(4) tableau
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def evolve(
    rho0: np.ndarray,
    hamiltonian,
    collapses: Sequence[tuple[np.ndarray, float]],
    t_final: float,
    observables: Mapping[str, np.ndarray | Callable] | None = None,
    ctrl: StepControl | None = None,
) -> Trajectory:
    """Integrate the master equation and record observables.

    ``hamiltonian`` may be a static matrix, a callable t -> matrix, or a
    :class:`HarmonicHamiltonian`.  Observables map names to operator
    matrices or callables (t, rho) -> complex.  The state is renormalized
    (and the event logged) whenever trace drift exceeds ctrl.trace_tol.
    """
    ctrl = ctrl or StepControl()
    source = _HamiltonianSource(hamiltonian)
    rho = np.array(rho0, dtype=complex)
    if rho.shape != (source.dim, source.dim):
        raise DimensionError(f"rho {rho.shape} vs Hamiltonian dim {source.dim}")
    diss = _Dissipator(collapses, source.dim)
    observables = dict(observables or {})

    if ctrl.adaptive:
        return _evolve_adaptive(rho, source, diss, t_final, observables, ctrl)
    return _evolve_fixed(rho, source, diss, t_final, observables, ctrl)


def _record(observables, t, rho, sink):
    for name, obs in observables.items():
        if callable(obs):
            sink[name].append(obs(t, rho))
        else:
            sink[name].append(complex(np.einsum("ij,ji->", rho, obs)))


def _check_trace(rho, t, ctrl, stats):
    tr = float(np.real(np.trace(rho)))
    drift = abs(tr - 1.0)
    stats["max_trace_drift"] = max(stats.get("max_trace_drift", 0.0), drift)
    if drift > ctrl.trace_tol and ctrl.renormalize:
        logger.warning("renormalizing at t=%.4f us, trace drift %.2e", t, drift)
        rho /= tr
        stats["renormalizations"] = stats.get("renormalizations", 0) + 1
    return rho


def _evolve_fixed(rho, source, diss, t_final, observables, ctrl):
    dt = ctrl.dt if ctrl.dt is not None else _default_dt(source)
    _validate_dt(dt, source)
    n_steps = max(1, int(round(t_final / dt)))
    dt = t_final / n_steps

    times = []
    sink = {name: [] for name in observables}
    stats = {"steps": n_steps, "dt": dt, "integrator": "rk4", "dim": source.dim}

    t = 0.0
    times.append(t)
    _record(observables, t, rho, sink)
    for step in range(1, n_steps + 1):
        k1 = _rhs(source, diss, t, rho)
        k2 = _rhs(source, diss, t + dt / 2.0, rho + (dt / 2.0) * k1)
        k3 = _rhs(source, diss, t + dt / 2.0, rho + (dt / 2.0) * k2)
        k4 = _rhs(source, diss, t + dt, rho + dt * k3)
        rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        t = step * dt
        if step % 256 == 0:
            rho = _symmetrize(rho)
        if step % ctrl.nan_check_every == 0 and not np.isfinite(rho).all():
            raise NanAbortError(
                f"non-finite state at t={t:.4f} us (step {step})", t=t, step=step
            )
        if step % ctrl.record_every == 0 or step == n_steps:
            rho = _check_trace(rho, t, ctrl, stats)
            times.append(t)
            _record(observables, t, rho, sink)
    if not np.isfinite(rho).all():
        raise NanAbortError(f"non-finite state at t={t:.4f} us", t=t, step=n_steps)

    records = {name: np.array(vals) for name, vals in sink.items()}
    return Trajectory(np.array(times), records, rho, stats)


def _evolve_adaptive(rho, source, diss, t_final, observables, ctrl):
    t = 0.0
    dt = ctrl.dt if ctrl.dt is not None else _default_dt(source)
    record_dt = t_final / 400.0
    next_record = record_dt

    times = [0.0]
    sink = {name: [] for name in observables}
    _record(observables, 0.0, rho, sink)
    stats = {"steps": 0, "rejected": 0, "integrator": "dopri45", "dim": source.dim}

    err_prev = 1.0
    k_stages = [None] * 7
    k_stages[0] = _rhs(source, diss, t, rho)
    scale_floor = ctrl.atol

    while t < t_final - 1e-15:
        dt = min(dt, t_final - t)
        for i in range(1, 7):
            acc = sum(
                (a * k_stages[j] for j, a in enumerate(_DP_A[i]) if a != 0.0),
                start=np.zeros_like(rho),
            )
            k_stages[i] = _rhs(source, diss, t + _DP_C[i] * dt, rho + dt * acc)
        rho5 = rho + dt * sum(
            (b * k_stages[j] for j, b in enumerate(_DP_B5) if b != 0.0),
            start=np.zeros_like(rho),
        )
        err_mat = dt * sum(
            ((_DP_B5[j] - _DP_B4[j]) * k_stages[j] for j in range(7)),
            start=np.zeros_like(rho),
        )
        scale = scale_floor + ctrl.rtol * np.maximum(np.abs(rho), np.abs(rho5))
        err = float(np.sqrt(np.mean((np.abs(err_mat) / scale) ** 2)))
        if err <= 1.0 or dt <= 1e-12:
            t += dt
            rho = rho5
            k_stages[0] = k_stages[6]  # FSAL
            stats["steps"] += 1
            if not np.isfinite(rho).all():
                raise NanAbortError(
                    f"non-finite state at t={t:.4f} us", t=t, step=stats["steps"]
                )
            if t >= next_record - 1e-15 or t >= t_final - 1e-15:
                rho = _symmetrize(rho)
                rho = _check_trace(rho, t, ctrl, stats)
                times.append(t)
                _record(observables, t, rho, sink)
                next_record += record_dt
            factor = 0.9 * err ** (-0.17) * err_prev**0.04 if err > 0 else 5.0
            err_prev = max(err, 1e-10)
        else:
            stats["rejected"] += 1
            factor = max(0.2, 0.9 * err**-0.2)
            k6 = None  # FSAL invalidated by rejection
            k_stages[0] = _rhs(source, diss, t, rho)
            del k6
        dt *= min(5.0, max(0.2, factor))

    records = {name: np.array(vals) for name, vals in sink.items()}
    return Trajectory(np.array(times), records, rho, stats)


# ---------------------------------------------------------------------------
# quasi-steady extraction (single system, reference path)

def quasi_steady(
    hamiltonian,
    collapses: Sequence[tuple[np.ndarray, float]],
    rho0: np.ndarray,
    extraction_freq: float,
    ctrl: StepControl,
    observable: np.ndarray | None = None,
) -> SteadyResult:
    """Evolve to the periodic steady regime and extract one Fourier amplitude.

    Evolves over ctrl.transient, then over repeated windows of length
    ctrl.window, accumulating the Fourier component of <observable>(t) at
    extraction_freq (MHz); converged when consecutive windows agree to
    ctrl.eps_ss relative (ctrl.eps_ss_abs absolute floor).  Transient should
    cover at least ten qubit coherence lifetimes.  Non-convergence after
    ctrl.max_windows is flagged on the result, never raised.
    """
    if ctrl.window is None or ctrl.transient is None:
        raise ValueError("quasi_steady needs ctrl.window and ctrl.transient set")
    source = _HamiltonianSource(hamiltonian)
    if observable is None:
        raise ValueError("quasi_steady needs the observable matrix to extract")
    diss = _Dissipator(collapses, source.dim)
    dt = ctrl.dt if ctrl.dt is not None else _default_dt(source)
    _validate_dt(dt, source)

    rho = np.array(rho0, dtype=complex)
    stats: dict = {"dt": dt}
    omega_ext = to_angular(extraction_freq)

    def advance(rho, t0, duration, accumulate):
        n = max(1, int(round(duration / dt)))
        h = duration / n
        acc = 0.0 + 0.0j
        t = t0
        for step in range(n):
            if accumulate:
                s = complex(np.einsum("ij,ji->", rho, observable))
                acc += s * np.exp(1j * omega_ext * t) * h
            k1 = _rhs(source, diss, t, rho)
            k2 = _rhs(source, diss, t + h / 2.0, rho + (h / 2.0) * k1)
            k3 = _rhs(source, diss, t + h / 2.0, rho + (h / 2.0) * k2)
            k4 = _rhs(source, diss, t + h, rho + h * k3)
            rho = rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            t = t0 + (step + 1) * h
            if (step + 1) % 256 == 0:
                rho = _symmetrize(rho)
            if (step + 1) % ctrl.nan_check_every == 0 and not np.isfinite(rho).all():
                raise NanAbortError(f"non-finite state at t={t:.4f}", t=t, step=step)
        rho = _check_trace(rho, t, ctrl, stats)
        return rho, t, acc / duration

    rho, t, _ = advance(rho, 0.0, ctrl.transient, accumulate=False)
    history: list[complex] = []
    converged = False
    for _ in range(ctrl.max_windows):
        rho, t, amp = advance(rho, t, ctrl.window, accumulate=True)
        history.append(amp)
        if len(history) >= 2:
            change = abs(history[-1] - history[-2])
            if change < max(ctrl.eps_ss * abs(history[-1]), ctrl.eps_ss_abs):
                converged = True
                break
    stats["windows"] = len(history)
    return SteadyResult(rho, history[-1], converged, len(history), history, stats)


# ---------------------------------------------------------------------------
# dark-state fidelity

def fidelity_dark(
    rho: np.ndarray, p: SystemParams, t: float, n_phase: int = 720
) -> tuple[float, float]:
    """Overlap of rho with the transported dark state at time t.

    The dark state's coherent amplitude rotates at the mechanical frequency;
    returns (raw, phase_maximized) where the second maximizes the overlap
    over one global coherent phase to absorb convention differences.
    """
    c1p, _, _, _ = sideband_rates(p)
    lam = p.omega_pr / c1p if c1p != 0.0 else 0.0
    nc = p.ncut
    gg_block = rho[nc:, nc:]
    alpha_t = lam * np.exp(-1j * to_angular(p.omega_m) * t)

    raw_ket = coherent_ket(alpha_t, nc)
    raw = float(np.real(raw_ket.conj() @ gg_block @ raw_ket))

    # one coherent matrix for all trial phases: amplitudes differ from the
    # raw ket only by phase^n per Fock row
    phases = np.exp(1j * np.linspace(0.0, TWO_PI, n_phase, endpoint=False))
    rows = phases[None, :] ** np.arange(nc)[:, None]
    kets = raw_ket[:, None] * rows
    overlaps = np.real(np.einsum("ni,nm,mi->i", kets.conj(), gg_block, kets))
    return raw, float(overlaps.max())


# ---------------------------------------------------------------------------
# exact propagation oracle

def oracle_propagate(
    rho0: np.ndarray,
    h: np.ndarray,
    collapses: Sequence[tuple[np.ndarray, float]],
    t: float,
) -> np.ndarray:
    """Exact propagation of a static-Hamiltonian master equation.

    Builds the dim^2 x dim^2 Liouvillian (row-major vectorization),
    exponentiates it by scaling-and-squaring and applies it to vec(rho0).
    Guarded to small dimensions; this is a verification oracle, not a
    production path.
    """
    h = np.asarray(h, dtype=complex)
    dim = h.shape[0]
    if dim > ORACLE_DIM_LIMIT:
        raise DimensionError(
            f"oracle limited to dim <= {ORACLE_DIM_LIMIT}, got {dim}"
        )
    eye = np.eye(dim)
    liou = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for op, rate in collapses:
        op = np.asarray(op, dtype=complex)
        norm_op = op.conj().T @ op
        liou += rate * (
            np.kron(op, op.conj())
            - 0.5 * np.kron(norm_op, eye)
            - 0.5 * np.kron(eye, norm_op.T)
        )
    propagator = expm(liou * t)
    return (propagator @ np.asarray(rho0, complex).reshape(-1)).reshape(dim, dim)
