"""Qubit-resonator simulator with a sinusoidally modulated longitudinal coupling.

Reflection spectroscopy of a driven qubit whose frequency is modulated by a
mechanical mode: sideband-transition splitting, single- and two-color
transparency windows, dark-state steering, and the circuit-level estimates
behind the achievable coupling.
"""

from .device import DeviceParams
from .lindblad import (
    StepControl,
    Trajectory,
    assert_density_matrix,
    default_initial_state,
    evolve,
    fidelity_dark,
    lindblad_rhs,
    oracle_propagate,
    quasi_steady,
)
from .model import (
    SystemParams,
    collapse_ops,
    dark_state,
    drive_frame_hamiltonian,
    fig_default_params,
    polaron_displacement,
    sideband_rates,
    stark_detuning,
)
from .spectroscopy import (
    SweepAxis,
    SweepSpec,
    analytic_reflection_single,
    analytic_reflection_two_color,
    fourier_component,
    reflection_from_dipole,
    run_sweep,
    steady_reflection,
)

__version__ = "0.1.0"

__all__ = [
    "DeviceParams",
    "StepControl",
    "SweepAxis",
    "SweepSpec",
    "SystemParams",
    "Trajectory",
    "analytic_reflection_single",
    "analytic_reflection_two_color",
    "assert_density_matrix",
    "collapse_ops",
    "dark_state",
    "default_initial_state",
    "drive_frame_hamiltonian",
    "evolve",
    "fidelity_dark",
    "fig_default_params",
    "fourier_component",
    "lindblad_rhs",
    "oracle_propagate",
    "polaron_displacement",
    "quasi_steady",
    "reflection_from_dipole",
    "run_sweep",
    "sideband_rates",
    "stark_detuning",
    "steady_reflection",
]
