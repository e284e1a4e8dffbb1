"""Cavity-EIT storage and retrieval of light in cylindrical ion Coulomb crystals.

A radial shell model of the crystal is driven by a sech probe pulse and
a shaped control pulse; the package computes write, read and total memory
efficiencies and optimises them over the control amplitude and the crystal
dimensions.
"""

__version__ = "0.1.0"

from .core import (
    CrystalGeometry,
    ModeKind,
    ModeProfile,
    ShellGrid,
    SystemRates,
    analytic_optimal_efficiency,
    build_shell_grid,
    cooperativity,
    default_n_shells,
    effective_atom_number,
    effective_atom_number_exact,
    mode_amplitude,
)
from .pulses import PulseSchedule, control_read, control_write, probe_input
from .integrate import IntegrationError, Trajectory, integrate
from .dynamics import (
    CollectiveModel,
    ShellModel,
    SimulationConfig,
    SimulationResult,
    radial_excitation_density,
    run_sequence,
)
from .experiments import (
    AmplitudeOptimum,
    SweepRow,
    compare_modes,
    golden_section_max,
    invariance_checks,
    optimize_amplitude,
    sweep_dimensions,
    sweep_radius,
)
from .config import ConfigError, RunConfig, load_config

__all__ = [
    "AmplitudeOptimum", "CollectiveModel", "ConfigError", "CrystalGeometry",
    "IntegrationError", "ModeKind", "ModeProfile", "PulseSchedule", "RunConfig",
    "ShellGrid", "ShellModel", "SimulationConfig", "SimulationResult", "SweepRow",
    "SystemRates", "Trajectory", "analytic_optimal_efficiency", "build_shell_grid",
    "compare_modes", "control_read", "control_write", "cooperativity",
    "default_n_shells", "effective_atom_number", "effective_atom_number_exact",
    "golden_section_max", "integrate", "invariance_checks", "load_config",
    "mode_amplitude", "optimize_amplitude", "probe_input", "radial_excitation_density",
    "run_sequence", "sweep_dimensions", "sweep_radius",
]
