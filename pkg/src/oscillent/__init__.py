"""Entanglement entropy of two coupled harmonic oscillators, classical and quantum."""
from .core import (
    DomainError,
    ModelParams,
    NormalModes,
    OscillentError,
    PhasePoint,
    RegimeError,
    RegimeReport,
    StateSpec,
    conserved_quantities,
    hamiltonian,
    normal_modes,
    validate_regime,
)
from .classical import (
    EntropyResult,
    Method,
    RegimeWarning,
    classical_entropy_closed_form,
    classical_entropy_quadrature,
    classical_entropy_torus_mc,
    classical_entropy_trajectory,
    marginal_density,
    sample_torus,
)
from .quantum import (
    GridError,
    exact_entropy,
    ground_state_entropy_smallC,
    hermite_function,
    low_excitation_entropy,
    reduced_density_kernel,
    schmidt_spectrum,
    von_neumann_entropy,
)

__version__ = "0.1.0"
