"""
fluxtrade: fluxonium leakage versus dephasing toolkit
Spectra, dephasing matrix elements, Bloch bands and parameter sweeps
"""

# defined before the submodule imports, which read it
__version__ = "0.1.0"

from .models import (
    CircuitParams,
    DerivedRatios,
    OperatorSet,
    EigenSolution,
    SpectralResult,
    DispersionResult,
    BathParams,
    BathFamily,
    ErrorBudget,
    SweepSpec,
    SweepRecord,
    FitReport,
    FitKind,
    Phase,
    PhasePoint,
    RunConfig
)

from .exceptions import (
    FluxtradeError,
    ValidationError,
    ConvergenceError,
    ContractViolation,
    DomainError,
    InsufficientDataError
)

from .params import from_physical, ratios, from_ratios
from .operators import build_ho, build_grid, eigensolve, converge
from .spectrum import observables, matrix_element, persistent_current, max_persistent_current
from .bloch import band, dispersion, effective_capacitance_numeric, effective_capacitance_tb
from .bath import pure_dephasing_rate, calibrate_alpha, error_budget
from .sweep import SweepEngine, classify, fit_decay
from .persistence import ResultStore
from .config import Config

__all__ = [
    'CircuitParams',
    'DerivedRatios',
    'OperatorSet',
    'EigenSolution',
    'SpectralResult',
    'DispersionResult',
    'BathParams',
    'BathFamily',
    'ErrorBudget',
    'SweepSpec',
    'SweepRecord',
    'FitReport',
    'FitKind',
    'Phase',
    'PhasePoint',
    'RunConfig',
    'FluxtradeError',
    'ValidationError',
    'ConvergenceError',
    'ContractViolation',
    'DomainError',
    'InsufficientDataError',
    'from_physical',
    'ratios',
    'from_ratios',
    'build_ho',
    'build_grid',
    'eigensolve',
    'converge',
    'observables',
    'matrix_element',
    'persistent_current',
    'max_persistent_current',
    'band',
    'dispersion',
    'effective_capacitance_numeric',
    'effective_capacitance_tb',
    'pure_dephasing_rate',
    'calibrate_alpha',
    'error_budget',
    'SweepEngine',
    'classify',
    'fit_decay',
    'ResultStore',
    'Config'
]
