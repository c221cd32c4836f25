"""
Core data models for fluxtrade
"""

import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

import numpy as np
from scipy import sparse

from .exceptions import ValidationError

TWO_PI = 2.0 * math.pi

Matrix = Union[np.ndarray, sparse.spmatrix]


class BasisKind(Enum):
    HARMONIC_OSCILLATOR = "harmonic_oscillator"
    GRID = "grid"


class BathFamily(Enum):
    OHMIC = "ohmic"
    SUB_OHMIC = "sub_ohmic"
    SUPER_OHMIC = "super_ohmic"


class Phase(Enum):
    INSULATING = "insulating"
    SUPERCONDUCTING = "superconducting"
    ERROR = "error"


class FitKind(Enum):
    EXP_DECAY = "exp_decay"
    POWER_LAW = "power_law"


class Command(Enum):
    SPECTRUM = "spectrum"
    DISPERSION = "dispersion"
    SWEEP = "sweep"
    PHASE_DIAGRAM = "phase-diagram"
    TRADEOFF = "tradeoff"
    BUDGET = "budget"
    CONVERT = "convert"


class OutputFormat(Enum):
    CSV = "csv"
    JSON = "json"


@dataclass(frozen=True)
class CircuitParams:
    """Fluxonium energies in GHz (energy/h) and dimensionless external flux"""
    e_c: float
    e_l: float
    e_j: float
    theta: float = 0.0

    def __post_init__(self):
        for name in ('e_c', 'e_l', 'e_j', 'theta'):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(name, "must be finite")
        if self.e_c <= 0:
            raise ValidationError('e_c', f"must be > 0, got {self.e_c}")
        if self.e_l <= 0:
            raise ValidationError('e_l', f"must be > 0, got {self.e_l}")
        if self.e_j < 0:
            raise ValidationError('e_j', f"must be >= 0, got {self.e_j}")
        reduced = math.fmod(self.theta, TWO_PI)
        if reduced < 0:
            reduced += TWO_PI
        # fmod of a value just below a multiple of 2*pi can round up to 2*pi
        if reduced >= TWO_PI:
            reduced = 0.0
        object.__setattr__(self, 'theta', reduced)

    @property
    def energy_scale(self) -> float:
        return self.e_c + self.e_l + self.e_j

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)


@dataclass(frozen=True)
class DerivedRatios:
    """Dimensionless ratios that set every figure-level claim"""
    r_imp: float
    r_j: float
    z_over_rq: float


@dataclass(frozen=True)
class BasisSpec:
    """Declared basis of an OperatorSet"""
    kind: BasisKind
    dimension: int
    phi_max: Optional[float] = None


@dataclass(frozen=True, eq=False)
class OperatorSet:
    """
    Truncated operator matrices in a declared basis

    n_op holds the real factor of the charge operator: n = i * n_op.
    Grid-basis matrices are scipy sparse; harmonic-oscillator ones are dense.
    """
    basis: BasisSpec
    params: CircuitParams
    phi: Matrix
    n_op: Matrix
    hamiltonian: Matrix

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    @property
    def cos_op(self) -> np.ndarray:
        """cos(phi - theta), rebuilt on each access"""
        from .operators import cos_matrix
        return cos_matrix(self)

    @property
    def sin_op(self) -> np.ndarray:
        """sin(phi - theta), rebuilt on each access"""
        from .operators import sin_matrix
        return sin_matrix(self)


@dataclass(frozen=True, eq=False)
class EigenSolution:
    """Lowest eigenpairs of a truncated Hamiltonian"""
    values: np.ndarray
    vectors: np.ndarray
    residual_norm: float
    basis_dimension: int

    @property
    def count(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class SpectralResult:
    """Observables of one parameter point"""
    params: CircuitParams
    energies: Tuple[float, ...]
    delta_10: float
    delta_21: float
    anharmonicity: float
    rel_anharmonicity: float
    m_phi_sq: float
    variance: Tuple[float, float, float]
    persistent_current_max: float
    basis_dimension: int

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['energies'] = list(self.energies)
        data['variance'] = list(self.variance)
        return data


@dataclass(frozen=True, eq=False)
class DispersionResult:
    """Charge-dispersion bands of the inductor-free problem"""
    e_c: float
    e_j: float
    quasicharge_grid: np.ndarray
    bands: np.ndarray  # shape (2, len(quasicharge_grid))
    c_star_numeric: float
    c_star_tb: Optional[float]
    t_instanton: Optional[float]
    omega_star: Optional[float] = None


@dataclass(frozen=True)
class BathParams:
    """Markovian bath described by its spectral density J(w) = alpha * w"""
    alpha: float
    temperature: float
    family: BathFamily = BathFamily.OHMIC

    def __post_init__(self):
        if not self.alpha >= 0:
            raise ValidationError('alpha', f"must be >= 0, got {self.alpha}")
        if not self.temperature > 0:
            raise ValidationError('temperature', f"must be > 0, got {self.temperature}")


@dataclass(frozen=True)
class ErrorBudget:
    """Per-gate leakage and dephasing error probabilities"""
    gamma_phi: float
    gate_time: float
    rabi: float
    p_leak: float
    p_dephase: float
    out_of_regime: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class SweepSpec:
    """Grid over (sqrt(E_C/E_L), E_J/E_C) at fixed flux"""
    r_imp_grid: Tuple[float, ...]
    r_j_grid: Tuple[float, ...]
    theta: float = math.pi / 2
    e_c_ref: float = 1.0
    theta_samples: int = 32
    tol: float = 1e-9
    threshold: float = 1e-2

    def __post_init__(self):
        # grids are canonicalised to ascending order so permuted input
        # describes the same sweep
        for name, minimum in (('r_imp_grid', 0.0), ('r_j_grid', None)):
            values = tuple(sorted(float(v) for v in getattr(self, name)))
            if not values:
                raise ValidationError(name, "grid is empty")
            if any(not math.isfinite(v) for v in values):
                raise ValidationError(name, "grid values must be finite")
            if minimum is not None and values[0] <= minimum:
                raise ValidationError(name, "grid values must be positive")
            if minimum is None and values[0] < 0:
                raise ValidationError(name, "grid values must be non-negative")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ValidationError(name, "grid values must be distinct")
            object.__setattr__(self, name, values)
        if self.e_c_ref <= 0:
            raise ValidationError('e_c_ref', "must be > 0")
        if self.theta_samples < 8:
            raise ValidationError('theta_samples', "must be >= 8")
        if self.tol < 1e-12:
            raise ValidationError('tol', "must be >= 1e-12")
        if self.threshold <= 0:
            raise ValidationError('threshold', "must be > 0")

    @property
    def size(self) -> int:
        return len(self.r_imp_grid) * len(self.r_j_grid)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['r_imp_grid'] = list(self.r_imp_grid)
        data['r_j_grid'] = list(self.r_j_grid)
        return data


@dataclass(frozen=True)
class SweepRecord:
    """One grid point: parameters, observables and phase"""
    r_imp: float
    r_j: float
    theta: float
    delta_10: float
    rel_anharmonicity: float
    m_phi_sq: float
    m_phi_sq_over_delta_r: float
    sigma0_sq: float
    sigma0_sq_predicted: float
    e_c_star_numeric: float
    e_c_star_tb: float
    i_p_max: float
    phase: Phase
    basis_dimension: int
    breakdown: bool = False
    error: str = ""

    @classmethod
    def failed(cls, r_imp: float, r_j: float, theta: float, error: str) -> 'SweepRecord':
        """Marker row for a grid point whose evaluation raised"""
        nan = float('nan')
        return cls(
            r_imp=r_imp, r_j=r_j, theta=theta,
            delta_10=nan, rel_anharmonicity=nan, m_phi_sq=nan,
            m_phi_sq_over_delta_r=nan, sigma0_sq=nan, sigma0_sq_predicted=nan,
            e_c_star_numeric=nan, e_c_star_tb=nan, i_p_max=nan,
            phase=Phase.ERROR, basis_dimension=0, breakdown=False, error=error
        )

    @property
    def ok(self) -> bool:
        return self.phase is not Phase.ERROR

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['phase'] = self.phase.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'SweepRecord':
        values = dict(data)
        values['phase'] = Phase(values['phase'])
        return cls(**values)


@dataclass(frozen=True)
class FitReport:
    """Ordinary least-squares fit of a decaying column"""
    kind: FitKind
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    excluded: int = 0

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['kind'] = self.kind.value
        return data


@dataclass
class RunConfig:
    """One CLI invocation after flag and config-file merging"""
    command: Command
    parameters: Dict[str, Any] = field(default_factory=dict)
    output_path: Optional[str] = None
    format: OutputFormat = OutputFormat.CSV


@dataclass(frozen=True)
class PhasePoint:
    """One cell of the (E_J/E_C, E_L/E_C) phase diagram"""
    r_j: float
    el_over_ec: float
    i_p_max: float
    phase: Phase
    error: str = ""

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data['phase'] = self.phase.value
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'PhasePoint':
        values = dict(data)
        values['phase'] = Phase(values['phase'])
        return cls(**values)


@dataclass(frozen=True)
class TradeoffCurve:
    """(rel_anharmonicity, M_phi^2) pairs of one E_J/E_C ordered by impedance"""
    r_j: float
    r_imp: Tuple[float, ...]
    rel_anharmonicity: Tuple[float, ...]
    m_phi_sq: Tuple[float, ...]
    m_phi_fit: Optional[FitReport] = None
    anharmonicity_fit: Optional[FitReport] = None
