"""
Per-point fluxonium observables: transitions, anharmonicity, dephasing
matrix element, variances, persistent current and flux sensitivity
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np

from .exceptions import ValidationError
from .models import CircuitParams, EigenSolution, OperatorSet, SpectralResult
from .operators import (
    build_ho, converge_operators, cos_matrix, eigensolve, function_expectation, sin_matrix
)
from .params import GHZ, with_theta

logger = logging.getLogger(__name__)

SPECTRUM_STATES = 3
DEFAULT_THETA_SAMPLES = 32
FD_STEP = 1e-4


class FluxScan:
    """
    One circuit at a fixed HO dimension, evaluated at many external fluxes

    H(theta) = Q - E_J (cos(theta) cos(phi) + sin(theta) sin(phi)), so the
    dense phase functions are built once and each flux costs one eigensolve.
    """

    def __init__(self, p: CircuitParams, dimension: int):
        self.params = p
        base = build_ho(with_theta(p, 0.0), dimension)
        self.basis = base.basis
        self.phi = base.phi
        self.n_op = base.n_op
        self._cos = cos_matrix(base)
        self._sin = sin_matrix(base)
        self._quadratic = base.hamiltonian + p.e_j * self._cos

    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def operators(self, theta: float) -> OperatorSet:
        p = with_theta(self.params, theta)
        hamiltonian = self._quadratic - p.e_j * (
            math.cos(p.theta) * self._cos + math.sin(p.theta) * self._sin
        )
        hamiltonian = 0.5 * (hamiltonian + hamiltonian.T)
        return OperatorSet(
            basis=self.basis,
            params=p,
            phi=self.phi,
            n_op=self.n_op,
            hamiltonian=hamiltonian
        )

    def solve(self, theta: float, k: int) -> Tuple[OperatorSet, EigenSolution]:
        ops = self.operators(theta)
        return ops, eigensolve(ops, k)

    def energies(self, theta: float, k: int) -> np.ndarray:
        return self.solve(theta, k)[1].values

    def persistent_current(self, theta: float) -> float:
        if self.params.e_j == 0:
            return 0.0
        ops, sol = self.solve(theta, 1)
        return _persistent_current(ops, sol)

    def dephasing_element(self, theta: float) -> float:
        ops, sol = self.solve(theta, 2)
        return _m_phi_sq(ops, sol)


def _phi_moments(ops: OperatorSet, sol: EigenSolution) -> Tuple[np.ndarray, np.ndarray]:
    """<k|phi|k> and <k|phi^2|k> for every retained state"""
    applied = ops.phi @ sol.vectors
    first = np.sum(sol.vectors * applied, axis=0)
    second = np.sum(applied * applied, axis=0)
    return first, second


def state_variances(ops: OperatorSet, sol: EigenSolution) -> np.ndarray:
    """sigma_k^2 = <k|phi^2|k> - <k|phi|k>^2 for every retained state"""
    first, second = _phi_moments(ops, sol)
    return second - first ** 2


def _m_phi_sq(ops: OperatorSet, sol: EigenSolution) -> float:
    first, _ = _phi_moments(ops, sol)
    return float((first[1] - first[0]) ** 2)


def _persistent_current(ops: OperatorSet, sol: EigenSolution) -> float:
    p = ops.params
    sine = function_expectation(ops, sol.vectors[:, :1], np.sin)[0]
    return float(-(p.e_j / p.e_l) * sine)


def matrix_element(sol: EigenSolution, ops: OperatorSet, k: int, k2: int) -> float:
    """M_kk' = <k|phi|k'> between retained eigenstates"""
    for name, index in (('k', k), ('k2', k2)):
        if not 0 <= index < sol.count:
            raise ValidationError(name, f"state {index} not retained (have {sol.count})")
    return float(sol.vectors[:, k] @ (ops.phi @ sol.vectors[:, k2]))


def _refined_maximum(scan_fn, thetas: np.ndarray, values: np.ndarray) -> Tuple[float, float]:
    """Grid argmax polished once by the vertex of the parabola through its neighbours"""
    j = int(np.argmax(values))
    best_theta, best = float(thetas[j]), float(values[j])
    if 0 < j < len(thetas) - 1:
        y0, y1, y2 = values[j - 1], values[j], values[j + 1]
        curvature = y0 - 2 * y1 + y2
        if curvature < 0:
            step = thetas[1] - thetas[0]
            vertex = thetas[j] + 0.5 * step * (y0 - y2) / curvature
            vertex = float(np.clip(vertex, thetas[j - 1], thetas[j + 1]))
            refined = scan_fn(vertex)
            if refined > best:
                best_theta, best = vertex, refined
    return best_theta, best


def _scan_dimension(p: CircuitParams, tol: float, k: int) -> int:
    _, _, dimension = converge_operators(p, k, tol)
    return dimension


def persistent_current(p: CircuitParams, tol: float = 1e-9, dimension: Optional[int] = None) -> float:
    """
    Ground-state current i_p = -(E_J/E_L) <0|sin(phi - theta)|0>

    Equals (d eps_0/d theta)/E_L by Hellmann-Feynman.
    """
    if p.e_j == 0:
        return 0.0
    if dimension is None:
        ops, sol, _ = converge_operators(p, 1, tol)
    else:
        ops = build_ho(p, dimension)
        sol = eigensolve(ops, 1)
    return _persistent_current(ops, sol)


def max_persistent_current(
    p: CircuitParams,
    theta_samples: int = DEFAULT_THETA_SAMPLES,
    tol: float = 1e-9,
    dimension: Optional[int] = None
) -> float:
    """Largest |i_p| over theta in [0, pi] at the flux-independent converged dimension"""
    if theta_samples < 8:
        raise ValidationError('theta_samples', f"must be >= 8, got {theta_samples}")
    if p.e_j == 0:
        return 0.0
    scan = FluxScan(p, dimension or _scan_dimension(p, tol, 1))
    thetas = np.linspace(0.0, math.pi, theta_samples)
    currents = np.array([abs(scan.persistent_current(t)) for t in thetas])
    _, best = _refined_maximum(lambda t: abs(scan.persistent_current(t)), thetas, currents)
    return best


def max_dephasing_element(
    p: CircuitParams,
    theta_samples: int = DEFAULT_THETA_SAMPLES,
    tol: float = 1e-9,
    dimension: Optional[int] = None
) -> Tuple[float, float]:
    """Flux of the worst-case M_phi^2 on [0, pi] and its value"""
    if theta_samples < 8:
        raise ValidationError('theta_samples', f"must be >= 8, got {theta_samples}")
    scan = FluxScan(p, dimension or _scan_dimension(p, tol, 2))
    thetas = np.linspace(0.0, math.pi, theta_samples)
    elements = np.array([scan.dephasing_element(t) for t in thetas])
    return _refined_maximum(scan.dephasing_element, thetas, elements)


def _central_difference(fn, theta: float, step: float) -> float:
    return (fn(theta + step) - fn(theta - step)) / (2.0 * step)


def flux_sensitivity_numeric(
    p: CircuitParams,
    tol: float = 1e-9,
    step: float = FD_STEP,
    dimension: Optional[int] = None
) -> float:
    """d Delta_10/d theta (GHz/rad): central difference, Richardson-extrapolated once"""
    scan = FluxScan(p, dimension or _scan_dimension(p, tol, 2))

    def transition(theta: float) -> float:
        values = scan.energies(theta, 2)
        return float(values[1] - values[0])

    coarse = _central_difference(transition, p.theta, step)
    fine = _central_difference(transition, p.theta, step / 2)
    return (4.0 * fine - coarse) / 3.0


def flux_sensitivity_approx(p: CircuitParams, sigma0_sq: float) -> float:
    """Closed form -E_J sin(theta) sigma0^2 exp(-sigma0^2/2)"""
    if not sigma0_sq > 0:
        raise ValidationError('sigma0_sq', f"must be > 0, got {sigma0_sq}")
    return -p.e_j * math.sin(p.theta) * sigma0_sq * math.exp(-sigma0_sq / 2.0)


def dephasing_from_flux_slope(p: CircuitParams, tol: float = 1e-9, dimension: Optional[int] = None) -> float:
    """
    M_phi^2 from the flux slope of Delta_10

    Moving theta into the inductive term gives <k|phi|k> = (d eps_k/d theta)/(2 E_L).
    """
    slope = flux_sensitivity_numeric(p, tol, dimension=dimension)
    return slope ** 2 / (4.0 * p.e_l ** 2)


def leakage_limited_gate_time(delta: float) -> float:
    """hbar/delta in seconds for an anharmonicity delta given in GHz"""
    if not delta > 0:
        raise ValidationError('delta', f"must be > 0, got {delta}")
    return 1.0 / (2.0 * math.pi * delta * GHZ)


def observables(
    p: CircuitParams,
    tol: float = 1e-9,
    theta_samples: int = DEFAULT_THETA_SAMPLES
) -> SpectralResult:
    """Converge the lowest three states and derive every per-point observable"""
    ops, sol, scan_dimension = converge_operators(p, SPECTRUM_STATES, tol)
    energies = sol.values
    delta_10 = float(energies[1] - energies[0])
    delta_21 = float(energies[2] - energies[1])
    anharmonicity = delta_21 - delta_10

    first, _ = _phi_moments(ops, sol)
    variance = state_variances(ops, sol)

    i_p_max = max_persistent_current(p, theta_samples, tol, dimension=scan_dimension)
    logger.debug(
        f"observables at {p}: delta_10={delta_10:.6g}, N={sol.basis_dimension}, i_p_max={i_p_max:.3e}"
    )

    return SpectralResult(
        params=p,
        energies=tuple(float(v) for v in energies),
        delta_10=delta_10,
        delta_21=delta_21,
        anharmonicity=anharmonicity,
        rel_anharmonicity=anharmonicity / delta_10,
        m_phi_sq=float((first[1] - first[0]) ** 2),
        variance=tuple(float(v) for v in variance),
        persistent_current_max=i_p_max,
        basis_dimension=sol.basis_dimension
    )
