"""
Truncated operator matrices and the verified symmetric eigensolver

The harmonic-oscillator basis is the production path. The real-space grid
solver exists as an independent oracle for cross-checking it.
"""

import functools
import logging
import math
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as sparse_linalg

from .exceptions import ContractViolation, ConvergenceError, ValidationError
from .models import BasisKind, BasisSpec, CircuitParams, EigenSolution, OperatorSet

logger = logging.getLogger(__name__)

MIN_HO_DIMENSION = 4
MIN_GRID_POINTS = 64
MIN_START_DIMENSION = 32
MAX_DIMENSION = 2 ** 15
GRID_WINDOW_SIGMAS = 6.0

ASYMMETRY_TOL = 1e-10
RESIDUAL_TOL = 1e-9
ORTHONORMALITY_TOL = 1e-10


def phi_zpf(p: CircuitParams) -> float:
    """Zero-point phase spread (E_C/4E_L)^(1/4), so <0|phi^2|0> = sqrt(E_C/E_L)/2"""
    return (p.e_c / (4.0 * p.e_l)) ** 0.25


def potential(p: CircuitParams, phi: np.ndarray) -> np.ndarray:
    """V(phi) = E_L phi^2 - E_J cos(phi - theta)"""
    phi = np.asarray(phi, dtype=float)
    return p.e_l * phi ** 2 - p.e_j * np.cos(phi - p.theta)


@functools.lru_cache(maxsize=2)
def _phase_eigensystem(dimension: int, zpf: float) -> Tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of the truncated phi matrix (shared across fluxes)"""
    off_diagonal = zpf * np.sqrt(np.arange(1, dimension, dtype=float))
    nodes, vectors = linalg.eigh_tridiagonal(np.zeros(dimension), off_diagonal)
    nodes.setflags(write=False)
    vectors.setflags(write=False)
    return nodes, vectors


def _ladder(dimension: int) -> sparse.csr_matrix:
    return sparse.diags(np.sqrt(np.arange(1, dimension, dtype=float)), 1, format='csr')


def _spectral_function(ops: OperatorSet, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    nodes, vectors = ops_phase_eigensystem(ops)
    values = fn(nodes - ops.params.theta)
    if vectors is None:
        return np.diag(values)
    return (vectors * values) @ vectors.T


def ops_phase_eigensystem(ops: OperatorSet) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Nodes and basis rotation that diagonalize phi; grid bases are already diagonal"""
    if ops.basis.kind is BasisKind.GRID:
        return np.asarray(ops.phi.diagonal()), None
    return _phase_eigensystem(ops.dimension, phi_zpf(ops.params))


def function_expectation(
    ops: OperatorSet,
    vectors: np.ndarray,
    fn: Callable[[np.ndarray], np.ndarray]
) -> np.ndarray:
    """<v|f(phi - theta)|v> for each column v without forming f as a matrix"""
    nodes, rotation = ops_phase_eigensystem(ops)
    amplitudes = vectors if rotation is None else rotation.T @ vectors
    weights = fn(nodes - ops.params.theta)
    return np.einsum('i,ij->j', weights, np.abs(amplitudes) ** 2)


def cos_matrix(ops: OperatorSet) -> np.ndarray:
    """cos(phi - theta) as a dense matrix"""
    return _spectral_function(ops, np.cos)


def sin_matrix(ops: OperatorSet) -> np.ndarray:
    """sin(phi - theta) as a dense matrix"""
    return _spectral_function(ops, np.sin)


def build_ho(p: CircuitParams, dimension: int) -> OperatorSet:
    """
    Operators in the harmonic-oscillator basis of E_C n^2 + E_L phi^2

    phi = zpf (a + a^dag), n = i/(2 zpf) (a^dag - a). cos(phi - theta) is the
    spectral function of the truncated phi matrix, phi = U D U^T.
    """
    if not isinstance(dimension, (int, np.integer)) or dimension < MIN_HO_DIMENSION:
        raise ValidationError('dimension', f"must be an integer >= {MIN_HO_DIMENSION}, got {dimension}")
    dimension = int(dimension)

    zpf = phi_zpf(p)
    a = _ladder(dimension)
    phi = (zpf * (a + a.T)).tocsr()
    n_op = ((a.T - a) / (2.0 * zpf)).tocsr()

    nodes, rotation = _phase_eigensystem(dimension, zpf)
    cos_op = (rotation * np.cos(nodes - p.theta)) @ rotation.T

    # n^2 = (i n_op)^2 = -n_op^2
    quadratic = (p.e_l * (phi @ phi) - p.e_c * (n_op @ n_op)).toarray()
    hamiltonian = quadratic - p.e_j * cos_op
    # symmetrize away rounding from the dense product
    hamiltonian = 0.5 * (hamiltonian + hamiltonian.T)

    return OperatorSet(
        basis=BasisSpec(BasisKind.HARMONIC_OSCILLATOR, dimension),
        params=p,
        phi=phi,
        n_op=n_op,
        hamiltonian=hamiltonian
    )


def minimum_phi_max(p: CircuitParams) -> float:
    return GRID_WINDOW_SIGMAS * phi_zpf(p) * math.sqrt(2.0)


def build_grid(p: CircuitParams, points: int, phi_max: Optional[float] = None) -> OperatorSet:
    """
    Operators on a uniform phase grid with Dirichlet walls at +-phi_max

    `points` interior nodes; E_C n^2 = -E_C d^2/dphi^2 by central second difference.
    """
    if not isinstance(points, (int, np.integer)) or points < MIN_GRID_POINTS:
        raise ValidationError('points', f"must be an integer >= {MIN_GRID_POINTS}, got {points}")
    points = int(points)
    if phi_max is None:
        phi_max = minimum_phi_max(p)
    if phi_max < minimum_phi_max(p) * (1 - 1e-12):
        raise ValidationError(
            'phi_max',
            f"{phi_max:.6g} does not cover {GRID_WINDOW_SIGMAS:g} standard deviations "
            f"(need >= {minimum_phi_max(p):.6g})"
        )

    step = 2.0 * phi_max / (points + 1)
    grid = -phi_max + step * np.arange(1, points + 1)

    phi = sparse.diags(grid, 0, format='csr')
    # n = -i d/dphi = i * n_op with n_op = -D1
    n_op = sparse.diags(
        [np.full(points - 1, 1.0 / (2 * step)), np.full(points - 1, -1.0 / (2 * step))],
        [-1, 1], format='csr'
    )
    kinetic = sparse.diags(
        [np.full(points - 1, -1.0), np.full(points, 2.0), np.full(points - 1, -1.0)],
        [-1, 0, 1], format='csr'
    ) * (p.e_c / step ** 2)
    hamiltonian = (kinetic + sparse.diags(potential(p, grid), 0)).tocsr()

    return OperatorSet(
        basis=BasisSpec(BasisKind.GRID, points, phi_max),
        params=p,
        phi=phi,
        n_op=n_op,
        hamiltonian=hamiltonian
    )


def _tridiagonal_parts(matrix: sparse.spmatrix) -> Tuple[np.ndarray, np.ndarray]:
    coo = matrix.tocoo()
    if coo.nnz and np.max(np.abs(coo.row - coo.col)) > 1:
        raise ContractViolation("sparse Hamiltonians must be tridiagonal")
    return np.asarray(matrix.diagonal(0)), np.asarray(matrix.diagonal(1))


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of every column positive"""
    pivots = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivots, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def eigensolve(ops: OperatorSet, k: int) -> EigenSolution:
    """Lowest k eigenpairs with residual, orthonormality and symmetry checks"""
    dimension = ops.dimension
    if k < 1 or k > dimension // 2:
        raise ValidationError('k', f"must satisfy 1 <= k <= dimension/2 = {dimension // 2}, got {k}")

    h = ops.hamiltonian
    if sparse.issparse(h):
        scale = abs(h).max()
        asymmetry = abs(h - h.T).max() if h.nnz else 0.0
    else:
        scale = np.max(np.abs(h))
        asymmetry = np.max(np.abs(h - h.T))
    if asymmetry > ASYMMETRY_TOL * max(scale, 1e-300):
        raise ContractViolation(f"Hamiltonian is not symmetric (asymmetry {asymmetry:.3e})")

    if sparse.issparse(h):
        diagonal, off_diagonal = _tridiagonal_parts(h)
        values, vectors = linalg.eigh_tridiagonal(
            diagonal, off_diagonal, select='i', select_range=(0, k - 1)
        )
        frobenius = sparse_linalg.norm(h) if h.nnz else 0.0
        residual = h @ vectors - vectors * values
    else:
        values, vectors = linalg.eigh(h, subset_by_index=[0, k - 1], driver='evr')
        frobenius = np.linalg.norm(h)
        residual = h @ vectors - vectors * values

    order = np.argsort(values, kind='stable')
    values, vectors = values[order], _fix_signs(vectors[:, order])

    residual_norm = float(np.max(np.linalg.norm(residual, axis=0)))
    if residual_norm > RESIDUAL_TOL * max(frobenius, 1e-300):
        raise ContractViolation(
            f"eigen-residual {residual_norm:.3e} exceeds {RESIDUAL_TOL:g} * ||H||_F"
        )
    overlap = vectors.T @ vectors - np.eye(k)
    if np.max(np.abs(overlap)) > ORTHONORMALITY_TOL:
        raise ContractViolation("eigenvectors are not orthonormal")

    return EigenSolution(
        values=values,
        vectors=vectors,
        residual_norm=residual_norm / max(frobenius, 1e-300),
        basis_dimension=dimension
    )


def start_dimension(p: CircuitParams, k: int = 1, minimum: int = MIN_START_DIMENSION) -> int:
    return max(minimum, int(math.ceil(8.0 * math.sqrt(p.e_c / p.e_l))), 2 * k)


def relative_delta(coarse: np.ndarray, fine: np.ndarray, p: CircuitParams) -> float:
    """Largest relative eigenvalue change; zero crossings are measured against sqrt(E_C E_L)"""
    floor = math.sqrt(p.e_c * p.e_l)
    return float(np.max(np.abs(fine - coarse) / np.maximum(np.abs(coarse), floor)))


def converge_operators(
    p: CircuitParams,
    k: int,
    tol: float = 1e-9,
    min_dimension: int = MIN_START_DIMENSION,
    max_dimension: int = MAX_DIMENSION
) -> Tuple[OperatorSet, EigenSolution, int]:
    """
    Double the HO basis until the k lowest eigenvalues settle

    Returns the operators and solution at the final dimension 2N, together with
    N, the smaller dimension that already met the tolerance.
    """
    if not tol >= 1e-12:
        raise ValidationError('tol', f"must be >= 1e-12, got {tol}")

    dimension = start_dimension(p, k, min_dimension)
    if dimension > max_dimension:
        raise ValidationError('max_dimension', f"start dimension {dimension} exceeds cap {max_dimension}")
    previous = eigensolve(build_ho(p, dimension), k)
    delta = float('inf')

    while 2 * dimension <= max_dimension:
        try:
            ops = build_ho(p, 2 * dimension)
            current = eigensolve(ops, k)
        except MemoryError as e:
            raise ConvergenceError(
                f"out of memory at dimension {2 * dimension}", delta, dimension
            ) from e
        delta = relative_delta(previous.values, current.values, p)
        converged = delta <= tol
        logger.debug(f"N={2 * dimension}: max relative delta {delta:.3e}")
        if converged:
            return ops, current, dimension
        previous = current
        dimension *= 2

    raise ConvergenceError(
        f"no convergence to tol={tol:g} below dimension cap {max_dimension} "
        f"(last delta {delta:.3e})",
        delta,
        dimension
    )


def converge(p: CircuitParams, k: int, tol: float = 1e-9, max_dimension: int = MAX_DIMENSION) -> EigenSolution:
    _, solution, _ = converge_operators(p, k, tol, max_dimension=max_dimension)
    return solution


def converge_grid(p: CircuitParams, k: int, points: int = 4001, phi_max: Optional[float] = None) -> EigenSolution:
    """Grid eigenvalues with one Richardson step between spacing h and h/2"""
    coarse = eigensolve(build_grid(p, points, phi_max), k)
    fine = eigensolve(build_grid(p, 2 * points + 1, phi_max), k)
    extrapolated = (4.0 * fine.values - coarse.values) / 3.0
    return EigenSolution(
        values=extrapolated,
        vectors=fine.vectors,
        residual_norm=fine.residual_norm,
        basis_dimension=fine.basis_dimension
    )


def hermite_functions(xi: np.ndarray, count: int) -> np.ndarray:
    """Normalized Hermite functions h_0..h_{count-1} by three-term recurrence"""
    xi = np.asarray(xi, dtype=float)
    table = np.zeros((count, xi.size))
    table[0] = np.pi ** -0.25 * np.exp(-0.5 * xi ** 2)
    if count > 1:
        table[1] = math.sqrt(2.0) * xi * table[0]
    for m in range(1, count - 1):
        table[m + 1] = (math.sqrt(2.0 / (m + 1)) * xi * table[m]
                        - math.sqrt(m / (m + 1)) * table[m - 1])
    return table


def wavefunction(p: CircuitParams, solution: EigenSolution, k: int, phi_grid: np.ndarray) -> np.ndarray:
    """psi_k(phi) on a phase grid from HO-basis eigenvector coefficients"""
    if not 0 <= k < solution.count:
        raise ValidationError('k', f"state {k} not retained (have {solution.count})")
    zpf = phi_zpf(p)
    phi_grid = np.asarray(phi_grid, dtype=float)
    basis = hermite_functions(phi_grid / (math.sqrt(2.0) * zpf), solution.basis_dimension)
    return (solution.vectors[:, k] @ basis) / math.sqrt(math.sqrt(2.0) * zpf)
