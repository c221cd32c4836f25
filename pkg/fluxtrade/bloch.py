"""
Bloch bands of the inductor-free circuit and the effective-capacitance picture
"""

import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import linalg

from .exceptions import ConvergenceError, DomainError, ValidationError
from .models import DispersionResult

logger = logging.getLogger(__name__)

MIN_CHARGE_CUTOFF = 8
MAX_CHARGE_CUTOFF = 4096
BAND_TOL = 1e-10
CURVATURE_STEP = 1e-3


def _fold(n_tilde: float) -> float:
    """Map a quasicharge into the first zone [-0.5, 0.5]"""
    folded = n_tilde - math.floor(n_tilde + 0.5)
    # keep the zone edge on +0.5 so band(0.5) and band(-0.5) agree by symmetry
    return 0.5 if folded == -0.5 and n_tilde > 0 else folded


def _charge_band(e_c: float, e_j: float, n_tilde: float, k: int, m_max: int) -> float:
    charges = np.arange(-m_max, m_max + 1, dtype=float)
    diagonal = e_c * (charges + n_tilde) ** 2
    off_diagonal = np.full(2 * m_max, -e_j / 2.0)
    values = linalg.eigh_tridiagonal(
        diagonal, off_diagonal, eigvals_only=True, select='i', select_range=(k, k)
    )
    return float(values[0])


def band(
    e_c: float,
    e_j: float,
    n_tilde: float,
    k: int = 0,
    m_max: int = MIN_CHARGE_CUTOFF,
    tol: float = BAND_TOL
) -> float:
    """
    k-th Bloch band at quasicharge n_tilde

    Charge basis m in [-m_max, m_max] with H_mm = E_C (m + n)^2 and
    H_m,m+-1 = -E_J/2; m_max doubles until the band moves by less than tol
    relative to max(|eps|, E_C).
    """
    if not e_c > 0:
        raise ValidationError('e_c', f"must be > 0, got {e_c}")
    if not e_j >= 0:
        raise ValidationError('e_j', f"must be >= 0, got {e_j}")
    if m_max < MIN_CHARGE_CUTOFF:
        raise ValidationError('m_max', f"must be >= {MIN_CHARGE_CUTOFF}, got {m_max}")
    if not 0 <= k <= 2 * m_max:
        raise ValidationError('k', f"band {k} not retained with m_max={m_max}")

    n_tilde = _fold(n_tilde)
    previous = _charge_band(e_c, e_j, n_tilde, k, m_max)
    delta = float('inf')
    while 2 * m_max <= MAX_CHARGE_CUTOFF:
        m_max *= 2
        current = _charge_band(e_c, e_j, n_tilde, k, m_max)
        delta = abs(current - previous) / max(abs(previous), e_c)
        if delta <= tol:
            return current
        previous = current

    raise ConvergenceError(
        f"charge cutoff {MAX_CHARGE_CUTOFF} reached without band convergence", delta, m_max
    )


def effective_capacitance_numeric(e_c: float, e_j: float, step: float = CURVATURE_STEP) -> float:
    """E_C* = (1/2) d^2 eps_0/dn^2 at n = 0 from a 5-point stencil"""
    samples = [band(e_c, e_j, s * step) for s in (-2, -1, 0, 1, 2)]
    curvature = (-samples[0] + 16 * samples[1] - 30 * samples[2]
                 + 16 * samples[3] - samples[4]) / (12.0 * step ** 2)
    return 0.5 * curvature


def instanton_amplitude(e_c: float, e_j: float) -> float:
    """Phase-slip amplitude t = 4 (2 E_J^3 E_C)^(1/4)/sqrt(pi) exp(-8 sqrt(E_J/2E_C))"""
    if not e_j > 0:
        raise DomainError(f"instanton amplitude needs E_J > 0 (deep-lattice asymptotic), got {e_j}")
    if not e_c > 0:
        raise ValidationError('e_c', f"must be > 0, got {e_c}")
    prefactor = 4.0 * (2.0 * e_j ** 3 * e_c) ** 0.25 / math.sqrt(math.pi)
    return prefactor * math.exp(-8.0 * math.sqrt(e_j / (2.0 * e_c)))


def effective_capacitance_tb(e_c: float, e_j: float) -> float:
    """Tight-binding E_C* = 4 pi^2 t"""
    return 4.0 * math.pi ** 2 * instanton_amplitude(e_c, e_j)


def effective_frequency(e_l: float, e_c_star: float) -> float:
    """omega*/2pi = 2 sqrt(E_L E_C*) in GHz"""
    if not (e_l > 0 and e_c_star > 0):
        raise ValidationError('e_c_star' if e_l > 0 else 'e_l', "must be > 0")
    return 2.0 * math.sqrt(e_l * e_c_star)


def predicted_variance(e_l: float, e_c_star: float, k: int = 0) -> float:
    """Oscillator variance (2k+1)/2 sqrt(E_C*/E_L) of the effective circuit"""
    if not (e_l > 0 and e_c_star > 0):
        raise ValidationError('e_c_star' if e_l > 0 else 'e_l', "must be > 0")
    if k < 0:
        raise ValidationError('k', f"must be >= 0, got {k}")
    return (2 * k + 1) / 2.0 * math.sqrt(e_c_star / e_l)


def breakdown_flag(sigma0_sq: float) -> bool:
    """True when the ground state spans less than one cosine well (sigma_0 < pi)"""
    return sigma0_sq < math.pi ** 2


def fit_tight_binding(quasicharge: np.ndarray, ground_band: np.ndarray) -> Tuple[float, float]:
    """
    Least-squares fit of mean - 2t cos(2 pi n) to a ground band

    Returns the fitted t and the RMS residual as a fraction of the bandwidth.
    """
    quasicharge = np.asarray(quasicharge, dtype=float)
    ground_band = np.asarray(ground_band, dtype=float)
    if quasicharge.shape != ground_band.shape or quasicharge.size < 3:
        raise ValidationError('quasicharge', "need at least 3 samples matching the band")
    bandwidth = float(np.ptp(ground_band))
    if bandwidth <= 0:
        raise DomainError("flat band has no tight-binding amplitude")

    design = np.column_stack([np.ones_like(quasicharge), -2.0 * np.cos(2 * np.pi * quasicharge)])
    coefficients, _, _, _ = np.linalg.lstsq(design, ground_band, rcond=None)
    residual = ground_band - design @ coefficients
    rms = float(np.sqrt(np.mean(residual ** 2)))
    return float(coefficients[1]), rms / bandwidth


def dispersion(e_c: float, e_j: float, points: int = 101, e_l: Optional[float] = None) -> DispersionResult:
    """Lowest two bands on a uniform quasicharge grid plus both E_C* estimates"""
    if points < 3:
        raise ValidationError('points', f"must be >= 3, got {points}")
    grid = np.linspace(-0.5, 0.5, points)
    bands = np.array([[band(e_c, e_j, n, k) for n in grid] for k in (0, 1)])

    c_star = effective_capacitance_numeric(e_c, e_j)
    t = instanton_amplitude(e_c, e_j) if e_j > 0 else None
    c_star_tb = 4.0 * math.pi ** 2 * t if t is not None else None
    omega_star = effective_frequency(e_l, c_star) if e_l is not None else None
    logger.debug(f"dispersion E_J/E_C={e_j / e_c:.6g}: E_C*={c_star:.6g}, tight-binding {c_star_tb}")

    return DispersionResult(
        e_c=e_c,
        e_j=e_j,
        quasicharge_grid=grid,
        bands=bands,
        c_star_numeric=c_star,
        c_star_tb=c_star_tb,
        t_instanton=t,
        omega_star=omega_star
    )
