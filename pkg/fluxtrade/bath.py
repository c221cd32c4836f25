"""
Markovian pure dephasing from the bath spectral density, and the per-gate
leakage/dephasing error budget
"""

import logging
import math

from .exceptions import DomainError, ValidationError
from .models import BathFamily, BathParams, ErrorBudget
from .params import CONSTANTS, GHZ

logger = logging.getLogger(__name__)


def thermal_noise_factor(bath: BathParams) -> float:
    """
    lim_{w->0} J(w) coth(hbar w/2 k_B T) in 1/s

    Only the ohmic family has a finite, non-zero limit: 2 alpha k_B T/hbar.
    """
    if bath.family is BathFamily.OHMIC:
        return 2.0 * bath.alpha * CONSTANTS['k_B'] * bath.temperature / CONSTANTS['hbar']
    if bath.family is BathFamily.SUB_OHMIC:
        raise NotImplementedError(
            "sub-ohmic bath: J(w) coth(hbar w/2kT) diverges as w -> 0, no finite dephasing rate"
        )
    raise NotImplementedError(
        "super-ohmic bath: J(w) coth(hbar w/2kT) vanishes as w -> 0, pure dephasing rate is zero"
    )


def pure_dephasing_rate(m_phi_sq: float, bath: BathParams) -> float:
    """Gamma_phi = (pi M_phi^2/4) lim J(w) coth(...) in 1/s"""
    if not m_phi_sq >= 0:
        raise ValidationError('m_phi_sq', f"must be >= 0, got {m_phi_sq}")
    return math.pi * m_phi_sq / 4.0 * thermal_noise_factor(bath)


def calibrate_alpha(gamma_measured: float, m_phi_sq: float, temperature: float) -> float:
    """Ohmic coupling that reproduces a measured dephasing rate"""
    if not gamma_measured > 0:
        raise ValidationError('gamma_measured', f"must be > 0, got {gamma_measured}")
    if not temperature > 0:
        raise ValidationError('temperature', f"must be > 0, got {temperature}")
    if m_phi_sq == 0:
        raise DomainError("cannot calibrate alpha against M_phi^2 = 0 (no dephasing channel)")
    if not m_phi_sq > 0:
        raise ValidationError('m_phi_sq', f"must be > 0, got {m_phi_sq}")

    per_alpha = pure_dephasing_rate(m_phi_sq, BathParams(alpha=1.0, temperature=temperature))
    alpha = gamma_measured / per_alpha
    logger.debug(f"alpha={alpha:.6e} for gamma={gamma_measured:.6g}/s, M_phi^2={m_phi_sq:.6g}")
    return alpha


def rate_ratio(m_phi_sq_a: float, m_phi_sq_b: float) -> float:
    """Gamma_a/Gamma_b for one bath; independent of alpha and temperature"""
    if m_phi_sq_b == 0:
        raise DomainError("reference M_phi^2 is zero")
    return m_phi_sq_a / m_phi_sq_b


def _delta_angular(delta: float) -> float:
    """Anharmonicity delta (GHz, energy/h) as delta/hbar in rad/s"""
    return 2.0 * math.pi * delta * GHZ


def error_budget(
    gamma_phi: float,
    delta: float,
    rabi: float,
    tau_constant: float = 1.0,
    dephasing_constant: float = 1.0
) -> ErrorBudget:
    """
    Leakage and dephasing probability of one gate

    rabi is the angular Rabi frequency Omega in rad/s and delta is in GHz.
    p_leak = (hbar Omega/delta)^2, tau = c_tau/Omega, p_phi = c_phi Gamma_phi tau.
    Probabilities of 1 or more are kept and flagged rather than clamped.
    """
    if not gamma_phi >= 0:
        raise ValidationError('gamma_phi', f"must be >= 0, got {gamma_phi}")
    if not delta > 0:
        raise ValidationError('delta', f"must be > 0, got {delta}")
    if not rabi > 0:
        raise ValidationError('rabi', f"must be > 0, got {rabi}")

    gate_time = tau_constant / rabi
    p_leak = (rabi / _delta_angular(delta)) ** 2
    p_dephase = dephasing_constant * gamma_phi * gate_time

    return ErrorBudget(
        gamma_phi=gamma_phi,
        gate_time=gate_time,
        rabi=rabi,
        p_leak=p_leak,
        p_dephase=p_dephase,
        out_of_regime=p_leak >= 1 or p_dephase >= 1
    )


def optimal_rabi(
    gamma_phi: float,
    delta: float,
    tau_constant: float = 1.0,
    dephasing_constant: float = 1.0
) -> float:
    """Omega minimizing p_leak + p_dephase: (c Gamma_phi (delta/hbar)^2/2)^(1/3)"""
    if not gamma_phi > 0:
        raise ValidationError('gamma_phi', f"must be > 0, got {gamma_phi}")
    if not delta > 0:
        raise ValidationError('delta', f"must be > 0, got {delta}")
    c = tau_constant * dephasing_constant
    return (c * gamma_phi * _delta_angular(delta) ** 2 / 2.0) ** (1.0 / 3.0)
