"""
Units, physical constants and validated parameter construction

Energies are carried as frequencies (energy/h) in GHz. Conversions to SI
happen only here.
"""

import math
import re
from typing import Dict

import scipy.constants as pyc

from .exceptions import ValidationError
from .models import CircuitParams, DerivedRatios, TWO_PI

# CODATA 2018 exact SI values (e, h and k_B are fixed by the 2019 SI)
CONSTANTS: Dict[str, float] = {
    'e': pyc.e,
    'h': pyc.h,
    'hbar': pyc.hbar,
    'k_B': pyc.k,
}
CONSTANTS['phi_0'] = CONSTANTS['h'] / (2 * CONSTANTS['e'])
CONSTANTS['r_q'] = CONSTANTS['h'] / (2 * CONSTANTS['e']) ** 2

GHZ = 1e9

_UNIT_PREFIXES = {
    'T': 1e12, 'G': 1e9, 'M': 1e6, 'k': 1e3, '': 1.0,
    'm': 1e-3, 'u': 1e-6, 'µ': 1e-6, 'n': 1e-9, 'p': 1e-12, 'f': 1e-15, 'a': 1e-18,
}

_BASE_UNITS = {
    'inductance': 'H',
    'capacitance': 'F',
    'current': 'A',
    'frequency': 'Hz',
    'temperature': 'K',
    'time': 's',
}

_QUANTITY = re.compile(r'^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([A-Za-zµ]*)\s*$')


def joules_to_ghz(energy: float) -> float:
    return energy / CONSTANTS['h'] / GHZ


def ghz_to_joules(energy: float) -> float:
    return energy * GHZ * CONSTANTS['h']


def from_physical(
    capacitance: float,
    inductance: float,
    critical_current: float,
    theta: float = 0.0
) -> CircuitParams:
    """
    Build circuit energies from C (F), L (H) and I_c (A)

    E_C = (2e)^2/2C, E_L = (Phi0/2pi)^2/2L, E_J = I_c Phi0/2pi, each in GHz.
    """
    for name, value in (('capacitance', capacitance),
                        ('inductance', inductance),
                        ('critical_current', critical_current)):
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise ValidationError(name, f"must be > 0, got {value}")

    e = CONSTANTS['e']
    reduced_flux = CONSTANTS['phi_0'] / TWO_PI
    e_c = (2 * e) ** 2 / (2 * capacitance)
    e_l = reduced_flux ** 2 / (2 * inductance)
    e_j = critical_current * reduced_flux

    return CircuitParams(
        e_c=joules_to_ghz(e_c),
        e_l=joules_to_ghz(e_l),
        e_j=joules_to_ghz(e_j),
        theta=theta
    )


def capacitance_from_energy(e_c: float) -> float:
    return (2 * CONSTANTS['e']) ** 2 / (2 * ghz_to_joules(e_c))


def inductance_from_energy(e_l: float) -> float:
    return (CONSTANTS['phi_0'] / TWO_PI) ** 2 / (2 * ghz_to_joules(e_l))


def critical_current_from_energy(e_j: float) -> float:
    return ghz_to_joules(e_j) / (CONSTANTS['phi_0'] / TWO_PI)


def to_physical(p: CircuitParams) -> Dict[str, float]:
    """Invert from_physical; I_c is 0 A when E_J is 0"""
    return {
        'capacitance': capacitance_from_energy(p.e_c),
        'inductance': inductance_from_energy(p.e_l),
        'critical_current': critical_current_from_energy(p.e_j),
    }


def ratios(p: CircuitParams) -> DerivedRatios:
    r_imp = math.sqrt(p.e_c / p.e_l)
    return DerivedRatios(
        r_imp=r_imp,
        r_j=p.e_j / p.e_c,
        z_over_rq=r_imp / TWO_PI
    )


def impedance(p: CircuitParams) -> float:
    """Z0 = sqrt(E_C/E_L) R_Q / 2pi in ohms"""
    return ratios(p).z_over_rq * CONSTANTS['r_q']


def from_ratios(r_imp: float, r_j: float, theta: float = 0.0, e_c: float = 1.0) -> CircuitParams:
    """Parameter point on the sweep axes sqrt(E_C/E_L), E_J/E_C"""
    if not r_imp > 0:
        raise ValidationError('r_imp', f"must be > 0, got {r_imp}")
    if not r_j >= 0:
        raise ValidationError('r_j', f"must be >= 0, got {r_j}")
    return CircuitParams(e_c=e_c, e_l=e_c / r_imp ** 2, e_j=r_j * e_c, theta=theta)


def with_theta(p: CircuitParams, theta: float) -> CircuitParams:
    return CircuitParams(e_c=p.e_c, e_l=p.e_l, e_j=p.e_j, theta=theta)


def parse_quantity(text: str, unit_kind: str) -> float:
    """
    Parse a suffixed magnitude such as "1e4nH" or "300pA" into SI units

    Suffixes are case-sensitive; a bare number is taken as already SI.
    """
    if unit_kind not in _BASE_UNITS:
        raise ValidationError('unit_kind', f"unknown quantity kind '{unit_kind}'")
    match = _QUANTITY.match(str(text))
    if not match:
        raise ValidationError(unit_kind, f"cannot parse '{text}'")

    magnitude = float(match.group(1))
    suffix = match.group(2)
    if not suffix:
        return magnitude

    base = _BASE_UNITS[unit_kind]
    if not suffix.endswith(base):
        raise ValidationError(unit_kind, f"unit '{suffix}' is not a {unit_kind} unit ({base})")
    prefix = suffix[:-len(base)]
    if prefix not in _UNIT_PREFIXES:
        raise ValidationError(unit_kind, f"unknown prefix '{prefix}' in '{text}'")
    return magnitude * _UNIT_PREFIXES[prefix]
