#!/usr/bin/env python3
"""
Command-line interface for fluxtrade
"""

import argparse
import json
import math
import os
import re
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .bath import calibrate_alpha, error_budget, optimal_rabi, pure_dephasing_rate
from .bloch import dispersion
from .config import Config
from .exceptions import (
    ContractViolation, ConvergenceError, DomainError, FluxtradeError, InsufficientDataError,
    ValidationError
)
from .logger import get_logger, setup_logger
from .models import (
    BathFamily, BathParams, CircuitParams, Command, OutputFormat, PhasePoint, RunConfig,
    SweepRecord, SweepSpec
)
from .operators import converge_operators, minimum_phi_max, potential, wavefunction
from .output import Table, write_table
from .params import (
    GHZ, critical_current_from_energy, capacitance_from_energy, from_physical, impedance,
    inductance_from_energy, parse_quantity, ratios
)
from .persistence import ResultStore
from .spectrum import observables
from .sweep import SweepEngine, boundary, config_hash, tradeoff

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4

LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL')

SWEEP_COLUMNS = list(SweepRecord.__dataclass_fields__)
PHASE_COLUMNS = ['r_j', 'el_over_ec', 'i_p_max', 'phase', 'error']
TRADEOFF_COLUMNS = ['r_j', 'r_imp', 'rel_anharmonicity', 'm_phi_sq']
SPECTRUM_COLUMNS = [
    'e_c', 'e_l', 'e_j', 'theta', 'delta_10', 'delta_21', 'anharmonicity', 'rel_anharmonicity',
    'm_phi_sq', 'sigma0_sq', 'sigma1_sq', 'sigma2_sq', 'i_p_max', 'basis_dimension'
]
WAVEFUNCTION_COLUMNS = ['phi', 'psi0', 'potential']
DISPERSION_COLUMNS = ['n_tilde', 'eps0', 'eps1']
BUDGET_COLUMNS = [
    'alpha', 'temperature', 'm_phi_sq', 'gamma_phi', 'delta', 'rabi', 'gate_time',
    'p_leak', 'p_dephase', 'out_of_regime', 'optimal_rabi'
]
CONVERT_COLUMNS = [
    'capacitance', 'inductance', 'critical_current', 'e_c', 'e_l', 'e_j',
    'r_imp', 'r_j', 'z_over_rq', 'z0_ohm'
]

_ANGLE = re.compile(r'^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?\s*\*?\s*pi\s*(?:/\s*(\d+\.?\d*))?\s*$')


def parse_angle(text: Any) -> float:
    """Radians from a number or a multiple of pi such as 'pi/2' or '0.9pi'"""
    if isinstance(text, (int, float)):
        return float(text)
    match = _ANGLE.match(str(text))
    if match:
        factor = float(match.group(1)) if match.group(1) else 1.0
        divisor = float(match.group(2)) if match.group(2) else 1.0
        return factor * math.pi / divisor
    try:
        return float(text)
    except ValueError:
        raise ValidationError('theta', f"cannot parse angle '{text}'")


def parse_energy(text: Any, field: str) -> float:
    """Energy as frequency in GHz; suffixed values such as '300MHz' are converted"""
    if isinstance(text, (int, float)):
        return float(text)
    if re.search(r'[A-Za-zµ]', str(text)):
        return parse_quantity(text, 'frequency') / GHZ
    try:
        return float(text)
    except ValueError:
        raise ValidationError(field, f"cannot parse energy '{text}'")


class Inputs:
    """Command parameters: explicit flags win over run-file values, then defaults"""

    def __init__(self, args: argparse.Namespace, parameters: Dict[str, Any], allowed: Sequence[str]):
        unknown = sorted(set(parameters) - set(allowed))
        if unknown:
            raise ValidationError(unknown[0], "unknown parameter for this command")
        self.args = args
        self.parameters = parameters
        self.used: Dict[str, Any] = {}

    def get(self, name: str, default: Any = None) -> Any:
        value = getattr(self.args, name, None)
        if value is None:
            value = self.parameters.get(name)
        if value is not None:
            self.used[name] = value
        return default if value is None else value

    def has(self, name: str) -> bool:
        return self.get(name) is not None


def _grid(inputs: Inputs, name: str) -> List[float]:
    values = inputs.get(name)
    spaced = inputs.get(f"{name}_logspace")
    if values is not None and spaced is not None:
        raise ValidationError(name, f"give either {name} or {name}_logspace, not both")
    if spaced is not None:
        if len(spaced) != 3:
            raise ValidationError(f"{name}_logspace", "expects START STOP COUNT")
        start, stop, count = float(spaced[0]), float(spaced[1]), int(spaced[2])
        if not (start > 0 and stop > 0 and count >= 1):
            raise ValidationError(f"{name}_logspace", "START and STOP must be > 0 and COUNT >= 1")
        return [float(v) for v in np.geomspace(start, stop, count)]
    if values is None:
        raise ValidationError(name, "grid is required")
    return [float(v) for v in values]


def _circuit(inputs: Inputs, config: Config) -> CircuitParams:
    """Resolve exactly one of the physical, energy or ratio parameter modes"""
    theta = parse_angle(inputs.get('theta', config.get('spectrum.theta')))
    physical = [inputs.has(n) for n in ('inductance', 'capacitance', 'critical_current')]
    energies = [inputs.has(n) for n in ('e_l', 'e_j')]
    ratio_flags = [inputs.has(n) for n in ('el_over_ec', 'ej_over_ec')]
    modes = sum(1 for group in (physical, energies, ratio_flags) if any(group))
    if modes != 1:
        raise ValidationError(
            'parameters',
            "give exactly one of --L/--C/--Ic, --ec/--el/--ej or --el-over-ec/--ej-over-ec"
        )

    if any(physical):
        if not all(physical) or inputs.has('e_c'):
            raise ValidationError('parameters', "--L, --C and --Ic must be given together")
        return from_physical(
            parse_quantity(inputs.get('capacitance'), 'capacitance'),
            parse_quantity(inputs.get('inductance'), 'inductance'),
            parse_quantity(inputs.get('critical_current'), 'current'),
            theta
        )
    if any(energies):
        if not (all(energies) and inputs.has('e_c')):
            raise ValidationError('parameters', "--ec, --el and --ej must be given together")
        return CircuitParams(
            e_c=parse_energy(inputs.get('e_c'), 'e_c'),
            e_l=parse_energy(inputs.get('e_l'), 'e_l'),
            e_j=parse_energy(inputs.get('e_j'), 'e_j'),
            theta=theta
        )
    if not all(ratio_flags):
        raise ValidationError('parameters', "--el-over-ec and --ej-over-ec must be given together")
    e_c = parse_energy(inputs.get('e_c', 1.0), 'e_c')
    return CircuitParams(
        e_c=e_c,
        e_l=float(inputs.get('el_over_ec')) * e_c,
        e_j=float(inputs.get('ej_over_ec')) * e_c,
        theta=theta
    )


def _emit(run: RunConfig, config: Config, table: Table):
    write_table(
        table, run.output_path, run.format, stream=sys.stdout,
        float_format=config.get('output.float_format')
    )


def _run_config(args: argparse.Namespace, config: Config, parameters: Dict[str, Any]) -> RunConfig:
    fmt = args.format or config.get('output.format')
    try:
        output_format = OutputFormat(fmt)
    except ValueError:
        raise ValidationError('format', f"unknown output format '{fmt}'")
    return RunConfig(
        command=Command(args.command),
        parameters=parameters,
        output_path=args.output,
        format=output_format
    )


def _hash(command: str, payload: Dict[str, Any]) -> str:
    return config_hash({'command': command, **payload})


def spectrum_command(args, config: Config, parameters: Dict[str, Any]) -> int:
    """Observables of one circuit, optionally with the ground-state wavefunction"""
    inputs = Inputs(args, parameters, SPECTRUM_PARAMS)
    p = _circuit(inputs, config)
    tol = float(inputs.get('tol', config.get('solver.tol')))
    samples = int(inputs.get('theta_samples', config.get('spectrum.theta_samples')))
    run = _run_config(args, config, inputs.used)

    result = observables(p, tol, samples)
    report = {
        'e_c': p.e_c, 'e_l': p.e_l, 'e_j': p.e_j, 'theta': p.theta,
        'delta_10': result.delta_10, 'delta_21': result.delta_21,
        'anharmonicity': result.anharmonicity, 'rel_anharmonicity': result.rel_anharmonicity,
        'm_phi_sq': result.m_phi_sq,
        'sigma0_sq': result.variance[0], 'sigma1_sq': result.variance[1], 'sigma2_sq': result.variance[2],
        'i_p_max': result.persistent_current_max, 'basis_dimension': result.basis_dimension,
    }
    digest = _hash(run.command.value, {'params': p.to_dict(), 'tol': tol, 'theta_samples': samples,
                                       'wavefunction': bool(inputs.get('wavefunction'))})

    if inputs.get('wavefunction'):
        points = int(inputs.get('points', 801))
        phi_max = float(inputs.get('phi_range', minimum_phi_max(p)))
        _, sol, _ = converge_operators(p, 1, tol)
        phi = np.linspace(-phi_max, phi_max, points)
        psi = wavefunction(p, sol, 0, phi)
        rows = [{'phi': float(x), 'psi0': float(y), 'potential': float(v)}
                for x, y, v in zip(phi, psi, potential(p, phi))]
        table = Table(run.command.value, WAVEFUNCTION_COLUMNS, rows, digest, inputs.used, [report])
    else:
        table = Table(run.command.value, SPECTRUM_COLUMNS, [report], digest, inputs.used)

    _emit(run, config, table)
    return EXIT_OK


def dispersion_command(args, config: Config, parameters: Dict[str, Any]) -> int:
    """Lowest two Bloch bands and the effective capacitive energy"""
    inputs = Inputs(args, parameters, DISPERSION_PARAMS)
    if not inputs.has('ej_over_ec'):
        raise ValidationError('ej_over_ec', "is required")
    e_c = parse_energy(inputs.get('e_c', 1.0), 'e_c')
    e_j = float(inputs.get('ej_over_ec')) * e_c
    points = int(inputs.get('points', config.get('bloch.grid_points')))
    el_over_ec = inputs.get('el_over_ec')
    e_l = float(el_over_ec) * e_c if el_over_ec is not None else None
    run = _run_config(args, config, inputs.used)

    result = dispersion(e_c, e_j, points, e_l)
    rows = [{'n_tilde': float(n), 'eps0': float(a), 'eps1': float(b)}
            for n, a, b in zip(result.quasicharge_grid, result.bands[0], result.bands[1])]
    summary = [{
        'e_c_star_numeric': result.c_star_numeric,
        'e_c_star_tb': result.c_star_tb,
        't_instanton': result.t_instanton,
        'omega_star': result.omega_star,
    }]
    digest = _hash(run.command.value, {'e_c': e_c, 'e_j': e_j, 'points': points, 'e_l': e_l})
    _emit(run, config, Table(run.command.value, DISPERSION_COLUMNS, rows, digest, inputs.used, summary))
    return EXIT_OK


def _sweep_spec(inputs: Inputs, config: Config) -> SweepSpec:
    return SweepSpec(
        r_imp_grid=tuple(_grid(inputs, 'r_imp')),
        r_j_grid=tuple(_grid(inputs, 'r_j')),
        theta=parse_angle(inputs.get('theta', config.get('spectrum.theta'))),
        e_c_ref=float(inputs.get('e_c_ref', config.get('sweep.e_c_ref'))),
        theta_samples=int(inputs.get('theta_samples', config.get('spectrum.theta_samples'))),
        tol=float(inputs.get('tol', config.get('solver.tol'))),
        threshold=float(inputs.get('threshold', config.get('sweep.threshold')))
    )


def _engine(inputs: Inputs, config: Config, args) -> SweepEngine:
    workers = inputs.get('workers', config.get('sweep.workers'))
    progress = config.get('sweep.progress', True) and not args.no_progress
    return SweepEngine(workers=int(workers) if workers is not None else None, progress=progress)


def _records(command: str, spec: SweepSpec, digest: str, inputs: Inputs, config: Config, args) -> List[SweepRecord]:
    store_path = inputs.get('store')
    store = ResultStore(store_path) if store_path else None
    try:
        if store and store.has_run(digest):
            get_logger().info(f"Reusing stored run {digest[:12]} from {store_path}")
            return store.load_records(digest)
        records = _engine(inputs, config, args).run(spec)
        if store:
            store.save_run(command, digest, spec.to_dict(), records)
        return records
    finally:
        if store:
            store.close()


def _finish(run: RunConfig, failed: int, rows: int) -> int:
    destination = run.output_path or 'stdout'
    get_logger().log_run_complete(run.command.value, rows, failed, destination)
    return EXIT_CONVERGENCE if failed else EXIT_OK


def sweep_command(args, config: Config, parameters: Dict[str, Any]) -> int:
    """Full SweepRecord table over an (r_imp, r_j) grid"""
    inputs = Inputs(args, parameters, SWEEP_PARAMS)
    spec = _sweep_spec(inputs, config)
    run = _run_config(args, config, inputs.used)
    digest = _hash(run.command.value, {'spec': spec.to_dict()})

    records = _records(run.command.value, spec, digest, inputs, config, args)
    rows = [r.to_dict() for r in records]
    _emit(run, config, Table(run.command.value, SWEEP_COLUMNS, rows, digest, spec.to_dict()))
    return _finish(run, sum(1 for r in records if not r.ok), len(records))


def tradeoff_command(args, config: Config, parameters: Dict[str, Any]) -> int:
    """(rel_anharmonicity, M_phi^2) curves per r_j with decay-law fits"""
    inputs = Inputs(args, parameters, SWEEP_PARAMS)
    spec = _sweep_spec(inputs, config)
    run = _run_config(args, config, inputs.used)
    # shares stored rows with the sweep command
    digest = _hash(Command.SWEEP.value, {'spec': spec.to_dict()})

    records = _records(Command.SWEEP.value, spec, digest, inputs, config, args)
    rows, summary = [], []
    for curve in tradeoff(records):
        for r_imp, rel, m in zip(curve.r_imp, curve.rel_anharmonicity, curve.m_phi_sq):
            rows.append({'r_j': curve.r_j, 'r_imp': r_imp, 'rel_anharmonicity': rel, 'm_phi_sq': m})
        for quantity, fit in (('m_phi_sq', curve.m_phi_fit), ('rel_anharmonicity', curve.anharmonicity_fit)):
            if fit is not None:
                summary.append({'fit': quantity, 'r_j': curve.r_j, **fit.to_dict()})
    _emit(run, config, Table(run.command.value, TRADEOFF_COLUMNS, rows, digest, spec.to_dict(), summary))
    return _finish(run, sum(1 for r in records if not r.ok), len(rows))


def phase_diagram_command(args, config: Config, parameters: Dict[str, Any]) -> int:
    """Insulating/superconducting classification over (E_J/E_C, E_L/E_C)"""
    inputs = Inputs(args, parameters, PHASE_PARAMS)
    r_j_grid = _grid(inputs, 'r_j')
    el_grid = _grid(inputs, 'el_over_ec')
    settings = {
        'theta_samples': int(inputs.get('theta_samples', config.get('spectrum.theta_samples'))),
        'tol': float(inputs.get('tol', config.get('solver.tol'))),
        'threshold': float(inputs.get('threshold', config.get('sweep.threshold'))),
        'e_c_ref': float(inputs.get('e_c_ref', config.get('sweep.e_c_ref'))),
    }
    run = _run_config(args, config, inputs.used)
    echo = {'r_j_grid': sorted(r_j_grid), 'el_over_ec_grid': sorted(el_grid), **settings}
    digest = _hash(run.command.value, echo)

    store_path = inputs.get('store')
    store = ResultStore(store_path) if store_path else None
    try:
        if store and store.has_run(digest):
            cells = [PhasePoint.from_dict(row) for row in store.load_rows(digest)]
        else:
            cells = _engine(inputs, config, args).phase_diagram(r_j_grid, el_grid, **settings)
            if store:
                store.save_run(run.command.value, digest, echo, cells)
    finally:
        if store:
            store.close()

    summary = [{'boundary_el_over_ec': el, 'first_superconducting_r_j': r_j}
               for el, r_j in boundary(cells).items()]
    rows = [c.to_dict() for c in cells]
    _emit(run, config, Table(run.command.value, PHASE_COLUMNS, rows, digest, echo, summary))
    return _finish(run, sum(1 for c in cells if c.error), len(cells))


def _parse_calibration(text: str) -> Dict[str, float]:
    """'gamma=400kHz,mphi2=30' -> {'gamma': 4e5, 'mphi2': 30.0}"""
    values = {}
    for item in str(text).split(','):
        if '=' not in item:
            raise ValidationError('calibrate', f"expected key=value, got '{item}'")
        key, value = (s.strip() for s in item.split('=', 1))
        if key == 'gamma':
            values['gamma'] = parse_quantity(value, 'frequency')
        elif key == 'mphi2':
            values['mphi2'] = float(value)
        else:
            raise ValidationError('calibrate', f"unknown calibration key '{key}'")
    if set(values) != {'gamma', 'mphi2'}:
        raise ValidationError('calibrate', "needs both gamma and mphi2")
    return values


def budget_command(args, config: Config, parameters: Dict[str, Any]) -> int:
    """Per-gate leakage/dephasing budget from a rate or a calibrated bath"""
    inputs = Inputs(args, parameters, BUDGET_PARAMS)
    temperature = parse_quantity(inputs.get('temperature', config.get('bath.temperature_k')), 'temperature')
    tau_constant = float(config.get('bath.tau_constant'))
    dephasing_constant = float(config.get('bath.dephasing_constant'))
    try:
        family = BathFamily(config.get('bath.family'))
    except ValueError:
        raise ValidationError('bath.family', f"unknown bath family '{config.get('bath.family')}'")

    if not inputs.has('delta'):
        raise ValidationError('delta', "is required")
    delta = parse_energy(inputs.get('delta'), 'delta')

    alpha, m_phi_sq = None, None
    if inputs.has('gamma_phi'):
        if any(inputs.has(n) for n in ('m_phi_sq', 'alpha', 'calibrate')):
            raise ValidationError('gamma_phi', "give either --gamma-phi or --m-phi-sq with a bath, not both")
        gamma_phi = parse_quantity(inputs.get('gamma_phi'), 'frequency')
    else:
        if not inputs.has('m_phi_sq'):
            raise ValidationError('m_phi_sq', "is required when --gamma-phi is not given")
        m_phi_sq = float(inputs.get('m_phi_sq'))
        if inputs.has('alpha') == inputs.has('calibrate'):
            raise ValidationError('alpha', "give exactly one of --alpha or --calibrate")
        if inputs.has('calibrate'):
            anchor = _parse_calibration(inputs.get('calibrate'))
            alpha = calibrate_alpha(anchor['gamma'], anchor['mphi2'], temperature)
            get_logger().log_calibration(alpha, anchor['gamma'], anchor['mphi2'], temperature)
        else:
            alpha = float(inputs.get('alpha'))
        gamma_phi = pure_dephasing_rate(m_phi_sq, BathParams(alpha, temperature, family))

    if inputs.has('rabi') and inputs.has('gate_time'):
        raise ValidationError('rabi', "give either --rabi or --gate-time, not both")
    best = optimal_rabi(gamma_phi, delta, tau_constant, dephasing_constant) if gamma_phi > 0 else float('nan')
    if inputs.has('rabi'):
        rabi = float(inputs.get('rabi'))
    elif inputs.has('gate_time'):
        rabi = tau_constant / parse_quantity(inputs.get('gate_time'), 'time')
    elif gamma_phi > 0:
        rabi = best
    else:
        raise ValidationError('rabi', "is required when the dephasing rate is zero")

    run = _run_config(args, config, inputs.used)
    budget = error_budget(gamma_phi, delta, rabi, tau_constant, dephasing_constant)
    if budget.out_of_regime:
        get_logger().log_out_of_regime(budget.p_leak, budget.p_dephase)

    row = {
        'alpha': alpha, 'temperature': temperature, 'm_phi_sq': m_phi_sq,
        'gamma_phi': budget.gamma_phi, 'delta': delta, 'rabi': budget.rabi,
        'gate_time': budget.gate_time, 'p_leak': budget.p_leak, 'p_dephase': budget.p_dephase,
        'out_of_regime': budget.out_of_regime, 'optimal_rabi': best,
    }
    digest = _hash(run.command.value, {'inputs': inputs.used, 'bath': config.get('bath')})
    _emit(run, config, Table(run.command.value, BUDGET_COLUMNS, [row], digest, inputs.used))
    return EXIT_OK


_CONVERT_PAIRS = (
    ('capacitance', 'e_c', 'capacitance', capacitance_from_energy),
    ('inductance', 'e_l', 'inductance', inductance_from_energy),
    ('critical_current', 'e_j', 'current', critical_current_from_energy),
)


def convert_command(args, config: Config, parameters: Dict[str, Any]) -> int:
    """Every quantity derivable from a consistent subset of L, C, I_c and energies"""
    inputs = Inputs(args, parameters, CONVERT_PARAMS)
    physical: Dict[str, Optional[float]] = {}
    energies: Dict[str, Optional[float]] = {}
    for physical_name, energy_name, kind, to_physical in _CONVERT_PAIRS:
        if inputs.has(physical_name) and inputs.has(energy_name):
            raise ValidationError(physical_name, f"over-determined: both {physical_name} and {energy_name} given")
        if inputs.has(physical_name):
            physical[physical_name] = parse_quantity(inputs.get(physical_name), kind)
            if not physical[physical_name] > 0:
                raise ValidationError(physical_name, "must be > 0")
        elif inputs.has(energy_name):
            energies[energy_name] = parse_energy(inputs.get(energy_name), energy_name)
            physical[physical_name] = to_physical(energies[energy_name])
        else:
            physical[physical_name] = None

    missing = [n for n in ('capacitance', 'inductance') if physical[n] is None]
    if missing:
        raise ValidationError(missing[0], f"under-determined: need {missing[0]} or its energy")

    current = physical['critical_current']
    p = from_physical(physical['capacitance'], physical['inductance'], current if current else 1.0)
    # energies given directly are echoed exactly rather than via the round trip
    e_c = energies.get('e_c', p.e_c)
    e_l = energies.get('e_l', p.e_l)
    e_j = energies.get('e_j', p.e_j if current else float('nan'))
    point = CircuitParams(e_c=e_c, e_l=e_l, e_j=e_j if not math.isnan(e_j) else 0.0)
    derived = ratios(point)

    run = _run_config(args, config, inputs.used)
    row = {
        'capacitance': physical['capacitance'], 'inductance': physical['inductance'],
        'critical_current': current if current is not None else float('nan'),
        'e_c': e_c, 'e_l': e_l, 'e_j': e_j,
        'r_imp': derived.r_imp, 'r_j': derived.r_j if not math.isnan(e_j) else float('nan'),
        'z_over_rq': derived.z_over_rq, 'z0_ohm': impedance(point),
    }
    digest = _hash(run.command.value, {'inputs': inputs.used})
    _emit(run, config, Table(run.command.value, CONVERT_COLUMNS, [row], digest, inputs.used))
    return EXIT_OK


SPECTRUM_PARAMS = (
    'e_c', 'e_l', 'e_j', 'el_over_ec', 'ej_over_ec', 'inductance', 'capacitance',
    'critical_current', 'theta', 'tol', 'theta_samples', 'wavefunction', 'points', 'phi_range'
)
DISPERSION_PARAMS = ('e_c', 'ej_over_ec', 'el_over_ec', 'points')
SWEEP_PARAMS = (
    'r_imp', 'r_imp_logspace', 'r_j', 'r_j_logspace', 'theta', 'e_c_ref', 'theta_samples',
    'tol', 'threshold', 'workers', 'store'
)
PHASE_PARAMS = (
    'r_j', 'r_j_logspace', 'el_over_ec', 'el_over_ec_logspace', 'e_c_ref', 'theta_samples',
    'tol', 'threshold', 'workers', 'store'
)
BUDGET_PARAMS = (
    'm_phi_sq', 'alpha', 'temperature', 'gamma_phi', 'calibrate', 'delta', 'rabi', 'gate_time'
)
CONVERT_PARAMS = ('inductance', 'capacitance', 'critical_current', 'e_c', 'e_l', 'e_j')


def _add_circuit_flags(parser):
    parser.add_argument('--ec', dest='e_c', help='Charging energy E_C (GHz, or suffixed e.g. 300MHz)')
    parser.add_argument('--el', dest='e_l', help='Inductive energy E_L (GHz, or suffixed)')
    parser.add_argument('--ej', dest='e_j', help='Josephson energy E_J (GHz, or suffixed)')
    parser.add_argument('--L', dest='inductance', help='Inductance, e.g. 1e4nH')
    parser.add_argument('--C', dest='capacitance', help='Capacitance, e.g. 1fF')
    parser.add_argument('--Ic', dest='critical_current', help='Critical current, e.g. 300pA')


def _add_grid_flags(parser, name: str, label: str):
    flag = name.replace('_', '-')
    parser.add_argument(f'--{flag}', dest=name, type=float, nargs='+', help=f'{label} values')
    parser.add_argument(f'--{flag}-logspace', dest=f'{name}_logspace', type=float, nargs=3,
                        metavar=('START', 'STOP', 'COUNT'), help=f'Log-spaced {label} grid')


def _add_engine_flags(parser):
    parser.add_argument('--theta-samples', type=int, help='Flux samples for the persistent-current maximum')
    parser.add_argument('--tol', type=float, help='Relative eigenvalue tolerance')
    parser.add_argument('--threshold', type=float, help='Insulating/superconducting threshold on i_p_max')
    parser.add_argument('--e-c-ref', type=float, help='Reference charging energy (GHz)')
    parser.add_argument('--workers', type=int, help='Worker processes (default: CPU count)')
    parser.add_argument('--store', help='SQLite file caching finished runs')
    parser.add_argument('--no-progress', action='store_true', help='Hide the progress bar')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='fluxtrade: fluxonium leakage versus dephasing toolkit'
    )
    parser.add_argument('--version', action='version', version=f'fluxtrade {__version__}')
    parser.add_argument('--config', '-c', help='JSON settings / run file')
    parser.add_argument('--log-level', help='DEBUG, INFO, WARNING or ERROR')
    parser.add_argument('--log-file', help='Also log to this file')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--output', '-o', help='Write the table here instead of stdout')
    common.add_argument('--format', choices=[f.value for f in OutputFormat], help='Output format')

    subparsers = parser.add_subparsers(dest='command', help='Command to execute')

    # Spectrum command
    spectrum_parser = subparsers.add_parser('spectrum', parents=[common], help='Observables of one circuit')
    _add_circuit_flags(spectrum_parser)
    spectrum_parser.add_argument('--ej-over-ec', type=float, help='E_J/E_C')
    spectrum_parser.add_argument('--el-over-ec', type=float, help='E_L/E_C')
    spectrum_parser.add_argument('--theta', help='External flux in radians (accepts pi/2, 0.9pi)')
    spectrum_parser.add_argument('--tol', type=float, help='Relative eigenvalue tolerance')
    spectrum_parser.add_argument('--theta-samples', type=int, help='Flux samples for the persistent-current maximum')
    spectrum_parser.add_argument('--wavefunction', action='store_true', default=None,
                                 help='Write (phi, psi0, V) instead of the one-row report')
    spectrum_parser.add_argument('--points', type=int, help='Phase samples of the wavefunction table')
    spectrum_parser.add_argument('--phi-range', type=float, help='Half-width of the wavefunction table')
    spectrum_parser.set_defaults(func=spectrum_command)

    # Dispersion command
    dispersion_parser = subparsers.add_parser('dispersion', parents=[common], help='Bloch bands and E_C*')
    dispersion_parser.add_argument('--ej-over-ec', type=float, help='E_J/E_C')
    dispersion_parser.add_argument('--ec', dest='e_c', help='Charging energy (GHz)')
    dispersion_parser.add_argument('--el-over-ec', type=float, help='E_L/E_C, adds omega* to the summary')
    dispersion_parser.add_argument('--points', type=int, help='Quasicharge samples on [-0.5, 0.5]')
    dispersion_parser.set_defaults(func=dispersion_command)

    # Sweep and tradeoff commands
    for name, func, help_text in (('sweep', sweep_command, 'Full observable table over a grid'),
                                  ('tradeoff', tradeoff_command, 'Anharmonicity/dephasing curves')):
        sub = subparsers.add_parser(name, parents=[common], help=help_text)
        _add_grid_flags(sub, 'r_imp', 'sqrt(E_C/E_L)')
        _add_grid_flags(sub, 'r_j', 'E_J/E_C')
        sub.add_argument('--theta', help='External flux in radians')
        _add_engine_flags(sub)
        sub.set_defaults(func=func)

    # Phase diagram command
    phase_parser = subparsers.add_parser('phase-diagram', parents=[common], help='Phase classification grid')
    _add_grid_flags(phase_parser, 'r_j', 'E_J/E_C')
    _add_grid_flags(phase_parser, 'el_over_ec', 'E_L/E_C')
    _add_engine_flags(phase_parser)
    phase_parser.set_defaults(func=phase_diagram_command)

    # Budget command
    budget_parser = subparsers.add_parser('budget', parents=[common], help='Per-gate error budget')
    budget_parser.add_argument('--m-phi-sq', type=float, help='Dephasing matrix element M_phi^2')
    budget_parser.add_argument('--alpha', type=float, help='Ohmic coupling strength')
    budget_parser.add_argument('--temperature', help='Bath temperature, e.g. 20mK')
    budget_parser.add_argument('--gamma-phi', help='Dephasing rate, e.g. 50kHz')
    budget_parser.add_argument('--calibrate', help="Set alpha from an anchor, e.g. 'gamma=400kHz,mphi2=30'")
    budget_parser.add_argument('--delta', help='Anharmonicity (GHz, or suffixed)')
    budget_parser.add_argument('--rabi', type=float, help='Angular Rabi frequency (rad/s)')
    budget_parser.add_argument('--gate-time', help='Gate time, e.g. 10ns')
    budget_parser.set_defaults(func=budget_command)

    # Convert command
    convert_parser = subparsers.add_parser('convert', parents=[common], help='Unit conversion')
    _add_circuit_flags(convert_parser)
    convert_parser.set_defaults(func=convert_command)

    return parser


def _fail(error: Exception, code: int) -> int:
    if isinstance(error, FluxtradeError):
        payload = error.to_dict()
    else:
        payload = {'error': type(error).__name__, 'message': str(error)}
    sys.stderr.write(json.dumps(payload, default=str) + '\n')
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main CLI entry point"""
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return 1

    try:
        if args.config and not os.path.exists(args.config):
            raise FileNotFoundError(f"config file not found: {args.config}")
        config = Config(args.config) if args.config else Config()
        level = str(args.log_level or config.get('logging.level', 'INFO')).upper()
        if level not in LOG_LEVELS:
            raise ValidationError('log_level', f"unknown log level '{level}'")
        setup_logger(
            level=level,
            log_file=args.log_file or config.get('logging.file')
        )
        run_command = config.run.get('command')
        if run_command is not None and run_command != args.command:
            raise ValidationError('command', f"run file is for '{run_command}', not '{args.command}'")
        parameters = config.run.get('parameters', {})
        if not isinstance(parameters, dict):
            raise ValidationError('parameters', "must be a JSON object")
        return args.func(args, config, parameters)
    except (ValidationError, DomainError, InsufficientDataError, NotImplementedError,
            json.JSONDecodeError) as e:
        return _fail(e, EXIT_VALIDATION)
    except (ConvergenceError, ContractViolation) as e:
        return _fail(e, EXIT_CONVERGENCE)
    except OSError as e:
        return _fail(e, EXIT_IO)


if __name__ == '__main__':
    sys.exit(main())
