"""
Sweep engine for fluxtrade
Evaluates parameter grids, classifies phases and fits decay laws
"""

import hashlib
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from functools import partial
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, TypeVar

import numpy as np
from scipy import stats
from tqdm import tqdm

from . import __version__
from .bloch import (
    breakdown_flag, effective_capacitance_numeric, effective_capacitance_tb, predicted_variance
)
from .exceptions import InsufficientDataError, ValidationError
from .logger import get_logger
from .models import (
    FitKind, FitReport, Phase, PhasePoint, SweepRecord, SweepSpec, TradeoffCurve
)
from .params import from_ratios
from .spectrum import max_persistent_current, observables

logger = logging.getLogger(__name__)

T = TypeVar('T')

MIN_FIT_POINTS = 4


def classify(i_p_max: float, threshold: float = 1e-2) -> Phase:
    """Insulating iff the maximal persistent current is below threshold"""
    if not i_p_max >= 0:
        raise ValidationError('i_p_max', f"must be >= 0, got {i_p_max}")
    if not threshold > 0:
        raise ValidationError('threshold', f"must be > 0, got {threshold}")
    return Phase.INSULATING if i_p_max < threshold else Phase.SUPERCONDUCTING


def _ratio(numerator: float, denominator: float) -> float:
    """numerator/denominator, NaN when undefined"""
    if denominator == 0:
        return float('nan')
    return numerator / denominator


def evaluate_point(spec: SweepSpec, r_imp: float, r_j: float) -> SweepRecord:
    """All observables of one grid point; raises on failure"""
    p = from_ratios(r_imp, r_j, spec.theta, spec.e_c_ref)
    result = observables(p, spec.tol, spec.theta_samples)

    c_star = effective_capacitance_numeric(p.e_c, p.e_j)
    c_star_tb = effective_capacitance_tb(p.e_c, p.e_j) if p.e_j > 0 else float('nan')
    sigma0_sq = result.variance[0]

    return SweepRecord(
        r_imp=r_imp,
        r_j=r_j,
        theta=p.theta,
        delta_10=result.delta_10,
        rel_anharmonicity=result.rel_anharmonicity,
        m_phi_sq=result.m_phi_sq,
        m_phi_sq_over_delta_r=_ratio(result.m_phi_sq, result.rel_anharmonicity),
        sigma0_sq=sigma0_sq,
        sigma0_sq_predicted=predicted_variance(p.e_l, c_star, 0),
        e_c_star_numeric=c_star,
        e_c_star_tb=c_star_tb,
        i_p_max=result.persistent_current_max,
        phase=classify(result.persistent_current_max, spec.threshold),
        basis_dimension=result.basis_dimension,
        breakdown=breakdown_flag(sigma0_sq)
    )


def _sweep_task(spec: SweepSpec, point: tuple) -> SweepRecord:
    r_imp, r_j = point
    try:
        return evaluate_point(spec, r_imp, r_j)
    except Exception as e:
        return SweepRecord.failed(r_imp, r_j, spec.theta, f"{type(e).__name__}: {e}")


def _phase_task(settings: Dict[str, Any], point: tuple) -> PhasePoint:
    el_over_ec, r_j = point
    try:
        p = from_ratios(math.sqrt(1.0 / el_over_ec), r_j, 0.0, settings['e_c_ref'])
        i_p_max = max_persistent_current(p, settings['theta_samples'], settings['tol'])
        return PhasePoint(r_j, el_over_ec, i_p_max, classify(i_p_max, settings['threshold']))
    except Exception as e:
        return PhasePoint(r_j, el_over_ec, float('nan'), Phase.ERROR, f"{type(e).__name__}: {e}")


class SweepEngine:
    """
    Evaluates grid points concurrently and returns them in grid order
    """

    def __init__(self, workers: Optional[int] = None, progress: bool = True):
        self.workers = workers if workers is not None else (os.cpu_count() or 1)
        if self.workers < 1:
            raise ValidationError('workers', f"must be >= 1, got {self.workers}")
        self.progress = progress
        self.log = get_logger()

    def map(self, task: Callable[[Any], T], points: Sequence[Any], label: str) -> List[T]:
        """
        Apply task to every point; results come back in input order

        Args:
            task: Picklable callable evaluating one point
            points: Grid points in output order
            label: Progress-bar description

        Returns:
            One result per point
        """
        results: List[Optional[T]] = [None] * len(points)
        with tqdm(total=len(points), desc=label, disable=not self.progress) as bar:
            if self.workers == 1 or len(points) <= 1:
                for i, point in enumerate(points):
                    results[i] = task(point)
                    bar.update(1)
            else:
                with ProcessPoolExecutor(max_workers=min(self.workers, len(points))) as pool:
                    futures = {pool.submit(task, point): i for i, point in enumerate(points)}
                    for future in as_completed(futures):
                        results[futures[future]] = future.result()
                        bar.update(1)
        return results

    def run(self, spec: SweepSpec) -> List[SweepRecord]:
        """
        Evaluate every (r_imp, r_j) point of a sweep

        Rows are ordered r_j outer, r_imp inner. Failed points become
        error rows and the sweep continues.
        """
        points = [(r_imp, r_j) for r_j in spec.r_j_grid for r_imp in spec.r_imp_grid]
        logger.info(f"Sweeping {len(points)} points at theta={spec.theta:.6g}")
        records = self.map(partial(_sweep_task, spec), points, "sweep")

        for record in records:
            if record.ok:
                self.log.log_sweep_point(record.r_imp, record.r_j, record.phase.value, record.basis_dimension)
            else:
                self.log.log_point_failure(record.r_imp, record.r_j, record.error)
        return records

    def phase_diagram(
        self,
        r_j_grid: Iterable[float],
        el_over_ec_grid: Iterable[float],
        theta_samples: int = 32,
        tol: float = 1e-9,
        threshold: float = 1e-2,
        e_c_ref: float = 1.0
    ) -> List[PhasePoint]:
        """
        Classify every (E_J/E_C, E_L/E_C) cell by its maximal persistent current

        Rows are ordered E_L/E_C outer (ascending), E_J/E_C inner.
        """
        r_j_values = _canonical_grid('r_j_grid', r_j_grid, allow_zero=True)
        el_values = _canonical_grid('el_over_ec_grid', el_over_ec_grid, allow_zero=False)
        settings = {'theta_samples': theta_samples, 'tol': tol, 'threshold': threshold, 'e_c_ref': e_c_ref}
        points = [(el, r_j) for el in el_values for r_j in r_j_values]
        cells = self.map(partial(_phase_task, settings), points, "phase-diagram")

        for cell in cells:
            if cell.phase is Phase.ERROR:
                self.log.log_point_failure(math.sqrt(1.0 / cell.el_over_ec), cell.r_j, cell.error)
        return cells


def _canonical_grid(name: str, values: Iterable[float], allow_zero: bool) -> List[float]:
    grid = sorted(float(v) for v in values)
    if not grid:
        raise ValidationError(name, "grid is empty")
    if any(not math.isfinite(v) for v in grid):
        raise ValidationError(name, "grid values must be finite")
    if grid[0] < 0 or (grid[0] == 0 and not allow_zero):
        raise ValidationError(name, "grid values must be positive")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError(name, "grid values must be distinct")
    return grid


def fit_series(x: Sequence[float], y: Sequence[float], kind: FitKind) -> FitReport:
    """
    OLS fit of log(y) against x (exp_decay) or log(x) (power_law)

    Non-positive or non-finite y are excluded and counted.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    usable = np.isfinite(y) & (y > 0) & np.isfinite(x)
    if kind is FitKind.POWER_LAW:
        usable &= x > 0
    excluded = int(np.count_nonzero(~usable))
    if np.count_nonzero(usable) < MIN_FIT_POINTS:
        raise InsufficientDataError(
            f"{kind.value} fit needs {MIN_FIT_POINTS} usable points",
            int(np.count_nonzero(usable)),
            excluded
        )

    abscissa = np.log(x[usable]) if kind is FitKind.POWER_LAW else x[usable]
    fit = stats.linregress(abscissa, np.log(y[usable]))
    r_squared = float(min(max(fit.rvalue ** 2, 0.0), 1.0))
    return FitReport(
        kind=kind,
        slope=float(fit.slope),
        intercept=float(fit.intercept),
        r_squared=r_squared,
        n_points=int(np.count_nonzero(usable)),
        excluded=excluded
    )


def fit_decay(
    records: Sequence[SweepRecord],
    quantity: str,
    kind: FitKind,
    r_j: Optional[float] = None
) -> FitReport:
    """
    Fit the magnitude of one column against r_imp over the insulating records of a single r_j

    rel_anharmonicity is negative once the band softens, so the decay laws
    describe |quantity|.
    """
    if quantity not in SweepRecord.__dataclass_fields__:
        raise ValidationError('quantity', f"unknown column '{quantity}'")
    rows = [r for r in records if r.phase is Phase.INSULATING]
    if r_j is not None:
        rows = [r for r in rows if r.r_j == r_j]
    if len({r.r_j for r in rows}) > 1:
        raise ValidationError('r_j', "records span several r_j values; pick one")
    rows.sort(key=lambda r: r.r_imp)
    return fit_series([r.r_imp for r in rows], [abs(getattr(r, quantity)) for r in rows], kind)


def _optional_fit(records: Sequence[SweepRecord], quantity: str, kind: FitKind) -> Optional[FitReport]:
    try:
        return fit_decay(records, quantity, kind)
    except InsufficientDataError as e:
        logger.info(f"No {kind.value} fit for {quantity}: {e}")
        return None


def tradeoff(records: Sequence[SweepRecord]) -> List[TradeoffCurve]:
    """Per-r_j curves of (rel_anharmonicity, M_phi^2) ordered by r_imp, with decay fits"""
    curves = []
    for r_j in sorted({r.r_j for r in records if r.ok}):
        rows = sorted((r for r in records if r.ok and r.r_j == r_j), key=lambda r: r.r_imp)
        curves.append(TradeoffCurve(
            r_j=r_j,
            r_imp=tuple(r.r_imp for r in rows),
            rel_anharmonicity=tuple(r.rel_anharmonicity for r in rows),
            m_phi_sq=tuple(r.m_phi_sq for r in rows),
            m_phi_fit=_optional_fit(rows, 'm_phi_sq', FitKind.EXP_DECAY),
            anharmonicity_fit=_optional_fit(rows, 'rel_anharmonicity', FitKind.POWER_LAW)
        ))
    return curves


def boundary(rows: Sequence[Any], row_attr: str = 'el_over_ec', axis_attr: str = 'r_j') -> Dict[float, Optional[float]]:
    """First superconducting axis value of each row (None when the row never switches)"""
    result: Dict[float, Optional[float]] = {}
    for key in sorted({getattr(r, row_attr) for r in rows}):
        line = sorted((r for r in rows if getattr(r, row_attr) == key), key=lambda r: getattr(r, axis_attr))
        result[key] = next(
            (getattr(r, axis_attr) for r in line if r.phase is Phase.SUPERCONDUCTING), None
        )
    return result


def switch_count(rows: Sequence[Any], row_attr: str = 'el_over_ec', axis_attr: str = 'r_j') -> Dict[float, int]:
    """Number of phase changes along each row, ignoring error cells"""
    counts = {}
    for key in sorted({getattr(r, row_attr) for r in rows}):
        phases = [r.phase for r in sorted(
            (r for r in rows if getattr(r, row_attr) == key and r.phase is not Phase.ERROR),
            key=lambda r: getattr(r, axis_attr)
        )]
        counts[key] = sum(1 for a, b in zip(phases, phases[1:]) if a is not b)
    return counts


def config_hash(payload: Dict[str, Any]) -> str:
    """sha256 over the canonical JSON of a run's inputs and the package version"""
    canonical = json.dumps({'version': __version__, 'inputs': payload}, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()
