"""
Test suite for the sweep engine, phase classification and decay fits
"""

import math

import numpy as np
import pytest

from fluxtrade import sweep as sweep_module
from fluxtrade.exceptions import ConvergenceError, InsufficientDataError, ValidationError
from fluxtrade.models import FitKind, Phase, PhasePoint, SweepRecord, SweepSpec
from fluxtrade.sweep import (
    SweepEngine, boundary, classify, config_hash, fit_decay, fit_series, switch_count, tradeoff
)


def make_record(r_imp, r_j, m_phi_sq, rel_anharmonicity=0.1, phase=Phase.INSULATING):
    return SweepRecord(
        r_imp=r_imp, r_j=r_j, theta=math.pi / 2,
        delta_10=1.0, rel_anharmonicity=rel_anharmonicity, m_phi_sq=m_phi_sq,
        m_phi_sq_over_delta_r=m_phi_sq / rel_anharmonicity,
        sigma0_sq=1.0, sigma0_sq_predicted=1.0,
        e_c_star_numeric=0.5, e_c_star_tb=0.5, i_p_max=1e-3,
        phase=phase, basis_dimension=64
    )


def decaying_records(r_j, count=6):
    return [make_record(float(x), r_j, math.exp(-2.0 * x), rel_anharmonicity=x ** -1.5)
            for x in range(2, 2 + count)]


class TestClassify:
    """Tests for the phase classifier"""

    def test_threshold(self):
        """Test values below the threshold are insulating"""
        assert classify(0.0) is Phase.INSULATING
        assert classify(5e-3) is Phase.INSULATING
        assert classify(1e-2) is Phase.SUPERCONDUCTING
        assert classify(1.0) is Phase.SUPERCONDUCTING

    def test_custom_threshold(self):
        """Test the threshold is a parameter"""
        assert classify(0.05, threshold=0.1) is Phase.INSULATING

    def test_invalid(self):
        """Test negative currents and thresholds are rejected"""
        with pytest.raises(ValidationError):
            classify(-1.0)
        with pytest.raises(ValidationError):
            classify(1.0, threshold=0.0)
        with pytest.raises(ValidationError):
            classify(float('nan'))


class TestSweepSpec:
    """Tests for grid validation"""

    def test_empty_grid(self):
        """Test empty grids are rejected"""
        with pytest.raises(ValidationError):
            SweepSpec(r_imp_grid=(), r_j_grid=(1.0,))

    def test_sorted(self):
        """Test permuted grids describe the same sweep"""
        a = SweepSpec(r_imp_grid=(3.0, 1.0, 2.0), r_j_grid=(0.5, 0.1))
        b = SweepSpec(r_imp_grid=(1.0, 2.0, 3.0), r_j_grid=(0.1, 0.5))
        assert a == b
        assert a.size == 6

    def test_duplicates_and_signs(self):
        """Test duplicates, non-positive impedance and negative E_J/E_C"""
        with pytest.raises(ValidationError):
            SweepSpec(r_imp_grid=(1.0, 1.0), r_j_grid=(0.5,))
        with pytest.raises(ValidationError):
            SweepSpec(r_imp_grid=(0.0, 1.0), r_j_grid=(0.5,))
        with pytest.raises(ValidationError):
            SweepSpec(r_imp_grid=(1.0,), r_j_grid=(-0.5,))

    def test_settings_validated(self):
        """Test sample count, tolerance and threshold bounds"""
        with pytest.raises(ValidationError):
            SweepSpec(r_imp_grid=(1.0,), r_j_grid=(0.5,), theta_samples=4)
        with pytest.raises(ValidationError):
            SweepSpec(r_imp_grid=(1.0,), r_j_grid=(0.5,), tol=1e-14)
        with pytest.raises(ValidationError):
            SweepSpec(r_imp_grid=(1.0,), r_j_grid=(0.5,), threshold=0.0)


class TestFits:
    """Tests for the decay-law regressions"""

    def test_exponential(self):
        """Test an exact exponential is recovered"""
        x = np.arange(1.0, 7.0)
        report = fit_series(x, np.exp(-2.0 * x + 0.5), FitKind.EXP_DECAY)
        assert report.slope == pytest.approx(-2.0, rel=1e-10)
        assert report.intercept == pytest.approx(0.5, rel=1e-10)
        assert report.r_squared == pytest.approx(1.0, abs=1e-12)
        assert report.n_points == 6

    def test_power_law(self):
        """Test an exact power law is recovered"""
        x = np.arange(1.0, 7.0)
        report = fit_series(x, x ** -3.0, FitKind.POWER_LAW)
        assert report.slope == pytest.approx(-3.0, rel=1e-10)
        assert report.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_non_positive_excluded(self):
        """Test zeros and NaN are excluded and counted"""
        x = np.arange(1.0, 8.0)
        y = np.exp(-x)
        y[1] = 0.0
        y[3] = float('nan')
        report = fit_series(x, y, FitKind.EXP_DECAY)
        assert report.excluded == 2
        assert report.n_points == 5
        assert report.slope == pytest.approx(-1.0, rel=1e-10)

    def test_too_few_points(self):
        """Test fewer than four usable points raise"""
        with pytest.raises(InsufficientDataError) as excinfo:
            fit_series([1.0, 2.0, 3.0, 4.0], [1.0, 0.5, 0.0, -1.0], FitKind.EXP_DECAY)
        assert excinfo.value.usable == 2
        assert excinfo.value.excluded == 2

    def test_fit_decay_uses_insulating_rows(self):
        """Test superconducting rows are left out of the fit"""
        records = decaying_records(0.5) + [make_record(10.0, 0.5, 1.0, phase=Phase.SUPERCONDUCTING)]
        report = fit_decay(records, 'm_phi_sq', FitKind.EXP_DECAY)
        assert report.slope == pytest.approx(-2.0, rel=1e-10)
        assert report.n_points == 6

    def test_fit_decay_needs_single_r_j(self):
        """Test mixed r_j rows must be narrowed first"""
        records = decaying_records(0.5) + decaying_records(0.8)
        with pytest.raises(ValidationError):
            fit_decay(records, 'm_phi_sq', FitKind.EXP_DECAY)
        assert fit_decay(records, 'm_phi_sq', FitKind.EXP_DECAY, r_j=0.8).n_points == 6

    def test_fit_decay_negative_anharmonicity(self):
        """Test a negative relative anharmonicity is fitted by magnitude"""
        records = [make_record(float(x), 0.5, math.exp(-x), rel_anharmonicity=-x ** -1.0)
                   for x in range(2, 8)]
        report = fit_decay(records, 'rel_anharmonicity', FitKind.POWER_LAW)
        assert report.slope == pytest.approx(-1.0, rel=1e-10)
        assert report.excluded == 0

    def test_fit_decay_unknown_column(self):
        """Test unknown quantities are rejected"""
        with pytest.raises(ValidationError):
            fit_decay(decaying_records(0.5), 'temperature', FitKind.EXP_DECAY)


class TestTradeoff:
    """Tests for the per-r_j tradeoff curves"""

    def test_curves_and_fits(self):
        """Test one curve per r_j ordered by impedance"""
        records = list(reversed(decaying_records(0.4))) + decaying_records(0.8, count=3)
        curves = tradeoff(records)
        assert [c.r_j for c in curves] == [0.4, 0.8]
        assert list(curves[0].r_imp) == sorted(curves[0].r_imp)
        assert curves[0].m_phi_fit.slope == pytest.approx(-2.0, rel=1e-10)
        assert curves[0].anharmonicity_fit.slope == pytest.approx(-1.5, rel=1e-10)
        assert curves[1].m_phi_fit is None

    def test_failed_rows_skipped(self):
        """Test error rows do not enter the curves"""
        records = decaying_records(0.4) + [SweepRecord.failed(9.0, 0.4, 1.0, "ConvergenceError: cap")]
        assert 9.0 not in tradeoff(records)[0].r_imp


class TestBoundary:
    """Tests for phase-boundary extraction"""

    def _cells(self):
        ins, sup = Phase.INSULATING, Phase.SUPERCONDUCTING
        layout = {
            1e-1: [ins, sup, sup, sup],
            1e-2: [ins, ins, sup, sup],
            1e-3: [ins, ins, ins, ins],
        }
        return [PhasePoint(r_j, el, 0.0, phase)
                for el, phases in layout.items()
                for r_j, phase in zip((0.5, 1.0, 2.0, 3.0), phases)]

    def test_first_superconducting_value(self):
        """Test the switching E_J/E_C of every row"""
        assert boundary(self._cells()) == {1e-3: None, 1e-2: 2.0, 1e-1: 1.0}

    def test_switch_count(self):
        """Test each row switches at most once"""
        assert switch_count(self._cells()) == {1e-3: 0, 1e-2: 1, 1e-1: 1}

    def test_error_cells_ignored(self):
        """Test error cells do not count as switches"""
        cells = self._cells() + [PhasePoint(1.5, 1e-1, float('nan'), Phase.ERROR, "boom")]
        assert switch_count(cells)[1e-1] == 1

    def test_records_by_attribute(self):
        """Test the same helpers work on sweep records"""
        records = [make_record(2.0, 0.5, 1.0, phase=Phase.SUPERCONDUCTING),
                   make_record(4.0, 0.5, 1.0, phase=Phase.INSULATING)]
        assert switch_count(records, row_attr='r_j', axis_attr='r_imp') == {0.5: 1}


class TestConfigHash:
    """Tests for run identity hashing"""

    def test_stable(self):
        """Test key order does not change the hash"""
        assert config_hash({'a': 1, 'b': [1, 2]}) == config_hash({'b': [1, 2], 'a': 1})

    def test_sensitive(self):
        """Test different inputs give different hashes"""
        assert config_hash({'a': 1}) != config_hash({'a': 2})
        assert len(config_hash({})) == 64


class TestSweepEngine:
    """Tests for grid evaluation"""

    def test_invalid_workers(self):
        """Test zero workers is rejected"""
        with pytest.raises(ValidationError):
            SweepEngine(workers=0)

    def test_harmonic_point(self):
        """Test a junction-free point is insulating with no dephasing"""
        spec = SweepSpec(r_imp_grid=(2.0,), r_j_grid=(0.0,), theta_samples=8)
        [record] = SweepEngine(workers=1, progress=False).run(spec)
        assert record.ok
        assert record.phase is Phase.INSULATING
        assert record.m_phi_sq <= 1e-12
        assert record.rel_anharmonicity == pytest.approx(0.0, abs=1e-9)
        assert record.sigma0_sq == pytest.approx(1.0, rel=1e-8)
        assert record.sigma0_sq_predicted == pytest.approx(1.0, rel=1e-6)
        assert math.isnan(record.e_c_star_tb)

    def test_strong_junction_is_superconducting(self):
        """Test E_J/E_C = 20, E_L/E_C = 1e-2 carries a current above the default threshold"""
        spec = SweepSpec(r_imp_grid=(10.0,), r_j_grid=(20.0,), theta_samples=8)
        [record] = SweepEngine(workers=1, progress=False).run(spec)
        assert record.ok
        assert record.i_p_max > 1.0
        assert record.phase is Phase.SUPERCONDUCTING
        assert classify(record.i_p_max) is Phase.SUPERCONDUCTING

    def test_row_order(self):
        """Test rows run r_j outer and r_imp inner"""
        spec = SweepSpec(r_imp_grid=(2.0, 1.5), r_j_grid=(0.3, 0.0), theta_samples=8)
        records = SweepEngine(workers=1, progress=False).run(spec)
        assert [(r.r_j, r.r_imp) for r in records] == [(0.0, 1.5), (0.0, 2.0), (0.3, 1.5), (0.3, 2.0)]

    def test_permutation_invariant(self):
        """Test permuted grids give identical records"""
        engine = SweepEngine(workers=1, progress=False)
        a = engine.run(SweepSpec(r_imp_grid=(3.0, 2.0), r_j_grid=(0.5,), theta_samples=8))
        b = engine.run(SweepSpec(r_imp_grid=(2.0, 3.0), r_j_grid=(0.5,), theta_samples=8))
        assert [r.to_dict() for r in a] == [r.to_dict() for r in b]

    def test_scale_invariant(self):
        """Test dimensionless columns do not depend on the reference E_C"""
        engine = SweepEngine(workers=1, progress=False)
        [unit] = engine.run(SweepSpec(r_imp_grid=(2.0,), r_j_grid=(0.5,), theta_samples=8))
        [scaled] = engine.run(SweepSpec(r_imp_grid=(2.0,), r_j_grid=(0.5,), theta_samples=8, e_c_ref=10.0))
        for column in ('rel_anharmonicity', 'm_phi_sq', 'sigma0_sq', 'i_p_max'):
            assert getattr(scaled, column) == pytest.approx(getattr(unit, column), rel=1e-8)
        assert scaled.delta_10 == pytest.approx(10 * unit.delta_10, rel=1e-8)
        assert scaled.basis_dimension == unit.basis_dimension

    def test_failed_point_becomes_error_row(self, monkeypatch):
        """Test one failing point does not stop the sweep"""
        real = sweep_module.observables

        def flaky(p, tol, theta_samples):
            if p.e_l < 0.2:
                raise ConvergenceError("cap reached", 1e-3, 4096)
            return real(p, tol, theta_samples)

        monkeypatch.setattr(sweep_module, 'observables', flaky)
        spec = SweepSpec(r_imp_grid=(1.5, 3.0), r_j_grid=(0.3,), theta_samples=8)
        records = SweepEngine(workers=1, progress=False).run(spec)
        assert records[0].ok
        assert not records[1].ok
        assert records[1].phase is Phase.ERROR
        assert records[1].error.startswith("ConvergenceError")
        assert math.isnan(records[1].m_phi_sq)

    def test_process_pool_matches_serial(self):
        """Test worker processes return the serial results in grid order"""
        spec = SweepSpec(r_imp_grid=(1.5, 2.0), r_j_grid=(0.3,), theta_samples=8)
        serial = SweepEngine(workers=1, progress=False).run(spec)
        pooled = SweepEngine(workers=2, progress=False).run(spec)
        assert [r.r_imp for r in pooled] == [1.5, 2.0]
        for a, b in zip(serial, pooled):
            assert b.m_phi_sq == pytest.approx(a.m_phi_sq, rel=1e-10, abs=1e-14)
            assert b.delta_10 == pytest.approx(a.delta_10, rel=1e-12)

    def test_phase_diagram(self):
        """Test a weak and a strong junction fall on opposite sides"""
        cells = SweepEngine(workers=1, progress=False).phase_diagram([5.0, 1e-4], [0.01], theta_samples=8)
        assert [c.r_j for c in cells] == [1e-4, 5.0]
        assert cells[0].phase is Phase.INSULATING
        assert cells[1].phase is Phase.SUPERCONDUCTING
        assert boundary(cells) == {0.01: 5.0}

    def test_phase_diagram_empty_grid(self):
        """Test empty phase-diagram grids are rejected"""
        with pytest.raises(ValidationError):
            SweepEngine(workers=1, progress=False).phase_diagram([], [0.01])
