"""
Test suite for the command-line interface
"""

import json
import math
import os
import tempfile

import pytest
from scipy.integrate import trapezoid

from fluxtrade.cli import main, parse_angle, parse_energy
from fluxtrade.exceptions import ValidationError
from fluxtrade.output import read_csv
from fluxtrade.persistence import ResultStore


@pytest.fixture(autouse=True)
def isolated_cwd(tmp_path, monkeypatch):
    """Keep any stray fluxtrade_config.json out of the defaults"""
    monkeypatch.chdir(tmp_path)
    yield tmp_path


def run(capsys, *argv):
    code = main(['--log-level', 'WARNING', *argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def error_payload(stderr):
    lines = [line for line in stderr.splitlines() if line.startswith('{')]
    return json.loads(lines[-1])


def single_row(stdout):
    parsed = read_csv(stdout)
    assert len(parsed['rows']) == 1
    return parsed['rows'][0]


class TestParsers:
    """Tests for angle and energy parsing"""

    @pytest.mark.parametrize('text,expected', [
        ('pi/2', math.pi / 2),
        ('0.9pi', 0.9 * math.pi),
        ('2*pi', 2 * math.pi),
        ('pi', math.pi),
        ('1.25', 1.25),
        (0.5, 0.5),
    ])
    def test_angles(self, text, expected):
        """Test multiples of pi and plain radians"""
        assert parse_angle(text) == pytest.approx(expected, rel=1e-15)

    def test_bad_angle(self):
        """Test garbage angles are rejected"""
        with pytest.raises(ValidationError):
            parse_angle('half a turn')

    def test_energies(self):
        """Test bare numbers are GHz and suffixes are converted"""
        assert parse_energy('0.3', 'e_c') == 0.3
        assert parse_energy('300MHz', 'e_c') == pytest.approx(0.3, rel=1e-15)
        with pytest.raises(ValidationError):
            parse_energy('300mhz', 'e_c')


class TestConvert:
    """Tests for the convert command"""

    def test_impedance_from_inductance(self, capsys):
        """Test L = 1e4 nH with E_C = 300 MHz gives sqrt(E_C/E_L) near 6.06"""
        code, out, _ = run(capsys, 'convert', '--L', '1e4nH', '--ec', '300MHz')
        assert code == 0
        row = single_row(out)
        assert float(row['r_imp']) == pytest.approx(6.06, rel=1e-2)
        assert float(row['e_c']) == pytest.approx(0.3, rel=1e-12)
        assert row['r_j'] == 'nan'

    def test_equal_energies(self, capsys):
        """Test E_C = E_L gives Z0/R_Q = 1/2pi"""
        code, out, _ = run(capsys, 'convert', '--ec', '1', '--el', '1')
        assert code == 0
        assert float(single_row(out)['z_over_rq']) == pytest.approx(1 / (2 * math.pi), rel=1e-11)

    def test_round_trip(self, capsys):
        """Test physical -> energies -> physical"""
        code, out, _ = run(capsys, 'convert', '--C', '25fF', '--L', '300nH', '--Ic', '40nA')
        assert code == 0
        energies = single_row(out)
        code, out, _ = run(capsys, 'convert', '--ec', energies['e_c'], '--el', energies['e_l'],
                           '--ej', energies['e_j'])
        assert code == 0
        back = single_row(out)
        assert float(back['capacitance']) == pytest.approx(25e-15, rel=1e-9)
        assert float(back['inductance']) == pytest.approx(300e-9, rel=1e-9)
        assert float(back['critical_current']) == pytest.approx(40e-9, rel=1e-9)

    def test_over_determined(self, capsys):
        """Test giving both C and E_C is an error naming the field"""
        code, out, err = run(capsys, 'convert', '--C', '1fF', '--ec', '1', '--el', '1')
        assert code == 2
        assert out == ''
        payload = error_payload(err)
        assert payload['error'] == 'ValidationError'
        assert payload['field'] == 'capacitance'

    def test_under_determined(self, capsys):
        """Test a missing inductance is an error"""
        code, _, err = run(capsys, 'convert', '--ec', '1')
        assert code == 2
        assert error_payload(err)['field'] == 'inductance'


class TestSpectrum:
    """Tests for the spectrum command"""

    def test_harmonic_limit(self, capsys):
        """Test E_J = 0 has no anharmonicity"""
        code, out, _ = run(capsys, 'spectrum', '--ej-over-ec', '0', '--el-over-ec', '0.25')
        assert code == 0
        row = single_row(out)
        assert abs(float(row['rel_anharmonicity'])) <= 1e-9
        assert float(row['delta_10']) == pytest.approx(1.0, rel=1e-10)

    def test_physical_and_energy_inputs_agree(self, capsys):
        """Test the same circuit given two ways"""
        code, out, _ = run(capsys, 'convert', '--C', '258.2fF', '--L', '1e4nH', '--Ic', '300pA')
        assert code == 0
        energies = single_row(out)
        code, physical, _ = run(capsys, 'spectrum', '--C', '258.2fF', '--L', '1e4nH', '--Ic', '300pA',
                                '--theta-samples', '8')
        assert code == 0
        code, direct, _ = run(capsys, 'spectrum', '--ec', energies['e_c'], '--el', energies['e_l'],
                              '--ej', energies['e_j'], '--theta-samples', '8')
        assert code == 0
        assert float(single_row(physical)['delta_10']) == pytest.approx(
            float(single_row(direct)['delta_10']), rel=1e-8)

    def test_mixed_modes_rejected(self, capsys):
        """Test physical and ratio flags cannot be combined"""
        code, _, err = run(capsys, 'spectrum', '--ej-over-ec', '1', '--el-over-ec', '0.1', '--L', '1nH')
        assert code == 2
        assert error_payload(err)['error'] == 'ValidationError'

    def test_wavefunction_table(self, capsys):
        """Test the wavefunction table is normalized with the report as summary"""
        code, out, _ = run(capsys, 'spectrum', '--ej-over-ec', '1', '--el-over-ec', '0.05',
                           '--theta', '0', '--wavefunction', '--points', '2001', '--theta-samples', '8')
        assert code == 0
        parsed = read_csv(out)
        assert parsed['columns'] == ['phi', 'psi0', 'potential']
        assert len(parsed['rows']) == 2001
        phi = [float(r['phi']) for r in parsed['rows']]
        psi = [float(r['psi0']) for r in parsed['rows']]
        assert trapezoid([v * v for v in psi], phi) == pytest.approx(1.0, abs=1e-4)
        assert 'rel_anharmonicity=' in out

    def test_json_format(self, capsys):
        """Test JSON output parses"""
        code, out, _ = run(capsys, 'spectrum', '--ej-over-ec', '0', '--el-over-ec', '0.25',
                           '--format', 'json')
        assert code == 0
        document = json.loads(out)
        assert document['command'] == 'spectrum'
        assert document['rows'][0]['basis_dimension'] >= 64


class TestDispersion:
    """Tests for the dispersion command"""

    def test_free_rotor(self, capsys):
        """Test eps0 = n^2 without a junction"""
        code, out, _ = run(capsys, 'dispersion', '--ej-over-ec', '0', '--points', '11')
        assert code == 0
        for row in read_csv(out)['rows']:
            assert float(row['eps0']) == pytest.approx(float(row['n_tilde']) ** 2, abs=1e-12)

    def test_anticrossing(self, capsys):
        """Test the smallest gap sits at the zone edge"""
        code, out, _ = run(capsys, 'dispersion', '--ej-over-ec', '0.5', '--points', '21')
        assert code == 0
        rows = read_csv(out)['rows']
        gaps = [float(r['eps1']) - float(r['eps0']) for r in rows]
        assert min(gaps) > 0
        assert gaps.index(min(gaps)) in (0, len(gaps) - 1)

    def test_summary_agreement(self, capsys):
        """Test the summary E_C* values agree within 30% at E_J = E_C"""
        code, out, _ = run(capsys, 'dispersion', '--ej-over-ec', '1', '--points', '11')
        assert code == 0
        summary = [line for line in out.splitlines() if line.startswith('# e_c_star_numeric=')][0]
        fields = dict(item.split('=') for item in summary[2:].split())
        numeric, tight_binding = float(fields['e_c_star_numeric']), float(fields['e_c_star_tb'])
        assert abs(numeric - tight_binding) / tight_binding < 0.3

    def test_missing_ratio(self, capsys):
        """Test E_J/E_C is required"""
        code, _, _ = run(capsys, 'dispersion', '--points', '11')
        assert code == 2


class TestBudget:
    """Tests for the budget command"""

    def test_calibrated_anchor(self, capsys):
        """Test M_phi^2 = 3.75 after a 400 kHz anchor at 30 gives 50 kHz"""
        code, out, _ = run(capsys, 'budget', '--calibrate', 'gamma=400kHz,mphi2=30',
                           '--m-phi-sq', '3.75', '--delta', '0.2', '--gate-time', '10ns')
        assert code == 0
        row = single_row(out)
        assert float(row['gamma_phi']) == pytest.approx(5e4, rel=1e-9)
        assert float(row['p_dephase']) == pytest.approx(5e-4, rel=1e-9)

    def test_direct_rate(self, capsys):
        """Test a given rate and gate time"""
        code, out, _ = run(capsys, 'budget', '--gamma-phi', '50kHz', '--delta', '1', '--gate-time', '10ns')
        assert code == 0
        row = single_row(out)
        assert float(row['p_dephase']) == pytest.approx(5e-4, rel=1e-9)
        assert float(row['p_leak']) == pytest.approx((1e8 / (2 * math.pi * 1e9)) ** 2, rel=1e-9)
        assert row['out_of_regime'] == 'false'

    def test_optimal_drive_by_default(self, capsys):
        """Test the drive defaults to the optimum"""
        code, out, _ = run(capsys, 'budget', '--gamma-phi', '50kHz', '--delta', '1')
        assert code == 0
        row = single_row(out)
        assert float(row['rabi']) == pytest.approx(float(row['optimal_rabi']), rel=1e-12)

    def test_missing_delta(self, capsys):
        """Test the anharmonicity is required"""
        code, _, err = run(capsys, 'budget', '--gamma-phi', '50kHz')
        assert code == 2
        assert error_payload(err)['field'] == 'delta'

    def test_calibration_against_zero_matrix_element(self, capsys):
        """Test an anchor at M_phi^2 = 0 exits 2 with a JSON error"""
        code, _, err = run(capsys, 'budget', '--m-phi-sq', '3.75', '--calibrate', 'gamma=400kHz,mphi2=0',
                           '--delta', '1', '--rabi', '1e8')
        assert code == 2
        payload = error_payload(err)
        assert payload['error'] == 'DomainError'
        assert 'M_phi^2 = 0' in payload['message']

    def test_sub_ohmic_bath(self, capsys, isolated_cwd):
        """Test an unsupported bath family exits with a validation code"""
        path = isolated_cwd / 'bath.json'
        path.write_text(json.dumps({'bath': {'family': 'sub_ohmic'}}))
        code, _, err = run(capsys, '--config', str(path), 'budget', '--m-phi-sq', '3', '--alpha', '1e-6',
                           '--delta', '1', '--gate-time', '10ns')
        assert code == 2
        assert error_payload(err)['error'] == 'NotImplementedError'


class TestRunFiles:
    """Tests for config and run files"""

    def test_missing_config_file(self, capsys):
        """Test a missing config file is an I/O error"""
        code, _, err = run(capsys, '--config', 'nowhere.json', 'convert', '--ec', '1', '--el', '1')
        assert code == 4
        assert error_payload(err)['error'] == 'FileNotFoundError'

    def test_unknown_parameter(self, capsys, isolated_cwd):
        """Test unknown run-file parameters are rejected"""
        path = isolated_cwd / 'run.json'
        path.write_text(json.dumps({'command': 'convert', 'parameters': {'e_c': 1, 'e_l': 1, 'colour': 'red'}}))
        code, _, err = run(capsys, '--config', str(path), 'convert')
        assert code == 2
        assert error_payload(err)['field'] == 'colour'

    def test_command_mismatch(self, capsys, isolated_cwd):
        """Test a run file for another command is rejected"""
        path = isolated_cwd / 'run.json'
        path.write_text(json.dumps({'command': 'sweep', 'parameters': {}}))
        code, _, _ = run(capsys, '--config', str(path), 'convert', '--ec', '1', '--el', '1')
        assert code == 2

    def test_flags_override_file(self, capsys, isolated_cwd):
        """Test explicit flags win over run-file parameters"""
        path = isolated_cwd / 'run.json'
        path.write_text(json.dumps({'command': 'convert', 'parameters': {'e_c': 1, 'e_l': 1}}))
        code, out, _ = run(capsys, '--config', str(path), 'convert', '--el', '0.25')
        assert code == 0
        assert float(single_row(out)['r_imp']) == pytest.approx(2.0, rel=1e-12)

    def test_empty_grid_in_run_file(self, capsys, isolated_cwd):
        """Test an empty sweep grid is a validation error"""
        path = isolated_cwd / 'run.json'
        path.write_text(json.dumps({'command': 'sweep', 'parameters': {'r_imp': [], 'r_j': [0.5]}}))
        code, _, err = run(capsys, '--config', str(path), 'sweep', '--no-progress')
        assert code == 2
        assert error_payload(err)['field'] == 'r_imp_grid'

    def test_invalid_json(self, capsys, isolated_cwd):
        """Test a malformed config file exits with a validation code"""
        path = isolated_cwd / 'broken.json'
        path.write_text('{"solver": ')
        code, _, _ = run(capsys, '--config', str(path), 'convert', '--ec', '1', '--el', '1')
        assert code == 2


class TestSweepCommands:
    """Tests for sweep, tradeoff and phase-diagram"""

    def _sweep(self, capsys, output, *extra):
        return run(capsys, 'sweep', '--r-imp', '1.5', '2', '--r-j', '0.3', '--theta-samples', '8',
                   '--workers', '1', '--no-progress', '--output', str(output), *extra)

    def test_byte_identical_reruns(self, capsys, isolated_cwd):
        """Test identical configs give identical files"""
        first, second = isolated_cwd / 'a.csv', isolated_cwd / 'b.csv'
        assert self._sweep(capsys, first)[0] == 0
        assert self._sweep(capsys, second)[0] == 0
        assert first.read_bytes() == second.read_bytes()
        parsed = read_csv(first.read_text())
        assert len(parsed['rows']) == 2
        assert parsed['columns'][0] == 'r_imp'

    def test_store_reuse(self, capsys, isolated_cwd):
        """Test a stored sweep is reused by tradeoff"""
        db = isolated_cwd / 'runs.db'
        assert self._sweep(capsys, isolated_cwd / 'a.csv', '--store', str(db))[0] == 0
        code, _, _ = run(capsys, 'tradeoff', '--r-imp', '2', '1.5', '--r-j', '0.3', '--theta-samples', '8',
                         '--workers', '1', '--no-progress', '--store', str(db),
                         '--output', str(isolated_cwd / 't.csv'))
        assert code == 0
        store = ResultStore(str(db))
        try:
            assert len(store.list_runs()) == 1
        finally:
            store.close()
        rows = read_csv((isolated_cwd / 't.csv').read_text())['rows']
        assert [float(r['r_imp']) for r in rows] == [1.5, 2.0]

    def test_logspace_grid(self, capsys, isolated_cwd):
        """Test log-spaced grids"""
        output = isolated_cwd / 'log.csv'
        code, _, _ = run(capsys, 'sweep', '--r-imp-logspace', '1', '2', '2', '--r-j', '0.0',
                         '--theta-samples', '8', '--workers', '1', '--no-progress', '--output', str(output))
        assert code == 0
        rows = read_csv(output.read_text())['rows']
        assert [float(r['r_imp']) for r in rows] == pytest.approx([1.0, 2.0])

    def test_phase_diagram(self, capsys, isolated_cwd):
        """Test the phase-diagram table and boundary summary"""
        output = isolated_cwd / 'phase.csv'
        code, _, _ = run(capsys, 'phase-diagram', '--r-j', '1e-4', '5', '--el-over-ec', '0.01',
                         '--theta-samples', '8', '--workers', '1', '--no-progress', '--output', str(output))
        assert code == 0
        text = output.read_text()
        rows = read_csv(text)['rows']
        assert [r['phase'] for r in rows] == ['insulating', 'superconducting']
        assert 'first_superconducting_r_j=5.000000000000e+00' in text
