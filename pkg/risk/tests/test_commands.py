import io
import json
import math
import os
import tempfile
from unittest.mock import patch

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from risk import io as risk_io
from risk.eta_cache import get_eta_cache
from risk.management.commands.asymptotic import Command as AsymptoticCommand
from risk.suites import SuiteResponse


def run(*args):
    """Run a command and return (stdout, stderr)."""
    out, err = io.StringIO(), io.StringIO()
    call_command(*args, stdout=out, stderr=err)
    return out.getvalue(), err.getvalue()


class CommandTestMixin:
    def assertExit(self, code, *args):
        with self.assertRaises(CommandError) as ctx:
            run(*args)
        self.assertEqual(ctx.exception.returncode, code)
        return ctx.exception

    def assertJSONExit(self, code, *args):
        document = json.loads(str(self.assertExit(code, *args)))
        self.assertEqual(document['exit_code'], code)
        return document


class AsymptoticCommandTestCase(CommandTestMixin, SimpleTestCase):
    """Test suite for the asymptotic command."""

    def setUp(self):
        get_eta_cache().clear()

    def test_mse_value(self):
        """Test --loss mse --r 5 --omega 3 prints eta_bar = 0.25."""
        out, _ = run('asymptotic', '--loss', 'mse', '--r', '5', '--omega', '3')
        document = json.loads(out)
        self.assertLess(abs(document['eta_bar'] - 0.25), 1e-12)
        self.assertEqual(document['method'], 'analytic')
        self.assertEqual(document['manifest']['command'], 'asymptotic')
        self.assertEqual(document['manifest']['params']['r'], 5)

    def test_constant_one(self):
        """Test the risk of constant-one is one."""
        out, _ = run('asymptotic', '--loss', 'constant-one', '--r', '4', '--omega', '7')
        self.assertLess(abs(json.loads(out)['eta_bar'] - 1.0), 1e-12)

    def test_both_methods(self):
        """Test that both methods are printed."""
        out, _ = run('asymptotic', '--loss', 'interval', '--loss-params', '{"mu1": 3, "mu2": 3}',
                     '--r', '3', '--omega', '3', '--method', 'both')
        document = json.loads(out)
        self.assertEqual(document['method'], 'both')
        self.assertLess(document['agreement'], 1e-8)
        self.assertIn('analytic', document)
        self.assertIn('adaptive', document)

    def test_divergence_exit_code(self):
        """Test --loss mse --r 2 exits with 2 and a JSON error."""
        document = self.assertJSONExit(2, 'asymptotic', '--loss', 'mse', '--r', '2', '--omega', '1')
        self.assertEqual(document['error'], 'DivergenceError')

    def test_bad_loss_exit_code(self):
        """Test exit code 2 for an invalid loss."""
        self.assertJSONExit(1, 'asymptotic', '--loss', '/no/such/loss.json', '--r', '3', '--omega', '1')

    def test_bad_omega_exit_code(self):
        """Test the exit code for a non-positive omega."""
        self.assertJSONExit(1, 'asymptotic', '--loss', 'mae', '--r', '3', '--omega', '-2')

    def test_missing_argument(self):
        """Test a missing required argument."""
        self.assertExit(1, 'asymptotic', '--loss', 'mse')

    def test_out_file(self):
        """Test writing to --out."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'eta.json')
            out, _ = run('asymptotic', '--loss', 'mae', '--r', '3', '--omega', '2', '--out', path)
            self.assertEqual(out, '')
            with open(path) as handle:
                document = json.load(handle)
            self.assertIn('manifest', document)
            self.assertEqual(document['manifest']['params']['out'], path)

    def test_command_line_usage_error(self):
        """Test that parse errors from the command line print a JSON document and exit 1."""
        err = io.StringIO()
        command = AsymptoticCommand(stdout=io.StringIO(), stderr=err)
        with self.assertRaises(SystemExit) as ctx:
            command.run_from_argv(['manage.py', 'asymptotic', '--loss', 'mse'])
        self.assertEqual(ctx.exception.code, 1)
        document = json.loads(err.getvalue())
        self.assertEqual(document['error'], 'UsageError')

    def test_command_line_divergence(self):
        """Test that a diverging risk is reported."""
        err = io.StringIO()
        command = AsymptoticCommand(stdout=io.StringIO(), stderr=err)
        with self.assertRaises(SystemExit) as ctx:
            command.run_from_argv(['manage.py', 'asymptotic', '--loss', 'mse', '--r', '2', '--omega', '1'])
        self.assertEqual(ctx.exception.code, 2)
        self.assertEqual(json.loads(err.getvalue())['error'], 'DivergenceError')


class OptimizeCommandTestCase(CommandTestMixin, SimpleTestCase):
    """Test suite for the optimize command."""

    def test_mse(self):
        """Test the MSE optimum."""
        out, _ = run('optimize', '--loss', 'mse', '--r', '7')
        document = json.loads(out)
        self.assertLess(abs(document['omega_star'] - 5.0), 1e-6)
        self.assertLess(abs(document['eta_star'] - 1 / 6), 1e-10)
        self.assertEqual(document['closed_form'], 5.0)

    def test_mae_r_two(self):
        """Test the MAE optimum at r = 2."""
        out, _ = run('optimize', '--loss', 'mae', '--r', '2')
        self.assertLess(abs(json.loads(out)['omega_star'] - math.log(2)), 1e-8)

    def test_no_optimum_exit_code(self):
        """Test A1/A2 >= (mu1 mu2)^r exits with 3."""
        document = self.assertJSONExit(
            3, 'optimize', '--loss', 'generalized_interval',
            '--loss-params', '{"A1": 100, "A2": 1, "mu1": 2, "mu2": 2}', '--r', '2',
        )
        self.assertEqual(document['error'], 'NoBracketError')

    def test_callback_free_custom_loss(self):
        """Test a piecewise-power loss file without a closed form."""
        description = {
            'kind': 'piecewise_power',
            'segments': [
                {'lo': 0, 'hi': 1, 'terms': [{'coef': -2, 'power': 1}, {'coef': 2, 'power': 0}]},
                {'lo': 1, 'hi': 'inf', 'terms': [{'coef': 1, 'power': 1}, {'coef': -1, 'power': 0}]},
            ],
        }
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'loss.json')
            with open(path, 'w') as handle:
                json.dump(description, handle)
            out, _ = run('optimize', '--loss', path, '--r', '4')
        document = json.loads(out)
        self.assertIsNone(document['closed_form'])
        self.assertGreater(document['omega_star'], 0)


class CurveCommandTestCase(CommandTestMixin, SimpleTestCase):
    """Test suite for the risk, sweep and simulate commands."""

    def test_minimax_at_half(self):
        """Test (1)/(N-1) at r=3, p=0.5 has normalized MSE below 1/2."""
        out, err = run('risk', '--loss', 'mse', '--omega', '1', '--c', '-1', '--r', '3', '--p', '0.5')
        rows = risk_io.read_curve_csv(io.StringIO(out))
        self.assertEqual(len(rows), 1)
        self.assertLess(rows[0]['eta'], 0.5)
        self.assertEqual(rows[0]['bound_kind'], 'exact_truncation')
        self.assertEqual(json.loads(err)['command'], 'risk')

    def test_sweep_appends_reference(self):
        """Test that the sweep ends with the asymptotic row."""
        out, _ = run('sweep', '--loss', 'mae', '--omega', '3', '--c', '-1', '--r', '4', '--p-grid', '0.5,0.1,0.01')
        rows = risk_io.read_curve_csv(io.StringIO(out))
        self.assertEqual([row['p'] for row in rows], [0.5, 0.1, 0.01, 0.0])
        self.assertEqual(rows[-1]['bound_kind'], 'asymptotic_quadrature')

    def test_lf_line_endings(self):
        """Test the CSV uses LF line endings."""
        out, _ = run('risk', '--loss', 'mae', '--omega', '3', '--c', '-1', '--r', '4', '--p-grid', '0.5,0.2')
        self.assertNotIn('\r', out)
        self.assertEqual(out.splitlines()[0], ','.join(risk_io.CSV_HEADER))

    def test_simulation_is_deterministic(self):
        """Test equal seeds give equal simulated curves."""
        args = ('simulate', '--loss', 'mae', '--omega', '2', '--c', '0', '--r', '3', '--p-grid', '0.2,0.05',
                '--samples', '20000', '--seed', '42')
        first, _ = run(*args)
        second, _ = run(*args)
        self.assertEqual(first, second)
        rows = risk_io.read_curve_csv(io.StringIO(first))
        self.assertEqual(rows[0]['bound_kind'], 'monte_carlo_stderr')
        self.assertEqual(rows[-1]['p'], 0.0)

    def test_risk_with_simulate_flag(self):
        """Test the simulated risk path."""
        out, err = run('risk', '--loss', 'mae', '--omega', '2', '--r', '3', '--p', '0.1', '--simulate',
                       '--samples', '5000', '--seed', '7')
        rows = risk_io.read_curve_csv(io.StringIO(out))
        self.assertEqual(rows[0]['bound_kind'], 'monte_carlo_stderr')
        self.assertEqual(json.loads(err)['seeds'], [7])

    def test_out_file_with_manifest(self):
        """Test the curve manifest next to --out."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'curves', 'mae.csv')
            out, _ = run('sweep', '--loss', 'mae', '--omega', '3', '--c', '-1', '--r', '4', '--p-grid', '0.5,0.1',
                         '--out', path)
            self.assertEqual(out, '')
            with open(path) as handle:
                self.assertEqual(len(risk_io.read_curve_csv(handle)), 3)
            with open(risk_io.manifest_path(path)) as handle:
                manifest = json.load(handle)
            self.assertEqual(manifest['command'], 'sweep')
            self.assertEqual(manifest['params']['p_grid'], '0.5,0.1')

    def test_repeated_p_is_one_row(self):
        """Test --p-grid 0.5,0.5 writes a single row."""
        out, _ = run('risk', '--loss', 'mae', '--omega', '3', '--c', '-1', '--r', '4', '--p-grid', '0.5,0.5')
        self.assertEqual([row['p'] for row in risk_io.read_curve_csv(io.StringIO(out))], [0.5])

    def test_invalid_shift(self):
        """Test c < 1 - r is rejected before any computation."""
        self.assertJSONExit(1, 'risk', '--loss', 'mse', '--omega', '1', '--c', '-3', '--r', '3', '--p', '0.5')

    def test_invalid_p(self):
        """Test rejection of p outside (0, 1)."""
        self.assertJSONExit(1, 'risk', '--loss', 'mse', '--omega', '1', '--r', '3', '--p', '1.5')

    def test_p_and_grid_are_exclusive(self):
        """Test that --p and --p-grid are mutually exclusive."""
        self.assertExit(1, 'risk', '--loss', 'mse', '--omega', '1', '--r', '3', '--p', '0.5', '--p-grid', '0.1')

    def test_failed_rows_exit_nonzero(self):
        """Test rows without a tail certificate are marked and the command exits 1."""
        description = {'kind': 'piecewise_power', 'segments': [
            {'lo': 0, 'hi': 'inf', 'terms': [{'coef': 1, 'power': -1}]}]}
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'reciprocal.json')
            with open(path, 'w') as handle:
                json.dump(description, handle)
            document = self.assertJSONExit(1, 'risk', '--loss', path, '--omega', '3', '--c', '1', '--r', '3',
                                           '--p-grid', '0.5,0.1')
        self.assertEqual(document['error'], 'RowFailure')
        self.assertEqual(len(document['rows']), 2)


class VerifyCommandTestCase(CommandTestMixin, SimpleTestCase):
    """Test suite for the verify command."""

    def test_special_functions_pass(self):
        """Test the special-functions suite passes."""
        out, _ = run('verify', '--suite', 'special-functions', '--r-range', '2..3')
        self.assertIn('special-functions', out)
        self.assertIn('PASS', out)

    def test_json_report(self):
        """Test the JSON report."""
        out, _ = run('verify', '--suite', 'mse-optimum,closed-forms', '--r-range', '3..4', '--json')
        document = json.loads(out)
        self.assertTrue(document['passed'])
        self.assertEqual([suite['suite'] for suite in document['suites']], ['mse-optimum', 'closed-forms'])
        self.assertIn('manifest', document)

    def test_unknown_suite(self):
        """Test an unknown suite name."""
        document = self.assertJSONExit(1, 'verify', '--suite', 'nonsense')
        self.assertEqual(document['error'], 'UsageError')

    def test_failure_exit_code(self):
        """Test any failing suite exits with 4."""
        failed = SuiteResponse(suite='demo', status='failed', passed=False, checks=1, failures=1, elapsed=0.0,
                               rows=[{'check': 'x', 'passed': False, 'value': 1.0, 'expected': 0.0,
                                      'error': 1.0, 'tolerance': 0.1}])
        with patch('risk.management.commands.verify.run_suites', return_value=[failed]):
            document = self.assertJSONExit(4, 'verify', '--suite', 'all')
        self.assertIn('demo', document['message'])

    def test_trend_rows_are_printed(self):
        """Test convergence trends appear in the table."""
        trend = SuiteResponse(suite='convergence', status='ok', passed=True, checks=1, failures=0, elapsed=0.1,
                              rows=[{'check': 'eta(p) -> eta_bar', 'passed': True, 'r': 4, 'loss': 'mse',
                                     'trend': [0.1, 0.01], 'value': 0.01}])
        with patch('risk.management.commands.verify.run_suites', return_value=[trend]):
            out, _ = run('verify', '--suite', 'convergence')
        self.assertIn('1.00e-01 > 1.00e-02', out)

    def test_table_manifest_on_stderr(self):
        """Test the text report sends its run manifest to stderr."""
        out, err = run('verify', '--suite', 'special-functions', '--r-range', '2')
        self.assertIn('PASS', out)
        manifest = json.loads(err)
        self.assertEqual(manifest['command'], 'verify')
        self.assertEqual(manifest['params']['suite'], 'special-functions')

    def test_table_out_file_with_manifest(self):
        """Test --out writes the table and its manifest side by side."""
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, 'reports', 'verify.txt')
            out, _ = run('verify', '--suite', 'special-functions', '--r-range', '2', '--out', path)
            self.assertEqual(out, '')
            with open(path) as handle:
                self.assertIn('special-functions', handle.read())
            with open(risk_io.manifest_path(path)) as handle:
                self.assertEqual(json.load(handle)['params']['out'], path)

    def test_interval_guarantee_covers_the_optimum(self):
        """Test the interval-guarantee suite reports rows at omega* alongside omega = r."""
        out, _ = run('verify', '--suite', 'interval-guarantee', '--r-range', '3', '--json')
        document = json.loads(out)
        self.assertTrue(document['passed'])
        checks = {row['check'] for row in document['suites'][0]['rows']}
        self.assertIn('eta(p) <= eta_bar', checks)
        self.assertIn('eta(p) <= eta* at omega*', checks)
