import math
from unittest.mock import patch

from django.test import SimpleTestCase

from risk.exceptions import DivergenceError
from risk.suites import (
    SUITES,
    BaseSuite,
    ConvergenceSuite,
    MseMinimaxSuite,
    info_row,
    relative_error,
    run_suite_by_name,
    run_suites,
)
from risk.suites.guarantees import OPTIMUM_MU, guarantee_losses, optimum_losses
from risk.suites.monte_carlo import MIN_R, random_configs


class SuiteRegistryTestCase(SimpleTestCase):
    """Test suite for the suite registry and dispatcher."""

    def test_all_suites_registered(self):
        """Test every suite is registered."""
        expected = [
            'special-functions', 'closed-forms', 'mse-optimum', 'mae-stationarity', 'generalized-interval',
            'derivative', 'mse-minimax', 'interval-guarantee', 'convergence', 'monte-carlo',
        ]
        self.assertEqual(list(SUITES), expected)
        for name, suite in SUITES.items():
            self.assertIsInstance(suite, BaseSuite)
            self.assertEqual(suite.name, name)
            self.assertTrue(suite.description)

    def test_unknown_suite(self):
        """Test an unknown suite name."""
        response = run_suite_by_name('nonexistent')
        self.assertEqual(response['status'], 'error')
        self.assertFalse(response['passed'])
        self.assertIn('nonexistent', response['error'])

    def test_risk_error_is_reported(self):
        """Test that a RiskError inside a suite becomes an error response with its exit code."""
        with patch.object(MseMinimaxSuite, 'check', side_effect=DivergenceError('diverges')):
            response = run_suite_by_name('mse-minimax')
        self.assertEqual(response['status'], 'error')
        self.assertEqual(response['exit_code'], 2)
        self.assertIn('DivergenceError', response['error'])

    def test_unexpected_exception_is_reported(self):
        """Test an unexpected exception becomes an error response."""
        with patch.object(ConvergenceSuite, 'check', side_effect=RuntimeError('boom')):
            with self.assertLogs('risk.suites', level='ERROR'):
                response = run_suite_by_name('convergence')
        self.assertEqual(response['status'], 'error')
        self.assertEqual(response['error'], 'boom')

    def test_run_suites_expands_all_once(self):
        """Test 'all' runs each suite once."""
        with patch('risk.suites.run_suite_by_name', side_effect=lambda name, r: {'suite': name}) as runner:
            responses = run_suites(['mse-minimax', 'all'])
        self.assertEqual(len(responses), len(SUITES))
        self.assertEqual(responses[0]['suite'], 'mse-minimax')
        self.assertEqual(runner.call_count, len(SUITES))


class BaseSuiteTestCase(SimpleTestCase):
    def test_row_passes_within_tolerance(self):
        """Test row pass/fail at the tolerance."""
        row = BaseSuite._row('x', 1.0 + 1e-12, 1.0, 1e-10)
        self.assertTrue(row['passed'])
        self.assertFalse(BaseSuite._row('x', 1.1, 1.0, 1e-10)['passed'])

    def test_nan_never_passes(self):
        """Test NaN rows fail."""
        self.assertFalse(BaseSuite._row('x', float('nan'), 1.0, 1.0)['passed'])

    def test_relative_error_at_zero(self):
        """Test relative error for a zero expectation."""
        self.assertEqual(relative_error(1e-3, 0.0), 1e-3)

    def test_empty_suite_fails(self):
        """Test an empty suite fails."""
        class Empty(BaseSuite):
            name = 'empty'

            def check(self, r_values):
                return []

        response = Empty().run()
        self.assertFalse(response['passed'])
        self.assertEqual(response['checks'], 0)

    def test_info_rows_pass(self):
        """Test info rows count as passing."""
        self.assertTrue(info_row('note', 3.0)['passed'])


class SuiteRunTestCase(SimpleTestCase):
    """Test suite for small runs of the real suites."""

    def test_special_functions(self):
        """Test the special-functions suite."""
        response = run_suite_by_name('special-functions', [2, 3])
        self.assertTrue(response['passed'], msg=[row for row in response['rows'] if not row['passed']])

    def test_mse_optimum(self):
        """Test the MSE optimum suite."""
        response = run_suite_by_name('mse-optimum', [3, 6])
        self.assertTrue(response['passed'])
        self.assertEqual(response['checks'], 4)

    def test_mae_stationarity(self):
        """Test the MAE stationarity suite."""
        response = run_suite_by_name('mae-stationarity', [2, 4])
        self.assertTrue(response['passed'], msg=response['rows'])

    def test_mse_minimax(self):
        """Test the minimax suite."""
        response = run_suite_by_name('mse-minimax', [3])
        self.assertTrue(response['passed'])
        self.assertEqual(response['checks'], 5)

    def test_mse_minimax_needs_r_three(self):
        """Test the minimax suite refuses r < 3."""
        response = run_suite_by_name('mse-minimax', [2])
        self.assertEqual(response['status'], 'error')
        self.assertEqual(response['exit_code'], 1)

    def test_derivative(self):
        """Test the derivative suite."""
        response = run_suite_by_name('derivative', [3])
        self.assertTrue(response['passed'], msg=[row for row in response['rows'] if not row['passed']])


class SuiteHelpersTestCase(SimpleTestCase):
    def test_guarantee_losses_fit_the_hypotheses(self):
        """Test the zero band of every generated loss covers the required range."""
        r, omega = 4, 4.0
        for loss in guarantee_losses(r, omega):
            self.assertLess(loss.xi, omega / (r + r ** 0.5 + 1))
            self.assertGreater(loss.xi_prime, omega / (r - r ** 0.5))

    def test_random_configs_are_reproducible(self):
        """Test random configs are reproducible."""
        first = random_configs([2, 3, 6], count=12)
        second = random_configs([2, 3, 6], count=12)
        self.assertEqual([(c['r'], c['p'], c['loss'].name) for c in first],
                         [(c['r'], c['p'], c['loss'].name) for c in second])

    def test_random_configs_respect_minimum_r(self):
        """Test random configs respect the minimum r."""
        for config in random_configs([2, 3, 4, 5, 6], count=30):
            self.assertGreaterEqual(config['r'], MIN_R[config['loss'].name])
            config['est'].validate(config['r'])
            self.assertTrue(1e-3 <= config['p'] <= 0.5)

    def test_only_interval_below_three(self):
        """Test that only interval rows run below r = 3."""
        self.assertEqual({c['loss'].name for c in random_configs([2], count=5)}, {'interval'})

    def test_optimum_losses_fit_the_hypotheses(self):
        """Test the zero band of the wide interval loss covers the range required at omega*."""
        loss = optimum_losses()[0]
        for r in range(3, 11):
            omega_star = 12 * r * math.log(OPTIMUM_MU) / 35
            self.assertLessEqual(loss.xi, omega_star / (r + r ** 0.5 + 1))
            self.assertGreaterEqual(loss.xi_prime, omega_star / (r - r ** 0.5))
