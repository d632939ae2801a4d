import math

import numpy as np
from django.test import SimpleTestCase

from risk.exceptions import DomainError
from risk.loss_model import (
    BUILTIN_LOSSES,
    INF,
    builtin,
    callback_loss,
    check_left_flank,
    check_right_flank,
    check_invariants,
    constant,
    generalized_interval,
    interval,
    mae,
    mse,
    piecewise_power,
    sample_grid,
)


class BuiltinLossTestCase(SimpleTestCase):
    """Test suite for the built-in loss constructors."""

    def test_mse_values(self):
        """Test MSE values and envelope exponents."""
        loss = mse()
        self.assertEqual(loss.evaluate(1.0), 0.0)
        self.assertAlmostEqual(loss.evaluate(3.0), 4.0)
        self.assertAlmostEqual(loss.evaluate(0.5), 0.25)
        self.assertEqual((loss.K, loss.K_prime, loss.xi, loss.xi_prime), (0.0, 2.0, 1.0, 1.0))

    def test_builtins_match_direct_formulas(self):
        """Test each piecewise built-in against its formula at 10**4 random points."""
        x = np.exp(np.random.default_rng(20).uniform(math.log(1e-4), math.log(1e4), 10000))
        cases = [
            (mse(), (x - 1.0) ** 2),
            (mae(), np.abs(x - 1.0)),
            (interval(3.0, 2.0), np.where((x >= 0.5) & (x < 3.0), 0.0, 1.0)),
            (generalized_interval(2.0, 0.5, 1.5, 2.5), np.where(x < 0.4, 0.5, np.where(x < 1.5, 0.0, 2.0))),
        ]
        for loss, expected in cases:
            values = loss.evaluate_array(x)
            scale = np.maximum(1.0, np.abs(expected))
            self.assertLess(float(np.max(np.abs(values - expected) / scale)), 1e-12, msg=loss.name)

    def test_interval_is_unit_penalty_generalized_interval(self):
        """Test interval(mu1, mu2) equals generalized_interval(1, 1, mu1, mu2) on a grid."""
        for mu1, mu2 in ((3.0, 3.0), (1.5, 4.0), (10.0, 1.1)):
            unit = generalized_interval(1.0, 1.0, mu1, mu2)
            for x, value in sample_grid(interval(mu1, mu2), 1e-3, 1e3, 500):
                self.assertEqual(unit.evaluate(x), value, msg=f"mu1={mu1} mu2={mu2} x={x}")
            self.assertEqual(unit.breakpoints, interval(mu1, mu2).breakpoints)

    def test_mae_values(self):
        """Test MAE values on both flanks."""
        loss = mae()
        self.assertAlmostEqual(loss.evaluate(0.25), 0.75)
        self.assertAlmostEqual(loss.evaluate(4.0), 3.0)
        self.assertEqual(loss.evaluate(1.0), 0.0)

    def test_generalized_interval_uses_right_limits(self):
        """Test A2 below 1/mu2, zero on [1/mu2, mu1), A1 from mu1 on."""
        loss = generalized_interval(2.0, 0.5, 3.0, 4.0)
        self.assertEqual(loss.evaluate(0.1), 0.5)
        self.assertEqual(loss.evaluate(0.25), 0.0)
        self.assertEqual(loss.evaluate_left(0.25), 0.5)
        self.assertEqual(loss.evaluate(2.9), 0.0)
        self.assertEqual(loss.evaluate(3.0), 2.0)
        self.assertEqual(loss.evaluate_left(3.0), 0.0)
        self.assertEqual(loss.xi, 0.25)
        self.assertEqual(loss.xi_prime, 3.0)

    def test_interval_keeps_its_kind(self):
        """Test the interval loss keeps its kind and parameters."""
        loss = interval(3.0, 3.0)
        self.assertEqual(loss.kind, 'interval')
        self.assertEqual(loss.param_dict, {'mu1': 3.0, 'mu2': 3.0})

    def test_interval_rejects_factors_at_most_one(self):
        """Test that mu1 or mu2 <= 1 is rejected."""
        with self.assertRaises(DomainError):
            interval(1.0, 2.0)
        with self.assertRaises(DomainError):
            generalized_interval(-1.0, 1.0, 2.0, 2.0)

    def test_constant_one(self):
        """Test that constant-one is 1 everywhere."""
        loss = builtin('constant-one')
        for x in (1e-9, 1.0, 1e9):
            self.assertEqual(loss.evaluate(x), 1.0)
        self.assertEqual(loss.limit_at_zero(), 1.0)

    def test_builtin_registry(self):
        """Test every registered name builds and unknown names raise."""
        self.assertIn('mse', BUILTIN_LOSSES)
        self.assertEqual(builtin('interval', mu1=2, mu2=2).kind, 'interval')
        with self.assertRaises(DomainError):
            builtin('huber')
        with self.assertRaises(DomainError):
            builtin('interval', mu1=2)


class PiecewisePowerTestCase(SimpleTestCase):
    """Test suite for user-described piecewise-power losses."""

    def test_envelope_defaults_from_terms(self):
        """Test K and K' are taken from the extreme term powers."""
        loss = piecewise_power([(0.0, 2.0, [(1.0, -0.5)]), (2.0, INF, [(3.0, 1.5), (1.0, 0.0)])])
        self.assertEqual(loss.K, -0.5)
        self.assertEqual(loss.K_prime, 1.5)
        self.assertEqual(loss.xi, 2.0)
        self.assertEqual(loss.limit_at_zero(), INF)
        self.assertEqual(loss.max_power(), 1.5)

    def test_rejects_gaps_and_bad_ends(self):
        """Test segment validation."""
        with self.assertRaises(DomainError):
            piecewise_power([(0.0, 1.0, []), (1.5, INF, [])])
        with self.assertRaises(DomainError):
            piecewise_power([(0.5, INF, [(1.0, 0.0)])])
        with self.assertRaises(DomainError):
            piecewise_power([(0.0, 10.0, [(1.0, 0.0)])])

    def test_rejects_non_positive_x(self):
        """Test that evaluation refuses x <= 0."""
        with self.assertRaises(DomainError):
            mse().evaluate(0.0)
        with self.assertRaises(DomainError):
            mse().evaluate_array([1.0, -1.0])

    def test_evaluate_array_matches_scalar(self):
        """Test vectorised evaluation against the scalar path."""
        loss = generalized_interval(2.0, 0.5, 3.0, 4.0)
        xs = np.array([0.1, 0.25, 1.0, 3.0, 7.0])
        np.testing.assert_array_equal(loss.evaluate_array(xs), [loss.evaluate(x) for x in xs])

    def test_scaled(self):
        """Test that scaling multiplies values and keeps the exponents."""
        loss = mae().scaled(3.0)
        self.assertAlmostEqual(loss.evaluate(2.0), 3.0)
        self.assertEqual(loss.param_dict['scale'], 3.0)
        self.assertNotEqual(loss.fingerprint(), mae().fingerprint())

    def test_fingerprint_is_stable(self):
        """Test equal losses share a fingerprint and different ones do not."""
        self.assertEqual(mse().fingerprint(), mse().fingerprint())
        self.assertNotEqual(interval(2, 3).fingerprint(), interval(3, 2).fingerprint())


class CallbackLossTestCase(SimpleTestCase):
    def test_callback_evaluation(self):
        """Test callback losses evaluate through the callable."""
        loss = callback_loss(lambda x: (math.log(x)) ** 2, K=0.0, K_prime=0.5, xi=1.0, xi_prime=1.0,
                             breakpoints=[1.0], name='log-squared')
        self.assertFalse(loss.is_piecewise_power)
        self.assertAlmostEqual(loss.evaluate(math.e), 1.0)
        self.assertEqual(loss.breakpoints, (1.0,))
        np.testing.assert_allclose(loss.evaluate_array([1.0, math.e]), [0.0, 1.0])


class SampleGridTestCase(SimpleTestCase):
    def test_includes_breakpoints(self):
        """Test the grid lands on the loss breakpoints."""
        loss = generalized_interval(1.0, 1.0, 3.0, 3.0)
        xs = [x for x, _ in sample_grid(loss, 0.01, 100.0, 50)]
        self.assertIn(3.0, xs)
        self.assertTrue(any(abs(x - 1 / 3) < 1e-15 for x in xs))
        self.assertEqual(xs, sorted(xs))

    def test_rejects_bad_range(self):
        """Test that an empty or non-positive grid range is rejected."""
        with self.assertRaises(DomainError):
            sample_grid(mse(), 0.0, 1.0, 10)


class AssumptionCheckTestCase(SimpleTestCase):
    """Test suite for the advisory assumption checks."""

    def test_mse_left_condition_found_below_one(self):
        """Test that the MSE condition fails at xi=1 and holds after halving xi."""
        verdict = check_left_flank(mse(), 3)
        self.assertTrue(verdict.holds)
        self.assertLess(verdict.xi_used, 1.0)
        self.assertGreater(verdict.searched, 0)

    def test_interval_left_condition(self):
        """Test the interval loss meets the left condition at its xi."""
        verdict = check_left_flank(interval(3.0, 3.0), 4)
        self.assertTrue(verdict.holds)
        self.assertGreater(verdict.value, 0)

    def test_left_condition_at_penalty_boundary(self):
        """Test the generalized interval condition fails exactly at A1/A2 = (mu1*mu2)**r."""
        r, mu1, mu2 = 3, 2.0, 1.5
        boundary = (mu1 * mu2) ** r
        self.assertTrue(check_left_flank(generalized_interval(boundary - 1.0, 1.0, mu1, mu2), r).holds)
        for A1 in (boundary, boundary + 1.0):
            with self.assertLogs('risk.loss_model', level='WARNING'):
                verdict = check_left_flank(generalized_interval(A1, 1.0, mu1, mu2), r)
            self.assertFalse(verdict.holds, msg=f"A1={A1}")

    def test_left_condition_value(self):
        """Test (A2 mu2**r - A1 mu1**-r) / r = 2.625 for (1, 1, 2, 2) at r = 3."""
        verdict = check_left_flank(generalized_interval(1.0, 1.0, 2.0, 2.0), 3)
        self.assertTrue(verdict.holds)
        self.assertAlmostEqual(verdict.value, 2.625, places=9)
        self.assertEqual(verdict.xi_used, 0.5)

    def test_sufficient_condition_is_reported(self):
        """Test the power-limit sufficient condition is recorded."""
        verdict = check_left_flank(mae(), 3, power_limit=(1.0, -1.0, 1.0))
        self.assertTrue(verdict.power_limit)

    def test_right_condition_jump(self):
        """Test the jump condition at xi' for the interval loss."""
        right = check_right_flank(interval(3.0, 3.0))
        self.assertTrue(right.holds)
        self.assertIsNone(right.unchecked)

    def test_right_condition_without_jump_is_unchecked(self):
        """Test that a continuous loss leaves the flatness alternative unchecked."""
        right = check_right_flank(mse())
        self.assertFalse(right.holds)
        self.assertIn('flatness', right.unchecked)

    def test_invariants_hold_for_builtins(self):
        """Test the invariant report for the built-in losses."""
        for loss in (mse(), mae(), interval(2.0, 2.0), constant(2.0)):
            report = check_invariants(loss, r=4)
            self.assertTrue(report.ok, msg=f"{loss.name}: {report.to_dict()}")

    def test_invariants_flag_negative_loss(self):
        """Test that a negative loss is flagged with a warning."""
        loss = piecewise_power([(0.0, 1.0, [(-1.0, 0.0)]), (1.0, INF, [(1.0, 0.0)])])
        with self.assertLogs('risk.loss_model', level='WARNING'):
            report = check_invariants(loss)
        self.assertFalse(report.non_negative)

    def test_invariants_flag_growth_beyond_r(self):
        """Test K' < r is reported false for MSE at r = 2."""
        report = check_invariants(mse(), r=2)
        self.assertFalse(report.K_prime_below_r)
