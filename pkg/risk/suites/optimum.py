import math
from typing import Any, Dict, List

import numpy as np

from ..exceptions import NoBracketError
from ..finite_risk import EstimatorSpec, exact_risk
from ..loss_model import generalized_interval, mae, mse
from ..optimizer import OptimizerConfig, closed_form_optimum, find_optimum
from ..special_functions import log_factorial, upper_inc_gamma
from .base import BaseSuite, info_row

MARGIN_P = (0.5, 0.1, 0.01)
# fixed so the sampled tuples are identical on every run
TUPLE_SEED = 1729
TUPLE_COUNT = 10


class MseOptimumSuite(BaseSuite):
    name = "mse-optimum"
    description = "omega* = r - 2 and eta* = 1/(r-1) for the normalized MSE"
    default_r = tuple(range(3, 13))

    def check(self, r_values: List[int]) -> List[Dict[str, Any]]:
        rows = []
        for r in r_values:
            result = find_optimum(mse(), r)
            rows.append(self._row("omega*", result.omega_star, float(r - 2), 1e-6,
                                  error=abs(result.omega_star - (r - 2)), r=r))
            rows.append(self._row("eta*", result.eta_star, 1.0 / (r - 1), 1e-10,
                                  error=abs(result.eta_star - 1.0 / (r - 1)), r=r))
        return rows


class MaeStationaritySuite(BaseSuite):
    """
    The MAE optimum solves Gamma(r-1, omega) = (r-2)!/2. Margins of
    omega*/(N-1) against eta* at finite p are reported, not asserted.
    """

    name = "mae-stationarity"
    description = "Gamma(r-1, omega*) = (r-2)!/2 for the MAE optimum"
    default_r = tuple(range(2, 11))

    def check(self, r_values: List[int]) -> List[Dict[str, Any]]:
        rows = []
        loss = mae()
        for r in r_values:
            result = find_optimum(loss, r)
            scale = math.exp(log_factorial(r - 2))
            value = upper_inc_gamma(r - 1, result.omega_star)
            rows.append(self._row("Gamma(r-1, omega*)", value, scale / 2, 1e-8,
                                  error=abs(value - scale / 2) / scale, r=r, omega_star=result.omega_star))
            if r == 2:
                rows.append(self._row("omega* = ln 2", result.omega_star, math.log(2.0), 1e-8,
                                      error=abs(result.omega_star - math.log(2.0)), r=r))

            est = EstimatorSpec(result.omega_star, -1, name='mae_optimal')
            margins = [result.eta_star - exact_risk(loss, est, r, p).eta for p in MARGIN_P]
            rows.append(info_row("finite-p margin", min(margins), r=r, p_grid=list(MARGIN_P), margins=margins))
        return rows


def _random_tuples(rng: np.random.Generator, count: int, r_choices: List[int]):
    tuples = []
    while len(tuples) < count:
        A1, A2 = rng.uniform(0.5, 3.0, size=2)
        mu1, mu2 = rng.uniform(1.2, 4.0, size=2)
        r = int(rng.choice(r_choices))
        if A1 / A2 < (mu1 * mu2) ** r:
            tuples.append((r, float(A1), float(A2), float(mu1), float(mu2)))
    return tuples


class GeneralizedIntervalSuite(BaseSuite):
    name = "generalized-interval"
    description = "optimizer against the log-ratio closed form; monotone cases report no optimum"
    default_r = tuple(range(2, 9))

    def check(self, r_values: List[int]) -> List[Dict[str, Any]]:
        rows = []
        rng = np.random.default_rng(TUPLE_SEED)
        tuples = _random_tuples(rng, TUPLE_COUNT, r_values)

        for r, A1, A2, mu1, mu2 in tuples:
            loss = generalized_interval(A1, A2, mu1, mu2)
            expected = closed_form_optimum('generalized_interval', r, A1=A1, A2=A2, mu1=mu1, mu2=mu2)
            result = find_optimum(loss, r, OptimizerConfig(check_assumptions=False))
            rows.append(self._row("omega*", result.omega_star, expected, 1e-8,
                                  r=r, A1=A1, A2=A2, mu1=mu1, mu2=mu2))

            # swap in a penalty ratio at or above (mu1 mu2)^r: eta_bar is then increasing
            heavy = 2.0 * A2 * (mu1 * mu2) ** r
            try:
                find_optimum(generalized_interval(heavy, A2, mu1, mu2), r, OptimizerConfig(check_assumptions=False))
                raised = False
            except NoBracketError:
                raised = True
            rows.append({
                "check": "no optimum when A1/A2 >= (mu1 mu2)^r",
                "value": raised,
                "passed": raised,
                "r": r, "A1": heavy, "A2": A2, "mu1": mu1, "mu2": mu2,
            })
        return rows
