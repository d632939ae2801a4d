import math
from typing import Any, Dict, List

import numpy as np

from ..asymptotic_risk import asymptotic_risk, closed_form_risk, tail_integral, tail_integral_derivative
from ..loss_model import builtin
from ..quadrature import integrate_panels
from .base import BaseSuite

OMEGA_POINTS = 20
OMEGA_SPAN = (0.05, 20.0)
INTERVAL_CASES = (
    ('interval', {'mu1': 3.0, 'mu2': 3.0}),
    ('generalized_interval', {'A1': 2.0, 'A2': 0.5, 'mu1': 1.5, 'mu2': 2.5}),
)
# (a, b, c, omega) for int_a^inf omega**b exp(-omega/x) / x**(c+1) dx
TAIL_CASES = (
    (1.0, 0.0, 1.0, 1.0),
    (0.5, 1.0, 2.0, 3.0),
    (2.0, 0.0, 0.5, 1.5),
    (1.0, 2.5, 3.5, 7.0),
    (0.2, -1.0, 1.5, 0.4),
)


def tail_quadrature(a: float, b: float, c: float, omega: float) -> tuple:
    """The tail integral and its omega-derivative by panel quadrature."""
    def integrand(x: float) -> float:
        return omega ** b * math.exp(-omega / x) / x ** (c + 1)

    def derivative(x: float) -> float:
        return (b / omega - 1.0 / x) * integrand(x)

    edges = [a, 10 * a, 100 * a]
    return (integrate_panels(integrand, edges, to_infinity=True).value,
            integrate_panels(derivative, edges, to_infinity=True).value)


class ClosedFormsSuite(BaseSuite):
    """Quadrature of eta_bar against the closed forms of the built-in losses."""

    name = "closed-forms"
    description = "analytic and adaptive eta_bar against closed forms (mse, mae, interval), tail integrals"
    default_r = tuple(range(2, 11))

    def check(self, r_values: List[int]) -> List[Dict[str, Any]]:
        rows = []
        for r in r_values:
            omegas = np.geomspace(OMEGA_SPAN[0] * r, OMEGA_SPAN[1] * r, OMEGA_POINTS)
            cases = [('mae', {})] + list(INTERVAL_CASES)
            if r >= 3:
                cases.insert(0, ('mse', {}))
            for tag, params in cases:
                loss = builtin(tag, **params)
                for omega in omegas:
                    omega = float(omega)
                    expected = closed_form_risk(tag, r, omega, **params)
                    for method in ('adaptive', 'analytic'):
                        value = asymptotic_risk(loss, r, omega, method=method).value
                        rows.append(self._row(f"{tag} {method}", value, expected, 1e-8, r=r, omega=omega))
        for a, b, c, omega in TAIL_CASES:
            value, slope = tail_quadrature(a, b, c, omega)
            where = {"a": a, "b": b, "c": c, "omega": omega}
            rows.append(self._row("tail integral", tail_integral(a, b, c, omega), value, 1e-8, **where))
            rows.append(self._row("tail integral derivative", tail_integral_derivative(a, b, c, omega),
                                  slope, 1e-8, **where))
        return rows
