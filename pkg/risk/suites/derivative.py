from typing import Any, Dict, List

from ..asymptotic_risk import asymptotic_risk, asymptotic_risk_derivative, closed_form_derivative, round_omega
from ..loss_model import builtin
from .base import BaseSuite

OMEGA_FACTORS = (0.2, 0.45, 1.7, 2.6, 4.1)
REL_STEP = 1e-5
CASES = (
    ('mse', {}),
    ('mae', {}),
    ('interval', {'mu1': 3.0, 'mu2': 3.0}),
    ('generalized_interval', {'A1': 2.0, 'A2': 0.5, 'mu1': 1.5, 'mu2': 2.5}),
)


class DerivativeSuite(BaseSuite):
    """r (eta_bar|r - eta_bar|r+1) / omega against central differences and closed forms."""

    name = "derivative"
    description = "derivative identity against finite differences"
    default_r = tuple(range(3, 9))

    def check(self, r_values: List[int]) -> List[Dict[str, Any]]:
        rows = []
        for r in r_values:
            for tag, params in CASES:
                if tag == 'mse' and r < 3:
                    continue
                loss = builtin(tag, **params)
                for factor in OMEGA_FACTORS:
                    omega = round_omega(factor * r)
                    derivative = asymptotic_risk_derivative(loss, r, omega)
                    # difference over the rounded abscissae actually integrated
                    up = round_omega(omega * (1 + REL_STEP))
                    down = round_omega(omega * (1 - REL_STEP))
                    fd = (asymptotic_risk(loss, r, up).value - asymptotic_risk(loss, r, down).value) / (up - down)
                    error = abs(fd - derivative)
                    rows.append(self._row(f"{tag} finite difference", derivative, fd,
                                          1e-6 * abs(derivative) + 1e-10, error=error, r=r, omega=omega))
                    closed = closed_form_derivative(tag, r, omega, **params)
                    rows.append(self._row(f"{tag} closed form", derivative, closed,
                                          1e-8 * abs(closed) + 1e-12, error=abs(derivative - closed),
                                          r=r, omega=omega))
        return rows
