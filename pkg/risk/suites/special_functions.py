import math
from typing import Any, Dict, List

import numpy as np

from ..asymptotic_risk import nu_cutoff
from ..quadrature import integrate_panels
from ..special_functions import (
    Kernel,
    complete_gamma,
    incomplete_gamma_finite_sum,
    log_upper_inc_gamma,
    lower_inc_gamma,
    neg_binomial_logpmf,
    neg_binomial_sf,
    phi,
    psi,
    upper_inc_gamma,
)
from .base import BaseSuite

RECURRENCE_ORDERS = (-5.0, -1.5, 0.5, 3.0, 7.25)
GRID_U = (1e-6, 1e-4, 1e-2, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 30.0, 100.0)
COMPLEMENT_ORDERS = (0.5, 1.0, 3.0, 7.25, 12.5)
LIMIT_ORDERS = (0.5, 2.0, 5.0)
PMF_P = (0.5, 0.1, 0.01)
PMF_MAX_R = 8


class SpecialFunctionsSuite(BaseSuite):
    name = "special-functions"
    description = "incomplete gamma identities and limits, kernel and pmf normalisation"
    default_r = tuple(range(1, 13))

    def check(self, r_values: List[int]) -> List[Dict[str, Any]]:
        rows = []
        rows += self._recurrence()
        rows += self._complement()
        rows += self._finite_sum()
        rows += self._limits()
        for r in r_values:
            rows += self._kernel_mass(r)
        for r in (r for r in r_values if r <= PMF_MAX_R):
            for p in PMF_P:
                rows.append(self._pmf_mass(r, p))
        return rows

    def _recurrence(self) -> List[Dict[str, Any]]:
        # Gamma(s-1, u) = (Gamma(s, u) - u^(s-1) e^-u) / (s-1)
        rows = []
        for s in RECURRENCE_ORDERS:
            for u in GRID_U:
                expected = (upper_inc_gamma(s, u) - math.exp((s - 1) * math.log(u) - u)) / (s - 1)
                rows.append(self._row("recurrence", upper_inc_gamma(s - 1, u), expected, 1e-10, s=s, u=u))
        return rows

    def _complement(self) -> List[Dict[str, Any]]:
        rows = []
        for s in COMPLEMENT_ORDERS:
            for u in GRID_U:
                total = lower_inc_gamma(s, u) + upper_inc_gamma(s, u)
                rows.append(self._row("lower+upper", total, complete_gamma(s), 1e-12, s=s, u=u))
        return rows

    def _finite_sum(self) -> List[Dict[str, Any]]:
        rows = []
        for s in range(1, 11):
            for u in GRID_U[2:]:
                rows.append(self._row("finite sum", incomplete_gamma_finite_sum(s, u),
                                      upper_inc_gamma(s, u), 1e-12, s=s, u=u))
        return rows

    def _limits(self) -> List[Dict[str, Any]]:
        rows = []
        for s in LIMIT_ORDERS:
            small = 1e-6
            rows.append(self._row("lower limit at 0", lower_inc_gamma(s, small) / small ** s, 1.0 / s, 1e-4,
                                  s=s, u=small))
            large = 500.0
            ratio = math.exp(log_upper_inc_gamma(s, large) - ((s - 1) * math.log(large) - large))
            rows.append(self._row("upper limit at inf", ratio, 1.0, 1e-2, s=s, u=large))
        return rows

    def _kernel_mass(self, r: int) -> List[Dict[str, Any]]:
        kernel = Kernel(r)
        cut = nu_cutoff(r, 0.0)
        width = 3.0 * math.sqrt(r)
        nu_edges = [0.0, kernel.mode_nu, kernel.mode_nu + width, cut]
        phi_mass = integrate_panels(lambda nu: phi(kernel, nu), nu_edges, to_infinity=True).value

        omega = float(r)
        x_edges = [0.0, omega / cut, kernel.mode_x(omega), omega / max(kernel.mode_nu, 0.5), omega]
        psi_mass = integrate_panels(lambda x: psi(kernel, x, omega), x_edges, to_infinity=True).value
        return [
            self._row("phi mass", phi_mass, 1.0, 1e-10, r=r),
            self._row("psi mass", psi_mass, 1.0, 1e-10, r=r, omega=omega),
        ]

    def _pmf_mass(self, r: int, p: float) -> Dict[str, Any]:
        """Partial sum of f(n) up to a point whose tail is below 1e-12, plus that tail."""
        n_stop = int(math.ceil(2 * r / p))
        while neg_binomial_sf(r, p, n_stop) > 1e-12:
            n_stop *= 2
        n = np.arange(r, n_stop + 1)
        partial = float(np.sum(np.exp(neg_binomial_logpmf(r, p, n))))
        tail = neg_binomial_sf(r, p, n_stop)
        return self._row("pmf mass", partial + tail, 1.0, 1e-9, r=r, p=p, terms=len(n), tail=tail)
