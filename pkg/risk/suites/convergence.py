import logging
from typing import Any, Dict, List

from ..asymptotic_risk import asymptotic_risk
from ..finite_risk import EstimatorSpec, exact_risk
from ..loss_model import mae, mse
from ..optimizer import closed_form_optimum
from .base import BaseSuite

logger = logging.getLogger(__name__)

P_TREND = (1e-1, 1e-2, 1e-3, 1e-4)
SHIFTS = (-1, 0, 1)
FINAL_RTOL = 0.01


class ConvergenceSuite(BaseSuite):
    """
    |eta(p) - eta_bar| / eta_bar shrinks along p -> 0 for omega/(n+c) and is
    below 1% at the last grid point, whatever the shift c.

    MSE runs at omega = r - 2 and MAE at its optimum, for every r given.
    """

    name = "convergence"
    description = "finite-p risk of omega/(n+c) tends to eta_bar as p -> 0"
    default_r = (4, 5)

    def check(self, r_values: List[int]) -> List[Dict[str, Any]]:
        rows = []
        for r in r_values:
            cases = []
            if r >= 3:
                cases.append((mse(), float(r - 2)))
            if r >= 2:
                cases.append((mae(), closed_form_optimum('mae', r)))
            for loss, omega in cases:
                limit = asymptotic_risk(loss, r, omega).value
                for c in SHIFTS:
                    if c < 1 - r:
                        continue
                    rows.append(self._trend(loss, r, omega, c, limit))
        return rows

    def _trend(self, loss, r: int, omega: float, c: int, limit: float) -> Dict[str, Any]:
        est = EstimatorSpec(omega, c)
        deviations = [abs(exact_risk(loss, est, r, p).eta - limit) / limit for p in P_TREND]
        decreasing = all(b < a for a, b in zip(deviations[:-1], deviations[1:]))
        final = deviations[-1]
        logger.info(f"[Verify] convergence {loss.name} r={r} c={c}: {', '.join(f'{d:.3e}' for d in deviations)}")
        return {
            "check": f"{loss.name} trend",
            "r": r,
            "c": c,
            "omega": omega,
            "eta_bar": limit,
            "p_grid": list(P_TREND),
            "trend": deviations,
            "value": final,
            "tolerance": FINAL_RTOL,
            "decreasing": decreasing,
            "passed": decreasing and final < FINAL_RTOL,
        }
