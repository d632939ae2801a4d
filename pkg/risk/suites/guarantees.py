import math
from typing import Any, Dict, List

from ..exceptions import PreconditionError
from ..finite_risk import (
    VerificationReport,
    verify_interval_guarantee,
    verify_minimax_mse,
    verify_optimum_interval_guarantee,
)
from ..loss_model import LossSpec, generalized_interval, interval
from .base import BaseSuite

MINIMAX_P = (0.9, 0.5, 0.1, 0.01, 1e-3)
GUARANTEE_P = (0.5, 0.2, 0.1, 0.05, 0.01, 1e-3)
PENALTIES = ((1.0, 1.0), (2.0, 1.0), (1.0, 3.0), (0.5, 0.5))
OPTIMUM_MU = 6.0


def _report_rows(report: VerificationReport, check: str, **extra: Any) -> List[Dict[str, Any]]:
    if report.skipped:
        return [{"check": check, "status": "skipped", "reason": report.reason, "passed": True, **extra}]
    rows = []
    for row in report.rows:
        row = dict(row, check=check, **extra)
        row.setdefault("status", "ok" if row["passed"] else "failed")
        rows.append(row)
    return rows


class MseMinimaxSuite(BaseSuite):
    """Normalized MSE of (r-2)/(N-1) plus its certificate stays below 1/(r-1) at every p."""

    name = "mse-minimax"
    description = "strict minimax bound of (r-2)/(N-1) for the normalized MSE"
    default_r = (3, 5, 8)

    def check(self, r_values: List[int]) -> List[Dict[str, Any]]:
        usable = [r for r in r_values if r >= 3]
        if not usable:
            raise PreconditionError(f"minimax MSE guarantee needs r >= 3, got {r_values}")
        return _report_rows(verify_minimax_mse(usable, MINIMAX_P), "nmse + bound < 1/(r-1)")


def guarantee_losses(r: int, omega: float) -> List[LossSpec]:
    """Interval losses whose zero band satisfies the constant-interval hypotheses with 10% slack."""
    mu2 = 1.1 * (r + math.sqrt(r) + 1) / omega
    mu1 = 1.1 * omega / (r - math.sqrt(r))
    return [interval(mu1, mu2)] + [generalized_interval(A1, A2, mu1, mu2) for A1, A2 in PENALTIES]


def optimum_losses() -> List[LossSpec]:
    """Wide-band losses whose optimum omega* satisfies the band hypotheses for 3 <= r <= 10."""
    return [interval(OPTIMUM_MU, OPTIMUM_MU)] + [
        generalized_interval(A1, A2, OPTIMUM_MU, OPTIMUM_MU) for A1, A2 in PENALTIES
    ]


class IntervalGuaranteeSuite(BaseSuite):
    """
    eta(p) <= eta_bar for omega/(N+1) at omega = r, and eta(p) <= eta* for
    omega*/(N+1) at the optimum. Losses whose band misses the hypotheses are
    reported as skipped.
    """

    name = "interval-guarantee"
    description = "eta(p) <= eta_bar for omega/(N+1) under interval losses, also at omega*"
    default_r = (3, 4, 5)

    def check(self, r_values: List[int]) -> List[Dict[str, Any]]:
        rows = []
        for r in (r for r in r_values if r >= 3):
            omega = float(r)
            for loss in guarantee_losses(r, omega):
                report = verify_interval_guarantee(loss, r, omega, GUARANTEE_P)
                rows += _report_rows(report, "eta(p) <= eta_bar", loss=loss.name, params=loss.param_dict)
            for loss in optimum_losses():
                report = verify_optimum_interval_guarantee(loss, r, GUARANTEE_P)
                rows += _report_rows(report, "eta(p) <= eta* at omega*", loss=loss.name, params=loss.param_dict)
        if not rows:
            raise PreconditionError(f"interval guarantee needs r >= 3, got {r_values}")
        return rows
