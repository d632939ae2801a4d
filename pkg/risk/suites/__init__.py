import logging
from typing import Dict, Iterable, List, Optional, Sequence

from ..exceptions import RiskError
from .base import BaseSuite, SuiteResponse, info_row, relative_error
from .closed_forms import ClosedFormsSuite
from .convergence import ConvergenceSuite
from .derivative import DerivativeSuite
from .guarantees import IntervalGuaranteeSuite, MseMinimaxSuite
from .monte_carlo import MonteCarloSuite
from .optimum import GeneralizedIntervalSuite, MaeStationaritySuite, MseOptimumSuite
from .special_functions import SpecialFunctionsSuite

logger = logging.getLogger(__name__)


# Registry of all verification suites, in the order `all` runs them
SUITES: Dict[str, BaseSuite] = {
    SpecialFunctionsSuite.name: SpecialFunctionsSuite(),
    ClosedFormsSuite.name: ClosedFormsSuite(),
    MseOptimumSuite.name: MseOptimumSuite(),
    MaeStationaritySuite.name: MaeStationaritySuite(),
    GeneralizedIntervalSuite.name: GeneralizedIntervalSuite(),
    DerivativeSuite.name: DerivativeSuite(),
    MseMinimaxSuite.name: MseMinimaxSuite(),
    IntervalGuaranteeSuite.name: IntervalGuaranteeSuite(),
    ConvergenceSuite.name: ConvergenceSuite(),
    MonteCarloSuite.name: MonteCarloSuite(),
}


def run_suite_by_name(name: str, r_values: Optional[Sequence[int]] = None) -> SuiteResponse:
    """Run one registered suite; failures to run are reported, not raised.

    Args:
        name: Registered suite name (e.g. 'mse-minimax')
        r_values: Values of r overriding the suite default

    Returns:
        SuiteResponse with per-check rows, or status 'error'
    """
    suite = SUITES.get(name)
    if not suite:
        return SuiteResponse({
            "suite": name,
            "status": "error",
            "passed": False,
            "error": f"No suite registered under '{name}'",
            "rows": [],
        })
    try:
        return suite.run(r_values)
    except RiskError as exc:
        logger.warning(f"[Verify] suite {name} aborted: {exc}")
        return SuiteResponse({
            "suite": name,
            "status": "error",
            "passed": False,
            "error": f"{exc.__class__.__name__}: {exc}",
            "exit_code": exc.exit_code,
            "rows": [],
        })
    except Exception as exc:
        logger.exception(f"[Verify] suite {name} crashed")
        return SuiteResponse({
            "suite": name,
            "status": "error",
            "passed": False,
            "error": str(exc),
            "rows": [],
        })


def run_suites(names: Iterable[str], r_values: Optional[Sequence[int]] = None) -> List[SuiteResponse]:
    selected: List[str] = []
    for name in names:
        selected.extend(SUITES if name == 'all' else [name])
    return [run_suite_by_name(name, r_values) for name in dict.fromkeys(selected)]


__all__ = [
    "BaseSuite",
    "SuiteResponse",
    "ClosedFormsSuite",
    "ConvergenceSuite",
    "DerivativeSuite",
    "GeneralizedIntervalSuite",
    "IntervalGuaranteeSuite",
    "MaeStationaritySuite",
    "MonteCarloSuite",
    "MseMinimaxSuite",
    "MseOptimumSuite",
    "SpecialFunctionsSuite",
    "SUITES",
    "info_row",
    "relative_error",
    "run_suite_by_name",
    "run_suites",
]
