import math
import time
from typing import Any, Dict, List, Optional, Sequence


class SuiteResponse(Dict[str, Any]):
    """Simple dict subclass for clarity when returning suite results."""


def relative_error(value: float, expected: float) -> float:
    if expected == 0:
        return abs(value)
    return abs(value - expected) / abs(expected)


class BaseSuite:
    """Base interface for verification suites."""

    name: str = "base"
    description: str = ""
    default_r: Sequence[int] = ()

    def run(self, r_values: Optional[Sequence[int]] = None) -> SuiteResponse:
        started = time.perf_counter()
        rows = self.check(list(r_values) if r_values else list(self.default_r))
        return self._response(rows, time.perf_counter() - started)

    def check(self, r_values: List[int]) -> List[Dict[str, Any]]:
        raise NotImplementedError

    def _response(self, rows: List[Dict[str, Any]], elapsed: float) -> SuiteResponse:
        failing = [row for row in rows if not row.get('passed')]
        return SuiteResponse({
            "suite": self.name,
            "status": "ok" if rows and not failing else "failed",
            "passed": bool(rows) and not failing,
            "checks": len(rows),
            "failures": len(failing),
            "rows": rows,
            "elapsed": round(elapsed, 3),
        })

    @staticmethod
    def _row(check: str, value: float, expected: float, tolerance: float,
             error: Optional[float] = None, **extra: Any) -> Dict[str, Any]:
        """A compared quantity; passes when error (default: relative error) is within tolerance."""
        if error is None:
            error = relative_error(value, expected)
        row = {
            "check": check,
            "value": value,
            "expected": expected,
            "error": error,
            "tolerance": tolerance,
            "passed": bool(math.isfinite(error) and error <= tolerance),
        }
        row.update(extra)
        return row


def info_row(check: str, value: float, **extra: Any) -> Dict[str, Any]:
    """Reported quantity that is not asserted."""
    row = {"check": check, "value": value, "status": "info", "passed": True}
    row.update(extra)
    return row
