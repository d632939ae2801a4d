"""
Panel-wise adaptive quadrature on top of scipy.integrate.quad.

Integrands with jumps or sharp peaks are integrated panel by panel between
caller-supplied edges, so QUADPACK never straddles a discontinuity.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np
from scipy import integrate

from .conf import setting
from .exceptions import QuadratureError

logger = logging.getLogger(__name__)

# A panel with a QUADPACK warning is still accepted when its error estimate is below this
ACCEPT_RTOL = 1e-10


@dataclass
class PanelSum:
    value: float = 0.0
    abs_error: float = 0.0
    subdivisions: int = 0
    panels: int = 0

    def add(self, value: float, abs_error: float, subdivisions: int) -> None:
        self.value += value
        self.abs_error += abs_error
        self.subdivisions += subdivisions
        self.panels += 1


def quad_panel(fn: Callable[[float], float], a: float, b: float,
               epsabs: Optional[float] = None, epsrel: Optional[float] = None,
               limit: Optional[int] = None) -> tuple:
    """Integrate fn over [a, b] (b may be +inf). Returns (value, abs_error, subdivisions)."""
    epsabs = setting('RISK_QUAD_EPSABS', 1e-13) if epsabs is None else epsabs
    epsrel = setting('RISK_QUAD_EPSREL', 1e-11) if epsrel is None else epsrel
    limit = setting('RISK_QUAD_LIMIT', 200) if limit is None else limit

    out = integrate.quad(fn, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1)
    value, abs_error, info = float(out[0]), float(out[1]), out[2]
    subdivisions = int(info.get('last', 0)) if isinstance(info, dict) else 0

    if not math.isfinite(value):
        raise QuadratureError(f"non-finite integral on [{a}, {b}]", abs_error=abs_error, value=value)
    if len(out) > 3:
        if abs_error > ACCEPT_RTOL * max(1.0, abs(value)):
            raise QuadratureError(
                f"quadrature on [{a}, {b}] stopped at error {abs_error:.3e}: {out[3]}",
                abs_error=abs_error,
                value=value,
            )
        logger.debug(f"[Quadrature] accepted panel [{a}, {b}] with warning, err={abs_error:.3e}")
    return value, abs_error, subdivisions


def integrate_panels(fn: Callable[[float], float], edges: Iterable[float],
                     to_infinity: bool = False, **tolerances) -> PanelSum:
    """Sum quad over consecutive edges; optionally add [edges[-1], inf)."""
    points = sorted({float(e) for e in edges})
    total = PanelSum()
    for a, b in zip(points[:-1], points[1:]):
        if b <= a:
            continue
        total.add(*quad_panel(fn, a, b, **tolerances))
    if to_infinity:
        total.add(*quad_panel(fn, points[-1], np.inf, **tolerances))
    logger.debug(f"[Quadrature] {total.panels} panels, value={total.value:.17g}, err={total.abs_error:.3e}")
    return total
