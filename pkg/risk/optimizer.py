"""
Minimisation of the asymptotic risk over the estimator scale omega.

The minimiser is located as a sign change of d eta_bar / d omega: the
bracket is grown geometrically from omega = r, refined with Brent's method, and a
coarse log-spaced scan around the bracket catches additional local minima.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import optimize, special

from .asymptotic_risk import asymptotic_risk, asymptotic_risk_derivative, risk_increment, round_omega
from .conf import setting
from .exceptions import DomainError, NoBracketError, RiskError
from .loss_model import LossSpec, check_left_flank, check_right_flank
from .special_functions import Kernel

logger = logging.getLogger(__name__)

# brentq refuses rtol below 4 * machine epsilon
BRENT_MIN_RTOL = 4 * np.finfo(float).eps
MAX_ROOT_ITERATIONS = 200


@dataclass
class OptimizerConfig:
    seed_omega: Optional[float] = None
    factor: float = 2.0
    max_expansions: int = 60
    omega_rtol: float = field(default_factory=lambda: setting('RISK_OPTIMIZER_OMEGA_RTOL', 1e-9))
    residual_rtol: float = field(default_factory=lambda: setting('RISK_OPTIMIZER_RESIDUAL_RTOL', 1e-9))
    scan_points: int = 32
    scan_margin: float = 16.0
    method: str = 'auto'
    check_assumptions: bool = True


@dataclass
class OptimumResult:
    omega_star: float
    eta_star: float
    bracket: Tuple[float, float]
    iterations: int
    stationarity_residual: float
    multiplicity_warning: bool = False
    converged: bool = True
    candidates: List[float] = field(default_factory=list)
    unchecked_hypotheses: List[str] = field(default_factory=list)
    left_flank: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'omega_star': self.omega_star,
            'eta_star': self.eta_star,
            'bracket': list(self.bracket),
            'iterations': self.iterations,
            'stationarity_residual': self.stationarity_residual,
            'multiplicity_warning': self.multiplicity_warning,
            'converged': self.converged,
            'candidates': list(self.candidates),
            'unchecked_hypotheses': list(self.unchecked_hypotheses),
            'left_flank': self.left_flank,
        }


def stationarity_check(loss: LossSpec, r: int, omega: float, method: str = 'auto') -> float:
    """eta_bar|r(omega) - eta_bar|r+1(omega); zero at the optimum."""
    return risk_increment(loss, r, omega, method=method).value


def _expand_bracket(derivative: Callable[[float], float], seed: float,
                    config: OptimizerConfig) -> Tuple[float, float, float, float, int]:
    """
    Grow [lo, hi] geometrically from seed until d(lo) < 0 < d(hi).

    Both ends carry a strictly signed derivative: points where it is exactly
    zero (far tails underflow) move the search on but never become an end.
    """
    d_seed = derivative(seed)
    if d_seed == 0.0:
        return seed, seed, 0.0, 0.0, 0

    step_down = d_seed > 0
    edge = inner = seed
    d_inner = d_seed
    for i in range(1, config.max_expansions + 1):
        edge = edge / config.factor if step_down else edge * config.factor
        d_edge = derivative(edge)
        if (d_edge < 0) if step_down else (d_edge > 0):
            if step_down:
                return edge, inner, d_edge, d_inner, i
            return inner, edge, d_inner, d_edge, i
        if d_edge != 0.0:
            inner, d_inner = edge, d_edge

    direction = 'decreasing' if step_down else 'increasing'
    span = config.factor ** config.max_expansions
    explored = (seed / span, seed) if step_down else (seed, seed * span)
    raise NoBracketError(
        f"derivative never changes sign while {direction} omega over [{explored[0]:.3g}, {explored[1]:.3g}]",
        explored=explored,
    )


def _root(derivative: Callable[[float], float], lo: float, hi: float, rtol: float) -> Tuple[float, int]:
    """Brent's method on the derivative inside a sign-changing bracket."""
    root, info = optimize.brentq(derivative, lo, hi, xtol=rtol * lo, rtol=max(rtol, BRENT_MIN_RTOL),
                                 maxiter=MAX_ROOT_ITERATIONS, full_output=True, disp=False)
    if not info.converged:
        logger.warning(f"[Optimizer] root search on [{lo:.6g}, {hi:.6g}] stopped: {info.flag}")
    return float(root), int(info.iterations)


def _scan_minima(derivative: Callable[[float], float], lo: float, hi: float,
                 config: OptimizerConfig) -> List[Tuple[float, float, float, float]]:
    """Every -/+ sign change of the derivative on a log-spaced grid."""
    grid = np.geomspace(lo, hi, config.scan_points)
    values = [derivative(float(w)) for w in grid]
    changes = []
    for i in range(len(grid) - 1):
        if values[i] < 0 < values[i + 1]:
            changes.append((float(grid[i]), float(grid[i + 1]), values[i], values[i + 1]))
    return changes


def find_optimum(loss: LossSpec, r: int, config: Optional[OptimizerConfig] = None) -> OptimumResult:
    """Omega minimising eta_bar for the given loss and r."""
    config = config or OptimizerConfig()
    r = Kernel(r).r
    if config.factor <= 1:
        raise DomainError(f"bracket expansion factor must exceed 1, got {config.factor}")

    unchecked: List[str] = []
    verdict_dict = None
    if config.check_assumptions:
        try:
            verdict = check_left_flank(loss, r)
            verdict_dict = verdict.to_dict()
            if not verdict.holds:
                logger.warning(f"[Optimizer] {loss.name}, r={r}: left-monotone integral condition not met")
        except RiskError as exc:
            logger.warning(f"[Optimizer] could not check left-monotone condition: {exc}")
        right = check_right_flank(loss)
        if right.unchecked:
            unchecked.append(right.unchecked)

    def derivative(omega: float) -> float:
        return asymptotic_risk_derivative(loss, r, omega, method=config.method)

    seed = float(config.seed_omega or r)
    lo, hi, _, _, expansions = _expand_bracket(derivative, seed, config)
    logger.info(f"[Optimizer] {loss.name} r={r}: bracket [{lo:.6g}, {hi:.6g}] after {expansions} expansions")

    if lo == hi:
        omega_star, iterations = lo, 0
        lo, hi = lo / config.factor, hi * config.factor
    else:
        omega_star, iterations = _root(derivative, lo, hi, config.omega_rtol)
    candidates = [omega_star]

    scan_lo = min(lo, seed) / config.scan_margin
    scan_hi = max(hi, seed) * config.scan_margin
    for c_lo, c_hi, _, _ in _scan_minima(derivative, scan_lo, scan_hi, config):
        if c_lo <= omega_star <= c_hi:
            continue
        root, extra = _root(derivative, c_lo, c_hi, config.omega_rtol)
        iterations += extra
        if all(abs(root - c) > 10 * config.omega_rtol * c for c in candidates):
            candidates.append(root)

    multiplicity = len(candidates) > 1
    if multiplicity:
        risks = [asymptotic_risk(loss, r, c, method=config.method).value for c in candidates]
        best = int(np.argmin(risks))
        logger.warning(
            f"[Optimizer] {loss.name} r={r}: {len(candidates)} local minima at {candidates}, "
            f"keeping omega={candidates[best]:.12g}"
        )
        if best != 0:
            omega_star = candidates[best]
            lo, hi = omega_star * (1 - config.omega_rtol), omega_star * (1 + config.omega_rtol)

    omega_star = round_omega(omega_star)
    eta_star = asymptotic_risk(loss, r, omega_star, method=config.method).value
    residual = derivative(omega_star)
    converged = abs(residual) * omega_star <= config.residual_rtol * max(abs(eta_star), 1.0)
    if not converged:
        logger.warning(f"[Optimizer] stationarity residual {residual:.3e} at omega={omega_star:.12g}")
    logger.info(f"[Optimizer] {loss.name} r={r}: omega*={omega_star:.12g}, eta*={eta_star:.12g}")

    return OptimumResult(
        omega_star=omega_star,
        eta_star=eta_star,
        bracket=(min(lo, omega_star), max(hi, omega_star)),
        iterations=iterations + expansions,
        stationarity_residual=residual,
        multiplicity_warning=multiplicity,
        converged=converged,
        candidates=candidates,
        unchecked_hypotheses=unchecked,
        left_flank=verdict_dict,
    )


def closed_form_optimum(tag: str, r: int, **params) -> float:
    """Known minimisers: r-2 (mse), Gamma(r-1, omega) = (r-2)!/2 (mae), log-ratio form (interval)."""
    r = Kernel(r).r
    if tag == 'mse':
        if r < 3:
            raise DomainError(f"mse optimum needs r >= 3, got {r}")
        return float(r - 2)
    if tag == 'mae':
        if r < 2:
            raise DomainError(f"mae optimum needs r >= 2, got {r}")
        return float(special.gammainccinv(r - 1, 0.5))
    if tag in ('generalized_interval', 'interval'):
        A1 = float(params.get('A1', 1.0))
        A2 = float(params.get('A2', 1.0))
        mu1, mu2 = float(params['mu1']), float(params['mu2'])
        if A2 == 0 or not A1 / A2 < (mu1 * mu2) ** r:
            raise NoBracketError("A1/A2 >= (mu1 mu2)^r: eta_bar increases for every omega")
        if A1 == 0:
            raise NoBracketError("A1 = 0: eta_bar decreases for every omega")
        return (r * math.log(mu1 * mu2) - math.log(A1 / A2)) / (mu2 - 1.0 / mu1)
    raise DomainError(f"no closed-form optimum for loss '{tag}'")
