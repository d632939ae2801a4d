"""
Asymptotic risk of inverse binomial sampling estimators.

For an estimator with n * g(n) -> omega the risk tends, as p -> 0, to

    eta_bar(omega) = int_0^inf phi(nu) L(omega / nu) dnu
                   = int_0^inf psi(x, omega) L(x) dx.

Piecewise-power losses are integrated analytically term by term through
incomplete gamma functions; any loss can be integrated adaptively.
The derivative in omega is r * (eta_bar|r - eta_bar|r+1) / omega, where the
difference is assembled without cancellation.
"""
import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, List

import numpy as np
from scipy import special

from .conf import setting
from .eta_cache import get_eta_cache
from .exceptions import DivergenceError, DomainError
from .loss_model import LossSpec
from .quadrature import integrate_panels
from .special_functions import (
    Kernel,
    complete_gamma,
    lower_inc_gamma,
    upper_inc_gamma,
)

logger = logging.getLogger(__name__)

METHODS = ('auto', 'analytic', 'adaptive')
VARIABLES = ('nu', 'x')
TARGET_RTOL = 1e-10
_EPS = np.finfo(float).eps


@dataclass
class QuadratureReport:
    value: float
    abs_error_estimate: float
    subdivisions: int
    method: str
    variable: str = 'nu'

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def round_omega(omega: float) -> float:
    """omega to 12 significant digits; every integral is computed at the rounded value."""
    omega = float(omega)
    if not omega > 0 or not math.isfinite(omega):
        raise DomainError(f"omega must be a positive finite number, got {omega!r}")
    return float(f"{omega:.12g}")


def _check_divergence(loss: LossSpec, r: int) -> None:
    top = loss.max_power()
    if top >= r:
        raise DivergenceError(
            f"asymptotic risk of {loss.name} diverges for r={r}: growth exponent {top:g} >= r"
        )


def _resolve_method(loss: LossSpec, method: str) -> str:
    if method not in METHODS:
        raise DomainError(f"unknown integration method '{method}'")
    if method == 'auto':
        return 'analytic' if loss.is_piecewise_power else 'adaptive'
    if method == 'analytic' and not loss.is_piecewise_power:
        raise DomainError(f"{loss.name} is a callback loss; only adaptive integration applies")
    return method


# Analytic assembly

def _delta_upper(s: float, u_hi: float, u_lo: float) -> float:
    """Gamma(s, u_hi) - Gamma(s, u_lo) for 0 <= u_hi < u_lo <= inf."""
    if u_hi == 0.0:
        if s <= 0:
            raise DivergenceError(f"term with order {s:g} <= 0 reaches x = inf")
        return complete_gamma(s) if math.isinf(u_lo) else lower_inc_gamma(s, u_lo)
    if math.isinf(u_lo):
        return upper_inc_gamma(s, u_hi)
    if s > 0 and u_lo <= s:
        return lower_inc_gamma(s, u_lo) - lower_inc_gamma(s, u_hi)
    return upper_inc_gamma(s, u_hi) - upper_inc_gamma(s, u_lo)


def _power_exp(s: float, u: float) -> float:
    """u**s * exp(-u) with the limits at 0 (s > 0) and inf."""
    if u == 0.0 or math.isinf(u):
        return 0.0
    return math.exp(s * math.log(u) - u)


def _segment_bounds(omega: float, lo: float, hi: float):
    u_hi = 0.0 if math.isinf(hi) else omega / hi
    u_lo = math.inf if lo == 0 else omega / lo
    return u_hi, u_lo


def _analytic_eta(loss: LossSpec, r: int, omega: float) -> QuadratureReport:
    log_norm = float(special.gammaln(r))
    log_omega = math.log(omega)
    total = 0.0
    magnitude = 0.0
    for seg in loss.segments:
        u_hi, u_lo = _segment_bounds(omega, seg.lo, seg.hi)
        for term in seg.terms:
            if term.coef == 0:
                continue
            delta = _delta_upper(r - term.power, u_hi, u_lo)
            part = term.coef * math.exp(term.power * log_omega - log_norm) * delta
            total += part
            magnitude += abs(part)
    return QuadratureReport(total, 8 * _EPS * magnitude, 0, 'analytic')


def _analytic_increment(loss: LossSpec, r: int, omega: float) -> QuadratureReport:
    """eta_bar|r - eta_bar|r+1, per term a omega^b / r! (b dGamma(r-b) - d(u^(r-b) e^-u))."""
    log_norm = float(special.gammaln(r + 1))
    log_omega = math.log(omega)
    total = 0.0
    magnitude = 0.0
    for seg in loss.segments:
        u_hi, u_lo = _segment_bounds(omega, seg.lo, seg.hi)
        for term in seg.terms:
            if term.coef == 0:
                continue
            s = r - term.power
            bracket = -(_power_exp(s, u_hi) - _power_exp(s, u_lo))
            if term.power != 0:
                bracket += term.power * _delta_upper(s, u_hi, u_lo)
            part = term.coef * math.exp(term.power * log_omega - log_norm) * bracket
            total += part
            magnitude += abs(part)
    return QuadratureReport(total, 8 * _EPS * magnitude, 0, 'analytic')


# Adaptive integration

def nu_cutoff(r: int, K: float) -> float:
    """nu beyond which the kernel mass weighted by nu**-K is below the tail cutoff."""
    tail = setting('RISK_TAIL_CUTOFF', 1e-14)
    s = r - K
    if s > 0:
        cut = float(special.gammainccinv(s, tail))
    else:
        cut = 2.0 * r
        while (s - 1) * math.log(cut) - cut > math.log(tail):
            cut *= 2.0
    return max(cut, 2.0 * r + 10.0)


def _nu_edges(loss: LossSpec, r: int, omega: float, cut: float) -> List[float]:
    mode = float(r - 1)
    width = 3.0 * math.sqrt(r)
    edges = {0.0, cut, mode, mode + width, max(mode - width, 0.0)}
    edges.update(omega / b for b in loss.breakpoints if b > 0)
    return sorted(e for e in edges if 0.0 <= e <= cut)


def _adaptive_nu(loss: LossSpec, r: int, omega: float, increment: bool = False) -> QuadratureReport:
    log_norm = float(special.gammaln(r))
    evaluate = loss.evaluate

    if not increment:
        def integrand(nu: float) -> float:
            return math.exp((r - 1) * math.log(nu) - nu - log_norm) * evaluate(omega / nu)
        cut = nu_cutoff(r, loss.K)
    else:
        # phi_r(nu) (1 - nu/r) = phi_r - phi_{r+1}
        def integrand(nu: float) -> float:
            return math.exp((r - 1) * math.log(nu) - nu - log_norm) * (1.0 - nu / r) * evaluate(omega / nu)
        cut = nu_cutoff(r + 1, loss.K)

    panels = integrate_panels(integrand, _nu_edges(loss, r, omega, cut))
    return QuadratureReport(panels.value, panels.abs_error, panels.subdivisions, 'adaptive', 'nu')


def _adaptive_x(loss: LossSpec, r: int, omega: float) -> QuadratureReport:
    kernel = Kernel(r)
    log_norm = kernel.log_norm
    evaluate = loss.evaluate

    def integrand(x: float) -> float:
        return math.exp(r * math.log(omega) - omega / x - (r + 1) * math.log(x) - log_norm) * evaluate(x)

    cut = nu_cutoff(r, loss.K)
    x_lo = omega / cut
    edges = {x_lo, kernel.mode_x(omega)}
    if r > 1:
        edges.add(omega / (r - 1))
    width = 3.0 * math.sqrt(r)
    edges.add(omega / (r - 1 + width))
    if r - 1 - width > 0:
        edges.add(omega / (r - 1 - width))
    edges.update(b for b in loss.breakpoints if b > x_lo)
    panels = integrate_panels(integrand, sorted(e for e in edges if e >= x_lo), to_infinity=True)
    return QuadratureReport(panels.value, panels.abs_error, panels.subdivisions, 'adaptive', 'x')


def _warn_if_loose(report: QuadratureReport, what: str) -> None:
    if report.abs_error_estimate > TARGET_RTOL * max(1.0, abs(report.value)):
        logger.warning(
            f"[Quadrature] {what}: error estimate {report.abs_error_estimate:.3e} above target "
            f"for value {report.value:.17g}"
        )


def asymptotic_risk(loss: LossSpec, r: int, omega: float, method: str = 'auto',
                    variable: str = 'nu', use_cache: bool = True) -> QuadratureReport:
    """eta_bar(omega) for the given loss and number of successes r."""
    kernel = Kernel(r)
    omega = round_omega(omega)
    method = _resolve_method(loss, method)
    if variable not in VARIABLES:
        raise DomainError(f"unknown integration variable '{variable}'")
    _check_divergence(loss, kernel.r)

    cache = get_eta_cache()
    key = cache.make_key('eta', loss.fingerprint(), kernel.r, omega, method, variable)
    if use_cache:
        cached = cache.get(key)
        if cached is not None:
            return cached

    if method == 'analytic':
        report = _analytic_eta(loss, kernel.r, omega)
    elif variable == 'x':
        report = _adaptive_x(loss, kernel.r, omega)
    else:
        report = _adaptive_nu(loss, kernel.r, omega)
    _warn_if_loose(report, f"eta_bar({loss.name}, r={kernel.r}, omega={omega})")
    logger.debug(f"[Quadrature] eta_bar {loss.name} r={kernel.r} omega={omega} -> {report.value:.17g} ({method})")

    if use_cache:
        cache.set(key, report)
    return report


def risk_increment(loss: LossSpec, r: int, omega: float, method: str = 'auto',
                   use_cache: bool = True) -> QuadratureReport:
    """eta_bar|r(omega) - eta_bar|r+1(omega), zero at a stationary point."""
    kernel = Kernel(r)
    omega = round_omega(omega)
    method = _resolve_method(loss, method)
    _check_divergence(loss, kernel.r)

    cache = get_eta_cache()
    key = cache.make_key('increment', loss.fingerprint(), kernel.r, omega, method)
    if use_cache:
        cached = cache.get(key)
        if cached is not None:
            return cached

    if method == 'analytic':
        report = _analytic_increment(loss, kernel.r, omega)
    else:
        report = _adaptive_nu(loss, kernel.r, omega, increment=True)

    if use_cache:
        cache.set(key, report)
    return report


def asymptotic_risk_derivative(loss: LossSpec, r: int, omega: float, method: str = 'auto') -> float:
    """d eta_bar / d omega = r (eta_bar|r - eta_bar|r+1) / omega."""
    omega = round_omega(omega)
    return r * risk_increment(loss, r, omega, method=method).value / omega


# Closed forms

def _require_r(tag: str, r: int, minimum: int) -> None:
    if r < minimum:
        raise DomainError(f"closed form for {tag} needs r >= {minimum} (integral diverges), got r={r}")


def _interval_params(tag: str, params: Dict[str, float]):
    if tag == 'interval':
        return 1.0, 1.0, float(params['mu1']), float(params['mu2'])
    return float(params['A1']), float(params['A2']), float(params['mu1']), float(params['mu2'])


def closed_form_risk(tag: str, r: int, omega: float, **params) -> float:
    """Direct formula for eta_bar of the built-in losses."""
    r = Kernel(r).r
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega}")
    if tag == 'mse':
        _require_r(tag, r, 3)
        return omega ** 2 / ((r - 1) * (r - 2)) - 2 * omega / (r - 1) + 1
    if tag == 'mae':
        _require_r(tag, r, 2)
        q_r = float(special.gammaincc(r, omega))
        q_r1 = float(special.gammaincc(r - 1, omega))
        return 2 * (q_r - omega * q_r1 / (r - 1)) + omega / (r - 1) - 1
    if tag in ('generalized_interval', 'interval'):
        A1, A2, mu1, mu2 = _interval_params(tag, params)
        return A1 * float(special.gammainc(r, omega / mu1)) + A2 * float(special.gammaincc(r, omega * mu2))
    if tag == 'constant':
        return float(params.get('c', 1.0))
    raise DomainError(f"no closed form for loss '{tag}'")


def closed_form_derivative(tag: str, r: int, omega: float, **params) -> float:
    r = Kernel(r).r
    if tag == 'mse':
        _require_r(tag, r, 3)
        return 2 * omega / ((r - 1) * (r - 2)) - 2 / (r - 1)
    if tag == 'mae':
        _require_r(tag, r, 2)
        return (1.0 - 2.0 * float(special.gammaincc(r - 1, omega))) / (r - 1)
    if tag in ('generalized_interval', 'interval'):
        A1, A2, mu1, mu2 = _interval_params(tag, params)
        log_lead = (r - 1) * math.log(omega) - float(special.gammaln(r))
        left = A1 * math.exp(log_lead - r * math.log(mu1) - omega / mu1)
        right = A2 * math.exp(log_lead + r * math.log(mu2) - omega * mu2)
        return left - right
    if tag == 'constant':
        return 0.0
    raise DomainError(f"no closed-form derivative for loss '{tag}'")


def mae_unbiased_asymptote(r: int) -> float:
    """eta_bar of the MAE at omega = r - 1, the limit for (r-1)/(N-1)."""
    _require_r('mae', r, 2)
    return 2.0 * math.exp((r - 2) * math.log(r - 1) - (r - 1) - float(special.gammaln(r - 1)))


def tail_integral(a: float, b: float, c: float, omega: float) -> float:
    """int_a^inf omega**b exp(-omega/x) / x**(c+1) dx = omega**(b-c) gamma(c, omega/a)."""
    if not (a > 0 and c > 0 and omega > 0):
        raise DomainError("tail integral needs a, c, omega > 0")
    return omega ** (b - c) * lower_inc_gamma(c, omega / a)


def tail_integral_derivative(a: float, b: float, c: float, omega: float) -> float:
    """d/domega of tail_integral(a, b, c, omega)."""
    if not (a > 0 and c > 0 and omega > 0):
        raise DomainError("tail integral needs a, c, omega > 0")
    return (omega ** (b - 1) * math.exp(-omega / a) / a ** c
            + (b - c) * omega ** (b - c - 1) * lower_inc_gamma(c, omega / a))
