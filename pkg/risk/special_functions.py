"""
Incomplete gamma functions, factorial helpers and the kernels phi/psi.

Everything here is a pure function of its arguments. Orders of the upper
incomplete gamma function may be any real number, since piecewise-power
losses with exponent b produce Gamma(r - b, .) of arbitrary real order.
"""
import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import special

from .exceptions import DomainError, GammaOverflowError

logger = logging.getLogger(__name__)

Number = Union[int, float]

_CF_EPS = 1e-16
_CF_FPMIN = 1e-300
_CF_MAX_ITER = 10000
# phi switches to log space above this r
_DIRECT_FACTORIAL_MAX_R = 20
_LOG_FLOAT_MAX = math.log(np.finfo(float).max)


@dataclass(frozen=True)
class Kernel:
    """Number of successes r of the inverse binomial sampling scheme."""

    r: int

    def __post_init__(self):
        r = self.r
        if isinstance(r, bool) or not float(r).is_integer() or r < 1:
            raise DomainError(f"r must be a positive integer, got {r!r}")
        object.__setattr__(self, 'r', int(r))

    @property
    def log_norm(self) -> float:
        """log((r-1)!)"""
        return float(special.gammaln(self.r))

    @property
    def mode_nu(self) -> float:
        return float(self.r - 1)

    def mode_x(self, omega: float) -> float:
        """Location of the maximum of psi(., omega)."""
        return omega / (self.r + 1)


def _as_kernel(kernel: Union[Kernel, int]) -> Kernel:
    return kernel if isinstance(kernel, Kernel) else Kernel(kernel)


def _require_positive(name: str, value: Number) -> float:
    value = float(value)
    if not value > 0 or math.isnan(value):
        raise DomainError(f"{name} must be positive, got {value!r}")
    return value


def _require_probability(p: Number) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    return p


# Factorials

def log_factorial(k: int) -> float:
    if k < 0:
        raise DomainError(f"factorial of negative integer {k}")
    return float(special.gammaln(k + 1))


def falling_factorial(k: int, i: int) -> int:
    """k (k-1) ... (k-i+1), with the empty product equal to 1."""
    if i < 0:
        raise DomainError(f"falling factorial length must be non-negative, got {i}")
    return math.prod(range(k, k - i, -1))


# Incomplete gamma functions

def _gamma_continued_fraction(s: float, u: float) -> float:
    """log Gamma(s, u) via the modified Lentz continued fraction.

    Valid for every real s when u > 0; converges quickly once u >= 1.
    """
    b = u + 1.0 - s
    c = 1.0 / _CF_FPMIN
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAX_ITER + 1):
        an = -i * (i - s)
        b += 2.0
        d = an * d + b
        if abs(d) < _CF_FPMIN:
            d = _CF_FPMIN
        c = b + an / c
        if abs(c) < _CF_FPMIN:
            c = _CF_FPMIN
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            break
    else:
        logger.warning(f"[Gamma] continued fraction did not converge for s={s}, u={u}")
    return -u + s * math.log(u) + math.log(h)


def _gamma_downward(s: float, u: float) -> float:
    """Gamma(s, u) for s <= 0, u < 1 by downward recurrence from a seed order.

    Non-integer s is seeded at s0 = s - floor(s) in (0, 1); integer s at
    Gamma(0, u) = E1(u), because the recurrence cannot step from 1 to 0.
    """
    if float(s).is_integer():
        order = 0.0
        value = float(special.exp1(u))
    else:
        order = s - math.floor(s)
        value = float(special.gammaincc(order, u) * special.gamma(order))
    steps = int(round(order - s))
    exp_u = math.exp(-u)
    try:
        for _ in range(steps):
            value = (value - u ** (order - 1.0) * exp_u) / (order - 1.0)
            order -= 1.0
    except OverflowError as exc:
        raise GammaOverflowError(f"Gamma({s}, {u}) overflows") from exc
    if not math.isfinite(value):
        raise GammaOverflowError(f"Gamma({s}, {u}) overflows")
    return value


def log_upper_inc_gamma(s: Number, u: Number) -> float:
    """log Gamma(s, u) for s > 0 (any s when u >= 1)."""
    s = float(s)
    u = _require_positive('u', u)
    if u >= 1.0 and u >= s + 1.0:
        return _gamma_continued_fraction(s, u)
    if s <= 0:
        return math.log(_gamma_downward(s, u))
    return float(np.log(special.gammaincc(s, u)) + special.gammaln(s))


def upper_inc_gamma(s: Number, u: Number) -> float:
    """Upper incomplete gamma function Gamma(s, u), not normalized.

    Raises DomainError for u <= 0 and GammaOverflowError when the result
    does not fit in a float (callers fall back to log_upper_inc_gamma).
    Results below the float range, e.g. Gamma(-20, 700), come back as 0.0 or
    a subnormal without raising; log_upper_inc_gamma stays exact there.
    """
    s = float(s)
    u = _require_positive('u', u)
    if math.isinf(u):
        return 0.0
    if u >= 1.0 and u >= s + 1.0:
        log_value = _gamma_continued_fraction(s, u)
    elif s > 0:
        if s < 170.0:
            return float(special.gammaincc(s, u) * special.gamma(s))
        log_value = float(np.log(special.gammaincc(s, u)) + special.gammaln(s))
    else:
        return _gamma_downward(s, u)
    if log_value > _LOG_FLOAT_MAX:
        raise GammaOverflowError(f"Gamma({s}, {u}) overflows")
    return math.exp(log_value)


def lower_inc_gamma(s: Number, u: Number) -> float:
    """Lower incomplete gamma function gamma(s, u) = Gamma(s) - Gamma(s, u)."""
    s = float(s)
    if not s > 0:
        raise DomainError(f"lower incomplete gamma diverges for s={s}")
    u = _require_positive('u', u)
    if math.isinf(u):
        return complete_gamma(s)
    p = float(special.gammainc(s, u))
    if s < 170.0:
        return p * float(special.gamma(s))
    log_value = math.log(p) + float(special.gammaln(s))
    if log_value > _LOG_FLOAT_MAX:
        raise GammaOverflowError(f"gamma({s}, {u}) overflows")
    return math.exp(log_value)


def complete_gamma(s: Number) -> float:
    s = float(s)
    if not s > 0:
        raise DomainError(f"Gamma(s) requested for non-positive s={s}")
    if s >= 171.0:
        raise GammaOverflowError(f"Gamma({s}) overflows")
    return float(special.gamma(s))


def incomplete_gamma_finite_sum(s: int, u: Number) -> float:
    """Gamma(s, u) for integer s >= 1 as sum_{k<s} (s-1)!/k! u^k exp(-u)."""
    if isinstance(s, bool) or int(s) != s or s < 1:
        raise DomainError(f"finite sum needs a positive integer order, got {s!r}")
    u = _require_positive('u', u)
    k = np.arange(int(s), dtype=float)
    logs = special.gammaln(s) - special.gammaln(k + 1.0) + k * math.log(u) - u
    return float(np.sum(np.exp(logs)))


# Kernels

def phi(kernel: Union[Kernel, int], nu: Number) -> float:
    """phi(nu) = nu^(r-1) exp(-nu) / (r-1)!"""
    kernel = _as_kernel(kernel)
    nu = _require_positive('nu', nu)
    r = kernel.r
    if r <= _DIRECT_FACTORIAL_MAX_R:
        try:
            return nu ** (r - 1) * math.exp(-nu) / math.factorial(r - 1)
        except OverflowError:
            pass
    return math.exp((r - 1) * math.log(nu) - nu - kernel.log_norm)


def psi(kernel: Union[Kernel, int], x: Number, omega: Number) -> float:
    """psi(x, omega) = omega^r exp(-omega/x) / (x^(r+1) (r-1)!)"""
    kernel = _as_kernel(kernel)
    x = _require_positive('x', x)
    omega = _require_positive('omega', omega)
    r = kernel.r
    return math.exp(r * math.log(omega) - omega / x - (r + 1) * math.log(x) - kernel.log_norm)


# Negative binomial distribution of the trial count N

def neg_binomial_logpmf(r: int, p: float, n: np.ndarray) -> np.ndarray:
    """Vectorised log f(n) for integer n >= r (no argument checks)."""
    n = np.asarray(n, dtype=float)
    return (special.gammaln(n) - special.gammaln(n - r + 1.0) - special.gammaln(r)
            + r * math.log(p) + (n - r) * math.log1p(-p))


def neg_binomial_pmf(kernel: Union[Kernel, int], p: Number, n: int) -> float:
    """f(n) = Pr[N = n], the probability that the r-th success occurs at trial n."""
    kernel = _as_kernel(kernel)
    p = _require_probability(p)
    if isinstance(n, bool) or int(n) != n or n < kernel.r:
        raise DomainError(f"n must be an integer >= r={kernel.r}, got {n!r}")
    return float(np.exp(neg_binomial_logpmf(kernel.r, p, np.array([int(n)]))[0]))


def neg_binomial_cdf(kernel: Union[Kernel, int], p: Number, n: int) -> float:
    """Pr[N <= n] = I_p(r, n - r + 1)."""
    kernel = _as_kernel(kernel)
    p = _require_probability(p)
    if n < kernel.r:
        return 0.0
    return float(special.betainc(kernel.r, int(n) - kernel.r + 1, p))


def neg_binomial_sf(kernel: Union[Kernel, int], p: Number, n: int) -> float:
    """Pr[N > n] = I_{1-p}(n - r + 1, r), accurate deep in the tail."""
    kernel = _as_kernel(kernel)
    p = _require_probability(p)
    if n < kernel.r:
        return 1.0
    return float(special.betainc(int(n) - kernel.r + 1, kernel.r, 1.0 - p))


def phi_finite_p(kernel: Union[Kernel, int], p: Number, nu: Number) -> float:
    """Phi(p, nu) = (1-p)^(nu/p - r) / (r-1)! * prod_{i<r} (nu - i p).

    p * Phi(p, n p) equals f(n) for integer n >= r, and Phi(p, .) tends to
    phi uniformly on compacts as p -> 0. For nu < (r-1) p the product can be
    non-positive; the value is returned as is.
    """
    kernel = _as_kernel(kernel)
    p = _require_probability(p)
    nu = _require_positive('nu', nu)
    r = kernel.r
    product = math.prod(nu - i * p for i in range(1, r))
    value = math.exp((nu / p - r) * math.log1p(-p) - kernel.log_norm) * product
    if value <= 0.0:
        logger.debug(f"[Kernel] Phi(p={p}, nu={nu}) = {value} is non-positive (nu < (r-1)p)")
    return value
