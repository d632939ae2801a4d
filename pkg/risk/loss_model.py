"""
Loss functions L(x) of the normalized estimate x = p_hat / p.

A LossSpec is either piecewise-power (a sum of c * x**b terms on each
segment of a partition of (0, inf)) or a callback. Piecewise-power losses
can be integrated analytically against the kernel; callbacks go through
adaptive quadrature only.

Breakpoint convention: ``evaluate`` returns the right-hand limit at a
breakpoint, ``evaluate_left`` the left-hand limit.
"""
import bisect
import hashlib
import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DomainError, QuadratureError
from .quadrature import integrate_panels

logger = logging.getLogger(__name__)

INF = math.inf

# Grid used by the advisory invariant checks
INVARIANT_GRID = (1e-6, 1e6, 10000)
# How many times check_left_flank halves xi before giving up
MAX_XI_HALVINGS = 40


@dataclass(frozen=True)
class PowerTerm:
    coef: float
    power: float

    def __call__(self, x: float) -> float:
        if self.power == 0:
            return self.coef
        return self.coef * x ** self.power


@dataclass(frozen=True)
class Segment:
    """Terms active on lo <= x < hi."""

    lo: float
    hi: float
    terms: Tuple[PowerTerm, ...] = ()

    def value(self, x: float) -> float:
        return float(sum(term(x) for term in self.terms))

    def value_array(self, x: np.ndarray) -> np.ndarray:
        out = np.zeros_like(x, dtype=float)
        for term in self.terms:
            out += term.coef * (np.ones_like(x) if term.power == 0 else x ** term.power)
        return out

    def active_powers(self) -> List[float]:
        return [t.power for t in self.terms if t.coef != 0]


@dataclass(frozen=True)
class LossSpec:
    """
    A loss function with its envelope metadata.

    K and K_prime are the exponents of the envelopes O(x**K) as x -> 0 and
    O(x**K_prime) as x -> inf. L is non-increasing on (0, xi) and
    non-decreasing on (xi_prime, inf).
    """

    name: str
    segments: Tuple[Segment, ...]
    K: float
    K_prime: float
    xi: float
    xi_prime: float
    kind: str = 'piecewise_power'
    params: Tuple[Tuple[str, Any], ...] = ()
    callback: Optional[Callable[[float], float]] = field(default=None, compare=False)
    callback_breakpoints: Tuple[float, ...] = ()

    def __post_init__(self):
        if self.callback is None:
            self._validate_segments()
        if not (self.xi > 0 and self.xi_prime > 0):
            raise DomainError(f"{self.name}: xi and xi_prime must be positive")
        object.__setattr__(self, '_los', tuple(s.lo for s in self.segments))
        object.__setattr__(self, '_his', tuple(s.hi for s in self.segments))

    def _validate_segments(self) -> None:
        segments = self.segments
        if not segments:
            raise DomainError(f"{self.name}: a piecewise-power loss needs at least one segment")
        if segments[0].lo != 0:
            raise DomainError(f"{self.name}: first segment must start at 0, got {segments[0].lo}")
        if segments[-1].hi != INF:
            raise DomainError(f"{self.name}: last segment must end at inf, got {segments[-1].hi}")
        for left, right in zip(segments[:-1], segments[1:]):
            if left.hi != right.lo:
                raise DomainError(f"{self.name}: segments not contiguous at {left.hi} / {right.lo}")
        for seg in segments:
            if not seg.lo < seg.hi:
                raise DomainError(f"{self.name}: empty segment [{seg.lo}, {seg.hi})")

    @property
    def is_piecewise_power(self) -> bool:
        return self.callback is None

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        if self.callback is not None:
            return tuple(sorted(self.callback_breakpoints))
        return tuple(seg.hi for seg in self.segments[:-1])

    @property
    def param_dict(self) -> Dict[str, Any]:
        return dict(self.params)

    def segment_at(self, x: float) -> Segment:
        return self.segments[bisect.bisect_right(self._los, x) - 1]

    def evaluate(self, x: float) -> float:
        x = float(x)
        if not x > 0:
            raise DomainError(f"loss evaluated at non-positive x={x}")
        if self.callback is not None:
            return float(self.callback(x))
        return self.segment_at(x).value(x)

    def evaluate_left(self, x: float) -> float:
        """Left-hand limit L(x-)."""
        x = float(x)
        if not x > 0:
            raise DomainError(f"loss evaluated at non-positive x={x}")
        if self.callback is not None:
            return float(self.callback(float(np.nextafter(x, 0.0))))
        return self.segments[bisect.bisect_left(self._his, x)].value(x)

    def evaluate_array(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("loss evaluated at non-positive x")
        if self.callback is not None:
            return np.fromiter((self.callback(v) for v in x.ravel()), dtype=float, count=x.size).reshape(x.shape)
        index = np.searchsorted(self._los, x, side='right') - 1
        out = np.empty_like(x)
        for i, seg in enumerate(self.segments):
            mask = index == i
            if np.any(mask):
                out[mask] = seg.value_array(x[mask])
        return out

    def limit_at_zero(self) -> float:
        """L(0+); +inf when a negative power is active near zero."""
        if self.callback is not None:
            if self.K < 0:
                return INF
            return float(self.callback(float(np.finfo(float).tiny)))
        terms = [t for t in self.segments[0].terms if t.coef != 0]
        if not terms:
            return 0.0
        lowest = min(t.power for t in terms)
        if lowest < 0:
            lead = sum(t.coef for t in terms if t.power == lowest)
            return INF if lead > 0 else -INF
        if lowest > 0:
            return 0.0
        return float(sum(t.coef for t in terms if t.power == 0))

    def envelope_exponents(self) -> Tuple[float, float]:
        """(K, K') implied by the active terms of the first and last segments."""
        if self.callback is not None:
            return self.K, self.K_prime
        return _lowest_power(self.segments[0]), _highest_power(self.segments[-1])

    def max_power(self) -> float:
        """Largest exponent active on an unbounded-above segment."""
        return _highest_power(self.segments[-1]) if self.callback is None else self.K_prime

    def scaled(self, c: float) -> 'LossSpec':
        if c < 0:
            raise DomainError(f"loss scale must be non-negative, got {c}")
        callback = None
        if self.callback is not None:
            base = self.callback
            callback = lambda x: c * base(x)  # noqa: E731
        segments = tuple(
            Segment(s.lo, s.hi, tuple(PowerTerm(c * t.coef, t.power) for t in s.terms))
            for s in self.segments
        )
        return LossSpec(
            name=f"{c:g}*{self.name}",
            segments=segments,
            K=self.K,
            K_prime=self.K_prime,
            xi=self.xi,
            xi_prime=self.xi_prime,
            kind=self.kind,
            params=self.params + (('scale', c),),
            callback=callback,
            callback_breakpoints=self.callback_breakpoints,
        )

    def fingerprint(self) -> str:
        """Stable identity used as cache key component."""
        parts = [self.kind, repr(self.params), repr((self.K, self.K_prime, self.xi, self.xi_prime))]
        for seg in self.segments:
            parts.append(repr((seg.lo, seg.hi, tuple((t.coef, t.power) for t in seg.terms))))
        if self.callback is not None:
            cb = self.callback
            parts.append(f"{getattr(cb, '__module__', '')}.{getattr(cb, '__qualname__', '')}:{id(cb)}")
            parts.append(repr(self.callback_breakpoints))
        return hashlib.sha1('|'.join(parts).encode('utf-8')).hexdigest()


def _lowest_power(seg: Segment) -> float:
    powers = seg.active_powers()
    return min(powers) if powers else 0.0


def _highest_power(seg: Segment) -> float:
    powers = seg.active_powers()
    return max(powers) if powers else 0.0


def evaluate(loss: LossSpec, x: float) -> float:
    return loss.evaluate(x)


# Constructors

def piecewise_power(segments: Iterable[Tuple[float, float, Iterable[Tuple[float, float]]]],
                    K: Optional[float] = None, K_prime: Optional[float] = None,
                    xi: Optional[float] = None, xi_prime: Optional[float] = None,
                    name: str = 'piecewise_power', kind: str = 'piecewise_power',
                    params: Tuple[Tuple[str, Any], ...] = ()) -> LossSpec:
    """
    Build a loss from (lo, hi, [(coef, power), ...]) triples.

    Missing K/K_prime are derived from the first/last segment terms; missing
    xi/xi_prime default to the innermost breakpoints (1.0 without breakpoints).
    """
    segs = tuple(
        Segment(float(lo), float(hi), tuple(PowerTerm(float(c), float(b)) for c, b in terms))
        for lo, hi, terms in segments
    )
    breakpoints = [s.hi for s in segs[:-1]]
    return LossSpec(
        name=name,
        segments=segs,
        K=_lowest_power(segs[0]) if K is None and segs else K,
        K_prime=_highest_power(segs[-1]) if K_prime is None and segs else K_prime,
        xi=float(xi) if xi is not None else (breakpoints[0] if breakpoints else 1.0),
        xi_prime=float(xi_prime) if xi_prime is not None else (breakpoints[-1] if breakpoints else 1.0),
        kind=kind,
        params=params,
    )


def mse() -> LossSpec:
    """L(x) = (x - 1)**2"""
    return piecewise_power([(0.0, INF, [(1.0, 2.0), (-2.0, 1.0), (1.0, 0.0)])],
                           K=0.0, K_prime=2.0, xi=1.0, xi_prime=1.0, name='mse', kind='mse')


def mae() -> LossSpec:
    """L(x) = |x - 1|"""
    return piecewise_power(
        [(0.0, 1.0, [(-1.0, 1.0), (1.0, 0.0)]), (1.0, INF, [(1.0, 1.0), (-1.0, 0.0)])],
        K=0.0, K_prime=1.0, xi=1.0, xi_prime=1.0, name='mae', kind='mae',
    )


def generalized_interval(A1: float, A2: float, mu1: float, mu2: float) -> LossSpec:
    """A2 below 1/mu2, 0 on [1/mu2, mu1), A1 from mu1 on."""
    if not (mu1 > 1 and mu2 > 1):
        raise DomainError(f"interval factors must exceed 1, got mu1={mu1}, mu2={mu2}")
    if A1 < 0 or A2 < 0:
        raise DomainError(f"interval penalties must be non-negative, got A1={A1}, A2={A2}")
    lower, upper = 1.0 / mu2, float(mu1)
    return piecewise_power(
        [(0.0, lower, [(A2, 0.0)]), (lower, upper, []), (upper, INF, [(A1, 0.0)])],
        K=0.0, K_prime=0.0, xi=lower, xi_prime=upper,
        name='generalized_interval', kind='generalized_interval',
        params=(('A1', float(A1)), ('A2', float(A2)), ('mu1', float(mu1)), ('mu2', float(mu2))),
    )


def interval(mu1: float, mu2: float) -> LossSpec:
    """One minus the confidence of the interval [p_hat/mu1, p_hat*mu2]."""
    loss = generalized_interval(1.0, 1.0, mu1, mu2)
    return LossSpec(
        name='interval', segments=loss.segments, K=loss.K, K_prime=loss.K_prime,
        xi=loss.xi, xi_prime=loss.xi_prime, kind='interval',
        params=(('mu1', float(mu1)), ('mu2', float(mu2))),
    )


def constant(c: float = 1.0) -> LossSpec:
    if c < 0:
        raise DomainError(f"constant loss must be non-negative, got {c}")
    return piecewise_power([(0.0, INF, [(float(c), 0.0)])], K=0.0, K_prime=0.0,
                           name='constant', kind='piecewise_power', params=(('c', float(c)),))


def callback_loss(fn: Callable[[float], float], K: float, K_prime: float, xi: float, xi_prime: float,
                  breakpoints: Iterable[float] = (), name: str = 'callback') -> LossSpec:
    return LossSpec(
        name=name, segments=(), K=float(K), K_prime=float(K_prime),
        xi=float(xi), xi_prime=float(xi_prime), kind='callback',
        callback=fn, callback_breakpoints=tuple(sorted(float(b) for b in breakpoints)),
    )


BUILTIN_LOSSES: Dict[str, Callable[..., LossSpec]] = {
    'mse': mse,
    'mae': mae,
    'interval': interval,
    'generalized_interval': generalized_interval,
    'constant': constant,
    'constant-one': lambda: constant(1.0),
}


def builtin(name: str, **params) -> LossSpec:
    try:
        factory = BUILTIN_LOSSES[name]
    except KeyError:
        raise DomainError(f"unknown loss '{name}', expected one of {sorted(BUILTIN_LOSSES)}")
    try:
        return factory(**params)
    except TypeError as exc:
        raise DomainError(f"bad parameters for loss '{name}': {exc}") from exc


# Grids and checks

def sample_grid(loss: LossSpec, lo: float, hi: float, n: int) -> List[Tuple[float, float]]:
    """Log-spaced (x, L(x)) pairs on [lo, hi] with every breakpoint in range included."""
    if not 0 < lo < hi:
        raise DomainError(f"grid needs 0 < lo < hi, got [{lo}, {hi}]")
    if n < 2:
        raise DomainError(f"grid needs at least 2 points, got {n}")
    xs = np.geomspace(lo, hi, n)
    xs[0], xs[-1] = lo, hi
    inside = [b for b in loss.breakpoints if lo <= b <= hi]
    kept = [float(x) for x in xs if not any(abs(x - b) <= 1e-12 * b for b in inside)]
    grid = sorted(set(kept) | set(inside))
    values = loss.evaluate_array(grid)
    return list(zip(grid, (float(v) for v in values)))


@dataclass
class LeftFlankVerdict:
    holds: bool
    value: float
    xi_used: float
    abs_error: float
    searched: int = 0
    power_limit: Optional[bool] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'holds': self.holds,
            'value': self.value,
            'xi_used': self.xi_used,
            'abs_error': self.abs_error,
            'searched': self.searched,
            'power_limit': self.power_limit,
        }


def _left_condition_integral(loss: LossSpec, r: int, xi: float) -> Tuple[float, float, float]:
    """int_xi^inf (L(xi-) - L(x)) / x**(r+1) dx, its error and the integral of |integrand|."""
    level = loss.evaluate_left(xi)
    edges = [xi] + [b for b in loss.breakpoints if b > xi]

    def integrand(x: float) -> float:
        return (level - loss.evaluate(x)) / x ** (r + 1)

    def magnitude(x: float) -> float:
        return abs(integrand(x))

    signed = integrate_panels(integrand, edges, to_infinity=True)
    scale = integrate_panels(magnitude, edges, to_infinity=True)
    return signed.value, signed.abs_error, scale.value


def check_left_flank(loss: LossSpec, r: int, xi: Optional[float] = None,
                     power_limit: Optional[Tuple[float, float, float]] = None) -> LeftFlankVerdict:
    """
    Check int_xi^inf (L(xi) - L(x)) / x**(r+1) dx > 0.

    The condition only asks for some xi with L non-increasing on (0, xi), so
    when it fails at the configured xi the check retries at xi / 2**k.
    ``power_limit`` = (A, B, s) with lim (L(x) - A) / x**s = B additionally
    applies the sufficient condition B*s < 0, s < r.
    """
    if r < 1:
        raise DomainError(f"r must be >= 1, got {r}")
    xi = float(loss.xi if xi is None else xi)
    power_ok = None
    if power_limit is not None:
        _, B, s = power_limit
        power_ok = bool(B * s < 0 and s < r)

    value = abs_error = 0.0
    searched = 0
    for k in range(MAX_XI_HALVINGS + 1):
        candidate = xi / 2 ** k
        searched = k
        try:
            value, abs_error, scale = _left_condition_integral(loss, r, candidate)
        except QuadratureError as exc:
            logger.warning(f"[Quadrature] left-monotone condition at xi={candidate}: {exc}")
            raise
        if value > 2 * abs_error + 1e-10 * scale:
            logger.debug(f"[Assumption] left condition holds at xi={candidate}, value={value:.6g}")
            return LeftFlankVerdict(True, value, candidate, abs_error, k, power_ok)
        if loss.evaluate_left(candidate) == loss.limit_at_zero():
            # L is flat on (0, candidate); smaller xi leaves the integral unchanged
            break

    holds = bool(power_ok)
    if not holds:
        logger.warning(f"[Assumption] left condition fails for {loss.name}, r={r}: value={value:.6g}")
    return LeftFlankVerdict(holds, value, xi, abs_error, searched, power_ok)


@dataclass
class RightVerdict:
    jump: float
    holds: bool
    unchecked: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {'jump': self.jump, 'holds': self.holds, 'unchecked': self.unchecked}


def check_right_flank(loss: LossSpec) -> RightVerdict:
    """Jump condition L(xi'-) < L(xi'+); the higher-order flatness alternative is not tested."""
    jump = loss.evaluate(loss.xi_prime) - loss.evaluate_left(loss.xi_prime)
    if jump > 0:
        return RightVerdict(jump, True)
    return RightVerdict(jump, False, unchecked=f"flatness of derivatives at xi'={loss.xi_prime}")


@dataclass
class InvariantReport:
    non_negative: bool
    min_value: float
    monotone_left: bool
    monotone_right: bool
    envelope_at_zero: bool
    envelope_at_infinity: bool
    exponents_match: Optional[bool] = None
    K_prime_below_r: Optional[bool] = None

    @property
    def ok(self) -> bool:
        flags = [self.non_negative, self.monotone_left, self.monotone_right,
                 self.envelope_at_zero, self.envelope_at_infinity]
        flags += [f for f in (self.exponents_match, self.K_prime_below_r) if f is not None]
        return all(flags)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'ok': self.ok,
            'non_negative': self.non_negative,
            'min_value': self.min_value,
            'monotone_left': self.monotone_left,
            'monotone_right': self.monotone_right,
            'envelope_at_zero': self.envelope_at_zero,
            'envelope_at_infinity': self.envelope_at_infinity,
            'exponents_match': self.exponents_match,
            'K_prime_below_r': self.K_prime_below_r,
        }


def _envelope_bounded(loss: LossSpec, exponent: float, near: Tuple[float, float], far: Tuple[float, float]) -> bool:
    """|L|/x**exponent on the far decade range stays within twice its level on the near range."""
    def peak(lo: float, hi: float) -> float:
        x = np.geomspace(lo, hi, 200)
        return float(np.max(np.abs(loss.evaluate_array(x)) / x ** exponent))

    near_peak, far_peak = peak(*near), peak(*far)
    return far_peak <= 2.0 * near_peak + 1e-300


def check_invariants(loss: LossSpec, r: Optional[int] = None) -> InvariantReport:
    """Advisory grid-based check of the loss assumptions; never raises on failure."""
    lo, hi, n = INVARIANT_GRID
    grid = np.array([x for x, _ in sample_grid(loss, lo, hi, n)])
    values = loss.evaluate_array(grid)
    scale = max(1.0, float(np.max(np.abs(values))))
    slack = 1e-12 * scale

    left = values[grid < loss.xi]
    right = values[grid > loss.xi_prime]
    report = InvariantReport(
        non_negative=bool(np.all(values >= -slack)),
        min_value=float(np.min(values)),
        monotone_left=bool(np.all(np.diff(left) <= slack)),
        monotone_right=bool(np.all(np.diff(right) >= -slack)),
        envelope_at_zero=_envelope_bounded(loss, loss.K, near=(1e-4, 1e-2), far=(1e-6, 1e-4)),
        envelope_at_infinity=_envelope_bounded(loss, loss.K_prime, near=(1e2, 1e4), far=(1e4, 1e6)),
    )
    if loss.is_piecewise_power:
        report.exponents_match = loss.envelope_exponents() == (loss.K, loss.K_prime)
    if r is not None:
        report.K_prime_below_r = loss.K_prime < r
    if not report.ok:
        logger.warning(f"[Assumption] invariant check for {loss.name}: {report.to_dict()}")
    return report
