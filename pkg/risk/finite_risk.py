"""
Finite-p risk of inverse binomial sampling estimators.

eta(p) = sum_{n >= r} f(n) L(g(n) / p) is summed in vectorised chunks until
a certified bound on the discarded tail drops below the requested tolerance.
Monte Carlo simulation draws the trial count N directly, one uniform per
success. Sweeps and the minimax / interval-guarantee verifications are
built on both.
"""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from .asymptotic_risk import asymptotic_risk
from .conf import setting
from .exceptions import (
    DomainError,
    NonConvergenceError,
    PreconditionError,
    RiskError,
    VerificationError,
)
from .loss_model import LossSpec, sample_grid
from .special_functions import Kernel, neg_binomial_logpmf, neg_binomial_sf

logger = logging.getLogger(__name__)

MAX_SEED = 2 ** 64


def _require_probability(p: float) -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise DomainError(f"p must lie in (0, 1), got {p!r}")
    return p


@dataclass(frozen=True)
class EstimatorSpec:
    """
    Non-randomized estimator p_hat = g(N).

    g(n) = omega / (n + c), except that the first len(table) values
    g(r), g(r+1), ... may be given explicitly.
    """

    omega: float
    c: int = 0
    table: Tuple[float, ...] = ()
    name: str = ''

    @classmethod
    def unbiased(cls, r: int) -> 'EstimatorSpec':
        """(r-1)/(N-1)"""
        return cls(float(r - 1), -1, name='unbiased')

    @classmethod
    def unbiased_variant(cls, r: int) -> 'EstimatorSpec':
        """(r-1)/N"""
        return cls(float(r - 1), 0, name='unbiased_variant')

    @classmethod
    def minimax_mse(cls, r: int) -> 'EstimatorSpec':
        """(r-2)/(N-1), minimax for the normalized mean-square error."""
        return cls(float(r - 2), -1, name='minimax_mse')

    @classmethod
    def plus_one(cls, omega: float) -> 'EstimatorSpec':
        """omega/(N+1)"""
        return cls(float(omega), 1, name='plus_one')

    def validate(self, r: int) -> None:
        if not self.omega > 0:
            raise DomainError(f"estimator omega must be positive, got {self.omega}")
        if int(self.c) != self.c or self.c < 1 - r:
            raise DomainError(f"estimator shift c must be an integer >= 1 - r = {1 - r}, got {self.c}")
        if any(not v > 0 for v in self.table):
            raise DomainError("estimator table values must be positive")

    def g(self, n: int, r: int) -> float:
        index = n - r
        if 0 <= index < len(self.table):
            return float(self.table[index])
        return self.omega / (n + self.c)

    def values(self, n: np.ndarray, r: int) -> np.ndarray:
        n = np.asarray(n)
        out = self.omega / (n + self.c)
        if self.table:
            index = n - r
            mask = (index >= 0) & (index < len(self.table))
            if np.any(mask):
                out = np.where(mask, np.asarray(self.table)[np.clip(index, 0, len(self.table) - 1)], out)
        return out

    def describe(self) -> str:
        form = f"{self.omega:g}/(n{self.c:+d})" if self.c else f"{self.omega:g}/n"
        return f"table[{len(self.table)}] then {form}" if self.table else form

    def to_dict(self) -> Dict[str, Any]:
        return {'omega': self.omega, 'c': self.c, 'table': list(self.table), 'name': self.name}


# Exact series

@dataclass
class ExactRisk:
    eta: float
    truncation_bound: float
    terms: int
    truncated: bool = False
    bound_kind: str = 'exact_truncation'

    def to_dict(self) -> Dict[str, Any]:
        return {
            'eta': self.eta,
            'truncation_bound': self.truncation_bound,
            'terms': self.terms,
            'truncated': self.truncated,
            'bound_kind': self.bound_kind,
        }


def _envelope_tail(r: int, p: float, est: EstimatorSpec, n_stop: int, K: float, M: float) -> float:
    """Geometric bound on sum_{n > n_stop} f(n) M (g(n)/p)**K for K < 0."""
    n = n_stop + 1
    ratio = (1 - p) * n / (n - r + 1) * ((n + 1 + est.c) / (n + est.c)) ** (-K)
    if ratio >= 1:
        return math.inf
    log_first = float(neg_binomial_logpmf(r, p, np.array([n]))[0])
    first = math.exp(log_first) * M * (est.g(n, r) / p) ** K
    return first / (1 - ratio)


def exact_risk(loss: LossSpec, est: EstimatorSpec, r: int, p: float, tol: Optional[float] = None,
               max_terms: Optional[int] = None, envelope_M: Optional[float] = None,
               chunk: Optional[int] = None) -> ExactRisk:
    """
    Sum the risk series until the certified tail bound is at most tol.

    The tail past n_stop is bounded by Pr[N > n_stop] * sup L over the
    remaining arguments, which lie in (0, g(n_stop+1)/p]; once that point is
    below xi, L is non-increasing there and the sup is L(0+). Losses without
    a finite L(0+) need the envelope constant M (L(x) <= M x**K near 0).
    """
    kernel = Kernel(r)
    r = kernel.r
    p = _require_probability(p)
    est.validate(r)
    tol = setting('RISK_SERIES_TOL', 1e-10) if tol is None else float(tol)
    max_terms = setting('RISK_SERIES_MAX_TERMS', 10 ** 8) if max_terms is None else int(max_terms)
    chunk = setting('RISK_SERIES_CHUNK', 65536) if chunk is None else int(chunk)
    if not tol > 0:
        raise DomainError(f"tolerance must be positive, got {tol}")

    at_zero = loss.limit_at_zero()
    if math.isinf(at_zero) and envelope_M is None:
        raise NonConvergenceError(
            f"{loss.name} is unbounded as x -> 0 (K={loss.K}); supply an envelope constant M"
        )

    total = 0.0
    bound = math.inf
    start = r
    while True:
        size = min(chunk, r + max_terms - start)
        n = np.arange(start, start + size, dtype=np.int64)
        weights = np.exp(neg_binomial_logpmf(r, p, n))
        total += float(np.sum(weights * loss.evaluate_array(est.values(n, r) / p)))
        n_stop = start + size - 1
        terms = n_stop - r + 1

        x_next = est.g(n_stop + 1, r) / p
        past_table = n_stop + 1 - r >= len(est.table)
        if past_table and x_next <= loss.xi:
            if math.isinf(at_zero):
                bound = _envelope_tail(r, p, est, n_stop, loss.K, float(envelope_M))
            else:
                tail = neg_binomial_sf(kernel, p, n_stop)
                bound = tail * max(loss.evaluate(x_next), at_zero, 0.0)
        logger.debug(f"[Series] r={r} p={p:g}: {terms} terms, partial={total:.17g}, bound={bound:.3e}")

        if bound <= tol:
            return ExactRisk(total, bound, terms)
        if terms >= max_terms:
            logger.warning(
                f"[Series] {loss.name} r={r} p={p:g}: stopped at {terms} terms with bound {bound:.3e} > {tol:.1e}"
            )
            return ExactRisk(total, bound, terms, truncated=True)
        start = n_stop + 1


# Monte Carlo

@dataclass
class SimConfig:
    samples: int
    seed: int = 0
    batch: int = field(default_factory=lambda: setting('RISK_SIM_BATCH', 50000))
    workers: int = field(default_factory=lambda: setting('RISK_SIM_WORKERS', 4))

    def __post_init__(self):
        if self.samples < 1:
            raise DomainError(f"samples must be >= 1, got {self.samples}")
        if self.batch < 1:
            raise DomainError(f"batch must be >= 1, got {self.batch}")
        if not 0 <= self.seed < MAX_SEED:
            raise DomainError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass
class SimResult:
    mean: float
    stderr: float
    samples: int
    bound_kind: str = 'monte_carlo_stderr'

    @property
    def eta_hat(self) -> float:
        return self.mean

    def to_dict(self) -> Dict[str, Any]:
        return {'eta_hat': self.mean, 'stderr': self.stderr, 'samples': self.samples}


def batch_generator(seed: int, index: int) -> np.random.Generator:
    """Independent stream for batch ``index`` of a run seeded with ``seed``."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(index,))))


def draw_trial_counts(rng: np.random.Generator, r: int, p: float, size: int) -> np.ndarray:
    """N = sum of r geometric trial counts, each floor(log U / log(1-p)) + 1 with U in (0, 1]."""
    uniforms = 1.0 - rng.random((size, r))
    trials = np.floor(np.log(uniforms) / math.log1p(-p)) + 1.0
    return trials.sum(axis=1).astype(np.int64)


def _batch_moments(fn: Callable[[np.ndarray], np.ndarray], r: int, p: float, seed: int,
                   index: int, size: int) -> Tuple[int, float, float]:
    counts = draw_trial_counts(batch_generator(seed, index), r, p, size)
    values = np.asarray(fn(counts), dtype=float)
    mean = float(np.mean(values))
    return size, mean, float(np.sum((values - mean) ** 2))


def _merge_moments(parts: Iterable[Tuple[int, float, float]]) -> Tuple[int, float, float]:
    """Pooled count, mean and sum of squared deviations, in the given order."""
    count, mean, m2 = 0, 0.0, 0.0
    for n_b, mean_b, m2_b in parts:
        total = count + n_b
        delta = mean_b - mean
        mean += delta * n_b / total
        m2 += m2_b + delta * delta * count * n_b / total
        count = total
    return count, mean, m2


def simulate_statistic(fn: Callable[[np.ndarray], np.ndarray], r: int, p: float, cfg: SimConfig) -> SimResult:
    """Sample mean and standard error of fn(N) over cfg.samples draws of N."""
    r = Kernel(r).r
    p = _require_probability(p)
    if cfg.samples < 100:
        logger.warning(f"[MonteCarlo] {cfg.samples} samples: standard error is unreliable below 100")

    sizes = [min(cfg.batch, cfg.samples - start) for start in range(0, cfg.samples, cfg.batch)]

    def run(index: int) -> Tuple[int, float, float]:
        return _batch_moments(fn, r, p, cfg.seed, index, sizes[index])

    workers = max(1, min(int(cfg.workers), len(sizes)))
    if workers == 1:
        parts = [run(i) for i in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))

    count, mean, m2 = _merge_moments(parts)
    stderr = math.sqrt(m2 / (count - 1) / count) if count > 1 else math.nan
    logger.debug(f"[MonteCarlo] r={r} p={p:g}: {count} samples in {len(sizes)} batches, mean={mean:.17g}")
    return SimResult(mean, stderr, count)


def simulate_risk(loss: LossSpec, est: EstimatorSpec, r: int, p: float, cfg: SimConfig) -> SimResult:
    r = Kernel(r).r
    est.validate(r)

    def loss_of_estimate(counts: np.ndarray) -> np.ndarray:
        return loss.evaluate_array(est.values(counts, r) / p)

    return simulate_statistic(loss_of_estimate, r, p, cfg)


# Sweeps

@dataclass
class RiskRecord:
    p: float
    eta: float
    bound_kind: str
    error_bound: float
    error: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        row = {'p': self.p, 'eta': self.eta, 'bound_kind': self.bound_kind, 'error_bound': self.error_bound}
        if self.error:
            row['error'] = self.error
        return row


@dataclass
class RiskCurve:
    records: List[RiskRecord]
    loss: str = ''
    r: int = 0
    estimator: str = ''

    @property
    def failed(self) -> List[RiskRecord]:
        return [rec for rec in self.records if rec.error]

    @property
    def ok(self) -> bool:
        return not self.failed

    @property
    def reference(self) -> Optional[RiskRecord]:
        refs = [rec for rec in self.records if rec.p == 0.0]
        return refs[0] if refs else None

    def to_dict(self) -> Dict[str, Any]:
        return {
            'loss': self.loss,
            'r': self.r,
            'estimator': self.estimator,
            'records': [rec.to_dict() for rec in self.records],
        }


def _error_record(p: float, exc: Exception) -> RiskRecord:
    return RiskRecord(p, math.nan, 'error', math.nan, error=f"{exc.__class__.__name__}: {exc}")


def _ordered(records: List[RiskRecord]) -> List[RiskRecord]:
    return sorted(records, key=lambda rec: -rec.p)


def _reference_record(loss: LossSpec, est: EstimatorSpec, r: int, method: str) -> RiskRecord:
    try:
        report = asymptotic_risk(loss, r, est.omega, method=method)
        return RiskRecord(0.0, report.value, 'asymptotic_quadrature', report.abs_error_estimate)
    except RiskError as exc:
        logger.warning(f"[Sweep] asymptotic reference failed: {exc}")
        return _error_record(0.0, exc)


def distinct_grid(p_grid: Sequence[float]) -> List[float]:
    """Grid points without repeats, largest p first."""
    return sorted({float(p) for p in p_grid}, reverse=True)


def risk_sweep(loss: LossSpec, est: EstimatorSpec, r: int, p_grid: Sequence[float],
               tol: Optional[float] = None, workers: Optional[int] = None,
               reference: bool = True, method: str = 'auto') -> RiskCurve:
    """exact_risk at every grid point plus the p -> 0 reference row; failures are recorded per row."""
    workers = setting('RISK_SIM_WORKERS', 4) if workers is None else workers

    def point(p: float) -> RiskRecord:
        try:
            result = exact_risk(loss, est, r, p, tol=tol)
            return RiskRecord(float(p), result.eta, result.bound_kind, result.truncation_bound)
        except RiskError as exc:
            logger.warning(f"[Sweep] p={p}: {exc}")
            return _error_record(float(p), exc)

    grid = distinct_grid(p_grid)
    with ThreadPoolExecutor(max_workers=max(1, int(workers))) as pool:
        records = list(pool.map(point, grid))
    logger.info(f"[Sweep] {loss.name} r={r} {est.describe()}: {len(records)} points")

    records = _ordered(records)
    if reference:
        records.append(_reference_record(loss, est, r, method))
    return RiskCurve(records, loss.name, r, est.describe())


def simulate_sweep(loss: LossSpec, est: EstimatorSpec, r: int, p_grid: Sequence[float], cfg: SimConfig,
                   reference: bool = True, method: str = 'auto') -> RiskCurve:
    records = []
    for p in distinct_grid(p_grid):
        try:
            result = simulate_risk(loss, est, r, p, cfg)
            records.append(RiskRecord(float(p), result.mean, result.bound_kind, result.stderr))
        except RiskError as exc:
            logger.warning(f"[MonteCarlo] p={p}: {exc}")
            records.append(_error_record(float(p), exc))
    records = _ordered(records)
    if reference:
        records.append(_reference_record(loss, est, r, method))
    return RiskCurve(records, loss.name, r, est.describe())


def confidence(loss: LossSpec, est: EstimatorSpec, r: int, p: float, tol: Optional[float] = None) -> float:
    """Coverage probability 1 - eta(p) of the interval [p_hat/mu1, p_hat*mu2]."""
    params = loss.param_dict
    unit_penalties = params.get('A1', 1.0) == 1.0 and params.get('A2', 1.0) == 1.0
    if loss.kind not in ('interval', 'generalized_interval') or not unit_penalties:
        raise DomainError(f"confidence is defined for the interval loss, got {loss.name}")
    return 1.0 - exact_risk(loss, est, r, p, tol=tol).eta


# Verification reports

@dataclass
class VerificationReport:
    title: str
    rows: List[Dict[str, Any]] = field(default_factory=list)
    skipped: bool = False
    reason: str = ''

    @property
    def failures(self) -> List[Dict[str, Any]]:
        return [row for row in self.rows if not row.get('passed')]

    @property
    def passed(self) -> bool:
        return not self.skipped and bool(self.rows) and not self.failures

    def raise_for_failures(self) -> None:
        if not self.skipped and self.failures:
            raise VerificationError(f"{self.title}: {len(self.failures)} failing rows", self.failures)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'title': self.title,
            'passed': self.passed,
            'skipped': self.skipped,
            'reason': self.reason,
            'rows': self.rows,
        }


def verify_minimax_mse(r_list: Sequence[int], p_grid: Sequence[float], tol: Optional[float] = None) -> VerificationReport:
    """Normalized MSE of (r-2)/(N-1) plus its certificate stays strictly below 1/(r-1)."""
    from .loss_model import mse

    bad = [r for r in r_list if r < 3]
    if bad:
        raise PreconditionError(f"minimax MSE guarantee needs r >= 3, got {bad}")
    loss = mse()
    report = VerificationReport('minimax-mse')
    for r in r_list:
        est = EstimatorSpec.minimax_mse(r)
        limit = 1.0 / (r - 1)
        for p in p_grid:
            result = exact_risk(loss, est, r, p, tol=tol)
            upper = result.eta + result.truncation_bound
            report.rows.append({
                'r': r,
                'p': float(p),
                'value': result.eta,
                'bound': result.truncation_bound,
                'limit': limit,
                'margin': limit - upper,
                'passed': upper < limit,
            })
    logger.info(f"[Verify] minimax-mse: {len(report.rows)} rows, {len(report.failures)} failing")
    return report


def constant_intervals(loss: LossSpec) -> List[Tuple[float, float, float]]:
    """Maximal (lo, hi, value) runs of adjacent segments on which L is constant."""
    if not loss.is_piecewise_power:
        return []
    runs: List[Tuple[float, float, float]] = []
    for seg in loss.segments:
        if any(t.power != 0 for t in seg.terms if t.coef != 0):
            continue
        value = float(sum(t.coef for t in seg.terms))
        if runs and runs[-1][1] == seg.lo and runs[-1][2] == value:
            runs[-1] = (runs[-1][0], seg.hi, value)
        else:
            runs.append((seg.lo, seg.hi, value))
    return runs


def _monotone_on(loss: LossSpec, lo: float, hi: float, increasing: bool) -> bool:
    if not lo < hi:
        return True
    values = np.array([v for _, v in sample_grid(loss, lo, hi, 2000)])
    steps = np.diff(values)
    slack = 1e-12 * max(1.0, float(np.max(np.abs(values))))
    return bool(np.all(steps >= -slack)) if increasing else bool(np.all(steps <= slack))


def verify_interval_guarantee(loss: LossSpec, r: int, omega: float, p_grid: Sequence[float],
                              tol: Optional[float] = None) -> VerificationReport:
    """
    Guarantee eta(p) <= eta_bar for omega/(N+1) when L is constant on [u, u'] with
    u <= omega/(r + sqrt(r) + 1), u' >= omega/(r - sqrt(r)) and monotone flanks.
    Hypothesis failures mark the report skipped rather than failed.
    """
    if r < 3:
        raise PreconditionError(f"interval guarantee needs r >= 3, got r={r}")
    title = 'interval-guarantee'
    upper_left = omega / (r + math.sqrt(r) + 1)
    lower_right = omega / (r - math.sqrt(r))

    runs = constant_intervals(loss)
    if not runs:
        return VerificationReport(title, skipped=True, reason=f"{loss.name} is not constant on any interval")
    fitting = [(lo, hi) for lo, hi, _ in runs if lo <= upper_left and hi >= lower_right]
    if not fitting:
        lo, hi, _ = max(runs, key=lambda run: run[1] - run[0])
        return VerificationReport(
            title, skipped=True,
            reason=f"constant on [{lo:g}, {hi:g}] but needs lo <= {upper_left:.6g} and hi >= {lower_right:.6g}",
        )
    lo, hi = fitting[0]
    left_ok = lo == 0 or _monotone_on(loss, min(1e-6, lo / 2), lo, increasing=False)
    right_ok = math.isinf(hi) or _monotone_on(loss, hi, max(1e6, hi * 2), increasing=True)
    if not (left_ok and right_ok):
        return VerificationReport(title, skipped=True, reason='loss is not monotone on the flanks')

    reference = asymptotic_risk(loss, r, omega)
    est = EstimatorSpec.plus_one(omega)
    report = VerificationReport(title)
    for p in p_grid:
        result = exact_risk(loss, est, r, p, tol=tol)
        allowance = reference.value + result.truncation_bound + reference.abs_error_estimate
        report.rows.append({
            'r': r,
            'omega': omega,
            'p': float(p),
            'value': result.eta,
            'bound': result.truncation_bound,
            'limit': reference.value,
            'margin': reference.value - result.eta,
            'passed': result.eta <= allowance,
        })
    logger.info(f"[Verify] {title} {loss.name} r={r} omega={omega}: {len(report.failures)} failing rows")
    return report


def verify_optimum_interval_guarantee(loss: LossSpec, r: int, p_grid: Sequence[float],
                                      tol: Optional[float] = None, config=None) -> VerificationReport:
    """
    The interval guarantee at the optimum: omega* from find_optimum, then
    eta(p) <= eta* for omega*/(N+1) whenever the constant band fits omega*.
    Such an estimator minimises the worst-case risk over p.
    """
    from .optimizer import find_optimum

    if r < 3:
        raise PreconditionError(f"interval guarantee needs r >= 3, got r={r}")
    optimum = find_optimum(loss, r, config)
    report = verify_interval_guarantee(loss, r, optimum.omega_star, p_grid, tol=tol)
    report.title = 'optimum-interval-guarantee'
    for row in report.rows:
        row['eta_star'] = optimum.eta_star
    return report
