"""
Empirical distributions, Kolmogorov-Smirnov distances and trend verdicts.
"""

from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from scipy import stats as sps

from utils import DomainError


class EmpiricalDistribution:
    """Sorted sample with ECDF, quantile and KS queries."""

    def __init__(self, sample, metadata: Optional[Dict[str, Any]] = None):
        values = np.sort(np.asarray(sample, dtype=float).ravel())
        if values.size == 0:
            raise DomainError("empirical distribution needs at least one value")
        if np.isnan(values).any():
            raise DomainError("sample contains NaN")
        self.sorted_sample = values
        self.metadata = dict(metadata or {})

    @property
    def n(self) -> int:
        return int(self.sorted_sample.size)

    def __len__(self) -> int:
        return self.n

    def __repr__(self) -> str:
        return f"EmpiricalDistribution(n={self.n}, median={self.median():.4g})"

    def ecdf(self, x):
        """Right-continuous F_n(x) = #{values ≤ x}/n."""
        return np.searchsorted(self.sorted_sample, x, side='right') / self.n

    def quantile(self, q):
        return np.quantile(self.sorted_sample, q)

    def median(self) -> float:
        return float(np.median(self.sorted_sample))

    def mean(self) -> float:
        return float(np.mean(self.sorted_sample))

    def ks_distance(self, cdf: Callable) -> float:
        """sup_x |F_n(x) − F(x)| against a continuous CDF."""
        values = cdf(self.sorted_sample)
        upper = np.arange(1, self.n + 1) / self.n - values
        lower = values - np.arange(0, self.n) / self.n
        return float(max(upper.max(), lower.max()))

    def ks_test(self, cdf: Callable):
        """scipy's one-sample KS result (statistic and p-value)."""
        return sps.kstest(self.sorted_sample, cdf, method='asymp')

    def ks_two_sample(self, other: 'EmpiricalDistribution') -> float:
        if self is other:
            return 0.0
        return float(sps.ks_2samp(self.sorted_sample, other.sorted_sample, method='asymp').statistic)

    def merge(self, other: 'EmpiricalDistribution') -> 'EmpiricalDistribution':
        """Pool two samples; associative and order independent."""
        metadata = dict(self.metadata)
        metadata.update(other.metadata)
        return EmpiricalDistribution(np.concatenate((self.sorted_sample, other.sorted_sample)), metadata)

    def frequency(self, predicate) -> float:
        return float(np.mean(predicate(self.sorted_sample)))


def ks_threshold(n: int, alpha: float = 0.05) -> float:
    """Asymptotic Kolmogorov critical value c_α/√n."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    return float(sps.kstwobign.isf(alpha) / np.sqrt(n))


def ks_threshold_two_sample(n: int, m: int, alpha: float = 0.05) -> float:
    return float(sps.kstwobign.isf(alpha) * np.sqrt((n + m) / (n * m)))


@dataclass
class TrendVerdict:
    tau: float
    p_value: float
    decreasing: bool


def trend_test(groups: Sequence, alpha: float = 0.05) -> TrendVerdict:
    """
    Kendall's tau between grid position and value, pooling replicate values per grid point.

    Args:
        groups: One scalar or array of replicate values per grid point, in grid order

    Returns:
        TrendVerdict; decreasing means tau < 0 with p < alpha
    """
    if len(groups) < 2:
        raise DomainError("trend test needs at least two grid points")
    xs, ys = [], []
    for index, group in enumerate(groups):
        values = np.atleast_1d(np.asarray(group, dtype=float))
        if values.size == 0:
            raise DomainError(f"grid point {index} has no values")
        xs.append(np.full(values.size, index))
        ys.append(values)
    result = sps.kendalltau(np.concatenate(xs), np.concatenate(ys))
    tau = float(result.statistic) if hasattr(result, 'statistic') else float(result.correlation)
    p_value = float(result.pvalue)
    return TrendVerdict(tau=tau, p_value=p_value, decreasing=bool(tau < 0 and p_value < alpha))


def is_nonincreasing(values: Sequence[float], ses: Optional[Sequence[float]] = None, width: float = 3.0) -> bool:
    """Each value is at most the previous one plus width combined standard errors."""
    values = np.asarray(values, dtype=float)
    ses = np.zeros_like(values) if ses is None else np.asarray(ses, dtype=float)
    slack = width * np.hypot(ses[1:], ses[:-1])
    return bool(np.all(values[1:] <= values[:-1] + slack))


def geometric_gof(samples, p: float, bins: int = 10):
    """
    Chi-square goodness of fit of integer samples ≥ 1 to Geometric(p).

    Cells are cut at deciles of the geometric law, the last one open.
    """
    samples = np.asarray(samples)
    if samples.size == 0:
        raise DomainError("no samples")
    geom = sps.geom(p)
    edges = np.unique(geom.ppf(np.linspace(0.0, 1.0, bins + 1)[1:-1]).astype(int))
    observed = np.histogram(samples, bins=np.concatenate(([0.5], edges + 0.5, [np.inf])))[0]
    probs = np.diff(np.concatenate(([0.0], geom.cdf(edges), [1.0])))
    expected = probs * samples.size
    return sps.chisquare(observed, expected)


@dataclass
class Verdict:
    """Outcome of one acceptance check, serialised into the JSON summary."""
    name: str
    passed: bool
    metrics: Dict[str, Any] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'passed': bool(self.passed),
            'metrics': {k: _plain(v) for k, v in self.metrics.items()},
            'seeds': [int(s) for s in self.seeds],
        }


def _plain(value):
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    return value


def with_retry(attempt: Callable[[int], List[Verdict]], seed: int, retry_seed: int) -> List[Verdict]:
    """
    Run a statistical check once, and once more with a second fixed seed if anything failed.

    Checks that passed on the first seed keep that outcome. A failed check takes its
    outcome on the retry seed, keeps the first-attempt metrics under 'first_attempt'
    and records both seeds.

    Args:
        attempt: Runs the check for a root seed and returns its verdicts
        seed: First root seed
        retry_seed: Second root seed, used only after a failure

    Returns:
        Merged verdicts in first-attempt order
    """
    first = attempt(seed)
    if all(v.passed for v in first):
        return first
    second = {v.name: v for v in attempt(retry_seed)}
    merged = []
    for v in first:
        again = second.get(v.name)
        if v.passed or again is None:
            merged.append(v)
            continue
        metrics = dict(again.metrics)
        metrics['first_attempt'] = v.metrics
        merged.append(Verdict(v.name, again.passed, metrics, list(v.seeds) + list(again.seeds)))
    return merged
