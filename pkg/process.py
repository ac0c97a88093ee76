"""
The stationary process X_t = Σ_j V₁(w_n/Γ_j)·1{t ∈ I_{j;n}}, t = 0..n, its sup-measure and
the decomposition of maxima along zero-set intersections.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from analytic import ModelParams, V_log, V1_log, log_tail_nu_bar, normalizers, NormalizerTable
from renewal import StepLaw
from stats import EmpiricalDistribution
from utils import DomainError, stream_rng
from zeroset import ZeroSet, sample_zero_sets, find_intersections

Interval = Tuple[float, float]
NEG_INF = float('-inf')
STREAM_PROCESS = 8


@dataclass(frozen=True)
class ProcessOptions:
    """
    Extra components of a realization, all off by default.

    noise_rate and noise_bound add an independent compound-Poisson sum of Uniform(0, bound)
    jumps at every time point; dense stores X on all of {0..n}.
    """
    noise_rate: float = 0.0
    noise_bound: float = 1.0
    dense: bool = False


@dataclass(frozen=True, eq=False)
class ProcessRealization:
    n: int
    w_n: float
    gammas: np.ndarray
    heights: np.ndarray
    zero_sets: List[ZeroSet]
    noise: Optional[np.ndarray] = None

    @property
    def degenerate(self) -> bool:
        """No arrival survived the truncation, so X ≡ 0 apart from noise."""
        return len(self.zero_sets) == 0

    @cached_property
    def _sparse(self) -> Tuple[np.ndarray, np.ndarray]:
        if self.degenerate:
            return np.empty(0, dtype=np.int64), np.empty(0)
        points = np.concatenate([z.points for z in self.zero_sets])
        weights = np.repeat(self.heights, [len(z) for z in self.zero_sets])
        support, inverse = np.unique(points, return_inverse=True)
        return support, np.bincount(inverse, weights=weights)

    @property
    def support(self) -> np.ndarray:
        """Union of the zero sets, where X > 0."""
        return self._sparse[0]

    @property
    def support_values(self) -> np.ndarray:
        return self._sparse[1]

    def dense_values(self) -> np.ndarray:
        """X_t for every t in {0..n}."""
        values = np.zeros(self.n + 1)
        values[self.support] = self.support_values
        if self.noise is not None:
            values += self.noise
        return values

    def value_at(self, t: int) -> float:
        if self.noise is not None:
            return float(self.dense_values()[t])
        i = np.searchsorted(self.support, t)
        if i < self.support.size and self.support[i] == t:
            return float(self.support_values[i])
        return 0.0


def simulate_process(n: int, law: StepLaw, p: ModelParams, rng: np.random.Generator,
                     options: Optional[ProcessOptions] = None) -> ProcessRealization:
    """
    Draw one realization on {0..n}.

    Only arrivals Γ_j < w_n·ν̄(x0) are generated; beyond that V₁(w_n/Γ_j) = 0, so the
    truncation changes no value.
    """
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    options = options or ProcessOptions()
    w_n = law.wandering_rate(n)
    log_rate = np.log(w_n) + float(log_tail_nu_bar(p.x0, p))
    rate = float(np.exp(log_rate))
    count = rng.poisson(rate)
    gammas = np.sort(rng.uniform(0.0, rate, count))
    heights = V1_log(np.log(w_n) - np.log(gammas), p) if count else np.empty(0)
    zero_sets = sample_zero_sets(n, law, count, rng)

    noise = None
    if options.noise_rate > 0.0:
        jumps = rng.poisson(options.noise_rate, n + 1)
        owners = np.repeat(np.arange(n + 1), jumps)
        noise = np.bincount(owners, weights=rng.uniform(0.0, options.noise_bound, owners.size), minlength=n + 1)
    return ProcessRealization(n=n, w_n=w_n, gammas=gammas, heights=np.asarray(heights, dtype=float),
                              zero_sets=zero_sets, noise=noise)


def _time_range(n: int, B: Interval) -> Tuple[int, int]:
    lo, hi = B
    if not 0.0 <= lo <= hi <= 1.0:
        raise DomainError(f"interval must satisfy 0 <= lo <= hi <= 1, got {B}")
    return int(np.ceil(lo * n - 1e-9)), int(np.floor(hi * n + 1e-9))


def _max_over(points: np.ndarray, r: ProcessRealization, first: int, last: int) -> float:
    """Max of X over the given points restricted to [first, last]; −∞ if none."""
    inside = points[(points >= first) & (points <= last)]
    if inside.size == 0:
        return NEG_INF
    if r.noise is not None:
        return float(r.dense_values()[inside].max())
    idx = np.searchsorted(r.support, inside)
    return float(r.support_values[idx].max())


def sup_measure(r: ProcessRealization, B: Interval) -> float:
    """
    𝓜_n(B) = max of X_t over t ∈ nB.

    Returns 0 when nB holds integers but no support point, −∞ when it holds no integer.
    """
    first, last = _time_range(r.n, B)
    if first > last:
        return NEG_INF
    if r.noise is not None:
        return float(r.dense_values()[first:last + 1].max())
    i0 = np.searchsorted(r.support, first, side='left')
    i1 = np.searchsorted(r.support, last, side='right')
    if i1 <= i0:
        return 0.0
    return float(r.support_values[i0:i1].max())


def sup_measure_union(r: ProcessRealization, intervals: Sequence[Interval]) -> float:
    return max(sup_measure(r, B) for B in intervals)


def running_max(r: ProcessRealization, t_grid) -> np.ndarray:
    """𝕄_n(t) = max_{i ≤ nt} X_i on the requested grid of t ∈ [0,1]."""
    t_grid = np.asarray(t_grid, dtype=float)
    if np.any((t_grid < 0.0) | (t_grid > 1.0)):
        raise DomainError("running max grid must lie in [0, 1]")
    last = np.floor(t_grid * r.n + 1e-9).astype(np.int64)
    if r.noise is not None:
        return np.maximum.accumulate(r.dense_values())[last]
    if r.support.size == 0:
        return np.zeros(t_grid.size)
    prefix = np.maximum.accumulate(r.support_values)
    count = np.searchsorted(r.support, last, side='right')
    return np.where(count > 0, prefix[np.maximum(count - 1, 0)], 0.0)


@dataclass
class MaximaRecord:
    """Raw, normalised and decomposed maxima over one interval."""
    interval: Interval
    raw: float
    normalized: Optional[float]
    per_k: List[float] = field(default_factory=list)
    per_ki: Dict[Tuple[int, int], float] = field(default_factory=dict)
    upto_K: float = NEG_INF


def decomposed_maxima(r: ProcessRealization, B: Interval, K: int, I: int,
                      table: Optional[NormalizerTable] = None) -> MaximaRecord:
    """
    Maxima of X over Î_{k;n}∩nB and Î_{k,i;n}∩nB for k ≤ K, i ≤ I.

    Î_{k;n} removes from I_{k;n} the points of earlier sets, Î_{k,i;n} removes from I_{k,i;n}
    the points of earlier I_{k,i';n}. Empty domains give −∞.
    """
    if K < 1 or I < 1:
        raise DomainError(f"K and I must be >= 1, got {K}, {I}")
    first, last = _time_range(r.n, B)
    raw = sup_measure(r, B)
    record = MaximaRecord(interval=B, raw=raw, normalized=None if table is None else float(table.normalize(raw)))

    covered = np.empty(0, dtype=np.int64)
    for k in range(1, K + 1):
        if k > len(r.zero_sets):
            record.per_k.append(NEG_INF)
            for i in range(1, I + 1):
                record.per_ki[(k, i)] = NEG_INF
            continue
        k_set = r.zero_sets[k - 1]
        fresh = np.setdiff1d(k_set.points, covered, assume_unique=True)
        covered = np.union1d(covered, k_set.points)
        record.per_k.append(_max_over(fresh, r, first, last))
        found = find_intersections(k_set, r.zero_sets[k:], max_i=I, k=k)
        for i in range(1, I + 1):
            if i <= len(found.disjointified):
                record.per_ki[(k, i)] = _max_over(found.disjointified[i - 1], r, first, last)
            else:
                record.per_ki[(k, i)] = NEG_INF
    record.upto_K = max(record.per_k)
    return record


def normalized_max_sample(n: int, p: ModelParams, reps: int, intervals: Sequence[Interval], seed: int,
                          c_inf: float, law: Optional[StepLaw] = None, rep_offset: int = 0,
                          grid_index: int = 0, options: Optional[ProcessOptions] = None,
                          rows: Optional[list] = None) -> Dict[Interval, EmpiricalDistribution]:
    """
    (𝓜_n(B) − b_n)/a_n over reps realizations, one seeded stream per rep.

    Args:
        n: Horizon
        p: Model parameters
        reps: Number of realizations
        intervals: Intervals B ⊆ [0,1]
        seed: Root seed
        c_inf: Estimate of c_∞ used in b_n
        law: Step law, built from p when omitted
        rep_offset: Index of the first rep, so batches of one run can be merged
        grid_index: Position of n in the experiment grid, part of the stream key
        options: Realization options
        rows: When given, (n, seed, interval, raw, normalized) rows are appended to it

    Returns:
        Mapping from interval to its empirical distribution
    """
    law = law or StepLaw.from_params(p)
    table = normalizers(n, c_inf, p, law)
    samples: Dict[Interval, List[float]] = {tuple(B): [] for B in intervals}
    for rep in range(rep_offset, rep_offset + reps):
        rng = stream_rng(seed, STREAM_PROCESS, grid_index, rep)
        realization = simulate_process(n, law, p, rng, options)
        for B in samples:
            raw = sup_measure(realization, B)
            value = float(table.normalize(raw))
            samples[B].append(value)
            if rows is not None:
                rows.append((n, seed, rep, f"[{B[0]},{B[1]}]", raw, value))
    metadata = {'n': n, 'seed': seed, 'c_inf': c_inf}
    return {B: EmpiricalDistribution(values, metadata) for B, values in samples.items()}


def sample_marginal(p: ModelParams, size: int, rng: np.random.Generator) -> np.ndarray:
    """
    Exact draws of the stationary marginal X_0.

    Each I_{j;n} contains 0 with probability F̄(0)/w_n = 1/w_n independently over j, so the
    arrivals that reach t = 0 form a Poisson process of rate 1/w_n on (0, w_n·ν̄(x0)). Their
    count is Poisson(ν̄(x0)) and each height is V(1/(U·ν̄(x0))) for uniform U, whatever n is.
    """
    if size < 1:
        raise DomainError(f"size must be >= 1, got {size}")
    log_rate = float(log_tail_nu_bar(p.x0, p))
    counts = rng.poisson(np.exp(log_rate), size)
    u = 1.0 - rng.random(int(counts.sum()))
    heights = V_log(-np.log(u) - log_rate, p)
    owners = np.repeat(np.arange(size), counts)
    return np.bincount(owners, weights=heights, minlength=size)
