"""
Renewal zero sets I_{k;n}, their intersections and the hitting probability p̄_{k;n}.

A zero set is the range of a nondecreasing F-walk restricted to {0, ..., n}, started from
the stationary first-zero law P(j) ∝ F̄(j).
"""

from dataclasses import dataclass, field
from typing import Iterable, Iterator, List, Optional

import numpy as np

from capacity import capacity, capacity_exact
from renewal import StepLaw, walk_ranges
from utils import DomainError


@dataclass(frozen=True, eq=False)
class ZeroSet:
    """Sorted nonempty set of integer times in {0..n}."""
    n: int
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64)
        if pts.ndim != 1 or pts.size == 0:
            raise DomainError("a zero set is never empty")
        if pts[0] < 0 or pts[-1] > self.n or np.any(np.diff(pts) <= 0):
            raise DomainError(f"points must be strictly increasing within [0, {self.n}]")
        object.__setattr__(self, 'points', pts)

    def __len__(self) -> int:
        return int(self.points.size)

    def __contains__(self, t) -> bool:
        i = np.searchsorted(self.points, t)
        return bool(i < self.points.size and self.points[i] == t)

    def scaled(self) -> np.ndarray:
        return self.points / float(self.n)

    def gaps(self) -> np.ndarray:
        return np.diff(self.points)

    def diameter(self) -> int:
        return int(self.points[-1] - self.points[0])

    def hits(self, lo: float, hi: float) -> bool:
        """Whether I/n meets the closed interval [lo, hi]."""
        i = np.searchsorted(self.points, lo * self.n, side='left')
        return bool(i < self.points.size and self.points[i] <= hi * self.n)


@dataclass
class IntersectionRecord:
    k: int
    j_indices: List[int] = field(default_factory=list)
    common_sets: List[np.ndarray] = field(default_factory=list)
    disjointified: List[np.ndarray] = field(default_factory=list)
    partial: bool = False
    scanned: int = 0


def sample_initial_position(n: int, law: StepLaw, rng: np.random.Generator) -> int:
    return int(law.sample_initial(n, rng))


def sample_zero_set(n: int, law: StepLaw, rng: np.random.Generator) -> ZeroSet:
    """Initial position then i.i.d. steps until the walk leaves {0..n}."""
    return sample_zero_sets(n, law, 1, rng)[0]


def sample_zero_sets(n: int, law: StepLaw, count: int, rng: np.random.Generator) -> List[ZeroSet]:
    """Batch version of sample_zero_set."""
    if n < 0:
        raise DomainError(f"horizon must be >= 0, got {n}")
    if count <= 0:
        return []
    starts = np.atleast_1d(law.sample_initial(n, rng, count)).astype(np.int64)
    return [ZeroSet(n, pts) for pts in walk_ranges(starts, n, law, rng)]


def intersect(a: ZeroSet, b: ZeroSet) -> np.ndarray:
    """Sorted intersection of two zero sets on the same horizon."""
    if a.n != b.n:
        raise DomainError(f"horizon mismatch: {a.n} vs {b.n}")
    return np.intersect1d(a.points, b.points, assume_unique=True)


class ZeroSetStream:
    """Lazily extended i.i.d. sequence I_1, I_2, ... shared by several scans."""

    def __init__(self, n: int, law: StepLaw, rng: np.random.Generator, batch: int = 256):
        self.n = n
        self.law = law
        self.rng = rng
        self.batch = batch
        self._sets: List[ZeroSet] = []

    def __getitem__(self, j: int) -> ZeroSet:
        """The j-th set, 1-based."""
        while len(self._sets) < j:
            self._sets.extend(sample_zero_sets(self.n, self.law, self.batch, self.rng))
        return self._sets[j - 1]

    def iter_from(self, j: int) -> Iterator[ZeroSet]:
        while True:
            yield self[j]
            j += 1


def default_budget(n: int, law: StepLaw) -> int:
    """Scan cap 50·w_n/ϑ_n, several geometric means of the waiting time."""
    return max(100, int(50.0 * law.wandering_rate(n) / law.vartheta(n)))


def find_intersections(k_set: ZeroSet, later_sets: Optional[Iterable[ZeroSet]] = None, max_i: int = 1,
                       law: Optional[StepLaw] = None, rng: Optional[np.random.Generator] = None,
                       k: int = 0, budget: Optional[int] = None) -> IntersectionRecord:
    """
    Scan later sets for the first max_i that meet k_set.

    Args:
        k_set: The set I_{k;n}
        later_sets: Sets I_{k+1;n}, I_{k+2;n}, ...; fresh sets are drawn from law and rng when omitted
        max_i: Number of intersections to record
        law: Step law for fresh sets
        rng: Random stream for fresh sets
        k: Index of k_set, so recorded indices are absolute
        budget: Maximum number of later sets to scan; the default cap applies to fresh sets only

    Returns:
        IntersectionRecord, flagged partial when the scan stopped before max_i hits
    """
    if max_i < 1:
        raise DomainError(f"max_i must be >= 1, got {max_i}")
    n = k_set.n
    if later_sets is None:
        if law is None or rng is None:
            raise DomainError("fresh sets need both a step law and a random stream")
        later_sets = ZeroSetStream(n, law, rng).iter_from(1)
        if budget is None:
            budget = default_budget(n, law)

    mask = np.zeros(n + 1, dtype=bool)
    mask[k_set.points] = True
    record = IntersectionRecord(k=k)
    seen = np.empty(0, dtype=np.int64)
    for offset, other in enumerate(later_sets, start=1):
        if budget is not None and offset > budget:
            break
        record.scanned = offset
        if other.n != n:
            raise DomainError(f"horizon mismatch: {n} vs {other.n}")
        if not mask[other.points].any():
            continue
        common = other.points[mask[other.points]]
        record.j_indices.append(k + offset)
        record.common_sets.append(common)
        record.disjointified.append(np.setdiff1d(common, seen, assume_unique=True))
        seen = np.union1d(seen, common)
        if len(record.j_indices) == max_i:
            break
    record.partial = len(record.j_indices) < max_i
    return record


@dataclass
class PBarEstimate:
    direct: float
    direct_se: float
    via_capacity: float
    via_capacity_se: float
    exact: Optional[float] = None


def estimate_p_bar(k_set: ZeroSet, law: StepLaw, reps: int, rng: np.random.Generator,
                   w_n: Optional[float] = None, reps_per_point: int = 200,
                   with_exact: bool = True) -> PBarEstimate:
    """
    p̄ = P{I_{0;n} ∩ k_set ≠ ∅ | k_set} by direct sampling and as cap(k_set)/w_n.
    """

    if reps < 1:
        raise DomainError(f"reps must be >= 1, got {reps}")
    n = k_set.n
    if w_n is None:
        w_n = law.wandering_rate(n)
    mask = np.zeros(n + 1, dtype=bool)
    mask[k_set.points] = True

    hits = 0
    remaining = reps
    while remaining > 0:
        batch = min(remaining, 4096)
        for other in sample_zero_sets(n, law, batch, rng):
            hits += bool(mask[other.points].any())
        remaining -= batch
    direct = hits / reps
    direct_se = float(np.sqrt(direct * (1.0 - direct) / reps))

    cap = capacity(k_set.points, law, reps_per_point, rng)
    exact = capacity_exact(k_set.points, law) / w_n if with_exact else None
    return PBarEstimate(direct, direct_se, cap.value / w_n, cap.se / w_n, exact)


@dataclass
class JointRecord:
    """One k-row of the joint law: scaled p̄, scaled waits, I_k/n and I_{k,i}/n."""
    k: int
    p_bar: float
    scaled_p_bar: float
    waits: List[float]
    set_scaled: np.ndarray
    common_scaled: List[np.ndarray]
    partial: bool


def joint_sample(n: int, law: StepLaw, K: int, m: int, rng: np.random.Generator,
                 budget: Optional[int] = None) -> List[JointRecord]:
    """
    Draw I_1..I_K with their first m intersection indices along one shared sequence.

    p̄ is the exact value cap(I_k)/w_n, and waits are (j_{k,i} − k)·p̄.
    """

    if K < 1 or m < 1:
        raise DomainError(f"K and m must be >= 1, got {K}, {m}")
    stream = ZeroSetStream(n, law, rng)
    w_n = law.wandering_rate(n)
    ratio = w_n / law.vartheta(n)
    if budget is None:
        budget = default_budget(n, law)

    records = []
    for k in range(1, K + 1):
        k_set = stream[k]
        p_bar = capacity_exact(k_set.points, law) / w_n
        found = find_intersections(k_set, stream.iter_from(k + 1), max_i=m, k=k, budget=budget)
        records.append(JointRecord(
            k=k,
            p_bar=p_bar,
            scaled_p_bar=ratio * p_bar,
            waits=[(j - k) * p_bar for j in found.j_indices],
            set_scaled=k_set.scaled(),
            common_scaled=[c / float(n) for c in found.common_sets],
            partial=found.partial,
        ))
    return records


def cardinality_tail_bound(law: StepLaw, n: int, m) -> np.ndarray:
    """P{#I_{0;n} ≥ m} ≤ (1 − F̄(n))^{m−1}: each of the first m − 1 steps must stay within n."""
    m = np.asarray(m, dtype=float)
    if np.any(m < 1):
        raise DomainError("cardinality level must be >= 1")
    return (1.0 - float(law.tail(n))) ** (m - 1.0)


@dataclass
class CardinalityTail:
    """Frequencies of #I_{0;n}·F̄(n)/log n ≥ x against the step bound, per level x."""
    n: int
    levels: List[float]
    counts_at: List[int]
    frequencies: List[float]
    bounds: List[float]
    tolerances: List[float]

    @property
    def ok(self) -> bool:
        return all(f <= b + t for f, b, t in zip(self.frequencies, self.bounds, self.tolerances))


def cardinality_tail_check(counts, law: StepLaw, n: int, levels=(0.1, 0.25, 0.5, 1.0),
                           width: float = 3.0) -> CardinalityTail:
    """
    Compare the tail of #I_{0;n} with its bound at the levels x·log n / F̄(n).

    At x = 1 the bound is about 1/n. The tolerance is width binomial standard errors
    of a frequency whose probability equals the bound.

    Args:
        counts: Sampled cardinalities of I_{0;n}
        levels: Levels x of the scaled cardinality
    """
    if n < 2:
        raise DomainError(f"log n scaling needs n >= 2, got {n}")
    counts = np.asarray(counts)
    if counts.size == 0:
        raise DomainError("no cardinalities to check")
    tail_n, log_n = float(law.tail(n)), np.log(n)
    result = CardinalityTail(n, [], [], [], [], [])
    for x in levels:
        m = max(1, int(np.ceil(x * log_n / tail_n)))
        bound = float(cardinality_tail_bound(law, n, m))
        result.levels.append(float(x))
        result.counts_at.append(m)
        result.frequencies.append(float(np.mean(counts >= m)))
        result.bounds.append(bound)
        result.tolerances.append(width * float(np.sqrt(bound * (1.0 - bound) / counts.size)))
    return result
