"""
Capacities of finite sets for the renewal walk, and the intersection constant c_∞.

cap(A) = Σ_{a∈A} P{the walk from a never visits A∖{a}}. Walks are nondecreasing, so escape
is decided as soon as the walk passes max(A) and Monte Carlo estimates carry no horizon bias.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy import special
from scipy.linalg import solve_triangular

from utils import DomainError
from renewal import StepLaw, walk_ranges


@dataclass
class CapacityEstimate:
    value: float
    se: float
    horizon: int
    reps: int

    def interval(self, width: float = 3.0) -> Tuple[float, float]:
        return self.value - width * self.se, self.value + width * self.se


@dataclass
class CInfinityEstimates:
    """c_∞ by the two-walk intersection route, the capacity ratio route and the renewal series."""
    intersection: CapacityEstimate
    capacity_ratio: CapacityEstimate
    series: float

    def routes_agree(self, width: float = 3.0) -> bool:
        a, b = self.intersection, self.capacity_ratio
        return abs(a.value - b.value) <= width * float(np.hypot(a.se, b.se))


def _as_set(A) -> np.ndarray:
    return np.unique(np.asarray(A, dtype=np.int64))


def _escape_walks(targets: np.ndarray, limit: int, law: StepLaw, reps: int,
                  rng: np.random.Generator) -> np.ndarray:
    """
    Walks from 0 avoiding the sorted positive offsets in targets, followed up to displacement limit.

    Returns a boolean escape flag per walk.
    """
    escaped = np.ones(reps, dtype=bool)
    if targets.size == 0 or reps == 0:
        return escaped
    position = np.zeros(reps, dtype=np.int64)
    active = np.arange(reps)
    chunk = 8
    while active.size:
        steps = law.sample_steps((active.size, chunk), rng, cap=limit + 1)
        path = position[active, None] + np.cumsum(steps, axis=1)
        idx = np.minimum(np.searchsorted(targets, path), targets.size - 1)
        hit = (targets[idx] == path).any(axis=1)
        escaped[active[hit]] = False
        position[active] = path[:, -1]
        active = active[~hit & (path[:, -1] < limit)]
        chunk = min(2 * chunk, 512)
    return escaped


def _targets(A: np.ndarray, a: int, horizon: Optional[int]) -> Tuple[np.ndarray, int]:
    targets = A[A > a] - a
    if horizon is not None:
        targets = targets[targets <= horizon]
    limit = int(targets[-1]) if targets.size else 0
    return targets, limit


def escape_probability(A, a: int, law: StepLaw, reps: int, rng: np.random.Generator,
                       horizon: Optional[int] = None) -> Tuple[float, float]:
    """
    Monte Carlo probability that the walk from a never visits A∖{a}.

    Args:
        A: Finite set of integers
        a: Starting point, must belong to A
        law: Step law of the walk
        reps: Number of walks
        rng: Random stream
        horizon: Ignore points further than this displacement from a (None keeps all)

    Returns:
        Tuple of (estimate, standard error)
    """
    A = _as_set(A)
    if not np.any(A == a):
        raise DomainError(f"starting point {a} is not in the set")
    targets, limit = _targets(A, a, horizon)
    if targets.size == 0:
        return 1.0, 0.0
    escaped = _escape_walks(targets, limit, law, reps, rng)
    p = float(escaped.mean())
    return p, float(np.sqrt(p * (1.0 - p) / reps))


def capacity(A, law: StepLaw, reps_per_point: int = 200, rng: Optional[np.random.Generator] = None,
             horizon: Optional[int] = None, rebalance: bool = True) -> CapacityEstimate:
    """
    Monte Carlo capacity with standard error from independence across points.

    With rebalance, a quarter of the budget is a pilot run and the rest goes to points
    whose escape variance p(1−p) is largest.
    """
    A = _as_set(A)
    if A.size == 0:
        raise DomainError("capacity of an empty set is not estimated")
    if rng is None:
        rng = np.random.default_rng()
    span = int(A[-1] - A[0]) if horizon is None else int(horizon)
    if A.size == 1:
        return CapacityEstimate(1.0, 0.0, span, 0)

    plans = [_targets(A, a, horizon) for a in A]
    pilot = max(10, reps_per_point // 4) if rebalance else reps_per_point
    escapes = np.zeros(A.size)
    trials = np.zeros(A.size)
    for i, (targets, limit) in enumerate(plans):
        if targets.size == 0:
            escapes[i], trials[i] = 1.0, 1.0
            continue
        escapes[i] = _escape_walks(targets, limit, law, pilot, rng).sum()
        trials[i] = pilot

    if rebalance:
        open_points = np.array([t.size > 0 for t, _ in plans])
        p = (escapes + 0.5) / (trials + 1.0)
        weights = np.where(open_points, np.sqrt(p * (1.0 - p)), 0.0)
        extra = reps_per_point * int(open_points.sum()) - pilot * int(open_points.sum())
        if extra > 0 and weights.sum() > 0:
            allocation = np.floor(extra * weights / weights.sum()).astype(int)
            for i in np.flatnonzero(allocation):
                targets, limit = plans[i]
                escapes[i] += _escape_walks(targets, limit, law, int(allocation[i]), rng).sum()
                trials[i] += allocation[i]

    p = escapes / trials
    variance = np.where(trials > 1, p * (1.0 - p) / trials, 0.0)
    return CapacityEstimate(float(p.sum()), float(np.sqrt(variance.sum())), span, int(trials.sum()))


def escape_probability_exact(A, a: int, law: StepLaw) -> float:
    """Escape probability from the first-hit system Σ_c h(c)u(b−c) = u(b−a) over later points."""
    A = _as_set(A)
    if not np.any(A == a):
        raise DomainError(f"starting point {a} is not in the set")
    later = A[A > a]
    if later.size == 0:
        return 1.0
    u = law.renewal_sequence(int(later[-1] - a))
    diff = later[:, None] - later[None, :]
    U = np.where(diff >= 0, u[np.maximum(diff, 0)], 0.0)
    first_hit = solve_triangular(U, u[later - a], lower=True)
    return float(1.0 - first_hit.sum())


def capacity_exact(A, law: StepLaw) -> float:
    """cap(A) with every escape probability solved exactly; 0 for the empty set."""
    A = _as_set(A)
    if A.size == 0:
        return 0.0
    u = law.renewal_sequence(int(A[-1] - A[0]))
    diff = A[:, None] - A[None, :]
    U = np.where(diff >= 0, u[np.maximum(diff, 0)], 0.0)
    total = 1.0
    for s in range(A.size - 1):
        first_hit = solve_triangular(U[s + 1:, s + 1:], U[s + 1:, s], lower=True)
        total += 1.0 - first_hit.sum()
    return float(total)


def truncation_displacement(law: StepLaw, tol: float = 1e-4) -> int:
    """
    Displacement M beyond which two walks from 0 meet with probability below tol.

    Uses Σ_{m>M} u(m)² ≈ A² M^{2β−1}/(1−2β) with u(m) ~ A m^{β−1}.
    """
    amplitude = 1.0 / (special.gamma(law.beta) * special.gamma(1.0 - law.beta) * law.L(0))
    exponent = 2.0 * law.beta - 1.0
    M = (tol * (1.0 - 2.0 * law.beta) / amplitude ** 2) ** (1.0 / exponent)
    return int(min(max(M, 1000.0), 1e12))


def _intersection_route(law: StepLaw, reps: int, rng: np.random.Generator, M: int) -> CapacityEstimate:
    successes = 0
    remaining = reps
    while remaining > 0:
        batch = min(remaining, 1024)
        zeros = np.zeros(batch, dtype=np.int64)
        first = walk_ranges(zeros, M, law, rng)
        second = walk_ranges(zeros, M, law, rng)
        successes += sum(np.intersect1d(a, b, assume_unique=True).size == 1 for a, b in zip(first, second))
        remaining -= batch
    p = successes / reps
    return CapacityEstimate(p, float(np.sqrt(p * (1.0 - p) / reps)), M, reps)


def _later_offsets(steps: np.ndarray, j: int, M: int) -> Tuple[np.ndarray, bool]:
    """Offsets of points after index j within displacement M; flag whether the set ended first."""
    window = 64
    while True:
        offsets = np.cumsum(steps[j:j + window])
        if offsets.size < window or offsets[-1] > M:
            inside = offsets[offsets <= M]
            return inside, offsets.size == inside.size
        window *= 2


def _capacity_ratio_route(law: StepLaw, n: int, reps: int, rng: np.random.Generator, M: int) -> CapacityEstimate:
    draws = max(1, min(reps // 1000, 100))
    per_draw = max(1, reps // draws)
    means = np.empty(draws)
    for d in range(draws):
        steps = law.sample_steps(n - 1, rng, cap=M + 1)
        picks = rng.integers(0, n, per_draw)
        escaped = 0
        for j in picks:
            targets, ended = _later_offsets(steps, int(j), M)
            if targets.size == 0:
                escaped += 1
                continue
            limit = int(targets[-1]) if ended else M
            escaped += int(_escape_walks(targets, limit, law, 1, rng)[0])
        means[d] = escaped / per_draw
    value = float(means.mean())
    if draws >= 5:
        se = float(means.std(ddof=1) / np.sqrt(draws))
    else:
        se = float(np.sqrt(value * (1.0 - value) / (draws * per_draw)))
    return CapacityEstimate(value, se, M, draws * per_draw)


def estimate_c_infty(law: StepLaw, n: int, reps: int, rng: np.random.Generator,
                     tol: float = 1e-4) -> CInfinityEstimates:
    """
    Estimate c_∞ by two Monte Carlo routes plus the renewal series.

    Route (a) is the frequency with which two walks from 0 share only the origin, followed to
    the displacement where the remaining meeting probability drops below tol. Route (b) is
    cap(A₀(0,n))/n, estimated by escape walks from uniformly chosen points of range draws.
    """
    if n < 1000:
        raise DomainError(f"c_infty needs n >= 1000, got {n}")
    M = truncation_displacement(law, tol)
    return CInfinityEstimates(
        intersection=_intersection_route(law, reps, rng, M),
        capacity_ratio=_capacity_ratio_route(law, n, reps, rng, M),
        series=c_infty_series(law),
    )


def c_infty_series(law: StepLaw, size: int = 2 ** 20 - 1) -> float:
    """c_∞ = 1/Σ_m u(m)², the meeting set of two walks being a renewal set with sequence u²."""
    u = law.renewal_sequence(size)
    amplitude = 1.0 / (special.gamma(law.beta) * special.gamma(1.0 - law.beta) * law.L(size))
    tail = amplitude ** 2 * (size + 0.5) ** (2.0 * law.beta - 1.0) / (1.0 - 2.0 * law.beta)
    return float(1.0 / (np.sum(u ** 2) + tail))


def gap_decoupling(n: int, law: StepLaw, gamma_exp: float, rng: np.random.Generator) -> float:
    """
    |cap(V₁∪V₂) − cap(V₁) − cap(V₂)|/#V₁ for V₁ = A₀∩[0, n/2], V₂ = A₀∩[n/2 + (log n)^γ, n].
    """
    if gamma_exp <= 0:
        raise DomainError(f"gap exponent must be positive, got {gamma_exp}")
    gap = int(np.ceil(np.log(n) ** gamma_exp))
    points = walk_ranges(np.zeros(1, dtype=np.int64), n, law, rng)[0]
    first = points[points <= n // 2]
    second = points[points >= n // 2 + gap]
    joined = np.union1d(first, second)
    defect = capacity_exact(joined, law) - capacity_exact(first, law) - capacity_exact(second, law)
    return abs(defect) / first.size


def capacity_ratio(law: StepLaw, n: int, reps: int, rng: np.random.Generator,
                   tol: float = 1e-4) -> CapacityEstimate:
    """cap(A₀(0,n))/n on its own, for watching it settle as n grows."""
    if n < 1000:
        raise DomainError(f"c_infty needs n >= 1000, got {n}")
    return _capacity_ratio_route(law, n, reps, rng, truncation_displacement(law, tol))
