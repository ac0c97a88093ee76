"""
The limiting random sup-measure on [0,1]: a truncated point sampler, its closed-form marginal,
the joint law of increments and the comparison with a time-changed Gumbel extremal process.

A realization is the family of levels

    Λ_{k,i} = −log Γ_k + (−log Γ_{k,i} + log Z_k^{*←}(1))/C,   located at J_{k,i} ∈ [0,1],

for k ≤ K clusters with I points each.
"""

from dataclasses import dataclass, replace
from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from analytic import ModelParams, C_ab, marginal_exponent
from subordinator import sample_regenerative, sample_J_points, sample_inverse_at, sample_inverse_at_one
from utils import DomainError, DegeneratePath

Interval = Tuple[float, float]


@dataclass(frozen=True, eq=False)
class LimitSample:
    """
    One truncated realization.

    j_points is None when the sample was drawn without locations; such samples can only be
    evaluated on sets containing [0,1].
    """
    params: ModelParams
    gamma_k: np.ndarray
    gamma_ki: np.ndarray
    z_inv_1: np.ndarray
    j_points: Optional[np.ndarray]
    lambdas: np.ndarray
    truncation: Tuple[int, int]
    truncation_bound: float

    def truncate(self, K: int, I: int) -> 'LimitSample':
        """The same realization with only the first K clusters and I points per cluster."""
        if K > self.truncation[0] or I > self.truncation[1]:
            raise DomainError(f"cannot extend truncation {self.truncation} to {(K, I)}")
        smaller = replace(
            self,
            gamma_k=self.gamma_k[:K],
            gamma_ki=self.gamma_ki[:K, :I],
            z_inv_1=self.z_inv_1[:K],
            j_points=None if self.j_points is None else self.j_points[:K, :I],
            lambdas=self.lambdas[:K, :I],
            truncation=(K, I),
            truncation_bound=1.0,
        )
        return replace(smaller, truncation_bound=truncation_bound_for(smaller, (0.0, 1.0)))


def expected_shifted_inverse(beta: float) -> float:
    """E Z*^←(1) = (1−β)B(1−β, 1+β)/Γ(1+β)."""
    return float((1.0 - beta) * special.beta(1.0 - beta, 1.0 + beta) / special.gamma(1.0 + beta))


def _levels(gamma_k: np.ndarray, gamma_ki: np.ndarray, z_inv_1: np.ndarray, C: float) -> np.ndarray:
    return -np.log(gamma_k)[:, None] + (-np.log(gamma_ki) + np.log(z_inv_1)[:, None]) / C


def sample_limit(p: ModelParams, K: int, I: int, rng: np.random.Generator, with_points: bool = True,
                 epsilon: float = 1e-3, dt: float = 1e-3) -> LimitSample:
    """
    Draw one truncated realization.

    Args:
        p: Model parameters
        K: Number of clusters kept
        I: Number of points kept per cluster
        rng: Random stream
        with_points: Sample regenerative sets and J locations; otherwise Z*^←(1) is drawn exactly
        epsilon: Resolution of the regenerative set samples
        dt: Local-time step of the subordinator paths

    Returns:
        LimitSample with its truncation bound for [0,1]
    """
    if K < 1 or I < 1:
        raise DomainError(f"K and I must be >= 1, got {K}, {I}")
    C = C_ab(p)
    gamma_k = np.cumsum(rng.standard_exponential(K))
    gamma_ki = np.cumsum(rng.standard_exponential((K, I)), axis=1)
    if with_points:
        z_inv_1 = np.empty(K)
        j_points = np.empty((K, I))
        for k in range(K):
            while True:
                s = sample_regenerative(p.beta, epsilon, True, rng, dt=dt)
                try:
                    j_points[k] = sample_J_points(s, I, rng)
                    break
                except DegeneratePath:
                    continue
            z_inv_1[k] = s.inv_at_1
    else:
        z_inv_1 = sample_inverse_at_one(p.beta, rng, K, shifted=True)
        j_points = None

    sample = LimitSample(
        params=p,
        gamma_k=gamma_k,
        gamma_ki=gamma_ki,
        z_inv_1=z_inv_1,
        j_points=j_points,
        lambdas=_levels(gamma_k, gamma_ki, z_inv_1, C),
        truncation=(K, I),
        truncation_bound=1.0,
    )
    return replace(sample, truncation_bound=truncation_bound_for(sample, (0.0, 1.0)))


def _as_interval(B: Union[float, Interval]) -> Interval:
    if np.isscalar(B):
        return 0.0, float(B)
    lo, hi = B
    if lo > hi:
        raise DomainError(f"interval ({lo}, {hi}) is reversed")
    return float(lo), float(hi)


def eval_M(s: LimitSample, B: Union[float, Interval]) -> float:
    """𝓜(B) for a closed interval B, or 𝕄(t) = 𝓜([0,t]) for a scalar t; −∞ if no point lies in B."""
    lo, hi = _as_interval(B)
    if lo <= 0.0 and hi >= 1.0:
        return float(s.lambdas.max())
    if s.j_points is None:
        raise DomainError("sample was drawn without locations")
    inside = (s.j_points >= lo) & (s.j_points <= hi)
    return float(s.lambdas[inside].max()) if inside.any() else float('-inf')


def truncation_bound_for(s: LimitSample, B: Union[float, Interval]) -> float:
    """
    Upper bound on the probability that dropped points exceed the retained maximum over B.

    Clusters beyond K contribute a Poisson count with mean E Z*^←(1)·e^{−Cℓ}Γ_K^{−(C−1)}/(C−1);
    points beyond I in cluster k exceed ℓ only if Γ_{k,I} < Z_k e^{C(x_k−ℓ)}.
    """
    level = eval_M(s, B)
    if not np.isfinite(level):
        return 1.0
    C = C_ab(s.params)
    outer = expected_shifted_inverse(s.params.beta) * np.exp(-C * level) * s.gamma_k[-1] ** (-(C - 1.0)) / (C - 1.0)
    x_k = -np.log(s.gamma_k)
    inner = np.maximum(0.0, s.z_inv_1 * np.exp(C * (x_k - level)) - s.gamma_ki[:, -1]).sum()
    return float(min(1.0, outer + inner))


def marginal_cdf(t, x, p: ModelParams, K_value: float):
    """P{𝕄(t) ≤ x} = exp{−K t^{1−β+β/C} e^{−x}}."""
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0.0):
        raise DomainError("marginal_cdf needs t > 0")
    return np.exp(-K_value * t ** marginal_exponent(p) * np.exp(-np.asarray(x, dtype=float)))


def time_changed_gumbel_prob(t1: float, t2: float, x1: float, x2: float, p: ModelParams, K_value: float) -> float:
    """P{Y(t1^ρ) ≤ x1, Y(t2^ρ) ≤ x2} for the Gumbel extremal process Y with intensity K, ρ = 1−β+β/C."""
    if not 0.0 < t1 < t2:
        raise DomainError("need 0 < t1 < t2")
    rho = marginal_exponent(p)
    return float(np.exp(-K_value * (t1 ** rho * np.exp(-min(x1, x2)) + (t2 ** rho - t1 ** rho) * np.exp(-x2))))


@dataclass
class ProbabilityEstimate:
    value: float
    se: float


def _quadrature(breaks: Sequence[float], nodes: int):
    """Gauss-Legendre nodes in u over [0, breaks[-1]] split at every break point."""
    per_piece = max(8, nodes // len(breaks))
    base_x, base_w = leggauss(per_piece)
    us, ws = [], []
    lo = 0.0
    for hi in breaks:
        us.append(lo + (hi - lo) * (base_x + 1.0) / 2.0)
        ws.append(base_w * (hi - lo) / 2.0)
        lo = hi
    return np.concatenate(us), np.concatenate(ws)


def _increment_integrals(ts: np.ndarray, weights_x: np.ndarray, p: ModelParams, reps: int,
                         rng: np.random.Generator, nodes: int, dt: float, batch: int = 128):
    """
    Per-path values of ∫₀^{t_k} (1−β)y^{−β}[Σᵢ wᵢ (Z^←((tᵢ−y)₊) − Z^←((tᵢ₋₁−y)₊))]^{1/C} dy
    after substituting u = y^{1−β}, which removes the y^{−β} factor.
    """
    C = C_ab(p)
    exponent = 1.0 - p.beta
    u, w = _quadrature(list(ts ** exponent), nodes)
    y = u ** (1.0 / exponent)
    bounds = np.concatenate(([0.0], ts))
    levels = np.maximum(bounds[:, None] - y[None, :], 0.0)
    out = np.empty(reps)
    done = 0
    while done < reps:
        size = min(batch, reps - done)
        z = sample_inverse_at(p.beta, levels.ravel(), size, rng, dt=dt).reshape(size, bounds.size, y.size)
        increments = np.diff(z, axis=1)
        mass = np.einsum('i,riu->ru', weights_x, increments)
        out[done:done + size] = np.maximum(mass, 0.0) ** (1.0 / C) @ w
        done += size
    return out


def joint_increment_prob(ts: Sequence[float], xs: Sequence[float], p: ModelParams, mc_reps: int,
                         rng: np.random.Generator, nodes: int = 2048, dt: float = 1e-3) -> ProbabilityEstimate:
    """
    P{𝓜((tᵢ₋₁, tᵢ]) ≤ xᵢ for all i} with t₀ = 0, by quadrature in y and Monte Carlo over shared paths.

    The standard error comes from the path average by the delta method.
    """
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or ts.size != xs.size:
        raise DomainError("need matching nonempty partitions and levels")
    if ts[0] <= 0.0 or np.any(np.diff(ts) <= 0.0):
        raise DomainError("partition must be strictly increasing and positive")
    C = C_ab(p)
    weights_x = np.exp(-C * xs)
    if not np.any(weights_x > 0.0):
        return ProbabilityEstimate(1.0, 0.0)
    integrals = _increment_integrals(ts, weights_x, p, mc_reps, rng, nodes, dt)
    mean = float(integrals.mean())
    se = float(integrals.std(ddof=1) / np.sqrt(mc_reps)) if mc_reps > 1 else 0.0
    factor = special.gamma(1.0 - 1.0 / C)
    value = float(np.exp(-factor * mean))
    return ProbabilityEstimate(value, value * factor * se)


def convexity_gap(t1: float, t2: float, t3: float, C: float) -> float:
    """(t₂ − t₁ + t₃)^C − (t₂^C − t₁^C + t₃^C); positive for C > 1, zero for C = 1."""
    if not (0.0 < t1 < t2 and t1 < t3):
        raise DomainError("need 0 < t1 < t2 and t1 < t3")
    return (t2 - t1 + t3) ** C - (t2 ** C - t1 ** C + t3 ** C)


@dataclass
class CounterexampleResult:
    gap: float
    se: float
    split: float
    joint: float
    scalar_ok: bool


def counterexample_check(t1: float, t2: float, x1: float, x2: float, p: ModelParams, mc_reps: int,
                         rng: np.random.Generator, nodes: int = 512, dt: float = 1e-3,
                         triples: int = 1000) -> CounterexampleResult:
    """
    Compare the split-moment and joint-moment integrals on shared paths.

    With Z₁ = Z^←((t₁−y)₊) and Z₂ = Z^←((t₂−y)₊), the split integrand is
    e^{−x₁}Z₁^{1/C} + e^{−x₂}(Z₂^{1/C} − Z₁^{1/C}) and the joint integrand is
    (e^{−Cx₁}Z₁ + e^{−Cx₂}(Z₂ − Z₁))^{1/C}. A time-changed Gumbel extremal process would make
    them equal; convexity makes the split side larger whenever x₁ < x₂.
    """
    if not 0.0 < t1 < t2:
        raise DomainError("need 0 < t1 < t2")
    if x1 > x2:
        raise DomainError("need x1 <= x2")
    C = C_ab(p)
    exponent = 1.0 - p.beta
    u, w = _quadrature([t1 ** exponent, t2 ** exponent], nodes)
    y = u ** (1.0 / exponent)
    levels = np.concatenate((np.maximum(t1 - y, 0.0), np.maximum(t2 - y, 0.0)))

    splits = np.empty(mc_reps)
    joints = np.empty(mc_reps)
    done = 0
    while done < mc_reps:
        size = min(128, mc_reps - done)
        z = sample_inverse_at(p.beta, levels, size, rng, dt=dt).reshape(size, 2, y.size)
        z1, z2 = z[:, 0], z[:, 1]
        split = np.exp(-x1) * z1 ** (1.0 / C) + np.exp(-x2) * (z2 ** (1.0 / C) - z1 ** (1.0 / C))
        joint = (np.exp(-C * x1) * z1 + np.exp(-C * x2) * (z2 - z1)) ** (1.0 / C)
        splits[done:done + size] = split @ w
        joints[done:done + size] = joint @ w
        done += size
    gaps = splits - joints

    tri = 0.01 + rng.uniform(0.0, 1.0, (triples, 3))
    t_a = tri[:, 0]
    scalar_ok = all(convexity_gap(a, a + b, a + c, C) > 0.0 for a, b, c in zip(t_a, tri[:, 1], tri[:, 2]))

    se = float(gaps.std(ddof=1) / np.sqrt(mc_reps)) if mc_reps > 1 else 0.0
    return CounterexampleResult(
        gap=float(gaps.mean()),
        se=se,
        split=float(splits.mean()),
        joint=float(joints.mean()),
        scalar_ok=scalar_ok,
    )


def time_changed_gumbel_increments(ts: Sequence[float], xs: Sequence[float], p: ModelParams,
                                   K_value: float) -> float:
    """
    P{Y((t_{i−1}^ρ, t_i^ρ]) ≤ x_i for all i} for the Gumbel extremal sup-measure Y with intensity K.

    The same event for 𝓜 has a larger probability whenever the x_i differ.
    """
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    if ts.size == 0 or ts.size != xs.size or ts[0] <= 0.0 or np.any(np.diff(ts) <= 0.0):
        raise DomainError("partition must be nonempty, positive and strictly increasing")
    widths = np.diff(np.concatenate(([0.0], ts ** marginal_exponent(p))))
    return float(np.exp(-K_value * np.sum(widths * np.exp(-xs))))
