"""
Deterministic functions of the semi-exponential model: tails, their inverses, the auxiliary
function h, normalizing sequences and the constants of the limit law.

Tails are available in log form because ν̄(x) underflows double precision well before
the levels the normalizers reach.
"""

import math
from dataclasses import dataclass, asdict
from functools import lru_cache
from typing import Dict, Any, Optional

import numpy as np
from scipy import integrate, optimize, special

from utils import DomainError
from renewal import StepLaw

RTOL = 1e-12
L_ALPHA_KINDS = ("constant", "logpower")


@dataclass(frozen=True)
class ModelParams:
    """Parameters (α, β, γ, x0) plus the slowly varying choices L_α and L."""
    alpha: float = 0.5
    beta: float = 0.25
    gamma: float = 1.0
    x0: float = 1.0
    L_alpha_kind: str = "constant"
    L_alpha_value: float = 1.0
    L_kind: str = "constant"
    L_value: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.beta < 0.5:
            raise DomainError(f"beta must lie in (0, 1/2), got {self.beta}")
        if self.gamma <= 0.0:
            raise DomainError(f"gamma must be positive, got {self.gamma}")
        if self.x0 < 1.0:
            raise DomainError(f"x0 must be >= 1, got {self.x0}")
        if self.L_alpha_kind not in L_ALPHA_KINDS:
            raise DomainError(f"L_alpha_kind must be one of {L_ALPHA_KINDS}, got {self.L_alpha_kind!r}")
        if self.L_alpha_kind == "constant" and self.L_alpha_value <= 0.0:
            raise DomainError(f"constant L_alpha must be positive, got {self.L_alpha_value}")
        if self.L_alpha_kind == "logpower" and abs(self.L_alpha_value) > 1.0:
            raise DomainError(f"log-power exponent must satisfy |p| <= 1, got {self.L_alpha_value}")
        if self.L_kind != "constant":
            raise DomainError(f"L_kind must be 'constant', got {self.L_kind!r}")
        if self.L_value < 1.0:
            raise DomainError(f"constant L must be >= 1, got {self.L_value}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ModelParams':
        known = {k: data[k] for k in cls.__dataclass_fields__ if k in data}
        return cls(**known)

    def L_alpha(self, u):
        """L_α(u): the constant c, or max(1, log u)^p."""
        u = np.asarray(u, dtype=float)
        if self.L_alpha_kind == "constant":
            return np.full_like(u, self.L_alpha_value)
        return np.maximum(1.0, np.log(u)) ** self.L_alpha_value


# Cumulative hazard q(x) = ∫₁ˣ du/(u^{1−α} L_α(u)), so that H̄ = e^{−q}.

def _q_logpower_scalar(x: float, alpha: float, power: float) -> float:
    head = (min(x, math.e) ** alpha - 1.0) / alpha
    if x <= math.e:
        return head
    # substitute u = e^s on (e, x]
    tail, _ = integrate.quad(lambda s: math.exp(alpha * s) * s ** (-power), 1.0, math.log(x),
                             epsabs=0.0, epsrel=RTOL, limit=200)
    return head + tail


def cumulative_hazard(x, p: ModelParams):
    x = np.asarray(x, dtype=float)
    if np.any(x < 1.0):
        raise DomainError("tail functions are defined for x >= 1")
    if p.L_alpha_kind == "constant":
        return np.expm1(p.alpha * np.log(x)) / (p.alpha * p.L_alpha_value)
    q = np.vectorize(_q_logpower_scalar, otypes=[float])
    return q(x, p.alpha, p.L_alpha_value)


@lru_cache(maxsize=4096)
def _q_inverse_logpower_scalar(ell: float, alpha: float, power: float) -> float:
    knee = (math.e ** alpha - 1.0) / alpha
    if ell <= knee:
        return (1.0 + alpha * ell) ** (1.0 / alpha)
    # search in s = log x, where q is smooth and increasing
    objective = lambda s: _q_logpower_scalar(math.exp(s), alpha, power) - ell
    hi = 2.0
    while objective(hi) < 0.0:
        hi *= 2.0
    s = optimize.brentq(objective, 1.0, hi, xtol=1e-14, rtol=RTOL, maxiter=500)
    return math.exp(s)


def cumulative_hazard_inverse(ell, p: ModelParams):
    """x ≥ 1 with q(x) = ℓ, for ℓ ≥ 0."""
    ell = np.asarray(ell, dtype=float)
    if np.any(ell < 0.0):
        raise DomainError("hazard levels must be nonnegative")
    if p.L_alpha_kind == "constant":
        return np.exp(np.log1p(p.alpha * p.L_alpha_value * ell) / p.alpha)
    inverse = np.vectorize(_q_inverse_logpower_scalar, otypes=[float])
    return inverse(ell, p.alpha, p.L_alpha_value)


def log_tail_H_bar(x, p: ModelParams):
    return -cumulative_hazard(x, p)


def tail_H_bar(x, p: ModelParams):
    """
    H̄(x) = exp{−∫₁ˣ du/(u^{1−α}L_α(u))} for x ≥ 1.

    Args:
        x: Level(s), at least 1
        p: Model parameters

    Returns:
        Tail probability (array-valued for array input)
    """
    return np.exp(log_tail_H_bar(x, p))


def log_tail_nu_bar(x, p: ModelParams):
    return math.log(p.gamma) + log_tail_H_bar(x, p)


def tail_nu_bar(x, p: ModelParams):
    """ν̄(x) = γ·H̄(x); the model only ever uses it on [x0, ∞)."""
    return np.exp(log_tail_nu_bar(x, p))


def V_log(log_y, p: ModelParams):
    """V(y) = inf{s ≥ 1 : 1/ν̄(s) ≥ y} as a function of log y."""
    level = np.asarray(log_y, dtype=float) + math.log(p.gamma)
    return cumulative_hazard_inverse(np.maximum(level, 0.0), p)


def V(y, p: ModelParams):
    """(1/ν̄)^←(y) for y > 0."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise DomainError("V is defined for y > 0")
    return V_log(np.log(y), p)


def V1_log(log_y, p: ModelParams):
    """Truncated V: zero for y ≤ 1/ν̄(x0)."""
    log_y = np.asarray(log_y, dtype=float)
    cutoff = -float(log_tail_nu_bar(p.x0, p))
    return np.where(log_y > cutoff, V_log(np.maximum(log_y, cutoff), p), 0.0)


def V1(y, p: ModelParams):
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise DomainError("V1 is defined for y > 0")
    return V1_log(np.log(y), p)


def G_log(log_y, p: ModelParams):
    """G = (1/(γH̄))^← on y ≥ 1/γ, from log y."""
    level = np.asarray(log_y, dtype=float) + math.log(p.gamma)
    if np.any(level < -1e-12):
        raise DomainError("G is defined for y >= 1/gamma")
    return cumulative_hazard_inverse(np.maximum(level, 0.0), p)


def G(y, p: ModelParams):
    """Since ν̄ = γH̄ exactly, G agrees with V on [1/γ, ∞)."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0.0):
        raise DomainError("G is defined for y >= 1/gamma")
    return G_log(np.log(y), p)


def h(x, p: ModelParams):
    """h(x) = x^{1−α} L_α(x)."""
    x = np.asarray(x, dtype=float)
    if np.any(x < 1.0):
        raise DomainError("h is defined for x >= 1")
    return x ** (1.0 - p.alpha) * p.L_alpha(x)


def scrL(x, p: ModelParams):
    """𝓛(x) = x^{−1/α} q^{−1}(x), so that G(e^x/γ) = x^{1/α}𝓛(x)."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0.0):
        raise DomainError("scrL is defined for x > 0")
    return x ** (-1.0 / p.alpha) * cumulative_hazard_inverse(x, p)


def pi_variation(t: float, log_x: float, p: ModelParams) -> float:
    """(V(tx) − V(x))/h(V(x)); tends to log t."""
    base = V_log(log_x, p)
    return float((V_log(log_x + math.log(t), p) - base) / h(base, p))


def C_ab(p: ModelParams) -> float:
    """C_{α,β} = ((1−β)/β)^{1/α − 1} > 1."""
    return ((1.0 - p.beta) / p.beta) ** (1.0 / p.alpha - 1.0)


def marginal_exponent(p: ModelParams) -> float:
    """Self-affinity exponent 1 − β + β/C of the limit marginal."""
    return 1.0 - p.beta + p.beta / C_ab(p)


def K_ab(p: ModelParams, ml_moment_value: float) -> float:
    """
    K(α,β) = (1−β)Γ(1−1/C)B(1−β, 1+β/C)·E(Z^←(1))^{1/C}.

    Args:
        p: Model parameters
        ml_moment_value: The Mittag-Leffler moment E(Z^←(1))^{1/C}
    """
    if ml_moment_value <= 0.0:
        raise DomainError(f"moment must be positive, got {ml_moment_value}")
    C = C_ab(p)
    return (1.0 - p.beta) * special.gamma(1.0 - 1.0 / C) * special.beta(1.0 - p.beta, 1.0 + p.beta / C) * ml_moment_value


def _psi_scale(p: ModelParams) -> float:
    return (1.0 - p.beta) ** (1.0 / p.alpha) + p.beta ** (1.0 / p.alpha)


def _check_r(r, p: ModelParams) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r >= 1.0 - p.beta):
        raise DomainError(f"r must lie in [0, {1.0 - p.beta})")
    return r


def psi(r, p: ModelParams):
    """ψ(r) = ((1−β)^{1/α} + β^{1/α})/(1−β−r)^{1/α} − 1."""
    r = _check_r(r, p)
    return _psi_scale(p) / (1.0 - p.beta - r) ** (1.0 / p.alpha) - 1.0


def psi_tilde(r, p: ModelParams):
    """ψ̃(r) = (1−β−r)(⌊ψ⌋ + (ψ−⌊ψ⌋)^α)."""
    value = psi(r, p)
    whole = np.floor(value)
    return (1.0 - p.beta - np.asarray(r, dtype=float)) * (whole + (value - whole) ** p.alpha)


def psi_tilde_exceeding(level: float, p: ModelParams) -> Optional[float]:
    """
    A point r < 1−β with ψ̃(r) > level.

    Uses ψ̃(r) ≥ ε(ψ(r) − 1) = Aε^{1−1/α} − 2ε with ε = 1−β−r. None when α ≥ 1 (ψ̃ stays
    bounded) or when the point sits closer to 1−β than double precision resolves.
    """
    if p.alpha >= 1.0:
        return None
    eps = ((level + 2.0) / _psi_scale(p)) ** (p.alpha / (p.alpha - 1.0)) / 2.0
    eps = min(eps, (1.0 - p.beta) / 2.0)
    if eps < 1e-12:
        return None
    return (1.0 - p.beta) - eps


def r_m(m, p: ModelParams):
    """Root of ψ(r) = m."""
    m = np.asarray(m, dtype=float)
    if np.any(m < 1):
        raise DomainError("m must be >= 1")
    return 1.0 - p.beta - (_psi_scale(p) / (m + 1.0)) ** p.alpha


@dataclass(frozen=True)
class NormalizerTable:
    n: int
    w_n: float
    theta_n: float
    a_n: float
    b_n: float
    c_inf: float

    def normalize(self, raw):
        return (np.asarray(raw, dtype=float) - self.b_n) / self.a_n


def normalizers(n: int, c_inf: float, p: ModelParams, law: Optional[StepLaw] = None) -> NormalizerTable:
    """a_n = h(V(w_n)) and b_n = V(w_n) + V(c_inf·ϑ_n)."""
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not 0.0 < c_inf < 1.0:
        raise DomainError(f"c_inf must lie in (0, 1), got {c_inf}")
    law = law or StepLaw.from_params(p)
    w_n = law.wandering_rate(n)
    theta_n = law.vartheta(n)
    v_w = float(V(w_n, p))
    a_n = float(h(v_w, p))
    b_n = v_w + float(V(c_inf * theta_n, p))
    return NormalizerTable(n=n, w_n=w_n, theta_n=theta_n, a_n=a_n, b_n=b_n, c_inf=c_inf)


# Tail of a sum of truncated jumps

def sample_truncated_jumps(p: ModelParams, b: float, size, rng: np.random.Generator) -> np.ndarray:
    """Draws from ν restricted to (1, b), normalised, by inverting H̄."""
    if b <= 1.0:
        raise DomainError(f"truncation level must exceed 1, got {b}")
    floor = float(tail_H_bar(b, p))
    u = rng.random(size)
    return cumulative_hazard_inverse(-np.log(floor + u * (1.0 - floor)), p)


def truncated_sum_tail_mc(p: ModelParams, b: float, d: int, y: float, reps: int,
                          rng: np.random.Generator):
    """Monte Carlo P{ξ₁ + … + ξ_d ≥ y} for i.i.d. ξ from the truncated law; returns (estimate, se)."""
    total = sample_truncated_jumps(p, b, (reps, d), rng).sum(axis=1)
    prob = float(np.mean(total >= y))
    return prob, float(np.sqrt(prob * (1.0 - prob) / reps))


def cvx_envelope(p: ModelParams, b: float, m: int, y: float) -> float:
    """H̄(b)^m H̄(y − mb), for y ∈ (mb + 1, (m+1)b]."""
    rest = y - m * b
    if rest < 1.0 or rest > b:
        raise DomainError(f"y must lie in ({m * b + 1}, {(m + 1) * b}]")
    return float(np.exp(m * log_tail_H_bar(b, p) + log_tail_H_bar(rest, p)))


def cvx_bound(p: ModelParams, b: float, m: int, y: float) -> float:
    """
    Explicit bound on P{ξ₁ + … + ξ_{m+1} ≥ y} for y ∈ (mb + 1, (m+1)b].

    The density of each ξ is q′e^{−q}/(1 − H̄(b)) on (1, b), and Σq(zᵢ) over the region is
    smallest at m coordinates equal to b by concavity of q.
    """
    q_b = float(cumulative_hazard(b, p))
    scale = q_b / (1.0 - float(tail_H_bar(b, p)))
    return scale ** (m + 1) * cvx_envelope(p, b, m, y)
