"""
The step law of the renewal walks and the walks themselves.

Both the zero sets and the capacities are built on a nondecreasing walk whose steps
have tail F̄(n) = min(1, c·(n+1)^{−β}).
"""

from typing import List, Optional

import numpy as np
from scipy import special
from scipy.signal import fftconvolve

from utils import DomainError

MAX_STEP = 2 ** 53


class StepLaw:
    """
    Return-time law with tail F̄(n) = min(1, c·(n+1)^{−β}).

    c ≥ 1 keeps F̄(0) = 1, so every step is at least 1. Prefix sums of F̄ and the
    renewal sequence are cached and only ever grow.
    """

    def __init__(self, beta: float, L_value: float = 1.0):
        if not 0.0 < beta < 0.5:
            raise DomainError(f"beta must lie in (0, 1/2), got {beta}")
        if L_value < 1.0:
            raise DomainError(f"step law constant must be >= 1, got {L_value}")
        self.beta = float(beta)
        self.L_value = float(L_value)
        self._prefix = np.cumsum(self.tail(np.arange(1024)))
        self._renewal = np.ones(1)

    @classmethod
    def from_params(cls, params) -> 'StepLaw':
        """Step law of a ModelParams instance."""
        return cls(params.beta, params.L_value)

    def __repr__(self) -> str:
        return f"StepLaw(beta={self.beta}, L_value={self.L_value})"

    def L(self, n) -> float:
        return self.L_value

    def tail(self, n):
        """F̄(n) = P{φ > n}."""
        n = np.asarray(n, dtype=float)
        return np.minimum(1.0, self.L_value * (n + 1.0) ** (-self.beta))

    def pmf(self, n):
        """P{φ = n}; zero for n < 1."""
        n = np.asarray(n, dtype=float)
        return np.where(n >= 1, self.tail(n - 1) - self.tail(n), 0.0)

    def sample_steps(self, size, rng: np.random.Generator, cap: Optional[int] = None) -> np.ndarray:
        """
        Draw i.i.d. steps by inverting F̄.

        Args:
            size: Output shape
            rng: Random stream
            cap: Steps above cap are replaced by cap (only their crossing matters)

        Returns:
            int64 array of steps >= 1
        """
        u = 1.0 - rng.random(size)
        steps = np.ceil((self.L_value / u) ** (1.0 / self.beta)) - 1.0
        steps = np.clip(steps, 1.0, float(min(cap, MAX_STEP)) if cap else float(MAX_STEP))
        return steps.astype(np.int64)

    def _prefix_sums(self, n: int) -> np.ndarray:
        if n >= len(self._prefix):
            size = max(n + 1, 2 * len(self._prefix))
            self._prefix = np.cumsum(self.tail(np.arange(size)))
        return self._prefix

    def wandering_rate(self, n: int) -> float:
        """w_n = Σ_{j=0}^{n} F̄(j), summed exactly."""
        if n < 0:
            raise DomainError(f"horizon must be >= 0, got {n}")
        return float(self._prefix_sums(n)[n])

    def initial_cdf(self, n: int) -> np.ndarray:
        prefix = self._prefix_sums(n)[: n + 1]
        return prefix / prefix[-1]

    def sample_initial(self, n: int, rng: np.random.Generator, size=None):
        """Draw the first zero j ∈ {0..n} with P(j) ∝ F̄(j)."""
        if n < 0:
            raise DomainError(f"horizon must be >= 0, got {n}")
        prefix = self._prefix_sums(n)[: n + 1]
        u = rng.random(size) * prefix[-1]
        return np.minimum(np.searchsorted(prefix, u, side='right'), n)

    def vartheta(self, n: int) -> float:
        """ϑ_n = (2−β) n^β / (β L(n))."""
        return (2.0 - self.beta) * float(n) ** self.beta / (self.beta * self.L(n))

    def doney_ratio(self, n):
        """n·P{φ=n}/F̄(n)."""
        n = np.asarray(n, dtype=float)
        return n * self.pmf(n) / self.tail(n)

    def renewal_sequence(self, size: int) -> np.ndarray:
        """
        u(m) = P{m ∈ range of a walk from 0} for m = 0..size.

        Computed as the power series of 1/(1 − F(s)) by Newton iteration with FFT products.
        """
        if size + 1 > len(self._renewal):
            length = 1 << int(np.ceil(np.log2(size + 1)))
            denominator = -self.pmf(np.arange(length))
            denominator[0] = 1.0
            self._renewal = _invert_series(denominator, length)
        return self._renewal[: size + 1]

    def renewal_asymptotic(self, m):
        """Leading-order u(m) ~ m^{β−1} / (Γ(β)Γ(1−β)L)."""
        m = np.asarray(m, dtype=float)
        return m ** (self.beta - 1.0) / (special.gamma(self.beta) * special.gamma(1.0 - self.beta) * self.L(m))


def _invert_series(d: np.ndarray, length: int) -> np.ndarray:
    g = np.array([1.0 / d[0]])
    k = 1
    while k < length:
        k = min(2 * k, length)
        e = fftconvolve(d[:k], g)[:k]
        e[0] -= 2.0
        g = -fftconvolve(g, e)[:k]
    return g



def walk_ranges(starts: np.ndarray, horizon: int, law: StepLaw, rng: np.random.Generator) -> List[np.ndarray]:
    """Ranges within [0, horizon] of walks from the given starts, vectorised across walks."""
    count = len(starts)
    pieces: List[List[np.ndarray]] = [[starts[i:i + 1]] for i in range(count)]
    position = np.asarray(starts, dtype=np.int64).copy()
    active = np.flatnonzero(position <= horizon)
    chunk = 16
    while active.size:
        steps = law.sample_steps((active.size, chunk), rng, cap=horizon + 1)
        path = position[active, None] + np.cumsum(steps, axis=1)
        inside = (path <= horizon).sum(axis=1)
        for row in np.flatnonzero(inside):
            pieces[active[row]].append(path[row, :inside[row]])
        position[active] = path[:, -1]
        active = active[path[:, -1] <= horizon]
        chunk = min(2 * chunk, 1024)
    return [np.concatenate(p) if len(p) > 1 else p[0] for p in pieces]
