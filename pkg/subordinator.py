"""
β-stable subordinators, their Mittag-Leffler inverses and the regenerative sets they generate.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special

from utils import DomainError, PathExhausted, DegeneratePath

TINY = np.nextafter(0.0, 1.0)


def sample_stable(beta: float, scale: float, rng: np.random.Generator, size=None):
    """
    Positive strictly β-stable variates with E e^{−θS} = exp{−scale·θ^β}.

    Kanter's representation: for U uniform on (0,1) and E standard exponential,
    sin(βπU)/sin(πU)^{1/β} · (sin((1−β)πU)/E)^{(1−β)/β} has Laplace exponent θ^β.
    """
    if not 0.0 < beta < 1.0:
        raise DomainError(f"beta must lie in (0, 1), got {beta}")
    if scale <= 0.0:
        raise DomainError(f"scale must be positive, got {scale}")
    u = rng.uniform(TINY, 1.0, size) * np.pi
    e = rng.standard_exponential(size)
    zolotarev = np.sin(beta * u) / np.sin(u) ** (1.0 / beta) * (np.sin((1.0 - beta) * u) / e) ** ((1.0 - beta) / beta)
    return scale ** (1.0 / beta) * zolotarev


@dataclass(frozen=True, eq=False)
class SubordinatorPath:
    """Z on a local-time grid; values are Z*(t) = shift + Z(t) for shifted paths."""
    beta: float
    grid: np.ndarray
    values: np.ndarray
    shift: float = 0.0

    def first_passage(self, level):
        return first_passage(self, level)


def _local_time_grid(dt: float, steps: int, refine: int) -> np.ndarray:
    head = dt * 2.0 ** -np.arange(refine, 0, -1)
    return np.concatenate(([0.0], head, dt * np.arange(1, steps + 1)))


def sample_subordinator_path(beta: float, level: float, rng: np.random.Generator, dt: float = 1e-4,
                             shift: float = 0.0, refine: int = 12) -> SubordinatorPath:
    """
    Simulate Z (or Z* when shift > 0) until it exceeds level.

    The grid is geometric near t = 0 and uniform with step dt afterwards.
    """
    if dt <= 0.0:
        raise DomainError(f"dt must be positive, got {dt}")
    chunk = max(1024, int(1.0 / dt))
    grid = _local_time_grid(dt, chunk, refine)
    increments = sample_stable(beta, 1.0, rng, grid.size - 1) * np.diff(grid) ** (1.0 / beta)
    values = shift + np.concatenate(([0.0], np.cumsum(increments)))
    while values[-1] <= level:
        t0 = grid[-1]
        more = sample_stable(beta, 1.0, rng, chunk) * dt ** (1.0 / beta)
        grid = np.concatenate((grid, t0 + dt * np.arange(1, chunk + 1)))
        values = np.concatenate((values, values[-1] + np.cumsum(more)))
    return SubordinatorPath(beta=beta, grid=grid, values=values, shift=shift)


def first_passage(path: SubordinatorPath, level):
    """
    Z^←(level) = inf{t : Z(t) > level}, linearly interpolated inside the crossing cell.

    Raises:
        PathExhausted: if the path never exceeds level
    """
    levels = np.asarray(level, dtype=float)
    values, grid = path.values, path.grid
    if np.any(levels >= values[-1]):
        raise PathExhausted(f"path reaches {values[-1]:.4g}, below requested level {levels.max():.4g}")
    i = np.searchsorted(values, levels, side='right')
    below = i == 0
    i = np.maximum(i, 1)
    v0, v1 = values[i - 1], values[i]
    t0, t1 = grid[i - 1], grid[i]
    t = t0 + (t1 - t0) * (levels - v0) / (v1 - v0)
    t = np.where(below, 0.0, t)
    return float(t) if t.ndim == 0 else t


def shift_start_from_uniform(u, beta: float):
    """Inverse transform of P{Z*(0) ≤ x} = x^{1−β}."""
    return np.asarray(u, dtype=float) ** (1.0 / (1.0 - beta))


def sample_shift_start(beta: float, rng: np.random.Generator, size=None):
    return shift_start_from_uniform(rng.random(size), beta)


def sample_inverse_at_one(beta: float, rng: np.random.Generator, size=None, shifted: bool = False):
    """
    Exact draws of Z^←(1) =d S^{−β}, or of Z*^←(1) = (1 − Z*(0))^β Z^←(1).
    """
    z = sample_stable(beta, 1.0, rng, size) ** (-beta)
    if shifted:
        z = z * (1.0 - sample_shift_start(beta, rng, size)) ** beta
    return z


def sample_inverse_at(beta: float, levels, reps: int, rng: np.random.Generator,
                      dt: float = 1e-3) -> np.ndarray:
    """
    Z^←(levels) along reps independent unshifted paths; shape (reps, len(levels)).
    """
    levels = np.asarray(levels, dtype=float)
    top = max(float(levels.max(initial=0.0)), 0.0)
    out = np.empty((reps, levels.size))
    for r in range(reps):
        path = sample_subordinator_path(beta, top, rng, dt=dt)
        out[r] = first_passage(path, np.maximum(levels, 0.0))
    return out


@dataclass(frozen=True, eq=False)
class RegenerativeSetSample:
    path: SubordinatorPath
    resolution: float
    hits: np.ndarray
    inv_at_1: float

    @property
    def shift(self) -> float:
        return self.path.shift

    def eta(self, t):
        """η(t) = Z*^←(t)/Z*^←(1) on [0, 1]."""
        if self.inv_at_1 <= 0.0:
            raise DegeneratePath("Z*^←(1) vanished")
        return first_passage(self.path, np.minimum(np.asarray(t, dtype=float), 1.0)) / self.inv_at_1


def epsilon_net(points: np.ndarray, epsilon: float) -> np.ndarray:
    """Keep the first point of every ε/2-cell; each dropped point is within ε/2 of a kept one."""
    points = np.sort(points)
    if points.size == 0:
        return points
    cells = np.floor(points / (0.5 * epsilon))
    keep = np.concatenate(([True], cells[1:] != cells[:-1]))
    return points[keep]


def sample_regenerative(beta: float, epsilon: float, shifted: bool, rng: np.random.Generator,
                        dt: float = 1e-4) -> RegenerativeSetSample:
    """
    Discretised sample of R ∩ [0,1] (or R* ∩ [0,1] when shifted).

    The c_β constant of the Hausdorff measure never enters: only the ratio η is used.
    """
    if not 0.0 < epsilon <= 0.01:
        raise DomainError(f"epsilon must lie in (0, 0.01], got {epsilon}")
    shift = float(sample_shift_start(beta, rng)) if shifted else 0.0
    path = sample_subordinator_path(beta, 1.0, rng, dt=dt, shift=shift)
    inside = path.values[path.values <= 1.0]
    return RegenerativeSetSample(
        path=path,
        resolution=epsilon,
        hits=epsilon_net(inside, epsilon),
        inv_at_1=first_passage(path, 1.0),
    )


def sample_J_points(s: RegenerativeSetSample, m: int, rng: np.random.Generator) -> np.ndarray:
    """
    J_i = η^←(U_i): the range value at local time U_i·Z*^←(1).

    Raises:
        DegeneratePath: if Z*^←(1) = 0 (the shift exceeded 1 at grid resolution)
    """
    if s.inv_at_1 <= 0.0:
        raise DegeneratePath("Z*^←(1) vanished")
    tau = rng.random(m) * s.inv_at_1
    idx = np.searchsorted(s.path.grid, tau, side='right') - 1
    return np.clip(s.path.values[idx], 0.0, 1.0)


def mittag_leffler_moment(beta: float, q: float) -> float:
    """E(Z^←(1))^q = Γ(1+q)/Γ(1+βq)."""
    return float(special.gamma(1.0 + q) / special.gamma(1.0 + beta * q))


@dataclass
class MomentEstimate:
    value: float
    se: float
    oracle: float

    def within(self, width: float = 3.0) -> bool:
        return abs(self.value - self.oracle) <= width * self.se


def ml_fractional_moment(beta: float, q: float, reps: int, rng: np.random.Generator) -> MomentEstimate:
    """Monte Carlo E(Z^←(1))^q from exact draws S^{−β}, with the closed form as oracle."""
    if q < 0.0:
        raise DomainError(f"q must be nonnegative, got {q}")
    draws = sample_stable(beta, 1.0, rng, reps) ** (-beta * q)
    return MomentEstimate(
        value=float(draws.mean()),
        se=float(draws.std(ddof=1) / np.sqrt(reps)) if reps > 1 else 0.0,
        oracle=mittag_leffler_moment(beta, q),
    )
