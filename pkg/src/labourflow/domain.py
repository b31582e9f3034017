"""Core value types shared across the simulator, plus the agent utility model.

Agents trade off leisure against consumption with a Cobb-Douglas utility and
an age-dependent discount of the future; the closed-form optimum makes job
comparisons a single arithmetic expression instead of a numerical solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


class DomainError(ValueError):
    """A value violates one of the model's domain preconditions."""


@dataclass(frozen=True)
class Position:
    """An exogenous job slot. ``holder`` is None while the slot is vacant."""

    id: int
    region: int
    industry: int
    occupation: int
    wage: float
    holder: Optional[int] = None

    def __post_init__(self):
        if self.wage <= 0:
            raise DomainError(f"position wage must be positive, got {self.wage}")

    @property
    def cell(self):
        return (self.region, self.industry, self.occupation)


@dataclass
class Agent:
    """An individual worker.

    ``position`` is None while unemployed; the ``last_*`` fields always hold
    the region/industry/occupation/wage of the current (if employed) or most
    recent position, so an agent is always attached to a node of the economy.
    """

    id: int
    age: float
    alpha: float
    position: Optional[int]
    last_region: int
    last_industry: int
    last_occupation: int
    last_wage: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0,1), got {self.alpha}")
        if self.last_wage <= 0:
            raise DomainError("agents must carry a positive reference wage")

    @property
    def employed(self) -> bool:
        return self.position is not None

    @property
    def cell(self):
        return (self.last_region, self.last_industry, self.last_occupation)


@dataclass(frozen=True)
class EconomyParams:
    """Macro parameters of the economy.

    ``survival`` maps integer age -> per-step survival probability, as an
    array indexed from age 0 up to the maximum age; the final entry must be
    zero so every agent is eventually replaced.
    """

    n_agents: int
    n_positions: int
    lam: float
    gamma: float
    theta_e: float
    theta_ue: float
    survival: np.ndarray
    entry_age: int = 18

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise DomainError("lambda must lie in [0,1]")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError("gamma must lie strictly inside (0,1)")
        for name, theta in (("theta_e", self.theta_e), ("theta_ue", self.theta_ue)):
            if not 0.0 <= theta <= 1.0:
                raise DomainError(f"{name} must lie in [0,1]")
        surv = np.asarray(self.survival, dtype=float)
        if surv.ndim != 1 or len(surv) <= self.entry_age:
            raise DomainError("survival table must cover every age from entry onwards")
        if np.any((surv < 0) | (surv > 1)):
            raise DomainError("survival probabilities must lie in [0,1]")
        if surv[-1] != 0.0:
            raise DomainError("survival at the maximum age must be zero")
        object.__setattr__(self, "survival", surv)

    @property
    def max_age(self) -> int:
        return len(self.survival) - 1


@dataclass(frozen=True)
class JobDistribution:
    """Job counts and wage statistics over (region, industry, occupation) cells."""

    counts: np.ndarray
    wage_mean: np.ndarray
    wage_std: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        mean = np.asarray(self.wage_mean, dtype=float)
        std = np.asarray(self.wage_std, dtype=float)
        if counts.ndim != 3 or counts.shape != mean.shape or counts.shape != std.shape:
            raise DomainError("counts, wage_mean, wage_std must share a 3-d shape")
        if np.any(counts < 0):
            raise DomainError("job counts must be non-negative")
        if np.any(std < 0):
            raise DomainError("wage standard deviations must be non-negative")
        if np.any(mean[counts > 0] <= 0):
            raise DomainError("wage_mean must be positive wherever counts > 0")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "wage_mean", mean)
        object.__setattr__(self, "wage_std", std)

    @property
    def shape(self):
        return self.counts.shape

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def cell_probabilities(self) -> np.ndarray:
        """Flat probability vector over cells, proportional to counts."""
        total = self.counts.sum()
        if total == 0:
            raise DomainError("job distribution holds zero positions")
        return self.counts.ravel() / total

    def sample_cells(self, rng: np.random.Generator, size: int):
        """Sample `size` cells with probability proportional to their counts.

        Returns (region, industry, occupation) index arrays.
        """
        flat = rng.choice(self.counts.size, size=size, p=self.cell_probabilities())
        return np.unravel_index(flat, self.counts.shape)


def optimal_utility(age, alpha, wage, gamma):
    """Lifetime utility at the optimal leisure-consumption split.

    Closed form of the agent's maximisation problem; accepts scalars or
    broadcastable numpy arrays. Strictly increasing in the wage.
    """
    age_a = np.asarray(age, dtype=float)
    alpha_a = np.asarray(alpha, dtype=float)
    wage_a = np.asarray(wage, dtype=float)
    if np.any(age_a < 0):
        raise DomainError("age must be non-negative")
    if np.any((alpha_a <= 0) | (alpha_a >= 1)):
        raise DomainError("alpha must lie in (0,1)")
    if np.any(wage_a <= 0):
        raise DomainError("wage must be positive")
    if not 0.0 < gamma < 1.0:
        raise DomainError("gamma must lie in (0,1)")
    u = (
        gamma**age_a
        / (1.0 - gamma)
        * wage_a
        * alpha_a**alpha_a
        * ((1.0 - alpha_a) / wage_a) ** (1.0 - alpha_a)
    )
    if u.ndim == 0:
        return float(u)
    return u


def prefers_switch(agent: Agent, candidate_wage: float, gamma: float) -> bool:
    """True iff the agent's lifetime utility is strictly higher at the candidate wage.

    Age, alpha, and gamma are identical on both sides of the comparison, so
    this is equivalent to a strict wage comparison; the closed form is still
    evaluated on both sides.
    """
    if candidate_wage <= 0:
        raise DomainError("candidate wage must be positive")
    current = optimal_utility(agent.age, agent.alpha, agent.last_wage, gamma)
    candidate = optimal_utility(agent.age, agent.alpha, candidate_wage, gamma)
    return candidate > current
