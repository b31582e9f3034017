"""Flow-density accumulation and steady-state detection.

Transition records are rows of (step, from_r, from_i, from_o, to_r, to_i,
to_o, employed_flag). Densities are normalised transition counts per
category pair; the error series compares the model's densities to a
reference triple via Frobenius norms, and the steady state fires when two
lagged window means of that series agree within a tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DIMENSIONS = ("region", "industry", "occupation")
_FROM_COL = {"region": 1, "industry": 2, "occupation": 3}
_TO_COL = {"region": 4, "industry": 5, "occupation": 6}


class InsufficientHistoryError(ValueError):
    """The error series is too short for the steady-state windows."""


@dataclass(frozen=True)
class SteadyStateParams:
    window: int = 20
    lag: int = 20
    epsilon: float = 1e-3
    max_steps: int = 2000

    def __post_init__(self):
        if self.window < 1 or self.lag < 1:
            raise ValueError("window and lag must be at least 1")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")


def transition_counts(transitions, dimension: str, n: int) -> np.ndarray:
    """Raw (from, to) transition counts along one dimension."""
    rows = np.asarray(transitions, dtype=np.int64)
    counts = np.zeros((n, n), dtype=np.int64)
    if rows.size == 0:
        return counts
    src = rows[:, _FROM_COL[dimension]]
    dst = rows[:, _TO_COL[dimension]]
    if np.any((src < 0) | (src >= n) | (dst < 0) | (dst >= n)):
        raise IndexError(f"{dimension} index out of range for n={n}")
    np.add.at(counts, (src, dst), 1)
    return counts


def accumulate(transitions, dimension: str, n: int) -> np.ndarray:
    """Flow-density matrix along one dimension: counts divided by the total
    number of transitions. All-zero when the log is empty."""
    counts = transition_counts(transitions, dimension, n)
    total = counts.sum()
    if total == 0:
        return counts.astype(float)
    return counts / total


def density_from_counts(counts: np.ndarray) -> np.ndarray:
    total = counts.sum()
    if total == 0:
        return np.zeros_like(counts, dtype=float)
    return counts / total


def error_xi(sim_triple, obs_triple) -> float:
    """Mean Frobenius distance between the three simulated and reference
    density matrices."""
    total = 0.0
    for sim, obs in zip(sim_triple, obs_triple):
        sim = np.asarray(sim, dtype=float)
        obs = np.asarray(obs, dtype=float)
        if sim.shape != obs.shape:
            raise ValueError(f"shape mismatch: {sim.shape} vs {obs.shape}")
        total += np.linalg.norm(sim - obs)
    return total / 3.0


def steady_state_reached(xi_history, params: SteadyStateParams) -> bool:
    """True iff the mean of the last ``window`` errors and the mean of the
    window lagged by ``lag`` differ by less than ``epsilon``.

    Both windows are inclusive of their endpoints, so each averages
    ``window + 1`` values; history before the older window is ignored.
    """
    xi = np.asarray(xi_history, dtype=float)
    k, l = params.window, params.lag
    if len(xi) < k + l + 1:
        raise InsufficientHistoryError(
            f"need at least {k + l + 1} error values, got {len(xi)}"
        )
    recent = xi[len(xi) - k - 1 :].mean()
    lagged = xi[len(xi) - k - l - 1 : len(xi) - l].mean()
    return abs(recent - lagged) < params.epsilon
