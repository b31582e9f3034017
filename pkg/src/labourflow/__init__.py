"""Labour flow network simulator: agent-based job search, similarity-weight
calibration, and shock experiments."""

from .domain import Agent, EconomyParams, JobDistribution, Position, optimal_utility, prefers_switch
from .engine import AlphaDist, RunSpec, RunResult, SimulationState, run, run_suite, step
from .similarity import SimilarityBundle, compose_similarity, normalize_bundle

__all__ = [
    "Agent",
    "AlphaDist",
    "EconomyParams",
    "JobDistribution",
    "Position",
    "RunResult",
    "RunSpec",
    "SimilarityBundle",
    "SimulationState",
    "compose_similarity",
    "normalize_bundle",
    "optimal_utility",
    "prefers_switch",
    "run",
    "run_suite",
    "step",
]
