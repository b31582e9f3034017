"""Shock construction and shocked-vs-baseline Monte Carlo experiments.

Positional shocks collapse the regions and/or occupations of every position
in the chosen industries onto a single drawn value; wage shocks shift each
affected cell's mean wage by a multiple of that cell's own standard
deviation. Experiments compare shocked and baseline steady-state flow
densities with the weighted Jaccard distance, weighted clustering, and a
per-edge Mann-Whitney U test.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .domain import JobDistribution
from .engine import RunSpec, run_suite
from .flows import DIMENSIONS
from .metrics import mann_whitney_u, weighted_clustering, weighted_jaccard_distance

WAGE_SHOCK_FLOOR_FRACTION = 0.01

SHOCK_KINDS = ("positional", "wage_up", "wage_down")
_AXIS = {"region": 0, "occupation": 2}


class EmptyIndustryError(ValueError):
    """A shocked industry holds no positions."""


@dataclass(frozen=True)
class ShockSpec:
    kind: str
    industries: tuple
    homogenise: tuple = ()
    sigma_multiplier: float = 2.0
    seed: int = 0
    target_override: Optional[dict] = None  # characteristic -> fixed target index

    def __post_init__(self):
        if self.kind not in SHOCK_KINDS:
            raise ValueError(f"unknown shock kind {self.kind!r}")
        industries = tuple(sorted(set(self.industries)))
        if not industries:
            raise ValueError("shock must name at least one industry")
        object.__setattr__(self, "industries", industries)
        homogenise = tuple(sorted(set(self.homogenise)))
        if self.kind == "positional":
            if not homogenise:
                raise ValueError("positional shock must homogenise region and/or occupation")
            bad = set(homogenise) - set(_AXIS)
            if bad:
                raise ValueError(f"cannot homogenise {sorted(bad)}")
        object.__setattr__(self, "homogenise", homogenise)


def apply_positional_shock(
    jobs: JobDistribution, spec: ShockSpec, rng: np.random.Generator
) -> JobDistribution:
    """Collapse the homogenised characteristic(s) of every position in each
    shocked industry onto one target value per industry, drawn with
    probability proportional to the industry's current marginal (or fixed
    via ``target_override``). The total position count is conserved."""
    if spec.kind != "positional":
        raise ValueError("spec is not a positional shock")
    counts = jobs.counts.copy()
    for ind in spec.industries:
        block = counts[:, ind, :]
        total = block.sum()
        if total == 0:
            raise EmptyIndustryError(f"industry {ind} holds no positions")
        for characteristic in spec.homogenise:
            axis = 0 if characteristic == "region" else 1  # axes of the block
            marginal = block.sum(axis=1 - axis).astype(float)
            if spec.target_override and characteristic in spec.target_override:
                target = int(spec.target_override[characteristic])
            else:
                target = int(rng.choice(len(marginal), p=marginal / marginal.sum()))
            collapsed = block.sum(axis=axis)
            block = np.zeros_like(block)
            if axis == 0:
                block[target, :] = collapsed
            else:
                block[:, target] = collapsed
        counts[:, ind, :] = block
    return JobDistribution(counts=counts, wage_mean=jobs.wage_mean, wage_std=jobs.wage_std)


def apply_wage_shock(jobs: JobDistribution, spec: ShockSpec) -> JobDistribution:
    """Shift mean wages in the shocked industries by +/- sigma_multiplier
    times each cell's own standard deviation, floored at 1% of the original
    mean. Counts and standard deviations are untouched."""
    if spec.kind not in ("wage_up", "wage_down"):
        raise ValueError("spec is not a wage shock")
    sign = 1.0 if spec.kind == "wage_up" else -1.0
    mean = jobs.wage_mean.copy()
    affected = np.zeros(jobs.shape, dtype=bool)
    affected[:, list(spec.industries), :] = True
    affected &= jobs.counts > 0
    shifted = mean + sign * spec.sigma_multiplier * jobs.wage_std
    floor = WAGE_SHOCK_FLOOR_FRACTION * mean
    mean = np.where(affected, np.maximum(shifted, floor), mean)
    return JobDistribution(counts=jobs.counts, wage_mean=mean, wage_std=jobs.wage_std)


def apply_shock(jobs: JobDistribution, spec: ShockSpec) -> JobDistribution:
    """Dispatch on the shock kind; positional draws use the spec's seed."""
    if spec.kind == "positional":
        return apply_positional_shock(jobs, spec, np.random.default_rng(spec.seed))
    return apply_wage_shock(jobs, spec)


def flow_significance(shocked, baseline, alpha: float = 0.05):
    """Per-edge two-sided Mann-Whitney U test between the shocked and
    baseline density samples.

    ``shocked`` and ``baseline`` are (m, n, n) arrays of per-run densities.
    Returns a list of (from, to, mean_change, p_value) for edges with
    p < alpha, where the change is mean(shocked) - mean(baseline).
    """
    shocked = np.asarray(shocked, dtype=float)
    baseline = np.asarray(baseline, dtype=float)
    if shocked.ndim != 3 or baseline.ndim != 3 or shocked.shape[1:] != baseline.shape[1:]:
        raise ValueError("expected (m, n, n) sample stacks of matching edge shape")
    if shocked.shape[0] < 3 or baseline.shape[0] < 3:
        raise ValueError("need at least 3 samples per group")
    flagged = []
    n = shocked.shape[1]
    for i in range(n):
        for j in range(shocked.shape[2]):
            s = shocked[:, i, j]
            b = baseline[:, i, j]
            if np.ptp(np.concatenate([s, b])) == 0:
                continue  # identical constants can never be significant
            _, p = mann_whitney_u(s, b)
            if p < alpha:
                flagged.append((i, j, float(s.mean() - b.mean()), float(p)))
    return flagged


@dataclass
class DimensionReport:
    jaccard: float
    baseline_band: tuple  # (min, max) Jaccard among baseline run pairings
    clustering_baseline: float
    clustering_shocked: float
    flagged_edges: list


@dataclass
class ShockReport:
    spec: ShockSpec
    fraction_shocked: float
    dimensions: dict  # dimension name -> DimensionReport

    def as_dict(self):
        return {
            "kind": self.spec.kind,
            "industries": list(self.spec.industries),
            "homogenise": list(self.spec.homogenise),
            "sigma_multiplier": self.spec.sigma_multiplier,
            "fraction_shocked": self.fraction_shocked,
            "dimensions": {
                dim: {
                    "jaccard": rep.jaccard,
                    "baseline_band": list(rep.baseline_band),
                    "clustering_baseline": rep.clustering_baseline,
                    "clustering_shocked": rep.clustering_shocked,
                    "flagged_edges": [list(e) for e in rep.flagged_edges],
                }
                for dim, rep in self.dimensions.items()
            },
        }


def run_experiment(
    baseline_spec: RunSpec,
    spec: ShockSpec,
    m: int,
    base_seed: int = 0,
    alpha: float = 0.05,
    n_jobs=None,
) -> ShockReport:
    """Run m baseline and m shocked simulations (disjoint seed ranges) and
    compare their steady-state flow densities per LFN dimension."""
    if m < 3:
        raise ValueError("need m >= 3 for the baseline band and the edge tests")
    shocked_jobs = apply_shock(baseline_spec.jobs, spec)
    shocked_spec = baseline_spec.with_jobs(shocked_jobs)

    baseline_seeds = [base_seed + k for k in range(m)]
    shocked_seeds = [base_seed + 1_000_000 + k for k in range(m)]
    baseline_runs = run_suite(baseline_spec, baseline_seeds, n_jobs=n_jobs)
    shocked_runs = run_suite(shocked_spec, shocked_seeds, n_jobs=n_jobs)

    total = baseline_spec.jobs.counts.sum()
    shocked_count = baseline_spec.jobs.counts[:, list(spec.industries), :].sum()
    fraction = float(shocked_count / total)

    dims = {}
    for dim in DIMENSIONS:
        base_stack = np.stack([r.flows[dim] for r in baseline_runs])
        shock_stack = np.stack([r.flows[dim] for r in shocked_runs])
        base_mean = base_stack.mean(axis=0)
        shock_mean = shock_stack.mean(axis=0)
        jac = weighted_jaccard_distance(base_mean, shock_mean)
        pair_jacs = [
            weighted_jaccard_distance(base_stack[a], base_stack[b])
            for a in range(m)
            for b in range(a + 1, m)
        ]
        dims[dim] = DimensionReport(
            jaccard=jac,
            baseline_band=(float(min(pair_jacs)), float(max(pair_jacs))),
            clustering_baseline=weighted_clustering(base_mean),
            clustering_shocked=weighted_clustering(shock_mean),
            flagged_edges=flow_significance(shock_stack, base_stack, alpha=alpha),
        )
    return ShockReport(spec=spec, fraction_shocked=fraction, dimensions=dims)
