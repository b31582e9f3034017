"""Multi-objective gradient-descent calibration of the similarity exponents.

Each iteration runs a suite of Monte Carlo simulations, compares the mean
simulated flow densities to the observed ones, and multiplies every exponent
cell by a factor proportional to its relative error (clipped into
[1/2, 3/2]). All cells update simultaneously from one error snapshot; the
best exponent matrices seen are returned.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import RunSpec, run_suite
from .flows import DIMENSIONS
from .metrics import fit_report
from .similarity import SimilarityBundle

DELTA_FLOOR = 1e-6  # denominator floor where the observed density is zero
FACTOR_UP = 1.5
FACTOR_DOWN = 0.5


@dataclass(frozen=True)
class CalibrationConfig:
    m_simulations: int = 5
    threshold: float = 1e-3
    max_iterations: int = 30
    seeds: tuple = ()
    fixed_seeds: bool = True  # common random numbers across iterations
    signed_mean_error: bool = False

    def __post_init__(self):
        if self.m_simulations < 1:
            raise ValueError("need at least one Monte Carlo simulation")
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")

    def iteration_seeds(self, iteration: int):
        seeds = list(self.seeds) or list(range(self.m_simulations))
        seeds = seeds[: self.m_simulations]
        if self.fixed_seeds:
            return seeds
        return [s + (iteration + 1) * 10_000 for s in seeds]


@dataclass(frozen=True)
class ErrorMatrices:
    """Observed minus mean-simulated density, per dimension."""

    region: np.ndarray
    industry: np.ndarray
    occupation: np.ndarray

    def as_dict(self):
        return {"region": self.region, "industry": self.industry, "occupation": self.occupation}


def compute_errors(observed: dict, suite_flows) -> ErrorMatrices:
    """``suite_flows`` is a sequence of per-run {dimension: density} dicts."""
    if not suite_flows:
        raise ValueError("empty simulation suite")
    means = {}
    for dim in DIMENSIONS:
        stack = np.stack([flows[dim] for flows in suite_flows])
        if stack.shape[1:] != np.asarray(observed[dim]).shape:
            raise ValueError(f"shape mismatch on {dim} flow matrices")
        means[dim] = stack.mean(axis=0)
    return ErrorMatrices(
        region=np.asarray(observed["region"]) - means["region"],
        industry=np.asarray(observed["industry"]) - means["industry"],
        occupation=np.asarray(observed["occupation"]) - means["occupation"],
    )


def update_nu(nu, errors, observed, base) -> np.ndarray:
    """One multiplicative update of an exponent matrix.

    Negative error (too much simulated flow) raises the exponent by
    1 + delta, positive error lowers it by 1 - delta, with delta the error
    magnitude relative to the observed density and the factor clipped into
    [1/2, 3/2]. Cells whose base similarity is 0 or 1 are updated too, even
    though the exponent there cannot move the composite score.
    """
    nu = np.asarray(nu, dtype=float)
    errors = np.asarray(errors, dtype=float)
    observed = np.asarray(observed, dtype=float)
    base = np.asarray(base, dtype=float)
    if not (nu.shape == errors.shape == observed.shape == base.shape):
        raise ValueError("shape mismatch")
    if np.any(nu <= 0):
        raise ValueError("exponents must be positive")
    delta = np.abs(errors) / np.maximum(observed, DELTA_FLOOR)
    factor = np.where(
        errors < 0,
        np.minimum(1.0 + delta, FACTOR_UP),
        np.maximum(1.0 - delta, FACTOR_DOWN),
    )
    return nu * factor


def mean_error(errors: ErrorMatrices, signed: bool = False) -> float:
    """Mean of the three per-matrix mean errors; absolute values by default
    so sign-symmetric errors cannot cancel the stopping rule."""
    parts = []
    for mat in (errors.region, errors.industry, errors.occupation):
        parts.append(mat.mean() if signed else np.abs(mat).mean())
    return float(np.mean(parts))


@dataclass
class CalibrationResult:
    bundle: SimilarityBundle
    history: list  # per-iteration dicts: mean_error, pearson/frobenius per dim
    converged: bool
    best_iteration: int


def calibrate(
    observed: dict,
    config: CalibrationConfig,
    spec: RunSpec,
    n_jobs: Optional[int] = None,
    progress=None,
) -> CalibrationResult:
    """Run the calibration loop from all-ones exponents.

    Returns the bundle carrying the lowest-mean-error exponents seen, the
    full iteration history, and whether the threshold was met. ``progress``
    is an optional callable receiving each history record as it is made.
    """
    bundle = spec.bundle.with_nu(
        np.ones_like(spec.bundle.nu_region),
        np.ones_like(spec.bundle.nu_industry),
        np.ones_like(spec.bundle.nu_occupation),
    )
    obs_triple = tuple(np.asarray(observed[dim], dtype=float) for dim in DIMENSIONS)
    history = []
    best = None  # (mean_error, iteration, bundle)
    converged = False

    for iteration in range(config.max_iterations):
        current_spec = spec.with_bundle(bundle)
        seeds = config.iteration_seeds(iteration)
        results = run_suite(current_spec, seeds, observed=obs_triple, n_jobs=n_jobs)
        suite_flows = [r.flows for r in results]
        errors = compute_errors(observed, suite_flows)
        e_bar = mean_error(errors, signed=config.signed_mean_error)

        record = {"iteration": iteration, "mean_error": e_bar}
        mean_flows = {
            dim: np.stack([f[dim] for f in suite_flows]).mean(axis=0)
            for dim in DIMENSIONS
        }
        for dim in DIMENSIONS:
            rep = fit_report(observed[dim], mean_flows[dim])
            record[f"pearson_{dim}"] = rep.pearson
            record[f"frobenius_{dim}"] = rep.frobenius
        history.append(record)
        if progress is not None:
            progress(record)

        if best is None or e_bar < best[0]:
            best = (e_bar, iteration, bundle)
        if e_bar < config.threshold:
            converged = True
            break

        bundle = bundle.with_nu(
            update_nu(bundle.nu_region, errors.region, observed["region"], bundle.region),
            update_nu(
                bundle.nu_industry, errors.industry, observed["industry"], bundle.industry
            ),
            update_nu(
                bundle.nu_occupation,
                errors.occupation,
                observed["occupation"],
                bundle.occupation,
            ),
        )

    return CalibrationResult(
        bundle=best[2],
        history=history,
        converged=converged,
        best_iteration=best[1],
    )
