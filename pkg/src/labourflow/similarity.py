"""Similarity matrices between job categories and their composition into a
single position-pair score.

Three base matrices: geographical proximity between regions (from pairwise
distances), industrial affinity (from an input-output table, not symmetric),
and occupational closeness (cosine similarity of skill vectors). Each base
entry is raised to a free exponent; the exponents are the calibration target.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np


class DegenerateInputError(ValueError):
    """An input matrix is constant or otherwise not normalisable."""


@dataclass(frozen=True)
class SimilarityBundle:
    """Normalised base matrices plus their exponent matrices.

    ``industry_row_stochastic`` keeps the row-normalised affinity matrix
    before the [0,1] min-max rescaling, for inspection.
    """

    region: np.ndarray
    industry: np.ndarray
    occupation: np.ndarray
    nu_region: np.ndarray
    nu_industry: np.ndarray
    nu_occupation: np.ndarray
    industry_row_stochastic: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("region", "industry", "occupation"):
            mat = np.asarray(getattr(self, name), dtype=float)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise ValueError(f"{name} matrix must be square")
            if np.any((mat < -1e-12) | (mat > 1 + 1e-12)):
                raise ValueError(f"{name} matrix entries must lie in [0,1]")
            object.__setattr__(self, name, np.clip(mat, 0.0, 1.0))
            nu = np.asarray(getattr(self, "nu_" + name), dtype=float)
            if nu.shape != mat.shape:
                raise ValueError(f"nu_{name} must match the {name} matrix shape")
            if np.any(nu <= 0):
                raise ValueError(f"nu_{name} entries must be positive")
            object.__setattr__(self, "nu_" + name, nu)

    @property
    def dims(self):
        return (self.region.shape[0], self.industry.shape[0], self.occupation.shape[0])

    def with_nu(self, nu_region, nu_industry, nu_occupation) -> "SimilarityBundle":
        return replace(
            self,
            nu_region=np.asarray(nu_region, dtype=float),
            nu_industry=np.asarray(nu_industry, dtype=float),
            nu_occupation=np.asarray(nu_occupation, dtype=float),
        )

    def powered(self):
        """Elementwise base**nu for the three matrices (used by the engine)."""
        return (
            self.region**self.nu_region,
            self.industry**self.nu_industry,
            self.occupation**self.nu_occupation,
        )


def region_similarity(distances: np.ndarray) -> np.ndarray:
    """Proximity from pairwise distances: min-max inverted so the closest
    pair maps to 1 and the farthest to 0."""
    d = np.asarray(distances, dtype=float)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError("distance matrix must be square")
    if not np.allclose(d, d.T):
        raise ValueError("distance matrix must be symmetric")
    if np.any(np.diag(d) != 0):
        raise ValueError("distance matrix must have a zero diagonal")
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    lo, hi = d.min(), d.max()
    if hi == lo:
        raise DegenerateInputError("all distances identical; proximity undefined")
    return 1.0 - (d - lo) / (hi - lo)


def industry_affinity(io_table: np.ndarray) -> np.ndarray:
    """Row-normalised input-output shares: entry (i, j) is the fraction of
    industry i's inputs supplied by industry j. Rows sum to 1; the matrix is
    generally not symmetric."""
    x = np.asarray(io_table, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError("input-output table must be square")
    if np.any(x < 0):
        raise ValueError("input-output entries must be non-negative")
    row_sums = x.sum(axis=1)
    if np.any(row_sums == 0):
        raise DegenerateInputError("every industry must use some inputs (zero row)")
    return x / row_sums[:, None]


def occupation_closeness(skills: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarity between occupation skill vectors
    (rows of ``skills``). Symmetric with a unit diagonal."""
    pi = np.asarray(skills, dtype=float)
    if pi.ndim != 2:
        raise ValueError("skills must be a 2-d array (occupations x skills)")
    if np.any(pi < 0):
        raise ValueError("skill levels must be non-negative")
    norms = np.linalg.norm(pi, axis=1)
    if np.any(norms == 0):
        raise DegenerateInputError("skill vector with zero norm")
    unit = pi / norms[:, None]
    out = unit @ unit.T
    np.fill_diagonal(out, 1.0)
    return np.clip(out, 0.0, 1.0)


def minmax_normalize(matrix: np.ndarray) -> np.ndarray:
    """Rescale a matrix into [0,1]; identity on inputs already spanning [0,1]."""
    m = np.asarray(matrix, dtype=float)
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix entries must be finite")
    lo, hi = m.min(), m.max()
    if hi == lo:
        raise DegenerateInputError("constant matrix cannot be min-max normalised")
    return (m - lo) / (hi - lo)


def normalize_bundle(
    region_raw: np.ndarray,
    industry_raw: np.ndarray,
    occupation_raw: np.ndarray,
    nu_region=None,
    nu_industry=None,
    nu_occupation=None,
) -> SimilarityBundle:
    """Min-max normalise the three raw matrices into [0,1] and attach
    exponent matrices (all ones unless supplied).

    The row-stochastic affinity matrix is normalised after the row division,
    and kept on the bundle for inspection alongside its rescaled form.
    """
    region = minmax_normalize(region_raw)
    industry_rs = np.asarray(industry_raw, dtype=float)
    industry = minmax_normalize(industry_rs)
    occupation = minmax_normalize(occupation_raw)

    def ones_like(nu, mat):
        return np.ones_like(mat) if nu is None else np.asarray(nu, dtype=float)

    return SimilarityBundle(
        region=region,
        industry=industry,
        occupation=occupation,
        nu_region=ones_like(nu_region, region),
        nu_industry=ones_like(nu_industry, industry),
        nu_occupation=ones_like(nu_occupation, occupation),
        industry_row_stochastic=industry_rs,
    )


def compose_similarity(bundle: SimilarityBundle, from_cell, to_cell) -> float:
    """Similarity score between two (region, industry, occupation) cells:
    the product of the three powered base entries. Any zero base entry
    annihilates the score; a base entry of 1 is insensitive to its exponent."""
    r, i, o = from_cell
    r2, i2, o2 = to_cell
    return float(
        bundle.region[r, r2] ** bundle.nu_region[r, r2]
        * bundle.industry[i, i2] ** bundle.nu_industry[i, i2]
        * bundle.occupation[o, o2] ** bundle.nu_occupation[o, o2]
    )
