"""Quantitative comparisons between density matrices and vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

EXACT_MWU_LIMIT = 8  # exact enumeration up to this group size, normal approx beyond


class DegenerateComparisonError(ValueError):
    """The inputs carry no variation to compare."""


@dataclass(frozen=True)
class FitReport:
    pearson: float
    frobenius: float


def pearson(a, b) -> float:
    """Pearson correlation over flattened entries (all cells, diagonal
    included)."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise DegenerateComparisonError("constant input has no defined correlation")
    return float(np.corrcoef(a, b)[0, 1])


def frobenius_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    return float(np.linalg.norm(a - b))


def fit_report(a, b) -> FitReport:
    return FitReport(pearson=pearson(a, b), frobenius=frobenius_distance(a, b))


def fit_table(observed: dict, simulated: dict) -> dict:
    """Per-dimension fit plus a cell-count-weighted total, as a plain dict
    ready for JSON serialisation."""
    out = {}
    weights = []
    pearsons = []
    frobs = []
    for dim in observed:
        rep = fit_report(observed[dim], simulated[dim])
        out[dim] = {"pearson": rep.pearson, "frobenius": rep.frobenius}
        w = np.asarray(observed[dim]).size
        weights.append(w)
        pearsons.append(rep.pearson)
        frobs.append(rep.frobenius)
    weights = np.asarray(weights, dtype=float)
    weights /= weights.sum()
    out["total"] = {
        "pearson": float(np.dot(weights, pearsons)),
        "frobenius": float(np.dot(weights, frobs)),
    }
    return out


def weighted_jaccard_distance(da, db) -> float:
    """1 minus the ratio of elementwise minima to maxima of two non-negative
    density vectors. 0 iff equal, 1 iff supports are disjoint."""
    da = np.asarray(da, dtype=float).ravel()
    db = np.asarray(db, dtype=float).ravel()
    if da.shape != db.shape:
        raise ValueError("length mismatch")
    if np.any(da < 0) or np.any(db < 0):
        raise ValueError("entries must be non-negative")
    denom = np.maximum(da, db).sum()
    if denom == 0:
        raise DegenerateComparisonError("both vectors are all-zero")
    return float(1.0 - np.minimum(da, db).sum() / denom)


def weighted_clustering(matrix) -> float:
    """Average weighted clustering coefficient of a non-negative flow matrix.

    The directed matrix is collapsed to an undirected graph by summing
    opposing edge weights; per-node coefficients use the geometric mean of
    the three (max-normalised) triangle weights, divided by the number of
    neighbour pairs. Nodes with fewer than two neighbours contribute 0.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if np.any(a < 0):
        raise ValueError("weights must be non-negative")
    w = a + a.T
    np.fill_diagonal(w, 0.0)
    top = w.max()
    if top == 0:
        return 0.0
    w_hat = (w / top) ** (1.0 / 3.0)
    triangle = np.diagonal(w_hat @ w_hat @ w_hat)
    degree = (w > 0).sum(axis=1)
    pairs = degree * (degree - 1)
    coeffs = np.where(pairs > 0, triangle / np.maximum(pairs, 1), 0.0)
    return float(coeffs.mean())


def _u_statistic(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    greater = (x[:, None] > y[None, :]).sum()
    equal = (x[:, None] == y[None, :]).sum()
    return float(greater + 0.5 * equal)


def _exact_p(pooled, n, u) -> float:
    """Two-sided p by enumerating every split of the pooled sample.

    Ties are handled through midranks: for a subset I of pooled indices,
    U = sum(midrank[I]) - n(n+1)/2.
    """
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(len(pooled))
    sorted_vals = pooled[order]
    i = 0
    while i < len(pooled):
        j = i
        while j < len(pooled) and sorted_vals[j] == sorted_vals[i]:
            j += 1
        ranks[order[i:j]] = 0.5 * (i + j - 1) + 1.0
        i = j
    nm = n * (len(pooled) - n)
    offset = n * (n + 1) / 2.0
    u_low = min(u, nm - u)
    u_high = nm - u_low
    hits = 0
    total = 0
    for subset in combinations(range(len(pooled)), n):
        u_s = ranks[list(subset)].sum() - offset
        total += 1
        if u_s <= u_low + 1e-9 or u_s >= u_high - 1e-9:
            hits += 1
    return min(1.0, hits / total)


def _normal_p(pooled, n, m, u) -> float:
    """Normal approximation with tie correction and continuity correction."""
    nm = n * m
    total = n + m
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = ((counts**3 - counts).sum()) / (total * (total - 1))
    var = nm / 12.0 * (total + 1 - tie_term)
    if var <= 0:
        return 1.0
    shift = u - nm / 2.0
    z = (abs(shift) - 0.5) / math.sqrt(var)
    z = max(z, 0.0)
    return min(1.0, math.erfc(z / math.sqrt(2.0)))


def mann_whitney_u(x, y):
    """Two-sided Mann-Whitney U test.

    Returns (U, p) where U counts pairs with x > y (ties at half weight).
    Exact enumeration over rank splits when both groups have at most
    EXACT_MWU_LIMIT observations, normal approximation with tie correction
    otherwise.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if len(x) == 0 or len(y) == 0:
        raise ValueError("both samples must be non-empty")
    u = _u_statistic(x, y)
    pooled = np.concatenate([x, y])
    if len(x) <= EXACT_MWU_LIMIT and len(y) <= EXACT_MWU_LIMIT:
        p = _exact_p(pooled, len(x), u)
    else:
        p = _normal_p(pooled, len(x), len(y), u)
    return u, p
