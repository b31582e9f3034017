"""Scenario configuration, dataset ingestion, synthetic-data generation,
and result serialisation.

Configs are JSON; matrices, logs, and tables are CSV with category-label
headers, so a user holding licensed microdata can drop in real files with
the same schemas.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .calibration import CalibrationConfig
from .domain import EconomyParams, JobDistribution
from .engine import AlphaDist, RunSpec
from .flows import SteadyStateParams
from .shocks import ShockSpec
from .similarity import SimilarityBundle, normalize_bundle, industry_affinity, occupation_closeness, region_similarity

DEFAULT_LAMBDA = 0.0463
DEFAULT_GAMMA = 0.9662
DEFAULT_ENTRY_AGE = 18
DEFAULT_VACANCY_FRACTION = 800.0 / 36000.0
DEFAULT_THETA_E = 0.10  # fixture defaults; override per scenario
DEFAULT_THETA_UE = 0.50
MAX_AGE = 110

_FLOAT_FMT = "{:.17g}"


class ScenarioError(ValueError):
    """Configuration or input-file validation failure."""


@dataclass(frozen=True)
class NodeMetadata:
    regions: tuple
    industries: tuple
    occupations: tuple

    def __post_init__(self):
        for name in ("regions", "industries", "occupations"):
            labels = tuple(getattr(self, name))
            if len(set(labels)) != len(labels):
                raise ScenarioError(f"duplicate {name} labels")
            object.__setattr__(self, name, labels)

    @property
    def dims(self):
        return (len(self.regions), len(self.industries), len(self.occupations))


@dataclass(frozen=True)
class ScenarioConfig:
    """A fully loaded and cross-validated run specification."""

    raw: dict
    path: Path
    economy: EconomyParams
    jobs: JobDistribution
    bundle: SimilarityBundle
    labels: NodeMetadata
    steady: SteadyStateParams
    seeds: tuple
    collection_steps: int
    age_increment: float
    vacancy_fraction: float
    alpha_dist: AlphaDist
    output_dir: Path
    calibration: Optional[CalibrationConfig] = None
    shock: Optional[ShockSpec] = None

    @property
    def config_hash(self) -> str:
        return config_hash(self.raw)

    def to_runspec(self) -> RunSpec:
        return RunSpec(
            economy=self.economy,
            jobs=self.jobs,
            bundle=self.bundle,
            steady=self.steady,
            collection_steps=self.collection_steps,
            vacancy_fraction=self.vacancy_fraction,
            age_increment=self.age_increment,
            alpha_dist=self.alpha_dist,
        )


def config_hash(raw: dict) -> str:
    canonical = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


# ---------------------------------------------------------------------------
# CSV helpers


def write_matrix_csv(path, matrix, row_labels, col_labels):
    matrix = np.asarray(matrix, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([""] + list(col_labels))
        for label, row in zip(row_labels, matrix):
            writer.writerow([label] + [_FLOAT_FMT.format(v) for v in row])


def read_matrix_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ScenarioError(f"{path}: empty matrix file")
    col_labels = rows[0][1:]
    row_labels = [r[0] for r in rows[1:]]
    values = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    return values, row_labels, col_labels


def write_jobs_csv(path, jobs: JobDistribution, labels: NodeMetadata):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["region", "industry", "occupation", "count", "wage_mean", "wage_std"])
        n_r, n_i, n_o = jobs.shape
        for r in range(n_r):
            for i in range(n_i):
                for o in range(n_o):
                    writer.writerow(
                        [
                            labels.regions[r],
                            labels.industries[i],
                            labels.occupations[o],
                            int(jobs.counts[r, i, o]),
                            _FLOAT_FMT.format(jobs.wage_mean[r, i, o]),
                            _FLOAT_FMT.format(jobs.wage_std[r, i, o]),
                        ]
                    )


def read_jobs_csv(path, labels: NodeMetadata) -> JobDistribution:
    r_idx = {lab: k for k, lab in enumerate(labels.regions)}
    i_idx = {lab: k for k, lab in enumerate(labels.industries)}
    o_idx = {lab: k for k, lab in enumerate(labels.occupations)}
    shape = labels.dims
    counts = np.zeros(shape, dtype=np.int64)
    mean = np.zeros(shape)
    std = np.zeros(shape)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                cell = (r_idx[row["region"]], i_idx[row["industry"]], o_idx[row["occupation"]])
            except KeyError as exc:
                raise ScenarioError(f"{path}: unknown category label {exc}") from exc
            counts[cell] = int(row["count"])
            mean[cell] = float(row["wage_mean"])
            std[cell] = float(row["wage_std"])
    return JobDistribution(counts=counts, wage_mean=mean, wage_std=std)


def write_survival_csv(path, survival, entry_age):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["age", "survival_probability"])
        for age in range(entry_age, len(survival)):
            writer.writerow([age, _FLOAT_FMT.format(survival[age])])


def read_survival_csv(path, entry_age) -> np.ndarray:
    pairs = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            pairs[int(row["age"])] = float(row["survival_probability"])
    if not pairs:
        raise ScenarioError(f"{path}: empty survival table")
    max_age = max(pairs)
    surv = np.ones(max_age + 1)
    for age in range(entry_age, max_age + 1):
        if age not in pairs:
            raise ScenarioError(f"{path}: survival table misses age {age}")
        surv[age] = pairs[age]
    return surv


def write_transitions_csv(path, transitions):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["step", "from_r", "from_i", "from_o", "to_r", "to_i", "to_o", "mover_status"]
        )
        for row in np.asarray(transitions, dtype=np.int64).reshape(-1, 8):
            writer.writerow(
                [int(v) for v in row[:7]] + ["employed" if row[7] else "unemployed"]
            )


def write_xi_csv(path, xi_history):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "xi"])
        for step, xi in enumerate(xi_history):
            writer.writerow([step, _FLOAT_FMT.format(xi)])


def read_xi_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        return np.array([float(row["xi"]) for row in csv.DictReader(fh)])


# ---------------------------------------------------------------------------
# Synthetic fixture generation


def generate_synthetic(
    dims,
    n_agents: int,
    n_positions: int,
    seed: int,
    out_dir,
    n_skills: int = 12,
) -> Path:
    """Write a complete synthetic input set (distances, input-output table,
    skills, jobs, survival, labels, scenario.json) under ``out_dir``.
    Deterministic given the seed; returns the scenario.json path."""
    n_r, n_i, n_o = dims
    if min(n_r, n_i, n_o) < 2:
        raise ScenarioError("need at least two categories per dimension")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    labels = NodeMetadata(
        regions=tuple(f"R{k:02d}" for k in range(n_r)),
        industries=tuple(f"I{k:02d}" for k in range(n_i)),
        occupations=tuple(f"O{k:02d}" for k in range(n_o)),
    )

    # Regions as random planar points; distances are pairwise Euclidean.
    points = rng.uniform(0.0, 100.0, size=(n_r, 2))
    diff = points[:, None, :] - points[None, :, :]
    distances = np.sqrt((diff**2).sum(axis=2))
    write_matrix_csv(out / "distances.csv", distances, labels.regions, labels.regions)

    io_table = rng.lognormal(mean=0.0, sigma=1.0, size=(n_i, n_i))
    write_matrix_csv(out / "io_table.csv", io_table, labels.industries, labels.industries)

    skills = rng.uniform(0.0, 5.0, size=(n_o, n_skills))
    write_matrix_csv(
        out / "skills.csv",
        skills,
        labels.occupations,
        [f"S{k:02d}" for k in range(n_skills)],
    )

    counts = rng.multinomial(n_positions, rng.dirichlet(np.ones(n_r * n_i * n_o))).reshape(
        n_r, n_i, n_o
    )
    wage_mean = rng.lognormal(mean=np.log(25_000.0), sigma=0.3, size=(n_r, n_i, n_o))
    wage_std = 0.2 * wage_mean
    jobs = JobDistribution(counts=counts, wage_mean=wage_mean, wage_std=wage_std)
    write_jobs_csv(out / "jobs.csv", jobs, labels)

    # Logistic mortality rising with age; survival forced to zero at MAX_AGE.
    ages = np.arange(MAX_AGE + 1)
    mortality = 5e-4 + 1.0 / (1.0 + np.exp(-(ages - 92.0) / 5.0))
    survival = np.clip(1.0 - mortality, 0.0, 1.0)
    survival[MAX_AGE] = 0.0
    write_survival_csv(out / "survival.csv", survival, DEFAULT_ENTRY_AGE)

    with open(out / "labels.json", "w") as fh:
        json.dump(
            {
                "regions": list(labels.regions),
                "industries": list(labels.industries),
                "occupations": list(labels.occupations),
            },
            fh,
            indent=2,
            sort_keys=True,
        )

    config = {
        "economy": {
            "n_agents": n_agents,
            "n_positions": n_positions,
            "lambda": DEFAULT_LAMBDA,
            "gamma": DEFAULT_GAMMA,
            "theta_e": DEFAULT_THETA_E,
            "theta_ue": DEFAULT_THETA_UE,
            "entry_age": DEFAULT_ENTRY_AGE,
        },
        "paths": {
            "distances": "distances.csv",
            "io_table": "io_table.csv",
            "skills": "skills.csv",
            "jobs": "jobs.csv",
            "survival": "survival.csv",
            "labels": "labels.json",
        },
        "alpha_dist": {"a": 2.0, "b": 2.0, "low": 0.05, "high": 0.95},
        "steady_state": {"window": 20, "lag": 20, "epsilon": 1e-3, "max_steps": 2000},
        "collection_steps": 100,
        "seeds": [0, 1, 2],
        "age_increment": 1.0,
        "vacancy_fraction": DEFAULT_VACANCY_FRACTION,
        "output_dir": "out",
    }
    scenario_path = out / "scenario.json"
    with open(scenario_path, "w") as fh:
        json.dump(config, fh, indent=2, sort_keys=True)
    return scenario_path


# ---------------------------------------------------------------------------
# Scenario loading


def _require(raw: dict, key: str, kind, default=None):
    value = raw.get(key, default)
    if value is None:
        raise ScenarioError(f"missing required config field {key!r}")
    try:
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid value for config field {key!r}: {value!r}") from exc


def load_scenario(path) -> ScenarioConfig:
    """Load and fully validate a scenario JSON, including cross-file
    category-count consistency between all referenced inputs."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from exc
    base = path.parent

    paths = raw.get("paths", {})
    for name in ("distances", "io_table", "skills", "jobs", "survival", "labels"):
        if name not in paths:
            raise ScenarioError(f"missing input path {name!r} in config")
        if not (base / paths[name]).exists():
            raise ScenarioError(f"referenced file does not exist: {paths[name]}")

    with open(base / paths["labels"]) as fh:
        lab = json.load(fh)
    labels = NodeMetadata(
        regions=tuple(lab["regions"]),
        industries=tuple(lab["industries"]),
        occupations=tuple(lab["occupations"]),
    )
    n_r, n_i, n_o = labels.dims

    distances, d_rows, d_cols = read_matrix_csv(base / paths["distances"])
    if list(d_rows) != list(labels.regions) or list(d_cols) != list(labels.regions):
        raise ScenarioError(
            f"dimension mismatch between {paths['distances']} and {paths['labels']}: "
            f"{len(d_rows)} regions vs {n_r}"
        )
    io_table, i_rows, _ = read_matrix_csv(base / paths["io_table"])
    if list(i_rows) != list(labels.industries):
        raise ScenarioError(
            f"dimension mismatch between {paths['io_table']} and {paths['labels']}: "
            f"{len(i_rows)} industries vs {n_i}"
        )
    skills, s_rows, _ = read_matrix_csv(base / paths["skills"])
    if list(s_rows) != list(labels.occupations):
        raise ScenarioError(
            f"dimension mismatch between {paths['skills']} and {paths['labels']}: "
            f"{len(s_rows)} occupations vs {n_o}"
        )

    nu = {}
    for name, expect in (("nu_region", n_r), ("nu_industry", n_i), ("nu_occupation", n_o)):
        if name in paths:
            mat, rows, _ = read_matrix_csv(base / paths[name])
            if len(rows) != expect:
                raise ScenarioError(f"dimension mismatch in {paths[name]}")
            nu[name] = mat
    bundle = normalize_bundle(
        region_similarity(distances),
        industry_affinity(io_table),
        occupation_closeness(skills),
        nu_region=nu.get("nu_region"),
        nu_industry=nu.get("nu_industry"),
        nu_occupation=nu.get("nu_occupation"),
    )

    jobs = read_jobs_csv(base / paths["jobs"], labels)

    econ_raw = raw.get("economy", {})
    entry_age = int(econ_raw.get("entry_age", DEFAULT_ENTRY_AGE))
    survival = read_survival_csv(base / paths["survival"], entry_age)
    economy = EconomyParams(
        n_agents=_require(econ_raw, "n_agents", int),
        n_positions=_require(econ_raw, "n_positions", int),
        lam=float(econ_raw.get("lambda", DEFAULT_LAMBDA)),
        gamma=float(econ_raw.get("gamma", DEFAULT_GAMMA)),
        theta_e=float(econ_raw.get("theta_e", DEFAULT_THETA_E)),
        theta_ue=float(econ_raw.get("theta_ue", DEFAULT_THETA_UE)),
        survival=survival,
        entry_age=entry_age,
    )
    if jobs.total != economy.n_positions:
        raise ScenarioError(
            f"jobs file holds {jobs.total} positions but economy.n_positions is "
            f"{economy.n_positions}"
        )

    ss_raw = raw.get("steady_state", {})
    steady = SteadyStateParams(
        window=int(ss_raw.get("window", 20)),
        lag=int(ss_raw.get("lag", 20)),
        epsilon=float(ss_raw.get("epsilon", 1e-3)),
        max_steps=int(ss_raw.get("max_steps", 2000)),
    )

    ad = raw.get("alpha_dist", {})
    alpha_dist = AlphaDist(
        a=float(ad.get("a", 2.0)),
        b=float(ad.get("b", 2.0)),
        low=float(ad.get("low", 0.05)),
        high=float(ad.get("high", 0.95)),
    )

    calibration = None
    if "calibration" in raw:
        cal = raw["calibration"]
        calibration = CalibrationConfig(
            m_simulations=int(cal.get("m_simulations", 5)),
            threshold=float(cal.get("threshold", 1e-3)),
            max_iterations=int(cal.get("max_iterations", 30)),
            seeds=tuple(cal.get("seeds", [])),
            fixed_seeds=bool(cal.get("fixed_seeds", True)),
            signed_mean_error=bool(cal.get("signed_mean_error", False)),
        )

    shock = None
    if "shock" in raw:
        sh = raw["shock"]
        shock = ShockSpec(
            kind=sh["kind"],
            industries=tuple(sh["industries"]),
            homogenise=tuple(sh.get("homogenise", [])),
            sigma_multiplier=float(sh.get("sigma_multiplier", 2.0)),
            seed=int(sh.get("seed", 0)),
            target_override=sh.get("target_override"),
        )

    vacancy_fraction = float(raw.get("vacancy_fraction", DEFAULT_VACANCY_FRACTION))
    if not 0.0 <= vacancy_fraction < 1.0:
        raise ScenarioError("vacancy_fraction must lie in [0, 1)")

    return ScenarioConfig(
        raw=raw,
        path=path,
        economy=economy,
        jobs=jobs,
        bundle=bundle,
        labels=labels,
        steady=steady,
        seeds=tuple(raw.get("seeds", [0])),
        collection_steps=int(raw.get("collection_steps", 100)),
        age_increment=float(raw.get("age_increment", 1.0)),
        vacancy_fraction=vacancy_fraction,
        alpha_dist=alpha_dist,
        output_dir=base / raw.get("output_dir", "out"),
        calibration=calibration,
        shock=shock,
    )


# ---------------------------------------------------------------------------
# Result serialisation


def write_results(
    output_dir,
    cfg_hash: str,
    labels: Optional[NodeMetadata] = None,
    flows: Optional[dict] = None,  # seed -> {dimension: matrix}
    transitions: Optional[dict] = None,  # seed -> transition rows
    xi: Optional[dict] = None,  # seed -> xi history
    nu: Optional[dict] = None,  # {"region": matrix, ...}
    reports: Optional[dict] = None,  # name -> JSON-serialisable object
) -> dict:
    """Write run outputs under ``output_dir`` and return the manifest, which
    lists every emitted file with its seed (where applicable) and the config
    hash. The manifest itself is written as manifest.json."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = []

    def dim_labels(dim):
        if labels is None:
            return None
        return {
            "region": labels.regions,
            "industry": labels.industries,
            "occupation": labels.occupations,
        }[dim]

    def matrix_labels(dim, n):
        lab = dim_labels(dim)
        return lab if lab is not None else [str(k) for k in range(n)]

    for seed in sorted(flows or {}):
        for dim, mat in sorted((flows or {})[seed].items()):
            name = f"flows_{dim}_seed{seed}.csv"
            lab = matrix_labels(dim, len(mat))
            write_matrix_csv(out / name, mat, lab, lab)
            files.append({"name": name, "seed": seed})
    for seed in sorted(transitions or {}):
        name = f"transitions_seed{seed}.csv"
        write_transitions_csv(out / name, (transitions or {})[seed])
        files.append({"name": name, "seed": seed})
    for seed in sorted(xi or {}):
        name = f"xi_seed{seed}.csv"
        write_xi_csv(out / name, (xi or {})[seed])
        files.append({"name": name, "seed": seed})
    for dim, mat in sorted((nu or {}).items()):
        name = f"nu_{dim}.csv"
        lab = matrix_labels(dim, len(mat))
        write_matrix_csv(out / name, mat, lab, lab)
        files.append({"name": name, "seed": None})
    for name, obj in sorted((reports or {}).items()):
        fname = f"{name}.json"
        with open(out / fname, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
        files.append({"name": fname, "seed": None})

    manifest = {"config_hash": cfg_hash, "files": files}
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return manifest
