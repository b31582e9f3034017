"""Discrete-time simulation of the labour market.

Each step: positions are destroyed and recreated at rate lambda, agents age,
active agents are matched to one vacancy each (probability proportional to
the similarity score between their current/last position and the vacancy)
and apply if the move raises their lifetime utility, vacancies hire their
best-ranked applicant in random order, and agents face a survival trial with
dying agents replaced by unemployed 18-year-olds.

State is held in parallel numpy arrays (one entry per agent / position) so a
step is a handful of vectorised operations; a run is strictly deterministic
given its seed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .domain import (
    Agent,
    EconomyParams,
    JobDistribution,
    Position,
    optimal_utility,
    prefers_switch,
)
from .flows import SteadyStateParams, density_from_counts, error_xi, steady_state_reached
from .similarity import SimilarityBundle, compose_similarity

WAGE_FLOOR_FRACTION = 0.01
MAX_WAGE_REDRAWS = 100


class ConvergenceError(RuntimeError):
    """A run failed to reach the steady state within max_steps."""


@dataclass(frozen=True)
class AlphaDist:
    """Beta(a, b) consumption-preference draws rescaled into (low, high)."""

    a: float = 2.0
    b: float = 2.0
    low: float = 0.05
    high: float = 0.95

    def draw(self, rng: np.random.Generator, size=None):
        return self.low + (self.high - self.low) * rng.beta(self.a, self.b, size)


@dataclass(frozen=True)
class RunSpec:
    """Everything needed to execute one simulation run."""

    economy: EconomyParams
    jobs: JobDistribution
    bundle: SimilarityBundle
    steady: SteadyStateParams = field(default_factory=SteadyStateParams)
    collection_steps: int = 100
    vacancy_fraction: float = 800.0 / 36000.0
    age_increment: float = 1.0
    alpha_dist: AlphaDist = field(default_factory=AlphaDist)
    init_age_low: int = 18
    init_age_high: int = 64

    def with_bundle(self, bundle: SimilarityBundle) -> "RunSpec":
        from dataclasses import replace

        return replace(self, bundle=bundle)

    def with_jobs(self, jobs: JobDistribution) -> "RunSpec":
        from dataclasses import replace

        return replace(self, jobs=jobs)


@dataclass
class SimulationState:
    """Mutable state of one run; arrays are indexed by agent / position id."""

    pos_r: np.ndarray
    pos_i: np.ndarray
    pos_o: np.ndarray
    pos_wage: np.ndarray
    pos_holder: np.ndarray  # agent id, -1 while vacant
    ag_age: np.ndarray
    ag_alpha: np.ndarray
    ag_pos: np.ndarray  # position id, -1 while unemployed
    ag_r: np.ndarray  # current-or-last cell, kept in sync with ag_pos
    ag_i: np.ndarray
    ag_o: np.ndarray
    ag_wage: np.ndarray  # current-or-last wage
    step: int
    rng: np.random.Generator
    transitions: list  # rows (step, fr, fi, fo, tr, ti, to, employed_flag)

    @property
    def n_agents(self) -> int:
        return len(self.ag_age)

    @property
    def n_positions(self) -> int:
        return len(self.pos_wage)

    def position(self, pid: int) -> Position:
        holder = int(self.pos_holder[pid])
        return Position(
            id=pid,
            region=int(self.pos_r[pid]),
            industry=int(self.pos_i[pid]),
            occupation=int(self.pos_o[pid]),
            wage=float(self.pos_wage[pid]),
            holder=None if holder < 0 else holder,
        )

    def agent(self, aid: int) -> Agent:
        pos = int(self.ag_pos[aid])
        return Agent(
            id=aid,
            age=float(self.ag_age[aid]),
            alpha=float(self.ag_alpha[aid]),
            position=None if pos < 0 else pos,
            last_region=int(self.ag_r[aid]),
            last_industry=int(self.ag_i[aid]),
            last_occupation=int(self.ag_o[aid]),
            last_wage=float(self.ag_wage[aid]),
        )

    def check_links(self):
        """Raise if the agent<->position links are inconsistent."""
        filled = np.where(self.pos_holder >= 0)[0]
        holders = self.pos_holder[filled]
        if len(np.unique(holders)) != len(holders):
            raise AssertionError("a single agent fills more than one position")
        if not np.array_equal(self.ag_pos[holders], filled):
            raise AssertionError("agent/position links are not bidirectional")
        employed = np.where(self.ag_pos >= 0)[0]
        if not np.array_equal(np.sort(holders), np.sort(employed)):
            raise AssertionError("employment status disagrees with position holders")


@dataclass(frozen=True)
class SimilarityTables:
    """Per-run lookup tables derived from a bundle: the powered base
    matrices and, when small enough, the full cell-by-cell score matrix."""

    region: np.ndarray
    industry: np.ndarray
    occupation: np.ndarray
    dims: tuple
    cell_scores: Optional[np.ndarray] = None  # (n_cells, n_cells) or None

    @property
    def n_cells(self) -> int:
        n_r, n_i, n_o = self.dims
        return n_r * n_i * n_o


MAX_PRECOMPUTED_CELLS = 5000


def build_tables(bundle: SimilarityBundle) -> SimilarityTables:
    rp, ip, op = bundle.powered()
    dims = bundle.dims
    n_cells = dims[0] * dims[1] * dims[2]
    cell_scores = None
    if n_cells <= MAX_PRECOMPUTED_CELLS:
        # flat cell index (r * n_i + i) * n_o + o matches this kron ordering
        cell_scores = np.kron(np.kron(rp, ip), op)
    return SimilarityTables(
        region=rp, industry=ip, occupation=op, dims=dims, cell_scores=cell_scores
    )


def draw_wages(jobs: JobDistribution, r, i, o, rng: np.random.Generator) -> np.ndarray:
    """Normal wage draws for the given cells, truncated below at 1% of the
    cell mean by redraw (clamped after MAX_WAGE_REDRAWS attempts)."""
    mu = jobs.wage_mean[r, i, o]
    sigma = jobs.wage_std[r, i, o]
    w = rng.normal(mu, sigma)
    floor = WAGE_FLOOR_FRACTION * mu
    for _ in range(MAX_WAGE_REDRAWS):
        bad = w < floor
        if not np.any(bad):
            break
        w = np.where(bad, rng.normal(mu, sigma), w)
    return np.maximum(w, floor)


def initialize(spec: RunSpec, seed: int) -> SimulationState:
    """Build the initial population: positions laid out exactly per the job
    distribution counts, a configured fraction left vacant, the rest filled
    by randomly chosen agents; leftover agents start unemployed."""
    econ = spec.economy
    jobs = spec.jobs
    rng = np.random.default_rng(seed)
    P, N = econ.n_positions, econ.n_agents
    if jobs.total != P:
        raise ValueError(f"job distribution holds {jobs.total} positions, expected {P}")

    flat_cells = np.repeat(np.arange(jobs.counts.size), jobs.counts.ravel())
    pos_r, pos_i, pos_o = np.unravel_index(flat_cells, jobs.shape)
    pos_r, pos_i, pos_o = pos_r.copy(), pos_i.copy(), pos_o.copy()
    pos_wage = draw_wages(jobs, pos_r, pos_i, pos_o, rng)

    pos_holder = np.full(P, -1, dtype=np.int64)
    n_vacant = int(round(spec.vacancy_fraction * P))
    vacant = rng.choice(P, size=n_vacant, replace=False)
    fillable = np.setdiff1d(np.arange(P), vacant)
    n_fill = min(N, len(fillable))
    slots = rng.permutation(fillable)[:n_fill]
    workers = rng.permutation(N)[:n_fill]
    pos_holder[slots] = workers

    ag_age = rng.integers(spec.init_age_low, spec.init_age_high + 1, size=N).astype(float)
    ag_alpha = spec.alpha_dist.draw(rng, N)
    ag_pos = np.full(N, -1, dtype=np.int64)
    ag_pos[workers] = slots

    ag_r = np.empty(N, dtype=np.int64)
    ag_i = np.empty(N, dtype=np.int64)
    ag_o = np.empty(N, dtype=np.int64)
    ag_wage = np.empty(N, dtype=float)
    ag_r[workers] = pos_r[slots]
    ag_i[workers] = pos_i[slots]
    ag_o[workers] = pos_o[slots]
    ag_wage[workers] = pos_wage[slots]

    jobless = np.where(ag_pos < 0)[0]
    if len(jobless):
        lr, li, lo = jobs.sample_cells(rng, len(jobless))
        ag_r[jobless], ag_i[jobless], ag_o[jobless] = lr, li, lo
        ag_wage[jobless] = draw_wages(jobs, lr, li, lo, rng)

    return SimulationState(
        pos_r=pos_r,
        pos_i=pos_i,
        pos_o=pos_o,
        pos_wage=pos_wage,
        pos_holder=pos_holder,
        ag_age=ag_age,
        ag_alpha=ag_alpha,
        ag_pos=ag_pos,
        ag_r=ag_r,
        ag_i=ag_i,
        ag_o=ag_o,
        ag_wage=ag_wage,
        step=0,
        rng=rng,
        transitions=[],
    )


def match_and_apply(
    agent: Agent,
    vacancies,
    bundle: SimilarityBundle,
    rng: np.random.Generator,
    gamma: float,
) -> Optional[int]:
    """Sample one vacancy for an active agent (probability proportional to
    the similarity score from the agent's current/last position) and decide
    whether they apply. Employed agents apply only if the move raises their
    utility; unemployed agents apply to any match. Returns the position id
    applied to, or None."""
    if not vacancies:
        return None
    scores = np.array(
        [compose_similarity(bundle, agent.cell, v.cell) for v in vacancies]
    )
    total = scores.sum()
    if total <= 0:
        return None
    pick = rng.choice(len(vacancies), p=scores / total)
    target = vacancies[pick]
    if agent.employed and not prefers_switch(agent, target.wage, gamma):
        return None
    return target.id


def rank_and_hire(applications) -> Optional[int]:
    """Choose the winning applicant: highest similarity score, ties broken
    by earliest submission index. ``applications`` holds (agent_id, score,
    submission_index) entries; returns the hired agent id or None."""
    best = None
    for agent_id, score, submission in applications:
        if best is None or score > best[1] or (score == best[1] and submission < best[2]):
            best = (agent_id, score, submission)
    return None if best is None else best[0]


def step(state: SimulationState, spec: RunSpec, tables: Optional[SimilarityTables] = None) -> int:
    """Advance the simulation one step in place. Returns the number of
    positions destroyed this step."""
    econ = spec.economy
    jobs = spec.jobs
    rng = state.rng
    if tables is None:
        tables = build_tables(spec.bundle)
    N, P = state.n_agents, state.n_positions

    # 1-2. destroy positions, create replacements from the job distribution
    destroyed = np.where(rng.random(P) < econ.lam)[0]
    if len(destroyed):
        occupants = state.pos_holder[destroyed]
        occupants = occupants[occupants >= 0]
        state.ag_pos[occupants] = -1  # last_* fields already hold the old cell
        nr, ni, no = jobs.sample_cells(rng, len(destroyed))
        state.pos_r[destroyed] = nr
        state.pos_i[destroyed] = ni
        state.pos_o[destroyed] = no
        state.pos_wage[destroyed] = draw_wages(jobs, nr, ni, no, rng)
        state.pos_holder[destroyed] = -1

    # 3. aging
    state.ag_age += spec.age_increment

    # 4. activation, matching, application
    employed = state.ag_pos >= 0
    act_prob = np.where(employed, econ.theta_e, econ.theta_ue)
    active = np.where(rng.random(N) < act_prob)[0]
    vacant = np.where(state.pos_holder < 0)[0]

    apps_by_vacancy: dict = {}
    if len(active) and len(vacant):
        # Agents sharing a (region, industry, occupation) cell see identical
        # score rows, so matching works on unique cells: sample a vacancy
        # cell with probability proportional to score x cell vacancy count,
        # then a uniform vacancy within it.
        n_r, n_i, n_o = tables.dims
        ag_cell = (state.ag_r[active] * n_i + state.ag_i[active]) * n_o + state.ag_o[active]
        vac_cell = (state.pos_r[vacant] * n_i + state.pos_i[vacant]) * n_o + state.pos_o[vacant]
        ua_cells, ag_row = np.unique(ag_cell, return_inverse=True)
        uv_cells, vac_counts = np.unique(vac_cell, return_counts=True)
        if tables.cell_scores is not None:
            scores = tables.cell_scores[np.ix_(ua_cells, uv_cells)]
        else:
            ua_r, rem = np.divmod(ua_cells, n_i * n_o)
            ua_i, ua_o = np.divmod(rem, n_o)
            uv_r, rem = np.divmod(uv_cells, n_i * n_o)
            uv_i, uv_o = np.divmod(rem, n_o)
            scores = (
                tables.region[ua_r[:, None], uv_r[None, :]]
                * tables.industry[ua_i[:, None], uv_i[None, :]]
                * tables.occupation[ua_o[:, None], uv_o[None, :]]
            )
        weights = scores * vac_counts[None, :]
        totals = weights.sum(axis=1)
        cdf = np.cumsum(weights, axis=1)
        cdf /= np.where(totals > 0, totals, 1.0)[:, None]
        cdf[:, -1] = 1.0
        flat = (np.arange(len(ua_cells))[:, None] + cdf).ravel()

        u = rng.random(len(active))
        col = np.searchsorted(flat, ag_row + u, side="right") - ag_row * len(uv_cells)
        col = np.clip(col, 0, len(uv_cells) - 1)
        matchable = totals[ag_row] > 0

        by_cell = np.argsort(vac_cell, kind="stable")
        cell_start = np.concatenate([[0], np.cumsum(vac_counts)])
        u2 = rng.random(len(active))
        within = np.minimum(
            (u2 * vac_counts[col]).astype(np.int64), vac_counts[col] - 1
        )
        picks = by_cell[cell_start[col] + within]  # index into `vacant`
        pick_scores = scores[ag_row, col]

        cand_wage = state.pos_wage[vacant[picks]]
        gains = optimal_utility(
            state.ag_age[active], state.ag_alpha[active], cand_wage, econ.gamma
        ) > optimal_utility(
            state.ag_age[active], state.ag_alpha[active], state.ag_wage[active], econ.gamma
        )
        applies = matchable & (~employed[active] | gains)

        for submission, idx in enumerate(np.where(applies)[0]):
            agent_id = active[idx]
            v = vacant[picks[idx]]
            apps_by_vacancy.setdefault(v, []).append(
                (agent_id, pick_scores[idx], submission)
            )

    # 5. hiring: vacancies with applicants processed in random order
    if apps_by_vacancy:
        slots = np.array(sorted(apps_by_vacancy))
        order = rng.permutation(len(slots))
        hired = np.zeros(N, dtype=bool)
        for v in slots[order]:
            candidates = [a for a in apps_by_vacancy[v] if not hired[a[0]]]
            winner = rank_and_hire(candidates)
            if winner is None:
                continue
            hired[winner] = True
            was_employed = int(state.ag_pos[winner] >= 0)
            state.transitions.append(
                (
                    state.step,
                    int(state.ag_r[winner]),
                    int(state.ag_i[winner]),
                    int(state.ag_o[winner]),
                    int(state.pos_r[v]),
                    int(state.pos_i[v]),
                    int(state.pos_o[v]),
                    was_employed,
                )
            )
            old = state.ag_pos[winner]
            if old >= 0:
                state.pos_holder[old] = -1
            state.pos_holder[v] = winner
            state.ag_pos[winner] = v
            state.ag_r[winner] = state.pos_r[v]
            state.ag_i[winner] = state.pos_i[v]
            state.ag_o[winner] = state.pos_o[v]
            state.ag_wage[winner] = state.pos_wage[v]

    # 6. survival trial; dying agents are replaced by unemployed entrants
    ages = np.clip(np.floor(state.ag_age).astype(np.int64), 0, econ.max_age)
    dying = np.where(rng.random(N) >= econ.survival[ages])[0]
    if len(dying):
        held = state.ag_pos[dying]
        state.pos_holder[held[held >= 0]] = -1
        state.ag_pos[dying] = -1
        state.ag_age[dying] = econ.entry_age
        state.ag_alpha[dying] = spec.alpha_dist.draw(rng, len(dying))
        lr, li, lo = jobs.sample_cells(rng, len(dying))
        state.ag_r[dying], state.ag_i[dying], state.ag_o[dying] = lr, li, lo
        state.ag_wage[dying] = draw_wages(jobs, lr, li, lo, rng)

    state.step += 1
    return len(destroyed)


@dataclass
class RunResult:
    state: SimulationState
    flows: dict  # dimension -> density matrix over the collection window
    xi_history: np.ndarray
    steady_step: int
    collection_transitions: np.ndarray
    destroyed_per_step: np.ndarray


def run(spec: RunSpec, seed: int, observed=None) -> RunResult:
    """Run to the steady state, then for ``collection_steps`` more steps,
    and return flow densities accumulated over the collection window only.

    ``observed`` is an optional (region, industry, occupation) density
    triple used as the reference of the error series; without one the error
    series tracks the norms of the cumulative densities themselves (any
    fixed reference detects stabilisation equally).
    """
    n_r, n_i, n_o = spec.bundle.dims
    if observed is None:
        observed = (np.zeros((n_r, n_r)), np.zeros((n_i, n_i)), np.zeros((n_o, n_o)))

    state = initialize(spec, seed)
    tables = build_tables(spec.bundle)
    dims_n = (n_r, n_i, n_o)
    cum = [np.zeros((n, n)) for n in dims_n]
    seen = 0
    xi_history = []
    destroyed_per_step = []
    steady = spec.steady
    steady_step = -1

    for _ in range(steady.max_steps):
        destroyed_per_step.append(step(state, spec, tables))
        new = state.transitions[seen:]
        seen = len(state.transitions)
        for row in new:
            cum[0][row[1], row[4]] += 1
            cum[1][row[2], row[5]] += 1
            cum[2][row[3], row[6]] += 1
        densities = tuple(density_from_counts(c) for c in cum)
        xi_history.append(error_xi(densities, observed))
        if len(xi_history) >= steady.window + steady.lag + 1 and steady_state_reached(
            xi_history, steady
        ):
            steady_step = state.step
            break

    if steady_step < 0:
        raise ConvergenceError(
            f"steady state not reached within {steady.max_steps} steps "
            f"(last error {xi_history[-1]:.6g})"
        )

    collection_start = len(state.transitions)
    for _ in range(spec.collection_steps):
        destroyed_per_step.append(step(state, spec, tables))

    collected = np.array(
        state.transitions[collection_start:], dtype=np.int64
    ).reshape(-1, 8)
    from .flows import accumulate

    flow_mats = {
        "region": accumulate(collected, "region", n_r),
        "industry": accumulate(collected, "industry", n_i),
        "occupation": accumulate(collected, "occupation", n_o),
    }
    return RunResult(
        state=state,
        flows=flow_mats,
        xi_history=np.asarray(xi_history),
        steady_step=steady_step,
        collection_transitions=collected,
        destroyed_per_step=np.asarray(destroyed_per_step),
    )


def suite_threads(default: Optional[int] = None) -> int:
    """Parallelism cap for Monte Carlo suites, via the LFN_THREADS env var."""
    env = os.environ.get("LFN_THREADS")
    if env:
        return max(1, int(env))
    if default is not None:
        return default
    return os.cpu_count() or 1


def run_suite(spec: RunSpec, seeds, observed=None, n_jobs: Optional[int] = None):
    """Run independent simulations for each seed, in parallel, returning
    results ordered by their position in ``seeds`` (so the output is
    deterministic regardless of scheduling)."""
    from joblib import Parallel, delayed

    n_jobs = suite_threads(n_jobs)
    if n_jobs == 1 or len(seeds) == 1:
        return [run(spec, s, observed) for s in seeds]
    return Parallel(n_jobs=min(n_jobs, len(seeds)))(
        delayed(run)(spec, s, observed) for s in seeds
    )
