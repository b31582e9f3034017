import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from labourflow.domain import (
    Agent,
    DomainError,
    EconomyParams,
    JobDistribution,
    Position,
    optimal_utility,
    prefers_switch,
)

GAMMA = 0.9662


def grid_max_utility(age, alpha, wage, gamma, n=10001):
    """Independent oracle: brute-force maximisation of discounted
    Cobb-Douglas utility over the leisure grid, with consumption tied to
    hours worked."""
    l = np.linspace(0.0, 1.0, n)
    c = (1.0 - l) * wage
    u = gamma**age / (1.0 - gamma) * c**alpha * l ** (1.0 - alpha)
    return u.max()


class TestOptimalUtility:
    def test_reference_value(self):
        # alpha=0.5, w=1: 0.5 / (1 - gamma)
        expected = 0.5 / (1.0 - GAMMA)
        assert optimal_utility(0, 0.5, 1.0, GAMMA) == pytest.approx(expected, rel=1e-12)
        assert optimal_utility(0, 0.5, 1.0, GAMMA) == pytest.approx(14.7929, abs=5e-4)

    def test_scales_with_wage_power_alpha(self):
        base = optimal_utility(0, 0.5, 1.0, GAMMA)
        assert optimal_utility(0, 0.5, 4.0, GAMMA) == pytest.approx(2.0 * base, rel=1e-12)

    def test_matches_grid_search_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            age = int(rng.integers(18, 90))
            alpha = float(rng.uniform(0.05, 0.95))
            wage = float(rng.uniform(0.5, 100_000.0))
            closed = optimal_utility(age, alpha, wage, GAMMA)
            brute = grid_max_utility(age, alpha, wage, GAMMA)
            assert closed == pytest.approx(brute, rel=1e-4)

    @given(
        w1=st.floats(0.1, 1e5),
        w2=st.floats(0.1, 1e5),
        alpha=st.floats(0.05, 0.95),
        age=st.integers(0, 100),
    )
    def test_monotone_in_wage(self, w1, w2, alpha, age):
        if w1 == w2:
            return
        lo, hi = sorted((w1, w2))
        assert optimal_utility(age, alpha, lo, GAMMA) < optimal_utility(age, alpha, hi, GAMMA)

    def test_vectorised(self):
        out = optimal_utility(np.array([0, 10]), np.array([0.5, 0.3]), np.array([1.0, 2.0]), GAMMA)
        assert out.shape == (2,)
        assert np.all(out > 0)

    @pytest.mark.parametrize(
        "age,alpha,wage",
        [(-1, 0.5, 1.0), (0, 0.0, 1.0), (0, 1.0, 1.0), (0, 0.5, 0.0), (0, 0.5, -2.0)],
    )
    def test_domain_errors(self, age, alpha, wage):
        with pytest.raises(DomainError):
            optimal_utility(age, alpha, wage, GAMMA)

    def test_gamma_domain(self):
        with pytest.raises(DomainError):
            optimal_utility(0, 0.5, 1.0, 1.0)


def make_agent(wage=100.0, alpha=0.5, age=30, employed=True):
    return Agent(
        id=0,
        age=age,
        alpha=alpha,
        position=0 if employed else None,
        last_region=0,
        last_industry=0,
        last_occupation=0,
        last_wage=wage,
    )


class TestPrefersSwitch:
    def test_equal_wage_is_not_preferred(self):
        assert not prefers_switch(make_agent(wage=50.0), 50.0, GAMMA)

    @given(alpha=st.floats(0.01, 0.99), wage=st.floats(0.1, 1e5))
    def test_double_wage_always_preferred(self, alpha, wage):
        assert prefers_switch(make_agent(wage=wage, alpha=alpha), 2.0 * wage, GAMMA)

    @given(alpha=st.floats(0.01, 0.99), wage=st.floats(0.1, 1e5))
    def test_half_wage_never_preferred(self, alpha, wage):
        assert not prefers_switch(make_agent(wage=wage, alpha=alpha), 0.5 * wage, GAMMA)

    @given(
        alpha=st.floats(0.01, 0.99),
        w_from=st.floats(0.5, 1e4),
        w_to=st.floats(0.5, 1e4),
    )
    @settings(max_examples=200)
    def test_equivalent_to_wage_ordering(self, alpha, w_from, w_to):
        agent = make_agent(wage=w_from, alpha=alpha)
        assert prefers_switch(agent, w_to, GAMMA) == (w_to > w_from)

    def test_rejects_non_positive_candidate(self):
        with pytest.raises(DomainError):
            prefers_switch(make_agent(), 0.0, GAMMA)


class TestTypes:
    def test_position_requires_positive_wage(self):
        with pytest.raises(DomainError):
            Position(id=0, region=0, industry=0, occupation=0, wage=0.0)

    def test_agent_alpha_bounds(self):
        with pytest.raises(DomainError):
            make_agent(alpha=1.0)
        with pytest.raises(DomainError):
            make_agent(alpha=0.0)

    def test_economy_params_validation(self):
        surv = np.ones(111)
        surv[-1] = 0.0
        params = EconomyParams(
            n_agents=10, n_positions=12, lam=0.05, gamma=0.9, theta_e=0.1,
            theta_ue=0.5, survival=surv,
        )
        assert params.max_age == 110
        with pytest.raises(DomainError):
            EconomyParams(
                n_agents=10, n_positions=12, lam=0.05, gamma=1.0, theta_e=0.1,
                theta_ue=0.5, survival=surv,
            )
        with pytest.raises(DomainError):
            EconomyParams(
                n_agents=10, n_positions=12, lam=0.05, gamma=0.9, theta_e=0.1,
                theta_ue=0.5, survival=np.ones(111),  # never zero
            )

    def test_job_distribution_validation(self):
        counts = np.ones((2, 2, 2), dtype=int)
        mean = np.full((2, 2, 2), 100.0)
        std = np.full((2, 2, 2), 10.0)
        jobs = JobDistribution(counts=counts, wage_mean=mean, wage_std=std)
        assert jobs.total == 8
        bad_mean = mean.copy()
        bad_mean[0, 0, 0] = 0.0
        with pytest.raises(DomainError):
            JobDistribution(counts=counts, wage_mean=bad_mean, wage_std=std)

    def test_job_distribution_sampling_follows_counts(self, rng):
        counts = np.zeros((2, 2, 2), dtype=int)
        counts[1, 0, 1] = 3
        counts[0, 1, 0] = 1
        jobs = JobDistribution(
            counts=counts, wage_mean=np.full((2, 2, 2), 1.0), wage_std=np.zeros((2, 2, 2))
        )
        r, i, o = jobs.sample_cells(rng, 4000)
        share = np.mean((r == 1) & (i == 0) & (o == 1))
        assert share == pytest.approx(0.75, abs=0.03)
