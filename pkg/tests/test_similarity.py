import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from labourflow.similarity import (
    DegenerateInputError,
    SimilarityBundle,
    compose_similarity,
    industry_affinity,
    minmax_normalize,
    normalize_bundle,
    occupation_closeness,
    region_similarity,
)


class TestRegionSimilarity:
    def test_two_region_case(self):
        r = region_similarity(np.array([[0.0, 10.0], [10.0, 0.0]]))
        assert np.array_equal(r, np.array([[1.0, 0.0], [0.0, 1.0]]))

    def test_scale_invariance(self):
        d = np.array([[0.0, 5.0], [5.0, 0.0]])
        assert np.array_equal(region_similarity(d), region_similarity(10 * d))

    def test_extremes_map_to_unit_interval_ends(self, rng):
        pts = rng.uniform(0, 1, (6, 2))
        d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        r = region_similarity(d)
        assert r.max() == 1.0 and r.min() == 0.0
        assert np.allclose(r, r.T)

    def test_degenerate(self):
        with pytest.raises(DegenerateInputError):
            region_similarity(np.zeros((3, 3)))

    def test_asymmetric_rejected(self):
        d = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ValueError):
            region_similarity(d)


class TestIndustryAffinity:
    def test_identity_supply(self):
        assert np.array_equal(industry_affinity(3.0 * np.eye(4)), np.eye(4))

    def test_equal_split(self):
        out = industry_affinity(np.array([[2.0, 2.0], [1.0, 3.0]]))
        assert np.allclose(out[0], [0.5, 0.5])
        assert np.allclose(out[1], [0.25, 0.75])

    @given(
        x=hnp.arrays(
            float, (5, 5), elements=st.floats(0.0, 100.0), fill=st.nothing()
        )
    )
    def test_rows_sum_to_one(self, x):
        if np.any(x.sum(axis=1) == 0):
            with pytest.raises(DegenerateInputError):
                industry_affinity(x)
        else:
            out = industry_affinity(x)
            assert np.allclose(out.sum(axis=1), 1.0, atol=1e-9)


class TestOccupationCloseness:
    def test_identical_vectors(self):
        out = occupation_closeness(np.array([[1.0, 2.0], [1.0, 2.0]]))
        assert out[0, 1] == pytest.approx(1.0)

    def test_orthogonal(self):
        out = occupation_closeness(np.array([[1.0, 0.0], [0.0, 1.0]]))
        assert out[0, 1] == 0.0

    def test_45_degree(self):
        out = occupation_closeness(np.array([[1.0, 1.0], [1.0, 0.0]]))
        assert out[0, 1] == pytest.approx(1.0 / np.sqrt(2.0))

    def test_symmetric_unit_diagonal(self, rng):
        out = occupation_closeness(rng.uniform(0, 5, (7, 10)))
        assert np.allclose(out, out.T)
        assert np.array_equal(np.diag(out), np.ones(7))
        assert np.all((out >= 0) & (out <= 1))

    def test_zero_norm_rejected(self):
        with pytest.raises(DegenerateInputError):
            occupation_closeness(np.array([[1.0, 0.0], [0.0, 0.0]]))


class TestNormalize:
    def test_spanning_input_unchanged(self):
        m = np.array([[0.0, 0.5], [1.0, 0.25]])
        assert np.array_equal(minmax_normalize(m), m)

    def test_two_values(self):
        out = minmax_normalize(np.array([[2.0, 4.0], [4.0, 2.0]]))
        assert set(out.ravel()) == {0.0, 1.0}

    @given(
        m=hnp.arrays(float, (4, 4), elements=st.floats(-50, 50), fill=st.nothing())
    )
    def test_output_spans_unit_interval(self, m):
        if m.max() == m.min():
            with pytest.raises(DegenerateInputError):
                minmax_normalize(m)
        else:
            out = minmax_normalize(m)
            assert out.min() == 0.0 and out.max() == 1.0


def unit_bundle(r=0.5, i=0.5, o=0.5, nu=1.0):
    def mat(v):
        return np.array([[1.0, v], [v, 1.0]])

    return SimilarityBundle(
        region=mat(r),
        industry=mat(i),
        occupation=mat(o),
        nu_region=np.full((2, 2), nu),
        nu_industry=np.full((2, 2), nu),
        nu_occupation=np.full((2, 2), nu),
    )


class TestCompose:
    def test_all_ones(self):
        b = unit_bundle(nu=3.7)
        assert compose_similarity(b, (0, 0, 0), (0, 0, 0)) == 1.0

    def test_zero_annihilates(self):
        b = unit_bundle(r=0.0)
        assert compose_similarity(b, (0, 0, 0), (1, 1, 1)) == 0.0

    def test_product_of_halves(self):
        b = unit_bundle()
        assert compose_similarity(b, (0, 0, 0), (1, 1, 1)) == pytest.approx(0.125)

    @given(
        base=st.floats(0.05, 0.95),
        nu1=st.floats(0.1, 5.0),
        nu2=st.floats(0.1, 5.0),
    )
    @settings(max_examples=100)
    def test_strictly_decreasing_in_nu_on_open_interval(self, base, nu1, nu2):
        if nu1 == nu2:
            return
        lo, hi = sorted((nu1, nu2))
        s_lo = compose_similarity(unit_bundle(r=base, nu=lo), (0, 0, 0), (1, 1, 1))
        s_hi = compose_similarity(unit_bundle(r=base, nu=hi), (0, 0, 0), (1, 1, 1))
        assert s_hi < s_lo

    @given(b1=st.floats(0.0, 1.0), b2=st.floats(0.0, 1.0))
    def test_monotone_in_base(self, b1, b2):
        lo, hi = sorted((b1, b2))
        s_lo = compose_similarity(unit_bundle(r=lo), (0, 0, 0), (1, 1, 1))
        s_hi = compose_similarity(unit_bundle(r=hi), (0, 0, 0), (1, 1, 1))
        assert s_hi >= s_lo


class TestNormalizeBundle:
    def test_builds_valid_bundle(self, rng):
        pts = rng.uniform(0, 10, (4, 2))
        d = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        bundle = normalize_bundle(
            region_similarity(d),
            industry_affinity(rng.uniform(0.1, 5, (5, 5))),
            occupation_closeness(rng.uniform(0, 3, (3, 6))),
        )
        assert bundle.dims == (4, 5, 3)
        for mat in (bundle.region, bundle.industry, bundle.occupation):
            assert mat.min() >= 0.0 and mat.max() <= 1.0
        assert np.all(bundle.nu_region == 1.0)
        # row-stochastic form preserved for inspection
        assert np.allclose(bundle.industry_row_stochastic.sum(axis=1), 1.0)

    def test_nu_must_be_positive(self):
        with pytest.raises(ValueError):
            SimilarityBundle(
                region=np.eye(2),
                industry=np.eye(2),
                occupation=np.eye(2),
                nu_region=np.zeros((2, 2)),
                nu_industry=np.ones((2, 2)),
                nu_occupation=np.ones((2, 2)),
            )
