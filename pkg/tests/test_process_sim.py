import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import ndtr

from corrbench.boolean_core import BooleanFunction, and_, dictator, majority, or_
from corrbench.gaussian_core import HalfSpace, HermiteSeries, SignComposed, moment
from corrbench.process_sim import (
    chain_from_statistics,
    check_derivative_chain,
    conditional_moment,
    cov_curve,
    cov_from_statistics,
    curves_from_statistics,
    estimate_pk,
    parse_grid,
    sample_paths,
    simulate_statistics,
)

D1 = SignComposed(dictator(1))
GRID = parse_grid("0:1:0.05")


def arcsine_cov(t):
    """Covariance of the conditional expectations of sign(Z_inf) at time ``t``."""
    return 2 / math.pi * np.arcsin(1 - np.exp(-np.asarray(t)))


class TestGrid:
    def test_range(self):
        g = parse_grid("0:1:0.05")
        assert g.size == 21 and g[-1] == pytest.approx(1.0, abs=1e-15)

    def test_list(self):
        assert parse_grid("0,0.5,2").tolist() == [0.0, 0.5, 2.0]

    def test_bad_end(self):
        with pytest.raises(ValueError):
            parse_grid("0:1:0.3")

    @pytest.mark.parametrize("grid", [[0.0, 7.0], [0.5, 0.2], []])
    def test_rejected(self, grid):
        with pytest.raises(ValueError):
            sample_paths(D1, D1, grid, 10)


class TestConditionalMoment:
    def test_dictator_closed_form(self):
        z = np.linspace(-1, 1, 7)[:, None]
        t = 0.7
        got = conditional_moment(D1, 0, z, t)
        assert np.allclose(got, 2 * ndtr(z[:, 0] * math.exp(t / 2)) - 1, atol=1e-15)

    @pytest.mark.parametrize("F", [SignComposed(and_(2)), SignComposed(majority(3)),
                                   SignComposed(or_(3), centered=False),
                                   HalfSpace.from_direction((1.0, 2.0), 0.3),
                                   HalfSpace.from_direction((1.0, 1.0, 0.5), -0.4)], ids=str)
    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_closed_matches_quadrature(self, F, k):
        rng = np.random.default_rng(k)
        for _ in range(3):
            z = rng.normal(scale=0.7, size=F.n)
            t = float(rng.uniform(0, 3))
            closed = conditional_moment(F, k, z, t)
            quad = conditional_moment(F, k, z, t, method="quadrature")
            assert np.abs(closed - quad).max() < 1e-7

    @pytest.mark.parametrize("F", [SignComposed(and_(2)), HalfSpace.from_direction((1.0, 2.0), 0.3)], ids=str)
    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_origin_is_moment(self, F, k):
        got = conditional_moment(F, k, np.zeros(F.n), 0.0)
        assert np.allclose(got, moment(F, k), atol=1e-14)

    def test_first_moment_positive_for_monotone(self):
        rng = np.random.default_rng(9)
        F = SignComposed(majority(3))
        z = rng.normal(size=(1000, 3)) * 2
        t = rng.uniform(0, 6, size=1000)
        vals = np.stack([conditional_moment(F, 1, z[i], t[i]) for i in range(1000)])
        assert np.all(vals >= 0)

    def test_unsupported(self):
        with pytest.raises(TypeError):
            conditional_moment(HermiteSeries(1, (((1,), 1.0),)), 0, np.zeros(1), 0.1)
        with pytest.raises(ValueError):
            conditional_moment(D1, 4, np.zeros(1), 0.1)


class TestPaths:
    def test_origin_is_deterministic(self):
        s = sample_paths(D1, D1, [0.0], 50, seed=1)
        assert np.all(s.Z == 0)
        assert np.all(s.moments_f[0] == moment(D1, 0))

    def test_increment_variance(self):
        s = sample_paths(D1, D1, [0.5, 1.0], 100_000, seed=2, ks=(0,))
        z = s.Z[:, :, 0]
        for j, t in enumerate((0.5, 1.0)):
            v = z[:, j] ** 2
            assert abs(v.mean() - (1 - math.exp(-t))) < 3 * v.std() / math.sqrt(v.size)
        cross = z[:, 0] * z[:, 1]
        assert abs(cross.mean() - (1 - math.exp(-0.5))) < 3 * cross.std() / math.sqrt(cross.size)

    def test_first_moment_at_origin(self):
        est = estimate_pk(D1, D1, 1, [0.0, 0.5], 100, seed=3)
        assert est.estimates[0] == pytest.approx(2 / math.pi, abs=1e-15)
        assert est.se[0] < 1e-15

    def test_long_time_limit(self):
        stats = simulate_statistics(D1, D1, [6.0], 20_000, seed=4, ks=(0,))
        m0 = stats.mf0[:, 0]
        z = 2.5758293035489 * math.exp(-3) / math.sqrt(1 - math.exp(-6))
        near = np.mean(np.abs(np.abs(m0) - 1) < 0.01)
        expected = 2 * ndtr(-z)
        assert abs(near - expected) < 3 * math.sqrt(expected * (1 - expected) / m0.size)
        p0 = curves_from_statistics(stats)[0]
        assert abs(p0.estimates[0] - arcsine_cov(6.0)) < 3 * p0.se[0] + 1e-12

    def test_worker_count_does_not_matter(self):
        a = simulate_statistics(D1, D1, GRID, 20_000, seed=5, workers=1, chunk=4096)
        b = simulate_statistics(D1, D1, GRID, 20_000, seed=5, workers=2, chunk=4096)
        for k in a.S:
            assert np.array_equal(a.S[k], b.S[k])

    def test_se_halves_when_paths_quadruple(self):
        a = estimate_pk(D1, D1, 0, [1.0], 10_000, seed=6).se[0]
        b = estimate_pk(D1, D1, 0, [1.0], 40_000, seed=6).se[0]
        assert 0.8 * 0.5 < b / a < 1.2 * 0.5


@pytest.fixture(scope="module")
def d1_stats():
    return simulate_statistics(D1, D1, GRID, 40_000, seed=7)


class TestChain:
    def test_first_order(self, d1_stats):
        rep = chain_from_statistics(d1_stats, exact_mean_f=0.0)
        assert rep.passed
        assert all(p.passed for k in (0, 1) for p in rep.first[k])
        assert len(rep.first[0]) == GRID.size - 2
        assert all(p.passed for p in rep.martingale)
        json.dumps(rep.to_json())

    def test_constant_functional(self):
        const = SignComposed(BooleanFunction(2, 0b1111))
        rep = check_derivative_chain(const, const, GRID, 1000, seed=1)
        assert all(p.lhs == 0 and p.rhs == 0 for k in (0, 1) for p in rep.first[k])

    def test_coarse_grid_rejected(self, d1_stats):
        with pytest.raises(ValueError):
            check_derivative_chain(D1, D1, parse_grid("0:1:0.1"), 100)


class TestCov:
    def test_d1_curve(self, d1_stats):
        rep = cov_from_statistics(d1_stats, 1.0)
        assert rep.passed
        assert rep.direct[0] == 0
        err = np.abs(rep.direct - arcsine_cov(GRID))
        assert np.all(err <= 3 * rep.direct_se + 1e-12)

    def test_halfspaces(self):
        F = HalfSpace.from_direction((1.0, 1.0), 0.2)
        G = HalfSpace((1.0, 0.0), -0.5)
        rep = cov_curve(F, G, GRID, 20_000, seed=8)
        assert rep.passed

    def test_requires_monotone(self):
        with pytest.raises(ValueError):
            cov_curve(SignComposed(BooleanFunction(2, 0b0110)), SignComposed(dictator(2)), GRID, 100)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31 - 1))
def test_paths_reproducible(seed):
    a = sample_paths(D1, D1, [0.2, 0.4], 64, seed=seed, ks=(0,))
    b = sample_paths(D1, D1, [0.2, 0.4], 64, seed=seed, ks=(0,))
    assert np.array_equal(a.Z, b.Z)
