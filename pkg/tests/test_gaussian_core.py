import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint
from scipy.stats import multivariate_normal

from corrbench.boolean_core import and_, correlation, dictator, majority, or_, spectral_summary, xor
from corrbench.gaussian_core import (
    BRIDGE_COR,
    BRIDGE_M1,
    BRIDGE_M2,
    HalfSpace,
    HermiteSeries,
    OUSmoothed,
    SignComposed,
    bridge,
    check_range,
    functional_from_json,
    functional_loads,
    gaussian_bounds,
    gaussian_correlation,
    hermite_tensor,
    m1,
    m2,
    moment,
    ou_apply,
)
from corrbench.monotone_enum import enumerate_monotone
from corrbench.quadrature import gh_grid

SQ2PI = math.sqrt(2 * math.pi)


def delta_h3(x):
    n = len(x)
    d = np.eye(n)
    out = np.empty((n, n, n))
    for i, j, k in itertools.product(range(n), repeat=3):
        out[i, j, k] = x[i] * x[j] * x[k] - d[i, j] * x[k] - d[i, k] * x[j] - d[j, k] * x[i]
    return out


class TestHermiteTensor:
    def test_h2_at_origin(self):
        assert np.array_equal(hermite_tensor(2, np.zeros(3)), -np.eye(3))

    def test_h3_scalar(self):
        assert hermite_tensor(3, np.array([1.0]))[0, 0, 0] == -2.0

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-3, 3), min_size=1, max_size=4))
    def test_h3_delta_formula(self, x):
        x = np.array(x)
        assert np.allclose(hermite_tensor(3, x), delta_h3(x), atol=1e-12)

    def test_n2_component(self):
        assert hermite_tensor(3, np.array([1.0, 1.0]))[0, 0, 1] == 0.0

    def test_batched(self):
        x = np.random.default_rng(0).standard_normal((5, 3))
        batch = hermite_tensor(3, x)
        assert batch.shape == (5, 3, 3, 3)
        assert np.allclose(batch[2], delta_h3(x[2]))

    def test_orthogonality(self):
        nodes, w = gh_grid(2, 8)
        h2 = np.einsum("m,mij->ij", w, hermite_tensor(2, nodes))
        assert np.abs(h2).max() < 1e-12

    def test_k_too_large(self):
        with pytest.raises(ValueError):
            hermite_tensor(4, np.zeros(2))


FUNCTIONALS = [
    SignComposed(dictator(1)),
    SignComposed(and_(2)),
    SignComposed(and_(2), centered=False),
    SignComposed(majority(3)),
    SignComposed(xor(2)),
    HalfSpace((1.0, 0.0), 0.0),
    HalfSpace.from_direction((1.0, 2.0, 0.5), 0.3),
    HalfSpace.from_direction((1.0, -1.0), -0.7),
    HermiteSeries(2, (((1, 0), 0.5), ((1, 1), -0.25), ((0, 3), 0.1), ((2, 0), 0.3))),
    OUSmoothed(HalfSpace.from_direction((2.0, 1.0), 0.4), 0.7),
    OUSmoothed(SignComposed(majority(3)), 0.3),
]


class TestMoments:
    def test_halfspace_e1(self):
        F = HalfSpace((1.0, 0.0), 0.0)
        assert np.allclose(m1(F), [1 / SQ2PI, 0.0], atol=1e-15)
        assert np.abs(m2(F)).max() < 1e-15

    def test_dictator(self):
        assert m1(SignComposed(dictator(1)))[0] == pytest.approx(0.7978845608, abs=1e-10)

    def test_and2_second_moment(self):
        M = m2(SignComposed(and_(2)))
        assert M[0, 1] == M[1, 0] == pytest.approx(1 / math.pi, abs=1e-15)
        assert M[0, 0] == M[1, 1] == 0

    def test_majority_second_moment_vanishes(self):
        for method in ("closed", "quadrature"):
            assert np.abs(m2(SignComposed(majority(3)), method)).max() < 1e-10

    @pytest.mark.parametrize("F", FUNCTIONALS, ids=lambda F: type(F).__name__)
    @pytest.mark.parametrize("k", [0, 1, 2, 3])
    def test_closed_matches_quadrature(self, F, k):
        closed = np.asarray(moment(F, k, "closed"))
        quad = np.asarray(moment(F, k, "quadrature"))
        assert closed.shape == quad.shape == (F.n,) * k
        assert np.abs(closed - quad).max() < 1e-8

    @pytest.mark.parametrize("F", FUNCTIONALS[:8], ids=lambda F: type(F).__name__)
    def test_symmetric(self, F):
        T = np.asarray(moment(F, 3))
        for perm in itertools.permutations(range(3)):
            assert np.allclose(T, T.transpose(perm), atol=1e-15)

    def test_halfspace_against_scipy(self):
        a = 0.5
        ref, _ = sint.quad(lambda x: (x**3 - 3 * x) * math.exp(-x * x / 2) / SQ2PI, a, math.inf)
        assert moment(HalfSpace((1.0,), a), 3)[0, 0, 0] == pytest.approx(ref, abs=1e-12)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            moment(SignComposed(and_(2)), 1, "nope")


@pytest.mark.parametrize("F", [SignComposed(and_(2), centered=False), SignComposed(or_(3), centered=False),
                               HalfSpace((1.0, 0.0), 0.5), HalfSpace.from_direction((1, 1, 1), -0.2)],
                         ids=str)
def test_first_moment_product_bound(F):
    # for [0,1]-valued functions <M1 F, M1 F> <= Var F <= 1/4
    q = float(m1(F) @ m1(F))
    assert q <= F.variance() + 1e-12 <= 0.25 + 1e-12


class TestSemigroup:
    def test_linear_eigenfunction(self):
        F = HermiteSeries(2, (((1, 0), 1.0),))
        x = np.random.default_rng(1).standard_normal((10, 2))
        P = OUSmoothed(F, 1.0)
        assert np.allclose(P(x), math.exp(-0.5) * x[:, 0], atol=1e-8)
        assert np.allclose(ou_apply(F, 1.0)(x), math.exp(-0.5) * x[:, 0], atol=1e-12)

    def test_constant(self):
        one = HermiteSeries(3, (((0, 0, 0), 1.0),))
        x = np.random.default_rng(2).standard_normal((10, 3))
        assert np.allclose(OUSmoothed(one, 2.0)(x), 1.0, atol=1e-12)

    @pytest.mark.parametrize("t", [1.0, 2.0])
    def test_third_moment_eigenvalue(self, t):
        F = HalfSpace((1.0, 0.0), 0.5)
        P = ou_apply(F, t)
        q_closed = np.asarray(moment(P, 3, "closed"))
        q_quad = np.asarray(moment(P, 3, "quadrature"))
        base = np.asarray(moment(F, 3))
        assert np.abs(q_quad - math.exp(-3 * t / 2) * base).max() < 1e-6
        assert np.abs(q_closed - q_quad).max() < 1e-6

    @pytest.mark.parametrize("F", [HalfSpace.from_direction((1.0, 2.0), 0.3), SignComposed(and_(2)),
                                   HermiteSeries(2, (((2, 1), 0.4), ((0, 1), 1.0)))], ids=str)
    def test_semigroup_law(self, F):
        x = np.random.default_rng(3).standard_normal((10, 2))
        nested = ou_apply(ou_apply(F, 0.4), 0.9)
        assert np.abs(nested(x) - ou_apply(F, 1.3)(x)).max() < 1e-6

    def test_smoothing_shrinks_variance(self):
        F = SignComposed(majority(3))
        v = [ou_apply(F, t).variance() for t in (0.5, 1.0, 2.0)]
        assert F.variance() > v[0] > v[1] > v[2] > 0
        # E[F(X) F(Y)] for corr(X, Y) = e^{-t}: each sign pair contributes (2/pi) asin(e^{-t})
        for t, got in zip((0.5, 1.0, 2.0), v):
            q = 2 / math.pi * math.asin(math.exp(-t))
            assert got == pytest.approx(0.75 * q + 0.25 * q**3, abs=1e-8)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            ou_apply(SignComposed(and_(2)), -1.0)


class TestCorrelation:
    def test_halfspaces_against_scipy(self):
        F = HalfSpace((1.0, 0.0), 0.3)
        G = HalfSpace.from_direction((1.0, 1.0), -0.2)
        rho = 1 / math.sqrt(2)
        both = multivariate_normal([0, 0], [[1, rho], [rho, 1]]).cdf([-0.3, 0.2])
        assert gaussian_correlation(F, G) == pytest.approx(both - F.mean() * G.mean(), abs=1e-7)

    def test_dictator(self):
        F = SignComposed(dictator(1))
        assert gaussian_correlation(F, F) == pytest.approx(1.0, abs=1e-15)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            gaussian_correlation(SignComposed(and_(2)), SignComposed(and_(3)))

    def test_bounds_report(self):
        F = SignComposed(majority(3))
        rep = gaussian_bounds(F, F)
        assert rep.m2 == pytest.approx(0, abs=1e-12)
        assert rep.cor == pytest.approx(1.0, abs=1e-12)
        assert rep.ratio_main_tal > 0
        assert set(rep.to_json()) >= {"cor", "m1", "m2", "ratio_main_tal", "ratio_main_coord"}


class TestBridge:
    def test_d1(self):
        rep = bridge(dictator(1), dictator(1))
        assert rep.cor_mu == Fraction(1, 4)
        assert rep.cor_gamma == pytest.approx(1.0, abs=1e-12)
        assert rep.cor_constant == pytest.approx(0.25, abs=1e-12)
        assert rep.m1_constants[0] == pytest.approx(math.sqrt(2 / math.pi), abs=1e-12)

    def test_and2(self):
        rep = bridge(and_(2), and_(2))
        assert rep.m2_gauss[0, 1] == pytest.approx(1 / math.pi, abs=1e-12)
        assert rep.m2_constants[0] == pytest.approx(4 / math.pi, abs=1e-12)

    def test_pinned_constants(self):
        assert (BRIDGE_COR, BRIDGE_M1, BRIDGE_M2) == (0.25, math.sqrt(2 / math.pi), 4 / math.pi)

    @pytest.mark.parametrize("n", [1, 2])
    def test_all_pairs_small(self, n):
        funcs = list(enumerate_monotone(n))
        for f, g in itertools.product(funcs, repeat=2):
            dev = bridge(f, g).max_deviation()
            assert max(dev.values()) < 1e-8

    def test_non_monotone_flagged(self):
        rep = bridge(xor(2), and_(2))
        assert not rep.monotone
        dev = rep.max_deviation()
        # correlation and degree-2 identities are spectral and survive; the
        # influence identity needs monotonicity
        assert dev["cor"] < 1e-8 and dev["m2"] < 1e-8
        assert dev["m1"] > 0.5

    def test_report_json(self):
        doc = bridge(and_(2), dictator(2, 0)).to_json()
        json.dumps(doc)
        assert doc["cor_mu"] == str(correlation(and_(2), dictator(2, 0)))


class TestRangeAndSerialisation:
    @pytest.mark.parametrize("F", FUNCTIONALS, ids=lambda F: type(F).__name__)
    def test_declared_range(self, F):
        assert check_range(F)

    def test_range_detects_violation(self):
        class Bad:
            n, range_tag = 1, "[0,1]"

            def __call__(self, x):
                return np.asarray(x)[..., 0]

        assert not check_range(Bad())

    @pytest.mark.parametrize("F", FUNCTIONALS, ids=lambda F: type(F).__name__)
    def test_round_trip(self, F):
        G = functional_loads(json.dumps(F.to_json()))
        x = np.random.default_rng(5).standard_normal((20, F.n))
        assert np.array_equal(G(x), F(x))

    @pytest.mark.parametrize("obj", [
        {"variant": "halfspace", "theta": [1.0]},
        {"variant": "sign"},
        {"variant": "hermite", "coeffs": [1]},
        {"variant": "spline"},
    ])
    def test_malformed(self, obj):
        with pytest.raises(ValueError):
            functional_from_json(obj)

    def test_halfspace_validation(self):
        with pytest.raises(ValueError):
            HalfSpace((1.0, 1.0), 0.0)

    def test_hermite_degree_limit(self):
        with pytest.raises(ValueError):
            HermiteSeries(1, (((7,), 1.0),))

    def test_monotone_flags(self):
        assert SignComposed(majority(3)).monotone and not SignComposed(xor(2)).monotone
        assert HalfSpace((1.0, 0.0)).monotone
        assert not HalfSpace.from_direction((1.0, -1.0)).monotone
        assert spectral_summary(and_(2)).mean == Fraction(1, 4)
