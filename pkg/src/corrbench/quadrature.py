"""Gaussian quadrature rules for the standard normal weight.

Besides the usual Gauss-Hermite rule this module builds Gauss rules for the
weight ``phi`` restricted to an interval ``[lo, hi]`` (either end may be
infinite). Splitting the real line at the discontinuities of an integrand
and tensorising the pieces integrates piecewise polynomials exactly, which
is what the sign-composed and half-space functionals need.

Recurrence coefficients are computed from moments with the Chebyshev
algorithm in multiprecision arithmetic; nodes and weights then come from
the symmetric tridiagonal Jacobi matrix in double precision.
"""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Sequence

import mpmath as mp
import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy.linalg import eigh_tridiagonal

MAX_NODES = 6_000_000
_SQRT2PI = math.sqrt(2.0 * math.pi)


@lru_cache(maxsize=None)
def gh_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Probabilists' Gauss-Hermite rule normalised to the standard normal."""
    if order < 1:
        raise ValueError("order must be positive")
    x, w = hermegauss(order)
    w = w / _SQRT2PI
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _moments(lo, hi, count: int, shift, scale):
    """Moments of ``((x - shift)/scale)^k`` against ``phi`` on ``[lo, hi]``."""
    def pdf(x):
        return mp.npdf(x) if mp.isfinite(x) else mp.mpf(0)

    raw = [mp.ncdf(hi) - mp.ncdf(lo), pdf(lo) - pdf(hi)]
    for k in range(2, count):
        term = mp.mpf(0)
        if mp.isfinite(lo):
            term += lo ** (k - 1) * pdf(lo)
        if mp.isfinite(hi):
            term -= hi ** (k - 1) * pdf(hi)
        raw.append(term + (k - 1) * raw[k - 2])
    out = []
    for k in range(count):
        acc = mp.mpf(0)
        for j in range(k + 1):
            acc += mp.binomial(k, j) * raw[j] * (-shift) ** (k - j)
        out.append(acc / scale ** k)
    return out


def _chebyshev(mom, order: int):
    alpha = [mp.mpf(0)] * order
    beta = [mp.mpf(0)] * order
    sig_prev = [mp.mpf(0)] * (2 * order)
    sig = list(mom[: 2 * order])
    alpha[0] = mom[1] / mom[0]
    beta[0] = mom[0]
    for k in range(1, order):
        new = [mp.mpf(0)] * (2 * order)
        for l in range(k, 2 * order - k):
            new[l] = sig[l + 1] - alpha[k - 1] * sig[l] - beta[k - 1] * sig_prev[l]
        alpha[k] = new[k + 1] / new[k] - sig[k] / sig[k - 1]
        beta[k] = new[k] / sig[k - 1]
        sig_prev, sig = sig, new
    return alpha, beta


@lru_cache(maxsize=4096)
def _interval_rule_cached(order: int, lo: float, hi: float):
    with mp.workdps(60 + 4 * order):
        mlo = mp.mpf(lo) if math.isfinite(lo) else mp.ninf
        mhi = mp.mpf(hi) if math.isfinite(hi) else mp.inf
        if math.isfinite(lo) and math.isfinite(hi):
            shift, scale = (mlo + mhi) / 2, (mhi - mlo) / 2
        elif math.isfinite(lo):
            shift, scale = mlo, mp.mpf(1)
        elif math.isfinite(hi):
            shift, scale = mhi, mp.mpf(1)
        else:
            shift, scale = mp.mpf(0), mp.mpf(1)
        mom = _moments(mlo, mhi, 2 * order, shift, scale)
        alpha, beta = _chebyshev(mom, order)
        a = np.array([float(v) for v in alpha])
        b = np.array([float(mp.sqrt(v)) for v in beta[1:]])
        total = float(beta[0])
        shift_f, scale_f = float(shift), float(scale)
    if order == 1:
        nodes, vecs = a.copy(), np.ones((1, 1))
    else:
        nodes, vecs = eigh_tridiagonal(a, b)
    weights = total * vecs[0, :] ** 2
    x = shift_f + scale_f * nodes
    x.setflags(write=False)
    weights.setflags(write=False)
    return x, weights


def interval_rule(order: int, lo: float = -math.inf, hi: float = math.inf):
    """Gauss rule for ``int_lo^hi p(x) phi(x) dx``, exact for degree ``2*order-1``."""
    if order < 1:
        raise ValueError("order must be positive")
    if not lo < hi:
        raise ValueError(f"empty interval [{lo}, {hi}]")
    if math.isinf(lo) and math.isinf(hi):
        return gh_rule(order)
    return _interval_rule_cached(order, float(lo), float(hi))


def split_rule(order: int, cuts: Sequence[float] = ()):
    """Full-line rule that treats each piece between ``cuts`` separately."""
    pts = sorted(set(float(c) for c in cuts))
    if not pts:
        return gh_rule(order)
    edges = [-math.inf] + pts + [math.inf]
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        x, w = interval_rule(order, lo, hi)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def tensor_rule(rules) -> tuple[np.ndarray, np.ndarray]:
    """Tensor product of 1-D rules; nodes have shape ``(M, len(rules))``."""
    rules = list(rules)
    total = math.prod(len(r[0]) for r in rules)
    if total > MAX_NODES:
        raise ValueError(f"tensor grid of {total} nodes exceeds the limit {MAX_NODES}")
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return nodes, weights


def gh_grid(n: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Tensor Gauss-Hermite grid for the standard Gaussian on ``R^n``.

    Integrates polynomials of degree ``<= 2*order - 1`` in each variable.
    """
    if n < 1:
        raise ValueError("n must be positive")
    return tensor_rule([gh_rule(order)] * n)


def integrate(fn, nodes: np.ndarray, weights: np.ndarray, chunk: int = 200_000):
    """``sum_m w_m fn(x_m)`` evaluated in chunks; ``fn`` maps ``(M, n)`` to ``(M, ...)``."""
    total = None
    for start in range(0, len(weights), chunk):
        vals = np.asarray(fn(nodes[start:start + chunk]))
        part = np.tensordot(weights[start:start + chunk], vals, axes=(0, 0))
        total = part if total is None else total + part
    return total
