"""Functions on Gaussian space: Hermite moments, the Ornstein-Uhlenbeck
semigroup and the Boolean-to-Gaussian embedding ``f -> f(sign(x))``.

Three evaluable representations are supported:

* :class:`SignComposed` -- ``x -> f(sign(x))`` or ``2 f(sign(x)) - 1``;
* :class:`HalfSpace` -- ``x -> 1{<theta, x> > a}``;
* :class:`HermiteSeries` -- a finite combination of products of
  probabilists' Hermite polynomials.

:func:`ou_apply` wraps any of them in :class:`OUSmoothed`. The semigroup is

    P_t f(x) = E f(exp(-t/2) x + sqrt(1 - exp(-t)) Y),   Y ~ N(0, I),

so ``P_t`` maps ``He_k`` to ``exp(-k t / 2) He_k``.

Moments ``Q^(k)(F) = E[F(X) H^(k)(X)]`` are available in closed form for
every representation and by quadrature on rules adapted to the
discontinuities of ``F``; the two routes agree to about 1e-12.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Union

import numpy as np
from numpy.polynomial.hermite_e import hermeval
from scipy.special import ndtr

from .boolean_core import BooleanFunction, correlation, is_monotone, spectral_summary
from .quadrature import MAX_NODES, gh_grid, gh_rule, integrate, interval_rule, split_rule, tensor_rule

MAX_K = 3
MAX_QUAD_N = 4
DEFAULT_ORDER = 20
_PHI0 = 1.0 / math.sqrt(2.0 * math.pi)


def _npdf(x):
    return np.exp(-0.5 * np.square(x)) * _PHI0


def _he(c: int, x):
    """Probabilists' Hermite polynomial ``He_c`` (``He_{-1} = 0``)."""
    if c < 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    coef = np.zeros(c + 1)
    coef[c] = 1.0
    return hermeval(x, coef)


# -- Hermite tensors ------------------------------------------------------


def hermite_tensor(k: int, x) -> np.ndarray:
    """Hermite tensor ``H^(k)(x)`` for ``k <= 3``.

    ``x`` has shape ``(n,)`` or ``(M, n)``; the result has ``k`` trailing
    axes of length ``n``.
    """
    if not 0 <= k <= MAX_K:
        raise ValueError(f"Hermite tensors are implemented for k <= {MAX_K}, got {k}")
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if k == 0:
        return np.ones(x.shape[:-1])
    if k == 1:
        return x.copy()
    eye = np.eye(n)
    if k == 2:
        return x[..., :, None] * x[..., None, :] - eye
    xxx = x[..., :, None, None] * x[..., None, :, None] * x[..., None, None, :]
    return (
        xxx
        - eye[:, :, None] * x[..., None, None, :]
        - eye[:, None, :] * x[..., None, :, None]
        - eye[None, :, :] * x[..., :, None, None]
    )


def multiplicities(index: tuple[int, ...], n: int) -> tuple[int, ...]:
    counts = [0] * n
    for i in index:
        counts[i] += 1
    return tuple(counts)


def hermite_product(counts, x) -> np.ndarray:
    """``prod_j He_{c_j}(x_j)``, equal to any entry of ``H^(k)`` with those multiplicities."""
    x = np.asarray(x, dtype=float)
    out = np.ones(x.shape[:-1])
    for j, c in enumerate(counts):
        if c:
            out = out * _he(c, x[..., j])
    return out


def _from_multiplicities(n: int, k: int, entry) -> np.ndarray:
    """Fill a symmetric ``k``-tensor from a function of multiplicity vectors."""
    out = np.zeros((n,) * k)
    cache: dict[tuple[int, ...], float] = {}
    for index in itertools.product(range(n), repeat=k):
        c = multiplicities(index, n)
        if c not in cache:
            cache[c] = entry(c)
        out[index] = cache[c]
    return out if k else float(out)


# -- representations -------------------------------------------------------


@dataclass(frozen=True)
class SignComposed:
    """``x -> f(sign(x))``, or ``2 f(sign(x)) - 1`` when ``centered``.

    Sign of zero is taken as -1 (a null set).
    """

    f: BooleanFunction
    centered: bool = True

    def __post_init__(self):
        if self.f.n > MAX_QUAD_N:
            raise ValueError(f"sign-composed functionals support n <= {MAX_QUAD_N}")

    @property
    def n(self) -> int:
        return self.f.n

    @property
    def range_tag(self) -> str:
        return "[-1,1]" if self.centered else "[0,1]"

    @property
    def monotone(self) -> bool:
        return is_monotone(self.f)

    @cached_property
    def coefficients(self) -> np.ndarray:
        """Coefficients in the basis ``prod_{i in S} sign(x_i)``, indexed by bitmask."""
        fh = spectral_summary(self.f).fourier_numer / float(self.f.size)
        if self.centered:
            fh = 2.0 * fh
            fh[0] -= 1.0
        fh.setflags(write=False)
        return fh

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        idx = ((x > 0).astype(np.int64) << np.arange(self.n)).sum(axis=-1)
        vals = np.asarray(self.f.values, dtype=float)[idx]
        return 2.0 * vals - 1.0 if self.centered else vals

    def mean(self) -> float:
        return float(self.coefficients[0])

    def variance(self) -> float:
        return float(np.sum(self.coefficients[1:] ** 2))

    def to_json(self) -> dict:
        return {"variant": "sign", "boolean": self.f.to_json(), "centered": self.centered}


@dataclass(frozen=True)
class HalfSpace:
    """``x -> 1{<theta, x> > a}`` with ``theta`` a unit vector."""

    theta: tuple[float, ...]
    a: float = 0.0

    def __post_init__(self):
        theta = tuple(float(v) for v in self.theta)
        if not theta or len(theta) > MAX_QUAD_N:
            raise ValueError(f"theta must have 1..{MAX_QUAD_N} entries")
        if abs(math.hypot(*theta) - 1.0) > 1e-9:
            raise ValueError("theta must be a unit vector")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "a", float(self.a))

    @classmethod
    def from_direction(cls, direction, a: float = 0.0) -> "HalfSpace":
        v = np.asarray(direction, dtype=float)
        return cls(tuple(v / np.linalg.norm(v)), a)

    @property
    def n(self) -> int:
        return len(self.theta)

    @property
    def range_tag(self) -> str:
        return "[0,1]"

    @property
    def monotone(self) -> bool:
        return all(v >= 0 for v in self.theta)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (x @ np.asarray(self.theta) > self.a).astype(float)

    def mean(self) -> float:
        return float(ndtr(-self.a))

    def variance(self) -> float:
        p = self.mean()
        return p * (1.0 - p)

    def basis(self) -> np.ndarray:
        """Orthogonal matrix whose first column is ``theta``."""
        theta = np.asarray(self.theta)
        q, _ = np.linalg.qr(np.column_stack([theta, np.eye(self.n)]))
        if q[:, 0] @ theta < 0:
            q = -q
        return q[:, : self.n]

    def to_json(self) -> dict:
        return {"variant": "halfspace", "theta": list(self.theta), "a": self.a}


@dataclass(frozen=True)
class HermiteSeries:
    """``sum_alpha c_alpha prod_j He_{alpha_j}(x_j)`` with total degree at most 6."""

    n: int
    terms: tuple[tuple[tuple[int, ...], float], ...] = field(default=())

    MAX_DEGREE = 6

    def __post_init__(self):
        if not 1 <= self.n <= MAX_QUAD_N:
            raise ValueError(f"Hermite series support 1 <= n <= {MAX_QUAD_N}")
        merged: dict[tuple[int, ...], float] = {}
        for alpha, c in self.terms:
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != self.n or min(alpha) < 0:
                raise ValueError(f"bad multi-index {alpha} for n={self.n}")
            if sum(alpha) > self.MAX_DEGREE:
                raise ValueError(f"total degree of {alpha} exceeds {self.MAX_DEGREE}")
            merged[alpha] = merged.get(alpha, 0.0) + float(c)
        object.__setattr__(self, "terms", tuple(sorted(merged.items())))

    @classmethod
    def from_dict(cls, n: int, coeffs: Mapping) -> "HermiteSeries":
        return cls(n, tuple(coeffs.items()))

    @property
    def coeffs(self) -> dict[tuple[int, ...], float]:
        return dict(self.terms)

    @property
    def degree(self) -> int:
        return max((sum(a) for a, _ in self.terms), default=0)

    @property
    def range_tag(self) -> str:
        return "R"

    @property
    def monotone(self) -> bool | None:
        return None

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for alpha, c in self.terms:
            out = out + c * hermite_product(alpha, x)
        return out

    def mean(self) -> float:
        return self.coeffs.get((0,) * self.n, 0.0)

    def variance(self) -> float:
        return sum(
            c * c * math.prod(math.factorial(a) for a in alpha)
            for alpha, c in self.terms
            if any(alpha)
        )

    def to_json(self) -> dict:
        return {
            "variant": "hermite",
            "n": self.n,
            "coeffs": {",".join(map(str, a)): c for a, c in self.terms},
        }


@dataclass(frozen=True)
class OUSmoothed:
    """``P_t`` applied to another functional; evaluated in closed form where possible."""

    base: "GaussianFunctional"
    t: float
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if not self.t >= 0:
            raise ValueError("t must be non-negative")

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def range_tag(self) -> str:
        return self.base.range_tag

    @property
    def monotone(self):
        return self.base.monotone

    @property
    def decay(self) -> float:
        return math.exp(-self.t / 2)

    @property
    def noise(self) -> float:
        return math.sqrt(-math.expm1(-self.t))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if self.t == 0:
            return self.base(x)
        base, rho, sigma = self.base, self.decay, self.noise
        if isinstance(base, HalfSpace):
            return ndtr((rho * (x @ np.asarray(base.theta)) - base.a) / sigma)
        if isinstance(base, SignComposed):
            return sign_expectation(base.coefficients, 2.0 * ndtr(rho * x / sigma) - 1.0)
        nodes, weights = gh_grid(self.n, self.order)
        flat = x.reshape(-1, self.n)
        out = np.array([weights @ base(rho * p + sigma * nodes) for p in flat])
        return out.reshape(x.shape[:-1])

    def mean(self) -> float:
        return self.base.mean()

    def variance(self) -> float:
        nodes, weights = quadrature_rule(self, self.order)
        second = float(integrate(lambda x: self(x) ** 2, nodes, weights))
        return second - self.mean() ** 2

    def to_json(self) -> dict:
        return {"variant": "ou", "t": self.t, "base": self.base.to_json()}


GaussianFunctional = Union[SignComposed, HalfSpace, HermiteSeries, OUSmoothed]


def sign_expectation(coefficients: np.ndarray, m: np.ndarray) -> np.ndarray:
    """``sum_S c_S prod_{i in S} m_i`` for ``m`` of shape ``(..., n)``.

    This is ``E F(Y)`` for a sign-composed ``F`` when the coordinates of
    ``Y`` are independent with ``E sign(Y_i) = m_i``.
    """
    m = np.asarray(m, dtype=float)
    n = m.shape[-1]
    prods = np.ones(m.shape[:-1] + (1,))
    for i in range(n):
        prods = np.concatenate([prods, prods * m[..., i:i + 1]], axis=-1)
    return prods @ coefficients


def check_range(F: "GaussianFunctional", samples: int = 10_000, seed: int = 0,
                tol: float = 0.0) -> bool:
    """Whether ``F`` stays inside its declared range at standard Gaussian samples.

    Hermite series carry no range constraint and always pass.
    """
    tag = F.base.range_tag if isinstance(F, OUSmoothed) else F.range_tag
    if tag == "R":
        return True
    lo = -1.0 if tag == "[-1,1]" else 0.0
    x = np.random.default_rng(seed).standard_normal((samples, F.n))
    vals = np.asarray(F(x))
    return bool(np.all((vals >= lo - tol) & (vals <= 1.0 + tol)))


# -- serialisation ---------------------------------------------------------


def functional_from_json(obj: dict) -> GaussianFunctional:
    """Parse a functional spec file (see :meth:`to_json` of each variant)."""
    variant = obj.get("variant")
    if variant == "sign":
        if "boolean" not in obj:
            raise ValueError("sign functional missing field 'boolean'")
        return SignComposed(BooleanFunction.from_json(obj["boolean"]), bool(obj.get("centered", True)))
    if variant == "halfspace":
        for key in ("theta", "a"):
            if key not in obj:
                raise ValueError(f"halfspace functional missing field '{key}'")
        return HalfSpace(tuple(obj["theta"]), obj["a"])
    if variant == "hermite":
        coeffs = obj.get("coeffs")
        if not isinstance(coeffs, dict):
            raise ValueError("hermite functional needs a 'coeffs' object")
        parsed = {tuple(int(v) for v in key.split(",")): float(c) for key, c in coeffs.items()}
        n = obj.get("n") or len(next(iter(parsed)))
        return HermiteSeries.from_dict(n, parsed)
    if variant == "ou":
        return OUSmoothed(functional_from_json(obj["base"]), float(obj["t"]))
    raise ValueError(f"unknown functional variant {variant!r}")


def functional_loads(text: str) -> GaussianFunctional:
    return functional_from_json(json.loads(text))


# -- quadrature rules -------------------------------------------------------


def quadrature_rule(F: GaussianFunctional, order: int = DEFAULT_ORDER, extra_cuts=()):
    """Nodes and weights on which ``F`` times a polynomial integrates accurately.

    Sign-composed functionals get each axis split at 0, half-spaces get a
    rotated rule split at the threshold along ``theta``; smooth functionals
    use plain Gauss-Hermite. ``extra_cuts`` adds split points along the
    first rotated axis of a half-space.
    """
    if F.n > MAX_QUAD_N:
        raise ValueError(f"quadrature supports n <= {MAX_QUAD_N}")
    if isinstance(F, SignComposed):
        return tensor_rule([split_rule(order, [0.0])] * F.n)
    if isinstance(F, HalfSpace):
        rules = [split_rule(order, [F.a, *extra_cuts])] + [gh_rule(order)] * (F.n - 1)
        y, w = tensor_rule(rules)
        return y @ F.basis().T, w
    if isinstance(F, HermiteSeries):
        return gh_grid(F.n, max(order, F.degree // 2 + 3))
    if isinstance(F, OUSmoothed):
        if F.t == 0:
            return quadrature_rule(F.base, order, extra_cuts)
        # short smoothing times leave steep transitions of width ~ noise
        cap = int(MAX_NODES ** (1.0 / F.n))
        return gh_grid(F.n, min(cap, max(order, math.ceil(20.0 / F.noise))))
    raise TypeError(f"not an evaluable functional: {type(F).__name__}")


# -- moments ----------------------------------------------------------------


def _closed_moment(F: GaussianFunctional, k: int):
    n = F.n
    if isinstance(F, SignComposed):
        coef = F.coefficients
        scale = 2.0 * _PHI0

        def entry(c):
            mask = sum(1 << j for j, cj in enumerate(c) if cj)
            val = coef[mask]
            for cj in c:
                if cj:
                    val *= scale * float(_he(cj - 1, 0.0))
            return val

        return _from_multiplicities(n, k, entry)
    if isinstance(F, HalfSpace):
        ck = F.mean() if k == 0 else float(_npdf(F.a) * _he(k - 1, F.a))
        theta = np.asarray(F.theta)
        out = np.array(ck)
        for _ in range(k):
            out = np.multiply.outer(out, theta)
        return float(out) if k == 0 else out
    if isinstance(F, HermiteSeries):
        coeffs = F.coeffs

        def entry(c):
            return coeffs.get(c, 0.0) * math.prod(math.factorial(v) for v in c)

        return _from_multiplicities(n, k, entry)
    if isinstance(F, OUSmoothed):
        return math.exp(-k * F.t / 2) * np.asarray(_closed_moment(F.base, k)) if k else F.mean()
    raise TypeError(f"not an evaluable functional: {type(F).__name__}")


def moment(F: GaussianFunctional, k: int, method: str = "closed", order: int = DEFAULT_ORDER):
    """Hermite moment ``Q^(k)(F) = E[F(X) H^(k)(X)]`` for ``k <= 3``.

    ``k = 1, 2`` give the first and second degree Hermite tensors. The
    result is a float for ``k = 0`` and an ``(n,)*k`` symmetric array
    otherwise. ``method`` is ``"closed"`` or ``"quadrature"``.
    """
    if not 0 <= k <= MAX_K:
        raise ValueError(f"moments are implemented for k <= {MAX_K}, got {k}")
    if method == "closed":
        return _closed_moment(F, k)
    if method == "quadrature":
        nodes, weights = quadrature_rule(F, order)
        res = integrate(
            lambda x: F(x).reshape((-1,) + (1,) * k) * hermite_tensor(k, x), nodes, weights
        )
        return float(res) if k == 0 else res
    raise ValueError(f"unknown method {method!r}")


def m1(F, method: str = "closed", order: int = DEFAULT_ORDER) -> np.ndarray:
    return moment(F, 1, method, order)


def m2(F, method: str = "closed", order: int = DEFAULT_ORDER) -> np.ndarray:
    return moment(F, 2, method, order)


# -- semigroup ----------------------------------------------------------------


def ou_apply(F: GaussianFunctional, t: float, order: int = DEFAULT_ORDER) -> GaussianFunctional:
    """Ornstein-Uhlenbeck smoothing ``P_t F``.

    Hermite series stay Hermite series (each term scaled by
    ``exp(-|alpha| t / 2)``); other functionals are wrapped in
    :class:`OUSmoothed`. Nested smoothing is not collapsed, so the
    semigroup law can be checked numerically.
    """
    if not t >= 0:
        raise ValueError("t must be non-negative")
    if t == 0:
        return F
    if isinstance(F, HermiteSeries):
        return HermiteSeries(F.n, tuple((a, c * math.exp(-sum(a) * t / 2)) for a, c in F.terms))
    return OUSmoothed(F, float(t), order)


# -- correlation ------------------------------------------------------------


def _bivariate_tail(a: float, b: float, rho: float, order: int = 40) -> float:
    """``P(U > a, V > b)`` for standard normals with correlation ``|rho| < 1``."""
    u, w = interval_rule(order, a, math.inf)
    return float(w @ ndtr(-(b - rho * u) / math.sqrt(1.0 - rho * rho)))


def gaussian_correlation(F: GaussianFunctional, G: GaussianFunctional,
                         order: int = DEFAULT_ORDER) -> float:
    """``E[FG] - E[F] E[G]`` under the standard Gaussian."""
    if F.n != G.n:
        raise ValueError(f"dimension mismatch: {F.n} vs {G.n}")
    if isinstance(F, SignComposed) and isinstance(G, SignComposed):
        both = float(np.dot(F.coefficients[1:], G.coefficients[1:]))
        return both
    if isinstance(F, HalfSpace) and isinstance(G, HalfSpace):
        rho = float(np.dot(F.theta, G.theta))
        if abs(rho) < 1 - 1e-12:
            return _bivariate_tail(F.a, G.a, rho) - F.mean() * G.mean()
        nodes, weights = quadrature_rule(F, order, extra_cuts=[rho * G.a])
    else:
        rough = [H for H in (F, G) if isinstance(H, (SignComposed, HalfSpace))
                 or (isinstance(H, OUSmoothed) and H.t == 0)]
        if len(rough) == 2:
            raise NotImplementedError(
                f"no adapted rule for {type(F).__name__} x {type(G).__name__}"
            )
        nodes, weights = quadrature_rule(rough[0] if rough else F, order)
    fg = integrate(lambda x: F(x) * G(x), nodes, weights)
    return float(fg - integrate(F, nodes, weights) * integrate(G, nodes, weights))


def gaussian_correlation_quadrature(F: SignComposed, G: SignComposed, order: int = 4) -> float:
    """Correlation of two sign-composed functionals by direct quadrature."""
    nodes, weights = quadrature_rule(F, order)
    fv, gv = F(nodes), G(nodes)
    return float(weights @ (fv * gv) - (weights @ fv) * (weights @ gv))


# -- second-order bound right-hand sides ----------------------------------


def _safe_tal(m, root: bool) -> float:
    if m == 0:
        return 0.0
    lg = math.log(math.e / m)
    if lg <= 0:
        return math.nan
    return m / (math.sqrt(lg) if root else lg)


@dataclass(frozen=True)
class GaussianBoundReport:
    cor: float
    m1: float
    m2: float
    rhs_main_tal: float
    rhs_main_coord: float

    @property
    def ratio_main_tal(self) -> float:
        return self.cor / self.rhs_main_tal if self.rhs_main_tal > 0 else math.inf

    @property
    def ratio_main_coord(self) -> float:
        return self.cor / self.rhs_main_coord if self.rhs_main_coord > 0 else math.inf

    def to_json(self) -> dict:
        return {
            "cor": self.cor, "m1": self.m1, "m2": self.m2,
            "rhs_main_tal": self.rhs_main_tal, "rhs_main_coord": self.rhs_main_coord,
            "ratio_main_tal": self.ratio_main_tal, "ratio_main_coord": self.ratio_main_coord,
        }


def gaussian_bounds(F: GaussianFunctional, G: GaussianFunctional, order: int = DEFAULT_ORDER,
                    cor: float | None = None) -> GaussianBoundReport:
    """Evaluate both Gaussian second-order bound right-hand sides (constant 1).

    ``m1 = <M1(F), M1(G)>`` and ``m2 = <M2(F), M2(G)>_HS``. A zero second
    moment makes the corresponding branch of the minimum infinite, and a
    zero first moment makes the right-hand side zero.
    """
    a1, b1 = np.asarray(moment(F, 1)), np.asarray(moment(G, 1))
    a2, b2 = np.asarray(moment(F, 2)), np.asarray(moment(G, 2))
    m1v = float(a1 @ b1)
    m2v = float(np.sum(a2 * b2))
    if cor is None:
        cor = gaussian_correlation(F, G, order)
    first = _safe_tal(m1v, root=True)
    if m1v == 0:
        tal = 0.0
    elif math.isnan(first):
        tal = math.nan
    else:
        tal = min(first, math.inf if m2v == 0 else m1v * m1v / abs(m2v))
    coord = 0.0
    for i in range(F.n):
        a = float(a1[i] * b1[i])
        if a == 0:
            continue
        w = float(a2[:, i] @ b2[:, i])
        term = _safe_tal(a, root=True)
        if math.isnan(term):
            coord = math.nan
            break
        coord += min(term, math.inf if w == 0 else a * a / abs(w))
    return GaussianBoundReport(float(cor), m1v, m2v, tal, coord)


# -- Boolean bridge -----------------------------------------------------------

BRIDGE_COR = 0.25
BRIDGE_M1 = math.sqrt(2.0 / math.pi)
BRIDGE_M2 = 4.0 / math.pi


@dataclass
class BridgeReport:
    """Gaussian quantities of ``2 f(sign x) - 1`` next to their Boolean counterparts.

    ``cor_constant``, ``m1_constants`` and ``m2_constants`` are the measured
    ratios Boolean/Gaussian (cor) and Gaussian/Boolean (moments) wherever
    the denominator is non-zero. The ``alt_*`` fields report the moment
    ratios against the alternative normalisation (influence doubled,
    second-derivative matrix ``V``).
    """

    n: int
    monotone: bool
    cor_mu: Fraction
    cor_gamma: float
    m1_gauss: np.ndarray
    m2_gauss: np.ndarray
    inf_std: tuple[Fraction, ...]
    fourier_pairs: np.ndarray
    cor_constant: float | None
    m1_constants: list[float]
    m2_constants: list[float]
    alt_m1_constants: list[float]
    alt_m2_constants: list[float]

    def max_deviation(self) -> dict[str, float]:
        """Largest absolute departure of each identity from its pinned constant."""
        cor_dev = abs(float(self.cor_mu) - BRIDGE_COR * self.cor_gamma)
        m1_dev = float(np.max(np.abs(self.m1_gauss - BRIDGE_M1 * np.array([float(v) for v in self.inf_std]))))
        off = ~np.eye(self.n, dtype=bool)
        m2_dev = float(np.max(np.abs(self.m2_gauss - BRIDGE_M2 * self.fourier_pairs)[off], initial=0.0))
        diag = float(np.max(np.abs(np.diag(self.m2_gauss))))
        return {"cor": cor_dev, "m1": m1_dev, "m2": m2_dev, "m2_diag": diag}

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "monotone": self.monotone,
            "cor_mu": str(self.cor_mu),
            "cor_gamma": self.cor_gamma,
            "m1": self.m1_gauss.tolist(),
            "m2": self.m2_gauss.tolist(),
            "constants": {
                "cor": self.cor_constant,
                "m1": self.m1_constants,
                "m2": self.m2_constants,
            },
            "alt_constants": {
                "m1": self.alt_m1_constants,
                "m2": self.alt_m2_constants,
            },
            "pinned": {"cor": BRIDGE_COR, "m1": BRIDGE_M1, "m2": BRIDGE_M2},
            "max_deviation": self.max_deviation(),
        }


def bridge(f: BooleanFunction, g: BooleanFunction, order: int = 4) -> BridgeReport:
    """Compare Boolean and Gaussian correlation and moments of ``f``, ``g``.

    All Gaussian quantities are computed by quadrature on sign-split rules,
    independently of the Boolean spectra. Non-monotone inputs are accepted
    and flagged.
    """
    if f.n != g.n:
        raise ValueError(f"dimension mismatch: {f.n} vs {g.n}")
    F, G = SignComposed(f), SignComposed(g)
    sf = spectral_summary(f)
    cor_mu = correlation(f, g)
    cor_gamma = gaussian_correlation_quadrature(F, G, order)
    mf1 = np.asarray(moment(F, 1, "quadrature", order))
    mf2 = np.asarray(moment(F, 2, "quadrature", order))
    n = f.n
    pairs = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                pairs[i, j] = float(sf.fourier_pair(i, j))

    def ratios(num, den):
        return [float(a) / float(b) for a, b in zip(num, den) if b != 0]

    off = [(i, j) for i in range(n) for j in range(n) if i != j]
    m2c = [mf2[i, j] / pairs[i, j] for i, j in off if pairs[i, j] != 0]
    alt_m2 = [mf2[i, j] / float(sf.V[i][j]) for i, j in off if sf.V[i][j] != 0]
    return BridgeReport(
        n=n,
        monotone=is_monotone(f) and is_monotone(g),
        cor_mu=cor_mu,
        cor_gamma=cor_gamma,
        m1_gauss=mf1,
        m2_gauss=mf2,
        inf_std=sf.inf_std,
        fourier_pairs=pairs,
        cor_constant=float(cor_mu) / cor_gamma if cor_gamma else None,
        m1_constants=ratios(mf1, sf.inf_std),
        m2_constants=[float(v) for v in m2c],
        alt_m1_constants=ratios(mf1, sf.inf_paper),
        alt_m2_constants=[float(v) for v in alt_m2],
    )
