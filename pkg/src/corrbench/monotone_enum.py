"""Enumeration and sampling of monotone Boolean functions for small n.

Monotone tables on n variables are built from pairs ``(f0, f1)`` of monotone
tables on n-1 variables with ``f0 <= f1`` pointwise, ``f0`` being the
restriction to ``x_{n-1} = -1``. Iterating ``f1`` outermost over a sorted
list emits tables in increasing integer order, which is the canonical
(lexicographic) order used everywhere in this package.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Iterator

import numpy as np

from .boolean_core import BooleanFunction, is_antipodal, is_monotone, low_mask

MAX_ENUM_N = 6
DEDEKIND = (2, 3, 6, 20, 168, 7581, 7828354)


def _check_n(n: int) -> None:
    if not 0 <= n <= MAX_ENUM_N:
        raise ValueError(f"enumeration supports 0 <= n <= {MAX_ENUM_N}, got n={n}")


@lru_cache(maxsize=None)
def monotone_tables(n: int) -> np.ndarray:
    """Sorted ``uint64`` array of all monotone tables on ``n`` variables."""
    _check_n(n)
    if n == 0:
        out = np.array([0, 1], dtype=np.uint64)
    else:
        prev = monotone_tables(n - 1)
        shift = np.uint64(1 << (n - 1))
        parts = []
        for f1 in prev:
            f0 = prev[(prev & ~f1) == 0]
            parts.append(f0 | (f1 << shift))
        out = np.concatenate(parts)
    out.setflags(write=False)
    return out


def reverse_tables(tables: np.ndarray, n: int) -> np.ndarray:
    """Table of ``x -> f(-x)`` for each packed table (n <= 6)."""
    width = 1 << n
    tables = tables.astype(np.uint64)
    rev = np.zeros_like(tables)
    one = np.uint64(1)
    for i in range(width):
        rev |= ((tables >> np.uint64(i)) & one) << np.uint64(width - 1 - i)
    return rev


@lru_cache(maxsize=None)
def antipodal_monotone_tables(n: int) -> np.ndarray:
    _check_n(n)
    if n == 0:
        out = np.zeros(0, dtype=np.uint64)
    else:
        tables = monotone_tables(n)
        full = np.uint64((1 << (1 << n)) - 1)
        out = tables[reverse_tables(tables, n) == (tables ^ full)]
    out.setflags(write=False)
    return out


def enumerate_monotone(n: int) -> Iterator[BooleanFunction]:
    if not 1 <= n <= MAX_ENUM_N:
        raise ValueError(f"enumerate_monotone supports 1 <= n <= {MAX_ENUM_N}, got n={n}")
    for t in monotone_tables(n):
        yield BooleanFunction(n, int(t))


def enumerate_antipodal_monotone(n: int) -> Iterator[BooleanFunction]:
    if not 1 <= n <= MAX_ENUM_N:
        raise ValueError(f"enumerate_antipodal_monotone supports 1 <= n <= {MAX_ENUM_N}, got n={n}")
    for t in antipodal_monotone_tables(n):
        yield BooleanFunction(n, int(t))


# -- local moves ----------------------------------------------------------


def _flip_ok(bits: int, n: int, idx: int) -> bool:
    """Whether flipping position ``idx`` keeps a monotone table monotone."""
    if (bits >> idx) & 1:
        # 1 -> 0 needs every lower cover to be 0
        for i in range(n):
            if (idx >> i) & 1 and (bits >> (idx ^ (1 << i))) & 1:
                return False
    else:
        for i in range(n):
            if not (idx >> i) & 1 and not (bits >> (idx | (1 << i))) & 1:
                return False
    return True


def monotone_neighbors(f: BooleanFunction) -> list[BooleanFunction]:
    """All monotone functions at Hamming distance one from ``f``."""
    if not is_monotone(f):
        raise ValueError("monotone_neighbors requires a monotone function")
    return [
        BooleanFunction(f.n, f.bits ^ (1 << idx))
        for idx in range(f.size)
        if _flip_ok(f.bits, f.n, idx)
    ]


def antipodal_neighbors(f: BooleanFunction) -> list[BooleanFunction]:
    """Antipodal monotone functions reached by swapping a point with its negation."""
    if not (is_monotone(f) and is_antipodal(f)):
        raise ValueError("antipodal_neighbors requires an antipodal monotone function")
    top = f.size - 1
    out = []
    for idx in range(f.size):
        if (f.bits >> idx) & 1 == 0:
            cand = BooleanFunction(f.n, f.bits ^ (1 << idx) ^ (1 << (top ^ idx)))
            if is_monotone(cand):
                out.append(cand)
    return sorted(out, key=lambda g: g.bits)


# -- sampling -------------------------------------------------------------


def default_steps(n: int) -> int:
    return 50 * (1 << n)


def random_monotone(n: int, seed=None, steps: int | None = None) -> BooleanFunction:
    """Run the single-flip Metropolis chain from the all-zeros function.

    Each step proposes flipping a uniformly random point and accepts iff the
    result is monotone. The proposal is symmetric, so the stationary law is
    uniform over monotone functions; finite runs are only approximately
    uniform. ``seed`` may be anything accepted by ``numpy.random.default_rng``.
    """
    if steps is None:
        steps = default_steps(n)
    if steps < 0:
        raise ValueError("steps must be non-negative")
    rng = np.random.default_rng(seed)
    bits = 0
    for idx in rng.integers(0, 1 << n, size=steps).tolist():
        if _flip_ok(bits, n, idx):
            bits ^= 1 << idx
    return BooleanFunction(n, bits)


def random_antipodal_monotone(n: int, seed=None, steps: int | None = None) -> BooleanFunction:
    """Random walk over antipodal monotone functions started at the first dictator."""
    if steps is None:
        steps = default_steps(n)
    rng = np.random.default_rng(seed)
    top = (1 << n) - 1
    bits = ((1 << (1 << n)) - 1) ^ low_mask(n, 0)
    for idx in rng.integers(0, 1 << n, size=steps).tolist():
        if (bits >> idx) & 1:
            continue
        cand = bits ^ (1 << idx) ^ (1 << (top ^ idx))
        if is_monotone(BooleanFunction(n, cand)):
            bits = cand
    return BooleanFunction(n, bits)
