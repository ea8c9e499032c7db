"""Exact discrete quantities for Boolean functions on the cube {-1,1}^n.

A :class:`BooleanFunction` is a truth table packed into a Python integer.
Bit ``idx`` of the table holds ``f(x)`` for the point with
``x_i = 2*b_i - 1`` where ``b_i`` is bit ``i`` of ``idx`` (little-endian
coordinates, ``x_0`` is the lowest bit). Coordinates are 0-based throughout
the Python API.

Everything here is integer or :class:`fractions.Fraction` arithmetic; no
floats are involved, so identities such as Harris positivity can be checked
bit-exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

MAX_N = 24


@lru_cache(maxsize=None)
def _all_ones(n: int) -> int:
    return (1 << (1 << n)) - 1


@lru_cache(maxsize=None)
def low_mask(n: int, i: int) -> int:
    """Bitmask of table positions whose coordinate ``i`` equals -1."""
    block = 1 << i
    period = (1 << (2 * block)) - 1
    return _all_ones(n) // period * ((1 << block) - 1)


def _reverse_bits(bits: int, width: int) -> int:
    return int(format(bits, f"0{width}b")[::-1], 2)


@dataclass(frozen=True)
class BooleanFunction:
    """Truth table of ``f: {-1,1}^n -> {0,1}``.

    Parameters
    ----------
    n : int
        Dimension, ``1 <= n <= 24``.
    bits : int
        Packed table, ``0 <= bits < 2**(2**n)``.
    """

    n: int
    bits: int

    def __post_init__(self):
        if not 1 <= self.n <= MAX_N:
            raise ValueError(f"n must be in [1, {MAX_N}], got {self.n}")
        if not 0 <= self.bits <= _all_ones(self.n):
            raise ValueError("table has bits beyond position 2**n - 1")

    @property
    def size(self) -> int:
        return 1 << self.n

    @cached_property
    def values(self) -> np.ndarray:
        """Table as a ``uint8`` array of length ``2**n``."""
        raw = self.bits.to_bytes((self.size + 7) // 8, "little")
        arr = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")
        arr = arr[: self.size].copy()
        arr.setflags(write=False)
        return arr

    @classmethod
    def from_values(cls, values: Sequence[int] | np.ndarray) -> "BooleanFunction":
        vals = np.asarray(values, dtype=np.int64)
        size = vals.size
        n = size.bit_length() - 1
        if size < 2 or (1 << n) != size:
            raise ValueError(f"table length must be a power of two >= 2, got {size}")
        if np.any((vals != 0) & (vals != 1)):
            raise ValueError("table entries must be 0 or 1")
        packed = np.packbits(vals.astype(np.uint8), bitorder="little")
        return cls(n, int.from_bytes(packed.tobytes(), "little") & _all_ones(n))

    @classmethod
    def from_callable(cls, n: int, fn: Callable[[tuple[int, ...]], int]) -> "BooleanFunction":
        bits = 0
        for idx in range(1 << n):
            if fn(index_to_point(idx, n)):
                bits |= 1 << idx
        return cls(n, bits)

    # -- file format ---------------------------------------------------

    @property
    def table_hex(self) -> str:
        return format(self.bits, f"0{-(-self.size // 4)}x")

    def to_json(self) -> dict:
        return {"n": self.n, "table_hex": self.table_hex}

    @classmethod
    def from_json(cls, obj: dict) -> "BooleanFunction":
        for key in ("n", "table_hex"):
            if key not in obj:
                raise ValueError(f"function file missing field '{key}'")
        n, text = obj["n"], obj["table_hex"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise ValueError("field 'n' must be an integer")
        if not isinstance(text, str) or len(text) != -(-(1 << n) // 4):
            raise ValueError(f"field 'table_hex' must have {-(-(1 << n) // 4)} hex digits")
        if text != text.lower():
            raise ValueError("field 'table_hex' must be lowercase")
        try:
            bits = int(text, 16)
        except ValueError as exc:
            raise ValueError("field 'table_hex' is not hexadecimal") from exc
        return cls(n, bits)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "BooleanFunction":
        return cls.from_json(json.loads(text))

    def __repr__(self) -> str:
        return f"BooleanFunction(n={self.n}, table_hex='{self.table_hex}')"


# -- points ---------------------------------------------------------------


def index_to_point(idx: int, n: int) -> tuple[int, ...]:
    return tuple(2 * ((idx >> i) & 1) - 1 for i in range(n))


def point_to_index(x: Sequence[int], n: int) -> int:
    if len(x) != n:
        raise ValueError(f"point has {len(x)} coordinates, expected {n}")
    idx = 0
    for i, xi in enumerate(x):
        if xi == 1:
            idx |= 1 << i
        elif xi != -1:
            raise ValueError(f"coordinate {i} is {xi}, expected -1 or 1")
    return idx


def evaluate(f: BooleanFunction, x: Sequence[int]) -> int:
    return (f.bits >> point_to_index(x, f.n)) & 1


def discrete_derivative(f: BooleanFunction, i: int, x: Sequence[int]) -> int:
    """``f(x; x_i -> 1) - f(x; x_i -> -1)``; ``i`` is 0-based."""
    if not 0 <= i < f.n:
        raise IndexError(f"coordinate {i} out of range for n={f.n}")
    idx = point_to_index(x, f.n) & ~(1 << i)
    return ((f.bits >> (idx | (1 << i))) & 1) - ((f.bits >> idx) & 1)


# -- predicates -----------------------------------------------------------


def is_monotone(f: BooleanFunction) -> bool:
    bits = f.bits
    for i in range(f.n):
        low = bits & low_mask(f.n, i)
        high = (bits >> (1 << i)) & low_mask(f.n, i)
        if low & ~high:
            return False
    return True


def is_antipodal(f: BooleanFunction) -> bool:
    return _reverse_bits(f.bits, f.size) == f.bits ^ _all_ones(f.n)


# -- spectra --------------------------------------------------------------


def walsh_transform(values: np.ndarray) -> np.ndarray:
    """Unnormalised transform ``W[S] = sum_x f(x) prod_{i in S} x_i``.

    ``S`` is encoded as a bitmask over coordinates. Integer in, integer out.
    """
    arr = np.array(values, dtype=np.int64)
    size = arr.size
    h = 1
    while h < size:
        view = arr.reshape(-1, 2, h)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = a0 + a1
        view[:, 1, :] = a1 - a0
        h *= 2
    return arr


def pivotal_counts(f: BooleanFunction) -> np.ndarray:
    """Number of points at which each coordinate is pivotal."""
    v = f.values.astype(np.int8)
    counts = np.empty(f.n, dtype=np.int64)
    for i in range(f.n):
        blk = v.reshape(-1, 2, 1 << i)
        counts[i] = 2 * int(np.count_nonzero(blk[:, 0, :] != blk[:, 1, :]))
    return counts


def second_derivative_sums(f: BooleanFunction) -> np.ndarray:
    """``D[i, j] = sum over the other coordinates of d_i d_j f``.

    ``E[d_i d_j f] = D[i, j] / 2**(n-2)`` since the summand does not depend
    on ``x_i, x_j``. The diagonal is zero.
    """
    n = f.n
    v = f.values.astype(np.int64).reshape((2,) * n)  # axis n-1-i is coordinate i
    out = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(i + 1, n):
            ai, aj = n - 1 - i, n - 1 - j
            d = np.take(v, 1, axis=ai) - np.take(v, 0, axis=ai)
            aj2 = aj if aj < ai else aj - 1
            dd = np.take(d, 1, axis=aj2) - np.take(d, 0, axis=aj2)
            out[i, j] = out[j, i] = int(dd.sum())
    return out


@dataclass(frozen=True)
class SpectralSummary:
    """Exact spectral data of a Boolean function.

    ``fourier_numer[S] / 2**n`` is ``f^(S)``; use :meth:`fourier` for the
    rational value. ``V`` follows the unit-derivative convention
    ``V[i][j] = E[d_i d_j f]``.
    """

    n: int
    mean: Fraction
    inf_std: tuple[Fraction, ...]
    inf_paper: tuple[Fraction, ...]
    V: tuple[tuple[Fraction, ...], ...]
    fourier_numer: np.ndarray
    monotone: bool
    antipodal: bool

    def fourier(self, subset: int | Iterable[int]) -> Fraction:
        mask = subset if isinstance(subset, int) else sum(1 << i for i in subset)
        return Fraction(int(self.fourier_numer[mask]), 1 << self.n)

    def fourier_pair(self, i: int, j: int) -> Fraction:
        return self.fourier((1 << i) | (1 << j))

    def influences(self, normalization: str = "std") -> tuple[Fraction, ...]:
        if normalization == "std":
            return self.inf_std
        if normalization == "paper":
            return self.inf_paper
        raise ValueError(f"unknown normalization '{normalization}'")

    def V_row(self, i: int) -> tuple[Fraction, ...]:
        return self.V[i]


def spectral_summary(f: BooleanFunction) -> SpectralSummary:
    if f.n > MAX_N:
        raise ValueError(f"n={f.n} too large for an exhaustive transform")
    size = f.size
    piv = pivotal_counts(f)
    inf_std = tuple(Fraction(int(c), size) for c in piv)
    dsum = second_derivative_sums(f)
    scale = 1 << f.n
    V = tuple(
        tuple(Fraction(4 * int(dsum[i, j]), scale) for j in range(f.n)) for i in range(f.n)
    )
    numer = walsh_transform(f.values)
    numer.setflags(write=False)
    return SpectralSummary(
        n=f.n,
        mean=Fraction(f.bits.bit_count(), size),
        inf_std=inf_std,
        inf_paper=tuple(2 * x for x in inf_std),
        V=V,
        fourier_numer=numer,
        monotone=is_monotone(f),
        antipodal=is_antipodal(f),
    )


def correlation(f: BooleanFunction, g: BooleanFunction) -> Fraction:
    """``E[fg] - E[f]E[g]`` under the uniform measure."""
    if f.n != g.n:
        raise ValueError(f"dimension mismatch: {f.n} vs {g.n}")
    size = f.size
    both = (f.bits & g.bits).bit_count()
    return Fraction(size * both - f.bits.bit_count() * g.bits.bit_count(), size * size)


# -- named functions ------------------------------------------------------


def constant(n: int, value: int) -> BooleanFunction:
    return BooleanFunction(n, _all_ones(n) if value else 0)


def dictator(n: int, i: int = 0) -> BooleanFunction:
    """``1{x_i = 1}``."""
    return BooleanFunction(n, _all_ones(n) ^ low_mask(n, i))


def and_(n: int) -> BooleanFunction:
    return BooleanFunction(n, 1 << ((1 << n) - 1))


def or_(n: int) -> BooleanFunction:
    return BooleanFunction(n, _all_ones(n) ^ 1)


def majority(n: int) -> BooleanFunction:
    if n % 2 == 0:
        raise ValueError("majority needs an odd number of voters")
    return BooleanFunction.from_callable(n, lambda x: sum(x) > 0)


def xor(n: int) -> BooleanFunction:
    return BooleanFunction.from_callable(n, lambda x: math.prod(x) == -1)


def tribes(width: int, count: int) -> BooleanFunction:
    n = width * count
    return BooleanFunction.from_callable(
        n, lambda x: any(all(v == 1 for v in x[k * width:(k + 1) * width]) for k in range(count))
    )


NAMED = {
    "and2": lambda: and_(2),
    "and3": lambda: and_(3),
    "or3": lambda: or_(3),
    "or2": lambda: or_(2),
    "xor2": lambda: xor(2),
    "maj3": lambda: majority(3),
    "maj5": lambda: majority(5),
    "d1": lambda: dictator(1),
}
