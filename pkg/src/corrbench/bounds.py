"""Right-hand sides of the correlation lower bounds and pair scans.

All universal constants are set to 1. Influences come in two
normalizations: ``"std"`` (probability of being pivotal) and ``"paper"``
(twice that). ``V`` and therefore ``m2`` do not depend on the choice.

Conventions for degenerate values:

* ``x / log(e/x)`` and friends are extended by 0 at ``x = 0``;
* a second branch with zero denominator is ``+inf``;
* a log factor that is ``<= 0`` (only possible under ``"paper"``) makes the
  bound undefined; it is reported as ``nan`` and excluded from minima.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .boolean_core import BooleanFunction, SpectralSummary, spectral_summary
from .monotone_enum import (
    antipodal_monotone_tables,
    antipodal_neighbors,
    monotone_neighbors,
    monotone_tables,
    random_antipodal_monotone,
    random_monotone,
)

E = math.e
INEQUALITIES = ("tal", "kms", "main_tal", "main_coord")
ANTIPODAL_INEQUALITIES = ("symm", "chvatal")
OBJECTIVE_ALIASES = {
    "tal": "tal",
    "talagrand": "tal",
    "kms": "kms",
    "main_tal": "main_tal",
    "main_coord": "main_coord",
    "symm": "symm",
    "chvatal": "chvatal",
}
MAX_EXHAUSTIVE_N = 5
MAX_SCAN_N = 6


def _norm_factor(normalization: str) -> int:
    if normalization == "std":
        return 1
    if normalization == "paper":
        return 2
    raise ValueError(f"unknown normalization '{normalization}'")


# -- scalar quantities ----------------------------------------------------


def pair_moments(sf: SpectralSummary, sg: SpectralSummary, normalization: str = "std"):
    """Return ``(m1, m2, per_coord)`` as exact rationals.

    ``per_coord[i] = (I_i(f) I_i(g), <V_i(f), V_i(g)>)``.
    """
    if sf.n != sg.n:
        raise ValueError(f"dimension mismatch: {sf.n} vs {sg.n}")
    inf_f, inf_g = sf.influences(normalization), sg.influences(normalization)
    per_coord = []
    for i in range(sf.n):
        w = sum((sf.V[j][i] * sg.V[j][i] for j in range(sf.n)), Fraction(0))
        per_coord.append((inf_f[i] * inf_g[i], w))
    m1 = sum((a for a, _ in per_coord), Fraction(0))
    m2 = sum((w for _, w in per_coord), Fraction(0))
    return m1, m2, per_coord


def cor_from_spectra(sf: SpectralSummary, sg: SpectralSummary) -> Fraction:
    """Correlation via Plancherel, ``sum_{S != {}} f^(S) g^(S)``."""
    dot = int(np.dot(sf.fourier_numer[1:].astype(object), sg.fourier_numer[1:].astype(object)))
    return Fraction(dot, 1 << (2 * sf.n))


def _log_e_over(x, num: float = E) -> float:
    return math.log(num / float(x))


def _tal_form(m1, num: float = E, root: bool = False) -> float:
    if m1 == 0:
        return 0.0
    lg = _log_e_over(m1, num)
    if lg <= 0:
        return math.nan
    return float(m1) / (math.sqrt(lg) if root else lg)


def rhs_talagrand(sf, sg, normalization: str = "std") -> float:
    m1, _, _ = pair_moments(sf, sg, normalization)
    return _tal_form(m1)


def rhs_kms(sf, sg, normalization: str = "std") -> float:
    inf_f, inf_g = sf.influences(normalization), sg.influences(normalization)
    total = 0.0
    for a, b in zip(inf_f, inf_g):
        if a == 0 or b == 0:
            continue
        la, lb = _log_e_over(a), _log_e_over(b)
        if la <= 0 or lb <= 0:
            return math.nan
        total += float(a * b) / math.sqrt(la * lb)
    return total


def rhs_main_tal(sf, sg, normalization: str = "std") -> float:
    m1, m2, _ = pair_moments(sf, sg, normalization)
    if m1 == 0:
        return 0.0
    first = _tal_form(m1, root=True)
    if math.isnan(first):
        return math.nan
    second = math.inf if m2 == 0 else float(m1 * m1 / abs(m2))
    return min(first, second)


def rhs_main_coord(sf, sg, normalization: str = "std") -> float:
    _, _, per_coord = pair_moments(sf, sg, normalization)
    total = 0.0
    for a, w in per_coord:
        if a == 0:
            continue
        lg = _log_e_over(a)
        if lg <= 0:
            return math.nan
        second = math.inf if w == 0 else float(a / abs(w))
        total += float(a) * min(1.0 / math.sqrt(lg), second)
    return total


def _require_antipodal(sg: SpectralSummary) -> None:
    if not sg.antipodal:
        raise ValueError("g must be antipodal for this bound")


def rhs_symm(sf, sg, normalization: str = "std") -> float:
    _require_antipodal(sg)
    m1, _, _ = pair_moments(sf, sg, normalization)
    return _tal_form(m1, num=2 * E, root=True)


def chvatal_rhs(sf, normalization: str = "std") -> Fraction:
    return min(sf.influences(normalization)) / 4


def chvatal_ratio(sf, sg, normalization: str = "std") -> float:
    """``Cor(f,g) / (min_i I_i(f) / 4)``; ``+inf`` when the minimum is 0.

    When both are zero the ratio is undefined and ``nan`` is returned; the
    conjectured inequality then holds trivially.
    """
    _require_antipodal(sg)
    cor = cor_from_spectra(sf, sg)
    rhs = chvatal_rhs(sf, normalization)
    if rhs == 0:
        return math.inf if cor > 0 else math.nan
    return float(cor / rhs)


def remark_constant(sf, sg, normalization: str = "std") -> float:
    """``m2 / (m1 log(e/m1))``, the constant needed in the reverse inequality."""
    m1, m2, _ = pair_moments(sf, sg, normalization)
    if m1 == 0:
        raise ValueError("remark constant undefined for m1 = 0")
    lg = _log_e_over(m1)
    if lg <= 0:
        return math.nan
    return float(m2) / (float(m1) * lg)


@dataclass
class PairBoundReport:
    cor: Fraction
    m1: Fraction
    m2: Fraction
    per_coord: list
    rhs: dict
    ratios: dict
    normalization: str
    flags: list = field(default_factory=list)

    @property
    def rhs_tal(self):
        return self.rhs["tal"]

    @property
    def rhs_kms(self):
        return self.rhs["kms"]

    @property
    def rhs_main_tal(self):
        return self.rhs["main_tal"]

    @property
    def rhs_main_coord(self):
        return self.rhs["main_coord"]

    def to_json(self) -> dict:
        def num(x):
            if isinstance(x, Fraction):
                return str(x)
            if isinstance(x, float) and not math.isfinite(x):
                return str(x)
            return x

        return {
            "normalization": self.normalization,
            "cor": str(self.cor),
            "m1": str(self.m1),
            "m2": str(self.m2),
            "per_coord": [[str(a), str(w)] for a, w in self.per_coord],
            "rhs": {k: num(v) for k, v in self.rhs.items()},
            "ratios": {k: num(v) for k, v in self.ratios.items()},
            "flags": list(self.flags),
        }


def analyze_pair(f: BooleanFunction, g: BooleanFunction, normalization: str = "std") -> PairBoundReport:
    sf, sg = spectral_summary(f), spectral_summary(g)
    return analyze_spectra(sf, sg, normalization)


def analyze_spectra(sf, sg, normalization: str = "std") -> PairBoundReport:
    flags = []
    if not sf.monotone:
        flags.append("f_not_monotone")
    if not sg.monotone:
        flags.append("g_not_monotone")
    cor = cor_from_spectra(sf, sg)
    m1, m2, per_coord = pair_moments(sf, sg, normalization)
    rhs = {
        "tal": rhs_talagrand(sf, sg, normalization),
        "kms": rhs_kms(sf, sg, normalization),
        "main_tal": rhs_main_tal(sf, sg, normalization),
        "main_coord": rhs_main_coord(sf, sg, normalization),
    }
    if sg.antipodal:
        rhs["symm"] = rhs_symm(sf, sg, normalization)
        rhs["chvatal"] = float(chvatal_rhs(sf, normalization))
    else:
        flags.append("g_not_antipodal")
    ratios = {}
    for name, value in rhs.items():
        if math.isnan(value):
            flags.append(f"log_out_of_domain:{name}")
        elif value > 0:
            ratios[name] = float(cor) / value
    if sg.antipodal and rhs["chvatal"] == 0:
        flags.append("chvatal_trivially_satisfied")
        ratios["chvatal"] = math.inf if cor > 0 else math.nan
    if m1 > 0:
        rc = remark_constant(sf, sg, normalization)
        if not math.isnan(rc):
            rhs["remark_constant"] = rc
    return PairBoundReport(cor, m1, m2, per_coord, rhs, ratios, normalization, flags)


# -- vectorized scan engine -----------------------------------------------


@dataclass
class SpectraTable:
    """Integer spectra for many tables of one dimension (n <= 6).

    ``piv[k, i]`` is the pivotal count of coordinate ``i``; ``W[k, i, j]`` is
    ``sum_x f(x) x_i x_j`` with a zero diagonal, so ``V = 4 W / 2**n``.
    """

    n: int
    tables: np.ndarray
    ones: np.ndarray
    piv: np.ndarray
    W: np.ndarray

    def __len__(self):
        return len(self.tables)

    def take(self, idx) -> "SpectraTable":
        return SpectraTable(self.n, self.tables[idx], self.ones[idx], self.piv[idx], self.W[idx])


def spectra_table(tables: np.ndarray, n: int) -> SpectraTable:
    if n > MAX_SCAN_N:
        raise ValueError(f"vectorized spectra support n <= {MAX_SCAN_N}")
    tables = np.asarray(tables, dtype=np.uint64)
    size = 1 << n
    idx = np.arange(size, dtype=np.uint64)
    bitmat = ((tables[:, None] >> idx[None, :]) & np.uint64(1)).astype(np.int64)
    piv = np.empty((len(tables), n), dtype=np.int64)
    for i in range(n):
        blk = bitmat.reshape(len(tables), -1, 2, 1 << i)
        piv[:, i] = 2 * np.count_nonzero(blk[:, :, 0, :] != blk[:, :, 1, :], axis=(1, 2))
    signs = 2 * ((np.arange(size)[:, None] >> np.arange(n)[None, :]) & 1) - 1
    pair_char = (signs[:, :, None] * signs[:, None, :]).reshape(size, n * n)
    W = (bitmat @ pair_char).reshape(len(tables), n, n)
    W[:, np.arange(n), np.arange(n)] = 0
    ones = bitmat.sum(axis=1)
    return SpectraTable(n, tables, ones, piv, W)


def _safe_log_e_over(x: np.ndarray, num: float = E) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(num / x)


def _evaluate_block(sf: SpectraTable, sg: SpectraTable, normalization: str, antipodal: bool):
    """Cor, moments and ratio arrays for all pairs of a broadcast block.

    ``sf`` and ``sg`` arrays must broadcast against each other over their
    leading axes. Exact integers up to the final float conversion.
    """
    n = sf.n
    size = 1 << n
    size2 = float(size * size)
    scale = _norm_factor(normalization) ** 2

    both = np.bitwise_count(sf.tables & sg.tables).astype(np.int64)
    cor_num = size * both - sf.ones * sg.ones
    cor = cor_num / size2

    a_num = sf.piv * sg.piv  # (..., n)
    w_num = (sf.W * sg.W).sum(axis=-2)  # (..., n): sum_j W[j,i] W'[j,i]
    m1_num = a_num.sum(axis=-1)
    m2_num = w_num.sum(axis=-1)

    a = a_num * (scale / size2)
    w = w_num * (16.0 / size2)
    m1 = m1_num * (scale / size2)
    m2 = m2_num * (16.0 / size2)

    out = {"cor_num": cor_num, "cor": cor, "m1_num": m1_num}
    with np.errstate(divide="ignore", invalid="ignore"):
        lg = _safe_log_e_over(m1)
        pos = m1_num > 0
        bad = pos & (lg <= 0)
        tal = np.where(pos, m1 / lg, 0.0)
        first = np.where(pos, m1 / np.sqrt(lg), 0.0)
        second = np.where(m2_num != 0, m1 * m1 / np.abs(m2), np.inf)
        main_tal = np.where(pos, np.minimum(first, second), 0.0)
        tal[bad] = np.nan
        main_tal[bad] = np.nan

        nf = _norm_factor(normalization)
        inf_f = sf.piv * (nf / size)
        inf_g = sg.piv * (nf / size)
        lf = _safe_log_e_over(inf_f)
        lgg = _safe_log_e_over(inf_g)
        active = a_num > 0
        kms_terms = np.where(active, a / np.sqrt(lf * lgg), 0.0)
        kms_bad = np.any(active & ((lf <= 0) | (lgg <= 0)), axis=-1)
        kms = kms_terms.sum(axis=-1)
        kms[kms_bad] = np.nan

        la = _safe_log_e_over(a)
        coord_second = np.where(w_num != 0, a / np.abs(w), np.inf)
        coord_terms = np.where(active, a * np.minimum(1.0 / np.sqrt(la), coord_second), 0.0)
        coord_bad = np.any(active & (la <= 0), axis=-1)
        main_coord = coord_terms.sum(axis=-1)
        main_coord[coord_bad] = np.nan

        remark = np.where(pos & ~bad, m2 / (m1 * lg), np.nan)

        rhs = {"tal": tal, "kms": kms, "main_tal": main_tal, "main_coord": main_coord}
        if antipodal:
            lg2 = _safe_log_e_over(m1, 2 * E)
            symm = np.where(pos, m1 / np.sqrt(lg2), 0.0)
            symm[pos & (lg2 <= 0)] = np.nan
            rhs["symm"] = symm
            minpiv = np.broadcast_to(sf.piv.min(axis=-1), cor_num.shape)
            # cor < min_i I_i(f) / 4, exactly: 4 cor_num < nf * minpiv * size
            out["chvatal_violation"] = 4 * cor_num < nf * minpiv * size
            rhs["chvatal"] = nf * minpiv / (4.0 * size)
        ratios = {}
        for name, value in rhs.items():
            ratios[name] = np.where(value > 0, cor / value, np.nan)
    out["rhs"] = rhs
    out["ratios"] = ratios
    out["remark"] = remark
    out["m1_pos"] = pos
    return out


@dataclass
class _Extremum:
    value: float = math.nan
    fi: int = -1
    gi: int = -1

    def offer(self, value: float, fi: int, gi: int, maximize: bool = False) -> None:
        if math.isnan(value):
            return
        if math.isnan(self.value):
            better = True
        elif maximize:
            better = value > self.value
        else:
            better = value < self.value
        if better or (value == self.value and (fi, gi) < (self.fi, self.gi)):
            self.value, self.fi, self.gi = value, fi, gi


def _block_extremum(arr: np.ndarray, maximize: bool = False):
    if arr.size == 0 or np.all(np.isnan(arr)):
        return None
    flat = np.nanargmax(arr) if maximize else np.nanargmin(arr)
    return float(arr.flat[flat]), np.unravel_index(flat, arr.shape)


class _ScanAccumulator:
    """Per-worker extrema and counters; merging is an order-independent min/max."""

    def __init__(self, normalizations):
        self.normalizations = tuple(normalizations)
        self.minima = {nm: {k: _Extremum() for k in INEQUALITIES + ANTIPODAL_INEQUALITIES}
                       for nm in self.normalizations}
        self.remark = _Extremum()
        self.pairs = 0
        self.antipodal_pairs = 0
        self.harris_violations = []
        self.harris_strict_failures = 0
        self.chvatal = {nm: [] for nm in self.normalizations}
        self.chvatal_counts = {nm: 0 for nm in self.normalizations}
        self.undefined = {nm: 0 for nm in self.normalizations}

    def merge(self, other: "_ScanAccumulator") -> None:
        for nm in self.normalizations:
            for k, ext in other.minima[nm].items():
                self.minima[nm][k].offer(ext.value, ext.fi, ext.gi)
            self.chvatal[nm].extend(other.chvatal[nm])
            self.chvatal_counts[nm] += other.chvatal_counts[nm]
            self.undefined[nm] += other.undefined[nm]
        self.remark.offer(other.remark.value, other.remark.fi, other.remark.gi, maximize=True)
        self.pairs += other.pairs
        self.antipodal_pairs += other.antipodal_pairs
        self.harris_violations.extend(other.harris_violations)
        self.harris_strict_failures += other.harris_strict_failures


MAX_LISTED = 100


def _offer_block(acc, res, names, nm, fidx, gidx):
    for name in names:
        found = _block_extremum(res["ratios"][name])
        if found is not None:
            value, loc = found
            fi, gi = _locate(loc, fidx, gidx)
            acc.minima[nm][name].offer(value, fi, gi)


def _locate(loc, fidx, gidx):
    if len(loc) == 2:
        return int(fidx[loc[0]]), int(gidx[loc[1]])
    return int(fidx[loc[0]]), int(gidx[loc[0]])


def _scan_rows(args):
    """Worker: all g for the f rows ``[lo, hi)`` (exhaustive mode)."""
    n, lo, hi, normalizations = args
    tables = monotone_tables(n)
    st_all = spectra_table(tables, n)
    anti_idx = np.searchsorted(tables, antipodal_monotone_tables(n))
    acc = _ScanAccumulator(normalizations)
    block = 16
    gidx = np.arange(len(tables))
    for b0 in range(lo, hi, block):
        b1 = min(b0 + block, hi)
        fidx = np.arange(b0, b1)
        sf = _expand_f(st_all.take(fidx))
        sg = _expand_g(st_all)
        sga = _expand_g(st_all.take(anti_idx))
        for nm in normalizations:
            res = _evaluate_block(sf, sg, nm, antipodal=False)
            _offer_block(acc, res, INEQUALITIES, nm, fidx, gidx)
            if nm == normalizations[0]:
                acc.pairs += res["cor"].size
                _harris(acc, res, fidx, gidx, (tables, tables), n)
                rem = _block_extremum(res["remark"], maximize=True)
                if rem is not None:
                    fi, gi = _locate(rem[1], fidx, gidx)
                    acc.remark.offer(rem[0], fi, gi, maximize=True)
            acc.undefined[nm] += int(np.count_nonzero(np.isnan(res["rhs"]["tal"])))
            resa = _evaluate_block(sf, sga, nm, antipodal=True)
            _offer_block(acc, resa, ANTIPODAL_INEQUALITIES, nm, fidx, anti_idx)
            if nm == normalizations[0]:
                acc.antipodal_pairs += resa["cor"].size
            _chvatal(acc, resa, nm, fidx, anti_idx, (tables, tables), n)
    return acc


def _harris(acc, res, fidx, gidx, tabs, n):
    neg = np.argwhere(res["cor_num"] < 0)
    for loc in neg[: max(0, MAX_LISTED - len(acc.harris_violations))]:
        fi, gi = _locate(tuple(loc), fidx, gidx)
        acc.harris_violations.append(_pair_record(tabs, n, fi, gi, res["cor"][tuple(loc)]))
    acc.harris_strict_failures += int(np.count_nonzero(res["m1_pos"] & (res["cor_num"] <= 0)))


def _chvatal(acc, res, nm, fidx, gidx, tabs, n):
    viol = np.argwhere(res["chvatal_violation"])
    acc.chvatal_counts[nm] += len(viol)
    for loc in viol[: max(0, MAX_LISTED - len(acc.chvatal[nm]))]:
        fi, gi = _locate(tuple(loc), fidx, gidx)
        acc.chvatal[nm].append(_pair_record(tabs, n, fi, gi, res["cor"][tuple(loc)]))


def _pair_record(tabs, n, fi, gi, cor):
    f = BooleanFunction(n, int(tabs[0][fi]))
    g = BooleanFunction(n, int(tabs[1][gi]))
    return {"f_hex": f.table_hex, "g_hex": g.table_hex, "cor": float(cor)}


def _expand_f(st: SpectraTable) -> SpectraTable:
    return SpectraTable(st.n, st.tables[:, None], st.ones[:, None], st.piv[:, None, :], st.W[:, None, :, :])


def _expand_g(st: SpectraTable) -> SpectraTable:
    return SpectraTable(st.n, st.tables[None, :], st.ones[None, :], st.piv[None, :, :], st.W[None, :, :, :])


@dataclass
class WorstCaseReport:
    n: int
    mode: str
    normalization: str
    pairs_examined: int
    antipodal_pairs_examined: int
    minima: dict
    maxima: dict
    harris_violations: list
    harris_strict_failures: int
    chvatal_counterexamples: dict
    chvatal_counts: dict
    undefined_counts: dict
    partial: bool
    seed: int | None
    params: dict = field(default_factory=dict)
    elapsed: float = 0.0

    def min_ratio(self, inequality: str, normalization: str | None = None) -> float:
        return self.minima[normalization or self.normalization][inequality]["ratio"]

    def argmin(self, inequality: str, normalization: str | None = None):
        rec = self.minima[normalization or self.normalization][inequality]
        return (BooleanFunction(self.n, int(rec["f_hex"], 16)),
                BooleanFunction(self.n, int(rec["g_hex"], 16)))

    def to_json(self) -> dict:
        """Deterministic part of the report (no wall-clock fields)."""
        return {
            "params": dict(self.params, n=self.n, mode=self.mode, normalization=self.normalization,
                           seed=self.seed),
            "counts": {
                "pairs_examined": self.pairs_examined,
                "antipodal_pairs_examined": self.antipodal_pairs_examined,
                "harris_violations": len(self.harris_violations),
                "harris_strict_failures": self.harris_strict_failures,
                "chvatal_counterexamples": self.chvatal_counts.get(self.normalization, 0),
                "chvatal_counterexamples_by_normalization": dict(self.chvatal_counts),
                "undefined_rhs_by_normalization": dict(self.undefined_counts),
                "partial": self.partial,
            },
            "minima": self.minima[self.normalization],
            "minima_by_normalization": self.minima,
            "maxima": self.maxima,
            "counterexamples": {
                "harris": self.harris_violations,
                "chvatal": self.chvatal_counterexamples.get(self.normalization, []),
            },
        }


def _finish(acc: _ScanAccumulator, n, mode, normalization, tables_for_hex, partial, seed, params,
            elapsed) -> WorstCaseReport:
    def rec(ext: _Extremum):
        if ext.fi < 0:
            return {"ratio": None, "f_hex": None, "g_hex": None}
        f = BooleanFunction(n, int(tables_for_hex[0][ext.fi]))
        g = BooleanFunction(n, int(tables_for_hex[1][ext.gi]))
        return {"ratio": ext.value, "f_hex": f.table_hex, "g_hex": g.table_hex}

    minima = {nm: {k: rec(v) for k, v in acc.minima[nm].items()} for nm in acc.normalizations}
    return WorstCaseReport(
        n=n,
        mode=mode,
        normalization=normalization,
        pairs_examined=acc.pairs,
        antipodal_pairs_examined=acc.antipodal_pairs,
        minima=minima,
        maxima={"remark_constant": rec(acc.remark)},
        harris_violations=acc.harris_violations,
        harris_strict_failures=acc.harris_strict_failures,
        chvatal_counterexamples=acc.chvatal,
        chvatal_counts=acc.chvatal_counts,
        undefined_counts=acc.undefined,
        partial=partial,
        seed=seed,
        params=params,
        elapsed=elapsed,
    )


ROW_CHUNK = 64


def scan_pairs(n: int, mode: str = "exhaustive", budget: int | None = None, seed: int = 0,
               normalization: str = "std", workers: int = 1) -> WorstCaseReport:
    """Measure minimum ratios ``cor / rhs`` over monotone pairs.

    ``exhaustive`` visits every ordered pair (n <= 5); ``budget`` caps the
    number of f rows' worth of pairs and flags the report partial.
    ``sampled`` draws ``budget`` independent pairs from the flip chain.
    ``annealed`` delegates to :func:`anneal_search` on the ``main_tal`` ratio.
    Results do not depend on ``workers``.
    """
    _norm_factor(normalization)
    norms = (normalization,) + tuple(x for x in ("std", "paper") if x != normalization)
    start = time.perf_counter()
    if mode == "exhaustive":
        if not 1 <= n <= MAX_EXHAUSTIVE_N:
            raise ValueError(f"exhaustive scan supports 1 <= n <= {MAX_EXHAUSTIVE_N}, got {n}")
        tables = monotone_tables(n)
        total_rows = len(tables)
        rows = total_rows
        partial = False
        if budget is not None and budget < total_rows * total_rows:
            rows = max(1, budget // total_rows)
            partial = True
        chunks = [(n, lo, min(lo + ROW_CHUNK, rows), norms) for lo in range(0, rows, ROW_CHUNK)]
        if workers > 1 and len(chunks) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_scan_rows, chunks))
        else:
            parts = [_scan_rows(c) for c in chunks]
        acc = _ScanAccumulator(norms)
        for part in parts:
            acc.merge(part)
        return _finish(acc, n, mode, normalization, (tables, tables), partial, None,
                       {"budget": budget, "workers_independent": True},
                       time.perf_counter() - start)
    if mode == "sampled":
        if not 1 <= n <= MAX_SCAN_N:
            raise ValueError(f"sampled scan supports 1 <= n <= {MAX_SCAN_N}, got {n}")
        if budget is None or budget < 1:
            raise ValueError("sampled mode needs a positive budget")
        return _scan_sampled(n, budget, seed, norms, normalization, start)
    if mode == "annealed":
        iterations = budget or 20000
        return anneal_search(n, "main_tal", schedule=(0.5, 0.9995, iterations), seed=seed,
                             normalization=normalization)
    raise ValueError(f"unknown mode '{mode}'")


def _scan_sampled(n, budget, seed, norms, normalization, start):
    ss = np.random.SeedSequence(seed)
    children = ss.spawn(budget)
    f_tab, g_tab, a_tab = [], [], []
    for child in children:
        sf, sg, sa = child.spawn(3)
        f_tab.append(random_monotone(n, sf).bits)
        g_tab.append(random_monotone(n, sg).bits)
        a_tab.append(random_antipodal_monotone(n, sa).bits)
    f_tab = np.array(f_tab, dtype=np.uint64)
    g_tab = np.array(g_tab, dtype=np.uint64)
    a_tab = np.array(a_tab, dtype=np.uint64)
    stf, stg, sta = spectra_table(f_tab, n), spectra_table(g_tab, n), spectra_table(a_tab, n)
    idx = np.arange(budget)
    acc = _ScanAccumulator(norms)
    for nm in norms:
        res = _evaluate_block(stf, stg, nm, antipodal=False)
        _offer_block(acc, res, INEQUALITIES, nm, idx, idx)
        acc.undefined[nm] += int(np.count_nonzero(np.isnan(res["rhs"]["tal"])))
        resa = _evaluate_block(stf, sta, nm, antipodal=True)
        _offer_block(acc, resa, ANTIPODAL_INEQUALITIES, nm, idx, idx)
        if nm == norms[0]:
            acc.pairs = budget
            acc.antipodal_pairs = budget
            _harris(acc, res, idx, idx, (f_tab, g_tab), n)
            rem = _block_extremum(res["remark"], maximize=True)
            if rem is not None:
                acc.remark.offer(rem[0], int(rem[1][0]), int(rem[1][0]), maximize=True)
        _chvatal(acc, resa, nm, idx, idx, (f_tab, a_tab), n)
    report = _finish(acc, n, "sampled", normalization, (f_tab, g_tab), False, seed,
                     {"budget": budget}, time.perf_counter() - start)
    # antipodal minima index into the antipodal sample
    for nm in norms:
        for name in ANTIPODAL_INEQUALITIES:
            ext = acc.minima[nm][name]
            if ext.fi >= 0:
                report.minima[nm][name]["g_hex"] = BooleanFunction(n, int(a_tab[ext.gi])).table_hex
    return report


# -- simulated annealing --------------------------------------------------


def _objective_value(sf, sg, objective: str, normalization: str) -> float:
    rep = analyze_spectra(sf, sg, normalization)
    value = rep.ratios.get(objective, math.nan)
    if value is None or math.isnan(value) or math.isinf(value):
        return math.inf
    return value


def anneal_search(n: int, objective: str, schedule=(0.5, 0.9995, 20000), seed: int = 0,
                  normalization: str = "std") -> WorstCaseReport:
    """Simulated annealing over monotone pairs for the lowest ratio.

    ``schedule = (T0, cooling, iterations)``. Moves replace f or g by a
    random single-flip monotone neighbour (antipodal pair swaps for g when
    the objective needs an antipodal g). Deterministic given ``seed``.
    """
    if objective not in OBJECTIVE_ALIASES:
        raise ValueError(f"unknown objective '{objective}'")
    objective = OBJECTIVE_ALIASES[objective]
    antipodal_g = objective in ANTIPODAL_INEQUALITIES
    t0, cooling, iterations = schedule
    start_clock = time.perf_counter()
    rng = np.random.default_rng(seed)
    spectra: dict[int, SpectralSummary] = {}
    neigh: dict[tuple[int, bool], list] = {}

    def spec(h: BooleanFunction):
        if h.bits not in spectra:
            spectra[h.bits] = spectral_summary(h)
        return spectra[h.bits]

    def moves(h: BooleanFunction, anti: bool):
        key = (h.bits, anti)
        if key not in neigh:
            neigh[key] = antipodal_neighbors(h) if anti else monotone_neighbors(h)
        return neigh[key]

    def draw_g(child):
        return random_antipodal_monotone(n, child) if antipodal_g else random_monotone(n, child)

    for _ in range(1000):
        cf, cg = np.random.SeedSequence(int(rng.integers(2**63))).spawn(2)
        f, g = random_monotone(n, cf), draw_g(cg)
        cur = _objective_value(spec(f), spec(g), objective, normalization)
        if math.isfinite(cur):
            break
    else:
        raise RuntimeError("could not find a starting pair with a defined ratio")
    start_ratio = cur
    best = (cur, f, g)
    temp = t0
    for _ in range(int(iterations)):
        move_g = rng.random() < 0.5
        base = g if move_g else f
        options = moves(base, antipodal_g and move_g)
        if options:
            cand = options[int(rng.integers(len(options)))]
            nf, ng = (f, cand) if move_g else (cand, g)
            val = _objective_value(spec(nf), spec(ng), objective, normalization)
            if val <= cur or (math.isfinite(val) and rng.random() < math.exp(-(val - cur) / max(temp, 1e-300))):
                f, g, cur = nf, ng, val
                if cur < best[0] or (cur == best[0] and (f.bits, g.bits) < (best[1].bits, best[2].bits)):
                    best = (cur, f, g)
        temp *= cooling
    value, bf, bg = best
    minima = {normalization: {objective: {"ratio": value, "f_hex": bf.table_hex, "g_hex": bg.table_hex}}}
    return WorstCaseReport(
        n=n, mode="annealed", normalization=normalization, pairs_examined=int(iterations),
        antipodal_pairs_examined=0, minima=minima, maxima={}, harris_violations=[],
        harris_strict_failures=0, chvatal_counterexamples={normalization: []},
        chvatal_counts={normalization: 0}, undefined_counts={normalization: 0}, partial=False,
        seed=seed,
        params={"objective": objective, "schedule": [t0, cooling, int(iterations)],
                "start_ratio": start_ratio, "distinct_functions_visited": len(spectra)},
        elapsed=time.perf_counter() - start_clock,
    )
