"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The summary lines are written by the ``criterion`` hook in ``conftest.py``;
each test also prints its own measured numbers so a failing run shows why.
"""

import itertools
import json
import math
import os
import time
from pathlib import Path

import numpy as np
import pytest

from corrbench import cli
from corrbench.boolean_core import and_, correlation, dictator, spectral_summary
from corrbench.bounds import analyze_pair, scan_pairs
from corrbench.gaussian_core import SignComposed, bridge, gaussian_correlation
from corrbench.level_ineq import GaussianMixture, check_transport_1d, run_suite
from corrbench.monotone_enum import enumerate_antipodal_monotone, enumerate_monotone, monotone_tables
from corrbench.ode_gronwall import run_sweep, sweep_tuples
from corrbench.process_sim import (
    Z_SCORE,
    chain_from_statistics,
    cov_from_statistics,
    parse_grid,
    simulate_statistics,
)

FIXTURES = Path(__file__).parent / "fixtures"
WORKERS = os.cpu_count() or 1
FOUR = ("tal", "kms", "main_tal", "main_coord")


def say(line):
    print(f"  {line}")


@pytest.mark.criterion(1, "Harris positivity over all 28,224 monotone pairs at n=4, exact, < 5 s")
def test_c01_harris():
    start = time.perf_counter()
    tables = monotone_tables(4)
    values = np.array([[(int(t) >> i) & 1 for i in range(16)] for t in tables], dtype=np.int64)
    # exact: 256 Cor = 16 <f g> - |f| |g| over integer tables
    both = values @ values.T
    sizes = values.sum(axis=1)
    numer = 16 * both - np.outer(sizes, sizes)
    rep = scan_pairs(4)
    elapsed = time.perf_counter() - start
    say(f"pairs={rep.pairs_examined} negative={int((numer < 0).sum())} "
        f"scan_violations={len(rep.harris_violations)} time={elapsed:.2f}s")
    assert len(tables) ** 2 == rep.pairs_examined == 28_224
    assert (numer < 0).sum() == 0 and not rep.harris_violations
    assert elapsed < 5


@pytest.mark.criterion(2, "antipodal monotone f, n<=5: V(f)=0 and even-degree coefficients of 2f-1 vanish, exact, < 30 s")
def test_c02_antipodal_spectra():
    start = time.perf_counter()
    checked = 0
    for n in range(1, 6):
        for f in enumerate_antipodal_monotone(n):
            s = spectral_summary(f)
            assert all(v == 0 for row in s.V for v in row), f.table_hex
            # coefficients of the +-1 encoding 2f - 1, scaled by 2**n
            signed = 2 * s.fourier_numer.astype(object)
            signed[0] -= 1 << n
            even = [int(c) for mask, c in enumerate(signed) if bin(mask).count("1") % 2 == 0]
            assert not any(even), f.table_hex
            checked += 1
    elapsed = time.perf_counter() - start
    say(f"functions={checked} time={elapsed:.2f}s")
    assert checked == 1 + 2 + 4 + 12 + 81
    assert elapsed < 30


@pytest.mark.criterion(3, "Dedekind counts 6, 20, 168, 7581 for n=2..5, < 60 s")
def test_c03_dedekind():
    start = time.perf_counter()
    counts = [sum(1 for _ in enumerate_monotone(n)) for n in range(2, 6)]
    elapsed = time.perf_counter() - start
    say(f"counts={counts} time={elapsed:.2f}s")
    assert counts == [6, 20, 168, 7581]
    assert elapsed < 60


@pytest.mark.criterion(4, "Chvatal-type bound: no counterexample for n<=4 (std), AND2 vs dictator ratio exactly 1")
def test_c04_chvatal():
    found = {}
    for n in range(1, 5):
        rep = scan_pairs(n)
        found[n] = rep.chvatal_counts["std"]
        if found[n]:
            # a counterexample would be a first-class finding; show it in full
            print(json.dumps(rep.to_json()["counterexamples"], indent=2))
    witness = analyze_pair(and_(2), dictator(2, 0))
    ratio = witness.ratios["chvatal"]
    say(f"counterexamples={found} witness_ratio={ratio!r} cor={witness.cor}")
    assert all(v == 0 for v in found.values())
    assert ratio == 1.0


@pytest.mark.slow
@pytest.mark.criterion(5, "n=4 minima match fixtures to 1e-12 and are positive; n=5 exhaustive minima <= n=4")
def test_c05_empirical_constants():
    expected = json.loads((FIXTURES / "n4_std_minima.json").read_text())["minima"]
    n4 = scan_pairs(4).minima["std"]
    for name in FOUR:
        say(f"n=4 {name}: {n4[name]['ratio']!r} ({n4[name]['f_hex']}, {n4[name]['g_hex']})")
        assert n4[name]["ratio"] > 0
        assert abs(n4[name]["ratio"] - expected[name]["ratio"]) <= 1e-12
    start = time.perf_counter()
    rep5 = scan_pairs(5, workers=WORKERS)
    elapsed = time.perf_counter() - start
    n5 = rep5.minima["std"]
    say(f"n=5 pairs={rep5.pairs_examined} workers={WORKERS} time={elapsed:.1f}s")
    for name in FOUR:
        say(f"n=5 {name}: {n5[name]['ratio']!r}")
        assert 0 < n5[name]["ratio"] <= n4[name]["ratio"] + 1e-15
    assert rep5.pairs_examined == 7581 ** 2 and not rep5.partial
    assert not rep5.harris_violations and rep5.chvatal_counts["std"] == 0
    assert elapsed < 600


@pytest.mark.criterion(6, "bridge identities for all monotone f, g with n<=3 at 1e-8, one constant per identity")
def test_c06_bridge():
    worst = {"cor": 0.0, "m1": 0.0, "m2": 0.0, "m2_diag": 0.0}
    pairs = 0
    for n in range(1, 4):
        funcs = list(enumerate_monotone(n))
        for f, g in itertools.product(funcs, repeat=2):
            for key, dev in bridge(f, g).max_deviation().items():
                worst[key] = max(worst[key], dev)
            pairs += 1
    say(f"pairs={pairs} worst deviations={worst}")
    assert max(worst.values()) < 1e-8
    # the pinned constants reproduce the one-dimensional examples
    d1 = SignComposed(dictator(1))
    assert correlation(dictator(1), dictator(1)) == 0.25 * gaussian_correlation(d1, d1)


@pytest.mark.criterion(7, "process suite for sign(x_1), 1e5 paths, step 0.05: chain, martingale, covariance curve, < 5 min")
def test_c07_process():
    start = time.perf_counter()
    F = SignComposed(dictator(1))
    grid = parse_grid("0:1:0.05")
    stats = simulate_statistics(F, F, grid, 100_000, seed=7, workers=WORKERS)
    chain = chain_from_statistics(stats, exact_mean_f=0.0)
    cov = cov_from_statistics(stats, 1.0)
    elapsed = time.perf_counter() - start
    worst = {k: max(abs(p.z) for p in pts) for k, pts in chain.first.items()}
    say(f"max |z| first order={worst} martingale max |z|="
        f"{max(abs(p.z) for p in chain.martingale):.2f} time={elapsed:.1f}s")
    say(f"cov nondecreasing={cov.monotone_ok} bounded={cov.bounded_ok} integral={cov.identity_ok}")
    for k in (0, 1):
        assert len(chain.first[k]) == grid.size - 2
        assert all(p.passed for p in chain.first[k])
    assert all(p.passed for p in chain.martingale)
    assert cov.monotone_ok and cov.bounded_ok and cov.identity_ok
    assert Z_SCORE == 3.0
    assert elapsed < 300


@pytest.mark.slow
@pytest.mark.criterion(8, "level suites 1e4 + 1e4 + 1e3 cases and the half-space grid: zero violations; mean shift W2^2 = 2KL to 1e-8; < 10 min")
def test_c08_level():
    start = time.perf_counter()
    sizes = {"lvl21": 10_000, "transport": 10_000, "geom": 1_000, "level13": 0}
    reports = {name: run_suite(name, cases, seed=3, workers=WORKERS) for name, cases in sizes.items()}
    elapsed = time.perf_counter() - start
    for name, rep in reports.items():
        say(f"{name}: cases={rep.cases} violations={len(rep.violations)} "
            f"worst relative margin={rep.worst_margin['relative_margin']:.3g} probes={rep.probes}")
    shift = check_transport_1d(GaussianMixture.gaussian([1.3], [[1.0]]))
    gap = abs(shift.extra["w2_sq"] - shift.extra["two_kl"])
    say(f"mean shift gap={gap:.2e} time={elapsed:.1f}s")
    assert all(not rep.violations for rep in reports.values())
    assert reports["lvl21"].cases == 10_000 and reports["transport"].cases == 10_000
    assert reports["geom"].cases == 1_000 and reports["level13"].cases > 0
    assert gap < 1e-8
    assert elapsed < 600


@pytest.mark.criterion(9, "extremal ODE sweep (1000 tuples, dt 1e-4) + 1000 compliant perturbations: no violations, RK4 ratio in [12, 20], < 5 min")
def test_c09_gronwall():
    start = time.perf_counter()
    rep = run_sweep(sweep_tuples(1000, seed=0), dt=1e-4, perturbations=1000, seed=0)
    elapsed = time.perf_counter() - start
    perturbed = [r for r in rep.reports if r.provenance == "perturbed"]
    say(f"reports={len(rep.reports)} asserted={rep.asserted} rejected={rep.rejected} "
        f"violations={len(rep.violations)} richardson={rep.richardson_ratio:.3f} "
        f"min crossing/horizon={rep.min_horizon_ratio():.3f} time={elapsed:.1f}s")
    assert len(rep.reports) - len(perturbed) == 1000 and len(perturbed) == 1000
    assert all(r.hypothesis_ok for r in perturbed) and rep.rejected == 0
    assert rep.asserted == len(rep.reports)
    assert not rep.violations
    assert 12 <= rep.richardson_ratio <= 20
    assert elapsed < 300


DETERMINISM_RUNS = [
    ["scan", "--n", "4"],
    ["scan", "--n", "6", "--mode", "sampled", "--budget", "3000"],
    ["levelcheck", "--suite", "lvl21", "--cases", "600"],
    ["levelcheck", "--suite", "transport", "--cases", "300"],
    ["simulate", "--f", "sign:and2", "--paths", "30000"],
    ["gronwall", "--sweep", "grid", "--perturbations", "50"],
]


@pytest.mark.criterion(10, "determinism: identical parameters and seed give byte-identical reports for 1 and 2 workers")
def test_c10_determinism(tmp_path, capsys):
    for i, argv in enumerate(DETERMINISM_RUNS):
        outs = []
        for workers in (1, 2):
            out = tmp_path / f"run{i}-w{workers}.json"
            code = cli.main(argv + ["--seed", "11", "--workers", str(workers), "--out", str(out)])
            assert code in (0, 2), argv
            outs.append(out.read_bytes())
        capsys.readouterr()
        say(f"{' '.join(argv)}: {len(outs[0])} bytes, identical={outs[0] == outs[1]}")
        assert outs[0] == outs[1], argv
