"""Command-line entry point.

Every subcommand produces a schema-versioned report whose content depends
only on the parameters and the seed. Wall-clock data, worker counts and
output digests go to a separate ``<out>.manifest.json``.

Exit codes: 0 all checks passed, 1 a check failed (a reproduction bundle is
written), 2 inconclusive (insufficient statistical power), 3 usage error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from importlib import metadata, resources
from pathlib import Path

import jsonschema
import numpy as np

from . import bounds, gaussian_core, level_ineq, monotone_enum, ode_gronwall, process_sim
from .boolean_core import NAMED, BooleanFunction, is_antipodal, is_monotone

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 1, 2, 3
FORMATS = ("json", "csv", "plotdata")


class UsageError(Exception):
    """Bad arguments or malformed input files (exit code 3)."""


@dataclass
class Check:
    name: str
    module: str
    operation: str
    passed: bool
    conclusive: bool = True
    detail: object = None

    def to_json(self) -> dict:
        out = {"name": self.name, "module": self.module, "operation": self.operation,
               "passed": bool(self.passed), "conclusive": bool(self.conclusive)}
        if self.detail is not None:
            out["detail"] = self.detail
        return out


@dataclass
class Outcome:
    """What a subcommand hands to :func:`emit_report`."""

    params: dict
    result: dict
    checks: list[Check] = field(default_factory=list)
    table: tuple[list[str], list[tuple]] | None = None
    series: dict[str, list[tuple[float, float, float]]] = field(default_factory=dict)
    stdout: str | None = None

    @property
    def status(self) -> str:
        if any(c.conclusive and not c.passed for c in self.checks):
            return "fail"
        if any(not c.conclusive for c in self.checks):
            return "inconclusive"
        return "pass"


# -- serialisation ----------------------------------------------------------------


def plain(obj):
    """Recursively convert to JSON-safe values; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else str(x)
    return obj


def dumps(obj) -> str:
    return json.dumps(plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _schema(name: str) -> dict:
    text = resources.files("corrbench").joinpath("schemas", f"{name}.schema.json").read_text()
    return json.loads(text)


def validate_report(doc: dict) -> None:
    jsonschema.validate(doc, _schema("report"))


def validate_manifest(doc: dict) -> None:
    jsonschema.validate(doc, _schema("manifest"))


def build_report(subcommand: str, outcome: Outcome) -> dict:
    doc = plain({
        "schema": "corrbench.report",
        "schema_version": SCHEMA_VERSION,
        "subcommand": subcommand,
        "params": outcome.params,
        "status": outcome.status,
        "checks": [c.to_json() for c in outcome.checks],
        "result": outcome.result,
    })
    validate_report(doc)
    return doc


def render(doc: dict, outcome: Outcome, fmt: str) -> str:
    """Text of a report in ``json``, ``csv`` or ``plotdata`` form."""
    if fmt == "json":
        return dumps(doc)
    if fmt == "csv":
        if outcome.table is None:
            raise UsageError(f"subcommand '{doc['subcommand']}' has no CSV form")
        header, rows = outcome.table
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
        return buf.getvalue()
    if fmt == "plotdata":
        if not outcome.series:
            raise UsageError(f"subcommand '{doc['subcommand']}' has no plot data")
        lines = []
        for name in sorted(outcome.series):
            lines.append(f"# {name}: x y yerr")
            lines.extend(f"{x!r} {y!r} {e!r}" for x, y, e in
                         ((float(a), float(b), float(c)) for a, b, c in outcome.series[name]))
            lines.append("")
        return "\n".join(lines)
    raise UsageError(f"unknown format '{fmt}'")


def _format_for(path: str | None, requested: str | None) -> str:
    if requested:
        return requested
    if path is None:
        return "json"
    suffix = Path(path).suffix.lower()
    return {".csv": "csv", ".dat": "plotdata", ".txt": "plotdata"}.get(suffix, "json")


def _digest(path: Path) -> str:
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def _versions() -> dict:
    out = {"python": sys.version.split()[0], "numpy": np.__version__}
    for pkg in ("corrbench", "scipy", "mpmath", "jsonschema"):
        try:
            out[pkg] = metadata.version(pkg)
        except metadata.PackageNotFoundError:
            out[pkg] = "unknown"
    return out


def emit_report(subcommand: str, outcome: Outcome, out: str | None, fmt: str | None,
                manifest: dict | None = None) -> dict:
    """Write the report (and the manifest next to it) or print it.

    Returns the JSON form of the report.
    """
    doc = build_report(subcommand, outcome)
    fmt = _format_for(out, fmt)
    text = render(doc, outcome, fmt)
    if out is None:
        sys.stdout.write(outcome.stdout if outcome.stdout is not None else text)
        return doc
    path = Path(out)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
        outputs = {path.name: _digest(path)}
        if fmt != "json":
            side = path.with_suffix(path.suffix + ".json")
            side.write_text(dumps(doc))
            outputs[side.name] = _digest(side)
        if manifest is not None:
            manifest = dict(manifest, outputs=outputs)
            validate_manifest(manifest)
            Path(str(path) + ".manifest.json").write_text(dumps(manifest))
    except OSError as exc:
        raise UsageError(f"cannot write '{out}': {exc.strerror}") from exc
    summary = outcome.stdout if outcome.stdout is not None else f"{subcommand}: {doc['status']}\n"
    sys.stdout.write(summary)
    return doc


def write_repro_bundle(subcommand: str, doc: dict, argv: list[str], seed, out: str | None) -> Path:
    """Directory holding the failing report and the command that reproduces it."""
    target = Path(str(out) + ".repro") if out else Path(f"corrbench-repro-{subcommand}")
    target.mkdir(parents=True, exist_ok=True)
    (target / "report.json").write_text(dumps(doc))
    failing = [c for c in doc["checks"] if c["conclusive"] and not c["passed"]]
    (target / "rerun.json").write_text(dumps({"argv": argv, "seed": seed, "failing_checks": failing}))
    return target


# -- input loading ---------------------------------------------------------------


def _read_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read {what} '{path}': {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} '{path}' is not valid JSON: {exc.msg} (line {exc.lineno})") from exc
    if not isinstance(obj, dict):
        raise UsageError(f"{what} '{path}' must contain a JSON object")
    return obj


def load_boolean(spec: str) -> BooleanFunction:
    """A function file path or one of the built-in names (``and2``, ``maj3``, ...)."""
    if os.path.exists(spec):
        obj = _read_json(spec, "function file")
        try:
            return BooleanFunction.from_json(obj)
        except ValueError as exc:
            raise UsageError(f"{spec}: {exc}") from exc
    stem = Path(spec).stem.lower()
    if stem in NAMED:
        return NAMED[stem]()
    raise UsageError(f"no function file or built-in function named '{spec}' "
                     f"(built-ins: {', '.join(sorted(NAMED))})")


def lift(f: BooleanFunction, n: int) -> BooleanFunction:
    """``f`` as a function of ``n >= f.n`` coordinates, ignoring the extra ones."""
    if n == f.n:
        return f
    idx = np.arange(1 << n) & ((1 << f.n) - 1)
    return BooleanFunction.from_values(np.asarray(f.values)[idx])


def load_pair(f_spec: str, g_spec: str) -> tuple[BooleanFunction, BooleanFunction]:
    """Load two functions; built-in names are lifted to the other's dimension."""
    f, g = load_boolean(f_spec), load_boolean(g_spec)
    if f.n != g.n:
        n = max(f.n, g.n)
        smaller_is_builtin = not os.path.exists(f_spec if f.n < n else g_spec)
        if not smaller_is_builtin:
            raise UsageError(f"dimension mismatch: f has n={f.n}, g has n={g.n}")
        f, g = lift(f, n), lift(g, n)
    return f, g


def load_functional(spec: str):
    """``sign:<function>``, ``sign01:<function>``, or a functional spec file."""
    kind, sep, rest = spec.partition(":")
    if sep and kind in ("sign", "sign01"):
        try:
            return gaussian_core.SignComposed(load_boolean(rest), centered=kind == "sign")
        except ValueError as exc:
            raise UsageError(f"{spec}: {exc}") from exc
    if os.path.exists(spec):
        obj = _read_json(spec, "functional file")
        try:
            if "variant" in obj:
                return gaussian_core.functional_from_json(obj)
            return gaussian_core.SignComposed(BooleanFunction.from_json(obj))
        except (ValueError, TypeError, KeyError) as exc:
            raise UsageError(f"{spec}: {exc}") from exc
    stem = Path(spec).stem.lower()
    if stem in NAMED:
        return gaussian_core.SignComposed(NAMED[stem]())
    raise UsageError(f"cannot interpret functional '{spec}'")


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("CORRBENCH_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise UsageError(f"CORRBENCH_SEED must be an integer, got '{env}'") from exc


# -- subcommands --------------------------------------------------------------------


def cmd_analyze(args) -> Outcome:
    f, g = load_pair(args.f, args.g)
    rep = bounds.analyze_pair(f, g, args.normalization)
    result = rep.to_json()
    result["f_hex"], result["g_hex"] = f.table_hex, g.table_hex
    if "chvatal" in rep.ratios:
        result["chvatal_ratio"] = rep.ratios["chvatal"]
    both = is_monotone(f) and is_monotone(g)
    checks = [Check("harris", "bounds", "analyze_pair", rep.cor >= 0 or not both,
                    detail=None if both else "not asserted: input not monotone")]
    if both and is_antipodal(g) and "chvatal" in rep.ratios:
        ratio = rep.ratios["chvatal"]
        checks.append(Check("chvatal", "bounds", "chvatal_ratio", not (ratio < 1), detail=ratio))
    params = {"f": f.to_json(), "g": g.to_json(), "normalization": args.normalization}
    return Outcome(params, result, checks)


def cmd_enumerate(args) -> Outcome:
    n = args.n
    if not 0 <= n <= monotone_enum.MAX_ENUM_N:
        raise UsageError(f"--n must lie in [0, {monotone_enum.MAX_ENUM_N}] for enumeration")
    tables = (monotone_enum.antipodal_monotone_tables(n) if args.antipodal
              else monotone_enum.monotone_tables(n))
    count = len(tables)
    checks = []
    if not args.antipodal:
        checks.append(Check("dedekind", "monotone_enum", "enumerate_monotone",
                            count == monotone_enum.DEDEKIND[n], detail=monotone_enum.DEDEKIND[n]))
    params = {"n": n, "antipodal": args.antipodal}
    if args.count_only:
        return Outcome(params, {"count": count}, checks, stdout=f"{count}\n")
    lines = "".join(BooleanFunction(n, int(t)).dumps() + "\n" for t in tables)
    if args.stream is None:
        return Outcome(params, {"count": count}, checks, stdout=lines)
    try:
        Path(args.stream).parent.mkdir(parents=True, exist_ok=True)
        Path(args.stream).write_text(lines)
    except OSError as exc:
        raise UsageError(f"cannot write '{args.stream}': {exc.strerror}") from exc
    return Outcome(params, {"count": count}, checks)


def cmd_scan(args) -> Outcome:
    if args.mode == "exhaustive" and not 1 <= args.n <= bounds.MAX_EXHAUSTIVE_N:
        raise UsageError(f"exhaustive scans support 1 <= n <= {bounds.MAX_EXHAUSTIVE_N}; got --n {args.n}")
    if args.dump_pairs and args.n > 3:
        raise UsageError("--dump-pairs is limited to n <= 3")
    try:
        rep = bounds.scan_pairs(args.n, args.mode, args.budget, args.seed, args.normalization, args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = rep.to_json()
    checks = [
        Check("harris", "bounds", "scan_pairs", not rep.harris_violations,
              detail=len(rep.harris_violations)),
        Check("chvatal", "bounds", "scan_pairs", rep.chvatal_counts.get(args.normalization, 0) == 0,
              detail=rep.chvatal_counts.get(args.normalization, 0)),
    ]
    if args.mode != "annealed":
        for name in bounds.INEQUALITIES:
            ratio = rep.minima[args.normalization][name]["ratio"]
            checks.append(Check(f"min_ratio_positive:{name}", "bounds", "scan_pairs",
                                ratio is None or ratio > 0, detail=ratio))
    params = {"n": args.n, "mode": args.mode, "budget": args.budget,
              "normalization": args.normalization, "seed": args.seed}
    if args.dump_pairs:
        _dump_pairs(args.n, args.normalization, args.dump_pairs)
    rows = [(norm, name, rec["ratio"], rec["f_hex"], rec["g_hex"])
            for norm, minima in sorted(result["minima_by_normalization"].items())
            for name, rec in minima.items()]
    table = (["normalization", "inequality", "min_ratio", "f_hex", "g_hex"], rows)
    return Outcome(params, result, checks, table=table)


def _dump_pairs(n: int, normalization: str, path: str) -> None:
    header = ["f_hex", "g_hex", "cor"] + [f"rhs_{k}" for k in bounds.INEQUALITIES] + \
             [f"ratio_{k}" for k in bounds.INEQUALITIES]
    funcs = list(monotone_enum.enumerate_monotone(n))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for f in funcs:
        for g in funcs:
            rep = bounds.analyze_pair(f, g, normalization)
            writer.writerow([f.table_hex, g.table_hex, str(rep.cor)]
                            + [repr(float(rep.rhs[k])) for k in bounds.INEQUALITIES]
                            + [repr(float(rep.ratios.get(k, math.nan))) for k in bounds.INEQUALITIES])
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(buf.getvalue())
    except OSError as exc:
        raise UsageError(f"cannot write '{path}': {exc.strerror}") from exc


def cmd_search(args) -> Outcome:
    if args.objective not in bounds.OBJECTIVE_ALIASES:
        raise UsageError(f"unknown objective '{args.objective}' "
                         f"(choose from {', '.join(sorted(bounds.OBJECTIVE_ALIASES))})")
    if not 1 <= args.n <= monotone_enum.MAX_ENUM_N:
        raise UsageError(f"--n must lie in [1, {monotone_enum.MAX_ENUM_N}]")
    rep = bounds.anneal_search(args.n, args.objective, (args.t0, args.cooling, args.iterations),
                               args.seed, args.normalization)
    result = rep.to_json()
    best = rep.min_ratio(bounds.OBJECTIVE_ALIASES[args.objective])
    start = rep.params["start_ratio"]
    checks = [Check("not_worse_than_start", "bounds", "anneal_search", best <= start,
                    detail={"best": best, "start": start})]
    params = {"n": args.n, "objective": args.objective, "t0": args.t0, "cooling": args.cooling,
              "iterations": args.iterations, "normalization": args.normalization, "seed": args.seed}
    return Outcome(params, result, checks)


def _moment_rows(F, order: int, tol: float, checks: list[Check]) -> dict:
    out = {}
    compare = F.n <= 3
    for k in range(gaussian_core.MAX_K + 1):
        closed = np.asarray(gaussian_core.moment(F, k, "closed"))
        out[str(k)] = closed
        if compare:
            quad = np.asarray(gaussian_core.moment(F, k, "quadrature", order))
            err = float(np.max(np.abs(closed - quad)))
            checks.append(Check(f"closed_vs_quadrature:k={k}", "gaussian_core", "moment",
                                err <= tol, detail=err))
    return out


def cmd_gaussian(args) -> Outcome:
    tol = args.tol if args.tol is not None else 1e-8
    checks: list[Check] = []
    if args.bridge:
        f, g = load_pair(args.f, args.g or args.f)
        if f.n > gaussian_core.MAX_QUAD_N:
            raise UsageError(f"bridge supports n <= {gaussian_core.MAX_QUAD_N}")
        rep = gaussian_core.bridge(f, g, order=max(args.quad_order, 4) if args.quad_order else 4)
        for name, dev in rep.max_deviation().items():
            checks.append(Check(f"bridge:{name}", "gaussian_core", "bridge", dev <= tol, detail=dev))
        params = {"bridge": True, "f": f.to_json(), "g": g.to_json(), "tol": tol}
        return Outcome(params, rep.to_json(), checks)
    F = load_functional(args.f)
    if args.t:
        F = gaussian_core.ou_apply(F, args.t)
    order = args.quad_order or gaussian_core.DEFAULT_ORDER
    result = {"functional": F.to_json(), "moments": _moment_rows(F, order, tol, checks),
              "mean": F.mean(), "variance": F.variance()}
    checks.append(Check("range", "gaussian_core", "check_range",
                        gaussian_core.check_range(F, seed=args.seed)))
    params = {"f": F.to_json(), "quad_order": order, "tol": tol, "seed": args.seed}
    if args.g:
        G = load_functional(args.g)
        if args.t:
            G = gaussian_core.ou_apply(G, args.t)
        if G.n != F.n:
            raise UsageError(f"dimension mismatch: f has n={F.n}, g has n={G.n}")
        try:
            rep = gaussian_core.gaussian_bounds(F, G, order)
        except NotImplementedError as exc:
            raise UsageError(str(exc)) from exc
        result["bounds"] = rep.to_json()
        params["g"] = G.to_json()
        if F.monotone and G.monotone:
            checks.append(Check("positive_correlation", "gaussian_core", "gaussian_bounds",
                                rep.cor >= -tol, detail=rep.cor))
    return Outcome(params, result, checks)


def cmd_simulate(args) -> Outcome:
    F, G = load_functional(args.f), load_functional(args.g or args.f)
    try:
        grid = process_sim.parse_grid(args.grid)
    except ValueError as exc:
        raise UsageError(f"--grid: {exc}") from exc
    try:
        stats = process_sim.simulate_statistics(F, G, grid, args.paths, args.seed, ks=(0, 1, 2),
                                                workers=args.workers)
    except (ValueError, NotImplementedError) as exc:
        raise UsageError(str(exc)) from exc
    curves = process_sim.curves_from_statistics(stats)
    exact = float(gaussian_core.moment(F, 0))
    chain = process_sim.chain_from_statistics(stats, exact_mean_f=exact)
    checks = []
    for k, points in chain.first.items():
        for p in points:
            checks.append(Check(f"derivative_chain:k={k}:t={p.t:.6g}", "process_sim",
                                "check_derivative_chain", p.passed, p.conclusive,
                                detail={"lhs": p.lhs, "rhs": p.rhs, "se": p.se}))
    if chain.second:
        # supplementary: second differences are noisy, so only resolved points count
        resolved = [p for p in chain.second if p.conclusive]
        checks.append(Check("second_order", "process_sim", "check_derivative_chain",
                            all(p.passed for p in resolved), bool(resolved),
                            detail={"points": len(chain.second), "resolved": len(resolved)}))
    checks.append(Check("martingale", "process_sim", "check_derivative_chain",
                        all(p.passed for p in chain.martingale)))
    result = {"curves": {str(k): c.to_json() for k, c in curves.items()}, "chain": chain.to_json()}
    series = {f"p{k}": list(zip(c.grid, c.estimates, c.se)) for k, c in curves.items()}
    if F.monotone and G.monotone:
        cov = process_sim.cov_from_statistics(stats, float(gaussian_core.gaussian_correlation(F, G)))
        result["cov_curve"] = cov.to_json()
        checks += [
            Check("cov_nondecreasing", "process_sim", "cov_curve", cov.monotone_ok),
            Check("cov_below_cor", "process_sim", "cov_curve", cov.bounded_ok),
            Check("cov_integral_identity", "process_sim", "cov_curve", cov.identity_ok),
        ]
        series["cov"] = list(zip(cov.grid, cov.direct, cov.direct_se))
    rows = [row for k in sorted(curves) for row in curves[k].rows()]
    params = {"f": F.to_json(), "g": G.to_json(), "grid": args.grid, "paths": args.paths,
              "seed": args.seed}
    return Outcome(params, result, checks, table=(["t", "k", "estimate", "se"], rows), series=series)


def cmd_levelcheck(args) -> Outcome:
    if args.suite != "level13" and args.suite not in level_ineq.SUITES:
        raise UsageError(f"unknown suite '{args.suite}'")
    if args.cases < 0:
        raise UsageError("--cases must be nonnegative")
    rep = level_ineq.run_suite(args.suite, args.cases, args.seed, args.workers)
    checks = [Check(f"{args.suite}_violations", "level_ineq", "run_suite", rep.passed,
                    detail=len(rep.violations))]
    params = {"suite": args.suite, "cases": args.cases, "seed": args.seed}
    return Outcome(params, rep.to_json(), checks)


def cmd_gronwall(args) -> Outcome:
    if args.sweep == "default":
        tuples = ode_gronwall.sweep_tuples(args.count, args.seed)
    elif args.sweep == "grid":
        tuples = ode_gronwall.sweep_tuples(0, args.seed)
    else:
        raise UsageError(f"unknown sweep '{args.sweep}'")
    if not 0 < args.dt <= 1e-2:
        raise UsageError("--dt must lie in (0, 0.01]")
    rep = ode_gronwall.run_sweep(tuples, args.dt, args.perturbations, args.seed)
    checks = [
        Check("conclusion", "ode_gronwall", "verify_conclusion", not rep.violations,
              detail=len(rep.violations)),
        Check("rk4_order", "ode_gronwall", "integrate_extremal",
              12 <= rep.richardson_ratio <= 20, detail=rep.richardson_ratio),
        Check("extremal_hypothesis_residual", "ode_gronwall", "verify_conclusion",
              rep.extremal_hypothesis_margin() <= ode_gronwall.HYP_TOL,
              detail=rep.extremal_hypothesis_margin()),
    ]
    header = ["provenance", "K", "p0", "dp0", "omega", "horizon", "worst_margin", "crossing_time",
              "hypothesis_ok", "asserted", "violated"]
    params = {"sweep": args.sweep, "count": args.count, "dt": args.dt,
              "perturbations": args.perturbations, "seed": args.seed}
    return Outcome(params, rep.to_json(), checks, table=(header, list(rep.rows())))


def cmd_report(args) -> Outcome:
    entries, checks = [], []
    series: dict = {}
    for path in args.inputs:
        doc = _read_json(path, "report")
        try:
            validate_report(doc)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise UsageError(f"{path}: field '{where}': {exc.message}") from exc
        name = Path(path).name
        counts = {"pass": 0, "fail": 0, "inconclusive": 0}
        for c in doc["checks"]:
            counts["fail" if c["conclusive"] and not c["passed"] else
                   "inconclusive" if not c["conclusive"] else "pass"] += 1
        entries.append({"input": name, "subcommand": doc["subcommand"], "status": doc["status"],
                        "checks": counts})
        checks.append(Check(f"input:{name}", "cli_report", "dispatch", doc["status"] != "fail",
                            doc["status"] != "inconclusive"))
        if doc["subcommand"] == "simulate":
            for k, c in doc["result"]["curves"].items():
                series[f"{name}:p{k}"] = list(zip(c["grid"], c["estimate"], c["se"]))
    rows = [(e["input"], e["subcommand"], e["status"], e["checks"]["pass"], e["checks"]["fail"],
             e["checks"]["inconclusive"]) for e in entries]
    table = (["input", "subcommand", "status", "pass", "fail", "inconclusive"], rows)
    return Outcome({"inputs": [Path(p).name for p in args.inputs]}, {"inputs": entries}, checks,
                   table=table, series=series)


COMMANDS = {
    "analyze": cmd_analyze,
    "enumerate": cmd_enumerate,
    "scan": cmd_scan,
    "search": cmd_search,
    "gaussian": cmd_gaussian,
    "simulate": cmd_simulate,
    "levelcheck": cmd_levelcheck,
    "gronwall": cmd_gronwall,
    "report": cmd_report,
}


# -- argument parsing ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None,
                        help="master seed (falls back to CORRBENCH_SEED, then 0)")
    common.add_argument("--workers", type=int, default=1, help="worker processes; results do not depend on it")
    common.add_argument("--out", default=None, help="output path; the manifest goes to <out>.manifest.json")
    common.add_argument("--format", choices=FORMATS, default=None,
                        help="report format (default: from the --out suffix, else json)")
    norm = _Parser(add_help=False)
    norm.add_argument("--normalization", choices=("std", "paper"), default="std",
                      help="influence scale: P[pivotal] (std) or twice that (paper)")

    parser = _Parser(prog="corrbench", description="Correlation-inequality workbench.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("analyze", parents=[common, norm], help="bounds for one pair of Boolean functions")
    p.add_argument("--f", required=True, help="function file or built-in name (maj3, and2, d1, ...)")
    p.add_argument("--g", required=True, help="second function, same forms as --f")

    p = sub.add_parser("enumerate", parents=[common], help="list or count monotone functions")
    p.add_argument("--n", type=int, required=True, help="number of variables")
    p.add_argument("--count-only", action="store_true", help="print only the number of functions")
    p.add_argument("--antipodal", action="store_true", help="restrict to antipodal monotone functions")
    p.add_argument("--stream", default=None, metavar="JSONL",
                   help="write one function file object per line here instead of stdout")

    p = sub.add_parser("scan", parents=[common, norm], help="minimum ratios over monotone pairs")
    p.add_argument("--n", type=int, required=True, help="number of variables")
    p.add_argument("--mode", choices=("exhaustive", "sampled", "annealed"), default="exhaustive")
    p.add_argument("--budget", type=int, default=None, help="pair budget for sampled or annealed modes")
    p.add_argument("--dump-pairs", default=None, metavar="CSV", help="also write every examined pair here")

    p = sub.add_parser("search", parents=[common, norm], help="simulated annealing for a low ratio")
    p.add_argument("--n", type=int, required=True, help="number of variables")
    p.add_argument("--objective", default="main_tal", help="ratio to minimise (tal, kms, main_tal, main_coord)")
    p.add_argument("--iterations", type=int, default=20000)
    p.add_argument("--t0", type=float, default=0.5, help="initial temperature")
    p.add_argument("--cooling", type=float, default=0.9995, help="geometric cooling factor per step")

    p = sub.add_parser("gaussian", parents=[common], help="Hermite moments, bounds and the Boolean bridge")
    p.add_argument("--f", required=True, help="functional file, sign:<function> or sign01:<function>")
    p.add_argument("--g", default=None, help="second functional (default: --f)")
    p.add_argument("--t", type=float, default=0.0, help="apply the OU semigroup for this time first")
    p.add_argument("--quad-order", type=int, default=None, help="Gauss-Hermite nodes per axis")
    p.add_argument("--tol", type=float, default=None, help="tolerance for the closed-form vs quadrature checks")
    p.add_argument("--bridge", action="store_true", help="treat --f/--g as Boolean functions")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo moment curves and the derivative chain")
    p.add_argument("--f", required=True, help="functional file, sign:<function> or sign01:<function>")
    p.add_argument("--g", default=None, help="second functional (default: --f)")
    p.add_argument("--grid", default="0:1:0.05", help="start:stop:step or a comma-separated list of times")
    p.add_argument("--paths", type=int, default=100_000)

    p = sub.add_parser("levelcheck", parents=[common], help="randomized level-inequality suites")
    p.add_argument("--suite", required=True, choices=("lvl21", "transport", "geom", "level13"))
    p.add_argument("--cases", type=int, default=1000, help="random cases (ignored by level13)")

    p = sub.add_parser("gronwall", parents=[common], help="extremal ODE sweep for the Gronwall-type comparison")
    p.add_argument("--sweep", default="default", choices=("default", "grid"),
                   help="grid: the 48 fixed tuples only; default: grid plus random tuples")
    p.add_argument("--count", type=int, default=1000, help="total tuples for the default sweep")
    p.add_argument("--dt", type=float, default=1e-4)
    p.add_argument("--perturbations", type=int, default=1000, help="forced (compliant) perturbed runs")

    p = sub.add_parser("report", parents=[common], help="summarise or convert existing reports")
    p.add_argument("inputs", nargs="+", help="JSON reports written by other subcommands")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    started = datetime.now(timezone.utc).isoformat()
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (try --help)")
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        args.seed = resolve_seed(args.seed)
        outcome = COMMANDS[args.command](args)
        manifest = {
            "schema": "corrbench.manifest",
            "schema_version": SCHEMA_VERSION,
            "subcommand": args.command,
            "params": plain(outcome.params),
            "seed": args.seed,
            "workers": args.workers,
            "argv": argv,
            "versions": _versions(),
            "started": started,
            "finished": datetime.now(timezone.utc).isoformat(),
            "counts": {
                "pass": sum(bool(c.conclusive and c.passed) for c in outcome.checks),
                "fail": sum(bool(c.conclusive and not c.passed) for c in outcome.checks),
                "inconclusive": sum(not c.conclusive for c in outcome.checks),
            },
        }
        doc = emit_report(args.command, outcome, args.out, args.format, manifest)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    status = doc["status"]
    if status == "fail":
        bundle = write_repro_bundle(args.command, doc, argv, args.seed, args.out)
        print(f"assertion failure; reproduction bundle in {bundle}", file=sys.stderr)
        return EXIT_FAIL
    if status == "inconclusive":
        return EXIT_INCONCLUSIVE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
