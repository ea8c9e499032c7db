import csv
import json
import subprocess
import sys

import pytest

from corrbench import cli
from corrbench.boolean_core import and_, xor


def run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read(path):
    return json.loads(path.read_text())


class TestAnalyze:
    def test_example(self, tmp_path, capsys):
        out = tmp_path / "a.json"
        code, stdout, _ = run(capsys, "analyze", "--f", "and2", "--g", "d1", "--out", str(out))
        assert code == 0 and stdout == "analyze: pass\n"
        doc = read(out)
        cli.validate_report(doc)
        assert doc["result"]["cor"] == "1/8"
        assert doc["result"]["chvatal_ratio"] == 1.0
        manifest = read(tmp_path / "a.json.manifest.json")
        cli.validate_manifest(manifest)
        assert set(manifest["outputs"]) == {"a.json"}
        assert "workers" not in doc["params"]

    def test_function_file(self, tmp_path, capsys):
        path = tmp_path / "f.json"
        path.write_text(and_(2).dumps())
        code, stdout, _ = run(capsys, "analyze", "--f", str(path), "--g", "d1")
        assert code == 0
        assert json.loads(stdout)["result"]["g_hex"] == "a"
        code, _, err = run(capsys, "analyze", "--f", str(path), "--g", "maj3")
        assert code == 3 and "dimension mismatch" in err

    def test_non_monotone_not_asserted(self, tmp_path, capsys):
        path = tmp_path / "x.json"
        path.write_text(xor(2).dumps())
        code, stdout, _ = run(capsys, "analyze", "--f", str(path), "--g", "and2")
        assert code == 0
        assert "not asserted" in stdout


class TestUsageErrors:
    @pytest.mark.parametrize("argv", [
        [],
        ["nope"],
        ["scan", "--n", "9"],
        ["enumerate", "--n", "8"],
        ["analyze", "--f", "and2"],
        ["analyze", "--f", "no-such-thing", "--g", "and2"],
        ["simulate", "--f", "sign:and2", "--grid", "0:1:0.3", "--paths", "10"],
        ["gronwall", "--workers", "0"],
    ])
    def test_exit_3(self, capsys, argv):
        code, _, err = run(capsys, *argv)
        assert code == 3 and err.startswith("error:")

    @pytest.mark.parametrize("obj, field", [
        ({"n": 2}, "table_hex"),
        ({"n": 2, "table_hex": "zz"}, "table_hex"),
        ({"table_hex": "8"}, "n"),
    ])
    def test_malformed_function_names_field(self, tmp_path, capsys, obj, field):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps(obj))
        code, _, err = run(capsys, "analyze", "--f", str(path), "--g", "and2")
        assert code == 3 and field in err

    def test_invalid_json(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{")
        code, _, err = run(capsys, "gaussian", "--f", str(path))
        assert code == 3 and "not valid JSON" in err

    def test_report_schema_error_names_field(self, tmp_path, capsys):
        good = tmp_path / "a.json"
        run(capsys, "analyze", "--f", "and2", "--g", "d1", "--out", str(good))
        doc = read(good)
        doc["status"] = "maybe"
        bad = tmp_path / "b.json"
        bad.write_text(json.dumps(doc))
        code, _, err = run(capsys, "report", str(bad))
        assert code == 3 and "status" in err

    def test_bad_env_seed(self, capsys, monkeypatch):
        monkeypatch.setenv("CORRBENCH_SEED", "abc")
        code, _, err = run(capsys, "enumerate", "--n", "2", "--count-only")
        assert code == 3 and "CORRBENCH_SEED" in err


class TestExitCodes:
    def _fake(self, passed, conclusive):
        def command(args):
            return cli.Outcome({"x": 1}, {}, [cli.Check("c", "bounds", "op", passed, conclusive)])
        return command

    def test_failure_writes_bundle(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setitem(cli.COMMANDS, "analyze", self._fake(False, True))
        out = tmp_path / "r.json"
        code, _, err = run(capsys, "analyze", "--f", "and2", "--g", "d1", "--out", str(out), "--seed", "5")
        assert code == 1 and "reproduction bundle" in err
        bundle = tmp_path / "r.json.repro"
        rerun = read(bundle / "rerun.json")
        assert rerun["seed"] == 5 and rerun["failing_checks"][0]["name"] == "c"
        assert read(bundle / "report.json")["status"] == "fail"

    def test_default_bundle_location(self, tmp_path, capsys, monkeypatch):
        monkeypatch.chdir(tmp_path)
        monkeypatch.setitem(cli.COMMANDS, "analyze", self._fake(False, True))
        code, _, _ = run(capsys, "analyze", "--f", "and2", "--g", "d1")
        assert code == 1 and (tmp_path / "corrbench-repro-analyze" / "report.json").exists()

    def test_inconclusive(self, capsys, monkeypatch):
        monkeypatch.setitem(cli.COMMANDS, "analyze", self._fake(True, False))
        code, stdout, _ = run(capsys, "analyze", "--f", "and2", "--g", "d1")
        assert code == 2 and json.loads(stdout)["status"] == "inconclusive"


class TestEnumerate:
    def test_count(self, capsys):
        assert run(capsys, "enumerate", "--n", "4", "--count-only") == (0, "168\n", "")

    def test_antipodal_stream(self, tmp_path, capsys):
        stream = tmp_path / "f.jsonl"
        code, _, _ = run(capsys, "enumerate", "--n", "3", "--antipodal", "--stream", str(stream))
        lines = stream.read_text().splitlines()
        assert code == 0 and len(lines) == 4
        assert {json.loads(line)["table_hex"] for line in lines} >= {"e8"}


class TestScan:
    def test_n3_csv(self, tmp_path, capsys):
        out = tmp_path / "scan.csv"
        dump = tmp_path / "pairs.csv"
        code, _, _ = run(capsys, "scan", "--n", "3", "--out", str(out), "--dump-pairs", str(dump))
        assert code == 0
        doc = read(tmp_path / "scan.csv.json")
        assert doc["result"]["counterexamples"] == {"chvatal": [], "harris": []}
        rows = list(csv.reader(dump.open()))
        assert len(rows) == 1 + 400
        table = list(csv.reader(out.open()))
        assert table[0] == ["normalization", "inequality", "min_ratio", "f_hex", "g_hex"]
        manifest = read(tmp_path / "scan.csv.manifest.json")
        assert set(manifest["outputs"]) == {"scan.csv", "scan.csv.json"}

    def test_workers_give_identical_reports(self, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        run(capsys, "scan", "--n", "4", "--workers", "1", "--out", str(a))
        run(capsys, "scan", "--n", "4", "--workers", "2", "--out", str(b))
        assert a.read_bytes() == b.read_bytes()
        assert read(tmp_path / "b.json.manifest.json")["workers"] == 2


class TestOtherCommands:
    def test_search(self, capsys):
        code, stdout, _ = run(capsys, "search", "--n", "3", "--iterations", "300", "--seed", "1")
        assert code == 0 and json.loads(stdout)["status"] == "pass"

    def test_gaussian_bridge(self, capsys):
        code, stdout, _ = run(capsys, "gaussian", "--f", "and2", "--g", "maj3", "--bridge")
        assert code == 0

    def test_gaussian_halfspace_file(self, tmp_path, capsys):
        path = tmp_path / "h.json"
        path.write_text(json.dumps({"variant": "halfspace", "theta": [0.6, 0.8], "a": 0.2}))
        code, stdout, _ = run(capsys, "gaussian", "--f", str(path), "--t", "0.5")
        assert code == 0 and json.loads(stdout)["status"] == "pass"

    def test_simulate_csv_and_env_seed(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("CORRBENCH_SEED", "7")
        out = tmp_path / "curves.csv"
        code, _, _ = run(capsys, "simulate", "--f", "sign:d1", "--paths", "100000", "--out", str(out))
        assert code == 0
        rows = list(csv.reader(out.open()))
        assert rows[0] == ["t", "k", "estimate", "se"]
        assert read(tmp_path / "curves.csv.manifest.json")["seed"] == 7
        plot = tmp_path / "curves.dat"
        code, _, _ = run(capsys, "report", str(tmp_path / "curves.csv.json"), "--out", str(plot))
        assert code == 0 and "# curves.csv.json:p1" in plot.read_text()

    def test_levelcheck(self, tmp_path, capsys):
        out = tmp_path / "level.json"
        code, _, _ = run(capsys, "levelcheck", "--suite", "geom", "--cases", "20", "--seed", "3",
                         "--out", str(out))
        assert code == 0 and read(out)["result"]["violations"] == []

    def test_gronwall_grid(self, tmp_path, capsys):
        out = tmp_path / "g.csv"
        code, _, _ = run(capsys, "gronwall", "--sweep", "grid", "--perturbations", "10", "--out", str(out))
        assert code == 0
        rows = list(csv.reader(out.open()))
        assert len(rows) == 1 + 48 + 10

    def test_report_summary(self, tmp_path, capsys):
        a = tmp_path / "a.json"
        run(capsys, "analyze", "--f", "and2", "--g", "d1", "--out", str(a))
        code, stdout, _ = run(capsys, "report", str(a), "--format", "csv")
        assert code == 0
        assert stdout.splitlines()[0] == "input,subcommand,status,pass,fail,inconclusive"


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "corrbench", "enumerate", "--n", "3", "--count-only"],
                          capture_output=True, text=True, cwd=tmp_path)
    assert proc.returncode == 0 and proc.stdout == "20\n"
