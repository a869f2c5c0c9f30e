"""Command-line front-end: outputs, exit codes, config files and determinism."""

import csv
import json
import math

import pytest

from hardylab.cli import fmt, main, read_config, to_json
from hardylab.errors import ConfigError


def run(tmp_path, name, *args):
    out = tmp_path / name
    return main([*args, "--out", str(out)]), out


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def snapshot(folder):
    return {p.name: p.read_bytes() for p in sorted(folder.iterdir())}


class TestFormatting:
    def test_seventeen_digits(self):
        assert fmt(0.1) == "0.10000000000000001"
        assert float(fmt(math.pi)) == math.pi

    def test_special_values(self):
        assert fmt(math.inf) == "Infinity" and fmt(True) == "true" and fmt(None) == ""

    def test_json_roundtrip(self):
        rec = {"a": 0.1, "b": [1, 2.5, math.inf], "c": None, "d": "x"}
        back = json.loads(to_json(rec))
        assert back["a"] == 0.1 and back["b"][2] == math.inf and back["c"] is None


class TestCommands:
    def test_weights(self, tmp_path):
        code, out = run(tmp_path, "w", "weights", "--m", "3", "--R", "2.718281828", "--grid", "100")
        assert code == 0
        rows = read_csv(out / "weights-t.csv")
        assert len(rows) == 100 and float(rows[-1]["value"]) == pytest.approx(1.0)
        assert {"results.jsonl", "summary.csv", "weights-t.csv"} <= set(snapshot(out))

    def test_verify_main(self, tmp_path):
        code, out = run(tmp_path, "vm", "verify-main", "--domain", "interval:D=1", "--fn", "bump", "--m", "2..8", "--R", "e")
        assert code == 0
        rows = read_csv(out / "summary.csv")
        assert [r["m"] for r in rows[:-1]] == [str(m) for m in range(2, 9)]
        assert rows[-1]["case_id"] == "verify-main:sweep" and rows[-1]["pass"] == "true"
        assert len(read_csv(out / "verify-main-m.csv")) == 7

    def test_series_witness_exit_zero(self, tmp_path):
        code, out = run(tmp_path, "se", "series", "--alpha", "1.0", "--fn", "tensor", "--mmax", "10000")
        assert code == 0
        (rec,) = [json.loads(x) for x in (out / "results.jsonl").read_text().splitlines()]
        assert rec["verdict"] == "DivergenceWitness"

    def test_series_unexpected_divergence_exit_two(self, tmp_path):
        code, _ = run(tmp_path, "sb", "series", "--fn", "bump", "--alpha", "1.0")
        assert code == 2

    def test_divergence_error_exit_two(self, tmp_path, monkeypatch):
        from hardylab import cli
        from hardylab.errors import DivergenceError

        def boom(*a, **k):
            raise DivergenceError("collar grows")

        monkeypatch.setattr(cli, "verify_main", boom)
        code, _ = run(tmp_path, "d", "verify-main", "--m", "2")
        assert code == 2

    def test_nan_exit_one(self, tmp_path, monkeypatch, capsys):
        from hardylab import cli

        class Fake:
            def to_dict(self):
                return {"m": 2, "lhs": float("nan"), "measured_constant": float("nan"), "pass": True}

        monkeypatch.setattr(cli, "verify_main", lambda *a, **k: Fake())
        code, _ = run(tmp_path, "n", "verify-main", "--m", "2")
        assert code == 1
        assert "verify-main:m=2" in capsys.readouterr().err

    def test_verify_frac_flat(self, tmp_path):
        code, out = run(tmp_path, "vf", "verify-frac", "--domain", "flat", "--s", "0.5", "--m", "2")
        assert code == 0
        (row,) = read_csv(out / "verify-frac-s.csv")
        assert float(row["lhs"]) <= float(row["explicit_1d"])

    def test_bbm(self, tmp_path):
        code, out = run(tmp_path, "b", "bbm")
        assert code == 0 and len(read_csv(out / "bbm-s.csv")) == 3

    def test_counterexample(self, tmp_path):
        code, out = run(tmp_path, "c", "counterexample", "--m", "2..4")
        assert code == 0
        assert all(r["verdict"] == "chain_rule" for r in read_csv(out / "summary.csv")[:3])

    def test_extremal(self, tmp_path):
        code, out = run(tmp_path, "x", "extremal", "--m", "2", "--budget", "120", "--restarts", "3")
        assert code == 0 and len(read_csv(out / "extremal-m.csv")) == 1


class TestErrors:
    @pytest.mark.parametrize(
        "args,field",
        [
            (["verify-main", "--bogus", "1"], "arguments"),
            (["verify-main", "--fn", "wobble"], "fn"),
            (["verify-main", "--m", "x"], "m"),
            (["verify-main", "--domain", "disk"], "domain"),
            (["verify-frac", "--s", "1.5"], "s"),
            (["weights", "--tail", "power:gamma=2"], "tail"),
            (["nope"], "arguments"),
            (["report"], "from"),
        ],
    )
    def test_exit_one_names_field(self, args, field, capsys):
        assert main(args) == 1
        assert f"error: {field}" in capsys.readouterr().err

    def test_bad_config_key(self, tmp_path, capsys):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("mm = 2\n")
        assert main(["verify-main", "--config", str(cfg)]) == 1
        assert "mm" in capsys.readouterr().err

    def test_config_not_key_value(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("just words\n")
        with pytest.raises(ConfigError):
            read_config(cfg)


class TestConfigAndSeed:
    def test_config_and_flag_override(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("# sweep\nm = 2..3\nfn = linear\n")
        code, out = run(tmp_path, "a", "verify-main", "--config", str(cfg), "--m", "4")
        assert code == 0
        rows = read_csv(out / "verify-main-m.csv")
        assert [r["m"] for r in rows] == ["4"]

    def test_seed_env_fallback(self, tmp_path, monkeypatch):
        args = ["extremal", "--budget", "100", "--restarts", "3"]
        monkeypatch.setenv("HARDYLAB_SEED", "7")
        _, a = run(tmp_path, "env", *args)
        _, b = run(tmp_path, "flag", *args, "--seed", "7")
        assert snapshot(a) == snapshot(b)
        rec = json.loads((a / "results.jsonl").read_text())
        assert rec["seed"] == 7


class TestDeterminism:
    def test_repeat_identical(self, tmp_path):
        args = ["verify-main", "--m", "2..4", "--seed", "3"]
        _, a = run(tmp_path, "a", *args)
        _, b = run(tmp_path, "b", *args)
        assert snapshot(a) == snapshot(b)

    def test_jobs_identical(self, tmp_path):
        _, a = run(tmp_path, "a", "verify-frac", "--s", "0.5,0.7")
        _, b = run(tmp_path, "b", "verify-frac", "--s", "0.5,0.7", "--jobs", "2")
        assert snapshot(a) == snapshot(b)

    def test_report_regenerates(self, tmp_path):
        _, a = run(tmp_path, "a", "counterexample", "--m", "2..3")
        before = snapshot(a)
        for name in list(before):
            if name != "results.jsonl":
                (a / name).unlink()
        assert main(["report", "--from", str(a)]) == 0
        assert snapshot(a) == before

    def test_report_to_other_dir(self, tmp_path):
        _, a = run(tmp_path, "a", "bbm")
        assert main(["report", "--from", str(a), "--out", str(tmp_path / "r")]) == 0
        assert snapshot(tmp_path / "r") == snapshot(a)
