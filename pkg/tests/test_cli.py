import json
import os
import subprocess
import sys

import numpy as np
import pytest

from smcurve import __version__
from smcurve import io as sio
from smcurve.cli import ConfigError, RunConfig, parse_grid, run, validate_config


def _meta(path):
    with open(path, encoding="utf-8") as fh:
        lines = [ln[2:] for ln in fh if ln.startswith("# ")]
    return json.loads("".join(lines))


class TestGrid:
    def test_inclusive_end(self):
        assert parse_grid("0.5:1:0.25") == [0.5, 0.75, 1.0]

    def test_end_off_lattice(self):
        assert parse_grid("0:1:0.3") == [0.0, 0.3, 0.6, 0.9]

    def test_many_steps_hit_end(self):
        g = parse_grid("0.5:6:0.05")
        assert len(g) == 111 and g[0] == 0.5 and g[-1] == 6.0

    def test_list(self):
        assert parse_grid("1, 2,4") == [1.0, 2.0, 4.0]

    @pytest.mark.parametrize("text", ["1:0:0.1", "0:1:0", "0:1", ""])
    def test_bad(self, text):
        with pytest.raises(ConfigError):
            parse_grid(text)


class TestValidate:
    def test_minimal_valid(self):
        assert validate_config(RunConfig("curve", {"out": "x.csv"})) == []

    def test_negative_trials(self):
        problems = validate_config(RunConfig("simulate", {"out": "x.csv", "trials": "-3"}))
        assert len(problems) == 1 and problems[0].startswith("trials")

    def test_descending_grid(self):
        problems = validate_config(RunConfig("simulate", {"out": "x.csv", "alpha": "4,2,1"}))
        assert problems == ["alpha: grid must increase"]

    def test_missing_out(self):
        assert validate_config(RunConfig("bounds", {})) == ["out: an output path is required"]

    def test_collects_everything(self):
        problems = validate_config(RunConfig("multilayer", {
            "out": "x", "arch": "parity", "n": "10", "k": "3", "test_samples": "100",
            "sweeps": "5", "burn_in": "5", "bogus": "1"}))
        fields = sorted(p.split(":")[0] for p in problems)
        assert fields == ["bogus", "burn_in", "k", "test_samples"]

    def test_unknown_subcommand(self):
        assert validate_config(RunConfig("plot", {}))

    def test_does_not_mutate(self):
        values = {"out": "x.csv", "alpha": "0.5:1:0.25"}
        validate_config(RunConfig("curve", values))
        assert values == {"out": "x.csv", "alpha": "0.5:1:0.25"}

    def test_tabulated_needs_table(self):
        assert validate_config(RunConfig("curve", {"out": "x", "model": "tabulated"}))

    def test_bad_seed(self):
        assert validate_config(RunConfig("curve", {"out": "x", "seed": str(2**64)}))


class TestRun:
    def test_help(self, capsys):
        assert run(["curve", "--help"]) == 0
        assert "lo:hi:step" in capsys.readouterr().out

    def test_unknown_subcommand(self):
        assert run(["plot"]) == 2

    def test_unknown_flag(self):
        assert run(["curve", "--colour", "red"]) == 2

    def test_validation_error(self, tmp_path, capsys):
        assert run(["simulate", "--trials", "-1", "--out", str(tmp_path / "x.csv")]) == 2
        assert "trials" in capsys.readouterr().err
        assert not (tmp_path / "x.csv").exists()

    def test_unwritable(self, tmp_path):
        assert run(["curve", "--alpha", "1,2", "--out", str(tmp_path / "no" / "x.csv")]) == 1

    def test_curve(self, tmp_path, capsys):
        out = tmp_path / "curve.csv"
        assert run(["curve", "--model", "ising-exact", "--method", "crossing",
                    "--alpha", "0.5:6:0.05", "--out", str(out)]) == 0
        assert "1 jump" in capsys.readouterr().out
        rows = sio.read_csv_rows(out)
        assert len(rows) == 111
        flagged = [r for r in rows if r["jump_flag"] == "1"]
        assert len(flagged) == 1 and float(flagged[0]["eps"]) == 0.0
        meta = _meta(out)
        assert meta["version"] == __version__ and meta["seed"] == 0
        assert meta["config"]["model"] == "ising-exact"
        assert len(meta["jumps"]) == 1

    def test_config_file_and_override(self, tmp_path):
        cfg = tmp_path / "run.ini"
        cfg.write_text("[curve]\nmodel = continuous-bound\nalpha = 1,2\nmethod = maximizer\n")
        out = tmp_path / "c.csv"
        assert run(["curve", "--config", str(cfg), "--method", "crossing", "--out", str(out)]) == 0
        conf = _meta(out)["config"]
        assert conf["model"] == "continuous-bound" and conf["method"] == "crossing"
        assert [float(r["alpha"]) for r in sio.read_csv_rows(out)] == [1.0, 2.0]

    def test_missing_config_file(self, tmp_path):
        assert run(["curve", "--config", str(tmp_path / "none.ini"), "--out", "x"]) == 2

    def test_phase_byte_identical(self, tmp_path):
        args = ["phase", "--n", "8", "--alpha", "0:4:2", "--tau", "0,0.5", "--trials", "3",
                "--sweeps", "20", "--seed", "7"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(args + ["--threads", "1", "--out", str(a)]) == 0
        assert run(args + ["--threads", "4", "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        doc = json.loads((tmp_path / "a.json").read_text())
        assert doc["provenance"]["config"]["trials"] == 3 and len(doc["cells"]) == 6

    def test_env_threads(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SMCURVE_THREADS", "2")
        assert run(["simulate", "--n", "6", "--alpha", "1,2", "--trials", "3",
                    "--out", str(tmp_path / "s.csv")]) == 0

    def test_bounds(self, tmp_path):
        out = tmp_path / "b.json"
        assert run(["bounds", "--n", "6", "--m", "30", "--draws", "10", "--survival-instances",
                    "20", "--spectrum-out", str(tmp_path / "spec.csv"), "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert set(doc["refined"]) == {"bound", "vacuous_flag", "method"}
        assert doc["class_size"] == 64 and len(doc["survival"]) == 7
        assert len(sio.read_csv_rows(tmp_path / "spec.csv")) == 7

    def test_regpath(self, tmp_path):
        out = tmp_path / "r.csv"
        assert run(["regpath", "--random", "20x10", "--values", "0.1:1:0.1", "--out", str(out)]) == 0
        rows = sio.read_csv_rows(out)
        norms = [float(r["norm"]) for r in rows]
        assert len(rows) == 10 and all(b <= a for a, b in zip(norms, norms[1:]))
        assert rows[0]["test_resid"] == ""

    def test_regpath_from_csv(self, tmp_path):
        rng = np.random.default_rng(0)
        np.savetxt(tmp_path / "a.csv", rng.standard_normal((8, 3)), delimiter=",")
        np.savetxt(tmp_path / "b.csv", rng.standard_normal(8), delimiter=",")
        out = tmp_path / "r.csv"
        assert run(["regpath", "--a", str(tmp_path / "a.csv"), "--b", str(tmp_path / "b.csv"),
                    "--knob", "rank", "--values", "0,1,2,3", "--out", str(out)]) == 0
        assert len(sio.read_csv_rows(out)) == 4

    def test_trajectory(self, tmp_path):
        out = tmp_path / "t.json"
        assert run(["trajectory", "--n", "8", "--m", "30", "--t-pre", "20", "--candidates", "5,10",
                    "--trials", "4", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert set(doc["points"]) == {"A", "B", "C"}
        assert doc["provenance"]["stopping_selection"]["chosen"] in (5, 10)

    def test_multilayer(self, tmp_path):
        out = tmp_path / "m.csv"
        assert run(["multilayer", "--arch", "wedge", "--gamma", "0.5", "--n", "8", "--alpha",
                    "1,2", "--trials", "2", "--sweeps", "10", "--out", str(out)]) == 0
        assert [r["architecture"] for r in sio.read_csv_rows(out)] == ["wedge", "wedge"]

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "smcurve", "curve", "--alpha", "1,2",
                               "--out", str(tmp_path / "c.csv")], capture_output=True, text=True)
        assert proc.returncode == 0 and "curve:" in proc.stdout
        proc = subprocess.run([sys.executable, "-m", "smcurve", "bogus"], capture_output=True)
        assert proc.returncode == 2


class TestAtomicWrite:
    def test_interrupted_write_leaves_nothing(self, tmp_path, monkeypatch):
        target = tmp_path / "x.csv"

        def boom(src, dst):
            raise KeyboardInterrupt

        monkeypatch.setattr(os, "replace", boom)
        with pytest.raises(KeyboardInterrupt):
            sio.write_csv(target, ["a"], [(1,)])
        assert os.listdir(tmp_path) == []

    def test_existing_file_survives_failure(self, tmp_path, monkeypatch):
        target = tmp_path / "x.csv"
        target.write_text("old")
        monkeypatch.setattr(os, "replace", lambda s, d: (_ for _ in ()).throw(OSError("disk")))
        with pytest.raises(OSError):
            sio.write_json(target, {"a": 1})
        assert target.read_text() == "old"
        assert os.listdir(tmp_path) == ["x.csv"]


class TestShippedConfigs:
    CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")

    @pytest.mark.parametrize("sub", ["curve", "phase", "simulate", "bounds", "regpath",
                                     "trajectory", "multilayer"])
    def test_each_subcommand_has_a_valid_example(self, sub):
        from smcurve.cli import load_config_file
        path = os.path.join(self.CONFIG_DIR, f"{sub}.ini")
        values = load_config_file(path, sub)
        assert values
        assert validate_config(RunConfig(sub, values)) == []
