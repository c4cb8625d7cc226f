import csv
import json
import os

import pytest

from scarlab import cli

SMALL = {
    "model": {"family": "xxc", "N": 3, "A": [1], "B": [2, 3], "gamma": {"num": 1, "den": 3}, "L": 6},
    "analysis": ["verify_tl", "verify_scars", "fragmentation", "spectrum"],
    "output_dir": "out",
    "seed": 7,
}


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return path


def manifest(out):
    return json.loads((out / "manifest.json").read_text())


class TestRun:
    def test_small_pipeline(self, tmp_path, capsys):
        assert cli.run(write_config(tmp_path, SMALL)) == cli.EXIT_OK
        out = tmp_path / "out"
        m = manifest(out)
        assert [s["name"] for s in m["stages"]] == SMALL["analysis"]
        tl = m["stages"][0]["deviations"]
        assert {"quadratic", "e1e2e1", "e2e1e2", "commute"} <= set(tl)
        assert m["exit_code"] == 0 and not m["failing_checks"] and m["seed"] == 7
        for name in ("tower.json", "tower.c64", "sectors.json", "spectrum.csv", "eigenstates.csv"):
            assert (out / name).exists()
        rows = list(csv.DictReader(open(out / "eigenstates.csv")))
        assert len(rows) == 3**6
        assert sum(int(r["scar_flag"]) for r in rows) == 28

    def test_deterministic(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        a.mkdir(), b.mkdir()
        assert cli.run(write_config(a, SMALL)) == 0
        assert cli.run(write_config(b, SMALL)) == 0
        for name in ("spectrum.csv", "eigenstates.csv", "tower.c64", "sectors.json"):
            assert (a / "out" / name).read_bytes() == (b / "out" / name).read_bytes()
        assert manifest(a / "out")["config_hash"] == manifest(b / "out")["config_hash"]

    def test_malformed_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        assert cli.run(path) == cli.EXIT_SCHEMA
        assert not (tmp_path / "out").exists()

    def test_schema_violation(self, tmp_path):
        cfg = json.loads(json.dumps(SMALL))
        cfg["model"]["N"] = "three"
        assert cli.run(write_config(tmp_path, cfg)) == cli.EXIT_SCHEMA
        assert not (tmp_path / "out").exists()

    def test_dense_cap(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SCARLAB_DENSE_CAP", "100")
        assert cli.run(write_config(tmp_path, SMALL)) == cli.EXIT_CAP
        m = manifest(tmp_path / "out")
        assert m["exit_code"] == cli.EXIT_CAP and m["failing_stage"] == "spectrum"

    def test_config_cap_restored(self, tmp_path, monkeypatch):
        monkeypatch.delenv("SCARLAB_DENSE_CAP", raising=False)
        cfg = dict(SMALL, dense_cap=10, analysis=["spectrum"])
        assert cli.run(write_config(tmp_path, cfg)) == cli.EXIT_CAP
        assert "SCARLAB_DENSE_CAP" not in os.environ

    def test_fermionic_and_clock(self, tmp_path):
        ferm = {"model": {"family": "fermionic", "gamma": {"num": 1, "den": 3}, "L": 6},
                "perturbation": {"kind": "fermionic_block"},
                "analysis": ["verify_tl", "verify_scars"], "output_dir": "f"}
        clock = {"model": {"family": "clock", "M": 3, "L": 6},
                 "analysis": ["verify_scars"], "output_dir": "c"}
        assert cli.run(write_config(tmp_path, ferm, "f.json")) == 0
        assert cli.run(write_config(tmp_path, clock, "c.json")) == 0
        assert manifest(tmp_path / "f")["stages"][1]["checks"]["scar_count"]["value"] == 84
        assert manifest(tmp_path / "c")["stages"][0]["checks"]["scar_count"]["value"] == 13

    def test_clock_rejects_xxc_analyses(self, tmp_path):
        clock = {"model": {"family": "clock", "M": 3, "L": 6}, "analysis": ["fragmentation"]}
        assert cli.run(write_config(tmp_path, clock)) == cli.EXIT_SCHEMA


class TestSubcommands:
    def test_verify_tl(self, capsys):
        assert cli.main(["verify-tl", "--n", "3", "--gamma", "1/5"]) == 0
        rep = json.loads(capsys.readouterr().out)
        assert rep["passed"] and rep["quadratic"] < 1e-10

    def test_verify_tl_bad_gamma(self):
        assert cli.main(["verify-tl", "--n", "3", "--gamma", "x"]) == cli.EXIT_SCHEMA

    def test_solve(self, tmp_path, capsys):
        proj = write_config(tmp_path, {"named": "singlet"}, "p.json")
        out = tmp_path / "sol.json"
        assert cli.main(["solve-annihilators", "--projector", str(proj), "--out", str(out)]) == 0
        assert json.loads(out.read_text())["solution_dim"] == 3

    def test_solve_missing_file(self, tmp_path):
        assert cli.main(["solve-annihilators", "--projector", str(tmp_path / "none.json")]) == cli.EXIT_SCHEMA

    def test_entropy_scaling(self, tmp_path, capsys):
        assert cli.main(["entropy-scaling", "--fractions", "1/2,0,1/2", "--lmax", "96",
                         "--out", str(tmp_path / "s.csv")]) == 0
        text = capsys.readouterr().out
        assert text.splitlines()[0] == "L,S_ent" and "# slope" in text
        assert len((tmp_path / "s.csv").read_text().splitlines()) == 5

    def test_plot_data(self, tmp_path, capsys):
        src = tmp_path / "x.csv"
        src.write_text("a,b\n1,2\n3,4\n")
        assert cli.main(["plot-data", str(src), "--columns", "b"]) == 0
        assert capsys.readouterr().out == "# b\n2\n4\n"
        assert cli.main(["plot-data", str(src), "--columns", "c"]) == cli.EXIT_SCHEMA


@pytest.mark.slow
class TestLengthEight:
    def test_exit_and_flags(self, l8_run):
        code, out = l8_run
        assert code == 0, manifest(out)["failing_checks"]
        rows = list(csv.DictReader(open(out / "eigenstates.csv")))
        assert len(rows) == 3**8
        assert sum(int(r["scar_flag"]) for r in rows) == 45

    def test_manifest(self, l8_run):
        _, out = l8_run
        m = manifest(out)
        assert [s["status"] for s in m["stages"]] == ["ok"] * 5
        frag = m["stages"][1]
        assert frag["n_components"] == 18 and frag["target_dim"] == 6050
