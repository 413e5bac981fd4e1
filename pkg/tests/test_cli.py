import json

import pytest

from multibump.cli import main
from multibump.report import _fmt


def write_config(path, **overrides):
    doc = {
        "domain": {"dimension": 1, "extents": [[0.0, 5.0]], "nodes": [201]},
        "weight": {"descriptor": {"kind": "sinusoidal"}},
        "nonlinearity": {"p1": 4.0, "q1": 2.0},
        "parameters": {"lambda": 0.0, "mu": [10.0, 100.0]},
        "solver": {"max_iterations": 20000, "rng_seed": 0},
        "output": {"directory": str(path.parent / "out"), "formats": ["csv", "json"]},
    }
    for key, val in overrides.items():
        if val is None:
            doc.pop(key)
        else:
            doc[key] = val
    path.write_text(json.dumps(doc))
    return path


@pytest.fixture()
def config(tmp_path):
    return write_config(tmp_path / "run.json")


class TestCheck:
    def test_passes_on_good_config(self, config, capsys):
        assert main(["check", str(config)]) == 0
        out = capsys.readouterr().out
        assert "(d) pass" in out
        assert "norm cap R" in out

    def test_hypothesis_failure_exits_1(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "bad.json",
                           parameters={"lambda": 1e6, "mu": [10.0]})
        assert main(["check", str(cfg)]) == 1
        out = capsys.readouterr().out
        assert "(d) FAIL" in out
        assert "lambda" in out

    def test_missing_block_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "bad.json", domain=None)
        assert main(["check", str(cfg)]) == 2
        assert "config.domain" in capsys.readouterr().err

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.json"
        doc = json.loads(write_config(tmp_path / "tmp.json").read_text())
        doc["solver"]["turbo"] = True
        cfg.write_text(json.dumps(doc))
        assert main(["check", str(cfg)]) == 2
        assert "solver" in capsys.readouterr().err

    def test_invalid_json_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{nope")
        assert main(["check", str(cfg)]) == 2

    def test_missing_file_exits_2(self, tmp_path):
        assert main(["check", str(tmp_path / "absent.json")]) == 2


class TestSolve:
    def test_artifacts_and_exit(self, config, tmp_path):
        out = tmp_path / "solved"
        assert main(["solve", str(config), "--mu", "100", "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["mu"] == 100.0
        assert report["status"] in ("converged", "constrained")
        assert "membership" in report
        assert (out / "solution.csv").exists()

    def test_csv_shape_and_boundary_rows(self, config, tmp_path):
        out = tmp_path / "solved"
        main(["solve", str(config), "--mu", "100", "--out", str(out)])
        lines = (out / "solution.csv").read_text().strip().split("\n")
        assert lines[0] == "x,u,label,a"
        assert len(lines) - 1 == 201
        first = lines[1].split(",")
        last = lines[-1].split(",")
        assert first[1] == "0.0" and last[1] == "0.0"

    def test_deterministic_outputs(self, config, tmp_path):
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        main(["solve", str(config), "--mu", "100", "--out", str(out1)])
        main(["solve", str(config), "--mu", "100", "--out", str(out2)])
        assert (out1 / "solution.csv").read_bytes() == (out2 / "solution.csv").read_bytes()
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()

    def test_json_round_trip_is_byte_identical(self, config, tmp_path):
        out = tmp_path / "solved"
        main(["solve", str(config), "--mu", "100", "--out", str(out)])
        raw = (out / "report.json").read_text()
        again = json.dumps(json.loads(raw), indent=2, allow_nan=False) + "\n"
        assert raw == again

    def test_mu_zero_flag(self, config, tmp_path, capsys):
        out = tmp_path / "solved"
        assert main(["solve", str(config), "--mu", "0", "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["mu"] == 0.0
        assert report["penalty_residual"] == 0.0

    def test_hypothesis_failure_exits_1(self, tmp_path):
        cfg = write_config(tmp_path / "bad.json",
                           parameters={"lambda": 1e6, "mu": [10.0]})
        assert main(["solve", str(cfg), "--out", str(tmp_path / "o")]) == 1

    def test_default_mu_is_last_entry(self, config, tmp_path):
        out = tmp_path / "solved"
        main(["solve", str(config), "--out", str(out)])
        report = json.loads((out / "report.json").read_text())
        assert report["mu"] == 100.0


class TestSweep:
    def test_singleton_mu_list_exits_2(self, tmp_path, capsys):
        cfg = write_config(tmp_path / "one.json",
                           parameters={"lambda": 0.0, "mu": [10.0]})
        assert main(["sweep", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert ">= 2" in capsys.readouterr().err

    def test_full_sweep_artifacts(self, config, tmp_path):
        out = tmp_path / "swept"
        assert main(["sweep", str(config), "--out", str(out)]) == 0
        sweep = json.loads((out / "sweep.json").read_text())
        assert sweep["mu_values"] == [10.0, 100.0]
        assert len(sweep["gap_table"]) == 2
        for stem in ("solution_mu0.csv", "solution_mu1.csv",
                     "report_mu0.json", "report_mu1.json", "limit.json"):
            assert (out / stem).exists()

    def test_limit_only(self, config, tmp_path, capsys):
        out = tmp_path / "lim"
        assert main(["sweep", str(config), "--limit-only", "--out", str(out)]) == 0
        doc = json.loads((out / "limit.json").read_text())
        assert doc["nodal"]["converged"] and doc["positive"]["converged"]
        assert not (out / "sweep.json").exists()


class TestFigures:
    def test_png_formats_render(self, tmp_path):
        cfg = write_config(tmp_path / "fig.json",
                           output={"directory": str(tmp_path / "o"),
                                   "formats": ["csv", "json", "png"]})
        out = tmp_path / "o"
        assert main(["solve", str(cfg), "--mu", "100", "--out", str(out)]) == 0
        assert (out / "solution.png").stat().st_size > 1000
        assert (out / "trace.png").stat().st_size > 1000

    def test_sweep_figures(self, tmp_path):
        cfg = write_config(tmp_path / "fig.json",
                           output={"directory": str(tmp_path / "o"),
                                   "formats": ["json", "png"]})
        out = tmp_path / "o"
        assert main(["sweep", str(cfg), "--out", str(out)]) == 0
        assert (out / "sweep.png").stat().st_size > 1000
        assert (out / "limit.png").stat().st_size > 1000


class TestFloatFormat:
    def test_shortest_round_trip(self, rng):
        for _ in range(200):
            x = float(rng.standard_normal() * 10.0 ** rng.integers(-300, 300))
            assert float(_fmt(x)) == x

    def test_exact_simple_values(self):
        assert _fmt(0.0) == "0.0"
        assert _fmt(0.1) == "0.1"
        assert _fmt(1.0 / 3.0) == "0.3333333333333333"
