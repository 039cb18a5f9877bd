"""
命令行接口测试
"""
import csv
import io
import json

import pytest

import main as main_module
from app.utils.response import ExitCode
from main import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def csv_rows(out):
    return list(csv.reader(line for line in io.StringIO(out) if not line.startswith("#")))


def config_echo(line, prefix="ea-bounds 1.0.0 ea-bounds/1 config="):
    assert line.startswith(prefix)
    return json.loads(line[len(prefix):])


class TestBoundClassical:
    def test_square(self, capsys):
        code, out, _ = run(capsys, "bound", "classical", "--dim", "2")
        assert code == 0
        assert "lower bound: -3/2 (-1.5)" in out
        assert "misfit: m >= 1/4" in out

    def test_human_provenance(self, capsys):
        code, out, _ = run(capsys, "bound", "classical", "--dim", "2", "--seed", "7")
        assert code == 0
        echo = config_echo(out.splitlines()[0])
        assert echo["subcommand"] == "bound classical"
        assert echo["dimension"] == 2
        assert echo["seed"] == 7

    def test_csv_provenance_trailer(self, capsys):
        code, out, _ = run(capsys, "bound", "classical", "--dim", "2", "--format", "csv")
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("dimension,")
        assert config_echo(lines[-1], "# ea-bounds 1.0.0 ea-bounds/1 config=")["output_format"] == "csv"

    def test_point_mass_monte_carlo(self, capsys):
        code, out, _ = run(capsys, "bound", "classical", "--dim", "3", "--dist", "point:1", "--allow-noncentered",
                           "--method", "monte-carlo", "--samples", "100", "--format", "json")
        assert code == 0
        data = json.loads(out)["data"]
        assert data["estimate"] == -3.0
        assert data["mc_stderr"] == 0.0

    def test_point_mass_has_no_enumeration_form(self, capsys):
        code, out, _ = run(capsys, "bound", "classical", "--dim", "2", "--dist", "point:1", "--allow-noncentered")
        assert code == 0
        assert "enumeration form" not in out

    def test_cube(self, capsys):
        code, out, _ = run(capsys, "bound", "classical", "--dim", "3")
        assert code == 0
        assert "enumeration form: -9024/4096 (-2.203125)" in out
        assert "-2.204" in out

    def test_json_envelope(self, capsys):
        code, out, _ = run(capsys, "bound", "classical", "--dim", "2", "--format", "json")
        assert code == 0
        payload = json.loads(out)
        assert payload["schema"] == "ea-bounds/1"
        assert payload["config"]["subcommand"] == "bound classical"
        assert "threads" not in payload["config"]
        assert payload["data"]["lower_bound"]["num"] == -3
        assert payload["data"]["lower_bound"]["den"] == 2

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "bound", "classical", "--dim", "3", "--format", "csv")
        assert code == 0
        rows = csv_rows(out)
        assert rows[0][0] == "dimension"
        assert rows[1][4:7] == ["-141", "64", "-2.203125"]

    def test_point_mass_file(self, capsys, point_table):
        code, out, _ = run(capsys, "bound", "classical", "--dim", "2", "--dist", f"file:{point_table}",
                           "--allow-noncentered")
        assert code == 0
        assert "lower bound: -2 (-2)" in out

    def test_noncentered_rejected(self, capsys, point_table):
        code, out, err = run(capsys, "bound", "classical", "--dim", "2", "--dist", f"file:{point_table}")
        assert code == 2
        assert out == ""
        assert err.startswith("error:")

    def test_bad_distribution(self, capsys):
        code, _, _ = run(capsys, "bound", "classical", "--dim", "2", "--dist", "normal:wide")
        assert code == 2

    def test_monte_carlo_banner(self, capsys):
        code, out, _ = run(capsys, "bound", "classical", "--dim", "2", "--dist", "normal",
                           "--samples", "2000", "--seed", "3")
        assert code == 0
        assert "***" in out

    def test_unsupported_dimension(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["bound", "classical", "--dim", "4"])
        assert exc.value.code == 2


class TestBoundQuantum:
    def test_sweep_csv(self, capsys):
        code, out, _ = run(capsys, "bound", "quantum", "--dim", "2", "--alpha-x", "0,0.5,1")
        assert code == 0
        rows = csv_rows(out)
        assert rows[0] == ["alpha_x", "lower_bound", "method", "stderr"]
        assert len(rows) == 4
        assert float(rows[1][1]) == -1.5
        assert rows[1][2] == "exact-enumeration"

    def test_grid_without_zero(self, capsys):
        code, _, _ = run(capsys, "bound", "quantum", "--dim", "2", "--alpha-x", "1")
        assert code == 2


class TestUpper:
    def test_guard(self, capsys):
        code, out, err = run(capsys, "upper", "--dim", "2", "--L", "100", "--samples", "1")
        assert code == 3
        assert out == ""
        assert "L" in err

    def test_point_mass_summary(self, capsys, point_table):
        code, out, _ = run(capsys, "upper", "--dim", "2", "--L", "4", "--dist", f"file:{point_table}",
                           "--samples", "2")
        assert code == 0
        records = [json.loads(line) for line in out.splitlines()]
        assert records[0]["record"] == "header"
        assert records[0]["config"]["boundary"] == "periodic"
        assert [r["record"] for r in records[1:]] == ["sample", "sample", "summary"]
        summary = records[-1]
        assert summary["mean_per_site"]["num"] == -2
        assert summary["mean_per_site"]["den"] == 1

    def test_output_is_reproducible(self, capsys, tmp_path):
        first = tmp_path / "first.jsonl"
        second = tmp_path / "second.jsonl"
        assert main(["upper", "--dim", "2", "--L", "4", "--samples", "8", "--seed", "11",
                     "--threads", "1", "-o", str(first)]) == 0
        assert main(["upper", "--dim", "2", "--L", "4", "--samples", "8", "--seed", "11",
                     "--threads", "3", "-o", str(second)]) == 0
        capsys.readouterr()
        assert first.read_bytes() == second.read_bytes()

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "upper", "--dim", "2", "--L", "3", "--boundary", "free",
                           "--samples", "3", "--format", "csv")
        assert code == 0
        assert out.splitlines()[0] == "sample,seed,energy_num,energy_den,per_site"
        assert len([line for line in out.splitlines() if not line.startswith("#")]) == 4
        assert out.splitlines()[-1].startswith("# ea-bounds 1.0.0 ea-bounds/1 config=")


class TestAnalyze:
    def test_frustration_json(self, capsys):
        code, out, _ = run(capsys, "analyze", "frustration", "--dim", "2", "--format", "json")
        assert code == 0
        data = json.loads(out)["data"]
        assert data["plaquette_energies"] == {"frustrated": "-2", "unfrustrated": "-4"}
        census = data["census"][0]["by_frustrated_faces"]
        assert census["1"]["ground_energies"] == {"-2": 8}
        assert census["0"]["ground_energies"] == {"-4": 8}

    def test_frustration_with_lattice(self, capsys):
        code, out, _ = run(capsys, "analyze", "frustration", "--dim", "3", "--L", "3", "--format", "json")
        assert code == 0
        lattice = json.loads(out)["data"]["lattice"]
        assert lattice["boundary"] == "periodic"
        assert lattice["odd_parity_cubes"] == 0

    def test_frustration_human(self, capsys):
        code, out, _ = run(capsys, "analyze", "frustration")
        assert code == 0
        assert "plaquette minimum energy: frustrated -2, unfrustrated -4" in out


class TestInternalError:
    def test_unexpected_exception(self, capsys, monkeypatch):
        def broken(run_config):
            raise RuntimeError("boom")

        monkeypatch.setitem(main_module.COMMANDS, "upper", broken)
        code, out, err = run(capsys, "upper", "--dim", "2", "--L", "4")
        assert code == ExitCode.INTERNAL_ERROR == 1
        assert out == ""
        assert "boom" in err


@pytest.mark.slow
class TestVerify:
    def test_suite_passes(self, capsys):
        code, out, _ = run(capsys, "verify", "--samples", "10", "--seed", "1")
        assert code == 0
        assert "FAIL" not in out

    def test_json_report(self, capsys):
        code, out, _ = run(capsys, "verify", "--samples", "5", "--format", "json")
        assert code == 0
        checks = json.loads(out)["data"]["checks"]
        assert all(c["passed"] for c in checks)
