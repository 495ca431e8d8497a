import csv
import io
import json
from pathlib import Path

import pytest

from aklt_hqmm import cli
from aklt_hqmm.core.linalg import matrix_to_json
from aklt_hqmm.models.aklt import ObservableSpec
from aklt_hqmm.models.hqmm import Ordering, aklt_isometry_model

SAMPLES = Path(__file__).resolve().parent.parent


def csv_tables(text):
    """แยก CSV report เป็น {ชื่อตาราง: rows}"""
    tables, current = {}, None
    for row in csv.reader(io.StringIO(text)):
        if row and row[0].startswith("# "):
            current = row[0][2:]
            tables[current] = []
        elif current is not None:
            tables[current].append(row)
    return tables


def run_json(capsys, *argv):
    code = cli.main([*argv, "--format", "json"])
    out = capsys.readouterr().out
    return code, json.loads(out) if out else None


def write_observable(tmp_path, spec: ObservableSpec, name="y.json"):
    path = tmp_path / name
    path.write_text(json.dumps(spec.to_dict()), encoding="utf-8")
    return str(path)


class TestExpect:
    def test_szsz(self, capsys):
        code = cli.main(["expect", "--input", str(SAMPLES / "szsz_observable.json")])
        assert code == cli.EXIT_OK
        tables = csv_tables(capsys.readouterr().out)
        values = {row[0]: float(row[1]) for row in tables["values"][1:]}
        assert values["infinite_volume"] == pytest.approx(-4 / 9, abs=1e-12)
        assert values["exact_oracle"] == pytest.approx(-8 / 9, abs=1e-12)
        assert values["finite_chain_normalized"] == pytest.approx(-2 / 3, abs=1e-12)

    def test_identity(self, capsys, tmp_path):
        path = write_observable(tmp_path, ObservableSpec.identity(3))
        code, report = run_json(capsys, "expect", "--input", path)
        assert code == cli.EXIT_OK
        rows = {row["path"]: row for row in report["tables"]["values"]}
        assert rows["infinite_volume"]["value_re"] == pytest.approx(1.0, abs=1e-10)
        assert report["summary"]["max_deviation"] < 1e-10

    def test_malformed_file(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"n_sites": 2, "factors": [', encoding="utf-8")
        assert cli.main(["expect", "--input", str(path)]) == cli.EXIT_PARSE_ERROR
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "line" in captured.err

    def test_inconsistent_sites(self, capsys, tmp_path, spins):
        path = tmp_path / "y.json"
        path.write_text(json.dumps({"n_sites": 3, "factors": [matrix_to_json(spins.sz)]}), encoding="utf-8")
        assert cli.main(["expect", "--input", str(path)]) == cli.EXIT_VALIDATION_ERROR
        assert capsys.readouterr().out == ""

    def test_requires_input(self, capsys):
        assert cli.main(["expect"]) == cli.EXIT_VALIDATION_ERROR


class TestCorrelate:
    def test_ratios(self, capsys):
        assert cli.main(["correlate", "--axis", "z", "--max-distance", "5"]) == cli.EXIT_OK
        rows = csv_tables(capsys.readouterr().out)["correlator"][1:]
        assert len(rows) == 5
        assert rows[0][2] == ""
        for row in rows[1:]:
            assert float(row[2]) == pytest.approx(-1 / 3, abs=1e-9)

    def test_axes_agree(self, capsys):
        _, x = run_json(capsys, "correlate", "--axis", "x", "--max-distance", "6")
        _, z = run_json(capsys, "correlate", "--axis", "z", "--max-distance", "6")
        for row_x, row_z in zip(x["tables"]["correlator"], z["tables"]["correlator"]):
            assert row_x["value"] == pytest.approx(row_z["value"], abs=1e-10)

    def test_out_of_range(self, capsys):
        assert cli.main(["correlate", "--max-distance", "0"]) == cli.EXIT_VALIDATION_ERROR
        assert cli.main(["correlate", "--max-distance", "21"]) == cli.EXIT_VALIDATION_ERROR

    def test_deterministic_json(self, capsys):
        cli.main(["correlate", "--format", "json"])
        first = capsys.readouterr().out
        cli.main(["correlate", "--format", "json"])
        assert capsys.readouterr().out == first


class TestConverge:
    def test_random_observable(self, capsys):
        code, report = run_json(capsys, "converge", "--seed", "7", "--m-max", "30", "--p-max", "30")
        assert code == cli.EXIT_OK
        assert len(report["tables"]["sweep"]) == 31
        assert report["summary"]["rate_per_site"] == pytest.approx(1 / 3, abs=0.02)

    def test_grid_from_file(self, capsys):
        code, report = run_json(
            capsys, "converge", "--input", str(SAMPLES / "szsz_observable.json"),
            "--m-max", "2", "--p-max", "3", "--schedule", "grid",
        )
        assert code == cli.EXIT_OK
        assert len(report["tables"]["sweep"]) == 12
        assert report["summary"]["omega_re"] == pytest.approx(-4 / 9, abs=1e-12)

    def test_bound(self, capsys):
        assert cli.main(["converge", "--m-max", "201"]) == cli.EXIT_VALIDATION_ERROR


class TestHqmmVerify:
    def test_passes(self, capsys):
        code, report = run_json(capsys, "hqmm-verify", "--n-sites", "3", "--trials", "100", "--seed", "42")
        assert code == cli.EXIT_OK
        assert len(report["tables"]["trials"]) == 100
        assert report["summary"]["max_deviation"] < 1e-9
        assert report["summary"]["witness_gap"] > 1e-3

    def test_zero_trials(self, capsys):
        code, report = run_json(capsys, "hqmm-verify", "--trials", "0")
        assert code == cli.EXIT_OK
        assert report["tables"]["trials"] == []
        assert [row["source"] for row in report["tables"]["witness"]] == ["random_search", "analytic"]

    def test_failure_dumps_observable(self, capsys, tmp_path):
        # causal isometry model ให้ observation process ที่ไม่เท่ากับ ω
        model_path = tmp_path / "isometry.json"
        model_path.write_text(
            json.dumps(aklt_isometry_model(Ordering.CAUSAL).to_dict()), encoding="utf-8"
        )
        dump = tmp_path / "failure.json"
        code, report = run_json(
            capsys, "hqmm-verify", "--input", str(model_path), "--trials", "4",
            "--failure-dump", str(dump),
        )
        assert code == cli.EXIT_VERIFICATION_FAILED
        assert report["summary"]["max_deviation"] > 1e-3
        assert report["summary"]["failure_dump"] == str(dump)
        dumped = ObservableSpec.from_dict(json.loads(dump.read_text(encoding="utf-8")))
        assert dumped.n_sites == 3

    def test_sample_model(self, capsys):
        code, _ = run_json(
            capsys, "hqmm-verify", "--input", str(SAMPLES / "aklt_causal_model.json"), "--trials", "10"
        )
        assert code == cli.EXIT_OK

    def test_site_bound(self, capsys):
        assert cli.main(["hqmm-verify", "--n-sites", "7"]) == cli.EXIT_VALIDATION_ERROR
        assert cli.main(["hqmm-verify", "--trials", "10001"]) == cli.EXIT_VALIDATION_ERROR

    def test_same_seed_same_report(self, capsys):
        cli.main(["hqmm-verify", "--trials", "6", "--seed", "3", "--format", "json"])
        first = capsys.readouterr().out
        cli.main(["hqmm-verify", "--trials", "6", "--seed", "3", "--format", "json", "--workers", "1"])
        assert capsys.readouterr().out == first


class TestOtherCommands:
    def test_spectrum(self, capsys):
        code, report = run_json(capsys, "spectrum")
        assert code == cli.EXIT_OK
        moduli = [row["modulus"] for row in report["tables"]["eigenvalues"]]
        assert moduli == pytest.approx([1.0, 1 / 3, 1 / 3, 1 / 3], abs=1e-10)
        assert report["summary"]["power_limit_rate"] == pytest.approx(1 / 3, abs=0.01)
        assert report["summary"]["completely_positive"] is True

    def test_validate(self, capsys):
        assert cli.main(["validate", "--seed", "1"]) == cli.EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("# └── acceptance (PASSED)")
        assert "hqmm/analytic_architecture_gap" in out

    def test_bad_flag(self, capsys):
        assert cli.main(["spectrum", "--format", "xml"]) == cli.EXIT_VALIDATION_ERROR

    def test_negative_seed(self, capsys):
        assert cli.main(["spectrum", "--seed", "-1"]) == cli.EXIT_VALIDATION_ERROR

    def test_report_to_file(self, capsys, tmp_path):
        out = tmp_path / "spectrum.csv"
        assert cli.main(["spectrum", "--out", str(out)]) == cli.EXIT_OK
        assert capsys.readouterr().out == ""
        assert "# eigenvalues" in out.read_text(encoding="utf-8")

    def test_unwritable_report_path(self, capsys, tmp_path):
        out = tmp_path / "missing" / "spectrum.csv"
        assert cli.main(["spectrum", "--out", str(out)]) == cli.EXIT_VALIDATION_ERROR
        captured = capsys.readouterr()
        assert captured.out == ""
        assert "cannot write" in captured.err
        assert not out.exists()

    def test_unwritable_failure_dump(self, capsys, tmp_path):
        model_path = tmp_path / "isometry.json"
        model_path.write_text(
            json.dumps(aklt_isometry_model(Ordering.CAUSAL).to_dict()), encoding="utf-8"
        )
        dump = tmp_path / "missing" / "failure.json"
        code = cli.main([
            "hqmm-verify", "--input", str(model_path), "--trials", "4", "--failure-dump", str(dump),
        ])
        assert code == cli.EXIT_VALIDATION_ERROR
        assert capsys.readouterr().out == ""

    def test_timing_goes_to_log_not_report(self, capsys):
        code = cli.main(["hqmm-verify", "--trials", "2", "--format", "json", "--log-level", "INFO"])
        captured = capsys.readouterr()
        assert code == cli.EXIT_OK
        assert "Timing:" in captured.err
        assert "duration" not in captured.out
