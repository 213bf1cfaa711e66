import csv
import io
import json
import subprocess
import sys

import pytest

from catbond_bounds import cli
from catbond_bounds.cli import BOUNDS_COLUMNS, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, EXIT_PARITY, main
from catbond_bounds.errors import NumericalError


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


class TestTable:
    def test_table1_layout(self, capsys):
        code, out, _ = run(capsys, "table", "table1", "--no-mc")
        rows = read_csv(out)
        assert code == EXIT_OK
        assert rows[0] == ["r", "SWLB0", "SWLB1", "SWLBtBS", "MC", "SWUBtBS", "SWUB1"]
        assert len(rows) == 9
        assert [r[0] for r in rows[1:]] == [f"{x:.12f}" for x in (0.035, 0.03, 0.025, 0.02, 0.015, 0.01, 0.005, 0.0)]
        assert all(r[4] == "" for r in rows[1:])
        assert all(len(r[1].split(".")[1]) == 12 for r in rows[1:])

    @pytest.mark.parametrize("name,n", [("table2", 9), ("table3", 8), ("table4", 8), ("table5", 12)])
    def test_row_counts(self, capsys, tmp_path, name, n):
        out = tmp_path / f"{name}.csv"
        code, _, _ = run(capsys, "table", name, "--no-mc", "--out", str(out))
        assert code == EXIT_OK
        assert len(read_csv(out.read_text())) == n + 1

    def test_mc_column_and_se(self, capsys):
        code, out, _ = run(capsys, "table", "table4", "--iterations", "2000", "--with-se")
        rows = read_csv(out)
        assert rows[0][-2:] == ["SWUB1", "MC_SE"]
        assert all(float(r[4]) > 0 and float(r[-1]) > 0 for r in rows[1:])

    def test_lg_report_written_next_to_output(self, capsys, tmp_path):
        out = tmp_path / "t5.csv"
        assert main(["table", "table5", "--no-mc", "--out", str(out)]) == EXIT_OK
        report = tmp_path / "t5.lg-discrepancy.csv"
        rows = read_csv(report.read_text())
        assert rows[0] == list(cli.DISCREPANCY_COLUMNS)
        assert len(rows) == 1 + 12 * 3

    def test_lg_report_on_stderr_without_out(self, capsys):
        code, out, err = run(capsys, "table", "table4", "--no-mc")
        assert code == EXIT_OK and err.startswith("sweep,t,closed")

    def test_byte_identical_across_workers(self, capsys, tmp_path):
        texts = []
        for workers in ("1", "3"):
            out = tmp_path / f"w{workers}.csv"
            main(["table", "table3", "--iterations", "20000", "--batch", "4000", "--workers", workers,
                  "--out", str(out)])
            texts.append(out.read_bytes())
        assert texts[0] == texts[1]

    def test_numerical_failure_exits_3_without_output(self, capsys, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise NumericalError("SWUB1: no bracket")

        monkeypatch.setattr(cli, "bound_suite", boom)
        out = tmp_path / "t.csv"
        code, _, err = run(capsys, "table", "table1", "--no-mc", "--out", str(out))
        assert code == EXIT_NUMERIC and "SWUB1" in err
        assert not out.exists()

    def test_plot(self, capsys, tmp_path):
        pytest.importorskip("matplotlib")
        fig = tmp_path / "t4.png"
        code, _, _ = run(capsys, "table", "table4", "--iterations", "2000", "--plot", str(fig))
        assert code == EXIT_OK and fig.stat().st_size > 0


class TestBounds:
    def test_reference_row(self, capsys):
        code, out, _ = run(capsys, "bounds", "--preset", "lin2007", "--r", "0.02", "--convention", "table")
        rows = read_csv(out)
        assert rows[0] == list(BOUNDS_COLUMNS)
        by_bound = {r[2]: r for r in rows[1:]}
        assert float(by_bound["SWLB0"][4]) == pytest.approx(0.941626342686, abs=1e-9)

    def test_sweep_order(self, capsys):
        code, out, _ = run(capsys, "bounds", "--preset", "tsai-su", "--r", "0.01,0.02", "--q0", "0.008,0.009")
        rows = read_csv(out)[1:]
        keys = [(r[0], r[1]) for r in rows[::4]]
        assert keys == [(f"{a:.12f}", f"{b:.12f}") for a in (0.01, 0.02) for b in (0.008, 0.009)]

    def test_json_schema(self, capsys):
        code, out, _ = run(capsys, "bounds", "--preset", "cheng-lg", "--format", "json")
        doc = json.loads(out)
        assert set(doc) == {"command", "version", "columns", "rows"}
        assert doc["command"] == "bounds" and doc["columns"] == list(BOUNDS_COLUMNS)
        assert [r["bound"] for r in doc["rows"]] == ["SWLB0", "SWLB1", "SWLBtLG", "SWUB1"]
        assert all(set(r) == set(BOUNDS_COLUMNS) for r in doc["rows"])
        assert isinstance(doc["rows"][0]["put_side"], float)

    def test_json_csv_agree(self, capsys):
        _, js, _ = run(capsys, "bounds", "--preset", "lin2007", "--format", "json")
        _, cs, _ = run(capsys, "bounds", "--preset", "lin2007")
        for row, line in zip(json.loads(js)["rows"], read_csv(cs)[1:]):
            assert f"{row['put_side']:.12f}" == line[4]

    def test_unknown_preset(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["bounds", "--preset", "nope"])
        assert info.value.code == EXIT_CONFIG

    def test_bad_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "m.cfg"
        cfg.write_text("model = bs\nsigma = 0.1\n")
        code, _, err = run(capsys, "bounds", "--config", str(cfg))
        assert code == EXIT_CONFIG and "q0" in err

    def test_lg_report_option(self, capsys, tmp_path):
        rep = tmp_path / "rep.csv"
        code, _, _ = run(capsys, "bounds", "--preset", "cheng-lg", "--report", str(rep))
        assert code == EXIT_OK and len(read_csv(rep.read_text())) == 4


class TestMc:
    def test_both_targets(self, capsys):
        code, out, _ = run(capsys, "mc", "--preset", "lin2007", "--iterations", "10000", "--target", "both")
        rows = read_csv(out)
        assert rows[0] == list(cli.MC_COLUMNS)
        assert [r[2] for r in rows[1:]] == ["P", "P1"]

    def test_byte_identical(self, capsys, tmp_path):
        outs = []
        for workers in ("1", "4"):
            out = tmp_path / f"mc{workers}.json"
            main(["mc", "--preset", "cheng-lg", "--r", "0.0,0.01", "--iterations", "30000", "--batch", "5000",
                  "--workers", workers, "--format", "json", "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_bad_iterations(self, capsys):
        code, _, err = run(capsys, "mc", "--iterations", "3")
        assert code == EXIT_CONFIG and "even" in err


class TestIndex:
    def test_single_cell(self, capsys, tmp_path):
        rates = tmp_path / "r.csv"
        rates.write_text("country,age_band,gender,rate\nX,all,m,0.0123\nX,all,f,0.0123\n")
        weights = tmp_path / "w.cfg"
        weights.write_text("country.X = 1\nage.all = 1\ngender.male = 0.65\ngender.female = 0.35\n")
        code, out, _ = run(capsys, "index", "--rates", str(rates), "--weights", str(weights))
        assert code == EXIT_OK and out.strip() == "0.012300000000"

    def test_default_weights(self, capsys, tmp_path):
        rates = tmp_path / "r.csv"
        lines = ["country,age_band,gender,rate"]
        for c in ("US", "UK", "France", "Italy", "Switzerland"):
            lines += [f"{c},all,m,100", f"{c},all,f,100"]
        rates.write_text("\n".join(lines) + "\n")
        code, out, _ = run(capsys, "index", "--rates", str(rates), "--scale", "1e-5")
        assert code == EXIT_OK and float(out) == pytest.approx(1e-3, rel=1e-12)

    def test_missing_cell(self, capsys, tmp_path):
        rates = tmp_path / "r.csv"
        rates.write_text("country,age_band,gender,rate\nUS,all,m,1\n")
        code, _, err = run(capsys, "index", "--rates", str(rates))
        assert code == EXIT_CONFIG and "US, all, female" in err

    def test_malformed_header(self, capsys, tmp_path):
        rates = tmp_path / "r.csv"
        rates.write_text("nation,age,sex,value\nUS,all,m,1\n")
        code, _, err = run(capsys, "index", "--rates", str(rates))
        assert code == EXIT_CONFIG and "header" in err


class TestParity:
    def test_passes(self, capsys):
        code, out, _ = run(capsys, "parity-check", "--preset", "lin2007", "--r", "0.035,0.0", "--iterations", "100000")
        rows = read_csv(out)
        assert code == EXIT_OK and rows[0] == list(cli.PARITY_COLUMNS)
        assert all(r[-1] == "true" for r in rows[1:])

    def test_shift_fails(self, capsys):
        code, _, _ = run(capsys, "parity-check", "--preset", "lin2007", "--g-shift", "1e-3")
        assert code == EXIT_PARITY

    def test_zero_volatility_config(self, capsys, tmp_path):
        cfg = tmp_path / "flat.cfg"
        cfg.write_text("model = bs\nq0 = 0.0115\nbase = 0.008453\nsigma = 0\nr = 0.01\n")
        code, out, _ = run(capsys, "parity-check", "--config", str(cfg), "--iterations", "1000", "--format", "json")
        row = json.loads(out)["rows"][0]
        # zero in exact arithmetic; G and the payoffs round differently at the last ulp
        assert code == EXIT_OK
        assert abs(row["deviation"]) < 1e-13 and row["std_error"] < 1e-15


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "catbond_bounds", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("catbond ")
