import json
import math

import pytest

from relaycap import cli, solver
from relaycap.cli import (
    CSV_HEADER,
    EXIT_CONFIG,
    EXIT_INFEASIBLE,
    EXIT_MC_BUDGET,
    EXIT_OK,
    SweepRow,
    emit_report,
    main,
    parse_range,
    render_csv,
)
from relaycap.config import ConfigError, load_kv, parse_kv_text, save_kv


def run_cli(args, tmp_path, name="out.csv"):
    out = tmp_path / name
    rc = main(args + ["--out", str(out)])
    return rc, out


def read_rows(path):
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    rows = []
    for line in lines[1:]:
        cells = line.split(",")
        rows.append({k: cells[i] for i, k in enumerate(CSV_HEADER)})
    return rows


class TestParseRange:
    def test_single_value(self):
        assert parse_range("3.5") == [3.5]

    def test_linear_inclusive_ends(self):
        vals = parse_range("2:5:0.5")
        assert vals[0] == 2.0 and vals[-1] == pytest.approx(5.0)
        assert len(vals) == 7

    def test_linear_negative(self):
        vals = parse_range("-30:-10:2")
        assert vals[0] == -30.0 and vals[-1] == pytest.approx(-10.0)
        assert len(vals) == 11

    def test_geometric(self):
        vals = parse_range("1e-5:1e-2:x10")
        assert vals == pytest.approx([1e-5, 1e-4, 1e-3, 1e-2])

    @pytest.mark.parametrize("bad", ["1:2", "2:1:0.5", "1:2:-1", "1:2:x0.5", "a:b:c"])
    def test_rejects_malformed(self, bad):
        with pytest.raises((ConfigError, ValueError)):
            parse_range(bad)


class TestEmitReport:
    def test_empty_table_is_header_only(self, tmp_path):
        out = tmp_path / "empty.csv"
        emit_report([], "csv", str(out))
        assert out.read_text() == ",".join(CSV_HEADER) + "\n"

    def test_single_row_two_lines(self, tmp_path):
        out = tmp_path / "one.csv"
        emit_report([SweepRow(param=1.0, analytic=0.5)], "csv", str(out))
        lines = out.read_bytes().split(b"\n")
        assert len(lines) == 3 and lines[-1] == b""
        assert b"\r" not in out.read_bytes()

    def test_round_trip_at_12_digits(self):
        row = SweepRow(param=math.pi, analytic=1.0 / 3.0, mc_estimate=2.0 / 7.0,
                       ci_low=0.1234567890123456, ci_high=0.2, trials=77)
        text = render_csv([row])
        cells = text.splitlines()[1].split(",")
        for printed in cells[:5]:
            assert printed == f"{float(printed):.12g}"

    def test_json_mirrors_csv_columns(self, tmp_path):
        rows = [SweepRow(param=2.0, analytic=1.0 / 3.0, mc_estimate=None,
                         ci_low=None, ci_high=None, trials=0)]
        out = tmp_path / "r.json"
        emit_report(rows, "json", str(out))
        data = json.loads(out.read_text())
        assert list(data[0].keys()) == list(CSV_HEADER)
        assert data[0]["mc_estimate"] is None
        assert data[0]["analytic"] == pytest.approx(1.0 / 3.0, rel=1e-11)

    def test_write_failure_has_path_context(self, tmp_path):
        with pytest.raises(RuntimeError, match="no/such/dir"):
            emit_report([], "csv", str(tmp_path / "no" / "such" / "dir" / "x.csv"))


class TestPlacementCommand:
    def test_fig3_values(self, tmp_path):
        rc, out = run_cli(["fig3"], tmp_path)
        assert rc == EXIT_OK
        rows = read_rows(out)
        alphas = [float(r["param"]) for r in rows]
        dists = [float(r["analytic"]) for r in rows]
        assert alphas[0] == 2.0 and alphas[-1] == pytest.approx(5.0)
        assert all(b > a for a, b in zip(dists, dists[1:]))
        assert all(d < 0.5 for d in dists)
        assert dists[0] == pytest.approx(1.0 / 3.0, abs=1e-9)

    def test_numeric_column_cross_checks(self, tmp_path):
        rc, out = run_cli(["placement", "--alpha-range", "2:3:0.5"], tmp_path)
        assert rc == EXIT_OK
        for r in read_rows(out):
            assert float(r["mc_estimate"]) == pytest.approx(float(r["analytic"]), abs=1e-9)

    def test_byte_identical_reruns(self, tmp_path):
        _, out1 = run_cli(["placement", "--alpha-range", "2:4:0.25"], tmp_path, "a.csv")
        _, out2 = run_cli(["placement", "--alpha-range", "2:4:0.25"], tmp_path, "b.csv")
        assert out1.read_bytes() == out2.read_bytes()


class TestDeltaCommand:
    def test_fig4_band(self, tmp_path):
        rc, out = run_cli(["fig4"], tmp_path)
        assert rc == EXIT_OK
        rows = read_rows(out)
        vals = [float(r["analytic"]) for r in rows]
        assert all(0.70710 <= v <= 1.0 for v in vals)
        assert all(a > b for a, b in zip(vals, vals[1:]))

    def test_finite_ratio_tracks_bound(self, tmp_path):
        rc, out = run_cli(["delta", "--dsr-range", "0.2:0.8:0.3", "--alpha", "3",
                           "--epsilon", "1e-5"], tmp_path)
        assert rc == EXIT_OK
        for r in read_rows(out):
            assert float(r["mc_estimate"]) == pytest.approx(float(r["analytic"]), rel=0.02)


class TestOutageCommand:
    def test_deterministic_and_monotone(self, tmp_path):
        args = ["outage", "--snr-db", "-20:-10:5", "--rate", "0.01",
                "--trials", "1e5", "--seed", "7"]
        rc, out1 = run_cli(list(args), tmp_path, "a.csv")
        assert rc == EXIT_OK
        _, out2 = run_cli(list(args), tmp_path, "b.csv")
        assert out1.read_bytes() == out2.read_bytes()
        rows = read_rows(out1)
        # common random numbers make the MC column exactly monotone in gamma
        mc = [float(r["mc_estimate"]) for r in rows]
        analytic_col = [float(r["analytic"]) for r in rows]
        assert mc[0] > mc[1] > mc[2]
        assert analytic_col[0] > analytic_col[1] > analytic_col[2]
        assert all(r["trials"] == "100000" for r in rows)

    def test_mc_brackets_exact_for_csb(self, tmp_path):
        rc, out = run_cli(["outage", "--protocol", "csb", "--snr-db", "-10",
                           "--rate", "0.05", "--trials", "2e5", "--seed", "3"], tmp_path)
        assert rc == EXIT_OK
        r = read_rows(out)[0]
        assert float(r["ci_low"]) <= float(r["analytic"]) <= float(r["ci_high"])

    def test_validity_flag_trips_outside_domain(self, tmp_path):
        rc, out = run_cli(["outage", "--snr-db", "0", "--rate", "0.5",
                           "--trials", "1e4", "--evaluator", "asymptotic"], tmp_path)
        assert rc == EXIT_OK
        assert read_rows(out)[0]["validity"] == "0"


class TestPhasesCommand:
    def test_matches_analytic(self, tmp_path):
        rc, out = run_cli(["phases", "--snr-db", "0", "--rate", "0.4",
                           "--trials", "2e5", "--d-sr", "0.5", "--alpha", "2"], tmp_path)
        assert rc == EXIT_OK
        r = read_rows(out)[0]
        assert float(r["ci_low"]) <= float(r["analytic"]) <= float(r["ci_high"])


class TestCapacityCommand:
    def test_exact_inversion_tracks_closed_form(self, tmp_path):
        rc, out = run_cli(["capacity", "--eps-range", "1e-5:1e-4:x10",
                           "--snr-db", "0"], tmp_path)
        assert rc == EXIT_OK
        for r in read_rows(out):
            assert float(r["mc_estimate"]) == pytest.approx(float(r["analytic"]), rel=0.02)

    def test_csb_protocol(self, tmp_path):
        rc, out = run_cli(["capacity", "--protocol", "csb", "--eps-range", "1e-4",
                           "--snr-db", "0"], tmp_path)
        assert rc == EXIT_OK
        r = read_rows(out)[0]
        assert float(r["mc_estimate"]) == pytest.approx(float(r["analytic"]), rel=0.02)

    def test_mc_budget_exit_code(self, tmp_path):
        rc = main(["capacity", "--eps-range", "1e-5", "--snr-db", "0",
                   "--evaluator", "mc", "--trials", "1e3", "--mc-budget", "4e3",
                   "--out", str(tmp_path / "x.csv")])
        assert rc == EXIT_MC_BUDGET


class TestKRelayCommand:
    def test_outage_bounding_event(self, tmp_path):
        rc, out = run_cli(["krelay", "--sigma-sr", "1,1", "--sigma-rd", "1,1",
                           "--snr-db", "0", "--rate", "0.02", "--trials", "2e5",
                           "--seed", "5"], tmp_path)
        assert rc == EXIT_OK
        rows = read_rows(out)
        assert len(rows) == 1 and rows[0]["validity"] == "1"

    def test_capacity_bounds(self, tmp_path):
        rc, out = run_cli(["krelay", "--sigma-sr", "1,1", "--sigma-rd", "1,1",
                           "--quantity", "capacity", "--eps-range", "1e-5:1e-3:x10"],
                          tmp_path)
        assert rc == EXIT_OK
        vals = [float(r["analytic"]) for r in read_rows(out)]
        assert vals[0] < vals[1] < vals[2]


class TestConfigHandling:
    def test_kv_parse_and_round_trip(self, tmp_path):
        text = "# comment\nrate = 0.05\nsnr-db = -12  # trailing\n\nseed = 9\n"
        kv = parse_kv_text(text)
        assert kv == {"rate": "0.05", "snr-db": "-12", "seed": "9"}
        p = tmp_path / "c.cfg"
        save_kv(kv, p)
        assert load_kv(p) == kv

    def test_malformed_line_rejected(self):
        with pytest.raises(ConfigError, match="line"):
            parse_kv_text("this is not a pair\n", source="line")

    def test_config_supplies_defaults_flags_override(self, tmp_path):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text("snr-db = -10\nrate = 0.01\ntrials = 1e4\nseed = 7\n")
        rc, out1 = run_cli(["outage", "--config", str(cfg)], tmp_path, "a.csv")
        assert rc == EXIT_OK
        rc, out2 = run_cli(["outage", "--config", str(cfg), "--rate", "0.02"],
                           tmp_path, "b.csv")
        assert rc == EXIT_OK
        # higher rate, higher threshold, more outage
        assert float(read_rows(out2)[0]["analytic"]) > float(read_rows(out1)[0]["analytic"])

    def test_missing_config_file_exit_code(self, tmp_path):
        rc = main(["outage", "--snr-db", "0", "--config", str(tmp_path / "nope.cfg"),
                   "--out", str(tmp_path / "x.csv")])
        assert rc == EXIT_CONFIG

    def test_missing_required_sweep_exit_code(self, tmp_path):
        rc = main(["outage", "--out", str(tmp_path / "x.csv")])
        assert rc == EXIT_CONFIG

    def test_bad_flag_exits_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["outage", "--no-such-flag", "1"])
        assert exc.value.code == 2

    def test_infeasible_maps_to_exit_three(self, tmp_path, monkeypatch):
        def boom(*a, **k):
            raise solver.InfeasibleRateError("forced")
        monkeypatch.setattr(cli.solver, "invert_capacity", boom)
        rc = main(["capacity", "--eps-range", "1e-4", "--snr-db", "0",
                   "--out", str(tmp_path / "x.csv")])
        assert rc == EXIT_INFEASIBLE


class TestStdout:
    def test_default_output_is_stdout(self, capsys):
        rc = main(["placement", "--alpha-range", "2"])
        assert rc == EXIT_OK
        outp = capsys.readouterr().out
        assert outp.startswith(",".join(CSV_HEADER))
