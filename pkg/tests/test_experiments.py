import csv
import hashlib
import json
import math
import os

import numpy as np
import pytest

from irs_sense.channel import BS_IRS, path_loss
from irs_sense.experiments import (
    ConfigError,
    ScenarioConfig,
    load_config,
    run_sweep,
    save_config,
)
from irs_sense.experiments.cli import cli_main
from irs_sense.experiments.figures import figure_recipe, reproduce_figure
from irs_sense.experiments.svg import line_chart, nice_ticks
from irs_sense.experiments.sweep import (
    CSV_COLUMNS,
    METRIC_CRB,
    METRIC_CRB_APPROX,
    METRIC_SNR,
    SweepRow,
    aggregate,
    cell_seed,
    read_csv,
    resolve_threads,
    run_cell,
)
from irs_sense.metrics import FULLY, SEMI

SMALL = dict(n_list=[6, 8], trials=3, backend="CoordinateAscent", record_wall_time=False)


class TestConfig:
    def test_json_round_trip(self, tmp_path):
        cfg = ScenarioConfig(channel="Rician", k_factor=2.0, schemes=["JointBf", "TransmitOnly"], n_list=[4, 9])
        path = tmp_path / "c.json"
        save_config(cfg, str(path))
        assert load_config(str(path)) == cfg

    def test_scheme_alias(self):
        assert ScenarioConfig.from_dict({"scheme": "NoOptimization"}).schemes == ["NoOptimization"]

    @pytest.mark.parametrize("bad", [
        {"n_list": [10, 10]},
        {"n_list": []},
        {"trials": 0},
        {"channel": "Nakagami"},
        {"schemes": ["JointBf", "JointBf"]},
        {"schemes": ["Magic"]},
        {"objective": "Throughput"},
        {"objective": "Crb", "channel": "LoS"},
        {"backend": "Gurobi"},
        {"p_fa": 1.5},
        {"power_budget_dbm": math.inf},
        {"irs_pos": [0.0, 0.0]},
        {"colour": "red"},
    ])
    def test_rejects(self, bad):
        with pytest.raises(ConfigError):
            ScenarioConfig.from_dict(bad)

    def test_load_errors(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ConfigError):
            load_config(str(p))
        p.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            load_config(str(p))


class TestSeeding:
    def test_cell_seed_independent_of_schedule(self):
        seeds = {cell_seed(7, n, t) for n in (4, 8) for t in range(50)}
        assert len(seeds) == 100
        assert cell_seed(7, 4, 3) == cell_seed(7, 4, 3)
        assert cell_seed(7, 4, 3) != cell_seed(8, 4, 3)

    def test_threads_resolution(self, monkeypatch):
        monkeypatch.delenv("IRS_SENSE_THREADS", raising=False)
        assert resolve_threads() == 1
        monkeypatch.setenv("IRS_SENSE_THREADS", "3")
        assert resolve_threads() == 3
        assert resolve_threads(2) == 2
        monkeypatch.setenv("IRS_SENSE_THREADS", "many")
        with pytest.raises(ValueError):
            resolve_threads()
        with pytest.raises(ValueError):
            resolve_threads(0)


class TestSweep:
    def test_byte_identical_reruns(self):
        cfg = ScenarioConfig(schemes=["JointBf", "NoOptimization", "TransmitOnly"], **SMALL)
        a, b = run_sweep(cfg).to_csv(), run_sweep(cfg).to_csv()
        assert hashlib.sha256(a.encode()).hexdigest() == hashlib.sha256(b.encode()).hexdigest()

    def test_parallel_matches_serial(self):
        cfg = ScenarioConfig(schemes=["JointBf", "ReflectiveOnly"], objective="Crb", **SMALL)
        serial, par = run_sweep(cfg, threads=1), run_sweep(cfg, threads=2)
        assert serial.to_csv() == par.to_csv()
        assert serial.aggregates == par.aggregates

    def test_aggregate_against_serial_recompute(self):
        cfg = ScenarioConfig(schemes=["JointBf", "TransmitOnly"], objective="Crb", **SMALL)
        res = run_sweep(cfg)
        for agg in res.aggregates:
            vals = [r.value_db for r in res.rows
                    if (r.n, r.arch, r.scheme, r.metric) == (agg.n, agg.arch, agg.scheme, agg.metric)]
            assert len(vals) == agg.trials == 3
            lin = sum(10 ** (v / 10) for v in vals) / len(vals)
            assert agg.mean_db == pytest.approx(10 * math.log10(lin), abs=1e-12)
            assert agg.std_db == pytest.approx(float(np.std(vals, ddof=1)), abs=1e-12)
        metrics = {r.metric for r in res.rows}
        assert metrics == {METRIC_CRB, METRIC_CRB_APPROX}

    def test_los_gap_matches_closed_forms(self):
        ns = [8, 16, 32, 64]
        cfg = ScenarioConfig(channel="LoS", trials=1, n_list=ns, backend="CoordinateAscent", record_wall_time=False)
        res = run_sweep(cfg)
        l_d = path_loss(cfg.scenario().d_bi, cfg.path_loss_model(), BS_IRS)
        fully, semi = dict(res.series(FULLY, "JointBf", METRIC_SNR)), dict(res.series(SEMI, "JointBf", METRIC_SNR))
        for n in ns:
            # SNR1*/SNR2* = L N^2 for the optimal LoS designs
            assert fully[n] - semi[n] == pytest.approx(10 * math.log10(l_d * n * n), abs=1e-5)

    def test_failed_rows_keep_status(self, monkeypatch):
        from irs_sense.experiments import sweep

        def broken(*a, **k):
            raise ArithmeticError("boom")

        monkeypatch.setattr(sweep, "_design", broken)
        cfg = ScenarioConfig(n_list=[4], trials=1, record_wall_time=False)
        rows = run_cell(cfg, 4, 0)
        assert rows and all(r.status == "ArithmeticError" and math.isnan(r.value_db) for r in rows)
        assert aggregate(rows) == []

    def test_csv_round_trip(self, tmp_path):
        cfg = ScenarioConfig(**SMALL)
        res = run_sweep(cfg)
        text = res.to_csv()
        assert text.splitlines()[0] == "schema=1"
        assert tuple(text.splitlines()[1].split(",")) == CSV_COLUMNS
        path = tmp_path / "rows.csv"
        path.write_text(text)
        assert read_csv(str(path)) == res.rows
        path.write_text("schema=2\n" + "\n".join(text.splitlines()[1:]))
        with pytest.raises(ValueError):
            read_csv(str(path))

    def test_wall_time_recorded(self):
        cfg = ScenarioConfig(n_list=[4], trials=1, backend="CoordinateAscent")
        assert all(r.wall_time_ms > 0 for r in run_sweep(cfg).rows)

    def test_detection_rows(self):
        cfg = ScenarioConfig(objective="Detection", power_budget_dbm=-20.0, **SMALL)
        rows = run_sweep(cfg).rows
        assert all(0.0 < r.linear <= 1.0 for r in rows)


class TestSvg:
    def test_ticks(self):
        assert nice_ticks(0, 100) == [0, 20, 40, 60, 80, 100]
        assert nice_ticks(math.nan, 1) == []

    def test_chart(self):
        svg = line_chart({"a": [(1, 1.0), (2, math.nan), (3, 2.0), (4, 3.0)], "b<&>": [(1, 0.5)]}, "t", "x", "y")
        assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
        # the non-finite point splits series a into two polylines
        assert svg.count("<polyline") == 3
        assert "b&lt;&amp;&gt;" in svg


class TestFigures:
    def test_recipe_grids(self):
        assert figure_recipe("fig4").parts[0][1].n_list == list(range(10, 101))
        assert figure_recipe("Fig7").parts[0][1].trials == 20
        assert [p for p, _ in figure_recipe("Fig3").parts] == ["LoS", "Rician", "Rayleigh"]
        with pytest.raises(ValueError):
            figure_recipe("Fig9")

    def test_reproduce_fig3_small(self, tmp_path):
        paths = reproduce_figure("Fig3", str(tmp_path), trials=2, n_list=[6, 8])
        assert set(os.listdir(tmp_path)) == {"Fig3.csv", "Fig3.svg", "Fig3.meta.json"}
        rows = read_csv(paths["csv"])
        schemes = {r.scheme for r in rows}
        assert schemes == {"JointBf@LoS", "JointBf@Rician", "JointBf@Rayleigh"}
        svg = open(paths["svg"]).read()
        # one fully/semi pair per channel model
        assert svg.count("<polyline") == 6
        meta = json.load(open(paths["meta"]))
        assert meta["failed_rows"] == 0 and meta["rows"] == len(rows)


class TestCli:
    def test_thresholds(self, capsys, tmp_path):
        p = tmp_path / "reference.json"
        save_config(ScenarioConfig(), str(p))
        assert cli_main(["thresholds", "--config", str(p)]) == 0
        out = capsys.readouterr().out
        assert "46.3" in out and "first integer 47" in out and "231.7" in out

    def test_usage_errors(self, capsys):
        assert cli_main(["thresholds", "--bogus"]) == 1
        assert cli_main([]) == 1
        assert cli_main(["reproduce", "--fig", "fig9"]) == 1
        assert "usage" in capsys.readouterr().err

    def test_validation_errors(self, tmp_path):
        assert cli_main(["crb-sweep", "--channel", "LoS", "--n", "4", "6", "--trials", "1"]) == 1
        assert cli_main(["thresholds", "--config", str(tmp_path / "missing.json")]) == 1
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"n_list": [5, 3]}))
        assert cli_main(["snr-sweep", "--config", str(bad)]) == 1

    def test_snr_sweep_outputs(self, tmp_path, capsys):
        code = cli_main(["snr-sweep", "--n", "4", "6", "--trials", "2", "--backend", "CoordinateAscent",
                         "--scheme", "JointBf", "NoOptimization", "--out", str(tmp_path)])
        assert code == 0
        assert sorted(os.listdir(tmp_path)) == ["sweep.agg.csv", "sweep.csv", "sweep.svg"]
        assert "fully-passive wins from N" in capsys.readouterr().out

    def test_numerical_failure_exit(self, tmp_path, monkeypatch):
        from irs_sense.experiments import sweep

        def broken(*a, **k):
            raise ArithmeticError("boom")

        monkeypatch.setattr(sweep, "_design", broken)
        assert cli_main(["snr-sweep", "--n", "4", "6", "--trials", "1", "--out", str(tmp_path)]) == 2

    def test_reproduce(self, tmp_path):
        code = cli_main(["reproduce", "--fig", "fig2", "--trials", "1", "--out", str(tmp_path)])
        assert code == 0
        assert sorted(os.listdir(tmp_path)) == ["Fig2.csv", "Fig2.meta.json", "Fig2.svg"]

    def test_selftest(self, capsys):
        assert cli_main(["selftest"]) == 0
        assert "checks passed" in capsys.readouterr().out
