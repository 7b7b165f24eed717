import json
import math
import pathlib
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from avgcase import bench
from avgcase.bench import (
    CSV_HEADER,
    Aggregate,
    BenchmarkConfig,
    ConfigError,
    ResultRow,
    aggregate,
    emit_csv,
    emit_svg,
    parse_config,
    read_csv,
    relative_gain,
    run_benchmark,
)
from avgcase.cli import main
from avgcase.rates import xi_gd, xi_opt

GOLDEN = pathlib.Path(__file__).parent / "data" / "golden_disk.csv"
GOLDEN_CONFIG = dict(experiment="disk", d=8, center=2.0, radius=1.0, iters=6, seeds=2,
                     base_seed=5, threads=1)


def _row(seed, t, dist, method="m", diverged=False):
    return ResultRow("e", method, seed, t, dist, t, None, diverged)


class TestConfig:
    def test_defaults_filled(self):
        cfg = parse_config(experiment="bilinear", d1=200, d2=200, iters=100, seeds=10)
        assert cfg.methods == bench.DEFAULT_METHODS["bilinear"]
        assert cfg.sigma2 == 1.0 and cfg.base_seed == 0 and cfg.edges == "empirical"

    def test_radius_constraint_named(self):
        with pytest.raises(ConfigError, match="R < C"):
            parse_config(experiment="disk", center=1.0, radius=1.0)

    @pytest.mark.parametrize("kw", [dict(iters=0), dict(seeds=0), dict(d1=3, d2=2),
                                    dict(methods=["avg_opt_generic"]), dict(edges="x"),
                                    dict(ratios=[1.5]), dict(sigma2=-1.0)])
    def test_field_level_errors(self, kw):
        with pytest.raises(ConfigError):
            parse_config(experiment="bilinear", **kw)

    def test_unknown_keys_rejected(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"experiment": "disk", "radious": 1.0}))
        with pytest.raises(ConfigError, match="radious"):
            parse_config(path)

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"experiment": "disk", "d": 10, "iters": 7}))
        cfg = parse_config(path, iters=9)
        assert (cfg.d, cfg.iters) == (10, 9)

    def test_missing_or_bad_file(self, tmp_path):
        with pytest.raises(ConfigError):
            parse_config(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("[1, 2]")
        with pytest.raises(ConfigError):
            parse_config(bad)

    @settings(max_examples=40, deadline=None)
    @given(d=st.integers(1, 50).map(lambda k: 2 * k), iters=st.integers(1, 500),
           seeds=st.integers(1, 100), center=st.floats(0.5, 10), frac=st.floats(0.01, 0.99),
           mode=st.sampled_from(["normal", "iid"]), svg=st.booleans())
    def test_json_round_trip(self, d, iters, seeds, center, frac, mode, svg):
        cfg = parse_config(experiment="disk", d=d, iters=iters, seeds=seeds, center=center,
                           radius=center * frac, mode=mode, svg=svg)
        again = BenchmarkConfig(**json.loads(bench.dump_config(cfg)))
        assert again == cfg


class TestRun:
    def test_row_count(self):
        cfg = parse_config(experiment="disk", d=4, iters=2, seeds=1, methods=["gd"])
        rows = run_benchmark(cfg)
        assert len(rows) == 3
        assert [r.t for r in rows] == [0, 1, 2]

    def test_rows_sorted_unique_and_predictions_only_where_defined(self):
        cfg = parse_config(experiment="disk", d=8, iters=4, seeds=3,
                           methods=["gd", "avg_opt_generic", "extragradient", "asymp_disk"])
        rows = run_benchmark(cfg)
        keys = [(r.experiment, r.method, r.seed, r.t) for r in rows]
        assert keys == sorted(keys) and len(set(keys)) == len(keys)
        for r in rows:
            assert r.dist >= 0
            if r.method == "extragradient":
                assert r.predicted is None
            elif r.method == "gd":
                assert r.predicted == xi_gd(2, 1, r.t)
            elif r.method == "avg_opt_generic":
                assert r.predicted == xi_opt(2, 1, r.t)

    def test_no_predictions_off_the_theory_step(self):
        cfg = parse_config(experiment="disk", d=8, iters=3, seeds=1, methods=["gd"], gd_step=0.3)
        assert all(r.predicted is None for r in run_benchmark(cfg))

    def test_bilinear_rows_have_no_predictions(self):
        cfg = parse_config(experiment="bilinear", d1=3, d2=5, iters=3, seeds=2)
        rows = run_benchmark(cfg)
        assert all(r.predicted is None for r in rows)
        evals = {r.method: r.field_evals for r in rows if r.t == 3}
        assert evals == {"asymp_bilinear": 6, "avg_opt_bilinear": 6, "extragradient": 6, "gd": 6}

    def test_thread_count_does_not_change_output(self, tmp_path, monkeypatch):
        base = dict(experiment="bilinear", d1=6, d2=8, iters=20, seeds=6, eg_grid=True)
        emit_csv(run_benchmark(parse_config(**base, threads=1)), tmp_path / "a.csv")
        monkeypatch.setenv("BENCH_THREADS", "4")
        emit_csv(run_benchmark(parse_config(**base)), tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_diverged_runs_are_flagged_not_fatal(self):
        cfg = parse_config(experiment="bilinear", d1=4, d2=4, iters=200, seeds=2,
                           methods=["extragradient", "avg_opt_bilinear"], eg_step=5.0)
        rows = run_benchmark(cfg)
        flagged = [r for r in rows if r.diverged]
        assert flagged and all(r.method == "extragradient" for r in flagged)
        assert all(r.dist is None for r in flagged)
        aggs = aggregate(rows)
        assert {a.method: a.diverged for a in aggs} == {"avg_opt_bilinear": 0, "extragradient": 2}

    def test_centered_option_matches_in_exact_arithmetic(self):
        base = dict(experiment="disk", d=8, iters=5, seeds=2, methods=["avg_opt_generic"])
        a = run_benchmark(parse_config(**base))
        b = run_benchmark(parse_config(**base, centered=True))
        np.testing.assert_allclose([r.dist for r in a], [r.dist for r in b], rtol=1e-9)


class TestAggregate:
    def test_identical_rows(self):
        aggs = aggregate([_row(s, 0, 2.5) for s in range(4)])
        assert aggs == [Aggregate("e", "m", 0, 2.5, 0.0, 4, 0, None)]

    def test_hand_checked(self):
        (agg,) = aggregate([_row(0, 0, 1.0), _row(1, 0, 2.0), _row(2, 0, 4.0)])
        assert agg.mean == pytest.approx(7 / 3)
        assert agg.stderr == pytest.approx(math.sqrt(7) / 3)

    def test_all_diverged(self):
        rows = [_row(0, 0, 1.0), _row(0, 1, None, diverged=True),
                _row(1, 0, 1.0), _row(1, 1, None, diverged=True)]
        aggs = aggregate(rows)
        assert len(aggs) == 1
        assert aggs[0].mean is None and aggs[0].n == 0 and aggs[0].diverged == 2

    def test_partial_divergence_excludes_whole_run(self):
        rows = [_row(0, 0, 1.0), _row(0, 1, 0.5), _row(1, 0, 3.0),
                _row(1, 1, None, diverged=True)]
        by_t = {a.t: a for a in aggregate(rows)}
        assert by_t[0].mean == 1.0 and by_t[0].diverged == 1

    def test_empty(self):
        assert aggregate([]) == []

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(0, 1e6), min_size=2, max_size=20), st.randoms())
    def test_order_independent(self, values, rnd):
        rows = [_row(i, 0, v) for i, v in enumerate(values)]
        shuffled = rows[:]
        rnd.shuffle(shuffled)
        assert aggregate(rows) == aggregate(shuffled)

    def test_relative_gain(self):
        aggs = [Aggregate("e", "a", t, 1.0, 0, 1, 0) for t in range(12)]
        aggs += [Aggregate("e", "b", t, 3.0, 0, 1, 0) for t in range(12)]
        assert relative_gain(aggs, "e", "b", method="a") == 3.0
        with pytest.raises(ValueError):
            relative_gain(aggs, "e", "c", method="a")


class TestOutput:
    def test_empty_csv(self, tmp_path):
        emit_csv([], tmp_path / "e.csv")
        assert (tmp_path / "e.csv").read_text() == ",".join(CSV_HEADER) + "\n"

    def test_round_trip(self, tmp_path):
        cfg = parse_config(experiment="disk", d=6, iters=3, seeds=2)
        rows = run_benchmark(cfg)
        emit_csv(rows, tmp_path / "r.csv")
        assert read_csv(tmp_path / "r.csv") == rows

    def test_golden_file(self, tmp_path):
        rows = run_benchmark(parse_config(**GOLDEN_CONFIG))
        emit_csv(rows, tmp_path / "g.csv")
        assert (tmp_path / "g.csv").read_text() == GOLDEN.read_text()

    def test_unwritable_path(self, tmp_path):
        with pytest.raises(OSError):
            emit_csv([], tmp_path / "missing" / "x.csv")

    def test_svg_is_well_formed(self, tmp_path):
        cfg = parse_config(experiment="disk", d=8, iters=5, seeds=2)
        emit_svg(aggregate(run_benchmark(cfg)), tmp_path / "p.svg")
        root = ET.parse(tmp_path / "p.svg").getroot()
        ns = "{http://www.w3.org/2000/svg}"
        lines = root.findall(f"{ns}polyline")
        assert len(lines) == 6  # three methods plus three theory curves
        assert sum("stroke-dasharray" in p.attrib for p in lines) == 3
        assert not root.findall(f".//{ns}image")

    def test_svg_one_panel_per_experiment(self, tmp_path):
        cfg = parse_config(experiment="bilinear", d2=8, ratios=[0.5, 1.0], iters=5, seeds=1)
        emit_svg(aggregate(run_benchmark(cfg)), tmp_path / "p.svg")
        root = ET.parse(tmp_path / "p.svg").getroot()
        ns = "{http://www.w3.org/2000/svg}"
        titles = [t.text for t in root.findall(f"{ns}text")]
        assert "bilinear_r0.5" in titles and "bilinear_r1" in titles


class TestCli:
    def test_bench_writes_outputs(self, tmp_path, capsys):
        prefix = tmp_path / "run"
        code = main(["bench", "disk", "--d", "8", "--iters", "4", "--seeds", "2",
                     "--out", str(prefix), "--svg"])
        assert code == 0
        assert (tmp_path / "run.csv").exists() and (tmp_path / "run.svg").exists()
        assert "avg_opt_generic" in capsys.readouterr().out

    def test_config_error_exit_code(self, capsys):
        assert main(["bench", "disk", "--center", "1", "--radius", "2"]) == 2
        assert "R < C" in capsys.readouterr().err

    def test_argparse_errors_exit_two(self):
        with pytest.raises(SystemExit) as exc:
            main(["bench", "disk", "--iters", "many"])
        assert exc.value.code == 2

    def test_strict_divergence_exit_code(self, tmp_path):
        args = ["bench", "bilinear", "--d1", "4", "--d2", "4", "--iters", "200", "--seeds", "1",
                "--methods", "extragradient", "--eg-step", "5", "--out", str(tmp_path / "d")]
        assert main(args) == 0
        assert main(args + ["--strict"]) == 3

    def test_config_file_and_dump(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"experiment": "disk", "d": 12, "iters": 3}))
        assert main(["bench", "disk", "--config", str(path), "--seeds", "4",
                     "--dump-config"]) == 0
        dumped = json.loads(capsys.readouterr().out)
        assert (dumped["d"], dumped["iters"], dumped["seeds"]) == (12, 3, 4)

    def test_sweep_flag(self, capsys):
        assert main(["bench", "bilinear", "--sweep", "--dump-config"]) == 0
        assert json.loads(capsys.readouterr().out)["ratios"] == list(bench.DEFAULT_RATIOS)

    def test_coefficient_tables(self, tmp_path, capsys):
        assert main(["coeffs", "mp", "--r", "1", "--horizon", "2"]) == 0
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "t,delta,h,m" and out[2] == "1,-0.5,0.5,0"
        path = tmp_path / "d.csv"
        assert main(["coeffs", "disk", "--horizon", "2", "--out", str(path)]) == 0
        assert path.read_text().splitlines()[1:] == ["0,,,1,0", "1,1,-0.5,7.9999999999999982,1",
                                                     "2,1,-0.5,47.999999999999986,8.9999999999999982"]
        assert main(["coeffs", "mp", "--r", "2"]) == 2
        assert main(["coeffs", "disk", "-C", "1", "-R", "1"]) == 2

    def test_rates_table(self, capsys):
        assert main(["rates", "disk", "--iters", "2"]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) == 1 + 3 * 3
        opt = [float(line.split(",")[4]) for line in lines[1:4]]
        np.testing.assert_allclose(opt, [1, 1 / 9, 1 / 57], rtol=1e-14)
        assert main(["rates", "disk", "-C", "1", "-R", "2"]) == 2
