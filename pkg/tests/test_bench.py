import json
import math
import os

import numpy as np
import pytest

from adadiff.bench.config import (
    PRESETS,
    ExperimentConfig,
    Preset,
    build_problem,
    initial_point,
    parse_eta_grid,
    parse_policies,
    parse_seeds,
    read_config_file,
)
from adadiff.bench.report import (
    ReportKind,
    aggregate_traces,
    read_csv,
    report,
    report_from_dir,
    write_sweep,
    write_trace_csv,
)
from adadiff.bench.sweep import fstar_protocol, grid_items, run_items, sweep
from adadiff.exceptions import ConfigurationError, EstimationError
from adadiff.metrics import PolicyKind
from adadiff.problems import Problem, Zero
from adadiff.solver import SolverConfig, run


def small(**kw):
    base = dict(preset="logreg-l1", data="synthetic", N=120, d=8, nnz=3, budget=60,
                eta_grid=(1e-2, 10.0, 4), seeds=(0, 1))
    base.update(kw)
    return ExperimentConfig(**base)


def quadratic(dim):
    return Problem(lambda x: (0.5 * float(x @ x), x.copy()), Zero(), dim, smooth=True)


class TestConfig:
    def test_parsers(self):
        assert parse_seeds("0-3") == (0, 1, 2, 3)
        assert parse_seeds("0-2,7") == (0, 1, 2, 7)
        assert parse_policies("both") == (PolicyKind.ADAGRAD, PolicyKind.ADAGRAD_DIFF)
        assert parse_policies("adagrad-diff") == (PolicyKind.ADAGRAD_DIFF,)
        assert parse_eta_grid("1e-3, 1, 5") == (1e-3, 1.0, 5)

    @pytest.mark.parametrize("bad", ["", "3-1", "-1"])
    def test_bad_seeds(self, bad):
        with pytest.raises((ConfigurationError, ValueError)):
            parse_seeds(bad)

    @pytest.mark.parametrize("bad", ["1,0.1,5", "0,1,5", "1e-3,1,0", "1,2"])
    def test_bad_grid(self, bad):
        with pytest.raises(ConfigurationError):
            parse_eta_grid(bad)

    def test_grid_is_log_spaced(self):
        etas = ExperimentConfig(preset="hinge", eta_grid="1e-5,1e2,200").etas()
        assert etas.size == 200
        assert etas[0] == pytest.approx(1e-5) and etas[-1] == pytest.approx(1e2)
        np.testing.assert_allclose(np.diff(np.log10(etas)), 7 / 199, rtol=1e-10)

    def test_defaults(self):
        cfg = ExperimentConfig(preset="hinge")
        assert cfg.eta_grid == (1e-5, 1e2, 200)
        assert cfg.seeds == tuple(range(10))
        assert cfg.effective_budget == 1000 and cfg.effective_lam == 1e-2

    def test_paper_reference_etas(self):
        assert PRESETS[Preset.LOGREG_L1].reference_etas == (0.0238, 0.238, 2.38)
        assert PRESETS[Preset.HINGE_SYNTH].reference_etas == (0.0063, 0.063, 0.63)
        assert PRESETS[Preset.LAD_SYNTH].reference_etas == (0.0042, 0.042, 0.42)
        assert PRESETS[Preset.LOGREG_L2].reference_etas == (0.0863, 0.863, 8.63)
        assert PRESETS[Preset.SVM_DUAL].reference_etas == (0.0002, 0.002, 0.02)

    def test_paper_parameters(self):
        assert PRESETS[Preset.HINGE_SYNTH].N == 500 and PRESETS[Preset.HINGE_SYNTH].d == 100
        assert PRESETS[Preset.LOGREG_L2].sigma == 1e-4
        assert PRESETS[Preset.LOGREG_L1].lam == 1e-2
        assert (PRESETS[Preset.LOGREG_L1].N, PRESETS[Preset.LOGREG_L1].d) == (2175, 60)
        svm = PRESETS[Preset.SVM_DUAL]
        assert (svm.lam, svm.width, svm.budget, svm.N) == (1e-3, 1.0, 20, 300)

    def test_preset_aliases(self):
        assert Preset.parse("splice") is Preset.LOGREG_L1
        assert Preset.parse("news20") is Preset.LOGREG_L2
        assert Preset.parse("2moons") is Preset.SVM_DUAL
        with pytest.raises(ConfigurationError):
            Preset.parse("mnist")

    def test_file_needed(self):
        with pytest.raises(ConfigurationError):
            build_problem(ExperimentConfig(preset="logreg-l2"))

    def test_config_file(self, tmp_path):
        path = tmp_path / "exp.cfg"
        path.write_text("# sweep\npreset = splice\neta-grid = 0.1, 1, 3\nseeds=0-1\npolicy = adagrad\n")
        values = read_config_file(path)
        cfg = ExperimentConfig(**values)
        assert cfg.preset is Preset.LOGREG_L1 and cfg.seeds == (0, 1)
        assert cfg.policies == (PolicyKind.ADAGRAD,)
        path.write_text("colour = red\n")
        with pytest.raises(ConfigurationError):
            read_config_file(path)

    def test_svm_start_is_feasible(self):
        cfg = ExperimentConfig(preset="svm-dual", N=40)
        p = build_problem(cfg)
        for seed in range(5):
            assert math.isfinite(p.F(initial_point(cfg, p, seed)))


class TestSweep:
    def test_single_point_counts(self):
        cfg = small(eta_grid=(0.1, 0.1, 1), seeds=(0,))
        records = run_items(cfg, grid_items(cfg))
        assert len(records) == len(cfg.policies)
        cfg = small(eta_grid=(0.1, 0.1, 1), seeds=(0,), policies="adagrad")
        assert len(run_items(cfg, grid_items(cfg))) == 1

    def test_full_counts_and_panels(self):
        cfg = small()
        res = sweep(cfg)
        assert len(res.records) == 2 * 4 * 2
        ref = np.mean(list(res.best_eta.values()))
        assert res.reference_eta == ref
        assert res.panel_etas == (0.1 * ref, ref, 10.0 * ref)
        assert len(res.panel_records) == 2 * 3 * 2
        assert all(r.trace is not None for r in res.panel_records)

    def test_paper_panels(self):
        res = sweep(small(panels="paper", eta_grid=(0.1, 1.0, 2), seeds=(0,)))
        assert res.panel_etas == (0.0238, 0.238, 2.38)

    def test_threads_do_not_change_results(self, tmp_path):
        a = sweep(small(threads=1))
        b = sweep(small(threads=3))
        write_sweep(a, str(tmp_path / "a"), plot=False)
        write_sweep(b, str(tmp_path / "b"), plot=False)
        for name in ("runs.csv", "gap_vs_eta.csv", "gap_vs_iter.csv", "stepsize_vs_iter.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_failed_runs_are_recorded(self):
        def oracle(x):
            if np.max(np.abs(x)) > 100:
                return float("nan"), x
            return 0.5 * float(x @ x), x.copy()

        problem = Problem(oracle, Zero(), 3, smooth=True)
        cfg = small(policies="adagrad-diff", seeds=(0,))
        recs = run_items(cfg, [("adagrad-diff", 1e4, 0), ("adagrad-diff", 0.1, 0)], problem=problem)
        bad, good = recs[1], recs[0]
        assert bad.eta == 1e4 and not bad.ok and "non-finite" in bad.message
        assert good.ok


class TestFstar:
    def test_quadratic_minimum(self):
        cfg = small(seeds=(0, 1), eta_grid=(0.01, 1.0, 3), budget=200)
        est = fstar_protocol(cfg, problem=quadratic(5))
        assert 0.0 <= est.value <= 1e-8

    def test_single_config(self):
        cfg = small(eta_grid=(0.3, 0.3, 1), seeds=(0,), policies="adagrad-diff", budget=40)
        problem = build_problem(cfg)
        records = run_items(cfg, grid_items(cfg), problem=problem)
        est = fstar_protocol(cfg, records, problem=problem)
        x1 = initial_point(cfg, problem, 0)
        long = run(problem, SolverConfig(eta=0.3, budget=400, policy="adagrad-diff"), x1)
        assert est.value == min(records[0].best_objective, long.best_objective())
        assert est.refined_min == long.best_objective()

    def test_monotone_pool(self):
        cfg = small(budget=40)
        problem = build_problem(cfg)
        records = run_items(cfg, grid_items(cfg), problem=problem)
        rng = np.random.default_rng(0)
        for _ in range(10):
            mask = rng.random(len(records)) < 0.5
            mask[0] = True
            subset = [r for r, m in zip(records, mask) if m]
            sub = fstar_protocol(cfg, subset, problem=problem)
            full = fstar_protocol(cfg, records, problem=problem)
            assert full.pool_min <= sub.pool_min
            assert full.value <= sub.pool_min

    def test_no_finite_values(self):
        problem = Problem(lambda x: (float("nan"), x), Zero(), 2, smooth=True)
        cfg = small(eta_grid=(0.1, 0.1, 1), seeds=(0,))
        records = run_items(cfg, grid_items(cfg), problem=problem)
        with pytest.raises(EstimationError):
            fstar_protocol(cfg, records, problem=problem)


@pytest.fixture(scope="module")
def swept(tmp_path_factory):
    out = tmp_path_factory.mktemp("sweep")
    res = sweep(small())
    paths = write_sweep(res, str(out))
    return res, str(out), paths


class TestReport:
    def test_schema_headers(self, swept):
        _, out, paths = swept
        for p in paths:
            if p.endswith(".csv"):
                kind, rows = read_csv(p)
                assert rows
        with open(os.path.join(out, "gap_vs_eta.csv")) as fh:
            assert fh.readline() == "# adadiff-csv gap_vs_eta v1\n"

    def test_svg_self_contained(self, swept):
        _, out, _ = swept
        for name in ("gap_vs_eta.svg", "gap_vs_iter.svg", "stepsize_vs_iter.svg"):
            text = open(os.path.join(out, name)).read()
            assert text.lstrip().startswith("<?xml") and "<svg" in text
            assert "<image" not in text and 'href="http' not in text

    def test_gap_vs_eta_rows(self, swept):
        res, out, _ = swept
        _, rows = read_csv(os.path.join(out, "gap_vs_eta.csv"))
        for policy in ("adagrad", "adagrad-diff"):
            assert sum(r["policy"] == policy for r in rows) == res.config.eta_grid[2]

    def test_single_fstar_everywhere(self, swept):
        res, out, _ = swept
        _, runs = read_csv(os.path.join(out, "runs.csv"))
        fstar = json.load(open(os.path.join(out, "summary.json")))["fstar"]
        assert fstar == res.fstar.value
        for r in runs:
            assert r["final_gap"] == r["final_avg_objective"] - fstar
            assert r["final_gap"] >= -1e-9

    def test_recompute_from_per_seed_csvs(self, swept):
        res, out, _ = swept
        gaps, steps = {}, {}
        for name in os.listdir(os.path.join(out, "traces")):
            _, rows = read_csv(os.path.join(out, "traces", name))
            policy, rest = name[:-4].split("_eta")
            eta, seed = rest.split("_seed")
            gaps.setdefault((policy, eta), []).append([r["gap"] for r in rows])
            steps.setdefault((policy, eta), []).append([r["mean_stepsize"] for r in rows])
        _, gap_rows = read_csv(os.path.join(out, "gap_vs_iter.csv"))
        _, step_rows = read_csv(os.path.join(out, "stepsize_vs_iter.csv"))
        assert len(gaps) == 6
        for (policy, eta), per_seed in gaps.items():
            g = np.array(per_seed)
            s = np.array(steps[(policy, eta)])
            assert g.shape[0] == len(res.config.seeds)
            mine = [r for r in gap_rows if r["policy"] == policy and f"{r['eta']:.6g}" == eta]
            mine_s = [r for r in step_rows if r["policy"] == policy and f"{r['eta']:.6g}" == eta]
            assert len(mine) == g.shape[1]
            np.testing.assert_allclose([r["mean_gap"] for r in mine], g.mean(axis=0), rtol=1e-12, atol=1e-15)
            np.testing.assert_allclose([r["std_gap"] for r in mine], g.std(axis=0), rtol=1e-9, atol=1e-15)
            np.testing.assert_allclose([r["mean_stepsize"] for r in mine_s], s.mean(axis=0), rtol=1e-12)
            np.testing.assert_allclose([r["std_stepsize"] for r in mine_s], s.std(axis=0), rtol=1e-9, atol=1e-15)

    def test_rebuild_matches(self, swept, tmp_path):
        _, out, _ = swept
        before = {k: open(os.path.join(out, f"{k.value}.csv")).read() for k in ReportKind}
        for kind in ReportKind:
            report_from_dir(out, kind, plot=False)
        after = {k: open(os.path.join(out, f"{k.value}.csv")).read() for k in ReportKind}
        assert before == after

    def test_single_run_trace(self, tmp_path):
        cfg = small()
        problem = build_problem(cfg)
        tr = run(problem, SolverConfig(eta=0.5, budget=25, monitors={"lemma1"}))
        path = write_trace_csv(tr, str(tmp_path / "t.csv"), fstar=0.0)
        kind, rows = read_csv(path)
        assert kind == "trace" and len(rows) == 25
        assert [r["iteration"] for r in rows] == list(range(1, 26))
        assert math.isnan(rows[-1]["lemma1_residual"])

    def test_kind_names(self):
        assert ReportKind.parse("GapVsEta") is ReportKind.GAP_VS_ETA
        assert ReportKind.parse("stepsize-vs-iter") is ReportKind.STEPSIZE_VS_ITER

    def test_aggregate_helper(self):
        t = {("p", 1.0, 0): {"objective": [3.0, 2.0], "avg_objective": [3.0, 2.5], "mean_stepsize": [1.0, 0.5]},
             ("p", 1.0, 1): {"objective": [5.0, 2.0], "avg_objective": [5.0, 3.5], "mean_stepsize": [1.0, 0.25]}}
        gap, step = aggregate_traces(t, fstar=1.0)
        assert gap[0] == ("p", 1.0, 1, 3.0, 1.0, 3.0, 1.0)
        assert step[1] == ("p", 1.0, 2, 0.375, 0.125)

    def test_report_one_kind(self, swept, tmp_path):
        res, _, _ = swept
        paths = report(res, "gap_vs_eta", str(tmp_path), plot=True)
        assert [os.path.basename(p) for p in paths] == ["gap_vs_eta.csv", "gap_vs_eta.svg"]
