import math

import numpy as np
import pytest

from adadiff.data import SyntheticSpec, gen_synthetic
from adadiff.exceptions import ConfigurationError, DivergenceError
from adadiff.metrics import PolicyKind
from adadiff.problems import Box, Problem, Zero, hinge_problem, logistic_problem
from adadiff.solver import (
    IterationSnapshot,
    Monitor,
    SolverConfig,
    monitor_fejer,
    monitor_lemma1,
    monitored_min,
    run,
    summability_report,
)

from oracles import adagrad_replay

BOTH = list(PolicyKind)


def quadratic(dim=1):
    return Problem(lambda x: (0.5 * float(x @ x), x.copy()), Zero(), dim, smooth=True, name="quad")


def linear(c):
    c = np.asarray(c, dtype=np.float64)
    return Problem(lambda x: (float(c @ x), c.copy()), Zero(), c.size, smooth=True, name="linear")


@pytest.fixture(scope="module")
def logreg():
    data, _ = gen_synthetic(SyntheticSpec(N=100, d=8, nnz=4, seed=3))
    return logistic_problem(data, sigma=1e-3)


class TestHandExample:
    """``f = x^2 / 2`` from ``x = 1`` with ``eta = 1`` and ``eps = 0``, three steps."""

    def trace(self, **kw):
        cfg = SolverConfig(eta=1.0, budget=3, policy=PolicyKind.ADAGRAD_DIFF, eps=0.0,
                           record_iterates=True, **kw)
        return run(quadratic(), cfg, np.array([1.0]))

    def test_iterates_and_weights(self):
        tr = self.trace()
        assert tr.iterates.ravel().tolist() == [1.0, 0.0, 0.0, 0.0]
        assert tr.weights_final[0] == math.sqrt(2.0)
        # mean effective stepsize eta / w^n for n = 1, 2, 3
        np.testing.assert_allclose(tr.mean_stepsize, [1.0, 1 / math.sqrt(2), 1 / math.sqrt(2)], rtol=1e-15)

    def test_diff_sq_and_summability(self):
        tr = self.trace()
        assert tr.diff_sq.tolist() == [1.0, 1.0, 0.0]
        total, tail = summability_report(tr)
        assert total == 2.0 and tail == 0.0

    def test_lemma1(self):
        tr = self.trace(monitors={Monitor.LEMMA1}, reference_point=np.array([0.0]))
        assert tr.lemma1_residual.tolist() == [2.0, 0.0]
        assert tr.monitor_steps.tolist() == [1, 2]

    def test_fejer(self):
        tr = self.trace(monitors={"fejer"}, reference_point=np.array([0.0]))
        np.testing.assert_allclose(tr.fejer_residual, [1.0 + math.sqrt(2.0), 0.0], rtol=1e-15)

    def test_objectives(self):
        tr = self.trace()
        assert tr.objective.tolist() == [0.5, 0.0, 0.0]
        assert tr.final_objective == 0.0 and tr.final_avg_objective == 0.0


class TestMonitorsDirect:
    def test_stationary_lemma1(self):
        x = np.array([0.3, -0.2])
        g = np.array([0.0, 0.0])
        w = np.array([1.0, 2.0])
        a = IterationSnapshot(x, g, w, 1.0)
        assert monitor_lemma1(a, a, x, 1.0, 0.5) == 0.0

    def test_fixed_point_fejer(self):
        x = np.array([1.0, 2.0])
        a = IterationSnapshot(x, np.zeros(2), np.ones(2), 0.0)
        assert monitor_fejer(a, a, x, 1.0) == 0.0

    def test_stationary_run(self):
        cfg = SolverConfig(eta=0.5, budget=20, monitors={"lemma1"})
        tr = run(quadratic(3), cfg, np.zeros(3))
        assert np.all(tr.lemma1_residual == 0.0)

    def test_monitored_min_skips_gaps(self):
        assert monitored_min(np.array([np.nan, 3.0, 1.0])) == 1.0
        assert math.isnan(monitored_min(None))


class TestRun:
    def test_lengths(self, logreg):
        cfg = SolverConfig(eta=1.0, budget=17, monitors={"lemma1"})
        tr = run(logreg, cfg)
        assert tr.objective.size == tr.avg_objective.size == tr.mean_stepsize.size == tr.diff_sq.size == 17
        assert tr.lemma1_residual.size == 16 and tr.fejer_residual is None
        assert tr.iterations == 17

    def test_degenerate_box_keeps_start(self, logreg):
        x1 = np.linspace(-1, 1, logreg.dim)
        boxed = Problem(logreg.f_oracle, Box(x1, x1), logreg.dim, smooth=True)
        tr = run(boxed, SolverConfig(eta=3.0, budget=50, record_iterates=True), x1)
        assert np.all(tr.iterates == x1)
        np.testing.assert_allclose(tr.x_avg_final, x1, rtol=0, atol=1e-15)

    def test_adagrad_replay(self, logreg):
        x1 = np.random.default_rng(0).uniform(-1, 1, logreg.dim)
        cfg = SolverConfig(eta=0.7, budget=300, policy="adagrad", eps=1e-8, record_iterates=True)
        tr = run(logreg, cfg, x1)
        ref = adagrad_replay(lambda x: logreg.f_oracle(x)[1], x1, 0.7, 1e-8, 300)
        assert np.max(np.abs(tr.iterates - ref)) <= 1e-12

    @pytest.mark.parametrize("policy", BOTH)
    def test_averaging(self, policy, logreg):
        cfg = SolverConfig(eta=1.0, budget=60, policy=policy, record_iterates=True)
        tr = run(logreg, cfg)
        xs = tr.iterates
        np.testing.assert_allclose(tr.x_avg_final, xs[1:].mean(axis=0), rtol=0, atol=1e-12)
        for n in (2, 10, 60):
            assert tr.avg_objective[n - 1] == pytest.approx(logreg.F(xs[1:n].mean(axis=0)), rel=1e-12)

    @pytest.mark.parametrize("policy", BOTH)
    def test_stepsizes_nonincreasing(self, policy, logreg):
        tr = run(logreg, SolverConfig(eta=2.0, budget=200, policy=policy))
        assert np.all(np.diff(tr.mean_stepsize) <= 0)

    @pytest.mark.parametrize("policy", BOTH)
    def test_deterministic(self, policy, logreg):
        cfg = SolverConfig(eta=1.0, budget=100, policy=policy, monitors={"lemma1"})
        assert run(logreg, cfg).to_bytes() == run(logreg, cfg).to_bytes()

    def test_linear_objective_stability(self):
        c = np.array([1.0, -0.5, 2.0])
        problem = linear(c)
        moves, steps = {}, {}
        for policy in BOTH:
            tr = run(problem, SolverConfig(eta=0.1, budget=30, policy=policy, record_iterates=True))
            moves[policy] = np.diff(tr.iterates, axis=0)
            steps[policy] = np.linalg.norm(moves[policy], axis=1)
        diff = steps[PolicyKind.ADAGRAD_DIFF]
        assert np.max(np.abs(diff[1:] - diff[1])) <= 1e-12
        # weights freeze at eps + |c_i|
        expected = -0.1 * c / (1e-8 + np.abs(c))
        np.testing.assert_allclose(moves[PolicyKind.ADAGRAD_DIFF], np.tile(expected, (30, 1)), rtol=0, atol=1e-12)
        assert np.all(np.diff(steps[PolicyKind.ADAGRAD][1:]) < 0)

    def test_constant_gradient_summability(self):
        c = np.array([3.0, 4.0])
        tr = run(linear(c), SolverConfig(eta=0.1, budget=40))
        total, tail = summability_report(tr)
        assert total == 25.0 and tail == 0.0

    def test_monitor_stride(self, logreg):
        cfg = SolverConfig(eta=1.0, budget=21, monitors={"lemma1"}, monitor_stride=5)
        tr = run(logreg, cfg)
        evaluated = np.flatnonzero(np.isfinite(tr.lemma1_residual))
        assert evaluated.tolist() == [0, 5, 10, 15]

    def test_nonsmooth_progress(self):
        data, _ = gen_synthetic(SyntheticSpec(N=100, d=10, nnz=3, seed=1))
        p = hinge_problem(data, 1e-2)
        tr = run(p, SolverConfig(eta=0.1, budget=300))
        assert tr.final_avg_objective < tr.objective[0]


class TestErrors:
    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            SolverConfig(eta=0.0, budget=10)
        with pytest.raises(ConfigurationError):
            SolverConfig(eta=1.0, budget=1)
        with pytest.raises(ConfigurationError):
            SolverConfig(eta=1.0, budget=10, eps=-1.0)

    def test_fejer_requires_smooth(self):
        data, _ = gen_synthetic(SyntheticSpec(N=20, d=3, nnz=1))
        cfg = SolverConfig(eta=1.0, budget=5, monitors={"fejer"}, reference_point=np.zeros(3))
        with pytest.raises(ConfigurationError):
            run(hinge_problem(data, 0.1), cfg)

    def test_fejer_requires_reference(self, logreg):
        with pytest.raises(ConfigurationError):
            run(logreg, SolverConfig(eta=1.0, budget=5, monitors={"fejer"}))

    def test_divergence_carries_trace(self):
        def oracle(x):
            # blows up once the iterate gets close to the origin
            return (float("nan"), x) if x[0] < 0.2 else (0.5 * float(x @ x), x.copy())

        p = Problem(oracle, Zero(), 2, smooth=True)
        with pytest.raises(DivergenceError) as info:
            run(p, SolverConfig(eta=0.5, budget=50), np.ones(2))
        tr = info.value.trace
        assert tr is not None and 0 < tr.iterations < 50
        assert tr.objective.size == tr.iterations
        assert np.all(np.isfinite(tr.objective))

    def test_zero_weight_with_zero_eps(self):
        with pytest.raises(DivergenceError):
            run(quadratic(), SolverConfig(eta=1.0, budget=3, eps=0.0), np.array([0.0]))
