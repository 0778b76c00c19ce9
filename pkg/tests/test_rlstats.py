import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlops import errors
from rlops.curves import AlignedCurve
from rlops.model import ScoreMatrix
from rlops.rlstats import (
    AggregateMethod,
    BootstrapConfig,
    aggregate,
    derive_task_seed,
    performance_profile,
    sample_efficiency_curve,
    stratified_bootstrap_ci,
)


def matrix_of(rows, labels=None):
    labels = labels or tuple(f"t{i}" for i in range(len(rows)))
    return ScoreMatrix(tuple(labels), tuple(np.asarray(r, float) for r in rows))


def enumeration_interval(row_a, row_b, confidence=0.95):
    """Exact bootstrap limit for a 2x2 matrix with the mean aggregator.

    All 4 x 4 = 16 equiprobable ordered resamples are enumerated; the limit
    of the empirical linear-interpolated quantile is the population quantile
    of the discrete statistic distribution.
    """
    stats = sorted(
        np.mean([row_a[i], row_a[j], row_b[k], row_b[l]])
        for i, j, k, l in itertools.product(range(2), repeat=4)
    )
    n = len(stats)
    alpha = (1.0 - confidence) / 2.0
    lo = stats[int(np.ceil(n * alpha)) - 1]
    hi = stats[int(np.ceil(n * (1.0 - alpha))) - 1]
    return lo, hi


class TestAggregate:
    def test_iqm_forced_by_trim_rule(self):
        m = matrix_of([[1, 2, 3, 4, 5, 6, 7, 8]])
        assert aggregate(m, AggregateMethod.iqm()) == 4.5

    def test_median(self):
        assert aggregate(matrix_of([[1, 2, 3]]), AggregateMethod.median()) == 2

    def test_mean_pools_tasks(self):
        m = matrix_of([[1.0, 3.0], [5.0]])
        assert aggregate(m, AggregateMethod.mean()) == 3.0

    def test_optimality_gap_zero_above_threshold(self):
        m = matrix_of([[1.0, 2.0, 1.5]])
        assert aggregate(m, AggregateMethod.optimality_gap(1.0)) == 0.0

    def test_optimality_gap_shortfall(self):
        m = matrix_of([[0.5, 1.5]])
        assert aggregate(m, AggregateMethod.optimality_gap(1.0)) == pytest.approx(0.25)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=30),
           st.permutations(range(8)))
    @settings(max_examples=100)
    def test_iqm_properties(self, values, perm):
        m = matrix_of([values])
        iqm = aggregate(m, AggregateMethod.iqm())
        assert min(values) - 1e-9 <= iqm <= max(values) + 1e-9
        if len(values) >= 8:
            shuffled = [values[i] for i in perm] + values[8:]
            assert aggregate(matrix_of([shuffled]), AggregateMethod.iqm()) == \
                pytest.approx(iqm)

    def test_iqm_equals_mean_on_constant_data(self):
        m = matrix_of([[3.3] * 7])
        assert aggregate(m, AggregateMethod.iqm()) == pytest.approx(3.3)
        assert aggregate(m, AggregateMethod.mean()) == pytest.approx(3.3)


class TestStratifiedBootstrap:
    def test_identical_scores_zero_width(self):
        m = matrix_of([[2.5, 2.5], [2.5, 2.5, 2.5]])
        est = stratified_bootstrap_ci(m, AggregateMethod.mean(),
                                      BootstrapConfig(reps=200, seed=7))
        assert (est.point, est.lo, est.hi) == (2.5, 2.5, 2.5)

    def test_single_cell(self):
        m = matrix_of([[4.0]])
        est = stratified_bootstrap_ci(m, AggregateMethod.mean(),
                                      BootstrapConfig(reps=50, seed=1))
        assert (est.point, est.lo, est.hi) == (4.0, 4.0, 4.0)

    def test_matches_enumeration_oracle(self):
        row_a, row_b = [0.1, 0.9], [0.4, 0.7]
        m = matrix_of([row_a, row_b])
        est = stratified_bootstrap_ci(m, AggregateMethod.mean(),
                                      BootstrapConfig(reps=40_000, seed=3))
        lo, hi = enumeration_interval(row_a, row_b)
        assert est.lo == pytest.approx(lo, abs=2e-3)
        assert est.hi == pytest.approx(hi, abs=2e-3)

    def test_seed_determinism(self):
        m = matrix_of([[0.1, 0.5, 0.9], [0.2, 0.8]])
        cfg = BootstrapConfig(reps=500, seed=99)
        a = stratified_bootstrap_ci(m, AggregateMethod.iqm(), cfg)
        b = stratified_bootstrap_ci(m, AggregateMethod.iqm(), cfg)
        assert (a.point, a.lo, a.hi) == (b.point, b.lo, b.hi)

    def test_task_order_independence(self):
        cfg = BootstrapConfig(reps=2_000, seed=5)
        m1 = matrix_of([[0.1, 0.5], [0.7, 0.9]], labels=("a", "b"))
        m2 = matrix_of([[0.7, 0.9], [0.1, 0.5]], labels=("b", "a"))
        e1 = stratified_bootstrap_ci(m1, AggregateMethod.mean(), cfg)
        e2 = stratified_bootstrap_ci(m2, AggregateMethod.mean(), cfg)
        assert (e1.lo, e1.hi) == (e2.lo, e2.hi)

    def test_mean_point_inside_interval_on_symmetric_data(self):
        rng = np.random.default_rng(0)
        m = matrix_of(rng.normal(0, 1, size=(4, 12)))
        est = stratified_bootstrap_ci(m, AggregateMethod.mean(),
                                      BootstrapConfig(reps=2_000, seed=11))
        assert est.lo <= est.point <= est.hi


class TestPerformanceProfile:
    CFG = BootstrapConfig(reps=200, seed=21)

    def test_extreme_taus(self):
        m = matrix_of([[0.2, 0.8], [0.6, 0.9]])
        profile = performance_profile(m, [-1.0, 2.0], self.CFG)
        assert profile.fractions.tolist() == [1.0, 0.0]

    def test_counting_oracle(self):
        m = matrix_of([[0.2, 0.8], [0.6, 0.9]])
        profile = performance_profile(m, [0.5], self.CFG)
        assert profile.fractions.tolist() == [0.75]

    def test_non_increasing_over_random_matrices(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            rows = [rng.uniform(0, 1, rng.integers(1, 6))
                    for _ in range(rng.integers(1, 4))]
            m = matrix_of(rows)
            taus = np.linspace(-0.1, 1.1, 25)
            profile = performance_profile(m, taus, self.CFG)
            assert np.all(np.diff(profile.fractions) <= 1e-12)

    def test_monotone_transform_invariance(self):
        m = matrix_of([[0.2, 0.8], [0.6, 0.9]])
        taus = np.array([0.1, 0.5, 0.85])
        f = performance_profile(m, taus, self.CFG).fractions
        transform = lambda x: np.exp(3.0 * np.asarray(x))
        m2 = m.map_rows(lambda _, row: transform(row))
        f2 = performance_profile(m2, transform(taus), self.CFG).fractions
        assert np.array_equal(f, f2)


class TestSampleEfficiencyCurve:
    def curve(self, rows, task="t0", grid=None):
        rows = np.asarray(rows, float)
        grid = np.arange(rows.shape[1], dtype=float) if grid is None else grid
        return AlignedCurve("global_step", grid, rows,
                            tuple(f"r{i}" for i in range(rows.shape[0])))

    def test_constant_runs_flat_zero_width(self):
        c = self.curve([[2.0, 2.0, 2.0], [2.0, 2.0, 2.0]])
        eff = sample_efficiency_curve([c], ["t0"], AggregateMethod.mean(),
                                      BootstrapConfig(reps=100, seed=3))
        assert np.array_equal(eff.point, [2.0, 2.0, 2.0])
        assert np.array_equal(eff.bands[0], eff.point)
        assert np.array_equal(eff.bands[1], eff.point)

    def test_single_point_consistent_with_ci(self):
        rows_a, rows_b = [[0.1], [0.9]], [[0.4], [0.7]]
        cfg = BootstrapConfig(reps=5_000, seed=17)
        curves_per_task = [self.curve(rows_a, "a"), self.curve(rows_b, "b")]
        eff = sample_efficiency_curve(curves_per_task, ["a", "b"],
                                      AggregateMethod.mean(), cfg)
        m = ScoreMatrix(("a", "b"), (np.array([0.1, 0.9]), np.array([0.4, 0.7])))
        est = stratified_bootstrap_ci(m, AggregateMethod.mean(), cfg)
        assert eff.point[0] == est.point
        assert eff.bands[0][0] == est.lo
        assert eff.bands[1][0] == est.hi

    def test_per_point_median_oracle(self):
        rng = np.random.default_rng(8)
        rows_a = rng.uniform(0, 1, (2, 3))
        rows_b = rng.uniform(0, 1, (2, 3))
        cfg = BootstrapConfig(reps=3_000, seed=23)
        eff = sample_efficiency_curve(
            [self.curve(rows_a, "a"), self.curve(rows_b, "b")], ["a", "b"],
            AggregateMethod.median(), cfg,
        )
        for g in range(3):
            m = ScoreMatrix(("a", "b"), (rows_a[:, g], rows_b[:, g]))
            est = stratified_bootstrap_ci(m, AggregateMethod.median(), cfg)
            assert eff.point[g] == est.point
            assert eff.bands[0][g] == est.lo
            assert eff.bands[1][g] == est.hi

    def test_grid_mismatch(self):
        a = self.curve([[1.0, 2.0]])
        b = self.curve([[1.0, 2.0, 3.0]])
        with pytest.raises(errors.GridMismatch):
            sample_efficiency_curve([a, b], ["a", "b"], AggregateMethod.mean(),
                                    BootstrapConfig(reps=10, seed=1))


def test_derive_task_seed_stable():
    assert derive_task_seed(42, "Pong") == derive_task_seed(42, "Pong")
    assert derive_task_seed(42, "Pong") != derive_task_seed(42, "Breakout")
    assert derive_task_seed(42, "Pong") != derive_task_seed(43, "Pong")
