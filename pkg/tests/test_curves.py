import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlops import errors
from rlops.curves import (
    AlignSpec,
    X_WALL_TIME,
    align_runs,
    align_to_grid,
    rolling_average,
    rolling_values,
    subsample_interpolate,
)

from conftest import make_series


class TestSubsampleInterpolate:
    def test_affine_series_exact(self):
        steps = np.arange(0, 100_001, 10)
        series = make_series("r", "m", steps, 2.0 * steps)
        out = subsample_interpolate(series, 10_000)
        assert len(out) == 10_000
        assert np.allclose(out.values(), 2.0 * out.steps(), rtol=1e-9, atol=0)

    def test_identity_when_already_even(self):
        series = make_series("r", "m", [0, 10, 20, 30], [1.0, 5.0, 2.0, 8.0])
        out = subsample_interpolate(series, 4)
        assert out.steps().tolist() == [0, 10, 20, 30]
        assert out.values().tolist() == [1.0, 5.0, 2.0, 8.0]

    def test_endpoints_exact(self):
        series = make_series("r", "m", [0, 3, 7], [1.0, -1.0, 4.0])
        out = subsample_interpolate(series, 5)
        assert out.values()[0] == 1.0
        assert out.values()[-1] == 4.0

    def test_too_few_points(self):
        series = make_series("r", "m", [0], [1.0])
        with pytest.raises(errors.TooFewPoints):
            subsample_interpolate(series, 10)

    def test_wall_time_interpolated_identically(self):
        series = make_series("r", "m", [0, 100], [0.0, 1.0], times=[0.0, 50.0])
        out = subsample_interpolate(series, 3)
        assert out.wall_times().tolist() == [0.0, 25.0, 50.0]


class TestRollingAverage:
    def test_window_one_is_identity(self):
        series = make_series("r", "m", [0, 1, 2], [3.0, -1.0, 7.0])
        out = rolling_average(series, 1)
        assert out.values().tolist() == [3.0, -1.0, 7.0]

    def test_constant_series_fixed_point(self):
        series = make_series("r", "m", range(50), [4.5] * 50)
        for window in (1, 2, 7, 50, 100):
            assert rolling_average(series, window).values() == pytest.approx([4.5] * 50)

    def test_forced_arithmetic(self):
        series = make_series("r", "m", [0, 1], [0.0, 10.0])
        assert rolling_average(series, 2).values().tolist() == [0.0, 5.0]

    def test_partial_warmup(self):
        out = rolling_values(np.array([2.0, 4.0, 6.0, 8.0]), 3)
        assert out == pytest.approx([2.0, 3.0, 4.0, 6.0])

    def test_nonpositive_window(self):
        series = make_series("r", "m", [0, 1], [0.0, 1.0])
        with pytest.raises(errors.NonPositiveWindow):
            rolling_average(series, 0)

    @given(st.lists(st.floats(-100, 100), min_size=1, max_size=40),
           st.integers(1, 50))
    @settings(max_examples=150)
    def test_bounded_and_affine_equivariant(self, values, window):
        values = np.asarray(values)
        out = rolling_values(values, window)
        assert np.all(out >= values.min() - 1e-9)
        assert np.all(out <= values.max() + 1e-9)
        shifted = rolling_values(values + 5.0, window)
        assert shifted == pytest.approx(out + 5.0)
        scaled = rolling_values(values * 3.0, window)
        assert scaled == pytest.approx(out * 3.0)


class TestAlignRuns:
    def test_min_rule(self):
        a = make_series("a", "m", [0, 1_000_000], [0.0, 1.0])
        b = make_series("b", "m", [0, 800_000], [0.0, 1.0])
        curve = align_runs([a, b], AlignSpec(grid_size=100))
        assert curve.grid[-1] == 800_000

    def test_max_steps_clamps(self):
        a = make_series("a", "m", [0, 1_000_000], [0.0, 1.0])
        curve = align_runs([a], AlignSpec(grid_size=10, max_steps=400_000))
        assert curve.grid[-1] == 400_000

    def test_single_run_grid_two(self):
        a = make_series("a", "m", [100, 200], [5.0, 9.0])
        curve = align_runs([a], AlignSpec(grid_size=2))
        assert curve.grid.tolist() == [0.0, 200.0]
        # Below the first sample the value clamps to the first observation.
        assert curve.values[0].tolist() == [5.0, 9.0]

    def test_interpolation_against_oracle(self):
        a = make_series("a", "m", [0, 10, 20], [0.0, 10.0, 0.0])
        curve = align_runs([a], AlignSpec(grid_size=5))
        expected = np.interp(curve.grid, [0, 10, 20], [0.0, 10.0, 0.0])
        assert curve.values[0] == pytest.approx(expected)

    def test_permuting_runs_permutes_rows(self):
        a = make_series("a", "m", [0, 10], [0.0, 1.0])
        b = make_series("b", "m", [0, 10], [2.0, 3.0])
        ab = align_runs([a, b], AlignSpec(grid_size=4))
        ba = align_runs([b, a], AlignSpec(grid_size=4))
        assert ab.run_ids == ("a", "b")
        assert ba.run_ids == ("b", "a")
        assert np.array_equal(ab.values[0], ba.values[1])
        assert np.array_equal(ab.values[1], ba.values[0])
        assert np.array_equal(ab.grid, ba.grid)

    def test_wall_time_axis_uses_relative_time(self):
        a = make_series("a", "m", [0, 10], [0.0, 1.0], times=[100.0, 160.0])
        curve = align_runs([a], AlignSpec(grid_size=3, x_axis=X_WALL_TIME))
        assert curve.grid.tolist() == [0.0, 30.0, 60.0]

    def test_errors(self):
        with pytest.raises(errors.EmptyInput):
            align_runs([], AlignSpec())
        single = make_series("a", "m", [5], [1.0])
        with pytest.raises(errors.TooFewPoints):
            align_runs([single], AlignSpec())
        flat = make_series("a", "m", [0, 0], [1.0, 2.0])
        with pytest.raises(errors.NoOverlap):
            align_runs([flat], AlignSpec())

    @given(st.lists(st.floats(-50, 50), min_size=2, max_size=10))
    @settings(max_examples=100)
    def test_monotone_inputs_stay_monotone(self, values):
        values = np.sort(np.asarray(values))
        steps = np.arange(len(values)) * 7 + 1
        series = make_series("a", "m", steps, values)
        curve = align_runs([series], AlignSpec(grid_size=37))
        assert np.all(np.diff(curve.values[0]) >= -1e-12)


def test_align_to_grid_matches_align_runs():
    a = make_series("a", "m", [0, 10, 20], [0.0, 5.0, 2.0])
    curve = align_runs([a], AlignSpec(grid_size=11))
    manual = align_to_grid([a], curve.grid, curve.x_axis)
    assert np.array_equal(manual.values, curve.values)
