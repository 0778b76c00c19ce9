import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rlops import errors
from rlops.model import (
    MetricPoint,
    MetricSeries,
    ScoreMatrix,
    load_normalization_table,
    validate_run_record,
)

from conftest import make_run, make_series


def write_table(tmp_path, rows, header="env_id,random_score,human_score"):
    path = tmp_path / "table.csv"
    path.write_text("\n".join([header] + rows) + "\n")
    return path


class TestNormalizationTable:
    def test_loads_rows(self, tmp_path):
        path = write_table(tmp_path, ["Pong-v5,-20.7,14.6", "Breakout-v5,1.7,30.5"])
        table = load_normalization_table(path)
        assert len(table) == 2
        assert table["Pong-v5"] == (-20.7, 14.6)

    def test_missing_file(self, tmp_path):
        with pytest.raises(errors.MissingFile):
            load_normalization_table(tmp_path / "nope.csv")

    def test_duplicate_env(self, tmp_path):
        path = write_table(tmp_path, ["X,0,1", "X,0,2"])
        with pytest.raises(errors.DuplicateEnv):
            load_normalization_table(path)

    def test_degenerate_reference(self, tmp_path):
        path = write_table(tmp_path, ["X,5,5"])
        with pytest.raises(errors.DegenerateReference):
            load_normalization_table(path)

    def test_bad_header(self, tmp_path):
        path = write_table(tmp_path, ["X,0,1"], header="env,rand,human")
        with pytest.raises(errors.MalformedTable):
            load_normalization_table(path)


class TestRunRecord:
    def test_valid_record_roundtrips(self):
        record = make_run("r1")
        assert validate_run_record(record) is record
        # Idempotent.
        assert validate_run_record(validate_run_record(record)) is record

    def test_empty_run_id(self):
        with pytest.raises(errors.EmptyRunId):
            validate_run_record(make_run(""))

    def test_malformed_config_key(self):
        record = make_run("r1", config={"": "x"})
        with pytest.raises(errors.MalformedConfigKey):
            validate_run_record(record)


class TestMetricSeries:
    def test_accepts_sorted_points(self):
        series = make_series("r1", "m", [0, 1, 2], [5.0, 6.0, 7.0])
        assert len(series) == 3
        assert series.values().tolist() == [5.0, 6.0, 7.0]

    def test_rejects_unsorted_steps(self):
        with pytest.raises(errors.NonMonotonicSeries):
            make_series("r1", "m", [2, 1], [0.0, 0.0])

    def test_rejects_decreasing_wall_time(self):
        with pytest.raises(errors.NonMonotonicSeries):
            make_series("r1", "m", [0, 1], [0.0, 0.0], times=[5.0, 4.0])

    @given(st.lists(st.integers(min_value=0, max_value=1000),
                    min_size=2, max_size=20, unique=True))
    def test_shuffled_steps_rejected(self, steps):
        # Construction only succeeds when steps happen to be sorted.
        values = [0.0] * len(steps)
        if steps == sorted(steps):
            make_series("r1", "m", steps, values)
        else:
            with pytest.raises(errors.NonMonotonicSeries):
                make_series("r1", "m", steps, values)

    def test_relative_times(self):
        series = make_series("r1", "m", [0, 1], [0.0, 0.0], times=[100.0, 160.0])
        assert series.relative_times().tolist() == [0.0, 60.0]


class TestScoreMatrix:
    def test_ragged_rows_allowed(self):
        matrix = ScoreMatrix(("a", "b"), (np.array([1.0, 2.0, 3.0]), np.array([4.0])))
        assert matrix.pooled().tolist() == [1.0, 2.0, 3.0, 4.0]

    def test_all_nan_row_rejected(self):
        with pytest.raises(errors.EmptyTask):
            ScoreMatrix(("a",), (np.array([np.nan, np.nan]),))

    def test_no_tasks_rejected(self):
        with pytest.raises(errors.EmptyTask):
            ScoreMatrix((), ())

    def test_immutable_rows(self):
        matrix = ScoreMatrix(("a",), (np.array([1.0]),))
        with pytest.raises(ValueError):
            matrix.scores[0][0] = 2.0


def test_metric_point_rejects_infinite_value():
    with pytest.raises(ValueError):
        MetricPoint(0, 0.0, float("inf"))
    # NaN is the explicit-gap representation and must be accepted.
    MetricPoint(0, 0.0, float("nan"))
