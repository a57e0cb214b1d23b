import numpy as np
import pytest

from daccox import (
    DataError,
    SurvivalDataset,
    make_shard_plan,
    read_csv,
    split_dataset,
    validate_dataset,
    write_csv,
)
from daccox.data import records_from_rows
from helpers import random_dataset


def test_rows_sorted_by_stop_descending_events_first():
    data = SurvivalDataset.from_arrays([0, 1, 2, 3], None, [1.0, 2.0, 2.0, 0.5], [0, 0, 1, 1], np.eye(4))
    assert data.stop.tolist() == [2.0, 2.0, 1.0, 0.5]
    assert data.event.tolist() == [True, False, False, True]
    assert data.d0 == 2 and data.n_subjects == 4 and not data.counting_process


@pytest.mark.parametrize(
    "rows, message",
    [
        ([(0, 0, 1, 0, (1.0,)), (0, 0.5, 2, 1, (1.0,)), (1, 0, 1, 1, (0.0,))], "overlapping"),
        ([(0, 0, 1, 0, (1.0,)), (0, 1.5, 2, 1, (1.0,)), (1, 0, 1, 1, (0.0,))], "non-contiguous"),
        ([(0, 0, 1, 1, (1.0,)), (0, 1, 2, 0, (1.0,)), (1, 0, 1, 1, (0.0,))], "non-final"),
        ([(0, 1, 1, 1, (1.0,)), (1, 0, 1, 1, (0.0,))], "start >= stop"),
        ([(0, 0, 1, 0, (1.0,)), (0, 1, 2, 1, (1.0,))], "two subjects"),
    ],
)
def test_invalid_records_rejected(rows, message):
    with pytest.raises(DataError, match=message):
        validate_dataset(records_from_rows(rows))


def test_dimension_mismatch_and_bad_event():
    with pytest.raises(DataError, match="dimension"):
        validate_dataset(records_from_rows([(0, 0, 1, 1, (1.0,)), (1, 0, 1, 1, (0.0, 2.0))]))
    with pytest.raises(DataError, match="0 or 1"):
        SurvivalDataset.from_arrays([0, 1], None, [1.0, 2.0], [2, 0], [[1.0], [2.0]])


def test_records_roundtrip():
    data = random_dataset(np.random.default_rng(0), 30, 3, counting=True)
    assert validate_dataset(data.to_records()) == data


@pytest.mark.parametrize("counting", [False, True])
def test_csv_roundtrip_is_exact(tmp_path, counting):
    data = random_dataset(np.random.default_rng(1), 40, 4, counting=counting)
    path = tmp_path / "d.csv"
    write_csv(data, path)
    assert read_csv(path) == data


def test_csv_errors(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("id,stop,event,z1\n0,1.0,1,0.3\n1,abc,0,0.1\n")
    with pytest.raises(DataError):
        read_csv(path)
    path.write_text("id,stop,z1\n0,1.0,0.3\n")
    with pytest.raises(DataError, match="event"):
        read_csv(path)


def test_shard_plan_balanced_and_reproducible():
    data = random_dataset(np.random.default_rng(2), 103, 2, counting=True)
    plan = make_shard_plan(data, 10, seed=5)
    assert plan == make_shard_plan(data, 10, seed=5)
    assert plan.sizes.max() - plan.sizes.min() <= 1
    shards = split_dataset(data, plan)
    assert sum(s.n_subjects for s in shards) == data.n_subjects
    assert sum(s.n_rows for s in shards) == data.n_rows
    # subjects never straddle shards
    seen = [set(s.subject_id.tolist()) for s in shards]
    assert sum(len(s) for s in seen) == len(set().union(*seen))
    with pytest.raises(DataError):
        make_shard_plan(data, 0, seed=0)
    with pytest.raises(DataError):
        make_shard_plan(data, 104, seed=0)


def test_arrays_are_read_only():
    data = random_dataset(np.random.default_rng(3), 10, 2)
    with pytest.raises(ValueError):
        data.stop[0] = 5.0
