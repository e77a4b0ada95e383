"""Container format, validation and round-trip behavior."""

import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from datatailor import (
    BadMagicError,
    Dataset,
    DimensionMismatchError,
    InvalidDatasetError,
    Sample,
    TruncatedPayloadError,
    UnsupportedVersionError,
    from_arrays,
    last_token_feature,
    load_container,
    validate,
    write_container,
)


def make_dataset(rng=None, n_tasks=2, n_samples=3, d=4):
    rng = rng or np.random.default_rng(7)
    tasks = [f"task{i}" for i in range(n_tasks)]
    samples = []
    for i in range(n_samples):
        L = int(rng.integers(1, 6))
        samples.append(
            Sample(
                id=i,
                task_id=i % n_tasks,
                rounds=int(rng.integers(1, 4)),
                features=rng.normal(size=(L, d)).astype(np.float32),
            )
        )
    return Dataset(tasks=tasks, samples=samples)


def test_round_trip_identity(tmp_path):
    ds = make_dataset()
    path = tmp_path / "data.dtlr"
    write_container(ds, path)
    loaded = load_container(path)
    assert loaded == ds
    assert len(loaded.tasks) == 2 and len(loaded.samples) == 3
    # bit-for-bit payload equality
    for a, b in zip(ds.samples, loaded.samples):
        assert a.features.tobytes() == b.features.tobytes()


def test_round_trip_preserves_order(tmp_path):
    rng = np.random.default_rng(3)
    ds = make_dataset(rng, n_tasks=3, n_samples=11)
    path = tmp_path / "data.dtlr"
    write_container(ds, path)
    loaded = load_container(path)
    assert [s.id for s in loaded.samples] == [s.id for s in ds.samples]


@settings(max_examples=25, deadline=None)
@given(st.data())
def test_round_trip_random(tmp_path_factory, data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    n_tasks = data.draw(st.integers(1, 4))
    n_samples = data.draw(st.integers(1, 8))
    ds = make_dataset(rng, n_tasks=min(n_tasks, n_samples), n_samples=n_samples)
    path = tmp_path_factory.mktemp("rt") / "data.dtlr"
    write_container(ds, path)
    assert load_container(path) == ds


def test_bad_magic(tmp_path):
    path = tmp_path / "bad.dtlr"
    path.write_bytes(b"XXXX" + b"\x00" * 32)
    with pytest.raises(BadMagicError):
        load_container(path)


def test_unsupported_version(tmp_path):
    path = tmp_path / "v9.dtlr"
    path.write_bytes(struct.pack("<4sII", b"DTLR", 9, 0) + struct.pack("<Q", 0))
    with pytest.raises(UnsupportedVersionError):
        load_container(path)


def test_truncated_payload(tmp_path):
    ds = make_dataset()
    path = tmp_path / "data.dtlr"
    write_container(ds, path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-5])
    with pytest.raises(TruncatedPayloadError):
        load_container(path)


def test_truncated_header(tmp_path):
    path = tmp_path / "tiny.dtlr"
    path.write_bytes(b"DT")
    with pytest.raises(TruncatedPayloadError):
        load_container(path)


def test_exact_file_size(tmp_path):
    # 1 task "a", 1 sample with L=2, d=3
    ds = Dataset(
        tasks=["a"],
        samples=[Sample(id=0, task_id=0, rounds=1, features=np.ones((2, 3), np.float32))],
    )
    path = tmp_path / "one.dtlr"
    write_container(ds, path)
    header = 4 + 4 + 4 + (2 + 1) + 8
    record = 8 + 4 + 4 + 4 + 4 + 2 * 3 * 4
    assert path.stat().st_size == header + record


def test_write_rejects_invalid_dataset(tmp_path):
    ds = Dataset(tasks=["a", "empty"], samples=[
        Sample(id=0, task_id=0, rounds=1, features=np.ones((1, 2), np.float32))
    ])
    with pytest.raises(InvalidDatasetError, match="invalid dataset"):
        write_container(ds, tmp_path / "nope.dtlr")
    assert not (tmp_path / "nope.dtlr").exists()


def test_dimension_mismatch_on_load(tmp_path):
    out = bytearray()
    out += struct.pack("<4sII", b"DTLR", 1, 1)
    out += struct.pack("<H", 1) + b"a"
    out += struct.pack("<Q", 2)
    out += struct.pack("<QIIII", 0, 0, 1, 1, 2) + np.ones(2, "<f4").tobytes()
    out += struct.pack("<QIIII", 1, 0, 1, 1, 3) + np.ones(3, "<f4").tobytes()
    path = tmp_path / "mismatch.dtlr"
    path.write_bytes(bytes(out))
    with pytest.raises(DimensionMismatchError):
        load_container(path)


def test_last_token_feature():
    s = Sample(id=0, task_id=0, rounds=1, features=np.array([[1, 2, 3]], np.float32))
    assert np.array_equal(last_token_feature(s), np.array([1, 2, 3], np.float32))
    m = np.arange(9, dtype=np.float32).reshape(3, 3)
    s3 = Sample(id=1, task_id=0, rounds=1, features=m)
    assert np.array_equal(last_token_feature(s3), m[2])


def test_last_token_feature_survives_round_trip(tmp_path):
    ds = make_dataset()
    path = tmp_path / "data.dtlr"
    write_container(ds, path)
    loaded = load_container(path)
    for a, b in zip(ds.samples, loaded.samples):
        assert np.array_equal(last_token_feature(a), last_token_feature(b))


def test_validate_duplicate_ids():
    f = np.ones((1, 2), np.float32)
    ds = Dataset(tasks=["a"], samples=[
        Sample(id=7, task_id=0, rounds=1, features=f),
        Sample(id=7, task_id=0, rounds=1, features=f),
    ])
    report = validate(ds)
    assert report.duplicate_ids == [7]
    assert not report.ok


def test_validate_nonfinite_named():
    f = np.ones((2, 3), np.float32)
    f[1, 2] = np.nan
    ds = Dataset(tasks=["a"], samples=[Sample(id=4, task_id=0, rounds=1, features=f)])
    report = validate(ds)
    assert report.nonfinite_entries == [(4, 1, 2)]


def test_validate_clean():
    report = validate(make_dataset())
    assert report.ok
    assert report.duplicate_ids == []
    assert report.nonfinite_entries == []
    assert report.dimension_mismatches == []
    assert report.empty_tasks == []


def test_validate_counts_per_task():
    report = validate(make_dataset(n_tasks=2, n_samples=5))
    assert report.task_counts == [3, 2]


def test_validate_rejects_empty_matrix():
    ds = Dataset(tasks=["a"], samples=[
        Sample(id=0, task_id=0, rounds=1, features=np.empty((0, 3), np.float32))
    ])
    report = validate(ds)
    assert report.dimension_mismatches == [0]
    assert not report.ok


def test_from_arrays_basic():
    mats = [np.ones((2, 3)), np.zeros((4, 3))]
    ds = from_arrays(mats, tasks=["x", "y"], rounds=[2, 1])
    assert ds.tasks == ["x", "y"]
    assert ds.samples[0].rounds == 2
    assert ds.samples[0].features.dtype == np.dtype("<f4")
    assert ds.feature_dim == 3


def test_from_arrays_ragged_rows():
    with pytest.raises(DimensionMismatchError, match="dimension mismatch"):
        from_arrays([[[1.0, 2.0], [3.0]]])


def test_from_arrays_inconsistent_d():
    with pytest.raises(DimensionMismatchError):
        from_arrays([np.ones((1, 2)), np.ones((1, 3))])
