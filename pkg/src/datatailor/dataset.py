"""Dataset model and the binary container format.

A dataset is an ordered list of samples, each carrying a token-level feature
matrix (float32, L x d) plus task and conversation-round metadata. The final
row of every feature matrix is the sample-point vector used for clustering
and distance computations downstream.

Container layout (all integers little-endian):

    magic    4 bytes ASCII "DTLR"
    version  u32 (currently 1)
    n_tasks  u32, then per task: name_len u16 + UTF-8 name bytes
    n_samples u64, then per sample record:
        id u64, task_id u32, rounds u32, L u32, d u32,
        L*d float32 payload, row-major (rows are tokens, final row first-class)

Floats are stored as 32-bit little-endian; loading preserves them bit for
bit. All numerical work elsewhere upcasts to float64.
"""

from __future__ import annotations

import os
import struct
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadMagicError,
    ContainerError,
    DimensionMismatchError,
    InvalidDatasetError,
    TruncatedPayloadError,
    UnsupportedVersionError,
)

MAGIC = b"DTLR"
VERSION = 1

_HEADER_FIXED = struct.Struct("<4sII")      # magic, version, n_tasks
_TASK_LEN = struct.Struct("<H")
_N_SAMPLES = struct.Struct("<Q")
_RECORD_HEAD = struct.Struct("<QIIII")      # id, task_id, rounds, L, d


def _as_f32_matrix(features) -> np.ndarray:
    """Coerce to a 2-D little-endian float32 array, rejecting ragged input."""
    try:
        arr = np.asarray(features, dtype="<f4")
    except (ValueError, TypeError) as exc:
        raise DimensionMismatchError(f"dimension mismatch: {exc}") from exc
    if arr.ndim != 2:
        raise DimensionMismatchError(
            f"dimension mismatch: feature matrix must be 2-D, got shape {arr.shape}"
        )
    return arr


@dataclass(eq=False)
class Sample:
    """One instruction sample: identity, task, rounds and token features."""

    id: int
    task_id: int
    rounds: int
    features: np.ndarray  # float32, shape (L, d)

    def __post_init__(self):
        self.features = _as_f32_matrix(self.features)

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.id == other.id
            and self.task_id == other.task_id
            and self.rounds == other.rounds
            and self.features.shape == other.features.shape
            and self.features.tobytes() == other.features.tobytes()
        )


def last_token_feature(sample: Sample) -> np.ndarray:
    """Final row of the feature matrix: the sample-point vector."""
    return sample.features[-1]


@dataclass(eq=False)
class Dataset:
    tasks: list[str]
    samples: list[Sample]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return self.tasks == other.tasks and self.samples == other.samples

    def __len__(self):
        return len(self.samples)

    @property
    def feature_dim(self) -> int:
        return int(self.samples[0].features.shape[1]) if self.samples else 0

    def task_indices(self) -> list[np.ndarray]:
        """Per-task positions of samples, preserving dataset order."""
        buckets: list[list[int]] = [[] for _ in self.tasks]
        for pos, s in enumerate(self.samples):
            buckets[s.task_id].append(pos)
        return [np.asarray(b, dtype=np.intp) for b in buckets]

    def ids(self) -> list[int]:
        return [s.id for s in self.samples]


def from_arrays(matrices, tasks=None, rounds=None, ids=None) -> Dataset:
    """Build a Dataset from in-memory arrays.

    matrices: sequence of 2-D arrays (L_i x d each). tasks: per-sample task
    labels (any hashables; table ordered by first appearance). rounds:
    per-sample conversation rounds (default 1). ids: default positions.
    """
    mats = [_as_f32_matrix(m) for m in matrices]
    n = len(mats)
    if n == 0:
        raise InvalidDatasetError("invalid dataset: no samples")
    d = mats[0].shape[1]
    for i, m in enumerate(mats):
        if m.shape[1] != d:
            raise DimensionMismatchError(
                f"dimension mismatch: sample {i} has d={m.shape[1]}, expected {d}"
            )
    if tasks is None:
        tasks = ["default"] * n
    if len(tasks) != n:
        raise InvalidDatasetError("invalid dataset: len(tasks) != len(matrices)")
    if rounds is None:
        rounds = [1] * n
    if len(rounds) != n:
        raise InvalidDatasetError("invalid dataset: len(rounds) != len(matrices)")
    if ids is None:
        ids = list(range(n))
    if len(ids) != n:
        raise InvalidDatasetError("invalid dataset: len(ids) != len(matrices)")

    table: list[str] = []
    index: dict = {}
    task_ids = []
    for label in tasks:
        if label not in index:
            index[label] = len(table)
            table.append(str(label))
        task_ids.append(index[label])
    samples = [
        Sample(id=int(ids[i]), task_id=task_ids[i], rounds=int(rounds[i]), features=mats[i])
        for i in range(n)
    ]
    return Dataset(tasks=table, samples=samples)


@dataclass
class ValidationReport:
    """Findings from validate(); all lists empty iff the dataset is usable."""

    task_counts: list[int] = field(default_factory=list)
    duplicate_ids: list[int] = field(default_factory=list)
    nonfinite_entries: list[tuple[int, int, int]] = field(default_factory=list)
    dimension_mismatches: list[int] = field(default_factory=list)
    empty_tasks: list[str] = field(default_factory=list)
    invalid_task_ids: list[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (
            self.duplicate_ids
            or self.nonfinite_entries
            or self.dimension_mismatches
            or self.empty_tasks
            or self.invalid_task_ids
        )

    def summary(self) -> str:
        if self.ok:
            return "ok"
        parts = []
        if self.duplicate_ids:
            parts.append(f"duplicate ids {self.duplicate_ids}")
        if self.nonfinite_entries:
            parts.append(f"non-finite entries {self.nonfinite_entries[:5]}")
        if self.dimension_mismatches:
            parts.append(f"dimension mismatches in samples {self.dimension_mismatches}")
        if self.empty_tasks:
            parts.append(f"empty tasks {self.empty_tasks}")
        if self.invalid_task_ids:
            parts.append(f"invalid task ids in samples {self.invalid_task_ids}")
        return "; ".join(parts)


def validate(dataset: Dataset) -> ValidationReport:
    """Deterministic structural checks; findings are data, not failures."""
    report = ValidationReport(task_counts=[0] * len(dataset.tasks))
    seen: set[int] = set()
    flagged_dupes: set[int] = set()
    d_ref = dataset.feature_dim
    for s in dataset.samples:
        if s.id in seen and s.id not in flagged_dupes:
            report.duplicate_ids.append(s.id)
            flagged_dupes.add(s.id)
        seen.add(s.id)
        if 0 <= s.task_id < len(dataset.tasks):
            report.task_counts[s.task_id] += 1
        else:
            report.invalid_task_ids.append(s.id)
        rows, cols = s.features.shape
        if rows < 1 or cols < 1 or cols != d_ref:
            report.dimension_mismatches.append(s.id)
        bad = np.argwhere(~np.isfinite(s.features))
        for r, c in bad:
            report.nonfinite_entries.append((s.id, int(r), int(c)))
    for t, count in enumerate(report.task_counts):
        if count == 0:
            report.empty_tasks.append(dataset.tasks[t])
    return report


def _atomic_write_bytes(path, data: bytes) -> None:
    """Write via a temp file and rename so failures never leave partial output."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-dtlr-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def write_container(dataset: Dataset, path) -> None:
    """Serialize a validated dataset to the container format."""
    report = validate(dataset)
    if not report.ok:
        raise InvalidDatasetError(f"invalid dataset: {report.summary()}", report)
    out = bytearray()
    out += _HEADER_FIXED.pack(MAGIC, VERSION, len(dataset.tasks))
    for name in dataset.tasks:
        encoded = name.encode("utf-8")
        if len(encoded) > 0xFFFF:
            raise InvalidDatasetError(f"invalid dataset: task name too long ({name[:32]}...)")
        out += _TASK_LEN.pack(len(encoded))
        out += encoded
    out += _N_SAMPLES.pack(len(dataset.samples))
    for s in dataset.samples:
        rows, cols = s.features.shape
        out += _RECORD_HEAD.pack(s.id, s.task_id, s.rounds, rows, cols)
        out += np.ascontiguousarray(s.features, dtype="<f4").tobytes()
    _atomic_write_bytes(path, bytes(out))


class _Cursor:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, size: int, what: str) -> bytes:
        end = self.pos + size
        if end > len(self.data):
            raise TruncatedPayloadError(f"truncated payload: {what} needs {size} bytes")
        chunk = self.data[self.pos:end]
        self.pos = end
        return chunk

    def unpack(self, fmt: struct.Struct, what: str):
        return fmt.unpack(self.take(fmt.size, what))


def load_container(path) -> Dataset:
    """Load a container; in-memory floats are bit-identical to the payload."""
    with open(path, "rb") as fh:
        data = fh.read()
    cur = _Cursor(data)
    magic, version, n_tasks = cur.unpack(_HEADER_FIXED, "header")
    if magic != MAGIC:
        raise BadMagicError(f"bad magic: {magic!r}")
    if version != VERSION:
        raise UnsupportedVersionError(f"unsupported version: {version}")
    tasks = []
    for _ in range(n_tasks):
        (name_len,) = cur.unpack(_TASK_LEN, "task name length")
        raw = cur.take(name_len, "task name")
        try:
            tasks.append(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise ContainerError(f"invalid task name bytes: {exc}") from exc
    (n_samples,) = cur.unpack(_N_SAMPLES, "sample count")
    samples = []
    d_ref = None
    for i in range(n_samples):
        sid, task_id, rounds, rows, cols = cur.unpack(_RECORD_HEAD, f"record {i} header")
        if task_id >= n_tasks:
            raise ContainerError(f"record {i}: task id {task_id} out of range")
        payload = cur.take(rows * cols * 4, f"record {i} payload")
        features = np.frombuffer(payload, dtype="<f4").reshape(rows, cols).copy()
        features.flags.writeable = False
        if d_ref is None:
            d_ref = cols
        elif cols != d_ref:
            raise DimensionMismatchError(
                f"dimension mismatch: record {i} has d={cols}, expected {d_ref}"
            )
        samples.append(Sample(id=sid, task_id=task_id, rounds=rounds, features=features))
    if cur.pos != len(data):
        raise ContainerError(f"trailing bytes after last record: {len(data) - cur.pos}")
    return Dataset(tasks=tasks, samples=samples)
