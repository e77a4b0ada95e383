"""Deterministic synthetic dataset generation for desk-scale experiments.

Randomness comes from numpy's PCG64 bit generator seeded once per run, so
a fixed (spec, seed) pair always produces the same container bytes. Tests
rely on statistical properties of the output, never on exact draws.

Each task is a union of Gaussian clusters in sample-point space. The
feature matrix of a sample is built around its sample-point vector p (the
final row): remaining rows are random combinations of `rank` basis
directions including p, so the effective rank is controllable down to
rank-1 (every row a multiple of p). Duplicates are exact byte-copies of
base samples (features and rounds; only the id differs), concentrated on
a configurable number of source samples. Outliers form an extra cluster
placed `outlier_scale` times the inter-centroid distance away from the
normal centers, in a direction with low cosine to them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, Sample
from .errors import ConfigError

DEFAULT_DIM = 64


@dataclass
class TaskSpec:
    name: str
    n_clusters: int = 1
    samples_per_cluster: int = 100
    cluster_spread: float = 1.0
    duplicate_fraction: float = 0.0
    outlier_fraction: float = 0.0
    duplicate_sources: int | None = None  # default: about sqrt(n_duplicates)
    outlier_scale: float = 10.0
    token_rank_profile: str | dict = "full"
    rounds_distribution: int | dict = 1

    def validate(self) -> None:
        if self.n_clusters < 1 or self.samples_per_cluster < 1:
            raise ConfigError(f"task {self.name!r}: cluster counts must be >= 1")
        if not (0.0 <= self.duplicate_fraction <= 1.0):
            raise ConfigError(f"task {self.name!r}: duplicate_fraction outside [0, 1]")
        if not (0.0 <= self.outlier_fraction <= 1.0):
            raise ConfigError(f"task {self.name!r}: outlier_fraction outside [0, 1]")
        if self.duplicate_fraction + self.outlier_fraction >= 1.0:
            raise ConfigError(f"task {self.name!r}: duplicates plus outliers leave no base samples")
        if self.cluster_spread <= 0:
            raise ConfigError(f"task {self.name!r}: cluster_spread must be positive")
        if self.duplicate_sources is not None and self.duplicate_sources < 1:
            raise ConfigError(f"task {self.name!r}: duplicate_sources must be >= 1")


_TASK_KEYS = {
    "name", "n_clusters", "samples_per_cluster", "cluster_spread",
    "duplicate_fraction", "outlier_fraction", "duplicate_sources",
    "outlier_scale", "token_rank_profile", "rounds_distribution",
}


@dataclass
class SynthSpec:
    tasks: list[TaskSpec]
    d: int = DEFAULT_DIM

    @classmethod
    def from_dict(cls, data: dict) -> "SynthSpec":
        unknown = sorted(set(data) - {"tasks", "d"})
        if unknown:
            raise ConfigError(f"unknown synth spec keys: {unknown}")
        raw_tasks = data.get("tasks")
        if not raw_tasks:
            raise ConfigError("synth spec needs a non-empty 'tasks' list")
        tasks = []
        for entry in raw_tasks:
            bad = sorted(set(entry) - _TASK_KEYS)
            if bad:
                raise ConfigError(f"unknown synth task keys: {bad}")
            if "name" not in entry:
                raise ConfigError("every synth task needs a 'name'")
            tasks.append(TaskSpec(**entry))
        spec = cls(tasks=tasks, d=int(data.get("d", DEFAULT_DIM)))
        if spec.d < 1:
            raise ConfigError("d must be >= 1")
        for t in spec.tasks:
            t.validate()
        _validate_profiles(spec)
        return spec


def _parse_rank_profile(profile, d: int) -> tuple[tuple[int, int], int | None]:
    """Return ((L_min, L_max), rank) with rank=None meaning full."""
    length: int | list = 16
    rank: int | str = "full"
    if isinstance(profile, str):
        if profile == "full":
            rank = "full"
        elif profile.startswith("rank-"):
            rank = int(profile[len("rank-"):])
        else:
            raise ConfigError(f"unknown token_rank_profile: {profile!r}")
    elif isinstance(profile, dict):
        bad = sorted(set(profile) - {"rank", "L"})
        if bad:
            raise ConfigError(f"unknown token_rank_profile keys: {bad}")
        rank = profile.get("rank", "full")
        length = profile.get("L", 16)
    else:
        raise ConfigError(f"token_rank_profile must be a string or object, got {profile!r}")
    if isinstance(length, int):
        lo = hi = length
    else:
        lo, hi = int(length[0]), int(length[1])
    if lo < 1 or hi < lo:
        raise ConfigError(f"bad token length range: {length!r}")
    if rank == "full":
        return (lo, hi), None
    rank = int(rank)
    if rank < 1 or rank > min(lo, d):
        raise ConfigError(f"rank {rank} must be in [1, min(L, d)] = [1, {min(lo, d)}]")
    return (lo, hi), rank


def _sample_rounds(dist, rng) -> int:
    if isinstance(dist, int):
        if dist < 1:
            raise ConfigError(f"rounds must be >= 1, got {dist}")
        return dist
    values = sorted(int(k) for k in dist)
    if any(v < 1 for v in values):
        raise ConfigError("rounds values must be >= 1")
    weights = np.asarray([float(dist[str(v)] if str(v) in dist else dist[v]) for v in values])
    weights = weights / weights.sum()
    return int(rng.choice(values, p=weights))


def _unit(v: np.ndarray) -> np.ndarray:
    norm = float(np.sqrt((v**2).sum()))
    return v / norm if norm > 0 else v


def _build_matrix(p: np.ndarray, length: int, rank: int | None, scale: float, rng) -> np.ndarray:
    """Feature matrix whose final row is exactly p, with controlled rank."""
    d = p.size
    if length == 1:
        return p[None, :].astype("<f4")
    if rank == 1:
        # power-of-two multiples stay exact in float32, keeping the stored
        # matrix exactly rank one
        p32 = p.astype("<f4")
        coeffs = rng.choice([0.25, 0.5, 1.0, 2.0, 4.0], size=length - 1).astype("<f4")
        rows = coeffs[:, None] * p32[None, :]
        return np.vstack([rows, p32[None, :]])
    if rank is None:
        rows = rng.normal(size=(length - 1, d)) * scale
    else:
        basis = np.vstack([p, rng.normal(size=(rank - 1, d)) * scale])
        coeffs = rng.normal(size=(length - 1, rank))
        rows = coeffs @ basis / math.sqrt(rank)
    return np.vstack([rows, p[None, :]]).astype("<f4")


def _validate_profiles(spec: "SynthSpec") -> None:
    for task in spec.tasks:
        _parse_rank_profile(task.token_rank_profile, spec.d)


@dataclass
class TaskManifest:
    task: str
    base_ids: list[int] = field(default_factory=list)
    duplicate_ids: list[int] = field(default_factory=list)
    source_ids: list[int] = field(default_factory=list)
    outlier_ids: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "task": self.task,
            "base_ids": self.base_ids,
            "duplicate_ids": self.duplicate_ids,
            "source_ids": self.source_ids,
            "outlier_ids": self.outlier_ids,
        }


def generate(spec: SynthSpec, seed: int) -> tuple[Dataset, list[TaskManifest]]:
    """Generate a dataset plus a per-task manifest of sample roles."""
    rng = np.random.Generator(np.random.PCG64(seed))
    d = spec.d
    samples: list[Sample] = []
    manifests: list[TaskManifest] = []
    next_id = 0
    for task_id, task in enumerate(spec.tasks):
        task.validate()
        (l_lo, l_hi), rank = _parse_rank_profile(task.token_rank_profile, d)
        n_total = task.n_clusters * task.samples_per_cluster
        n_dup = int(task.duplicate_fraction * n_total)
        n_out = int(task.outlier_fraction * n_total)
        n_base = n_total - n_dup - n_out
        if n_base < 1:
            raise ConfigError(f"task {task.name!r}: no base samples left")
        n_sources = 0
        if n_dup:
            n_sources = task.duplicate_sources or max(1, round(math.sqrt(n_dup)))
        if n_sources > n_base:
            raise ConfigError(f"task {task.name!r}: duplicate_sources exceeds base sample count")

        spread = task.cluster_spread
        axis = _unit(rng.normal(size=d))
        center_norm = 20.0 * spread * math.sqrt(d)
        centers = axis * center_norm + rng.normal(size=(task.n_clusters, d)) * (5.0 * spread)
        if task.n_clusters > 1:
            diffs = centers[:, None, :] - centers[None, :, :]
            gaps = np.sqrt((diffs**2).sum(axis=2))
            inter = float(gaps[np.triu_indices(task.n_clusters, 1)].mean())
        else:
            inter = spread * math.sqrt(2.0 * d)

        manifest = TaskManifest(task=task.name)
        row_scale = 20.0 * spread

        def emit(point: np.ndarray) -> Sample:
            nonlocal next_id
            length = int(rng.integers(l_lo, l_hi + 1)) if l_hi > l_lo else l_lo
            features = _build_matrix(point, length, rank, row_scale, rng)
            rounds = _sample_rounds(task.rounds_distribution, rng)
            sample = Sample(id=next_id, task_id=task_id, rounds=rounds, features=features)
            next_id += 1
            return sample

        base: list[Sample] = []
        for i in range(n_base):
            center = centers[i % task.n_clusters]
            base.append(emit(center + rng.normal(size=d) * spread))
        samples.extend(base)
        manifest.base_ids = [s.id for s in base]

        if n_dup:
            sources = base[:n_sources]
            manifest.source_ids = [s.id for s in sources]
            for j in range(n_dup):
                src = sources[j % n_sources]
                dup = Sample(
                    id=next_id, task_id=task_id, rounds=src.rounds,
                    features=src.features.copy(),
                )
                next_id += 1
                samples.append(dup)
                manifest.duplicate_ids.append(dup.id)

        if n_out:
            ortho = rng.normal(size=d)
            ortho = _unit(ortho - axis * float(ortho @ axis))
            out_center = axis * center_norm + ortho * (task.outlier_scale * inter)
            for _ in range(n_out):
                s = emit(out_center + rng.normal(size=d) * spread)
                samples.append(s)
                manifest.outlier_ids.append(s.id)

        manifests.append(manifest)
    return Dataset(tasks=[t.name for t in spec.tasks], samples=samples), manifests
