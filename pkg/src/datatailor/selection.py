"""Score combination, per-task budgets, and the end-to-end selection pipeline.

The synergistic value of a sample with conversation rounds r is the convex
combination

    V = r/(r+2) * v_inf + 1/(r+2) * (v_uni + v_rep),

so multi-round instructions lean on informativeness while single-round ones
lean on the relational values. Per-task budgets follow

    k_p = x_p^2 * |S_p| / sum_q x_q^2 * |S_q| * k,

where x_p is the task's mean largest-singular-value ratio; k_p is a share
of the WHOLE dataset, so the shares sum to k. Integer counts are realized
by capped largest-remainder apportionment: counts never exceed task sizes,
capped surplus flows to uncapped tasks in proportion to their shares, and
the total equals round(k * |S|) whenever the caps allow it.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .clustering import ClusterSet, cluster_task, pairwise_distances, WARD_VARIANTS
from .dataset import Dataset, last_token_feature, validate
from .errors import (
    ConfigError,
    DataQualityError,
    InvalidDatasetError,
    UnknownSampleError,
    ZeroMatrixError,
)
from .spectral import informative_value, lsvr, singular_values
from .valuation import (
    UNIQUENESS_AGGREGATIONS,
    minmax_scale,
    representative_coefficients,
    representative_values,
    unique_values,
)


@dataclass
class SelectionConfig:
    k: float = 0.075
    lam: float = 0.1
    ward_variant: str = "classical"
    uniqueness_aggregation: str = "mean"
    threads: int | str = 1
    seed: int = 0

    def validate(self) -> None:
        if not (isinstance(self.k, (int, float)) and 0.0 < float(self.k) <= 1.0):
            raise ConfigError(f"k must be in (0, 1], got {self.k!r}")
        if not (isinstance(self.lam, (int, float)) and 0.0 < float(self.lam) <= 1.0):
            raise ConfigError(f"lambda must be in (0, 1], got {self.lam!r}")
        if self.ward_variant not in WARD_VARIANTS:
            raise ConfigError(f"ward_variant must be one of {WARD_VARIANTS}, got {self.ward_variant!r}")
        if self.uniqueness_aggregation not in UNIQUENESS_AGGREGATIONS:
            raise ConfigError(
                f"uniqueness_aggregation must be one of {UNIQUENESS_AGGREGATIONS},"
                f" got {self.uniqueness_aggregation!r}"
            )
        if self.threads != "auto" and not (isinstance(self.threads, int) and self.threads >= 1):
            raise ConfigError(f"threads must be a positive integer or 'auto', got {self.threads!r}")
        if not isinstance(self.seed, int) or not (0 <= self.seed < 2**64):
            raise ConfigError(f"seed must be a 64-bit unsigned integer, got {self.seed!r}")

    def resolved_threads(self) -> int:
        if self.threads == "auto":
            return os.cpu_count() or 1
        return int(self.threads)

    def as_dict(self) -> dict:
        """Result-affecting parameters only; threads is an execution knob."""
        return {
            "k": self.k,
            "lambda": self.lam,
            "ward_variant": self.ward_variant,
            "uniqueness_aggregation": self.uniqueness_aggregation,
            "seed": self.seed,
        }

    _FIELD_BY_KEY = {
        "k": "k",
        "lambda": "lam",
        "ward_variant": "ward_variant",
        "uniqueness_aggregation": "uniqueness_aggregation",
        "threads": "threads",
        "seed": "seed",
    }

    @classmethod
    def from_dict(cls, data: dict) -> "SelectionConfig":
        unknown = sorted(set(data) - set(cls._FIELD_BY_KEY))
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        cfg = cls(**{cls._FIELD_BY_KEY[k]: v for k, v in data.items()})
        cfg.validate()
        return cfg


@dataclass
class TaskBudget:
    task_id: int
    difficulty: float  # x_p, mean lsvr over the task
    size: int
    k_p: float         # share of the whole dataset allocated to this task
    count: int


@dataclass
class ScoredSample:
    id: int
    task_id: int
    rounds: int
    cluster_id: int
    v_inf_raw: float
    v_inf: float
    v_uni: float
    v_rep: float
    v_synergy: float
    selected: bool = False


@dataclass
class PrincipleMetrics:
    mean_informativeness: float
    uniqueness_proxy: float
    representativeness_proxy: float
    cluster_coverage: float

    def as_dict(self) -> dict:
        return {
            "mean_informativeness": self.mean_informativeness,
            "uniqueness_proxy": self.uniqueness_proxy,
            "representativeness_proxy": self.representativeness_proxy,
            "cluster_coverage": self.cluster_coverage,
        }


@dataclass
class SelectionResult:
    config: SelectionConfig
    plan: list[TaskBudget]
    scored: list[ScoredSample]
    selected: list[int]  # sorted sample ids
    cluster_sets: dict[int, ClusterSet] = field(default_factory=dict)
    metrics: PrincipleMetrics | None = None


def synergistic_value(v_inf: float, v_uni: float, v_rep: float, rounds: int) -> float:
    """Round-adaptive convex combination of the three normalized values."""
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    for name, v in (("v_inf", v_inf), ("v_uni", v_uni), ("v_rep", v_rep)):
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"{name} must be in [0, 1], got {v}")
    return (rounds * v_inf + v_uni + v_rep) / (rounds + 2)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def _apportion(weights: np.ndarray, caps: np.ndarray, total: int) -> np.ndarray:
    """Largest-remainder apportionment of `total` under per-task caps.

    Tasks whose proportional quota exceeds their cap are pinned at the cap
    and the surplus is rescaled over the rest; the fractional leftover goes
    to the largest remainders (lowest task index on ties).
    """
    t = weights.size
    counts = np.zeros(t, dtype=np.int64)
    active = np.ones(t, dtype=bool)
    remaining = int(total)
    while remaining > 0 and active.any():
        wsum = weights[active].sum()
        if wsum <= 0:
            break
        quota = np.zeros(t)
        quota[active] = remaining * weights[active] / wsum
        over = active & (quota > caps)
        if over.any():
            counts[over] = caps[over]
            remaining -= int(caps[over].sum())
            active &= ~over
            continue
        idx = np.flatnonzero(active)
        base = np.floor(quota[idx]).astype(np.int64)
        frac = quota[idx] - base
        counts[idx] = base
        leftover = remaining - int(base.sum())
        for pos in np.lexsort((idx, -frac)):
            if leftover == 0:
                break
            slot = idx[pos]
            if counts[slot] < caps[slot]:
                counts[slot] += 1
                leftover -= 1
        # a positive fraction implies base < cap, so the leftover always fits
        break
    return counts


def task_proportions(difficulties, sizes, k: float) -> list[TaskBudget]:
    """Per-task budget shares and integer counts under Eq-style allocation."""
    x = np.asarray(difficulties, dtype=np.float64)
    s = np.asarray(sizes, dtype=np.int64)
    if x.size == 0:
        raise ValueError("empty task set")
    if x.size != s.size:
        raise ValueError("difficulties and sizes disagree in length")
    if not ((x > 0) & (x <= 1)).all():
        raise ValueError("difficulties must lie in (0, 1]")
    if (s < 1).any():
        raise ValueError("task sizes must be >= 1")
    if not (0.0 < k <= 1.0):
        raise ConfigError(f"k must be in (0, 1], got {k}")
    weights = x**2 * s
    k_p = k * weights / weights.sum()
    n_total = int(s.sum())
    target = _round_half_up(k * n_total)
    counts = _apportion(weights, s, target)
    # every task has positive share; float a sample to each when budget permits
    if target >= x.size:
        want = np.flatnonzero(counts == 0)
        order = want[np.lexsort((want, -k_p[want]))]
        for t in order:
            donors = np.flatnonzero(counts >= 2)
            if donors.size == 0:
                break
            donor = donors[np.argmax(counts[donors])]
            counts[donor] -= 1
            counts[t] += 1
    return [
        TaskBudget(task_id=i, difficulty=float(x[i]), size=int(s[i]),
                   k_p=float(k_p[i]), count=int(counts[i]))
        for i in range(x.size)
    ]


def _compute_spectra(samples, threads: int) -> list[np.ndarray]:
    if threads <= 1 or len(samples) < 2:
        return [singular_values(s.features) for s in samples]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda s: singular_values(s.features), samples))


def cluster_dataset(dataset: Dataset, config: SelectionConfig | None = None) -> dict[int, ClusterSet]:
    """Per-task cluster sets on the sample-point vectors."""
    config = config or SelectionConfig()
    config.validate()
    report = validate(dataset)
    if not report.ok:
        raise InvalidDatasetError(f"invalid dataset: {report.summary()}", report)
    cluster_sets = {}
    for task_id, idx in enumerate(dataset.task_indices()):
        pts = np.asarray(
            [last_token_feature(dataset.samples[i]) for i in idx], dtype=np.float64
        )
        cluster_sets[task_id] = cluster_task(pts, config.lam, variant=config.ward_variant)
    return cluster_sets


def select(dataset: Dataset, config: SelectionConfig | None = None) -> SelectionResult:
    """Run the full pipeline: spectra, clustering, valuation, budgets, top-k."""
    config = config or SelectionConfig()
    config.validate()
    report = validate(dataset)
    if not report.ok:
        raise InvalidDatasetError(f"invalid dataset: {report.summary()}", report)
    if not dataset.samples:
        raise InvalidDatasetError("invalid dataset: no samples")

    n = len(dataset.samples)
    spectra = _compute_spectra(dataset.samples, config.resolved_threads())
    v_inf_raw = np.empty(n)
    lsvr_vals = np.empty(n)
    for i, spec in enumerate(spectra):
        try:
            v_inf_raw[i] = informative_value(spec)
            lsvr_vals[i] = lsvr(spec)
        except ZeroMatrixError as exc:
            raise DataQualityError(
                f"sample {dataset.samples[i].id} has a zero feature matrix"
            ) from exc

    v_inf = np.empty(n)
    v_uni = np.empty(n)
    v_rep = np.empty(n)
    v_syn = np.empty(n)
    cluster_of = np.empty(n, dtype=np.intp)
    cluster_sets: dict[int, ClusterSet] = {}
    difficulties = []
    sizes = []
    rounds = np.asarray([s.rounds for s in dataset.samples], dtype=np.int64)

    for task_id, idx in enumerate(dataset.task_indices()):
        pts = np.asarray(
            [last_token_feature(dataset.samples[i]) for i in idx], dtype=np.float64
        )
        cs = cluster_task(pts, config.lam, variant=config.ward_variant)
        cluster_sets[task_id] = cs
        cluster_of[idx] = cs.assignment
        dist = pairwise_distances(pts)
        taus = representative_coefficients(cs)
        inf_task = v_inf_raw[idx]
        uni_task = np.empty(idx.size)
        rep_task = np.empty(idx.size)
        for c in range(cs.n_clusters):
            members = cs.members(c)
            uni_task[members] = unique_values(
                members, dist, inf_task, aggregation=config.uniqueness_aggregation
            )
            rep_task[members] = representative_values(members, float(taus[c]), inf_task)
        v_inf[idx] = minmax_scale(inf_task)
        v_uni[idx] = minmax_scale(uni_task)
        v_rep[idx] = minmax_scale(rep_task)
        r = rounds[idx].astype(np.float64)
        v_syn[idx] = (r * v_inf[idx] + v_uni[idx] + v_rep[idx]) / (r + 2.0)
        difficulties.append(float(lsvr_vals[idx].mean()))
        sizes.append(int(idx.size))

    plan = task_proportions(difficulties, sizes, config.k)

    ids = np.asarray(dataset.ids(), dtype=np.int64)
    selected_mask = np.zeros(n, dtype=bool)
    for budget, idx in zip(plan, dataset.task_indices()):
        if budget.count == 0:
            continue
        order = np.lexsort((ids[idx], -v_syn[idx]))  # score desc, id asc on ties
        selected_mask[idx[order[: budget.count]]] = True

    scored = [
        ScoredSample(
            id=int(ids[i]),
            task_id=dataset.samples[i].task_id,
            rounds=int(rounds[i]),
            cluster_id=int(cluster_of[i]),
            v_inf_raw=float(v_inf_raw[i]),
            v_inf=float(v_inf[i]),
            v_uni=float(v_uni[i]),
            v_rep=float(v_rep[i]),
            v_synergy=float(v_syn[i]),
            selected=bool(selected_mask[i]),
        )
        for i in range(n)
    ]
    selected_ids = sorted(int(i) for i in ids[selected_mask])
    result = SelectionResult(
        config=replace(config),
        plan=plan,
        scored=scored,
        selected=selected_ids,
        cluster_sets=cluster_sets,
    )
    if selected_ids:
        result.metrics = evaluate_subset(dataset, selected_ids, cluster_sets)
    return result


def evaluate_subset(dataset: Dataset, subset, cluster_sets: dict[int, ClusterSet]) -> PrincipleMetrics:
    """Geometric proxies for the three principle metrics on a subset."""
    subset = list(subset)
    if not subset:
        raise ValueError("subset must be non-empty")
    pos_of = {s.id: i for i, s in enumerate(dataset.samples)}
    positions = []
    for sid in subset:
        if sid not in pos_of:
            raise UnknownSampleError(f"unknown sample id: {sid}")
        positions.append(pos_of[sid])
    positions = np.asarray(sorted(set(positions)), dtype=np.intp)

    inf_vals = [
        informative_value(singular_values(dataset.samples[i].features)) for i in positions
    ]
    mean_inf = float(np.mean(inf_vals))

    task_indices = dataset.task_indices()
    per_task_nn = []
    tau_values = []
    covered = 0
    total_clusters = 0
    selected_set = set(int(p) for p in positions)
    for task_id, idx in enumerate(task_indices):
        cs = cluster_sets[task_id]
        taus = representative_coefficients(cs)
        total_clusters += cs.n_clusters
        local_selected = np.asarray(
            [j for j, pos in enumerate(idx) if int(pos) in selected_set], dtype=np.intp
        )
        if local_selected.size == 0:
            continue
        covered += len(np.unique(cs.assignment[local_selected]))
        tau_values.extend(float(taus[c]) for c in cs.assignment[local_selected])
        if local_selected.size == 1:
            per_task_nn.append(0.0)
        else:
            pts = np.asarray(
                [last_token_feature(dataset.samples[idx[j]]) for j in local_selected],
                dtype=np.float64,
            )
            dist = pairwise_distances(pts)
            np.fill_diagonal(dist, np.inf)
            per_task_nn.append(float(dist.min(axis=1).mean()))
    return PrincipleMetrics(
        mean_informativeness=mean_inf,
        uniqueness_proxy=float(np.mean(per_task_nn)) if per_task_nn else 0.0,
        representativeness_proxy=float(np.mean(tau_values)),
        cluster_coverage=covered / total_clusters if total_clusters else 0.0,
    )
