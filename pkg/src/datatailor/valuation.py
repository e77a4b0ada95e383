"""Unique and representative values plus per-task normalization.

Within a cluster C, the unique value of member i is the informativeness-
weighted mean distance to the other members,

    V_uni(i) = sum_{j in C, j != i} ||p_j - p_i|| * w_j / max(|C| - 1, 1),
    w_j = V_inf(j) / sum_{k in C} V_inf(k),

with a uniform-weight fallback when the cluster's informativeness sums to
zero. Dividing by |C| - 1 removes the raw sum's bias toward large clusters;
the raw sum is available via aggregation="sum". Singletons score 0.

Across clusters, tau(c) = mean over other clusters of exp(cos(mu_k, mu_c)),
defined as 1 for a single cluster, and the representative value of member i
is tau(c) times its informativeness share within the cluster.

All three value families are min-max scaled to [0, 1] independently per
task; a constant array maps to 0.5 everywhere so a signal-free dimension
stays neutral in the synergy combination.
"""

from __future__ import annotations

import numpy as np

from .clustering import ClusterSet
from .errors import ConfigError

UNIQUENESS_AGGREGATIONS = ("mean", "sum")


def unique_values(cluster_members, distances, inf_values, aggregation: str = "mean") -> np.ndarray:
    """Unique values for the given cluster members.

    cluster_members indexes into the task-level distance matrix and
    inf_values array; the result is aligned with cluster_members.
    """
    if aggregation not in UNIQUENESS_AGGREGATIONS:
        raise ConfigError(f"unknown uniqueness aggregation: {aggregation!r}")
    members = np.asarray(cluster_members, dtype=np.intp)
    m = members.size
    if m == 0:
        raise ValueError("empty cluster")
    dist = np.asarray(distances, dtype=np.float64)
    if members.max(initial=-1) >= dist.shape[0] or members.min(initial=0) < 0:
        raise IndexError("cluster member index out of range")
    if m == 1:
        return np.zeros(1)
    infs = np.asarray(inf_values, dtype=np.float64)[members]
    if infs.min() < 0:
        raise ValueError("informative values must be non-negative")
    total = infs.sum()
    weights = infs / total if total > 0 else np.full(m, 1.0 / m)
    sub = dist[np.ix_(members, members)]
    vals = sub @ weights  # the j == i term is d_ii * w_i = 0
    if aggregation == "mean":
        vals = vals / (m - 1)
    return vals


def representative_coefficients(cluster_set: ClusterSet) -> np.ndarray:
    """Per-cluster tau: mean exp-cosine affinity to the other centroids."""
    k = cluster_set.n_clusters
    if k < 1:
        raise ValueError("cluster set has no clusters")
    if k == 1:
        return np.ones(1)
    cent = np.asarray(cluster_set.centroids, dtype=np.float64)
    if not np.isfinite(cent).all():
        raise ValueError("centroids contain non-finite entries")
    norms = np.sqrt((cent**2).sum(axis=1))
    safe = np.where(norms > 0, norms, 1.0)
    unit = cent / safe[:, None]  # zero centroids stay zero, so their cosine is 0
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    exp = np.exp(cos)
    return (exp.sum(axis=1) - np.diag(exp)) / (k - 1)


def representative_values(cluster_members, tau: float, inf_values) -> np.ndarray:
    """tau times each member's informativeness share within the cluster."""
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    members = np.asarray(cluster_members, dtype=np.intp)
    m = members.size
    if m == 0:
        raise ValueError("empty cluster")
    if m == 1:
        return np.asarray([float(tau)])  # the only member carries weight 1
    infs = np.asarray(inf_values, dtype=np.float64)[members]
    total = infs.sum()
    if total > 0:
        return tau * infs / total
    return np.full(m, tau / m)


def minmax_scale(values) -> np.ndarray:
    """Scale to [0, 1]; constant input maps to 0.5."""
    v = np.asarray(values, dtype=np.float64)
    if not np.isfinite(v).all():
        raise ValueError("values contain non-finite entries")
    lo, hi = v.min(), v.max()
    if hi == lo:
        return np.full_like(v, 0.5)
    return (v - lo) / (hi - lo)


def normalize_per_task(values, task_of) -> np.ndarray:
    """Min-max scale values independently within each task group."""
    v = np.asarray(values, dtype=np.float64)
    tasks = np.asarray(task_of)
    out = np.empty_like(v)
    for t in np.unique(tasks):
        mask = tasks == t
        out[mask] = minmax_scale(v[mask])
    return out
