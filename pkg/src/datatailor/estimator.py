"""Scikit-learn style front end for the selection pipeline.

The estimator treats each input sample as a 2-D token-feature matrix, so X
is a sequence of (L_i, d) arrays rather than a single rectangular matrix.
fit() computes every score and the selected subset; transform() filters an
equally sized sequence down to the selected samples, in the spirit of a
feature selector operating on the sample axis.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .dataset import from_arrays
from .selection import SelectionConfig, select


class CoresetSelector(BaseEstimator):
    """Select a k-fraction coreset of instruction samples.

    Parameters
    ----------
    k : float in (0, 1]
        Global selection proportion over the whole input.
    lam : float in (0, 1]
        Dendrogram cut threshold, relative to the largest merge cost.
    ward_variant : {"classical", "paper_literal"}
        Merge criterion; classical squares the centroid distance and is the
        only variant with a monotone merge-height guarantee.
    uniqueness_aggregation : {"mean", "sum"}
        Whether intra-cluster distances are averaged (cluster-size
        de-biased) or summed.
    threads : int or "auto"
        Worker threads for the per-sample spectral stage.

    Attributes
    ----------
    support_ : bool array of shape (n_samples,)
        True for selected samples.
    selected_indices_ : int array
        Sorted positions of the selected samples.
    scores_ : dict of float arrays
        Per-sample v_inf_raw, v_inf, v_uni, v_rep and v_synergy.
    result_ : SelectionResult
        Full pipeline output (plan, scores, cluster sets, metrics).
    """

    def __init__(self, k=0.075, lam=0.1, ward_variant="classical",
                 uniqueness_aggregation="mean", threads=1):
        self.k = k
        self.lam = lam
        self.ward_variant = ward_variant
        self.uniqueness_aggregation = uniqueness_aggregation
        self.threads = threads

    def _config(self) -> SelectionConfig:
        config = SelectionConfig(
            k=self.k,
            lam=self.lam,
            ward_variant=self.ward_variant,
            uniqueness_aggregation=self.uniqueness_aggregation,
            threads=self.threads,
        )
        config.validate()
        return config

    def fit(self, X, y=None, *, tasks=None, rounds=None):
        """Score all samples and pick the coreset.

        X is a sequence of 2-D float arrays (one token-feature matrix per
        sample); tasks and rounds are optional per-sample metadata.
        """
        dataset = from_arrays(X, tasks=tasks, rounds=rounds)
        result = select(dataset, self._config())
        n = len(dataset.samples)
        self.n_samples_in_ = n
        self.n_features_in_ = dataset.feature_dim
        self.result_ = result
        self.selected_indices_ = np.asarray(result.selected, dtype=np.intp)
        support = np.zeros(n, dtype=bool)
        support[self.selected_indices_] = True
        self.support_ = support
        self.scores_ = {
            name: np.asarray([getattr(s, name) for s in result.scored])
            for name in ("v_inf_raw", "v_inf", "v_uni", "v_rep", "v_synergy")
        }
        return self

    def _check_fitted(self):
        if not hasattr(self, "support_"):
            raise NotFittedError("CoresetSelector is not fitted yet")

    def get_support(self, indices: bool = False):
        self._check_fitted()
        return self.selected_indices_.copy() if indices else self.support_.copy()

    def transform(self, X):
        """Return the selected subsequence of X (same length as fitted)."""
        self._check_fitted()
        if len(X) != self.n_samples_in_:
            raise ValueError(
                f"X has {len(X)} samples but the selector was fitted on {self.n_samples_in_}"
            )
        return [X[i] for i in self.selected_indices_]

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y, **fit_params).transform(X)
