"""Singular spectra and the spectral scores derived from them.

A spectrum is a plain float64 array, sorted non-increasing, length
min(L, d), all entries >= 0. Two scores are computed from it:

* informative value: Shannon entropy of the normalized singular values,
  natural log. High when feature directions contribute evenly, zero for
  rank-1 matrices.
* lsvr: largest singular value over the sum, in [1/len, 1]. Task-level
  averages of this ratio proxy task difficulty for budget allocation.
"""

from __future__ import annotations

import numpy as np

from .errors import ZeroMatrixError


def _check_matrix(matrix) -> np.ndarray:
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.isfinite(m).all():
        raise ValueError("matrix contains non-finite entries")
    return m


def singular_values(matrix) -> np.ndarray:
    """Singular values of a feature matrix, sorted non-increasing.

    Only the values are computed; length is min(L, d). Negative eigen-noise
    is clamped to zero.
    """
    m = _check_matrix(matrix)
    s = np.linalg.svd(m, compute_uv=False)
    np.maximum(s, 0.0, out=s)
    return s


def _checked_spectrum(spectrum) -> tuple[np.ndarray, float]:
    s = np.asarray(spectrum, dtype=np.float64)
    if s.ndim != 1 or s.size == 0:
        raise ValueError(f"expected a 1-D spectrum, got shape {s.shape}")
    if s.min() < 0:
        raise ValueError("spectrum has negative entries")
    total = float(s.sum())
    if total <= 0.0:
        raise ZeroMatrixError("zero matrix")
    return s, total


def informative_value(spectrum) -> float:
    """Entropy of the normalized spectrum; zero terms contribute nothing."""
    s, total = _checked_spectrum(spectrum)
    q = s[s > 0] / total
    return float(-(q * np.log(q)).sum())


def lsvr(spectrum) -> float:
    """Largest singular value ratio: sigma_max / sum(sigma)."""
    s, total = _checked_spectrum(spectrum)
    return float(s.max() / total)


def task_difficulty(spectra) -> float:
    """Arithmetic mean of per-sample lsvr over a task."""
    spectra = list(spectra)
    if not spectra:
        raise ValueError("task has no spectra")
    return float(np.mean([lsvr(s) for s in spectra]))
