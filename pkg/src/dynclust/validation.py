"""Input validation helpers used across the package and the estimator API."""

import numpy as np
import scipy.sparse as sp

from .errors import LengthMismatch, ShapeMismatch


def as_csr(matrix, dtype=np.float64):
    """Return ``matrix`` as a CSR matrix with duplicates summed and zeros dropped."""
    m = sp.csr_matrix(matrix, dtype=dtype)
    m.sum_duplicates()
    m.eliminate_zeros()
    return m


def check_square(m, name="matrix"):
    if m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"{name} must be square, got {m.shape}")
    return m


def check_symmetric(m, name="matrix", tol=0.0):
    diff = abs(m - m.T)
    worst = diff.max() if diff.nnz else 0.0
    if worst > tol:
        raise ShapeMismatch(f"{name} is not symmetric (max asymmetry {worst:g})")
    return m


def check_finite(a, name="array"):
    if not np.all(np.isfinite(a)):
        raise ShapeMismatch(f"{name} contains non-finite values")
    return a


def check_fraction(x, name="fraction", low=0.0, high=1.0):
    if not (low <= x <= high):
        raise ValueError(f"{name} must lie in [{low}, {high}], got {x}")
    return float(x)


def check_labels(labels, n, name="labels"):
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.shape[0] != n:
        raise LengthMismatch(f"{name} must have length {n}, got shape {labels.shape}")
    return labels.astype(np.int64, copy=False)


def check_same_length(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(f"partitions cover {a.shape[0]} vs {b.shape[0]} nodes")
    return a, b


def spawn_rng(seed, *keys):
    """Deterministic per-module generator derived from a root seed and salt keys."""
    entropy = [int(seed) & 0xFFFFFFFF] + [int(k) & 0xFFFFFFFF for k in keys]
    return np.random.default_rng(entropy)
