"""Bi-clustering regularization on the bipartite graph built from an embedding.

The embedding block C (nodes x features) induces the bipartite adjacency
S = [[0, C], [C^T, 0]]. The regularizer is the Ky Fan trace of the k smallest
eigenvectors of the normalized Laplacian of S: driving it to zero pushes S
toward exactly k connected components, which prunes noisy cross-component
entries of C.
"""

import time

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .errors import ConvergenceFailure, ShapeMismatch

_DEGREE_EPS = 1e-12
_DENSE_EIG_LIMIT = 2000


def _bipartite_degrees(c):
    node_deg = np.asarray(c.sum(axis=1)).ravel()
    feat_deg = np.asarray(c.sum(axis=0)).ravel()
    # zero rows or columns would make D^{-1/2} undefined
    return np.maximum(node_deg, _DEGREE_EPS), np.maximum(feat_deg, _DEGREE_EPS)


def bipartite_laplacian(c):
    """Normalized Laplacian of the bipartite graph of C, as a dense matrix."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2:
        raise ShapeMismatch("embedding block must be a matrix")
    if (c < 0).any():
        raise ShapeMismatch("embedding block must be nonnegative")
    node_deg, feat_deg = _bipartite_degrees(c)
    c_norm = c / np.sqrt(node_deg)[:, None] / np.sqrt(feat_deg)[None, :]
    n, r = c.shape
    lap = np.eye(n + r)
    lap[:n, n:] -= c_norm
    lap[n:, :n] -= c_norm.T
    return lap


def smallest_eigvecs(lap, k):
    """Orthonormal basis of the invariant subspace of the k smallest eigenvalues."""
    lap = np.asarray(lap)
    dim = lap.shape[0]
    if k > dim:
        raise ShapeMismatch(f"k={k} exceeds matrix dimension {dim}")
    if dim <= _DENSE_EIG_LIMIT:
        _, vecs = scipy.linalg.eigh(lap, subset_by_index=[0, k - 1])
        return vecs
    try:
        sparse_l = sp.csr_matrix(lap)
        _, vecs = sp.linalg.eigsh(sparse_l, k=k, sigma=-1e-6, which="LM")
        return vecs
    except Exception as exc:  # ARPACK failure; no dense fallback at this size
        raise ConvergenceFailure(str(exc)) from exc


def bcr_value(c, f, node_deg=None, feat_deg=None):
    """Trace value Tr(F^T L_S F) for the bipartite graph of C.

    Equals half the degree-normalized disagreement summed over both
    orientations of every bipartite edge. Degrees are recomputed from C unless
    frozen values are supplied.
    """
    c = np.asarray(c, dtype=np.float64)
    n, r = c.shape
    if f.shape[0] != n + r:
        raise ShapeMismatch(f"F has {f.shape[0]} rows, expected {n + r}")
    if node_deg is None or feat_deg is None:
        node_deg, feat_deg = _bipartite_degrees(c)
    fn = f[:n] / np.sqrt(node_deg)[:, None]
    ff = f[n:] / np.sqrt(feat_deg)[:, None]
    k = f.shape[1]
    return float(k - 2.0 * (c * (fn @ ff.T)).sum())


def bcr_gradient(c, f, node_deg, feat_deg):
    """Entrywise derivative of the trace penalty with degrees and F frozen.

    Entry (u, v) is ``||f_u / sqrt(d_u) - g_v / sqrt(e_v)||^2`` where f is the
    node block and g the feature block of F; it is nonnegative and vanishes
    exactly where the two normalized embeddings agree.
    """
    c = np.asarray(c)
    n, r = c.shape
    if f.shape[0] != n + r:
        raise ShapeMismatch(f"F has {f.shape[0]} rows, expected {n + r}")
    fn = f[:n] / np.sqrt(node_deg)[:, None]
    ff = f[n:] / np.sqrt(feat_deg)[:, None]
    sq_n = (fn * fn).sum(axis=1)
    sq_f = (ff * ff).sum(axis=1)
    return sq_n[:, None] + sq_f[None, :] - 2.0 * fn @ ff.T


class BcrContext:
    """Per-subset regularizer state: target component count and cached spectra.

    ``refresh`` recomputes the orthonormal F (the exact minimizer of the trace
    for the current C) and freezes the degree vectors used by ``gradient``;
    ``value`` always scores against the live degrees of its argument.
    """

    def __init__(self, k):
        self.k = int(k)
        self.f = None
        self.node_deg = None
        self.feat_deg = None
        self.seconds = 0.0

    def refresh(self, c):
        start = time.perf_counter()
        c = np.asarray(c, dtype=np.float64)
        n, r = c.shape
        if self.k > n + r:
            raise ShapeMismatch(f"k={self.k} exceeds bipartite dimension {n + r}")
        self.node_deg, self.feat_deg = _bipartite_degrees(c)
        if self.k <= min(n, r):
            # eigenvectors of the bipartite Laplacian come from the SVD of the
            # degree-normalized C: eigenvalue 1 - s for singular value s
            c_norm = (
                c / np.sqrt(self.node_deg)[:, None] / np.sqrt(self.feat_deg)[None, :]
            )
            u_vecs, _, vt = np.linalg.svd(c_norm, full_matrices=False)
            self.f = np.vstack(
                [u_vecs[:, : self.k], vt[: self.k].T]
            ) / np.sqrt(2.0)
        else:
            self.f = smallest_eigvecs(bipartite_laplacian(c), self.k)
        self.seconds += time.perf_counter() - start
        return self.f

    def value(self, c):
        start = time.perf_counter()
        out = bcr_value(c, self.f)
        self.seconds += time.perf_counter() - start
        return out

    def gradient(self, c):
        start = time.perf_counter()
        out = bcr_gradient(c, self.f, self.node_deg, self.feat_deg)
        self.seconds += time.perf_counter() - start
        return out
