"""Selective embedding updating: change scores, static/dynamic split, selective
landmark re-factorization.

A node's change score combines how much its adjacency row deviates from its
average over the three-snapshot window with how far its nearest cluster center
drifts over the same window. Only the top-scoring share of nodes is treated as
dynamic; everything else keeps its embedding from the previous timestamp.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import MissingPrevFactors
from .factorization import factorize_pair
from .landmarks import LandmarkFactors, _sq_dists


@dataclass(frozen=True)
class ChangeScores:
    """Per-node change scores with the induced dynamic/static split."""

    scores: np.ndarray
    dynamic: np.ndarray
    static: np.ndarray


def _nearest_centers(rows, centers):
    d = _sq_dists(rows, centers)
    return centers[d.argmin(axis=1)]


def node_change_score(
    rows_prev, rows_cur, rows_next, centers_prev, centers_cur, centers_next
):
    """Change score of every node over a three-snapshot window.

    The first term is the squared deviation of the node's current adjacency row
    from its window average; the second is the squared shift between the
    averaged nearest centers and the current nearest center (the printed
    relative-position expression telescopes to exactly this). Missing boundary
    snapshots are dropped from the averages.
    """
    n = rows_cur.shape[0]
    row_terms = [rows_cur]
    theta_terms = [_nearest_centers(rows_cur, centers_cur)]
    if rows_prev is not None:
        row_terms.append(rows_prev)
        theta_terms.append(_nearest_centers(rows_prev, centers_prev))
    if rows_next is not None:
        row_terms.append(rows_next)
        theta_terms.append(_nearest_centers(rows_next, centers_next))
    mean_rows = sum(row_terms) / len(row_terms)
    diff = rows_cur - mean_rows
    if sp.issparse(diff):
        topo = np.asarray(diff.multiply(diff).sum(axis=1)).ravel()
    else:
        topo = (np.asarray(diff) ** 2).sum(axis=1)
    mean_theta = sum(theta_terms) / len(theta_terms)
    drift = ((mean_theta - theta_terms[0]) ** 2).sum(axis=1)
    return topo + drift


def split_dynamic_static(scores, mu):
    """Top-``ceil(mu * n)`` scores become the dynamic set, ties broken by node id."""
    if not 0.0 <= mu <= 1.0:
        raise ValueError(f"mu must lie in [0, 1], got {mu}")
    scores = np.asarray(scores)
    n = len(scores)
    count = math.ceil(mu * n)
    order = np.lexsort((np.arange(n), -scores))
    dynamic = np.sort(order[:count])
    static = np.sort(order[count:])
    return dynamic, static


def factorize_landmarks_selective(
    m00, phi_prev, psi_prev, dynamic_mask, tol=1e-6, max_iter=200
):
    """Re-factorize the landmark block updating only dynamic rows and columns.

    Static rows of the basis and static columns of the coefficients are copied
    bit-exactly from the previous factors, which also serve as the warm start,
    so the loss can only improve on the frozen initialization.
    """
    if phi_prev is None or psi_prev is None:
        raise MissingPrevFactors("no factors from the previous timestamp")
    dynamic_mask = np.asarray(dynamic_mask, dtype=bool)
    u = phi_prev.shape[0]
    if dynamic_mask.shape[0] != u:
        raise MissingPrevFactors(
            f"mask covers {dynamic_mask.shape[0]} landmarks, factors have {u}"
        )
    phi, psi, losses, converged = factorize_pair(
        m00,
        phi_prev,
        psi_prev,
        tol=tol,
        max_iter=max_iter,
        phi_mask=dynamic_mask,
        psi_mask=dynamic_mask,
    )
    return LandmarkFactors(phi=phi, psi=psi, losses=losses, converged=converged)
