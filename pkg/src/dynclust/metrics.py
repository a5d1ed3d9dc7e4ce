"""Clustering quality metrics: NMI, NF1, modularity, density.

NMI and NF1 compare a predicted partition against ground truth and are
invariant to cluster id relabeling. Modularity and density score a partition
directly against the snapshot structure, without labels.
"""

import numpy as np

from .errors import EmptySnapshot
from .graph import degree_vector
from .validation import check_same_length


def _contingency(a, b):
    """Raw-count contingency table between two label vectors."""
    a_ids, a_idx = np.unique(a, return_inverse=True)
    b_ids, b_idx = np.unique(b, return_inverse=True)
    table = np.zeros((len(a_ids), len(b_ids)), dtype=np.int64)
    np.add.at(table, (a_idx, b_idx), 1)
    return table


def _entropy(counts, n):
    p = counts[counts > 0] / n
    return float(-(p * np.log(p)).sum())


def nmi(a, b):
    """Normalized mutual information, 2 I(a;b) / (H(a) + H(b)), natural log.

    Returns 1.0 when both partitions are single-cluster (zero entropy).
    """
    a, b = check_same_length(a, b)
    n = len(a)
    table = _contingency(a, b)
    ha = _entropy(table.sum(axis=1), n)
    hb = _entropy(table.sum(axis=0), n)
    if ha + hb == 0.0:
        return 1.0
    pa = table.sum(axis=1) / n
    pb = table.sum(axis=0) / n
    mask = table > 0
    pij = table[mask] / n
    outer = np.outer(pa, pb)[mask]
    mi = float((pij * np.log(pij / outer)).sum())
    return 2.0 * mi / (ha + hb)


def nf1(pred, truth):
    """Normalized F1: mean best-match F1 of predicted communities against truth,
    divided by the mean number of predicted communities mapped onto each matched
    ground-truth community (redundancy), clamped to [0, 1].

    Not symmetric in its arguments: over-splitting the prediction is penalized
    through the redundancy factor.
    """
    pred, truth = check_same_length(pred, truth)
    table = _contingency(pred, truth)
    pred_sizes = table.sum(axis=1)
    truth_sizes = table.sum(axis=0)
    f1 = 2.0 * table / (pred_sizes[:, None] + truth_sizes[None, :])
    best = f1.argmax(axis=1)
    mean_f1 = float(f1[np.arange(len(pred_sizes)), best].mean())
    hits = np.bincount(best, minlength=len(truth_sizes))
    redundancy = float(hits[hits > 0].mean())
    return float(min(1.0, mean_f1 / redundancy))


def modularity(snapshot, labels):
    """Newman modularity with edge weights: sum over communities of
    e_c / m - (d_c / 2m)^2."""
    labels = np.asarray(labels)
    if snapshot.adj.nnz == 0:
        raise EmptySnapshot("modularity needs at least one edge")
    if labels.shape[0] != snapshot.n:
        raise EmptySnapshot(
            f"partition covers {labels.shape[0]} nodes, snapshot has {snapshot.n}"
        )
    deg = degree_vector(snapshot)
    two_m = deg.sum()
    coo = snapshot.adj.tocoo()
    intra = labels[coo.row] == labels[coo.col]
    q = 0.0
    for c in np.unique(labels):
        members = labels == c
        # each undirected intra edge appears twice in the symmetric matrix
        e_c = coo.data[intra & (labels[coo.row] == c)].sum() / 2.0
        d_c = deg[members].sum()
        q += e_c / (two_m / 2.0) - (d_c / two_m) ** 2
    return float(q)


def density(snapshot, labels):
    """Size-weighted mean internal edge density; singletons count as 1."""
    labels = np.asarray(labels)
    if snapshot.n == 0:
        raise EmptySnapshot("density needs a nonempty snapshot")
    if labels.shape[0] != snapshot.n:
        raise EmptySnapshot(
            f"partition covers {labels.shape[0]} nodes, snapshot has {snapshot.n}"
        )
    coo = snapshot.adj.tocoo()
    intra_mask = labels[coo.row] == labels[coo.col]
    total = 0.0
    for c in np.unique(labels):
        members = labels == c
        size = int(members.sum())
        if size == 1:
            d = 1.0
        else:
            edges = int(np.count_nonzero(intra_mask & (labels[coo.row] == c))) // 2
            d = 2.0 * edges / (size * (size - 1))
        total += size * d
    return float(total / snapshot.n)
