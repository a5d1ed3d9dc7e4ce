import numpy as np
import pytest
import scipy.sparse as sp

from dynclust.graph import Snapshot


def snapshot_from_pairs(pairs, n, weights=None, t_index=1):
    pairs = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    w = np.ones(len(pairs)) if weights is None else np.asarray(weights, float)
    rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
    cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
    data = np.concatenate([w, w])
    return Snapshot(sp.csr_matrix((data, (rows, cols)), shape=(n, n)), t_index=t_index)


def planted_snapshot(rng, sizes, p_in, p_out):
    """Planted-partition snapshot plus its labels."""
    n = int(np.sum(sizes))
    labels = np.repeat(np.arange(len(sizes)), sizes)
    pairs = []
    for u in range(n):
        for v in range(u + 1, n):
            p = p_in if labels[u] == labels[v] else p_out
            if rng.random() < p:
                pairs.append((u, v))
    return snapshot_from_pairs(pairs, n), labels


@pytest.fixture
def triangle():
    return snapshot_from_pairs([(0, 1), (1, 2), (0, 2)], 3)


@pytest.fixture
def star4():
    # K_{1,3}: node 0 is the center
    return snapshot_from_pairs([(0, 1), (0, 2), (0, 3)], 4)
