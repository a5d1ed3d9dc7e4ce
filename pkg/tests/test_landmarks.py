import numpy as np
import pytest
import scipy.sparse as sp
from scipy.optimize import minimize_scalar

from dynclust.errors import NonFiniteLoss
from dynclust.factorization import factorize_pair
from dynclust.graph import build_pmi
from dynclust.landmarks import (
    LandmarkSet,
    elbow_cluster_count,
    factorize_landmarks,
    select_landmarks,
    temporal_kmeans,
    update_centers,
)

from conftest import planted_snapshot


def blob_rows(rng, centers, per_blob, spread):
    rows = []
    for c in centers:
        rows.append(np.asarray(c) + spread * rng.standard_normal((per_blob, len(c))))
    return sp.csr_matrix(np.abs(np.vstack(rows)))


def test_elbow_three_blobs():
    rng = np.random.default_rng(0)
    rows = blob_rows(rng, [[0, 0, 10], [10, 0, 0], [0, 10, 0]], 20, 0.3)
    assert elbow_cluster_count(rows, 8, seed=1) == 3
    # independent oracle: sklearn's K-means SSE curve has its knee at 3 too
    from sklearn.cluster import KMeans

    dense = rows.toarray()
    sse = {1: float(((dense - dense.mean(axis=0)) ** 2).sum())}
    for k in range(2, 9):
        km = KMeans(n_clusters=k, n_init=10, random_state=0).fit(dense)
        sse[k] = km.inertia_
    curvature = {k: sse[k - 1] - 2 * sse[k] + sse[k + 1] for k in range(2, 8)}
    assert max(curvature, key=curvature.get) == 3


def test_elbow_identical_rows():
    rows = sp.csr_matrix(np.tile([1.0, 2.0, 0.0], (10, 1)))
    assert elbow_cluster_count(rows, 6, seed=0) == 1


def test_elbow_two_candidates():
    rng = np.random.default_rng(1)
    rows = blob_rows(rng, [[0, 8], [8, 0]], 15, 0.4)
    assert elbow_cluster_count(rows, 2, seed=0) == 2


def test_update_centers_mean():
    rows = sp.csr_matrix(np.array([[0.0, 0.0], [2.0, 2.0]]))
    centers = update_centers(rows, None, np.array([0, 0]), lam=0.0)
    assert np.allclose(centers, [[1.0, 1.0]])


def test_update_centers_lambda_zero_matches_plain_mean():
    rng = np.random.default_rng(2)
    rows = sp.csr_matrix(np.abs(rng.standard_normal((12, 5))))
    prev = sp.csr_matrix(np.abs(rng.standard_normal((12, 5))))
    assign = rng.integers(0, 3, 12)
    with_prev = update_centers(rows, prev, assign, lam=0.0)
    without = update_centers(rows, None, assign, lam=0.0)
    assert np.allclose(with_prev, without)


def test_update_centers_temporal_minimizer():
    rows = sp.csr_matrix(np.array([[2.0, 0.0]]))
    prev = sp.csr_matrix(np.array([[0.0, 2.0]]))
    centers = update_centers(rows, prev, np.array([0]), lam=1.0)
    assert np.allclose(centers, [[1.0, 1.0]])
    # 1-D calculus oracle: minimize |a - x|^2 + lam |b - x|^2 per coordinate
    for dim, (a, b) in enumerate([(2.0, 0.0), (0.0, 2.0)]):
        res = minimize_scalar(lambda x: (a - x) ** 2 + 1.0 * (b - x) ** 2)
        assert centers[0, dim] == pytest.approx(res.x, abs=1e-6)


def test_temporal_kmeans_objective_monotone():
    rng = np.random.default_rng(3)
    rows = blob_rows(rng, [[0, 6], [6, 0]], 20, 0.6)
    prev = blob_rows(rng, [[0, 6], [6, 0]], 20, 0.6)
    _, _, trace = temporal_kmeans(rows, prev, 0.4, 2, seed=5)
    assert np.all(np.diff(trace) <= 1e-9 * np.maximum(1.0, np.abs(trace[:-1])))


def test_select_landmarks_lambda_zero_matches_plain():
    rng = np.random.default_rng(4)
    rows = blob_rows(rng, [[0, 7], [7, 0]], 25, 0.5)
    prev = blob_rows(rng, [[0, 7], [7, 0]], 25, 0.5)
    a = select_landmarks(rows, prev, 0.0, 0.4, 2, seed=9)
    b = select_landmarks(rows, None, 0.0, 0.4, 2, seed=9)
    assert np.array_equal(a.node_ids, b.node_ids)


def test_select_landmarks_blob_membership():
    rng = np.random.default_rng(5)
    rows = blob_rows(rng, [[0, 9], [9, 0]], 25, 0.4)
    sel = select_landmarks(rows, None, 0.0, 0.2, 2, seed=3)
    dense = rows.toarray()
    # brute-force oracle: every landmark is nearest to its own center
    for node, center_idx in zip(sel.node_ids, sel.assignment):
        dists = ((sel.centers - dense[node]) ** 2).sum(axis=1)
        assert dists.argmin() == center_idx


def test_select_landmarks_fraction_one_is_permutation():
    rng = np.random.default_rng(6)
    rows = blob_rows(rng, [[0, 5], [5, 0]], 10, 0.5)
    sel = select_landmarks(rows, None, 0.0, 1.0, 2, seed=1)
    assert np.array_equal(np.sort(sel.node_ids), np.arange(20))


def test_select_landmarks_quota_invariant():
    rng = np.random.default_rng(7)
    rows = blob_rows(rng, [[0, 8], [8, 0], [8, 8]], 20, 0.5)
    sel = select_landmarks(rows, None, 0.0, 0.35, 3, seed=2)
    assert sel.size == int(0.35 * 60)
    counts = np.bincount(sel.assignment, minlength=3)
    assert counts.max() - counts.min() <= 1


def test_select_landmarks_deterministic():
    rng = np.random.default_rng(8)
    rows = blob_rows(rng, [[0, 8], [8, 0]], 20, 0.5)
    a = select_landmarks(rows, None, 0.2, 0.5, 2, seed=4)
    b = select_landmarks(rows, None, 0.2, 0.5, 2, seed=4)
    assert np.array_equal(a.node_ids, b.node_ids)
    assert np.allclose(a.centers, b.centers)


def test_factorize_landmarks_planted():
    rng = np.random.default_rng(9)
    u, r = 30, 4
    phi_true = np.zeros((u, r))
    phi_true[np.arange(u), rng.integers(0, r, u)] = 1.0
    psi_true = np.abs(rng.standard_normal((r, u)))
    m = phi_true @ psi_true
    lf = factorize_landmarks(m, r, tol=1e-10, max_iter=400, seed=0)
    assert lf.losses[-1] <= 1e-3 * (m * m).sum()


def test_factorize_landmarks_one_by_one():
    lf = factorize_landmarks(np.array([[0.7]]), 1, seed=0)
    assert np.allclose(lf.phi, [[1.0]])
    assert np.allclose(lf.psi, [[0.7]])
    assert lf.losses[-1] == pytest.approx(0.0, abs=1e-15)


def test_factorize_landmarks_zero_target():
    lf = factorize_landmarks(np.zeros((5, 5)), 2, seed=0)
    assert lf.losses[-1] == pytest.approx(0.0, abs=1e-12)


def test_factorize_landmarks_invariants():
    rng = np.random.default_rng(10)
    snap, labels = planted_snapshot(rng, [16, 16], 0.5, 0.05)
    m = build_pmi(snap).toarray()
    lf = factorize_landmarks(m, 8, seed=1)
    # simplex rows at the returned solution
    assert np.allclose(lf.phi.sum(axis=1), 1.0, atol=1e-9)
    assert lf.phi.min() >= -1e-12
    assert lf.psi.min() >= 0.0
    # monotone loss trace
    slack = 1e-8 * np.maximum(1.0, np.abs(lf.losses[:-1]))
    assert np.all(np.diff(lf.losses) <= slack)


def test_factorize_pair_masks_freeze():
    rng = np.random.default_rng(11)
    m = np.abs(rng.standard_normal((8, 8)))
    phi0 = np.abs(rng.standard_normal((8, 3)))
    phi0 /= phi0.sum(axis=1, keepdims=True)
    psi0 = np.abs(rng.standard_normal((3, 8)))
    mask = np.zeros(8, dtype=bool)
    mask[:4] = True
    phi, psi, _, _ = factorize_pair(m, phi0, psi0, phi_mask=mask, psi_mask=mask)
    assert np.array_equal(phi[4:], phi0[4:])
    assert np.array_equal(psi[:, 4:], psi0[:, 4:])


def test_factorize_landmarks_nonfinite():
    with pytest.raises(NonFiniteLoss):
        factorize_landmarks(np.array([[np.nan, 1.0], [1.0, 0.0]]), 1, seed=0)


def test_factorize_landmarks_rank_check():
    with pytest.raises(ValueError):
        factorize_landmarks(np.eye(3), 4, seed=0)
