import numpy as np
import pytest

from dynclust.biclustering import (
    BcrContext,
    bcr_gradient,
    bcr_value,
    bipartite_laplacian,
    smallest_eigvecs,
    _bipartite_degrees,
)
from dynclust.errors import ShapeMismatch


def random_orthonormal(rng, dim, k):
    q, _ = np.linalg.qr(rng.standard_normal((dim, k)))
    return q


def test_laplacian_identity_two_components():
    lap = bipartite_laplacian(np.eye(2))
    vals = np.linalg.eigvalsh(lap)
    assert int((vals < 1e-8).sum()) == 2


def test_laplacian_all_ones_single_component():
    lap = bipartite_laplacian(np.ones((2, 2)))
    vals = np.linalg.eigvalsh(lap)
    assert int((vals < 1e-8).sum()) == 1


def test_laplacian_zero_always_eigenvalue():
    rng = np.random.default_rng(0)
    c = np.abs(rng.standard_normal((6, 4)))
    vals = np.linalg.eigvalsh(bipartite_laplacian(c))
    assert vals[0] >= -1e-10
    assert vals[0] <= 1e-10


def test_laplacian_psd_and_symmetric():
    rng = np.random.default_rng(1)
    c = np.abs(rng.standard_normal((8, 5)))
    lap = bipartite_laplacian(c)
    assert np.allclose(lap, lap.T)
    assert np.linalg.eigvalsh(lap)[0] >= -1e-10


def test_smallest_eigvecs_diagonal():
    lap = np.diag([0.0, 1.0, 2.0])
    f = smallest_eigvecs(lap, 1)
    assert float(np.trace(f.T @ lap @ f)) == pytest.approx(0.0, abs=1e-12)
    assert abs(f[0, 0]) == pytest.approx(1.0)
    f2 = smallest_eigvecs(lap, 2)
    assert float(np.trace(f2.T @ lap @ f2)) == pytest.approx(1.0, abs=1e-10)


def test_smallest_eigvecs_random_psd():
    rng = np.random.default_rng(2)
    g = rng.standard_normal((10, 10))
    lap = g @ g.T
    f = smallest_eigvecs(lap, 3)
    oracle = np.sort(np.linalg.eigvalsh(lap))[:3].sum()
    assert float(np.trace(f.T @ lap @ f)) == pytest.approx(oracle, abs=1e-8)


def test_ky_fan_identity_many_instances():
    rng = np.random.default_rng(3)
    for _ in range(100):
        dim = int(rng.integers(5, 50))
        k = int(rng.integers(1, min(6, dim)))
        g = rng.standard_normal((dim, dim))
        lap = g @ g.T
        f = smallest_eigvecs(lap, k)
        oracle = np.sort(np.linalg.eigvalsh(lap))[:k].sum()
        assert float(np.trace(f.T @ lap @ f)) == pytest.approx(oracle, abs=1e-8)


def test_multiplicity_matches_blocks():
    rng = np.random.default_rng(4)
    for _ in range(100):
        b = int(rng.integers(1, 5))
        row_sizes = rng.integers(2, 6, b)
        col_sizes = rng.integers(2, 6, b)
        c = np.zeros((row_sizes.sum(), col_sizes.sum()))
        r0 = c0 = 0
        for rs, cs in zip(row_sizes, col_sizes):
            c[r0:r0 + rs, c0:c0 + cs] = 0.1 + rng.random((rs, cs))
            r0 += rs
            c0 += cs
        vals = np.linalg.eigvalsh(bipartite_laplacian(c))
        assert int((vals < 1e-8).sum()) == b


def test_bcr_value_matches_trace():
    rng = np.random.default_rng(5)
    c = np.abs(rng.standard_normal((7, 4)))
    f = random_orthonormal(rng, 11, 3)
    lap = bipartite_laplacian(c)
    assert bcr_value(c, f) == pytest.approx(float(np.trace(f.T @ lap @ f)), abs=1e-10)


def test_bcr_value_zero_for_disconnected_matching():
    c = np.eye(3)
    f = smallest_eigvecs(bipartite_laplacian(c), 3)
    assert bcr_value(c, f) == pytest.approx(0.0, abs=1e-10)


def test_bcr_value_rotation_invariant():
    rng = np.random.default_rng(6)
    c = np.abs(rng.standard_normal((6, 3)))
    f = random_orthonormal(rng, 9, 3)
    rot = random_orthonormal(rng, 3, 3)
    assert bcr_value(c, f @ rot) == pytest.approx(bcr_value(c, f), abs=1e-10)


def test_bcr_gradient_finite_differences():
    # oracle: the frozen-degree edge-sum form; its value at the anchor point
    # agrees with the live trace value, and its derivative is the gradient
    rng = np.random.default_rng(7)
    for _ in range(20):
        n, r, k = 6, 3, 2
        c = 0.1 + np.abs(rng.standard_normal((n, r)))
        f = random_orthonormal(rng, n + r, k)
        node_deg, feat_deg = _bipartite_degrees(c)
        grad = bcr_gradient(c, f, node_deg, feat_deg)
        fn = f[:n] / np.sqrt(node_deg)[:, None]
        ff = f[n:] / np.sqrt(feat_deg)[:, None]
        disagreement = (
            (fn * fn).sum(axis=1)[:, None]
            + (ff * ff).sum(axis=1)[None, :]
            - 2.0 * fn @ ff.T
        )

        def frozen_value(cmat):
            return float((cmat * disagreement).sum())

        # both regularizer forms coincide at the anchor point
        assert frozen_value(c) == pytest.approx(bcr_value(c, f), abs=1e-10)
        eps = 1e-6
        worst = 0.0
        for _ in range(6):
            i, j = divmod(int(rng.integers(0, n * r)), r)
            up = c.copy()
            up[i, j] += eps
            down = c.copy()
            down[i, j] -= eps
            fd = (frozen_value(up) - frozen_value(down)) / (2 * eps)
            denom = max(1e-8, abs(fd), abs(grad[i, j]))
            worst = max(worst, abs(fd - grad[i, j]) / denom)
        assert worst <= 1e-4


def test_bcr_gradient_properties():
    rng = np.random.default_rng(8)
    c = np.abs(rng.standard_normal((5, 3)))
    f = random_orthonormal(rng, 8, 2)
    node_deg, feat_deg = _bipartite_degrees(c)
    grad = bcr_gradient(c, f, node_deg, feat_deg)
    assert grad.min() >= -1e-12
    # matching node and feature embeddings give a zero gradient entry
    c2 = np.ones((2, 2))
    deg_n, deg_f = _bipartite_degrees(c2)
    f2 = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [0.0, 1.0]]) / np.sqrt(2)
    assert np.allclose(f2.T @ f2, np.eye(2))
    g2 = bcr_gradient(c2, f2, deg_n, deg_f)
    assert g2[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert g2[1, 1] == pytest.approx(0.0, abs=1e-12)
    assert g2[0, 1] > 0.0


def test_bcr_decomposability():
    rng = np.random.default_rng(9)
    blocks = [np.abs(rng.standard_normal((4, 3))) + 0.1 for _ in range(3)]
    stacked = np.zeros((12, 9))
    for i, blk in enumerate(blocks):
        stacked[4 * i: 4 * i + 4, 3 * i: 3 * i + 3] = blk
    k_per = 1
    total = 0.0
    for blk in blocks:
        f = smallest_eigvecs(bipartite_laplacian(blk), k_per)
        total += bcr_value(blk, f)
    f_all = smallest_eigvecs(bipartite_laplacian(stacked), 3 * k_per)
    assert bcr_value(stacked, f_all) == pytest.approx(total, abs=1e-9)


def test_bcr_context_refresh_matches_generic():
    rng = np.random.default_rng(10)
    c = np.abs(rng.standard_normal((12, 6))) + 0.05
    ctx = BcrContext(3)
    ctx.refresh(c)
    fast = ctx.value(c)
    f = smallest_eigvecs(bipartite_laplacian(c), 3)
    assert fast == pytest.approx(bcr_value(c, f), abs=1e-8)


def test_shape_checks():
    rng = np.random.default_rng(11)
    c = np.abs(rng.standard_normal((4, 3)))
    with pytest.raises(ShapeMismatch):
        bcr_value(c, np.eye(5))
    with pytest.raises(ShapeMismatch):
        smallest_eigvecs(np.eye(3), 4)
    with pytest.raises(ShapeMismatch):
        bipartite_laplacian(-c)
