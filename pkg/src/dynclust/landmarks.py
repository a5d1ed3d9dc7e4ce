"""Temporal landmark selection and landmark factorization.

Landmarks are representative nodes picked by K-means on PMI rows with an added
term that keeps centers representative at the previous timestamp. Their PMI
block is factorized first (nonnegative, basis rows on the probability simplex)
and the resulting factors anchor every subset factorization afterwards.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import EmptyCluster
from .factorization import factorize_pair, initial_coefficients
from .validation import spawn_rng

_LANDMARK_SALT = 0x6C616E64
_MAX_RESEEDS = 3
# basis rows need at least this many in-block edges before the block fit is
# trusted over the cluster seed (full rows carry far more evidence)
_MIN_BLOCK_EDGES = 3


# ---------------------------------------------------------------------------
# distances


def _row_sq_norms(rows):
    if sp.issparse(rows):
        return np.asarray(rows.multiply(rows).sum(axis=1)).ravel()
    rows = np.asarray(rows)
    return (rows * rows).sum(axis=1)


def _sq_dists(rows, centers, row_sq=None):
    """Squared Euclidean distances between every row and every center."""
    if row_sq is None:
        row_sq = _row_sq_norms(rows)
    cross = rows @ centers.T
    if sp.issparse(cross):
        cross = cross.toarray()
    cross = np.asarray(cross)
    c_sq = (centers * centers).sum(axis=1)
    d = row_sq[:, None] - 2.0 * cross + c_sq[None, :]
    return np.maximum(d, 0.0)


def _temporal_sq_dists(rows_t, rows_prev, lam, centers, sq_t=None, sq_prev=None):
    """Per-row distance ``||m_t - c||^2 + lam * ||m_prev - c||^2``."""
    d = _sq_dists(rows_t, centers, sq_t)
    if rows_prev is not None and lam > 0.0:
        d = d + lam * _sq_dists(rows_prev, centers, sq_prev)
    return d


def _row_dense(rows, idx):
    r = rows[idx]
    return r.toarray().ravel() if sp.issparse(r) else np.asarray(r).ravel()


# ---------------------------------------------------------------------------
# temporal K-means


def update_centers(pmi_t, pmi_prev, assignment, lam, n_centers=None):
    """Closed-form center update of the temporally regularized K-means step.

    With a previous snapshot the minimizer of
    ``sum_a ||m_{a,t} - c||^2 + lam ||m_{a,t-1} - c||^2`` over cluster members
    is ``(sum m_t + lam * sum m_prev) / ((1 + lam) |cluster|)``; at the first
    timestamp it is the plain centroid. Empty clusters are re-seeded at the
    row farthest from its own center.
    """
    centers, _ = _update_centers_counted(pmi_t, pmi_prev, assignment, lam, n_centers)
    return centers


def _update_centers_counted(pmi_t, pmi_prev, assignment, lam, n_centers=None):
    assignment = np.asarray(assignment)
    k = int(n_centers if n_centers is not None else assignment.max() + 1)
    n, dim = pmi_t.shape
    ind = sp.csr_matrix(
        (np.ones(n), (assignment, np.arange(n))), shape=(k, n)
    )
    sums = np.asarray((ind @ pmi_t).todense() if sp.issparse(pmi_t) else ind @ pmi_t)
    counts = np.asarray(ind.sum(axis=1)).ravel()
    if pmi_prev is not None and lam > 0.0:
        sums = sums + lam * np.asarray(
            (ind @ pmi_prev).todense() if sp.issparse(pmi_prev) else ind @ pmi_prev
        )
        scale = (1.0 + lam) * counts
    else:
        scale = counts.copy()
    centers = np.zeros((k, dim))
    nonempty = counts > 0
    centers[nonempty] = sums[nonempty] / scale[nonempty, None]
    reseeded = 0
    if not nonempty.all():
        d = _temporal_sq_dists(pmi_t, pmi_prev, lam, centers[nonempty])
        own = d[np.arange(n), np.searchsorted(np.flatnonzero(nonempty), assignment)]
        order = np.argsort(-own)
        used = 0
        for l in np.flatnonzero(~nonempty):
            centers[l] = _row_dense(pmi_t, int(order[used]))
            used += 1
            reseeded += 1
    return centers, reseeded


def _kmeanspp_init(rows_t, rows_prev, lam, k, rng, sq_t, sq_prev):
    n = rows_t.shape[0]
    first = int(rng.integers(0, n))
    centers = [_row_dense(rows_t, first)]
    d = _temporal_sq_dists(rows_t, rows_prev, lam, np.asarray(centers), sq_t, sq_prev)
    best = d[:, 0]
    for _ in range(1, k):
        total = best.sum()
        if total <= 0:
            idx = int(rng.integers(0, n))
        else:
            idx = int(rng.choice(n, p=best / total))
        centers.append(_row_dense(rows_t, idx))
        d_new = _temporal_sq_dists(
            rows_t, rows_prev, lam, centers[-1][None, :], sq_t, sq_prev
        ).ravel()
        best = np.minimum(best, d_new)
    return np.asarray(centers)


def temporal_kmeans(
    pmi_t,
    pmi_prev,
    lam,
    k,
    seed,
    tol=1e-6,
    max_iter=100,
    restarts=1,
    warm_centers=None,
):
    """Lloyd iterations of the temporally regularized objective.

    Returns (centers, assignment, objective trace). The objective is
    non-increasing across iterations except when an empty cluster forces a
    re-seed; more than three re-seeds raise EmptyCluster. With ``restarts`` > 1
    the best run by final objective is kept (seeding varies per restart);
    ``warm_centers`` adds one extra run started from the given centers.
    """
    best = None
    attempts = [("seeded", a) for a in range(max(1, restarts))]
    if warm_centers is not None:
        attempts.append(("warm", 0))
    for kind, attempt in attempts:
        out = _temporal_kmeans_once(
            pmi_t,
            pmi_prev,
            lam,
            k,
            (seed, attempt),
            tol,
            max_iter,
            warm_centers if kind == "warm" else None,
        )
        if best is None or out[2][-1] < best[2][-1]:
            best = out
    return best


def _temporal_kmeans_once(
    pmi_t, pmi_prev, lam, k, seed_key, tol, max_iter, init_centers=None
):
    seed, attempt = seed_key
    rng = spawn_rng(seed, _LANDMARK_SALT, k, attempt)
    sq_t = _row_sq_norms(pmi_t)
    sq_prev = _row_sq_norms(pmi_prev) if pmi_prev is not None else None
    if init_centers is not None:
        centers = np.array(init_centers, dtype=np.float64)
    else:
        centers = _kmeanspp_init(pmi_t, pmi_prev, lam, k, rng, sq_t, sq_prev)
    trace = []
    assignment = None
    reseeds = 0
    prev_obj = np.inf
    for _ in range(max_iter):
        d = _temporal_sq_dists(pmi_t, pmi_prev, lam, centers, sq_t, sq_prev)
        assignment = d.argmin(axis=1)
        obj = float(d[np.arange(len(assignment)), assignment].sum())
        trace.append(obj)
        centers, reseeded = _update_centers_counted(pmi_t, pmi_prev, assignment, lam, k)
        if reseeded:
            reseeds += reseeded
            if reseeds > _MAX_RESEEDS:
                raise EmptyCluster(f"k-means lost clusters after {reseeds} re-seeds")
            prev_obj = np.inf
            continue
        if prev_obj - obj <= tol * max(1.0, abs(prev_obj)) and np.isfinite(prev_obj):
            break
        prev_obj = obj
    d = _temporal_sq_dists(pmi_t, pmi_prev, lam, centers, sq_t, sq_prev)
    assignment = d.argmin(axis=1)
    return centers, assignment, np.asarray(trace)


def _split_worst_cluster(pmi, centers, seed):
    """Warm centers for k+1: bisect the cluster with the largest within-SSE."""
    d = _sq_dists(pmi, centers)
    assign = d.argmin(axis=1)
    own = d[np.arange(len(assign)), assign]
    within = np.bincount(assign, weights=own, minlength=len(centers))
    worst = int(within.argmax())
    members = np.flatnonzero(assign == worst)
    if len(members) < 2:
        farthest = int(own.argmax())
        return np.vstack([centers, _row_dense(pmi, farthest)])
    sub, _, _ = temporal_kmeans(
        pmi[members], None, 0.0, 2, seed, max_iter=30, restarts=2
    )
    return np.vstack([np.delete(centers, worst, axis=0), sub])


def elbow_scan(pmi, k_max, seed=0):
    """SSE curve and converged centers for k = 1..k_max (best-effort)."""
    n = pmi.shape[0]
    mean_row = np.asarray(pmi.mean(axis=0)).ravel()
    sse = {1: float(_sq_dists(pmi, mean_row[None, :]).sum())}
    centers = {1: mean_row[None, :]}
    prev = mean_row[None, :]
    for k in range(2, min(k_max, n) + 1):
        try:
            warm = _split_worst_cluster(pmi, prev, seed) if prev is not None else None
            cent, _, trace = temporal_kmeans(
                pmi, None, 0.0, k, seed, restarts=3, warm_centers=warm
            )
        except EmptyCluster:
            break
        sse[k] = float(trace[-1])
        centers[k] = cent
        prev = cent
    return sse, centers


def elbow_cluster_count(pmi, k_max, seed=0, scan=None):
    """Cluster count from the elbow of the within-cluster SSE curve.

    Runs K-means for k = 2..k_max on the PMI rows (warm-started by bisecting
    the previous solution, which keeps the curve stable) and returns the k
    with the largest second difference of the SSE curve, ties toward smaller
    k. Returns 1 when all rows are identical.
    """
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    if scan is None:
        scan = elbow_scan(pmi, k_max, seed)
    sse, _ = scan
    top = max(sse)
    if sse[1] <= 1e-12 * max(1.0, _row_sq_norms(pmi).max(initial=0.0)):
        return 1
    if min(k_max, pmi.shape[0]) == 2:
        return 2
    candidates = [k for k in range(2, top) if k + 1 in sse]
    if not candidates:
        return min(2, top) if top >= 2 else 1
    curvature = [sse[k - 1] - 2.0 * sse[k] + sse[k + 1] for k in candidates]
    return int(candidates[int(np.argmax(curvature))])


# ---------------------------------------------------------------------------
# landmark selection


@dataclass(frozen=True)
class LandmarkSet:
    """Landmark node ids, the centers that selected them, and the ownership map."""

    node_ids: np.ndarray
    centers: np.ndarray
    assignment: np.ndarray

    @property
    def size(self):
        return len(self.node_ids)


def select_landmarks(
    pmi_t, pmi_prev, lam, fraction, n_centers, seed, count=None, warm_centers=None
):
    """Pick landmarks nearest to the temporally regularized K-means centers.

    Every center contributes an equal share (within one) of the landmark
    budget, which is ``floor(fraction * n)`` nodes unless an absolute ``count``
    is given. A node claimed by several centers goes to its nearest center;
    centers short of candidates fill up with their nearest unselected rows.
    """
    n = pmi_t.shape[0]
    m = int(count) if count is not None else int(fraction * n)
    if not 1 <= m <= n:
        raise ValueError(f"landmark budget {m} outside [1, {n}]")
    if m < n_centers:
        raise ValueError(f"budget {m} smaller than center count {n_centers}")
    centers, assignment, _ = temporal_kmeans(
        pmi_t, pmi_prev, lam, n_centers, seed, restarts=4, warm_centers=warm_centers
    )
    d = _temporal_sq_dists(pmi_t, pmi_prev, lam, centers)

    sizes = np.bincount(assignment, minlength=n_centers)
    base, extra = divmod(m, n_centers)
    quota = np.full(n_centers, base, dtype=np.int64)
    if extra:
        order = np.lexsort((np.arange(n_centers), -sizes))
        quota[order[:extra]] += 1

    selected = np.zeros(n, dtype=bool)
    owner = np.full(n, -1, dtype=np.int64)
    deficits = np.zeros(n_centers, dtype=np.int64)
    for l in range(n_centers):
        members = np.flatnonzero(assignment == l)
        members = members[np.argsort(d[members, l], kind="stable")]
        take = members[: quota[l]]
        selected[take] = True
        owner[take] = l
        deficits[l] = quota[l] - len(take)
    for l in np.flatnonzero(deficits > 0):
        pool = np.flatnonzero(~selected)
        pool = pool[np.argsort(d[pool, l], kind="stable")]
        take = pool[: deficits[l]]
        selected[take] = True
        owner[take] = l
    node_ids = np.concatenate(
        [np.flatnonzero((owner == l) & selected) for l in range(n_centers)]
    )
    return LandmarkSet(
        node_ids=node_ids, centers=centers, assignment=owner[node_ids]
    )


# ---------------------------------------------------------------------------
# landmark factorization


@dataclass
class LandmarkFactors:
    """Basis (rows on the simplex) and nonnegative coefficients with loss trace."""

    phi: np.ndarray
    psi: np.ndarray
    losses: np.ndarray = field(default_factory=lambda: np.empty(0))
    converged: bool = True


def initial_basis(u, r, rng, init_assignment=None):
    """Starting basis rows: one-hot at the cluster column or random simplex points."""
    if init_assignment is not None:
        phi = np.zeros((u, r))
        phi[np.arange(u), np.asarray(init_assignment) % r] = 1.0
        return phi
    raw = np.abs(rng.standard_normal((u, r))) + 1e-3
    return raw / raw.sum(axis=1, keepdims=True)


def factorize_landmarks(
    m00, r, tol=1e-6, max_iter=200, seed=0, init_assignment=None, active_cols=None
):
    """Factorize the landmark PMI block into simplex basis and coefficients.

    When ``init_assignment`` (landmark -> cluster index) is given, basis rows
    start one-hot at their cluster column, which identifies columns with
    communities, and the solve stays on those columns (plus any listed in
    ``active_cols``); otherwise rows start at random points of the simplex and
    all columns are free.
    """
    m = m00.toarray() if sp.issparse(m00) else np.asarray(m00, dtype=np.float64)
    u = m.shape[0]
    if r > u:
        raise ValueError(f"rank {r} exceeds landmark count {u}")
    rng = spawn_rng(seed, _LANDMARK_SALT, 0xFAC)
    phi0 = initial_basis(u, r, rng, init_assignment)
    col_mask = active_cols
    psi0 = initial_coefficients(m, phi0)
    if init_assignment is not None:
        if col_mask is None:
            col_mask = phi0.sum(axis=0) > 0
        # rows with almost no in-block edges are unidentifiable from M00
        # alone; keep them at their cluster seed and fit the rest
        keep = (np.abs(m) > 0).sum(axis=1) >= _MIN_BLOCK_EDGES
        fit, psi, losses, converged = factorize_pair(
            m[keep], phi0[keep], psi0, tol, max_iter, col_mask=col_mask
        )
        phi = phi0
        phi[keep] = fit
    else:
        phi, psi, losses, converged = factorize_pair(
            m, phi0, psi0, tol, max_iter, col_mask=col_mask
        )
    return LandmarkFactors(phi=phi, psi=psi, losses=losses, converged=converged)
