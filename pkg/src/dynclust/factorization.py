"""Separated matrix factorization: block decomposition, subset solvers, baseline.

The snapshot PMI matrix is tiled by (landmark | subset) row and column groups.
Each subset solve fits nonnegative link factors P (rows on the simplex) and Q
against the landmark anchor M00 so that the subset embedding C = P Phi lives
in the landmark basis. Cross-subset tiles couple subsets only through anchor
values published at the start of a solve round, which keeps subset solves
independent, order-free and safe to run concurrently.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import NonFiniteLoss, ShapeMismatch, TooManySubsets
from .validation import spawn_rng

_FACT_SALT = 0x66616374


# ---------------------------------------------------------------------------
# simplex projection


def simplex_project_rows(mat):
    """Euclidean projection of every row onto the probability simplex."""
    v = np.asarray(mat, dtype=np.float64)
    n, d = v.shape
    u = np.sort(v, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1)
    j = np.arange(1, d + 1)
    cond = u + (1.0 - css) / j > 0
    rho = d - 1 - cond[:, ::-1].argmax(axis=1)
    lam = (1.0 - css[np.arange(n), rho]) / (rho + 1.0)
    return np.maximum(v + lam[:, None], 0.0)


def simplex_project(row):
    """Euclidean projection of one vector onto the probability simplex."""
    return simplex_project_rows(np.asarray(row, dtype=np.float64)[None, :])[0]


# ---------------------------------------------------------------------------
# shared projected-gradient engine for ||M - A B||^2 with simplex rows on A


def initial_coefficients(m, phi):
    """Cheap nonnegative init for the coefficient side of ``M ~ Phi Psi``."""
    col_mass = (phi * phi).sum(axis=0)
    scale = np.where(col_mass > 0, col_mass, 1.0)
    return np.maximum((phi.T @ m) / scale[:, None], 0.0)


def factorize_pair(
    m,
    phi,
    psi,
    tol=1e-6,
    max_iter=200,
    phi_mask=None,
    psi_mask=None,
    inner_steps=1,
    alpha=0.0,
    phi_prev=None,
    col_mask=None,
):
    """Alternating projected gradient descent on ``||M - Phi Psi||_F^2``.

    Phi rows stay on the probability simplex, Psi stays nonnegative. Rows of
    Phi outside ``phi_mask`` and columns of Psi outside ``psi_mask`` are never
    touched. ``col_mask`` restricts the optimization to a face of the simplex:
    basis columns outside it stay exactly zero (and the matching coefficient
    rows untouched), which keeps cluster-seeded columns identifiable. An
    optional smoothness pull ``alpha * ||Phi - phi_prev||^2`` is supported for
    the temporal baseline. Steps are backtracked until they do not increase
    the loss, so the returned loss trace is non-increasing.
    """
    m = m.toarray() if sp.issparse(m) else np.asarray(m, dtype=np.float64)
    if not np.all(np.isfinite(m)):
        raise NonFiniteLoss("factorization target contains non-finite values")
    phi = np.array(phi, dtype=np.float64)
    psi = np.array(psi, dtype=np.float64)
    rows = phi.shape[0]
    cols = psi.shape[1]
    rank = phi.shape[1]
    phi_mask = np.ones(rows, dtype=bool) if phi_mask is None else np.asarray(phi_mask)
    psi_mask = np.ones(cols, dtype=bool) if psi_mask is None else np.asarray(psi_mask)
    col_mask = np.ones(rank, dtype=bool) if col_mask is None else np.asarray(col_mask)

    def full_loss():
        r = m - phi @ psi
        val = float((r * r).sum())
        if alpha and phi_prev is not None:
            d = phi - phi_prev
            val += alpha * float((d * d).sum())
        return val

    losses = [full_loss()]
    if not np.isfinite(losses[0]):
        raise NonFiniteLoss("non-finite initial loss")
    step_phi, step_psi = 1e-2, 1e-2
    converged = False
    for _ in range(max_iter):
        if psi_mask.any():
            for _ in range(inner_steps):
                target = m[:, psi_mask]
                sub = psi[np.ix_(col_mask, psi_mask)]
                basis = phi[:, col_mask]
                r = basis @ sub - target
                loss0 = float((r * r).sum())
                grad = 2.0 * basis.T @ r
                step_psi *= 2.0
                for _ in range(50):
                    trial = np.maximum(sub - step_psi * grad, 0.0)
                    rt = basis @ trial - target
                    if float((rt * rt).sum()) <= loss0:
                        psi[np.ix_(col_mask, psi_mask)] = trial
                        break
                    step_psi *= 0.5
        if phi_mask.any():
            for _ in range(inner_steps):
                target = m[phi_mask]
                coeff = psi[col_mask]
                sub = phi[np.ix_(phi_mask, col_mask)]
                prev = (
                    phi_prev[np.ix_(phi_mask, col_mask)]
                    if (alpha and phi_prev is not None)
                    else None
                )

                def part_loss(x):
                    r = x @ coeff - target
                    val = float((r * r).sum())
                    if prev is not None:
                        d = x - prev
                        val += alpha * float((d * d).sum())
                    return val

                loss0 = part_loss(sub)
                grad = 2.0 * (sub @ coeff - target) @ coeff.T
                if prev is not None:
                    grad = grad + 2.0 * alpha * (sub - prev)
                step_phi *= 2.0
                for _ in range(50):
                    trial = simplex_project_rows(sub - step_phi * grad)
                    if part_loss(trial) <= loss0:
                        phi[np.ix_(phi_mask, col_mask)] = trial
                        break
                    step_phi *= 0.5
        losses.append(full_loss())
        if not np.isfinite(losses[-1]):
            raise NonFiniteLoss("loss became non-finite")
        if abs(losses[-2] - losses[-1]) <= tol * max(1.0, abs(losses[-2])):
            converged = True
            break
    return phi, psi, np.asarray(losses), converged


# ---------------------------------------------------------------------------
# subset plans and block views


@dataclass(frozen=True)
class SubsetPlan:
    """Disjoint near-equal subsets covering all non-landmark nodes."""

    subsets: list
    seed: int


def partition_subsets(n, landmark_ids, s, seed):
    """Uniform random split of the non-landmark nodes into s near-equal subsets."""
    if s < 1:
        raise TooManySubsets("need at least one subset")
    landmark_ids = np.asarray(landmark_ids)
    rest = np.setdiff1d(np.arange(n), landmark_ids)
    if len(rest) < s:
        raise TooManySubsets(f"{s} subsets requested for {len(rest)} non-landmark nodes")
    rng = spawn_rng(seed, _FACT_SALT, s)
    rest = rng.permutation(rest)
    sizes = np.full(s, len(rest) // s, dtype=np.int64)
    sizes[: len(rest) % s] += 1
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    subsets = [np.sort(rest[bounds[i]: bounds[i + 1]]) for i in range(s)]
    return SubsetPlan(subsets=subsets, seed=seed)


class BlockView:
    """Tiles of the PMI matrix indexed by (landmark | subset) groups.

    Tiles partition the stored entries exactly; slicing is done once on a
    permuted copy so repeated block access is cheap.
    """

    def __init__(self, pmi, plan, landmark_ids):
        landmark_ids = np.asarray(
            getattr(landmark_ids, "node_ids", landmark_ids)
        )
        n = pmi.shape[0]
        covered = len(landmark_ids) + sum(len(g) for g in plan.subsets)
        if covered != n:
            raise ShapeMismatch(
                f"plan and landmarks cover {covered} nodes, matrix has {n}"
            )
        self.landmark_ids = landmark_ids
        self.subsets = [np.asarray(g) for g in plan.subsets]
        order = np.concatenate([landmark_ids] + self.subsets).astype(np.int64)
        self._perm = sp.csr_matrix(pmi)[order][:, order].tocsr()
        self.u = len(landmark_ids)
        sizes = [len(g) for g in self.subsets]
        starts = np.concatenate([[self.u], self.u + np.cumsum(sizes)])
        self._span = [(int(starts[i]), int(starts[i + 1])) for i in range(len(sizes))]

    @property
    def s(self):
        return len(self.subsets)

    def m00(self, dense=True):
        block = self._perm[: self.u, : self.u]
        return block.toarray() if dense else block

    def m_ii(self, i, dense=True):
        a, b = self._span[i]
        block = self._perm[a:b, a:b]
        return block.toarray() if dense else block

    def m_0i(self, i, dense=True):
        a, b = self._span[i]
        block = self._perm[: self.u, a:b]
        return block.toarray() if dense else block

    def m_i0(self, i, dense=True):
        a, b = self._span[i]
        block = self._perm[a:b, : self.u]
        return block.toarray() if dense else block

    def m_cross(self, i, j, dense=True):
        a, b = self._span[i]
        c, d = self._span[j]
        block = self._perm[a:b, c:d]
        return block.toarray() if dense else block

    def rest_columns(self, i):
        """Column ids (in permuted order) of all other subsets."""
        a, b = self._span[i]
        lo = self._span[0][0]
        hi = self._span[-1][1]
        return np.concatenate([np.arange(lo, a), np.arange(b, hi)])

    def m_i_rest(self, i):
        a, b = self._span[i]
        cols = self.rest_columns(i)
        return self._perm[a:b][:, cols].toarray()

    def m_rest_i(self, i):
        a, b = self._span[i]
        cols = self.rest_columns(i)
        return self._perm[cols][:, a:b].toarray()


def build_blocks(pmi, plan, landmarks):
    """Block view of the PMI matrix for a subset plan and landmark set."""
    return BlockView(pmi, plan, landmarks)


# ---------------------------------------------------------------------------
# separated losses


def _sq(x):
    return float((x * x).sum())


def intra_loss(blocks, i, p, q, m00=None):
    """Three-term subset loss against the landmark anchor."""
    m00 = blocks.m00() if m00 is None else m00
    mii = blocks.m_ii(i)
    m0i = blocks.m_0i(i)
    mi0 = blocks.m_i0(i)
    if p.shape != (mii.shape[0], m00.shape[0]) or q.shape != (m00.shape[0], mii.shape[0]):
        raise ShapeMismatch(
            f"P {p.shape} / Q {q.shape} do not match blocks {mii.shape} and {m00.shape}"
        )
    pm = p @ m00
    gq = m00 @ q
    return _sq(mii - pm @ q) + _sq(m0i - gq) + _sq(mi0 - pm)


def inter_loss(blocks, i, j, p_i, q_i, p_j, q_j, m00=None, qj=True):
    """Cross-subset loss for the unordered pair {i, j}.

    With ``qj=True`` (default) the tile (i, j) is matched by ``P^i M00 Q^j``,
    mirroring the block decomposition; ``qj=False`` reuses ``Q^i`` in the first
    term, which only conforms when both subsets have equal size.
    """
    m00 = blocks.m00() if m00 is None else m00
    mij = blocks.m_cross(i, j)
    mji = blocks.m_cross(j, i)
    first_q = q_j if qj else q_i
    if (p_i.shape[0], first_q.shape[1]) != mij.shape:
        raise ShapeMismatch(
            f"tile {mij.shape} cannot be matched by P{p_i.shape} M00 Q{first_q.shape}"
        )
    return _sq(mij - p_i @ m00 @ first_q) + _sq(mji - p_j @ m00 @ q_i)


# ---------------------------------------------------------------------------
# subset solver


@dataclass
class InterAnchors:
    """Frozen cross-subset context published at the start of a solve round."""

    b_rest: np.ndarray        # M00 @ Q_rest, u x m
    row_targets: np.ndarray   # PMI tiles (i, rest), n_i x m
    a_rest: np.ndarray        # P_rest @ M00, m x u
    col_targets: np.ndarray   # PMI tiles (rest, i), m x n_i


@dataclass
class SubsetFactors:
    """Link factors for one subset plus its embedding and solve diagnostics."""

    p: np.ndarray
    q: np.ndarray
    c: np.ndarray
    objective_trace: np.ndarray = field(default_factory=lambda: np.empty(0))
    converged: bool = True


def assemble_embeddings(p, phi):
    """Subset embedding C = P Phi with a row-simplex projection guard."""
    if p.shape[1] != phi.shape[0]:
        raise ShapeMismatch(f"P {p.shape} does not match Phi {phi.shape}")
    c = p @ phi
    sums = c.sum(axis=1)
    if (c < -1e-12).any() or np.abs(sums - 1.0).max(initial=0.0) > 1e-9:
        c = simplex_project_rows(c)
    return c


def default_inits(blocks, i, u, seed):
    """Seeded scaled-absolute-Gaussian starting factors for one subset."""
    rng = spawn_rng(seed, _FACT_SALT, 0x505, i)
    n_i = len(blocks.subsets[i])
    p0 = simplex_project_rows(np.abs(rng.standard_normal((n_i, u))))
    q_raw = np.abs(rng.standard_normal((u, n_i)))
    m0i = blocks.m_0i(i)
    denom = float(np.linalg.norm(blocks.m00(dense=False) @ q_raw))
    scale = float(np.linalg.norm(m0i)) / denom if denom > 0 else 0.0
    return p0, q_raw * scale


def solve_subset(
    blocks,
    i,
    phi,
    beta=0.0,
    bcr=None,
    prev_c=None,
    alpha=0.0,
    anchors=None,
    dynamic_rows=None,
    tol=1e-6,
    max_iter=100,
    seed=0,
    inner_steps=1,
    p_init=None,
    q_init=None,
):
    """Block-coordinate descent for one subset (F, then Q, then P per sweep).

    The logged objective is the subset's full loss: intra terms, the frozen
    cross-subset share, the optional smoothness pull toward ``prev_c`` and the
    bi-clustering penalty evaluated at its exact minimizer over F. It is
    non-increasing across sweeps by construction. ``dynamic_rows`` restricts P
    updates (hence embedding changes) to the flagged rows.
    """
    m00 = blocks.m00(dense=False)
    mii = blocks.m_ii(i)
    m0i = blocks.m_0i(i)
    mi0 = blocks.m_i0(i)
    u = m00.shape[0]
    n_i = mii.shape[0]
    if phi.shape[0] != u:
        raise ShapeMismatch(f"Phi has {phi.shape[0]} rows, landmark block is {u}")
    for arr in (m00.data, mii, m0i, mi0, phi):
        if not np.all(np.isfinite(arr)):
            raise NonFiniteLoss("solver input contains non-finite values")

    if p_init is None or q_init is None:
        dp, dq = default_inits(blocks, i, u, seed)
        p = dp if p_init is None else np.array(p_init, dtype=np.float64)
        q = dq if q_init is None else np.array(q_init, dtype=np.float64)
    else:
        p = np.array(p_init, dtype=np.float64)
        q = np.array(q_init, dtype=np.float64)
    mask = (
        np.ones(n_i, dtype=bool) if dynamic_rows is None else np.asarray(dynamic_rows)
    )

    use_bcr = beta > 0.0 and bcr is not None
    use_alpha = alpha > 0.0 and prev_c is not None

    def q_partial(q_trial):
        gq = m00 @ q_trial
        val = _sq(mii - p @ m00 @ q_trial) + _sq(m0i - gq)
        if anchors is not None:
            val += _sq(anchors.col_targets - anchors.a_rest @ q_trial)
        return val

    def p_partial(p_trial, gq):
        pm = p_trial @ m00
        val = _sq(mii - p_trial @ gq) + _sq(mi0 - pm)
        if anchors is not None:
            val += _sq(anchors.row_targets - p_trial @ anchors.b_rest)
        c_trial = p_trial @ phi
        if use_alpha:
            val += alpha * _sq(c_trial - prev_c)
        if use_bcr:
            val += beta * bcr.value(c_trial)
        return val

    def objective():
        gq = m00 @ q
        base = _sq(m0i - gq)
        if anchors is not None:
            base += _sq(anchors.col_targets - anchors.a_rest @ q)
        return base + p_partial(p, gq)

    if use_bcr:
        bcr.refresh(p @ phi)
    trace = [objective()]
    step_p, step_q = 1e-2, 1e-2
    converged = False
    for _ in range(max_iter):
        # Q step
        for _ in range(inner_steps):
            pm = p @ m00
            gq = m00 @ q
            loss0 = q_partial(q)
            r1 = pm @ q - mii
            grad = 2.0 * pm.T @ r1 + 2.0 * m00.T @ (gq - m0i)
            if anchors is not None:
                grad += 2.0 * anchors.a_rest.T @ (anchors.a_rest @ q - anchors.col_targets)
            step_q *= 2.0
            for _ in range(50):
                trial = np.maximum(q - step_q * grad, 0.0)
                if q_partial(trial) <= loss0:
                    q = trial
                    break
                step_q *= 0.5
        # P step, restricted to dynamic rows
        if mask.any():
            for _ in range(inner_steps):
                gq = m00 @ q
                loss0 = p_partial(p, gq)
                pm = p @ m00
                grad = 2.0 * (p @ gq - mii) @ gq.T + 2.0 * (pm - mi0) @ m00.T
                if anchors is not None:
                    grad += 2.0 * (p @ anchors.b_rest - anchors.row_targets) @ anchors.b_rest.T
                c_now = p @ phi
                if use_alpha:
                    grad += 2.0 * alpha * (c_now - prev_c) @ phi.T
                if use_bcr:
                    grad += beta * bcr.gradient(c_now) @ phi.T
                step_p *= 2.0
                for _ in range(50):
                    trial = p.copy()
                    trial[mask] = simplex_project_rows(p[mask] - step_p * grad[mask])
                    if p_partial(trial, gq) <= loss0:
                        p = trial
                        break
                    step_p *= 0.5
        if use_bcr:
            bcr.refresh(p @ phi)
        trace.append(objective())
        if not np.isfinite(trace[-1]):
            raise NonFiniteLoss("subset objective became non-finite")
        if abs(trace[-2] - trace[-1]) <= tol * max(1.0, abs(trace[-2])):
            converged = True
            break
    c = assemble_embeddings(p, phi)
    return SubsetFactors(
        p=p, q=q, c=c, objective_trace=np.asarray(trace), converged=converged
    )


# ---------------------------------------------------------------------------
# non-separated temporal baseline


def _match_cluster_columns(labels, prev_cols, r):
    """Assign one basis column per cluster id, reusing the column most of the
    cluster's members occupied previously; clusters without a coherent claim
    open the least-used free column."""
    ids, sizes = np.unique(labels, return_counts=True)
    order = np.argsort(-sizes, kind="stable")
    usage = (
        np.bincount(prev_cols, minlength=r).astype(float)
        if prev_cols is not None
        else np.zeros(r)
    )
    taken = set()
    col_of = {}
    for idx in order:
        cluster = ids[idx]
        best = -1
        if prev_cols is not None:
            votes = np.bincount(prev_cols[labels == cluster], minlength=r).astype(float)
            for c in taken:
                votes[c] = -1.0
            best = int(votes.argmax())
            if votes[best] < 0.3 * sizes[idx]:
                best = -1
        if best < 0:
            free = [c for c in range(r) if c not in taken]
            best = min(free, key=lambda c: (usage[c], c))
        col_of[int(cluster)] = best
        taken.add(best)
    return col_of


def baseline_temporal_mf(pmis, r, alpha, tol=1e-6, max_iter=200, seed=0, k_max=16):
    """Joint constrained factorization of every snapshot with temporal smoothing.

    Solves ``||M_t - C_t H_t||^2 + alpha ||C_t - C_{t-1}||^2`` per timestamp
    (no smoothing at t=1), with C rows on the simplex and H nonnegative. With
    ``alpha=0`` the timestamps decouple and each is solved independently.
    Returns (list of (C, H), list of loss traces).
    """
    from .landmarks import elbow_cluster_count, temporal_kmeans

    results = []
    traces = []
    prev_c = None
    for t, pmi in enumerate(pmis):
        m = pmi.toarray() if sp.issparse(pmi) else np.asarray(pmi, dtype=np.float64)
        n = m.shape[0]
        if r > n:
            raise ShapeMismatch(f"rank {r} exceeds node count {n}")
        k = elbow_cluster_count(pmi, min(k_max, max(2, n)), seed=seed)
        if k < 2:
            labels = np.zeros(n, dtype=np.int64)
        else:
            _, labels, _ = temporal_kmeans(pmi, None, 0.0, k, seed, restarts=4)
        warm = alpha > 0.0 and prev_c is not None
        prev_cols = extract_columns(prev_c) if warm else None
        col_of = _match_cluster_columns(labels, prev_cols, r)
        c0 = np.zeros((n, r))
        c0[np.arange(n), [col_of[int(c)] for c in labels]] = 1.0
        h0 = initial_coefficients(m, c0)
        col_mask = c0.sum(axis=0) > 0
        if warm:
            col_mask |= prev_c.sum(axis=0) > 1e-12
        c, h, losses, _ = factorize_pair(
            m,
            c0,
            h0,
            tol=tol,
            max_iter=max_iter,
            alpha=alpha if warm else 0.0,
            phi_prev=prev_c if warm else None,
            col_mask=col_mask,
        )
        results.append((c, h))
        traces.append(losses)
        prev_c = c
    return results, traces


def extract_columns(c):
    """Dominant basis column of each row (the row-argmax labels)."""
    return np.asarray(c).argmax(axis=1)
