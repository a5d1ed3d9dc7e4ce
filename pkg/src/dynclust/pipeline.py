"""End-to-end clustering of a dynamic graph.

Per timestamp: build the PMI matrix, select temporal landmarks, split nodes
into static and dynamic sets (using one snapshot of lookahead), selectively
re-factorize the landmark block, randomly partition the remaining nodes into
subsets and solve each against the landmark anchor with the bi-clustering
penalty, then read the partition off the row-argmax of the assembled
embedding. Ablation flags swap in the non-separated baseline (``no_tsmf``),
drop the penalty (``no_bcr``) or disable selective updating and re-enable the
smoothness pull (``no_seu``).
"""

import dataclasses
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .biclustering import BcrContext
from .dynamics import node_change_score, split_dynamic_static
from .factorization import (
    InterAnchors,
    baseline_temporal_mf,
    build_blocks,
    default_inits,
    factorize_pair,
    partition_subsets,
    solve_subset,
)
from .graph import build_pmi, degree_vector
from .landmarks import (
    _MIN_BLOCK_EDGES,
    LandmarkFactors,
    elbow_cluster_count,
    elbow_scan,
    factorize_landmarks,
    select_landmarks,
    _sq_dists,
)
from .metrics import density, modularity, nf1, nmi

_SMALL_GRAPH_NODES = 512
_LARGE_GRAPH_NODES = 10_000
_FRESH_COLUMN_CLAIM = 0.3
# frozen rows whose current edges agree this little with their embedding are
# stale (the change score cannot flag them once the change is in the past);
# healthy rows sit far above this, and groups that moved together inflate
# each other's agreement toward the 1/k mixing floor
_STALE_AGREEMENT = 0.45


def _mix(seed, t):
    return int(seed) * 1000003 + int(t)


# ---------------------------------------------------------------------------
# configuration and results


@dataclass
class RunConfig:
    """Hyperparameters and ablation switches for one clustering run.

    ``s`` (subset count), ``landmark_fraction`` and ``rounds`` default to
    graph-size dependent choices when left as None. ``landmark_count``
    overrides the fraction with an absolute landmark budget.
    """

    s: int | None = None
    r: int = 1000
    lam: float = 0.2
    beta: float = 20.0
    mu: float = 0.16
    landmark_fraction: float | None = None
    landmark_count: int | None = None
    alpha: float = 0.5
    k_max: int = 16
    tol: float = 1e-5
    max_iter: int = 150
    seed: int = 0
    no_tsmf: bool = False
    no_bcr: bool = False
    no_seu: bool = False
    inter_qj: bool = True
    rounds: int | None = None
    inner_steps: int = 1
    jobs: int = 1
    keep_factors: bool = False

    def effective_s(self, n, non_landmarks=None):
        if self.s is not None:
            return max(1, self.s)
        if n <= _SMALL_GRAPH_NODES:
            return 1
        # aim for subsets of about a hundred nodes, capped at the large-scale
        # setting of 50
        pool = non_landmarks if non_landmarks is not None else n
        return int(min(50, max(2, round(pool / 100))))

    def landmark_budget(self, n):
        if self.landmark_count is not None:
            return int(self.landmark_count)
        fraction = self.landmark_fraction
        if fraction is None:
            fraction = 0.5 if n <= _LARGE_GRAPH_NODES else 0.005
        return max(1, int(fraction * n))

    def effective_rounds(self, s):
        if self.rounds is not None:
            return max(1, self.rounds)
        return 1 if s == 1 else 2

    def save(self, path):
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name} = {'none' if value is None else value}")
        Path(path).write_text("\n".join(lines) + "\n")

    @classmethod
    def load(cls, path):
        raw = {}
        for line in Path(path).read_text().splitlines():
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()
        return cls().with_overrides(**raw)

    def with_overrides(self, **overrides):
        values = dataclasses.asdict(self)
        types = {f.name: f for f in dataclasses.fields(self)}
        for key, value in overrides.items():
            if key not in types:
                raise KeyError(f"unknown config key {key!r}")
            values[key] = _coerce(value, types[key])
        return RunConfig(**values)


def _coerce(value, fld):
    if value is None or (isinstance(value, str) and value.lower() in ("none", "auto")):
        return None
    if isinstance(value, str):
        text = value.strip()
        kind = str(fld.type)
        if "bool" in kind:
            return text.lower() in ("1", "true", "yes", "on")
        if "int" in kind:
            return int(text)
        if "float" in kind:
            return float(text)
        return text
    return value


@dataclass
class ObjectiveTrace:
    """One logged objective sequence (a solve at a timestamp, subset, round)."""

    label: str
    values: np.ndarray


@dataclass
class RunResult:
    """Per-snapshot partitions plus diagnostics of the run."""

    partitions: list
    n_clusters: list
    metrics: list | None
    averages: dict | None
    phase_seconds: dict
    total_seconds: float
    objective_traces: list
    final_objectives: list
    iterations: list
    config: RunConfig
    landmark_history: list | None = None

    def to_json_dict(self):
        out = {
            "n_clusters": [int(k) for k in self.n_clusters],
            "phase_seconds": {k: float(v) for k, v in self.phase_seconds.items()},
            "total_seconds": float(self.total_seconds),
            "final_objectives": [float(x) for x in self.final_objectives],
            "iterations": self.iterations,
            "config": {
                f.name: getattr(self.config, f.name)
                for f in dataclasses.fields(self.config)
            },
        }
        if self.metrics is not None:
            out["metrics"] = self.metrics
            out["averages"] = self.averages
        return out


class _PhaseTimer:
    def __init__(self):
        self.seconds = {}

    def __call__(self, phase):
        return _PhaseSpan(self, phase)

    def add(self, phase, dt):
        self.seconds[phase] = self.seconds.get(phase, 0.0) + dt


class _PhaseSpan:
    def __init__(self, timer, phase):
        self.timer = timer
        self.phase = phase

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.timer.add(self.phase, time.perf_counter() - self.start)
        return False


# ---------------------------------------------------------------------------
# partition extraction


def extract_partition(c):
    """Row-argmax cluster labels; ties go to the lowest column index."""
    return np.asarray(c).argmax(axis=1).astype(np.int64)


def _snapshot_metrics(snapshot, pred, truth):
    return {
        "nmi": nmi(pred, truth),
        "nf1": nf1(pred, truth),
        "modularity": modularity(snapshot, pred),
        "density": density(snapshot, pred),
    }


# ---------------------------------------------------------------------------
# landmark warm starts across timestamps


def _warm_landmark_factors(sel, prev, c_prev_full, pmi_prev, r_eff, dynamic_nodes):
    """Map previous factors onto the current landmark set.

    Every landmark starts from its own previous embedding row (for surviving
    landmarks that is the previous basis row, bit-exact); coefficients for
    landmarks new to the set come from their nearest previous landmark. Static
    landmarks stay frozen, which keeps their embeddings fixed across
    timestamps.
    """
    ids = sel.node_ids
    u = len(ids)
    prev_pos = {int(node): k for k, node in enumerate(prev["landmark_ids"])}
    psi_prev = prev["psi"]
    phi0 = c_prev_full[ids].copy()
    psi0 = np.zeros((r_eff, u))
    dynamic_mask = np.ones(u, dtype=bool)
    dyn_lookup = np.zeros(len(c_prev_full), dtype=bool)
    dyn_lookup[dynamic_nodes] = True
    new_rows = []
    for k, node in enumerate(ids):
        node = int(node)
        if node in prev_pos:
            psi0[:, k] = psi_prev[:, prev_pos[node]]
            dynamic_mask[k] = dyn_lookup[node]
        else:
            # no previous factors to freeze: newcomers are always re-fit
            new_rows.append(k)
    if new_rows:
        old_ids = prev["landmark_ids"]
        d = _sq_dists(pmi_prev[ids[new_rows]], pmi_prev[old_ids].toarray())
        nearest = d.argmin(axis=1)
        for idx, k in enumerate(new_rows):
            psi0[:, k] = psi_prev[:, nearest[idx]]
    return phi0, psi0, dynamic_mask


def _allocate_columns(phi0, psi0, sel, rho_cols, m00, dynamic_mask):
    """Give every current center a basis column.

    Claims are resolved globally by strength (mean carried mass of the
    center's members on a column), so a center whose members genuinely own a
    column beats a center of newcomers that merely passed through it. Centers
    left without a strong claim (new communities) restart their dynamic
    members one-hot on the least-used free column.
    """
    u, r_eff = phi0.shape
    strength = np.zeros((rho_cols, r_eff))
    member_lists = []
    for l in range(rho_cols):
        members = np.flatnonzero(sel.assignment == l)
        member_lists.append(members)
        if len(members):
            strength[l] = phi0[members].sum(axis=0) / len(members)
    taken_cols = set()
    assigned = {}
    flat = np.argsort(-strength, axis=None, kind="stable")
    for pos in flat:
        l, c = divmod(int(pos), r_eff)
        if strength[l, c] < _FRESH_COLUMN_CLAIM:
            break
        if l in assigned or c in taken_cols or not len(member_lists[l]):
            continue
        assigned[l] = c
        taken_cols.add(c)
    column_mass = phi0.sum(axis=0)
    for l in range(rho_cols):
        members = member_lists[l]
        if l in assigned or not len(members):
            continue
        avail = [c for c in range(r_eff) if c not in taken_cols]
        if not avail:
            break
        fresh = min(avail, key=lambda c: (column_mass[c], c))
        taken_cols.add(fresh)
        assigned[l] = fresh
        touch = members[dynamic_mask[members]]
        if len(touch):
            phi0[touch] = 0.0
            phi0[touch, fresh] = 1.0
            psi0[fresh] = np.asarray(m00[members].mean(axis=0)).ravel()
    col_of = np.full(rho_cols, -1, dtype=np.int64)
    for l, c in assigned.items():
        col_of[l] = c
    return phi0, psi0, col_of


# ---------------------------------------------------------------------------
# per-node link-row carry-over


def _embedding_agreement(rows_to_landmarks, embeddings, phi):
    """Mass-weighted agreement between rows' landmark edges and an embedding.

    For each row, the fraction of its landmark edge mass that lands on
    landmarks whose basis row matches the row's own embedding (inner products
    of simplex rows are near one within a cluster and near zero across).
    Rows without landmark edges report full agreement (nothing to contradict).
    """
    rows = np.asarray(rows_to_landmarks)
    num = np.einsum("il,il->i", rows, embeddings @ phi.T)
    mass = rows.sum(axis=1)
    out = np.ones(len(mass))
    has = mass > 0
    out[has] = num[has] / mass[has]
    return out


def _carry_p_rows(p_prev_full, prev_ids, cur_ids, pmi_t, nodes):
    """Map previous link rows onto the current landmark columns for ``nodes``.

    Dropped landmark columns lose their mass and rows are renormalized;
    rows left empty restart one-hot at the landmark they connect to most.
    """
    u = len(cur_ids)
    prev_pos = {int(node): k for k, node in enumerate(prev_ids)}
    cols_from_prev = np.array(
        [prev_pos.get(int(node), -1) for node in cur_ids], dtype=np.int64
    )
    have = cols_from_prev >= 0
    rows = np.zeros((len(nodes), u))
    if have.any():
        rows[:, have] = p_prev_full[np.ix_(nodes, cols_from_prev[have])]
    sums = rows.sum(axis=1)
    ok = sums > 1e-12
    rows[ok] /= sums[ok, None]
    if (~ok).any():
        strength = np.asarray(pmi_t[np.asarray(nodes)[~ok]][:, cur_ids].todense())
        rows[~ok] = 0.0
        rows[np.flatnonzero(~ok), strength.argmax(axis=1)] = 1.0
    return rows


# ---------------------------------------------------------------------------
# the run itself


def run(config, graph):
    """Cluster every snapshot of ``graph`` under ``config``; see RunConfig."""
    total_start = time.perf_counter()
    timer = _PhaseTimer()
    if config.no_tsmf:
        result = _run_baseline(config, graph, timer)
    else:
        result = _run_separated(config, graph, timer)
    result.total_seconds = time.perf_counter() - total_start
    return result


def run_ablation(config, graph):
    """Run one of the ablation variants (at least one flag must be set)."""
    if not (config.no_tsmf or config.no_bcr or config.no_seu):
        raise ValueError("run_ablation expects at least one ablation flag")
    return run(config, graph)


def _finalize(
    graph, partitions, timer, traces, finals, iterations, config, history
):
    metrics = None
    averages = None
    if graph.labels is not None:
        with timer("metrics"):
            metrics = [
                _snapshot_metrics(graph.snapshots[t], partitions[t], graph.labels[t])
                for t in range(graph.tau)
            ]
            averages = {
                key: float(np.mean([m[key] for m in metrics]))
                for key in metrics[0]
            }
    return RunResult(
        partitions=partitions,
        n_clusters=[int(len(np.unique(p))) for p in partitions],
        metrics=metrics,
        averages=averages,
        phase_seconds=dict(timer.seconds),
        total_seconds=0.0,
        objective_traces=traces,
        final_objectives=finals,
        iterations=iterations,
        config=config,
        landmark_history=history if config.keep_factors else None,
    )


def _run_baseline(config, graph, timer):
    with timer("pmi"):
        pmis = [build_pmi(snap) for snap in graph.snapshots]
    r_eff = min(config.r, graph.n)
    with timer("factorization"):
        pairs, losses = baseline_temporal_mf(
            pmis,
            r_eff,
            config.alpha,
            tol=config.tol,
            max_iter=config.max_iter,
            seed=config.seed,
            k_max=config.k_max,
        )
    partitions = []
    prev_labels = None
    with timer("assembly"):
        for t, (c, _) in enumerate(pairs):
            labels = extract_partition(c)
            labels = _override_isolated(graph.snapshots[t], labels, prev_labels)
            partitions.append(labels)
            prev_labels = labels
    traces = [
        ObjectiveTrace(label=f"t{t + 1}/baseline", values=tr)
        for t, tr in enumerate(losses)
    ]
    finals = [float(tr[-1]) for tr in losses]
    iterations = [{"baseline_iters": int(len(tr) - 1)} for tr in losses]
    return _finalize(
        graph, partitions, timer, traces, finals, iterations, config, None
    )


def _override_isolated(snapshot, labels, prev_labels):
    deg = degree_vector(snapshot)
    isolated = deg == 0
    if isolated.any():
        labels = labels.copy()
        labels[isolated] = 0 if prev_labels is None else prev_labels[isolated]
    return labels


def _run_separated(config, graph, timer):
    n = graph.n
    tau = graph.tau
    budget = min(config.landmark_budget(n), n - 1)
    s_base = config.effective_s(n, n - budget)
    seu_active = not config.no_seu

    pmi_cache = {}
    sel_cache = {}

    def pmi_at(t):
        if t not in pmi_cache:
            with timer("pmi"):
                pmi_cache[t] = build_pmi(graph.snapshots[t])
            # keep a three-snapshot window (previous, current, lookahead)
            for old in [k for k in pmi_cache if k < max(pmi_cache) - 2]:
                del pmi_cache[old]
        return pmi_cache[t]

    def selection_at(t):
        if t not in sel_cache:
            pmi_t = pmi_at(t)
            pmi_prev = pmi_at(t - 1) if t > 0 else None
            with timer("landmarks"):
                scan = elbow_scan(pmi_t, min(config.k_max, n), seed=_mix(config.seed, t))
                rho = elbow_cluster_count(
                    pmi_t, min(config.k_max, n), seed=_mix(config.seed, t), scan=scan
                )
                rho = max(1, rho)
                m = min(max(budget, rho), n - 1)
                sel = select_landmarks(
                    pmi_t,
                    pmi_prev,
                    config.lam,
                    fraction=1.0,
                    n_centers=rho,
                    seed=_mix(config.seed, t),
                    count=m,
                    warm_centers=scan[1].get(rho),
                )
            sel_cache[t] = (rho, sel)
            for old in [k for k in sel_cache if k < max(sel_cache) - 2]:
                del sel_cache[old]
        return sel_cache[t]

    partitions = []
    traces = []
    finals = []
    iterations = []
    history = []
    prev_labels = None
    prev_state = None
    p_full_prev = None
    c_prev_full = None

    for t in range(tau):
        snapshot = graph.snapshots[t]
        pmi_t = pmi_at(t)
        rho, sel = selection_at(t)
        u = sel.size
        r_eff = min(config.r, u)
        rho_cols = min(rho, r_eff)
        s_eff = min(s_base, max(1, n - u))
        rounds = config.effective_rounds(s_eff)

        # static/dynamic split needs the next snapshot's centers (lookahead)
        dynamic_nodes = np.arange(n)
        static_nodes = np.empty(0, dtype=np.int64)
        if seu_active and t > 0:
            rho_next_sel = selection_at(t + 1) if t + 1 < tau else None
            with timer("scores"):
                rows_prev = graph.snapshots[t - 1].adj
                rows_next = graph.snapshots[t + 1].adj if t + 1 < tau else None
                centers_prev = sel_cache[t - 1][1].centers if t - 1 in sel_cache else None
                if centers_prev is None:
                    _, sel_prev = selection_at(t - 1)
                    centers_prev = sel_prev.centers
                centers_next = rho_next_sel[1].centers if rho_next_sel else None
                scores = node_change_score(
                    rows_prev,
                    snapshot.adj,
                    rows_next,
                    centers_prev,
                    sel.centers,
                    centers_next,
                )
                dynamic_nodes, static_nodes = split_dynamic_static(scores, config.mu)

        # landmark factorization (full at t=1, selective afterwards)
        with timer("landmark_factorization"):
            if prev_state is None:
                lf = factorize_landmarks(
                    pmi_t[sel.node_ids][:, sel.node_ids],
                    r_eff,
                    tol=config.tol,
                    max_iter=config.max_iter,
                    seed=_mix(config.seed, t),
                    init_assignment=np.minimum(sel.assignment, rho_cols - 1),
                )
                dynamic_mask = np.ones(u, dtype=bool)
            else:
                m00_sp = pmi_t[sel.node_ids][:, sel.node_ids]
                phi0, psi0, dynamic_mask = _warm_landmark_factors(
                    sel, prev_state, c_prev_full, pmi_at(t - 1), r_eff,
                    dynamic_nodes,
                )
                if not seu_active:
                    dynamic_mask = np.ones(u, dtype=bool)
                else:
                    # release frozen landmark rows that no longer match their
                    # in-block edges (changes the score can no longer see)
                    m00_dense = m00_sp.toarray()
                    agree = _embedding_agreement(m00_dense, phi0, phi0)
                    dynamic_mask |= agree < _STALE_AGREEMENT
                m00_dense = m00_sp.toarray()
                phi0, psi0, col_of = _allocate_columns(
                    phi0, psi0, sel, rho_cols, m00_dense, dynamic_mask
                )
                # dynamic rows with almost no in-block edges cannot be fit
                # from M00; anchor them at their center's column instead
                nnz = (m00_dense > 0).sum(axis=1)
                thin = nnz < _MIN_BLOCK_EDGES
                seeded = dynamic_mask & thin & (col_of[sel.assignment] >= 0)
                if seeded.any():
                    phi0[seeded] = 0.0
                    phi0[seeded, col_of[sel.assignment[seeded]]] = 1.0
                fit_rows = ~thin
                active = (phi0.sum(axis=0) > 1e-12) | (
                    np.abs(psi0).sum(axis=1) > 1e-12
                )
                phi_fit, psi, losses, converged = factorize_pair(
                    m00_dense[fit_rows],
                    phi0[fit_rows],
                    psi0,
                    tol=config.tol,
                    max_iter=config.max_iter,
                    phi_mask=dynamic_mask[fit_rows],
                    psi_mask=dynamic_mask,
                    col_mask=active,
                )
                phi = phi0
                phi[fit_rows] = phi_fit
                lf = LandmarkFactors(
                    phi=phi, psi=psi, losses=losses, converged=converged
                )
        traces.append(
            ObjectiveTrace(label=f"t{t + 1}/landmarks", values=lf.losses)
        )

        # subset plans and blocks
        with timer("subsets"):
            plan = partition_subsets(
                n, sel.node_ids, s_eff, seed=_mix(config.seed, t)
            )
            blocks = build_blocks(pmi_t, plan, sel)
        m00 = blocks.m00(dense=False)
        # the solver only ever sees basis columns that carry mass
        active_cols = np.flatnonzero(lf.phi.sum(axis=0) > 1e-12)
        if not len(active_cols):
            active_cols = np.arange(min(1, r_eff))
        phi_active = lf.phi[:, active_cols]

        # initial link factors: carried over when available, seeded otherwise
        with timer("subsets"):
            p_list = []
            q_list = []
            dyn_lookup = np.zeros(n, dtype=bool)
            dyn_lookup[dynamic_nodes] = True
            released = np.zeros(n, dtype=bool)
            for i, members in enumerate(plan.subsets):
                if p_full_prev is None:
                    mi0 = blocks.m_i0(i)
                    p0 = np.zeros((len(members), u))
                    p0[np.arange(len(members)), mi0.argmax(axis=1)] = 1.0
                    q0 = _scaled_transpose_init(blocks, i, p0)
                else:
                    p0 = _carry_p_rows(
                        p_full_prev, prev_state["landmark_ids"], sel.node_ids,
                        pmi_t, members,
                    )
                    _, q0 = default_inits(blocks, i, u, _mix(config.seed, t))
                    if seu_active and t > 0:
                        # release frozen rows whose edges now disagree with
                        # their carried embedding, and restart them cleanly
                        mi0 = blocks.m_i0(i)
                        agree = _embedding_agreement(
                            mi0, c_prev_full[members], lf.phi
                        )
                        stale = (agree < _STALE_AGREEMENT) & ~dyn_lookup[members]
                        if stale.any():
                            released[members[stale]] = True
                            dyn_lookup[members[stale]] = True
                            rows = np.flatnonzero(stale)
                            strongest = mi0[rows].argmax(axis=1)
                            p0[rows] = 0.0
                            p0[rows, strongest] = 1.0
                p_list.append(p0)
                q_list.append(q0)

        subset_traces_total = 0
        bcr_contexts = [None] * s_eff
        if config.beta > 0.0 and not config.no_bcr:
            bcr_contexts = [BcrContext(max(1, rho_cols)) for _ in range(s_eff)]

        prev_c_rows = None
        if config.no_seu and c_prev_full is not None and config.alpha > 0.0:
            prev_c_rows = [
                c_prev_full[members][:, active_cols] for members in plan.subsets
            ]

        results = [None] * s_eff
        for round_idx in range(rounds):
            with timer("subsets"):
                anchors = _build_anchors(blocks, m00, p_list, q_list, s_eff)

                def solve_one(i):
                    members = plan.subsets[i]
                    dyn_rows = dyn_lookup[members] if seu_active and t > 0 else None
                    return solve_subset(
                        blocks,
                        i,
                        phi_active,
                        beta=0.0 if config.no_bcr else config.beta,
                        bcr=bcr_contexts[i],
                        prev_c=None if prev_c_rows is None else prev_c_rows[i],
                        alpha=config.alpha if config.no_seu else 0.0,
                        anchors=anchors[i],
                        dynamic_rows=dyn_rows,
                        tol=config.tol,
                        max_iter=config.max_iter
                        if round_idx == rounds - 1
                        else min(8, config.max_iter),
                        seed=_mix(config.seed, t),
                        inner_steps=config.inner_steps,
                        p_init=p_list[i],
                        q_init=q_list[i],
                    )

                if config.jobs > 1 and s_eff > 1:
                    with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                        results = list(pool.map(solve_one, range(s_eff)))
                else:
                    results = [solve_one(i) for i in range(s_eff)]
                p_list = [res.p for res in results]
                q_list = [res.q for res in results]
            for i, res in enumerate(results):
                traces.append(
                    ObjectiveTrace(
                        label=f"t{t + 1}/subset{i}/round{round_idx + 1}",
                        values=res.objective_trace,
                    )
                )
                subset_traces_total += len(res.objective_trace) - 1

        for ctx in bcr_contexts:
            if ctx is not None:
                timer.add("bcr", ctx.seconds)
                timer.add("subsets", -ctx.seconds)

        # assemble the full embedding and extract the partition
        with timer("assembly"):
            c_full = np.zeros((n, r_eff))
            c_full[sel.node_ids] = lf.phi
            p_full = np.zeros((n, u))
            p_full[sel.node_ids, np.arange(u)] = 1.0
            for i, members in enumerate(plan.subsets):
                c_full[np.ix_(members, active_cols)] = results[i].c
                p_full[members] = results[i].p
            if seu_active and t > 0:
                # static node embeddings are fixed and shared across timestamps
                frozen = np.zeros(n, dtype=bool)
                frozen[static_nodes] = True
                frozen[sel.node_ids] = False
                frozen[released] = False
                c_full[frozen] = c_prev_full[frozen]
            labels = extract_partition(c_full)
            labels = _override_isolated(snapshot, labels, prev_labels)
        partitions.append(labels)
        finals.append(float(sum(res.objective_trace[-1] for res in results)))
        iterations.append(
            {
                "landmark_iters": int(len(lf.losses) - 1),
                "subset_sweeps": int(subset_traces_total),
                "rho": int(rho),
            }
        )
        static_landmarks = (
            sel.node_ids[~dynamic_mask] if prev_state is not None else np.empty(0)
        )
        if config.keep_factors:
            history.append(
                {
                    "landmark_ids": sel.node_ids.copy(),
                    "phi": lf.phi.copy(),
                    "psi": lf.psi.copy(),
                    "static_landmark_ids": np.asarray(static_landmarks).copy(),
                }
            )

        prev_labels = labels
        prev_state = {
            "landmark_ids": sel.node_ids,
            "phi": lf.phi,
            "psi": lf.psi,
        }
        p_full_prev = p_full
        c_prev_full = c_full

    return _finalize(
        graph, partitions, timer, traces, finals, iterations, config, history
    )


def _scaled_transpose_init(blocks, i, p0):
    """Start Q as a scaled transpose of P: one global least-squares scalar."""
    m0i = blocks.m_0i(i)
    base = blocks.m00(dense=False) @ p0.T
    denom = float((base * base).sum())
    scale = float((m0i * base).sum()) / denom if denom > 0 else 0.0
    return max(scale, 0.0) * p0.T


def _build_anchors(blocks, m00, p_list, q_list, s_eff):
    """Frozen cross-subset anchors for one solve round (None when s == 1)."""
    if s_eff == 1:
        return [None]
    q_all = np.concatenate(q_list, axis=1)
    p_all = np.concatenate(p_list, axis=0)
    b_all = m00 @ q_all
    a_all = p_all @ m00
    sizes = [p.shape[0] for p in p_list]
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    anchors = []
    for i in range(s_eff):
        keep = np.concatenate(
            [np.arange(0, bounds[i]), np.arange(bounds[i + 1], bounds[-1])]
        )
        anchors.append(
            InterAnchors(
                b_rest=b_all[:, keep],
                row_targets=blocks.m_i_rest(i),
                a_rest=a_all[keep],
                col_targets=blocks.m_rest_i(i),
            )
        )
    return anchors
