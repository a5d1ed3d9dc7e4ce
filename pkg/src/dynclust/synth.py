"""Synthetic dynamic-graph benchmarks with ground-truth community trajectories.

Three families:

* ``gen_syn_fix``: 128 nodes, four communities, three members of each community
  move elsewhere at every transition.
* ``gen_syn_var``: 256 nodes, four communities; each transition up to t=5 pulls
  eight members from every original community into a fresh 32-node community,
  then the sequence is mirrored for the final five snapshots.
* ``gen_green``: planted-partition snapshots with one of four community events
  per transition (birth-death, expansion, hide, merge-split).

Snapshots evolve incrementally: only nodes affected by an event are rewired,
so unaffected nodes keep their edges between consecutive snapshots. All
generators are pure functions of their parameters and seed.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InfeasibleParams
from .graph import DynamicGraph, snapshot_from_edges
from .validation import spawn_rng

_SYNTH_SALT = 0x73796E74

HIDDEN_LABEL = -1

EVENTS = ("birth-death", "expansion", "hide", "merge-split")

# planted-partition probabilities for the SYN graphs; chosen so the average
# degree stays near the classic benchmark (about 9 for SYN-FIX) while keeping
# communities clearly recoverable
_SYN_P_IN = 0.25
_SYN_P_OUT = 0.01


@dataclass(frozen=True)
class GreenParams:
    """Parameters for the event-based generator."""

    n: int
    tau: int
    avg_degree: float
    max_degree: int
    community_count_range: tuple
    mixing: float
    event: str
    seed: int

    def __post_init__(self):
        lo, hi = self.community_count_range
        if lo > hi or lo < 2:
            raise InfeasibleParams("community count range must be nonempty with lower bound >= 2")
        if not (self.avg_degree <= self.max_degree <= self.n - 1):
            raise InfeasibleParams("need avg_degree <= max_degree <= n - 1")
        if not (0.0 < self.mixing < 1.0):
            raise InfeasibleParams("mixing must lie in (0, 1)")
        if self.event not in EVENTS:
            raise InfeasibleParams(f"unknown event {self.event!r}; choose from {EVENTS}")
        if self.n < 2 * hi:
            raise InfeasibleParams("communities would have fewer than two members")


# ---------------------------------------------------------------------------
# planted-partition edge machinery


def _p_in_for(size, avg_degree, mixing):
    if size <= 1:
        return 0.0
    p = (1.0 - mixing) * avg_degree / (size - 1)
    if p > 1.0:
        raise InfeasibleParams(
            f"intra-community degree target needs edge probability {p:.3f} > 1"
        )
    return p


def _feasible_min_size(params):
    """Smallest community that can still meet the intra-degree target."""
    return math.ceil(1 + (1.0 - params.mixing) * params.avg_degree)


def _rewire(edges, affected, labels, p_in_by_comm, p_out, rng, n):
    """Drop all edges touching ``affected`` nodes and redraw them.

    Hidden nodes (label -1) receive no edges and attract none. Pairs of two
    affected nodes are drawn once (from the lower id) to keep probabilities
    exact.
    """
    affected = np.asarray(sorted(set(int(a) for a in affected)))
    aff_mark = np.zeros(n, dtype=bool)
    aff_mark[affected] = True
    kept = {e for e in edges if not (aff_mark[e[0]] or aff_mark[e[1]])}
    visible = labels != HIDDEN_LABEL
    for a in affected:
        if labels[a] == HIDDEN_LABEL:
            continue
        p = np.full(n, p_out)
        same = labels == labels[a]
        p[same] = p_in_by_comm.get(int(labels[a]), 0.0)
        p[~visible] = 0.0
        p[a] = 0.0
        # avoid double-drawing affected-affected pairs
        p[aff_mark & (np.arange(n) < a)] = 0.0
        hits = np.flatnonzero(rng.random(n) < p)
        for b in hits:
            kept.add((min(a, int(b)), max(a, int(b))))
    return kept


def _enforce_max_degree(edges, max_degree, rng, n):
    deg = np.zeros(n, dtype=np.int64)
    for u, v in edges:
        deg[u] += 1
        deg[v] += 1
    if (deg <= max_degree).all():
        return edges
    edge_list = sorted(edges)
    order = rng.permutation(len(edge_list))
    keep = set()
    newdeg = np.zeros(n, dtype=np.int64)
    for idx in order:
        u, v = edge_list[idx]
        if newdeg[u] < max_degree and newdeg[v] < max_degree:
            keep.add((u, v))
            newdeg[u] += 1
            newdeg[v] += 1
    return keep


def _edges_to_snapshot(edges, n, t_index):
    triples = [(u, v, 1.0) for u, v in sorted(edges)]
    return snapshot_from_edges(triples, n, t_index=t_index)


def _p_in_map(labels, avg_degree, mixing):
    out = {}
    for c in np.unique(labels):
        if c == HIDDEN_LABEL:
            continue
        size = int((labels == c).sum())
        out[int(c)] = _p_in_for(size, avg_degree, mixing)
    return out


# ---------------------------------------------------------------------------
# SYN-FIX / SYN-VAR


def _syn_initial(labels, rng, n):
    p_in_by_comm = {int(c): _SYN_P_IN for c in np.unique(labels)}
    return _rewire(set(), np.arange(n), labels, p_in_by_comm, _SYN_P_OUT, rng, n)


def gen_syn_fix(seed):
    """128 nodes, 10 snapshots, four communities of 32; three members of each
    community move to another community at every transition."""
    n, tau, k = 128, 10, 4
    rng = spawn_rng(seed, _SYNTH_SALT, 1)
    labels = np.repeat(np.arange(k), n // k)
    edges = _syn_initial(labels, rng, n)
    snaps = [_edges_to_snapshot(edges, n, 1)]
    all_labels = [labels.copy()]
    p_in_by_comm = {c: _SYN_P_IN for c in range(k)}
    for t in range(2, tau + 1):
        movers = []
        new_labels = labels.copy()
        for c in range(k):
            members = np.flatnonzero(labels == c)
            picked = rng.choice(members, size=3, replace=False)
            for node in picked:
                choices = [d for d in range(k) if d != c]
                new_labels[node] = choices[int(rng.integers(0, k - 1))]
            movers.extend(int(x) for x in picked)
        labels = new_labels
        edges = _rewire(edges, movers, labels, p_in_by_comm, _SYN_P_OUT, rng, n)
        snaps.append(_edges_to_snapshot(edges, n, t))
        all_labels.append(labels.copy())
    return DynamicGraph(snaps, labels=all_labels)


def gen_syn_var(seed):
    """256 nodes, 10 snapshots; transitions 2..5 each pull eight members from
    every original community into a fresh 32-node community, and snapshots
    6..10 mirror snapshots 5..1."""
    n, originals = 256, 4
    rng = spawn_rng(seed, _SYNTH_SALT, 2)
    labels = np.repeat(np.arange(originals), n // originals)
    edges = _syn_initial(labels, rng, n)
    snaps = [_edges_to_snapshot(edges, n, 1)]
    all_labels = [labels.copy()]
    next_id = originals
    for t in range(2, 6):
        movers = []
        new_labels = labels.copy()
        for c in range(originals):
            members = np.flatnonzero(labels == c)
            picked = rng.choice(members, size=8, replace=False)
            new_labels[picked] = next_id
            movers.extend(int(x) for x in picked)
        labels = new_labels
        p_in_by_comm = {int(c): _SYN_P_IN for c in np.unique(labels)}
        edges = _rewire(edges, movers, labels, p_in_by_comm, _SYN_P_OUT, rng, n)
        snaps.append(_edges_to_snapshot(edges, n, t))
        all_labels.append(labels.copy())
        next_id += 1
    for t in range(6, 11):
        mirror = 10 - t  # snapshots 6..10 copy snapshots 5..1
        src = snaps[mirror]
        snaps.append(_edges_to_snapshot(
            {(int(u), int(v)) for u, v, _ in src.edge_array()}, n, t))
        all_labels.append(all_labels[mirror].copy())
    return DynamicGraph(snaps, labels=all_labels)


# ---------------------------------------------------------------------------
# Green event datasets


def _near_equal_sizes(n, k):
    base = n // k
    sizes = np.full(k, base, dtype=np.int64)
    sizes[: n - base * k] += 1
    return sizes


def _transition(base_labels, hidden, event, rng, params, next_id):
    """Apply one event; returns (new_base_labels, new_hidden, affected, next_id).

    ``base_labels`` carries every node's community ignoring hiding; ``hidden``
    is the set of community ids hidden in the *previous* snapshot.
    """
    labels = base_labels.copy()
    affected = set()
    # previously hidden communities come back first
    for c in hidden:
        affected.update(int(x) for x in np.flatnonzero(labels == c))
    new_hidden = set()
    comms = [int(c) for c in np.unique(labels)]
    k = len(comms)

    if event == "birth-death":
        count = math.ceil(0.05 * k)
        for _ in range(count):
            comms = [int(c) for c in np.unique(labels)]
            dead = int(rng.choice(comms))
            survivors = [c for c in comms if c != dead]
            members = np.flatnonzero(labels == dead)
            labels[members] = rng.choice(survivors, size=len(members))
            affected.update(int(x) for x in members)
            size = int(round(len(labels) / len(comms)))
            donors = np.flatnonzero(labels != HIDDEN_LABEL)
            born = rng.choice(donors, size=min(size, len(donors)), replace=False)
            labels[born] = next_id
            affected.update(int(x) for x in born)
            next_id += 1
    elif event == "expansion":
        count = math.ceil(0.10 * k)
        floor = _feasible_min_size(params)
        targets = rng.choice(comms, size=count, replace=False)
        for c in targets:
            size = int((labels == c).sum())
            delta = int(round(0.5 * size))
            grow = rng.random() < 0.5 or size - delta < floor
            if grow and size + delta < len(labels):
                donors = np.flatnonzero((labels != c) & (labels != HIDDEN_LABEL))
                picked = rng.choice(donors, size=delta, replace=False)
                labels[picked] = c
                affected.update(int(x) for x in picked)
            else:
                members = np.flatnonzero(labels == c)
                others = [d for d in comms if d != c]
                picked = rng.choice(members, size=delta, replace=False)
                labels[picked] = rng.choice(others, size=delta)
                affected.update(int(x) for x in picked)
    elif event == "hide":
        count = math.ceil(0.10 * k)
        new_hidden = set(int(c) for c in rng.choice(comms, size=count, replace=False))
        for c in new_hidden:
            affected.update(int(x) for x in np.flatnonzero(labels == c))
    elif event == "merge-split":
        lo, hi = params.community_count_range
        floor = _feasible_min_size(params)
        splittable = [c for c in comms if int((labels == c).sum()) >= 2 * floor]
        if k <= lo:
            do_split = True
        elif k >= hi:
            do_split = False
        else:
            do_split = bool(rng.random() < 0.5)
        if do_split and not splittable:
            do_split = False
        if not do_split and k < 2:
            do_split = bool(splittable)
        if do_split:
            c = int(rng.choice(splittable))
            members = np.flatnonzero(labels == c)
            rng.shuffle(members)
            half = members[: len(members) // 2]
            labels[half] = next_id
            next_id += 1
            affected.update(int(x) for x in members)
        else:
            a, b = rng.choice(comms, size=2, replace=False)
            members_b = np.flatnonzero(labels == b)
            labels[members_b] = a
            affected.update(int(x) for x in np.flatnonzero(labels == a))
    else:  # pragma: no cover - validated by GreenParams
        raise InfeasibleParams(f"unknown event {event!r}")
    return labels, new_hidden, affected, next_id


def gen_green(params):
    """Event-based planted-partition dynamic graph with per-snapshot labels.

    Hidden communities disappear from the graph for one snapshot (their nodes
    carry the reserved background label -1 and have degree zero) and return at
    the next transition.
    """
    rng = spawn_rng(params.seed, _SYNTH_SALT, 3)
    lo, hi = params.community_count_range
    k = int(rng.integers(lo, hi + 1))
    sizes = _near_equal_sizes(params.n, k)
    base_labels = np.repeat(np.arange(k), sizes)
    rng.shuffle(base_labels)
    next_id = k
    hidden = set()

    p_in = _p_in_map(base_labels, params.avg_degree, params.mixing)
    p_out = params.mixing * params.avg_degree / max(1, params.n - params.n // k)
    edges = _rewire(set(), np.arange(params.n), base_labels, p_in, p_out, rng, params.n)
    edges = _enforce_max_degree(edges, params.max_degree, rng, params.n)

    snaps = [_edges_to_snapshot(edges, params.n, 1)]
    emitted = base_labels.copy()
    all_labels = [emitted]

    for t in range(2, params.tau + 1):
        base_labels, hidden, affected, next_id = _transition(
            base_labels, hidden, params.event, rng, params, next_id
        )
        emitted = base_labels.copy()
        for c in hidden:
            emitted[base_labels == c] = HIDDEN_LABEL
        p_in = _p_in_map(emitted, params.avg_degree, params.mixing)
        p_out = params.mixing * params.avg_degree / max(1, params.n - params.n // k)
        edges = _rewire(edges, affected, emitted, p_in, p_out, rng, params.n)
        edges = _enforce_max_degree(edges, params.max_degree, rng, params.n)
        snaps.append(_edges_to_snapshot(edges, params.n, t))
        all_labels.append(emitted)
    return DynamicGraph(snaps, labels=all_labels)
