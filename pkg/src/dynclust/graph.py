"""Dynamic graph data model: snapshots, PMI construction, noise injection, file I/O.

A dynamic graph is an ordered sequence of sparse weighted undirected snapshots
over one shared node universe. Nodes absent at a timestamp simply have degree
zero there. On disk a dynamic graph is a directory of ``tNNNN.edges`` files
(one ``u v [w]`` edge per line, 0-based ids, ``#`` comments) with optional
``tNNNN.labels`` files (``node cluster`` per line).
"""

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import EmptySnapshot, SaturatedGraph
from .validation import as_csr, check_labels, check_square, check_symmetric, spawn_rng

_NOISE_SALT = 0x6E6F6973


@dataclass(frozen=True)
class Snapshot:
    """One timestamped static graph: symmetric nonnegative adjacency, no self-loops."""

    adj: sp.csr_matrix
    t_index: int = 1

    def __post_init__(self):
        adj = as_csr(self.adj)
        check_square(adj, "adjacency")
        check_symmetric(adj, "adjacency")
        if adj.diagonal().any():
            raise ValueError("adjacency has self-loops")
        if adj.nnz and adj.data.min() <= 0:
            raise ValueError("stored edge weights must be strictly positive")
        object.__setattr__(self, "adj", adj)

    @property
    def n(self):
        return self.adj.shape[0]

    @property
    def edge_count(self):
        return self.adj.nnz // 2

    def edge_array(self):
        """Edges as an (m, 3) array of (u, v, w) with u < v."""
        coo = sp.triu(self.adj, k=1).tocoo()
        return np.column_stack([coo.row, coo.col, coo.data])


@dataclass(frozen=True)
class DynamicGraph:
    """Ordered snapshots over a shared node universe, optionally with ground truth."""

    snapshots: list
    labels: list | None = None

    def __post_init__(self):
        if len(self.snapshots) < 1:
            raise ValueError("a dynamic graph needs at least one snapshot")
        n = self.snapshots[0].n
        for snap in self.snapshots:
            if snap.n != n:
                raise ValueError("all snapshots must share one node universe")
        if self.labels is not None:
            if len(self.labels) != len(self.snapshots):
                raise ValueError("one label vector per snapshot expected")
            labels = [check_labels(lab, n) for lab in self.labels]
            object.__setattr__(self, "labels", labels)

    @property
    def n(self):
        return self.snapshots[0].n

    @property
    def tau(self):
        return len(self.snapshots)


def degree_vector(snapshot):
    """Weighted degree of every node; sums to twice the total edge weight."""
    return np.asarray(snapshot.adj.sum(axis=1)).ravel()


def build_pmi(snapshot, clamp=True):
    """Pointwise mutual information matrix of a snapshot.

    Entries are defined only on edges: ``log(w_ij * total_degree / (d_i d_j))``,
    clamped at zero by default so the factorization target stays nonnegative.
    Non-edges are implicit zeros; the sparsity pattern equals the edge pattern.
    """
    if snapshot.adj.nnz == 0:
        raise EmptySnapshot("PMI is undefined for a snapshot without edges")
    deg = degree_vector(snapshot)
    total = deg.sum()
    coo = snapshot.adj.tocoo()
    vals = np.log(coo.data * total / (deg[coo.row] * deg[coo.col]))
    if clamp:
        vals = np.maximum(vals, 0.0)
    pmi = sp.csr_matrix((vals, (coo.row, coo.col)), shape=snapshot.adj.shape)
    return pmi


def _sample_new_edges(adj, count, rng):
    """Sample ``count`` distinct absent pairs (u < v), excluding self-loops."""
    n = adj.shape[0]
    pool = n * (n - 1) // 2 - adj.nnz // 2
    if pool < count:
        raise SaturatedGraph(f"need {count} absent pairs, only {pool} available")
    if count == 0:
        return np.empty((0, 2), dtype=np.int64)
    if count > pool // 4:
        # dense regime: enumerate all absent pairs once
        iu, ju = np.triu_indices(n, k=1)
        present = np.asarray(adj[iu, ju]).ravel() > 0
        absent = np.flatnonzero(~present)
        pick = rng.choice(absent, size=count, replace=False)
        return np.column_stack([iu[pick], ju[pick]])
    chosen = set()
    out = []
    while len(out) < count:
        u = int(rng.integers(0, n))
        v = int(rng.integers(0, n))
        if u == v:
            continue
        if u > v:
            u, v = v, u
        if (u, v) in chosen or adj[u, v] != 0:
            continue
        chosen.add((u, v))
        out.append((u, v))
    return np.asarray(out, dtype=np.int64)


def inject_noise(graph, fraction, seed):
    """Add ``floor(fraction * edge_count)`` random unit-weight edges per snapshot.

    Original edges are untouched and the result is deterministic given the seed.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("noise fraction must lie in [0, 1]")
    if fraction == 0.0:
        return graph
    noisy = []
    for t, snap in enumerate(graph.snapshots):
        rng = spawn_rng(seed, _NOISE_SALT, t)
        count = int(fraction * snap.edge_count)
        pairs = _sample_new_edges(snap.adj, count, rng)
        if len(pairs):
            rows = np.concatenate([pairs[:, 0], pairs[:, 1]])
            cols = np.concatenate([pairs[:, 1], pairs[:, 0]])
            extra = sp.csr_matrix(
                (np.ones(2 * len(pairs)), (rows, cols)), shape=snap.adj.shape
            )
            adj = snap.adj + extra
        else:
            adj = snap.adj
        noisy.append(Snapshot(adj, t_index=snap.t_index))
    return DynamicGraph(noisy, labels=graph.labels)


# ---------------------------------------------------------------------------
# Directory format


def snapshot_from_edges(edges, n, t_index=1):
    """Build a snapshot from an iterable of (u, v, w) triples (u != v)."""
    edges = np.asarray(list(edges), dtype=np.float64).reshape(-1, 3)
    if len(edges):
        rows = edges[:, 0].astype(np.int64)
        cols = edges[:, 1].astype(np.int64)
        data = edges[:, 2]
        adj = sp.csr_matrix(
            (np.concatenate([data, data]),
             (np.concatenate([rows, cols]), np.concatenate([cols, rows]))),
            shape=(n, n),
        )
        # duplicate (u, v) entries would double-count weights; keep the max
        adj.sum_duplicates()
    else:
        adj = sp.csr_matrix((n, n))
    return Snapshot(adj, t_index=t_index)


def _parse_edge_file(path):
    edges = []
    max_node = -1
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        u, v = int(parts[0]), int(parts[1])
        w = float(parts[2]) if len(parts) > 2 else 1.0
        max_node = max(max_node, u, v)
        edges.append((u, v, w))
    return edges, max_node


def _parse_label_file(path, n):
    labels = np.zeros(n, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        node, cluster = line.split()[:2]
        labels[int(node)] = int(cluster)
        seen[int(node)] = True
    if not seen.all():
        missing = int(np.flatnonzero(~seen)[0])
        raise ValueError(f"label file {path} misses node {missing}")
    return labels


def load_dynamic_graph(path):
    """Load a dynamic graph directory (``tNNNN.edges`` plus optional labels)."""
    path = Path(path)
    edge_files = sorted(path.glob("t*.edges"))
    if not edge_files:
        raise FileNotFoundError(f"no t*.edges files under {path}")
    parsed = [_parse_edge_file(f) for f in edge_files]
    n = max(mx for _, mx in parsed) + 1
    meta = path / "meta.json"
    if meta.exists():
        n = max(n, int(json.loads(meta.read_text()).get("n", 0)))
    snaps = [
        snapshot_from_edges(edges, n, t_index=i + 1)
        for i, (edges, _) in enumerate(parsed)
    ]
    label_files = [f.with_suffix(".labels") for f in edge_files]
    labels = None
    if all(f.exists() for f in label_files):
        labels = [_parse_label_file(f, n) for f in label_files]
    return DynamicGraph(snaps, labels=labels)


def save_dynamic_graph(graph, path, meta=None):
    """Write the directory format; returns the directory path."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    for i, snap in enumerate(graph.snapshots):
        lines = []
        for u, v, w in snap.edge_array():
            if w == 1.0:
                lines.append(f"{int(u)} {int(v)}")
            else:
                lines.append(f"{int(u)} {int(v)} {w:.12g}")
        (path / f"t{i + 1:04d}.edges").write_text("\n".join(lines) + "\n")
        if graph.labels is not None:
            lab = graph.labels[i]
            text = "\n".join(f"{node} {int(c)}" for node, c in enumerate(lab))
            (path / f"t{i + 1:04d}.labels").write_text(text + "\n")
    info = {"n": graph.n, "tau": graph.tau}
    if meta:
        info.update(meta)
    (path / "meta.json").write_text(json.dumps(info, indent=2) + "\n")
    return path


def load_label_dir(path, suffix=".labels"):
    """Load per-snapshot label files (``tNNNN.labels`` or ``tNNNN.pred``)."""
    path = Path(path)
    files = sorted(p for p in path.iterdir() if re.fullmatch(r"t\d+" + suffix, p.name))
    if not files:
        raise FileNotFoundError(f"no t*{suffix} files under {path}")
    out = []
    for f in files:
        pairs = {}
        for raw in f.read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            node, cluster = line.split()[:2]
            pairs[int(node)] = int(cluster)
        n = max(pairs) + 1
        labels = np.zeros(n, dtype=np.int64)
        for node, c in pairs.items():
            labels[node] = c
        out.append(labels)
    return out
