import numpy as np
import pytest

from dynclust.errors import InfeasibleParams
from dynclust.synth import (
    EVENTS,
    HIDDEN_LABEL,
    GreenParams,
    gen_green,
    gen_syn_fix,
    gen_syn_var,
)


def desk_green(event, seed, n=600, k=6):
    return GreenParams(
        n=n,
        tau=6,
        avg_degree=16,
        max_degree=40,
        community_count_range=(k, k),
        mixing=0.2,
        event=event,
        seed=seed,
    )


def test_syn_fix_shape():
    g = gen_syn_fix(seed=1)
    assert g.n == 128
    assert g.tau == 10
    assert np.array_equal(np.bincount(g.labels[0]), [32, 32, 32, 32])


def test_syn_fix_moves_twelve_per_step():
    g = gen_syn_fix(seed=2)
    for t in range(1, 10):
        assert int((g.labels[t] != g.labels[t - 1]).sum()) == 12


def test_syn_fix_deterministic():
    a = gen_syn_fix(seed=3)
    b = gen_syn_fix(seed=3)
    for t in range(10):
        assert (a.snapshots[t].adj != b.snapshots[t].adj).nnz == 0
        assert np.array_equal(a.labels[t], b.labels[t])


def test_syn_fix_snapshot_invariants():
    g = gen_syn_fix(seed=4)
    for snap in g.snapshots:
        assert (snap.adj != snap.adj.T).nnz == 0
        assert not snap.adj.diagonal().any()


def test_syn_var_shape():
    g = gen_syn_var(seed=1)
    assert g.n == 256
    assert g.tau == 10
    assert np.array_equal(np.bincount(g.labels[0]), [64, 64, 64, 64])


def test_syn_var_new_community_each_step():
    g = gen_syn_var(seed=2)
    assert int((g.labels[1] == 4).sum()) == 32
    for t, k in zip(range(5), [4, 5, 6, 7, 8]):
        assert len(np.unique(g.labels[t])) == k


def test_syn_var_mirrored_tail():
    g = gen_syn_var(seed=3)
    for t in range(5, 10):
        mirror = 9 - t
        assert np.array_equal(g.labels[t], g.labels[mirror])
        assert (g.snapshots[t].adj != g.snapshots[mirror].adj).nnz == 0


def test_green_params_validation():
    with pytest.raises(InfeasibleParams):
        desk_green("expansion", 0, n=10, k=6)  # communities too small
    with pytest.raises(InfeasibleParams):
        GreenParams(600, 6, 50, 40, (6, 6), 0.2, "hide", 0)  # avg > max
    with pytest.raises(InfeasibleParams):
        GreenParams(600, 6, 16, 40, (1, 6), 0.2, "hide", 0)  # lower bound < 2
    with pytest.raises(InfeasibleParams):
        GreenParams(600, 6, 16, 40, (6, 6), 0.2, "vanish", 0)  # unknown event


def test_green_birth_death_counts():
    g = gen_green(desk_green("birth-death", 1))
    for t in range(1, g.tau):
        prev = set(np.unique(g.labels[t - 1])) - {HIDDEN_LABEL}
        cur = set(np.unique(g.labels[t])) - {HIDDEN_LABEL}
        assert len(prev - cur) == 1  # one community dies
        assert len(cur - prev) == 1  # one is born


def test_green_expansion_changes_one_community_by_half():
    g = gen_green(desk_green("expansion", 2))
    for t in range(1, g.tau):
        prev_sizes = {c: int((g.labels[t - 1] == c).sum()) for c in np.unique(g.labels[t - 1])}
        big_changes = 0
        for c, size in prev_sizes.items():
            now = int((g.labels[t] == c).sum())
            if abs(now - size) == int(round(0.5 * size)) and now != size:
                big_changes += 1
        assert big_changes >= 1


def test_green_hide_marks_background_and_restores():
    g = gen_green(desk_green("hide", 3))
    hidden_seen = False
    for t in range(1, g.tau):
        hidden = np.flatnonzero(g.labels[t] == HIDDEN_LABEL)
        if len(hidden):
            hidden_seen = True
            deg = np.asarray(g.snapshots[t].adj.sum(axis=1)).ravel()
            assert np.all(deg[hidden] == 0)
    assert hidden_seen
    # hidden nodes come back: the final snapshot has no eternally hidden nodes
    ever_visible = np.zeros(g.n, dtype=bool)
    for t in range(g.tau):
        ever_visible |= g.labels[t] != HIDDEN_LABEL
    assert ever_visible.all()


def test_green_merge_split_changes_cluster_count():
    g = gen_green(desk_green("merge-split", 4))
    for t in range(1, g.tau):
        k_prev = len(set(np.unique(g.labels[t - 1])) - {HIDDEN_LABEL})
        k_now = len(set(np.unique(g.labels[t])) - {HIDDEN_LABEL})
        assert abs(k_now - k_prev) == 1


def test_green_labels_partition_non_hidden():
    g = gen_green(desk_green("hide", 5))
    for t in range(g.tau):
        visible = g.labels[t] != HIDDEN_LABEL
        assert visible.sum() > 0
        assert np.all(g.labels[t][visible] >= 0)


def test_green_deterministic():
    a = gen_green(desk_green("merge-split", 6))
    b = gen_green(desk_green("merge-split", 6))
    for t in range(a.tau):
        assert (a.snapshots[t].adj != b.snapshots[t].adj).nnz == 0
        assert np.array_equal(a.labels[t], b.labels[t])


def test_green_realized_mixing():
    fractions = []
    for seed in range(3):
        g = gen_green(desk_green("birth-death", seed, n=600, k=6))
        snap, labels = g.snapshots[0], g.labels[0]
        coo = snap.adj.tocoo()
        inter = (labels[coo.row] != labels[coo.col]).sum() / coo.nnz
        fractions.append(inter)
    assert abs(np.mean(fractions) - 0.2) <= 0.05


def test_green_unaffected_nodes_keep_edges():
    g = gen_green(desk_green("expansion", 7))
    for t in range(1, g.tau):
        moved = g.labels[t] != g.labels[t - 1]
        # pick a node that did not move and whose label set stayed visible
        stable = np.flatnonzero(~moved & (g.labels[t] != HIDDEN_LABEL)
                                & (g.labels[t - 1] != HIDDEN_LABEL))
        adj_prev = g.snapshots[t - 1].adj
        adj_now = g.snapshots[t].adj
        changed_rows = 0
        for node in stable[:50]:
            if (adj_prev[node] != adj_now[node]).nnz:
                changed_rows += 1
        # rows only change when a neighbor was rewired, never wholesale
        assert changed_rows < len(stable[:50])


def test_events_constant():
    assert set(EVENTS) == {"birth-death", "expansion", "hide", "merge-split"}
