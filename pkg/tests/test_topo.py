import numpy as np
import pytest

from fingerkit.grid import FieldError, GridSpec
from fingerkit.topo import (
    TrimParams,
    build_reeb_skeleton,
    finger_height,
    topological_complexity,
    trim_skeleton,
)
from oracles import random_skeleton

SPEC = GridSpec((16, 16, 20), spacing=1.0, origin=(0, 0, 19))


def column(i=5, j=5, k0=0, k1=10):
    return np.array([[i, j, k] for k in range(k0, k1 + 1)])


def y_core(short_len=3, long_len=7, split_k=5):
    out = [[5, 5, k] for k in range(split_k + 1)]
    for d in range(1, short_len + 1):
        out.append([5 - min(d, 2), 5, split_k + d])
    for d in range(1, long_len + 1):
        out.append([5 + min(d, 3), 5, split_k + d])
    return np.array(out)


def loop_core():
    return np.array(
        [[0, 0, 0], [1, 0, 0], [2, 0, 0],
         [0, 0, 1], [2, 0, 1],
         [0, 0, 2], [1, 0, 2], [2, 0, 2]]
    )


def kinds(g):
    return sorted(n.kind for n in g.nodes.values())


def test_column_skeleton():
    g = build_reeb_skeleton(column(), SPEC)
    assert kinds(g) == ["root", "tip"]
    assert len(g.arcs) == 1
    assert finger_height(g) == pytest.approx(10.0)
    assert topological_complexity(g) == 2


def test_single_voxel_degenerate():
    g = build_reeb_skeleton(np.array([[3, 3, 3]]), SPEC)
    assert len(g.nodes) == 1 and len(g.arcs) == 0
    assert finger_height(g) == 0.0


def test_y_skeleton():
    g = build_reeb_skeleton(y_core(), SPEC)
    assert kinds(g) == ["root", "saddle_split", "tip", "tip"]
    assert len(g.arcs) == 3
    assert topological_complexity(g) == 4


def test_errors():
    with pytest.raises(FieldError):
        build_reeb_skeleton(np.zeros((0, 3), dtype=int), SPEC)
    disconnected = np.array([[0, 0, 0], [5, 5, 5]])
    with pytest.raises(FieldError, match="disconnected"):
        build_reeb_skeleton(disconnected, SPEC)


def test_loop_skeleton_cycle_count():
    g = build_reeb_skeleton(loop_core(), SPEC)
    assert g.cycle_count() == len(g.arcs) - len(g.nodes) + 1 == 1


def test_double_loop_cycles():
    # two stacked loops share the middle layer: expect 2 independent cycles
    vox = []
    for base in (0, 4):
        vox += [[0, 0, base], [1, 0, base], [2, 0, base]]
        vox += [[0, 0, base + 1], [2, 0, base + 1]]
        vox += [[0, 0, base + 2], [1, 0, base + 2], [2, 0, base + 2]]
    vox += [[1, 0, 3]]  # connect the two loops
    g = build_reeb_skeleton(np.unique(np.array(vox), axis=0), SPEC)
    assert g.cycle_count() == 2


def test_arc_polylines_monotone():
    g = build_reeb_skeleton(y_core(), SPEC)
    for a in g.arcs.values():
        hs = a.polyline[:, 2]
        assert np.all(np.diff(hs) < 0)
        assert g.nodes[a.u].height > g.nodes[a.v].height


def test_trim_zero_thresholds_noop():
    g = build_reeb_skeleton(y_core(), SPEC)
    t = trim_skeleton(g, TrimParams())
    assert len(t.nodes) == len(g.nodes) and len(t.arcs) == len(g.arcs)


def test_trim_removes_short_leg():
    g = build_reeb_skeleton(y_core(short_len=3, long_len=7), SPEC)
    t = trim_skeleton(g, TrimParams(min_branch_persistence=5.0))
    assert kinds(t) == ["root", "tip"]
    assert len(t.arcs) == 1
    assert finger_height(t) == finger_height(g)


def test_trim_collapses_short_cycle_keeps_denser_path():
    g = build_reeb_skeleton(loop_core(), SPEC)
    # hand the two parallel arcs distinct densities
    a0, a1 = sorted(g.arcs.values(), key=lambda a: a.id)
    a0.mean_density = 0.2
    a1.mean_density = 0.9
    t = trim_skeleton(g, TrimParams(min_cycle_persistence=5.0))
    assert t.cycle_count() == 0
    assert len(t.arcs) == 1


def test_trim_protects_global_root_and_tip():
    g = build_reeb_skeleton(column(), SPEC)
    t = trim_skeleton(g, TrimParams(min_branch_persistence=100.0))
    hs = [n.height for n in t.nodes.values()]
    assert max(hs) == 19.0 and min(hs) == 9.0  # column spans k=0..10


def test_trim_properties_on_seeded_skeletons():
    thresholds = np.linspace(0.0, 30.0, 10)
    for seed in range(100):
        g = random_skeleton(seed)
        prev_arcs = None
        gh = finger_height(g)
        for th in thresholds:
            p = TrimParams(min_branch_persistence=float(th),
                           min_cycle_persistence=float(th))
            t = trim_skeleton(g, p)
            # idempotence
            tt = trim_skeleton(t, p)
            assert sorted(tt.nodes) == sorted(t.nodes)
            assert sorted(tt.arcs) == sorted(t.arcs)
            # monotone non-increasing surviving arc count
            if prev_arcs is not None:
                assert len(t.arcs) <= prev_arcs
            prev_arcs = len(t.arcs)
            # global extremes survive; complexity never grows
            assert t.global_root() in t.nodes and t.global_tip() in t.nodes
            assert topological_complexity(t) <= topological_complexity(g)
            if th < gh:
                assert finger_height(t) == pytest.approx(gh)
