"""Branch decomposition of finger skeletons.

Step 1 peels the longest downward path (maximum height extent over all
depth-monotone paths, found by dynamic programming over the downward-oriented
arc DAG) out of the graph, repeatedly, until no arcs remain.  A peeled path's
nodes stop being traversable, but later paths may still start or end at them,
which is how a side branch keeps the saddle it hangs from.  Step 2 walks the
branches in FIFO order from the longest one and records a connection wherever
an unvisited branch shares a node with a visited one.

Tie-breaking for equal extents: greater total arc length, then smaller
smallest-node-id, then lexicographic node sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from collections import deque

import numpy as np

from .grid import FieldError
from .topo import SkeletonGraph


@dataclass
class Branch:
    id: int
    node_ids: list[int]          # top to bottom
    arc_ids: list[int]
    top_height: float
    bottom_height: float
    polyline: np.ndarray         # concatenated arc polylines (>=1 point)
    mean_density: float
    complexity: int              # critical points on the branch
    profile: list = field(default_factory=list)  # (top, bottom, density) per arc

    @property
    def extent(self) -> float:
        return self.top_height - self.bottom_height


@dataclass
class BranchConnection:
    branch_a: int                # already-visited side
    branch_b: int
    node_id: int                 # shared skeleton node
    height: float
    arc_id: int | None           # an arc of branch_b at the shared node


@dataclass
class BranchDecomposition:
    finger_id: int
    branches: list[Branch]
    connections: list[BranchConnection]
    principal_branch_id: int
    discovery_order: list[int]   # FIFO order from Step 2

    def branch(self, bid: int) -> Branch:
        return self.branches[bid]

    def to_json(self) -> dict:
        return {
            "principal": self.principal_branch_id,
            "discovery_order": self.discovery_order,
            "branches": [
                {
                    "id": b.id,
                    "nodes": b.node_ids,
                    "arcs": b.arc_ids,
                    "top": b.top_height,
                    "bottom": b.bottom_height,
                    "extent": b.extent,
                    "complexity": b.complexity,
                    "mean_density": b.mean_density,
                    "centroid_xy": [float(b.polyline[:, 0].mean()),
                                    float(b.polyline[:, 1].mean())],
                }
                for b in self.branches
            ],
            "connections": [
                {
                    "a": c.branch_a,
                    "b": c.branch_b,
                    "node": c.node_id,
                    "depth": c.height,
                    "arc": c.arc_id,
                }
                for c in self.connections
            ],
        }


def _path_value(g: SkeletonGraph, start: int, down_arcs, dead: set):
    """Best downward path starting at ``start``; returns
    (extent, length, min_id, node_seq, nodes, arcs)."""
    memo: dict[int, tuple] = {}

    def arc_len(aid):
        p = g.arcs[aid].polyline
        if len(p) < 2:
            return 0.0
        return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())

    def best_from(nid):
        if nid in memo:
            return memo[nid]
        best = None
        for aid, m in down_arcs.get(nid, ()):  # arcs nid -> m (descending)
            drop = g.nodes[nid].height - g.nodes[m].height
            if m not in dead:
                tail = best_from(m)
                cand = (
                    drop + tail[0],
                    arc_len(aid) + tail[1],
                    min(m, tail[2]),
                    (m,) + tail[3],
                    [aid] + tail[4],
                )
            else:
                cand = (drop, arc_len(aid), m, (m,), [aid])
            if best is None or _better(cand, best):
                best = cand
        if best is None:
            best = (0.0, 0.0, nid, (), [])
        memo[nid] = best
        return best

    def _better(a, b):
        if a[0] != b[0]:
            return a[0] > b[0]
        if a[1] != b[1]:
            return a[1] > b[1]
        if min(start, a[2]) != min(start, b[2]):
            return min(start, a[2]) < min(start, b[2])
        return a[3] < b[3]

    ext, length, min_id, seq, arcs = best_from(start)
    return ext, length, min(start, min_id), (start,) + seq, [start] + list(seq), arcs


def extract_branches(g: SkeletonGraph) -> BranchDecomposition:
    """Peel longest-downward-path branches and wire their connections."""
    if not g.nodes:
        raise FieldError("empty skeleton")
    down_arcs: dict[int, list] = {}
    for a in sorted(g.arcs.values(), key=lambda a: a.id):
        down_arcs.setdefault(a.u, []).append((a.id, a.v))

    available = {a.id for a in g.arcs.values()}
    dead: set[int] = set()
    branches: list[Branch] = []

    def make_branch(bid, nodes, arcs):
        profile = []
        if arcs:
            pts = [g.arcs[arcs[0]].polyline]
            for aid in arcs[1:]:
                pts.append(g.arcs[aid].polyline[1:])
            poly = np.vstack(pts)
            wts = [len(g.arcs[a].polyline) for a in arcs]
            dens = sum(g.arcs[a].mean_density * w for a, w in zip(arcs, wts)) / sum(wts)
            for aid in arcs:
                arc = g.arcs[aid]
                profile.append(
                    (g.nodes[arc.u].height, g.nodes[arc.v].height, arc.mean_density)
                )
        else:
            poly = g.nodes[nodes[0]].position.reshape(1, 3)
            dens = 0.0
        hs = [g.nodes[n].height for n in nodes]
        return Branch(
            id=bid,
            node_ids=list(nodes),
            arc_ids=list(arcs),
            top_height=max(hs),
            bottom_height=min(hs),
            polyline=poly,
            mean_density=dens,
            complexity=max(1, len(nodes)),
            profile=profile,
        )

    while available:
        cur_down = {
            n: [(aid, m) for aid, m in lst if aid in available]
            for n, lst in down_arcs.items()
        }
        best = None
        best_start = None
        for start in sorted(g.nodes):
            if not cur_down.get(start):
                continue
            val = _path_value(g, start, cur_down, dead)
            if best is None or (
                val[0] > best[0]
                or (val[0] == best[0] and val[1] > best[1])
                or (val[0] == best[0] and val[1] == best[1] and val[2] < best[2])
                or (val[0] == best[0] and val[1] == best[1] and val[2] == best[2]
                    and val[3] < best[3])
            ):
                best = val
                best_start = start
        ext, length, min_id, seq, nodes, arcs = best
        branches.append(make_branch(len(branches), nodes, arcs))
        available.difference_update(arcs)
        dead.update(nodes)

    covered = {n for b in branches for n in b.node_ids}
    for nid in sorted(set(g.nodes) - covered):
        branches.append(make_branch(len(branches), [nid], []))

    # Step 2: FIFO discovery from the longest branch
    node_branches: dict[int, list[int]] = {}
    for b in branches:
        for n in b.node_ids:
            node_branches.setdefault(n, []).append(b.id)
    marked = {branches[0].id}
    queue = deque([branches[0].id])
    discovery = [branches[0].id]
    connections: list[BranchConnection] = []
    while queue:
        bid = queue.popleft()
        b = branches[bid]
        neighbors: dict[int, list[int]] = {}
        for n in b.node_ids:
            for other in node_branches[n]:
                if other not in marked:
                    neighbors.setdefault(other, []).append(n)
        for other in sorted(neighbors):
            shared = neighbors[other]
            attach = max(shared, key=lambda n: (g.nodes[n].height, -n))
            ob = branches[other]
            incident = sorted(
                a for a in ob.arc_ids
                if g.arcs[a].u == attach or g.arcs[a].v == attach
            )
            connections.append(
                BranchConnection(
                    branch_a=bid,
                    branch_b=other,
                    node_id=attach,
                    height=g.nodes[attach].height,
                    arc_id=incident[0] if incident else None,
                )
            )
            marked.add(other)
            queue.append(other)
            discovery.append(other)

    return BranchDecomposition(
        finger_id=g.finger_id,
        branches=branches,
        connections=connections,
        principal_branch_id=branches[0].id,
        discovery_order=discovery,
    )


def branch_height(b: Branch) -> float:
    """Height persistence of one branch."""
    return b.extent
