"""Height-function Reeb graphs of finger cores, embedded as 3D skeletons.

The core is swept layer by layer along the height axis.  Layer components
(8-connected in-plane) are the level sets; components of consecutive layers
are adjacent when any voxel pair is 26-adjacent.  Critical layers (birth,
death, merge, split) become graph nodes embedded at their component
centroids; chains of regular layers are absorbed into arc polylines.  This
layered construction is the exact Reeb graph of the depth function on the
voxel complex, and it tolerates the torus-like cores a contour tree cannot.

Trimming removes leaf arcs and collapses simple parallel-path cycles whose
height persistence falls below a threshold, to a fixpoint, while the global
root and tip always survive.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .grid import FieldError, GridSpec, ScalarField

KIND_ROOT = "root"
KIND_TIP = "tip"
KIND_MERGE = "saddle_merge"
KIND_SPLIT = "saddle_split"
KIND_REGULAR = "regular"


@dataclass
class SkeletonNode:
    id: int
    position: np.ndarray  # world coordinates of the component centroid
    height: float         # world height along the height axis
    kind: str = KIND_REGULAR


@dataclass
class SkeletonArc:
    id: int
    u: int                # upper endpoint (greater height)
    v: int                # lower endpoint
    polyline: np.ndarray  # (m, 3) world points, strictly descending height
    mean_density: float = 0.0

    def span(self, nodes) -> float:
        return nodes[self.u].height - nodes[self.v].height


@dataclass
class SkeletonGraph:
    finger_id: int
    nodes: dict[int, SkeletonNode] = field(default_factory=dict)
    arcs: dict[int, SkeletonArc] = field(default_factory=dict)
    height_axis: int = 2

    def node_arcs(self, nid: int) -> list[int]:
        return [a.id for a in self.arcs.values() if a.u == nid or a.v == nid]

    def degree(self, nid: int) -> int:
        return len(self.node_arcs(nid))

    def up_degree(self, nid: int) -> int:
        return sum(1 for a in self.arcs.values() if a.v == nid)

    def down_degree(self, nid: int) -> int:
        return sum(1 for a in self.arcs.values() if a.u == nid)

    def cycle_count(self) -> int:
        """First Betti number of the (connected) graph: E - V + 1."""
        if not self.nodes:
            return 0
        return len(self.arcs) - len(self.nodes) + 1

    def global_root(self) -> int:
        return max(self.nodes.values(), key=lambda n: (n.height, -n.id)).id

    def global_tip(self) -> int:
        return min(self.nodes.values(), key=lambda n: (n.height, n.id)).id

    def to_json(self) -> dict:
        return {
            "nodes": [
                {
                    "id": n.id,
                    "kind": n.kind,
                    "pos": [float(x) for x in n.position],
                    "depth": n.height,
                }
                for n in sorted(self.nodes.values(), key=lambda n: n.id)
            ],
            "arcs": [
                {
                    "id": a.id,
                    "u": a.u,
                    "v": a.v,
                    "polyline": [[float(x) for x in p] for p in a.polyline],
                    "mean_density": a.mean_density,
                }
                for a in sorted(self.arcs.values(), key=lambda a: a.id)
            ],
        }


@dataclass(frozen=True)
class TrimParams:
    min_branch_persistence: float = 0.0
    min_cycle_persistence: float = 0.0

    def __post_init__(self):
        if self.min_branch_persistence < 0 or self.min_cycle_persistence < 0:
            raise ValueError("persistence thresholds must be >= 0")

    def to_json(self) -> dict:
        return {
            "min_branch_persistence": self.min_branch_persistence,
            "min_cycle_persistence": self.min_cycle_persistence,
        }

    @classmethod
    def from_json(cls, d: dict) -> "TrimParams":
        return cls(**{k: d[k] for k in
                      ("min_branch_persistence", "min_cycle_persistence") if k in d})


def _classify_kinds(g: SkeletonGraph) -> None:
    for n in g.nodes.values():
        up = g.up_degree(n.id)
        down = g.down_degree(n.id)
        if up == 0:
            n.kind = KIND_ROOT
        elif down == 0:
            n.kind = KIND_TIP
        elif up >= 2:
            n.kind = KIND_MERGE
        elif down >= 2:
            n.kind = KIND_SPLIT
        else:
            n.kind = KIND_REGULAR


def _in_plane_components(coords: set[tuple[int, int]]) -> list[list[tuple[int, int]]]:
    """8-connected components of a set of 2D lattice points, deterministic
    order by smallest (b, a) member."""
    seen = set()
    comps = []
    for start in sorted(coords, key=lambda c: (c[1], c[0])):
        if start in seen:
            continue
        comp = []
        stack = [start]
        seen.add(start)
        while stack:
            c = stack.pop()
            comp.append(c)
            for da in (-1, 0, 1):
                for db in (-1, 0, 1):
                    if da == 0 and db == 0:
                        continue
                    nb = (c[0] + da, c[1] + db)
                    if nb in coords and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
        comps.append(sorted(comp, key=lambda c: (c[1], c[0])))
    return comps


def build_reeb_skeleton(core: np.ndarray, spec: GridSpec,
                        density: Optional[ScalarField] = None,
                        finger_id: int = 0) -> SkeletonGraph:
    """Reeb graph of the height function on one finger core.

    ``core`` is an (n, 3) ijk voxel array; it must be non-empty and
    26-connected (one finger).  ``density`` supplies arc mean densities.
    """
    core = np.asarray(core, dtype=np.int64)
    if core.ndim != 2 or core.shape[1] != 3 or core.shape[0] == 0:
        raise FieldError("core must be a non-empty (n, 3) voxel array")
    ha = spec.height_axis
    a1, a2 = [a for a in range(3) if a != ha]

    voxel_set = {tuple(v) for v in core}
    # connectivity check (26-adjacency flood)
    stack = [next(iter(sorted(voxel_set)))]
    seen = {stack[0]}
    while stack:
        v = stack.pop()
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                for dk in (-1, 0, 1):
                    if di == dj == dk == 0:
                        continue
                    nb = (v[0] + di, v[1] + dj, v[2] + dk)
                    if nb in voxel_set and nb not in seen:
                        seen.add(nb)
                        stack.append(nb)
    if len(seen) != len(voxel_set):
        raise FieldError("core is disconnected; segment it into fingers first")

    layers: dict[int, set[tuple[int, int]]] = {}
    for v in sorted(voxel_set):
        layers.setdefault(int(v[ha]), set()).add((int(v[a1]), int(v[a2])))

    # slabs: per-layer components with geometry
    slab_coords = []       # list of (layer, [(a,b)...])
    slab_of = {}           # (layer, (a,b)) -> slab index
    for k in sorted(layers):
        for comp in _in_plane_components(layers[k]):
            idx = len(slab_coords)
            slab_coords.append((k, comp))
            for c in comp:
                slab_of[(k, c)] = idx

    n_slabs = len(slab_coords)
    succ = [[] for _ in range(n_slabs)]
    pred = [[] for _ in range(n_slabs)]
    for sid, (k, comp) in enumerate(slab_coords):
        found = set()
        for (a, b) in comp:
            for da in (-1, 0, 1):
                for db in (-1, 0, 1):
                    t = slab_of.get((k + 1, (a + da, b + db)))
                    if t is not None:
                        found.add(t)
        for t in sorted(found):
            succ[sid].append(t)
            pred[t].append(sid)

    def slab_centroid(sid):
        k, comp = slab_coords[sid]
        pos = np.zeros(3)
        v = [0, 0, 0]
        acc = np.zeros(3)
        for (a, b) in comp:
            v[ha], v[a1], v[a2] = k, a, b
            acc += spec.position(v)
        return acc / len(comp)

    def slab_density(sid):
        if density is None:
            return 0.0, len(slab_coords[sid][1])
        k, comp = slab_coords[sid]
        tot = 0.0
        for (a, b) in comp:
            v = [0, 0, 0]
            v[ha], v[a1], v[a2] = k, a, b
            tot += density.values[spec.linear_index(*v)]
        return tot, len(comp)

    critical = [
        sid for sid in range(n_slabs)
        if not (len(pred[sid]) == 1 and len(succ[sid]) == 1)
    ]
    g = SkeletonGraph(finger_id=finger_id, height_axis=ha)
    node_of_slab = {}
    for nid, sid in enumerate(critical):
        k, _ = slab_coords[sid]
        g.nodes[nid] = SkeletonNode(
            id=nid,
            position=slab_centroid(sid),
            height=spec.height_of_layer(k),
        )
        node_of_slab[sid] = nid

    arc_id = 0
    for sid in critical:
        for t in succ[sid]:
            chain = [sid]
            cur = t
            while cur not in node_of_slab:
                chain.append(cur)
                cur = succ[cur][0]
            chain.append(cur)
            polyline = np.array([slab_centroid(c) for c in chain])
            tot, cnt = 0.0, 0
            for c in chain:
                d, n = slab_density(c)
                tot += d
                cnt += n
            g.arcs[arc_id] = SkeletonArc(
                id=arc_id,
                u=node_of_slab[sid],
                v=node_of_slab[cur],
                polyline=polyline,
                mean_density=(tot / cnt) if (cnt and density is not None) else 0.0,
            )
            arc_id += 1
    _classify_kinds(g)
    return g


def _absorb_pass_through(g: SkeletonGraph) -> bool:
    """Merge arcs across degree-2 pass-through nodes; True when changed."""
    changed = False
    for nid in sorted(g.nodes):
        ups = sorted(a.id for a in g.arcs.values() if a.v == nid)
        downs = sorted(a.id for a in g.arcs.values() if a.u == nid)
        if len(ups) != 1 or len(downs) != 1:
            continue
        ua, da = g.arcs[ups[0]], g.arcs[downs[0]]
        if ua.id == da.id:  # self-loop; leave for the cycle rule
            continue
        na = len(ua.polyline)
        nb = len(da.polyline)
        merged = SkeletonArc(
            id=min(ua.id, da.id),
            u=ua.u,
            v=da.v,
            polyline=np.vstack([ua.polyline, da.polyline[1:]]),
            mean_density=(ua.mean_density * na + da.mean_density * nb) / (na + nb),
        )
        del g.arcs[ua.id]
        del g.arcs[da.id]
        del g.nodes[nid]
        g.arcs[merged.id] = merged
        changed = True
    return changed


def trim_skeleton(g: SkeletonGraph, params: TrimParams) -> SkeletonGraph:
    """Persistence trim: drop short leaf arcs, collapse short parallel-path
    cycles (keeping the denser path), absorb pass-through nodes; repeat to a
    fixpoint.  The globally highest and deepest nodes are never removed."""
    out = SkeletonGraph(
        finger_id=g.finger_id,
        nodes={n.id: replace(n, position=n.position.copy()) for n in g.nodes.values()},
        arcs={a.id: replace(a, polyline=a.polyline.copy()) for a in g.arcs.values()},
        height_axis=g.height_axis,
    )
    while True:
        changed = False
        if len(out.nodes) > 1:
            protected = {out.global_root(), out.global_tip()}
            # leaf arcs below the branch threshold
            for nid in sorted(out.nodes):
                if nid in protected or nid not in out.nodes:
                    continue
                incident = out.node_arcs(nid)
                if len(incident) != 1:
                    continue
                arc = out.arcs[incident[0]]
                if arc.span(out.nodes) < params.min_branch_persistence:
                    del out.arcs[arc.id]
                    del out.nodes[nid]
                    changed = True
        changed |= _absorb_pass_through(out)
        # parallel arcs = simple cycles after absorption
        by_pair: dict[tuple[int, int], list[int]] = {}
        for a in list(out.arcs.values()):
            if a.u == a.v:
                span = float(np.ptp(a.polyline[:, out.height_axis])) if len(a.polyline) else 0.0
                if span < params.min_cycle_persistence:
                    del out.arcs[a.id]
                    changed = True
                continue
            by_pair.setdefault((a.u, a.v), []).append(a.id)
        for pair in sorted(by_pair):
            arcs = by_pair[pair]
            if len(arcs) < 2:
                continue
            span = out.arcs[arcs[0]].span(out.nodes)
            if span >= params.min_cycle_persistence:
                continue
            keep = max(arcs, key=lambda aid: (out.arcs[aid].mean_density, -aid))
            for aid in arcs:
                if aid != keep and aid in out.arcs:
                    del out.arcs[aid]
                    changed = True
        if not changed:
            break
    _classify_kinds(out)
    return out


def finger_height(g: SkeletonGraph) -> float:
    """Height persistence: highest node minus deepest node."""
    if not g.nodes:
        raise FieldError("empty skeleton")
    hs = [n.height for n in g.nodes.values()]
    return max(hs) - min(hs)


def topological_complexity(g: SkeletonGraph) -> int:
    """Number of critical (non-regular) nodes."""
    return sum(1 for n in g.nodes.values() if n.kind != KIND_REGULAR)
