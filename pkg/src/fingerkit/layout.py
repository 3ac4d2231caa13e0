"""Tracking-graph layout: weighted crossing minimization, finger glyphs,
convex hulls, and render hints.

Ordering uses the W-GRE greedy rule for one-sided weighted bipartite
crossing minimization: repeatedly place the free node minimizing the ratio
(weighted crossings created with already-placed nodes) / (weighted crossings
it would create if placed last among the remaining), comparing ratios by
cross-multiplication, with barycenter and node-id ties.  If greedy ever ends
worse than the incoming order, the incoming order is returned, so the output
never exceeds the input's crossing count.  Multi-row ordering sweeps down
and up, keeping a sweep only when it strictly lowers the total crossing
count, which makes the total non-increasing and forces convergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LINK_COLORS = {
    "grow": "#8c510a",
    "merge": "#2166ac",
    "split": "#1b7837",
    "generic": "#777777",
}
MIN_LINK_OPACITY = 0.05


# ---------------------------------------------------------------------------
# weighted bipartite crossing minimization
# ---------------------------------------------------------------------------

def _pair_crossings(adj_u, adj_v):
    """Weighted crossings contributed when u precedes v."""
    total = 0.0
    for pu, wu in adj_u:
        for pv, wv in adj_v:
            if pu > pv:
                total += wu * wv
    return total


def weighted_crossings(fixed_order, free_order, edges) -> float:
    """Total weighted crossings between two ordered rows.

    ``edges`` are (fixed_node, free_node, weight) triples; two edges cross
    iff their endpoint orders disagree, costing the weight product.
    """
    pos_fixed = {n: i for i, n in enumerate(fixed_order)}
    adj = {n: [] for n in free_order}
    for fn, un, w in edges:
        adj[un].append((pos_fixed[fn], w))
    total = 0.0
    order = list(free_order)
    for i in range(len(order)):
        for j in range(i + 1, len(order)):
            total += _pair_crossings(adj[order[i]], adj[order[j]])
    return total


def wgre_order(fixed_order, free_nodes, edges) -> list:
    """Greedy one-sided ordering of ``free_nodes`` against a fixed row.

    Placing u next fixes its crossings against every still-unplaced v, so
    the greedy score is created_u / (created_u + avoided_u), where
    created_u = sum of cross(u before v) and avoided_u = sum of
    cross(v before u) over unplaced v.  Ratios compare by cross
    multiplication; ties fall to the barycenter of fixed neighbors, then to
    the incoming rank.  A final adjacent-swap pass removes local regressions
    and the incoming order is returned if greedy somehow ends worse.
    """
    free = list(free_nodes)
    n = len(free)
    if n <= 1:
        return free
    pos_fixed = {nd: i for i, nd in enumerate(fixed_order)}
    adj = {nd: [] for nd in free}
    for fn, un, w in edges:
        adj[un].append((pos_fixed[fn], w))
    cross = {
        u: {v: _pair_crossings(adj[u], adj[v]) for v in free if v is not u}
        for u in free
    }
    bary = {}
    for u in free:
        wsum = sum(w for _, w in adj[u])
        bary[u] = (sum(p * w for p, w in adj[u]) / wsum) if wsum else float("inf")
    rank = {u: i for i, u in enumerate(free)}

    placed = []
    created = {u: sum(cross[u][v] for v in free if v is not u) for u in free}
    avoided = {u: sum(cross[v][u] for v in free if v is not u) for u in free}
    remaining = list(free)
    while remaining:
        best = None
        for u in remaining:
            if best is None:
                best = u
                continue
            lhs = created[u] * (created[best] + avoided[best])
            rhs = created[best] * (created[u] + avoided[u])
            if lhs < rhs:
                better = True
            elif lhs > rhs:
                better = False
            elif bary[u] != bary[best]:
                better = bary[u] < bary[best]
            else:
                better = rank[u] < rank[best]
            if better:
                best = u
        placed.append(best)
        remaining.remove(best)
        for u in remaining:
            created[u] -= cross[u][best]
            avoided[u] -= cross[best][u]

    # local improvement: swap adjacent pairs while it strictly helps
    improved = True
    while improved:
        improved = False
        for i in range(n - 1):
            u, v = placed[i], placed[i + 1]
            if cross[v][u] < cross[u][v]:
                placed[i], placed[i + 1] = v, u
                improved = True

    if weighted_crossings(fixed_order, placed, edges) > weighted_crossings(
        fixed_order, free, edges
    ):
        return free
    return placed


@dataclass
class OrderingResult:
    orders: list            # per-row node lists
    totals: list            # total crossings after each accepted sweep
    rounds: int
    converged: bool


def iterative_minimize(rows, pair_edges, centroid_x, max_rounds: int = 2) -> OrderingResult:
    """Order every row of a layered tracking graph.

    ``rows``      per-timestep finger id lists;
    ``pair_edges`` dict t -> [(id_at_t, id_at_t+1, weight)];
    ``centroid_x`` dict (t, id) -> x used for the seed orders.
    """
    T = len(rows)
    orders = [sorted(r, key=lambda fid, t=t: (centroid_x[(t, fid)], fid))
              for t, r in enumerate(rows)]

    def total(o):
        return sum(
            weighted_crossings(o[t], o[t + 1],
                               [(a, b, w) for a, b, w in pair_edges.get(t, [])])
            for t in range(T - 1)
        )

    best = total(orders)
    totals = [best]
    converged = False
    rounds = 0
    for _ in range(max_rounds):
        rounds += 1
        changed_in_round = False
        for direction in ("down", "up"):
            trial = [list(o) for o in orders]
            if direction == "down":
                for t in range(1, T):
                    edges = [(a, b, w) for a, b, w in pair_edges.get(t - 1, [])]
                    trial[t] = wgre_order(trial[t - 1], trial[t], edges)
            else:
                for t in range(T - 2, -1, -1):
                    edges = [(b, a, w) for a, b, w in pair_edges.get(t, [])]
                    trial[t] = wgre_order(trial[t + 1], trial[t], edges)
            tt = total(trial)
            if tt < best:
                if trial != orders:
                    changed_in_round = True
                orders = trial
                best = tt
                totals.append(tt)
            else:
                totals.append(best)
        if not changed_in_round:
            converged = True
            break
    return OrderingResult(orders=orders, totals=totals, rounds=rounds,
                          converged=converged)


# ---------------------------------------------------------------------------
# linear glyph (side view)
# ---------------------------------------------------------------------------

def linear_glyph(bd, mode: str = "horizontal") -> dict:
    """Branch side-view glyph: one vertical segment per branch on an integer
    slot, principal leftmost, connectors at attachment depth (or as arcs
    above the glyph in hover mode).  Slots are assigned in discovery order
    into the free slot adding the fewest connector/vertical crossings."""
    if mode not in ("horizontal", "arc"):
        raise ValueError(f"unknown linear glyph mode {mode!r}")
    branches = {b.id: b for b in bd.branches}
    conn_of = {c.branch_b: c for c in bd.connections}
    order = bd.discovery_order
    slots: dict[int, int] = {order[0]: 0}
    verticals = [(0, branches[order[0]].top_height, branches[order[0]].bottom_height)]
    connectors: list[tuple[float, int, int]] = []  # (y, lo_slot, hi_slot)

    def added_crossings(slot, top, bottom, conn_y, parent_slot):
        lo, hi = min(parent_slot, slot), max(parent_slot, slot)
        n = 0
        for (vs, vt, vb) in verticals:
            if lo < vs < hi and vb < conn_y < vt:
                n += 1
        for (cy, clo, chi) in connectors:
            if clo < slot < chi and bottom < cy < top:
                n += 1
        return n

    n_branches = len(bd.branches)
    for bid in order[1:]:
        b = branches[bid]
        conn = conn_of.get(bid)
        free = [s for s in range(n_branches) if s not in slots.values()]
        if conn is None:
            slot = free[0]
        else:
            parent_slot = slots[conn.branch_a]
            scored = [
                (added_crossings(s, b.top_height, b.bottom_height, conn.height,
                                 parent_slot), s)
                for s in free
            ]
            slot = min(scored)[1]
        slots[bid] = slot
        verticals.append((slot, b.top_height, b.bottom_height))
        if conn is not None:
            lo, hi = sorted((slots[conn.branch_a], slot))
            connectors.append((conn.height, lo, hi))

    glyph_top = max(b.top_height for b in bd.branches)
    out_branches = []
    for bid in order:
        b = branches[bid]
        profile = b.profile or [(b.top_height, b.bottom_height, b.mean_density)]
        out_branches.append(
            {
                "id": bid,
                "slot": slots[bid],
                "top": b.top_height,
                "bottom": b.bottom_height,
                "density_profile": [[t, bt, dv] for t, bt, dv in profile],
            }
        )
    out_connectors = []
    for c in bd.connections:
        lo, hi = sorted((slots[c.branch_a], slots[c.branch_b]))
        item = {"from_slot": lo, "to_slot": hi, "y": c.height}
        if mode == "arc":
            item = {"from_slot": lo, "to_slot": hi, "y": glyph_top,
                    "apex": glyph_top + 0.5 * (hi - lo)}
        out_connectors.append(item)
    return {
        "mode": mode,
        "n_slots": n_branches,
        "branches": out_branches,
        "connectors": out_connectors,
    }


# ---------------------------------------------------------------------------
# rectangular glyph (spatially ordered squarified treemap)
# ---------------------------------------------------------------------------

def _worst_aspect(row_areas, side, total_row):
    thickness = total_row / side
    worst = 1.0
    for r in row_areas:
        w = r / thickness
        ratio = thickness / w if w < thickness else w / thickness
        if ratio > worst:
            worst = ratio
    return worst


def rect_glyph(bd, rect=(0.0, 0.0, 1.0, 1.0)) -> dict:
    """Treemap of branch rectangles, areas proportional to topological
    complexity, inserted in row-major spatial order of branch centroids."""
    x, y, w, h = rect
    total_area = w * h
    items = sorted(
        bd.branches,
        key=lambda b: (float(b.polyline[:, 1].mean()), float(b.polyline[:, 0].mean()), b.id),
    )
    weights = [max(1, b.complexity) for b in items]
    wsum = sum(weights)
    areas = [total_area * wt / wsum for wt in weights]
    rects = []
    idx = 0
    cx, cy, cw, ch = x, y, w, h
    while idx < len(items):
        side = min(cw, ch)
        row = [areas[idx]]
        row_ids = [items[idx].id]
        idx += 1
        while idx < len(items):
            cand = row + [areas[idx]]
            if _worst_aspect(cand, side, sum(cand)) <= _worst_aspect(row, side, sum(row)):
                row.append(areas[idx])
                row_ids.append(items[idx].id)
                idx += 1
            else:
                break
        thickness = sum(row) / side
        off = 0.0
        for r, bid in zip(row, row_ids):
            length = r / thickness
            if cw <= ch:  # row along the top edge (horizontal strip)
                rects.append({"id": bid, "x": cx + off, "y": cy, "w": length, "h": thickness})
            else:         # column along the left edge
                rects.append({"id": bid, "x": cx, "y": cy + off, "w": thickness, "h": length})
            off += length
        if cw <= ch:
            cy += thickness
            ch -= thickness
        else:
            cx += thickness
            cw -= thickness
    return {"rects": rects}


# ---------------------------------------------------------------------------
# convex hull projection
# ---------------------------------------------------------------------------

def convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Monotone-chain convex hull; returns CCW vertices without repeats."""
    pts = np.unique(np.asarray(points, dtype=float), axis=0)
    if len(pts) <= 2:
        return pts
    pts = pts[np.lexsort((pts[:, 1], pts[:, 0]))]

    def half(seq):
        out = []
        for p in seq:
            while len(out) >= 2:
                ax, ay = out[-1] - out[-2]
                bx, by = p - out[-2]
                if ax * by - ay * bx <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(pts)
    upper = half(pts[::-1])
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:  # all collinear
        ends = np.array([pts[0], pts[-1]])
        return ends
    return hull


def hull_projection(g) -> dict:
    """Convex hull + centroid of the skeleton's critical points projected
    onto the plane orthogonal to the height axis."""
    ha = g.height_axis
    axes = [a for a in range(3) if a != ha]
    pts = np.array([[n.position[axes[0]], n.position[axes[1]]]
                    for n in sorted(g.nodes.values(), key=lambda n: n.id)])
    if len(pts) == 0:
        raise ValueError("empty skeleton")
    centroid = pts.mean(axis=0)
    hull = convex_hull_2d(pts)
    if len(hull) == 1:
        kind = "point"
    elif len(hull) == 2:
        kind = "segment"
    else:
        kind = "polygon"
    return {
        "points": [[float(a), float(b)] for a, b in hull],
        "centroid": [float(centroid[0]), float(centroid[1])],
        "kind": kind,
        "degenerate": kind != "polygon",
    }


# ---------------------------------------------------------------------------
# row geometry and link hints
# ---------------------------------------------------------------------------

def row_positions(order, complexities, gap: float = 0.02) -> list[dict]:
    """Normalized [0,1] glyph spans for one row; width grows with finger
    topological complexity."""
    n = len(order)
    if n == 0:
        return []
    total_gap = gap * (n + 1)
    weights = [max(1, complexities[fid]) for fid in order]
    wsum = sum(weights)
    avail = max(1e-9, 1.0 - total_gap)
    out = []
    xpos = gap
    for fid, wt in zip(order, weights):
        width = avail * wt / wsum
        out.append({"finger_id": fid, "x0": xpos, "x1": xpos + width})
        xpos += width + gap
    return out


def link_hints(links) -> list[dict]:
    """Opacity from weight (normalized per column pair), color from kind."""
    by_t: dict[int, float] = {}
    for l in links:
        by_t[l.t] = max(by_t.get(l.t, 0.0), l.weight)
    out = []
    for l in links:
        mx = by_t[l.t]
        op = max(MIN_LINK_OPACITY, l.weight / mx) if mx > 0 else MIN_LINK_OPACITY
        out.append(
            {
                "t": l.t,
                "a": l.a,
                "b": l.b,
                "opacity": op,
                "color": LINK_COLORS[l.kind],
                "kind": l.kind,
            }
        )
    return out
