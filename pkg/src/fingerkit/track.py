"""Overlap tracking of fingers and branches across adjacent timesteps.

Fingers at consecutive timesteps are linked when their complete volumes
share grid cells; the shared-cell count is the link weight.  Links are
classified against a volume-fraction threshold (default 0.75):

* merge   — the successor absorbs at least that fraction of *every* one of
            its (two or more) predecessors;
* grow    — the link alone preserves at least that fraction of its
            predecessor's volume;
* split   — the predecessor has several successors and none of them receives
            that fraction;
* generic — everything else (weak incidental overlaps).

Branch correspondences assign each shared cell to the nearest branch
polyline on both sides and count pairs; the counts of a link always sum to
its weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .branch import BranchDecomposition
from .grid import FieldError, GridSpec
from .segment import FingerLabelField

KIND_GROW = "grow"
KIND_MERGE = "merge"
KIND_SPLIT = "split"
KIND_GENERIC = "generic"


@dataclass
class Link:
    t: int                     # predecessor timestep
    a: int                     # finger id at t
    b: int                     # finger id at t+1
    weight: float              # shared-cell count (or density-weighted sum)
    shared_cells: np.ndarray   # linear indices, ascending
    kind: str = KIND_GENERIC
    overlap_ratio: float = 0.0  # weight / vol(a), count-based
    branch_correspondences: list = field(default_factory=list)  # [(ba, bb, n)]

    def to_json(self) -> dict:
        return {
            "t": self.t,
            "a": self.a,
            "b": self.b,
            "weight": self.weight,
            "kind": self.kind,
            "overlap_ratio": self.overlap_ratio,
            "shared_cells": [int(x) for x in self.shared_cells],
            "branch_correspondences": [
                [int(x), int(y), int(n)] for x, y, n in self.branch_correspondences
            ],
        }


def overlap_links(labels_t: FingerLabelField, labels_t1: FingerLabelField,
                  t: int = 0, weight_mode: str = "count",
                  density_t=None, density_t1=None) -> list[Link]:
    """One link per finger pair sharing at least one complete-volume cell."""
    if labels_t.spec != labels_t1.spec:
        raise FieldError("label fields disagree on the grid")
    a = labels_t.labels
    b = labels_t1.labels
    both = np.flatnonzero((a > 0) & (b > 0))
    links: list[Link] = []
    if both.size == 0:
        return links
    pair_key = a[both].astype(np.int64) * (int(b.max()) + 1) + b[both].astype(np.int64)
    order = np.argsort(pair_key, kind="stable")
    both = both[order]
    pair_key = pair_key[order]
    boundaries = np.flatnonzero(np.diff(pair_key)) + 1
    groups = np.split(both, boundaries)
    for cells in groups:
        fa = int(a[cells[0]])
        fb = int(b[cells[0]])
        if weight_mode == "density":
            va = density_t.values[cells]
            vb = density_t1.values[cells]
            weight = float(np.minimum(va, vb).sum())
        elif weight_mode == "count":
            weight = float(cells.size)
        else:
            raise ValueError(f"unknown weight_mode {weight_mode!r}")
        links.append(Link(t=t, a=fa, b=fb, weight=weight,
                          shared_cells=np.sort(cells)))
    links.sort(key=lambda l: (l.a, l.b))
    return links


def classify_links(links: list[Link], volumes_t: dict[int, int],
                   volumes_t1: dict[int, int],
                   overlap_fraction: float = 0.75) -> list[Link]:
    """Assign each link exactly one kind per the volume-fraction rules.

    Classification always uses shared-cell counts, regardless of the weight
    mode, because the rules are statements about preserved volume.
    """
    by_succ: dict[int, list[Link]] = {}
    by_pred: dict[int, list[Link]] = {}
    for l in links:
        by_succ.setdefault(l.b, []).append(l)
        by_pred.setdefault(l.a, []).append(l)

    def preserved(l: Link) -> bool:
        return l.shared_cells.size >= overlap_fraction * volumes_t[l.a]

    for l in links:
        va = volumes_t.get(l.a, 0)
        l.overlap_ratio = l.shared_cells.size / va if va else 0.0

    merged: set[tuple[int, int]] = set()
    for b, incoming in by_succ.items():
        if len(incoming) >= 2 and all(preserved(l) for l in incoming):
            for l in incoming:
                l.kind = KIND_MERGE
                merged.add((l.a, l.b))
    for l in links:
        if (l.a, l.b) in merged:
            continue
        if preserved(l):
            l.kind = KIND_GROW
        elif len(by_pred[l.a]) >= 2 and not any(preserved(x) for x in by_pred[l.a]):
            l.kind = KIND_SPLIT
        else:
            l.kind = KIND_GENERIC
    return links


def _point_polyline_dist(points: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Min Euclidean distance from each point to a polyline (vectorized)."""
    if len(poly) == 1:
        return np.linalg.norm(points - poly[0], axis=1)
    best = np.full(len(points), np.inf)
    for p0, p1 in zip(poly[:-1], poly[1:]):
        seg = p1 - p0
        denom = float(seg @ seg)
        if denom == 0.0:
            d = np.linalg.norm(points - p0, axis=1)
        else:
            tt = np.clip(((points - p0) @ seg) / denom, 0.0, 1.0)
            proj = p0 + tt[:, None] * seg
            d = np.linalg.norm(points - proj, axis=1)
        np.minimum(best, d, out=best)
    return best


def _nearest_branch(points: np.ndarray, bd: BranchDecomposition) -> np.ndarray:
    """Index of the nearest branch per point; distance ties -> smaller id."""
    n = len(points)
    best_d = np.full(n, np.inf)
    assign = np.zeros(n, dtype=np.int64)
    for b in bd.branches:  # ascending id; strict < keeps the smaller id on ties
        d = _point_polyline_dist(points, b.polyline)
        closer = d < best_d
        best_d[closer] = d[closer]
        assign[closer] = b.id
    return assign


def branch_correspondence(link: Link, bd_t: BranchDecomposition,
                          bd_t1: BranchDecomposition, spec: GridSpec) -> list:
    """Shared cells voted to nearest branches on both sides, then counted."""
    cells = link.shared_cells
    if cells.size == 0:
        link.branch_correspondences = []
        return link.branch_correspondences
    ijk = np.stack(spec.unravel(cells), axis=1)
    pts = spec.positions(ijk)
    aa = _nearest_branch(pts, bd_t)
    bb = _nearest_branch(pts, bd_t1)
    key = aa * (max(b.id for b in bd_t1.branches) + 1) + bb
    out = []
    for k in np.unique(key):
        sel = key == k
        out.append((int(aa[sel][0]), int(bb[sel][0]), int(sel.sum())))
    out.sort()
    link.branch_correspondences = out
    return out
