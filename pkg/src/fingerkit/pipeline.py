"""End-to-end orchestration: detect -> segment -> skeletonize -> branch ->
track -> layout, with JSON config, per-stage entry points, and deterministic
exports (stable key order, so identical inputs re-export byte-identically).
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .branch import BranchDecomposition, extract_branches
from .grid import FieldError, GridSpec, ScalarField, load_fields, save_fields
from .layout import (
    hull_projection,
    iterative_minimize,
    linear_glyph,
    link_hints,
    rect_glyph,
    row_positions,
)
from .ridge.detect import RidgeMask, detect_ridge_voxels
from .ridge.params import DetectionParams
from .segment import (
    FingerLabelField,
    SegmentationParams,
    connected_components,
    split_top_layer,
    watershed_expand,
)
from .topo import (
    SkeletonGraph,
    TrimParams,
    build_reeb_skeleton,
    finger_height,
    topological_complexity,
    trim_skeleton,
)
from .track import Link, branch_correspondence, classify_links, overlap_links


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class TrackingParams:
    overlap_fraction: float = 0.75
    weight_mode: str = "count"

    def __post_init__(self):
        if not (0 < self.overlap_fraction <= 1):
            raise ValueError("overlap_fraction must be in (0, 1]")
        if self.weight_mode not in ("count", "density"):
            raise ValueError("weight_mode must be 'count' or 'density'")

    def to_json(self):
        return {"overlap_fraction": self.overlap_fraction, "weight_mode": self.weight_mode}

    @classmethod
    def from_json(cls, d):
        return cls(**{k: d[k] for k in ("overlap_fraction", "weight_mode") if k in d})


@dataclass(frozen=True)
class LayoutParams:
    max_rounds: int = 2

    def to_json(self):
        return {"max_rounds": self.max_rounds}

    @classmethod
    def from_json(cls, d):
        return cls(**{k: d[k] for k in ("max_rounds",) if k in d})


@dataclass(frozen=True)
class PipelineConfig:
    detection: DetectionParams = field(default_factory=DetectionParams)
    segmentation: SegmentationParams = field(default_factory=SegmentationParams)
    trim: TrimParams = field(default_factory=TrimParams)
    tracking: TrackingParams = field(default_factory=TrackingParams)
    layout: LayoutParams = field(default_factory=LayoutParams)
    workers: int = 1

    def to_json(self) -> dict:
        return {
            "detection": self.detection.to_json(),
            "segmentation": self.segmentation.to_json(),
            "trim": self.trim.to_json(),
            "tracking": self.tracking.to_json(),
            "layout": self.layout.to_json(),
            "workers": self.workers,
        }

    @classmethod
    def from_json(cls, d: dict) -> "PipelineConfig":
        return cls(
            detection=DetectionParams.from_json(d.get("detection", {})),
            segmentation=SegmentationParams.from_json(d.get("segmentation", {})),
            trim=TrimParams.from_json(d.get("trim", {})),
            tracking=TrackingParams.from_json(d.get("tracking", {})),
            layout=LayoutParams.from_json(d.get("layout", {})),
            workers=d.get("workers", 1),
        )

    def content_hash(self) -> str:
        return hashlib.sha256(canonical_json(self.to_json()).encode()).hexdigest()[:16]

    @classmethod
    def default_for(cls, spec: GridSpec, r: float = 4.0) -> "PipelineConfig":
        """Reasonable defaults for a dataset: r-expanded cores, the top two
        height units split off, a small density floor, 2s trims."""
        s = spec.spacing
        top = spec.height_of_layer(0) - 2.0 * s
        return cls(
            detection=DetectionParams(r=r),
            segmentation=SegmentationParams(top_layer_height=top, density_floor=1e-3),
            trim=TrimParams(min_branch_persistence=2.0 * s, min_cycle_persistence=2.0 * s),
        )


@dataclass
class FingerRecord:
    finger_id: int
    skeleton: SkeletonGraph          # trimmed
    branches: BranchDecomposition
    hull: dict
    height: float
    complexity: int
    volume_count: int
    core_count: int

    def summary(self) -> dict:
        return {
            "id": self.finger_id,
            "complexity": self.complexity,
            "height": self.height,
            "centroid_xy": self.hull["centroid"],
            "hull": self.hull,
            "volume_voxels": self.volume_count,
            "core_voxels": self.core_count,
        }


@dataclass
class DatasetResult:
    spec: GridSpec
    fields: list
    masks: list
    labels: list
    fingers: list                    # per t: dict finger_id -> FingerRecord
    links: list
    layout: dict
    config: PipelineConfig

    @property
    def n_timesteps(self) -> int:
        return len(self.fields)


class StageError(RuntimeError):
    def __init__(self, stage: str, timestep, cause: Exception):
        super().__init__(f"stage {stage!r} failed at timestep {timestep}: {cause}")
        self.stage = stage
        self.timestep = timestep
        self.cause = cause


def _per_timestep(stage, fn, items, workers: int):
    def guarded(t, item):
        try:
            return fn(t, item)
        except Exception as e:  # surface stage/timestep context
            raise StageError(stage, t, e) from e

    if workers <= 1:
        return [guarded(t, item) for t, item in enumerate(items)]
    out = [None] * len(items)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = {pool.submit(guarded, t, item): t for t, item in enumerate(items)}
        for fut, t in futures.items():
            out[t] = fut.result()
    return out


def stage_detect(fields, config: PipelineConfig) -> list:
    return _per_timestep(
        "detect", lambda t, f: detect_ridge_voxels(f, config.detection), fields,
        config.workers,
    )


def stage_segment(fields, masks, config: PipelineConfig) -> list:
    def seg(t, pair):
        f, m = pair
        m2 = split_top_layer(m, config.segmentation)
        cores = connected_components(m2, config.segmentation)
        return watershed_expand(f, cores, config.segmentation)

    return _per_timestep("segment", seg, list(zip(fields, masks)), config.workers)


def stage_fingers(fields, labels, config: PipelineConfig) -> list:
    def build(t, pair):
        f, lab = pair
        records = {}
        for fid in lab.finger_ids():
            core = lab.core_voxels(fid)
            g = build_reeb_skeleton(core, f.spec, density=f, finger_id=fid)
            g = trim_skeleton(g, config.trim)
            bd = extract_branches(g)
            hull = hull_projection(g)
            counts = lab.volume_counts()
            records[fid] = FingerRecord(
                finger_id=fid,
                skeleton=g,
                branches=bd,
                hull=hull,
                height=finger_height(g),
                complexity=topological_complexity(g),
                volume_count=counts[fid],
                core_count=int(np.count_nonzero(lab.core_labels == fid)),
            )
        return records

    return _per_timestep("skeleton", build, list(zip(fields, labels)), config.workers)


def stage_track(fields, labels, fingers, config: PipelineConfig) -> list:
    links: list[Link] = []
    tp = config.tracking
    for t in range(len(labels) - 1):
        try:
            raw = overlap_links(
                labels[t], labels[t + 1], t=t, weight_mode=tp.weight_mode,
                density_t=fields[t], density_t1=fields[t + 1],
            )
            classify_links(
                raw, labels[t].volume_counts(), labels[t + 1].volume_counts(),
                overlap_fraction=tp.overlap_fraction,
            )
            for l in raw:
                branch_correspondence(
                    l, fingers[t][l.a].branches, fingers[t + 1][l.b].branches,
                    labels[t].spec,
                )
            links.extend(raw)
        except StageError:
            raise
        except Exception as e:
            raise StageError("track", t, e) from e
    return links


def stage_layout(fingers, links, config: PipelineConfig) -> dict:
    try:
        rows = [sorted(per_t.keys()) for per_t in fingers]
        pair_edges: dict[int, list] = {}
        for l in links:
            pair_edges.setdefault(l.t, []).append((l.a, l.b, l.weight))
        centroid_x = {
            (t, fid): rec.hull["centroid"][0]
            for t, per_t in enumerate(fingers)
            for fid, rec in per_t.items()
        }
        ordering = iterative_minimize(
            rows, pair_edges, centroid_x, max_rounds=config.layout.max_rounds
        )
        out_rows = []
        for t, order in enumerate(ordering.orders):
            complexities = {fid: fingers[t][fid].complexity for fid in order}
            spans = row_positions(order, complexities)
            glyphs = []
            for span in spans:
                fid = span["finger_id"]
                rec = fingers[t][fid]
                glyphs.append(
                    {
                        "finger_id": fid,
                        "x0": span["x0"],
                        "x1": span["x1"],
                        "linear": linear_glyph(rec.branches, mode="horizontal"),
                        "linear_arc": linear_glyph(rec.branches, mode="arc"),
                        "rect": rect_glyph(rec.branches),
                    }
                )
            out_rows.append({"t": t, "order": list(order), "glyphs": glyphs})
        return {
            "orders": [list(o) for o in ordering.orders],
            "totals": ordering.totals,
            "rounds": ordering.rounds,
            "converged": ordering.converged,
            "rows": out_rows,
            "links": link_hints(links),
        }
    except StageError:
        raise
    except Exception as e:
        raise StageError("layout", None, e) from e


def run(fields, config: PipelineConfig) -> DatasetResult:
    """All stages on an in-memory field sequence."""
    if not fields:
        raise FieldError("no timesteps to process")
    spec = fields[0].spec
    masks = stage_detect(fields, config)
    labels = stage_segment(fields, masks, config)
    fingers = stage_fingers(fields, labels, config)
    links = stage_track(fields, labels, fingers, config)
    layout = stage_layout(fingers, links, config)
    return DatasetResult(
        spec=spec, fields=fields, masks=masks, labels=labels,
        fingers=fingers, links=links, layout=layout, config=config,
    )


def run_manifest(manifest_path, config: PipelineConfig) -> DatasetResult:
    return run(load_fields(manifest_path), config)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def fingers_json(result: DatasetResult) -> dict:
    return {
        "timesteps": [
            {
                "t": t,
                "fingers": [
                    {
                        **rec.summary(),
                        "skeleton": rec.skeleton.to_json(),
                        "branches": rec.branches.to_json(),
                    }
                    for fid, rec in sorted(per_t.items())
                ],
            }
            for t, per_t in enumerate(result.fingers)
        ]
    }


def tracking_json(result: DatasetResult) -> dict:
    return {
        "schema_version": 1,
        "n_timesteps": result.n_timesteps,
        "columns": [
            {
                "t": t,
                "fingers": [rec.summary() for fid, rec in sorted(per_t.items())],
            }
            for t, per_t in enumerate(result.fingers)
        ],
        "links": [l.to_json() for l in result.links],
    }


def export(result: DatasetResult, out_dir) -> list[Path]:
    """Write the full artifact set; idempotent re-export, stable ordering."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    save_fields(result.fields, out / "fields")
    written.append(out / "fields" / "manifest.json")

    (out / "masks").mkdir(exist_ok=True)
    for t, m in enumerate(result.masks):
        p = out / "masks" / f"t{t:03d}.u8"
        m.save(p)
        written.append(p)
    (out / "labels").mkdir(exist_ok=True)
    for t, lab in enumerate(result.labels):
        p = out / "labels" / f"t{t:03d}.u32"
        lab.save(p)
        written.append(p)

    for name, payload in (
        ("fingers.json", fingers_json(result)),
        ("tracking_graph.json", tracking_json(result)),
        ("layout.json", result.layout),
    ):
        p = out / name
        p.write_text(canonical_json(payload))
        written.append(p)

    manifest = {
        "dataset": {
            "spec": result.spec.to_json(),
            "n_timesteps": result.n_timesteps,
        },
        "provenance": {
            "config": result.config.to_json(),
            "config_hash": result.config.content_hash(),
            "version": __version__,
        },
        "files": {
            "fields": "fields/manifest.json",
            "fingers": "fingers.json",
            "tracking": "tracking_graph.json",
            "layout": "layout.json",
        },
    }
    p = out / "manifest.json"
    p.write_text(canonical_json(manifest))
    written.append(p)
    return written
