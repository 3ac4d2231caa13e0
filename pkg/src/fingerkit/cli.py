"""Command-line interface.

Stage commands persist their main artifact under --out and reload upstream
artifacts from the same directory (masks and labels are the expensive ones;
cheap derived structures are recomputed deterministically when needed):

    fingerkit synth --kind twin_blob_merge --out data/twin
    fingerkit run --input data/twin/manifest.json --out out/twin
    fingerkit serve --data out/twin --port 8000
"""

from __future__ import annotations

import json
import sys
from dataclasses import replace
from pathlib import Path

import click

from .grid import load_fields, save_fields
from .pipeline import (
    PipelineConfig,
    DatasetResult,
    canonical_json,
    export,
    run as run_pipeline,
    stage_detect,
    stage_fingers,
    stage_layout,
    stage_segment,
    stage_track,
    fingers_json,
    tracking_json,
)
from .ridge.detect import RidgeMask
from .ridge.params import DetectionParams
from .segment import FingerLabelField
from .synthetic import KINDS, generate_synthetic


def _parse_timesteps(expr, n):
    if not expr:
        return 0, n
    a, b = expr.split("..")
    return int(a or 0), int(b or n)


def _load_config(config_path, spec, r, h, top_layer, workers) -> PipelineConfig:
    if config_path:
        cfg = PipelineConfig.from_json(json.loads(Path(config_path).read_text()))
    else:
        cfg = PipelineConfig.default_for(spec)
    det = cfg.detection
    if r is not None:
        det = replace(det, r=r)
    if h is not None:
        det = replace(det, h=h)
    seg = cfg.segmentation
    if top_layer is not None:
        seg = replace(seg, top_layer_height=top_layer)
    if workers is not None:
        cfg = replace(cfg, workers=workers)
    return replace(cfg, detection=det, segmentation=seg)


common = [
    click.option("--config", "config_path", type=click.Path(exists=True), default=None,
                 help="pipeline config JSON; flags override it"),
    click.option("--input", "input_path", type=click.Path(exists=True), required=True,
                 help="dataset manifest.json"),
    click.option("--out", "out_dir", type=click.Path(), required=True),
    click.option("--timesteps", default=None, help="half-open range a..b"),
    click.option("--workers", type=int, default=None),
    click.option("--r", type=float, default=None, help="core cube factor")
    ,
    click.option("--h", type=float, default=None, help="stencil spacing"),
    click.option("--top-layer", "top_layer", type=float, default=None,
                 help="top layer separation height"),
]


def with_common(fn):
    for opt in reversed(common):
        fn = opt(fn)
    return fn


def _prepare(config_path, input_path, out_dir, timesteps, workers, r, h, top_layer):
    fields = load_fields(input_path)
    a, b = _parse_timesteps(timesteps, len(fields))
    fields = fields[a:b]
    if not fields:
        raise click.ClickException(f"timestep range {timesteps!r} selects nothing")
    cfg = _load_config(config_path, fields[0].spec, r, h, top_layer, workers)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return fields, cfg, out


@click.group()
def main():
    """Finger detection, skeletonization, tracking and exploration."""


@main.command()
@click.option("--kind", type=click.Choice(KINDS), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--seed", type=int, default=0)
@click.option("--params", default=None, help="generator params as JSON text or @file")
def synth(kind, out_dir, seed, params):
    """Write a synthetic dataset (manifest + bricks + ground truth)."""
    if params and params.startswith("@"):
        params = Path(params[1:]).read_text()
    p = json.loads(params) if params else None
    fields, truth = generate_synthetic(kind, p, seed=seed)
    out = Path(out_dir)
    save_fields(fields, out)
    (out / "ground_truth.json").write_text(canonical_json(truth))
    cfg = PipelineConfig.default_for(fields[0].spec)
    (out / "config.json").write_text(canonical_json(cfg.to_json()))
    click.echo(f"wrote {len(fields)} timestep(s) to {out}")


@main.command()
@with_common
def detect(**kw):
    """Detect ridge/core voxels; writes masks/ under --out."""
    fields, cfg, out = _prepare(**kw)
    masks = stage_detect(fields, cfg)
    (out / "masks").mkdir(exist_ok=True)
    for t, m in enumerate(masks):
        m.save(out / "masks" / f"t{t:03d}.u8")
    click.echo(f"detected {sum(m.counts()['ridge'] for m in masks)} ridge voxels "
               f"across {len(masks)} timestep(s)")


@main.command()
@with_common
def segment(**kw):
    """Split top layer, label cores, expand volumes; writes labels/."""
    fields, cfg, out = _prepare(**kw)
    masks = [RidgeMask.load(out / "masks" / f"t{t:03d}.u8") for t in range(len(fields))]
    labels = stage_segment(fields, masks, cfg)
    (out / "labels").mkdir(exist_ok=True)
    for t, lab in enumerate(labels):
        lab.save(out / "labels" / f"t{t:03d}.u32")
    click.echo(f"fingers per timestep: {[lab.finger_count for lab in labels]}")


def _labels_from(out, n):
    return [FingerLabelField.load(out / "labels" / f"t{t:03d}.u32") for t in range(n)]


@main.command()
@with_common
def skeleton(**kw):
    """Skeletonize and decompose each finger; writes fingers.json."""
    fields, cfg, out = _prepare(**kw)
    labels = _labels_from(out, len(fields))
    fingers = stage_fingers(fields, labels, cfg)
    result = DatasetResult(fields[0].spec, fields, [], labels, fingers, [], {}, cfg)
    (out / "fingers.json").write_text(canonical_json(fingers_json(result)))
    click.echo(f"skeletonized {sum(len(p) for p in fingers)} finger(s)")


@main.command()
@with_common
def track(**kw):
    """Relate fingers/branches across timesteps; writes tracking_graph.json."""
    fields, cfg, out = _prepare(**kw)
    labels = _labels_from(out, len(fields))
    fingers = stage_fingers(fields, labels, cfg)
    links = stage_track(fields, labels, fingers, cfg)
    result = DatasetResult(fields[0].spec, fields, [], labels, fingers, links, {}, cfg)
    (out / "tracking_graph.json").write_text(canonical_json(tracking_json(result)))
    click.echo(f"{len(links)} link(s): "
               f"{ {k: sum(1 for l in links if l.kind == k) for k in ('grow','merge','split','generic')} }")


@main.command()
@with_common
def layout(**kw):
    """Order rows and build glyph geometry; writes layout.json."""
    fields, cfg, out = _prepare(**kw)
    labels = _labels_from(out, len(fields))
    fingers = stage_fingers(fields, labels, cfg)
    links = stage_track(fields, labels, fingers, cfg)
    lay = stage_layout(fingers, links, cfg)
    (out / "layout.json").write_text(canonical_json(lay))
    click.echo(f"rows ordered; total weighted crossings {lay['totals'][-1]}")


@main.command(name="run")
@with_common
def run_cmd(**kw):
    """All stages plus export."""
    fields, cfg, out = _prepare(**kw)
    result = run_pipeline(fields, cfg)
    export(result, out)
    click.echo(
        f"{result.n_timesteps} timestep(s), "
        f"fingers {[len(p) for p in result.fingers]}, {len(result.links)} link(s); "
        f"exported to {out}"
    )


@main.command()
@click.option("--data", "data_dir", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.option("--cors", is_flag=True, default=False)
@click.option("--ui", "ui_dir", type=click.Path(exists=True), default=None,
              help="static UI build to mount at /")
def serve(data_dir, host, port, cors, ui_dir):
    """Serve a completed dataset over HTTP/JSON."""
    from .server import serve as _serve

    click.echo(f"serving {data_dir} on http://{host}:{port}")
    _serve(data_dir, host=host, port=port, cors=cors, ui_dir=ui_dir)


if __name__ == "__main__":
    main()
