"""Read-only JSON API over a completed dataset export.

The service owns one frozen dataset directory (the output of ``run``) and
answers pure lookups; repeated requests return byte-identical bodies.
Endpoints:

    GET /api/meta                            grid + config echo
    GET /api/slice/{t}/{z}                   density slice + clipped hulls
    GET /api/fingers/{t}                     finger summaries
    GET /api/finger/{t}/{id}/skeleton        skeleton JSON
    GET /api/finger/{t}/{id}/branches        branch decomposition JSON
    GET /api/finger/{t}/{id}/volume          complete-volume voxels
    GET /api/tracking                        tracking graph + layout
    GET /api/link/{t}/{a}/{b}                shared cells + correspondences
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .grid import GridSpec, load_fields
from .layout import convex_hull_2d
from .segment import FingerLabelField


class ApiSession:
    """Immutable view over an exported dataset directory."""

    def __init__(self, data_dir):
        root = Path(data_dir)
        if not (root / "manifest.json").exists():
            raise FileNotFoundError(f"no dataset manifest under {root}")
        self.root = root
        self.manifest = json.loads((root / "manifest.json").read_text())
        self.spec = GridSpec.from_json(self.manifest["dataset"]["spec"])
        self.fields = load_fields(root / "fields" / "manifest.json")
        self.fingers = json.loads((root / "fingers.json").read_text())
        self.tracking = json.loads((root / "tracking_graph.json").read_text())
        self.layout = json.loads((root / "layout.json").read_text())
        self.labels = [
            FingerLabelField.load(root / "labels" / f"t{t:03d}.u32")
            for t in range(self.manifest["dataset"]["n_timesteps"])
        ]
        self._links = {
            (l["t"], l["a"], l["b"]): l for l in self.tracking["links"]
        }

    @property
    def n_timesteps(self) -> int:
        return self.manifest["dataset"]["n_timesteps"]

    def fingers_at(self, t: int) -> list[dict]:
        return self.fingers["timesteps"][t]["fingers"]

    def finger(self, t: int, fid: int) -> dict | None:
        for f in self.fingers_at(t):
            if f["id"] == fid:
                return f
        return None

    def link(self, t: int, a: int, b: int) -> dict | None:
        return self._links.get((t, a, b))


def _error(status: int, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status,
                        content={"error": status, "detail": detail})


def create_app(session: ApiSession, cors: bool = False) -> FastAPI:
    app = FastAPI(title="fingerkit", docs_url=None, redoc_url=None)
    if cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["GET"],
            allow_headers=["*"],
        )

    spec = session.spec
    ha = spec.height_axis
    axes = [a for a in range(3) if a != ha]

    def check_t(t: int):
        return 0 <= t < session.n_timesteps

    @app.get("/api/meta")
    def meta():
        return {
            "dims": list(spec.dims),
            "spacing": spec.spacing,
            "origin": list(spec.origin),
            "height_axis": spec.height_axis,
            "height_down": spec.height_down,
            "timesteps": session.n_timesteps,
            "config": session.manifest["provenance"]["config"],
            "version": session.manifest["provenance"]["version"],
        }

    @app.get("/api/slice/{t}/{z}")
    def slice_at(t: int, z: int):
        if not check_t(t):
            return _error(404, f"timestep {t} out of range")
        if not (0 <= z < spec.dims[ha]):
            return _error(404, f"layer {z} out of range")
        height = spec.height_of_layer(z)
        grid = session.fields[t].grid
        plane = np.moveaxis(grid, ha, 2)[:, :, z]  # (n_a1, n_a2)
        fingers = []
        for f in session.fingers_at(t):
            rec = session.finger(t, f["id"])
            nodes = [n for n in rec["skeleton"]["nodes"] if n["depth"] <= height]
            if not nodes:
                continue
            pts = np.array([[n["pos"][axes[0]], n["pos"][axes[1]]] for n in nodes])
            hull = convex_hull_2d(pts)
            fingers.append(
                {
                    "id": f["id"],
                    "centroid": [float(pts[:, 0].mean()), float(pts[:, 1].mean())],
                    "hull": [[float(a), float(b)] for a, b in hull],
                }
            )
        return {
            "t": t,
            "z": z,
            "height": height,
            "shape": [int(plane.shape[1]), int(plane.shape[0])],  # rows, cols
            "values": [float(v) for v in plane.T.ravel()],        # row-major
            "fingers": fingers,
        }

    @app.get("/api/fingers/{t}")
    def fingers_at(t: int):
        if not check_t(t):
            return _error(404, f"timestep {t} out of range")
        return [
            {k: f[k] for k in
             ("id", "complexity", "height", "centroid_xy", "hull",
              "volume_voxels", "core_voxels")}
            for f in session.fingers_at(t)
        ]

    @app.get("/api/finger/{t}/{fid}/skeleton")
    def skeleton(t: int, fid: int):
        if not check_t(t):
            return _error(404, f"timestep {t} out of range")
        f = session.finger(t, fid)
        if f is None:
            return _error(404, f"no finger {fid} at timestep {t}")
        return f["skeleton"]

    @app.get("/api/finger/{t}/{fid}/branches")
    def branches(t: int, fid: int):
        if not check_t(t):
            return _error(404, f"timestep {t} out of range")
        f = session.finger(t, fid)
        if f is None:
            return _error(404, f"no finger {fid} at timestep {t}")
        return f["branches"]

    @app.get("/api/finger/{t}/{fid}/volume")
    def volume(t: int, fid: int):
        if not check_t(t):
            return _error(404, f"timestep {t} out of range")
        f = session.finger(t, fid)
        if f is None:
            return _error(404, f"no finger {fid} at timestep {t}")
        vox = session.labels[t].volume_voxels(fid)
        lin = session.labels[t].labels
        sel = np.flatnonzero(lin == fid)
        vals = session.fields[t].values[sel]
        return {
            "t": t,
            "id": fid,
            "count": int(len(vox)),
            "voxels": [[int(a), int(b), int(c)] for a, b, c in vox],
            "values": [float(v) for v in vals],
        }

    @app.get("/api/tracking")
    def tracking():
        return {"tracking": session.tracking, "layout": session.layout}

    @app.get("/api/link/{t}/{a}/{b}")
    def link(t: int, a: int, b: int):
        l = session.link(t, a, b)
        if l is None:
            return _error(404, f"no link {a}->{b} at timestep {t}")
        cells = np.asarray(l["shared_cells"], dtype=np.int64)
        ijk = np.stack(spec.unravel(cells), axis=1) if cells.size else np.zeros((0, 3), int)
        return {
            "t": t,
            "a": a,
            "b": b,
            "weight": l["weight"],
            "kind": l["kind"],
            "shared_voxels": [[int(x), int(y), int(z)] for x, y, z in ijk],
            "branch_correspondences": l["branch_correspondences"],
        }

    return app


def serve(data_dir, host: str = "127.0.0.1", port: int = 8000,
          cors: bool = False, ui_dir=None):
    """Run the API with uvicorn; optionally mount a static UI at /."""
    import uvicorn

    app = create_app(ApiSession(data_dir), cors=cors)
    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    uvicorn.run(app, host=host, port=port, log_level="warning")
