"""Volume data model and file I/O.

A dataset is a sequence of cell-centered density volumes on a uniform
rectilinear grid.  Values are stored x-fastest (linear index
``i + nx*(j + ny*k)``), matching the on-disk brick layout, and exposed as an
``(nx, ny, nz)`` array view for vectorized work.  One axis is designated the
height axis; by convention the world height *decreases* as that index grows,
so layer ``k = 0`` is the injection face at the top of the domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np


class FieldError(ValueError):
    """Raised for malformed manifests, payloads, or out-of-range access."""


@dataclass(frozen=True)
class GridSpec:
    """Geometry of one rectilinear volume.

    ``origin`` is the world position of the center of cell (0, 0, 0).
    ``height_down`` means the world coordinate along ``height_axis`` decreases
    as the index increases (the default; injection face at index 0).
    """

    dims: tuple[int, int, int]
    spacing: float = 1.0
    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    height_axis: int = 2
    height_down: bool = True

    def __post_init__(self):
        if len(self.dims) != 3 or any(int(d) < 3 for d in self.dims):
            raise FieldError(f"dims must be 3 components each >= 3, got {self.dims}")
        if not (self.spacing > 0):
            raise FieldError(f"spacing must be > 0, got {self.spacing}")
        if self.height_axis not in (0, 1, 2):
            raise FieldError(f"height_axis must be 0, 1 or 2, got {self.height_axis}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        object.__setattr__(self, "spacing", float(self.spacing))

    @property
    def n_cells(self) -> int:
        nx, ny, nz = self.dims
        return nx * ny * nz

    def axis_sign(self, axis: int) -> float:
        """World-coordinate step direction along ``axis`` per unit index."""
        if axis == self.height_axis and self.height_down:
            return -1.0
        return 1.0

    def position(self, v: Sequence[int]) -> np.ndarray:
        """World position of the center of cell ``v = (i, j, k)``."""
        return np.array(
            [
                self.origin[a] + self.axis_sign(a) * v[a] * self.spacing
                for a in range(3)
            ]
        )

    def positions(self, ijk: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`position` for an (n, 3) index array."""
        ijk = np.asarray(ijk, dtype=np.float64)
        signs = np.array([self.axis_sign(a) for a in range(3)])
        return np.asarray(self.origin) + signs * ijk * self.spacing

    def height_of_layer(self, k: int) -> float:
        """World height of layer ``k`` along the height axis."""
        ha = self.height_axis
        return self.origin[ha] + self.axis_sign(ha) * k * self.spacing

    def in_bounds(self, v: Sequence[int]) -> bool:
        return all(0 <= v[a] < self.dims[a] for a in range(3))

    def linear_index(self, i: int, j: int, k: int) -> int:
        nx, ny, _ = self.dims
        return i + nx * (j + ny * k)

    def unravel(self, lin: np.ndarray | int):
        """Inverse of :meth:`linear_index` (vectorized)."""
        nx, ny, _ = self.dims
        lin = np.asarray(lin)
        i = lin % nx
        j = (lin // nx) % ny
        k = lin // (nx * ny)
        return i, j, k

    def to_json(self) -> dict:
        return {
            "dims": list(self.dims),
            "spacing": self.spacing,
            "origin": list(self.origin),
            "height_axis": self.height_axis,
            "height_down": self.height_down,
        }

    @classmethod
    def from_json(cls, d: dict) -> "GridSpec":
        return cls(
            dims=tuple(d["dims"]),
            spacing=d["spacing"],
            origin=tuple(d.get("origin", (0.0, 0.0, 0.0))),
            height_axis=d.get("height_axis", 2),
            height_down=d.get("height_down", True),
        )


@dataclass(frozen=True)
class ScalarField:
    """One timestep's cell-centered density volume.

    ``values`` is a read-only float64 vector in x-fastest order.  Instances
    are immutable and safe to share across threads.
    """

    spec: GridSpec
    values: np.ndarray
    timestep: int = 0

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.float64).ravel()
        if vals.size != self.spec.n_cells:
            raise FieldError(
                f"payload size mismatch: expected {self.spec.n_cells} values, got {vals.size}"
            )
        bad = np.flatnonzero(~np.isfinite(vals))
        if bad.size:
            raise FieldError(f"non-finite value at linear index {int(bad[0])}")
        neg = np.flatnonzero(vals < 0)
        if neg.size:
            raise FieldError(f"negative density at linear index {int(neg[0])}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def grid(self) -> np.ndarray:
        """Zero-copy ``(nx, ny, nz)`` view indexed as ``grid[i, j, k]``."""
        nx, ny, nz = self.spec.dims
        return self.values.reshape(nz, ny, nx).T

    def value_at(self, v: Sequence[int]) -> float:
        if not self.spec.in_bounds(v):
            raise FieldError(f"voxel {tuple(v)} out of bounds for dims {self.spec.dims}")
        return float(self.values[self.spec.linear_index(*v)])

    def fractional_index(self, p: Sequence[float]) -> np.ndarray:
        """World position -> continuous cell index per axis."""
        u = np.empty(3)
        for a in range(3):
            u[a] = (p[a] - self.spec.origin[a]) / (
                self.spec.axis_sign(a) * self.spec.spacing
            )
        return u

    def trilinear_sample(self, p: Sequence[float]) -> float:
        """Trilinear interpolation among the 8 nearest cell centers.

        Exact at cell centers and exact for affine fields; ``p`` must lie
        within the convex hull of cell centers.
        """
        u = self.fractional_index(p)
        nx, ny, nz = self.spec.dims
        dims = (nx, ny, nz)
        i0 = np.empty(3, dtype=np.int64)
        t = np.empty(3)
        for a in range(3):
            if u[a] < 0.0 or u[a] > dims[a] - 1:
                raise FieldError(f"sample position {tuple(p)} outside cell-center hull")
            ia = int(np.floor(u[a]))
            if ia > dims[a] - 2:
                ia = dims[a] - 2
            i0[a] = ia
            t[a] = u[a] - ia
        g = self.grid
        c = g[i0[0] : i0[0] + 2, i0[1] : i0[1] + 2, i0[2] : i0[2] + 2]
        wx = np.array([1.0 - t[0], t[0]])
        wy = np.array([1.0 - t[1], t[1]])
        wz = np.array([1.0 - t[2], t[2]])
        return float(np.einsum("ijk,i,j,k->", c, wx, wy, wz))


def save_fields(fields: Sequence[ScalarField], out_dir: str | Path,
                manifest_name: str = "manifest.json") -> Path:
    """Write a manifest + one little-endian float32 brick per timestep."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = fields[0].spec
    names = []
    for n, f in enumerate(fields):
        if f.spec != spec:
            raise FieldError("all timesteps must share one GridSpec")
        name = f"t{n:03d}.f32"
        (out / name).write_bytes(f.values.astype("<f4").tobytes())
        names.append(name)
    manifest = dict(spec.to_json())
    manifest.update(
        {
            "n_timesteps": len(fields),
            "dtype": "f32",
            "endianness": "little",
            "files": names,
        }
    )
    path = out / manifest_name
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
    return path


def load_fields(manifest_path: str | Path) -> list[ScalarField]:
    """Load every timestep declared by a manifest, validating sizes."""
    path = Path(manifest_path)
    if not path.exists():
        raise FieldError(f"manifest not found: {path}")
    manifest = json.loads(path.read_text())
    spec = GridSpec.from_json(manifest)
    if manifest.get("dtype", "f32") != "f32":
        raise FieldError(f"unsupported dtype {manifest.get('dtype')!r}")
    if manifest.get("endianness", "little") != "little":
        raise FieldError("only little-endian payloads are supported")
    files = manifest["files"]
    if len(files) != manifest.get("n_timesteps", len(files)):
        raise FieldError("n_timesteps does not match the number of files")
    fields = []
    for n, name in enumerate(files):
        brick = path.parent / name
        if not brick.exists():
            raise FieldError(f"payload file missing: {brick}")
        raw = np.frombuffer(brick.read_bytes(), dtype="<f4")
        if raw.size != spec.n_cells:
            raise FieldError(
                f"payload size mismatch in {name}: expected {spec.n_cells} values, got {raw.size}"
            )
        fields.append(ScalarField(spec, raw.astype(np.float64), timestep=n))
    return fields


def field_from_function(spec: GridSpec, fn, timestep: int = 0,
                        quantize: bool = True) -> ScalarField:
    """Evaluate ``fn(x, y, z)`` (vectorized over arrays) at all cell centers.

    ``quantize`` rounds through float32 so that in-memory fields match a
    save/load round trip bit for bit.
    """
    nx, ny, nz = spec.dims
    idx = [np.arange(n) for n in (nx, ny, nz)]
    coords = [
        spec.origin[a] + spec.axis_sign(a) * idx[a] * spec.spacing for a in range(3)
    ]
    X, Y, Z = np.meshgrid(*coords, indexing="ij")
    vals = np.asarray(fn(X, Y, Z), dtype=np.float64)
    flat = vals.T.ravel()  # (nx,ny,nz) -> x-fastest
    if quantize:
        flat = flat.astype(np.float32).astype(np.float64)
    return ScalarField(spec, flat, timestep=timestep)
