"""Finger segmentation: top-layer split, core labeling, watershed expansion.

Cores are connected components of the detected core/ridge voxels after the
diffusive top layer is cleared.  Complete finger volumes grow from the cores
by descending-density ordered flooding over face-adjacent voxels: each pass
walks the remaining above-floor voxels from densest to lightest and attaches
any voxel that already touches a labeled one to its highest-density labeled
neighbor (density ties go to the smaller label).  Voxels no pass can reach
stay background.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .grid import FieldError, GridSpec, ScalarField
from .ridge.detect import NON_RIDGE, RidgeMask

_STRUCTS = {
    "face6": ndimage.generate_binary_structure(3, 1),
    "full26": np.ones((3, 3, 3), dtype=bool),
}


@dataclass(frozen=True)
class SegmentationParams:
    """``top_layer_height`` is a world height; everything strictly above it
    is the diffusive top layer and takes no part in finger separation.
    ``connectivity`` applies to core component labeling; flooding always
    uses face adjacency so fronts stay well defined."""

    top_layer_height: float | None = None
    density_floor: float = 0.0
    connectivity: str = "full26"

    def __post_init__(self):
        if self.density_floor < 0:
            raise ValueError("density_floor must be >= 0")
        if self.connectivity not in _STRUCTS:
            raise ValueError(f"connectivity must be one of {tuple(_STRUCTS)}")

    def to_json(self) -> dict:
        return {
            "top_layer_height": self.top_layer_height,
            "density_floor": self.density_floor,
            "connectivity": self.connectivity,
        }

    @classmethod
    def from_json(cls, d: dict) -> "SegmentationParams":
        return cls(**{k: d[k] for k in
                      ("top_layer_height", "density_floor", "connectivity") if k in d})


@dataclass(frozen=True)
class FingerLabelField:
    """Per-voxel finger ids (0 = background); cores and complete volumes."""

    spec: GridSpec
    labels: np.ndarray          # complete-volume labels, x-fastest uint32
    core_labels: np.ndarray     # core voxels only, same id space
    finger_count: int

    def __post_init__(self):
        for name in ("labels", "core_labels"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.uint32).ravel()
            if arr.size != self.spec.n_cells:
                raise FieldError(f"{name} size does not match grid")
            object.__setattr__(self, name, arr)

    @property
    def grid(self) -> np.ndarray:
        nx, ny, nz = self.spec.dims
        return self.labels.reshape(nz, ny, nx).T

    @property
    def core_grid(self) -> np.ndarray:
        nx, ny, nz = self.spec.dims
        return self.core_labels.reshape(nz, ny, nx).T

    def finger_ids(self) -> list[int]:
        return list(range(1, self.finger_count + 1))

    def core_voxels(self, finger_id: int) -> np.ndarray:
        """(n, 3) ijk array of the finger's core voxels."""
        lin = np.flatnonzero(self.core_labels == finger_id)
        return np.stack(self.spec.unravel(lin), axis=1)

    def volume_voxels(self, finger_id: int) -> np.ndarray:
        lin = np.flatnonzero(self.labels == finger_id)
        return np.stack(self.spec.unravel(lin), axis=1)

    def volume_counts(self) -> dict[int, int]:
        counts = np.bincount(self.labels, minlength=self.finger_count + 1)
        return {fid: int(counts[fid]) for fid in self.finger_ids()}

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.write_bytes(self.labels.astype("<u4").tobytes())
        core_path = path.with_name(path.stem + "_core" + path.suffix)
        core_path.write_bytes(self.core_labels.astype("<u4").tobytes())
        bboxes = {}
        g = self.grid
        for fid in self.finger_ids():
            idx = np.nonzero(g == fid)
            if idx[0].size:
                bboxes[str(fid)] = [
                    [int(idx[a].min()), int(idx[a].max())] for a in range(3)
                ]
        header = {
            "spec": self.spec.to_json(),
            "finger_count": self.finger_count,
            "voxel_counts": {str(k): v for k, v in self.volume_counts().items()},
            "bboxes": bboxes,
            "core_file": core_path.name,
        }
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(header, sort_keys=True, indent=2) + "\n"
        )

    @classmethod
    def load(cls, path: str | Path) -> "FingerLabelField":
        path = Path(path)
        header = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        spec = GridSpec.from_json(header["spec"])
        labels = np.frombuffer(path.read_bytes(), dtype="<u4").copy()
        core = np.frombuffer(
            (path.parent / header["core_file"]).read_bytes(), dtype="<u4"
        ).copy()
        return cls(spec, labels, core, header["finger_count"])


def _layer_heights(spec: GridSpec) -> np.ndarray:
    ha = spec.height_axis
    n = spec.dims[ha]
    return spec.origin[ha] + spec.axis_sign(ha) * spec.spacing * np.arange(n)


def _top_layer_mask(spec: GridSpec, top_layer_height: float | None) -> np.ndarray:
    """Boolean (nx, ny, nz) grid, True inside the top layer."""
    mask = np.zeros(spec.dims, dtype=bool)
    if top_layer_height is None:
        return mask
    heights = _layer_heights(spec)
    if not (heights.min() <= top_layer_height <= heights.max()):
        raise FieldError(
            f"top layer height {top_layer_height} outside domain range "
            f"[{heights.min()}, {heights.max()}]"
        )
    sel = heights > top_layer_height
    mask = np.moveaxis(mask, spec.height_axis, 2)
    mask[:, :, sel] = True
    return np.moveaxis(mask, 2, spec.height_axis)


def split_top_layer(mask: RidgeMask, params: SegmentationParams) -> RidgeMask:
    """Clear core/ridge labels strictly above the separation height."""
    top = _top_layer_mask(mask.spec, params.top_layer_height)
    flags = mask.grid.copy()
    flags[top] = NON_RIDGE
    nx, ny, nz = mask.spec.dims
    return RidgeMask(mask.spec, flags.T.reshape(-1), mask.params)


def connected_components(mask: RidgeMask, params: SegmentationParams) -> FingerLabelField:
    """Label each connected core component, largest first.

    Component ids are assigned in decreasing voxel-count order; equal-sized
    components order by their smallest linear index.
    """
    binary = mask.grid != NON_RIDGE
    raw, n = ndimage.label(binary, structure=_STRUCTS[params.connectivity])
    if n == 0:
        zeros = np.zeros(mask.spec.n_cells, dtype=np.uint32)
        return FingerLabelField(mask.spec, zeros, zeros.copy(), 0)
    flat = raw.T.reshape(-1)  # x-fastest
    sizes = np.bincount(flat)[1:]
    first = np.full(n + 1, flat.size, dtype=np.int64)
    np.minimum.at(first, flat, np.arange(flat.size))
    order = sorted(range(1, n + 1), key=lambda lab: (-int(sizes[lab - 1]), int(first[lab])))
    remap = np.zeros(n + 1, dtype=np.uint32)
    for new_id, lab in enumerate(order, start=1):
        remap[lab] = new_id
    labels = remap[flat]
    return FingerLabelField(mask.spec, labels, labels.copy(), n)


def watershed_expand(field: ScalarField, cores: FingerLabelField,
                     params: SegmentationParams) -> FingerLabelField:
    """Grow complete finger volumes from the cores by ordered flooding."""
    spec = field.spec
    if spec != cores.spec:
        raise FieldError("field and cores disagree on the grid")
    nx, ny, nz = spec.dims
    values = field.values
    labels = cores.core_labels.astype(np.uint32).copy()
    top = _top_layer_mask(spec, params.top_layer_height).T.reshape(-1)
    candidates = np.flatnonzero((values > params.density_floor) & (labels == 0) & (~top))
    # densest first; linear index breaks density ties
    order = candidates[np.lexsort((candidates, -values[candidates]))]
    offsets = []
    for axis, step in ((0, 1), (1, nx), (2, nx * ny)):
        offsets.append((axis, -1, -step))
        offsets.append((axis, +1, +step))
    pending = list(order)
    while pending:
        deferred = []
        assigned_any = False
        for lin in pending:
            i = lin % nx
            j = (lin // nx) % ny
            k = lin // (nx * ny)
            best_label = 0
            best_density = -1.0
            for axis, d, step in offsets:
                if axis == 0:
                    if (i == 0 and d < 0) or (i == nx - 1 and d > 0):
                        continue
                elif axis == 1:
                    if (j == 0 and d < 0) or (j == ny - 1 and d > 0):
                        continue
                else:
                    if (k == 0 and d < 0) or (k == nz - 1 and d > 0):
                        continue
                nb = lin + step
                lab = labels[nb]
                if lab == 0:
                    continue
                dens = values[nb]
                if dens > best_density or (dens == best_density and lab < best_label):
                    best_density = dens
                    best_label = int(lab)
            if best_label:
                labels[lin] = best_label
                assigned_any = True
            else:
                deferred.append(lin)
        if not assigned_any:
            break
        pending = deferred
    return FingerLabelField(spec, labels, cores.core_labels.copy(), cores.finger_count)
