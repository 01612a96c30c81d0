"""Binary voxel grids: construction from triangle meshes, editing, and I/O."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels

__all__ = [
    "Frame",
    "VoxelGrid",
    "GridCoord",
    "normalize_to_unit_cube",
    "voxelize_mesh",
    "edit_region",
    "combine",
    "read_grid",
    "write_grid",
]


@dataclass(frozen=True)
class Frame:
    """World-frame mapping of a grid: voxel (x,y,z) center sits at
    origin + edge * (x + 0.5, y + 0.5, z + 0.5)."""

    origin: tuple[float, float, float] = (0.0, 0.0, 0.0)
    edge: float = 1.0

    def __post_init__(self):
        if not self.edge > 0:
            raise ValueError("voxel edge length must be > 0")

    @staticmethod
    def normalized(resolution: int) -> "Frame":
        return Frame((0.0, 0.0, 0.0), 1.0 / resolution)

    def to_world(self, pts: np.ndarray) -> np.ndarray:
        """Lattice/index coordinates -> world coordinates."""
        return np.asarray(pts, dtype=np.float64) * self.edge + np.asarray(self.origin)

    def to_index(self, pts: np.ndarray) -> np.ndarray:
        """World coordinates -> lattice/index coordinates."""
        return (np.asarray(pts, dtype=np.float64) - np.asarray(self.origin)) / self.edge


@dataclass(frozen=True)
class GridCoord:
    x: int
    y: int
    z: int

    def in_range(self, resolution: int) -> bool:
        return all(0 <= c < resolution for c in (self.x, self.y, self.z))


@dataclass
class VoxelGrid:
    """Dense binary occupancy on an r^3 lattice, x-fastest linearization."""

    occupancy: np.ndarray  # (r, r, r) bool, indexed [x, y, z]
    frame: Frame = field(default_factory=Frame)

    def __post_init__(self):
        occ = np.asarray(self.occupancy, dtype=bool)
        if occ.ndim != 3 or len(set(occ.shape)) != 1:
            raise ValueError("occupancy must be a cubic (r, r, r) array")
        self.occupancy = occ

    @property
    def resolution(self) -> int:
        return self.occupancy.shape[0]

    @property
    def count(self) -> int:
        return int(self.occupancy.sum())

    def linear(self) -> np.ndarray:
        """Occupancy flattened x-fastest (index = x + r*y + r^2*z)."""
        return self.occupancy.ravel(order="F")

    def centers(self) -> np.ndarray:
        """World coordinates of all r^3 voxel centers, x-fastest order."""
        r = self.resolution
        x, y, z = np.meshgrid(np.arange(r), np.arange(r), np.arange(r), indexing="ij")
        idx = np.stack([x.ravel(order="F"), y.ravel(order="F"), z.ravel(order="F")], axis=1)
        return self.frame.to_world(idx + 0.5)

    def occupied_coords(self) -> np.ndarray:
        """(n, 3) integer coordinates of occupied voxels, x-fastest order."""
        occ = self.linear()
        r = self.resolution
        lin = np.nonzero(occ)[0]
        x = lin % r
        y = (lin // r) % r
        z = lin // (r * r)
        return np.stack([x, y, z], axis=1)

    def copy(self) -> "VoxelGrid":
        return VoxelGrid(self.occupancy.copy(), self.frame)

    def __eq__(self, other):
        if not isinstance(other, VoxelGrid):
            return NotImplemented
        return (self.frame == other.frame
                and self.occupancy.shape == other.occupancy.shape
                and bool(np.array_equal(self.occupancy, other.occupancy)))


def normalize_to_unit_cube(vertices: np.ndarray) -> np.ndarray:
    """Uniformly scale/translate so the longest axis fills [0, 1] and the
    other axes are centered.  Deterministic companion of voxelize_mesh; apply
    it to any reference surface that must line up with a voxelized grid."""
    v = np.asarray(vertices, dtype=np.float64)
    if v.size == 0:
        raise ValueError("empty mesh")
    if not np.isfinite(v).all():
        raise ValueError("non-finite vertex coordinates")
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    extent = hi - lo
    longest = float(extent.max())
    if longest <= 0:
        raise ValueError("degenerate bounding box")
    scale = 1.0 / longest
    out = (v - lo) * scale
    # center the shorter axes
    out += 0.5 * (1.0 - extent * scale)
    return out


def _erode6(occ: np.ndarray) -> np.ndarray:
    """Occupied voxels whose 6-neighborhood is fully occupied (grid boundary
    counts as empty)."""
    core = np.zeros_like(occ)
    core[1:-1, 1:-1, 1:-1] = (
        occ[1:-1, 1:-1, 1:-1]
        & occ[:-2, 1:-1, 1:-1] & occ[2:, 1:-1, 1:-1]
        & occ[1:-1, :-2, 1:-1] & occ[1:-1, 2:, 1:-1]
        & occ[1:-1, 1:-1, :-2] & occ[1:-1, 1:-1, 2:]
    )
    return core


def voxelize_mesh(vertices: np.ndarray, faces: np.ndarray, resolution: int,
                  shell: bool = False) -> VoxelGrid:
    """Voxelize a closed triangle mesh onto an r^3 grid.

    The mesh is normalized into the unit cube; a voxel is occupied iff its
    center lies inside the surface (generalized winding number >= 0.5).
    With shell=True only the solid's one-voxel-thick outer layer is kept.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    faces = np.asarray(faces, dtype=np.int64)
    if faces.size == 0:
        raise ValueError("empty mesh")
    v = normalize_to_unit_cube(vertices)

    r = resolution
    frame = Frame.normalized(r)
    x, y, z = np.meshgrid(np.arange(r), np.arange(r), np.arange(r), indexing="ij")
    centers = (np.stack([x.ravel(), y.ravel(), z.ravel()], axis=1) + 0.5) / r

    tri_a = np.ascontiguousarray(v[faces[:, 0]])
    tri_b = np.ascontiguousarray(v[faces[:, 1]])
    tri_c = np.ascontiguousarray(v[faces[:, 2]])
    w = _kernels.winding_numbers(np.ascontiguousarray(centers), tri_a, tri_b, tri_c)
    occ = (w >= 0.5).reshape(r, r, r)
    if shell:
        occ = occ & ~_erode6(occ)
    return VoxelGrid(occ, frame)


def _check_coord(c: GridCoord, r: int):
    if not c.in_range(r):
        raise ValueError(f"grid coordinate {(c.x, c.y, c.z)} out of range for r={r}")


def edit_region(grid: VoxelGrid, lo: GridCoord, hi: GridCoord, value: bool) -> VoxelGrid:
    """Set every voxel in the inclusive box [lo, hi] to value."""
    r = grid.resolution
    _check_coord(lo, r)
    _check_coord(hi, r)
    if not (lo.x <= hi.x and lo.y <= hi.y and lo.z <= hi.z):
        raise ValueError("lo must be <= hi componentwise")
    occ = grid.occupancy.copy()
    occ[lo.x:hi.x + 1, lo.y:hi.y + 1, lo.z:hi.z + 1] = value
    return VoxelGrid(occ, grid.frame)


def combine(a: VoxelGrid, b: VoxelGrid, op: str) -> VoxelGrid:
    """Elementwise boolean combination of two same-frame grids."""
    if a.resolution != b.resolution:
        raise ValueError("mismatched resolution")
    if a.frame != b.frame:
        raise ValueError("mismatched frame")
    if op == "union":
        occ = a.occupancy | b.occupancy
    elif op == "intersection":
        occ = a.occupancy & b.occupancy
    elif op == "difference":
        occ = a.occupancy & ~b.occupancy
    else:
        raise ValueError(f"unknown combine op {op!r}")
    return VoxelGrid(occ, a.frame)


def write_grid(grid: VoxelGrid, path) -> None:
    """Text format: 'voxelgrid <r>' / 'frame ox oy oz edge' / r^3 0/1 tokens
    in x-fastest order."""
    r = grid.resolution
    ox, oy, oz = grid.frame.origin
    bits = grid.linear().astype(np.uint8)
    lines = [f"voxelgrid {r}", f"frame {ox:.17g} {oy:.17g} {oz:.17g} {grid.frame.edge:.17g}"]
    # wrap rows of r tokens to keep files diffable
    for i in range(0, bits.size, r):
        lines.append(" ".join(str(int(t)) for t in bits[i:i + r]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_grid(path) -> VoxelGrid:
    with open(path) as fh:
        text = fh.read()
    tokens = text.split()
    if len(tokens) < 2 or tokens[0] != "voxelgrid":
        raise ValueError("malformed header: expected 'voxelgrid <r>'")
    try:
        r = int(tokens[1])
    except ValueError:
        raise ValueError("malformed header: resolution is not an integer") from None
    if r < 1:
        raise ValueError("malformed header: resolution must be positive")
    if len(tokens) < 7 or tokens[2] != "frame":
        raise ValueError("malformed header: expected 'frame ox oy oz edge'")
    try:
        ox, oy, oz, edge = (float(t) for t in tokens[3:7])
    except ValueError:
        raise ValueError("malformed header: frame values are not numbers") from None
    payload = tokens[7:]
    if len(payload) != r ** 3:
        raise ValueError(f"payload length {len(payload)} != r^3 = {r ** 3}")
    bits = np.empty(r ** 3, dtype=bool)
    for i, t in enumerate(payload):
        if t == "0":
            bits[i] = False
        elif t == "1":
            bits[i] = True
        else:
            raise ValueError(f"occupancy token {t!r} is not 0 or 1")
    occ = bits.reshape((r, r, r), order="F")
    return VoxelGrid(occ, Frame((ox, oy, oz), edge))
