"""Face-consistent tetrahedral meshes built from occupied voxels.

Every occupied cube is split into 6 positively oriented tetrahedra around the
cube's main diagonal (local (0,0,0) -> (1,1,1)).  The split is translation
invariant, so the diagonals of shared faces coincide between neighboring
cubes and the union is face-to-face consistent.  Vertex coordinates are kept
in voxel-index units (cube edge = 1); the grid frame is stored for export.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .voxel import Frame, VoxelGrid

__all__ = ["TetMesh", "build_tet_mesh", "extract_surface", "tet_det", "tet_dets"]

# cube corner slots: 000 100 010 001 110 011 101 111
_CORNERS = np.array([
    (0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1),
    (1, 1, 0), (0, 1, 1), (1, 0, 1), (1, 1, 1),
], dtype=np.int64)

# six tets around the main diagonal, each ordered for det > 0
_TET_PATTERN = np.array([
    (0, 1, 4, 7),   # 000 100 110 111
    (0, 4, 2, 7),   # 000 110 010 111
    (0, 2, 5, 7),   # 000 010 011 111
    (0, 5, 3, 7),   # 000 011 001 111
    (0, 3, 6, 7),   # 000 001 101 111
    (0, 6, 1, 7),   # 000 101 100 111
], dtype=np.int64)

# face k is opposite local vertex k and wound outward for det > 0 tets
_TET_FACES = np.array([(1, 2, 3), (0, 3, 2), (0, 1, 3), (0, 2, 1)], dtype=np.int64)

_TET_EDGES = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], dtype=np.int64)


def _csr_from_pairs(pairs: np.ndarray, n: int):
    """Undirected pairs -> (neighbor array, offsets) adjacency over n vertices."""
    src = np.concatenate([pairs[:, 0], pairs[:, 1]])
    dst = np.concatenate([pairs[:, 1], pairs[:, 0]])
    order = np.argsort(src, kind="stable")
    src = src[order]
    dst = dst[order]
    deg = np.bincount(src, minlength=n)
    offsets = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(deg, out=offsets[1:])
    return dst, offsets


@dataclass
class TetMesh:
    """Shared-vertex tetrahedral mesh with a tracked watertight boundary."""

    vertices: np.ndarray            # (n, 3) float64, voxel-index units
    tets: np.ndarray                # (m, 4) int64, det(M) > 0 order at build
    surface_tris: np.ndarray        # (k, 3) int64, outward winding
    surface_vertex_flags: np.ndarray  # (n,) bool
    edges: np.ndarray               # (e, 2) int64, unique, lexicographic
    cube_of_tet: np.ndarray         # (m,) int64
    frame: Frame = field(default_factory=Frame)
    tri_tet: np.ndarray = None      # (k,) owning tet of each surface triangle
    tri_opposite: np.ndarray = None  # (k,) 4th vertex of that tet
    surface_pairs: np.ndarray = None  # (p, 2) surface tri pairs sharing an edge
    vol_nbr: np.ndarray = None      # volume-graph adjacency (CSR)
    vol_off: np.ndarray = None
    surf_nbr: np.ndarray = None     # surface-graph adjacency (CSR)
    surf_off: np.ndarray = None
    n_nonmanifold_edges: int = 0    # surface edges with != 2 incident triangles

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_tets(self) -> int:
        return len(self.tets)

    @property
    def surface_vertex_ids(self) -> np.ndarray:
        return np.nonzero(self.surface_vertex_flags)[0]

    def tet_dets(self, positions: np.ndarray | None = None) -> np.ndarray:
        return tet_dets(self.vertices if positions is None else positions, self.tets)

    def with_vertices(self, positions: np.ndarray) -> "TetMesh":
        """Same topology, new vertex positions."""
        if positions.shape != self.vertices.shape:
            raise ValueError("position array shape mismatch")
        out = TetMesh.__new__(TetMesh)
        out.__dict__.update(self.__dict__)
        out.vertices = np.array(positions, dtype=np.float64)
        return out

    def world_vertices(self) -> np.ndarray:
        return self.frame.to_world(self.vertices)

    def surface_euler_characteristic(self) -> int:
        tris = self.surface_tris
        nv = len(np.unique(tris))
        edges = np.sort(np.concatenate([tris[:, (0, 1)], tris[:, (1, 2)],
                                        tris[:, (2, 0)]]), axis=1)
        ne = len(np.unique(edges, axis=0))
        return nv - ne + len(tris)


def tet_dets(positions: np.ndarray, tets: np.ndarray) -> np.ndarray:
    """Homogeneous 4x4 determinant of each tet; equals 6x signed volume."""
    a = positions[tets[:, 0]]
    b = positions[tets[:, 1]] - a
    c = positions[tets[:, 2]] - a
    d = positions[tets[:, 3]] - a
    return np.einsum("ij,ij->i", b, np.cross(c, d))


def tet_det(mesh: TetMesh, index: int) -> float:
    if not 0 <= index < mesh.n_tets:
        raise IndexError(f"tet index {index} out of range")
    return float(tet_dets(mesh.vertices, mesh.tets[index:index + 1])[0])


def _derive_topology(vertices, tets, cube_of_tet, frame) -> TetMesh:
    """Boundary faces, edge set and adjacency graphs from tets alone."""
    m = len(tets)
    faces = tets[:, _TET_FACES].reshape(-1, 3)            # (4m, 3) oriented
    keys = np.sort(faces, axis=1)
    _, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    per_face = counts[inv]
    if per_face.max(initial=1) > 2:
        raise ValueError("a triangle is shared by more than two tets")
    boundary = per_face == 1
    surface_tris = faces[boundary]
    face_slot = np.tile(np.arange(4), m)[boundary]
    tri_tet = np.repeat(np.arange(m), 4)[boundary]
    tri_opposite = tets[tri_tet, face_slot]

    edge_keys = np.sort(tets[:, _TET_EDGES].reshape(-1, 2), axis=1)
    edges = np.unique(edge_keys, axis=0)

    flags = np.zeros(len(vertices), dtype=bool)
    flags[surface_tris] = True

    # surface triangle adjacency: a manifold surface edge borders exactly 2
    # triangles.  Voxels meeting only along an edge create 4-triangle edges;
    # those are tolerated (skipped for pairing) and counted.
    k = len(surface_tris)
    tri_edges = np.sort(np.concatenate([surface_tris[:, (0, 1)],
                                        surface_tris[:, (1, 2)],
                                        surface_tris[:, (2, 0)]]), axis=1)
    owner = np.tile(np.arange(k), 3)
    uniq_edges, einv, ecounts = np.unique(tri_edges, axis=0,
                                          return_inverse=True, return_counts=True)
    manifold = ecounts == 2
    n_nonmanifold = int(np.count_nonzero(~manifold))
    order = np.argsort(einv, kind="stable")
    sorted_owner = owner[order]
    # offsets of each unique-edge group in the sorted owner list
    group_start = np.zeros(len(uniq_edges), dtype=np.int64)
    np.cumsum(ecounts[:-1], out=group_start[1:])
    first = sorted_owner[group_start[manifold]]
    second = sorted_owner[group_start[manifold] + 1]
    surface_pairs = np.sort(np.stack([first, second], axis=1), axis=1)

    vol_nbr, vol_off = _csr_from_pairs(edges, len(vertices))
    surf_nbr, surf_off = _csr_from_pairs(uniq_edges, len(vertices))

    return TetMesh(
        vertices=np.ascontiguousarray(vertices, dtype=np.float64),
        tets=np.ascontiguousarray(tets, dtype=np.int64),
        surface_tris=np.ascontiguousarray(surface_tris, dtype=np.int64),
        surface_vertex_flags=flags,
        edges=np.ascontiguousarray(edges, dtype=np.int64),
        cube_of_tet=np.ascontiguousarray(cube_of_tet, dtype=np.int64),
        frame=frame,
        tri_tet=tri_tet,
        tri_opposite=tri_opposite,
        surface_pairs=surface_pairs,
        vol_nbr=vol_nbr,
        vol_off=vol_off,
        surf_nbr=surf_nbr,
        surf_off=surf_off,
        n_nonmanifold_edges=n_nonmanifold,
    )


def build_tet_mesh(grid: VoxelGrid) -> TetMesh:
    """Split every occupied voxel into the fixed 6-tet pattern, merging
    shared cube corners into single vertices."""
    coords = grid.occupied_coords()
    if len(coords) == 0:
        raise ValueError("empty grid: no occupied voxels")
    corners = (coords[:, None, :] + _CORNERS[None, :, :]).reshape(-1, 3)
    uniq, inverse = np.unique(corners, axis=0, return_inverse=True)
    corner_ids = inverse.reshape(-1, 8)                    # (n_cubes, 8)
    tets = corner_ids[:, _TET_PATTERN].reshape(-1, 4)      # cube-major, k-minor
    cube_of_tet = np.repeat(np.arange(len(coords)), 6)
    return _derive_topology(uniq.astype(np.float64), tets, cube_of_tet, grid.frame)


def from_tets(vertices: np.ndarray, tets: np.ndarray, frame: Frame = Frame(),
              cube_of_tet: np.ndarray | None = None) -> TetMesh:
    """Rebuild the tracked boundary and adjacency from raw tet arrays
    (e.g. a mesh read back from file)."""
    tets = np.asarray(tets, dtype=np.int64)
    if cube_of_tet is None:
        cube_of_tet = np.arange(len(tets)) // 6
    return _derive_topology(np.asarray(vertices, dtype=np.float64), tets,
                            np.asarray(cube_of_tet, dtype=np.int64), frame)


def extract_surface(mesh: TetMesh) -> tuple[np.ndarray, np.ndarray]:
    """Outward-wound boundary triangles and the surface-vertex index map."""
    return mesh.surface_tris.copy(), mesh.surface_vertex_ids
