"""Exact closest-point queries over a triangle surface.

A median-split AABB tree provides the exact geometric oracle realizing the
closest-point map; the same callable contract (grid, points) -> points is
what a learned predictor would satisfy, so the two are interchangeable in
the deformation optimizer.  The oracle ignores the grid argument.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import _kernels
from .tetmesh import TetMesh
from .voxel import VoxelGrid

__all__ = [
    "TriangleBvh",
    "build_bvh",
    "closest_point",
    "closest_points",
    "ClosestPointPredictor",
    "ExactClosestPoint",
    "CpSample",
    "CpSamples",
    "gen_training_samples",
    "write_samples",
    "read_samples",
]

LEAF_SIZE = 4
SAMPLE_MAGIC = b"NVMGCPS1"


@dataclass
class TriangleBvh:
    """Flat-array AABB tree; leaves hold up to LEAF_SIZE triangles."""

    node_min: np.ndarray   # (n, 3)
    node_max: np.ndarray   # (n, 3)
    left: np.ndarray       # (n,) child index, -1 for leaves
    right: np.ndarray
    start: np.ndarray      # (n,) leaf range into leaf_tris
    count: np.ndarray
    leaf_tris: np.ndarray  # (m,) original triangle ids grouped by leaf
    tri_a: np.ndarray      # (m, 3) triangle vertices in original order
    tri_b: np.ndarray
    tri_c: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    @property
    def n_triangles(self) -> int:
        return len(self.tri_a)


def build_bvh(vertices: np.ndarray, faces: np.ndarray) -> TriangleBvh:
    """Median-split tree over triangle AABB centroids, longest axis first."""
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    if len(faces) == 0:
        raise ValueError("no triangles")
    a = np.ascontiguousarray(vertices[faces[:, 0]])
    b = np.ascontiguousarray(vertices[faces[:, 1]])
    c = np.ascontiguousarray(vertices[faces[:, 2]])
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    if not (areas > 0).any():
        raise ValueError("all triangles degenerate")

    tmin = np.minimum(np.minimum(a, b), c)
    tmax = np.maximum(np.maximum(a, b), c)
    centroid = (tmin + tmax) * 0.5

    node_min, node_max, left, right, start, count = [], [], [], [], [], []
    leaf_tris: list[np.ndarray] = []
    order_cursor = 0

    # (node index, triangle id subset) work stack; children are allocated
    # before being processed so indices are stable
    tri_ids = np.arange(len(faces))
    stack = [(0, tri_ids)]
    node_min.append(None)
    node_max.append(None)
    left.append(-1)
    right.append(-1)
    start.append(0)
    count.append(0)

    while stack:
        node, ids = stack.pop()
        node_min[node] = tmin[ids].min(axis=0)
        node_max[node] = tmax[ids].max(axis=0)
        if len(ids) <= LEAF_SIZE:
            start[node] = order_cursor
            count[node] = len(ids)
            leaf_tris.append(ids)
            order_cursor += len(ids)
            continue
        axis = int(np.argmax(centroid[ids].max(axis=0) - centroid[ids].min(axis=0)))
        ids = ids[np.argsort(centroid[ids, axis], kind="stable")]
        half = len(ids) // 2
        li = len(left)
        for _ in range(2):
            node_min.append(None)
            node_max.append(None)
            left.append(-1)
            right.append(-1)
            start.append(0)
            count.append(0)
        left[node] = li
        right[node] = li + 1
        stack.append((li + 1, ids[half:]))
        stack.append((li, ids[:half]))

    return TriangleBvh(
        node_min=np.array(node_min, dtype=np.float64),
        node_max=np.array(node_max, dtype=np.float64),
        left=np.array(left, dtype=np.int64),
        right=np.array(right, dtype=np.int64),
        start=np.array(start, dtype=np.int64),
        count=np.array(count, dtype=np.int64),
        leaf_tris=np.concatenate(leaf_tris),
        tri_a=a, tri_b=b, tri_c=c,
    )


@dataclass(frozen=True)
class CpSample:
    """A query point paired with its closest surface point."""
    query: np.ndarray
    target: np.ndarray


def closest_points(bvh: TriangleBvh, points: np.ndarray,
                   with_stats: bool = False):
    """Exact closest surface point for each query.

    Returns (points (n,3), triangle ids (n,)); with_stats adds the per-query
    work counter (nodes visited + triangles tested).
    """
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    if not np.isfinite(pts).all():
        raise ValueError("non-finite query point")
    cp, tri, visits = _kernels.bvh_closest_points(
        bvh.node_min, bvh.node_max, bvh.left, bvh.right, bvh.start, bvh.count,
        bvh.leaf_tris, bvh.tri_a, bvh.tri_b, bvh.tri_c, pts)
    if with_stats:
        return cp, tri, visits
    return cp, tri


def closest_point(bvh: TriangleBvh, point) -> CpSample:
    cp, _ = closest_points(bvh, np.asarray(point, dtype=np.float64))
    return CpSample(query=np.asarray(point, dtype=np.float64), target=cp[0])


def brute_force_closest_points(vertices, faces, points):
    """All-triangles oracle with the same lowest-index tie rule."""
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    pts = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    return _kernels.brute_closest_points(
        np.ascontiguousarray(vertices[faces[:, 0]]),
        np.ascontiguousarray(vertices[faces[:, 1]]),
        np.ascontiguousarray(vertices[faces[:, 2]]),
        pts)


class ClosestPointPredictor(Protocol):
    """Callable contract shared by the exact oracle and learned predictors."""

    def __call__(self, grid: VoxelGrid | None, points: np.ndarray) -> np.ndarray:
        ...


class ExactClosestPoint:
    """Exact oracle satisfying the predictor contract; the grid argument is
    accepted for signature compatibility and ignored."""

    def __init__(self, bvh: TriangleBvh):
        self.bvh = bvh

    def __call__(self, grid, points) -> np.ndarray:
        cp, _ = closest_points(self.bvh, points)
        return cp


@dataclass
class CpSamples:
    """Batch of closest-point training samples."""
    query: np.ndarray   # (n, 3)
    target: np.ndarray  # (n, 3)

    def __len__(self):
        return len(self.query)

    def __iter__(self):
        for q, t in zip(self.query, self.target):
            yield CpSample(q, t)


def gen_training_samples(mesh: TetMesh, bvh: TriangleBvh, n: int,
                         jitter_sigma: float = 0.5, seed: int = 0) -> CpSamples:
    """Draw query points along the segments joining boundary vertices to
    their closest surface points, with isotropic Gaussian jitter, and pair
    each with its exactly recomputed closest point.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    surf_ids = mesh.surface_vertex_ids
    if len(surf_ids) == 0:
        raise ValueError("mesh has no boundary vertices")
    rng = np.random.default_rng(seed)
    picks = rng.integers(0, len(surf_ids), size=n)
    vs = mesh.vertices[surf_ids[picks]]
    ps, _ = closest_points(bvh, vs)
    alpha = rng.uniform(0.0, 1.0, size=(n, 1))
    x = (1.0 - alpha) * ps + alpha * vs
    if jitter_sigma > 0:
        x = x + jitter_sigma * rng.standard_normal((n, 3))
    cp, _ = closest_points(bvh, x)
    return CpSamples(query=x, target=cp)


def write_samples(samples: CpSamples, path) -> None:
    """Binary export: magic header then records of 6 little-endian float64
    (query, target)."""
    n = len(samples)
    rec = np.empty((n, 6), dtype="<f8")
    rec[:, :3] = samples.query
    rec[:, 3:] = samples.target
    with open(path, "wb") as fh:
        fh.write(SAMPLE_MAGIC)
        fh.write(rec.tobytes())


def read_samples(path) -> CpSamples:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != SAMPLE_MAGIC:
            raise ValueError(f"{path}: bad magic {magic!r}")
        payload = fh.read()
    if len(payload) % 48 != 0:
        raise ValueError(f"{path}: truncated record (payload {len(payload)} bytes)")
    rec = np.frombuffer(payload, dtype="<f8").reshape(-1, 6)
    return CpSamples(query=rec[:, :3].copy(), target=rec[:, 3:].copy())
