"""Mesh quality auditing: aspect ratios, flips, self-intersections, Chamfer
distance, and batch statistics."""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _kernels
from .closest import build_bvh
from .tetmesh import TetMesh, tet_dets

__all__ = [
    "QualityReport",
    "BatchReport",
    "triangle_ar",
    "triangle_ars",
    "tet_ar",
    "tet_ars",
    "count_flipped_tets",
    "count_flipped_triangles",
    "count_self_intersections",
    "chamfer_distance",
    "sample_surface",
    "mesh_quality_report",
    "batch_report",
    "report_table",
]

AR_HIGHLIGHT = 2.6  # distorted-triangle highlight threshold

_TWO_SQRT6 = 2.0 * np.sqrt(6.0)


def triangle_ars(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Circumradius over twice the inradius for each triangle; 1 for
    equilateral, +inf sentinel for degenerate (near-zero area) triangles."""
    a = np.atleast_2d(a)
    b = np.atleast_2d(b)
    c = np.atleast_2d(c)
    la = np.linalg.norm(b - c, axis=1)
    lb = np.linalg.norm(c - a, axis=1)
    lc = np.linalg.norm(a - b, axis=1)
    area = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    longest = np.maximum(np.maximum(la, lb), lc)
    out = np.full(len(la), np.inf)
    ok = area > 1e-12 * longest ** 2
    s = 0.5 * (la + lb + lc)
    # R_c = abc / (4A), R_i = A / s  =>  AR = abc * s / (8 A^2)
    out[ok] = la[ok] * lb[ok] * lc[ok] * s[ok] / (8.0 * area[ok] ** 2)
    return out


def triangle_ar(a, b, c) -> float:
    return float(triangle_ars(np.asarray(a, dtype=np.float64),
                              np.asarray(b, dtype=np.float64),
                              np.asarray(c, dtype=np.float64))[0])


def tet_ars(p0, p1, p2, p3) -> np.ndarray:
    """Largest edge over (2 sqrt6 inradius); 1 for the regular tet, +inf for
    non-positive volume."""
    p0, p1, p2, p3 = (np.atleast_2d(p) for p in (p0, p1, p2, p3))
    b = p1 - p0
    c = p2 - p0
    d = p3 - p0
    vol = np.einsum("ij,ij->i", b, np.cross(c, d)) / 6.0
    tri_pairs = [(p0, p1, p2), (p0, p1, p3), (p0, p2, p3), (p1, p2, p3)]
    areas = sum(0.5 * np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)
                for v0, v1, v2 in tri_pairs)
    edges = [p1 - p0, p2 - p0, p3 - p0, p2 - p1, p3 - p1, p3 - p2]
    hmax = np.max([np.linalg.norm(e, axis=1) for e in edges], axis=0)
    out = np.full(len(vol), np.inf)
    ok = vol > 0
    inradius = 3.0 * vol[ok] / areas[ok]
    out[ok] = hmax[ok] / (_TWO_SQRT6 * inradius)
    return out


def tet_ar(p0, p1, p2, p3) -> float:
    return float(tet_ars(np.asarray(p0, dtype=np.float64),
                         np.asarray(p1, dtype=np.float64),
                         np.asarray(p2, dtype=np.float64),
                         np.asarray(p3, dtype=np.float64))[0])


def count_flipped_tets(mesh: TetMesh, positions: np.ndarray | None = None) -> int:
    """Tets whose homogeneous determinant is <= 0 in the stored vertex order."""
    dets = tet_dets(mesh.vertices if positions is None else positions, mesh.tets)
    return int(np.count_nonzero(dets <= 0.0))


def count_flipped_triangles(mesh: TetMesh, positions: np.ndarray | None = None) -> int:
    """Surface triangles whose winding normal no longer points away from the
    fourth vertex of their unique bounding tet."""
    pos = mesh.vertices if positions is None else positions
    tris = mesh.surface_tris
    a = pos[tris[:, 0]]
    b = pos[tris[:, 1]]
    c = pos[tris[:, 2]]
    normal = np.cross(b - a, c - a)
    centroid = (a + b + c) / 3.0
    opp = pos[mesh.tri_opposite]
    side = np.einsum("ij,ij->i", normal, centroid - opp)
    return int(np.count_nonzero(side <= 0.0))


def count_self_intersections(positions: np.ndarray, triangles: np.ndarray,
                             brute_force: bool = False) -> int:
    """Triangles penetrating at least one non-adjacent (no shared vertex)
    triangle.  BVH-accelerated by default; brute_force runs the all-pairs
    oracle instead."""
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    tris = np.ascontiguousarray(triangles, dtype=np.int64)
    if len(tris) == 0:
        return 0
    if brute_force:
        flags = _kernels.brute_intersection_flags(tris, pos)
    else:
        bvh = build_bvh(pos, tris)
        flags = _kernels.bvh_intersection_flags(
            bvh.node_min, bvh.node_max, bvh.left, bvh.right, bvh.start,
            bvh.count, bvh.leaf_tris, tris, pos)
    return int(np.count_nonzero(flags))


def chamfer_distance(points_a: np.ndarray, points_b: np.ndarray) -> float:
    """Symmetric mean of squared nearest-neighbor distances (average of the
    two directional means)."""
    a = np.atleast_2d(np.asarray(points_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(points_b, dtype=np.float64))
    if len(a) == 0 or len(b) == 0:
        raise ValueError("point sets must be non-empty")
    d_ab, _ = cKDTree(b).query(a)
    d_ba, _ = cKDTree(a).query(b)
    return float(0.5 * ((d_ab ** 2).mean() + (d_ba ** 2).mean()))


def sample_surface(vertices: np.ndarray, faces: np.ndarray, n: int,
                   seed: int = 0) -> np.ndarray:
    """Uniform-by-area point sampling of a triangle surface."""
    rng = np.random.default_rng(seed)
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    total = areas.sum()
    if total <= 0:
        raise ValueError("surface has no area")
    pick = rng.choice(len(faces), size=n, p=areas / total)
    u = rng.uniform(size=(n, 1))
    v = rng.uniform(size=(n, 1))
    flip = (u + v) > 1.0
    u = np.where(flip, 1.0 - u, u)
    v = np.where(flip, 1.0 - v, v)
    return a[pick] + u * (b[pick] - a[pick]) + v * (c[pick] - a[pick])


@dataclass
class QualityReport:
    """Per-mesh audit: aspect ratio statistics and defect counts."""
    tri_ar_mean: float
    tri_ar_min: float
    tri_ar_max: float
    tet_ar_mean: float
    tet_ar_min: float
    tet_ar_max: float
    tri_flip_count: int
    tet_flip_count: int
    self_intersection_count: int
    n_tris: int
    n_tets: int
    tri_ar_over_threshold_count: int

    def to_json(self, path=None):
        payload = json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"
        if path is None:
            return payload
        with open(path, "w") as fh:
            fh.write(payload)


@dataclass
class BatchReport:
    """Aggregate across meshes: means of the mean columns and counts,
    medians of the min/max columns (robust to the occasional blow-up)."""
    tri_ar_mean: float
    tri_ar_min: float
    tri_ar_max: float
    tet_ar_mean: float
    tet_ar_min: float
    tet_ar_max: float
    tri_flip_count: float
    tet_flip_count: float
    self_intersection_count: float
    n_meshes: int


def _mean_clamped(arr: np.ndarray) -> float:
    # summation rounding can push the mean an ulp outside [min, max]
    return float(min(max(arr.mean(), arr.min()), arr.max()))


def mesh_quality_report(mesh: TetMesh, positions: np.ndarray | None = None) -> QualityReport:
    pos = mesh.vertices if positions is None else positions
    tris = mesh.surface_tris
    tri_ar = triangle_ars(pos[tris[:, 0]], pos[tris[:, 1]], pos[tris[:, 2]])
    t = mesh.tets
    tet_ar_v = tet_ars(pos[t[:, 0]], pos[t[:, 1]], pos[t[:, 2]], pos[t[:, 3]])
    return QualityReport(
        tri_ar_mean=_mean_clamped(tri_ar),
        tri_ar_min=float(tri_ar.min()),
        tri_ar_max=float(tri_ar.max()),
        tet_ar_mean=_mean_clamped(tet_ar_v),
        tet_ar_min=float(tet_ar_v.min()),
        tet_ar_max=float(tet_ar_v.max()),
        tri_flip_count=count_flipped_triangles(mesh, pos),
        tet_flip_count=count_flipped_tets(mesh, pos),
        self_intersection_count=count_self_intersections(pos, tris),
        n_tris=len(tris),
        n_tets=len(t),
        tri_ar_over_threshold_count=int(np.count_nonzero(tri_ar > AR_HIGHLIGHT)),
    )


def batch_report(reports: list[QualityReport]) -> BatchReport:
    if not reports:
        raise ValueError("empty report list")
    col = lambda name: np.array([getattr(r, name) for r in reports], dtype=np.float64)
    return BatchReport(
        tri_ar_mean=float(col("tri_ar_mean").mean()),
        tri_ar_min=float(np.median(col("tri_ar_min"))),
        tri_ar_max=float(np.median(col("tri_ar_max"))),
        tet_ar_mean=float(col("tet_ar_mean").mean()),
        tet_ar_min=float(np.median(col("tet_ar_min"))),
        tet_ar_max=float(np.median(col("tet_ar_max"))),
        tri_flip_count=float(col("tri_flip_count").mean()),
        tet_flip_count=float(col("tet_flip_count").mean()),
        self_intersection_count=float(col("self_intersection_count").mean()),
        n_meshes=len(reports),
    )


def report_table(report) -> str:
    """Aligned text table with triAR / tetAR / triFlip / tetFlip /
    self-intersection columns."""
    tri = "%.2f / %.2f / %.2f" % (report.tri_ar_mean, report.tri_ar_min,
                                  report.tri_ar_max)
    tet = "%.2f / %.2f / %.2f" % (report.tet_ar_mean, report.tet_ar_min,
                                  report.tet_ar_max)
    headers = ["triAR (mean/min/max)", "tetAR (mean/min/max)", "triFlip",
               "tetFlip", "self-intersection"]
    values = [tri, tet, "%g" % report.tri_flip_count,
              "%g" % report.tet_flip_count,
              "%g" % report.self_intersection_count]
    widths = [max(len(h), len(v)) for h, v in zip(headers, values)]
    head = "  ".join(h.ljust(w) for h, w in zip(headers, widths))
    row = "  ".join(v.ljust(w) for v, w in zip(values, widths))
    return head + "\n" + row + "\n"
