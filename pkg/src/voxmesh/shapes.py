"""Analytic closed test surfaces (icosphere, box, torus)."""
from __future__ import annotations

import numpy as np

__all__ = ["icosphere", "box_mesh", "torus_mesh", "signed_volume"]


def signed_volume(vertices: np.ndarray, faces: np.ndarray) -> float:
    """Signed enclosed volume; positive for outward-wound closed surfaces."""
    a = vertices[faces[:, 0]]
    b = vertices[faces[:, 1]]
    c = vertices[faces[:, 2]]
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def icosphere(subdivisions: int = 4, radius: float = 1.0,
              center=(0.0, 0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Subdivided icosahedron with vertices on the sphere of given radius."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v) for v in verts]

    for _ in range(subdivisions):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (i, j) if i < j else (j, i)
            if key in cache:
                return cache[key]
            m = np.array(verts[i]) + np.array(verts[j])
            m /= np.linalg.norm(m)
            verts.append(tuple(m))
            cache[key] = len(verts) - 1
            return cache[key]

        new_faces = []
        for (a, b, c) in faces:
            ab = midpoint(a, b)
            bc = midpoint(b, c)
            ca = midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces

    v = np.array(verts, dtype=np.float64) * radius + np.asarray(center, dtype=np.float64)
    return v, np.array(faces, dtype=np.int64)


def box_mesh(lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned box as 12 outward-wound triangles."""
    lx, ly, lz = lo
    hx, hy, hz = hi
    v = np.array([
        (lx, ly, lz), (hx, ly, lz), (hx, hy, lz), (lx, hy, lz),
        (lx, ly, hz), (hx, ly, hz), (hx, hy, hz), (lx, hy, hz),
    ], dtype=np.float64)
    f = np.array([
        (0, 2, 1), (0, 3, 2),  # z = lo
        (4, 5, 6), (4, 6, 7),  # z = hi
        (0, 1, 5), (0, 5, 4),  # y = lo
        (2, 3, 7), (2, 7, 6),  # y = hi
        (1, 2, 6), (1, 6, 5),  # x = hi
        (0, 4, 7), (0, 7, 3),  # x = lo
    ], dtype=np.int64)
    return v, f


def torus_mesh(major: float = 0.35, minor: float = 0.1,
               segments_major: int = 128, segments_minor: int = 64,
               center=(0.0, 0.0, 0.0)) -> tuple[np.ndarray, np.ndarray]:
    """Closed torus around the z axis, outward winding."""
    u = np.arange(segments_major) * (2.0 * np.pi / segments_major)
    v = np.arange(segments_minor) * (2.0 * np.pi / segments_minor)
    uu, vv = np.meshgrid(u, v, indexing="ij")
    ring = major + minor * np.cos(vv)
    pts = np.stack([ring * np.cos(uu), ring * np.sin(uu), minor * np.sin(vv)],
                   axis=-1).reshape(-1, 3)
    pts += np.asarray(center, dtype=np.float64)

    faces = []
    for i in range(segments_major):
        i2 = (i + 1) % segments_major
        for j in range(segments_minor):
            j2 = (j + 1) % segments_minor
            a = i * segments_minor + j
            b = i2 * segments_minor + j
            c = i2 * segments_minor + j2
            d = i * segments_minor + j2
            faces += [(a, b, c), (a, c, d)]
    f = np.array(faces, dtype=np.int64)
    if signed_volume(pts, f) < 0:
        f = f[:, ::-1]
    return pts, f
