"""Triangle/tet mesh file formats: OBJ and OFF in, OBJ, MEDIT .mesh and
legacy-VTK unstructured grids out."""
from __future__ import annotations

import numpy as np

__all__ = [
    "read_surface",
    "read_obj",
    "read_off",
    "write_obj",
    "write_medit",
    "read_medit",
    "write_vtk",
]

_F = "%.17g"  # shortest-ish round-trip float formatting, byte-stable


def read_surface(path) -> tuple[np.ndarray, np.ndarray]:
    """Dispatch on extension: .obj or .off triangle surfaces."""
    p = str(path)
    if p.lower().endswith(".off"):
        return read_off(path)
    return read_obj(path)


def _fan(idx: list[int]) -> list[tuple[int, int, int]]:
    return [(idx[0], idx[k], idx[k + 1]) for k in range(1, len(idx) - 1)]


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    """OBJ reader limited to v/f records; polygons are fan-triangulated."""
    verts: list[tuple[float, float, float]] = []
    faces: list[tuple[int, int, int]] = []
    with open(path) as fh:
        for ln, line in enumerate(fh, 1):
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                if len(parts) < 4:
                    raise ValueError(f"{path}:{ln}: malformed vertex record")
                verts.append(tuple(float(x) for x in parts[1:4]))
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    if i < 0:
                        i = len(verts) + 1 + i
                    idx.append(i - 1)
                if len(idx) < 3:
                    raise ValueError(f"{path}:{ln}: face with < 3 vertices")
                faces.extend(_fan(idx))
    if not verts or not faces:
        raise ValueError(f"{path}: no triangles found")
    v = np.array(verts, dtype=np.float64)
    f = np.array(faces, dtype=np.int64)
    if f.min() < 0 or f.max() >= len(v):
        raise ValueError(f"{path}: face index out of range")
    return v, f


def read_off(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path) as fh:
        tokens = []
        for line in fh:
            body = line.split("#", 1)[0].strip()
            if body:
                tokens.extend(body.split())
    if not tokens or tokens[0] != "OFF":
        raise ValueError(f"{path}: missing OFF header")
    nv, nf = int(tokens[1]), int(tokens[2])
    pos = 4  # skip edge count
    verts = np.array([float(t) for t in tokens[pos:pos + 3 * nv]],
                     dtype=np.float64).reshape(nv, 3)
    pos += 3 * nv
    faces: list[tuple[int, int, int]] = []
    for _ in range(nf):
        k = int(tokens[pos])
        idx = [int(t) for t in tokens[pos + 1:pos + 1 + k]]
        pos += 1 + k
        faces.extend(_fan(idx))
    if not faces:
        raise ValueError(f"{path}: no faces")
    f = np.array(faces, dtype=np.int64)
    if f.min() < 0 or f.max() >= nv:
        raise ValueError(f"{path}: face index out of range")
    return verts, f


def write_obj(path, vertices: np.ndarray, faces: np.ndarray) -> None:
    with open(path, "w") as fh:
        for v in vertices:
            fh.write("v %s %s %s\n" % (_F % v[0], _F % v[1], _F % v[2]))
        for f in faces:
            fh.write("f %d %d %d\n" % (f[0] + 1, f[1] + 1, f[2] + 1))


def write_medit(path, vertices: np.ndarray, tets: np.ndarray,
                triangles: np.ndarray | None = None,
                tet_refs: np.ndarray | None = None) -> None:
    """MEDIT .mesh with Vertices / Tetrahedra / Triangles sections (1-based)."""
    lines = ["MeshVersionFormatted 2", "Dimension 3", "Vertices", str(len(vertices))]
    for v in vertices:
        lines.append("%s %s %s 0" % (_F % v[0], _F % v[1], _F % v[2]))
    lines += ["Tetrahedra", str(len(tets))]
    refs = tet_refs if tet_refs is not None else np.zeros(len(tets), dtype=np.int64)
    for t, ref in zip(tets, refs):
        lines.append("%d %d %d %d %d" % (t[0] + 1, t[1] + 1, t[2] + 1, t[3] + 1, ref))
    if triangles is not None and len(triangles):
        lines += ["Triangles", str(len(triangles))]
        for t in triangles:
            lines.append("%d %d %d 0" % (t[0] + 1, t[1] + 1, t[2] + 1))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_medit(path):
    """Read back Vertices/Tetrahedra/Triangles from a MEDIT .mesh file.

    Returns (vertices, tets, triangles, tet_refs); triangles may be empty.
    """
    with open(path) as fh:
        tokens = fh.read().split()
    pos = 0

    def expect(word):
        nonlocal pos
        if pos >= len(tokens) or tokens[pos] != word:
            raise ValueError(f"{path}: expected {word!r} near token {pos}")
        pos += 1

    expect("MeshVersionFormatted")
    pos += 1
    expect("Dimension")
    if int(tokens[pos]) != 3:
        raise ValueError(f"{path}: only dimension 3 supported")
    pos += 1

    verts = np.empty((0, 3))
    tets = np.empty((0, 4), dtype=np.int64)
    tris = np.empty((0, 3), dtype=np.int64)
    tet_refs = np.empty(0, dtype=np.int64)
    while pos < len(tokens) and tokens[pos] != "End":
        section = tokens[pos]
        pos += 1
        n = int(tokens[pos])
        pos += 1
        if section == "Vertices":
            flat = [float(t) for t in tokens[pos:pos + 4 * n]]
            verts = np.array(flat, dtype=np.float64).reshape(n, 4)[:, :3]
            pos += 4 * n
        elif section == "Tetrahedra":
            flat = [int(t) for t in tokens[pos:pos + 5 * n]]
            arr = np.array(flat, dtype=np.int64).reshape(n, 5)
            tets = arr[:, :4] - 1
            tet_refs = arr[:, 4]
            pos += 5 * n
        elif section == "Triangles":
            flat = [int(t) for t in tokens[pos:pos + 4 * n]]
            tris = np.array(flat, dtype=np.int64).reshape(n, 4)[:, :3] - 1
            pos += 4 * n
        else:
            raise ValueError(f"{path}: unsupported section {section!r}")
    if len(verts) == 0 or len(tets) == 0:
        raise ValueError(f"{path}: missing Vertices or Tetrahedra section")
    return verts, tets, tris, tet_refs


def write_vtk(path, vertices: np.ndarray, tets: np.ndarray,
              tet_refs: np.ndarray | None = None) -> None:
    """Legacy ASCII VTK unstructured grid of tetrahedra (cell type 10)."""
    lines = [
        "# vtk DataFile Version 3.0",
        "voxmesh tetrahedral mesh",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(vertices)} double",
    ]
    for v in vertices:
        lines.append("%s %s %s" % (_F % v[0], _F % v[1], _F % v[2]))
    lines.append(f"CELLS {len(tets)} {5 * len(tets)}")
    for t in tets:
        lines.append("4 %d %d %d %d" % (t[0], t[1], t[2], t[3]))
    lines.append(f"CELL_TYPES {len(tets)}")
    lines.extend(["10"] * len(tets))
    if tet_refs is not None:
        lines.append(f"CELL_DATA {len(tets)}")
        lines.append("SCALARS cube_index int 1")
        lines.append("LOOKUP_TABLE default")
        lines.extend(str(int(x)) for x in tet_refs)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
