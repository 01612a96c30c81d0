"""Numba-compiled geometry kernels.

Everything in this module works on plain float64/int64 arrays so it can be
jitted and cached.  The pure-Python wrappers with validation live in the
public modules (voxel, closest, quality).
"""
import math

import numpy as np
from numba import njit

# Traversal stack depth; median-split trees over millions of triangles stay
# far below this.
_STACK = 128


@njit(cache=True)
def winding_numbers(points, tri_a, tri_b, tri_c):
    """Generalized winding number of a triangle soup around each query point.

    Sums the signed solid angle of every triangle (van Oosterom-Strackee)
    and divides by 4*pi.  Close to 1 inside a closed outward-oriented
    surface, close to 0 outside.
    """
    n = points.shape[0]
    m = tri_a.shape[0]
    out = np.zeros(n, dtype=np.float64)
    for i in range(n):
        px, py, pz = points[i, 0], points[i, 1], points[i, 2]
        acc = 0.0
        for t in range(m):
            ax = tri_a[t, 0] - px
            ay = tri_a[t, 1] - py
            az = tri_a[t, 2] - pz
            bx = tri_b[t, 0] - px
            by = tri_b[t, 1] - py
            bz = tri_b[t, 2] - pz
            cx = tri_c[t, 0] - px
            cy = tri_c[t, 1] - py
            cz = tri_c[t, 2] - pz
            la = math.sqrt(ax * ax + ay * ay + az * az)
            lb = math.sqrt(bx * bx + by * by + bz * bz)
            lc = math.sqrt(cx * cx + cy * cy + cz * cz)
            # triple product a . (b x c)
            num = (ax * (by * cz - bz * cy)
                   + ay * (bz * cx - bx * cz)
                   + az * (bx * cy - by * cx))
            den = (la * lb * lc
                   + (ax * bx + ay * by + az * bz) * lc
                   + (bx * cx + by * cy + bz * cz) * la
                   + (cx * ax + cy * ay + cz * az) * lb)
            acc += 2.0 * math.atan2(num, den)
        out[i] = acc / (4.0 * math.pi)
    return out


@njit(cache=True, inline="always")
def _closest_on_triangle(ax, ay, az, bx, by, bz, cx, cy, cz, px, py, pz):
    """Closest point on a single triangle (Ericson's region walk)."""
    abx, aby, abz = bx - ax, by - ay, bz - az
    acx, acy, acz = cx - ax, cy - ay, cz - az
    apx, apy, apz = px - ax, py - ay, pz - az

    d1 = abx * apx + aby * apy + abz * apz
    d2 = acx * apx + acy * apy + acz * apz
    if d1 <= 0.0 and d2 <= 0.0:
        return ax, ay, az

    bpx, bpy, bpz = px - bx, py - by, pz - bz
    d3 = abx * bpx + aby * bpy + abz * bpz
    d4 = acx * bpx + acy * bpy + acz * bpz
    if d3 >= 0.0 and d4 <= d3:
        return bx, by, bz

    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        denom = d1 - d3
        v = 0.0 if denom == 0.0 else d1 / denom
        return ax + v * abx, ay + v * aby, az + v * abz

    cpx, cpy, cpz = px - cx, py - cy, pz - cz
    d5 = abx * cpx + aby * cpy + abz * cpz
    d6 = acx * cpx + acy * cpy + acz * cpz
    if d6 >= 0.0 and d5 <= d6:
        return cx, cy, cz

    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        denom = d2 - d6
        w = 0.0 if denom == 0.0 else d2 / denom
        return ax + w * acx, ay + w * acy, az + w * acz

    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        denom = (d4 - d3) + (d5 - d6)
        w = 0.0 if denom == 0.0 else (d4 - d3) / denom
        return bx + w * (cx - bx), by + w * (cy - by), bz + w * (cz - bz)

    denom = va + vb + vc
    if denom == 0.0:
        return ax, ay, az
    v = vb / denom
    w = vc / denom
    return (ax + abx * v + acx * w,
            ay + aby * v + acy * w,
            az + abz * v + acz * w)


@njit(cache=True)
def brute_closest_points(tri_a, tri_b, tri_c, queries):
    """All-triangles closest-point scan; ties go to the lowest triangle index."""
    n = queries.shape[0]
    m = tri_a.shape[0]
    cp = np.empty((n, 3), dtype=np.float64)
    tri = np.empty(n, dtype=np.int64)
    for i in range(n):
        px, py, pz = queries[i, 0], queries[i, 1], queries[i, 2]
        best = np.inf
        besti = -1
        bx = by = bz = 0.0
        for t in range(m):
            qx, qy, qz = _closest_on_triangle(
                tri_a[t, 0], tri_a[t, 1], tri_a[t, 2],
                tri_b[t, 0], tri_b[t, 1], tri_b[t, 2],
                tri_c[t, 0], tri_c[t, 1], tri_c[t, 2],
                px, py, pz)
            d2 = (qx - px) ** 2 + (qy - py) ** 2 + (qz - pz) ** 2
            if d2 < best:
                best = d2
                besti = t
                bx, by, bz = qx, qy, qz
        cp[i, 0], cp[i, 1], cp[i, 2] = bx, by, bz
        tri[i] = besti
    return cp, tri


@njit(cache=True, inline="always")
def _aabb_dist2(bmin, bmax, node, px, py, pz):
    dx = max(bmin[node, 0] - px, 0.0, px - bmax[node, 0])
    dy = max(bmin[node, 1] - py, 0.0, py - bmax[node, 1])
    dz = max(bmin[node, 2] - pz, 0.0, pz - bmax[node, 2])
    return dx * dx + dy * dy + dz * dz


@njit(cache=True)
def bvh_closest_points(bmin, bmax, left, right, start, count, leaf_tris,
                       tri_a, tri_b, tri_c, queries):
    """Closest point on the surface for each query via BVH descent.

    Returns (points, triangle ids, work counter).  The counter sums visited
    nodes plus exact triangle tests, i.e. the unit a brute-force scan would
    spend once per triangle.  Ties on squared distance resolve to the lowest
    original triangle index, matching brute_closest_points.
    """
    n = queries.shape[0]
    cp = np.empty((n, 3), dtype=np.float64)
    tri = np.empty(n, dtype=np.int64)
    visits = np.zeros(n, dtype=np.int64)
    stack = np.empty(_STACK, dtype=np.int64)
    for i in range(n):
        px, py, pz = queries[i, 0], queries[i, 1], queries[i, 2]
        best = np.inf
        besti = -1
        bx = by = bz = 0.0
        nwork = 0
        top = 0
        stack[top] = 0
        top += 1
        while top > 0:
            top -= 1
            node = stack[top]
            if _aabb_dist2(bmin, bmax, node, px, py, pz) > best:
                continue
            nwork += 1
            if left[node] < 0:
                for k in range(start[node], start[node] + count[node]):
                    t = leaf_tris[k]
                    qx, qy, qz = _closest_on_triangle(
                        tri_a[t, 0], tri_a[t, 1], tri_a[t, 2],
                        tri_b[t, 0], tri_b[t, 1], tri_b[t, 2],
                        tri_c[t, 0], tri_c[t, 1], tri_c[t, 2],
                        px, py, pz)
                    d2 = (qx - px) ** 2 + (qy - py) ** 2 + (qz - pz) ** 2
                    nwork += 1
                    if d2 < best or (d2 == best and t < besti):
                        best = d2
                        besti = t
                        bx, by, bz = qx, qy, qz
            else:
                l, r = left[node], right[node]
                dl = _aabb_dist2(bmin, bmax, l, px, py, pz)
                dr = _aabb_dist2(bmin, bmax, r, px, py, pz)
                # push the far child first so the near one is popped first
                if dl <= dr:
                    stack[top] = r
                    top += 1
                    stack[top] = l
                    top += 1
                else:
                    stack[top] = l
                    top += 1
                    stack[top] = r
                    top += 1
        cp[i, 0], cp[i, 1], cp[i, 2] = bx, by, bz
        tri[i] = besti
        visits[i] = nwork
    return cp, tri, visits


# ---------------------------------------------------------------------------
# triangle-triangle intersection
# ---------------------------------------------------------------------------

_EPS = 1e-12


@njit(cache=True, inline="always")
def _seg_hits_triangle(ox, oy, oz, ex, ey, ez, ax, ay, az, bx, by, bz,
                       cx, cy, cz):
    """Segment (o, e) against triangle (a, b, c), Moller-Trumbore.

    Parallel segments report False; the coplanar path handles them.
    """
    dx, dy, dz = ex - ox, ey - oy, ez - oz
    e1x, e1y, e1z = bx - ax, by - ay, bz - az
    e2x, e2y, e2z = cx - ax, cy - ay, cz - az
    hx = dy * e2z - dz * e2y
    hy = dz * e2x - dx * e2z
    hz = dx * e2y - dy * e2x
    det = e1x * hx + e1y * hy + e1z * hz
    scale = (abs(e1x) + abs(e1y) + abs(e1z)) * (abs(e2x) + abs(e2y) + abs(e2z)) \
        * (abs(dx) + abs(dy) + abs(dz))
    if abs(det) <= _EPS * max(scale, 1e-300):
        return False
    f = 1.0 / det
    sx, sy, sz = ox - ax, oy - ay, oz - az
    u = f * (sx * hx + sy * hy + sz * hz)
    if u < 0.0 or u > 1.0:
        return False
    qx = sy * e1z - sz * e1y
    qy = sz * e1x - sx * e1z
    qz = sx * e1y - sy * e1x
    v = f * (dx * qx + dy * qy + dz * qz)
    if v < 0.0 or u + v > 1.0:
        return False
    t = f * (e2x * qx + e2y * qy + e2z * qz)
    return 0.0 <= t <= 1.0


@njit(cache=True, inline="always")
def _orient2d(ax, ay, bx, by, cx, cy):
    return (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)


@njit(cache=True, inline="always")
def _segs_cross2d(p0x, p0y, p1x, p1y, q0x, q0y, q1x, q1y):
    d1 = _orient2d(q0x, q0y, q1x, q1y, p0x, p0y)
    d2 = _orient2d(q0x, q0y, q1x, q1y, p1x, p1y)
    d3 = _orient2d(p0x, p0y, p1x, p1y, q0x, q0y)
    d4 = _orient2d(p0x, p0y, p1x, p1y, q1x, q1y)
    return ((d1 > 0.0) != (d2 > 0.0)) and ((d3 > 0.0) != (d4 > 0.0)) \
        and d1 != 0.0 and d2 != 0.0 and d3 != 0.0 and d4 != 0.0


@njit(cache=True, inline="always")
def _point_in_tri2d(px, py, ax, ay, bx, by, cx, cy):
    d1 = _orient2d(ax, ay, bx, by, px, py)
    d2 = _orient2d(bx, by, cx, cy, px, py)
    d3 = _orient2d(cx, cy, ax, ay, px, py)
    has_neg = (d1 < 0.0) or (d2 < 0.0) or (d3 < 0.0)
    has_pos = (d1 > 0.0) or (d2 > 0.0) or (d3 > 0.0)
    return not (has_neg and has_pos)


@njit(cache=True)
def tri_tri_overlap(t1, t2):
    """True when two triangles penetrate each other.

    Non-coplanar pairs are tested by crossing each edge of one through the
    other.  Coplanar pairs are projected onto their dominant axis and tested
    for 2D overlap (edge crossings or containment).  Contact at a single
    shared point/edge of coincident vertices is reported as an overlap only
    by the coplanar containment path, which callers suppress by excluding
    vertex-sharing pairs.
    """
    n1x = ((t1[1, 1] - t1[0, 1]) * (t1[2, 2] - t1[0, 2])
           - (t1[1, 2] - t1[0, 2]) * (t1[2, 1] - t1[0, 1]))
    n1y = ((t1[1, 2] - t1[0, 2]) * (t1[2, 0] - t1[0, 0])
           - (t1[1, 0] - t1[0, 0]) * (t1[2, 2] - t1[0, 2]))
    n1z = ((t1[1, 0] - t1[0, 0]) * (t1[2, 1] - t1[0, 1])
           - (t1[1, 1] - t1[0, 1]) * (t1[2, 0] - t1[0, 0]))
    n2x = ((t2[1, 1] - t2[0, 1]) * (t2[2, 2] - t2[0, 2])
           - (t2[1, 2] - t2[0, 2]) * (t2[2, 1] - t2[0, 1]))
    n2y = ((t2[1, 2] - t2[0, 2]) * (t2[2, 0] - t2[0, 0])
           - (t2[1, 0] - t2[0, 0]) * (t2[2, 2] - t2[0, 2]))
    n2z = ((t2[1, 0] - t2[0, 0]) * (t2[2, 1] - t2[0, 1])
           - (t2[1, 1] - t2[0, 1]) * (t2[2, 0] - t2[0, 0]))

    # quick reject: all of t2 strictly on one side of t1's plane
    scale1 = abs(n1x) + abs(n1y) + abs(n1z)
    scale2 = abs(n2x) + abs(n2y) + abs(n2z)
    tol1 = _EPS * max(scale1, 1e-300)
    tol2 = _EPS * max(scale2, 1e-300)
    pos = neg = 0
    coplanar = True
    for k in range(3):
        d = (n1x * (t2[k, 0] - t1[0, 0]) + n1y * (t2[k, 1] - t1[0, 1])
             + n1z * (t2[k, 2] - t1[0, 2]))
        if d > tol1:
            pos += 1
            coplanar = False
        elif d < -tol1:
            neg += 1
            coplanar = False
    if pos == 3 or neg == 3:
        return False
    pos = neg = 0
    for k in range(3):
        d = (n2x * (t1[k, 0] - t2[0, 0]) + n2y * (t1[k, 1] - t2[0, 1])
             + n2z * (t1[k, 2] - t2[0, 2]))
        if d > tol2:
            pos += 1
        elif d < -tol2:
            neg += 1
    if pos == 3 or neg == 3:
        return False

    if not coplanar:
        for k in range(3):
            k2 = (k + 1) % 3
            if _seg_hits_triangle(t1[k, 0], t1[k, 1], t1[k, 2],
                                  t1[k2, 0], t1[k2, 1], t1[k2, 2],
                                  t2[0, 0], t2[0, 1], t2[0, 2],
                                  t2[1, 0], t2[1, 1], t2[1, 2],
                                  t2[2, 0], t2[2, 1], t2[2, 2]):
                return True
            if _seg_hits_triangle(t2[k, 0], t2[k, 1], t2[k, 2],
                                  t2[k2, 0], t2[k2, 1], t2[k2, 2],
                                  t1[0, 0], t1[0, 1], t1[0, 2],
                                  t1[1, 0], t1[1, 1], t1[1, 2],
                                  t1[2, 0], t1[2, 1], t1[2, 2]):
                return True
        return False

    # coplanar: project on the dominant axis of the shared plane normal
    axn = abs(n1x)
    ayn = abs(n1y)
    azn = abs(n1z)
    if axn >= ayn and axn >= azn:
        i0, i1 = 1, 2
    elif ayn >= azn:
        i0, i1 = 0, 2
    else:
        i0, i1 = 0, 1
    for a in range(3):
        a2 = (a + 1) % 3
        for b in range(3):
            b2 = (b + 1) % 3
            if _segs_cross2d(t1[a, i0], t1[a, i1], t1[a2, i0], t1[a2, i1],
                             t2[b, i0], t2[b, i1], t2[b2, i0], t2[b2, i1]):
                return True
    if _point_in_tri2d(t1[0, i0], t1[0, i1], t2[0, i0], t2[0, i1],
                       t2[1, i0], t2[1, i1], t2[2, i0], t2[2, i1]):
        return True
    if _point_in_tri2d(t2[0, i0], t2[0, i1], t1[0, i0], t1[0, i1],
                       t1[1, i0], t1[1, i1], t1[2, i0], t1[2, i1]):
        return True
    return False


@njit(cache=True, inline="always")
def _share_vertex(tris, i, j):
    for a in range(3):
        for b in range(3):
            if tris[i, a] == tris[j, b]:
                return True
    return False


@njit(cache=True)
def brute_intersection_flags(tris, pos):
    """O(n^2) oracle: flag triangles penetrating a non-adjacent triangle."""
    m = tris.shape[0]
    flags = np.zeros(m, dtype=np.bool_)
    t1 = np.empty((3, 3), dtype=np.float64)
    t2 = np.empty((3, 3), dtype=np.float64)
    for i in range(m):
        for a in range(3):
            for c in range(3):
                t1[a, c] = pos[tris[i, a], c]
        for j in range(i + 1, m):
            if _share_vertex(tris, i, j):
                continue
            for a in range(3):
                for c in range(3):
                    t2[a, c] = pos[tris[j, a], c]
            if tri_tri_overlap(t1, t2):
                flags[i] = True
                flags[j] = True
    return flags


@njit(cache=True)
def bvh_intersection_flags(bmin, bmax, left, right, start, count, leaf_tris,
                           tris, pos):
    """BVH-accelerated version of brute_intersection_flags."""
    m = tris.shape[0]
    flags = np.zeros(m, dtype=np.bool_)
    t1 = np.empty((3, 3), dtype=np.float64)
    t2 = np.empty((3, 3), dtype=np.float64)
    stack = np.empty(_STACK, dtype=np.int64)
    for i in range(m):
        lo_x = lo_y = lo_z = np.inf
        hi_x = hi_y = hi_z = -np.inf
        for a in range(3):
            for c in range(3):
                t1[a, c] = pos[tris[i, a], c]
            lo_x = min(lo_x, t1[a, 0])
            lo_y = min(lo_y, t1[a, 1])
            lo_z = min(lo_z, t1[a, 2])
            hi_x = max(hi_x, t1[a, 0])
            hi_y = max(hi_y, t1[a, 1])
            hi_z = max(hi_z, t1[a, 2])
        top = 0
        stack[top] = 0
        top += 1
        while top > 0:
            top -= 1
            node = stack[top]
            if (bmin[node, 0] > hi_x or bmax[node, 0] < lo_x
                    or bmin[node, 1] > hi_y or bmax[node, 1] < lo_y
                    or bmin[node, 2] > hi_z or bmax[node, 2] < lo_z):
                continue
            if left[node] < 0:
                for k in range(start[node], start[node] + count[node]):
                    j = leaf_tris[k]
                    if j <= i or _share_vertex(tris, i, j):
                        continue
                    for a in range(3):
                        for c in range(3):
                            t2[a, c] = pos[tris[j, a], c]
                    if tri_tri_overlap(t1, t2):
                        flags[i] = True
                        flags[j] = True
            else:
                stack[top] = left[node]
                top += 1
                stack[top] = right[node]
                top += 1
    return flags
