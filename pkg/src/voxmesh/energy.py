"""Deformation objective terms, each returning (value, gradient).

All terms are differentiable functions of the vertex position array and are
evaluated with explicit analytic gradients; scatter sums use bincount with a
fixed order so results are bit-reproducible.
"""
from __future__ import annotations

import numpy as np

from .tetmesh import TetMesh, tet_dets

__all__ = [
    "edge_energy",
    "laplacian_energy",
    "normal_energy",
    "det_barrier",
    "orientation_energy",
    "projection_energy",
    "robust_projection",
]


def _scatter_add(grad: np.ndarray, idx: np.ndarray, vals: np.ndarray) -> None:
    n = len(grad)
    for c in range(3):
        grad[:, c] += np.bincount(idx, weights=vals[:, c], minlength=n)


def edge_energy(pos: np.ndarray, mesh: TetMesh):
    """Sum of squared lengths over the unique volumetric edge set."""
    e0 = mesh.edges[:, 0]
    e1 = mesh.edges[:, 1]
    d = pos[e0] - pos[e1]
    value = float(np.einsum("ij,ij->", d, d))
    grad = np.zeros_like(pos)
    _scatter_add(grad, e0, 2.0 * d)
    _scatter_add(grad, e1, -2.0 * d)
    return value, grad


def _graph_laplacian(pos, nbr, off, grad, coeff):
    """One uniform-graph Laplacian sum; returns the value, accumulates grad.

    delta_i is the plain average of graph neighbors, so the residual
    delta_i - v_i couples each vertex to its neighborhood and the gradient
    flows to the neighbors as well.  Degree-0 vertices are excluded.
    """
    deg = np.diff(off)
    active = np.nonzero(deg > 0)[0]
    if len(active) == 0:
        return 0.0
    seg = np.repeat(np.arange(len(pos)), deg)            # owner of each entry
    sums = np.zeros_like(pos)
    _scatter_add(sums, seg, pos[nbr])
    delta = np.zeros_like(pos)
    delta[active] = sums[active] / deg[active, None]
    resid = np.zeros_like(pos)
    resid[active] = delta[active] - pos[active]
    value = float(coeff * np.einsum("ij,ij->", resid, resid))
    grad[active] += -2.0 * coeff * resid[active]
    w = 2.0 * coeff * resid / np.maximum(deg, 1)[:, None]
    _scatter_add(grad, nbr, w[seg])
    return value


def laplacian_energy(pos: np.ndarray, mesh: TetMesh, alpha: float = 1.0,
                     beta: float = 0.5):
    """Uniform-graph Laplacian residuals over the volume graph plus the
    surface graph, weighted alpha and beta respectively."""
    grad = np.zeros_like(pos)
    value = _graph_laplacian(pos, mesh.vol_nbr, mesh.vol_off, grad, alpha)
    value += _graph_laplacian(pos, mesh.surf_nbr, mesh.surf_off, grad, beta)
    return value, grad


def normal_energy(pos: np.ndarray, mesh: TetMesh):
    """Sum of 1 - cos(n_i, n_j) over surface triangle pairs sharing an edge.

    Zero-area faces contribute 0 to their pairs; their count is reported via
    the third return value so callers can surface a warning.
    """
    tris = mesh.surface_tris
    pairs = mesh.surface_pairs
    a = pos[tris[:, 0]]
    b = pos[tris[:, 1]]
    c = pos[tris[:, 2]]
    nvec = np.cross(b - a, c - a)
    norm = np.linalg.norm(nvec, axis=1)
    ok = norm > 1e-300
    unit = np.zeros_like(nvec)
    unit[ok] = nvec[ok] / norm[ok, None]

    fi = pairs[:, 0]
    fj = pairs[:, 1]
    pair_ok = ok[fi] & ok[fj]
    cosij = np.einsum("ij,ij->i", unit[fi], unit[fj])
    value = float(np.sum(np.where(pair_ok, 1.0 - cosij, 0.0)))
    n_degenerate = int(np.count_nonzero(~ok))

    # d(-cos)/dN_i = -(n_j - cos * n_i) / |N_i|, accumulated per face
    gN = np.zeros_like(nvec)
    coef_i = np.zeros((len(pairs), 3))
    coef_j = np.zeros((len(pairs), 3))
    coef_i[pair_ok] = -(unit[fj][pair_ok] - cosij[pair_ok, None] * unit[fi][pair_ok]) \
        / norm[fi][pair_ok, None]
    coef_j[pair_ok] = -(unit[fi][pair_ok] - cosij[pair_ok, None] * unit[fj][pair_ok]) \
        / norm[fj][pair_ok, None]
    nf = len(tris)
    for col in range(3):
        gN[:, col] += np.bincount(fi, weights=coef_i[:, col], minlength=nf)
        gN[:, col] += np.bincount(fj, weights=coef_j[:, col], minlength=nf)

    grad = np.zeros_like(pos)
    _scatter_add(grad, tris[:, 0], np.cross(b - c, gN))
    _scatter_add(grad, tris[:, 1], np.cross(c - a, gN))
    _scatter_add(grad, tris[:, 2], np.cross(a - b, gN))
    return value, grad, n_degenerate


def det_barrier(det, v0: float):
    """Volume barrier -(det - v0)^2 log(det / v0) for det <= v0, else 0.

    C2 at det = v0 (value and first two derivatives vanish) and divergent as
    det -> 0+.  Non-positive det returns the +inf sentinel: the element has
    already inverted and the optimizer must reject the step.
    """
    if v0 <= 0:
        raise ValueError("v0 must be > 0")
    det = np.asarray(det, dtype=np.float64)
    scalar = det.ndim == 0
    det = np.atleast_1d(det)
    value = np.zeros_like(det)
    deriv = np.zeros_like(det)
    bad = det <= 0.0
    value[bad] = np.inf
    deriv[bad] = np.nan
    active = (det > 0.0) & (det <= v0)
    if active.any():
        d = det[active]
        diff = d - v0
        logterm = np.log(d / v0)
        value[active] = -diff * diff * logterm
        deriv[active] = -2.0 * diff * logterm - diff * diff / d
    if scalar:
        return float(value[0]), float(deriv[0])
    return value, deriv


def orientation_energy(pos: np.ndarray, mesh: TetMesh, v0: float = 0.01):
    """Sum of the volume barrier over all tets, with the determinant gradient
    expanded onto the vertices.  Any non-positive determinant yields +inf."""
    tets = mesh.tets
    a = pos[tets[:, 0]]
    b = pos[tets[:, 1]] - a
    c = pos[tets[:, 2]] - a
    d = pos[tets[:, 3]] - a
    dets = np.einsum("ij,ij->i", b, np.cross(c, d))
    if (dets <= 0.0).any():
        return np.inf, np.full_like(pos, np.nan)
    lval, lder = det_barrier(dets, v0)
    value = float(lval.sum())
    grad = np.zeros_like(pos)
    active = lder != 0.0
    if active.any():
        t = tets[active]
        w = lder[active, None]
        ba, ca, da = b[active], c[active], d[active]
        gb = np.cross(ca, da)
        gc = np.cross(da, ba)
        gd = np.cross(ba, ca)
        _scatter_add(grad, t[:, 1], w * gb)
        _scatter_add(grad, t[:, 2], w * gc)
        _scatter_add(grad, t[:, 3], w * gd)
        _scatter_add(grad, t[:, 0], -w * (gb + gc + gd))
    return value, grad


def projection_energy(surf_pos: np.ndarray, targets: np.ndarray,
                      noise: np.ndarray | None = None, k: float = 0.0):
    """Sum over boundary vertices of || v - target + k n ||_2 (not squared).

    Targets are constants: no gradient flows into whatever produced them.
    The gradient per vertex is the unit residual direction, with subgradient
    0 at exactly zero residual.
    """
    resid = surf_pos - targets
    if k != 0.0:
        if noise is None:
            raise ValueError("noise array required when k != 0")
        resid = resid + k * noise
    dist = np.linalg.norm(resid, axis=1)
    value = float(dist.sum())
    grad = np.zeros_like(surf_pos)
    nz = dist > 0.0
    grad[nz] = resid[nz] / dist[nz, None]
    return value, grad


def robust_projection(mesh: TetMesh, predictor, grid=None, k: float = 0.0,
                      rng: np.random.Generator | None = None):
    """Projection term evaluated at the mesh's current boundary vertices,
    drawing one fresh standard-normal 3-vector per vertex."""
    ids = mesh.surface_vertex_ids
    surf = mesh.vertices[ids]
    targets = np.asarray(predictor(grid, surf), dtype=np.float64)
    noise = None
    if k != 0.0:
        if rng is None:
            raise ValueError("rng required when k != 0")
        noise = rng.standard_normal(surf.shape)
    value, gsurf = projection_energy(surf, targets, noise, k)
    grad = np.zeros_like(mesh.vertices)
    grad[ids] = gsurf
    return value, grad
