import numpy as np
import pytest

import voxmesh as vm
from voxmesh import energy, shapes
from voxmesh.tetmesh import from_tets

from conftest import grid_from_coords, random_small_grid


def finite_difference_gradient(fn, pos, h=1e-5):
    fd = np.zeros_like(pos)
    for i in range(pos.shape[0]):
        for c in range(3):
            pp = pos.copy()
            pp[i, c] += h
            pm = pos.copy()
            pm[i, c] -= h
            fd[i, c] = (fn(pp) - fn(pm)) / (2 * h)
    return fd


def rel_grad_error(grad, fd):
    return np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12)


def perturbed_mesh(seed, sigma=0.08):
    rng = np.random.default_rng(seed)
    mesh = vm.build_tet_mesh(random_small_grid(rng, max_voxels=3))
    pos = mesh.vertices + sigma * rng.standard_normal(mesh.vertices.shape)
    if mesh.tet_dets(pos).min() <= 0:  # keep the barrier domain valid
        pos = mesh.vertices + 0.02 * rng.standard_normal(mesh.vertices.shape)
    return mesh, pos, rng


# --- edge term ---------------------------------------------------------------

def test_edge_energy_single_voxel_value(single_voxel_mesh):
    # 12 unit edges + 6 sqrt2 face diagonals + 1 sqrt3 main diagonal
    val, _ = energy.edge_energy(single_voxel_mesh.vertices, single_voxel_mesh)
    assert val == pytest.approx(12 * 1 + 6 * 2 + 1 * 3)


def test_edge_energy_coincident_and_scaling(single_voxel_mesh):
    m = single_voxel_mesh
    val0, _ = energy.edge_energy(np.zeros_like(m.vertices), m)
    assert val0 == 0.0
    base, _ = energy.edge_energy(m.vertices, m)
    scaled, _ = energy.edge_energy(2.5 * m.vertices, m)
    assert scaled == pytest.approx(2.5 ** 2 * base)


# --- laplacian term ----------------------------------------------------------

def test_laplacian_zero_at_symmetric_interior_vertex():
    solid = vm.build_tet_mesh(grid_from_coords(
        [(x, y, z) for x in range(3) for y in range(3) for z in range(3)], 3))
    interior = np.nonzero(~solid.surface_vertex_flags)[0]
    assert len(interior) == 8
    # fresh lattice: every interior vertex has a symmetric neighborhood
    val, grad = energy.laplacian_energy(solid.vertices, solid)
    deg = np.diff(solid.vol_off)
    seg = np.repeat(np.arange(solid.n_vertices), deg)
    sums = np.zeros_like(solid.vertices)
    for c in range(3):
        sums[:, c] = np.bincount(seg, solid.vertices[solid.vol_nbr, c],
                                 minlength=solid.n_vertices)
    delta = sums / deg[:, None]
    assert np.abs(delta[interior] - solid.vertices[interior]).max() < 1e-12


def test_laplacian_translation_invariance(two_voxel_mesh):
    m = two_voxel_mesh
    rng = np.random.default_rng(0)
    pos = m.vertices + 0.1 * rng.standard_normal(m.vertices.shape)
    v1, g1 = energy.laplacian_energy(pos, m)
    v2, g2 = energy.laplacian_energy(pos + np.array([3.0, -1.0, 2.0]), m)
    assert v1 == pytest.approx(v2, abs=1e-10)
    assert np.allclose(g1, g2, atol=1e-10)


def test_laplacian_gradient_matches_fd(two_voxel_mesh):
    m = two_voxel_mesh
    rng = np.random.default_rng(4)
    pos = m.vertices + 0.1 * rng.standard_normal(m.vertices.shape)
    val, grad = energy.laplacian_energy(pos, m)
    fd = finite_difference_gradient(
        lambda p: energy.laplacian_energy(p, m)[0], pos)
    assert rel_grad_error(grad, fd) < 1e-6


# --- normal term -------------------------------------------------------------

def test_normal_energy_fresh_cube_is_12(single_voxel_mesh):
    # 18 adjacent pairs: 6 coplanar diagonal pairs (cos 1) + 12 edge pairs
    # at 90 degrees (cos 0)
    m = single_voxel_mesh
    assert len(m.surface_pairs) == 18
    val, _, nd = energy.normal_energy(m.vertices, m)
    assert val == pytest.approx(12.0)
    assert nd == 0


def test_normal_energy_zero_area_fallback(single_voxel_mesh):
    m = single_voxel_mesh
    pos = m.vertices.copy()
    tri = m.surface_tris[0]
    pos[tri] = pos[tri[0]]  # collapse one face
    val, grad, nd = energy.normal_energy(pos, m)
    assert np.isfinite(val)
    assert nd >= 1
    assert np.isfinite(grad).all()


def test_normal_energy_rigid_invariance(single_voxel_mesh):
    m = single_voxel_mesh
    th = 0.7
    rot = np.array([[np.cos(th), -np.sin(th), 0],
                    [np.sin(th), np.cos(th), 0],
                    [0, 0, 1.0]])
    v1, _, _ = energy.normal_energy(m.vertices, m)
    v2, _, _ = energy.normal_energy(m.vertices @ rot.T + 5.0, m)
    assert v1 == pytest.approx(v2, abs=1e-10)


# --- barrier -----------------------------------------------------------------

def test_barrier_zero_above_threshold():
    val, der = energy.det_barrier(0.02, 0.01)
    assert val == 0.0 and der == 0.0


def test_barrier_smooth_at_threshold():
    val, der = energy.det_barrier(0.01, 0.01)
    assert val == 0.0 and der == 0.0
    # second derivative also vanishes: slope of the derivative tends to 0
    h = 1e-7
    _, d_lo = energy.det_barrier(0.01 - h, 0.01)
    assert abs(d_lo) < 1e-5


def test_barrier_reference_value():
    val, _ = energy.det_barrier(0.005, 0.01)
    assert val == pytest.approx(-0.005 ** 2 * np.log(0.5), abs=1e-12)
    assert val == pytest.approx(1.7328679513998632e-05, abs=1e-9)


def test_barrier_diverges_monotonically_toward_zero():
    dets = np.logspace(-12, -2-1e-9, 60)
    vals, _ = energy.det_barrier(dets, 0.01)
    assert (np.diff(vals) < 0).all()          # decreasing in det
    assert vals[0] > 1e3 * vals[-1]
    v0_sentinel, d = energy.det_barrier(0.0, 0.01)
    assert np.isposinf(v0_sentinel)
    assert np.isposinf(energy.det_barrier(-1.0, 0.01)[0])


def test_barrier_derivative_matches_fd():
    for det in (0.002, 0.005, 0.009):
        val, der = energy.det_barrier(det, 0.01)
        h = 1e-9
        fd = (energy.det_barrier(det + h, 0.01)[0]
              - energy.det_barrier(det - h, 0.01)[0]) / (2 * h)
        assert der == pytest.approx(fd, rel=1e-5)


def test_barrier_invalid_v0():
    with pytest.raises(ValueError):
        energy.det_barrier(0.5, 0.0)


# --- orientation term --------------------------------------------------------

def test_orientation_inactive_on_fresh_mesh(two_voxel_mesh):
    val, grad = energy.orientation_energy(two_voxel_mesh.vertices,
                                          two_voxel_mesh, 0.01)
    assert val == 0.0
    assert not grad.any()


def test_orientation_single_squashed_tet():
    # one isolated tet with det exactly 0.005
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 0.005]])
    mesh = from_tets(verts, np.array([[0, 1, 2, 3]]))
    val, _ = energy.orientation_energy(mesh.vertices, mesh, 0.01)
    assert val == pytest.approx(energy.det_barrier(0.005, 0.01)[0])


def test_orientation_inf_sentinel_on_flip(single_voxel_mesh):
    m = single_voxel_mesh
    pos = m.vertices.copy()
    pos[:, 0] *= -1.0  # reflect: all dets negative
    val, _ = energy.orientation_energy(pos, m, 0.01)
    assert np.isposinf(val)


def test_orientation_gradient_matches_fd(single_voxel_mesh):
    # v0 = 2 forces the barrier active on the fresh unit tets
    m = single_voxel_mesh
    rng = np.random.default_rng(8)
    pos = m.vertices + 0.05 * rng.standard_normal(m.vertices.shape)
    val, grad = energy.orientation_energy(pos, m, 2.0)
    assert val > 0
    fd = finite_difference_gradient(
        lambda p: energy.orientation_energy(p, m, 2.0)[0], pos)
    assert rel_grad_error(grad, fd) < 1e-6


# --- projection term ---------------------------------------------------------

def test_projection_zero_when_on_target():
    pos = np.array([[0.0, 0, 0], [1, 1, 1]])
    val, grad = energy.projection_energy(pos, pos.copy())
    assert val == 0.0
    assert not grad.any()  # subgradient at the kink is 0


def test_projection_single_vertex_distance():
    pos = np.array([[0.0, 0.0, 0.0]])
    tgt = np.array([[3.0, 4.0, 0.0]])
    val, grad = energy.projection_energy(pos, tgt)
    assert val == pytest.approx(5.0)
    assert grad[0] == pytest.approx([-0.6, -0.8, 0.0])


def test_projection_noise_requires_rng(single_voxel_mesh):
    ident = lambda grid, pts: pts
    with pytest.raises(ValueError):
        energy.robust_projection(single_voxel_mesh, ident, k=0.1)


def test_robust_projection_seeded_reproducibility(single_voxel_mesh):
    m = single_voxel_mesh
    pred = vm.ExactClosestPoint(vm.build_bvh(*shapes.icosphere(2, 2.0)))
    v1, g1 = energy.robust_projection(m, pred, None, 0.1,
                                      np.random.default_rng(77))
    v2, g2 = energy.robust_projection(m, pred, None, 0.1,
                                      np.random.default_rng(77))
    assert v1 == v2
    assert np.array_equal(g1, g2)
    v3, _ = energy.robust_projection(m, pred, None, 0.1,
                                     np.random.default_rng(78))
    assert v3 != v1


def test_projection_gradient_matches_fd(two_voxel_mesh):
    m = two_voxel_mesh
    rng = np.random.default_rng(14)
    ids = m.surface_vertex_ids
    pos = m.vertices + 0.05 * rng.standard_normal(m.vertices.shape)
    targets = pos[ids] + 0.4 * rng.standard_normal((len(ids), 3))
    val, gs = energy.projection_energy(pos[ids], targets)
    grad = np.zeros_like(pos)
    grad[ids] = gs

    def total(p):
        return energy.projection_energy(p[ids], targets)[0]

    fd = finite_difference_gradient(total, pos)
    assert rel_grad_error(grad, fd) < 1e-6


# --- translation invariance of every regularizer ----------------------------

def test_all_terms_translation_invariant():
    mesh, pos, _ = perturbed_mesh(3)
    shift = np.array([4.0, -2.0, 7.0])
    for fn in (lambda p: energy.edge_energy(p, mesh)[0],
               lambda p: energy.laplacian_energy(p, mesh)[0],
               lambda p: energy.normal_energy(p, mesh)[0],
               lambda p: energy.orientation_energy(p, mesh, 2.0)[0]):
        assert fn(pos) == pytest.approx(fn(pos + shift), abs=1e-9)
