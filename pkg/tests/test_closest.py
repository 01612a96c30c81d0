import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import voxmesh as vm
from voxmesh import shapes
from voxmesh.closest import (CpSamples, brute_force_closest_points,
                             build_bvh, closest_point, closest_points,
                             gen_training_samples, read_samples, write_samples)

from conftest import grid_from_coords

finite_coord = st.floats(-3.0, 3.0, allow_nan=False)
point3 = st.tuples(finite_coord, finite_coord, finite_coord)


@pytest.fixture(scope="module")
def sphere_bvh():
    v, f = shapes.icosphere(3, 1.0)
    return build_bvh(v, f), v, f


def test_bvh_single_triangle_is_one_leaf():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0]], dtype=float)
    f = np.array([[0, 1, 2]])
    bvh = build_bvh(v, f)
    assert bvh.n_nodes == 1
    assert bvh.left[0] == -1 and bvh.count[0] == 1


def test_bvh_cube_structure():
    v, f = shapes.box_mesh()
    bvh = build_bvh(v, f)
    # every triangle in exactly one leaf
    assert sorted(bvh.leaf_tris.tolist()) == list(range(12))
    assert np.allclose(bvh.node_min[0], [0, 0, 0])
    assert np.allclose(bvh.node_max[0], [1, 1, 1])
    leaves = bvh.left == -1
    assert (bvh.count[leaves] <= 4).all()
    # child boxes nest inside their parents
    for node in range(bvh.n_nodes):
        if bvh.left[node] < 0:
            continue
        for ch in (bvh.left[node], bvh.right[node]):
            assert (bvh.node_min[ch] >= bvh.node_min[node] - 1e-12).all()
            assert (bvh.node_max[ch] <= bvh.node_max[node] + 1e-12).all()


def test_bvh_all_degenerate_errors():
    v = np.zeros((3, 3))
    f = np.array([[0, 1, 2]])
    with pytest.raises(ValueError, match="degenerate"):
        build_bvh(v, f)


def test_bvh_query_sublinear_on_10k_triangles():
    v, f = shapes.torus_mesh(0.35, 0.1, 100, 50)
    assert len(f) == 10000
    bvh = build_bvh(v, f)
    rng = np.random.default_rng(5)
    q = rng.uniform(-0.6, 0.6, (100, 3))
    _, _, visits = closest_points(bvh, q, with_stats=True)
    assert visits.mean() < 0.05 * len(f)


def test_closest_point_radial_on_sphere(sphere_bvh):
    bvh, _, _ = sphere_bvh
    x = np.array([0.0, 0.0, 2.0])
    s = closest_point(bvh, x)
    assert np.linalg.norm(s.target - np.array([0, 0, 1.0])) < 5e-3
    assert abs(np.linalg.norm(s.target - x) - 1.0) < 5e-3


def test_closest_point_on_surface_is_fixed(sphere_bvh):
    bvh, v, _ = sphere_bvh
    cp, _ = closest_points(bvh, v[:20])
    assert np.abs(cp - v[:20]).max() < 1e-12


def test_closest_point_matches_brute_force(sphere_bvh):
    bvh, v, f = sphere_bvh
    rng = np.random.default_rng(11)
    q = rng.standard_normal((500, 3)) * 1.3
    cp_t, tri_t = closest_points(bvh, q)
    cp_b, tri_b = brute_force_closest_points(v, f, q)
    d_t = np.linalg.norm(cp_t - q, axis=1)
    d_b = np.linalg.norm(cp_b - q, axis=1)
    assert np.abs(d_t - d_b).max() < 1e-12
    assert (tri_t == tri_b).all()  # includes the lowest-index tie rule


def test_tie_break_goes_to_lowest_triangle_index():
    # two triangles symmetric about z=0; a query on the plane is equidistant
    v = np.array([[0, 0, 1], [1, 0, 1], [0, 1, 1],
                  [0, 0, -1], [1, 0, -1], [0, 1, -1]], dtype=float)
    f = np.array([[0, 1, 2], [3, 4, 5]])
    bvh = build_bvh(v, f)
    _, tri = closest_points(bvh, np.array([[0.2, 0.2, 0.0]]))
    assert tri[0] == 0
    _, tri_b = brute_force_closest_points(v, f, np.array([[0.2, 0.2, 0.0]]))
    assert tri_b[0] == 0


def test_non_finite_query_errors(sphere_bvh):
    bvh, _, _ = sphere_bvh
    with pytest.raises(ValueError):
        closest_points(bvh, np.array([[np.nan, 0, 0]]))


@given(point3)
@settings(max_examples=50, deadline=None)
def test_idempotence(p):
    v, f = shapes.icosphere(2, 1.0)
    bvh = build_bvh(v, f)
    cp1, _ = closest_points(bvh, np.asarray(p))
    cp2, _ = closest_points(bvh, cp1)
    assert np.abs(cp2 - cp1).max() < 1e-12


@given(point3, point3)
@settings(max_examples=50, deadline=None)
def test_distance_field_is_1_lipschitz(p, q):
    v, f = shapes.icosphere(2, 1.0)
    bvh = build_bvh(v, f)
    pts = np.array([p, q], dtype=float)
    cp, _ = closest_points(bvh, pts)
    d = np.linalg.norm(cp - pts, axis=1)
    assert abs(d[0] - d[1]) <= np.linalg.norm(pts[0] - pts[1]) + 1e-12


def test_oracle_beats_dense_surface_sampling(sphere_bvh):
    bvh, v, f = sphere_bvh
    rng = np.random.default_rng(3)
    q = rng.standard_normal((50, 3)) * 1.5
    cp, _ = closest_points(bvh, q)
    d = np.linalg.norm(cp - q, axis=1)
    surf = vm.sample_surface(v, f, 4000, seed=9)
    for i in range(len(q)):
        assert d[i] <= np.linalg.norm(surf - q[i], axis=1).min() + 1e-12


class _ForcedRng:
    """Deterministic stand-in driving alpha to a fixed value, no jitter."""

    def __init__(self, alpha, n_vertices):
        self.alpha = alpha
        self.n_vertices = n_vertices

    def integers(self, lo, hi, size):
        return np.arange(size) % self.n_vertices

    def uniform(self, lo, hi, size):
        return np.full(size, self.alpha)

    def standard_normal(self, shape):
        return np.zeros(shape)


def test_training_samples_segment_endpoints(monkeypatch, sphere_bvh):
    bvh, _, _ = sphere_bvh
    grid = grid_from_coords([(1, 1, 1)], 4)
    mesh = vm.build_tet_mesh(grid)
    nsurf = len(mesh.surface_vertex_ids)

    for alpha in (1.0, 0.0):
        monkeypatch.setattr(np.random, "default_rng",
                            lambda seed=None, a=alpha: _ForcedRng(a, nsurf))
        got = gen_training_samples(mesh, bvh, n=8, jitter_sigma=0.0, seed=0)
        vs = mesh.vertices[mesh.surface_vertex_ids[np.arange(8) % nsurf]]
        ps, _ = closest_points(bvh, vs)
        if alpha == 1.0:
            assert np.allclose(got.query, vs)
        else:
            assert np.allclose(got.query, ps)
        assert np.allclose(got.target, ps)  # endpoint targets are CP(x)


def test_training_samples_band_and_determinism():
    v, f = shapes.icosphere(3, 0.5, (0.5, 0.5, 0.5))
    grid = vm.voxelize_mesh(v, f, 8)
    mesh = vm.build_tet_mesh(grid)
    bvh = build_bvh(grid.frame.to_index(v), f)
    sigma = 0.5
    a = gen_training_samples(mesh, bvh, 2000, sigma, seed=42)
    b = gen_training_samples(mesh, bvh, 2000, sigma, seed=42)
    assert np.array_equal(a.query, b.query) and np.array_equal(a.target, b.target)
    assert len(a) == 2000
    d = np.linalg.norm(a.query - a.target, axis=1)
    assert d.max() <= np.sqrt(3.0) + 3 * sigma  # voxel diagonal + 3 sigma
    c = gen_training_samples(mesh, bvh, 2000, sigma, seed=43)
    assert not np.array_equal(a.query, c.query)


def test_training_samples_errors(sphere_bvh):
    bvh, _, _ = sphere_bvh
    mesh = vm.build_tet_mesh(grid_from_coords([(0, 0, 0)], 2))
    with pytest.raises(ValueError):
        gen_training_samples(mesh, bvh, 0)


def test_sample_file_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    s = CpSamples(query=rng.standard_normal((10, 3)),
                  target=rng.standard_normal((10, 3)))
    p = tmp_path / "s.bin"
    write_samples(s, p)
    raw = p.read_bytes()
    assert raw[:8] == b"NVMGCPS1"
    assert len(raw) == 8 + 10 * 48
    back = read_samples(p)
    assert np.array_equal(back.query, s.query)
    assert np.array_equal(back.target, s.target)


def test_sample_file_errors(tmp_path):
    p = tmp_path / "bad.bin"
    p.write_bytes(b"WRONGMAG" + b"\0" * 48)
    with pytest.raises(ValueError, match="magic"):
        read_samples(p)
    p.write_bytes(b"NVMGCPS1" + b"\0" * 47)
    with pytest.raises(ValueError, match="truncated"):
        read_samples(p)
