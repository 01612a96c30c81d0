import numpy as np
import pytest

import voxmesh as vm


def grid_from_coords(coords, r):
    occ = np.zeros((r, r, r), dtype=bool)
    for x, y, z in coords:
        occ[x, y, z] = True
    return vm.VoxelGrid(occ, vm.Frame.normalized(r))


_FACE_STEPS = np.array([(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0),
                        (0, 0, 1), (0, 0, -1)])


def random_small_grid(rng, max_voxels=3, r=4):
    """Face-connected solid of 1..max_voxels cells (random walk growth)."""
    n = int(rng.integers(1, max_voxels + 1))
    occ = np.zeros((r, r, r), dtype=bool)
    cur = rng.integers(1, r - 1, size=3)
    occ[tuple(cur)] = True
    for _ in range(n - 1):
        step = _FACE_STEPS[rng.integers(0, 6)]
        cur = np.clip(cur + step, 0, r - 1)
        occ[tuple(cur)] = True
    return vm.VoxelGrid(occ, vm.Frame.normalized(r))


@pytest.fixture
def single_voxel_mesh():
    return vm.build_tet_mesh(grid_from_coords([(0, 0, 0)], 2))


@pytest.fixture
def two_voxel_mesh():
    # face-sharing pair along x
    return vm.build_tet_mesh(grid_from_coords([(0, 0, 0), (1, 0, 0)], 2))


@pytest.fixture
def solid_cube_grid():
    occ = np.ones((2, 2, 2), dtype=bool)
    return vm.VoxelGrid(occ, vm.Frame.normalized(2))
