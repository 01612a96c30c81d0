"""voxmesh: voxel grids -> face-consistent tetrahedral meshes -> regularized
projection onto a reference surface, with quality auditing."""

from .voxel import (Frame, GridCoord, VoxelGrid, combine, edit_region,
                    normalize_to_unit_cube, read_grid, voxelize_mesh,
                    write_grid)
from .tetmesh import TetMesh, build_tet_mesh, extract_surface, from_tets, tet_det, tet_dets
from .closest import (ClosestPointPredictor, CpSample, CpSamples,
                      ExactClosestPoint, TriangleBvh, build_bvh,
                      closest_point, closest_points, gen_training_samples,
                      read_samples, write_samples)
from .diffusion import (Denoiser, NoiseSchedule, ddpm_loss, forward_sample,
                        linear_schedule, reverse_step, sample_grid)
from .energy import (det_barrier, edge_energy, laplacian_energy,
                     normal_energy, orientation_energy, projection_energy,
                     robust_projection)
from .deform import (BacktrackingError, DeformConfig, ObjectiveBreakdown,
                     StepRecord, optimize, write_trace)
from .quality import (BatchReport, QualityReport, batch_report,
                      chamfer_distance, count_flipped_tets,
                      count_flipped_triangles, count_self_intersections,
                      mesh_quality_report, report_table, sample_surface,
                      tet_ar, triangle_ar)

__version__ = "0.1.0"
