"""Command-line pipeline: voxelize -> tetmesh -> deform -> quality, plus
grid editing, diffusion sampling, and closest-point training data.

Every subcommand validates and loads its inputs fully before writing any
output, writes files atomically (temp + rename), and reports failures as a
single JSON object on stderr with a nonzero exit code.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, replace

import numpy as np

from . import meshio
from .closest import ExactClosestPoint, build_bvh, gen_training_samples, write_samples
from .deform import DeformConfig, optimize, write_trace
from .diffusion import linear_schedule, sample_grid
from .quality import mesh_quality_report, report_table
from .tetmesh import build_tet_mesh, from_tets
from .voxel import (GridCoord, VoxelGrid, combine, edit_region,
                    normalize_to_unit_cube, read_grid, voxelize_mesh,
                    write_grid)

__all__ = ["main", "PipelineConfig"]


@dataclass
class PipelineConfig:
    """Resolved settings of one deform invocation, echoed for provenance."""
    resolution: int
    input_grid: str
    reference_surface: str
    output_mesh: str
    trace_path: str | None
    predictor: str  # "exact-oracle" (the CLI seam for external predictors is the API)
    deform: DeformConfig


def _atomic_write(path, writer) -> None:
    tmp = str(path) + ".tmp"
    writer(tmp)
    os.replace(tmp, path)


def _load_surface_in_grid_units(path, grid: VoxelGrid):
    """Reference surface -> the grid's voxel-index coordinates, applying the
    same unit-cube normalization the voxelizer used."""
    verts, faces = meshio.read_surface(path)
    verts = normalize_to_unit_cube(verts)
    return grid.frame.to_index(verts), faces


def cmd_voxelize(args) -> None:
    verts, faces = meshio.read_surface(args.input)
    grid = voxelize_mesh(verts, faces, args.resolution, shell=args.shell)
    _atomic_write(args.output, lambda p: write_grid(grid, p))


def cmd_tetmesh(args) -> None:
    grid = read_grid(args.input)
    mesh = build_tet_mesh(grid)
    world = mesh.world_vertices()
    out = str(args.output)
    if out.endswith(".vtk"):
        _atomic_write(out, lambda p: meshio.write_vtk(p, world, mesh.tets,
                                                      mesh.cube_of_tet))
    else:
        _atomic_write(out, lambda p: meshio.write_medit(
            p, world, mesh.tets, mesh.surface_tris, mesh.cube_of_tet))
    if args.surface:
        sverts = world
        _atomic_write(args.surface,
                      lambda p: meshio.write_obj(p, sverts, mesh.surface_tris))


def _deform_config_from_args(args) -> DeformConfig:
    cfg = DeformConfig.from_json(args.config) if args.config else DeformConfig()
    overrides = {}
    for name in ("steps", "seed", "step_size", "k0", "lambda_a", "lambda_b",
                 "lambda_c", "v0"):
        val = getattr(args, name)
        if val is not None:
            overrides[name] = val
    if args.no_barrier:
        overrides["use_barrier"] = False
    return replace(cfg, **overrides) if overrides else cfg


def cmd_deform(args) -> None:
    grid = read_grid(args.input)
    cfg = _deform_config_from_args(args)
    ref_verts, ref_faces = _load_surface_in_grid_units(args.oracle, grid)
    predictor = ExactClosestPoint(build_bvh(ref_verts, ref_faces))
    mesh = build_tet_mesh(grid)
    deformed, trace = optimize(mesh, predictor, cfg, grid)

    world = deformed.world_vertices()
    out = str(args.output)
    if out.endswith(".vtk"):
        _atomic_write(out, lambda p: meshio.write_vtk(p, world, deformed.tets,
                                                      deformed.cube_of_tet))
    else:
        _atomic_write(out, lambda p: meshio.write_medit(
            p, world, deformed.tets, deformed.surface_tris, deformed.cube_of_tet))
    if args.trace:
        _atomic_write(args.trace, lambda p: write_trace(trace, p))

    pipe = PipelineConfig(
        resolution=grid.resolution,
        input_grid=str(args.input),
        reference_surface=str(args.oracle),
        output_mesh=out,
        trace_path=str(args.trace) if args.trace else None,
        predictor="exact-oracle",
        deform=cfg,
    )
    stem = os.path.splitext(os.path.basename(out))[0]
    echo = os.path.join(os.path.dirname(out) or ".", stem + ".config.json")
    payload = json.dumps(asdict(pipe), indent=2, sort_keys=True) + "\n"
    _atomic_write(echo, lambda p: open(p, "w").write(payload))


def cmd_quality(args) -> None:
    verts, tets, _tris, tet_refs = meshio.read_medit(args.input)
    mesh = from_tets(verts, tets, cube_of_tet=tet_refs)
    report = mesh_quality_report(mesh)
    _atomic_write(args.output, lambda p: report.to_json(p))
    if args.table:
        sys.stdout.write(report_table(report))


def cmd_edit(args) -> None:
    grid = read_grid(args.input)
    if args.set is not None or args.clear is not None:
        box = args.set if args.set is not None else args.clear
        lo = GridCoord(*box[:3])
        hi = GridCoord(*box[3:])
        grid = edit_region(grid, lo, hi, value=args.set is not None)
    elif args.op:
        other = read_grid(args.combine_with)
        grid = combine(grid, other, args.op)
    else:
        raise ValueError("nothing to do: pass --set/--clear or --op")
    _atomic_write(args.output, lambda p: write_grid(grid, p))


def _builtin_denoiser(name: str, sched):
    if name == "zero":
        return lambda x, t: np.zeros_like(x)

    sign = 1.0 if name == "pin-solid" else -1.0

    def pinned(x, t):
        ab = sched.alpha_bar[t - 1]
        return (x - np.sqrt(ab) * sign) / np.sqrt(1.0 - ab)

    return pinned


def cmd_sample(args) -> None:
    sched = linear_schedule(args.steps, args.beta_start, args.beta_end)
    denoiser = _builtin_denoiser(args.denoiser, sched)
    rng = np.random.default_rng(args.seed)
    grid = sample_grid(denoiser, sched, args.resolution, rng, args.threshold)
    _atomic_write(args.output, lambda p: write_grid(grid, p))


def cmd_gen_cp_data(args) -> None:
    grid = read_grid(args.input)
    ref_verts, ref_faces = _load_surface_in_grid_units(args.surface, grid)
    bvh = build_bvh(ref_verts, ref_faces)
    mesh = build_tet_mesh(grid)
    samples = gen_training_samples(mesh, bvh, args.count, args.sigma, args.seed)
    _atomic_write(args.output, lambda p: write_samples(samples, p))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="voxmesh", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("voxelize", help="triangle surface -> binary voxel grid")
    v.add_argument("input", help="OBJ or OFF closed triangle mesh")
    v.add_argument("-r", "--resolution", type=int, required=True)
    v.add_argument("-o", "--output", required=True, help=".vox grid file")
    v.add_argument("--shell", action="store_true",
                   help="keep only the one-voxel-thick outer layer")
    v.set_defaults(fn=cmd_voxelize)

    t = sub.add_parser("tetmesh", help="voxel grid -> tetrahedral mesh")
    t.add_argument("input", help=".vox grid file")
    t.add_argument("-o", "--output", required=True,
                   help=".mesh (MEDIT) or .vtk output")
    t.add_argument("--surface", help="also export the boundary surface as OBJ")
    t.set_defaults(fn=cmd_tetmesh)

    d = sub.add_parser("deform", help="project a tet mesh onto a reference surface")
    d.add_argument("input", help=".vox grid file")
    d.add_argument("--oracle", required=True,
                   help="reference surface (OBJ/OFF) for the exact closest-point oracle")
    d.add_argument("-c", "--config", help="JSON file mirroring DeformConfig")
    d.add_argument("-o", "--output", required=True, help=".mesh / .vtk output")
    d.add_argument("--trace", help="per-step loss trace CSV")
    d.add_argument("--steps", type=int)
    d.add_argument("--seed", type=int)
    d.add_argument("--step-size", dest="step_size", type=float)
    d.add_argument("--k0", type=float)
    d.add_argument("--lambda-a", dest="lambda_a", type=float)
    d.add_argument("--lambda-b", dest="lambda_b", type=float)
    d.add_argument("--lambda-c", dest="lambda_c", type=float)
    d.add_argument("--v0", type=float)
    d.add_argument("--no-barrier", action="store_true",
                   help="disable the orientation barrier and flip rejection")
    d.set_defaults(fn=cmd_deform)

    q = sub.add_parser("quality", help="audit a tetrahedral mesh")
    q.add_argument("input", help="MEDIT .mesh file")
    q.add_argument("-o", "--output", required=True, help="JSON report path")
    q.add_argument("--table", action="store_true",
                   help="also print the aligned text table")
    q.set_defaults(fn=cmd_quality)

    e = sub.add_parser("edit", help="edit voxel boxes or combine grids")
    e.add_argument("input", help=".vox grid file")
    e.add_argument("--set", nargs=6, type=int,
                   metavar=("LOX", "LOY", "LOZ", "HIX", "HIY", "HIZ"))
    e.add_argument("--clear", nargs=6, type=int,
                   metavar=("LOX", "LOY", "LOZ", "HIX", "HIY", "HIZ"))
    e.add_argument("--op", choices=("union", "difference", "intersection"))
    e.add_argument("--with", dest="combine_with", help="second grid for --op")
    e.add_argument("-o", "--output", required=True)
    e.set_defaults(fn=cmd_edit)

    s = sub.add_parser("sample", help="draw a voxel grid from the reverse diffusion chain")
    s.add_argument("-r", "--resolution", type=int, required=True)
    s.add_argument("--steps", type=int, default=1000)
    s.add_argument("--beta-start", dest="beta_start", type=float, default=1e-4)
    s.add_argument("--beta-end", dest="beta_end", type=float, default=0.02)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--threshold", type=float, default=0.0)
    s.add_argument("--denoiser", choices=("zero", "pin-solid", "pin-empty"),
                   default="zero",
                   help="built-in test denoisers; trained models plug in via the API")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(fn=cmd_sample)

    g = sub.add_parser("gen-cp-data",
                       help="closest-point training samples along projection segments")
    g.add_argument("input", help=".vox grid file")
    g.add_argument("--surface", required=True, help="ground-truth surface (OBJ/OFF)")
    g.add_argument("-n", "--count", type=int, default=75000)
    g.add_argument("--sigma", type=float, default=0.5,
                   help="jitter stddev in voxel-edge units")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output", required=True,
                   help="binary sample records (magic NVMGCPS1)")
    g.set_defaults(fn=cmd_gen_cp_data)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.fn(args)
    except Exception as exc:  # report machine-readably, fail nonzero
        sys.stderr.write(json.dumps({"error": str(exc),
                                     "type": type(exc).__name__}) + "\n")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
