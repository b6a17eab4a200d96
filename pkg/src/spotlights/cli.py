"""Command-line front end.

Subcommands cover the full pipeline: ``encode`` a mesh into an SPL depth
array, ``decode`` it back to an ordered cloud, ``eval`` metrics between two
clouds, ``consistency`` over a set of clouds, ``sweep`` ray-count/angle
trade-off reports, ``density`` profiles of the sampling analysis, and
``scan`` for single-viewpoint partial clouds used as demo inputs.

Conventions: data goes to stdout or to ``--out`` files, logs go to stderr.
Exit codes: 0 success, 2 I/O or file-format problems (argparse usage errors
also exit 2), 3 geometry or parameter-domain errors, 4 metrics that are
undefined for the given inputs (e.g. empty clouds).
"""

from __future__ import annotations

import argparse
import glob
import math
import sys
import time

import numpy as np

from . import density as density_mod
from .core import (
    GeometryError,
    PointCloud,
    bounding_sphere,
    normalize_to_unit_sphere,
)
from .io_formats import ParseError, SplFormatError, load_cloud, load_mesh, read_spl, save_cloud, write_spl
from .metrics import MetricError, MetricReport, accuracy, chamfer, completeness, consistency, hit_ratio
from .model import build_model, decode, encode
from .raycast import build_bvh, first_hit_batch
from .shapes import sample_surface

EXIT_IO = 2
EXIT_GEOMETRY = 3
EXIT_METRIC = 4

_DEFAULT_NORMS = {"chamfer": "l2", "completeness": "l2", "accuracy": "l1"}


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _angle_to_radians(angle_deg: float) -> float:
    if not 0.0 < angle_deg <= 90.0:
        raise ValueError("opening angle must be in (0, 90]")
    return math.radians(angle_deg)


def _parse_pair(text: str, sep: str, what: str) -> tuple[int, int]:
    parts = text.split(sep)
    if len(parts) != 2:
        raise ValueError(f"{what} must look like A{sep}B, got {text!r}")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ValueError(f"{what} must be two integers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t]
    except ValueError:
        raise ValueError(f"expected a comma-separated list of integers, got {text!r}") from None


def cmd_encode(args) -> int:
    mesh = load_mesh(args.mesh)
    omega = _angle_to_radians(args.angle)
    if args.primary < 1 or args.secondary < 1:
        raise ValueError("sampling counts must be at least 1")
    if args.no_normalize:
        frame = None
    else:
        frame = bounding_sphere(mesh)
        mesh = normalize_to_unit_sphere(mesh, frame)
    start = time.perf_counter()
    model = build_model(args.primary, args.secondary, omega)
    depths = encode(model, mesh, frame=frame, workers=args.workers)
    elapsed = time.perf_counter() - start
    write_spl(args.out, model, depths)
    _log(
        f"encoded {args.mesh} -> {args.out}: {model.n_rays} rays, "
        f"hit ratio {hit_ratio(depths):.4f}, {elapsed:.3f}s"
    )
    return 0


def cmd_decode(args) -> int:
    header, depths = read_spl(args.infile)
    model = build_model(header.n_primary, header.m_secondary, header.opening_angle)
    cloud = decode(model, depths, clip_threshold=args.clip, world_frame=args.world_frame)
    if len(cloud) == 0:
        _log(f"warning: {args.infile} decodes to an empty cloud (all rays missed or clipped)")
    save_cloud(args.out, cloud)
    _log(f"decoded {args.infile} -> {args.out}: {len(cloud)} points (clip {args.clip})")
    return 0


def cmd_eval(args) -> int:
    pred = load_cloud(args.pred)
    gt = load_cloud(args.gt)
    norm = args.norm or _DEFAULT_NORMS[args.metric]
    fn = {"chamfer": chamfer, "accuracy": accuracy, "completeness": completeness}[args.metric]
    value = fn(pred, gt, norm=norm)
    print(MetricReport(args.metric, value, norm, len(pred), len(gt)).as_csv_row())
    return 0


def cmd_consistency(args) -> int:
    paths = sorted(glob.glob(args.glob))
    if len(paths) < 2:
        raise MetricError(f"consistency needs at least two clouds, glob matched {len(paths)}")
    clouds = [load_cloud(p) for p in paths]
    value = consistency(clouds, norm=args.norm)
    print(f"consistency,{args.norm},{value:.12g},{len(clouds)}")
    return 0


def cmd_sweep(args) -> int:
    patterns = ("*.obj", "*.ply")
    mesh_paths = sorted(p for pat in patterns for p in glob.glob(f"{args.mesh_dir}/{pat}"))
    if not mesh_paths:
        raise FileNotFoundError(f"no meshes (.obj/.ply) found in {args.mesh_dir}")
    rays_list = _int_list(args.rays)
    angle_list = _int_list(args.angles)
    rows = []
    succeeded = 0
    for path in mesh_paths:
        try:
            mesh = load_mesh(path)
            frame = bounding_sphere(mesh)
            unit = normalize_to_unit_sphere(mesh, frame)
            bvh = build_bvh(unit)
        except (OSError, ParseError, GeometryError) as exc:
            _log(f"warning: skipping {path}: {exc}")
            continue
        dense = sample_surface(unit, args.gt_points, seed=args.seed)
        for total_rays in rays_list:
            n_primary = max(1, total_rays // args.secondary)
            for angle in angle_list:
                model = build_model(n_primary, args.secondary, _angle_to_radians(angle))
                depths = encode(model, unit, bvh=bvh)
                cloud = decode(model, depths, clip_threshold=0.0)
                if len(cloud) == 0:
                    _log(f"warning: {path} at {model.n_rays} rays / {angle} deg hit nothing")
                    continue
                rows.append(
                    f"{path},{model.n_rays},{angle},"
                    f"{completeness(cloud, dense):.12g},{hit_ratio(depths):.12g}"
                )
        succeeded += 1
    if succeeded == 0:
        raise GeometryError("no mesh in the directory could be processed")
    with open(args.out, "w", encoding="ascii") as fh:
        fh.write(f"# gt_points={args.gt_points} seed={args.seed} secondary={args.secondary}\n")
        fh.write("mesh,rays,angle_deg,completeness,hit_ratio\n")
        fh.write("\n".join(rows) + "\n")
    _log(f"sweep over {succeeded} meshes -> {args.out} ({len(rows)} rows)")
    return 0


def cmd_density(args) -> int:
    r_steps, alpha_steps = _parse_pair(args.grid, "x", "--grid")
    res = _parse_pair(args.resolution, "x", "--resolution")
    profile = density_mod.density_profile(r_steps, alpha_steps, resolution=res, r_max=args.rmax)
    mc = None
    if args.monte_carlo:
        parts = _int_list(args.monte_carlo)
        if len(parts) != 3:
            raise ValueError("--monte-carlo must be N,M,seed")
        n_src, m_rays, seed = parts
        mc = np.empty_like(profile.rho)
        for i, r in enumerate(profile.r):
            for j, a in enumerate(profile.alpha):
                mc[i, j] = density_mod.density_monte_carlo(
                    density_mod.SurfelParams(float(r), float(a)), n_src, m_rays, seed
                )
    profile.to_csv(args.out, monte_carlo=mc)
    _log(
        f"density grid {r_steps}x{alpha_steps} (r <= {args.rmax}) -> {args.out}: "
        f"min {profile.rho.min():.6f} max {profile.rho.max():.6f}"
    )
    return 0


def cmd_scan(args) -> int:
    mesh = load_mesh(args.mesh)
    viewpoint = np.array([float(t) for t in args.viewpoint.split(",")], dtype=np.float64)
    if viewpoint.shape != (3,):
        raise ValueError("--viewpoint must be X,Y,Z")
    if not 0.0 < args.fov < 180.0:
        raise ValueError("field of view must be in (0, 180) degrees")
    width, height = _parse_pair(args.res, "x", "--res")
    if width < 1 or height < 1:
        raise ValueError("resolution must be positive")
    sphere = bounding_sphere(mesh)
    if np.linalg.norm(viewpoint - sphere.center) <= sphere.radius:
        raise GeometryError("viewpoint lies inside the mesh bounding sphere")

    forward = sphere.center - viewpoint
    forward /= np.linalg.norm(forward)
    ref = np.array([0.0, 0.0, 1.0]) if abs(forward[2]) <= 0.9 else np.array([1.0, 0.0, 0.0])
    right = np.cross(forward, ref)
    right /= np.linalg.norm(right)
    up = np.cross(right, forward)

    tan_half = math.tan(math.radians(args.fov) / 2.0)
    px = (2.0 * (np.arange(width) + 0.5) / width - 1.0) * tan_half * (width / height)
    py = (1.0 - 2.0 * (np.arange(height) + 0.5) / height) * tan_half
    xx, yy = np.meshgrid(px, py, indexing="xy")
    dirs = forward + xx[..., None] * right + yy[..., None] * up
    dirs /= np.linalg.norm(dirs, axis=-1, keepdims=True)
    dirs = dirs.reshape(-1, 3)
    origins = np.broadcast_to(viewpoint, dirs.shape)

    bvh = build_bvh(mesh)
    t, tri = first_hit_batch(bvh, mesh, origins, dirs)
    hit = tri >= 0
    points = origins[hit] + dirs[hit] * t[hit, None]
    if not hit.any():
        _log(f"warning: no ray hit {args.mesh} from {args.viewpoint}")
    save_cloud(args.out, PointCloud(points))
    _log(f"scanned {args.mesh} from ({args.viewpoint}): {int(hit.sum())} points -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spotlights",
        description="Encode meshes as spherical ray-bundle depth arrays and evaluate them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="cast the ray arrangement at a mesh and write an SPL file")
    p.add_argument("--mesh", required=True)
    p.add_argument("--primary", type=int, default=32, help="viewpoints on the sphere")
    p.add_argument("--secondary", type=int, default=64, help="rays per viewpoint")
    p.add_argument("--angle", type=float, default=60.0, help="opening angle in degrees, (0, 90]")
    p.add_argument("--out", required=True)
    p.add_argument("--no-normalize", action="store_true",
                   help="mesh is already inside the unit ball; keep its frame")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(fn=cmd_encode)

    p = sub.add_parser("decode", help="decode an SPL file to an ordered point cloud")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--clip", type=float, default=0.2,
                   help="drop depths below this (0 keeps every hit)")
    p.add_argument("--world-frame", action="store_true",
                   help="map points into the stored world frame")
    p.set_defaults(fn=cmd_decode)

    p = sub.add_parser("eval", help="metric between a predicted and a reference cloud")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--metric", choices=("accuracy", "chamfer", "completeness"), required=True)
    p.add_argument("--norm", choices=("l1", "l2"), default=None,
                   help="default: l1 for accuracy, l2 otherwise")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("consistency", help="mean pairwise Chamfer over matching cloud files")
    p.add_argument("--glob", required=True, help="quoted glob, e.g. 'obj_*.ply'")
    p.add_argument("--norm", choices=("l1", "l2"), default="l2")
    p.set_defaults(fn=cmd_consistency)

    p = sub.add_parser("sweep", help="completeness/hit-ratio table over ray counts and angles")
    p.add_argument("--mesh-dir", required=True)
    p.add_argument("--rays", default="2048,4096,8192", help="comma list of total ray counts")
    p.add_argument("--angles", default="30,60,83", help="comma list of opening angles in degrees")
    p.add_argument("--secondary", type=int, default=64, help="rays per viewpoint")
    p.add_argument("--gt-points", type=int, default=16384)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("density", help="ray-density profile over (r, alpha)")
    p.add_argument("--grid", default="41x41", help="r-steps x alpha-steps")
    p.add_argument("--rmax", type=float, default=0.8)
    p.add_argument("--resolution", default="512x1024", help="quadrature grid theta x phi")
    p.add_argument("--monte-carlo", default=None, metavar="N,M,SEED",
                   help="add a Monte-Carlo cross-check column")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_density)

    p = sub.add_parser("scan", help="single-viewpoint pinhole scan to a partial cloud")
    p.add_argument("--mesh", required=True)
    p.add_argument("--viewpoint", required=True, help="X,Y,Z")
    p.add_argument("--fov", type=float, default=60.0, help="vertical field of view in degrees")
    p.add_argument("--res", default="64x64", help="WxH pixels")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_scan)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ParseError, SplFormatError) as exc:
        _log(f"error: {exc}")
        return EXIT_IO
    except OSError as exc:
        _log(f"error: {exc}")
        return EXIT_IO
    except MetricError as exc:
        _log(f"error: {exc}")
        return EXIT_METRIC
    except (GeometryError, ValueError) as exc:
        _log(f"error: {exc}")
        return EXIT_GEOMETRY


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
