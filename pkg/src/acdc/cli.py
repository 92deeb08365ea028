"""Command-line surface binding the pipeline stages into reproducible runs.

Exit codes: 0 success, 2 validation failure, 3 missing input, 4 pipeline
error. Every successful command writes a run manifest next to its output.
Outputs are written atomically and are byte-identical across reruns and
thread counts (timestamps live only in the run manifest).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__, affordance, matching, metrics, rotation
from .bundle import io as bundle_io
from .bundle.validate import validate as validate_value
from .errors import AcdcError, MissingFile, UnresolvedSupport, ValidationFailed
from .scenegen import pipeline as scenegen
from .scenegen.place import world_box

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_MISSING_INPUT = 3
EXIT_PIPELINE = 4

ASSET_DB_ENV = "ACDC_ASSET_DB"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _input_hash(path: Path) -> str:
    if path.is_dir():
        manifest = path / "manifest.json"
        if manifest.exists():
            return bundle_io.bundle_hash(path)
        db = path / "db_manifest.json"
        if db.exists():
            return _sha256(db)
        return "dir"
    return _sha256(path)


def _write_json(path: Path, payload: dict) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, path)


def _run_manifest(output: Path, command: str, args: argparse.Namespace, inputs: dict[str, str], started: float) -> None:
    payload = {
        "command": command,
        "tool_version": __version__,
        "config": {
            k: v for k, v in sorted(vars(args).items()) if k not in ("func",) and v is not None
        },
        "input_hashes": inputs,
        "seed": getattr(args, "seed", None),
        "wall_clock_s": time.time() - started,
    }
    _write_json(output.with_name(output.name + ".run.json"), payload)


def _load_config_defaults(
    parser: argparse.ArgumentParser,
    subparsers: dict[str, argparse.ArgumentParser],
    argv: list[str],
) -> None:
    # --config supplies defaults; explicit flags win. Subparsers hold their
    # own defaults, so the overrides must reach them too.
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if known.config:
        with open(known.config, encoding="utf-8") as fh:
            defaults = {k.replace("-", "_"): v for k, v in json.load(fh).items()}
        parser.set_defaults(**defaults)
        for sp in subparsers.values():
            sp.set_defaults(**defaults)


def _db_path(args) -> Path:
    path = getattr(args, "assets", None) or os.environ.get(ASSET_DB_ENV)
    if not path:
        raise MissingFile(f"no asset database: pass --assets or set {ASSET_DB_ENV}")
    return Path(path)


def _match_config(args) -> matching.MatchConfig:
    selector = {"dino": "embedding_only", "sidecar": "delegate"}[args.selector]
    return matching.MatchConfig(
        k_cat=args.k_cat,
        k_cand=args.k_cand,
        k_cous=args.k_cous,
        k_model=args.k_model,
        k_ori=args.k_ori,
        trim_fraction=args.trim,
        selector_path=selector,
        articulation_count_threshold=args.articulation_threshold,
    )


def _compile_config(args) -> scenegen.CompileConfig:
    return scenegen.CompileConfig(
        seed=args.seed,
        selector_path={"dino": "embedding_only", "sidecar": "delegate"}[args.selector],
        refine_orientation=args.refine_orientation,
        dbscan_eps=args.dbscan_eps,
        dbscan_min_pts=args.dbscan_min_pts,
    )


# -- commands --------------------------------------------------------------------


def cmd_validate(args) -> int:
    started = time.time()
    path = Path(args.path)
    if path.is_dir() and (path / "manifest.json").exists():
        value = bundle_io.read_bundle(path)
    elif path.is_dir() and (path / "db_manifest.json").exists():
        value = bundle_io.read_asset_db(path)
    elif path.is_file():
        value = bundle_io.read_scene(path)
    else:
        raise MissingFile(f"{path}: no manifest.json, db_manifest.json, or scene file")
    violations = validate_value(value)
    for v in violations:
        print(v)
    if violations:
        return EXIT_VALIDATION
    print(f"{path}: OK")
    # read-only command: the run manifest goes to stdout, not beside the input
    print(
        json.dumps(
            {
                "command": "validate",
                "tool_version": __version__,
                "input_hashes": {"path": _input_hash(path)},
                "wall_clock_s": time.time() - started,
            }
        )
    )
    return EXIT_OK


def cmd_match(args) -> int:
    started = time.time()
    bundle = bundle_io.read_bundle(args.bundle)
    db = bundle_io.read_asset_db(_db_path(args))
    cfg = _match_config(args)
    sidecar = bundle.sidecar

    def run(obj):
        return matching.select_cousins(obj, db, cfg, sidecar)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(run, bundle.objects))
    else:
        results = [run(obj) for obj in bundle.objects]

    out = Path(args.output)
    matching.write_matches(results, out)
    _run_manifest(
        out, "match", args,
        {"bundle": bundle.source_hash, "assets": _input_hash(_db_path(args))},
        started,
    )
    print(f"wrote {out} ({len(results)} objects)")
    return EXIT_OK


def cmd_generate(args) -> int:
    started = time.time()
    bundle = bundle_io.read_bundle(args.bundle)
    db = bundle_io.read_asset_db(_db_path(args))
    matches = matching.read_matches(args.matches)
    report = scenegen.CompileReport()
    scene = scenegen.compile_scene(
        bundle, matches, args.cousin_rank, db, _compile_config(args), report
    )
    out = Path(args.output)
    bundle_io.write_scene(scene, out)
    _write_json(out.with_name("compile_report.json"), report.payload())
    _run_manifest(
        out, "generate", args,
        {"bundle": bundle.source_hash, "matches": _sha256(Path(args.matches))},
        started,
    )
    print(f"wrote {out} ({len(scene.objects)} objects)")
    return EXIT_OK


def cmd_randomize(args) -> int:
    started = time.time()
    scene = bundle_io.read_scene(args.scene)
    db = bundle_io.read_asset_db(_db_path(args))
    matches = matching.read_matches(args.matches) if args.matches else []
    spec = scenegen.RandomizationSpec(
        seed=args.seed,
        xy_jitter=args.xy_jitter,
        yaw_jitter=args.yaw_jitter,
        scale_range=args.scale_range,
        instance_swap=args.instance_swap,
    )
    out = Path(args.output)
    result = scenegen.randomize_scene(scene, spec, matches, db)
    bundle_io.write_scene(result, out)
    _run_manifest(out, "randomize", args, {"scene": _sha256(Path(args.scene))}, started)
    print(f"wrote {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    started = time.time()
    gt = bundle_io.read_scene(args.ground_truth)
    rec = bundle_io.read_scene(args.reconstruction)
    db = bundle_io.read_asset_db(_db_path(args))
    symmetry = None
    if args.symmetry:
        with open(args.symmetry, encoding="utf-8") as fh:
            symmetry = json.load(fh)
    report = metrics.evaluate(gt, rec, db, symmetry)
    out = Path(args.output)
    metrics.write_metrics(report, out)
    print(metrics.format_table(report))
    _run_manifest(
        out, "eval", args,
        {"ground_truth": _sha256(Path(args.ground_truth)), "reconstruction": _sha256(Path(args.reconstruction))},
        started,
    )
    return EXIT_OK


def cmd_traj(args) -> int:
    started = time.time()
    db = bundle_io.read_asset_db(_db_path(args))
    asset = db.asset_by_id(args.asset)
    link = next((l for l in asset.links if l.name == args.link), None)
    if link is None:
        raise MissingFile(f"asset {args.asset!r} has no link {args.link!r}")
    if not link.mesh_file:
        raise MissingFile(f"link {args.link!r} declares no mesh file")
    triangles = affordance.read_tri_mesh(Path(db.root) / link.mesh_file)
    mesh = affordance.LinkMesh(link_id=link.name, triangles=triangles, joint=link.joint)
    front = {"x": [1, 0, 0], "y": [0, 1, 0], "-x": [-1, 0, 0], "-y": [0, -1, 0]}[args.front_axis]
    handle = affordance.detect_handle(mesh, np.asarray(front, dtype=np.float64), grid=args.ray_grid)
    traj = affordance.articulation_trajectory(handle, link.joint, args.skill, args.waypoints)
    out = Path(args.output)
    affordance.write_trajectory(traj, out)
    _run_manifest(out, "traj", args, {"assets": _input_hash(_db_path(args))}, started)
    print(
        f"wrote {out}: {len(traj)} waypoints, handle at "
        f"[{handle.location[0]:.4f}, {handle.location[1]:.4f}, {handle.location[2]:.4f}] "
        f"({handle.hit_count} rays)"
    )
    return EXIT_OK


_BOX_FACES = [
    (0, 1, 3), (0, 3, 2), (4, 6, 7), (4, 7, 5),
    (0, 4, 5), (0, 5, 1), (2, 3, 7), (2, 7, 6),
    (0, 2, 6), (0, 6, 4), (1, 5, 7), (1, 7, 3),
]


def cmd_export_obj(args) -> int:
    started = time.time()
    scene = bundle_io.read_scene(args.scene)
    db = bundle_io.read_asset_db(_db_path(args))
    lines = [f"# scene preview: {args.scene}"]
    offset = 1
    for obj in scene.objects:
        box = world_box(obj, db.asset_by_id(obj.asset_id))
        corners = box.corners()
        lines.append(f"o {obj.source_object_id}")
        for c in corners:
            lines.append(f"v {c[0]:.6f} {c[1]:.6f} {c[2]:.6f}")
        for f in _BOX_FACES:
            lines.append(f"f {f[0] + offset} {f[1] + offset} {f[2] + offset}")
        offset += 8
    # floor quad sized to cover the scene footprint
    span = 1.0
    if scene.objects:
        span = max(
            float(np.abs(world_box(o, db.asset_by_id(o.asset_id)).corners()[:, :2]).max())
            for o in scene.objects
        ) + 1.0
    z0 = float(scene.floor_plane.point[2])
    lines.append("o floor")
    for sx, sy in ((-1, -1), (1, -1), (1, 1), (-1, 1)):
        lines.append(f"v {sx * span:.6f} {sy * span:.6f} {z0:.6f}")
    lines.append(f"f {offset} {offset + 1} {offset + 2}")
    lines.append(f"f {offset} {offset + 2} {offset + 3}")

    out = Path(args.output)
    tmp = out.with_name(out.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    os.replace(tmp, out)
    _run_manifest(out, "export-obj", args, {"scene": _sha256(Path(args.scene))}, started)
    print(f"wrote {out}")
    return EXIT_OK


# -- argument plumbing ---------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags override it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--assets", help=f"asset database directory (default ${ASSET_DB_ENV})")


def _add_match_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k-cat", type=int, default=3, dest="k_cat")
    p.add_argument("--k-cand", type=int, default=10, dest="k_cand")
    p.add_argument("--k-cous", type=int, default=8, dest="k_cous")
    p.add_argument("--k-model", type=int, default=10, dest="k_model")
    p.add_argument("--k-ori", type=int, default=4, dest="k_ori")
    p.add_argument("--trim", type=float, default=0.10)
    p.add_argument("--selector", choices=("dino", "sidecar"), default="dino")
    p.add_argument(
        "--articulation-threshold", type=int, default=None, dest="articulation_threshold"
    )


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="acdc", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, argparse.ArgumentParser] = {}

    p = _register(commands, sub, "validate", help="validate a bundle, asset DB, or scene")
    p.add_argument("path")
    p.set_defaults(func=cmd_validate)

    p = _register(commands, sub, "match", help="select cousins for every bundle object")
    p.add_argument("bundle")
    p.add_argument("-o", "--output", default="matches.json")
    _add_common(p)
    _add_match_flags(p)
    p.set_defaults(func=cmd_match)

    p = _register(commands, sub, "generate", help="compile a scene from matches")
    p.add_argument("bundle")
    p.add_argument("matches")
    p.add_argument("-o", "--output", default="scene.scene.json")
    p.add_argument("--cousin-rank", type=int, default=0, dest="cousin_rank")
    p.add_argument("--refine-orientation", action="store_true", dest="refine_orientation")
    p.add_argument("--selector", choices=("dino", "sidecar"), default="dino")
    p.add_argument("--dbscan-eps", type=float, default=None, dest="dbscan_eps")
    p.add_argument("--dbscan-min-pts", type=int, default=10, dest="dbscan_min_pts")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = _register(commands, sub, "randomize", help="randomize poses/scales/instances")
    p.add_argument("scene")
    p.add_argument("-o", "--output", default="randomized.scene.json")
    p.add_argument("--matches", help="matches.json for instance swapping")
    p.add_argument("--xy-jitter", type=float, default=0.0, dest="xy_jitter")
    p.add_argument("--yaw-jitter", type=float, default=0.0, dest="yaw_jitter")
    p.add_argument("--scale-range", type=float, default=0.0, dest="scale_range")
    p.add_argument("--instance-swap", action="store_true", dest="instance_swap")
    _add_common(p)
    p.set_defaults(func=cmd_randomize)

    p = _register(commands, sub, "eval", help="reconstruction metrics against ground truth")
    p.add_argument("ground_truth")
    p.add_argument("reconstruction")
    p.add_argument("-o", "--output", default="metrics.json")
    p.add_argument("--symmetry", help="JSON file: category -> symmetry group")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = _register(commands, sub, "traj", help="open/close trajectory for an articulated link")
    p.add_argument("asset")
    p.add_argument("link")
    p.add_argument("skill", choices=("open", "close"))
    p.add_argument("-o", "--output", default="traj.json")
    p.add_argument("--front-axis", choices=("x", "y", "-x", "-y"), default="x", dest="front_axis")
    p.add_argument("--ray-grid", type=int, default=affordance.RAY_GRID, dest="ray_grid")
    p.add_argument("--waypoints", type=int, default=32)
    _add_common(p)
    p.set_defaults(func=cmd_traj)

    p = _register(commands, sub, "export-obj", help="wavefront-style mesh preview of a scene")
    p.add_argument("scene")
    p.add_argument("-o", "--output", default="scene.obj")
    _add_common(p)
    p.set_defaults(func=cmd_export_obj)

    return parser, commands


def _register(commands, sub, name, **kw):
    p = sub.add_parser(name, **kw)
    commands[name] = p
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, commands = build_parser()
    _load_config_defaults(parser, commands, argv)
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationFailed, UnresolvedSupport) as exc:
        print(f"validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (MissingFile, FileNotFoundError) as exc:
        print(f"missing input: {exc}", file=sys.stderr)
        return EXIT_MISSING_INPUT
    except AcdcError as exc:
        print(f"pipeline error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
