"""Extractor CLI: extract bundles, build asset databases, annotate sidecars."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .annotate import annotate, scripted_delegate_from_file
from .config import ExtractorConfig, FeatureDims
from .dbbuild import build_asset_db
from .errors import ExtractorError
from .extract import extract


def _config(args) -> ExtractorConfig:
    dims = FeatureDims(
        patch_h=args.patch_size, patch_w=args.patch_size,
        d_vis=args.d_vis, d_text=args.d_text,
    )
    return ExtractorConfig(mock=not args.live, dims=dims)


def cmd_extract(args) -> int:
    out = extract(Path(args.image), Path(args.output), _config(args))
    print(f"wrote {out}")
    return 0


def cmd_build_db(args) -> int:
    with open(args.spec, encoding="utf-8") as fh:
        spec = json.load(fh)
    out = build_asset_db(spec, Path(args.output), _config(args))
    print(f"wrote {out}")
    return 0


def cmd_annotate(args) -> int:
    delegate = scripted_delegate_from_file(args.script)
    out = annotate(
        args.matches, delegate, args.output,
        transcript_path=args.transcript, k_ori=args.k_ori,
    )
    if args.bundle:
        from .formats import attach_sidecar

        with open(out, encoding="utf-8") as fh:
            attach_sidecar(Path(args.bundle), json.load(fh))
        print(f"attached sidecar to {args.bundle}")
    print(f"wrote {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="acdc-extract", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--live", action="store_true", help="use live models (default: mock)")
        p.add_argument("--patch-size", type=int, default=3, dest="patch_size")
        p.add_argument("--d-vis", type=int, default=8, dest="d_vis")
        p.add_argument("--d-text", type=int, default=16, dest="d_text")

    p = sub.add_parser("extract", help="image -> bundle directory")
    p.add_argument("image")
    p.add_argument("-o", "--output", required=True)
    common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("build-db", help="asset spec -> database directory")
    p.add_argument("spec")
    p.add_argument("-o", "--output", required=True)
    common(p)
    p.set_defaults(func=cmd_build_db)

    p = sub.add_parser("annotate", help="matches + delegate script -> sidecar.json")
    p.add_argument("matches")
    p.add_argument("--script", required=True, help="scripted delegate transcript JSON")
    p.add_argument("-o", "--output", default="sidecar.json")
    p.add_argument("--transcript", default=None, help="where to log the exchange")
    p.add_argument("--k-ori", type=int, default=4, dest="k_ori")
    p.add_argument("--bundle", default=None, help="bundle dir to attach the sidecar to")
    p.set_defaults(func=cmd_annotate)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(sys.argv[1:] if argv is None else argv)
    try:
        return args.func(args)
    except ExtractorError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
