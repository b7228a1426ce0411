"""Command-line entry point: ``depthcues <command> [options]``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .edges import EdgeParams
from .errors import DepthCuesError, InvalidParams
from .evaluate import AGGREGATIONS, BASELINES
from .pipeline import (
    ANALYSES,
    FEATURES,
    AnalysisParams,
    cmd_analyze,
    cmd_baseline,
    cmd_evaluate,
    cmd_generate,
    cmd_restore,
    cmd_split,
    feature_configs,
)

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("depthcues")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the flags with suppressed defaults so values given
    # before the subcommand are not overwritten
    def d(value):
        return argparse.SUPPRESS if suppress else value

    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=d(0), help="global seed; per-image seeds derive from it")
    p.add_argument("--jobs", type=int, default=d(1), help="worker processes")
    p.add_argument("--manifest", type=Path, default=d(None), help="dataset manifest JSON")
    p.add_argument("--out", type=Path, default=d(Path("out")), help="output root")
    p.add_argument("-v", "--verbose", action="store_true", default=d(False))
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depthcues", description=__doc__.splitlines()[0], parents=[_global_flags(False)])
    common = _global_flags(True)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("split", parents=[common], help="write the seeded train/test split")

    gen = sub.add_parser("generate", parents=[common], help="write cue-isolated datasets")
    gen.add_argument("--feature", nargs="+", default=["ALL"], type=str.upper,
                     choices=[*FEATURES, "ALL"], help="cue conditions to generate (default: all six)")
    gen.add_argument("--patch-size", type=int, nargs="+", default=None,
                     help="texture patch sizes (default 16; 4 16 32 64 128 with --feature ALL)")
    gen.add_argument("--texture-rgb", action="store_true", help="shuffle RGB instead of greyscale")
    gen.add_argument("--sigma", type=float, default=1.4, help="Canny Gaussian sigma")
    gen.add_argument("--low", type=float, default=0.1, help="Canny low threshold")
    gen.add_argument("--high", type=float, default=0.2, help="Canny high threshold")
    gen.add_argument("--threshold-mode", type=str.upper, default="RATIO_OF_MAX", choices=["ABSOLUTE", "RATIO_OF_MAX"])
    gen.add_argument("--by-scene", action="store_true", help="split by scene prefix (<scene>/<name> ids)")

    ev = sub.add_parser("evaluate", parents=[common], help="score predicted depth against ground truth")
    ev.add_argument("--pred", type=Path, required=True, help="directory of predicted depth PNGs")
    ev.add_argument("--gt", type=Path, required=True, help="directory of ground-truth depth PNGs")
    ev.add_argument("--aggregation", type=str.upper, default="IMAGE_MEAN", choices=AGGREGATIONS)
    ev.add_argument("--feature", default="prediction", help="label for the summary row")

    rs = sub.add_parser("restore", parents=[common], help="invert a generated dataset using its sidecars")
    rs.add_argument("feature_dir", type=Path)

    bl = sub.add_parser("baseline", parents=[common], help="fit a non-neural baseline and predict the test split")
    bl.add_argument("--model", type=str.upper, default="GLOBAL_MEAN", choices=sorted(BASELINES))
    bl.add_argument("--patch-size", type=int, default=16)

    an = sub.add_parser("analyze", parents=[common], help="saturation/heatmap/noise analyses")
    an.add_argument("kind", type=str.upper, choices=ANALYSES)
    an.add_argument("--bins", type=int, default=8, help="depth intervals for SAT_DEPTH")
    an.add_argument("--rows", type=int, default=10, help="bands for ROW_SAT")
    an.add_argument("--depth-bins", type=int, default=10)
    an.add_argument("--value-bins", type=int, default=26)
    an.add_argument("--sample-size", type=int, default=500, help="images sampled for HEATMAP")
    an.add_argument("--noise-sigma", type=float, default=25.0, help="noise std on the 0-255 scale")
    an.add_argument("--region", type=str.upper, default="WHOLE", choices=["WHOLE", "CENTRAL"])
    an.add_argument("--id", dest="image_id", default=None, help="manifest id for ROW_SAT/NOISE")
    an.add_argument("--figures", action="store_true", help="also render PNG figures")
    return parser


def _need_manifest(args):
    if args.manifest is None:
        raise UsageError(f"{args.command} needs --manifest")
    return args.manifest


def run(args) -> None:
    if args.command == "split":
        print(cmd_split(_need_manifest(args), args.out))
    elif args.command == "generate":
        params = EdgeParams(args.sigma, args.low, args.high, args.threshold_mode)
        try:
            params.validate()
        except InvalidParams as exc:
            raise UsageError(str(exc)) from None
        configs = feature_configs(
            _need_manifest(args), args.out, args.feature, seed=args.seed,
            patch_sizes=args.patch_size, texture_rgb=args.texture_rgb,
            edge_params=params, jobs=args.jobs, by_scene=args.by_scene,
        )
        for cfg in configs:
            print(cmd_generate(cfg))
    elif args.command == "evaluate":
        agg, per_image = cmd_evaluate(args.pred, args.gt, args.out, args.aggregation, args.feature)
        m = agg.mean
        print(f"{args.feature}: a1={m.a1:.2f} a2={m.a2:.2f} a3={m.a3:.2f} "
              f"log10={m.log10_err:.4f} rel={m.rel:.4f} rmse={m.rmse:.4f} ({len(per_image)} images, {agg.mode})")
    elif args.command == "restore":
        items = cmd_restore(args.feature_dir, args.out)
        print(f"restored {len(items)} items into {args.out}")
    elif args.command == "baseline":
        print(cmd_baseline(_need_manifest(args), args.out, args.model, args.patch_size))
    elif args.command == "analyze":
        params = AnalysisParams(
            n_bins=args.bins, n_rows=args.rows, depth_bins=args.depth_bins, value_bins=args.value_bins,
            sample_size=args.sample_size, sigma=args.noise_sigma, region=args.region,
            image_id=args.image_id, figures=args.figures,
        )
        for path in cmd_analyze(args.kind, _need_manifest(args), args.out, args.seed, params).values():
            print(path)


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except UsageError as exc:
        print(f"depthcues: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DepthCuesError as exc:
        print(f"depthcues: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error")
        print(f"depthcues: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
