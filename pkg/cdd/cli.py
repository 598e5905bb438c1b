"""Command-line interface for cdd."""

import argparse
import dataclasses
import logging
import math
import sys
from pathlib import Path
from typing import Callable, Optional

from . import api
from .config import (
    DEFAULT_ALPHA,
    DEFAULT_D_MAX,
    DEFAULT_DELTA,
    DEFAULT_LR,
    DEFAULT_STEP,
    DEFAULT_TAU,
    VERSION,
)
from .distill import SUMMARY_COLUMNS, summary_row
from .exceptions import CddError, DivergenceError, UsageError
from .models import (
    APPROX_MODES,
    INIT_POLICIES,
    MAX_SEED,
    OPTIMIZERS,
    SHAPE_KINDS,
    CropSpec,
    DistillConfig,
    ShapeSpec,
    TrainConfig,
)
from .records import format_row, load_manifest
from .resolve import parse_grid, parse_kinds, parse_loss, parse_reference, parse_weighting_list

logger = logging.getLogger(__name__)

EXIT_FAILURE = 1
EXIT_USAGE = 2


def print_error(message: str) -> None:
    """Print an error message to stderr."""
    print(f"Error: {message}", file=sys.stderr)


# Argument types -----------------------------------------------------------------

def _argument_type(parse: Callable, name: str) -> Callable:
    """Wrap a parser so that its errors become argparse usage errors."""

    def convert(text: str):
        try:
            return parse(text)
        except (CddError, ValueError) as e:
            raise argparse.ArgumentTypeError(str(e))

    convert.__name__ = name
    return convert


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError(f"must be a positive integer, got {value}")
    return value


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value <= MAX_SEED:
        raise ValueError(f"seed must be between 0 and 2**64 - 1, got {value}")
    return value


def _positive_float(text: str) -> float:
    value = float(text)
    if not (math.isfinite(value) and value > 0):
        raise ValueError(f"must be a positive number, got {text}")
    return value


def _ratio(text: str) -> float:
    value = float(text)
    if not 0 < value <= 1:
        raise ValueError(f"must be in (0, 1], got {text}")
    return value


def _direction(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError(f"direction must be X,Y,Z, got '{text}'")
    vector = tuple(float(p) for p in parts)
    if not all(math.isfinite(c) for c in vector) or not any(vector):
        raise ValueError(f"direction must be a finite non-zero vector, got '{text}'")
    return vector


positive_int = _argument_type(_positive_int, "positive integer")
seed_value = _argument_type(_seed, "seed")
positive_float = _argument_type(_positive_float, "positive number")
keep_ratio = _argument_type(_ratio, "ratio")
direction = _argument_type(_direction, "direction")
loss_spec = _argument_type(parse_loss, "loss")
weighting_list = _argument_type(parse_weighting_list, "distribution list")
kind_list = _argument_type(parse_kinds, "distribution kinds")
reference_spec = _argument_type(parse_reference, "reference distribution")


# Command handlers ---------------------------------------------------------------

def gen_cli(args: argparse.Namespace) -> int:
    """Handle the gen command."""
    out = Path(args.out)
    if not out.suffix:
        out = out.with_suffix(".xyz")
    crop_spec = None
    if args.keep is not None:
        crop_spec = CropSpec.toward(args.crop_dir or (1.0, 0.0, 0.0), args.keep)
    shape = ShapeSpec(args.shape, args.n, args.seed)
    paths = api.generate_clouds(shape, out, crop_spec, argv=args.argv)
    for path in paths:
        print(path)
    return 0


def eval_cli(args: argparse.Namespace) -> int:
    """Handle the eval command."""
    metrics = api.evaluate_files(Path(args.pred), Path(args.gt), args.tau)
    print(format_row(metrics))
    return 0


def curves_cli(args: argparse.Namespace) -> int:
    """Handle the curves command."""
    cfg = DistillConfig(
        alpha=args.alpha, d_max=args.d_max, step=args.step, approx=args.approx, delta=args.delta
    )
    if args.out:
        api.write_curves_table(args.dist, Path(args.out), cfg, args.rescale, argv=args.argv)
    else:
        columns, curves = api.curves_table(args.dist, cfg, rescaled=args.rescale)
        print(",".join(columns))
        for row in api.format_curves(curves):
            print(format_row(row))
    return 0


def distill_cli(args: argparse.Namespace) -> int:
    """Handle the distill command."""
    cfg = DistillConfig(
        alpha=args.alpha, d_max=args.d_max, step=args.step, approx=args.approx, delta=args.delta
    )
    grids = parse_grid(args.grid)
    results = api.run_distill(args.dist, Path(args.out), cfg, args.ref, grids, argv=args.argv)
    print(",".join(SUMMARY_COLUMNS))
    for result in results:
        print(format_row(summary_row(result)))
    return 0


def train_cli(args: argparse.Namespace) -> int:
    """Handle the train command."""
    loss = args.loss
    if args.no_mode_shift:
        loss = dataclasses.replace(loss, mode_shift=False)
    cfg = TrainConfig(
        loss=loss,
        iters=args.iters,
        lr=args.lr,
        optimizer=args.optimizer,
        seed=args.seed,
        eval_every=args.eval_every,
        output_size=args.output_size,
        init=args.init,
        tau=args.tau,
        snapshot_every=args.snapshots,
    )
    result = api.run_train(
        Path(args.gt), Path(args.partial), cfg, Path(args.out),
        argv=args.argv, record_timing=args.record_timing,
    )
    last = result.log.last
    print(f"iter={last.iter} loss={last.loss:.6g} l1cd={last.l1cd:.6g} "
          f"l2cd={last.l2cd:.6g} f1={last.f1:.4f}")
    return 0


def compare_cli(args: argparse.Namespace) -> int:
    """Handle the compare command."""
    distances = api.compare_run_dirs(Path(args.run_a), Path(args.run_b))
    print("iter,distance")
    for row in distances:
        print(format_row(row))
    return 0


def replay_cli(args: argparse.Namespace) -> int:
    """Handle the replay command: re-run the command line stored in a manifest."""
    manifest = load_manifest(Path(args.manifest))
    if not manifest.argv or "replay" in manifest.argv:
        raise UsageError(f"{args.manifest} does not record a replayable command")
    if manifest.version != VERSION:
        logger.warning("Manifest was written by cdd %s, replaying with %s", manifest.version, VERSION)
    return main(manifest.argv)


HANDLERS: dict[str, Callable[[argparse.Namespace], int]] = {
    "gen": gen_cli,
    "eval": eval_cli,
    "curves": curves_cli,
    "distill": distill_cli,
    "train": train_cli,
    "compare": compare_cli,
    "replay": replay_cli,
}


# Parser -------------------------------------------------------------------------

def _add_distill_settings(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--alpha", type=positive_float, default=DEFAULT_ALPHA,
                        help="HyperCD alpha of the reference curve (default: 1.0)")
    parser.add_argument("--approx", choices=APPROX_MODES, default="dominant",
                        help="Approximation of the weighted-CD gradient weight")
    parser.add_argument("--d-max", type=positive_float, default=DEFAULT_D_MAX,
                        help="Largest sampled distance (default: 0.01)")
    parser.add_argument("--step", type=positive_float, default=DEFAULT_STEP,
                        help="Distance grid step (default: 2e-4)")
    parser.add_argument("--delta", type=positive_float, default=DEFAULT_DELTA,
                        help="Forward-difference step of finite_diff (default: 1e-4)")


def create_parser() -> argparse.ArgumentParser:
    """Create the argument parser."""
    parser = argparse.ArgumentParser(
        prog="cdd",
        description="Weighted Chamfer distances, loss distillation and free-point completion",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {VERSION}")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log debug messages to stderr")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    gen = sub.add_parser("gen", help="Sample a synthetic shape and optionally crop it")
    gen.add_argument("--shape", choices=SHAPE_KINDS, required=True)
    gen.add_argument("--n", type=positive_int, required=True, help="Number of points")
    gen.add_argument("--seed", type=seed_value, default=0)
    gen.add_argument("--crop-dir", type=direction, metavar="X,Y,Z",
                     help="Crop direction (default: 1,0,0 when --keep is given)")
    gen.add_argument("--keep", type=keep_ratio, metavar="RATIO",
                     help="Fraction of points kept by the crop")
    gen.add_argument("--out", required=True, metavar="PATH", help="Output XYZ file")

    ev = sub.add_parser("eval", help="L1-CD, L2-CD and F1 between two clouds")
    ev.add_argument("--pred", required=True, metavar="PATH")
    ev.add_argument("--gt", required=True, metavar="PATH")
    ev.add_argument("--tau", type=positive_float, default=DEFAULT_TAU,
                    help="F1 distance threshold (default: 0.01)")

    curves = sub.add_parser("curves", help="Reference and candidate gradient-weight curves")
    curves.add_argument("--dist", type=weighting_list, required=True,
                        metavar="KIND[:PARAMS],...", help="Distributions, or 'all'")
    _add_distill_settings(curves)
    curves.add_argument("--rescale", action="store_true", help="Divide every curve by its maximum")
    curves.add_argument("--out", metavar="PATH", help="Write the CSV here instead of stdout")

    distill = sub.add_parser("distill", help="Fit distribution parameters by gradient matching")
    distill.add_argument("--dist", type=kind_list, required=True,
                         metavar="KIND[,KIND...]", help="Distribution kinds, or 'all'")
    _add_distill_settings(distill)
    distill.add_argument("--ref", type=reference_spec, default=parse_reference("expdecay"),
                         metavar="SOURCE",
                         help="uniform, expdecay[:RATE], file:PATH or selfgen[:ITERS] (default: expdecay:300)")
    distill.add_argument("--grid", default="default", metavar="default|file:PATH",
                         help="Parameter grid (default: built-in grids)")
    distill.add_argument("--out", required=True, metavar="DIR")

    train = sub.add_parser("train", help="Free-point completion training")
    train.add_argument("--gt", required=True, metavar="PATH")
    train.add_argument("--partial", required=True, metavar="PATH")
    train.add_argument("--loss", type=loss_spec, required=True,
                       metavar="cd_l1|cd_l2|hypercd:alpha=A|weighted:KIND[:PARAMS]")
    train.add_argument("--iters", type=positive_int, default=2000)
    train.add_argument("--lr", type=positive_float, default=DEFAULT_LR)
    train.add_argument("--seed", type=seed_value, default=0)
    train.add_argument("--optimizer", choices=OPTIMIZERS, default="adam")
    train.add_argument("--eval-every", type=positive_int, default=10)
    train.add_argument("--output-size", type=positive_int,
                       help="Number of free points (default: size of the ground truth)")
    train.add_argument("--init", choices=INIT_POLICIES, default="jitter")
    train.add_argument("--tau", type=positive_float, default=DEFAULT_TAU)
    train.add_argument("--snapshots", type=positive_int, metavar="N",
                       help="Write the points every N iterations")
    train.add_argument("--no-mode-shift", action="store_true",
                       help="Evaluate weighted losses at d instead of mode + d")
    train.add_argument("--record-timing", action="store_true",
                       help="Log wall-clock elapsed_ms (breaks bitwise reproducibility)")
    train.add_argument("--out", required=True, metavar="DIR")

    compare = sub.add_parser("compare", help="Distances between two runs' snapshots")
    compare.add_argument("--run-a", required=True, metavar="DIR")
    compare.add_argument("--run-b", required=True, metavar="DIR")

    replay = sub.add_parser("replay", help="Re-run the command recorded in a manifest")
    replay.add_argument("manifest", metavar="MANIFEST")

    return parser


def _configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point for the cdd CLI.

    Args:
        argv: Command-line arguments (defaults to sys.argv[1:]).

    Returns:
        Exit code: 0 on success, 1 on a runtime failure, 2 on misuse.
    """
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = create_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose)
    args.argv = argv

    if args.command == "gen" and args.crop_dir is not None and args.keep is None:
        parser.error("--crop-dir requires --keep")

    try:
        return HANDLERS[args.command](args)
    except UsageError as e:
        print_error(str(e))
        return EXIT_USAGE
    except DivergenceError as e:
        print_error(str(e))
        return EXIT_FAILURE
    except FileNotFoundError as e:
        print_error(f"file not found: {e.filename}")
        return EXIT_FAILURE
    except (CddError, OSError) as e:
        print_error(str(e))
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
