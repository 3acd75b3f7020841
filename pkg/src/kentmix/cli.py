"""Command-line interface: ``kentmix {fit,select,cluster,simulate,segment}``.

Exit status is 0 on success, 1 on a domain, format or fitting error and
2 on a usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from kentmix.errors import DomainError, FitError, FormatError
from kentmix.fitter import FitConfig, fit
from kentmix.io import (
    EmptyImageError,
    load_csv,
    load_ppm,
    recolor,
    save_labels,
    save_ppm,
    segment_image,
)
from kentmix.model import model_from_json, model_to_json
from kentmix.selection import map_classify, select_g
from kentmix.stiefel import AscentConfig
from kentmix.studies import StudySpec, run_study

logger = logging.getLogger("kentmix")


class UsageError(Exception):
    pass


def _add_fit_options(p: argparse.ArgumentParser, restarts: int = 10) -> None:
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--max-iter", type=int, default=100, help="maximum BSLM iterations")
    p.add_argument("--restarts", type=int, default=restarts, help="number of random restarts")
    p.add_argument("--bbar", type=float, default=1e-5, help="floor on beta")
    p.add_argument("--kbar", type=float, default=1e-5, help="floor on kappa - 2*beta")
    p.add_argument("--tol", type=float, default=1e-8, help="relative stopping tolerance (0 disables)")
    p.add_argument(
        "--init", choices=["spherical_kmeans", "random_frames"], default="spherical_kmeans",
        help="initialization method",
    )


def _config(args, g: int = 1) -> FitConfig:
    try:
        return FitConfig(
            g=g, max_iterations=args.max_iter, rel_tol=args.tol, restarts=args.restarts,
            seed=args.seed, bbar=args.bbar, kbar=args.kbar, init_method=args.init,
            ascent=AscentConfig(),
        )
    except DomainError as exc:
        raise UsageError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="kentmix", description=__doc__, formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a g-component Kent mixture", formatter_class=fmt)
    p.add_argument("--input", required=True, help="CSV of 3-column points")
    p.add_argument("--normalize", action="store_true", help="scale rows to unit length")
    p.add_argument("--g", type=int, required=True, help="number of components")
    _add_fit_options(p)
    p.add_argument("--output", required=True, help="model JSON to write")

    p = sub.add_parser("select", help="choose g with the BIC-like criterion", formatter_class=fmt)
    p.add_argument("--input", required=True, help="CSV of 3-column points")
    p.add_argument("--normalize", action="store_true", help="scale rows to unit length")
    p.add_argument("--gmin", type=int, default=1, help="smallest g")
    p.add_argument("--gmax", type=int, default=10, help="largest g")
    _add_fit_options(p)
    p.add_argument("--output", required=True, help="selection table CSV to write")
    p.add_argument("--model-output", default=None, help="optional JSON of the selected model")

    p = sub.add_parser("cluster", help="MAP labels from a fitted model", formatter_class=fmt)
    p.add_argument("--model", required=True, help="model JSON")
    p.add_argument("--input", required=True, help="CSV of 3-column points")
    p.add_argument("--normalize", action="store_true", help="scale rows to unit length")
    p.add_argument("--output", required=True, help="labels CSV to write")

    p = sub.add_parser("simulate", help="run a simulation study", formatter_class=fmt)
    p.add_argument(
        "--study", required=True, type=str.lower, choices=["s1", "s2", "s3", "s4"],
        help="s1/s2: parameter recovery, s3: order selection, s4: clustering ARI",
    )
    p.add_argument("--n", type=int, default=1000, help="observations per repetition")
    p.add_argument("--reps", type=int, default=20, help="repetitions")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--max-iter", type=int, default=100, help="maximum BSLM iterations")
    p.add_argument("--restarts", type=int, default=3, help="restarts per fit")
    p.add_argument("--tol", type=float, default=1e-8, help="relative stopping tolerance (0 disables)")
    p.add_argument("--output", required=True, help="result JSON to write")

    p = sub.add_parser("segment", help="segment a PPM image by colour direction", formatter_class=fmt)
    p.add_argument("--image", required=True, help="P3 or P6 PPM, maxval 255")
    p.add_argument("--g", default="auto", help="number of components, or 'auto'")
    p.add_argument("--gmin", type=int, default=2, help="smallest g when --g auto")
    p.add_argument("--gmax", type=int, default=10, help="largest g when --g auto")
    p.add_argument("--labels", required=True, help="per-pixel labels CSV to write")
    p.add_argument("--recolor", default=None, help="optional PPM painted with cluster mean colours")
    _add_fit_options(p, restarts=3)
    return parser


def _cmd_fit(args) -> int:
    data = load_csv(args.input, args.normalize)
    report = fit(data.points, _config(args, args.g))
    Path(args.output).write_text(model_to_json(report.model))
    print(f"loglik={report.final_loglik!r} iterations={report.iterations_run} converged={report.converged}")
    return 0


def _cmd_select(args) -> int:
    if args.gmin < 1 or args.gmin > args.gmax:
        raise UsageError(f"need 1 <= --gmin <= --gmax, got {args.gmin} and {args.gmax}")
    data = load_csv(args.input, args.normalize)
    table = select_g(data.points, args.gmin, args.gmax, _config(args))
    Path(args.output).write_text(table.to_csv())
    if args.model_output:
        Path(args.model_output).write_text(model_to_json(table.selected.report.model))
    for w in table.warnings:
        logger.warning(w)
    print(f"selected g={table.selected_g}")
    return 0


def _cmd_cluster(args) -> int:
    model = model_from_json(Path(args.model).read_text())
    data = load_csv(args.input, args.normalize)
    save_labels(args.output, map_classify(data.points, model), data.row_index)
    return 0


def _cmd_simulate(args) -> int:
    try:
        spec = StudySpec(args.study.upper(), n=args.n, reps=args.reps, seed=args.seed)
        cfg = FitConfig(max_iterations=args.max_iter, rel_tol=args.tol, restarts=args.restarts)
    except DomainError as exc:
        raise UsageError(str(exc)) from exc
    result = run_study(spec, cfg)
    Path(args.output).write_text(result.to_json())
    return 0


def _cmd_segment(args) -> int:
    if args.g == "auto":
        g = "auto"
        if args.gmin < 1 or args.gmin > args.gmax:
            raise UsageError(f"need 1 <= --gmin <= --gmax, got {args.gmin} and {args.gmax}")
    else:
        try:
            g = int(args.g)
        except ValueError:
            raise UsageError(f"--g must be a positive integer or 'auto', got {args.g!r}") from None
        if g < 1:
            raise UsageError("--g must be at least 1")
    img = load_ppm(args.image)
    try:
        seg = segment_image(img, g, _config(args), (args.gmin, args.gmax))
    except EmptyImageError as exc:
        save_labels(args.labels, exc.labels)
        raise
    save_labels(args.labels, seg.labels)
    if args.recolor:
        save_ppm(args.recolor, recolor(img, seg.labels))
    print(f"g={seg.model.g} pixels={seg.labels.size}")
    return 0


COMMANDS = {
    "fit": _cmd_fit,
    "select": _cmd_select,
    "cluster": _cmd_cluster,
    "simulate": _cmd_simulate,
    "segment": _cmd_segment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"kentmix {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, FormatError, FitError, ArithmeticError, OSError) as exc:
        print(f"kentmix {args.command}: {exc}", file=sys.stderr)
        return 1


def _entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    _entry()
