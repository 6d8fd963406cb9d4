"""Command-line harness.

Subcommands: ``phantom``, ``project``, ``exp1``, ``exp2``, ``exp3``,
``estimate`` (model + projection + angle -> weights on stdout) and
``synthesize`` (model + weights -> image file).  Exit codes: 0 success,
2 configuration error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import io
from .bilinear import estimate_respiratory, synthesize
from .bspline import eval_spline
from .config import ExperimentConfig, build_config
from .errors import (
    ConfigurationError,
    DegenerateModelError,
    DimensionError,
    DomainError,
    InputError,
)
from .experiments import (
    run_experiment1,
    run_experiment2,
    run_experiment3,
    run_phantom,
    run_project,
)
from .projector import ProjectionImage

_CONFIG_ERRORS = (ConfigurationError, InputError, DimensionError, DomainError)
_NUMERICAL_ERRORS = (DegenerateModelError, FloatingPointError, np.linalg.LinAlgError)


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--out", help="output directory (must exist)")
    parser.add_argument("--f", type=int, help="respiratory rank")
    parser.add_argument("--g", type=int, help="rotational rank")
    parser.add_argument("--modes-e", type=int, dest="modes_e", help="volume model modes")
    parser.add_argument("--ridge", type=float, help="regression ridge weight")
    parser.add_argument("--seed", type=int, help="random seed recorded in manifests")
    parser.add_argument("--detector", type=int, nargs=2, metavar=("NU", "NV"),
                        help="detector size in pixels")
    parser.add_argument("--grid", type=int, help="phantom grid size per axis")
    parser.add_argument("--angles", type=int, help="number of trajectory angles")


def _config_from_args(args) -> ExperimentConfig:
    overrides = {
        "out_dir": args.out,
        "rank_f": args.f,
        "rank_g": args.g,
        "modes_e": args.modes_e,
        "ridge": args.ridge,
        "seed": args.seed,
        "grid_n": args.grid,
        "num_angles": args.angles,
    }
    if args.detector is not None:
        overrides["detector_nu"] = args.detector[0]
        overrides["detector_nv"] = args.detector[1]
    return build_config(args.config, overrides)


def _cmd_simple(runner):
    def command(args):
        result = runner(_config_from_args(args))
        for key, value in sorted(result.items(), key=lambda kv: kv[0]):
            if isinstance(value, (str, int, float)) or hasattr(value, "as_posix"):
                print(f"{key}: {value}")
        return 0

    return command


def _cmd_estimate(args):
    model, _, _ = io.read_model(args.model)
    angles, images = io.read_projection_stack(args.image)
    if not 0 <= args.index < images.shape[0]:
        raise InputError(f"image index {args.index} out of range [0, {images.shape[0]})")
    angle = args.angle if args.angle is not None else float(angles[args.index])
    det = model.detector
    image = ProjectionImage(images[args.index], (det.su, det.sv))
    weights = estimate_respiratory(model, image, angle)
    print(" ".join(repr(float(w)) for w in weights))
    return 0


def _parse_weights(label: str, text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",")])
    except ValueError as exc:
        raise InputError(f"{label} must be comma-separated numbers, got {text!r}") from exc


def _cmd_synthesize(args):
    model, _, _ = io.read_model(args.model)
    resp = _parse_weights("--resp", args.resp)
    if args.rot is not None:
        rot = _parse_weights("--rot", args.rot)
    else:
        if args.angle is None:
            raise ConfigurationError("synthesize needs --angle or --rot")
        rot = eval_spline(model.rot_spline, args.angle)
    image = synthesize(model, resp, rot)
    angle = args.angle if args.angle is not None else math.nan
    io.write_projection_stack(args.output, [angle], [image])
    if args.pgm:
        io.write_pgm(args.pgm, image.data)
    print(f"wrote {args.output}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="birex",
        description="Bilinear decoupling of respiratory and angular variation "
                    "in rotational X-ray projections",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, runner, doc in (
        ("phantom", run_phantom, "generate phase-binned phantom volumes"),
        ("project", run_project, "forward-project the phantom volumes"),
        ("exp1", run_experiment1, "dense model study (weights, variance, eigenimages)"),
        ("exp2", run_experiment2, "leave-one-out gray-value error study"),
        ("exp3", run_experiment3, "volume estimation study"),
    ):
        p = sub.add_parser(name, help=doc)
        _add_common(p)
        p.set_defaults(func=_cmd_simple(runner))

    est = sub.add_parser("estimate", help="estimate respiratory weights for one projection")
    est.add_argument("--model", required=True, help="model file (.blm)")
    est.add_argument("--image", required=True, help="projection stack file (.mprj)")
    est.add_argument("--index", type=int, default=0, help="image index in the stack")
    est.add_argument("--angle", type=float, default=None,
                     help="trajectory angle in radians (default: from the stack file)")
    est.set_defaults(func=_cmd_estimate)

    syn = sub.add_parser("synthesize", help="synthesize a projection from weights")
    syn.add_argument("--model", required=True, help="model file (.blm)")
    syn.add_argument("--resp", required=True, help="comma-separated respiratory weights")
    syn.add_argument("--angle", type=float, default=None, help="trajectory angle in radians")
    syn.add_argument("--rot", default=None, help="comma-separated rotational weights")
    syn.add_argument("--output", required=True, help="output projection file (.mprj)")
    syn.add_argument("--pgm", default=None, help="also write a graymap preview")
    syn.set_defaults(func=_cmd_synthesize)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except _NUMERICAL_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
