"""Command line entry point: ``leantopo infer|sparsify|sample|selftest``."""

from __future__ import annotations

import argparse
import sys

from .complex import ComplexTooLarge
from .geometry import EmptyCloud, load_points, save_points
from .lean import EmptyLeanSet, export_lean_set
from .pipeline import ConfigError, PipelineConfig, lean_topo
from .samplers import (UnderSampled, add_normal_noise, export_sidecar, sample_circle,
                       sample_helix_loop, sample_neck_curve, sample_sphere, sample_torus)
from .sparsify import export_deletions, export_sparse
from .tangent import InsufficientCandidates

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INPUT = 3
EXIT_NORMALS = 4
EXIT_EMPTY_LEAN = 5
EXIT_COMPLEX = 6
EXIT_UNDERSAMPLED = 7
EXIT_SELFTEST = 8

# Most specific classes first.
ERROR_CODES = [
    (InsufficientCandidates, EXIT_NORMALS),
    (EmptyLeanSet, EXIT_EMPTY_LEAN),
    (ComplexTooLarge, EXIT_COMPLEX),
    (UnderSampled, EXIT_UNDERSAMPLED),
    (ConfigError, EXIT_INPUT),
    (EmptyCloud, EXIT_INPUT),
    (OSError, EXIT_INPUT),
    (ValueError, EXIT_INPUT),
]


def exit_code_for(err: BaseException) -> int:
    for cls, code in ERROR_CODES:
        if isinstance(err, cls):
            return code
    return EXIT_FAILURE


def _config(args) -> PipelineConfig:
    common = dict(
        max_homology_dim=args.max_homology_dim,
        min_pair_distance=args.min_pair_distance,
        lean="full" if args.full_lean else "reduced",
        timings=not args.no_timings,
    )
    if args.mode == "theory":
        for name in ("beta", "rho", "c_beta", "level"):
            if getattr(args, name) is not None:
                raise ConfigError(f"--{name.replace('_', '-')} is only accepted in practical mode")
        return PipelineConfig.theory(**common)
    return PipelineConfig.practical(beta=args.beta, rho=args.rho, c_beta=args.c_beta,
                                    level=args.level, **common)


def _add_pipeline_args(p):
    p.add_argument("points", help="text file, one point per line")
    p.add_argument("--intrinsic-dim", type=int, required=True)
    p.add_argument("--mode", choices=["theory", "practical"], default="theory")
    p.add_argument("--max-homology-dim", type=int, default=None)
    p.add_argument("--min-pair-distance", type=float, default=0.0)
    p.add_argument("--full-lean", action="store_true",
                   help="build every beta-good pair before reducing (slower, for validation)")
    p.add_argument("--beta", type=float, default=None, help="practical mode only")
    p.add_argument("--rho", type=float, default=None, help="practical mode only")
    p.add_argument("--c-beta", type=float, default=None, help="practical mode only")
    p.add_argument("--level", type=float, default=None, help="practical mode only: r for R^r")
    p.add_argument("--report", default=None, help="write the JSON report here (default stdout)")
    p.add_argument("--no-timings", action="store_true", help="omit timings from the report")
    p.add_argument("--export-sparse", default=None)
    p.add_argument("--export-deletions", default=None)
    p.add_argument("--export-lean", default=None)


def _run_pipeline(args, stop_after_sparsify: bool) -> int:
    cloud = load_points(args.points, args.intrinsic_dim)
    report = lean_topo(cloud, _config(args), stop_after_sparsify=stop_after_sparsify)
    art = report.artifacts
    if args.export_sparse:
        export_sparse(args.export_sparse, cloud, art["sample"])
    if args.export_deletions:
        export_deletions(args.export_deletions, art["sample"])
    if args.export_lean:
        export_lean_set(args.export_lean, art["lean"] if art["lean"] is not None else art["reduced_lean"])
    if not stop_after_sparsify and getattr(args, "export_barcode", None) and "persistence" in art:
        art["persistence"].export_barcode(args.export_barcode)
    if not stop_after_sparsify and getattr(args, "export_complex", None):
        art["complex"].export(args.export_complex)
    text = report.to_json()
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_infer(args) -> int:
    return _run_pipeline(args, stop_after_sparsify=False)


def cmd_sparsify(args) -> int:
    return _run_pipeline(args, stop_after_sparsify=True)


def cmd_sample(args) -> int:
    shape = args.shape
    if shape == "circle":
        cloud = sample_circle(args.radius, n=args.n, eps=args.eps)
    elif shape == "sphere":
        cloud = sample_sphere(args.radius, n=args.n or 4000, eps=args.eps)
    elif shape == "torus":
        cloud = sample_torus(args.major, args.minor, n=args.n or 5000, eps=args.eps)
    elif shape == "helix":
        cloud = sample_helix_loop(n=args.n or 1000, eps=args.eps)
    else:
        cloud = sample_neck_curve(args.neck_width, eps=args.eps or 0.05)
    if args.noise_scale:
        cloud = add_normal_noise(cloud, cloud.normals, args.noise_scale, args.seed)
    save_points(args.output, cloud.points, header=f"{cloud.name} sample, intrinsic dimension "
                                                  f"{cloud.intrinsic_dim}")
    if args.sidecar:
        export_sidecar(args.sidecar, cloud)
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .selftest import run_selftest

    failures = run_selftest(trials=args.trials, seed=args.seed, out=sys.stdout)
    return EXIT_OK if failures == 0 else EXIT_SELFTEST


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="leantopo", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("infer", help="estimate Betti numbers of the sampled manifold")
    _add_pipeline_args(p)
    p.add_argument("--export-barcode", default=None)
    p.add_argument("--export-complex", default=None)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("sparsify", help="stop after the lean decimation")
    _add_pipeline_args(p)
    p.set_defaults(func=cmd_sparsify)

    p = sub.add_parser("sample", help="write a synthetic sample")
    p.add_argument("shape", choices=["circle", "neck", "helix", "torus", "sphere"])
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--eps", type=float, default=None)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--major", type=float, default=2.0)
    p.add_argument("--minor", type=float, default=0.8)
    p.add_argument("--neck-width", type=float, default=0.05)
    p.add_argument("--noise-scale", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sidecar", default=None, help="write normals and lfs per point here")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("selftest", help="run oracle-equivalence and invariant checks")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except Exception as err:  # map every failure to its documented exit code
        stage = getattr(err, "stage", None)
        where = f" during {stage}" if stage else ""
        sys.stderr.write(f"leantopo: {type(err).__name__}{where}: {err}\n")
        hint = getattr(err, "hint", "")
        if hint:
            sys.stderr.write(f"hint: {hint}\n")
        return exit_code_for(err)


if __name__ == "__main__":
    sys.exit(main())
