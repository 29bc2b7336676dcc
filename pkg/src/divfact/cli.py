"""Command line entry point: ``divfact {fit,synth,divergence}``.

Exit codes: 0 converged or exact model, 1 bad input, 2 iteration cap
reached, 3 numerical breakdown.
"""

import argparse
import datetime
import logging
import os
import sys
from pathlib import Path

from . import __version__
from .altmin import FitConfig, Termination, fingerprint, fit
from .divergence import i_divergence
from .errors import DefinitenessError, DimensionError, NumericalBreakdown, SingularityError
from .harness import SyntheticSpec, plant_model, sample_covariance
from .io import InputError, dump_json, model_to_dict, read_matrix, read_model, read_symmetric, write_matrix
from .model import as_covariance

EXIT_OK, EXIT_INPUT, EXIT_MAX_ITER, EXIT_BREAKDOWN = 0, 1, 2, 3

EXIT_FOR = {
    Termination.CONVERGED: EXIT_OK,
    Termination.EXACT_MODEL_STOP: EXIT_OK,
    Termination.MAX_ITER: EXIT_MAX_ITER,
    Termination.NUMERICAL_BREAKDOWN: EXIT_BREAKDOWN,
}

log = logging.getLogger("divfact")


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


def _manifest(command, inputs, **extra):
    return {"command": command, "inputs": [str(p) for p in inputs], "tool_version": __version__, **extra}


def _write_run_manifest(path, manifest, started):
    # wall-clock data lives beside the result so the result itself is reproducible
    dump_json({**manifest, "started": started, "finished": _now()}, f"{path}.manifest.json")


def _on_off(value):
    v = value.strip().lower()
    if v in ("on", "1", "true", "yes"):
        return True
    if v in ("off", "0", "false", "no"):
        return False
    raise argparse.ArgumentTypeError(f"expected on/off, got {value!r}")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; 2 is reserved for max_iter here
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser():
    parser = _Parser(prog="divfact", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit H H^T + D to a covariance by alternating minimization")
    p.add_argument("--input", required=True, help="CSV covariance (or raw data with --data)")
    p.add_argument("--k", type=int, required=True, help="number of factors, 1 <= k < n")
    p.add_argument("--data", action="store_true", help="treat input as m x n observations")
    p.add_argument("--ridge", action="store_true", help="with --data, regularize a rank-deficient sample covariance")
    p.add_argument("--variant", choices=("alg1", "alg2"), default="alg1")
    p.add_argument("--init", choices=("pca", "random", "file"), default="pca")
    p.add_argument("--init-model", help="JSON model file used with --init file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--tol-decrement", type=float, default=1e-12)
    p.add_argument("--tol-fixed-point", type=float, default=1e-9)
    p.add_argument("--diag-floor", type=float, default=1e-10)
    p.add_argument("--trace", help="write the per-iteration trace to this JSON file")
    p.add_argument("--validate", type=_on_off, default=_on_off(os.environ.get("DIVFACT_VALIDATE", "on")),
                   help="per-iterate bound checks (on|off; default from DIVFACT_VALIDATE or on)")
    p.add_argument("--output", "-o", default="-", help="result JSON path (default stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", help="write a planted factor-model covariance")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--loading-scale", type=float, default=1.0)
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--perturbation", type=float, default=0.0)
    p.add_argument("--out-dir", default=".", help="directory for sigma0.csv, truth.json, manifest.json")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("divergence", help="print D(S1 || S2) for two CSV covariances")
    p.add_argument("first")
    p.add_argument("second")
    p.set_defaults(func=cmd_divergence)
    return parser


def _load_s0(args):
    if args.data:
        X = read_matrix(args.input, square=False)
        return sample_covariance(X, ridge=args.ridge)
    return as_covariance(read_symmetric(args.input), f"{args.input}")


def cmd_fit(args):
    started = _now()
    S0 = _load_s0(args)
    n = S0.shape[0]
    if not 1 <= args.k < n:
        raise InputError(f"k must be < n and >= 1 (k={args.k}, n={n})")
    init = args.init
    inputs = [args.input]
    if init == "file":
        if not args.init_model:
            raise InputError("--init file requires --init-model PATH")
        init = read_model(args.init_model)
        inputs.append(args.init_model)
    cfg = FitConfig(
        k=args.k, variant=args.variant, init=init, seed=args.seed, max_iter=args.max_iter,
        tol_divergence_decrement=args.tol_decrement, tol_fixed_point=args.tol_fixed_point,
        diag_floor=args.diag_floor, validate=args.validate)
    try:
        result = fit(S0, cfg)
        model, objective, trace = result.model, result.objective, result.trace
    except NumericalBreakdown as exc:
        log.error("numerical breakdown: %s", exc.reason)
        trace = exc.trace
        model = exc.iterate.without_q()
        objective = trace.records[-1].objective if trace.records else None
    termination = trace.termination
    manifest = _manifest(
        "fit", inputs, config={**cfg.to_dict(), "data": args.data, "ridge": args.ridge},
        seed=args.seed, input_fingerprint=fingerprint(S0), termination=termination.value)
    doc = {
        **model_to_dict(model),
        "objective": objective,
        "iterations": trace.records[-1].iteration if trace.records else 0,
        "termination": termination.value,
        "reason": trace.reason,
        "manifest": manifest,
    }
    text = dump_json(doc, args.output)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        _write_run_manifest(args.output, manifest, started)
    if args.trace:
        dump_json({"trace": [r.to_dict() for r in trace.records], "manifest": manifest}, args.trace)
    return EXIT_FOR[termination]


def cmd_synth(args):
    started = _now()
    try:
        spec = SyntheticSpec(n=args.n, k=args.k, loading_scale=args.loading_scale,
                             noise_scale=args.noise_scale, perturbation=args.perturbation, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    truth, S0 = plant_model(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix(out / "sigma0.csv", S0)
    manifest = _manifest("synth", [], config=vars(spec), seed=spec.seed, input_fingerprint=fingerprint(S0))
    dump_json({**model_to_dict(truth), "manifest": manifest}, out / "truth.json")
    dump_json({**manifest, "outputs": ["sigma0.csv", "truth.json"], "started": started, "finished": _now()},
              out / "manifest.json")
    return EXIT_OK


def cmd_divergence(args):
    S1 = as_covariance(read_symmetric(args.first), args.first)
    S2 = as_covariance(read_symmetric(args.second), args.second)
    if S1.shape != S2.shape:
        raise InputError(f"dimension mismatch: {args.first} is {S1.shape[0]}x{S1.shape[0]}, "
                         f"{args.second} is {S2.shape[0]}x{S2.shape[0]}")
    print(f"{i_divergence(S1, S2):.15g}")
    return EXIT_OK


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="divfact: %(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args)
    except (InputError, DimensionError, DefinitenessError, SingularityError, ValueError) as exc:
        print(f"divfact {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
