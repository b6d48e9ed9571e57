"""Command-line front end: ``repscore {synth,transform,analyze,verify}``.

Exit codes: 0 success (quarantined cells allowed), 1 verification failure or
every analysis cell failed, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import dataset as ds_mod
from .colorspace import DEFAULT_PREC_EPSILON, PrecTransform
from .complexity import DEFAULT_ENTROPY_FLOOR
from .features import CONV_TILE, DENSE
from .pipeline import GridSpec, ThresholdRule, run_grid, write_grid
from .regression import RidgeConfig
from .representations import REPRESENTATIONS, PairingError, apply_representation, check_pairing, invert_representation

log = logging.getLogger("repscore")


class UsageError(Exception):
    pass


class _HelpFormatter(argparse.ArgumentDefaultsHelpFormatter):
    def _get_help_string(self, action):
        if action.default in (None, False) or action.default is argparse.SUPPRESS:
            return action.help
        return super()._get_help_string(action)


def _default_seed() -> int:
    env = os.environ.get("REPSCORE_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"REPSCORE_SEED must be an integer, got {env!r}") from None


def _csv_list(text: str, allowed) -> tuple:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in items if s not in allowed]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"choose from {','.join(allowed)}; got {text!r}")
    return items


def _fractions(text: str):
    try:
        fr = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected three comma-separated reals, got {text!r}") from None
    if len(fr) != 3:
        raise argparse.ArgumentTypeError(f"expected three comma-separated reals, got {text!r}")
    return fr


# -- synth -------------------------------------------------------------------

def cmd_synth(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    out = Path(args.out)
    if args.task == "quadratic":
        if args.n is not None or args.m is not None or args.cov_scale is not None:
            raise UsageError("--n, --m and --cov-scale apply to --task lemma2 only")
        samples = args.samples if args.samples is not None else 5000
        sigma = args.sigma if args.sigma is not None else 0.05
        r1, r2 = ds_mod.make_quadratic_task(samples, sigma, seed)
        truth = {"task": "quadratic", "samples": samples, "sigma": sigma, "seed": seed}
        ds_mod.save_dataset(r1, out / "r1", {"ground_truth": {**truth, "feature": "x"}})
        ds_mod.save_dataset(r2, out / "r2", {"ground_truth": {**truth, "feature": "x^2"}})
        print(f"wrote {out / 'r1'} and {out / 'r2'}")
        return 0
    n = args.n if args.n is not None else 10
    m = args.m if args.m is not None else 2
    if n < 1 or m < 1:
        raise UsageError("--n and --m must be positive")
    spec = ds_mod.default_lemma2_spec(
        n=n, m=m,
        sample_count=args.samples if args.samples is not None else 4096,
        sigma=args.sigma if args.sigma is not None else 0.1,
        cov_scale=args.cov_scale if args.cov_scale is not None else 1.0,
        seed=seed,
    )
    data = ds_mod.make_synthetic_regression(spec)
    truth = {
        "task": "lemma2",
        "n_features": spec.n_features,
        "m_outputs": spec.m_outputs,
        "noise_sigma": spec.noise_sigma,
        "sample_count": spec.sample_count,
        "seed": seed,
        "cov_scale": args.cov_scale if args.cov_scale is not None else 1.0,
        "covariance": spec.covariance,
        "true_weights": spec.true_weights,
    }
    ds_mod.save_dataset(data, out, {"ground_truth": truth})
    print(f"wrote {out}")
    return 0


# -- transform ---------------------------------------------------------------

def cmd_transform(args) -> int:
    data = ds_mod.load_dataset(args.inp, task_kind=args.task_kind)
    try:
        check_pairing(args.rep, data.channels)
    except PairingError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out)
    extra = {}
    if args.inverse:
        prec = None
        if args.rep == "prec":
            prec_path = Path(args.inp) / "prec.json"
            if not prec_path.is_file():
                raise UsageError(f"{prec_path} not found; inverting prec needs the fitted transform")
            prec = PrecTransform.load(prec_path)
        result = invert_representation(data, args.rep, prec=prec, block=args.block)
        ds_mod.save_dataset(result, out, extra)
    else:
        result, prec = apply_representation(data, args.rep, prec_epsilon=args.prec_epsilon, block=args.block)
        ds_mod.save_dataset(result, out, extra)
        if prec is not None:
            prec.save(out / "prec.json")
    print(f"wrote {out}")
    return 0


# -- analyze -----------------------------------------------------------------

def cmd_analyze(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    datasets = []
    for path in args.inp:
        # cells and artifact directories are named after the dataset directory
        d = replace(ds_mod.load_dataset(path, task_kind=args.task_kind), name=Path(path).resolve().name)
        if args.split is not None:
            d = ds_mod.split_dataset(d, args.split, seed)
        datasets.append(d)
    if args.threshold is not None:
        rule = ThresholdRule("absolute", args.threshold)
    else:
        rule = ThresholdRule("relative", args.threshold_factor)
    try:
        spec = GridSpec(
            datasets=tuple(datasets),
            representations=args.reps,
            modes=args.modes,
            ridge=RidgeConfig(lam=args.lam, batch_size=args.batch, runs=args.runs, seed=seed,
                              ddof=1 if args.sample_variance else 0),
            prec_epsilon=args.prec_epsilon,
            entropy_floor=args.entropy_floor,
            threshold=rule,
            tile=args.tile,
            stride=args.stride,
            bias=args.bias,
            jobs=args.jobs,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    result = run_grid(spec)
    write_grid(result, args.out, spec)
    for e in result.errors:
        log.warning("cell %s/%s/%s quarantined: %s", e.dataset_name, e.representation_name, e.mode, e.error)
    print(f"{len(result.reports)} cells scored, {len(result.errors)} failed; results in {args.out}")
    if not result.reports:
        return 1
    return 0


# -- verify ------------------------------------------------------------------

def cmd_verify(args) -> int:
    from .verify import verify_suite

    seed = args.seed if args.seed is not None else _default_seed()
    report = verify_suite(seed)
    print(report.to_text())
    if not report.passed:
        print("FAILED: " + ", ".join(report.failures), file=sys.stderr)
        return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    fmt = _HelpFormatter
    p = argparse.ArgumentParser(prog="repscore", description=__doc__.splitlines()[0], formatter_class=fmt)
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic dataset directory", formatter_class=fmt)
    s.add_argument("--task", choices=("lemma2", "quadratic"), required=True)
    s.add_argument("--n", type=int, default=None, help="input dimension (lemma2; default 10)")
    s.add_argument("--m", type=int, default=None, help="output dimension (lemma2; default 2)")
    s.add_argument("--samples", type=int, default=None, help="sample count (default 4096 lemma2, 5000 quadratic)")
    s.add_argument("--sigma", type=float, default=None, help="noise std (default 0.1 lemma2, 0.05 quadratic)")
    s.add_argument("--cov-scale", type=float, default=None, help="covariance scale (lemma2; default 1)")
    s.add_argument("--seed", type=int, default=None, help="RNG seed (default $REPSCORE_SEED or 0)")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)

    t = sub.add_parser("transform", help="apply or invert a representation", formatter_class=fmt)
    t.add_argument("--rep", choices=REPRESENTATIONS, required=True)
    t.add_argument("--in", dest="inp", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--prec-epsilon", type=float, default=DEFAULT_PREC_EPSILON, help="PREC eigenvalue regulariser")
    t.add_argument("--block", type=int, default=8, help="block size for blockdct")
    t.add_argument("--inverse", action="store_true")
    t.add_argument("--task-kind", choices=("classification", "regression"), default="classification",
                   help="target type for CSV-manifest image directories")
    t.set_defaults(func=cmd_transform)

    a = sub.add_parser("analyze", help="score representations on datasets", formatter_class=fmt)
    a.add_argument("--in", dest="inp", nargs="+", required=True, help="dataset directories")
    a.add_argument("--reps", type=lambda v: _csv_list(v, REPRESENTATIONS), default=",".join(REPRESENTATIONS),
                   help="comma-separated representations")
    a.add_argument("--modes", type=lambda v: _csv_list(v, (DENSE, CONV_TILE)), default=f"{DENSE},{CONV_TILE}",
                   help="comma-separated feature modes")
    a.add_argument("--lambda", dest="lam", type=float, default=0.1, help="ridge regulariser")
    a.add_argument("--batch", type=int, default=256, help="source images per batch")
    a.add_argument("--runs", type=int, default=10, help="independent batch refits")
    a.add_argument("--seed", type=int, default=None, help="RNG seed (default $REPSCORE_SEED or 0)")
    a.add_argument("--threshold", type=float, default=None,
                   help="absolute train-loss threshold t (default: relative rule)")
    a.add_argument("--threshold-factor", type=float, default=10.0,
                   help="relative rule: t = factor x best mean train loss per dataset and mode")
    a.add_argument("--prec-epsilon", type=float, default=DEFAULT_PREC_EPSILON, help="PREC eigenvalue regulariser")
    a.add_argument("--entropy-floor", type=float, default=DEFAULT_ENTROPY_FLOOR,
                   help="covariance eigenvalues below this are floored (and counted)")
    a.add_argument("--tile", type=int, default=7, help="conv_tile patch side")
    a.add_argument("--stride", type=int, default=2, help="conv_tile patch stride")
    a.add_argument("--bias", action="store_true", help="append a constant feature before ridge")
    a.add_argument("--sample-variance", action="store_true", help="divide weight variance by R-1, not R")
    a.add_argument("--split", type=_fractions, default=None,
                   help="train,val,test fractions; scoring uses train only (default: whole set)")
    a.add_argument("--task-kind", choices=("classification", "regression"), default="classification",
                   help="target type for CSV-manifest image directories")
    a.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel cells")
    a.add_argument("--out", required=True, help="results directory")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", help="run the built-in invariant checks", formatter_class=fmt)
    v.add_argument("--seed", type=int, default=None, help="RNG seed (default $REPSCORE_SEED or 0)")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"repscore {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (ds_mod.ManifestError, FileNotFoundError) as exc:
        print(f"repscore {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
