"""Command-line interface.

Verbs: solve, compare, geometry, synth, convert. Flags mirror the
ExperimentConfig field names; a JSON config file provides defaults that
individual flags override. Exit codes: 0 success, 1 parse/config error,
2 solver degeneracy/non-convergence.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import (ConfigError, DatasetFormatError, DegenerateIterateError,
                     DimensionMismatchError, NonConvergenceError)
from .harness import ExperimentConfig, compare_baselines, geometry_report, run_experiment
from .io import load_dataset, save_dataset
from .oracle import SpectrumSpec, synthesize_dataset


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _csv_floats(text):
    return tuple(float(v) for v in text.split(","))


def _csv_ints(text):
    return tuple(int(v) for v in text.split(","))


def _add_experiment_flags(p):
    p.add_argument("--config", help="JSON config file; flags override it")
    p.add_argument("--dataset", dest="dataset_path")
    p.add_argument("--format", dest="dataset_format", choices=("csv", "f64le"))
    p.add_argument("--spectrum", type=_csv_floats,
                   help="comma-separated eigenvalues for a synthetic dataset")
    p.add_argument("--gap-index", type=int, dest="gap_index")
    p.add_argument("--n", type=int)
    p.add_argument("--synth-seed", type=int, dest="synth_seed")
    p.add_argument("--solver", choices=("vrpca_vector", "vrpca_block", "oja",
                                        "orthogonal_iteration", "deflation"))
    p.add_argument("--k", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--use-rotation", dest="use_rotation",
                   action="store_true", default=None)
    p.add_argument("--no-rotation", dest="use_rotation", action="store_false")
    p.add_argument("--sweeps", type=int)
    p.add_argument("--init", choices=("gaussian", "power"))
    p.add_argument("--burn-in", dest="run_burn_in",
                   action="store_true", default=None)
    p.add_argument("--zeta", type=float)
    p.add_argument("--rescale", dest="rescale", action="store_true",
                   default=None)
    p.add_argument("--no-rescale", dest="rescale", action="store_false")
    p.add_argument("--oracle-check", dest="oracle_check",
                   action="store_true", default=None)
    p.add_argument("--no-oracle-check", dest="oracle_check",
                   action="store_false")
    p.add_argument("--lambda-hat", type=float, dest="lambda_hat")
    p.add_argument("--seeds", type=_csv_ints)
    p.add_argument("--out", dest="out_dir")


def _experiment_config(args) -> ExperimentConfig:
    raw = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
    for key in ExperimentConfig.__dataclass_fields__:
        val = getattr(args, key, None)
        if val is not None:
            raw[key] = val
    return ExperimentConfig.from_dict(raw)


def build_parser() -> _Parser:
    parser = _Parser(prog="vrpca", description=__doc__)
    sub = parser.add_subparsers(dest="verb", required=True)

    p_solve = sub.add_parser("solve", help="run the experiment pipeline")
    _add_experiment_flags(p_solve)

    p_cmp = sub.add_parser("compare", help="solver-vs-baselines comparison")
    _add_experiment_flags(p_cmp)

    p_geo = sub.add_parser("geometry", help="Rayleigh-quotient diagnostics")
    p_geo.add_argument("--lam", type=float, required=True,
                       help="eigengap of the probe instances")
    p_geo.add_argument("--eps", type=float, required=True)
    p_geo.add_argument("--samples", type=int, default=10000)
    p_geo.add_argument("--seed", type=int, default=0)
    p_geo.add_argument("--out")

    p_synth = sub.add_parser("synth", help="write a synthetic dataset")
    p_synth.add_argument("--spectrum", type=_csv_floats, required=True)
    p_synth.add_argument("--n", type=int, required=True)
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.add_argument("--format", choices=("csv", "f64le"), default="f64le")
    p_synth.add_argument("--out", required=True)

    p_conv = sub.add_parser("convert", help="convert between dataset formats")
    p_conv.add_argument("src")
    p_conv.add_argument("dst")
    p_conv.add_argument("--from", dest="src_format",
                        choices=("csv", "f64le"), required=True)
    p_conv.add_argument("--to", dest="dst_format",
                        choices=("csv", "f64le"), required=True)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.verb == "solve":
            reports = run_experiment(_experiment_config(args))
            json.dump([r.to_dict() for r in reports], sys.stdout, indent=2)
            sys.stdout.write("\n")
        elif args.verb == "compare":
            result = compare_baselines(_experiment_config(args))
            json.dump(result, sys.stdout, indent=2)
            sys.stdout.write("\n")
        elif args.verb == "geometry":
            report = geometry_report(args.lam, args.eps, out=args.out,
                                     samples=args.samples, seed=args.seed)
            json.dump(report, sys.stdout, indent=2)
            sys.stdout.write("\n")
        elif args.verb == "synth":
            spec = SpectrumSpec(eigenvalues=args.spectrum)
            X = synthesize_dataset(spec, args.n, args.seed)
            save_dataset(X, args.out, args.format)
            print(f"wrote {X.d} x {X.n} dataset (r={X.r:.6g}) to {args.out}")
        elif args.verb == "convert":
            X = load_dataset(args.src, args.src_format)
            save_dataset(X, args.dst, args.dst_format)
            print(f"wrote {X.d} x {X.n} dataset to {args.dst}")
    except (ConfigError, DatasetFormatError, DimensionMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DegenerateIterateError, NonConvergenceError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
