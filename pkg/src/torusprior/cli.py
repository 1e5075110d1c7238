"""Command-line experiment driver.

Subcommands: sample-prior, parametrix-report, compare-fd, denoise,
hierarchical-sample, ct.  Parameters resolve as defaults < --config file <
explicit flags; every run writes the resolved config, metadata and data
files into --out.  Exit codes: 0 success, 2 invalid configuration,
3 numerical instability.

Heavy imports happen inside main() so that --threads can pin BLAS pools
before numpy loads.
"""

from __future__ import annotations

import argparse
import os
import sys


def _add_param_flags(parser: argparse.ArgumentParser, defaults: dict) -> None:
    for key in sorted(defaults):
        proto = defaults[key]
        flag = "--" + key.replace("_", "-")
        if isinstance(proto, bool):
            parser.add_argument(flag, action="store_true", default=None)
        elif isinstance(proto, int):
            parser.add_argument(flag, type=int, default=None)
        elif isinstance(proto, float):
            parser.add_argument(flag, type=float, default=None)
        else:
            parser.add_argument(flag, type=str, default=None)


def build_parser(drivers: dict) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torusprior",
        description="Inhomogeneous random-field priors and Bayesian inversion experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (defaults, _) in drivers.items():
        p = sub.add_parser(name)
        p.add_argument("--config", type=str, default=None,
                       help="INI config file with a [params] section")
        p.add_argument("--out", type=str, required=True,
                       help="output directory")
        p.add_argument("--threads", type=int, default=None,
                       help="BLAS/OpenMP thread count")
        _add_param_flags(p, defaults)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # set thread pools before numpy is imported
    if "--threads" in argv:
        i = argv.index("--threads")
        if i + 1 < len(argv):
            for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                        "MKL_NUM_THREADS"):
                os.environ.setdefault(var, argv[i + 1])

    from .config import ExperimentConfig
    from .experiments import DRIVERS
    from .symbols import EllipticityError, ParametrixInstabilityError

    parser = build_parser(DRIVERS)
    args = parser.parse_args(argv)
    defaults, driver = DRIVERS[args.command]

    params = dict(defaults)
    try:
        if args.config:
            cfg = ExperimentConfig.read(args.config, defaults, args.command)
            params.update(cfg.params)
        for key in defaults:
            v = getattr(args, key, None)
            if v is not None:
                params[key] = v
    except (KeyError, ValueError, FileNotFoundError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2

    try:
        meta = driver(params, args.out)
    except (EllipticityError, ParametrixInstabilityError, FloatingPointError) as exc:
        print(f"error: numerical instability: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 2
    print(f"{args.command}: wrote {args.out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
