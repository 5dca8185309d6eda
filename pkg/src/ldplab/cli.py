"""Command line front end.

One subcommand per pipeline; every run loads an INI config (or falls back
to the built-in two-atom default), applies the common flag overrides, and
exits with 0 (pass), 1 (fail), 2 (inconclusive), or 3 (configuration
error).
"""

import argparse
import sys

from .config import default_config, load_config
from .errors import (BudgetExceededError, ConfigError, ConvergenceError,
                     ImproperFunctionError, ModelError)
from .harness import (run_chebyshev, run_entropy, run_hypotheses, run_lft,
                      run_mosco_pipeline, run_pressure, run_subadditive,
                      run_tiling, verify_duality)
from .reports import status_to_exit

_COMMANDS = {
    "tiling": (run_tiling, "tile boxes and track the margin density"),
    "check-hypotheses": (run_hypotheses,
                         "probe decoupling and local control on events"),
    "pressure": (run_pressure, "tabulate pressure curves"),
    "entropy": (run_entropy, "estimate entropies on a volume schedule"),
    "lft": (run_lft, "conjugate a curve file onto the x grid"),
    "chebyshev": (run_chebyshev, "stress the exponential upper bound"),
    "subadditive": (run_subadditive, "two-scale inequality checks"),
    "mosco": (run_mosco_pipeline, "truncation family convergence study"),
    "verify": (verify_duality, "full entropy/pressure duality comparison"),
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ldplab",
        description="Entropy and pressure toolkit for lattice field models")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, help_text) in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="INI experiment file")
        p.add_argument("--seed", type=int, help="override [run] seed")
        p.add_argument("--out", help="override [run] out directory")
        p.add_argument("--mode", choices=("exact", "mc"),
                       help="override [run] mode")
        p.add_argument("--quiet", action="store_true",
                       help="suppress per-report lines")
        if name == "lft":
            p.add_argument("input", help="curve CSV to conjugate")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        if args.seed is not None:
            cfg.seed = args.seed
        if args.out is not None:
            cfg.out_dir = args.out
        if args.mode is not None:
            cfg.mode = args.mode
        if args.quiet:
            cfg.quiet = True

        runner = _COMMANDS[args.command][0]
        if args.command == "lft":
            result = runner(cfg, args.input)
        else:
            result = runner(cfg)
    except (ConfigError, ModelError, FileNotFoundError) as exc:
        print(f"ldplab: configuration error: {exc}", file=sys.stderr)
        return 3
    except ImproperFunctionError as exc:
        print(f"ldplab: {exc}", file=sys.stderr)
        return 1
    except (BudgetExceededError, ConvergenceError) as exc:
        print(f"ldplab: inconclusive: {exc}", file=sys.stderr)
        return 2

    if not cfg.quiet:
        for rep in result.reports:
            print(f"[{rep.status}] {rep.inequality}: "
                  f"worst_slack={rep.worst_slack:.6g} "
                  f"tolerance={rep.tolerance:g} events={rep.events}")
        for path in result.artifacts:
            print(f"wrote {path}")
        print(f"{args.command}: {result.status}")
    return status_to_exit(result.status)


if __name__ == "__main__":
    sys.exit(main())
