"""
thzrf command line.

    python -m thzrf.main run configs/reference_link.ini
    python -m thzrf.main validate configs/reference_link.ini
    python -m thzrf.main oracle configs/reference_link.ini
    python -m thzrf.main mc-check configs/reference_link.ini

Exit status: 0 when every grid point is clean, 1 when rows carry flags or a
report finds a mismatch (a JSON summary goes to stdout), 2 on bad input.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from thzrf import __version__
from thzrf.config import settings
from thzrf.errors import ConfigError, ThzrfError
from thzrf.schemas import SimConfig
from thzrf.services.aser import aser
from thzrf.services.mcsim import run_mc_coupled
from thzrf.services.oracle import oracle_aser
from thzrf.services.sweep import (
    emit, flag_summary, parse_config, point_model, run_sweep, serialize,
)

logger = logging.getLogger("thzrf")

EXIT_OK = 0
EXIT_FLAGGED = 1
EXIT_INPUT = 2


def _load(args):
    return parse_config(args.config, use_defaults=not args.no_defaults)


def cmd_run(args) -> int:
    model, spec = _load(args)
    curve = run_sweep(model, spec)
    files = emit(curve, spec, model)
    print(f"wrote {files.csv_path} ({len(curve.rows)} rows), {files.plot_path}, {files.meta_path}")
    if curve.flagged:
        print(json.dumps(flag_summary(curve), sort_keys=True))
        return EXIT_FLAGGED
    return EXIT_OK


def cmd_validate(args) -> int:
    model, spec = _load(args)
    sys.stdout.write(serialize(model, spec))
    return EXIT_OK


def cmd_oracle(args) -> int:
    """Closed form against the quadrature oracle at every grid point."""
    model, spec = _load(args)
    mismatches = []
    print(f"{'point':>10} {'scheme':>14} {'closed form':>24} {'oracle':>24} {'rel err':>10}")
    for value in spec.grid():
        try:
            point = point_model(model, spec, value)
        except (ThzrfError, ValueError) as e:
            logger.error(f"{spec.axis.value}={value:g}: {e}")
            mismatches.append({"snr_db": value, "error": str(e)})
            continue
        for scheme in spec.schemes:
            try:
                closed = aser(point, scheme)
                reference = oracle_aser(point, scheme).value
            except (ThzrfError, ArithmeticError) as e:
                logger.error(f"{scheme.label} @ {value:g}: {e}")
                mismatches.append({"snr_db": value, "scheme": scheme.label, "error": str(e)})
                continue
            rel = abs(closed - reference) / abs(reference) if reference else abs(closed)
            print(f"{value:>10g} {scheme.label:>14} {closed:>24.17g} {reference:>24.17g} {rel:>10.2e}")
            if rel > args.rtol:
                mismatches.append({"snr_db": value, "scheme": scheme.label, "rel_err": rel})
    if mismatches:
        print(json.dumps({"mismatches": mismatches}, sort_keys=True))
        return EXIT_FLAGGED
    return EXIT_OK


def cmd_mc_check(args) -> int:
    """Analytical ASER against conditional-mode Monte Carlo."""
    model, spec = _load(args)
    cfg = spec.sim or SimConfig()
    if args.trials:
        cfg = SimConfig(**{**cfg.model_dump(), "trials": args.trials})
    outliers = []
    print(f"{'point':>10} {'scheme':>14} {'analytical':>14} {'mc':>14} {'stderr':>10} {'z':>7}")
    for value in spec.grid():
        try:
            point = point_model(model, spec, value)
            mc = run_mc_coupled(point, spec.schemes, cfg)
        except (ThzrfError, ValueError) as e:
            logger.error(f"{spec.axis.value}={value:g}: {e}")
            outliers.append({"snr_db": value, "error": str(e)})
            continue
        for scheme in spec.schemes:
            result = mc[scheme.label]
            try:
                exact = aser(point, scheme)
            except (ThzrfError, ArithmeticError) as e:
                logger.error(f"{scheme.label} @ {value:g}: {e}")
                outliers.append({"snr_db": value, "scheme": scheme.label, "error": str(e)})
                continue
            z = (result.aser - exact) / result.stderr if result.stderr > 0 else 0.0
            print(f"{value:>10g} {scheme.label:>14} {exact:>14.6e} {result.aser:>14.6e} "
                  f"{result.stderr:>10.2e} {z:>7.2f}")
            if exact >= args.min_aser and abs(z) > args.sigmas:
                outliers.append({"snr_db": value, "scheme": scheme.label, "z": z})
    if outliers:
        print(json.dumps({"outliers": outliers}, sort_keys=True))
        return EXIT_FLAGGED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="thzrf",
        description="ASER of dual-hop mixed THz-RF decode-and-forward links",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, help_text):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="sectioned key-value configuration file")
        p.add_argument("--no-defaults", action="store_true",
                       help="require fading shapes and schemes instead of using the built-in link")
        p.set_defaults(handler=handler)
        return p

    add("run", cmd_run, "evaluate the sweep and write CSV, plot script and metadata")
    add("validate", cmd_validate, "parse only; print the canonical configuration")
    oracle = add("oracle", cmd_oracle, "closed form against quadrature oracle")
    oracle.add_argument("--rtol", type=float, default=1e-4)
    check = add("mc-check", cmd_mc_check, "analytical against Monte Carlo")
    check.add_argument("--trials", type=int, default=None)
    check.add_argument("--sigmas", type=float, default=3.0)
    check.add_argument("--min-aser", type=float, default=1e-4)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=settings.get_log_level(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
