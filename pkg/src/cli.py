from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Any, Sequence

from dotenv import load_dotenv

from src.errors import InputError, NumericalError, ParameterValidationError
from src.pipeline.artifacts import read_datum_csv
from src.pipeline.config import build_run_config
from src.pipeline.runner import run_command

logger = logging.getLogger("nnls_spectra")


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI run configuration ([background], [grid], [time], [compare])")
    common.add_argument("--out", help="output root (default: $NNLS_SPECTRA_OUTPUT_DIR or ./outputs)")
    common.add_argument("--format", dest="fmt", choices=("csv", "json"), help="table format")
    common.add_argument("--threads", type=int, help="worker threads; NNLS_SPECTRA_THREADS wins")
    common.add_argument("--seed-report", help="also dump the SpectrumReport used by the run to this path")
    common.add_argument("-v", "--verbose", action="store_true")

    bg = common.add_argument_group("background")
    bg.add_argument("--A", type=float)
    bg.add_argument("--B", type=float)
    bg.add_argument("--R", type=float)

    grid = common.add_argument_group("sampling grid")
    grid.add_argument("--half-width", type=float)
    grid.add_argument("--points", type=int)
    grid.add_argument("--puncture", type=float)
    return common


def _time_group(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("time stepping")
    group.add_argument("--L", type=float, help="torus half period; B*L must be a multiple of pi")
    group.add_argument("--N", type=int, help="grid points (power of two)")
    group.add_argument("--dt", type=float)
    group.add_argument("--t-final", type=float)
    group.add_argument("--snapshots", type=float, nargs="+")
    group.add_argument("--mollify-width", type=float)


def _compare_group(parser: argparse.ArgumentParser, *, many_xi: bool) -> None:
    group = parser.add_argument_group("ray")
    if many_xi:
        group.add_argument("--xi", type=float, nargs="+")
    else:
        group.add_argument("--xi", type=float)
    group.add_argument("--margin", type=float, help="relative denominator margin of the periodic formula")


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="nnls-spectra",
        description="Scattering, spectral classification and long-time asymptotics of the nonlocal NLS with step-like data.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    scatter = sub.add_parser("scatter", parents=[common], help="scattering data a1, a2, b on the real line")
    scatter.add_argument("--datum", help="sampled initial datum CSV instead of the pure step")
    sub.add_parser("zeros", parents=[common], help="zeros of a1 in the closed upper half-plane")
    sub.add_parser("winding", parents=[common], help="winding of arg(a1 a2) along the negative axis")
    sub.add_parser("classify", parents=[common], help="case tag, n, norming constants and ray sectors")

    asymptote = sub.add_parser("asymptote", parents=[common], help="leading asymptotic term at x = 4 xi t")
    _compare_group(asymptote, many_xi=True)
    asymptote.add_argument("--t", type=float, nargs="+", help="times (default: t_final)")

    simulate = sub.add_parser("simulate", parents=[common], help="split-step evolution of the mollified step")
    _time_group(simulate)

    cmp = sub.add_parser("compare", parents=[common], help="simulation against the leading term along a ray")
    _time_group(cmp)
    _compare_group(cmp, many_xi=False)
    cmp.add_argument("--x-min", type=float)
    cmp.add_argument("--x-max", type=float)
    return parser


def _overrides(args: argparse.Namespace) -> dict[str, dict[str, Any]]:
    def pick(*names: str) -> dict[str, Any]:
        return {name: getattr(args, name, None) for name in names}

    out = {
        "background": pick("A", "B", "R"),
        "grid": pick("half_width", "points", "puncture"),
        "time": pick("L", "N", "dt", "t_final", "snapshots", "mollify_width"),
        "compare": pick("x_min", "x_max", "margin"),
    }
    xi = getattr(args, "xi", None)
    if args.command == "compare":
        out["compare"]["xi"] = xi
    elif args.command == "asymptote" and xi and getattr(args, "margin", None) is not None:
        # margin needs a compare block to live in
        out["compare"]["xi"] = xi[0]
    return out


def configure_logging(verbose: bool) -> None:
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
    )


def dispatch(argv: Sequence[str] | None = None) -> int:
    """Parse, run one command, write its artifacts; returns the process exit code."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    try:
        datum = None
        overrides = _overrides(args)
        if getattr(args, "datum", None):
            if any(getattr(args, name) is not None for name in ("A", "B", "R")):
                raise InputError("--datum carries its own background; drop --A/--B/--R")
            datum = read_datum_csv(args.datum)
            overrides["background"] = datum.background.model_dump()
        config = build_run_config(
            args.command,
            config_path=args.config,
            overrides=overrides,
            out_dir=args.out,
            fmt=args.fmt,
            threads=args.threads,
        )
        result = run_command(
            config,
            xis=getattr(args, "xi", None) if args.command == "asymptote" else None,
            times=getattr(args, "t", None),
            datum=datum,
            seed_report=args.seed_report,
        )
    except ParameterValidationError as e:
        logger.error("%s", e)
        for err in e.errors:
            logger.error("  %s: %s", err["path"], err["message"])
        return e.exit_code
    except (InputError, FileNotFoundError) as e:
        logger.error("%s", e)
        return InputError.exit_code
    except NumericalError as e:
        logger.error("numerical failure: %s", e)
        return e.exit_code

    print(json.dumps(result.report, indent=2, ensure_ascii=False, default=str))
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
