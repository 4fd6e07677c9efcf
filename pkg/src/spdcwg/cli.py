"""Command-line front end.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime or
convergence error, 3 I/O error.  The default config path may be set with
the SPDCWG_CONFIG environment variable.
"""
from __future__ import annotations

import argparse
import logging
import sys

from .config import CONFIG_ENV, load_config
from .errors import ConfigError, StageError
from .pipeline import SCENARIOS, run_modes, run_scenario, run_spectra, run_tune_pump

__all__ = ["main", "build_parser", "EXIT_OK", "EXIT_CONFIG", "EXIT_RUNTIME", "EXIT_IO"]

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("spdcwg")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse parser that reports usage problems as exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def _common(p):
    p.add_argument("-c", "--config", help=f"TOML config file (default: ${CONFIG_ENV} or packaged)")
    p.add_argument("-o", "--output-dir", default="out", help="directory for result files")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config entry by dotted key, e.g. pump.wavelength_nm=400.6")
    p.add_argument("--seed", type=int, help="Monte Carlo seed (overrides monte_carlo.seed)")
    p.add_argument("--noiseless", action="store_true", help="write expected curves, no sampling")
    p.add_argument("-v", "--verbose", action="count", default=0)


_HELP = {
    "modes": "list guided modes with effective and group indices",
    "bands": "phase-matching band map for all guided mode triplets",
    "islands": "phase-matching islands along the fixed-pump line",
    "spectra": "marginal and heralded single-photon spectra (expected, no sampling)",
    "tune-pump": "pump wavelength maximizing the two-photon overlap",
    "hom": "simulated HOM dip with counts and fit",
    "fringes": "simulated polarization fringes in four conjugate bases",
    "experiment": "run every scenario in turn (including simulated heralded scans)",
    "summary": "table of fitted visibilities and brightness per filter",
    "validate": "check the configuration and report every problem",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="spdcwg", description="Type-II SPDC in multimode PPKTP waveguides.")
    sub = parser.add_subparsers(dest="command", metavar="subcommand", parser_class=_Parser)
    sub.required = True
    for name, text in _HELP.items():
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        if name == "modes":
            p.add_argument("--wavelength", type=float, default=801.0, help="wavelength in nm")
        if name == "tune-pump":
            p.add_argument("--filter", default=None, help="filter name applied to both arms")
    return parser


def _run(args) -> None:
    overrides = list(args.overrides)
    if args.noiseless:
        overrides.append("monte_carlo.noiseless=true")
    config = load_config(args.config, overrides, args.seed)
    if args.command == "validate":
        print(f"configuration valid (sha256 {config.fingerprint})")
        return
    out = args.output_dir
    if args.command == "modes":
        folders = [run_modes(config, out, args.wavelength)]
    elif args.command == "tune-pump":
        if args.filter is not None and args.filter not in config.filters:
            raise ConfigError([f"--filter: undefined filter {args.filter!r}; defined filters: "
                               f"{', '.join(sorted(config.filters))}"])
        folders = [run_tune_pump(config, out, args.filter)]
    elif args.command == "spectra":
        folders = [run_spectra(config, out)]
    elif args.command == "experiment":
        folders = [run_scenario(config, s, out) for s in SCENARIOS]
    else:
        folders = [run_scenario(config, args.command, out)]
    for folder in folders:
        print(folder)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        _run(args)
    except ConfigError as exc:
        print(f"[config] {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if isinstance(exc.cause, OSError):
            return EXIT_IO
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"[io] {exc}", file=sys.stderr)
        return EXIT_IO
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        log.debug("runtime failure", exc_info=True)
        print(f"[runtime] {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
