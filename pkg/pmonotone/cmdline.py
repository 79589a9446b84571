"""Parses the command line arguments provided."""

import argparse
import sys
from pathlib import Path
from textwrap import dedent
from typing import Any, Dict, List, NoReturn, Optional, Sequence

from pmonotone import __version__
from pmonotone.exceptions import ConfigError
from pmonotone.text import BOLD, RESET

COMMANDS = (
    "solve-radial",
    "solve-grid",
    "scan",
    "check-monotone",
    "check-mass",
    "capacity-sweep",
    "identity",
    "rigidity-gen",
)
USAGE_MSG = dedent(
    f"""\
    pmonotone <command> <model options> <run options>

    {BOLD}Please specify:{RESET}
    - 1) a command: {", ".join(COMMANDS)}
    - 2) a model (e.g. `--model schwarzschild --mass 1 --r0 2`)
    - 3) (optional) run options (e.g. `--p 1.5`, `--t 1:100:200`, `--output out.csv`)

    {BOLD}Examples:{RESET}
        pmonotone scan --model schwarzschild --mass 1 --r0 2 --p 2 --t 1:100:200
        pmonotone check-mass --model euclidean --r0 1 --p 2
        pmonotone capacity-sweep --model euclidean --p-list 1.5,1.25,1.125,1.0625

    Options not given on the command line are read from a JSON file passed with
    `--config`, then from the [tool.pmonotone] table of pyproject.toml.
    """
)


class _Parser(argparse.ArgumentParser):
    """Argument parser whose usage errors exit with code 1."""

    def error(self, message: str) -> NoReturn:
        """Print usage and the problem, then exit with code 1."""
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _floats(flag: str, text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ConfigError(flag, f"expected comma-separated numbers, got {text!r}") from None


def _range(flag: str, text: str, parts: int) -> List[str]:
    pieces = text.split(":")
    if len(pieces) != parts:
        shape = "MIN:MAX:COUNT" if parts == 3 else "MIN:MAX"
        raise ConfigError(flag, f"expected {shape}, got {text!r}")
    return pieces


def _number(flag: str, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ConfigError(flag, f"expected a number, got {text!r}") from None


def _count(flag: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(flag, f"expected an integer count, got {text!r}") from None


class CLIArgs:  # pylint: disable=R0902
    """Stores the command line arguments passed."""

    command: str
    config: Optional[str]
    verbose: int
    overrides: Dict[str, Any]

    def __init__(self, args: argparse.Namespace) -> None:
        """
        Initialize this instance with the parsed command line arguments.

        Only options that were actually given end up in :attr:`overrides`, so
        that they can be layered over file configuration.

        Parameters
        ----------
        args
            Command line arguments passed to pmonotone

        Raises
        ------
        ConfigError
            If a range or list option is malformed.
        """
        self.command = args.command
        self.config = args.config
        self.verbose = args.verbose
        overrides: Dict[str, Any] = {}
        for key in ("model", "mass", "r0", "profile", "sigma", "p", "spacing", "resolution"):
            if getattr(args, key) is not None:
                overrides[key] = getattr(args, key)
        for key in ("r_out", "dims", "hawking_mass", "alpha", "beta", "output"):
            if getattr(args, key) is not None:
                overrides[key] = getattr(args, key)
        if args.p_list is not None:
            overrides["p_list"] = _floats("--p-list", args.p_list)
        if args.eps_list is not None:
            overrides["eps_list"] = _floats("--eps-list", args.eps_list)
        if args.t is not None:
            low, high, count = _range("--t", args.t, 3)
            if low.strip():
                overrides["t_min"] = _number("--t", low)
            overrides["t_max"] = _number("--t", high)
            overrides["t_count"] = _count("--t", count)
        if args.rho is not None:
            low, high, count = _range("--rho", args.rho, 3)
            overrides["rho_min"] = _number("--rho", low)
            overrides["rho_max"] = _number("--rho", high)
            overrides["rho_count"] = _count("--rho", count)
        if args.region is not None:
            pieces = _range("--region", args.region, 2)
            overrides["region"] = [_number("--region", piece) for piece in pieces]
        if args.timings:
            overrides["timings"] = True
        self.overrides = overrides

    def __repr__(self) -> str:  # pragma: nocover
        """Print prettily."""
        return str(self.__dict__)

    def paths(self) -> List[str]:
        """
        Absolute paths used to locate the project root.

        The files named on the command line, or the working directory when
        there are none.
        """
        named = [path for path in (self.config, self.overrides.get("profile")) if path]
        return [str(Path(path).resolve()) for path in named] or [str(Path.cwd().resolve())]

    @staticmethod
    def parse_args(argv: Optional[Sequence[str]]) -> "CLIArgs":
        """
        Parse command-line arguments.

        Parameters
        ----------
        argv
            Passed via command-line.

        Returns
        -------
        CLIArgs
            Object that holds all the parsed command line arguments.
        """
        parser = _Parser(
            prog="pmonotone",
            description="Monotone quantities of p-harmonic potentials on AF 3-manifolds.",
            usage=USAGE_MSG,
        )
        parser.add_argument("command", choices=COMMANDS, help="What to compute.")
        parser.add_argument(
            "--model", choices=("euclidean", "schwarzschild", "profile"), help="Model metric."
        )
        parser.add_argument("--mass", type=float, help="Schwarzschild mass.")
        parser.add_argument("--r0", type=float, help="Inner coordinate radius.")
        parser.add_argument("--profile", help="Two-column r,phi CSV for model `profile`.")
        parser.add_argument("--sigma", type=float, help="Decay exponent of the profile tail.")
        parser.add_argument("--p", type=float, help="Exponent of the p-Laplacian.")
        parser.add_argument(
            "--p-list",
            help="Comma-separated exponents for the p -> 1 capacity limit, e.g. `1.5,1.25,1.125`.",
        )
        parser.add_argument(
            "--eps-list", help="Comma-separated regularizations for the grid solver."
        )
        parser.add_argument(
            "--t",
            metavar="MIN:MAX:COUNT",
            help=dedent(
                r"""
                Level parameters. MIN may be left empty to start at the inner
                boundary, e.g. `--t :100:200`.
                """
            ),
        )
        parser.add_argument("--spacing", choices=("log", "linear"), help="Spacing of the t-grid.")
        parser.add_argument("--resolution", type=int, help="Grid cells per axis.")
        parser.add_argument("--r-out", dest="r_out", type=float, help="Outer grid radius.")
        parser.add_argument("--dims", type=int, choices=(2, 3), help="Grid dimension.")
        parser.add_argument(
            "--region", metavar="R1:R2", help="Shell used by the localized mass test."
        )
        parser.add_argument(
            "--hawking-mass",
            dest="hawking_mass",
            type=float,
            help="Parameter m_H of the rigidity metric.",
        )
        parser.add_argument(
            "--rho", metavar="MIN:MAX:COUNT", help="Radii sampled by `rigidity-gen`."
        )
        parser.add_argument("--alpha", type=float, help="Parameter of the transformed system.")
        parser.add_argument("--beta", type=float, help="Exponent of the divergence identity.")
        parser.add_argument("--output", help="Output file; standard output when omitted.")
        parser.add_argument("--config", help="JSON configuration file.")
        parser.add_argument(
            "--timings", action="store_true", help="Include wall-clock timings in reports."
        )
        parser.add_argument(
            "-v", "--verbose", action="count", default=0, help="Log progress (repeat for debug)."
        )
        parser.add_argument("--version", action="version", version=f"pmonotone {__version__}")
        args = parser.parse_args(argv)
        return CLIArgs(args)
