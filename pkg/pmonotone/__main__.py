"""Run a pmonotone computation and write its results."""

from __future__ import annotations

import logging
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from pmonotone import identities, massbounds, monotone, pdesolve
from pmonotone.cmdline import CLIArgs
from pmonotone.config.config import (
    Configs,
    get_default_config,
    merge_config,
    read_json_config,
    read_pyproject_section,
    validate_config,
)
from pmonotone.exceptions import ConfigError, PMonotoneError
from pmonotone.find_root import find_project_root
from pmonotone.geometry import (
    RadialMetric,
    adm_mass_estimate,
    hawking_mass,
    make_radial_metric,
    read_profile,
)
from pmonotone.grid import make_grid
from pmonotone.path_utils import write_csv, write_json
from pmonotone.radial import RadialPotential, annulus_capacity, capacity, solve_radial
from pmonotone.text import BOLD, RESET, verdict

logger = logging.getLogger("pmonotone")

THREADS_ENV = "PMONOTONE_THREADS"
INTEGRATED_TOLERANCE = 1e-6
EXIT_OK, EXIT_ERROR, EXIT_HYPOTHESES = 0, 1, 2


@dataclass
class Outcome:
    """What a command produced."""

    results: dict[str, Any] = field(default_factory=dict)
    violations: list[dict[str, Any]] = field(default_factory=list)
    hypotheses: dict[str, bool] = field(default_factory=dict)
    summary: list[tuple[str, str, bool | None]] = field(default_factory=list)
    table: tuple[Sequence[str], list[dict[str, Any]]] | None = None


class Timer:
    """Wall-clock time per phase."""

    def __init__(self) -> None:
        """Start with no phases."""
        self.phases: dict[str, float] = {}

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        """Time the body of a ``with`` block."""
        start = time.perf_counter()
        try:
            yield
        finally:
            self.phases[name] = self.phases.get(name, 0.0) + time.perf_counter() - start


def _get_configs(cli_args: CLIArgs, project_root: Path) -> Configs:
    """
    Layer defaults, pyproject.toml, the JSON config file and command-line flags.

    Parameters
    ----------
    cli_args
        Commandline arguments passed to pmonotone
    project_root
        Root of repository, where pyproject.toml / .git / .hg is.

    Returns
    -------
    Configs
        Validated configuration.

    Raises
    ------
    ConfigError
        If any layer holds an unknown key or a bad value.
    """
    # start with default config.
    config = get_default_config()
    # If a section is in pyproject.toml, use that.
    merge_config(config, read_pyproject_section(project_root), "pyproject.toml")
    # A JSON config file comes next.
    if cli_args.config is not None:
        document, lines = read_json_config(cli_args.config)
        merge_config(config, document, cli_args.config, lines)
    # If an option was passed via CLI, use that.
    merge_config(config, cli_args.overrides, "command line")

    threads = os.environ.get(THREADS_ENV)
    if threads is not None:
        try:
            config["threads"] = int(threads)
        except ValueError:
            raise ConfigError(THREADS_ENV, f"expected an integer, got {threads!r}") from None
    validate_config(config)
    return config


def _metric(configs: Configs) -> RadialMetric:
    if configs["model"] == "profile":
        assert configs["profile"] is not None
        return read_profile(configs["profile"], r_min=configs["r0"], sigma=configs["sigma"])
    if configs["model"] == "schwarzschild":
        return make_radial_metric("schwarzschild", r_min=configs["r0"], mass=configs["mass"])
    return make_radial_metric("euclidean", r_min=configs["r0"])


def _mass(metric: RadialMetric) -> float:
    if metric.adm_mass is not None:
        return metric.adm_mass
    estimate = adm_mass_estimate(metric, metric.reliable_radius())
    logger.info("ADM mass estimated at r = %g: %.10g", estimate.radius, estimate.mass)
    return estimate.mass


def _t_grid(configs: Configs, lower: float) -> np.ndarray:
    t_min = configs["t_min"] if configs["t_min"] is not None else lower
    return monotone.log_grid(t_min, configs["t_max"], configs["t_count"], configs["spacing"])


def _pool_map(func: Callable[[Any], Any], items: Sequence[Any], threads: int) -> list[Any]:
    """Order-preserving map, threaded when more than one worker is configured."""
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def _series(pot: RadialPotential, ts: np.ndarray, threads: int) -> monotone.QuantitySeries:
    """quantity_series evaluated in per-thread batches of levels."""
    batches = [chunk for chunk in np.array_split(ts, max(1, threads)) if chunk.size]
    parts = _pool_map(lambda chunk: monotone.quantity_series(pot, chunk), batches, threads)
    if len(parts) == 1:
        return parts[0]
    first = parts[0]
    columns = {
        name: np.concatenate([getattr(part, name) for part in parts])
        for name in ("t", "s", "F", "A", "B", "D", "G", "m_H", "regular")
    }
    levels = tuple(level for part in parts for level in part.levels)
    return monotone.QuantitySeries(
        p=first.p, a=first.a, c=first.c, C_p=first.C_p, levels=levels, **columns
    )


def _solve_radial(configs: Configs, timer: Timer) -> Outcome:
    metric = _metric(configs)
    with timer.phase("solve"):
        pot = solve_radial(metric, configs["p"])
    return Outcome(
        results=pot.to_dict(),
        summary=[
            ("C_p", f"{pot.C_p:.12g}", None),
            ("c", f"{pot.c:.12g}", None),
            ("boundary t", f"{pot.boundary_parameter:.12g}", None),
        ],
    )


def _solve_grid(configs: Configs, timer: Timer) -> Outcome:
    metric = _metric(configs)
    res = configs["resolution"]
    shape = (res, res) if configs["dims"] == 2 else (res, res, res)
    grid = make_grid(metric, r_out=configs["r_out"], shape=shape)
    p = configs["p"]
    with timer.phase("solve"):
        fields = pdesolve.solve_eps_sweep(grid, p, configs["eps_list"], (0.0, 1.0))
    exact = annulus_capacity(metric, p, metric.r_min, configs["r_out"])
    sweep = []
    summary: list[tuple[str, str, bool | None]] = []
    for solved in fields:
        stencil = pdesolve.regularized_capacity(solved)
        sweep.append(
            {
                "eps": solved.eps,
                "capacity_stencil": stencil,
                "capacity_reaction": pdesolve.regularized_capacity(solved, method="reaction"),
                "iterations": solved.iterations,
                "residual": solved.residual,
            }
        )
        summary.append((f"C_p,eps (eps={solved.eps:g})", f"{stencil:.10g}", None))
    summary.append(("annulus C_p", f"{exact:.10g}", None))
    return Outcome(
        results={
            "grid": grid.descriptor(),
            "annulus_capacity": exact,
            "sweep": sweep,
            "field": fields[-1].to_dict(),
        },
        summary=summary,
    )


def _scan(configs: Configs, timer: Timer) -> Outcome:
    pot = solve_radial(_metric(configs), configs["p"])
    with timer.phase("levels"):
        series = _series(pot, _t_grid(configs, pot.boundary_parameter), configs["threads"])
    return Outcome(
        results=series.metadata(),
        table=(monotone.SERIES_COLUMNS, series.rows()),
        summary=[
            ("levels", str(series.t.size), None),
            ("regular", str(int(series.regular.sum())), None),
        ],
    )


def _check_monotone(configs: Configs, timer: Timer) -> Outcome:
    metric = _metric(configs)
    p = configs["p"]
    hypotheses = massbounds.check_hypotheses(metric, p)
    pot = solve_radial(metric, p)
    mass = _mass(metric)
    with timer.phase("levels"):
        series = _series(pot, _t_grid(configs, pot.boundary_parameter), configs["threads"])
    with timer.phase("checks"):
        report = monotone.series_checks(series, configs["tolerance"])
        asymptotic = monotone.asymptotic_check(series, mass, tolerance=configs["tolerance"])
        green = monotone.green_quantity(pot, series.t ** (-series.a), configs["tolerance"])
        forms = [identities.hawking_form_quantities(pot, float(t)) for t in series.t]
    scale = 4.0 * math.pi * series.t
    form_residual = max(
        float(np.max(np.abs(np.array([f.A for f in forms]) - series.A) / scale)),
        float(np.max(np.abs(np.array([f.B for f in forms]) - series.B) / scale)),
    )
    violations = [v.as_dict() for v in report.violations + green.violations]
    return Outcome(
        results={
            "series": series.metadata(),
            "report": report.as_dict(),
            "asymptotic": asymptotic.as_dict(),
            "hawking_form_residual": form_residual,
            "mass": mass,
        },
        violations=violations,
        hypotheses=hypotheses,
        summary=[
            ("monotonicity", f"{len(report.violations)} violations", report.ok),
            ("green quantity", f"{len(green.violations)} violations", not green.violations),
            ("large-t bounds", "", asymptotic.ok),
            ("hawking form", f"{form_residual:.2e}", form_residual < 1e-8),
        ],
    )


def _check_mass(configs: Configs, timer: Timer) -> Outcome:
    metric = _metric(configs)
    p = configs["p"]
    hypotheses = massbounds.check_hypotheses(metric, p)
    mass = _mass(metric)
    with timer.phase("solve"):
        pot = solve_radial(metric, p)
    data = massbounds.boundary_data(pot)
    inequalities = massbounds.boundary_inequalities(data, mass, hypotheses)
    limit = _capacity_limit(metric, configs, timer)
    willmore = massbounds.willmore_mass_bound(data, mass=mass, capacity_limit=limit.limit)
    region = None
    if configs["region"] is not None:
        r1, r2 = configs["region"]
        region = massbounds.annulus_region(metric, p, r1, r2)
    hmax = massbounds.hmax_bounds(data, mass, region)
    results: dict[str, Any] = {
        "boundary": data._asdict(),
        "inequalities": inequalities.as_dict(),
        "willmore": willmore._asdict(),
        "capacity_limit": limit.limit,
        "hmax": hmax.as_dict(),
        "mass": mass,
    }
    if metric.is_horizon:
        results["horizon_mass_bound"] = massbounds.horizon_mass_bound(pot.C_p, p)
    violations = [
        {"quantity": result.name, "kind": "inequality", "value": result.slack, "bound": 0.0}
        for result in inequalities.results
        if not result.holds
    ]
    summary: list[tuple[str, str, bool | None]] = [
        (result.name, f"slack {result.slack:.6g}", result.holds) for result in inequalities.results
    ]
    bound = willmore.mass_lower_bound
    summary.append(("willmore bound", f"m >= {bound:.6g}", mass >= bound))
    return Outcome(results=results, violations=violations, hypotheses=hypotheses, summary=summary)


def _capacity_limit(metric: RadialMetric, configs: Configs, timer: Timer) -> massbounds.CapacityLimit:
    ps = sorted(configs["p_list"], reverse=True)
    with timer.phase("capacities"):
        capacities = _pool_map(lambda p: capacity(metric, p), ps, configs["threads"])
    return massbounds.capacity_p_limit(metric, ps, capacities)


def _capacity_sweep(configs: Configs, timer: Timer) -> Outcome:
    limit = _capacity_limit(_metric(configs), configs, timer)
    return Outcome(
        results={**limit._asdict(), "relative_gap": limit.relative_gap},
        summary=[
            ("C_p, p -> 1", f"{limit.limit:.10g}", None),
            ("boundary area", f"{limit.boundary_area:.10g}", None),
        ],
    )


def _identity(configs: Configs, timer: Timer) -> Outcome:
    metric = _metric(configs)
    pot = solve_radial(metric, configs["p"])
    sol = identities.transform_field(pot, configs["alpha"], configs["beta"])
    levels = _t_grid(configs, 1.01 * sol.value(metric.r_min))
    pointwise = []
    integrated = []
    with timer.phase("identity"):
        for level in levels:
            pointwise.append(identities.identity_check(sol, r=sol.radius_of(float(level))))
        if levels.size >= 2:
            middle = float(levels[levels.size // 2])
            for window in ((levels[0], levels[-1]), (levels[0], middle), (middle, levels[-1])):
                low, high = float(window[0]), float(window[1])
                if low < high:
                    integrated.append(identities.identity_check(sol, window=(low, high)))
    violations = [
        {**check.as_dict(), "kind": "pointwise"}
        for check in pointwise
        if check.residual > configs["tolerance"] * (abs(check.lhs) + abs(check.rhs) + 1e-300)
    ]
    violations += [
        {**check.as_dict(), "kind": "integrated"}
        for check in integrated
        if check.residual > INTEGRATED_TOLERANCE * (abs(check.lhs) + abs(check.rhs) + 1.0)
    ]
    worst = max((check.residual for check in pointwise), default=0.0)
    failed = {violation["kind"] for violation in violations}
    return Outcome(
        results={
            "field": sol.kind.value,
            "alpha": sol.alpha,
            "beta": sol.beta,
            "pointwise": [check.as_dict() for check in pointwise],
            "integrated": [check.as_dict() for check in integrated],
        },
        violations=violations,
        summary=[
            ("pointwise identity", f"max residual {worst:.2e}", "pointwise" not in failed),
            ("integrated identity", f"{len(integrated)} windows", "integrated" not in failed),
        ],
    )


def _rigidity_gen(configs: Configs, timer: Timer) -> Outcome:
    rho = (configs["rho_min"], configs["rho_max"])
    with timer.phase("generate"):
        metric = identities.rigidity_metric(configs["hawking_mass"], 2, rho)
        table = identities.rigidity_profile(metric, rho, configs["rho_count"])
    masses = [hawking_mass(metric, r) for r in (rho[0], rho[1])]
    return Outcome(
        results=metric.descriptor(),
        table=(("r", "phi"), [{"r": r, "phi": phi} for r, phi in table]),
        summary=[("hawking mass", f"{masses[0]:.10g} .. {masses[1]:.10g}", None)],
    )


COMMANDS: dict[str, Callable[[Configs, Timer], Outcome]] = {
    "solve-radial": _solve_radial,
    "solve-grid": _solve_grid,
    "scan": _scan,
    "check-monotone": _check_monotone,
    "check-mass": _check_mass,
    "capacity-sweep": _capacity_sweep,
    "identity": _identity,
    "rigidity-gen": _rigidity_gen,
}


def _print_summary(command: str, outcome: Outcome) -> None:
    """Human-readable table on standard error."""
    sys.stderr.write(f"{BOLD}pmonotone {command}{RESET}\n")
    for name, ok in outcome.hypotheses.items():
        sys.stderr.write(f"  {verdict(ok)}  hypothesis {name}\n")
    for name, detail, ok in outcome.summary:
        marker = "    " if ok is None else verdict(ok)
        sys.stderr.write(f"  {marker}  {name}: {detail}\n")


def _main(command: str, configs: Configs) -> int:
    """
    Run one command and write its outputs.

    Parameters
    ----------
    command
        Subcommand name.
    configs
        Validated configuration.

    Returns
    -------
    int
        0 on success, 2 if a sampled hypothesis failed, 1 if a check failed
        although every hypothesis held.
    """
    timer = Timer()
    outcome = COMMANDS[command](configs, timer)
    output = configs["output"]
    if outcome.table is not None:
        columns, rows = outcome.table
        write_csv(output, columns, rows)
    else:
        document: dict[str, Any] = {
            "command": command,
            "config_echo": dict(configs),
            "results": outcome.results,
            "violations": outcome.violations,
        }
        if outcome.hypotheses:
            document["hypotheses"] = outcome.hypotheses
        if configs["timings"]:
            document["timings"] = timer.phases
        write_json(output, document)
    _print_summary(command, outcome)
    if not all(outcome.hypotheses.values()):
        return EXIT_HYPOTHESES
    if outcome.violations:
        return EXIT_ERROR
    return EXIT_OK


def _configure_logging(verbose: int) -> None:
    level = logging.WARNING if verbose <= 0 else logging.INFO if verbose == 1 else logging.DEBUG
    logging.basicConfig(
        stream=sys.stderr, level=level, format="%(levelname)s %(name)s: %(message)s"
    )


def main(argv: Sequence[str] | None = None) -> int:
    """
    Run a pmonotone command.

    Parameters
    ----------
    argv
        Command-line arguments (if calling this function directly), defaults to
        :code:`None` if calling via command-line.

    Returns
    -------
    int
        Exit code: 0 success, 1 error or failed check, 2 violated hypothesis.
    """
    try:
        cli_args = CLIArgs.parse_args(argv)
        _configure_logging(cli_args.verbose)
        project_root = find_project_root(tuple(cli_args.paths()))
        configs = _get_configs(cli_args, project_root)
        return _main(cli_args.command, configs)
    except PMonotoneError as exc:
        sys.stderr.write(f"{exc.msg}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
