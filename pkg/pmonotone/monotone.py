"""
Monotone level-set quantities and the checks run against them.

For the level sets Sigma(t) = {u = 1 - c t^-a} the quantities are

    F(t) = 4 pi t - (ca)^-1 t^(a+1) int |grad u| H + (ca)^-2 t^(2a+1) int |grad u|^2
    A(t) = 8 pi t - (ca)^-1 t^(a+1) int |grad u| H
    B(t) = 4 pi t - (ca)^-2 t^(2a+1) int |grad u|^2
    D(t) = 4 pi t^-a + c^-1 int |grad u| H - (ca)^-2 (1+2a) t^a int |grad u|^2
    G(t) = -4 a^2 pi c t^-a + (c t^-a)^-1 int |grad u|^2

They satisfy F = A - B, D = t^(-a-1)((1+2a)B - aA), G = -c a^2 t^(-a-1) B and
the differential relations D' = -a t^(-a-1) F', G' = c a^3 t^(-a-2) F, B' = t^a D.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pmonotone import pdesolve
from pmonotone.convergence import central_derivative, observed_order
from pmonotone.exceptions import DomainError
from pmonotone.levelsurf import LevelSurfaceData, Source, extract_level
from pmonotone.radial import RadialPotential, decay_exponent, level_radius

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

MONOTONE_TOLERANCE = 1.0e-7
ASYMPTOTIC_FRACTION = 0.1
LIMIT_TOLERANCE = 0.005
SERIES_COLUMNS = ("t", "s", "F", "A", "B", "D", "G", "m_H", "regular")


@dataclass(frozen=True, eq=False)
class QuantitySeries:  # pylint: disable=too-many-instance-attributes
    """
    Monotone quantities sampled on a t-grid.

    Attributes
    ----------
    p, a, c, C_p
        Potential metadata.
    t, s
        Level parameters and potential values.
    F, A, B, D, G
        The monotone quantities.
    m_H
        Hawking mass of each level set.
    regular
        Regularity flag per row.
    levels
        The level-set integrals the rows were computed from.
    """

    p: float
    a: float
    c: float
    C_p: float
    t: FloatArray
    s: FloatArray
    F: FloatArray
    A: FloatArray
    B: FloatArray
    D: FloatArray
    G: FloatArray
    m_H: FloatArray
    regular: NDArray[np.bool_]
    levels: tuple[LevelSurfaceData, ...] = ()

    def rows(self) -> list[dict[str, Any]]:
        """One mapping per row, keyed by :data:`SERIES_COLUMNS`."""
        columns = [getattr(self, name) for name in SERIES_COLUMNS]
        out = []
        for values in zip(*columns):
            row = {name: float(value) for name, value in zip(SERIES_COLUMNS[:-1], values)}
            row["regular"] = bool(values[-1])
            out.append(row)
        return out

    def metadata(self) -> dict[str, float]:
        """p, a, c and C_p."""
        return {"p": self.p, "a": self.a, "c": self.c, "C_p": self.C_p}

    def replace_column(self, name: str, values: ArrayLike) -> QuantitySeries:
        """Copy of the series with one column swapped out."""
        params = {key: getattr(self, key) for key in self.__dataclass_fields__}
        params[name] = np.asarray(values)
        return QuantitySeries(**params)


@dataclass
class Violation:
    """A failed check between rows ``index - 1`` and ``index`` (or at ``index``)."""

    quantity: str
    kind: str
    index: int
    t: float
    value: float
    bound: float

    def as_dict(self) -> dict[str, Any]:
        """JSON-ready form."""
        return {
            "quantity": self.quantity,
            "kind": self.kind,
            "index": self.index,
            "t": self.t,
            "value": self.value,
            "bound": self.bound,
        }


@dataclass
class SeriesReport:
    """
    Outcome of :func:`series_checks`.

    Attributes
    ----------
    algebra
        Largest relative residual of each exact-algebra relation.
    derivative
        Largest scaled finite-difference residual of each differential relation.
    derivative_order
        Observed order of the derivative residuals from halving the grid.
    violations
        Monotonicity and positivity failures.
    """

    algebra: dict[str, float] = field(default_factory=dict)
    derivative: dict[str, float] = field(default_factory=dict)
    derivative_order: dict[str, float] = field(default_factory=dict)
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        """No violations."""
        return not self.violations

    def as_dict(self) -> dict[str, Any]:
        """JSON report {violations, residual_norms}."""
        return {
            "violations": [violation.as_dict() for violation in self.violations],
            "residual_norms": {
                "algebra": self.algebra,
                "derivative": self.derivative,
                "derivative_order": self.derivative_order,
            },
        }


def log_grid(t_min: float, t_max: float, count: int, spacing: str = "log") -> FloatArray:
    """Increasing t-grid, log-spaced unless ``spacing`` is ``linear``."""
    if count < 1 or not t_max >= t_min > 0:
        raise DomainError("t_grid", float(count), "count >= 1 and 0 < t_min <= t_max")
    if spacing == "linear":
        return np.linspace(t_min, t_max, count)
    return np.geomspace(t_min, t_max, count)


def _hawking(level: LevelSurfaceData) -> float:
    return math.sqrt(level.area / (16.0 * math.pi)) * (1.0 - level.int_H2 / (16.0 * math.pi))


def quantity_series(
    source: Source,
    t_grid: ArrayLike,
    *,
    c: float | None = None,
    curvature: str = "geometric",
) -> QuantitySeries:
    """
    Evaluate F, A, B, D, G and the Hawking mass on every level of ``t_grid``.

    Parameters
    ----------
    source
        Radial potential or grid field.
    t_grid
        Level parameters, each at least the boundary parameter.
    c
        Normalization of a grid field; computed from its regularized capacity
        when omitted.
    curvature
        Mean-curvature formula used for grid fields.

    Returns
    -------
    QuantitySeries
        One row per level.

    Raises
    ------
    DomainError
        If the grid is empty or a level lies below the boundary.
    """
    ts = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if ts.size == 0:
        raise DomainError("t_grid", 0.0, "at least one level")
    if isinstance(source, RadialPotential):
        p, a, c, capacity = source.p, source.a, source.c, source.C_p
        levels = [extract_level(source, float(t)) for t in ts]
    else:
        p, a = source.p, decay_exponent(source.p)
        capacity = pdesolve.regularized_capacity(source)
        if c is None:
            c = float((capacity / (4.0 * math.pi)) ** (1.0 / (p - 1.0)) / a)
        levels = [extract_level(source, float(t), c=c, curvature=curvature) for t in ts]

    grad_h = np.array([level.int_gradH for level in levels])
    grad2 = np.array([level.int_grad2 for level in levels])
    ca = c * a
    first = ts ** (a + 1.0) * grad_h / ca
    second = ts ** (2.0 * a + 1.0) * grad2 / ca**2
    series = QuantitySeries(
        p=float(p),
        a=float(a),
        c=float(c),
        C_p=float(capacity),
        t=ts,
        s=np.array([level.s for level in levels]),
        F=4.0 * np.pi * ts - first + second,
        A=8.0 * np.pi * ts - first,
        B=4.0 * np.pi * ts - second,
        D=4.0 * np.pi * ts ** (-a) + grad_h / c - (1.0 + 2.0 * a) * ts**a * grad2 / ca**2,
        G=-4.0 * a**2 * np.pi * c * ts ** (-a) + ts**a * grad2 / c,
        m_H=np.array([_hawking(level) for level in levels]),
        regular=np.array([level.regular for level in levels], dtype=bool),
        levels=tuple(levels),
    )
    logger.info("evaluated %d levels, %d regular", ts.size, int(series.regular.sum()))
    return series


def _algebra_residuals(series: QuantitySeries) -> dict[str, float]:
    t, a, c = series.t, series.a, series.c
    scale = 4.0 * np.pi * t
    combination = (1.0 + 2.0 * a) * series.B - a * series.A
    residuals = {
        "F=A-B": np.abs(series.F - (series.A - series.B))
        / (np.abs(series.A) + np.abs(series.B) + scale),
        "D=t^(-a-1)((1+2a)B-aA)": np.abs(series.D - t ** (-a - 1.0) * combination)
        / (t ** (-a - 1.0) * ((1.0 + 2.0 * a) * np.abs(series.B) + a * np.abs(series.A) + scale)),
        "G=-ca^2t^(-a-1)B": np.abs(series.G + c * a**2 * t ** (-a - 1.0) * series.B)
        / (c * a**2 * t ** (-a - 1.0) * (np.abs(series.B) + scale)),
    }
    return {name: float(values.max()) for name, values in residuals.items()}


def _derivative_residuals(
    t: FloatArray, series: QuantitySeries, index: NDArray[np.int64]
) -> dict[str, float]:
    a, c = series.a, series.c
    ts = t[index]
    inner = ts[1:-1]
    dF = central_derivative(ts, series.F[index])
    dD = central_derivative(ts, series.D[index])
    dG = central_derivative(ts, series.G[index])
    dB = central_derivative(ts, series.B[index])
    F = series.F[index][1:-1]
    D = series.D[index][1:-1]
    weight = a * inner ** (-a - 1.0)
    natural = 4.0 * np.pi
    return {
        "D'=-at^(-a-1)F'": float(
            np.max(np.abs(dD + weight * dF) / (weight * (np.abs(dF) + natural)))
        ),
        "G'=ca^3t^(-a-2)F": float(
            np.max(
                np.abs(dG - c * a**3 * inner ** (-a - 2.0) * F)
                / (c * a**3 * inner ** (-a - 2.0) * (np.abs(F) + natural * inner))
            )
        ),
        "B'=t^aD": float(
            np.max(np.abs(dB - inner**a * D) / (np.abs(dB) + inner**a * np.abs(D) + natural / inner))
        ),
    }


def _monotone(
    series: QuantitySeries,
    index: NDArray[np.int64],
    name: str,
    increasing: bool,
    tolerance: float,
) -> list[Violation]:
    values = getattr(series, name)
    found = []
    for prev, cur in zip(index[:-1], index[1:]):
        slack = tolerance * (abs(values[cur]) + 1.0)
        drop = values[prev] - values[cur] if increasing else values[cur] - values[prev]
        if drop > slack:
            found.append(
                Violation(
                    quantity=name,
                    kind="nondecreasing" if increasing else "nonincreasing",
                    index=int(cur),
                    t=float(series.t[cur]),
                    value=float(values[cur]),
                    bound=float(values[prev]),
                )
            )
    return found


def series_checks(series: QuantitySeries, tolerance: float = MONOTONE_TOLERANCE) -> SeriesReport:
    """
    Algebra, derivative, monotonicity and positivity checks of a series.

    Parameters
    ----------
    series
        Output of :func:`quantity_series`.
    tolerance
        Relative slack tolerance * (|value| + 1) before a monotonicity or
        positivity failure is recorded.

    Returns
    -------
    SeriesReport
        Always produced; derivative checks are skipped with fewer than 3
        regular rows.
    """
    report = SeriesReport(algebra=_algebra_residuals(series))
    index = np.flatnonzero(series.regular)
    if index.size >= 3:
        report.derivative = _derivative_residuals(series.t, series, index)
        coarse = index[::2]
        if coarse.size >= 3:
            coarse_residuals = _derivative_residuals(series.t, series, coarse)
            for name, fine in report.derivative.items():
                spacing = np.mean(np.diff(np.log(series.t[coarse]))) / np.mean(
                    np.diff(np.log(series.t[index]))
                )
                report.derivative_order[name] = observed_order(
                    [coarse_residuals[name], fine], ratio=float(spacing)
                )[0]
    else:
        logger.warning("fewer than 3 regular rows: derivative checks skipped")

    for name, increasing in (("A", True), ("B", True), ("F", True), ("D", False)):
        report.violations.extend(_monotone(series, index, name, increasing, tolerance))

    combination = (1.0 + 2.0 * series.a) * series.B - series.a * series.A
    for name, values in (("D", series.D), ("(1+2a)B-aA", combination)):
        for i in index:
            if values[i] < -tolerance * (abs(values[i]) + 1.0):
                report.violations.append(
                    Violation(name, "nonnegative", int(i), float(series.t[i]), float(values[i]), 0.0)
                )
    return report


@dataclass
class GreenSeries:
    """Green-function quantity G(tau) on a tau grid with its monotonicity check."""

    tau: FloatArray
    t: FloatArray
    G: FloatArray
    violations: list[Violation]


def green_quantity(
    pot: RadialPotential, tau_grid: ArrayLike, tolerance: float = MONOTONE_TOLERANCE
) -> GreenSeries:
    """
    G(tau) = -4 a^2 pi tau + tau^-1 int_{G = tau} |grad G|^2 for G = (1 - u)/c.

    Parameters
    ----------
    pot
        Radial potential; scaling by c makes G = r^-a in the Euclidean model.
    tau_grid
        Values in (0, 1/c], the range of G.
    tolerance
        Slack of the nonincreasing check.

    Returns
    -------
    GreenSeries
        Values sorted by increasing tau and the monotonicity violations.

    Raises
    ------
    DomainError
        If a tau lies outside (0, 1/c].
    """
    taus = np.sort(np.atleast_1d(np.asarray(tau_grid, dtype=float)))
    boundary = 1.0 / pot.c
    if taus.size == 0 or taus[0] <= 0.0 or taus[-1] > boundary * (1.0 + 1e-12):
        raise DomainError("tau", float(taus[0]) if taus.size else math.nan, f"0 < tau <= {boundary!r}")
    a = pot.a
    ts = np.minimum(taus, boundary) ** (-1.0 / a)
    values = np.empty_like(taus)
    for n, t in enumerate(ts):
        r = level_radius(pot, float(t))
        dirichlet = pot.gradient_norm(r) ** 2 * 4.0 * np.pi * r**2 / pot.c**2
        values[n] = -4.0 * a**2 * np.pi * taus[n] + dirichlet / taus[n]
    violations = []
    for i in range(1, taus.size):
        if values[i] - values[i - 1] > tolerance * (abs(values[i]) + 1.0):
            violations.append(
                Violation("G", "nonincreasing", i, float(ts[i]), float(values[i]), float(values[i - 1]))
            )
    return GreenSeries(tau=taus, t=ts, G=values, violations=violations)


@dataclass
class AsymptoticReport:
    """
    Large-t behaviour over the last part of the grid.

    Attributes
    ----------
    limsup
        Largest A, B, F and Hawking estimate over the tail rows.
    bounds
        4 pi (5-p) m, 4 pi (3-p) m, 8 pi m and m.
    satisfied
        Whether each limsup stays below its bound.
    limits
        For p = 2 only: deviation of the last A and B from 12 pi m and 4 pi m,
        in units of 12 pi and 4 pi.
    """

    limsup: dict[str, float]
    bounds: dict[str, float]
    satisfied: dict[str, bool]
    limits: dict[str, float] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        """All bounds hold and, for p = 2, both limits are within tolerance."""
        return all(self.satisfied.values()) and all(
            value <= LIMIT_TOLERANCE for value in self.limits.values()
        )

    def as_dict(self) -> dict[str, Any]:
        """JSON-ready form."""
        return {
            "limsup": self.limsup,
            "bounds": self.bounds,
            "satisfied": self.satisfied,
            "limits": self.limits,
        }


def asymptotic_check(
    series: QuantitySeries,
    mass: float,
    *,
    fraction: float = ASYMPTOTIC_FRACTION,
    tolerance: float = MONOTONE_TOLERANCE,
) -> AsymptoticReport:
    """
    Upper bounds of A, B, F and the Hawking estimate for large t.

    The Hawking estimate is (t/2)(1 - (1/16 pi) int H^2) on each level set.
    """
    count = max(1, int(math.ceil(fraction * series.t.size)))
    tail = slice(series.t.size - count, series.t.size)
    p = series.p
    estimate = np.array(
        [0.5 * level.t * (1.0 - level.int_H2 / (16.0 * math.pi)) for level in series.levels]
    )
    limsup = {
        "A": float(series.A[tail].max()),
        "B": float(series.B[tail].max()),
        "F": float(series.F[tail].max()),
        "hawking_estimate": float(estimate[tail].max()) if estimate.size else math.nan,
    }
    bounds = {
        "A": 4.0 * math.pi * (5.0 - p) * mass,
        "B": 4.0 * math.pi * (3.0 - p) * mass,
        "F": 8.0 * math.pi * mass,
        "hawking_estimate": mass,
    }
    satisfied = {
        name: bool(limsup[name] <= bounds[name] + tolerance * (abs(bounds[name]) + 1.0))
        for name in bounds
    }
    report = AsymptoticReport(limsup=limsup, bounds=bounds, satisfied=satisfied)
    if p == 2.0:
        report.limits = {
            "A": abs(float(series.A[-1]) - 12.0 * math.pi * mass) / (12.0 * math.pi),
            "B": abs(float(series.B[-1]) - 4.0 * math.pi * mass) / (4.0 * math.pi),
        }
    return report

