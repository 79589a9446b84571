"""
Boundary-data mass inequalities and capacity bounds.

Everything here is algebra on a handful of boundary integrals: the flux-type
integrals int |grad u| H and int |grad u|^2 over the inner boundary, its area,
Willmore energy W = (1/16 pi) int H^2 and maximal mean curvature, together with
the capacity C_p and the normalization c.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Sequence

import numpy as np
from scipy.integrate import trapezoid

from pmonotone import pdesolve
from pmonotone.exceptions import DomainError, ExtrapolationError
from pmonotone.geometry import RadialMetric, scalar_curvature, sphere_geometry
from pmonotone.grid import GridField
from pmonotone.levelsurf import Source
from pmonotone.radial import (
    RadialPotential,
    annulus_capacity,
    capacity,
    check_exponent,
    decay_exponent,
    radial_integral,
)

logger = logging.getLogger(__name__)

EQUALITY_TOLERANCE = 1.0e-8
CURVATURE_SAMPLES = 200


class BoundaryData(NamedTuple):
    """
    Integrals over the inner boundary.

    Attributes
    ----------
    int_gradH, int_grad2
        int |grad u| H and int |grad u|^2.
    area
        Boundary area.
    willmore
        W = (1/16 pi) int H^2.
    H_max
        Largest mean curvature on the boundary.
    p, a, c, C_p
        Exponent, decay exponent, normalization and capacity.
    """

    int_gradH: float
    int_grad2: float
    area: float
    willmore: float
    H_max: float
    p: float
    a: float
    c: float
    C_p: float


class RegionData(NamedTuple):
    """A neighbourhood of the boundary: volume, width L and (optional) capacity."""

    volume: float
    width: float
    capacity: float | None = None


@dataclass
class InequalityResult:
    """One inequality lhs <= rhs (or >=) with its slack; slack >= 0 means it holds."""

    name: str
    lhs: float
    rhs: float
    slack: float
    equality: bool

    @property
    def holds(self) -> bool:
        """Slack nonnegative up to round-off."""
        return self.slack >= -EQUALITY_TOLERANCE * (abs(self.lhs) + abs(self.rhs) + 1.0)


@dataclass
class InequalityReport:
    """Three boundary inequalities plus the identity relating their slacks."""

    results: list[InequalityResult]
    sum_identity_residual: float
    hypotheses: dict[str, bool] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        """All inequalities hold."""
        return all(result.holds for result in self.results)

    def as_dict(self) -> dict[str, Any]:
        """JSON-ready form."""
        return {
            "inequalities": [
                {
                    "name": r.name,
                    "lhs": r.lhs,
                    "rhs": r.rhs,
                    "slack": r.slack,
                    "equality": r.equality,
                    "holds": r.holds,
                }
                for r in self.results
            ],
            "sum_identity_residual": self.sum_identity_residual,
            "hypotheses": self.hypotheses,
        }


class WillmoreBound(NamedTuple):
    """Mass lower bounds from the capacity/Willmore inequality."""

    mass_lower_bound: float
    hawking_lower_bound: float
    slack: float | None


@dataclass
class HmaxReport:
    """Maximal-mean-curvature inequality and the localized positivity tests."""

    rhs: float
    slack: float
    localized_lhs: float | None = None
    localized_rhs: float | None = None
    capacity_rhs: float | None = None
    test_function_bound: float | None = None

    @property
    def localized_holds(self) -> bool | None:
        """Whether H_max Z^(2(2-p)/(3-p)) stays below the test-function bound."""
        if self.localized_lhs is None or self.localized_rhs is None:
            return None
        return self.localized_lhs <= self.localized_rhs

    @property
    def capacity_holds(self) -> bool | None:
        """Whether the sharper test with the exact region capacity holds."""
        if self.localized_lhs is None or self.capacity_rhs is None:
            return None
        return self.localized_lhs <= self.capacity_rhs

    def as_dict(self) -> dict[str, Any]:
        """JSON-ready form."""
        return {
            "rhs": self.rhs,
            "slack": self.slack,
            "localized_lhs": self.localized_lhs,
            "localized_rhs": self.localized_rhs,
            "capacity_rhs": self.capacity_rhs,
            "test_function_bound": self.test_function_bound,
            "localized_holds": self.localized_holds,
            "capacity_holds": self.capacity_holds,
        }


class CapacityLimit(NamedTuple):
    """p -> 1 extrapolation of the capacity."""

    p_values: tuple[float, ...]
    capacities: tuple[float, ...]
    limit: float
    boundary_area: float

    @property
    def relative_gap(self) -> float:
        """(limit - area)/area; zero for outer-minimizing round boundaries."""
        return (self.limit - self.boundary_area) / self.boundary_area


def check_hypotheses(metric: RadialMetric, p: float) -> dict[str, bool]:
    """
    Sampled hypotheses of the mass inequalities.

    Returns
    -------
    dict[str, bool]
        ``scalar_curvature_nonnegative`` (sampled on log-spaced radii up to the
        reliable radius), ``p_at_most_2`` and ``mean_curvature_nonnegative``.
    """
    radii = np.geomspace(metric.r_min, metric.reliable_radius(), CURVATURE_SAMPLES)
    curvature_ok = all(
        scalar_curvature(metric, float(r)) >= -1e-10 / float(r) ** 2 for r in radii
    )
    if not curvature_ok:
        logger.warning("scalar curvature is negative somewhere on the sampled radii")
    boundary_mean = sphere_geometry(metric, metric.r_min).H
    mean_ok = bool(np.isfinite(boundary_mean) and boundary_mean >= 0.0)
    if not mean_ok:
        logger.warning("boundary mean curvature H = %g is negative", boundary_mean)
    return {
        "scalar_curvature_nonnegative": bool(curvature_ok),
        "p_at_most_2": bool(p <= 2.0),
        "mean_curvature_nonnegative": mean_ok,
    }


def _grid_boundary_data(field_: GridField) -> BoundaryData:
    grid = field_.grid
    factors = grid.node_factors
    step = grid.spacing[0]
    values = field_.values
    dv = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step)
    grad = np.abs(dv) / factors.h_xi[0]
    section = factors.h_theta * factors.h_psi_reduced
    mean = np.gradient(section, step, axis=0, edge_order=2)[0] / (
        factors.h_xi[0] * section[0]
    )
    if grid.dims == 2:
        element = 2.0 * math.pi * factors.h_theta[0] * factors.h_psi[0]

        def integrate(density: np.ndarray) -> float:
            return float(trapezoid(density * element, grid.theta))

    else:
        element = factors.h_theta[0] * factors.h_psi[0]

        def integrate(density: np.ndarray) -> float:
            return float(
                np.sum(trapezoid(density * element, grid.theta, axis=0)) * grid.spacing[2]
            )

    flux = pdesolve.regularized_capacity(field_)
    a = decay_exponent(field_.p)
    c = (flux / (4.0 * math.pi)) ** (1.0 / (field_.p - 1.0)) / a
    return BoundaryData(
        int_gradH=integrate(grad * mean),
        int_grad2=integrate(grad**2),
        area=integrate(np.ones_like(grad)),
        willmore=integrate(mean**2) / (16.0 * math.pi),
        H_max=float(mean.max()),
        p=field_.p,
        a=a,
        c=float(c),
        C_p=flux,
    )


def boundary_data(source: Source) -> BoundaryData:
    """Boundary integrals of a radial potential or a grid field."""
    if isinstance(source, GridField):
        return _grid_boundary_data(source)
    r = source.metric.r_min
    area = 4.0 * math.pi * r**2
    grad = source.gradient_norm(r)
    mean = 2.0 * float(source.metric.inv_phi(r)) / r
    return BoundaryData(
        int_gradH=grad * mean * area,
        int_grad2=grad**2 * area,
        area=area,
        willmore=mean**2 * area / (16.0 * math.pi),
        H_max=mean,
        p=source.p,
        a=source.a,
        c=source.c,
        C_p=source.C_p,
    )


def _inequalities(
    a: float, p: float, c_root: float, int_gradH: float, int_grad2: float, mass: float
) -> list[InequalityResult]:
    """The three inequalities; c_root is c^(1/a) (rescaled for interior levels)."""
    rows = []
    lhs = 4.0 * math.pi + int_gradH
    rhs = (1.0 + 2.0 * a) * int_grad2 / a**2
    rows.append(("gradient_mean_curvature", lhs, rhs, lhs - rhs))
    lhs = c_root * (8.0 * math.pi - int_gradH / a)
    rhs = 4.0 * math.pi * (5.0 - p) * mass
    rows.append(("mean_curvature_mass", lhs, rhs, rhs - lhs))
    lhs = c_root * (4.0 * math.pi - int_grad2 / a**2)
    rhs = 4.0 * math.pi * (3.0 - p) * mass
    rows.append(("dirichlet_mass", lhs, rhs, rhs - lhs))
    return [
        InequalityResult(
            name=name,
            lhs=float(lhs),
            rhs=float(rhs),
            slack=float(slack),
            equality=bool(abs(slack) <= EQUALITY_TOLERANCE * (abs(lhs) + abs(rhs) + 4.0 * math.pi)),
        )
        for name, lhs, rhs, slack in rows
    ]


def _sum_identity(a: float, c_root: float, results: list[InequalityResult]) -> float:
    """mean-curvature slack = (1+2a)/a * dirichlet slack + c^(1/a)/a * gradient slack."""
    gradient, mean, dirichlet = (r.slack for r in results)
    residual = mean - (1.0 + 2.0 * a) / a * dirichlet - c_root / a * gradient
    scale = abs(mean) + (1.0 + 2.0 * a) / a * abs(dirichlet) + c_root / a * abs(gradient)
    return float(abs(residual) / (scale + 4.0 * math.pi * c_root))


def boundary_inequalities(
    data: BoundaryData, mass: float, hypotheses: dict[str, bool] | None = None
) -> InequalityReport:
    """
    Evaluate the boundary gradient/mean-curvature inequality and the two mass bounds.

    Parameters
    ----------
    data
        Boundary integrals.
    mass
        ADM mass (analytic or estimated).
    hypotheses
        Optional flags from :func:`check_hypotheses` carried into the report.

    Returns
    -------
    InequalityReport
        Slacks, equality flags and the residual of the slack identity.
    """
    c_root = data.c ** (1.0 / data.a)
    results = _inequalities(data.a, data.p, c_root, data.int_gradH, data.int_grad2, mass)
    return InequalityReport(
        results=results,
        sum_identity_residual=_sum_identity(data.a, c_root, results),
        hypotheses=dict(hypotheses or {}),
    )


def level_inequalities(pot: RadialPotential, s: float, mass: float) -> InequalityReport:
    """
    The boundary inequalities applied to the level {u = s} of a radial potential.

    The rescaled potential (u - s)/(1 - s) vanishes on that level, so its
    boundary integrals carry factors of (1 - s).
    """
    if not 0.0 <= s < 1.0:
        raise DomainError("s", s, "0 <= s < 1")
    r = pot.radius_of_value(s)
    area = 4.0 * math.pi * r**2
    grad = pot.gradient_norm(r)
    mean = 2.0 * float(pot.metric.inv_phi(r)) / r
    keep = 1.0 - s
    a = pot.a
    c_root = (pot.c / keep) ** (1.0 / a)
    results = _inequalities(
        a, pot.p, c_root, grad * mean * area / keep, grad**2 * area / keep**2, mass
    )
    return InequalityReport(results=results, sum_identity_residual=_sum_identity(a, c_root, results))


def _willmore_terms(a: float, willmore: float) -> float:
    return (a / (1.0 + 2.0 * a)) * (
        math.sqrt(willmore) + math.sqrt(willmore + (1.0 + 2.0 * a) / a**2)
    )


def willmore_mass_bound(
    data: BoundaryData, *, mass: float | None = None, capacity_limit: float | None = None
) -> WillmoreBound:
    """
    Lower bounds on the mass from 1 <= a^(1/a)(4 pi/C_p)^(1/(3-p))(3-p) m + Q(W).

    Parameters
    ----------
    data
        Boundary integrals.
    mass
        If given, the slack of the inequality at this mass is reported.
    capacity_limit
        The p -> 1 limit of the capacity; the Hawking-type bound
        sqrt(C/16 pi)(1 - W) uses the boundary area when omitted.

    Returns
    -------
    WillmoreBound
        The implied lower bound on m, the Hawking-type bound and the slack.
    """
    p, a = data.p, data.a
    check_exponent(p)
    quadratic = _willmore_terms(a, data.willmore) ** 2
    coefficient = a ** (1.0 / a) * (4.0 * math.pi / data.C_p) ** (1.0 / (3.0 - p)) * (3.0 - p)
    area = data.area if capacity_limit is None else capacity_limit
    return WillmoreBound(
        mass_lower_bound=float((1.0 - quadratic) / coefficient),
        hawking_lower_bound=float(math.sqrt(area / (16.0 * math.pi)) * (1.0 - data.willmore)),
        slack=None if mass is None else float(coefficient * mass + quadratic - 1.0),
    )


def hmax_bounds(
    data: BoundaryData, mass: float, region: RegionData | None = None
) -> HmaxReport:
    """
    The maximal-mean-curvature inequality and, given a region, the localized tests.

    Parameters
    ----------
    data
        Boundary integrals; ``H_max`` must be nonnegative.
    mass
        ADM mass.
    region
        Neighbourhood of the boundary (volume, width L, optional capacity).

    Returns
    -------
    HmaxReport
        The right-hand side of 2 <= a^(1/a)(4 pi/C)^(1/(3-p))(5-p) m
        + H_max a^((1-p)/(3-p)) (C/4 pi)^(1/(3-p)) Z^(2(2-p)/(3-p)), its slack and
        the localized quantities.

    Raises
    ------
    DomainError
        If ``H_max`` is negative.
    """
    if data.H_max < 0.0:
        raise DomainError("H_max", data.H_max, "H_max >= 0")
    p, a = data.p, data.a
    check_exponent(p)
    power = 1.0 / (3.0 - p)
    shape = _willmore_terms(a, data.willmore) ** (2.0 * (2.0 - p) / (3.0 - p))
    rhs = (
        a ** (1.0 / a) * (4.0 * math.pi / data.C_p) ** power * (5.0 - p) * mass
        + data.H_max * a ** ((1.0 - p) / (3.0 - p)) * (data.C_p / (4.0 * math.pi)) ** power * shape
    )
    report = HmaxReport(rhs=float(rhs), slack=float(rhs - 2.0))
    if region is not None:
        bound = region.width ** (-p) * region.volume
        report.test_function_bound = float(bound)
        report.localized_lhs = float(data.H_max * shape)
        report.localized_rhs = float(
            2.0 * (4.0 * math.pi / bound) ** power * a ** ((p - 1.0) / (3.0 - p))
        )
        if region.capacity is not None:
            report.capacity_rhs = float(
                2.0 * (4.0 * math.pi / region.capacity) ** power * a ** ((p - 1.0) / (3.0 - p))
            )
    return report


def horizon_mass_bound(C_p: float, p: float) -> float:
    """2 a^((1-p)/(3-p)) (C_p/4 pi)^(1/(3-p)) / (5-p), a lower bound on m for minimal boundaries."""
    check_exponent(p)
    a = decay_exponent(p)
    return float(
        2.0 * a ** ((1.0 - p) / (3.0 - p)) * (C_p / (4.0 * math.pi)) ** (1.0 / (3.0 - p)) / (5.0 - p)
    )


def annulus_region(metric: RadialMetric, p: float, r1: float, r2: float) -> RegionData:
    """Volume, radial width and exact p-capacity of the shell r1 <= r <= r2."""
    if not metric.r_min <= r1 < r2:
        raise DomainError("r1", r1, f"r_min <= r1 < r2 = {r2!r}")
    volume = 4.0 * math.pi * radial_integral(metric, -2.0, r1, r2)
    width = radial_integral(metric, 0.0, r1, r2)
    return RegionData(volume=volume, width=width, capacity=annulus_capacity(metric, p, r1, r2))


def capacity_p_limit(
    metric: RadialMetric,
    p_sequence: Sequence[float],
    capacities: Sequence[float] | None = None,
) -> CapacityLimit:
    """
    Extrapolate C_p to p -> 1 from a decreasing sequence of exponents.

    log C_p is fitted on {1, x, x log x, x^2} with x = p - 1 (the x^2 term only
    when four or more exponents are given) and evaluated at x = 0.

    Parameters
    ----------
    metric
        Model metric.
    p_sequence
        Strictly decreasing exponents in (1, 2].
    capacities
        Precomputed C_p for each exponent, evaluated here when omitted.

    Returns
    -------
    CapacityLimit
        Capacities, their extrapolated limit and the boundary area.

    Raises
    ------
    ExtrapolationError
        If fewer than three exponents are given or they are not decreasing.
    """
    ps = np.asarray(p_sequence, dtype=float)
    if ps.size < 3:
        raise ExtrapolationError("capacity extrapolation needs at least three exponents")
    if np.any(np.diff(ps) >= 0) or ps[-1] <= 1.0 or ps[0] > 2.0:
        raise ExtrapolationError("exponents must decrease strictly inside (1, 2]")
    if capacities is None:
        capacities = [capacity(metric, float(p)) for p in ps]
    values = np.asarray(capacities, dtype=float)
    if values.shape != ps.shape:
        raise ExtrapolationError("one capacity per exponent is required")
    x = ps - 1.0
    basis = [np.ones_like(x), x, x * np.log(x)]
    if ps.size >= 4:
        basis.append(x**2)
    coefficients, *_ = np.linalg.lstsq(np.stack(basis, axis=1), np.log(values), rcond=None)
    limit = float(math.exp(coefficients[0]))
    area = 4.0 * math.pi * metric.r_min**2
    logger.info("capacity limit p -> 1: %.10g (boundary area %.10g)", limit, area)
    return CapacityLimit(
        p_values=tuple(ps.tolist()),
        capacities=tuple(values.tolist()),
        limit=limit,
        boundary_area=area,
    )

