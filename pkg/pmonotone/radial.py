"""
Exact p-harmonic potentials in spherical symmetry.

For g = phi^2 dr^2 + r^2 (round sphere) the capacitary potential is radial and the
p-Laplace equation integrates once: the flux |grad u|^{p-1} 4 pi r^2 is constant.
With k = 2/(p-1) and I = int_{r_min}^inf phi r^-k dr this gives

    u(r) = (1/I) int_{r_min}^r phi rho^-k d rho,   |grad u|(r) = r^-k / I,

and C_p = 4 pi I^-(p-1). Everything below reduces to one-dimensional quadrature
of phi r^-k; the tail 1 - u(r) = J(r)/I with J(r) = int_r^inf phi rho^-k d rho is
kept separately so that levels close to u = 1 do not suffer cancellation.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import quad
from scipy.optimize import brentq

from pmonotone.exceptions import DivergentTailError, DomainError
from pmonotone.geometry import MetricKind, RadialMetric

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

QUAD_EPSREL = 1.0e-13
QUAD_EPSABS = 1.0e-14
QUAD_LIMIT = 200
TABLE_SEGMENTS = 400
TABLE_DECADES = 8.0
# smallest tail value kept in the table, well above the double underflow limit
TABLE_FLOOR_LOG10 = -250.0


def quadrature(
    func: Callable[[float], float], lower: float, upper: float, **kwargs: Any
) -> float:
    """
    scipy quad with a relaxed second attempt when the first one reports trouble.

    Diagnostics are read from ``full_output`` rather than from warnings, so that
    concurrent calls do not touch the process-wide warning filters.
    """
    result = quad(
        func,
        lower,
        upper,
        epsabs=QUAD_EPSABS,
        epsrel=QUAD_EPSREL,
        limit=QUAD_LIMIT,
        full_output=1,
        **kwargs,
    )
    if len(result) == 3:
        return float(result[0])
    logger.debug("quadrature on [%g, %g] retried: %s", lower, upper, result[3])
    relaxed = quad(
        func, lower, upper, epsabs=1e-12, epsrel=1e-10, limit=QUAD_LIMIT, full_output=1, **kwargs
    )
    return float(relaxed[0])


def check_exponent(p: float, upper: float = 3.0) -> None:
    """Reject p outside (1, upper)."""
    if not 1.0 < p < upper:
        raise DomainError("p", p, f"1 < p < {upper:g}")


def decay_exponent(p: float) -> float:
    """a = (3 - p)/(p - 1)."""
    return (3.0 - p) / (p - 1.0)


def _check_tail(metric: RadialMetric) -> None:
    if metric.kind is MetricKind.PROFILE and metric.sigma <= 0:
        raise DivergentTailError(metric.sigma)


def _segment(metric: RadialMetric, k: float, r1: float, r2: float) -> float:
    """int_{r1}^{r2} phi rho^-k d rho, written in s with rho = r_min + s^2."""
    if r2 <= r1:
        return 0.0
    r_min = metric.r_min

    def integrand(s: float) -> float:
        gap = s * s
        return float(2.0 * s * metric.phi_above_inner(gap) * (r_min + gap) ** (-k))

    return quadrature(integrand, math.sqrt(r1 - r_min), math.sqrt(r2 - r_min))


def _tail(metric: RadialMetric, k: float, r_start: float) -> float:
    """int_{r_start}^inf phi rho^-k d rho, written in x = 1/rho with an x^(k-2) weight."""

    def integrand(x: float) -> float:
        if x == 0.0:
            return 1.0
        return float(metric.phi(1.0 / x))

    return quadrature(integrand, 0.0, 1.0 / r_start, weight="alg", wvar=(k - 2.0, 0.0))


def radial_integral(metric: RadialMetric, k: float, r1: float, r2: float = math.inf) -> float:
    """
    int_{r1}^{r2} phi(rho) rho^-k d rho along the radial direction.

    The range is split at the last profile sample, and an infinite upper limit
    is handled by a tail in x = 1/rho, which needs k > 1.

    Parameters
    ----------
    metric
        Model metric.
    k
        Power of rho, e.g. 2/(p-1) for capacities and -2 for shell volumes.
    r1
        Lower limit, at least ``metric.r_min``.
    r2
        Upper limit, infinite by default.

    Returns
    -------
    float
        The integral.
    """
    breaks = [r1]
    if metric.kind is MetricKind.PROFILE and r1 < metric.table_r[-1] < r2:
        breaks.append(metric.table_r[-1])
    if math.isinf(r2):
        far = max(2.0 * breaks[-1], 2.0 * metric.r_min)
        breaks.append(far)
    else:
        breaks.append(r2)
    total = sum(_segment(metric, k, lo, hi) for lo, hi in zip(breaks[:-1], breaks[1:]))
    if math.isinf(r2):
        total += _tail(metric, k, breaks[-1])
    return total


def capacity(metric: RadialMetric, p: float) -> float:
    """
    p-capacity of the inner boundary sphere.

    Parameters
    ----------
    metric
        Model metric.
    p
        Exponent in (1, 3).

    Returns
    -------
    float
        C_p = 4 pi [int_{r_min}^inf phi r^(-2/(p-1)) dr]^-(p-1).

    Raises
    ------
    DomainError
        If p is outside (1, 3).
    DivergentTailError
        If a profile tail does not decay.
    """
    check_exponent(p)
    _check_tail(metric)
    k = 2.0 / (p - 1.0)
    integral = radial_integral(metric, k, metric.r_min)
    value = 4.0 * np.pi * integral ** (-(p - 1.0))
    logger.debug("capacity p=%g of %s: %.15g", p, metric.kind.value, value)
    return float(value)


def annulus_capacity(metric: RadialMetric, p: float, r1: float, r2: float) -> float:
    """p-capacity of the shell between the coordinate spheres r1 < r2."""
    check_exponent(p)
    if not metric.r_min <= r1 < r2:
        raise DomainError("r1", r1, f"r_min <= r1 < r2 = {r2!r}")
    k = 2.0 / (p - 1.0)
    return float(4.0 * np.pi * radial_integral(metric, k, r1, r2) ** (-(p - 1.0)))


@dataclass(frozen=True, eq=False)
class RadialPotential:  # pylint: disable=too-many-instance-attributes
    """
    Radial p-harmonic potential with u(r_min) = 0 and u -> 1 at infinity.

    Attributes
    ----------
    metric
        Underlying model.
    p, a, c, C_p
        Exponent, decay exponent, normalization constant and capacity.
    total
        I = int_{r_min}^inf phi r^-k dr.
    nodes
        Log-spaced table radii.
    tail_table
        J(r) = int_r^inf phi rho^-k d rho at the table radii.
    head_table
        int_{r_min}^r phi rho^-k d rho at the table radii.
    """

    metric: RadialMetric
    p: float
    a: float
    c: float
    C_p: float
    total: float
    nodes: FloatArray
    tail_table: FloatArray
    head_table: FloatArray

    @property
    def k(self) -> float:
        """Power of the flux law, 2/(p - 1)."""
        return 2.0 / (self.p - 1.0)

    @property
    def boundary_parameter(self) -> float:
        """t at the inner boundary, c^(1/a)."""
        return float(self.c ** (1.0 / self.a))

    def _locate(self, r: float) -> int:
        if r < self.metric.r_min:
            raise DomainError("r", r, f"r >= r_min = {self.metric.r_min!r}")
        return int(np.searchsorted(self.nodes, r, side="right")) - 1

    def tail_integral(self, r: float) -> float:
        """J(r) = int_r^inf phi rho^-k d rho."""
        index = self._locate(r)
        if index >= len(self.nodes) - 1:
            return _tail(self.metric, self.k, r)
        return float(self.tail_table[index + 1]) + _segment(
            self.metric, self.k, r, float(self.nodes[index + 1])
        )

    def head_integral(self, r: float) -> float:
        """int_{r_min}^r phi rho^-k d rho."""
        index = self._locate(r)
        if index >= len(self.nodes) - 1:
            return self.total - _tail(self.metric, self.k, r)
        return float(self.head_table[index]) + _segment(
            self.metric, self.k, float(self.nodes[index]), r
        )

    def value(self, r: float) -> float:
        """u(r)."""
        tail = self.tail_integral(r)
        if tail > 0.5 * self.total:
            return self.head_integral(r) / self.total
        return 1.0 - tail / self.total

    def one_minus_value(self, r: float) -> float:
        """1 - u(r), accurate far out."""
        return self.tail_integral(r) / self.total

    def gradient_norm(self, r: float) -> float:
        """|grad u|(r) = r^-k / I, the flux law."""
        self._locate(r)
        return float(r ** (-self.k) / self.total)

    def hessian_normal(self, r: float) -> float:
        """u_nu_nu, the Hessian in the unit normal direction."""
        return float(-self.k * r ** (-self.k - 1.0) * self.metric.inv_phi(r) / self.total)

    def laplacian(self, r: float) -> float:
        """Laplace-Beltrami of u; equals (2 - p) u_nu_nu."""
        return float(
            (2.0 - self.k) * r ** (-self.k - 1.0) * self.metric.inv_phi(r) / self.total
        )

    def level_value(self, t: float) -> float:
        """f(t) = 1 - c t^-a."""
        return float(1.0 - self.c * t ** (-self.a))

    def level_parameter(self, s: float) -> float:
        """Inverse of :meth:`level_value`, t = (c/(1 - s))^(1/a)."""
        if not 0.0 <= s < 1.0:
            raise DomainError("s", s, "0 <= s < 1")
        return float((self.c / (1.0 - s)) ** (1.0 / self.a))

    def radius_of_value(self, s: float) -> float:
        """The radius where u = s."""
        if not 0.0 <= s < 1.0:
            raise DomainError("s", s, "0 <= s < 1")
        return self.radius_of_tail((1.0 - s) * self.total)

    def radius_of_tail(self, target: float) -> float:
        """The radius r with J(r) = target."""
        if target >= self.total:
            return self.metric.r_min
        above = np.nonzero(self.tail_table >= target)[0]
        index = int(above[-1])
        if index == len(self.nodes) - 1:
            low = float(self.nodes[-1])
            high = 10.0 * low
            while _tail(self.metric, self.k, high) > target:
                low, high = high, 10.0 * high
        else:
            low, high = float(self.nodes[index]), float(self.nodes[index + 1])
            if self.tail_integral(low) <= target:
                return low
            if self.tail_integral(high) >= target:
                return high
        return float(
            brentq(
                lambda r: self.tail_integral(r) - target,
                low,
                high,
                xtol=1e-300,
                rtol=4.0 * np.finfo(float).eps,
                maxiter=200,
            )
        )

    def to_dict(self) -> dict[str, Any]:
        """JSON document {p, a, c, C_p, metric descriptor, u_table}."""
        return {
            "p": self.p,
            "a": self.a,
            "c": self.c,
            "C_p": self.C_p,
            "metric": self.metric.descriptor(),
            "u_table": {
                "total": self.total,
                "r": self.nodes.tolist(),
                "tail": self.tail_table.tolist(),
                "head": self.head_table.tolist(),
            },
        }

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> RadialPotential:
        """Rebuild a potential from :meth:`to_dict` output without re-solving."""
        table = document["u_table"]
        return cls(
            metric=RadialMetric.from_descriptor(document["metric"]),
            p=float(document["p"]),
            a=float(document["a"]),
            c=float(document["c"]),
            C_p=float(document["C_p"]),
            total=float(table["total"]),
            nodes=np.asarray(table["r"], dtype=float),
            tail_table=np.asarray(table["tail"], dtype=float),
            head_table=np.asarray(table["head"], dtype=float),
        )


def solve_radial(metric: RadialMetric, p: float) -> RadialPotential:
    """
    Solve the p-harmonic boundary problem u = 0 on r_min, u -> 1 at infinity.

    Parameters
    ----------
    metric
        Model metric.
    p
        Exponent in (1, 3).

    Returns
    -------
    RadialPotential
        Potential with its normalization constants and quadrature tables.
    """
    check_exponent(p)
    _check_tail(metric)
    k = 2.0 / (p - 1.0)
    decades = min(TABLE_DECADES, -TABLE_FLOOR_LOG10 / (k - 1.0))
    nodes = metric.r_min * np.logspace(0.0, decades, TABLE_SEGMENTS + 1)
    nodes[0] = metric.r_min
    pieces = np.array(
        [_segment(metric, k, lo, hi) for lo, hi in zip(nodes[:-1], nodes[1:])]
    )
    far = _tail(metric, k, float(nodes[-1]))
    tail_table = far + np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
    head_table = np.concatenate([[0.0], np.cumsum(pieces)])
    total = float(tail_table[0])
    a = decay_exponent(p)
    C_p = 4.0 * np.pi * total ** (-(p - 1.0))
    c = (C_p / (4.0 * np.pi)) ** (1.0 / (p - 1.0)) / a
    logger.info(
        "solved radial potential: model=%s p=%g C_p=%.12g c=%.12g",
        metric.kind.value,
        p,
        C_p,
        c,
    )
    return RadialPotential(
        metric=metric,
        p=float(p),
        a=a,
        c=float(c),
        C_p=float(C_p),
        total=total,
        nodes=nodes,
        tail_table=tail_table,
        head_table=head_table,
    )


def level_radius(pot: RadialPotential, t: float, tolerance: float = 1e-12) -> float:
    """
    Coordinate radius of the level set Sigma(t) = {u = 1 - c t^-a}.

    Parameters
    ----------
    pot
        Radial potential.
    t
        Level parameter, at least the boundary parameter c^(1/a).
    tolerance
        Relative slack allowed below the boundary parameter.

    Returns
    -------
    float
        The unique r with u(r) = f(t), found by bracketed root finding.

    Raises
    ------
    DomainError
        If t lies below the boundary parameter.
    """
    t_boundary = pot.boundary_parameter
    if t < t_boundary * (1.0 - tolerance):
        raise DomainError("t", t, f"t >= c^(1/a) = {t_boundary!r}")
    target = pot.c * t ** (-pot.a) * pot.total
    return pot.radius_of_tail(target)
