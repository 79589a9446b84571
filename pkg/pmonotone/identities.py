"""
Transformed fields and the divergence identity they satisfy.

A positive radial field w with nonvanishing gradient solves

    Delta w = alpha w_nu_nu + 2 |grad w|^2 / w

in three cases of interest: w = ((1 - u)/c)^(-1/a) for the p-harmonic potential u
(alpha = 2 - p), w = r for inverse mean curvature flow U = 2 log w (alpha = 1)
and w = exp(U) for the 3-harmonic U (alpha = -1). For such w and beta in
{0, 2/(1 - alpha)},

    w^-beta (R_alpha - S^t |grad w|) = div(w^-beta X),
    X = 2 (grad |grad w| - Delta w grad w / |grad w| + kappa |grad w| grad w / w),

with kappa = (2 beta - 1)/(beta - 1), S^t the scalar curvature of the level set and

    R_alpha = S |grad w| + |T|^2 / |grad w| - alpha^2 w_nu_nu^2 / |grad w|.

In spherical symmetry every term is available in closed form.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Any, NamedTuple

import numpy as np
from scipy.optimize import brentq

from pmonotone.exceptions import (
    ArgumentError,
    DomainError,
    FormulaPoleError,
    IdentityResidualError,
)
from pmonotone.geometry import (
    MetricKind,
    RadialMetric,
    make_radial_metric,
    phi_table,
    scalar_curvature,
    sphere_geometry,
)
from pmonotone.radial import (
    RadialPotential,
    level_radius,
    quadrature,
    radial_integral,
    solve_radial,
)

logger = logging.getLogger(__name__)

CONSTRUCTION_TOLERANCE = 1.0e-6
CONSTRUCTION_SAMPLES = 100
CONSTRUCTION_DECADES = 2.0


class FieldKind(str, enum.Enum):
    """Where a transformed field comes from."""

    P_HARMONIC = "p-harmonic"
    IMCF = "imcf"
    N_HARMONIC = "3-harmonic"


def default_beta(alpha: float) -> float:
    """2/(1 - alpha), or 0 where that value is infinite or hits the pole beta = 1."""
    if alpha >= 1.0 or alpha <= -1.0:
        return 0.0
    return 2.0 / (1.0 - alpha)


def _kappa(beta: float) -> float:
    if beta == 1.0:
        raise FormulaPoleError("beta = 1 is a pole of (2 beta - 1)/(beta - 1)")
    return (2.0 * beta - 1.0) / (beta - 1.0)


@dataclass(frozen=True, eq=False)
class BvpSolution:
    """
    Radial solution of the transformed system.

    Attributes
    ----------
    metric
        Model the field lives on.
    alpha, beta
        Parameters of the system and of the identity.
    kind
        Which transformation produced the field.
    potential
        The p-harmonic potential for ``P_HARMONIC`` fields.
    """

    metric: RadialMetric
    alpha: float
    beta: float
    kind: FieldKind
    potential: RadialPotential | None = None

    def _pot(self) -> RadialPotential:
        assert self.potential is not None
        return self.potential

    def value(self, r: float) -> float:
        """w(r)."""
        if self.kind is FieldKind.P_HARMONIC:
            pot = self._pot()
            return float((pot.one_minus_value(r) / pot.c) ** (-1.0 / pot.a))
        if self.kind is FieldKind.IMCF:
            return float(r)
        r_min = self.metric.r_min
        return float(r_min * math.exp(radial_integral(self.metric, 1.0, r_min, r)))

    def gradient_norm(self, r: float) -> float:
        """|grad w|(r)."""
        if self.kind is FieldKind.P_HARMONIC:
            pot = self._pot()
            return self.value(r) * pot.gradient_norm(r) / (pot.a * pot.one_minus_value(r))
        if self.kind is FieldKind.IMCF:
            return float(self.metric.inv_phi(r))
        return self.value(r) / r

    def hessian_normal(self, r: float) -> float:
        """w_nu_nu(r)."""
        if self.kind is FieldKind.P_HARMONIC:
            pot = self._pot()
            gap = pot.one_minus_value(r)
            grad = pot.gradient_norm(r)
            first = pot.hessian_normal(r) + (1.0 + pot.a) * grad**2 / (pot.a * gap)
            return self.value(r) * first / (pot.a * gap)
        if self.kind is FieldKind.IMCF:
            return float(-self.metric.dphi_over_phi3(r))
        return self.value(r) * (1.0 - float(self.metric.inv_phi(r))) / r**2

    def laplacian(self, r: float) -> float:
        """Delta w = w_nu_nu + H |grad w|."""
        mean_curvature = 2.0 * float(self.metric.inv_phi(r)) / r
        return self.hessian_normal(r) + mean_curvature * self.gradient_norm(r)

    def system_residual(self, r: float) -> float:
        """Relative residual of Delta w = alpha w_nu_nu + 2 |grad w|^2 / w."""
        lap = self.laplacian(r)
        quadratic = 2.0 * self.gradient_norm(r) ** 2 / self.value(r)
        residual = lap - self.alpha * self.hessian_normal(r) - quadratic
        return abs(residual) / (abs(lap) + quadratic)

    def inverse_value(self, r: float) -> float:
        """
        The function the field was built from, recovered from w.

        1 - c w^-a for p-harmonic fields, 2 log w for inverse mean curvature flow
        and log w for the 3-harmonic map.
        """
        w = self.value(r)
        if self.kind is FieldKind.P_HARMONIC:
            pot = self._pot()
            return 1.0 - pot.c * w ** (-pot.a)
        if self.kind is FieldKind.IMCF:
            return 2.0 * math.log(w)
        return math.log(w)

    def radius_of(self, level: float) -> float:
        """Coordinate radius of the level set {w = level}."""
        if self.kind is FieldKind.P_HARMONIC:
            return level_radius(self._pot(), level)
        r_min = self.metric.r_min
        if level < self.value(r_min):
            raise DomainError("level", level, f"level >= w(r_min) = {self.value(r_min)!r}")
        if self.kind is FieldKind.IMCF:
            return float(level)
        high = 2.0 * max(level, r_min)
        while self.value(high) < level:
            high *= 2.0
        return float(brentq(lambda r: self.value(r) - level, r_min, high, xtol=1e-14, rtol=1e-14))


def transform_field(
    pot: RadialPotential, alpha: float | None = None, beta: float | None = None
) -> BvpSolution:
    """
    Build the field solving the transformed system with parameter ``alpha``.

    Parameters
    ----------
    pot
        Radial potential; its metric carries the other transformations.
    alpha
        ``2 - pot.p`` (default) for the p-harmonic map, ``1`` for inverse mean
        curvature flow, ``-1`` for the 3-harmonic map. Other values in (-1, 1)
        use the p-harmonic map with p = 2 - alpha on the same metric.
    beta
        Exponent of the identity; ``0`` or ``2/(1 - alpha)`` (the default where finite).

    Returns
    -------
    BvpSolution
        A field whose system residual was checked on sampled radii.

    Raises
    ------
    DomainError
        If alpha lies outside [-1, 1] or beta is not one of the admissible values.
    FormulaPoleError
        If beta = 1.
    IdentityResidualError
        If the field fails the system on a sampled radius.
    """
    if alpha is None:
        alpha = 2.0 - pot.p
    if not -1.0 <= alpha <= 1.0:
        raise DomainError("alpha", alpha, "-1 <= alpha <= 1")
    if beta is None:
        beta = default_beta(alpha)
    _kappa(beta)
    if beta != 0.0 and not math.isclose(beta, default_beta(alpha), rel_tol=1e-12):
        raise DomainError("beta", beta, f"beta in {{0, {default_beta(alpha)!r}}}")

    metric = pot.metric
    if alpha == 1.0:
        sol = BvpSolution(metric=metric, alpha=1.0, beta=beta, kind=FieldKind.IMCF)
    elif alpha == -1.0:
        sol = BvpSolution(metric=metric, alpha=-1.0, beta=beta, kind=FieldKind.N_HARMONIC)
    else:
        if not math.isclose(alpha, 2.0 - pot.p, rel_tol=0.0, abs_tol=1e-14):
            logger.info("solving the p = %g potential for alpha = %g", 2.0 - alpha, alpha)
            pot = solve_radial(metric, 2.0 - alpha)
        sol = BvpSolution(
            metric=metric, alpha=float(alpha), beta=beta, kind=FieldKind.P_HARMONIC, potential=pot
        )

    radii = metric.r_min * np.logspace(0.0, CONSTRUCTION_DECADES, CONSTRUCTION_SAMPLES)
    worst = max(sol.system_residual(float(r)) for r in radii)
    logger.debug("%s field: largest system residual %.3e", sol.kind.value, worst)
    if worst > CONSTRUCTION_TOLERANCE:
        raise IdentityResidualError(worst, CONSTRUCTION_TOLERANCE)
    return sol


class IdentityResidual(NamedTuple):
    """
    Both sides of the divergence identity.

    Attributes
    ----------
    mode
        ``pointwise`` or ``integrated``.
    lhs, rhs
        Pointwise: w^-beta (R_alpha - S^t |grad w|) and div(w^-beta X).
        Integrated: half the bulk integral of w^-beta R_alpha, and the sum of the
        Gauss-Bonnet term with the boundary fluxes.
    residual
        |lhs - rhs|.
    excess
        Smallest R_alpha - S |grad w| met; never negative for |alpha| <= 1.
    where
        The radius, or the pair of radii bounding the region.
    """

    mode: str
    lhs: float
    rhs: float
    residual: float
    excess: float
    where: tuple[float, ...]

    def as_dict(self) -> dict[str, Any]:
        """JSON-ready form."""
        return {
            "mode": self.mode,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "excess": self.excess,
            "where": list(self.where),
        }


class _Terms(NamedTuple):
    w: float
    grad: float
    hess: float
    H: float
    dH: float
    S: float


def _terms(sol: BvpSolution, r: float) -> _Terms:
    inv = float(sol.metric.inv_phi(r))
    return _Terms(
        w=sol.value(r),
        grad=sol.gradient_norm(r),
        hess=sol.hessian_normal(r),
        H=2.0 * inv / r,
        dH=-2.0 * float(sol.metric.dphi_over_phi3(r)) / r - 2.0 * inv**2 / r**2,
        S=scalar_curvature(sol.metric, r),
    )


def _curvature_excess(sol: BvpSolution, terms: _Terms) -> float:
    """R_alpha - S |grad w| = (|T|^2 - alpha^2 w_nu_nu^2)/|grad w|."""
    umbilic = terms.grad * terms.H / 2.0 - terms.grad**2 / terms.w
    traceless = terms.hess**2 + 2.0 * umbilic**2
    return (traceless - sol.alpha**2 * terms.hess**2) / terms.grad


def _flux_density(terms: _Terms, kappa: float) -> float:
    """Normal component of X divided by 2."""
    return -terms.H * terms.grad + kappa * terms.grad**2 / terms.w


def _pointwise(sol: BvpSolution, r: float, beta: float) -> IdentityResidual:
    kappa = _kappa(beta)
    terms = _terms(sol, r)
    if terms.grad <= 0.0:
        raise DomainError("r", r, "|grad w| > 0")
    w, grad, hess, H = terms.w, terms.grad, terms.hess, terms.H
    excess = _curvature_excess(sol, terms)
    lhs = w ** (-beta) * (terms.S * grad + excess - 2.0 * grad / r**2)

    flux = _flux_density(terms, kappa)
    d_flux = (
        -terms.dH * grad
        - H * hess
        + kappa * (2.0 * grad * hess / w - grad**3 / w**2)
    )
    rhs = 2.0 * w ** (-beta) * (H * flux - beta * grad * flux / w + d_flux)
    return IdentityResidual("pointwise", lhs, rhs, abs(lhs - rhs), excess, (float(r),))


def _integrated(sol: BvpSolution, window: tuple[float, float], beta: float) -> IdentityResidual:
    kappa = _kappa(beta)
    low, high = sorted(window)
    r1, r2 = sol.radius_of(low), sol.radius_of(high)
    boundary = [_terms(sol, r) for r in (r1, r2)]
    if min(terms.grad for terms in boundary) <= 0.0:
        raise DomainError("window", low, "regular levels with |grad w| > 0")

    excess = [math.inf]

    def density(r: float) -> float:
        terms = _terms(sol, r)
        gap = _curvature_excess(sol, terms)
        excess[0] = min(excess[0], gap)
        volume = float(sol.metric.phi(r)) * r**2
        return terms.w ** (-beta) * (terms.S * terms.grad + gap) * volume

    bulk = quadrature(density, r1, r2)
    bulk *= 2.0 * math.pi

    w1, w2 = boundary[0].w, boundary[1].w
    gauss_bonnet = 4.0 * math.pi * (w2 ** (1.0 - beta) - w1 ** (1.0 - beta)) / (1.0 - beta)
    fluxes = [
        terms.w ** (-beta) * _flux_density(terms, kappa) * 4.0 * math.pi * r**2
        for terms, r in zip(boundary, (r1, r2))
    ]
    target = gauss_bonnet + fluxes[1] - fluxes[0]
    return IdentityResidual(
        "integrated", float(bulk), float(target), abs(bulk - target), excess[0], (r1, r2)
    )


def identity_check(
    sol: BvpSolution,
    *,
    r: float | None = None,
    window: tuple[float, float] | None = None,
    beta: float | None = None,
) -> IdentityResidual:
    """
    Compare both sides of the divergence identity.

    Parameters
    ----------
    sol
        Transformed field.
    r
        Radius for the pointwise identity.
    window
        Pair of w-levels bounding the region of the integrated identity; for
        p-harmonic fields these are level parameters t.
    beta
        Override of ``sol.beta``.

    Returns
    -------
    IdentityResidual
        Both sides and their difference.

    Raises
    ------
    ArgumentError
        If both or neither of ``r`` and ``window`` are given.
    FormulaPoleError
        If beta = 1.
    DomainError
        If a level is not regular or lies below the inner boundary.
    """
    if (r is None) == (window is None):
        raise ArgumentError("pass exactly one of r and window")
    beta = sol.beta if beta is None else beta
    if r is not None:
        result = _pointwise(sol, r, beta)
    else:
        assert window is not None
        result = _integrated(sol, window, beta)
    if result.excess < -CONSTRUCTION_TOLERANCE * (abs(result.lhs) + 1.0):
        logger.warning("R_alpha < S |grad w| at %s: %.3e", result.where, result.excess)
    return result


class HawkingForm(NamedTuple):
    """A and B from the mean-curvature form along U = (1 - p) log(1 - u)."""

    t: float
    tau: float
    A: float
    B: float


def hawking_form_quantities(pot: RadialPotential, t: float) -> HawkingForm:
    """
    A(t) and B(t) written through the flow parameter tau = (1 - p) log(c t^-a).

    With X = H + (p - 1) U_nu_nu / |grad U| on the level set,

        B = 4 pi c^(1/a) e^(tau/(3-p)) [1 - int X^2 / (4 pi (3-p)^2)]
        A = 8 pi c^(1/a) e^(tau/(3-p)) [1 - int H X / (8 pi (3-p))]
    """
    p, a, c = pot.p, pot.a, pot.c
    r = level_radius(pot, t)
    sphere = sphere_geometry(pot.metric, r)
    gap = c * t ** (-a)
    grad = pot.gradient_norm(r)
    x = sphere.H + (p - 1.0) * (pot.hessian_normal(r) / grad + grad / gap)
    tau = (1.0 - p) * math.log(gap)
    scale = c ** (1.0 / a) * math.exp(tau / (3.0 - p))
    return HawkingForm(
        t=float(t),
        tau=tau,
        A=8.0 * math.pi * scale * (1.0 - sphere.H * x * sphere.area / (8.0 * math.pi * (3.0 - p))),
        B=4.0 * math.pi * scale * (1.0 - x**2 * sphere.area / (4.0 * math.pi * (3.0 - p) ** 2)),
    )


def rigidity_metric(
    m_H: float, chi: int = 2, rho_range: tuple[float, float] = (1.0, math.inf)
) -> RadialMetric:
    """
    The metric (chi/2 - m_H/rho)^-1 d rho^2 + rho^2 (round sphere).

    For chi = 2 this is the Schwarzschild model of mass m_H/2 cut at the
    lower end of ``rho_range``.

    Raises
    ------
    DomainError
        If chi is not 2, m_H is negative, or the range reaches rho = m_H.
    """
    if chi != 2:
        raise DomainError("chi", float(chi), "chi = 2 (connected spherical level sets)")
    if m_H < 0:
        raise DomainError("m_H", m_H, "m_H >= 0")
    rho_min = float(rho_range[0])
    if not rho_min > m_H:
        raise DomainError("rho_min", rho_min, f"rho_min > m_H = {m_H!r}")
    if m_H == 0:
        return make_radial_metric(MetricKind.EUCLIDEAN, r_min=rho_min)
    return make_radial_metric(MetricKind.SCHWARZSCHILD, r_min=rho_min, mass=m_H / 2.0)


def rigidity_profile(
    metric: RadialMetric, rho_range: tuple[float, float], count: int
) -> list[tuple[float, float]]:
    """Log-spaced (rho, phi) samples of ``metric`` in the profile-CSV layout."""
    low, high = rho_range
    if count < 2 or not metric.r_min <= low < high:
        raise DomainError("rho_range", low, "r_min <= rho_min < rho_max and count >= 2")
    return phi_table(metric, np.geomspace(low, high, count))
