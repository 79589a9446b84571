"""
Spherically symmetric asymptotically flat metrics.

A metric here is g = phi(r)^2 dr^2 + r^2 * (round sphere) on r >= r_min. Every
quantity other modules need (curvatures, coordinate-sphere geometry, mass
estimates) is available in closed form from phi and phi'.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Any, Mapping, NamedTuple, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.interpolate import PchipInterpolator

from pmonotone.exceptions import DomainError, HorizonViolationError, ProfileTableError
from pmonotone.path_utils import read_profile_csv

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

ADM_RADIUS_FACTOR = 10.0


class MetricKind(str, enum.Enum):
    """Supported model families."""

    EUCLIDEAN = "euclidean"
    SCHWARZSCHILD = "schwarzschild"
    PROFILE = "profile"


class SphereData(NamedTuple):
    """
    Geometry of a coordinate sphere.

    Attributes
    ----------
    r
        Coordinate radius.
    area
        Area, always 4 pi r^2.
    H
        Mean curvature with respect to the outward normal.
    K
        Gauss curvature of the induced metric.
    """

    r: float
    area: float
    H: float
    K: float


class MassEstimate(NamedTuple):
    """ADM mass read off at a finite radius."""

    mass: float
    radius: float


@dataclass(frozen=True)
class RadialMetric:  # pylint: disable=too-many-instance-attributes
    """
    Validated model metric; build it with :func:`make_radial_metric`.

    Attributes
    ----------
    kind
        Model family.
    r_min
        Inner coordinate radius of the manifold with boundary.
    mass
        Schwarzschild mass parameter (zero for other kinds).
    table_r, table_phi
        Profile samples (empty for closed-form kinds).
    sigma
        Decay exponent of the profile tail beyond the last sample.
    """

    kind: MetricKind
    r_min: float
    mass: float = 0.0
    table_r: tuple[float, ...] = ()
    table_phi: tuple[float, ...] = ()
    sigma: float = 1.0
    _interp: Any = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Build the monotone cubic interpolant of a profile table."""
        if self.kind is MetricKind.PROFILE:
            interp = PchipInterpolator(
                np.asarray(self.table_r), np.asarray(self.table_phi), extrapolate=False
            )
            object.__setattr__(self, "_interp", interp)

    @property
    def adm_mass(self) -> float | None:
        """Analytic ADM mass, None when only an estimate is available."""
        if self.kind is MetricKind.EUCLIDEAN:
            return 0.0
        if self.kind is MetricKind.SCHWARZSCHILD:
            return self.mass
        return None

    @property
    def is_horizon(self) -> bool:
        """Whether the inner boundary is a Schwarzschild horizon."""
        return self.kind is MetricKind.SCHWARZSCHILD and self.r_min == 2.0 * self.mass

    def phi(self, r: ArrayLike) -> FloatArray:
        """Radial metric coefficient phi(r); infinite on a horizon."""
        radius = np.asarray(r, dtype=float)
        if self.kind is MetricKind.PROFILE:
            return self._profile_phi(radius)
        inv = self.inv_phi(radius)
        with np.errstate(divide="ignore"):
            return np.asarray(1.0 / inv)

    def inv_phi(self, r: ArrayLike) -> FloatArray:
        """1/phi(r), finite everywhere including a horizon."""
        radius = np.asarray(r, dtype=float)
        if self.kind is MetricKind.EUCLIDEAN:
            return np.ones_like(radius)
        if self.kind is MetricKind.SCHWARZSCHILD:
            return np.sqrt(np.maximum(radius - 2.0 * self.mass, 0.0) / radius)
        return 1.0 / self._profile_phi(radius)

    def dphi(self, r: ArrayLike) -> FloatArray:
        """First derivative phi'(r)."""
        radius = np.asarray(r, dtype=float)
        if self.kind is MetricKind.EUCLIDEAN:
            return np.zeros_like(radius)
        if self.kind is MetricKind.SCHWARZSCHILD:
            return -self.mass * self.phi(radius) ** 3 / radius**2
        return self._profile_dphi(radius)

    def dphi_over_phi3(self, r: ArrayLike) -> FloatArray:
        """phi'/phi^3, the combination entering the scalar curvature."""
        radius = np.asarray(r, dtype=float)
        if self.kind is MetricKind.EUCLIDEAN:
            return np.zeros_like(radius)
        if self.kind is MetricKind.SCHWARZSCHILD:
            return -self.mass / radius**2
        return self._profile_dphi(radius) / self._profile_phi(radius) ** 3

    def phi_above_inner(self, delta: ArrayLike) -> FloatArray:
        """
        phi(r_min + delta) without cancellation in r - 2m near a horizon.

        Quadratures substitute r = r_min + s^2 and need phi close to r_min.
        """
        gap = np.asarray(delta, dtype=float)
        if self.kind is MetricKind.SCHWARZSCHILD:
            offset = (self.r_min - 2.0 * self.mass) + gap
            with np.errstate(divide="ignore"):
                return np.sqrt((self.r_min + gap) / offset)
        return self.phi(self.r_min + gap)

    def reliable_radius(self) -> float:
        """Radius at which the mass expansion is read for this model."""
        if self.kind is MetricKind.PROFILE:
            return 100.0 * max(self.r_min, self.table_r[-1])
        return 1.0e4 * self.r_min

    def descriptor(self) -> dict[str, Any]:
        """JSON-ready description from which the metric can be rebuilt."""
        out: dict[str, Any] = {"kind": self.kind.value, "r_min": self.r_min}
        if self.kind is MetricKind.SCHWARZSCHILD:
            out["mass"] = self.mass
        if self.kind is MetricKind.PROFILE:
            out["table"] = [list(pair) for pair in zip(self.table_r, self.table_phi)]
            out["sigma"] = self.sigma
        return out

    @classmethod
    def from_descriptor(cls, descriptor: Mapping[str, Any]) -> RadialMetric:
        """Inverse of :meth:`descriptor`."""
        params = {key: value for key, value in descriptor.items() if key != "kind"}
        return make_radial_metric(descriptor["kind"], **params)

    def _profile_phi(self, radius: FloatArray) -> FloatArray:
        r_last = self.table_r[-1]
        phi_last = self.table_phi[-1]
        inside = radius <= r_last
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = 1.0 + (phi_last - 1.0) * (r_last / radius) ** self.sigma
        body = self._interp(np.minimum(radius, r_last))
        return np.asarray(np.where(inside, body, tail), dtype=float)

    def _profile_dphi(self, radius: FloatArray) -> FloatArray:
        r_last = self.table_r[-1]
        phi_last = self.table_phi[-1]
        inside = radius <= r_last
        with np.errstate(divide="ignore", invalid="ignore"):
            tail = (
                -self.sigma * (phi_last - 1.0) * (r_last / radius) ** self.sigma / radius
            )
        body = self._interp.derivative()(np.minimum(radius, r_last))
        return np.asarray(np.where(inside, body, tail), dtype=float)


def make_radial_metric(
    kind: str | MetricKind,
    *,
    r_min: float,
    mass: float | None = None,
    table: Sequence[Sequence[float]] | None = None,
    sigma: float = 1.0,
) -> RadialMetric:
    """
    Validate parameters and build a model metric.

    Parameters
    ----------
    kind
        ``euclidean``, ``schwarzschild`` or ``profile``.
    r_min
        Inner coordinate radius, positive.
    mass
        Schwarzschild mass (required for that kind, must satisfy r_min >= 2m).
    table
        Profile samples ``[(r, phi), ...]``, strictly increasing in r.
    sigma
        Tail exponent of the profile beyond its last sample.

    Returns
    -------
    RadialMetric
        The validated metric.

    Raises
    ------
    DomainError
        If r_min is not positive or mass is negative.
    HorizonViolationError
        If a Schwarzschild model is cut inside its horizon.
    ProfileTableError
        If a profile table is too short, not increasing or not positive.
    """
    kind = MetricKind(kind)
    if not r_min > 0:
        raise DomainError("r_min", r_min, "r_min > 0")
    if kind is MetricKind.EUCLIDEAN:
        return RadialMetric(kind=kind, r_min=float(r_min))
    if kind is MetricKind.SCHWARZSCHILD:
        if mass is None or mass < 0:
            raise DomainError("mass", float("nan") if mass is None else mass, "mass >= 0")
        if r_min < 2.0 * mass:
            raise HorizonViolationError(r_min, mass)
        return RadialMetric(kind=kind, r_min=float(r_min), mass=float(mass))

    if table is None or len(table) < 2:
        raise ProfileTableError("profile table needs at least 2 samples")
    radii = np.array([float(row[0]) for row in table])
    values = np.array([float(row[1]) for row in table])
    if np.any(np.diff(radii) <= 0):
        raise ProfileTableError("profile radii must be strictly increasing")
    if np.any(values <= 0):
        raise ProfileTableError("profile values phi must be positive")
    if r_min < radii[0]:
        raise ProfileTableError(
            f"r_min = {r_min!r} lies below the first tabulated radius {radii[0]!r}"
        )
    if sigma <= 0.5:
        logger.warning(
            "profile tail exponent sigma = %g does not satisfy the decay rate "
            "of asymptotic flatness",
            sigma,
        )
    return RadialMetric(
        kind=kind,
        r_min=float(r_min),
        table_r=tuple(radii.tolist()),
        table_phi=tuple(values.tolist()),
        sigma=float(sigma),
    )


def _check_radius(metric: RadialMetric, r: float) -> None:
    if r < metric.r_min:
        raise DomainError("r", r, f"r >= r_min = {metric.r_min!r}")


def scalar_curvature(metric: RadialMetric, r: float) -> float:
    """
    Scalar curvature of g = phi^2 dr^2 + r^2 (round sphere).

    Parameters
    ----------
    metric
        Model metric.
    r
        Coordinate radius, at least ``metric.r_min``.

    Returns
    -------
    float
        (2/r^2)(1 - phi^-2) + 4 phi'/(r phi^3).
    """
    _check_radius(metric, r)
    inv = float(metric.inv_phi(r))
    return 2.0 / r**2 * (1.0 - inv**2) + 4.0 * float(metric.dphi_over_phi3(r)) / r


def sphere_geometry(metric: RadialMetric, r: float) -> SphereData:
    """Area, outward mean curvature and Gauss curvature of the sphere of radius r."""
    _check_radius(metric, r)
    return SphereData(
        r=float(r),
        area=4.0 * np.pi * r**2,
        H=2.0 * float(metric.inv_phi(r)) / r,
        K=1.0 / r**2,
    )


def hawking_mass(metric: RadialMetric, r: float) -> float:
    """Hawking mass sqrt(A/16 pi) (1 - (1/16 pi) int H^2) of a coordinate sphere."""
    sphere = sphere_geometry(metric, r)
    willmore = sphere.H**2 * sphere.area / (16.0 * np.pi)
    return float(np.sqrt(sphere.area / (16.0 * np.pi)) * (1.0 - willmore))


def adm_mass_estimate(metric: RadialMetric, r: float) -> MassEstimate:
    """
    Mass expansion (1/8 pi)[4 pi r - int H + A/r] evaluated at radius r.

    Parameters
    ----------
    metric
        Model metric.
    r
        Evaluation radius, at least ten times ``metric.r_min``.

    Returns
    -------
    MassEstimate
        The estimate together with the radius it was read at.

    Raises
    ------
    DomainError
        If r is below the near-asymptotic cutoff.
    """
    if r < ADM_RADIUS_FACTOR * metric.r_min:
        raise DomainError(
            "r", r, f"r >= {ADM_RADIUS_FACTOR:g} * r_min = {ADM_RADIUS_FACTOR * metric.r_min!r}"
        )
    sphere = sphere_geometry(metric, r)
    total_h = sphere.H * sphere.area
    value = (4.0 * np.pi * r - total_h + sphere.area / r) / (8.0 * np.pi)
    return MassEstimate(mass=float(value), radius=float(r))


def phi_table(metric: RadialMetric, radii: ArrayLike) -> list[tuple[float, float]]:
    """Sample phi on the given radii in the profile-CSV layout."""
    radius = np.asarray(radii, dtype=float)
    return [(float(x), float(y)) for x, y in zip(radius, metric.phi(radius))]


def read_profile(path: str, *, r_min: float | None = None, sigma: float = 1.0) -> RadialMetric:
    """
    Build a profile metric from a two-column ``r,phi`` CSV file.

    Parameters
    ----------
    path
        CSV file in the layout written by :func:`phi_table`.
    r_min
        Inner radius; the first tabulated radius when omitted.
    sigma
        Tail exponent beyond the last sample.

    Returns
    -------
    RadialMetric
        The validated profile metric.
    """
    table = read_profile_csv(path)
    if not table:
        raise ProfileTableError(f"{path} holds no samples")
    logger.debug("read %d profile samples from %s", len(table), path)
    return make_radial_metric(
        MetricKind.PROFILE,
        r_min=table[0][0] if r_min is None else r_min,
        table=table,
        sigma=sigma,
    )
