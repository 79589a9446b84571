"""
Structured grids on an annulus r_min <= r <= r_out and fields living on them.

Computational coordinates are (xi, theta) for the axisymmetric section and
(xi, theta, psi) for the three-dimensional mode, with xi in [0, 1] mapped to the
coordinate radius. The metric on the grid is

    w^2 (phi(r)^2 dr^2 + r^2 d theta^2 + r^2 sin^2 theta d psi^2)

where w is an optional smooth conformal perturbation, so it is diagonal in the
computational coordinates with scale factors (h_xi, h_theta, h_psi).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Mapping, NamedTuple

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pmonotone.exceptions import DomainError
from pmonotone.geometry import RadialMetric

FloatArray = NDArray[np.float64]


class RadialMapping(str, enum.Enum):
    """How xi in [0, 1] maps to the coordinate radius."""

    LOG = "log"
    SQRT = "sqrt"


class ScaleFactors(NamedTuple):
    """
    Diagonal metric factors at a set of points.

    Attributes
    ----------
    h_xi, h_theta, h_psi
        Scale factors; h_psi vanishes on the symmetry axis.
    h_psi_reduced
        h_psi / sin(theta), smooth and positive on the axis.
    """

    h_xi: FloatArray
    h_theta: FloatArray
    h_psi: FloatArray
    h_psi_reduced: FloatArray


@dataclass(frozen=True, eq=False)
class AnnulusGrid:
    """
    Tensor grid of the annulus.

    Attributes
    ----------
    metric
        Radial model metric.
    r_out
        Outer coordinate radius.
    shape
        Cells per axis, ``(n_xi, n_theta)`` or ``(n_xi, n_theta, n_psi)``.
    perturbation
        Amplitude of the conformal factor w = 1 + perturbation * (r_min/r)^2 * Y.
    mapping
        Radial node distribution; a square-root law resolves horizon boundaries.
    """

    metric: RadialMetric
    r_out: float
    shape: tuple[int, ...]
    perturbation: float = 0.0
    mapping: RadialMapping = RadialMapping.LOG

    @property
    def dims(self) -> int:
        """2 for the axisymmetric section, 3 for the full annulus."""
        return len(self.shape)

    @property
    def node_shape(self) -> tuple[int, ...]:
        """Number of nodes per axis (psi is periodic, so it has n_psi nodes)."""
        if self.dims == 2:
            return (self.shape[0] + 1, self.shape[1] + 1)
        return (self.shape[0] + 1, self.shape[1] + 1, self.shape[2])

    @property
    def spacing(self) -> tuple[float, ...]:
        """Computational step per axis."""
        steps = [1.0 / self.shape[0], math.pi / self.shape[1]]
        if self.dims == 3:
            steps.append(2.0 * math.pi / self.shape[2])
        return tuple(steps)

    @cached_property
    def xi(self) -> FloatArray:
        """Radial computational nodes."""
        return np.linspace(0.0, 1.0, self.shape[0] + 1)

    @cached_property
    def theta(self) -> FloatArray:
        """Polar nodes, both poles included."""
        return np.linspace(0.0, math.pi, self.shape[1] + 1)

    @cached_property
    def psi(self) -> FloatArray:
        """Azimuthal nodes (3-D mode only)."""
        if self.dims == 2:
            return np.zeros(1)
        return np.arange(self.shape[2]) * (2.0 * math.pi / self.shape[2])

    def radius(self, xi: ArrayLike) -> FloatArray:
        """Coordinate radius of computational coordinate xi."""
        x = np.asarray(xi, dtype=float)
        r_min = self.metric.r_min
        if self.mapping is RadialMapping.SQRT:
            return r_min + (self.r_out - r_min) * x**2
        return r_min * np.exp(x * math.log(self.r_out / r_min))

    def xi_of_radius(self, r: ArrayLike) -> FloatArray:
        """Inverse of :meth:`radius`."""
        radius = np.asarray(r, dtype=float)
        r_min = self.metric.r_min
        if self.mapping is RadialMapping.SQRT:
            return np.sqrt((radius - r_min) / (self.r_out - r_min))
        return np.log(radius / r_min) / math.log(self.r_out / r_min)

    def conformal_factor(self, xi: ArrayLike, theta: ArrayLike, psi: ArrayLike = 0.0) -> FloatArray:
        """The perturbation w; identically 1 when ``perturbation`` is 0."""
        x, th, ps = np.broadcast_arrays(
            np.asarray(xi, dtype=float), np.asarray(theta, dtype=float), np.asarray(psi, dtype=float)
        )
        if self.perturbation == 0.0:
            return np.ones_like(x)
        decay = (self.metric.r_min / self.radius(x)) ** 2
        if self.dims == 2:
            shape = np.cos(th) ** 2
        else:
            shape = np.sin(th) * np.cos(ps)
        return 1.0 + self.perturbation * decay * shape

    def scale_factors(self, xi: ArrayLike, theta: ArrayLike, psi: ArrayLike = 0.0) -> ScaleFactors:
        """Scale factors at arbitrary computational points."""
        x, th, ps = np.broadcast_arrays(
            np.asarray(xi, dtype=float), np.asarray(theta, dtype=float), np.asarray(psi, dtype=float)
        )
        r = self.radius(x)
        w = self.conformal_factor(x, th, ps)
        r_min = self.metric.r_min
        if self.mapping is RadialMapping.SQRT and self.metric.is_horizon:
            # phi * dr/dxi = 2 sqrt((r_out - r_min) r) for Schwarzschild cut at 2m
            radial = 2.0 * np.sqrt((self.r_out - r_min) * r)
        elif self.mapping is RadialMapping.SQRT:
            radial = 2.0 * (self.r_out - r_min) * x * self.metric.phi(r)
        else:
            radial = r * math.log(self.r_out / r_min) * self.metric.phi(r)
        return ScaleFactors(
            h_xi=w * radial,
            h_theta=w * r,
            h_psi=w * r * np.abs(np.sin(th)),
            h_psi_reduced=w * r,
        )

    @cached_property
    def node_coordinates(self) -> tuple[FloatArray, ...]:
        """Computational coordinates broadcast to the node shape."""
        if self.dims == 2:
            return tuple(np.meshgrid(self.xi, self.theta, indexing="ij"))
        return tuple(np.meshgrid(self.xi, self.theta, self.psi, indexing="ij"))

    @cached_property
    def node_factors(self) -> ScaleFactors:
        """Scale factors sampled at the nodes."""
        coords = self.node_coordinates
        if self.dims == 2:
            return self.scale_factors(coords[0], coords[1])
        return self.scale_factors(coords[0], coords[1], coords[2])

    @cached_property
    def node_radius(self) -> FloatArray:
        """Coordinate radius at every node."""
        return self.radius(self.node_coordinates[0])

    @property
    def n_nodes(self) -> int:
        """Total node count."""
        return int(np.prod(self.node_shape))

    @cached_property
    def boundary_masks(self) -> tuple[NDArray[np.bool_], NDArray[np.bool_]]:
        """Flat boolean masks of the inner and outer boundary nodes."""
        index = np.zeros(self.node_shape, dtype=int)
        index[0] = 1
        index[-1] = 2
        flat = index.ravel()
        return flat == 1, flat == 2

    def descriptor(self) -> dict[str, Any]:
        """JSON-ready grid description."""
        return {
            "metric": self.metric.descriptor(),
            "r_out": self.r_out,
            "shape": list(self.shape),
            "perturbation": self.perturbation,
            "mapping": self.mapping.value,
        }

    @classmethod
    def from_descriptor(cls, descriptor: Mapping[str, Any]) -> AnnulusGrid:
        """Inverse of :meth:`descriptor`."""
        return make_grid(
            RadialMetric.from_descriptor(descriptor["metric"]),
            r_out=float(descriptor["r_out"]),
            shape=tuple(int(n) for n in descriptor["shape"]),
            perturbation=float(descriptor.get("perturbation", 0.0)),
            mapping=descriptor.get("mapping"),
        )


def make_grid(
    metric: RadialMetric,
    *,
    r_out: float,
    shape: tuple[int, ...],
    perturbation: float = 0.0,
    mapping: str | RadialMapping | None = None,
) -> AnnulusGrid:
    """
    Validate and build an annulus grid.

    Parameters
    ----------
    metric
        Radial model metric; the inner boundary is its r_min sphere.
    r_out
        Outer radius, larger than ``metric.r_min``.
    shape
        Cells per axis; the 3-D mode needs an azimuthal count divisible by 4.
    perturbation
        Amplitude of the conformal perturbation, |perturbation| < 1.
    mapping
        Radial node law, chosen from the metric when omitted.

    Returns
    -------
    AnnulusGrid
        The grid.

    Raises
    ------
    DomainError
        If the parameters do not describe a valid grid.
    """
    if not r_out > metric.r_min:
        raise DomainError("r_out", r_out, f"r_out > r_min = {metric.r_min!r}")
    if len(shape) not in (2, 3):
        raise DomainError("dims", float(len(shape)), "dims in {2, 3}")
    if min(shape[:2]) < 4:
        raise DomainError("resolution", float(min(shape[:2])), "at least 4 cells per axis")
    if len(shape) == 3 and (shape[2] < 8 or shape[2] % 4):
        raise DomainError("resolution", float(shape[2]), "azimuthal cells >= 8 and divisible by 4")
    if not abs(perturbation) < 1.0:
        raise DomainError("perturbation", perturbation, "|perturbation| < 1")
    if mapping is None:
        mapping = RadialMapping.SQRT if metric.is_horizon else RadialMapping.LOG
    grid = AnnulusGrid(
        metric=metric,
        r_out=float(r_out),
        shape=tuple(int(n) for n in shape),
        perturbation=float(perturbation),
        mapping=RadialMapping(mapping),
    )
    factors = grid.node_factors
    if not (np.all(factors.h_xi > 0) and np.all(factors.h_theta > 0)):
        raise DomainError("metric", float("nan"), "positive scale factors at every node")
    return grid


@dataclass(frozen=True, eq=False)
class GridField:  # pylint: disable=too-many-instance-attributes
    """
    Solution of the regularized problem on an annulus grid.

    Attributes
    ----------
    grid
        The grid.
    values
        Node values, shaped like ``grid.node_shape``.
    p, eps
        Exponent and regularization.
    bc
        (inner value, outer value).
    iterations
        Newton (or fallback) iterations used.
    residual
        Final gradient sup-norm over interior nodes.
    energy_history
        Energy after every accepted step.
    """

    grid: AnnulusGrid
    values: FloatArray
    p: float
    eps: float
    bc: tuple[float, float]
    iterations: int = 0
    residual: float = 0.0
    energy_history: tuple[float, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready document of grid and field."""
        return {
            "grid": self.grid.descriptor(),
            "values": self.values.ravel().tolist(),
            "p": self.p,
            "eps": self.eps,
            "bc": list(self.bc),
            "iterations": self.iterations,
            "residual": self.residual,
        }

    @classmethod
    def from_dict(cls, document: Mapping[str, Any]) -> GridField:
        """Inverse of :meth:`to_dict`."""
        grid = AnnulusGrid.from_descriptor(document["grid"])
        values = np.asarray(document["values"], dtype=float).reshape(grid.node_shape)
        inner, outer = document["bc"]
        return cls(
            grid=grid,
            values=values,
            p=float(document["p"]),
            eps=float(document["eps"]),
            bc=(float(inner), float(outer)),
            iterations=int(document.get("iterations", 0)),
            residual=float(document.get("residual", 0.0)),
        )
