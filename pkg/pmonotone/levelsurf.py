"""
Level surfaces of potentials and the integrals the monotone quantities need.

Radial potentials have coordinate spheres as level sets, so every integral is a
closed-form expression at the level radius. Grid fields are differentiated with
second-order central differences in the computational coordinates and their level
sets are reconstructed as polylines (axisymmetric section) or triangulated
spheres (3-D grid).
"""

from __future__ import annotations

import logging
import math
from functools import lru_cache
from typing import Any, NamedTuple, Union

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import RegularGridInterpolator

from pmonotone import pdesolve
from pmonotone.exceptions import (
    DegenerateContourError,
    DomainError,
    LevelOutsideGridError,
    StepTooLargeError,
)
from pmonotone.geometry import scalar_curvature
from pmonotone.grid import GridField
from pmonotone.radial import RadialPotential, decay_exponent, level_radius

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
Source = Union[RadialPotential, GridField]

REGULARITY_THRESHOLD = 1.0e-6
TRUNCATION_THRESHOLD = 1.0e-3


class LevelSurfaceData(NamedTuple):
    """
    Integrals over one level set Sigma(t) = {u = 1 - c t^-a}.

    Attributes
    ----------
    t, s
        Level parameter and potential value.
    area
        Area of the level set.
    int_gradp1, int_grad2, int_gradH, int_H2, int_K
        int |grad u|^(p-1), int |grad u|^2, int |grad u| H, int H^2, int K.
    min_grad, median_grad
        Extremes of |grad u| sampled on the surface.
    regular
        False when |grad u| nearly vanishes somewhere on the surface.
    """

    t: float
    s: float
    area: float
    int_gradp1: float
    int_grad2: float
    int_gradH: float
    int_H2: float
    int_K: float
    min_grad: float
    median_grad: float
    regular: bool


class NodeDerivatives(NamedTuple):
    """Differential quantities of a grid field at its nodes."""

    grad_norm: FloatArray
    laplacian: FloatArray
    normal_hessian: FloatArray
    mean_curvature: FloatArray


class EvolutionCheck(NamedTuple):
    """
    Finite-difference check of the first-variation formulas at u = tau.

    Attributes
    ----------
    dirichlet_derivative, dirichlet_rhs, dirichlet_residual
        d/dtau int |grad u|^2, the integral int (2 Lap u - |grad u| H), and
        their difference.
    curvature_derivative, curvature_lhs, curvature_gap
        d/dtau int |grad u| H, int (K - 3/4 H^2 + H Lap u/|grad u|), and the gap
        LHS minus derivative.
    closed_form_gap
        (1/2) int R dA, the value the gap must take on coordinate spheres.
    truncation
        Estimated truncation error of the central differences.
    """

    tau: float
    h: float
    dirichlet_derivative: float
    dirichlet_rhs: float
    dirichlet_residual: float
    curvature_derivative: float
    curvature_lhs: float
    curvature_gap: float
    closed_form_gap: float
    truncation: float


def _regular(min_grad: float, median_grad: float) -> bool:
    return median_grad > 0.0 and min_grad > REGULARITY_THRESHOLD * median_grad


def _radial_level(pot: RadialPotential, t: float) -> LevelSurfaceData:
    r = level_radius(pot, t)
    s = pot.level_value(t)
    area = 4.0 * math.pi * r**2
    grad = pot.gradient_norm(r)
    mean = 2.0 * float(pot.metric.inv_phi(r)) / r
    return LevelSurfaceData(
        t=float(t),
        s=s,
        area=area,
        int_gradp1=grad ** (pot.p - 1.0) * area,
        int_grad2=grad**2 * area,
        int_gradH=grad * mean * area,
        int_H2=mean**2 * area,
        int_K=4.0 * math.pi,
        min_grad=grad,
        median_grad=grad,
        regular=_regular(grad, grad),
    )


# -- grid differentiation ---------------------------------------------------


def _d_xi(values: FloatArray, step: float) -> FloatArray:
    return np.gradient(values, step, axis=0, edge_order=2)


def _d_theta(values: FloatArray, step: float, parity: float) -> FloatArray:
    """Central theta derivative; ghosts across the axis carry the given parity."""
    lower = values[:, 1:2]
    upper = values[:, -2:-1]
    if values.ndim == 3:
        half = values.shape[2] // 2
        lower = np.roll(lower, half, axis=2)
        upper = np.roll(upper, half, axis=2)
    padded = np.concatenate([parity * lower, values, parity * upper], axis=1)
    return (padded[:, 2:] - padded[:, :-2]) / (2.0 * step)


def _d_psi(values: FloatArray, step: float) -> FloatArray:
    return (np.roll(values, -1, axis=2) - np.roll(values, 1, axis=2)) / (2.0 * step)


def _quarter_turn(values: FloatArray) -> FloatArray:
    """Values on the meridian a quarter turn further in psi."""
    return np.roll(values, -(values.shape[2] // 4), axis=2)


def _gradient_pairing(field: GridField, first: FloatArray, second: FloatArray) -> FloatArray:
    """<grad first, grad second> with the pole rows handled by orthogonal meridians."""
    grid = field.grid
    steps = grid.spacing
    factors = grid.node_factors
    total = _d_xi(first, steps[0]) * _d_xi(second, steps[0]) / factors.h_xi**2
    theta_first = _d_theta(first, steps[1], 1.0)
    theta_second = _d_theta(second, steps[1], 1.0)
    total = total + theta_first * theta_second / factors.h_theta**2
    if grid.dims == 3:
        with np.errstate(divide="ignore", invalid="ignore"):
            azimuthal = (
                _d_psi(first, steps[2]) * _d_psi(second, steps[2]) / factors.h_psi**2
            )
        pole = (
            _quarter_turn(theta_first) * _quarter_turn(theta_second) / factors.h_theta**2
        )
        azimuthal[:, 0] = pole[:, 0]
        azimuthal[:, -1] = pole[:, -1]
        total = total + azimuthal
    return total


def _laplacian(field: GridField) -> FloatArray:
    grid = field.grid
    v = field.values
    steps = grid.spacing
    f = grid.node_factors
    reduced = f.h_xi * f.h_theta * f.h_psi_reduced
    lap = _d_xi(reduced / f.h_xi**2 * _d_xi(v, steps[0]), steps[0]) / reduced

    sin_theta = np.sin(grid.node_coordinates[1])
    polar_flux = reduced * sin_theta / f.h_theta**2 * _d_theta(v, steps[1], 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        angular = _d_theta(polar_flux, steps[1], -1.0) / (reduced * sin_theta)
    if grid.dims == 2:
        angular[:, 0] = 4.0 * (v[:, 1] - v[:, 0]) / (steps[1] ** 2 * f.h_theta[:, 0] ** 2)
        angular[:, -1] = 4.0 * (v[:, -2] - v[:, -1]) / (steps[1] ** 2 * f.h_theta[:, -1] ** 2)
        return lap + angular

    volume = f.h_xi * f.h_theta * f.h_psi
    with np.errstate(divide="ignore", invalid="ignore"):
        azimuthal_flux = f.h_xi * f.h_theta / f.h_psi * _d_psi(v, steps[2])
        angular = angular + _d_psi(azimuthal_flux, steps[2]) / volume
    half = v.shape[2] // 2
    for row, neighbour in ((0, 1), (-1, -2)):
        centre = v[:, row]
        ring = v[:, neighbour]
        second = (ring - 2.0 * centre + np.roll(ring, half, axis=1)) / steps[1] ** 2
        turned = np.roll(second, -(v.shape[2] // 4), axis=1)
        angular[:, row] = (second + turned) / f.h_theta[:, row] ** 2
    return lap + angular


@lru_cache(maxsize=8)
def node_derivatives(field: GridField, curvature: str = "geometric") -> NodeDerivatives:
    """
    |grad v|, Lap v, v_nu_nu and the level-set mean curvature at every node.

    Parameters
    ----------
    field
        Grid field.
    curvature
        ``geometric`` uses H = (Lap v - v_nu_nu)/|grad v|; ``regularized``
        eliminates Lap v with the regularized equation.

    Returns
    -------
    NodeDerivatives
        Node arrays shaped like ``field.values``.
    """
    grad_norm = np.sqrt(_gradient_pairing(field, field.values, field.values))
    laplacian = _laplacian(field)
    with np.errstate(divide="ignore", invalid="ignore"):
        normal_hessian = _gradient_pairing(field, grad_norm, field.values) / grad_norm
        if curvature == "geometric":
            mean = (laplacian - normal_hessian) / grad_norm
        elif curvature == "regularized":
            eps2 = field.eps**2
            mean = (
                -((field.p - 1.0) * grad_norm**2 + eps2)
                / ((grad_norm**2 + eps2) * grad_norm)
                * normal_hessian
            )
        else:
            raise DomainError("curvature", float("nan"), "curvature in {'geometric', 'regularized'}")
    return NodeDerivatives(grad_norm, laplacian, normal_hessian, mean)


# -- contour reconstruction -------------------------------------------------


def _interpolators(
    field: GridField, arrays: dict[str, FloatArray]
) -> dict[str, RegularGridInterpolator]:
    grid = field.grid
    if grid.dims == 2:
        axes: tuple[FloatArray, ...] = (grid.xi, grid.theta)
        return {
            name: RegularGridInterpolator(axes, values) for name, values in arrays.items()
        }
    axes = (grid.xi, grid.theta, np.append(grid.psi, 2.0 * math.pi))
    return {
        name: RegularGridInterpolator(axes, np.concatenate([values, values[:, :, :1]], axis=2))
        for name, values in arrays.items()
    }


def _check_range(field: GridField, level: float) -> None:
    interior = field.values[1:-1]
    low, high = float(interior.min()), float(interior.max())
    if not low <= level <= high:
        raise LevelOutsideGridError(level, low, high)


def _trace_polyline(field: GridField, level: float) -> FloatArray:  # pylint: disable=too-many-locals
    """Marching squares in (xi, theta); one chain from theta = 0 to theta = pi."""
    grid = field.grid
    shifted = field.values - level
    above = shifted >= 0.0
    cross_r = above[:-1, :] != above[1:, :]
    cross_t = above[:, :-1] != above[:, 1:]
    if cross_t[0].any() or cross_t[-1].any():
        raise DegenerateContourError(f"level {level!r} touches the grid boundary")

    def edges(i: int, j: int) -> list[tuple[str, int, int]]:
        return [("r", i, j), ("t", i + 1, j), ("r", i, j + 1), ("t", i, j)]

    def crosses(edge: tuple[str, int, int]) -> bool:
        kind, i, j = edge
        return bool(cross_r[i, j] if kind == "r" else cross_t[i, j])

    neighbours: dict[tuple[str, int, int], list[tuple[str, int, int]]] = {}
    counts = (
        cross_r[:, :-1].astype(int)
        + cross_t[1:, :].astype(int)
        + cross_r[:, 1:].astype(int)
        + cross_t[:-1, :].astype(int)
    )
    for i, j in zip(*np.nonzero(counts)):
        e0, e1, e2, e3 = edges(int(i), int(j))
        if counts[i, j] == 2:
            pair = [edge for edge in (e0, e1, e2, e3) if crosses(edge)]
            segments = [tuple(pair)]
        else:
            centre = 0.25 * shifted[i : i + 2, j : j + 2].sum()
            if (centre >= 0.0) == bool(above[i, j]):
                segments = [(e0, e1), (e2, e3)]
            else:
                segments = [(e3, e0), (e1, e2)]
        for first, second in segments:
            neighbours.setdefault(first, []).append(second)
            neighbours.setdefault(second, []).append(first)

    starts = [("r", int(i), 0) for i in np.nonzero(cross_r[:, 0])[0]]
    if len(starts) != 1:
        raise DegenerateContourError(
            f"level {level!r} meets the symmetry axis {len(starts)} times at theta = 0"
        )
    chain = [starts[0]]
    previous = None
    while True:
        options = [edge for edge in neighbours.get(chain[-1], []) if edge != previous]
        if not options:
            break
        previous = chain[-1]
        chain.append(options[0])
        if len(chain) > len(neighbours) + 1:
            raise DegenerateContourError(f"level {level!r} contains a closed loop")
    last = chain[-1]
    if last[0] != "r" or last[2] != grid.shape[1] or len(chain) != len(neighbours):
        raise DegenerateContourError(
            f"level {level!r} is not a single curve joining the poles"
        )

    step_xi, step_theta = grid.spacing
    points = np.empty((len(chain), 2))
    for n, (kind, i, j) in enumerate(chain):
        if kind == "r":
            frac = shifted[i, j] / (shifted[i, j] - shifted[i + 1, j])
            points[n] = (grid.xi[i] + frac * step_xi, grid.theta[j])
        else:
            frac = shifted[i, j] / (shifted[i, j] - shifted[i, j + 1])
            points[n] = (grid.xi[i], grid.theta[j] + frac * step_theta)
    keep = np.concatenate([[True], np.any(np.abs(np.diff(points, axis=0)) > 1e-14, axis=1)])
    return points[keep]


def _polyline_integrals(field: GridField, level: float, derivs: NodeDerivatives) -> dict[str, Any]:
    grid = field.grid
    points = _trace_polyline(field, level)
    interp = _interpolators(field, {"grad": derivs.grad_norm, "H": derivs.mean_curvature})
    grad = interp["grad"](points)
    mean = interp["H"](points)
    mid = 0.5 * (points[1:] + points[:-1])
    mid_factors = grid.scale_factors(mid[:, 0], mid[:, 1])
    delta = np.diff(points, axis=0)
    ds = np.hypot(mid_factors.h_xi * delta[:, 0], mid_factors.h_theta * delta[:, 1])
    profile = grid.scale_factors(points[:, 0], points[:, 1]).h_psi
    profile[0] = 0.0
    profile[-1] = 0.0
    length = np.concatenate([[0.0], ds]) + np.concatenate([ds, [0.0]])
    weights = math.pi * length * profile
    slope_first = (profile[1] - profile[0]) / ds[0]
    slope_last = (profile[-1] - profile[-2]) / ds[-1]
    return {
        "weights": weights,
        "grad": grad,
        "H": mean,
        "int_K": 2.0 * math.pi * (slope_first - slope_last),
    }


def _ray_crossings(field: GridField, level: float) -> tuple[FloatArray, list[tuple[int, int]]]:
    """Crossing of the level along every radial grid line, poles once each."""
    grid = field.grid
    shifted = field.values - level
    n_theta, n_psi = grid.shape[1], grid.shape[2]
    columns = [(0, 0)]
    columns += [(j, k) for j in range(1, n_theta) for k in range(n_psi)]
    columns.append((n_theta, 0))
    points = np.empty((len(columns), 3))
    for n, (j, k) in enumerate(columns):
        ray = shifted[:, j, k]
        above = ray >= 0.0
        hits = np.nonzero(above[:-1] != above[1:])[0]
        if len(hits) != 1:
            raise DegenerateContourError(
                f"level {level!r} crosses the radial line theta={grid.theta[j]:.4f}, "
                f"psi={grid.psi[k]:.4f} {len(hits)} times"
            )
        i = int(hits[0])
        frac = ray[i] / (ray[i] - ray[i + 1])
        points[n] = (grid.xi[i] + frac * grid.spacing[0], grid.theta[j], grid.psi[k])
    return points, columns


def _triangles(n_theta: int, n_psi: int) -> NDArray[np.int64]:
    def ring(j: int, k: int) -> int:
        return 1 + (j - 1) * n_psi + (k % n_psi)

    south = 1 + (n_theta - 1) * n_psi
    faces = []
    for k in range(n_psi):
        faces.append((0, ring(1, k), ring(1, k + 1)))
        for j in range(1, n_theta - 1):
            faces.append((ring(j, k), ring(j + 1, k), ring(j + 1, k + 1)))
            faces.append((ring(j, k), ring(j + 1, k + 1), ring(j, k + 1)))
        faces.append((ring(n_theta - 1, k), south, ring(n_theta - 1, k + 1)))
    return np.array(faces, dtype=np.int64)


def _mesh_integrals(  # pylint: disable=too-many-locals
    field: GridField, level: float, derivs: NodeDerivatives
) -> dict[str, Any]:
    """Triangulated level sphere; the metric is w^2 (flat + (phi^2 - 1) dr dr)."""
    grid = field.grid
    points, _ = _ray_crossings(field, level)
    interp = _interpolators(field, {"grad": derivs.grad_norm, "H": derivs.mean_curvature})
    grad = interp["grad"](points)
    mean = interp["H"](points)

    radius = grid.radius(points[:, 0])
    theta, psi = points[:, 1], points[:, 2]
    embedded = radius[:, None] * np.stack(
        [np.sin(theta) * np.cos(psi), np.sin(theta) * np.sin(psi), np.cos(theta)], axis=1
    )
    faces = _triangles(grid.shape[1], grid.shape[2])
    corners = embedded[faces]
    centroid = corners.mean(axis=1)
    r_c = np.linalg.norm(centroid, axis=1)
    unit = centroid / r_c[:, None]
    w = grid.conformal_factor(
        grid.xi_of_radius(r_c),
        np.arccos(np.clip(unit[:, 2], -1.0, 1.0)),
        np.arctan2(unit[:, 1], unit[:, 0]),
    )
    stretch = grid.metric.phi(r_c) ** 2 - 1.0

    def inner(first: FloatArray, second: FloatArray) -> FloatArray:
        radial = np.einsum("ni,ni->n", unit, first) * np.einsum("ni,ni->n", unit, second)
        return w**2 * (np.einsum("ni,ni->n", first, second) + stretch * radial)

    areas = np.zeros(len(faces))
    defect = np.full(len(points), 2.0 * math.pi)
    for corner in range(3):
        apex = corners[:, corner]
        left = corners[:, (corner + 1) % 3] - apex
        right = corners[:, (corner + 2) % 3] - apex
        ll, rr, lr = inner(left, left), inner(right, right), inner(left, right)
        angle = np.arccos(np.clip(lr / np.sqrt(ll * rr), -1.0, 1.0))
        np.subtract.at(defect, faces[:, corner], angle)
        if corner == 0:
            areas = 0.5 * np.sqrt(np.maximum(ll * rr - lr**2, 0.0))
    weights = np.zeros(len(points))
    np.add.at(weights, faces.ravel(), np.repeat(areas / 3.0, 3))
    return {"weights": weights, "grad": grad, "H": mean, "int_K": float(defect.sum())}


def _grid_level(
    field: GridField, t: float, level: float, curvature: str = "geometric"
) -> LevelSurfaceData:
    _check_range(field, level)
    derivs = node_derivatives(field, curvature)
    if field.grid.dims == 2:
        data = _polyline_integrals(field, level, derivs)
    else:
        data = _mesh_integrals(field, level, derivs)
    weights, grad, mean = data["weights"], data["grad"], data["H"]
    min_grad = float(grad.min())
    median_grad = float(np.median(grad))
    logger.debug(
        "level %.6g: %d surface points, min |grad v| %.3g", level, len(weights), min_grad
    )
    return LevelSurfaceData(
        t=float(t),
        s=float(level),
        area=float(weights.sum()),
        int_gradp1=float(np.sum(weights * grad ** (field.p - 1.0))),
        int_grad2=float(np.sum(weights * grad**2)),
        int_gradH=float(np.sum(weights * grad * mean)),
        int_H2=float(np.sum(weights * mean**2)),
        int_K=float(data["int_K"]),
        min_grad=min_grad,
        median_grad=median_grad,
        regular=_regular(min_grad, median_grad),
    )


def extract_level(
    source: Source,
    t: float,
    *,
    c: float | None = None,
    curvature: str = "geometric",
) -> LevelSurfaceData:
    """
    Integrals over Sigma(t) = {u = 1 - c t^-a}.

    Parameters
    ----------
    source
        Radial potential or converged grid field.
    t
        Level parameter.
    c
        Normalization of a grid field; computed from its regularized capacity
        when omitted. Ignored for radial potentials.
    curvature
        Mean-curvature formula for grid fields, see :func:`node_derivatives`.

    Returns
    -------
    LevelSurfaceData
        Area and the integrals of |grad u|^(p-1), |grad u|^2, |grad u| H, H^2, K.

    Raises
    ------
    DomainError
        If t lies below the boundary parameter.
    LevelOutsideGridError
        If the level does not meet the grid.
    DegenerateContourError
        If the reconstructed level set is not a single sphere.
    """
    if isinstance(source, RadialPotential):
        return _radial_level(source, t)
    if c is None:
        c = pdesolve.normalization_constant(source)
    a = decay_exponent(source.p)
    t_boundary = c ** (1.0 / a)
    if t < t_boundary * (1.0 - 1e-12):
        raise DomainError("t", t, f"t >= c^(1/a) = {t_boundary!r}")
    return _grid_level(source, t, 1.0 - c * t ** (-a), curvature)


def extract_value(field: GridField, level: float, curvature: str = "geometric") -> LevelSurfaceData:
    """Integrals over {v = level} of a grid field; ``t`` is reported as NaN."""
    return _grid_level(field, math.nan, level, curvature)


def level_flux(field: GridField, level: float) -> float:
    """int |grad v|_eps^(p-2) |grad v| over {v = level}; independent of the level for solutions."""
    _check_range(field, level)
    derivs = node_derivatives(field)
    if field.grid.dims == 2:
        data = _polyline_integrals(field, level, derivs)
    else:
        data = _mesh_integrals(field, level, derivs)
    grad = data["grad"]
    density = (grad**2 + field.eps**2) ** ((field.p - 2.0) / 2.0) * grad
    return float(np.sum(data["weights"] * density))


# -- first variation ---------------------------------------------------------


def _variation_terms(pot: RadialPotential, tau: float) -> tuple[float, float, float, float]:
    r = pot.radius_of_value(tau)
    area = 4.0 * math.pi * r**2
    grad = pot.gradient_norm(r)
    mean = 2.0 * float(pot.metric.inv_phi(r)) / r
    laplacian = (2.0 - pot.p) / (1.0 - pot.p) * grad * mean
    dirichlet = grad**2 * area
    curvature = grad * mean * area
    dirichlet_rhs = (2.0 * laplacian - grad * mean) * area
    curvature_lhs = (1.0 / r**2 - 0.75 * mean**2 + mean * laplacian / grad) * area
    return dirichlet, curvature, dirichlet_rhs, curvature_lhs


def _central(pot: RadialPotential, tau: float, h: float) -> tuple[float, float]:
    plus = _variation_terms(pot, tau + h)
    minus = _variation_terms(pot, tau - h)
    return (plus[0] - minus[0]) / (2.0 * h), (plus[1] - minus[1]) / (2.0 * h)


def evolution_check(
    pot: RadialPotential, tau: float, h: float, *, threshold: float = TRUNCATION_THRESHOLD
) -> EvolutionCheck:
    """
    Compare the first-variation formulas with central differences in the level value.

    Parameters
    ----------
    pot
        Radial potential.
    tau
        Level value, with tau +- h inside (0, 1).
    h
        Finite-difference step.
    threshold
        Largest admissible relative truncation error, estimated from a
        half-step Richardson comparison.

    Returns
    -------
    EvolutionCheck
        Derivatives, right-hand sides, residuals and the closed-form gap.

    Raises
    ------
    DomainError
        If tau +- h leaves (0, 1).
    StepTooLargeError
        If the truncation estimate exceeds ``threshold``.
    """
    if not (h > 0.0 and 0.0 < tau - h and tau + h < 1.0):
        raise DomainError("tau", tau, f"0 < tau - h < tau + h < 1 with h = {h!r}")
    _, _, dirichlet_rhs, curvature_lhs = _variation_terms(pot, tau)
    dirichlet_fd, curvature_fd = _central(pot, tau, h)
    dirichlet_half, curvature_half = _central(pot, tau, 0.5 * h)
    truncation = (4.0 / 3.0) * max(
        abs(dirichlet_fd - dirichlet_half), abs(curvature_fd - curvature_half)
    )
    scale = max(abs(dirichlet_fd), abs(curvature_fd), abs(dirichlet_rhs), abs(curvature_lhs))
    if truncation > threshold * scale:
        raise StepTooLargeError(h, truncation, threshold * scale)
    r = pot.radius_of_value(tau)
    closed_form = 0.5 * scalar_curvature(pot.metric, r) * 4.0 * math.pi * r**2
    return EvolutionCheck(
        tau=float(tau),
        h=float(h),
        dirichlet_derivative=dirichlet_fd,
        dirichlet_rhs=dirichlet_rhs,
        dirichlet_residual=abs(dirichlet_fd - dirichlet_rhs),
        curvature_derivative=curvature_fd,
        curvature_lhs=curvature_lhs,
        curvature_gap=curvature_lhs - curvature_fd,
        closed_form_gap=closed_form,
        truncation=truncation,
    )
