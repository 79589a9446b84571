"""
Regularized p-Laplace solver on annulus grids.

The discrete problem minimizes

    E(v) = (1/p) int (|grad v|^2 + eps^2)^(p/2) dV

over bilinear (trilinear in 3-D) finite elements with 2^D Gauss points per cell,
with Dirichlet data on the inner and outer spheres. Stationary points of E are the
weak solutions of div((|grad v|^2 + eps^2)^((p-2)/2) grad v) = 0. A damped Newton
iteration with a sparse direct solve does the work; nonlinear conjugate gradients
take over if a Newton direction cannot be used.
"""

from __future__ import annotations

import itertools
import logging
import math
from functools import lru_cache
from typing import Any, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.integrate import trapezoid
from scipy.optimize import minimize
from scipy.sparse.linalg import spsolve

from pmonotone.exceptions import ConvergenceError, DomainError, MaximumPrincipleError
from pmonotone.grid import AnnulusGrid, GridField
from pmonotone.radial import decay_exponent

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

GAUSS_POINTS = (0.5 - 0.5 / math.sqrt(3.0), 0.5 + 0.5 / math.sqrt(3.0))
MAX_NEWTON_ITERS = 60
GRADIENT_TOLERANCE = 1.0e-9
ARMIJO = 1.0e-4
MIN_STEP = 1.0e-10
MAXIMUM_PRINCIPLE_SLACK = 1.0e-8


class Assembly(NamedTuple):
    """
    Per-grid quadrature data.

    Attributes
    ----------
    cell_nodes
        Flat node index of every cell corner, shape (cells, corners).
    shape_grad
        Computational gradients of the corner shape functions at the Gauss
        points, shape (gauss, corners, dims).
    weights
        Volume weight of every Gauss point, shape (cells, gauss).
    inverse_metric
        1/h_d^2 at every Gauss point, shape (cells, gauss, dims).
    """

    cell_nodes: NDArray[np.int64]
    shape_grad: FloatArray
    weights: FloatArray
    inverse_metric: FloatArray


@lru_cache(maxsize=16)
def assembly(grid: AnnulusGrid) -> Assembly:
    """Quadrature data of a grid, computed once per grid object."""
    dims = grid.dims
    steps = grid.spacing
    cells = grid.shape
    index = np.arange(grid.n_nodes).reshape(grid.node_shape)
    corners = list(itertools.product((0, 1), repeat=dims))
    columns = []
    for bits in corners:
        block = index[bits[0] : bits[0] + cells[0], bits[1] : bits[1] + cells[1]]
        if dims == 3:
            block = block[:, :, (np.arange(cells[2]) + bits[2]) % cells[2]]
        columns.append(block.ravel())
    cell_nodes = np.stack(columns, axis=1)

    points = np.array(list(itertools.product(GAUSS_POINTS, repeat=dims)))
    shape_grad = np.empty((len(points), len(corners), dims))
    for g, zeta in enumerate(points):
        for c, bits in enumerate(corners):
            linear = np.where(np.array(bits) == 1, zeta, 1.0 - zeta)
            for d in range(dims):
                sign = 1.0 if bits[d] else -1.0
                others = np.prod(np.delete(linear, d))
                shape_grad[g, c, d] = sign * others / steps[d]

    origins = [np.arange(n) * h for n, h in zip(cells, steps)]
    mesh = [axis.ravel()[:, None] for axis in np.meshgrid(*origins, indexing="ij")]
    coords = [mesh[d] + points[None, :, d] * steps[d] for d in range(dims)]
    if dims == 2:
        factors = grid.scale_factors(coords[0], coords[1])
        jacobian = 2.0 * math.pi * factors.h_xi * factors.h_theta * factors.h_psi
        inverse = np.stack([factors.h_xi**-2, factors.h_theta**-2], axis=-1)
    else:
        factors = grid.scale_factors(coords[0], coords[1], coords[2])
        jacobian = factors.h_xi * factors.h_theta * factors.h_psi
        inverse = np.stack(
            [factors.h_xi**-2, factors.h_theta**-2, factors.h_psi**-2], axis=-1
        )
    weights = jacobian * float(np.prod(steps)) / len(points)
    return Assembly(
        cell_nodes=cell_nodes,
        shape_grad=shape_grad,
        weights=weights,
        inverse_metric=inverse,
    )


def grid_volume(grid: AnnulusGrid) -> float:
    """Volume of the annulus under the solver's quadrature."""
    return float(assembly(grid).weights.sum())


def _check_problem(p: float, eps: float) -> None:
    if not 1.0 < p <= 2.0:
        raise DomainError("p", p, "1 < p <= 2")
    if eps < 0.0:
        raise DomainError("eps", eps, "eps >= 0")
    if eps == 0.0 and p != 2.0:
        raise DomainError("eps", eps, "eps > 0 unless p = 2")


def _gauss_gradients(asm: Assembly, flat: FloatArray) -> tuple[FloatArray, FloatArray]:
    local = flat[asm.cell_nodes]
    grads = np.einsum("gcd,nc->ngd", asm.shape_grad, local)
    squared = np.einsum("ngd,ngd->ng", asm.inverse_metric, grads**2)
    return grads, squared


def _energy(asm: Assembly, flat: FloatArray, p: float, eps: float) -> float:
    _, squared = _gauss_gradients(asm, flat)
    return float(np.sum(asm.weights * (squared + eps**2) ** (p / 2.0)) / p)


def _energy_and_full_gradient(
    asm: Assembly, flat: FloatArray, p: float, eps: float
) -> tuple[float, FloatArray]:
    grads, squared = _gauss_gradients(asm, flat)
    base = squared + eps**2
    energy = float(np.sum(asm.weights * base ** (p / 2.0)) / p)
    coef = asm.weights * base ** ((p - 2.0) / 2.0)
    local = np.einsum("ng,ngd,ngd,gcd->nc", coef, asm.inverse_metric, grads, asm.shape_grad)
    gradient = np.bincount(
        asm.cell_nodes.ravel(), weights=local.ravel(), minlength=flat.size
    )
    return energy, gradient


def _hessian(asm: Assembly, flat: FloatArray, p: float, eps: float) -> sp.csr_matrix:
    grads, squared = _gauss_gradients(asm, flat)
    base = squared + eps**2
    coef = asm.weights * base ** ((p - 2.0) / 2.0)
    local = np.einsum(
        "ng,ngd,gcd,ged->nce", coef, asm.inverse_metric, asm.shape_grad, asm.shape_grad
    )
    if p != 2.0:
        flux = np.einsum("ngd,ngd,gcd->ngc", asm.inverse_metric, grads, asm.shape_grad)
        local += (p - 2.0) * np.einsum("ng,ngc,nge->nce", coef / base, flux, flux)
    corners = asm.cell_nodes.shape[1]
    rows = np.repeat(asm.cell_nodes, corners, axis=1).ravel()
    cols = np.tile(asm.cell_nodes, (1, corners)).ravel()
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(flat.size, flat.size)).tocsr()


def energy_and_gradient(
    grid: AnnulusGrid, values: FloatArray, p: float, eps: float
) -> tuple[float, FloatArray]:
    """
    Discrete regularized energy and its gradient with respect to node values.

    Parameters
    ----------
    grid
        Annulus grid.
    values
        Node values shaped like ``grid.node_shape``.
    p
        Exponent in (1, 2].
    eps
        Regularization, positive unless p = 2.

    Returns
    -------
    tuple[float, FloatArray]
        E(values) and dE/dvalues, the latter zero at boundary nodes.
    """
    _check_problem(p, eps)
    flat = np.asarray(values, dtype=float).ravel()
    energy, gradient = _energy_and_full_gradient(assembly(grid), flat, p, eps)
    inner, outer = grid.boundary_masks
    gradient[inner | outer] = 0.0
    return energy, gradient.reshape(grid.node_shape)


def radial_guess(grid: AnnulusGrid, p: float, bc: tuple[float, float]) -> FloatArray:
    """Exterior Euclidean p-harmonic profile stretched to the boundary data."""
    a = decay_exponent(p)
    r = grid.node_radius
    r_min, r_out = grid.metric.r_min, grid.r_out
    shape = (r_min**-a - r**-a) / (r_min**-a - r_out**-a)
    return bc[0] + (bc[1] - bc[0]) * shape


def _conjugate_gradient(
    asm: Assembly,
    flat: FloatArray,
    free: NDArray[np.int64],
    p: float,
    eps: float,
    gtol: float,
    max_iters: int,
) -> tuple[FloatArray, int]:
    work = flat.copy()

    def objective(x: FloatArray) -> tuple[float, FloatArray]:
        work[free] = x
        energy, gradient = _energy_and_full_gradient(asm, work, p, eps)
        return energy, gradient[free]

    result = minimize(
        objective,
        flat[free],
        jac=True,
        method="CG",
        options={"gtol": gtol, "maxiter": max_iters},
    )
    work[free] = result.x
    return work, int(result.nit)


def solve_regularized(  # pylint: disable=too-many-locals
    grid: AnnulusGrid,
    p: float,
    eps: float,
    bc: tuple[float, float],
    *,
    initial: FloatArray | None = None,
    max_iters: int = MAX_NEWTON_ITERS,
    tolerance: float = GRADIENT_TOLERANCE,
) -> GridField:
    """
    Minimize the regularized energy with Dirichlet data ``bc``.

    Parameters
    ----------
    grid
        Annulus grid.
    p
        Exponent in (1, 2].
    eps
        Regularization, positive unless p = 2.
    bc
        Values on the inner and outer boundary spheres.
    initial
        Optional starting field; its boundary values are overwritten.
    max_iters
        Newton iteration limit.
    tolerance
        Stop once the interior gradient sup-norm is below
        ``tolerance * |bc[1] - bc[0]|``.

    Returns
    -------
    GridField
        Converged field with its iteration record.

    Raises
    ------
    ConvergenceError
        If neither Newton nor the fallback reaches the tolerance.
    MaximumPrincipleError
        If the converged field leaves [min(bc), max(bc)].
    """
    _check_problem(p, eps)
    inner_value, outer_value = float(bc[0]), float(bc[1])
    inner, outer = grid.boundary_masks
    if inner_value == outer_value:
        values = np.full(grid.node_shape, inner_value)
        energy = _energy(assembly(grid), values.ravel(), p, eps)
        return GridField(grid, values, p, eps, (inner_value, outer_value), 0, 0.0, (energy,))

    asm = assembly(grid)
    guess = radial_guess(grid, p, (inner_value, outer_value)) if initial is None else initial
    flat = np.array(guess, dtype=float).ravel()
    flat[inner] = inner_value
    flat[outer] = outer_value
    free = np.flatnonzero(~(inner | outer))
    spread = abs(outer_value - inner_value)
    threshold = tolerance * spread

    energy, gradient = _energy_and_full_gradient(asm, flat, p, eps)
    history = [energy]
    residual = float(np.max(np.abs(gradient[free])))
    iterations = 0
    use_fallback = False
    while residual >= threshold:
        if iterations >= max_iters:
            use_fallback = True
            break
        iterations += 1
        g = gradient[free]
        matrix = _hessian(asm, flat, p, eps)[free][:, free].tocsc()
        try:
            step = spsolve(matrix, -g)
        except (RuntimeError, ValueError) as exc:
            logger.debug("sparse solve failed: %s", exc)
            use_fallback = True
            break
        slope = float(g @ step)
        if not (np.all(np.isfinite(step)) and slope < 0.0):
            use_fallback = True
            break
        damping = 1.0
        while damping >= MIN_STEP:
            trial = flat.copy()
            trial[free] += damping * step
            trial_energy = _energy(asm, trial, p, eps)
            if trial_energy <= energy + ARMIJO * damping * slope:
                break
            # accept steps whose energy change is pure round-off
            if abs(trial_energy - energy) <= 64.0 * np.finfo(float).eps * abs(energy):
                break
            damping *= 0.5
        else:
            use_fallback = True
            break
        flat = trial
        energy, gradient = _energy_and_full_gradient(asm, flat, p, eps)
        history.append(energy)
        residual = float(np.max(np.abs(gradient[free])))
        logger.debug(
            "newton %d: energy=%.15g residual=%.3e damping=%g", iterations, energy, residual, damping
        )

    if use_fallback:
        logger.warning(
            "Newton stalled after %d iterations, switching to conjugate gradients", iterations
        )
        flat, extra = _conjugate_gradient(asm, flat, free, p, eps, threshold, 50 * max_iters)
        iterations += extra
        energy, gradient = _energy_and_full_gradient(asm, flat, p, eps)
        history.append(energy)
        residual = float(np.max(np.abs(gradient[free])))
        if residual >= threshold:
            raise ConvergenceError("regularized p-Laplace solve", iterations, residual)

    low, high = min(inner_value, outer_value), max(inner_value, outer_value)
    slack = MAXIMUM_PRINCIPLE_SLACK * spread
    if flat.min() < low - slack or flat.max() > high + slack:
        found = float(flat.min()) if flat.min() < low - slack else float(flat.max())
        raise MaximumPrincipleError(low, high, found)

    logger.info(
        "solved grid %s p=%g eps=%g in %d iterations (residual %.3e)",
        "x".join(str(n) for n in grid.shape),
        p,
        eps,
        iterations,
        residual,
    )
    return GridField(
        grid=grid,
        values=flat.reshape(grid.node_shape),
        p=float(p),
        eps=float(eps),
        bc=(inner_value, outer_value),
        iterations=iterations,
        residual=residual,
        energy_history=tuple(history),
    )


def solve_eps_sweep(
    grid: AnnulusGrid,
    p: float,
    eps_values: Sequence[float],
    bc: tuple[float, float],
    **kwargs: Any,
) -> list[GridField]:
    """
    Solve for a decreasing sequence of regularizations, warm-starting each solve.

    Returns
    -------
    list[GridField]
        One field per entry of ``eps_values``, in order of decreasing eps.
    """
    fields: list[GridField] = []
    previous: FloatArray | None = None
    for eps in sorted(eps_values, reverse=True):
        solved = solve_regularized(grid, p, eps, bc, initial=previous, **kwargs)
        fields.append(solved)
        previous = solved.values
    return fields


def _stencil_flux(field: GridField) -> float:
    grid = field.grid
    values = field.values
    step = grid.spacing[0]
    dv = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * step)
    factors = grid.node_factors
    norm = np.abs(dv) / factors.h_xi[0]
    density = (norm**2 + field.eps**2) ** ((field.p - 2.0) / 2.0) * norm
    if grid.dims == 2:
        element = 2.0 * math.pi * factors.h_theta[0] * factors.h_psi[0]
        return float(trapezoid(density * element, grid.theta))
    element = factors.h_theta[0] * factors.h_psi[0]
    return float(np.sum(trapezoid(density * element, grid.theta, axis=0)) * grid.spacing[2])


def _reaction_flux(field: GridField) -> float:
    grid = field.grid
    _, gradient = _energy_and_full_gradient(
        assembly(grid), field.values.ravel(), field.p, field.eps
    )
    inner, _ = grid.boundary_masks
    sign = 1.0 if field.bc[1] >= field.bc[0] else -1.0
    return float(-sign * gradient[inner].sum())


def regularized_capacity(field: GridField, *, method: str = "stencil") -> float:
    """
    Flux int |grad v|_eps^(p-2) |grad v| through the inner boundary.

    Parameters
    ----------
    field
        Converged grid field.
    method
        ``stencil`` differentiates the field at the boundary with a one-sided
        second-order formula; ``reaction`` sums the discrete residual at the
        boundary nodes, which is the exact discrete flux.

    Returns
    -------
    float
        The regularized capacity C_{p,eps}.
    """
    if method == "stencil":
        return _stencil_flux(field)
    if method == "reaction":
        return _reaction_flux(field)
    raise DomainError("method", float("nan"), "method in {'stencil', 'reaction'}")


def normalization_constant(field: GridField, *, method: str = "stencil") -> float:
    """c_eps = a^-1 (C_{p,eps}/4 pi)^(1/(p-1)), the grid analogue of the radial c."""
    a = decay_exponent(field.p)
    flux = regularized_capacity(field, method=method)
    return float((flux / (4.0 * math.pi)) ** (1.0 / (field.p - 1.0)) / a)
