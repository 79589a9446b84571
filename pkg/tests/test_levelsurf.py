"""Check level-set integrals and the first-variation formulas."""

import math

import pytest

from pmonotone.convergence import observed_order
from pmonotone.exceptions import DomainError, LevelOutsideGridError, StepTooLargeError
from pmonotone.geometry import RadialMetric, make_radial_metric
from pmonotone.grid import GridField, make_grid
from pmonotone.levelsurf import evolution_check, extract_level, extract_value, level_flux
from pmonotone.pdesolve import regularized_capacity, solve_regularized
from pmonotone.radial import RadialPotential, solve_radial


def test_radial_level_euclidean(euclidean_potential: RadialPotential) -> None:
    """
    Check Sigma(2) for u = 1 - r^-3.

    Parameters
    ----------
    euclidean_potential
        p = 1.5 potential of the unit ball.
    """
    level = extract_level(euclidean_potential, 2.0)
    assert level.s == pytest.approx(0.875)
    assert level.area == pytest.approx(16.0 * math.pi, rel=1e-9)
    assert level.min_grad == pytest.approx(3.0 / 16.0, rel=1e-9)
    assert level.int_grad2 == pytest.approx(9.0 * math.pi / 16.0, rel=1e-9)
    assert level.int_K == pytest.approx(4.0 * math.pi)
    assert level.regular


def test_radial_level_horizon(schwarzschild_potential: RadialPotential) -> None:
    """
    Check the horizon level: H = 0 and |grad u| = 1/4.

    Parameters
    ----------
    schwarzschild_potential
        Harmonic potential of the mass-1 horizon.
    """
    level = extract_level(schwarzschild_potential, 1.0)
    assert level.int_gradH == pytest.approx(0.0, abs=1e-5)
    assert level.int_grad2 == pytest.approx(math.pi, rel=1e-9)
    assert level.int_gradp1 == pytest.approx(4.0 * math.pi, rel=1e-9)


def test_radial_level_below_boundary(schwarzschild_potential: RadialPotential) -> None:
    """
    Check levels inside the boundary are refused.

    Parameters
    ----------
    schwarzschild_potential
        Harmonic potential of the mass-1 horizon.
    """
    with pytest.raises(DomainError):
        extract_level(schwarzschild_potential, 0.9)


def test_evolution_flat() -> None:
    """Check the Dirichlet variation formula in flat space."""
    pot = solve_radial(make_radial_metric("euclidean", r_min=1.0), 2.0)
    check = evolution_check(pot, 0.5, 1e-4)
    assert check.dirichlet_residual < 1e-6
    assert check.closed_form_gap == 0.0


def test_evolution_schwarzschild(schwarzschild_potential: RadialPotential) -> None:
    """
    Check the curvature gap vanishes on scalar-flat round levels.

    Parameters
    ----------
    schwarzschild_potential
        Harmonic potential of the mass-1 horizon.
    """
    check = evolution_check(schwarzschild_potential, 0.5, 1e-4)
    assert -1e-6 <= check.curvature_gap < 1e-5
    assert abs(check.closed_form_gap) < 1e-10


def test_evolution_second_order(schwarzschild_potential: RadialPotential) -> None:
    """
    Check the finite-difference residual decays at second order under step halving.

    Parameters
    ----------
    schwarzschild_potential
        Harmonic potential of the mass-1 horizon.
    """
    residuals = [
        evolution_check(schwarzschild_potential, 0.5, h).dirichlet_residual for h in (1e-2, 5e-3)
    ]
    assert observed_order(residuals)[0] > 1.8


def test_evolution_invalid_step(schwarzschild_potential: RadialPotential) -> None:
    """
    Check steps leaving (0, 1) or the asymptotic regime are refused.

    Parameters
    ----------
    schwarzschild_potential
        Harmonic potential of the mass-1 horizon.
    """
    with pytest.raises(DomainError):
        evolution_check(schwarzschild_potential, 0.5, 0.6)
    with pytest.raises(StepTooLargeError):
        evolution_check(schwarzschild_potential, 0.5, 0.1, threshold=1e-12)


@pytest.fixture(scope="module")
def harmonic_field() -> GridField:
    """Harmonic field 1 - 1/r on the flat annulus [1, 8]."""
    grid = make_grid(make_radial_metric("euclidean", r_min=1.0), r_out=8.0, shape=(48, 24))
    return solve_regularized(grid, 2.0, 0.0, (0.0, 1.0 - 1.0 / 8.0))


def test_grid_level_sphere(harmonic_field: GridField) -> None:
    """
    Check the contour {v = 1/2} is the sphere r = 2.

    Parameters
    ----------
    harmonic_field
        Harmonic field on the flat annulus.
    """
    level = extract_value(harmonic_field, 0.5)
    assert level.area == pytest.approx(16.0 * math.pi, rel=2e-2)
    assert level.int_K == pytest.approx(4.0 * math.pi, rel=5e-2)
    assert level.int_grad2 == pytest.approx(math.pi, rel=5e-2)
    assert level.int_gradH == pytest.approx(4.0 * math.pi, rel=5e-2)
    assert level.regular
    assert math.isnan(level.t)


def test_grid_level_parameter(harmonic_field: GridField) -> None:
    """
    Check Sigma(t) of a grid field sits near coordinate radius t.

    Parameters
    ----------
    harmonic_field
        Harmonic field on the flat annulus.
    """
    level = extract_level(harmonic_field, 3.0)
    assert level.s == pytest.approx(1.0 - 1.0 / 3.0, rel=1e-2)
    assert level.area == pytest.approx(36.0 * math.pi, rel=3e-2)


def test_flux_constancy(harmonic_field: GridField) -> None:
    """
    Check the flux through interior levels matches the boundary flux.

    Parameters
    ----------
    harmonic_field
        Harmonic field on the flat annulus.
    """
    boundary = regularized_capacity(harmonic_field)
    for value in (0.2, 0.4, 0.5, 0.6, 0.8):
        assert level_flux(harmonic_field, value) == pytest.approx(boundary, rel=3e-2)


def test_level_outside_grid(harmonic_field: GridField) -> None:
    """
    Check levels beyond the interior values are refused.

    Parameters
    ----------
    harmonic_field
        Harmonic field on the flat annulus.
    """
    with pytest.raises(LevelOutsideGridError):
        extract_value(harmonic_field, 0.95)


@pytest.mark.slow
def test_grid_level_three_dimensional(euclidean: RadialMetric) -> None:
    """
    Check Gauss-Bonnet and the area on a triangulated level sphere.

    Parameters
    ----------
    euclidean
        Flat exterior of the unit ball.
    """
    grid = make_grid(euclidean, r_out=8.0, shape=(24, 12, 16))
    field = solve_regularized(grid, 2.0, 0.0, (0.0, 1.0 - 1.0 / 8.0))
    level = extract_value(field, 0.5)
    assert level.area == pytest.approx(16.0 * math.pi, rel=5e-2)
    assert level.int_K == pytest.approx(4.0 * math.pi, rel=5e-2)


@pytest.mark.slow
@pytest.mark.parametrize("cells, rel", [(128, 5e-2), (256, 2e-2)])
def test_gauss_bonnet_refinement(euclidean: RadialMetric, cells: int, rel: float) -> None:
    """
    Check int K over {v = 1/2} tends to 4 pi as the axisymmetric grid is refined.

    Parameters
    ----------
    euclidean
        Flat exterior of the unit ball.
    cells
        Cells per axis.
    rel
        Allowed relative deviation from 4 pi.
    """
    grid = make_grid(euclidean, r_out=8.0, shape=(cells, cells))
    field = solve_regularized(grid, 2.0, 0.0, (0.0, 1.0 - 1.0 / 8.0))
    level = extract_value(field, 0.5)
    assert abs(level.int_K - 4.0 * math.pi) < rel * 4.0 * math.pi
