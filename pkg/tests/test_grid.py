"""Check annulus grids and the serialization of grid fields."""

import math

import numpy as np
import pytest

from pmonotone.exceptions import DomainError
from pmonotone.geometry import RadialMetric
from pmonotone.grid import AnnulusGrid, GridField, RadialMapping, make_grid


def test_log_grid(euclidean: RadialMetric) -> None:
    """
    Check nodes, spacing and the radial law of a flat axisymmetric grid.

    Parameters
    ----------
    euclidean
        Flat exterior of the unit ball.
    """
    grid = make_grid(euclidean, r_out=16.0, shape=(8, 4))
    assert grid.mapping is RadialMapping.LOG
    assert grid.dims == 2
    assert grid.node_shape == (9, 5)
    assert grid.n_nodes == 45
    assert grid.spacing == pytest.approx((0.125, math.pi / 4.0))
    np.testing.assert_allclose(grid.radius([0.0, 0.25, 1.0]), [1.0, 2.0, 16.0])
    np.testing.assert_allclose(grid.xi_of_radius(grid.radius(grid.xi)), grid.xi, atol=1e-14)


def test_horizon_grid(schwarzschild: RadialMetric) -> None:
    """
    Check a horizon boundary selects the square-root law.

    Parameters
    ----------
    schwarzschild
        Mass-1 Schwarzschild exterior.
    """
    grid = make_grid(schwarzschild, r_out=18.0, shape=(8, 8))
    assert grid.mapping is RadialMapping.SQRT
    np.testing.assert_allclose(grid.radius([0.0, 0.5, 1.0]), [2.0, 6.0, 18.0])
    assert np.all(grid.node_factors.h_xi > 0.0)


def test_scale_factors(euclidean: RadialMetric) -> None:
    """
    Check h_xi = r ln(r_out), h_theta = r and h_psi = r sin(theta) in flat space.

    Parameters
    ----------
    euclidean
        Flat exterior of the unit ball.
    """
    grid = make_grid(euclidean, r_out=16.0, shape=(8, 8, 8))
    factors = grid.scale_factors(0.5, math.pi / 6.0, 1.0)
    assert float(factors.h_xi) == pytest.approx(4.0 * math.log(16.0))
    assert float(factors.h_theta) == pytest.approx(4.0)
    assert float(factors.h_psi) == pytest.approx(2.0)
    assert float(factors.h_psi_reduced) == pytest.approx(4.0)
    assert grid.node_shape == (9, 9, 8)


def test_conformal_perturbation(euclidean: RadialMetric) -> None:
    """
    Check the conformal factor decays like r^-2 and equals 1 without perturbation.

    Parameters
    ----------
    euclidean
        Flat exterior of the unit ball.
    """
    grid = make_grid(euclidean, r_out=16.0, shape=(8, 8), perturbation=0.5)
    assert float(grid.conformal_factor(0.0, 0.0)) == pytest.approx(1.5)
    assert float(grid.conformal_factor(0.25, 0.0)) == pytest.approx(1.125)
    flat = make_grid(euclidean, r_out=16.0, shape=(8, 8))
    assert np.all(flat.conformal_factor(flat.xi, 0.3) == 1.0)


def test_boundary_masks(euclidean: RadialMetric) -> None:
    """
    Check the inner and outer masks cover the first and last radial rows.

    Parameters
    ----------
    euclidean
        Flat exterior of the unit ball.
    """
    grid = make_grid(euclidean, r_out=4.0, shape=(4, 4))
    inner, outer = grid.boundary_masks
    assert inner.sum() == 5
    assert outer.sum() == 5
    assert not np.any(inner & outer)


@pytest.mark.parametrize(
    "r_out, shape, perturbation",
    [
        (1.0, (8, 8), 0.0),
        (4.0, (8,), 0.0),
        (4.0, (3, 8), 0.0),
        (4.0, (8, 8, 6), 0.0),
        (4.0, (8, 8), 1.0),
    ],
)
def test_invalid_grid(
    euclidean: RadialMetric, r_out: float, shape: tuple, perturbation: float
) -> None:
    """
    Check invalid grids are refused.

    Parameters
    ----------
    euclidean
        Flat exterior of the unit ball.
    r_out
        Outer radius.
    shape
        Cells per axis.
    perturbation
        Conformal perturbation amplitude.
    """
    with pytest.raises(DomainError):
        make_grid(euclidean, r_out=r_out, shape=shape, perturbation=perturbation)


def test_descriptor(schwarzschild: RadialMetric) -> None:
    """
    Check a grid rebuilt from its descriptor matches the original.

    Parameters
    ----------
    schwarzschild
        Mass-1 Schwarzschild exterior.
    """
    grid = make_grid(schwarzschild, r_out=20.0, shape=(8, 4, 8), perturbation=0.1)
    rebuilt = AnnulusGrid.from_descriptor(grid.descriptor())
    assert rebuilt.shape == grid.shape
    assert rebuilt.mapping is grid.mapping
    np.testing.assert_allclose(rebuilt.node_radius, grid.node_radius)


def test_field_document(euclidean: RadialMetric) -> None:
    """
    Check a grid field survives its JSON document.

    Parameters
    ----------
    euclidean
        Flat exterior of the unit ball.
    """
    grid = make_grid(euclidean, r_out=4.0, shape=(4, 4))
    field = GridField(grid, 1.0 - 1.0 / grid.node_radius, 2.0, 0.0, (0.0, 0.75), 3, 1e-12)
    rebuilt = GridField.from_dict(field.to_dict())
    np.testing.assert_array_equal(rebuilt.values, field.values)
    assert (rebuilt.p, rebuilt.eps, rebuilt.bc, rebuilt.iterations) == (2.0, 0.0, (0.0, 0.75), 3)
