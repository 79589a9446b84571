"""Check the transformed fields and their divergence identity."""

import math

import numpy as np
import pytest

from pmonotone.exceptions import ArgumentError, DomainError, FormulaPoleError, PMonotoneError
from pmonotone.geometry import MetricKind, RadialMetric, hawking_mass, make_radial_metric
from pmonotone.identities import (
    FieldKind,
    default_beta,
    hawking_form_quantities,
    identity_check,
    rigidity_metric,
    rigidity_profile,
    transform_field,
)
from pmonotone.monotone import quantity_series
from pmonotone.radial import RadialPotential, solve_radial


def test_p_harmonic_field(schwarzschild_potential: RadialPotential) -> None:
    """
    Check w = (1 - sqrt(1 - 2/r))^-1 solves its system for p = 2.

    Parameters
    ----------
    schwarzschild_potential
        Harmonic potential of the mass-1 horizon.
    """
    sol = transform_field(schwarzschild_potential)
    assert sol.kind is FieldKind.P_HARMONIC
    assert (sol.alpha, sol.beta) == (0.0, 2.0)
    for r in np.geomspace(2.1, 100.0, 30):
        expected = 1.0 / (1.0 - math.sqrt(1.0 - 2.0 / r))
        assert sol.value(float(r)) == pytest.approx(expected, rel=1e-9)
        assert sol.system_residual(float(r)) < 1e-8
        assert sol.inverse_value(float(r)) == pytest.approx(
            schwarzschild_potential.value(float(r)), abs=1e-12
        )


def test_free_alpha_resolves_potential(schwarzschild_potential: RadialPotential) -> None:
    """
    Check an alpha not matching the potential uses p = 2 - alpha.

    Parameters
    ----------
    schwarzschild_potential
        Harmonic potential of the mass-1 horizon.
    """
    sol = transform_field(schwarzschild_potential, alpha=0.5)
    assert sol.potential is not None
    assert sol.potential.p == pytest.approx(1.5)
    assert sol.beta == pytest.approx(4.0)


@pytest.mark.parametrize(
    "alpha, beta, error",
    [
        (1.5, None, DomainError),
        (-2.0, None, DomainError),
        (0.0, 1.0, FormulaPoleError),
        (0.0, 3.0, DomainError),
    ],
)
def test_invalid_parameters(
    schwarzschild_potential: RadialPotential, alpha: float, beta: float, error: type
) -> None:
    """
    Check parameters outside the admissible set are refused.

    Parameters
    ----------
    schwarzschild_potential
        Harmonic potential of the mass-1 horizon.
    alpha
        System parameter.
    beta
        Identity exponent.
    error
        Expected exception.
    """
    with pytest.raises(error):
        transform_field(schwarzschild_potential, alpha, beta)


def test_default_beta() -> None:
    """Check beta = 2/(1 - alpha), falling back to 0 at alpha = +-1."""
    assert default_beta(0.0) == 2.0
    assert default_beta(0.5) == 4.0
    assert default_beta(1.0) == 0.0
    assert default_beta(-1.0) == 0.0


def test_flat_identity() -> None:
    """Check both sides equal -2 r^-4 for w = r, beta = 2 in flat space."""
    pot = solve_radial(make_radial_metric("euclidean", r_min=1.0), 2.0)
    sol = transform_field(pot)
    for r in (1.0, 2.5, 40.0):
        assert sol.value(r) == pytest.approx(r, rel=1e-10)
        check = identity_check(sol, r=r)
        assert check.lhs == pytest.approx(-2.0 * r**-4, rel=1e-8)
        assert check.rhs == pytest.approx(-2.0 * r**-4, rel=1e-8)
        assert check.excess == pytest.approx(0.0, abs=1e-10)


@pytest.mark.parametrize("model", ["euclidean", "schwarzschild"])
@pytest.mark.parametrize("p", [1.25, 1.5, 2.0])
def test_pointwise_identity(model: str, p: float) -> None:
    """
    Check the pointwise identity on p-harmonic transforms.

    Parameters
    ----------
    model
        Model family.
    p
        Exponent.
    """
    metric = make_radial_metric(model, r_min=2.0, mass=1.0 if model == "schwarzschild" else None)
    sol = transform_field(solve_radial(metric, p))
    for r in np.geomspace(2.05, 200.0, 100):
        check = identity_check(sol, r=float(r))
        assert check.residual < 1e-7
        assert check.residual <= 1e-7 * (abs(check.lhs) + abs(check.rhs)) + 1e-14
        assert check.excess >= -1e-10


@pytest.mark.parametrize("alpha, kind", [(1.0, FieldKind.IMCF), (-1.0, FieldKind.N_HARMONIC)])
def test_endpoint_fields(
    schwarzschild_potential: RadialPotential, alpha: float, kind: FieldKind
) -> None:
    """
    Check inverse mean curvature flow and the 3-harmonic map satisfy the identity.

    Parameters
    ----------
    schwarzschild_potential
        Harmonic potential of the mass-1 horizon.
    alpha
        System parameter.
    kind
        Expected field kind.
    """
    sol = transform_field(schwarzschild_potential, alpha=alpha)
    assert sol.kind is kind
    assert sol.beta == 0.0
    for r in (2.5, 5.0, 50.0):
        check = identity_check(sol, r=r)
        assert check.residual <= 1e-7 * (abs(check.lhs) + abs(check.rhs)) + 1e-12
        assert sol.radius_of(sol.value(r)) == pytest.approx(r, rel=1e-10)


def test_integrated_identity(schwarzschild: RadialMetric) -> None:
    """
    Check the integrated identity on three windows of level parameters.

    Parameters
    ----------
    schwarzschild
        Mass-1 Schwarzschild exterior.
    """
    sol = transform_field(solve_radial(schwarzschild, 1.5))
    for window in ((1.5, 50.0), (1.5, 5.0), (5.0, 50.0)):
        check = identity_check(sol, window=window)
        assert check.mode == "integrated"
        assert check.residual < 1e-6 * (abs(check.lhs) + abs(check.rhs) + 1.0)


def test_imcf_identity_tracks_hawking_mass() -> None:
    """Check the integrated identity for inverse mean curvature flow equals 8 pi dm_H."""
    table = [(1.0, 1.3), (2.0, 1.2), (4.0, 1.1), (8.0, 1.05)]
    metric = make_radial_metric("profile", r_min=1.0, table=table)
    sol = transform_field(solve_radial(metric, 2.0), alpha=1.0)
    check = identity_check(sol, window=(1.5, 6.0))
    growth = 8.0 * math.pi * (hawking_mass(metric, 6.0) - hawking_mass(metric, 1.5))
    assert check.rhs == pytest.approx(growth, rel=1e-9)
    assert check.residual < 1e-6 * (abs(check.lhs) + abs(check.rhs) + 1.0)


def test_identity_check_arguments(schwarzschild_potential: RadialPotential) -> None:
    """
    Check exactly one of a radius and a window must be given.

    Parameters
    ----------
    schwarzschild_potential
        Harmonic potential of the mass-1 horizon.
    """
    sol = transform_field(schwarzschild_potential)
    with pytest.raises(ArgumentError):
        identity_check(sol)
    with pytest.raises(PMonotoneError, match="exactly one of r and window"):
        identity_check(sol, r=3.0, window=(1.5, 2.0))
    with pytest.raises(FormulaPoleError):
        identity_check(sol, r=3.0, beta=1.0)


@pytest.mark.parametrize("p", [1.5, 2.0])
def test_hawking_form(schwarzschild: RadialMetric, p: float) -> None:
    """
    Check the mean-curvature form of A and B matches the level-set integrals.

    Parameters
    ----------
    schwarzschild
        Mass-1 Schwarzschild exterior.
    p
        Exponent.
    """
    pot = solve_radial(schwarzschild, p)
    ts = pot.boundary_parameter * np.array([1.5, 3.0, 30.0])
    series = quantity_series(pot, ts)
    for n, t in enumerate(ts):
        form = hawking_form_quantities(pot, float(t))
        assert form.A == pytest.approx(series.A[n], rel=1e-9)
        assert form.B == pytest.approx(series.B[n], rel=1e-9)
    if p == 2.0:
        form = hawking_form_quantities(pot, 3.0)
        assert form.B == pytest.approx(4.0 * math.pi - math.pi / 3.0, rel=1e-9)


def test_rigidity_metric() -> None:
    """Check m_H = 2 gives the mass-1 Schwarzschild model."""
    metric = rigidity_metric(2.0, 2, (3.0, 100.0))
    assert metric.kind is MetricKind.SCHWARZSCHILD
    assert metric.mass == 1.0
    table = rigidity_profile(metric, (3.0, 100.0), 20)
    assert len(table) == 20
    for rho, phi in table:
        assert phi == pytest.approx((1.0 - 2.0 / rho) ** -0.5, rel=1e-14)
        assert hawking_mass(metric, rho) == pytest.approx(1.0, abs=1e-8)
    assert rigidity_metric(0.0).kind is MetricKind.EUCLIDEAN


@pytest.mark.parametrize(
    "m_H, chi, rho_range",
    [(2.0, 3, (3.0, 10.0)), (-1.0, 2, (3.0, 10.0)), (2.0, 2, (2.0, 10.0))],
)
def test_rigidity_metric_invalid(m_H: float, chi: int, rho_range: tuple) -> None:
    """
    Check invalid rigidity parameters are refused.

    Parameters
    ----------
    m_H
        Hawking-mass parameter.
    chi
        Euler characteristic of the level sets.
    rho_range
        Radii of the generated metric.
    """
    with pytest.raises(DomainError):
        rigidity_metric(m_H, chi, rho_range)
