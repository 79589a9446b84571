"""Define some fixtures that can be re-used between tests."""

import os
from pathlib import Path
from typing import Iterator

import pytest

from pmonotone.geometry import RadialMetric, make_radial_metric
from pmonotone.radial import RadialPotential, solve_radial


@pytest.fixture
def euclidean() -> RadialMetric:
    """Flat exterior of the unit ball."""
    return make_radial_metric("euclidean", r_min=1.0)


@pytest.fixture
def schwarzschild() -> RadialMetric:
    """Schwarzschild exterior of mass 1 cut at its horizon."""
    return make_radial_metric("schwarzschild", r_min=2.0, mass=1.0)


@pytest.fixture(scope="session")
def schwarzschild_potential() -> RadialPotential:
    """Harmonic potential of the mass-1 Schwarzschild horizon, u = sqrt(1 - 2/r)."""
    return solve_radial(make_radial_metric("schwarzschild", r_min=2.0, mass=1.0), 2.0)


@pytest.fixture(scope="session")
def euclidean_potential() -> RadialPotential:
    """p = 1.5 potential of the unit ball, u = 1 - r^-3."""
    return solve_radial(make_radial_metric("euclidean", r_min=1.0), 1.5)


@pytest.fixture
def tmp_project(tmp_path: Path) -> Iterator[Path]:
    """
    Run a test from inside an empty project directory.

    Parameters
    ----------
    tmp_path
        Pytest fixture, gives us a temporary directory.

    Yields
    ------
    Path
        The project root, holding an empty pyproject.toml.
    """
    (tmp_path / "pyproject.toml").write_text("", encoding="utf-8")
    cwd = os.getcwd()
    os.chdir(tmp_path)
    yield tmp_path
    os.chdir(cwd)
