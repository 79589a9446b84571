"""Finite differences on sampled grids and convergence-order bookkeeping."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from pmonotone.exceptions import ExtrapolationError

FloatArray = NDArray[np.float64]


def central_derivative(x: ArrayLike, y: ArrayLike) -> FloatArray:
    """
    Three-point derivative on a nonuniform grid, second order at interior nodes.

    Parameters
    ----------
    x
        Strictly increasing abscissae.
    y
        Samples at ``x``.

    Returns
    -------
    FloatArray
        Derivative estimates at ``x[1:-1]``.
    """
    xs = np.asarray(x, dtype=float)
    ys = np.asarray(y, dtype=float)
    h1 = xs[1:-1] - xs[:-2]
    h2 = xs[2:] - xs[1:-1]
    return (
        -h2 / (h1 * (h1 + h2)) * ys[:-2]
        + (h2 - h1) / (h1 * h2) * ys[1:-1]
        + h1 / (h2 * (h1 + h2)) * ys[2:]
    )


def observed_order(errors: Sequence[float], ratio: float = 2.0) -> list[float]:
    """
    log(e_k / e_{k+1}) / log(ratio) for successive refinements.

    Entries whose errors have reached round-off (zero) are reported as NaN.
    """
    orders = []
    for coarse, fine in zip(errors[:-1], errors[1:]):
        if coarse > 0.0 and fine > 0.0:
            orders.append(math.log(coarse / fine) / math.log(ratio))
        else:
            orders.append(math.nan)
    return orders


def richardson_extrapolate(
    base_values: Sequence[float], order: int, ratio: float = 2.0
) -> float:
    """
    Eliminate the leading error terms of a refinement sequence.

    Parameters
    ----------
    base_values
        Approximations computed with steps shrinking by ``ratio``.
    order
        Order of the leading error term.
    ratio
        Step reduction between successive entries.

    Returns
    -------
    float
        The extrapolated value.

    Raises
    ------
    ExtrapolationError
        If fewer than two values are given.
    """
    if len(base_values) < 2:
        raise ExtrapolationError("Richardson extrapolation needs at least two values")
    values = [float(v) for v in base_values]
    for j in range(1, len(values)):
        factor = ratio ** (order * j)
        for k in range(len(values) - 1, j - 1, -1):
            values[k] = (factor * values[k] - values[k - 1]) / (factor - 1.0)
    return values[-1]
