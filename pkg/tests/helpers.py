"""Shared test utilities: polynomial fits on curve grids, support masks,
curve comparison, and dataset slicing."""

import numpy as np

from atdev import center
from atdev.data import Dataset


def take(d: Dataset, rows) -> Dataset:
    """Row subset as a new Dataset."""
    return Dataset(
        names=list(d.names),
        columns=[c[rows] for c in d.columns],
        response=None if d.response is None else d.response[rows])


def inner_mask(x: np.ndarray, grid: np.ndarray, frac: float = 0.90) -> np.ndarray:
    """Boolean mask of grid points inside the central ``frac`` of the
    empirical distribution of x."""
    tail = (1.0 - frac) / 2.0
    lo, hi = np.quantile(x, [tail, 1.0 - tail])
    return (grid >= lo) & (grid <= hi)


def poly_coeffs(grid: np.ndarray, values: np.ndarray, deg: int,
                mask: np.ndarray | None = None) -> np.ndarray:
    """Least-squares polynomial coefficients (ascending degree) of the
    curve restricted to masked grid points."""
    if mask is not None:
        grid, values = grid[mask], values[mask]
    return np.polynomial.polynomial.polyfit(grid, values, deg)


def max_gap(a, b, mask: np.ndarray | None = None) -> float:
    """Largest pointwise distance between two centered curves sharing a
    grid."""
    ca, cb = center(a), center(b)
    if not np.array_equal(a.grid, b.grid):
        raise AssertionError("curves not on a shared grid")
    diff = np.abs(ca.values - cb.values)
    if mask is not None:
        diff = diff[mask]
    return float(diff.max())


def uncentered_max(curve, mask: np.ndarray | None = None) -> float:
    v = np.abs(curve.values)
    if mask is not None:
        v = v[mask]
    return float(v.max())
