"""The 1-D effect-curve estimators and the p x p effect matrix.

Six curves over a shared quantile-bin grid of the variable of interest:

- ``pdp``: average prediction with the column overwritten at every row
  (a full sweep that extrapolates off the joint support on purpose).
- ``marginal``: per-bin conditional mean of predictions at observed rows.
- ``ale``: integrated per-bin mean of the own partial derivative.
- ``ace``: integrated per-bin mean of a cross partial times the
  conditional-mean slope of the other variable.
- ``atdev``: ale plus all ace terms, the total-derivative effect.
- ``le_curve``: per-bin mean of a partial derivative, not integrated.

Integration is a cumulative midpoint rule from the observed minimum: the
value at a bin midpoint is the full-width sum over earlier bins plus half
the current bin's contribution, so a unit-slope model reproduces the
identity exactly at the midpoints.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import BinScheme, CurveKind, Dataset, EffectCurve, center, quantile_bins
from .dependence import DependenceModel, fit_dependence
from .errors import DataError
from .gradients import DerivativeField, GradientTable, gradient_table, partial_derivatives
from .models import Predictor

__all__ = [
    "DEFAULT_BINS",
    "EffectMatrix",
    "pdp",
    "marginal",
    "ale",
    "ace",
    "atdev",
    "le_curve",
    "effect_matrix",
]

DEFAULT_BINS = 100


def _scheme(d: Dataset, j: int, bins: BinScheme | None) -> BinScheme:
    if bins is None:
        return quantile_bins(d, j, DEFAULT_BINS)
    if bins.j != j:
        raise DataError(f"bin scheme built on column {bins.j}, expected {j}")
    return bins


def _bin_means(values: np.ndarray, scheme: BinScheme) -> np.ndarray:
    sums = np.bincount(scheme.bin_of, weights=values, minlength=scheme.k)
    return sums / scheme.counts


def _integrate(means: np.ndarray, scheme: BinScheme) -> np.ndarray:
    # Accumulate mean*width from the first edge; midpoint value backs off
    # half of the current bin's full-width contribution.
    contrib = means * scheme.widths
    return np.cumsum(contrib) - contrib / 2.0


def _field_values(model: Predictor, d: Dataset, k: int,
                  derivs: DerivativeField | GradientTable | None) -> np.ndarray:
    if derivs is None:
        return partial_derivatives(model, d, k).values
    if isinstance(derivs, GradientTable):
        return derivs.values[:, k]
    if derivs.j != k:
        raise DataError(f"derivative field is for column {derivs.j}, expected {k}")
    return derivs.values


def pdp(model: Predictor, d: Dataset, j: int, bins: BinScheme | None = None,
        grid: np.ndarray | None = None) -> EffectCurve:
    """Average prediction as column j sweeps the grid (default: the bin
    midpoints) while every other column keeps its observed values. Scores
    synthetic rows, so correlated data gets extrapolated."""
    scheme = _scheme(d, j, bins)
    if grid is None:
        grid = scheme.midpoints
        counts = scheme.counts.astype(np.float64)
    else:
        grid = np.asarray(grid, dtype=np.float64)
        lo, hi = float(np.min(d.column(j))), float(np.max(d.column(j)))
        if np.any(grid < lo) or np.any(grid > hi):
            raise DataError("pdp grid extends beyond the observed range")
        counts = np.ones(len(grid))
    x = d.matrix()
    values = np.empty(len(grid))
    for g, z in enumerate(grid):
        x[:, j] = z
        values[g] = float(np.mean(model.predict(x)))
    return EffectCurve(kind=CurveKind.PD, j=j, grid=grid, values=values,
                       counts=counts)


def marginal(model: Predictor, d: Dataset, j: int,
             bins: BinScheme | None = None, smooth: int = 0,
             from_response: bool = False) -> EffectCurve:
    """Per-bin mean of predictions at the observed rows (no synthetic
    points), placed at bin midpoints.

    ``smooth`` > 0 replaces each bin mean with a count-weighted local
    quadratic fit over a window of that many bins on each side. The fit
    is exact for polynomial conditional means up to cubic on interior
    windows, so it cuts per-bin sampling noise without flattening shape.
    ``from_response`` averages the observed response instead of model
    scores (identity link only).
    """
    scheme = _scheme(d, j, bins)
    if from_response:
        if d.response is None:
            raise DataError("response-based marginal needs a response column")
        per_row = np.asarray(d.response, dtype=np.float64)
    else:
        per_row = model.predict(d.matrix())
    values = _bin_means(per_row, scheme)
    if smooth > 0:
        values = _local_quadratic(scheme.midpoints, values,
                                  scheme.counts.astype(np.float64), smooth)
    return EffectCurve(kind=CurveKind.MARGINAL, j=j, grid=scheme.midpoints,
                       values=values, counts=scheme.counts.astype(np.float64))


def _local_quadratic(grid: np.ndarray, values: np.ndarray, counts: np.ndarray,
                     half_window: int) -> np.ndarray:
    out = values.copy()
    k = len(grid)
    for b in range(k):
        lo = max(0, b - half_window)
        hi = min(k, b + half_window + 1)
        if hi - lo < 4:
            continue
        t = grid[lo:hi] - grid[b]
        w = counts[lo:hi]
        basis = np.column_stack([np.ones_like(t), t, t * t])
        bw = basis * w[:, None]
        gram = basis.T @ bw
        rhs = bw.T @ values[lo:hi]
        try:
            coef = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError:
            continue
        out[b] = coef[0]
    return out


def ale(model: Predictor, d: Dataset, j: int, bins: BinScheme | None = None,
        derivs: DerivativeField | GradientTable | None = None) -> EffectCurve:
    """Own-effect curve: per-bin mean of d f / d x_j over member rows,
    accumulated from the observed minimum. Uncentered."""
    scheme = _scheme(d, j, bins)
    g = _field_values(model, d, j, derivs)
    means = _bin_means(g, scheme)
    return EffectCurve(kind=CurveKind.ALE, j=j, grid=scheme.midpoints,
                       values=_integrate(means, scheme),
                       counts=scheme.counts.astype(np.float64))


def ace(model: Predictor, d: Dataset, k: int, j: int, dep: DependenceModel,
        bins: BinScheme | None = None,
        derivs: DerivativeField | GradientTable | None = None) -> EffectCurve:
    """Cross-effect curve: the part of x_j's effect transmitted through
    the dependent variable x_k. Per-bin mean of
    (d f / d x_k) * (d m_k / d x_j), accumulated as in ale."""
    if k == j:
        raise DataError("cross effect needs k != j")
    if dep.j != j:
        raise DataError(f"dependence model anchored at {dep.j}, expected {j}")
    scheme = _scheme(d, j, bins)
    g = _field_values(model, d, k, derivs)
    integrand = g * dep.slope_at(k, d.column(j))
    means = _bin_means(integrand, scheme)
    return EffectCurve(kind=CurveKind.ACE, j=j, k=k, grid=scheme.midpoints,
                       values=_integrate(means, scheme),
                       counts=scheme.counts.astype(np.float64))


def atdev(model: Predictor, d: Dataset, j: int,
          dep: DependenceModel | None = None,
          bins: BinScheme | None = None,
          table: GradientTable | None = None) -> EffectCurve:
    """Total-derivative effect: ale plus the ace term of every other
    variable, on the shared grid."""
    scheme = _scheme(d, j, bins)
    if dep is None:
        dep = fit_dependence(d, j)
    if table is None:
        table = gradient_table(model, d)
    total = ale(model, d, j, bins=scheme, derivs=table).values.copy()
    for k in range(d.p):
        if k != j:
            total += ace(model, d, k, j, dep, bins=scheme, derivs=table).values
    return EffectCurve(kind=CurveKind.ATDEV, j=j, grid=scheme.midpoints,
                       values=total, counts=scheme.counts.astype(np.float64))


def le_curve(model: Predictor, d: Dataset, k: int, j: int,
             bins: BinScheme | None = None,
             derivs: DerivativeField | GradientTable | None = None) -> EffectCurve:
    """Per-bin mean of d f / d x_k conditioned on x_j bins, reported on
    the derivative scale (no integration). k = j is the own-derivative
    profile; k != j reads out interactions and transferred effects."""
    scheme = _scheme(d, j, bins)
    g = _field_values(model, d, k, derivs)
    kind = CurveKind.LE if k == j else CurveKind.LE_CROSS
    return EffectCurve(kind=kind, j=j, k=None if k == j else k,
                       grid=scheme.midpoints, values=_bin_means(g, scheme),
                       counts=scheme.counts.astype(np.float64))


@dataclass(frozen=True)
class EffectMatrix:
    """p x p grid of centered curves, column j conditioned on variable j.

    For the total-derivative kind the diagonal holds own effects (ale)
    and cell (i, j) holds the cross effect of x_j through x_i; ``totals``
    caches each column's pointwise sum. For the local-effects kind the
    cells are conditional mean derivatives and ``totals`` is None.
    """

    kind: CurveKind
    names: tuple[str, ...]
    cells: tuple[tuple[EffectCurve | None, ...], ...]  # [row i][col j]
    schemes: tuple[BinScheme, ...]
    totals: tuple[EffectCurve, ...] | None = None

    @property
    def p(self) -> int:
        return len(self.names)

    def cell(self, i: int, j: int) -> EffectCurve | None:
        return self.cells[i][j]

    def total(self, j: int) -> EffectCurve:
        if self.totals is None:
            raise DataError("totals cached only for the total-derivative kind")
        return self.totals[j]


def effect_matrix(model: Predictor, d: Dataset, kind: CurveKind | str = CurveKind.ATDEV,
                  k_bins: int = DEFAULT_BINS, dependence: str = "linear",
                  deps: list[DependenceModel] | None = None,
                  schemes: list[BinScheme] | None = None,
                  table: GradientTable | None = None) -> EffectMatrix:
    """Build all p^2 curves. One gradient pass is shared by every cell;
    per-column dependence fits may be supplied or are fitted here."""
    kind = CurveKind(kind)
    if kind not in (CurveKind.ATDEV, CurveKind.LE):
        raise DataError(f"matrix kind must be ATDEV or LE, got {kind.value}")
    p = d.p
    if schemes is None:
        schemes = [quantile_bins(d, j, k_bins) for j in range(p)]
    if table is None:
        table = gradient_table(model, d)
    if kind is CurveKind.ATDEV and deps is None:
        deps = [fit_dependence(d, j, dependence) for j in range(p)]

    columns: list[list[EffectCurve]] = []
    totals: list[EffectCurve] = []
    for j in range(p):
        scheme = schemes[j]
        col: list[EffectCurve] = []
        for i in range(p):
            if kind is CurveKind.ATDEV:
                cell = ale(model, d, j, bins=scheme, derivs=table) if i == j \
                    else ace(model, d, i, j, deps[j], bins=scheme, derivs=table)
            else:
                cell = le_curve(model, d, i, j, bins=scheme, derivs=table)
            col.append(center(cell))
        columns.append(col)
        if kind is CurveKind.ATDEV:
            summed = np.sum([c.values for c in col], axis=0)
            totals.append(EffectCurve(
                kind=CurveKind.ATDEV, j=j, grid=scheme.midpoints, values=summed,
                counts=scheme.counts.astype(np.float64), centered=True))

    cells = tuple(tuple(columns[j][i] for j in range(p)) for i in range(p))
    return EffectMatrix(kind=kind, names=tuple(d.names), cells=cells,
                        schemes=tuple(schemes),
                        totals=tuple(totals) if kind is CurveKind.ATDEV else None)
