"""Serialization: versioned JSON payloads, the fixed curve CSV schema,
and atomic file writes.

Every JSON document carries ``"schema": "atdev/1"`` and reloads into the
domain object it came from with identical numbers (floats are emitted at
full repr precision). Files are staged to a temp name in the target
directory and renamed into place, so readers never see partial content.
"""

from __future__ import annotations

import csv
import io as _io
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import CurveKind, EffectCurve
from .dependence import CorrelationMatrix
from .errors import DataError
from .importance import ImportanceReport

SCHEMA = "atdev/1"

__all__ = [
    "SCHEMA",
    "BarData",
    "HeatMapData",
    "MatrixBundle",
    "bars_to_dict",
    "bars_from_dict",
    "write_json",
    "read_json",
    "write_text_atomic",
    "curve_to_dict",
    "curve_from_dict",
    "curves_to_csv",
    "curves_from_csv",
    "matrix_to_dict",
    "matrix_from_dict",
    "heatmap_to_dict",
    "heatmap_from_dict",
    "report_to_dict",
    "report_from_dict",
    "report_to_csv",
    "corr_to_heatmap",
]


def write_text_atomic(path: str | Path, text: str) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)
    return path


def write_json(path: str | Path, payload: dict) -> Path:
    return write_text_atomic(path, json.dumps(payload, indent=1) + "\n")


def read_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataError(f"{path}: expected a JSON object")
    if payload.get("schema") != SCHEMA:
        raise DataError(f"{path}: unsupported schema {payload.get('schema')!r}")
    return payload


# ---------------------------------------------------------------------------
# Effect curves
# ---------------------------------------------------------------------------


def curve_to_dict(curve: EffectCurve, meta: dict | None = None) -> dict:
    payload = {
        "schema": SCHEMA,
        "kind": curve.kind.value,
        "j": curve.j,
        "k": curve.k,
        "grid": curve.grid.tolist(),
        "values": curve.values.tolist(),
        "counts": curve.counts.tolist(),
        "centered": curve.centered,
    }
    if meta:
        payload["meta"] = meta
    return payload


def curve_from_dict(payload: dict) -> EffectCurve:
    try:
        return EffectCurve(
            kind=CurveKind(payload["kind"]),
            j=int(payload["j"]),
            k=None if payload.get("k") is None else int(payload["k"]),
            grid=np.asarray(payload["grid"], dtype=np.float64),
            values=np.asarray(payload["values"], dtype=np.float64),
            counts=np.asarray(payload["counts"], dtype=np.float64),
            centered=bool(payload["centered"]),
        )
    except (KeyError, ValueError) as exc:
        raise DataError(f"bad curve payload: {exc}") from exc


def curves_to_csv(curves: list[EffectCurve]) -> str:
    """Fixed flat schema: kind, j, k, grid, value, count. The k cell is
    empty for own-effect curves. Full-precision floats."""
    out = _io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["kind", "j", "k", "grid", "value", "count"])
    for c in curves:
        kcell = "" if c.k is None else c.k
        for g, v, n in zip(c.grid, c.values, c.counts):
            w.writerow([c.kind.value, c.j, kcell, repr(float(g)),
                        repr(float(v)), repr(float(n))])
    return out.getvalue()


def curves_from_csv(text: str) -> list[EffectCurve]:
    """Rebuild curves from the flat CSV, grouped by (kind, j, k) in file
    order. The centered flag is not part of the CSV schema and comes back
    False."""
    reader = csv.reader(_io.StringIO(text))
    header = next(reader, None)
    if header != ["kind", "j", "k", "grid", "value", "count"]:
        raise DataError("unexpected curve CSV header")
    groups: dict[tuple, list] = {}
    order: list[tuple] = []
    for row in reader:
        if len(row) != 6:
            raise DataError(f"curve CSV row has {len(row)} cells, expected 6")
        key = (row[0], int(row[1]), None if row[2] == "" else int(row[2]))
        if key not in groups:
            groups[key] = []
            order.append(key)
        groups[key].append((float(row[3]), float(row[4]), float(row[5])))
    curves = []
    for kind, j, k in order:
        rows = groups[(kind, j, k)]
        curves.append(EffectCurve(
            kind=CurveKind(kind), j=j, k=k,
            grid=np.array([r[0] for r in rows]),
            values=np.array([r[1] for r in rows]),
            counts=np.array([r[2] for r in rows])))
    return curves


# ---------------------------------------------------------------------------
# Effect matrix bundles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixBundle:
    """File-level form of an effect matrix: the centered cell curves and
    (for the total-derivative kind) the column totals."""

    kind: CurveKind
    names: tuple[str, ...]
    cells: tuple[tuple[EffectCurve | None, ...], ...]
    totals: tuple[EffectCurve, ...] | None = None

    @property
    def p(self) -> int:
        return len(self.names)

    def cell(self, i: int, j: int) -> EffectCurve | None:
        return self.cells[i][j]


def matrix_to_dict(em, scatter: list | None = None,
                   histograms: list | None = None) -> dict:
    """Serialize an effect matrix (or bundle). Optional LE extras ride
    along: per-cell raw derivative scatters and per-variable derivative
    histograms."""
    payload = {
        "schema": SCHEMA,
        "kind": em.kind.value,
        "names": list(em.names),
        "cells": [[None if em.cell(i, j) is None else curve_to_dict(em.cell(i, j))
                   for j in range(em.p)] for i in range(em.p)],
        "totals": None if em.totals is None
        else [curve_to_dict(t) for t in em.totals],
    }
    if scatter is not None:
        payload["scatter"] = scatter
    if histograms is not None:
        payload["derivative_histograms"] = histograms
    return payload


def matrix_from_dict(payload: dict) -> MatrixBundle:
    try:
        names = tuple(payload["names"])
        cells = tuple(
            tuple(None if c is None else curve_from_dict(c) for c in row)
            for row in payload["cells"])
        totals = payload.get("totals")
    except KeyError as exc:
        raise DataError(f"bad matrix payload: {exc}") from exc
    return MatrixBundle(
        kind=CurveKind(payload["kind"]), names=names, cells=cells,
        totals=None if totals is None
        else tuple(curve_from_dict(t) for t in totals))


# ---------------------------------------------------------------------------
# Heat maps, importance reports, correlation matrices
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HeatMapData:
    """p x p display values. Scale 'signed' spans [-1, 1] (correlations,
    symmetric); 'nonnegative' spans [0, max] (component importances may
    be asymmetric)."""

    names: tuple[str, ...]
    values: np.ndarray
    scale: str  # "signed" or "nonnegative"

    def __post_init__(self):
        if self.scale not in ("signed", "nonnegative"):
            raise DataError(f"unknown heat map scale {self.scale!r}")
        v = np.asarray(self.values)
        if v.shape != (len(self.names), len(self.names)):
            raise DataError("heat map shape does not match names")
        if self.scale == "signed" and not np.allclose(v, v.T, atol=1e-12):
            raise DataError("signed heat map must be symmetric")
        if self.scale == "nonnegative" and np.any(v < 0):
            raise DataError("nonnegative heat map has negative entries")


def heatmap_to_dict(h: HeatMapData) -> dict:
    return {
        "schema": SCHEMA,
        "names": list(h.names),
        "values": h.values.tolist(),
        "scale": h.scale,
    }


def heatmap_from_dict(payload: dict) -> HeatMapData:
    try:
        return HeatMapData(
            names=tuple(payload["names"]),
            values=np.asarray(payload["values"], dtype=np.float64),
            scale=payload["scale"])
    except KeyError as exc:
        raise DataError(f"bad heat map payload: {exc}") from exc


def corr_to_heatmap(cm: CorrelationMatrix) -> HeatMapData:
    return HeatMapData(names=cm.names, values=cm.values, scale="signed")


@dataclass(frozen=True)
class BarData:
    """Labeled nonnegative values for a bar chart export."""

    label: str
    names: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        if len(self.names) != len(self.values):
            raise DataError("bar names/values length mismatch")


def bars_to_dict(b: BarData) -> dict:
    return {
        "schema": SCHEMA,
        "label": b.label,
        "names": list(b.names),
        "values": np.asarray(b.values).tolist(),
    }


def bars_from_dict(payload: dict) -> BarData:
    try:
        return BarData(label=payload["label"], names=tuple(payload["names"]),
                       values=np.asarray(payload["values"], dtype=np.float64))
    except KeyError as exc:
        raise DataError(f"bad bar payload: {exc}") from exc


def report_to_dict(r: ImportanceReport) -> dict:
    return {
        "schema": SCHEMA,
        "names": list(r.names),
        "v": r.v.tolist(),
        "v_plus": r.v_plus.tolist(),
        "dgsm": r.dgsm.tolist(),
    }


def report_from_dict(payload: dict) -> ImportanceReport:
    try:
        return ImportanceReport(
            names=tuple(payload["names"]),
            v=np.asarray(payload["v"], dtype=np.float64),
            v_plus=np.asarray(payload["v_plus"], dtype=np.float64),
            dgsm=np.asarray(payload["dgsm"], dtype=np.float64))
    except KeyError as exc:
        raise DataError(f"bad importance payload: {exc}") from exc


def report_to_csv(r: ImportanceReport) -> str:
    """Flat cell form: row variable, column variable, cell variance."""
    out = _io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["i", "j", "v_ij"])
    for i in range(r.p):
        for j in range(r.p):
            w.writerow([i, j, repr(float(r.v[i, j]))])
    return out.getvalue()


