"""Measured reset cycles: data model, CSV ingestion, registration.

Input is the long CSV format ``cycle_id,voltage_V,current_A`` (gzip
accepted by extension).  Every curve runs from near zero volts up to
its reset voltage; registration rescales each voltage grid onto
(0, 1] so curves become comparable pointwise.
"""

from __future__ import annotations

import gzip
import io
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import pandas as pd

from .errors import DataError

__all__ = [
    "RawCurve",
    "RegisteredCurve",
    "RawDataset",
    "load_dataset",
    "save_dataset",
    "register",
    "unregister_eval",
    "CurveRegistrar",
]

CSV_COLUMNS = ("cycle_id", "voltage_V", "current_A")


@dataclass(frozen=True)
class RawCurve:
    """One measured reset cycle, truncated at the reset point."""

    cycle_id: int
    voltages: np.ndarray
    currents: np.ndarray
    v_reset: float

    def __post_init__(self):
        v = np.asarray(self.voltages, dtype=float)
        i = np.asarray(self.currents, dtype=float)
        if v.size != i.size or v.size == 0:
            raise DataError(f"cycle {self.cycle_id}: voltage/current length mismatch")
        if np.any(np.diff(v) <= 0):
            raise DataError(f"cycle {self.cycle_id}: voltages not strictly increasing")
        if not np.isclose(v[-1], self.v_reset):
            raise DataError(f"cycle {self.cycle_id}: v_reset must equal the last voltage")
        object.__setattr__(self, "voltages", v)
        object.__setattr__(self, "currents", i)

    def __len__(self) -> int:
        return self.voltages.size


@dataclass(frozen=True)
class RegisteredCurve:
    """A reset cycle with arguments rescaled onto (0, 1]."""

    cycle_id: int
    args: np.ndarray
    currents: np.ndarray
    v_reset: float

    def __len__(self) -> int:
        return self.args.size


@dataclass
class RawDataset:
    """A collection of reset cycles with free-form metadata."""

    curves: list[RawCurve]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.curves:
            raise DataError("dataset is empty")
        ids = [c.cycle_id for c in self.curves]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate cycle_id in dataset")

    def __len__(self) -> int:
        return len(self.curves)


def load_dataset(path) -> RawDataset:
    """Read the long CSV format into a RawDataset.

    Rows for one cycle need not be contiguous; curves are grouped by
    cycle_id and sorted by voltage.  Gzip input is detected by the
    ``.gz`` extension.
    """
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise DataError(f"cannot parse {path}: {exc}") from exc
    missing = [c for c in CSV_COLUMNS if c not in frame.columns]
    if missing:
        raise DataError(f"{path}: missing columns {missing}")
    if frame.empty:
        raise DataError(f"{path}: no data rows")
    for col in ("voltage_V", "current_A"):
        if not np.all(np.isfinite(frame[col].to_numpy(dtype=float))):
            raise DataError(f"{path}: non-finite values in column {col}")

    curves = []
    for cycle_id, group in frame.groupby("cycle_id", sort=True):
        group = group.sort_values("voltage_V")
        v = group["voltage_V"].to_numpy(dtype=float)
        if np.any(np.diff(v) == 0):
            raise DataError(f"duplicate voltage row in cycle {cycle_id}")
        i = group["current_A"].to_numpy(dtype=float)
        curves.append(RawCurve(cycle_id=int(cycle_id), voltages=v,
                               currents=i, v_reset=float(v[-1])))
    return RawDataset(curves=curves)


def save_dataset(dataset: RawDataset, path) -> None:
    """Write the long CSV format deterministically (repr floats).

    Rows are ordered by cycle then voltage, so identical datasets
    always serialize to identical bytes.  A ``.gz`` extension gzips
    the output with a fixed mtime.
    """
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for curve in sorted(dataset.curves, key=lambda c: c.cycle_id):
        for v, i in zip(curve.voltages, curve.currents):
            buf.write(f"{curve.cycle_id},{float(v)!r},{float(i)!r}\n")
    data = buf.getvalue().encode()
    path = str(path)
    if path.endswith(".gz"):
        with open(path, "wb") as fh:
            with gzip.GzipFile(fileobj=fh, mode="wb", mtime=0, filename="") as gz:
                gz.write(data)
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def register(raw: RawCurve) -> RegisteredCurve:
    """Rescale a curve's voltages by its reset voltage.

    Only the arguments transform; current values are untouched.
    """
    if raw.v_reset <= 0:
        raise DataError(f"cycle {raw.cycle_id}: non-positive v_reset {raw.v_reset}")
    return RegisteredCurve(
        cycle_id=raw.cycle_id,
        args=raw.voltages / raw.v_reset,
        currents=raw.currents,
        v_reset=raw.v_reset,
    )


def unregister_eval(model: Callable[[float], float], v_reset: float, v: float) -> float:
    """Evaluate a registered-domain model at an unregistered voltage."""
    if not 0 <= v <= v_reset:
        raise ValueError(f"voltage {v} outside [0, {v_reset}]")
    return model(v / v_reset)


class CurveRegistrar:
    """Stateless transformer mapping RawCurve sequences to registered ones.

    Present so the registration step composes in sklearn-style
    pipelines; it learns nothing from the data.
    """

    def fit(self, X: Sequence[RawCurve], y=None):
        return self

    def transform(self, X: Sequence[RawCurve]) -> list[RegisteredCurve]:
        return [register(c) for c in X]

    def fit_transform(self, X: Sequence[RawCurve], y=None) -> list[RegisteredCurve]:
        return self.fit(X).transform(X)

    def get_params(self, deep=True) -> dict:
        return {}

    def set_params(self, **params):
        if params:
            raise ValueError(f"unknown parameters: {sorted(params)}")
        return self
