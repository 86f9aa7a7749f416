"""Delimited-text dataset ingestion and export.

The on-disk format is a comma-delimited file with a header.  Required
columns: ``t`` (0/1), ``m`` (nonnegative integer mediator level), ``y``
(finite float).  Optional columns: ``v`` (categorical stratum label),
``weight`` (positive float), ``group`` (observational / group1 / group2).
Parsing is strict: unknown columns, missing values, and non-numeric cells
raise :class:`DatasetFormatError` naming the offending line.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .estimands import GroupLabel, ObservedData

__all__ = ["DatasetFormatError", "read_dataset", "write_dataset"]

_REQUIRED = ("t", "m", "y")
_OPTIONAL = ("v", "weight", "group")
_GROUP_VALUES = tuple(label.value for label in GroupLabel)


class DatasetFormatError(ValueError):
    """A dataset file violates the delimited-text contract."""


def _fail(path, line, message) -> None:
    raise DatasetFormatError(f"{path}:{line}: {message}")


def read_dataset(path) -> ObservedData:
    """Parse a delimited dataset file into ObservedData."""
    path = Path(path)
    with path.open(newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            _fail(path, 1, "file is empty")
        header = [name.strip() for name in header]
        for name in _REQUIRED:
            if name not in header:
                _fail(path, 1, f"missing required column {name!r}")
        for name in header:
            if name not in _REQUIRED + _OPTIONAL:
                _fail(path, 1, f"unknown column {name!r}")
        if len(set(header)) != len(header):
            _fail(path, 1, "duplicate column names")
        col = {name: header.index(name) for name in header}

        t, m, y = [], [], []
        v = [] if "v" in col else None
        weight = [] if "weight" in col else None
        group = [] if "group" in col else None
        for line, row in enumerate(reader, start=2):
            if len(row) != len(header):
                _fail(path, line, f"expected {len(header)} fields, got {len(row)}")
            raw_t = row[col["t"]].strip()
            if raw_t not in ("0", "1"):
                _fail(path, line, f"t must be 0 or 1, got {raw_t!r}")
            t.append(int(raw_t))
            raw_m = row[col["m"]].strip()
            try:
                m_value = int(raw_m)
            except ValueError:
                _fail(path, line, f"m must be an integer, got {raw_m!r}")
            if m_value < 0:
                _fail(path, line, f"m must be nonnegative, got {m_value}")
            m.append(m_value)
            raw_y = row[col["y"]].strip()
            try:
                y_value = float(raw_y)
            except ValueError:
                _fail(path, line, f"y must be a number, got {raw_y!r}")
            if not np.isfinite(y_value):
                _fail(path, line, f"y must be finite, got {raw_y!r}")
            y.append(y_value)
            if v is not None:
                raw_v = row[col["v"]].strip()
                if not raw_v:
                    _fail(path, line, "v must not be empty")
                v.append(raw_v)
            if weight is not None:
                raw_w = row[col["weight"]].strip()
                try:
                    w_value = float(raw_w)
                except ValueError:
                    _fail(path, line, f"weight must be a number, got {raw_w!r}")
                if not (np.isfinite(w_value) and w_value > 0):
                    _fail(path, line, f"weight must be positive, got {raw_w!r}")
                weight.append(w_value)
            if group is not None:
                raw_g = row[col["group"]].strip()
                if raw_g not in _GROUP_VALUES:
                    _fail(
                        path,
                        line,
                        f"group must be one of {_GROUP_VALUES}, got {raw_g!r}",
                    )
                group.append(raw_g)
    if not t:
        _fail(path, 2, "no data rows")
    return ObservedData(
        t=t,
        m=m,
        y=y,
        weight=weight,
        stratum=v,
        group=np.array(group) if group is not None else None,
    )


def write_dataset(data: ObservedData, path) -> Path:
    """Write ObservedData in the delimited format (column order fixed)."""
    path = Path(path)
    header = list(_REQUIRED)
    if data.stratum is not None:
        header.append("v")
    header.append("weight")
    if data.group is not None:
        header.append("group")
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for i in range(len(data)):
            row = [str(int(data.t[i])), str(int(data.m[i])), repr(float(data.y[i]))]
            if data.stratum is not None:
                row.append(str(data.stratum[i]))
            row.append(repr(float(data.weight[i])))
            if data.group is not None:
                row.append(str(data.group[i]))
            writer.writerow(row)
    return path
