"""Quarterly panel ingestion for station time series.

Input is long-format CSV (station, date, variable, value) with optional
per-station coordinate columns. Dates are accepted as YYYY-MM-DD or YYYY-Qn
and coarsened to (year, quarter); monthly rows falling in the same quarter
are aggregated (mean by default, sum on request, e.g. for precipitation
totals). Missing station/quarter/variable cells are masked, never silently
interpolated.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (ConflictError, EmptyInputError, GwtsError, MissingDataError,
                     ParseError)

_QUARTER_RE = re.compile(r"^(\d{4})-Q([1-4])$")
_DATE_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})$")


@dataclass(frozen=True)
class StationId:
    name: str
    latitude: float | None = None
    longitude: float | None = None

    def __post_init__(self):
        if not self.name:
            raise GwtsError("station name must be non-empty")
        if self.latitude is not None and not -90.0 <= self.latitude <= 90.0:
            raise GwtsError(f"latitude {self.latitude} outside [-90, 90]")
        if self.longitude is not None and not -180.0 <= self.longitude <= 180.0:
            raise GwtsError(f"longitude {self.longitude} outside [-180, 180]")


def quarter_str(yq: tuple[int, int]) -> str:
    return f"{yq[0]}-Q{yq[1]}"


def parse_date(text: str) -> tuple[int, int]:
    """Parse YYYY-MM-DD or YYYY-Qn into (year, quarter)."""
    text = text.strip()
    m = _QUARTER_RE.match(text)
    if m:
        return int(m.group(1)), int(m.group(2))
    m = _DATE_RE.match(text)
    if m:
        year, month, day = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if not 1 <= month <= 12 or not 1 <= day <= 31:
            raise ValueError(f"invalid calendar date {text!r}")
        return year, (month - 1) // 3 + 1
    raise ValueError(f"unrecognized date {text!r} (expected YYYY-MM-DD or YYYY-Qn)")


def quarter_range(first: tuple[int, int], last: tuple[int, int]) -> list[tuple[int, int]]:
    """Contiguous quarters from first to last inclusive."""
    out = []
    y, q = first
    while (y, q) <= last:
        out.append((y, q))
        q += 1
        if q == 5:
            y, q = y + 1, 1
    return out


@dataclass
class ColumnSchema:
    """Mapping from CSV columns to panel roles plus aggregation policy.

    aggregate_default applies when several dated rows land in one quarter;
    aggregate_overrides switches individual variables (e.g. precipitation
    sums rather than averages).
    """

    station: str = "station"
    date: str = "date"
    variable: str = "variable"
    value: str = "value"
    latitude: str | None = "latitude"
    longitude: str | None = "longitude"
    aggregate_default: str = "mean"
    aggregate_overrides: dict[str, str] = field(default_factory=dict)

    def aggregate_for(self, variable: str) -> str:
        how = self.aggregate_overrides.get(variable, self.aggregate_default)
        if how not in ("mean", "sum"):
            raise GwtsError(f"unknown aggregation {how!r} for {variable!r}")
        return how


@dataclass
class TimeSeriesPanel:
    """stations x quarters x variables panel with a missing-value mask.

    mask[s, t, v] is True where the observation is missing; values are NaN
    exactly there and finite everywhere else. All stations share one strictly
    increasing quarterly index.
    """

    stations: list[StationId]
    variables: list[str]
    index: list[tuple[int, int]]
    values: np.ndarray
    mask: np.ndarray

    def __post_init__(self):
        S, T, V = len(self.stations), len(self.index), len(self.variables)
        if self.values.shape != (S, T, V) or self.mask.shape != (S, T, V):
            raise GwtsError(f"panel arrays must be shaped ({S}, {T}, {V})")
        for a, b in zip(self.index, self.index[1:]):
            if not a < b:
                raise GwtsError(f"time index not strictly increasing at {a} -> {b}")
        present = ~self.mask
        if not np.all(np.isfinite(self.values[present])):
            raise GwtsError("non-finite value where the mask says present")
        if not np.all(np.isnan(self.values[self.mask])):
            raise GwtsError("masked cells must hold NaN")

    @property
    def n_timestamps(self) -> int:
        return len(self.index)

    def station(self, name: str) -> StationId:
        for st in self.stations:
            if st.name == name:
                return st
        raise GwtsError(f"unknown station {name!r}")


@dataclass
class HoldoutSplit:
    train: TimeSeriesPanel
    test: TimeSeriesPanel
    ratio: float


def load_panel(path, schema: ColumnSchema | None = None,
               fill: bool = False) -> TimeSeriesPanel:
    """Load a long-format CSV into a validated quarterly panel.

    Raises ParseError (with line number) on malformed rows, ConflictError on
    duplicate (station, date, variable) rows, EmptyInputError on a file with
    no data rows. With fill=True, interior masked gaps are linearly
    interpolated per station/variable (leading/trailing gaps stay masked).
    """
    schema = schema or ColumnSchema()
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        for required in (schema.station, schema.date, schema.variable, schema.value):
            if required not in header:
                raise ParseError(f"missing required column {required!r}", line=1)
        col = {name: header.index(name) for name in header}
        lat_ix = col.get(schema.latitude) if schema.latitude else None
        lon_ix = col.get(schema.longitude) if schema.longitude else None

        cells: dict[tuple[str, tuple[int, int], str], list[float]] = {}
        seen_rows: set[tuple[str, str, str]] = set()
        coords: dict[str, tuple[float | None, float | None]] = {}
        quarters: set[tuple[int, int]] = set()
        station_order: list[str] = []
        variable_order: list[str] = []

        for lineno, row in enumerate(reader, start=2):
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) < len(header):
                raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
            station = row[col[schema.station]].strip()
            date_text = row[col[schema.date]].strip()
            variable = row[col[schema.variable]].strip()
            value_text = row[col[schema.value]].strip()
            if not station:
                raise ParseError("empty station name", line=lineno)
            if not variable:
                raise ParseError("empty variable name", line=lineno)
            try:
                yq = parse_date(date_text)
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from None
            key_exact = (station, date_text, variable)
            if key_exact in seen_rows:
                raise ConflictError(
                    f"line {lineno}: duplicate row for station {station!r}, "
                    f"date {date_text!r} ({quarter_str(yq)}), variable {variable!r}")
            seen_rows.add(key_exact)
            if value_text == "":
                value = math.nan
            else:
                try:
                    value = float(value_text)
                except ValueError:
                    raise ParseError(f"non-numeric value {value_text!r}", line=lineno) from None
            lat = lon = None
            if lat_ix is not None and row[lat_ix].strip():
                try:
                    lat = float(row[lat_ix])
                except ValueError:
                    raise ParseError(f"bad latitude {row[lat_ix]!r}", line=lineno) from None
            if lon_ix is not None and row[lon_ix].strip():
                try:
                    lon = float(row[lon_ix])
                except ValueError:
                    raise ParseError(f"bad longitude {row[lon_ix]!r}", line=lineno) from None
            if station not in coords:
                coords[station] = (lat, lon)
                station_order.append(station)
            elif lat is not None or lon is not None:
                old = coords[station]
                if (old[0] is not None and lat is not None and old[0] != lat) or \
                   (old[1] is not None and lon is not None and old[1] != lon):
                    raise ConflictError(
                        f"line {lineno}: station {station!r} has conflicting coordinates")
                coords[station] = (old[0] if old[0] is not None else lat,
                                   old[1] if old[1] is not None else lon)
            if variable not in variable_order:
                variable_order.append(variable)
            quarters.add(yq)
            if not math.isnan(value):
                cells.setdefault((station, yq, variable), []).append(value)

    if not quarters:
        raise EmptyInputError(f"{path} has a header but no data rows")

    index = quarter_range(min(quarters), max(quarters))
    t_of = {yq: i for i, yq in enumerate(index)}
    stations = [StationId(name, *coords[name]) for name in station_order]
    S, T, V = len(stations), len(index), len(variable_order)
    values = np.full((S, T, V), np.nan)
    for (station, yq, variable), obs in cells.items():
        s = station_order.index(station)
        v = variable_order.index(variable)
        how = schema.aggregate_for(variable)
        values[s, t_of[yq], v] = sum(obs) / len(obs) if how == "mean" else sum(obs)
    mask = np.isnan(values)
    if fill:
        values, mask = _fill_linear(values, mask)
    return TimeSeriesPanel(stations=stations, variables=variable_order,
                           index=index, values=values, mask=mask)


def _fill_linear(values: np.ndarray, mask: np.ndarray):
    values = values.copy()
    S, T, V = values.shape
    t = np.arange(T)
    for s in range(S):
        for v in range(V):
            miss = mask[s, :, v]
            if not miss.any() or miss.all():
                continue
            present = ~miss
            first, last = np.argmax(present), T - 1 - np.argmax(present[::-1])
            interior = miss & (t >= first) & (t <= last)
            if interior.any():
                values[s, interior, v] = np.interp(t[interior], t[present],
                                                   values[s, present, v])
    return values, np.isnan(values)


def write_panel(panel: TimeSeriesPanel, path) -> None:
    """Emit the panel as long-format quarterly CSV; load_panel round-trips it."""
    path = Path(path)
    has_coords = any(st.latitude is not None or st.longitude is not None
                     for st in panel.stations)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        header = ["station", "date", "variable", "value"]
        if has_coords:
            header += ["latitude", "longitude"]
        writer.writerow(header)
        for s, st in enumerate(panel.stations):
            for t, yq in enumerate(panel.index):
                for v, var in enumerate(panel.variables):
                    if panel.mask[s, t, v]:
                        continue
                    row = [st.name, quarter_str(yq), var,
                           f"{panel.values[s, t, v]:.17g}"]
                    if has_coords:
                        row += ["" if st.latitude is None else f"{st.latitude:.17g}",
                                "" if st.longitude is None else f"{st.longitude:.17g}"]
                    writer.writerow(row)


def panel_summary(panel: TimeSeriesPanel) -> dict:
    return {
        "stations": len(panel.stations),
        "variables": panel.variables,
        "first_quarter": quarter_str(panel.index[0]),
        "last_quarter": quarter_str(panel.index[-1]),
        "timestamps": panel.n_timestamps,
        "missing_cells": int(panel.mask.sum()),
        "total_cells": int(panel.mask.size),
    }


def holdout_split(panel: TimeSeriesPanel, ratio: float) -> HoldoutSplit:
    """Chronological split; the training block takes floor(ratio * T) quarters.

    (An 85-quarter panel at ratio 0.7 gives 59 training and 26 test points.)
    """
    if not 0.0 < ratio < 1.0:
        raise GwtsError(f"holdout ratio must be in (0, 1), got {ratio}")
    T = panel.n_timestamps
    if T < 2:
        raise GwtsError("cannot split a panel with fewer than 2 timestamps")
    n_train = int(math.floor(ratio * T))
    n_train = min(max(n_train, 1), T - 1)

    def slice_panel(sl: slice) -> TimeSeriesPanel:
        return TimeSeriesPanel(stations=panel.stations, variables=panel.variables,
                               index=panel.index[sl],
                               values=panel.values[:, sl, :].copy(),
                               mask=panel.mask[:, sl, :].copy())

    return HoldoutSplit(train=slice_panel(slice(0, n_train)),
                        test=slice_panel(slice(n_train, T)), ratio=ratio)


def extract_matrix(panel: TimeSeriesPanel, station: str | StationId,
                   variables: list[str]) -> np.ndarray:
    """T x n matrix for one station, columns in the requested variable order.

    Raises MissingDataError naming the first masked (quarter, variable) cell.
    """
    name = station.name if isinstance(station, StationId) else station
    s_ix = None
    for i, st in enumerate(panel.stations):
        if st.name == name:
            s_ix = i
            break
    if s_ix is None:
        raise GwtsError(f"unknown station {name!r}")
    if not variables:
        raise GwtsError("at least one variable must be requested")
    v_ix = []
    for var in variables:
        if var not in panel.variables:
            raise GwtsError(f"unknown variable {var!r}")
        v_ix.append(panel.variables.index(var))
    block = panel.values[s_ix][:, v_ix]
    gaps = panel.mask[s_ix][:, v_ix]
    if gaps.any():
        t, j = np.argwhere(gaps)[0]
        raise MissingDataError(
            f"station {name!r} has a masked gap at {quarter_str(panel.index[t])} "
            f"for variable {variables[j]!r}")
    return block.copy()
