"""Forecaster-agnostic model shelf-life estimation.

A forecaster is retrained at every rolling origin; its absolute percentage
errors are recorded per horizon, an ordinary least-squares line of mean APE
on horizon is fitted, and the shelf life is the largest whole horizon at
which the line stays at or below the error threshold (default 5%).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import ComparisonError, GwtsError, SampleSizeError
from .var_core import VarModel, fit_var, forecast


class Forecaster(Protocol):
    """Anything that can train on a history matrix and forecast h rows."""

    name: str

    def train(self, history: np.ndarray) -> None: ...

    def predict(self, h: int) -> np.ndarray: ...


class VarForecaster:
    """VAR(p) point forecaster; refits from scratch on each training window."""

    def __init__(self, p: int = 4):
        if p < 1:
            raise GwtsError(f"lag order must be >= 1, got {p}")
        self.p = p
        self.name = f"var({p})"
        self._model: VarModel | None = None
        self._tail: np.ndarray | None = None

    def train(self, history: np.ndarray) -> None:
        history = np.asarray(history, dtype=float)
        self._model = fit_var(history, self.p)
        self._tail = history[-self.p:]

    def predict(self, h: int) -> np.ndarray:
        if self._model is None:
            raise GwtsError("train() must be called before predict()")
        return forecast(self._model, self._tail, h)


class SeasonalNaiveForecaster:
    """Repeats the value observed one seasonal period earlier.

    predict(h) returns x(T + h - period * ceil(h / period)); with period 1
    this degenerates to repeat-last-value.
    """

    def __init__(self, period: int = 4):
        if period < 1:
            raise GwtsError(f"period must be >= 1, got {period}")
        self.period = period
        self.name = f"seasonal-naive({period})"
        self._tail: np.ndarray | None = None

    def train(self, history: np.ndarray) -> None:
        history = np.asarray(history, dtype=float)
        if history.ndim == 1:
            history = history[:, None]
        if history.shape[0] < self.period:
            raise SampleSizeError(
                f"history of {history.shape[0]} rows is shorter than period {self.period}")
        self._tail = history[-self.period:]

    def predict(self, h: int) -> np.ndarray:
        if self._tail is None:
            raise GwtsError("train() must be called before predict()")
        if h < 1:
            raise GwtsError(f"horizon must be >= 1, got {h}")
        reps = int(np.ceil(h / self.period))
        return np.tile(self._tail, (reps, 1))[:h]


@dataclass
class ApeRow:
    origin: int          # number of training points for this origin
    horizon: int
    ape: float           # APE of the target variable
    ape_all: list[float]
    ape_mean: float      # mean APE across all variables


@dataclass
class ApeTable:
    rows: list[ApeRow]
    target: int
    forecaster_name: str
    h_max: int
    excluded_zero_actual: int = 0

    def horizons(self) -> list[int]:
        return sorted({r.horizon for r in self.rows})

    def mean_ape_by_horizon(self) -> tuple[np.ndarray, np.ndarray]:
        hs = np.array(self.horizons(), dtype=float)
        means = np.array([
            np.mean([r.ape for r in self.rows if r.horizon == h]) for h in hs
        ])
        return hs, means


@dataclass
class ShelfLifeResult:
    ape_table: ApeTable
    intercept: float
    slope: float
    threshold: float
    shelf_life_quarters: int
    censored: bool
    forecaster_name: str
    regression_mode: str = "horizon-means"


def rolling_origin_errors(series: np.ndarray, forecaster: Forecaster,
                          min_train: int, h_max: int, target: int = 0) -> ApeTable:
    """Out-of-bag forecast errors over every rolling origin.

    For each origin o = min_train .. T-1 the forecaster trains on rows
    1..o and forecasts h = 1 .. min(h_max, T-o); the APE of the target
    variable is |actual - forecast| / |actual|. Evaluation points with a
    zero actual are excluded and counted.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim == 1:
        series = series[:, None]
    T, n = series.shape
    if not 0 <= target < n:
        raise GwtsError(f"target index {target} out of range for {n} variables")
    if h_max < 1:
        raise GwtsError(f"h_max must be >= 1, got {h_max}")
    if min_train + h_max > T:
        raise SampleSizeError(
            f"min_train + h_max = {min_train + h_max} exceeds series length {T}")
    rows: list[ApeRow] = []
    excluded = 0
    for origin in range(min_train, T):
        span = min(h_max, T - origin)
        forecaster.train(series[:origin])
        pred = np.asarray(forecaster.predict(span), dtype=float)
        if pred.ndim == 1:
            pred = pred[:, None]
        for h in range(1, span + 1):
            actual = series[origin + h - 1]
            if actual[target] == 0.0:
                excluded += 1
                continue
            with np.errstate(divide="ignore", invalid="ignore"):
                ape_all = np.abs(actual - pred[h - 1]) / np.abs(actual)
            finite = ape_all[np.isfinite(ape_all)]
            rows.append(ApeRow(origin=origin, horizon=h,
                               ape=float(ape_all[target]),
                               ape_all=[float(a) for a in ape_all],
                               ape_mean=float(finite.mean()) if finite.size else float("nan")))
    return ApeTable(rows=rows, target=target, forecaster_name=forecaster.name,
                    h_max=h_max, excluded_zero_actual=excluded)


def estimate_shelf_life(ape: ApeTable, threshold: float = 0.05,
                        regression_mode: str = "horizon-means") -> ShelfLifeResult:
    """Fit APE = a + b h and report the largest whole h with a + b h <= threshold.

    regression_mode "horizon-means" (default) regresses the per-horizon mean
    APE on h; "pooled" regresses every (origin, horizon) row. When the line
    never rises above the threshold inside the evaluated range the result is
    censored at the largest evaluated horizon.
    """
    if threshold < 0:
        raise GwtsError(f"threshold must be >= 0, got {threshold}")
    if regression_mode not in ("horizon-means", "pooled"):
        raise GwtsError(f"unknown regression mode {regression_mode!r}")
    if not ape.rows:
        raise SampleSizeError("APE table is empty after exclusions")
    if regression_mode == "horizon-means":
        hs, ys = ape.mean_ape_by_horizon()
    else:
        hs = np.array([r.horizon for r in ape.rows], dtype=float)
        ys = np.array([r.ape for r in ape.rows], dtype=float)
    if np.unique(hs).size < 2:
        raise SampleSizeError("need at least 2 distinct horizons to fit a line")
    X = np.column_stack([np.ones_like(hs), hs])
    (a, b), *_ = np.linalg.lstsq(X, ys, rcond=None)

    h_top = int(max(ape.horizons()))
    censored = False
    if b > 0:
        if a > threshold:
            shelf = 0
        else:
            shelf = int(np.floor((threshold - a) / b + 1e-12))
            if shelf >= h_top:
                shelf, censored = h_top, True
    else:
        # non-increasing line: either always below the threshold (censored at
        # the evaluated edge) or it dips below it at some point and stays there
        if a <= threshold:
            shelf, censored = h_top, True
        elif b == 0:
            shelf = 0
        else:
            first_ok = int(np.ceil((threshold - a) / b))
            shelf, censored = (h_top, True) if first_ok <= h_top else (0, False)
    return ShelfLifeResult(ape_table=ape, intercept=float(a), slope=float(b),
                           threshold=threshold, shelf_life_quarters=shelf,
                           censored=censored, forecaster_name=ape.forecaster_name,
                           regression_mode=regression_mode)


def fitted_ape_at(result: ShelfLifeResult, h: float) -> float:
    return result.intercept + result.slope * h


def compare_shelf_lives(results: list[ShelfLifeResult]) -> list[ShelfLifeResult]:
    """Rank results by shelf life, longest first; ties break toward the lower
    fitted APE at the shelf-life horizon. All results must share a threshold."""
    if len(results) < 2:
        raise ComparisonError("need at least 2 results to compare")
    thresholds = {r.threshold for r in results}
    if len(thresholds) > 1:
        raise ComparisonError(f"mismatched thresholds: {sorted(thresholds)}")
    return sorted(results,
                  key=lambda r: (-r.shelf_life_quarters,
                                 fitted_ape_at(r, r.shelf_life_quarters)))


def ape_to_csv(ape: ApeTable) -> str:
    lines = ["origin,horizon,ape"]
    for r in ape.rows:
        lines.append(f"{r.origin},{r.horizon},{r.ape:.17g}")
    return "\n".join(lines) + "\n"
