"""Structural analysis of a fitted VAR: Granger causality, orthogonalized
impulse responses with bootstrap bands, and forecast-error variance
decomposition.

Identification is recursive (Cholesky) in the column order of the data, so
permuting the variables changes the shock attribution; callers pick the
ordering by arranging columns.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .diagnostics import chi2_sf
from .errors import GwtsError, SingularityError
from .var_core import VarModel, _design_matrix, companion_stability, fit_var
from scipy import special


@dataclass
class GrangerReport:
    cause: list[str]
    effect: list[str]
    statistic: float
    df: tuple[int, int]
    p_value: float
    alpha: float
    reject: bool


@dataclass
class IrfResult:
    """Orthogonalized impulse responses.

    responses[h][j][k] is the response of variable j, h steps after a one
    standard deviation shock to variable k; at h=0 it equals the Cholesky
    factor of the residual covariance. lower/upper are percentile bootstrap
    bands (present when n_boot > 0), widened where needed so they always
    bracket the point estimate.
    """

    var_names: list[str]
    horizons: np.ndarray
    responses: np.ndarray            # (H+1, n, n)
    lower: np.ndarray | None
    upper: np.ndarray | None
    ci_level: float
    n_boot: int
    stable: bool


@dataclass
class FevdResult:
    """proportions[h][j][k]: share of variable j's (h+1)-step forecast-error
    variance attributed to orthogonal shock k; rows over k sum to one."""

    var_names: list[str]
    proportions: np.ndarray          # (H, n, n)


def f_sf(x: float, d1: float, d2: float) -> float:
    """Upper tail of the F distribution via the regularized incomplete beta."""
    if x <= 0:
        return 1.0
    return float(special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * x)))


def granger_test(data: np.ndarray, p: int, cause, effect,
                 var_names: list[str] | None = None,
                 alpha: float = 0.05) -> GrangerReport:
    """Wald test (F form) that all lag coefficients of the cause variables are
    zero in the effect equations of a VAR(p) fitted to `data`.

    cause/effect may hold names (resolved against var_names) or column
    indices; the sets must be disjoint and non-empty. The degrees of freedom
    are (p * |cause| * |effect|, n * (T_eff - n p - 1)).
    """
    data = np.asarray(data, dtype=float)
    T, n = data.shape
    if var_names is None:
        var_names = [f"x{i + 1}" for i in range(n)]

    def resolve(spec) -> list[int]:
        out = []
        for item in spec:
            if isinstance(item, str):
                if item not in var_names:
                    raise GwtsError(f"unknown variable {item!r}")
                out.append(var_names.index(item))
            else:
                idx = int(item)
                if not 0 <= idx < n:
                    raise GwtsError(f"variable index {idx} out of range")
                out.append(idx)
        return out

    cause_ix = resolve(cause)
    effect_ix = resolve(effect)
    if not cause_ix or not effect_ix:
        raise GwtsError("cause and effect sets must be non-empty")
    if set(cause_ix) & set(effect_ix):
        raise GwtsError("cause and effect sets must be disjoint")

    model = fit_var(data, p, var_names=var_names)
    Z, _ = _design_matrix(data, p)
    t_eff = model.t_effective
    k_eq = n * p + 1
    zz_inv = np.linalg.inv(Z.T @ Z)
    # ML-divisor covariance keeps the small-sample F in line with the classic
    # restricted-vs-unrestricted comparison
    sigma_ml = model.residuals.T @ model.residuals / t_eff

    B = model.coefficient_matrix()           # (k_eq, n); column = equation
    rows = []                                # positions of restricted coefficients
    values = []
    for e in effect_ix:
        for c_ix in cause_ix:
            for lag in range(1, p + 1):
                coef_row = 1 + (lag - 1) * n + c_ix
                rows.append((e, coef_row))
                values.append(B[coef_row, e])
    N = len(rows)
    rvec = np.array(values)
    cov = np.empty((N, N))
    for a, (ea, ra) in enumerate(rows):
        for b, (eb, rb) in enumerate(rows):
            cov[a, b] = sigma_ml[ea, eb] * zz_inv[ra, rb]
    try:
        w = float(rvec @ np.linalg.solve(cov, rvec))
    except np.linalg.LinAlgError as exc:
        raise SingularityError("restriction covariance is singular") from exc
    df1 = N
    df2 = n * (t_eff - k_eq)
    stat = w / df1
    pval = f_sf(stat, df1, df2)
    return GrangerReport(cause=[var_names[i] for i in cause_ix],
                         effect=[var_names[i] for i in effect_ix],
                         statistic=stat, df=(df1, df2), p_value=pval,
                         alpha=alpha, reject=bool(pval < alpha))


def ma_matrices(model: VarModel, H: int) -> np.ndarray:
    """MA(infinity) coefficient matrices Psi_0..Psi_H of the fitted system."""
    n, p = model.n, model.p
    psi = np.zeros((H + 1, n, n))
    psi[0] = np.eye(n)
    for h in range(1, H + 1):
        acc = np.zeros((n, n))
        for i in range(1, min(h, p) + 1):
            acc += model.gammas[i - 1] @ psi[h - i]
        psi[h] = acc
    return psi


def orthogonalized_responses(model: VarModel, H: int) -> np.ndarray:
    """Theta_h = Psi_h P for h = 0..H, with P the lower Cholesky factor of Sigma."""
    try:
        P = np.linalg.cholesky(model.sigma)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("residual covariance is not positive definite") from exc
    return ma_matrices(model, H) @ P


def irf(model: VarModel, H: int, n_boot: int = 100, ci: float = 0.95,
        seed: int | None = None, allow_unstable: bool = False) -> IrfResult:
    """Orthogonalized impulse responses with residual-bootstrap bands.

    The bootstrap is recursive-design: residual rows are resampled with
    replacement (after centering), a replicate series is rebuilt from the
    model's presample, the VAR is refitted and its responses collected.
    Replicate b draws from an independent substream spawned from `seed`, so
    results are identical whether replicates run sequentially or in parallel.
    """
    if H < 1:
        raise GwtsError(f"IRF horizon must be >= 1, got {H}")
    if n_boot > 0 and seed is None:
        raise GwtsError("a seed is required when bootstrap bands are requested")
    _, stable = companion_stability(model)
    if not stable and not allow_unstable:
        raise GwtsError("model is not stable; pass allow_unstable=True to force IRF")
    if not stable:
        warnings.warn("computing IRF for an unstable model", RuntimeWarning)

    point = orthogonalized_responses(model, H)
    lower = upper = None
    if n_boot > 0:
        n, p = model.n, model.p
        resid = model.residuals - model.residuals.mean(axis=0)
        t_eff = resid.shape[0]
        draws = np.empty((n_boot, H + 1, n, n))
        children = np.random.SeedSequence(seed).spawn(n_boot)
        for b in range(n_boot):
            rng = np.random.default_rng(children[b])
            pick = rng.integers(0, t_eff, size=t_eff)
            series = np.empty((p + t_eff, n))
            series[:p] = model.presample
            shocks = resid[pick]
            for t in range(p, p + t_eff):
                x = model.c + shocks[t - p]
                for i, g in enumerate(model.gammas, start=1):
                    x += g @ series[t - i]
                series[t] = x
            try:
                refit = fit_var(series, p, var_names=model.var_names,
                                sigma_divisor=model.sigma_divisor)
                draws[b] = orthogonalized_responses(refit, H)
            except (SingularityError, np.linalg.LinAlgError):
                draws[b] = point
        tail = (1.0 - ci) / 2.0
        lower = np.quantile(draws, tail, axis=0)
        upper = np.quantile(draws, 1.0 - tail, axis=0)
        # percentile bands can miss the point estimate in small samples;
        # the result contract requires bracketing
        lower = np.minimum(lower, point)
        upper = np.maximum(upper, point)
    return IrfResult(var_names=list(model.var_names),
                     horizons=np.arange(H + 1), responses=point,
                     lower=lower, upper=upper, ci_level=ci,
                     n_boot=n_boot, stable=stable)


def fevd(model: VarModel, H: int) -> FevdResult:
    """Forecast-error variance decomposition at horizons 1..H."""
    if H < 1:
        raise GwtsError(f"FEVD horizon must be >= 1, got {H}")
    theta = orthogonalized_responses(model, H - 1)
    sq = theta ** 2
    cum = np.cumsum(sq, axis=0)                       # (H, n, n)
    totals = cum.sum(axis=2, keepdims=True)
    return FevdResult(var_names=list(model.var_names), proportions=cum / totals)


def irf_to_csv(result: IrfResult) -> str:
    """Tidy CSV: horizon, impulse, response, value, lower, upper."""
    lines = ["horizon,impulse,response,value,lower,upper"]
    names = result.var_names
    for h in result.horizons:
        for k, imp in enumerate(names):
            for j, resp in enumerate(names):
                v = result.responses[h, j, k]
                lo = result.lower[h, j, k] if result.lower is not None else ""
                up = result.upper[h, j, k] if result.upper is not None else ""
                lo_s = f"{lo:.17g}" if lo != "" else ""
                up_s = f"{up:.17g}" if up != "" else ""
                lines.append(f"{h},{imp},{resp},{v:.17g},{lo_s},{up_s}")
    return "\n".join(lines) + "\n"


def fevd_to_csv(result: FevdResult) -> str:
    """Tidy CSV: horizon, variable, shock, proportion."""
    lines = ["horizon,variable,shock,proportion"]
    names = result.var_names
    H = result.proportions.shape[0]
    for h in range(H):
        for j, var in enumerate(names):
            for k, shock in enumerate(names):
                lines.append(f"{h + 1},{var},{shock},{result.proportions[h, j, k]:.17g}")
    return "\n".join(lines) + "\n"
