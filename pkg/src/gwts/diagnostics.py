"""Residual diagnostic battery for fitted VAR models.

Covers the adjusted multivariate Portmanteau test for serial correlation,
the multivariate ARCH-LM test for conditional heteroscedasticity, the
Jarque-Bera family (joint, skewness-only, kurtosis-only) for normality, and
the OLS-CUSUM empirical fluctuation process for structural stability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from .errors import DegenerateDataError, GwtsError, SampleSizeError, SingularityError
from .var_core import VarModel


@dataclass
class DiagnosticReport:
    test_name: str
    statistic: float
    df: float
    p_value: float
    alpha: float
    reject: bool

    def as_dict(self) -> dict:
        return {
            "test": self.test_name,
            "statistic": self.statistic,
            "df": self.df,
            "p_value": self.p_value,
            "alpha": self.alpha,
            "reject": self.reject,
        }


@dataclass
class EfpPath:
    """Per-equation OLS-CUSUM path on the unit interval.

    process[j] holds W_j(t) at t = 0, 1/T, ..., 1 (so T+1 points starting
    at exactly 0); boundary is the two-sided Brownian-bridge crossing value
    for the requested level.
    """

    var_names: list[str]
    t_grid: np.ndarray
    process: np.ndarray          # (n, T+1)
    boundary: float
    alpha: float
    crossed: list[bool]


def chi2_sf(x: float, df: float) -> float:
    """Upper tail of the chi-square distribution via the regularized
    incomplete gamma function (absolute accuracy ~1e-15)."""
    if x < 0:
        return 1.0
    return float(special.gammaincc(df / 2.0, x / 2.0))


def _report(name: str, stat: float, df: float, alpha: float) -> DiagnosticReport:
    p = chi2_sf(stat, df)
    return DiagnosticReport(test_name=name, statistic=float(stat), df=df,
                            p_value=p, alpha=alpha, reject=bool(p < alpha))


def _residual_autocovariances(resid: np.ndarray, h: int) -> list[np.ndarray]:
    T = resid.shape[0]
    centered = resid - resid.mean(axis=0)
    return [centered[j:].T @ centered[: T - j] / T for j in range(h + 1)]


def portmanteau_test(model: VarModel, h_lags: int = 16,
                     alpha: float = 0.05) -> DiagnosticReport:
    """Adjusted multivariate Portmanteau test of zero residual autocorrelation.

    Q = T^2 sum_{j=1..h} (T-j)^{-1} tr(C_j' C_0^{-1} C_j C_0^{-1}) with C_j the
    residual autocovariance at lag j; the statistic is chi-square with
    n^2 (h - p) degrees of freedom under the null.
    """
    if h_lags <= model.p:
        raise GwtsError(f"h_lags must exceed the lag order p={model.p}, got {h_lags}")
    resid = model.residuals
    T, n = resid.shape
    if h_lags >= T:
        raise SampleSizeError(f"h_lags={h_lags} requires more than {h_lags} residual rows, got {T}")
    covs = _residual_autocovariances(resid, h_lags)
    c0 = covs[0]
    try:
        c0_inv = np.linalg.inv(c0)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("lag-0 residual covariance is singular") from exc
    q = 0.0
    for j in range(1, h_lags + 1):
        cj = covs[j]
        q += np.trace(cj.T @ c0_inv @ cj @ c0_inv) / (T - j)
    q *= T * T
    df = n * n * (h_lags - model.p)
    return _report("portmanteau", q, df, alpha)


def _vech(mat: np.ndarray) -> np.ndarray:
    idx = np.tril_indices(mat.shape[0])
    return mat[idx]


def arch_test(model: VarModel, q_lags: int = 5, alpha: float = 0.05) -> DiagnosticReport:
    """Multivariate ARCH-LM test.

    Regresses vech(e_t e_t') on q of its own lags plus an intercept; the
    statistic is T n (n+1) R_m^2 / 2 with the multivariate R_m^2 computed from
    the residual covariance of that auxiliary regression, chi-square with
    q n^2 (n+1)^2 / 4 degrees of freedom.
    """
    if q_lags < 1:
        raise GwtsError(f"q_lags must be >= 1, got {q_lags}")
    resid = model.residuals
    T, n = resid.shape
    m = n * (n + 1) // 2
    rows = T - q_lags
    if rows <= q_lags * m + 1:
        raise SampleSizeError(
            f"ARCH test with q={q_lags} needs more than {q_lags + q_lags * m + 1} residual rows, got {T}")
    outer = np.empty((T, m))
    for t in range(T):
        outer[t] = _vech(np.outer(resid[t], resid[t]))
    Y = outer[q_lags:]
    Z = np.empty((rows, 1 + q_lags * m))
    Z[:, 0] = 1.0
    for i in range(1, q_lags + 1):
        Z[:, 1 + (i - 1) * m: 1 + i * m] = outer[q_lags - i: T - i]
    B, *_ = np.linalg.lstsq(Z, Y, rcond=None)
    U = Y - Z @ B
    Yc = Y - Y.mean(axis=0)
    omega = U.T @ U / rows
    omega0 = Yc.T @ Yc / rows
    try:
        ratio = np.linalg.solve(omega0, omega.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularityError("covariance of squared residuals is singular") from exc
    r2m = 1.0 - (2.0 / (n * (n + 1))) * np.trace(ratio)
    stat = 0.5 * rows * n * (n + 1) * r2m
    df = q_lags * n * n * (n + 1) ** 2 / 4.0
    return _report("arch", stat, df, alpha)


def normality_tests(model: VarModel, alpha: float = 0.05) -> list[DiagnosticReport]:
    """Jarque-Bera battery: joint test plus separate skewness and kurtosis tests.

    Residuals are centered and standardized with the Cholesky factor of their
    maximum-likelihood covariance; under normality T b1'b1 / 6 and
    T (b2-3)'(b2-3) / 24 are each chi-square(n) and their sum chi-square(2n).
    """
    resid = model.residuals
    T, n = resid.shape
    if T <= n + 1:
        raise SampleSizeError("too few residual rows for the normality battery")
    centered = resid - resid.mean(axis=0)
    sigma_ml = centered.T @ centered / T
    try:
        P = np.linalg.cholesky(sigma_ml)
    except np.linalg.LinAlgError as exc:
        raise SingularityError("residual covariance is not positive definite") from exc
    w = np.linalg.solve(P, centered.T).T
    b1 = (w ** 3).mean(axis=0)
    b2 = (w ** 4).mean(axis=0)
    s3 = T * (b1 @ b1) / 6.0
    s4 = T * ((b2 - 3.0) @ (b2 - 3.0)) / 24.0
    return [
        _report("jarque_bera", s3 + s4, 2 * n, alpha),
        _report("skewness", s3, n, alpha),
        _report("kurtosis", s4, n, alpha),
    ]


def cusum_boundary(alpha: float, tol: float = 1e-10) -> float:
    """Two-sided sup crossing boundary of the Brownian bridge.

    Solves 2 sum_{k>=1} (-1)^(k+1) exp(-2 k^2 L^2) = alpha; the series is
    evaluated to `tol` and the root bracketed with Brent's method.
    """
    if not 0 < alpha < 1:
        raise GwtsError(f"alpha must be in (0,1), got {alpha}")

    def crossing_prob(lam: float) -> float:
        total = 0.0
        for k in range(1, 1000):
            term = 2.0 * (-1.0) ** (k + 1) * np.exp(-2.0 * k * k * lam * lam)
            total += term
            if abs(term) < tol:
                break
        return total

    return float(optimize.brentq(lambda L: crossing_prob(L) - alpha, 0.2, 4.0,
                                 xtol=1e-12, rtol=1e-14))


def ols_cusum(model: VarModel, alpha: float = 0.05) -> EfpPath:
    """OLS-CUSUM empirical fluctuation process, one path per equation.

    W(k/T) = (sigma_hat sqrt(T))^{-1} sum_{i<=k} u_i where u are the OLS
    residuals of the equation and sigma_hat uses the residual degrees of
    freedom T - (n p + 1). The path starts at exactly 0 and, because every
    equation includes an intercept, returns to 0 at t = 1.
    """
    resid = model.residuals
    T, n = resid.shape
    k_eq = model.n * model.p + 1
    sig = np.sqrt((resid ** 2).sum(axis=0) / (T - k_eq))
    if np.any(sig <= 0) or not np.all(np.isfinite(sig)):
        raise DegenerateDataError("an equation has zero residual variance")
    lam = cusum_boundary(alpha)
    grid = np.arange(T + 1) / T
    proc = np.zeros((n, T + 1))
    proc[:, 1:] = np.cumsum(resid, axis=0).T / (sig[:, None] * np.sqrt(T))
    crossed = [bool(np.max(np.abs(proc[j])) > lam) for j in range(n)]
    return EfpPath(var_names=list(model.var_names), t_grid=grid, process=proc,
                   boundary=lam, alpha=alpha, crossed=crossed)


def efp_to_csv(path: EfpPath) -> str:
    """CSV rendering (t, one W column per equation, +/- boundary rows)."""
    header = "t," + ",".join(f"W_{name}" for name in path.var_names) + ",upper,lower"
    lines = [header]
    for i, t in enumerate(path.t_grid):
        vals = ",".join(f"{path.process[j, i]:.17g}" for j in range(len(path.var_names)))
        lines.append(f"{t:.17g},{vals},{path.boundary:.17g},{-path.boundary:.17g}")
    return "\n".join(lines) + "\n"
