"""Vector autoregression estimation, lag-order selection, stability and forecasting.

The model is the standard p-lag system

    x_t = c + G_1 x_{t-1} + ... + G_p x_{t-p} + e_t

estimated equation by equation with ordinary least squares on a common
regressor matrix (intercept plus p lags of every variable). The solve goes
through a QR factorization of the regressor matrix rather than the normal
equations, for conditioning.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import jsonutil
from .errors import SampleSizeError, SingularityError, GwtsError

CRITERIA = ("AIC", "BIC", "HQ", "FPE")


@dataclass
class VarModel:
    """A fitted VAR(p) model.

    Attributes
    ----------
    c : (n,) intercept vector
    gammas : list of p (n, n) lag coefficient matrices
    sigma : (n, n) residual covariance, symmetric positive semidefinite
    residuals : (T - p, n) one row per effective observation
    var_names : names of the n variables, in column order
    p : lag order
    t_effective : number of effective observations, T - p
    presample : (p, n) first p rows of the data the model was fitted on;
        kept so bootstrap replicates and fitted-value reconstruction can
        rebuild the series recursively
    sigma_divisor : "df" for T_eff - (n p + 1), "ml" for T_eff
    """

    c: np.ndarray
    gammas: list[np.ndarray]
    sigma: np.ndarray
    residuals: np.ndarray
    var_names: list[str]
    p: int
    t_effective: int
    presample: np.ndarray
    sigma_divisor: str = "df"

    @property
    def n(self) -> int:
        return self.c.shape[0]

    def coefficient_matrix(self) -> np.ndarray:
        """Stacked (1 + n p, n) coefficient matrix: intercept row then lag blocks."""
        rows = [self.c[None, :]]
        for g in self.gammas:
            rows.append(g.T)
        return np.vstack(rows)

    def fitted(self) -> np.ndarray:
        """(T - p, n) fitted values; fitted + residuals rebuilds the observed tail."""
        data = self.data()
        return data[self.p:] - self.residuals

    def data(self) -> np.ndarray:
        """Reconstruct the (T, n) series the model was fitted on."""
        n, p = self.n, self.p
        out = np.empty((p + self.t_effective, n))
        out[:p] = self.presample
        for t in range(p, out.shape[0]):
            x = self.c.copy()
            for i, g in enumerate(self.gammas, start=1):
                x += g @ out[t - i]
            out[t] = x + self.residuals[t - p]
        return out


def _design_matrix(data: np.ndarray, p: int, t_start: int | None = None):
    """Regressor matrix Z and targets Y for a VAR(p) on `data`.

    Rows cover t = t_start .. T-1 (0-based); default t_start = p. Each Z row
    is [1, x_{t-1}, ..., x_{t-p}].
    """
    T, n = data.shape
    if t_start is None:
        t_start = p
    rows = T - t_start
    Z = np.empty((rows, 1 + n * p))
    Z[:, 0] = 1.0
    for i in range(1, p + 1):
        Z[:, 1 + (i - 1) * n: 1 + i * n] = data[t_start - i: T - i]
    Y = data[t_start:]
    return Z, Y


def fit_var(data: np.ndarray, p: int, var_names: list[str] | None = None,
            sigma_divisor: str = "df") -> VarModel:
    """Estimate a VAR(p) by equation-wise least squares.

    Parameters
    ----------
    data : (T, n) observation matrix, time along axis 0
    p : lag order, >= 1
    var_names : optional column names; defaults to x1..xn
    sigma_divisor : "df" divides the residual cross product by
        T_eff - (n p + 1); "ml" divides by T_eff

    Raises
    ------
    SampleSizeError
        if there are not enough rows to identify the coefficients
    SingularityError
        if the regressor matrix is rank deficient (names the columns)
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2:
        raise GwtsError("data must be a T x n matrix")
    if p < 1:
        raise GwtsError(f"lag order must be >= 1, got {p}")
    if sigma_divisor not in ("df", "ml"):
        raise GwtsError(f"unknown sigma divisor {sigma_divisor!r}")
    T, n = data.shape
    k = 1 + n * p
    if T - p < k:
        raise SampleSizeError(
            f"need at least {k + p} rows to fit a VAR({p}) on {n} variables, got {T}")
    if var_names is None:
        var_names = [f"x{i + 1}" for i in range(n)]
    if len(var_names) != n:
        raise GwtsError("var_names length does not match the number of columns")

    Z, Y = _design_matrix(data, p)
    Q, R = np.linalg.qr(Z)
    diag = np.abs(np.diag(R))
    scale = max(diag.max(), 1.0)
    bad = np.where(diag < 1e-10 * scale)[0]
    if bad.size:
        labels = []
        for j in bad:
            if j == 0:
                labels.append("intercept")
            else:
                lag, var = divmod(j - 1, n)
                labels.append(f"{var_names[var]}.l{lag + 1}")
        raise SingularityError(
            "regressor matrix is rank deficient; offending columns: " + ", ".join(labels))
    B = np.linalg.solve(R, Q.T @ Y)          # (k, n), column j = equation j
    resid = Y - Z @ B
    t_eff = Y.shape[0]
    div = t_eff - k if sigma_divisor == "df" else t_eff
    if div <= 0:
        raise SampleSizeError(f"non-positive residual degrees of freedom ({div})")
    sigma = resid.T @ resid / div
    sigma = 0.5 * (sigma + sigma.T)          # enforce exact symmetry

    c = B[0].copy()
    gammas = [B[1 + (i - 1) * n: 1 + i * n].T.copy() for i in range(1, p + 1)]
    return VarModel(c=c, gammas=gammas, sigma=sigma, residuals=resid,
                    var_names=list(var_names), p=p, t_effective=t_eff,
                    presample=data[:p].copy(), sigma_divisor=sigma_divisor)


@dataclass
class LagSelection:
    """Information-criterion table over candidate lag orders.

    scores[criterion][i] is the score at lag order candidates[i]; every
    criterion is evaluated on the common sample t = p_max+1 .. T so the
    scores are comparable across p.
    """

    candidates: list[int]
    scores: dict[str, list[float]]
    chosen_p: dict[str, int]
    consensus_p: int


def select_lag_order(data: np.ndarray, p_max: int = 8,
                     var_names: list[str] | None = None) -> LagSelection:
    """Score lag orders 1..p_max with AIC, BIC, HQ and FPE on a common sample.

    The consensus order is the majority vote across criteria, ties resolved
    toward the smallest order.
    """
    data = np.asarray(data, dtype=float)
    T, n = data.shape
    if p_max < 1:
        raise GwtsError(f"p_max must be >= 1, got {p_max}")
    t_star = T - p_max
    min_T = n * p_max + p_max + 2
    if T <= n * p_max + p_max + 1:
        raise SampleSizeError(
            f"lag selection up to p_max={p_max} on {n} variables needs T >= {min_T}, got {T}")

    candidates = list(range(1, p_max + 1))
    scores: dict[str, list[float]] = {name: [] for name in CRITERIA}
    for p in candidates:
        Z, Y = _design_matrix(data, p, t_start=p_max)
        B, *_ = np.linalg.lstsq(Z, Y, rcond=None)
        resid = Y - Z @ B
        sigma_ml = resid.T @ resid / t_star
        sign, logdet = np.linalg.slogdet(sigma_ml)
        if sign <= 0:
            raise SingularityError(f"residual covariance at p={p} is not positive definite")
        k_params = n * (n * p + 1)
        k_eq = n * p + 1
        scores["AIC"].append(logdet + 2.0 * k_params / t_star)
        scores["BIC"].append(logdet + np.log(t_star) * k_params / t_star)
        scores["HQ"].append(logdet + 2.0 * np.log(np.log(t_star)) * k_params / t_star)
        scores["FPE"].append(((t_star + k_eq) / (t_star - k_eq)) ** n * np.exp(logdet))

    chosen = {name: candidates[int(np.argmin(vals))] for name, vals in scores.items()}
    votes: dict[int, int] = {}
    for p in chosen.values():
        votes[p] = votes.get(p, 0) + 1
    top = max(votes.values())
    consensus = min(p for p, v in votes.items() if v == top)
    return LagSelection(candidates=candidates, scores=scores,
                        chosen_p=chosen, consensus_p=consensus)


def companion_matrix(gammas: list[np.ndarray]) -> np.ndarray:
    """(n p, n p) companion form of the lag polynomial."""
    n = gammas[0].shape[0]
    p = len(gammas)
    A = np.zeros((n * p, n * p))
    for i, g in enumerate(gammas):
        A[:n, i * n:(i + 1) * n] = g
    if p > 1:
        A[n:, :-n] = np.eye(n * (p - 1))
    return A


def companion_stability(model: VarModel) -> tuple[np.ndarray, bool]:
    """Eigenvalue moduli of the companion matrix, sorted descending.

    The model is stable iff the largest modulus is strictly below 1.
    """
    moduli = np.abs(np.linalg.eigvals(companion_matrix(model.gammas)))
    moduli = np.sort(moduli)[::-1]
    return moduli, bool(moduli[0] < 1.0)


def forecast(model: VarModel, history: np.ndarray, h: int) -> np.ndarray:
    """Iterate the fitted system forward h steps from the last p observations.

    history must hold exactly p rows in chronological order; forecasts are
    substituted for unknown future values as the recursion advances.
    """
    if h < 1:
        raise GwtsError(f"forecast horizon must be >= 1, got {h}")
    history = np.asarray(history, dtype=float)
    if history.shape != (model.p, model.n):
        raise GwtsError(
            f"history must be exactly ({model.p}, {model.n}), got {history.shape}")
    buf = np.vstack([history, np.zeros((h, model.n))])
    for step in range(h):
        t = model.p + step
        x = model.c.copy()
        for i, g in enumerate(model.gammas, start=1):
            x += g @ buf[t - i]
        buf[t] = x
    return buf[model.p:]


def simulate_var(c: np.ndarray, gammas: list[np.ndarray], chol_sigma: np.ndarray,
                 T: int, rng: np.random.Generator, burn: int = 100,
                 initial: np.ndarray | None = None) -> np.ndarray:
    """Draw a length-T sample path of a Gaussian VAR.

    chol_sigma is any matrix P with P P' = Sigma; innovations are P z with
    z standard normal. When `initial` is given it seeds the first p rows and
    no burn-in is applied.
    """
    n = c.shape[0]
    p = len(gammas)
    if initial is not None:
        total = T
        buf = np.empty((total, n))
        buf[:p] = initial
        start = p
    else:
        total = T + burn + p
        buf = np.empty((total, n))
        mu_guess = np.linalg.solve(np.eye(n) - sum(gammas), c)
        buf[:p] = mu_guess
        start = p
    z = rng.standard_normal((total - start, n))
    shocks = z @ chol_sigma.T
    for t in range(start, total):
        x = c + shocks[t - start]
        for i, g in enumerate(gammas, start=1):
            x += g @ buf[t - i]
        buf[t] = x
    return buf[-T:]


def model_to_json(model: VarModel) -> str:
    """Serialize a model to JSON with 17-significant-digit floats."""

    def arr(a: np.ndarray):
        return np.asarray(a, dtype=float).tolist()

    payload = {
        "format": "gwts-var-model",
        "version": 1,
        "var_names": model.var_names,
        "p": model.p,
        "t_effective": model.t_effective,
        "sigma_divisor": model.sigma_divisor,
        "c": arr(model.c),
        "gammas": [arr(g) for g in model.gammas],
        "sigma": arr(model.sigma),
        "residuals": arr(model.residuals),
        "presample": arr(model.presample),
    }
    return jsonutil.dumps(payload, indent=1)


def model_from_json(text: str) -> VarModel:
    """Inverse of model_to_json; reload is bit-faithful for finite floats."""
    doc = json.loads(text)
    if doc.get("format") != "gwts-var-model":
        raise GwtsError("not a serialized VAR model document")
    return VarModel(
        c=np.array(doc["c"], dtype=float),
        gammas=[np.array(g, dtype=float) for g in doc["gammas"]],
        sigma=np.array(doc["sigma"], dtype=float),
        residuals=np.array(doc["residuals"], dtype=float),
        var_names=list(doc["var_names"]),
        p=int(doc["p"]),
        t_effective=int(doc["t_effective"]),
        presample=np.array(doc["presample"], dtype=float),
        sigma_divisor=doc.get("sigma_divisor", "df"),
    )
