"""Copula directional dependence (CDD) between station pairs.

Each raw series is mapped to pseudo-observations u_i = rank(x_i)/(T+1); the
copula regression function r(u) = E[V | U = u] is estimated with a beta
regression (logit mean link, constant precision) whose Gaussian-transformed
errors are taken as independent, which reduces fitting to a plain beta
maximum likelihood. Two directional dependence estimators are computed:

  variance-ratio form   Var(r_hat(u_t)) / Var(v_t)        (reported)
  moment form           12 E[r_hat(u_t)^2] - 3            (stored)

They agree at the population level because pseudo-observations are uniform
with variance 1/12 and mean 1/2; the variance-ratio form is the safer
finite-sample estimate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize, special, stats

from .dataio import StationId, TimeSeriesPanel
from .errors import ConvergenceError, DegenerateDataError, GwtsError, SampleSizeError

_EDGE = 1e-10


@dataclass
class PseudoSeries:
    """Rank-transformed series with values strictly inside (0, 1)."""

    u: np.ndarray
    source: str = ""

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)

    def __len__(self) -> int:
        return self.u.shape[0]


@dataclass
class GcbrFit:
    """Maximum-likelihood beta regression of one pseudo-series on another."""

    beta0: float
    beta1: float
    phi: float
    loglik: float
    converged: bool
    fitted: np.ndarray
    n_iter: int


@dataclass
class CddResult:
    station_u: str
    station_v: str
    rho_u_to_v: float
    rho_v_to_u: float
    raw_u_to_v: float
    raw_v_to_u: float
    moment_u_to_v: float
    moment_v_to_u: float
    fit_u_to_v: GcbrFit
    fit_v_to_u: GcbrFit
    estimator_variant: str = "variance-ratio-form"


@dataclass
class NetworkEdge:
    station_u: str
    station_v: str
    rho_u_to_v: float
    rho_v_to_u: float


@dataclass
class DependencyNetwork:
    nodes: list[StationId]
    edges: list[NetworkEdge]
    threshold: float
    variable: str
    skipped_stations: list[str]


def pseudo_observations(x, source: str = "") -> PseudoSeries:
    """Rank transform rank(x_i)/(T+1) with average ranks for ties.

    The result lies strictly inside (0, 1) and depends on x only through its
    rank order, so any strictly increasing transform of x maps to the same
    pseudo-observations.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise GwtsError("pseudo_observations expects a 1-D series")
    if x.shape[0] < 3:
        raise SampleSizeError(f"need at least 3 observations, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise GwtsError("series contains non-finite values")
    ranks = stats.rankdata(x, method="average")
    return PseudoSeries(u=ranks / (x.shape[0] + 1.0), source=source)


def _guard_unit_interval(u: np.ndarray) -> np.ndarray:
    """Nudge values within 1e-10 of the boundary inward; the beta likelihood
    is undefined at exactly 0 or 1."""
    u = np.asarray(u, dtype=float).copy()
    u[u <= _EDGE] = _EDGE
    u[u >= 1.0 - _EDGE] = 1.0 - _EDGE
    return u


def beta_loglik(params: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    """Log-likelihood of v ~ Beta(mu phi, (1-mu) phi), logit(mu) = b0 + b1 u.

    params = (b0, b1, log phi).
    """
    b0, b1, logphi = params
    phi = np.exp(logphi)
    mu = special.expit(b0 + b1 * u)
    a = mu * phi
    b = (1.0 - mu) * phi
    return float(np.sum(special.gammaln(phi) - special.gammaln(a) - special.gammaln(b)
                        + (a - 1.0) * np.log(v) + (b - 1.0) * np.log1p(-v)))


def beta_loglik_grad(params: np.ndarray, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Analytic gradient of beta_loglik in (b0, b1, log phi)."""
    b0, b1, logphi = params
    phi = np.exp(logphi)
    mu = special.expit(b0 + b1 * u)
    a = mu * phi
    b = (1.0 - mu) * phi
    logit_v = np.log(v) - np.log1p(-v)
    dl_dmu = phi * (special.digamma(b) - special.digamma(a) + logit_v)
    w = dl_dmu * mu * (1.0 - mu)
    g0 = np.sum(w)
    g1 = np.sum(w * u)
    dl_dphi = (special.digamma(phi) - mu * special.digamma(a)
               - (1.0 - mu) * special.digamma(b)
               + mu * np.log(v) + (1.0 - mu) * np.log1p(-v))
    gphi = np.sum(dl_dphi) * phi
    return np.array([g0, g1, gphi])


_MAX_ITER = 200
_GRAD_TOL = 1e-8


def fit_gcbr(u: PseudoSeries | np.ndarray, v: PseudoSeries | np.ndarray) -> GcbrFit:
    """Fit the copula regression of v on u by beta-regression maximum likelihood.

    Starts from moment-matched values (OLS of logit(v) on u; precision from
    the residual variance) and runs a quasi-Newton search with the analytic
    gradient. Convergence means the gradient norm fell below 1e-8.

    Raises
    ------
    DegenerateDataError
        if v is (near-)constant, which leaves the precision unidentified
    ConvergenceError
        if the optimizer stops without satisfying the gradient tolerance;
        the exception carries the last iterate
    """
    uu = _guard_unit_interval(u.u if isinstance(u, PseudoSeries) else u)
    vv = _guard_unit_interval(v.u if isinstance(v, PseudoSeries) else v)
    if uu.shape != vv.shape:
        raise GwtsError("series lengths differ")
    if np.any((uu <= 0) | (uu >= 1) | (vv <= 0) | (vv >= 1)):
        raise GwtsError("pseudo-observations must lie strictly in (0, 1)")
    if np.var(vv) < 1e-12:
        raise DegenerateDataError("response series is (near-)constant")

    eta = np.log(vv) - np.log1p(-vv)
    X = np.column_stack([np.ones_like(uu), uu])
    beta_init, *_ = np.linalg.lstsq(X, eta, rcond=None)
    mu0 = special.expit(X @ beta_init)
    resvar = float(np.var(vv - mu0)) + 1e-10
    phi0 = max(float(np.mean(mu0 * (1.0 - mu0))) / resvar - 1.0, 2.0)
    x0 = np.array([beta_init[0], beta_init[1], np.log(phi0)])

    def objective(params):
        return -beta_loglik(params, uu, vv), -beta_loglik_grad(params, uu, vv)

    res = optimize.minimize(objective, x0, jac=True, method="L-BFGS-B",
                            options={"maxiter": _MAX_ITER, "gtol": _GRAD_TOL,
                                     "ftol": 1e-16})
    x, n_iter = res.x, int(res.nit)
    # L-BFGS-B stalls on its f-tolerance well before the gradient contract;
    # polish with damped Newton steps on the analytic gradient
    x, n_newton, grad_norm = _newton_polish(x, uu, vv, _MAX_ITER - n_iter)
    n_iter += n_newton
    converged = grad_norm < _GRAD_TOL
    if not converged and grad_norm > 1e-4:
        raise ConvergenceError(
            f"beta regression did not converge after {n_iter} iterations "
            f"(gradient norm {grad_norm:.3g})", last_iterate=x)
    b0, b1, logphi = x
    fitted = special.expit(b0 + b1 * uu)
    return GcbrFit(beta0=float(b0), beta1=float(b1), phi=float(np.exp(logphi)),
                   loglik=float(beta_loglik(x, uu, vv)), converged=bool(converged),
                   fitted=fitted, n_iter=n_iter)


def _newton_polish(x: np.ndarray, u: np.ndarray, v: np.ndarray,
                   budget: int) -> tuple[np.ndarray, int, float]:
    """Damped Newton refinement; the Hessian comes from central differences of
    the analytic gradient (3 parameters, so this is cheap and accurate)."""
    g = beta_loglik_grad(x, u, v)
    it = 0
    while it < max(budget, 10):
        gnorm = float(np.max(np.abs(g)))
        if gnorm < _GRAD_TOL:
            break
        it += 1
        h = 1e-6 * np.maximum(np.abs(x), 1.0)
        H = np.empty((3, 3))
        for j in range(3):
            step = np.zeros(3)
            step[j] = h[j]
            H[:, j] = (beta_loglik_grad(x + step, u, v)
                       - beta_loglik_grad(x - step, u, v)) / (2.0 * h[j])
        H = 0.5 * (H + H.T)
        try:
            delta = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            break
        ll0 = beta_loglik(x, u, v)
        lam = 1.0
        moved = False
        for _ in range(30):
            cand = x + lam * delta
            ll1 = beta_loglik(cand, u, v)
            if np.isfinite(ll1) and ll1 >= ll0 - 1e-13 * max(abs(ll0), 1.0):
                g_cand = beta_loglik_grad(cand, u, v)
                if np.max(np.abs(g_cand)) < np.max(np.abs(g)) or ll1 > ll0:
                    x, g, moved = cand, g_cand, True
                    break
            lam *= 0.5
        if not moved:
            break
    return x, it, float(np.max(np.abs(g)))


def _directional_rho(fit: GcbrFit, response: np.ndarray) -> tuple[float, float, float]:
    raw = float(np.var(fit.fitted, ddof=1) / np.var(response, ddof=1))
    moment = float(12.0 * np.mean(fit.fitted ** 2) - 3.0)
    return min(max(raw, 0.0), 1.0), raw, moment


def cdd(u: PseudoSeries, v: PseudoSeries) -> CddResult:
    """Copula directional dependence in both directions for one pair.

    rho(U -> V) is the share of Var(V) explained by the copula regression of
    V on U; rho(V -> U) swaps the roles. Values are clamped to [0, 1] with
    the raw ratios preserved.
    """
    fit_uv = fit_gcbr(u, v)
    fit_vu = fit_gcbr(v, u)
    uu = _guard_unit_interval(u.u)
    vv = _guard_unit_interval(v.u)
    rho_uv, raw_uv, mom_uv = _directional_rho(fit_uv, vv)
    rho_vu, raw_vu, mom_vu = _directional_rho(fit_vu, uu)
    return CddResult(station_u=u.source, station_v=v.source,
                     rho_u_to_v=rho_uv, rho_v_to_u=rho_vu,
                     raw_u_to_v=raw_uv, raw_v_to_u=raw_vu,
                     moment_u_to_v=mom_uv, moment_v_to_u=mom_vu,
                     fit_u_to_v=fit_uv, fit_v_to_u=fit_vu)


def cdd_series(x, y, name_x: str = "x", name_y: str = "y") -> CddResult:
    """CDD of two raw series: rank transform then cdd()."""
    return cdd(pseudo_observations(x, name_x), pseudo_observations(y, name_y))


def build_network(panel: TimeSeriesPanel, variable: str,
                  threshold: float = 0.95) -> DependencyNetwork:
    """Pairwise CDD network over every station with a complete series.

    An undirected edge is kept when either directional rho reaches the
    threshold. Stations with masked gaps in the chosen variable are skipped
    and listed in the result. Edges come out in lexicographic station order,
    independent of evaluation order.
    """
    if variable not in panel.variables:
        raise GwtsError(f"unknown variable {variable!r}")
    v_ix = panel.variables.index(variable)
    usable: list[tuple[str, np.ndarray]] = []
    skipped: list[str] = []
    for s_ix, st in enumerate(panel.stations):
        series = panel.values[s_ix, :, v_ix]
        if panel.mask[s_ix, :, v_ix].any():
            skipped.append(st.name)
            continue
        usable.append((st.name, series))
    if len(usable) < 2:
        raise GwtsError("need at least 2 stations with complete series")
    usable.sort(key=lambda item: item[0])
    pseudo = {name: pseudo_observations(series, name) for name, series in usable}

    edges: list[NetworkEdge] = []
    names = [name for name, _ in usable]
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            result = cdd(pseudo[names[i]], pseudo[names[j]])
            if max(result.rho_u_to_v, result.rho_v_to_u) >= threshold:
                edges.append(NetworkEdge(station_u=names[i], station_v=names[j],
                                         rho_u_to_v=result.rho_u_to_v,
                                         rho_v_to_u=result.rho_v_to_u))
    name_set = set(names)
    nodes = [st for st in panel.stations if st.name in name_set]
    return DependencyNetwork(nodes=nodes, edges=edges, threshold=threshold,
                             variable=variable, skipped_stations=skipped)


def network_to_csv(net: DependencyNetwork) -> str:
    lines = ["station_u,station_v,rho_uv,rho_vu"]
    for e in net.edges:
        lines.append(f"{e.station_u},{e.station_v},{e.rho_u_to_v:.17g},{e.rho_v_to_u:.17g}")
    return "\n".join(lines) + "\n"


def network_to_geojson(net: DependencyNetwork) -> dict:
    """FeatureCollection: Point per station with coordinates, LineString per
    edge whose endpoints both carry coordinates."""
    coords = {st.name: (st.longitude, st.latitude) for st in net.nodes
              if st.latitude is not None and st.longitude is not None}
    features = []
    for st in net.nodes:
        if st.name not in coords:
            continue
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": list(coords[st.name])},
            "properties": {"station": st.name},
        })
    for e in net.edges:
        if e.station_u not in coords or e.station_v not in coords:
            continue
        features.append({
            "type": "Feature",
            "geometry": {"type": "LineString",
                         "coordinates": [list(coords[e.station_u]),
                                         list(coords[e.station_v])]},
            "properties": {"station_u": e.station_u, "station_v": e.station_v,
                           "rho_uv": e.rho_u_to_v, "rho_vu": e.rho_v_to_u},
        })
    return {"type": "FeatureCollection", "features": features}
