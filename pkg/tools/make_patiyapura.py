"""Build the bundled single-station demo fixture (85 quarterly points).

The series is synthetic: innovations are drawn from a designed covariance,
then residualized against the realized lag regressors of the training window
so that the VAR(4) least-squares fit on the first 59 quarters reproduces the
reference coefficient system exactly. Seeds are searched until every
documented reference diagnostic lands inside its calibration window when run
through the shipped pipeline, and the innovation scale is bisected so the
rolling-origin shelf life comes out at the reference value.

Run from the repository root:  python tools/make_patiyapura.py
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from gwts import var_core, diagnostics, structural, shelflife  # noqa: E402
from gwts.var_core import _design_matrix  # noqa: E402

# ---------------------------------------------------------------- targets —
# reference coefficient system in (gwl, temperature, precipitation) indexing
C_REF = np.array([-6.714, 26.991, -7.485])
G_REF = [
    np.array([[0.094, -0.146, -0.127],
              [0.116, -0.301, -0.071],
              [-0.019, 0.473, -0.021]]),
    np.array([[0.011, 0.091, 0.056],
              [0.027, -0.182, -0.098],
              [0.019, -0.154, -0.022]]),
    np.array([[0.291, 0.039, -0.260],
              [-0.105, -0.195, -0.018],
              [-0.149, 0.029, 0.047]]),
    np.array([[0.031, 0.430, -0.046],
              [0.059, 0.658, 0.031],
              [-0.062, 0.047, 0.378]]),
]
P_LAG = 4
T_TOTAL, T_TRAIN = 85, 59

# innovation correlation structure (gwl, temp, precip); overall scale is
# calibrated afterwards against the shelf-life target
SDS = np.array([1.0, 0.8, 1.2])
CORR = np.array([
    [1.00, -0.20, 0.25],
    [-0.20, 1.00, -0.25],
    [0.25, -0.25, 1.00],
])
SIGMA0 = np.outer(SDS, SDS) * CORR

TARGETS = {
    "portmanteau": (0.1163, 0.016),
    "arch": (0.7252, 0.040),
    "skewness": (0.239, 0.040),
    "granger_max_p": 1.0e-4,
    "fevd_window": (0.13, 0.27),
    "shelf_life": 11,
}

# CSV column order used by the bundled fixture (also the Cholesky ordering
# for the structural analysis)
CSV_ORDER = [2, 1, 0]                      # precip, temp, gwl
CSV_NAMES = ["precipitation", "temperature", "gwl"]
GWL_IX, TEMP_IX, PRECIP_IX = 2, 1, 0       # indices in CSV order

MU = np.linalg.solve(np.eye(3) - sum(G_REF), C_REF)


def build_deviation_path(seed: int, max_iter: int = 200, tol: float = 1e-12):
    """Deviation-from-mean path D (85 x 3, design indexing) whose training
    window satisfies the exact-recovery orthogonality, at unit scale."""
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(SIGMA0)
    # presample deviations from a long warm-up run of the design system
    warm = var_core.simulate_var(C_REF, G_REF, chol, 300, rng)
    d_pre = warm[-P_LAG:] - MU
    e = rng.standard_normal((T_TOTAL - P_LAG, 3)) @ chol.T

    n_train_rows = T_TRAIN - P_LAG          # 55 effective training rows

    def build(e_cur):
        d = np.empty((T_TOTAL, 3))
        d[:P_LAG] = d_pre
        for t in range(P_LAG, T_TOTAL):
            acc = e_cur[t - P_LAG].copy()
            for i, g in enumerate(G_REF, start=1):
                acc += g @ d[t - i]
            d[t] = acc
        return d

    for _ in range(max_iter):
        d = build(e)
        x_train = MU + d[:T_TRAIN]
        Z, _ = _design_matrix(x_train, P_LAG)
        e_train = e[:n_train_rows]
        coef, *_ = np.linalg.lstsq(Z, e_train, rcond=None)
        proj = Z @ coef
        if np.max(np.abs(proj)) < tol:
            return build(e), e
        e = e.copy()
        e[:n_train_rows] = e_train - proj
    return None, None


def evaluate_train_criteria(x_csv_train: np.ndarray):
    """Run the shipped pipeline on the training window (CSV column order);
    returns None on a miss, else the diagnostics payload."""
    model = var_core.fit_var(x_csv_train, P_LAG, var_names=CSV_NAMES)

    port = diagnostics.portmanteau_test(model, 16)
    lo, hi = TARGETS["portmanteau"][0] - TARGETS["portmanteau"][1], \
        TARGETS["portmanteau"][0] + TARGETS["portmanteau"][1]
    if not lo <= port.p_value <= hi:
        return None

    skew = diagnostics.normality_tests(model)[1]
    lo, hi = TARGETS["skewness"][0] - TARGETS["skewness"][1], \
        TARGETS["skewness"][0] + TARGETS["skewness"][1]
    if not lo <= skew.p_value <= hi:
        return None

    arch = diagnostics.arch_test(model, 5)
    lo, hi = TARGETS["arch"][0] - TARGETS["arch"][1], \
        TARGETS["arch"][0] + TARGETS["arch"][1]
    if not lo <= arch.p_value <= hi:
        return None

    efp = diagnostics.ols_cusum(model, 0.05)
    if any(efp.crossed):
        return None

    sel = var_core.select_lag_order(x_csv_train, 8)
    if sel.consensus_p != 4 or set(sel.chosen_p.values()) != {4}:
        return None

    gr = structural.granger_test(x_csv_train, P_LAG,
                                 cause=["temperature"],
                                 effect=["gwl", "precipitation"],
                                 var_names=CSV_NAMES)
    if gr.p_value > TARGETS["granger_max_p"] or gr.p_value <= 0:
        return None

    fv = structural.fevd(model, 10)
    combined = fv.proportions[9, GWL_IX, PRECIP_IX] + fv.proportions[9, GWL_IX, TEMP_IX]
    lo, hi = TARGETS["fevd_window"]
    if not lo <= combined <= hi:
        return None

    moduli, stable = var_core.companion_stability(model)
    if not stable:
        return None

    return {
        "portmanteau": port.p_value, "arch": arch.p_value,
        "skewness": skew.p_value, "granger": gr.p_value,
        "fevd_combined": combined, "max_modulus": moduli[0],
    }


def score(payload) -> float:
    return (abs(payload["portmanteau"] - 0.1163) / 0.02
            + abs(payload["arch"] - 0.7252) / 0.05
            + abs(payload["skewness"] - 0.239) / 0.05
            + abs(np.log10(payload["granger"]) - np.log10(3.916e-5))
            + abs(payload["fevd_combined"] - 0.20) / 0.10)


def shelf_life_at(x_csv: np.ndarray, threshold: float = 0.05) -> int:
    fc = shelflife.VarForecaster(p=P_LAG)
    table = shelflife.rolling_origin_errors(x_csv, fc, min_train=T_TRAIN,
                                            h_max=T_TOTAL - T_TRAIN, target=GWL_IX)
    return shelflife.estimate_shelf_life(table, threshold).shelf_life_quarters


def calibrate_scale(d_path: np.ndarray) -> float | None:
    """Find an innovation scale whose shelf life equals the target, then
    return the midpoint of the scale interval that stays on target."""
    target = TARGETS["shelf_life"]

    def shelf(s):
        x = MU + s * d_path
        return shelf_life_at(x[:, CSV_ORDER])

    lo, hi = 0.01, 1.2
    s_lo, s_hi = shelf(lo), shelf(hi)
    if not (s_lo > target > s_hi or s_lo >= target >= s_hi):
        return None
    # bisect for largest s with shelf >= target, then for smallest with > target
    a, b = lo, hi
    for _ in range(40):
        mid = 0.5 * (a + b)
        if shelf(mid) >= target:
            a = mid
        else:
            b = mid
    upper_edge = a
    a2, b2 = lo, upper_edge
    for _ in range(40):
        mid = 0.5 * (a2 + b2)
        if shelf(mid) > target:
            a2 = mid
        else:
            b2 = mid
    lower_edge = b2
    s_mid = 0.5 * (lower_edge + upper_edge)
    return s_mid if shelf(s_mid) == target else None


def plausibility(x_csv: np.ndarray) -> bool:
    precip, temp, gwl = x_csv[:, PRECIP_IX], x_csv[:, TEMP_IX], x_csv[:, GWL_IX]
    return bool(precip.min() > 0.1 and gwl.min() > 1.0
                and 15.0 < temp.min() and temp.max() < 40.0)


def search(start: int, count: int, verbose: bool = True):
    best = None
    for seed in range(start, start + count):
        d, _ = build_deviation_path(seed)
        if d is None:
            continue
        x_train = (MU + d[:T_TRAIN])[:, CSV_ORDER]
        payload = evaluate_train_criteria(x_train)
        if payload is None:
            continue
        s = calibrate_scale(d)
        if s is None:
            continue
        x_full = (MU + s * d)[:, CSV_ORDER]
        if not plausibility(x_full):
            continue
        payload["seed"], payload["scale"] = seed, s
        payload["score"] = score(payload)
        if verbose:
            print(f"candidate seed={seed} scale={s:.4f} score={payload['score']:.3f} "
                  f"port={payload['portmanteau']:.4f} arch={payload['arch']:.4f} "
                  f"skew={payload['skewness']:.4f} granger={payload['granger']:.2e} "
                  f"fevd={payload['fevd_combined']:.3f}")
        if best is None or payload["score"] < best["score"]:
            best = payload
    return best


def emit_csv(x_csv: np.ndarray, path: Path):
    lines = ["station,date,variable,value,latitude,longitude"]
    lat, lon = 22.275, 73.44167
    year, quarter = 2000, 1
    for t in range(T_TOTAL):
        date = f"{year}-Q{quarter}"
        for v, name in enumerate(CSV_NAMES):
            lines.append(f"Patiyapura,{date},{name},{x_csv[t, v]:.4f},{lat},{lon}")
        quarter += 1
        if quarter == 5:
            year, quarter = year + 1, 1
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def verify_csv(path: Path):
    """Re-run every calibration window on the emitted file (round-trip gate)."""
    from gwts import dataio
    panel = dataio.load_panel(path)
    x = dataio.extract_matrix(panel, "Patiyapura", CSV_NAMES)
    assert x.shape == (85, 3)
    split_n = int(np.floor(0.7 * x.shape[0]))
    assert split_n == 59
    payload = evaluate_train_criteria(x[:split_n])
    assert payload is not None, "emitted fixture misses a diagnostics window"
    model = var_core.fit_var(x[:split_n], P_LAG, var_names=CSV_NAMES)
    c_gwl = model.c[GWL_IX]
    g1_own = model.gammas[0][GWL_IX, GWL_IX]
    assert abs(c_gwl - C_REF[0]) < 0.05, c_gwl
    assert abs(g1_own - G_REF[0][0, 0]) < 0.05, g1_own
    shelf = shelf_life_at(x)
    assert shelf == TARGETS["shelf_life"], shelf
    payload["shelf_life"] = shelf
    payload["c_gwl"] = c_gwl
    payload["g1_own"] = g1_own
    return payload


def main():
    start = int(sys.argv[1]) if len(sys.argv) > 1 else 0
    count = int(sys.argv[2]) if len(sys.argv) > 2 else 20000
    best = search(start, count)
    if best is None:
        print("no candidate found in range", file=sys.stderr)
        sys.exit(1)
    print("best:", best)
    d, _ = build_deviation_path(best["seed"])
    x_csv = (MU + best["scale"] * d)[:, CSV_ORDER]
    out = Path(__file__).resolve().parents[1] / "src" / "gwts" / "fixtures" / "patiyapura.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    emit_csv(x_csv, out)
    final = verify_csv(out)
    print("emitted + verified:", out)
    print(final)


if __name__ == "__main__":
    main()
