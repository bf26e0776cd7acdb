"""Granger causality, impulse responses, variance decomposition."""

import numpy as np
import pytest

from gwts.errors import GwtsError
from gwts.structural import (fevd, fevd_to_csv, granger_test, irf, irf_to_csv,
                             ma_matrices, orthogonalized_responses)
from gwts.var_core import fit_var, simulate_var

from conftest import random_stable_gamma, random_spd


def fitted_model(rng, n=2, p=1, T=300, sigma=None):
    sigma = np.eye(n) if sigma is None else sigma
    data = simulate_var(np.zeros(n), [random_stable_gamma(rng, n, 0.5)] * p,
                        np.linalg.cholesky(sigma), T, rng)
    return fit_var(data, p)


class TestIrf:
    def test_var1_closed_form(self, rng):
        # Theta_h = Gamma^h P exactly for a VAR(1)
        for _ in range(5):
            model = fitted_model(rng, n=3, T=400, sigma=random_spd(rng, 3))
            result = irf(model, H=20, n_boot=0, allow_unstable=True)
            P = np.linalg.cholesky(model.sigma)
            g = model.gammas[0]
            expect = P.copy()
            for h in range(21):
                np.testing.assert_allclose(result.responses[h], expect, atol=1e-10)
                expect = g @ expect

    def test_white_noise_identity_then_zero(self, rng):
        model = fitted_model(rng, n=2)
        model.gammas = [np.zeros((2, 2))]
        model.sigma = np.eye(2)
        result = irf(model, H=5, n_boot=0)
        np.testing.assert_allclose(result.responses[0], np.eye(2), atol=1e-14)
        assert np.max(np.abs(result.responses[1:])) == 0.0

    def test_h0_equals_cholesky_lower(self, rng):
        model = fitted_model(rng, n=3, sigma=random_spd(rng, 3))
        result = irf(model, H=4, n_boot=0)
        P = np.linalg.cholesky(model.sigma)
        np.testing.assert_allclose(result.responses[0], P, atol=1e-12)
        assert np.allclose(P, np.tril(P))

    def test_stable_model_decays(self, rng):
        model = fitted_model(rng, n=2, T=500)
        psi = ma_matrices(model, 200)
        assert np.max(np.abs(psi[200])) < 1e-6

    def test_bootstrap_reproducible_and_bracketing(self, rng):
        model = fitted_model(rng, n=2, T=250)
        r1 = irf(model, H=8, n_boot=25, seed=99)
        r2 = irf(model, H=8, n_boot=25, seed=99)
        assert np.array_equal(r1.lower, r2.lower)
        assert np.array_equal(r1.upper, r2.upper)
        assert np.all(r1.lower <= r1.responses + 1e-15)
        assert np.all(r1.upper >= r1.responses - 1e-15)
        r3 = irf(model, H=8, n_boot=25, seed=100)
        assert not np.array_equal(r1.lower, r3.lower)

    def test_seed_required_for_bootstrap(self, rng):
        model = fitted_model(rng)
        with pytest.raises(GwtsError, match="seed"):
            irf(model, H=4, n_boot=10)

    def test_unstable_requires_flag(self, rng):
        model = fitted_model(rng)
        model.gammas = [1.05 * np.eye(2)]
        with pytest.raises(GwtsError, match="allow_unstable"):
            irf(model, H=4, n_boot=0)
        with pytest.warns(RuntimeWarning):
            result = irf(model, H=4, n_boot=0, allow_unstable=True)
        assert not result.stable

    def test_csv_shape(self, rng):
        model = fitted_model(rng)
        text = irf_to_csv(irf(model, H=3, n_boot=10, seed=1))
        lines = text.strip().split("\n")
        assert lines[0] == "horizon,impulse,response,value,lower,upper"
        assert len(lines) == 1 + 4 * 4


class TestFevd:
    def test_rows_sum_to_one(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 5))
            model = fitted_model(rng, n=n, T=300, sigma=random_spd(rng, n))
            result = fevd(model, H=12)
            np.testing.assert_allclose(result.proportions.sum(axis=2), 1.0, atol=1e-10)
            assert np.all(result.proportions >= 0.0)
            assert np.all(result.proportions <= 1.0 + 1e-12)

    def test_decoupled_system_own_share_one(self, rng):
        model = fitted_model(rng, n=2)
        model.gammas = [np.diag([0.5, -0.3])]
        model.sigma = np.diag([1.0, 2.0])
        result = fevd(model, H=10)
        for h in range(10):
            np.testing.assert_allclose(np.diag(result.proportions[h]), 1.0, atol=1e-12)

    def test_h1_formula(self, rng):
        model = fitted_model(rng, n=3, sigma=random_spd(rng, 3))
        result = fevd(model, H=1)
        P = np.linalg.cholesky(model.sigma)
        expect = P ** 2 / (P ** 2).sum(axis=1, keepdims=True)
        np.testing.assert_allclose(result.proportions[0], expect, atol=1e-12)

    def test_permute_and_unpermute_recovers(self, rng):
        data = simulate_var(np.zeros(3), [random_stable_gamma(rng, 3, 0.6)],
                            np.linalg.cholesky(random_spd(rng, 3)), 400, rng)
        base = fevd(fit_var(data, 1), H=5).proportions
        perm = [2, 0, 1]
        permuted = fevd(fit_var(data[:, perm], 1), H=5).proportions
        # a genuine reordering changes the decomposition...
        assert not np.allclose(base, permuted, atol=1e-6)
        # ...but permuting back recovers the identity ordering exactly
        inv = np.argsort(perm)
        recovered = fevd(fit_var(data[:, perm][:, inv], 1), H=5).proportions
        np.testing.assert_allclose(base, recovered, atol=1e-12)

    def test_csv_shape(self, rng):
        model = fitted_model(rng)
        lines = fevd_to_csv(fevd(model, H=3)).strip().split("\n")
        assert lines[0] == "horizon,variable,shock,proportion"
        assert len(lines) == 1 + 3 * 4


class TestGranger:
    def test_directional_dgp(self, rng):
        # x drives y with beta = 0.8; y does not drive x
        hits_xy, hits_yx = 0, 0
        n_sims = 20
        for _ in range(n_sims):
            T = 500
            e = rng.standard_normal((T, 2))
            data = np.zeros((T, 2))
            for t in range(1, T):
                data[t, 0] = 0.5 * data[t - 1, 0] + e[t, 0]
                data[t, 1] = 0.5 * data[t - 1, 1] + 0.8 * data[t - 1, 0] + e[t, 1]
            p_xy = granger_test(data, 1, cause=["x1"], effect=["x2"]).p_value
            p_yx = granger_test(data, 1, cause=["x2"], effect=["x1"]).p_value
            hits_xy += p_xy < 0.01
            hits_yx += p_yx > 0.05
        assert hits_xy >= 18
        assert hits_yx >= 18

    def test_multi_effect_sets(self, rng):
        data = simulate_var(np.zeros(3), [random_stable_gamma(rng, 3, 0.5)],
                            np.eye(3), 400, rng)
        rep = granger_test(data, 2, cause=["x2"], effect=["x1", "x3"])
        assert rep.df[0] == 2 * 1 * 2
        assert 0.0 <= rep.p_value <= 1.0
        assert rep.cause == ["x2"] and set(rep.effect) == {"x1", "x3"}

    def test_overlap_rejected(self, rng):
        data = rng.standard_normal((100, 2))
        with pytest.raises(GwtsError, match="disjoint"):
            granger_test(data, 1, cause=["x1"], effect=["x1"])

    def test_unknown_variable_rejected(self, rng):
        data = rng.standard_normal((100, 2))
        with pytest.raises(GwtsError, match="unknown"):
            granger_test(data, 1, cause=["nope"], effect=["x1"])

    def test_size_under_null(self, rng):
        # independent series: rejection at 5% should be near nominal
        rejections = 0
        n_sims = 100
        for _ in range(n_sims):
            data = simulate_var(np.zeros(2), [np.diag([0.4, 0.4])], np.eye(2), 400, rng)
            rejections += granger_test(data, 1, cause=["x1"], effect=["x2"]).reject
        assert 0.005 <= rejections / n_sims <= 0.12
