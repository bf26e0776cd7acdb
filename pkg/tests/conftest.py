import numpy as np
import pytest

from gwts.var_core import VarModel


def model_from_residuals(resid: np.ndarray, p: int = 1) -> VarModel:
    """Wrap a raw residual matrix in a VarModel so the diagnostic battery can
    be exercised against residual processes with known properties."""
    resid = np.asarray(resid, dtype=float)
    T, n = resid.shape
    return VarModel(
        c=np.zeros(n),
        gammas=[np.zeros((n, n)) for _ in range(p)],
        sigma=np.cov(resid, rowvar=False, ddof=0),
        residuals=resid,
        var_names=[f"x{i + 1}" for i in range(n)],
        p=p,
        t_effective=T,
        presample=np.zeros((p, n)),
    )


def random_stable_gamma(rng: np.random.Generator, n: int, radius: float = 0.7) -> np.ndarray:
    """Random coefficient matrix rescaled to the requested spectral radius."""
    g = rng.standard_normal((n, n))
    rho = np.max(np.abs(np.linalg.eigvals(g)))
    return g * (radius / rho)


def random_spd(rng: np.random.Generator, n: int) -> np.ndarray:
    a = rng.standard_normal((n, n))
    return a @ a.T + n * np.eye(n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240901)
