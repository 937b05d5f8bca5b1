import numpy as np
import pytest


def random_spd(rng: np.random.Generator, n: int, spread: float = 1.0) -> np.ndarray:
    """Random SPD matrix with eigenvalues exp(U[-spread, spread])."""
    basis, _ = np.linalg.qr(rng.normal(size=(n, n)))
    eigs = np.exp(rng.uniform(-spread, spread, size=n))
    return (basis * eigs) @ basis.T


def random_positive(rng: np.random.Generator, n: int) -> np.ndarray:
    """Strictly positive vector with entries exp(U[-3, 3])."""
    return np.exp(rng.uniform(-3.0, 3.0, size=n))


def random_stochastic(rng: np.random.Generator, n: int) -> np.ndarray:
    """Strictly positive row-stochastic matrix."""
    rows = np.exp(rng.uniform(-3.0, 3.0, size=(n, n)))
    return rows / rows.sum(axis=1, keepdims=True)


def random_stable_model(rng: np.random.Generator, n: int, m: int):
    """Well-conditioned state-space model with spectral radius below 0.9."""
    from conelab import LinearGaussianModel

    a = rng.normal(size=(n, n))
    radius = max(abs(np.linalg.eigvals(a)))
    if radius > 0.0:
        a *= 0.9 * rng.uniform(0.3, 1.0) / radius
    return LinearGaussianModel(
        A=a,
        C=rng.normal(size=(m, n)),
        Gamma=random_spd(rng, n, spread=0.5),
        Sigma=random_spd(rng, m, spread=0.5),
        mu0=rng.normal(size=n),
        P0=random_spd(rng, n, spread=0.5),
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20260822)
