"""Exact inference for jointly Gaussian models.

Covers the two primitives a linear-Gaussian chain needs: pushing a Gaussian
law through a linear map with additive noise (marginalization) and
conditioning it on a linear observation (Bayes update in information form).
Also classifies when two Gaussian densities are comparable in the cone order
of positive functions; the answer is all-or-nothing, which is why projective
contraction arguments need care in this setting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .cones import ExtendedDistance, validate_spd

LOG_TWO_PI = math.log(2.0 * math.pi)


@dataclass(frozen=True, eq=False)
class GaussianDist:
    """Gaussian law with strictly positive definite covariance."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=float)
        if mean.ndim != 1 or mean.size == 0:
            raise ValueError(f"mean must be a nonempty vector, got shape {mean.shape}")
        if not np.all(np.isfinite(mean)):
            raise ValueError("mean must have finite entries")
        cov = validate_spd(np.asarray(self.covariance), "covariance")
        if cov.shape[0] != mean.size:
            raise ValueError(
                f"covariance shape {cov.shape} does not match mean of length {mean.size}"
            )
        mean = mean.copy()
        mean.flags.writeable = False
        cov = cov.copy()
        cov.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.size


def _observation_operator(a, b, dim: int) -> tuple[np.ndarray, np.ndarray]:
    amat = np.asarray(a, dtype=float)
    if amat.ndim != 2 or amat.shape[1] != dim:
        raise ValueError(
            f"operator must be a matrix with {dim} columns, got shape {amat.shape}"
        )
    offset = np.asarray(b, dtype=float)
    if offset.shape != (amat.shape[0],):
        raise ValueError(
            f"offset must have shape ({amat.shape[0]},), got {offset.shape}"
        )
    if not (np.all(np.isfinite(amat)) and np.all(np.isfinite(offset))):
        raise ValueError("operator and offset must be finite")
    return amat, offset


def linear_marginal(prior: GaussianDist, a, b, noise_cov) -> GaussianDist:
    """Law of A x + b + w for x ~ prior and independent noise w ~ N(0, noise_cov)."""
    amat, offset = _observation_operator(a, b, prior.dim)
    noise = validate_spd(noise_cov, "noise_cov")
    if noise.shape[0] != amat.shape[0]:
        raise ValueError(
            f"noise_cov shape {noise.shape} does not match operator with "
            f"{amat.shape[0]} rows"
        )
    mean = amat @ prior.mean + offset
    cov = noise + amat @ prior.covariance @ amat.T
    return GaussianDist(mean=mean, covariance=(cov + cov.T) / 2.0)


def linear_conditional(prior: GaussianDist, a, b, noise_cov, y) -> GaussianDist:
    """Posterior of x given the observation y = A x + b + w.

    Information form: the posterior precision is the prior precision plus
    A^T N^{-1} A, and the posterior mean solves it against
    A^T N^{-1} (y - b) + prior precision times the prior mean.
    """
    amat, offset = _observation_operator(a, b, prior.dim)
    noise = validate_spd(noise_cov, "noise_cov")
    if noise.shape[0] != amat.shape[0]:
        raise ValueError(
            f"noise_cov shape {noise.shape} does not match operator with "
            f"{amat.shape[0]} rows"
        )
    obs = np.asarray(y, dtype=float)
    if obs.shape != (amat.shape[0],):
        raise ValueError(f"y must have shape ({amat.shape[0]},), got {obs.shape}")
    if not np.all(np.isfinite(obs)):
        raise ValueError("y must be finite")

    prior_factor = scipy.linalg.cho_factor(prior.covariance, lower=True)
    noise_factor = scipy.linalg.cho_factor(noise, lower=True)
    prior_precision = scipy.linalg.cho_solve(prior_factor, np.eye(prior.dim))
    precision = prior_precision + amat.T @ scipy.linalg.cho_solve(noise_factor, amat)
    precision = (precision + precision.T) / 2.0

    info_vector = amat.T @ scipy.linalg.cho_solve(noise_factor, obs - offset)
    info_vector += scipy.linalg.cho_solve(prior_factor, prior.mean)

    post_factor = scipy.linalg.cho_factor(precision, lower=True)
    cov = scipy.linalg.cho_solve(post_factor, np.eye(prior.dim))
    mean = scipy.linalg.cho_solve(post_factor, info_vector)
    return GaussianDist(mean=mean, covariance=(cov + cov.T) / 2.0)


def log_density(dist: GaussianDist, x) -> float:
    """Log density of the Gaussian at x, evaluated through a Cholesky solve."""
    point = np.asarray(x, dtype=float)
    if point.shape != (dist.dim,):
        raise ValueError(f"x must have shape ({dist.dim},), got {point.shape}")
    if not np.all(np.isfinite(point)):
        raise ValueError("x must be finite")
    chol = np.linalg.cholesky(dist.covariance)
    white = scipy.linalg.solve_triangular(chol, point - dist.mean, lower=True)
    log_det_half = float(np.log(np.diag(chol)).sum())
    return -0.5 * float(white @ white) - 0.5 * dist.dim * LOG_TWO_PI - log_det_half


def gaussian_hilbert_comparability(
    f: GaussianDist,
    g: GaussianDist,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-12,
) -> ExtendedDistance:
    """Hilbert distance between two Gaussian densities in the cone of
    positive functions.

    The density ratio is exp of a quadratic, so it is bounded above and below
    by positive constants only when the quadratic is constant, i.e. when the
    two parameter pairs coincide; both densities integrate to one, so the
    constant is then 1.  Hence the distance is 0 for equal parameters (within
    rtol/atol) and INFINITE otherwise; no finite positive value can occur.
    """
    if f.dim != g.dim:
        raise ValueError(f"dimension mismatch: {f.dim} vs {g.dim}")
    same_mean = np.allclose(f.mean, g.mean, rtol=rtol, atol=atol)
    same_cov = np.allclose(f.covariance, g.covariance, rtol=rtol, atol=atol)
    if same_mean and same_cov:
        return ExtendedDistance(0.0)
    return ExtendedDistance.INFINITE
