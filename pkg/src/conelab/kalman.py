"""Kalman filtering, the Riccati covariance map, and its fixed point.

The covariance recursion of the filter is treated as a map Phi on the cone
of positive definite matrices.  Phi is evaluated in two algebraically
equivalent forms (gain and information); iterating it from any positive
definite seed converges to the steady-state covariance, with convergence
measured in the Thompson metric, the natural yardstick on that cone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .cones import thompson_distance_spd, validate_spd
from .gaussian import GaussianDist, linear_conditional, linear_marginal

PREDICTED = "predicted"
CORRECTED = "corrected"
_STAGES = (PREDICTED, CORRECTED)


@dataclass(frozen=True, eq=False)
class LinearGaussianModel:
    """Time-invariant linear-Gaussian state-space model.

    x_{k+1} = A x_k + state noise with covariance Gamma,
    y_k = C x_k + observation noise with covariance Sigma,
    x_0 ~ N(mu0, P0).  Gamma, Sigma, and P0 must be strictly positive
    definite; A need not be stable or invertible.
    """

    A: np.ndarray
    C: np.ndarray
    Gamma: np.ndarray
    Sigma: np.ndarray
    mu0: np.ndarray
    P0: np.ndarray

    def __post_init__(self) -> None:
        amat = np.asarray(self.A, dtype=float)
        if amat.ndim != 2 or amat.shape[0] != amat.shape[1]:
            raise ValueError(f"A must be square, got shape {amat.shape}")
        n = amat.shape[0]
        cmat = np.asarray(self.C, dtype=float)
        if cmat.ndim != 2 or cmat.shape[1] != n:
            raise ValueError(f"C must have {n} columns, got shape {cmat.shape}")
        m = cmat.shape[0]
        if not (np.all(np.isfinite(amat)) and np.all(np.isfinite(cmat))):
            raise ValueError("A and C must have finite entries")

        gamma = validate_spd(np.asarray(self.Gamma), "Gamma")
        if gamma.shape[0] != n:
            raise ValueError(f"Gamma must be {n}x{n}, got {gamma.shape}")
        sigma = validate_spd(np.asarray(self.Sigma), "Sigma")
        if sigma.shape[0] != m:
            raise ValueError(f"Sigma must be {m}x{m}, got {sigma.shape}")
        p0 = validate_spd(np.asarray(self.P0), "P0")
        if p0.shape[0] != n:
            raise ValueError(f"P0 must be {n}x{n}, got {p0.shape}")

        mu0 = np.asarray(self.mu0, dtype=float)
        if mu0.shape != (n,):
            raise ValueError(f"mu0 must have shape ({n},), got {mu0.shape}")
        if not np.all(np.isfinite(mu0)):
            raise ValueError("mu0 must have finite entries")

        for field, arr in (
            ("A", amat), ("C", cmat), ("Gamma", gamma),
            ("Sigma", sigma), ("mu0", mu0), ("P0", p0),
        ):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, field, arr)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]


@dataclass(frozen=True, eq=False)
class KalmanState:
    """Filter state: Gaussian belief plus its position in the predict/correct cycle.

    ``stage`` records whether the belief is the one-step-ahead prediction or
    the posterior after the observation at ``time``; the two are not
    interchangeable, so the stage is enforced by the step functions.
    """

    mean: np.ndarray
    covariance: np.ndarray
    stage: str
    time: int

    def __post_init__(self) -> None:
        if self.stage not in _STAGES:
            raise ValueError(f"stage must be one of {_STAGES}, got {self.stage!r}")
        if self.time < 0:
            raise ValueError(f"time must be >= 0, got {self.time}")
        mean = np.asarray(self.mean, dtype=float)
        if mean.ndim != 1 or not np.all(np.isfinite(mean)):
            raise ValueError("mean must be a finite vector")
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

    def as_gaussian(self) -> GaussianDist:
        return GaussianDist(mean=self.mean, covariance=self.covariance)


def predict(model: LinearGaussianModel, state: KalmanState) -> KalmanState:
    """Propagate a corrected state through the dynamics: time k -> k+1."""
    if state.stage != CORRECTED:
        raise ValueError(f"predict requires a corrected state, got {state.stage!r}")
    mean = model.A @ state.mean
    cov = model.A @ state.covariance @ model.A.T + model.Gamma
    return KalmanState(
        mean=mean, covariance=(cov + cov.T) / 2.0, stage=PREDICTED, time=state.time + 1
    )


def correct(model: LinearGaussianModel, state: KalmanState, y) -> KalmanState:
    """Condition a predicted state on the observation at the same time index.

    Uses the gain K = P C^T (C P C^T + Sigma)^{-1}; the covariance update
    (I - K C) P is symmetrized before validation.
    """
    if state.stage != PREDICTED:
        raise ValueError(f"correct requires a predicted state, got {state.stage!r}")
    obs = np.asarray(y, dtype=float)
    if obs.shape != (model.m,):
        raise ValueError(f"observation must have shape ({model.m},), got {obs.shape}")
    if not np.all(np.isfinite(obs)):
        raise ValueError("observation must be finite")
    pmat = state.covariance
    innov_cov = model.C @ pmat @ model.C.T + model.Sigma
    factor = scipy.linalg.cho_factor((innov_cov + innov_cov.T) / 2.0, lower=True)
    gain = scipy.linalg.cho_solve(factor, model.C @ pmat).T
    mean = state.mean + gain @ (obs - model.C @ state.mean)
    cov = pmat - gain @ model.C @ pmat
    return KalmanState(
        mean=mean, covariance=(cov + cov.T) / 2.0, stage=CORRECTED, time=state.time
    )


def riccati_map_gain_form(model: LinearGaussianModel, p) -> np.ndarray:
    """One covariance cycle in gain form.

    Phi(P) = M - M C^T (C M C^T + Sigma)^{-1} C M with M = A P A^T + Gamma.
    Returns a validated symmetric positive definite array.
    """
    pmat = validate_spd(p, "P")
    if pmat.shape[0] != model.n:
        raise ValueError(f"P must be {model.n}x{model.n}, got {pmat.shape}")
    mmat = model.A @ pmat @ model.A.T + model.Gamma
    mmat = (mmat + mmat.T) / 2.0
    innov_cov = model.C @ mmat @ model.C.T + model.Sigma
    factor = scipy.linalg.cho_factor((innov_cov + innov_cov.T) / 2.0, lower=True)
    cm = model.C @ mmat
    out = mmat - cm.T @ scipy.linalg.cho_solve(factor, cm)
    return validate_spd((out + out.T) / 2.0, "Phi(P)")


def riccati_map_information_form(model: LinearGaussianModel, p) -> np.ndarray:
    """One covariance cycle in information form.

    Phi(P) = ((A P A^T + Gamma)^{-1} + C^T Sigma^{-1} C)^{-1}; algebraically
    identical to the gain form, exercised separately as a cross-check.
    """
    pmat = validate_spd(p, "P")
    if pmat.shape[0] != model.n:
        raise ValueError(f"P must be {model.n}x{model.n}, got {pmat.shape}")
    mmat = model.A @ pmat @ model.A.T + model.Gamma
    mmat = (mmat + mmat.T) / 2.0
    m_factor = scipy.linalg.cho_factor(mmat, lower=True)
    sigma_factor = scipy.linalg.cho_factor(model.Sigma, lower=True)
    precision = scipy.linalg.cho_solve(m_factor, np.eye(model.n))
    precision += model.C.T @ scipy.linalg.cho_solve(sigma_factor, model.C)
    precision = (precision + precision.T) / 2.0
    out_factor = scipy.linalg.cho_factor(precision, lower=True)
    out = scipy.linalg.cho_solve(out_factor, np.eye(model.n))
    return validate_spd((out + out.T) / 2.0, "Phi(P)")


def one_step_posterior(model: LinearGaussianModel, state: KalmanState, y) -> KalmanState:
    """Fused predict-and-correct step acting on corrected states.

    The posterior covariance is Phi applied to the previous posterior
    covariance, and the mean update uses the information-form gain
    P_new C^T Sigma^{-1}; equal to correct(predict(state)) up to roundoff.
    """
    if state.stage != CORRECTED:
        raise ValueError(
            f"one_step_posterior requires a corrected state, got {state.stage!r}"
        )
    obs = np.asarray(y, dtype=float)
    if obs.shape != (model.m,):
        raise ValueError(f"observation must have shape ({model.m},), got {obs.shape}")
    if not np.all(np.isfinite(obs)):
        raise ValueError("observation must be finite")
    p_new = riccati_map_gain_form(model, state.covariance)
    sigma_factor = scipy.linalg.cho_factor(model.Sigma, lower=True)
    info_gain = p_new @ model.C.T @ scipy.linalg.cho_solve(sigma_factor, np.eye(model.m))
    mean = (model.A - info_gain @ model.C @ model.A) @ state.mean + info_gain @ obs
    return KalmanState(mean=mean, covariance=p_new, stage=CORRECTED, time=state.time + 1)


def filter_sequence(model: LinearGaussianModel, observations) -> list[KalmanState]:
    """Corrected states for each observation, starting from the prior.

    The prior N(mu0, P0) enters as the predicted state at time 0, so the
    first returned state is already conditioned on the first observation.
    """
    obs_array = np.asarray(observations, dtype=float)
    if obs_array.ndim == 1:
        obs_array = obs_array[:, None]
    if obs_array.ndim != 2 or obs_array.shape[1] != model.m:
        raise ValueError(
            f"observations must have shape (T, {model.m}), got {obs_array.shape}"
        )
    if obs_array.shape[0] == 0:
        raise ValueError("observation record must be nonempty")
    state = KalmanState(mean=model.mu0, covariance=model.P0, stage=PREDICTED, time=0)
    states: list[KalmanState] = []
    for k in range(obs_array.shape[0]):
        state = correct(model, state, obs_array[k])
        states.append(state)
        if k + 1 < obs_array.shape[0]:
            state = predict(model, state)
    return states


class RiccatiNonConvergenceError(RuntimeError):
    """Riccati iteration exhausted max_iter before meeting the tolerance."""

    def __init__(self, iterations: int, thompson_gap: float, residual: float,
                 last_iterate: np.ndarray):
        super().__init__(
            f"Riccati iteration did not converge in {iterations} steps: "
            f"Thompson gap {thompson_gap:.3e}, residual {residual:.3e}"
        )
        self.iterations = iterations
        self.thompson_gap = thompson_gap
        self.residual = residual
        self.last_iterate = last_iterate


@dataclass(frozen=True, eq=False)
class DareResult:
    """Fixed point of the Riccati map plus the number of map evaluations."""

    fixed_point: np.ndarray
    iterations: int


def dare_fixed_point(
    model: LinearGaussianModel,
    tol: float = 1e-12,
    max_iter: int = 10_000,
) -> DareResult:
    """Steady-state covariance by iterating Phi from P0.

    Stops at the first iterate P whose image satisfies both
    d_T(P, Phi(P)) <= tol and ||Phi(P) - P||_F <= tol (1 + ||P||_F);
    that P is returned, so the reported residual is exact.  Raises
    RiccatiNonConvergenceError when max_iter map evaluations are exhausted.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be >= 1, got {max_iter}")
    current = model.P0
    gap = np.inf
    residual = np.inf
    for evaluations in range(1, max_iter + 1):
        image = riccati_map_gain_form(model, current)
        gap = thompson_distance_spd(image, current)
        residual = float(np.linalg.norm(image - current))
        if gap <= tol and residual <= tol * (1.0 + float(np.linalg.norm(current))):
            return DareResult(fixed_point=current, iterations=evaluations)
        current = image
    raise RiccatiNonConvergenceError(
        iterations=max_iter,
        thompson_gap=float(gap),
        residual=residual,
        last_iterate=current,
    )


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    """Worst-case deviations between the two filter implementations."""

    max_mean_deviation: float
    max_covariance_deviation: float
    steps: int


def kalman_vs_hmm_equivalence(model: LinearGaussianModel, observations) -> EquivalenceReport:
    """Run the Kalman recursion against generic Gaussian conditioning.

    The reference path alternates linear_conditional (observation update)
    and linear_marginal (dynamics push-forward) on explicit Gaussian laws,
    the same two-stage structure as the discrete filter; the report records
    the largest entrywise deviations in posterior means and covariances.
    """
    states = filter_sequence(model, observations)
    obs_array = np.asarray(observations, dtype=float)
    if obs_array.ndim == 1:
        obs_array = obs_array[:, None]
    belief = GaussianDist(mean=model.mu0, covariance=model.P0)
    zero_obs = np.zeros(model.m)
    zero_state = np.zeros(model.n)
    worst_mean = 0.0
    worst_cov = 0.0
    for k, state in enumerate(states):
        belief = linear_conditional(belief, model.C, zero_obs, model.Sigma, obs_array[k])
        worst_mean = max(worst_mean, float(np.abs(belief.mean - state.mean).max()))
        worst_cov = max(
            worst_cov, float(np.abs(belief.covariance - state.covariance).max())
        )
        if k + 1 < len(states):
            belief = linear_marginal(belief, model.A, zero_state, model.Gamma)
    return EquivalenceReport(
        max_mean_deviation=worst_mean,
        max_covariance_deviation=worst_cov,
        steps=len(states),
    )
