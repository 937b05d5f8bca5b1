"""Forward filtering for finite-state hidden Markov models.

The normalized forward recursion alternates a prediction through the
transition kernel with a pointwise likelihood reweighting.  Both stages are
(projectively) positive linear maps on the orthant of state densities, which
is what makes the filter non-expansive in the Hilbert metric; see the
`maps` module for the contraction side of that story.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Tolerance on probability normalization (row sums, initial mass).
STOCHASTIC_TOL = 1e-9


class ImpossibleObservationError(ValueError):
    """An observation with zero likelihood under the current filter state.

    ``step`` is the index of the offending observation when known.
    """

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"{message} (step {step})"
        super().__init__(message)
        self.step = step


def _check_distribution(arr: np.ndarray, name: str) -> None:
    if np.any(arr < 0.0):
        raise ValueError(f"{name} must be nonnegative")
    total = float(arr.sum())
    if abs(total - 1.0) > STOCHASTIC_TOL:
        raise ValueError(f"{name} sums to {total!r}, expected 1")


@dataclass(frozen=True, eq=False)
class HmmModel:
    """Finite HMM: row-stochastic transition, likelihood table, initial law.

    ``emission`` has one column per observation symbol (entries are
    state-conditional likelihoods; columns need not sum to one).  It may be
    None for transition-only use, in which case observations must be supplied
    as per-state likelihood vectors rather than symbol indices.
    """

    transition: np.ndarray
    emission: np.ndarray | None
    initial: np.ndarray

    def __post_init__(self) -> None:
        q = np.asarray(self.transition, dtype=float)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError(f"transition must be square, got shape {q.shape}")
        if not np.all(np.isfinite(q)):
            raise ValueError("transition must have finite entries")
        if np.any(q < 0.0):
            raise ValueError("transition must be nonnegative")
        sums = q.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > STOCHASTIC_TOL)
        if bad.size:
            row = int(bad[0])
            raise ValueError(
                f"transition row {row} sums to {float(sums[row])!r}, expected 1"
            )
        n = q.shape[0]

        mu = np.asarray(self.initial, dtype=float)
        if mu.shape != (n,):
            raise ValueError(f"initial must have shape ({n},), got {mu.shape}")
        if not np.all(np.isfinite(mu)):
            raise ValueError("initial must have finite entries")
        _check_distribution(mu, "initial")

        table = self.emission
        if table is not None:
            table = np.asarray(table, dtype=float)
            if table.ndim != 2 or table.shape[0] != n:
                raise ValueError(
                    f"emission must have {n} rows (one per state), got shape {table.shape}"
                )
            if not np.all(np.isfinite(table)):
                raise ValueError("emission must have finite entries")
            if np.any(table < 0.0):
                raise ValueError("emission must be nonnegative")
            empty = np.flatnonzero(~table.any(axis=0))
            if empty.size:
                raise ValueError(
                    f"emission column {int(empty[0])} is identically zero; "
                    "that symbol could never be observed"
                )
            table = table.copy()
            table.flags.writeable = False

        q = q.copy()
        q.flags.writeable = False
        mu = mu.copy()
        mu.flags.writeable = False
        object.__setattr__(self, "transition", q)
        object.__setattr__(self, "emission", table)
        object.__setattr__(self, "initial", mu)

    @property
    def n_states(self) -> int:
        return self.transition.shape[0]

    @property
    def n_symbols(self) -> int:
        if self.emission is None:
            raise ValueError("model has no emission table")
        return self.emission.shape[1]

    def likelihood(self, observation) -> np.ndarray:
        """Per-state likelihood vector for one observation.

        Integer observations index a column of the emission table; anything
        else is taken as an explicit nonnegative likelihood vector, the entry
        point for continuous observation models.
        """
        if isinstance(observation, (int, np.integer)) and not isinstance(
            observation, (bool, np.bool_)
        ):
            if self.emission is None:
                raise ValueError(
                    "model has no emission table; pass a likelihood vector instead"
                )
            symbol = int(observation)
            if not 0 <= symbol < self.emission.shape[1]:
                raise ValueError(
                    f"observation symbol {symbol} outside alphabet of size "
                    f"{self.emission.shape[1]}"
                )
            return self.emission[:, symbol]
        vec = np.asarray(observation, dtype=float)
        if vec.shape != (self.n_states,):
            raise ValueError(
                f"likelihood vector must have shape ({self.n_states},), got {vec.shape}"
            )
        if not np.all(np.isfinite(vec)) or np.any(vec < 0.0):
            raise ValueError("likelihood vector must be finite and nonnegative")
        return vec


@dataclass(frozen=True, eq=False)
class FilterTrace:
    """Filter output: densities[k] is the posterior after observation k.

    ``log_likelihood_increments[k]`` is the log normalizer of step k, so the
    increments sum to the log likelihood of the whole observation record.
    """

    densities: np.ndarray
    log_likelihood_increments: np.ndarray

    def __post_init__(self) -> None:
        dens = np.asarray(self.densities, dtype=float)
        incs = np.asarray(self.log_likelihood_increments, dtype=float)
        if dens.ndim != 2 or incs.ndim != 1 or dens.shape[0] != incs.shape[0]:
            raise ValueError(
                f"trace shapes are inconsistent: {dens.shape} vs {incs.shape}"
            )
        dens = dens.copy()
        dens.flags.writeable = False
        incs = incs.copy()
        incs.flags.writeable = False
        object.__setattr__(self, "densities", dens)
        object.__setattr__(self, "log_likelihood_increments", incs)

    @property
    def steps(self) -> int:
        return self.densities.shape[0]

    @property
    def total_log_likelihood(self) -> float:
        return float(self.log_likelihood_increments.sum())


def _density_input(alpha, n: int) -> np.ndarray:
    vec = np.asarray(alpha, dtype=float)
    if vec.shape != (n,):
        raise ValueError(f"density must have shape ({n},), got {vec.shape}")
    if not np.all(np.isfinite(vec)):
        raise ValueError("density must have finite entries")
    _check_distribution(vec, "density")
    return vec


def _normalized_product(weights: np.ndarray, vec: np.ndarray) -> tuple[np.ndarray, float]:
    product = weights * vec
    normalizer = float(product.sum())
    if normalizer <= 0.0:
        raise ImpossibleObservationError(
            "observation has zero likelihood under the current state density"
        )
    return product / normalizer, math.log(normalizer)


def initialize(model: HmmModel, observation) -> tuple[np.ndarray, float]:
    """Posterior density after the first observation, plus its log normalizer."""
    return _normalized_product(model.likelihood(observation), model.initial)


def predict(model: HmmModel, alpha) -> np.ndarray:
    """One-step-ahead predicted density: transition applied to alpha."""
    vec = _density_input(alpha, model.n_states)
    return model.transition.T @ vec


def update(alpha_predicted, likelihood) -> tuple[np.ndarray, float]:
    """Reweight a predicted density by per-state likelihoods and renormalize.

    Projectively this is a diagonal positive map, an isometry of the Hilbert
    metric; all contraction in the filter comes from the prediction stage.
    """
    pred = np.asarray(alpha_predicted, dtype=float)
    vec = np.asarray(likelihood, dtype=float)
    if pred.shape != vec.shape or pred.ndim != 1:
        raise ValueError(
            f"shape mismatch between density {pred.shape} and likelihood {vec.shape}"
        )
    if np.any(pred < 0.0) or np.any(vec < 0.0):
        raise ValueError("density and likelihood must be nonnegative")
    return _normalized_product(vec, pred)


def forward_step(model: HmmModel, alpha, observation) -> tuple[np.ndarray, float]:
    """One filter step: update(predict(alpha)) with the observation likelihood."""
    return update(predict(model, alpha), model.likelihood(observation))


def unnormalized_step(model: HmmModel, f, observation) -> np.ndarray:
    """Linear forward step on unnormalized positive vectors.

    Applies g . (q^T f) without normalizing; the induced projective action
    is identical to forward_step, which is the fact the contraction analysis
    runs on.
    """
    vec = np.asarray(f, dtype=float)
    if vec.shape != (model.n_states,):
        raise ValueError(
            f"vector must have shape ({model.n_states},), got {vec.shape}"
        )
    if not np.all(np.isfinite(vec)) or np.any(vec < 0.0) or not vec.any():
        raise ValueError("vector must be nonnegative, finite, and not identically zero")
    return model.likelihood(observation) * (model.transition.T @ vec)


def filter_sequence(model: HmmModel, observations) -> FilterTrace:
    """Run the normalized forward filter over a nonempty observation record."""
    obs = list(observations)
    if not obs:
        raise ValueError("observation record must be nonempty")
    densities = np.empty((len(obs), model.n_states))
    increments = np.empty(len(obs))
    try:
        alpha, inc = initialize(model, obs[0])
    except ImpossibleObservationError as err:
        raise ImpossibleObservationError(str(err), step=0) from None
    densities[0] = alpha
    increments[0] = inc
    for k, observation in enumerate(obs[1:], start=1):
        try:
            alpha, inc = forward_step(model, alpha, observation)
        except ImpossibleObservationError as err:
            raise ImpossibleObservationError(str(err), step=k) from None
        densities[k] = alpha
        increments[k] = inc
    return FilterTrace(densities=densities, log_likelihood_increments=increments)
