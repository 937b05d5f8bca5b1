"""Randomized experiments probing projective contraction of positive maps.

Five experiment kinds share one report shape: a config echo, per-trial (or
per-step) records, and a summary that is a pure function of those records,
so a report's pass flag can always be re-derived from its own data.  All
randomness is drawn from streams keyed by (seed, purpose, index), so the
records are independent of execution order and byte-reproducible.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .cones import (
    _orthant_log_ratio,
    hilbert_distance_spd,
    thompson_distance_spd,
    validate_spd,
)
from .hmm import HmmModel, forward_step, unnormalized_step
from .kalman import LinearGaussianModel, riccati_map_gain_form
from .maps import (
    DEGENERATE_DISTANCE,
    birkhoff_coefficient,
    empirical_contraction_ratio,
    projective_diameter,
)

EXPERIMENT_KINDS = (
    "orthant-nonexpansive",
    "birkhoff-tightness",
    "hmm-forgetting",
    "riccati-trace",
    "horizon-contraction",
)

# Cap on re-draws when a sampled pair is projectively degenerate.
MAX_RESAMPLES = 100
# Slack for the monotone-decrease check on distance traces.
MONOTONE_SLACK = 1e-10
# Fraction of the Birkhoff bound the sampled ratio must reach to count as tight.
TIGHTNESS_FRACTION = 0.95
# Trial count from which the tightness clause applies.
TIGHTNESS_MIN_TRIALS = 100_000


class DegenerateSampleError(RuntimeError):
    """Sampling stayed below the degeneracy floor after MAX_RESAMPLES re-draws."""

    def __init__(self, trial: int):
        super().__init__(
            f"trial {trial}: sampled pair remained projectively degenerate "
            f"after {MAX_RESAMPLES} re-draws"
        )
        self.trial = trial


def _matrix_or_none(value, name: str) -> np.ndarray | None:
    if value is None:
        return None
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be a matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must have finite entries")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """Declarative description of one experiment run.

    ``dims`` lists the admissible problem sizes; randomized kinds draw from
    it per trial.  The optional fields carry kind-specific inputs: a fixed
    ``transition`` (orthant-nonexpansive, hmm-forgetting,
    horizon-contraction), a fixed nonnegative ``matrix`` plus
    ``matrix_count`` (birkhoff-tightness), a state-space ``model`` with the
    alternative start ``p0_prime`` (riccati-trace), and a fixed
    ``initial_pair`` of densities (hmm-forgetting).
    """

    kind: str
    seed: int
    trials: int = 100
    dims: tuple[int, ...] = (2,)
    horizon: int = 10
    tolerance: float = 1e-9
    matrix_count: int = 10
    transition: np.ndarray | None = None
    matrix: np.ndarray | None = None
    model: LinearGaussianModel | None = None
    p0_prime: np.ndarray | None = None
    initial_pair: tuple[np.ndarray, np.ndarray] | None = None

    def __post_init__(self) -> None:
        if self.kind not in EXPERIMENT_KINDS:
            raise ValueError(
                f"kind must be one of {EXPERIMENT_KINDS}, got {self.kind!r}"
            )
        if not isinstance(self.seed, (int, np.integer)) or self.seed < 0:
            raise ValueError(f"seed must be a nonnegative integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1, got {self.trials}")
        dims = self.dims
        if isinstance(dims, (int, np.integer)):
            dims = (int(dims),)
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"dims must be positive integers, got {dims!r}")
        object.__setattr__(self, "dims", dims)
        if self.horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {self.horizon}")
        if not self.tolerance > 0.0:
            raise ValueError(f"tolerance must be positive, got {self.tolerance}")
        if self.matrix_count < 1:
            raise ValueError(f"matrix_count must be >= 1, got {self.matrix_count}")
        object.__setattr__(
            self, "transition", _matrix_or_none(self.transition, "transition")
        )
        object.__setattr__(self, "matrix", _matrix_or_none(self.matrix, "matrix"))
        if self.model is not None and not isinstance(self.model, LinearGaussianModel):
            raise ValueError("model must be a LinearGaussianModel")
        if self.p0_prime is not None:
            object.__setattr__(
                self, "p0_prime", validate_spd(self.p0_prime, "p0_prime")
            )
        if self.initial_pair is not None:
            pair = tuple(np.asarray(v, dtype=float) for v in self.initial_pair)
            if len(pair) != 2 or any(v.ndim != 1 for v in pair):
                raise ValueError("initial_pair must hold two vectors")
            if any(np.any(v <= 0.0) or not np.all(np.isfinite(v)) for v in pair):
                raise ValueError("initial_pair densities must be strictly positive")
            if pair[0].shape != pair[1].shape:
                raise ValueError("initial_pair densities must share a dimension")
            object.__setattr__(self, "initial_pair", pair)

    def to_dict(self) -> dict:
        """JSON-ready echo with a fixed key order; inverse of the config loader."""
        out: dict = {
            "kind": self.kind,
            "seed": self.seed,
            "trials": self.trials,
            "dims": list(self.dims),
            "horizon": self.horizon,
            "tolerance": self.tolerance,
            "matrix_count": self.matrix_count,
        }
        if self.transition is not None:
            out["transition"] = self.transition.tolist()
        if self.matrix is not None:
            out["matrix"] = self.matrix.tolist()
        if self.model is not None:
            out["model"] = {
                "kind": "kalman",
                "n": self.model.n,
                "m": self.model.m,
                "A": self.model.A.tolist(),
                "C": self.model.C.tolist(),
                "Gamma": self.model.Gamma.tolist(),
                "Sigma": self.model.Sigma.tolist(),
                "mu0": self.model.mu0.tolist(),
                "P0": self.model.P0.tolist(),
            }
        if self.p0_prime is not None:
            out["p0_prime"] = self.p0_prime.tolist()
        if self.initial_pair is not None:
            out["initial_pair"] = [v.tolist() for v in self.initial_pair]
        return out


@dataclass(eq=False)
class ExperimentReport:
    """Config echo, per-record data, summary, and the run's wall time.

    The wall time is observability only: ``body()`` excludes it, and two runs
    of the same config produce byte-identical ``body_json()`` output.
    """

    config: dict
    records: list[dict]
    summary: dict
    wall_time_s: float

    @property
    def passed(self) -> bool:
        return bool(self.summary["pass"])

    def body(self) -> dict:
        return {"config": self.config, "records": self.records, "summary": self.summary}

    def body_json(self) -> str:
        return json.dumps(self.body(), indent=2, allow_nan=False) + "\n"


def _sample_positive(rng: np.random.Generator, size) -> np.ndarray:
    """Entries exp(U[-3, 3]): strictly positive with heavy dynamic range."""
    return np.exp(rng.uniform(-3.0, 3.0, size=size))


def _sample_stochastic(rng: np.random.Generator, n: int) -> np.ndarray:
    rows = _sample_positive(rng, (n, n))
    return rows / rows.sum(axis=1, keepdims=True)


def _sample_density_pair(
    rng: np.random.Generator, n: int, trial: int
) -> tuple[np.ndarray, np.ndarray, int]:
    """Two strictly positive vectors at Hilbert distance above the floor."""
    resamples = 0
    while True:
        first = _sample_positive(rng, n)
        second = _sample_positive(rng, n)
        if _orthant_log_ratio(first, second) >= DEGENERATE_DISTANCE:
            return first, second, resamples
        resamples += 1
        if resamples > MAX_RESAMPLES:
            raise DegenerateSampleError(trial)


def _derived_seed(*entropy: int) -> int:
    """Collapse a (seed, purpose, index) key into one nonnegative integer seed."""
    return int(np.random.SeedSequence(entropy).generate_state(1, np.uint64)[0])


def _stream(config_seed: int, purpose: int, index: int = 0) -> np.random.Generator:
    return np.random.default_rng((config_seed, purpose, index))


def _require(config: ExperimentConfig, kind: str) -> None:
    if config.kind != kind:
        raise ValueError(f"config kind {config.kind!r} does not match runner {kind!r}")


def _transition_for(config: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    if config.transition is not None:
        q = config.transition
        if q.shape[0] != q.shape[1]:
            raise ValueError(f"transition must be square, got shape {q.shape}")
        return q
    return _sample_stochastic(rng, config.dims[0])


def run_hmm_nonexpansiveness(config: ExperimentConfig) -> ExperimentReport:
    """Sample filter steps and check they never expand the Hilbert metric.

    Each trial draws a strictly positive row-stochastic transition (or uses
    the fixed one), a likelihood vector, and a pair of positive densities,
    then pushes the pair through one unnormalized forward step.  With a
    fixed transition the ratio bound tightens from 1 to its Birkhoff
    coefficient.
    """
    _require(config, "orthant-nonexpansive")
    start = time.perf_counter()
    fixed_model = None
    if config.transition is not None:
        size = config.transition.shape[0]
        fixed_model = HmmModel(
            transition=config.transition,
            emission=None,
            initial=np.full(size, 1.0 / size),
        )
        bound = birkhoff_coefficient(config.transition.T)
    else:
        bound = 1.0
    records: list[dict] = []
    for trial in range(config.trials):
        rng = np.random.default_rng((config.seed, trial))
        if fixed_model is None:
            n = int(config.dims[rng.integers(len(config.dims))])
            model = HmmModel(
                transition=_sample_stochastic(rng, n),
                emission=None,
                initial=np.full(n, 1.0 / n),
            )
        else:
            model = fixed_model
            n = model.n_states
        first, second, resamples = _sample_density_pair(rng, n, trial)
        likelihood = _sample_positive(rng, n)
        d_before = _orthant_log_ratio(first, second)
        d_after = _orthant_log_ratio(
            unnormalized_step(model, first, likelihood),
            unnormalized_step(model, second, likelihood),
        )
        records.append(
            {
                "trial": trial,
                "dim": n,
                "d_before": float(d_before),
                "d_after": float(d_after),
                "ratio": float(d_after / d_before),
                "resamples": resamples,
            }
        )
    summary = _ratio_summary(records, bound, config.tolerance)
    return ExperimentReport(
        config=config.to_dict(),
        records=records,
        summary=summary,
        wall_time_s=time.perf_counter() - start,
    )


def _ratio_summary(records: list[dict], bound: float, tolerance: float) -> dict:
    ratios = [r["ratio"] for r in records]
    max_ratio = max(ratios)
    return {
        "trials": len(records),
        "max_ratio": float(max_ratio),
        "mean_ratio": float(sum(ratios) / len(ratios)),
        "bound": float(bound),
        "tolerance": float(tolerance),
        "resamples": int(sum(r["resamples"] for r in records)),
        "pass": bool(max_ratio <= bound + tolerance),
    }


def run_birkhoff_tightness(config: ExperimentConfig) -> ExperimentReport:
    """Check sampled contraction ratios against tanh(Delta / 4) per matrix.

    Ratios must stay below the bound for every matrix; at
    TIGHTNESS_MIN_TRIALS pairs or more per matrix, at least 90% of the
    matrices must also see a ratio reaching TIGHTNESS_FRACTION of their
    bound, which is what makes the bound sharp rather than merely valid.
    """
    _require(config, "birkhoff-tightness")
    start = time.perf_counter()
    records: list[dict] = []
    for index in range(config.matrix_count):
        if config.matrix is not None:
            arr = config.matrix
        else:
            rng = _stream(config.seed, 101, index)
            n = int(config.dims[rng.integers(len(config.dims))])
            arr = _sample_positive(rng, (n, n))
        pair_seed = _derived_seed(config.seed, 202, index)
        report = empirical_contraction_ratio(arr, config.trials, pair_seed)
        diameter = projective_diameter(arr)
        records.append(
            {
                "matrix": index,
                "dim": int(arr.shape[1]),
                "delta": None if diameter.is_infinite else float(diameter.value),
                "bound": float(report.birkhoff_bound),
                "max_ratio": float(report.observed_max_ratio),
                "pair_seed": pair_seed,
            }
        )
    summary = _tightness_summary(records, config.trials, config.tolerance)
    return ExperimentReport(
        config=config.to_dict(),
        records=records,
        summary=summary,
        wall_time_s=time.perf_counter() - start,
    )


def _tightness_summary(records: list[dict], trials: int, tolerance: float) -> dict:
    violations = sum(1 for r in records if r["max_ratio"] > r["bound"] + tolerance)
    tight = sum(
        1 for r in records if r["max_ratio"] >= TIGHTNESS_FRACTION * r["bound"]
    )
    tight_fraction = tight / len(records)
    applies = trials >= TIGHTNESS_MIN_TRIALS
    return {
        "matrices": len(records),
        "trials_per_matrix": int(trials),
        "tolerance": float(tolerance),
        "bound_violations": int(violations),
        "tight_fraction": float(tight_fraction),
        "tightness_fraction": TIGHTNESS_FRACTION,
        "tightness_applies": bool(applies),
        "pass": bool(violations == 0 and (not applies or tight_fraction >= 0.9)),
    }


def run_hmm_forgetting(config: ExperimentConfig) -> ExperimentReport:
    """Track the Hilbert distance between two filters fed the same data.

    Both traces share the transition and the per-step likelihood vectors and
    differ only in their initialization; the distance must be non-increasing,
    and for a strictly positive transition it must stay below the geometric
    envelope coefficient^k * d_0.
    """
    _require(config, "hmm-forgetting")
    start = time.perf_counter()
    q = _transition_for(config, _stream(config.seed, 301))
    n = q.shape[0]
    model = HmmModel(transition=q, emission=None, initial=np.full(n, 1.0 / n))
    strictly_positive = bool(np.all(q > 0.0))
    coefficient = birkhoff_coefficient(q.T)
    if config.initial_pair is not None:
        first, second = config.initial_pair
        if first.size != n:
            raise ValueError(
                f"initial_pair dimension {first.size} does not match transition size {n}"
            )
    else:
        first, second, _ = _sample_density_pair(_stream(config.seed, 302), n, 0)
    alpha = first / first.sum()
    alpha_other = second / second.sum()
    d0 = _orthant_log_ratio(alpha, alpha_other)
    records: list[dict] = []
    for step in range(config.horizon + 1):
        if step > 0:
            likelihood = _sample_positive(_stream(config.seed, 303, step), n)
            alpha, _ = forward_step(model, alpha, likelihood)
            alpha_other, _ = forward_step(model, alpha_other, likelihood)
        distance = _orthant_log_ratio(alpha, alpha_other)
        envelope = (coefficient**step) * d0 if strictly_positive else None
        records.append(
            {
                "step": step,
                "hilbert_distance": float(distance),
                "bound": None if envelope is None else float(envelope),
            }
        )
    summary = _forgetting_summary(records, coefficient, strictly_positive, config.tolerance)
    return ExperimentReport(
        config=config.to_dict(),
        records=records,
        summary=summary,
        wall_time_s=time.perf_counter() - start,
    )


def _forgetting_summary(
    records: list[dict],
    coefficient: float,
    strictly_positive: bool,
    tolerance: float,
) -> dict:
    distances = [r["hilbert_distance"] for r in records]
    monotone_violations = sum(
        1
        for prev, cur in zip(distances, distances[1:])
        if cur > prev + MONOTONE_SLACK
    )
    bound_violations = sum(
        1
        for r in records
        if r["bound"] is not None and r["hilbert_distance"] > r["bound"] + tolerance
    )
    return {
        "steps": len(records),
        "initial_distance": float(distances[0]),
        "terminal_distance": float(distances[-1]),
        "per_step_coefficient": float(coefficient),
        "strictly_positive": bool(strictly_positive),
        "tolerance": float(tolerance),
        "monotone_violations": int(monotone_violations),
        "bound_violations": int(bound_violations),
        "pass": bool(monotone_violations == 0 and bound_violations == 0),
    }


def run_riccati_trace(config: ExperimentConfig) -> ExperimentReport:
    """Iterate the Riccati map from two seeds and record how the gap closes.

    Records the Hilbert and Thompson distances between the two covariance
    trajectories at every step from 0 to the horizon.  The run is fully
    deterministic; the pass flag only demands that the Hilbert distance
    never increases beyond MONOTONE_SLACK.
    """
    _require(config, "riccati-trace")
    if config.model is None:
        raise ValueError("riccati-trace requires a state-space model")
    if config.p0_prime is None:
        raise ValueError("riccati-trace requires p0_prime, the second start")
    if config.p0_prime.shape[0] != config.model.n:
        raise ValueError(
            f"p0_prime must be {config.model.n}x{config.model.n}, "
            f"got {config.p0_prime.shape}"
        )
    start = time.perf_counter()
    model = config.model
    current = model.P0
    other = config.p0_prime
    records: list[dict] = []
    for step in range(config.horizon + 1):
        if step > 0:
            current = riccati_map_gain_form(model, current)
            other = riccati_map_gain_form(model, other)
        records.append(
            {
                "step": step,
                "hilbert_distance": float(hilbert_distance_spd(current, other).value),
                "thompson_distance": float(thompson_distance_spd(current, other)),
            }
        )
    summary = _trace_summary(records)
    return ExperimentReport(
        config=config.to_dict(),
        records=records,
        summary=summary,
        wall_time_s=time.perf_counter() - start,
    )


def _trace_summary(records: list[dict]) -> dict:
    distances = [r["hilbert_distance"] for r in records]
    monotone_violations = sum(
        1
        for prev, cur in zip(distances, distances[1:])
        if cur > prev + MONOTONE_SLACK
    )
    return {
        "steps": len(records),
        "initial_hilbert": float(distances[0]),
        "terminal_hilbert": float(distances[-1]),
        "terminal_thompson": float(records[-1]["thompson_distance"]),
        "monotone_violations": int(monotone_violations),
        "pass": bool(monotone_violations == 0),
    }


def _primitivity(q_transpose: np.ndarray) -> tuple[bool, int | None]:
    """Is some power of the matrix strictly positive, and the first such power.

    Checked on the adjacency pattern up to the Wielandt exponent
    (n - 1)^2 + 1, beyond which no new pattern can appear.
    """
    n = q_transpose.shape[0]
    adjacency = q_transpose > 0.0
    power = adjacency.copy()
    limit = (n - 1) ** 2 + 1
    for exponent in range(1, limit + 1):
        if power.all():
            return True, exponent
        power = (power.astype(np.int64) @ adjacency.astype(np.int64)) > 0
    return False, None


def run_horizon_contraction(config: ExperimentConfig) -> ExperimentReport:
    """Measure per-window contraction of the filter over blocks of steps.

    Two filter trajectories share likelihoods; every ``horizon`` steps form a
    window whose realized ratio is compared with the Birkhoff coefficient of
    the window's actual composed linear map.  Windows starting below the
    degeneracy floor are dropped from the records and only counted.
    """
    _require(config, "horizon-contraction")
    start = time.perf_counter()
    q = _transition_for(config, _stream(config.seed, 401))
    n = q.shape[0]
    model = HmmModel(transition=q, emission=None, initial=np.full(n, 1.0 / n))
    if config.initial_pair is not None:
        first, second = config.initial_pair
        if first.size != n:
            raise ValueError(
                f"initial_pair dimension {first.size} does not match transition size {n}"
            )
    else:
        first, second, _ = _sample_density_pair(_stream(config.seed, 402), n, 0)
    alpha = first / first.sum()
    alpha_other = second / second.sum()
    primitive, primitive_exponent = _primitivity(q.T)
    records: list[dict] = []
    skipped = 0
    step = 0
    for window in range(config.trials):
        d_start = _orthant_log_ratio(alpha, alpha_other)
        window_map = np.eye(n)
        for _ in range(config.horizon):
            step += 1
            likelihood = _sample_positive(_stream(config.seed, 403, step), n)
            alpha, _ = forward_step(model, alpha, likelihood)
            alpha_other, _ = forward_step(model, alpha_other, likelihood)
            window_map = (likelihood[:, None] * q.T) @ window_map
            # Rescaling changes nothing projectively and keeps entries bounded.
            window_map /= window_map.max()
        d_end = _orthant_log_ratio(alpha, alpha_other)
        if d_start < DEGENERATE_DISTANCE:
            skipped += 1
            continue
        records.append(
            {
                "window": window,
                "d_start": float(d_start),
                "d_end": float(d_end),
                "ratio": float(d_end / d_start),
                "window_bound": float(birkhoff_coefficient(window_map)),
            }
        )
    if not records:
        raise DegenerateSampleError(0)
    summary = _horizon_summary(
        records,
        skipped,
        per_step=birkhoff_coefficient(q.T),
        power=birkhoff_coefficient(np.linalg.matrix_power(q.T, config.horizon)),
        primitive=primitive,
        primitive_exponent=primitive_exponent,
        tolerance=config.tolerance,
    )
    return ExperimentReport(
        config=config.to_dict(),
        records=records,
        summary=summary,
        wall_time_s=time.perf_counter() - start,
    )


def _horizon_summary(
    records: list[dict],
    skipped: int,
    per_step: float,
    power: float,
    primitive: bool,
    primitive_exponent: int | None,
    tolerance: float,
) -> dict:
    violations = sum(
        1 for r in records if r["ratio"] > r["window_bound"] + tolerance
    )
    max_ratio = max(r["ratio"] for r in records)
    return {
        "windows": len(records),
        "skipped_windows": int(skipped),
        "per_step_coefficient": float(per_step),
        "power_coefficient": float(power),
        "primitive": bool(primitive),
        "primitive_exponent": primitive_exponent,
        "max_ratio": float(max_ratio),
        "tolerance": float(tolerance),
        "bound_violations": int(violations),
        "pass": bool(violations == 0),
    }


_RUNNERS: dict[str, Callable[[ExperimentConfig], ExperimentReport]] = {
    "orthant-nonexpansive": run_hmm_nonexpansiveness,
    "birkhoff-tightness": run_birkhoff_tightness,
    "hmm-forgetting": run_hmm_forgetting,
    "riccati-trace": run_riccati_trace,
    "horizon-contraction": run_horizon_contraction,
}


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Dispatch a config to its runner."""
    return _RUNNERS[config.kind](config)
