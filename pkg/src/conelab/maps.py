"""Positive linear maps on the orthant and their Birkhoff contraction numbers.

A nonnegative matrix with no all-zero row maps the strictly positive orthant
into itself and never expands the Hilbert distance.  Its projective diameter
Delta (the largest Hilbert distance between images) yields the Birkhoff
contraction coefficient tanh(Delta / 4), a sharp Lipschitz constant for the
induced projective map.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cones import ExtendedDistance, _measures_log_ratio, _orthant_log_ratio

# Pairs closer than this in Hilbert distance are excluded from empirical
# contraction ratios; the quotient is numerically meaningless below it.
DEGENERATE_DISTANCE = 1e-9


@dataclass(frozen=True, eq=False)
class PositiveLinearMap:
    """Nonnegative matrix with no all-zero row, acting on the orthant."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.entries, dtype=float)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError(f"map must be a nonempty matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("map entries must be finite")
        if np.any(arr < 0.0):
            raise ValueError("map entries must be nonnegative")
        zero_rows = np.flatnonzero(~arr.any(axis=1))
        if zero_rows.size:
            raise ValueError(
                f"map row {int(zero_rows[0])} is identically zero; "
                "the map would leave the cone"
            )
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "entries", arr)

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.entries > 0.0))


def _map_entries(a) -> np.ndarray:
    if isinstance(a, PositiveLinearMap):
        return a.entries
    return PositiveLinearMap(a).entries


def apply_map(a, x) -> np.ndarray:
    """Apply the map to a strictly positive vector; the image is one too."""
    arr = _map_entries(a)
    xv = np.asarray(x, dtype=float)
    if xv.ndim != 1 or xv.size != arr.shape[1]:
        raise ValueError(
            f"vector of length {xv.size} does not match map with {arr.shape[1]} columns"
        )
    if np.any(xv <= 0.0) or not np.all(np.isfinite(xv)):
        raise ValueError("vector must be strictly positive and finite")
    return arr @ xv


def projective_diameter(a) -> ExtendedDistance:
    """Diameter of the image of the open orthant in Hilbert distance.

    Equals the largest pairwise Hilbert distance between nonzero columns,
    since columns are the extreme images.  Zero-support mismatch between two
    columns makes the diameter infinite; at most one distinct ray makes it 0.
    """
    arr = _map_entries(a)
    keep = arr.any(axis=0)
    cols = arr[:, keep]
    ncols = cols.shape[1]
    if ncols <= 1:
        return ExtendedDistance(0.0)
    if np.all(cols > 0.0):
        # Vectorized strictly positive path: for columns k, l the distance is
        # max_i (log a_ik - log a_il) - min_i (log a_ik - log a_il).
        logs = np.log(cols)
        best = 0.0
        for j in range(ncols - 1):
            diff = logs[:, j + 1 :] - logs[:, j : j + 1]
            spread = diff.max(axis=0) - diff.min(axis=0)
            best = max(best, float(spread.max()))
        return ExtendedDistance(best)
    best = 0.0
    for j in range(ncols - 1):
        for k in range(j + 1, ncols):
            dist = _measures_log_ratio(cols[:, j], cols[:, k])
            if math.isinf(dist):
                return ExtendedDistance.INFINITE
            best = max(best, dist)
    return ExtendedDistance(best)


def birkhoff_coefficient(a) -> float:
    """Contraction coefficient tanh(Delta / 4) in [0, 1].

    1 when the projective diameter Delta is infinite, 0 for rank-one maps.
    """
    diameter = projective_diameter(a)
    if diameter.is_infinite:
        return 1.0
    return math.tanh(diameter.value / 4.0)


@dataclass(frozen=True)
class ContractionReport:
    """Outcome of randomized contraction-ratio sampling for one map."""

    observed_max_ratio: float
    birkhoff_bound: float
    trials: int
    seed: int

    def __post_init__(self) -> None:
        if not 0.0 <= self.birkhoff_bound <= 1.0:
            raise ValueError(f"bound must lie in [0, 1], got {self.birkhoff_bound}")
        if self.observed_max_ratio < 0.0:
            raise ValueError("observed ratio must be nonnegative")


def empirical_contraction_ratio(a, trials: int, seed: int) -> ContractionReport:
    """Sample Hilbert contraction ratios of the map on random positive pairs.

    Each trial draws x, y with entries exp(U[-3, 3]) from an independent
    stream derived from (seed, trial index), so results do not depend on
    execution order.  Pairs with d_H(x, y) < 1e-9 are skipped.
    """
    arr = _map_entries(a)
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if seed < 0:
        raise ValueError(f"seed must be a nonnegative integer, got {seed}")
    ncols = arr.shape[1]
    bound = birkhoff_coefficient(arr)
    max_ratio = 0.0
    for trial in range(trials):
        rng = np.random.default_rng((seed, trial))
        pair = np.exp(rng.uniform(-3.0, 3.0, size=(2, ncols)))
        before = _orthant_log_ratio(pair[0], pair[1])
        if before < DEGENERATE_DISTANCE:
            continue
        # Images are strictly positive: no zero rows, strictly positive input.
        after = _orthant_log_ratio(arr @ pair[0], arr @ pair[1])
        ratio = after / before
        if ratio > max_ratio:
            max_ratio = ratio
    return ContractionReport(
        observed_max_ratio=max_ratio,
        birkhoff_bound=bound,
        trials=trials,
        seed=seed,
    )
