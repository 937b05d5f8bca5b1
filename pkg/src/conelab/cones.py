"""Hilbert and Thompson metrics on three concrete cones.

The cones are the strictly positive orthant in R^n, the symmetric positive
definite matrices, and finitely supported nonnegative measures (vectors with
zeros allowed).  The Hilbert distance between two interior points x, y is

    d_H(x, y) = log( M(x, y) / m(x, y) ),

where M is the least upper scaling of y above x in the cone order and m the
greatest lower one.  Points on distinct rays of the boundary can fail to be
comparable; that outcome is represented explicitly by an infinite distance,
never by a large float that happened to overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
import scipy.linalg

# Relative floor for positive definiteness: lambda_min must exceed
# PD_FLOOR * lambda_max.
PD_FLOOR = 1e-12
# Relative Frobenius asymmetry accepted before a matrix is rejected as
# non-symmetric; anything below is silently symmetrized.
SYM_TOL = 1e-9


@dataclass(frozen=True)
class ExtendedDistance:
    """A nonnegative distance that may be infinite.

    Infinite distance means "not comparable in the cone order" and is a
    semantic outcome callers are expected to branch on via ``is_infinite``.
    Finite values compare and convert like floats.
    """

    value: float

    INFINITE: ClassVar["ExtendedDistance"]

    def __post_init__(self) -> None:
        value = float(self.value)
        if math.isnan(value) or value < 0.0:
            raise ValueError(f"distance must be a nonnegative real, got {value!r}")
        object.__setattr__(self, "value", value)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def __float__(self) -> float:
        return self.value

    @staticmethod
    def _other_value(other) -> float:
        if isinstance(other, ExtendedDistance):
            return other.value
        return float(other)

    def __lt__(self, other) -> bool:
        return self.value < self._other_value(other)

    def __le__(self, other) -> bool:
        return self.value <= self._other_value(other)

    def __gt__(self, other) -> bool:
        return self.value > self._other_value(other)

    def __ge__(self, other) -> bool:
        return self.value >= self._other_value(other)

    def __repr__(self) -> str:
        if self.is_infinite:
            return "ExtendedDistance.INFINITE"
        return f"ExtendedDistance({self.value!r})"


ExtendedDistance.INFINITE = ExtendedDistance(math.inf)


def _as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a finite 1-D float array; accepts ConeVector or array-like."""
    if isinstance(x, ConeVector):
        return x.entries
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must have finite entries")
    return arr


def _as_matrix(x, name: str = "matrix") -> np.ndarray:
    if isinstance(x, SpdMatrix):
        return x.entries
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must have finite entries")
    return arr


def validate_spd(matrix, name: str = "matrix") -> np.ndarray:
    """Validate symmetry and positive definiteness; return the symmetrized array.

    Symmetry is judged at relative Frobenius tolerance SYM_TOL and enforced by
    averaging with the transpose.  Positive definiteness requires the smallest
    eigenvalue to exceed PD_FLOOR times the largest.
    """
    arr = _as_matrix(matrix, name)
    scale = np.linalg.norm(arr)
    if scale > 0.0:
        asym = np.linalg.norm(arr - arr.T) / scale
        if asym > SYM_TOL:
            raise ValueError(
                f"{name} is not symmetric: relative asymmetry {asym:.3e} exceeds {SYM_TOL:.1e}"
            )
    sym = (arr + arr.T) / 2.0
    eigs = np.linalg.eigvalsh(sym)
    if eigs[-1] <= 0.0 or eigs[0] <= PD_FLOOR * eigs[-1]:
        raise ValueError(
            f"{name} is not positive definite: eigenvalue range "
            f"[{eigs[0]:.6e}, {eigs[-1]:.6e}]"
        )
    return sym


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = arr.copy()
    out.flags.writeable = False
    return out


@dataclass(frozen=True, eq=False)
class ConeVector:
    """Vector in the closed nonnegative orthant, validated and immutable."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        arr = _as_vector(np.asarray(self.entries), "entries")
        if np.any(arr < 0.0):
            raise ValueError("entries must be nonnegative")
        object.__setattr__(self, "entries", _freeze(arr))

    @property
    def dim(self) -> int:
        return self.entries.size

    @property
    def strictly_positive(self) -> bool:
        return bool(np.all(self.entries > 0.0))

    @property
    def support(self) -> np.ndarray:
        """Boolean mask of strictly positive entries."""
        return self.entries > 0.0


@dataclass(frozen=True, eq=False)
class SpdMatrix:
    """Symmetric positive definite matrix, validated and immutable.

    Inputs within SYM_TOL of symmetric are symmetrized on construction;
    eigenvalues below PD_FLOOR relative to the largest are rejected.
    """

    entries: np.ndarray

    def __post_init__(self) -> None:
        sym = validate_spd(np.asarray(self.entries), "entries")
        object.__setattr__(self, "entries", _freeze(sym))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def cholesky(self) -> np.ndarray:
        """Lower Cholesky factor L with entries = L L^T."""
        return np.linalg.cholesky(self.entries)


def _require_interior(arr: np.ndarray, name: str) -> None:
    if np.any(arr <= 0.0):
        raise ValueError(f"{name} must be strictly positive for the open orthant")


def order_bounds_orthant(x, y) -> tuple[float, float]:
    """Least upper and greatest lower scaling bounds of y against x.

    Returns (M, m) with m * y <= x <= M * y entrywise; for the orthant these
    are the max and min of the entry ratios x_i / y_i.
    """
    xv = _as_vector(x, "x")
    yv = _as_vector(y, "y")
    if xv.shape != yv.shape:
        raise ValueError(f"dimension mismatch: {xv.size} vs {yv.size}")
    _require_interior(xv, "x")
    _require_interior(yv, "y")
    ratios = xv / yv
    return float(ratios.max()), float(ratios.min())


def _orthant_log_ratio(xv: np.ndarray, yv: np.ndarray) -> float:
    # Unvalidated kernel shared by the hot loops.
    ratios = xv / yv
    return float(np.log(ratios.max()) - np.log(ratios.min()))


def hilbert_distance_orthant(x, y) -> ExtendedDistance:
    """Hilbert projective distance on the strictly positive orthant.

    d_H(x, y) = log(max_i x_i/y_i) - log(min_i x_i/y_i).  Invariant under
    rescaling of either argument; zero exactly on proportional pairs.
    """
    big, small = order_bounds_orthant(x, y)
    return ExtendedDistance(math.log(big) - math.log(small))


def _whitened_spectrum(xm: np.ndarray, ym: np.ndarray) -> np.ndarray:
    """Eigenvalues of X Y^{-1}, computed from the congruent symmetric form.

    With Y = L L^T the spectrum of X Y^{-1} equals that of L^{-1} X L^{-T},
    which is symmetric positive definite, so eigvalsh applies.
    """
    chol = np.linalg.cholesky(ym)
    half = scipy.linalg.solve_triangular(chol, xm, lower=True)
    white = scipy.linalg.solve_triangular(chol, half.T, lower=True)
    return np.linalg.eigvalsh((white + white.T) / 2.0)


def _spd_pair(x, y) -> tuple[np.ndarray, np.ndarray]:
    xm = validate_spd(x, "x") if not isinstance(x, SpdMatrix) else x.entries
    ym = validate_spd(y, "y") if not isinstance(y, SpdMatrix) else y.entries
    if xm.shape != ym.shape:
        raise ValueError(f"dimension mismatch: {xm.shape[0]} vs {ym.shape[0]}")
    return xm, ym


def hilbert_distance_spd(x, y) -> ExtendedDistance:
    """Hilbert projective distance on symmetric positive definite matrices.

    d_H(X, Y) = log(lambda_max / lambda_min) over the spectrum of X Y^{-1}.
    Both arguments must be strictly positive definite, so the distance is
    always finite here; scaling either argument leaves it unchanged.
    """
    xm, ym = _spd_pair(x, y)
    eigs = _whitened_spectrum(xm, ym)
    if eigs[0] <= 0.0:
        raise ValueError("x must be positive definite")
    return ExtendedDistance(math.log(eigs[-1]) - math.log(eigs[0]))


def thompson_distance_spd(x, y) -> float:
    """Thompson part metric on positive definite matrices.

    d_T(X, Y) = max_i |log lambda_i(X Y^{-1})|.  Unlike the Hilbert distance
    this is a genuine metric (zero only at equality, not on rays).
    """
    xm, ym = _spd_pair(x, y)
    eigs = _whitened_spectrum(xm, ym)
    if eigs[0] <= 0.0:
        raise ValueError("x must be positive definite")
    return float(max(math.log(eigs[-1]), -math.log(eigs[0]), 0.0))


def _measures_log_ratio(av: np.ndarray, bv: np.ndarray) -> float:
    """Kernel: Hilbert distance of two nonnegative vectors with equal support.

    Returns math.inf when the supports differ.  No validation.
    """
    sa = av > 0.0
    if not np.array_equal(sa, bv > 0.0):
        return math.inf
    ratios = av[sa] / bv[sa]
    return float(np.log(ratios.max()) - np.log(ratios.min()))


def hilbert_distance_measures(mu, nu) -> ExtendedDistance:
    """Hilbert distance between finitely supported nonnegative measures.

    Measures are mass vectors over a common finite ground set.  When the two
    supports coincide the distance is the orthant formula restricted to the
    support; otherwise one measure is not dominated by any multiple of the
    other and the result is ExtendedDistance.INFINITE.
    """
    av = _as_vector(mu, "mu")
    bv = _as_vector(nu, "nu")
    if av.shape != bv.shape:
        raise ValueError(f"dimension mismatch: {av.size} vs {bv.size}")
    if np.any(av < 0.0) or np.any(bv < 0.0):
        raise ValueError("measures must have nonnegative masses")
    if not av.any() or not bv.any():
        raise ValueError("measures must not be identically zero")
    return ExtendedDistance(_measures_log_ratio(av, bv))
