import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conelab.cones import (
    ConeVector,
    ExtendedDistance,
    SpdMatrix,
    hilbert_distance_measures,
    hilbert_distance_orthant,
    hilbert_distance_spd,
    order_bounds_orthant,
    thompson_distance_spd,
    validate_spd,
)
from conftest import random_spd

# Hypothesis strategy: a dimension plus that many log-scale entries.


@st.composite
def positive_vectors(draw, count: int = 1, max_dim: int = 8):
    n = draw(st.integers(min_value=1, max_value=max_dim))
    out = []
    for _ in range(count):
        logs = draw(
            st.lists(
                st.floats(min_value=-3.0, max_value=3.0),
                min_size=n,
                max_size=n,
            )
        )
        out.append(np.exp(np.array(logs)))
    return out[0] if count == 1 else out


class TestExtendedDistance:
    def test_rejects_negative_and_nan(self):
        with pytest.raises(ValueError):
            ExtendedDistance(-1e-9)
        with pytest.raises(ValueError):
            ExtendedDistance(float("nan"))

    def test_infinite_variant(self):
        assert ExtendedDistance.INFINITE.is_infinite
        assert not ExtendedDistance(3.0).is_infinite
        assert math.isinf(float(ExtendedDistance.INFINITE))
        assert ExtendedDistance.INFINITE == ExtendedDistance(math.inf)

    def test_comparisons_against_numbers(self):
        d = ExtendedDistance(1.5)
        assert d > 1.0 and d < 2.0 and d <= 1.5 and d >= 1.5
        assert ExtendedDistance.INFINITE > 1e300
        assert float(d) == 1.5

    def test_immutable(self):
        with pytest.raises(AttributeError):
            ExtendedDistance(1.0).value = 2.0


class TestConeVector:
    def test_rejects_negative_entries(self):
        with pytest.raises(ValueError):
            ConeVector(np.array([1.0, -0.1]))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            ConeVector(np.array([1.0, np.inf]))

    def test_support_and_positivity(self):
        v = ConeVector(np.array([0.5, 0.0, 2.0]))
        assert v.dim == 3
        assert not v.strictly_positive
        assert list(v.support) == [True, False, True]
        assert ConeVector(np.array([1.0, 2.0])).strictly_positive

    def test_entries_read_only(self):
        v = ConeVector(np.array([1.0, 2.0]))
        with pytest.raises(ValueError):
            v.entries[0] = 5.0


class TestSpdMatrix:
    def test_rejects_asymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            SpdMatrix(np.array([[1.0, 0.5], [0.0, 1.0]]))

    def test_symmetrizes_small_asymmetry(self):
        m = SpdMatrix(np.array([[1.0, 1e-13], [0.0, 1.0]]))
        assert np.array_equal(m.entries, m.entries.T)

    def test_rejects_indefinite(self):
        with pytest.raises(ValueError, match="positive definite"):
            SpdMatrix(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_relative_eigenvalue_floor(self):
        # lambda_min / lambda_max below 1e-12 counts as singular.
        with pytest.raises(ValueError, match="positive definite"):
            SpdMatrix(np.diag([1e13, 1e-3, 1.0]))

    def test_cholesky_factor(self, rng):
        m = SpdMatrix(random_spd(rng, 4))
        chol = m.cholesky()
        assert np.allclose(chol @ chol.T, m.entries)
        assert m.n == 4

    def test_validate_spd_names_the_matrix(self):
        with pytest.raises(ValueError, match="Gamma"):
            validate_spd(np.array([[0.0]]), "Gamma")


class TestOrthantDistance:
    def test_exact_log4(self):
        d = hilbert_distance_orthant([1.0, 2.0], [2.0, 1.0])
        assert abs(float(d) - math.log(4.0)) < 1e-12

    def test_order_bounds(self):
        big, small = order_bounds_orthant([1.0, 2.0], [2.0, 1.0])
        assert big == 2.0 and small == 0.5

    def test_rejects_boundary(self):
        with pytest.raises(ValueError):
            hilbert_distance_orthant([1.0, 0.0], [1.0, 1.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="mismatch"):
            hilbert_distance_orthant([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_accepts_cone_vector(self):
        d = hilbert_distance_orthant(
            ConeVector(np.array([1.0, 2.0])), ConeVector(np.array([2.0, 1.0]))
        )
        assert abs(float(d) - math.log(4.0)) < 1e-12

    @given(positive_vectors(count=2))
    @settings(max_examples=100, deadline=None)
    def test_symmetry(self, pair):
        x, y = pair
        assert abs(
            float(hilbert_distance_orthant(x, y)) - float(hilbert_distance_orthant(y, x))
        ) < 1e-12

    @given(positive_vectors(count=3))
    @settings(max_examples=100, deadline=None)
    def test_triangle_inequality(self, triple):
        x, y, z = triple
        dxz = float(hilbert_distance_orthant(x, z))
        dxy = float(hilbert_distance_orthant(x, y))
        dyz = float(hilbert_distance_orthant(y, z))
        assert dxz <= dxy + dyz + 1e-10

    @given(
        positive_vectors(count=2),
        st.floats(min_value=-6.0, max_value=6.0),
        st.floats(min_value=-6.0, max_value=6.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_projective_invariance(self, pair, log_lam, log_mu):
        x, y = pair
        base = float(hilbert_distance_orthant(x, y))
        scaled = float(
            hilbert_distance_orthant(10.0**log_lam * x, 10.0**log_mu * y)
        )
        assert abs(base - scaled) < 1e-12

    @given(positive_vectors(), st.floats(min_value=0.01, max_value=100.0))
    @settings(max_examples=50, deadline=None)
    def test_zero_iff_proportional(self, x, scale):
        assert float(hilbert_distance_orthant(x, scale * x)) < 1e-12

    def test_positive_on_nonproportional(self):
        assert float(hilbert_distance_orthant([1.0, 1.0], [1.0, 2.0])) > 0.1


class TestSpdDistance:
    def test_diagonal_exact(self):
        d = hilbert_distance_spd(np.diag([1.0, 4.0]), np.eye(2))
        assert abs(float(d) - math.log(4.0)) < 1e-12

    def test_thompson_diagonal_exact(self):
        assert abs(
            thompson_distance_spd(np.diag([1.0, 4.0]), np.eye(2)) - math.log(4.0)
        ) < 1e-12

    def test_matches_orthant_on_diagonals(self, rng):
        for _ in range(25):
            n = int(rng.integers(1, 7))
            x = np.exp(rng.uniform(-3, 3, n))
            y = np.exp(rng.uniform(-3, 3, n))
            spd = float(hilbert_distance_spd(np.diag(x), np.diag(y)))
            orthant = (
                float(hilbert_distance_orthant(x, y)) if n > 1
                else 0.0  # one ray: projectively a point
            )
            if n == 1:
                assert spd == 0.0
            else:
                assert abs(spd - orthant) < 1e-12

    def test_scalar_projective_collapse(self):
        # All 1x1 matrices lie on one ray: Hilbert 0, Thompson log ratio.
        assert float(hilbert_distance_spd([[0.1]], [[10.0]])) == 0.0
        assert abs(
            thompson_distance_spd([[0.1]], [[10.0]]) - math.log(100.0)
        ) < 1e-12

    def test_symmetry_and_triangle(self, rng):
        for _ in range(20):
            n = int(rng.integers(2, 6))
            x, y, z = (random_spd(rng, n) for _ in range(3))
            dxy = float(hilbert_distance_spd(x, y))
            assert abs(dxy - float(hilbert_distance_spd(y, x))) < 1e-10
            assert dxy <= float(hilbert_distance_spd(x, z)) + float(
                hilbert_distance_spd(z, y)
            ) + 1e-10

    def test_scaling_invariance(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 6))
            x, y = random_spd(rng, n), random_spd(rng, n)
            lam, mu = 10.0 ** rng.uniform(-6, 6, size=2)
            assert abs(
                float(hilbert_distance_spd(lam * x, mu * y))
                - float(hilbert_distance_spd(x, y))
            ) < 1e-12

    def test_thompson_is_a_metric(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 6))
            x, y, z = (random_spd(rng, n) for _ in range(3))
            dxy = thompson_distance_spd(x, y)
            assert dxy >= 0.0
            assert abs(dxy - thompson_distance_spd(y, x)) < 1e-10
            assert dxy <= thompson_distance_spd(x, z) + thompson_distance_spd(z, y) + 1e-10
            assert thompson_distance_spd(x, x) < 1e-12
        # Thompson separates rays, so scaling moves the distance.
        assert abs(
            thompson_distance_spd(2.0 * np.eye(3), np.eye(3)) - math.log(2.0)
        ) < 1e-12

    def test_congruence_invariance(self, rng):
        # d(G X G^T, G Y G^T) = d(X, Y) for invertible G.
        for _ in range(10):
            n = int(rng.integers(2, 5))
            x, y = random_spd(rng, n), random_spd(rng, n)
            g = rng.normal(size=(n, n)) + 0.5 * np.eye(n)
            if abs(np.linalg.det(g)) < 1e-3:
                continue
            before = float(hilbert_distance_spd(x, y))
            after = float(hilbert_distance_spd(g @ x @ g.T, g @ y @ g.T))
            assert abs(before - after) < 1e-9

    def test_accepts_spd_matrix_wrapper(self, rng):
        x, y = random_spd(rng, 3), random_spd(rng, 3)
        assert float(hilbert_distance_spd(SpdMatrix(x), SpdMatrix(y))) == pytest.approx(
            float(hilbert_distance_spd(x, y)), abs=1e-14
        )

    def test_rejects_indefinite_input(self):
        with pytest.raises(ValueError, match="positive definite"):
            hilbert_distance_spd(np.array([[1.0, 2.0], [2.0, 1.0]]), np.eye(2))


class TestMeasureDistance:
    def test_matching_support_exact(self):
        d = hilbert_distance_measures([1.0, 2.0, 0.0], [2.0, 1.0, 0.0])
        assert abs(float(d) - math.log(4.0)) < 1e-12

    def test_support_mismatch_is_infinite(self):
        d = hilbert_distance_measures([1.0, 0.0], [1.0, 1.0])
        assert d.is_infinite
        assert d == ExtendedDistance.INFINITE

    def test_reduces_to_orthant_on_full_support(self, rng):
        for _ in range(25):
            n = int(rng.integers(1, 8))
            x = np.exp(rng.uniform(-3, 3, n))
            y = np.exp(rng.uniform(-3, 3, n))
            assert abs(
                float(hilbert_distance_measures(x, y))
                - (math.log((x / y).max()) - math.log((x / y).min()))
            ) < 1e-12

    def test_scaling_invariance_with_zeros(self, rng):
        for _ in range(25):
            n = int(rng.integers(2, 8))
            support = rng.uniform(size=n) < 0.7
            support[int(rng.integers(n))] = True
            x = np.exp(rng.uniform(-3, 3, n)) * support
            y = np.exp(rng.uniform(-3, 3, n)) * support
            lam, mu = 10.0 ** rng.uniform(-6, 6, size=2)
            assert abs(
                float(hilbert_distance_measures(lam * x, mu * y))
                - float(hilbert_distance_measures(x, y))
            ) < 1e-12

    def test_rejects_zero_measure(self):
        with pytest.raises(ValueError, match="identically zero"):
            hilbert_distance_measures([0.0, 0.0], [1.0, 1.0])

    def test_rejects_negative_mass(self):
        with pytest.raises(ValueError, match="nonnegative"):
            hilbert_distance_measures([1.0, -1.0], [1.0, 1.0])
