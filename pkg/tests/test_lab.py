import math

import numpy as np
import pytest

from conelab.cones import _orthant_log_ratio
from conelab.kalman import LinearGaussianModel
from conelab.lab import (
    EXPERIMENT_KINDS,
    TIGHTNESS_MIN_TRIALS,
    DegenerateSampleError,
    ExperimentConfig,
    _primitivity,
    run_birkhoff_tightness,
    run_experiment,
    run_hmm_forgetting,
    run_hmm_nonexpansiveness,
    run_horizon_contraction,
    run_riccati_trace,
)
from conelab.maps import birkhoff_coefficient


def scalar_model(p0: float = 0.1) -> LinearGaussianModel:
    return LinearGaussianModel(
        A=[[1.0]], C=[[1.0]], Gamma=[[1.0]], Sigma=[[1.0]], mu0=[0.0], P0=[[p0]],
    )


class TestExperimentConfig:
    def test_kind_vocabulary(self):
        with pytest.raises(ValueError, match="kind"):
            ExperimentConfig(kind="unknown", seed=0)

    def test_numeric_validation(self):
        with pytest.raises(ValueError, match="seed"):
            ExperimentConfig(kind="orthant-nonexpansive", seed=-1)
        with pytest.raises(ValueError, match="trials"):
            ExperimentConfig(kind="orthant-nonexpansive", seed=0, trials=0)
        with pytest.raises(ValueError, match="dims"):
            ExperimentConfig(kind="orthant-nonexpansive", seed=0, dims=(0,))
        with pytest.raises(ValueError, match="horizon"):
            ExperimentConfig(kind="orthant-nonexpansive", seed=0, horizon=0)
        with pytest.raises(ValueError, match="tolerance"):
            ExperimentConfig(kind="orthant-nonexpansive", seed=0, tolerance=0.0)
        with pytest.raises(ValueError, match="matrix_count"):
            ExperimentConfig(kind="birkhoff-tightness", seed=0, matrix_count=0)

    def test_scalar_dims_coerced(self):
        config = ExperimentConfig(kind="orthant-nonexpansive", seed=0, dims=4)
        assert config.dims == (4,)

    def test_initial_pair_validation(self):
        with pytest.raises(ValueError, match="two vectors"):
            ExperimentConfig(
                kind="hmm-forgetting", seed=0, initial_pair=(np.ones((2, 2)), np.ones(2))
            )
        with pytest.raises(ValueError, match="strictly positive"):
            ExperimentConfig(
                kind="hmm-forgetting", seed=0,
                initial_pair=(np.array([1.0, 0.0]), np.ones(2)),
            )
        with pytest.raises(ValueError, match="share a dimension"):
            ExperimentConfig(
                kind="hmm-forgetting", seed=0,
                initial_pair=(np.ones(2), np.ones(3)),
            )

    def test_model_type_checked(self):
        with pytest.raises(ValueError, match="model"):
            ExperimentConfig(kind="riccati-trace", seed=0, model=np.eye(2))

    def test_p0_prime_must_be_spd(self):
        with pytest.raises(ValueError, match="p0_prime"):
            ExperimentConfig(
                kind="riccati-trace", seed=0, model=scalar_model(),
                p0_prime=[[-1.0]],
            )

    def test_to_dict_echoes_optional_fields(self):
        config = ExperimentConfig(
            kind="riccati-trace", seed=7, horizon=5,
            model=scalar_model(), p0_prime=[[10.0]],
        )
        echoed = config.to_dict()
        assert list(echoed)[:7] == [
            "kind", "seed", "trials", "dims", "horizon", "tolerance", "matrix_count",
        ]
        assert echoed["model"]["P0"] == [[0.1]]
        assert echoed["p0_prime"] == [[10.0]]
        assert "transition" not in echoed
        assert "initial_pair" not in echoed


class TestDeterminism:
    @pytest.mark.parametrize("kind", EXPERIMENT_KINDS)
    def test_same_config_same_bytes(self, kind):
        def build():
            if kind == "orthant-nonexpansive":
                return ExperimentConfig(kind=kind, seed=11, trials=40, dims=(2, 3, 5))
            if kind == "birkhoff-tightness":
                return ExperimentConfig(
                    kind=kind, seed=11, trials=500, dims=(2, 3), matrix_count=3
                )
            if kind == "hmm-forgetting":
                return ExperimentConfig(kind=kind, seed=11, horizon=12, dims=(3,))
            if kind == "riccati-trace":
                return ExperimentConfig(
                    kind=kind, seed=11, horizon=10,
                    model=scalar_model(), p0_prime=[[10.0]],
                )
            return ExperimentConfig(kind=kind, seed=11, trials=3, horizon=4, dims=(3,))

        first = run_experiment(build())
        second = run_experiment(build())
        assert first.body_json() == second.body_json()

    def test_wall_time_outside_body(self):
        config = ExperimentConfig(kind="orthant-nonexpansive", seed=1, trials=5)
        report = run_experiment(config)
        assert report.wall_time_s > 0.0
        before = report.body_json()
        report.wall_time_s = 999.0
        assert report.body_json() == before
        assert "wall_time_s" not in report.body()

    def test_different_seed_different_records(self):
        base = dict(kind="orthant-nonexpansive", trials=5)
        a = run_experiment(ExperimentConfig(seed=1, **base))
        b = run_experiment(ExperimentConfig(seed=2, **base))
        assert a.records != b.records


class TestNonexpansiveness:
    def test_random_transitions_never_expand(self):
        config = ExperimentConfig(
            kind="orthant-nonexpansive", seed=3, trials=200, dims=(2, 3, 4)
        )
        report = run_hmm_nonexpansiveness(config)
        assert report.passed
        assert report.summary["bound"] == 1.0
        assert report.summary["max_ratio"] <= 1.0 + config.tolerance
        assert {r["dim"] for r in report.records} <= {2, 3, 4}
        assert all(r["d_before"] >= 1e-9 for r in report.records)

    def test_fixed_transition_tightens_bound(self):
        q = np.array([[0.75, 0.25], [0.25, 0.75]])
        config = ExperimentConfig(
            kind="orthant-nonexpansive", seed=3, trials=200, transition=q
        )
        report = run_hmm_nonexpansiveness(config)
        assert report.summary["bound"] == pytest.approx(birkhoff_coefficient(q.T))
        assert report.passed

    def test_dimension_one_is_degenerate(self):
        # In one dimension every pair is projectively identical.
        config = ExperimentConfig(kind="orthant-nonexpansive", seed=0, trials=1, dims=(1,))
        with pytest.raises(DegenerateSampleError) as info:
            run_hmm_nonexpansiveness(config)
        assert info.value.trial == 0

    def test_kind_mismatch_rejected(self):
        config = ExperimentConfig(kind="birkhoff-tightness", seed=0)
        with pytest.raises(ValueError, match="does not match"):
            run_hmm_nonexpansiveness(config)


class TestBirkhoffTightness:
    def test_fixed_matrix_bound_and_delta(self):
        config = ExperimentConfig(
            kind="birkhoff-tightness", seed=5, trials=2000,
            matrix=[[2.0, 1.0], [1.0, 2.0]], matrix_count=2,
        )
        report = run_birkhoff_tightness(config)
        assert report.passed
        for record in report.records:
            assert record["bound"] == pytest.approx(1.0 / 3.0, abs=1e-12)
            assert record["delta"] == pytest.approx(math.log(4.0), abs=1e-12)
        assert report.summary["tightness_applies"] is False

    def test_large_trial_count_activates_tightness(self):
        config = ExperimentConfig(
            kind="birkhoff-tightness", seed=5, trials=TIGHTNESS_MIN_TRIALS,
            matrix=[[2.0, 1.0], [1.0, 2.0]], matrix_count=1,
        )
        report = run_birkhoff_tightness(config)
        assert report.summary["tightness_applies"] is True
        assert report.summary["tight_fraction"] == 1.0
        assert report.passed

    def test_random_matrices_stay_below_bounds(self):
        config = ExperimentConfig(
            kind="birkhoff-tightness", seed=9, trials=300, dims=(2, 3, 4),
            matrix_count=5,
        )
        report = run_birkhoff_tightness(config)
        assert report.summary["bound_violations"] == 0
        for record in report.records:
            assert record["max_ratio"] <= record["bound"] + config.tolerance


class TestForgetting:
    def test_fixed_pair_envelope(self):
        q = np.array([[0.9, 0.1], [0.1, 0.9]])
        pair = (np.array([0.99, 0.01]), np.array([0.01, 0.99]))
        config = ExperimentConfig(
            kind="hmm-forgetting", seed=2, horizon=15, transition=q, initial_pair=pair,
        )
        report = run_hmm_forgetting(config)
        assert report.passed
        normalized = tuple(v / v.sum() for v in pair)
        d0 = _orthant_log_ratio(*normalized)
        assert report.records[0]["hilbert_distance"] == pytest.approx(d0, abs=1e-12)
        coeff = birkhoff_coefficient(q.T)
        for record in report.records:
            assert record["bound"] == pytest.approx(
                coeff ** record["step"] * d0, rel=1e-12
            )
            assert record["hilbert_distance"] <= record["bound"] + 1e-9
        assert report.summary["terminal_distance"] < 0.01 * d0

    def test_identical_initializations_stay_merged(self):
        pair = (np.array([0.3, 0.7]), np.array([0.3, 0.7]))
        config = ExperimentConfig(
            kind="hmm-forgetting", seed=2, horizon=8, dims=(2,), initial_pair=pair,
        )
        report = run_hmm_forgetting(config)
        assert report.passed
        assert all(r["hilbert_distance"] == 0.0 for r in report.records)

    def test_permutation_transition_has_no_envelope(self):
        q = np.array([[0.0, 1.0], [1.0, 0.0]])
        pair = (np.array([0.2, 0.8]), np.array([0.6, 0.4]))
        config = ExperimentConfig(
            kind="hmm-forgetting", seed=2, horizon=6, transition=q, initial_pair=pair,
        )
        report = run_hmm_forgetting(config)
        assert report.summary["strictly_positive"] is False
        assert all(r["bound"] is None for r in report.records)
        # A permutation step is a cone isometry: the distance never moves.
        first = report.records[0]["hilbert_distance"]
        last = report.records[-1]["hilbert_distance"]
        assert last == pytest.approx(first, abs=1e-12)
        assert report.passed

    def test_pair_dimension_checked_against_transition(self):
        config = ExperimentConfig(
            kind="hmm-forgetting", seed=2, transition=np.eye(2),
            initial_pair=(np.ones(3), np.ones(3)),
        )
        with pytest.raises(ValueError, match="does not match transition"):
            run_hmm_forgetting(config)


class TestRiccatiTrace:
    def test_requires_model_and_second_start(self):
        with pytest.raises(ValueError, match="state-space model"):
            run_riccati_trace(ExperimentConfig(kind="riccati-trace", seed=0))
        with pytest.raises(ValueError, match="p0_prime"):
            run_riccati_trace(
                ExperimentConfig(kind="riccati-trace", seed=0, model=scalar_model())
            )
        with pytest.raises(ValueError, match="1x1"):
            run_riccati_trace(
                ExperimentConfig(
                    kind="riccati-trace", seed=0, model=scalar_model(),
                    p0_prime=np.eye(2),
                )
            )

    def test_scalar_trace_values(self):
        config = ExperimentConfig(
            kind="riccati-trace", seed=0, horizon=30,
            model=scalar_model(p0=0.1), p0_prime=[[10.0]],
        )
        report = run_riccati_trace(config)
        assert report.passed
        # One-dimensional covariances all lie on a single ray.
        assert all(r["hilbert_distance"] == 0.0 for r in report.records)
        assert report.records[0]["thompson_distance"] == pytest.approx(
            math.log(100.0), abs=1e-12
        )
        assert report.records[1]["thompson_distance"] == pytest.approx(
            math.log(1.75), abs=1e-12
        )
        assert report.summary["terminal_thompson"] <= 1e-8

    def test_equal_starts_stay_equal(self):
        config = ExperimentConfig(
            kind="riccati-trace", seed=0, horizon=10,
            model=scalar_model(p0=0.5), p0_prime=[[0.5]],
        )
        report = run_riccati_trace(config)
        # Whitening identical scalars leaves eigenvalue roundoff at the ulp level.
        assert all(r["thompson_distance"] <= 1e-14 for r in report.records)
        assert all(r["hilbert_distance"] == 0.0 for r in report.records)

    def test_matrix_trace_contracts(self):
        model = LinearGaussianModel(
            A=[[0.6, 0.2], [0.0, 0.5]], C=[[1.0, 0.0]], Gamma=np.eye(2),
            Sigma=[[1.0]], mu0=[0.0, 0.0], P0=np.diag([0.1, 5.0]),
        )
        config = ExperimentConfig(
            kind="riccati-trace", seed=0, horizon=25, model=model,
            p0_prime=np.diag([8.0, 0.2]),
        )
        report = run_riccati_trace(config)
        assert report.passed
        assert report.summary["initial_hilbert"] > 1.0
        assert report.summary["terminal_hilbert"] < 1e-10


class TestHorizonContraction:
    def test_positive_transition_within_window_bounds(self):
        q = np.array([[0.8, 0.2], [0.3, 0.7]])
        config = ExperimentConfig(
            kind="horizon-contraction", seed=4, trials=5, horizon=3, transition=q,
        )
        report = run_horizon_contraction(config)
        assert report.passed
        assert report.summary["primitive"] is True
        assert report.summary["primitive_exponent"] == 1
        for record in report.records:
            assert record["ratio"] <= record["window_bound"] + config.tolerance
        assert report.summary["per_step_coefficient"] == pytest.approx(
            birkhoff_coefficient(q.T)
        )

    def test_permutation_transition_never_contracts(self):
        q = np.array([[0.0, 1.0], [1.0, 0.0]])
        pair = (np.array([0.2, 0.8]), np.array([0.6, 0.4]))
        config = ExperimentConfig(
            kind="horizon-contraction", seed=4, trials=4, horizon=3,
            transition=q, initial_pair=pair,
        )
        report = run_horizon_contraction(config)
        assert report.summary["primitive"] is False
        assert report.summary["primitive_exponent"] is None
        for record in report.records:
            assert record["ratio"] == pytest.approx(1.0, abs=1e-12)
            assert record["window_bound"] == 1.0
        assert report.passed

    def test_identical_pair_skips_every_window(self):
        pair = (np.ones(2), np.ones(2))
        config = ExperimentConfig(
            kind="horizon-contraction", seed=4, trials=3, horizon=2,
            transition=np.array([[0.5, 0.5], [0.5, 0.5]]), initial_pair=pair,
        )
        with pytest.raises(DegenerateSampleError):
            run_horizon_contraction(config)


class TestPrimitivity:
    def test_positive_matrix(self):
        assert _primitivity(np.ones((3, 3))) == (True, 1)

    def test_fibonacci_pattern(self):
        assert _primitivity(np.array([[1.0, 1.0], [1.0, 0.0]])) == (True, 2)

    def test_swap_is_not_primitive(self):
        assert _primitivity(np.array([[0.0, 1.0], [1.0, 0.0]])) == (False, None)


class TestDispatch:
    def test_run_experiment_routes_by_kind(self):
        config = ExperimentConfig(kind="orthant-nonexpansive", seed=1, trials=5)
        report = run_experiment(config)
        assert report.config["kind"] == "orthant-nonexpansive"
