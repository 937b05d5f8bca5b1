"""Command-line front end.

Five subcommands: metric (one-off distance queries), hmm-filter and kalman
(filter runs over a config's observation record), riccati (fixed-point
iteration), and lab (randomized experiments).  Every run writes its results
under --out; JSON/CSV bodies are byte-deterministic, wall-clock metadata goes
to run_meta.json, and the report path renders figures next to the delimited
output unless --no-figures is given.

Exit codes: 0 success, 1 runtime failure (the error is surfaced and, for
riccati, a non-convergence report is still written), 2 config validation
failure with a field-level diagnostic.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import figures
from .cones import (
    hilbert_distance_measures,
    hilbert_distance_orthant,
    hilbert_distance_spd,
    thompson_distance_spd,
)
from .hmm import HmmModel, ImpossibleObservationError
from .hmm import filter_sequence as hmm_filter_sequence
from .kalman import (
    LinearGaussianModel,
    RiccatiNonConvergenceError,
    dare_fixed_point,
)
from .kalman import filter_sequence as kalman_filter_sequence
from .lab import DegenerateSampleError, run_experiment
from .modelio import (
    METRIC_CONES,
    ConfigError,
    csv_cell,
    distance_json,
    dump_json,
    emit_model,
    load_config_file,
    load_experiment_config,
    load_model,
    load_observations,
    records_csv_name,
    write_records_csv,
    write_report_json,
    write_run_meta,
    _matrix,
    _number,
    _vector,
)

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 10_000


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="conelab",
        description="Projective cone metrics, Birkhoff contraction, and filter stability",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="path to a JSON config")
        p.add_argument("--out", default="out", help="output directory (default: out)")
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed; overrides the config's seed")
        p.add_argument("--format", choices=("json", "csv", "both"), default="both",
                       help="which report bodies to write (default: both)")
        p.add_argument("--no-figures", action="store_true",
                       help="skip rendering PNG figures")

    common(sub.add_parser("metric", help="distance between two cone points"))
    common(sub.add_parser("hmm-filter", help="forward filter over an observation record"))
    common(sub.add_parser("kalman", help="Kalman filter over an observation record"))
    riccati = sub.add_parser("riccati", help="steady-state covariance iteration")
    common(riccati)
    riccati.add_argument("--tol", type=float, default=None,
                         help=f"convergence tolerance (default {DEFAULT_TOL})")
    riccati.add_argument("--max-iter", type=int, default=None,
                         help=f"iteration budget (default {DEFAULT_MAX_ITER})")
    common(sub.add_parser("lab", help="run a randomized experiment"))
    return parser


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _expect_kind(obj: dict, expected: str, command: str) -> None:
    kind = obj.get("kind")
    if kind != expected:
        raise ConfigError(
            f"subcommand {command!r} needs a config with kind {expected!r}, "
            f"got {kind!r}"
        )


def _wants(args, body: str) -> bool:
    return args.format in (body, "both")


def _run_metric(args) -> int:
    obj = load_config_file(args.config)
    _expect_kind(obj, "metric", "metric")
    cone = obj.get("cone")
    if cone not in METRIC_CONES:
        raise ConfigError(f"cone must be one of {list(METRIC_CONES)}, got {cone!r}")
    if "x" not in obj or "y" not in obj:
        raise ConfigError("metric config needs both 'x' and 'y'")
    result: dict = {"kind": "metric", "cone": cone}
    try:
        if cone == "orthant":
            d = hilbert_distance_orthant(_vector(obj["x"], "x"), _vector(obj["y"], "y"))
            result["hilbert"] = distance_json(d)
        elif cone == "measure":
            d = hilbert_distance_measures(_vector(obj["x"], "x"), _vector(obj["y"], "y"))
            result["hilbert"] = distance_json(d)
        else:
            x = _matrix(obj["x"], "x")
            y = _matrix(obj["y"], "y")
            result["hilbert"] = distance_json(hilbert_distance_spd(x, y))
            result["thompson"] = thompson_distance_spd(x, y)
    except ValueError as err:
        # Bad cone data in the config is a validation failure.
        raise ConfigError(str(err)) from None
    out = _out_dir(args)
    if _wants(args, "json"):
        dump_json(result, out / "report.json")
    write_run_meta(out / "run_meta.json", seed=args.seed)
    print(f"{cone} hilbert distance: {result['hilbert']}")
    if "thompson" in result:
        print(f"{cone} thompson distance: {result['thompson']}")
    return 0


def _write_hmm_csv(trace, path) -> None:
    n = trace.densities.shape[1]
    header = ["step", "log_likelihood_increment"] + [f"p_{i}" for i in range(n)]
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for step in range(trace.steps):
            row = [str(step), csv_cell(float(trace.log_likelihood_increments[step]))]
            row += [csv_cell(float(v)) for v in trace.densities[step]]
            writer.writerow(row)


def _run_hmm_filter(args) -> int:
    obj = load_config_file(args.config)
    _expect_kind(obj, "hmm", "hmm-filter")
    model = load_model(obj)
    observations = load_observations(obj, model)
    out = _out_dir(args)
    try:
        trace = hmm_filter_sequence(model, observations)
    except ImpossibleObservationError as err:
        dump_json(
            {"kind": "hmm-filter", "error": str(err), "step": err.step},
            out / "report.json",
        )
        write_run_meta(out / "run_meta.json", seed=args.seed)
        print(f"runtime error: {err}", file=sys.stderr)
        return 1
    if _wants(args, "json"):
        dump_json(
            {
                "kind": "hmm-filter",
                "model": emit_model(model),
                "observations": list(observations),
                "steps": trace.steps,
                "total_log_likelihood": trace.total_log_likelihood,
                "densities": trace.densities.tolist(),
                "log_likelihood_increments": trace.log_likelihood_increments.tolist(),
            },
            out / "report.json",
        )
    if _wants(args, "csv"):
        _write_hmm_csv(trace, out / "trace.csv")
    if not args.no_figures:
        figures.render_hmm_trace(trace, out / "trace.png")
    write_run_meta(out / "run_meta.json", seed=args.seed)
    print(f"filtered {trace.steps} observations, "
          f"log likelihood {trace.total_log_likelihood:.6f}")
    return 0


def _write_kalman_csv(states, path) -> None:
    n = states[0].mean.size
    header = ["step"] + [f"mean_{i}" for i in range(n)]
    header += [f"cov_{i}_{j}" for i in range(n) for j in range(n)]
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(header)
        for state in states:
            row = [str(state.time), *(csv_cell(float(v)) for v in state.mean)]
            row += [csv_cell(float(v)) for v in state.covariance.ravel()]
            writer.writerow(row)


def _run_kalman(args) -> int:
    obj = load_config_file(args.config)
    _expect_kind(obj, "kalman", "kalman")
    model = load_model(obj)
    observations = load_observations(obj, model)
    states = kalman_filter_sequence(model, observations)
    out = _out_dir(args)
    if _wants(args, "json"):
        dump_json(
            {
                "kind": "kalman-filter",
                "model": emit_model(model),
                "steps": len(states),
                "states": [
                    {
                        "time": s.time,
                        "stage": s.stage,
                        "mean": s.mean.tolist(),
                        "covariance": s.covariance.tolist(),
                    }
                    for s in states
                ],
            },
            out / "report.json",
        )
    if _wants(args, "csv"):
        _write_kalman_csv(states, out / "trace.csv")
    if not args.no_figures:
        figures.render_kalman_trace(states, out / "trace.png")
    write_run_meta(out / "run_meta.json", seed=args.seed)
    final = states[-1]
    print(f"filtered {len(states)} observations, final mean {final.mean.tolist()}")
    return 0


def _write_matrix_csv(matrix: np.ndarray, path) -> None:
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"c{j}" for j in range(matrix.shape[1])])
        for row in matrix:
            writer.writerow(csv_cell(float(v)) for v in row)


def _run_riccati(args) -> int:
    obj = load_config_file(args.config)
    _expect_kind(obj, "kalman", "riccati")
    model = load_model(obj)
    tol = args.tol if args.tol is not None else obj.get("tol", DEFAULT_TOL)
    max_iter = (
        args.max_iter if args.max_iter is not None else obj.get("max_iter", DEFAULT_MAX_ITER)
    )
    tol = _number(tol, "tol")
    if isinstance(max_iter, bool) or not isinstance(max_iter, int):
        raise ConfigError(f"max_iter must be an integer, got {max_iter!r}")
    if tol <= 0.0:
        raise ConfigError(f"tol must be positive, got {tol}")
    if max_iter < 1:
        raise ConfigError(f"max_iter must be >= 1, got {max_iter}")
    out = _out_dir(args)
    try:
        result = dare_fixed_point(model, tol=tol, max_iter=max_iter)
    except RiccatiNonConvergenceError as err:
        dump_json(
            {
                "kind": "riccati-fixed-point",
                "converged": False,
                "iterations": err.iterations,
                "thompson_gap": err.thompson_gap,
                "residual": err.residual,
                "last_iterate": err.last_iterate.tolist(),
                "tol": tol,
                "max_iter": max_iter,
            },
            out / "report.json",
        )
        write_run_meta(out / "run_meta.json", seed=args.seed)
        print(f"runtime error: {err}", file=sys.stderr)
        return 1
    if _wants(args, "json"):
        dump_json(
            {
                "kind": "riccati-fixed-point",
                "converged": True,
                "iterations": result.iterations,
                "fixed_point": result.fixed_point.tolist(),
                "tol": tol,
                "max_iter": max_iter,
            },
            out / "report.json",
        )
    if _wants(args, "csv"):
        _write_matrix_csv(result.fixed_point, out / "fixed_point.csv")
    write_run_meta(out / "run_meta.json", seed=args.seed)
    print(f"converged in {result.iterations} iterations")
    return 0


def _run_lab(args) -> int:
    obj = load_config_file(args.config)
    _expect_kind(obj, "lab", "lab")
    experiment = obj.get("experiment")
    if not isinstance(experiment, dict):
        raise ConfigError("lab config needs an 'experiment' object")
    if args.seed is not None and args.seed < 0:
        raise ConfigError(f"--seed must be nonnegative, got {args.seed}")
    config = load_experiment_config(experiment, seed_override=args.seed)
    report = run_experiment(config)
    out = _out_dir(args)
    written: list[Path] = []
    if _wants(args, "json"):
        written.append(write_report_json(report, out / "report.json"))
    if _wants(args, "csv"):
        written.append(
            write_records_csv(report, out / records_csv_name(config.kind))
        )
    if not args.no_figures:
        written.extend(figures.render_experiment(report, out))
    write_run_meta(
        out / "run_meta.json", wall_time_s=report.wall_time_s, seed=config.seed
    )
    verdict = "PASS" if report.passed else "FAIL"
    print(f"{config.kind}: {verdict}")
    for path in written:
        print(f"wrote {path}")
    return 0


_COMMANDS = {
    "metric": _run_metric,
    "hmm-filter": _run_hmm_filter,
    "kalman": _run_kalman,
    "riccati": _run_riccati,
    "lab": _run_lab,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except (ImpossibleObservationError, RiccatiNonConvergenceError,
            DegenerateSampleError) as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
