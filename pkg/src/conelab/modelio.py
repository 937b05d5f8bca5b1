"""Loading, validation, and emission of the JSON and CSV artifacts.

Config files are plain JSON with a top-level "kind" tag.  Matrices are
nested row-major lists; NaN and Infinity literals are rejected on input and
never produced on output.  CSV records carry a header row and floats at 17
significant digits; JSON floats round-trip through repr.
"""

from __future__ import annotations

import csv
import datetime
import json
import math
from pathlib import Path

import numpy as np

from .cones import ExtendedDistance
from .hmm import HmmModel
from .kalman import LinearGaussianModel
from .lab import EXPERIMENT_KINDS, ExperimentConfig, ExperimentReport

METRIC_CONES = ("orthant", "spd", "measure")


class ConfigError(ValueError):
    """A config file failed validation; the message names the field."""


def _reject_constant(token: str):
    raise ConfigError(f"nonfinite literal {token!r} is not allowed in configs")


def parse_config_text(text: str) -> dict:
    try:
        obj = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as err:
        raise ConfigError(f"config is not valid JSON: {err}") from None
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    return obj


def load_config_file(path) -> dict:
    file_path = Path(path)
    try:
        text = file_path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {file_path}: {err}") from None
    return parse_config_text(text)


def _require_keys(obj: dict, allowed: set[str], required: set[str], where: str) -> None:
    unknown = set(obj) - allowed
    if unknown:
        raise ConfigError(f"{where}: unknown key {sorted(unknown)[0]!r}")
    missing = required - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing key {sorted(missing)[0]!r}")


def _number(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ConfigError(f"{name} must be finite, got {out!r}")
    return out


def _integer(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _vector(value, name: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{name} must be a nonempty list of numbers")
    return np.array([_number(entry, f"{name}[{i}]") for i, entry in enumerate(value)])


def _matrix(value, name: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ConfigError(f"{name} must be a nonempty list of rows")
    rows = []
    width = None
    for i, row in enumerate(value):
        if not isinstance(row, list) or not row:
            raise ConfigError(f"{name} row {i} must be a nonempty list of numbers")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ConfigError(
                f"{name} row {i} has {len(row)} entries, expected {width}"
            )
        rows.append([_number(entry, f"{name}[{i}][{j}]") for j, entry in enumerate(row)])
    return np.array(rows)


def load_model(obj: dict) -> HmmModel | LinearGaussianModel:
    """Build a fully validated model from its JSON object form."""
    kind = obj.get("kind")
    if kind == "kalman":
        return _load_kalman(obj)
    if kind == "hmm":
        return _load_hmm(obj)
    raise ConfigError(f"kind must be 'kalman' or 'hmm', got {kind!r}")


def _load_kalman(obj: dict) -> LinearGaussianModel:
    _require_keys(
        obj,
        # tol and max_iter ride along for the fixed-point command; the model
        # loader itself ignores them, like observations.
        allowed={"kind", "n", "m", "A", "C", "Gamma", "Sigma", "mu0", "P0",
                 "observations", "tol", "max_iter"},
        required={"kind", "n", "m", "A", "C", "Gamma", "Sigma", "mu0", "P0"},
        where="kalman config",
    )
    n = _integer(obj["n"], "n")
    m = _integer(obj["m"], "m")
    if n < 1 or m < 1:
        raise ConfigError(f"n and m must be >= 1, got n={n}, m={m}")
    shapes = {
        "A": (_matrix(obj["A"], "A"), (n, n)),
        "C": (_matrix(obj["C"], "C"), (m, n)),
        "Gamma": (_matrix(obj["Gamma"], "Gamma"), (n, n)),
        "Sigma": (_matrix(obj["Sigma"], "Sigma"), (m, m)),
        "P0": (_matrix(obj["P0"], "P0"), (n, n)),
    }
    for name, (arr, expected) in shapes.items():
        if arr.shape != expected:
            raise ConfigError(f"{name} must have shape {expected}, got {arr.shape}")
    mu0 = _vector(obj["mu0"], "mu0")
    if mu0.shape != (n,):
        raise ConfigError(f"mu0 must have length {n}, got {mu0.size}")
    try:
        return LinearGaussianModel(
            A=shapes["A"][0],
            C=shapes["C"][0],
            Gamma=shapes["Gamma"][0],
            Sigma=shapes["Sigma"][0],
            mu0=mu0,
            P0=shapes["P0"][0],
        )
    except ValueError as err:
        raise ConfigError(str(err)) from None


def _load_hmm(obj: dict) -> HmmModel:
    _require_keys(
        obj,
        allowed={"kind", "transition", "emission", "initial", "observations"},
        required={"kind", "transition", "initial"},
        where="hmm config",
    )
    transition = _matrix(obj["transition"], "transition")
    emission = _matrix(obj["emission"], "emission") if "emission" in obj else None
    initial = _vector(obj["initial"], "initial")
    try:
        return HmmModel(transition=transition, emission=emission, initial=initial)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def emit_model(model: HmmModel | LinearGaussianModel) -> dict:
    """Canonical JSON object for a model; inverse of load_model."""
    if isinstance(model, LinearGaussianModel):
        return {
            "kind": "kalman",
            "n": model.n,
            "m": model.m,
            "A": model.A.tolist(),
            "C": model.C.tolist(),
            "Gamma": model.Gamma.tolist(),
            "Sigma": model.Sigma.tolist(),
            "mu0": model.mu0.tolist(),
            "P0": model.P0.tolist(),
        }
    if isinstance(model, HmmModel):
        out: dict = {"kind": "hmm", "transition": model.transition.tolist()}
        if model.emission is not None:
            out["emission"] = model.emission.tolist()
        out["initial"] = model.initial.tolist()
        return out
    raise TypeError(f"not a model: {type(model).__name__}")


def load_observations(obj: dict, model) -> list:
    """Extract and type-check the observation record for a model config."""
    if "observations" not in obj:
        raise ConfigError("missing key 'observations'")
    raw = obj["observations"]
    if not isinstance(raw, list) or not raw:
        raise ConfigError("observations must be a nonempty list")
    if isinstance(model, HmmModel):
        out = []
        for i, entry in enumerate(raw):
            if isinstance(entry, bool) or not isinstance(entry, int):
                raise ConfigError(
                    f"observations[{i}] must be an integer symbol, got {entry!r}"
                )
            if model.emission is not None and not 0 <= entry < model.n_symbols:
                raise ConfigError(
                    f"observations[{i}] = {entry} outside alphabet of size "
                    f"{model.n_symbols}"
                )
            out.append(entry)
        return out
    rows = []
    for i, entry in enumerate(raw):
        if isinstance(entry, (int, float)) and not isinstance(entry, bool):
            entry = [entry]
        vec = _vector(entry, f"observations[{i}]")
        if vec.size != model.m:
            raise ConfigError(
                f"observations[{i}] must have length {model.m}, got {vec.size}"
            )
        rows.append(vec)
    return rows


def load_experiment_config(obj: dict, seed_override: int | None = None) -> ExperimentConfig:
    """Parse the "experiment" object of a lab config.

    ``seed_override`` (the CLI flag) wins over the config's seed; if neither
    is present that is a validation error, never a silent random seed.
    """
    allowed = {
        "kind", "seed", "trials", "dims", "horizon", "tolerance", "matrix_count",
        "transition", "matrix", "model", "p0_prime", "initial_pair",
    }
    _require_keys(obj, allowed=allowed, required={"kind"}, where="experiment config")
    kind = obj["kind"]
    if kind not in EXPERIMENT_KINDS:
        raise ConfigError(
            f"experiment kind must be one of {list(EXPERIMENT_KINDS)}, got {kind!r}"
        )
    if seed_override is not None:
        seed = seed_override
    elif "seed" in obj:
        seed = _integer(obj["seed"], "seed")
    else:
        raise ConfigError("no seed: pass --seed or set 'seed' in the experiment config")
    if seed < 0:
        raise ConfigError(f"seed must be nonnegative, got {seed}")

    kwargs: dict = {"kind": kind, "seed": seed}
    if "trials" in obj:
        kwargs["trials"] = _integer(obj["trials"], "trials")
    if "dims" in obj:
        dims = obj["dims"]
        if isinstance(dims, int) and not isinstance(dims, bool):
            dims = [dims]
        if not isinstance(dims, list) or not dims:
            raise ConfigError("dims must be an integer or a nonempty list of integers")
        kwargs["dims"] = tuple(_integer(d, f"dims[{i}]") for i, d in enumerate(dims))
    if "horizon" in obj:
        kwargs["horizon"] = _integer(obj["horizon"], "horizon")
    if "tolerance" in obj:
        kwargs["tolerance"] = _number(obj["tolerance"], "tolerance")
    if "matrix_count" in obj:
        kwargs["matrix_count"] = _integer(obj["matrix_count"], "matrix_count")
    if "transition" in obj:
        kwargs["transition"] = _matrix(obj["transition"], "transition")
    if "matrix" in obj:
        kwargs["matrix"] = _matrix(obj["matrix"], "matrix")
    if "model" in obj:
        model_obj = obj["model"]
        if not isinstance(model_obj, dict):
            raise ConfigError("model must be an object")
        model = load_model(model_obj)
        if not isinstance(model, LinearGaussianModel):
            raise ConfigError("experiment model must have kind 'kalman'")
        kwargs["model"] = model
    if "p0_prime" in obj:
        kwargs["p0_prime"] = _matrix(obj["p0_prime"], "p0_prime")
    if "initial_pair" in obj:
        pair = obj["initial_pair"]
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigError("initial_pair must be a list of two vectors")
        kwargs["initial_pair"] = (
            _vector(pair[0], "initial_pair[0]"),
            _vector(pair[1], "initial_pair[1]"),
        )
    try:
        return ExperimentConfig(**kwargs)
    except ValueError as err:
        raise ConfigError(str(err)) from None


def distance_json(distance: ExtendedDistance) -> float | str:
    """JSON image of an extended distance: a float, or the string "infinite"."""
    if distance.is_infinite:
        return "infinite"
    return distance.value


# CSV schemas per experiment kind; extra JSON-only record fields are dropped.
CSV_COLUMNS = {
    "orthant-nonexpansive": ("trial", "d_before", "d_after", "ratio"),
    "birkhoff-tightness": ("matrix", "dim", "delta", "bound", "max_ratio"),
    "hmm-forgetting": ("step", "hilbert_distance", "bound"),
    "riccati-trace": ("step", "hilbert_distance", "thompson_distance"),
    "horizon-contraction": ("window", "d_start", "d_end", "ratio", "window_bound"),
}

# Trace-shaped experiments emit trace.csv, sampled ones records.csv.
TRACE_KINDS = ("hmm-forgetting", "riccati-trace")


def csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".17g")


def records_csv_name(kind: str) -> str:
    return "trace.csv" if kind in TRACE_KINDS else "records.csv"


def write_records_csv(report: ExperimentReport, path) -> Path:
    kind = report.config["kind"]
    columns = CSV_COLUMNS[kind]
    file_path = Path(path)
    with file_path.open("w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for record in report.records:
            writer.writerow(csv_cell(record[column]) for column in columns)
    return file_path


def write_report_json(report: ExperimentReport, path) -> Path:
    file_path = Path(path)
    file_path.write_text(report.body_json())
    return file_path


def write_run_meta(path, wall_time_s: float | None = None, **extra) -> Path:
    """Write the non-deterministic run metadata next to the report proper."""
    meta: dict = {
        "generated_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    if wall_time_s is not None:
        meta["wall_time_s"] = wall_time_s
    meta.update(extra)
    file_path = Path(path)
    file_path.write_text(json.dumps(meta, indent=2, allow_nan=False) + "\n")
    return file_path


def dump_json(obj, path) -> Path:
    """Deterministic JSON emission for ad-hoc result objects."""
    file_path = Path(path)
    file_path.write_text(json.dumps(obj, indent=2, allow_nan=False) + "\n")
    return file_path
