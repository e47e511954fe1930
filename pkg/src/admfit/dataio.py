"""Dataset files, synthetic-data generation, configuration, manifests.

Dataset CSV format (decimal text, diff-friendly):

    specimen_id,failure_time_s,loading_rate_psi_per_s
    1,28.419735,187.2219
    ...

The reference mean failure time mu_s defaults to the sample mean of the
failure-time column unless the caller overrides it.  Every CLI run writes
a manifest (seed, digests, resolved configuration) from which the run can
be reproduced bit-exactly.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import likelihood as lk
from .errors import BudgetExhausted, ConfigError, DomainError, ParseError, ValidationError
from .predictive import _solve_failure_times
from .streams import StreamKey

__all__ = [
    "DATASET_HEADER",
    "load_dataset",
    "write_dataset",
    "write_trajectory",
    "LogNormalRates",
    "simulate_dataset",
    "default_config",
    "load_config",
    "merge_config",
    "sampler_config_from",
    "RunManifest",
    "write_command_manifest",
    "file_digest",
    "json_digest",
]

logger = logging.getLogger(__name__)

DATASET_HEADER = ["specimen_id", "failure_time_s", "loading_rate_psi_per_s"]


def load_dataset(path, mu_s: Optional[float] = None) -> lk.Dataset:
    """Read a dataset CSV; mu_s defaults to the sample mean failure time."""
    times, rates = [], []
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if [h.strip() for h in header] != DATASET_HEADER:
            raise ParseError(f"{path}: line 1: expected header {','.join(DATASET_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(f"{path}: line {lineno}: expected 3 cells, got {len(row)}")
            try:
                t = float(row[1])
                k = float(row[2])
            except ValueError as exc:
                raise ParseError(f"{path}: line {lineno}: {exc}") from None
            if not (t > 0):
                raise ValidationError(f"{path}: line {lineno}: failure time must be positive, got {t}")
            if not (k > 0):
                raise ValidationError(f"{path}: line {lineno}: loading rate must be positive, got {k}")
            times.append(t)
            rates.append(k)
    if not times:
        raise ValidationError(f"{path}: no data rows")
    if mu_s is None:
        mu_s = float(np.mean(times))
    return lk.Dataset(np.asarray(times), np.asarray(rates), mu_s)


def write_dataset(dataset: lk.Dataset, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DATASET_HEADER)
        for i, (t, k) in enumerate(zip(dataset.failure_times, dataset.loading_rates), start=1):
            writer.writerow([i, repr(float(t)), repr(float(k))])


def write_trajectory(trajectory, path) -> None:
    """Damage trajectory as CSV ``t,alpha`` rows, plot-tool friendly."""
    rows = np.asarray(trajectory, dtype=float)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "alpha"])
        for t, alpha in rows:
            writer.writerow([repr(float(t)), repr(float(alpha))])


@dataclass(frozen=True)
class LogNormalRates:
    """Loading-rate law: exp(Normal(log_mean, log_sd^2)), psi/s."""

    log_mean: float
    log_sd: float


def simulate_dataset(
    model: str,
    params,
    n: int,
    k_spec: Union[float, LogNormalRates],
    mu_s: float,
    seed: int,
    resample_budget: int = 1000,
) -> lk.Dataset:
    """Ground-truth synthetic dataset: n solved failure times.

    ``k_spec`` is either a constant rate or a log-normal law over rates.
    Non-failing effect draws are resampled (the count is logged); the
    whole simulation raises BudgetExhausted if a specimen keeps refusing
    to fail.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    if not (mu_s > 0):
        raise DomainError("mu_s must be positive")
    root = StreamKey(seed).child("simulate")
    k_rng = root.child("rates").generator()
    if isinstance(k_spec, LogNormalRates):
        rates = np.exp(k_rng.normal(k_spec.log_mean, k_spec.log_sd, n))
    else:
        k_value = float(k_spec)
        if not (k_value > 0):
            raise DomainError("constant loading rate must be positive")
        rates = np.full(n, k_value)

    times = np.full(n, np.nan)
    pending = np.ones(n, dtype=bool)
    resampled = 0
    for round_index in range(resample_budget):
        if not np.any(pending):
            break
        rng = root.child("effects", round_index).generator()
        effects = lk.sample_effect_arrays(model, params, rng, int(pending.sum()))
        solved = _solve_failure_times(model, effects, rates[pending], mu_s)
        slot = np.flatnonzero(pending)
        times[slot] = solved
        newly = np.isfinite(solved)
        resampled += int(np.count_nonzero(~newly))
        pending[slot[newly]] = False
    if np.any(pending):
        raise BudgetExhausted(
            f"{int(pending.sum())} of {n} specimens still non-failing after "
            f"{resample_budget} resampling rounds"
        )
    if resampled:
        logger.info("simulate_dataset: resampled %d non-failing draws", resampled)
    return lk.Dataset(times, rates, mu_s)


# --- configuration ---------------------------------------------------------


def default_config() -> dict:
    """Fully resolved defaults; every leaf may be overridden by file."""
    return {
        "model": "us",
        "sampler": {
            "iterations": 10000,
            "burn_in": 1000,
            "rungs": 20,
            "ladder_exponent": 5.0,
            "proposal_scale": 0.1,
            "swap_stride": 1,
            "seed": 0,
            "workers": 1,
            "init_attempts": 200,
        },
        "likelihood": {
            "draws": 10000,
            "window": 0.5,
        },
        "data": {
            "mu_s": None,
        },
    }


def merge_config(overrides: dict, base: Optional[dict] = None, path: str = "") -> dict:
    """Overlay a config dict onto the defaults; unknown keys are errors."""
    merged = default_config() if base is None else base
    for key, value in overrides.items():
        where = f"{path}.{key}" if path else key
        if key not in merged:
            raise ConfigError(f"unknown configuration key: {where}")
        if isinstance(merged[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"configuration section {where} must be a mapping")
            merged[key] = merge_config(value, merged[key], where)
        else:
            merged[key] = value
    return merged


def load_config(path) -> dict:
    """Parse a JSON configuration file and resolve it against defaults."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return merge_config(raw)


def sampler_config_from(config: dict):
    """Build a SamplerConfig from a resolved config dict."""
    from .sampler import SamplerConfig  # local import to keep cli startup light

    s = config["sampler"]
    return SamplerConfig(
        iterations=int(s["iterations"]),
        burn_in=int(s["burn_in"]),
        rungs=int(s["rungs"]),
        ladder_exponent=float(s["ladder_exponent"]),
        proposal_scales=float(s["proposal_scale"]),
        swap_stride=int(s["swap_stride"]),
        seed=int(s["seed"]),
        workers=int(s["workers"]),
        init_attempts=int(s["init_attempts"]),
        likelihood=lk.LikelihoodConfig(
            n_draws=int(config["likelihood"]["draws"]),
            window=float(config["likelihood"]["window"]),
        ),
    )


# --- manifests -------------------------------------------------------------


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def json_digest(obj) -> str:
    canon = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def write_command_manifest(out_path, command: str, inputs: dict) -> None:
    """Reproducibility sidecar ``<out>.manifest.json`` for a CLI command.

    Records the command name, its reproducibility-relevant inputs, the
    output digest, and the artifact version; rerunning the command with
    the same inputs yields a byte-identical manifest.
    """
    from . import __version__

    payload = {
        "command": command,
        "inputs": inputs,
        "output_digest": file_digest(out_path),
        "artifact_version": __version__,
    }
    with open(f"{out_path}.manifest.json", "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class RunManifest:
    """Everything needed to reproduce a run bit-exactly."""

    model: str
    seed: int
    config_digest: str
    dataset_digest: str
    dataset_path: str
    artifact_version: str
    iterations: int
    rungs: int
    wall_clock_seconds: float
    config: dict = field(default_factory=dict)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(asdict(self), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def read(cls, path) -> "RunManifest":
        with open(path) as fh:
            raw = json.load(fh)
        return cls(**raw)
