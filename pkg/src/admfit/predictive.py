"""Posterior-predictive machinery.

Predictions integrate the damage model over the fitted posterior by
Monte Carlo: draw a hyperparameter row uniformly from the retained
samples, draw specimen effects from it, and solve the failure time at
the requested loading rate.  The same recipe replicates whole datasets
for model checking, compared against the observed data through empirical
CDF envelopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import likelihood as lk
from .damage import canadian_failure_times, us_failure_times
from .errors import BudgetExhausted, DomainError
from .streams import StreamKey

__all__ = [
    "PredictiveSample",
    "PredictiveSummary",
    "EcdfBand",
    "predict_failure",
    "replicate_datasets",
    "ecdf_band",
    "posterior_matrix",
]


@dataclass(frozen=True)
class PredictiveSample:
    """One failing predictive draw: failure time (s), load sustained at
    failure (psi, = k * T for ramps), and the posterior row it came from."""

    failure_time: float
    load_at_failure: float
    theta_index: int


@dataclass
class PredictiveSummary:
    """Aggregates over a predictive run; non-failing draws are counted,
    never silently dropped."""

    n_draws: int
    n_failing: int
    n_nonfailing: int
    mean_failure_time: float
    mean_load: float
    se_failure_time: float = math.nan


@dataclass
class EcdfBand:
    """Envelope of replicate ECDFs with the observed ECDF on one grid."""

    grid: np.ndarray
    observed: np.ndarray
    lower: np.ndarray
    upper: np.ndarray


def posterior_matrix(samples, rung: int = -1) -> np.ndarray:
    """Retained posterior rows as a (draws, dim) matrix (t = 1 by default)."""
    matrix = samples.samples[rung] if hasattr(samples, "samples") else np.asarray(samples, dtype=float)
    if matrix.ndim == 1:
        matrix = matrix[None, :]
    if matrix.shape[0] == 0:
        raise DomainError("posterior sample is empty")
    return matrix


def _solve_failure_times(model: str, effects: dict, k, mu_s: float) -> np.ndarray:
    """Vectorized failure times; NaN marks non-failing draws."""
    if model == "us":
        return np.asarray(us_failure_times(effects["A"], effects["B"], mu_s))
    with np.errstate(invalid="ignore"):
        safe_a = np.where(effects["a"] > 0, effects["a"], 1.0)
        safe_c = np.where(effects["c"] >= 0, effects["c"], 1.0)
        times = canadian_failure_times(
            safe_a,
            effects["b"],
            safe_c,
            effects["n"],
            effects["sigma0"],
            mu_s,
            k=k if model == "canadian" else None,
        )
    times = np.asarray(times)
    times[(effects["a"] <= 0) | (effects["c"] < 0)] = np.nan
    return times


def _effects_from_rows(model: str, rows: np.ndarray, indices: np.ndarray, rng) -> dict:
    """Draw one effect vector per selected posterior row, vectorized."""
    names = lk.param_names(model)
    cols = {name: rows[indices, j] for j, name in enumerate(names)}
    if model == "us":
        A = np.exp(rng.normal(cols["mu_A"], cols["sigma_A"]))
        B = np.exp(rng.normal(cols["mu_B"], cols["sigma_B"]))
        return {"A": A, "B": B}
    raw_a = rng.normal(cols["mu_a"], cols["sigma_a"])
    b = np.exp(rng.normal(cols["mu_b"], cols["sigma_b"]))
    raw_c = rng.normal(cols["mu_c"], cols["sigma_c"])
    n = np.exp(rng.normal(cols["mu_n"], cols["sigma_n"]))
    sigma0 = 1.0 / (1.0 + np.exp(-rng.normal(cols["mu_s0"], cols["sigma_s0"])))
    if model == "canadian2":
        raw_a = np.exp(raw_a)
        raw_c = np.exp(raw_c)
    return {"a": raw_a, "b": b, "c": raw_c, "n": n, "sigma0": sigma0}


def predict_failure(
    posterior,
    model: str,
    k: float,
    mu_s: float,
    n_draws: int,
    stream: StreamKey,
):
    """Predictive failure-time draws at loading rate k.

    Returns (samples, summary): ``samples`` lists the failing draws with
    their source posterior row; the summary carries means over failing
    draws and the non-failing count.
    """
    rows = posterior_matrix(posterior)
    rng = stream.child("predict").generator()
    indices = rng.integers(0, rows.shape[0], size=n_draws)
    effects = _effects_from_rows(model, rows, indices, rng)
    times = _solve_failure_times(model, effects, k, mu_s)
    failing = np.isfinite(times)
    samples = [
        PredictiveSample(float(t), float(k * t), int(ix))
        for t, ix in zip(times[failing], indices[failing])
    ]
    n_fail = int(np.count_nonzero(failing))
    mean_t = float(np.mean(times[failing])) if n_fail else math.nan
    se_t = float(np.std(times[failing], ddof=1) / math.sqrt(n_fail)) if n_fail > 1 else math.nan
    summary = PredictiveSummary(
        n_draws=n_draws,
        n_failing=n_fail,
        n_nonfailing=n_draws - n_fail,
        mean_failure_time=mean_t,
        mean_load=k * mean_t if n_fail else math.nan,
        se_failure_time=se_t,
    )
    return samples, summary


def replicate_datasets(
    posterior,
    model: str,
    template: lk.Dataset,
    reps: int,
    stream: StreamKey,
    resample_budget: int = 1000,
):
    """Hypothetical datasets drawn from the fitted model.

    Each replicate draws one posterior row, then one failure time per
    template specimen at that specimen's loading rate; non-failing draws
    are resampled up to ``resample_budget`` rounds (BudgetExhausted if a
    specimen never fails).  Returns (datasets, total resampled count).
    """
    if reps < 1:
        raise DomainError("reps must be at least 1")
    rows = posterior_matrix(posterior)
    rates = np.asarray(template.loading_rates, dtype=float)
    n = rates.size
    resampled_total = 0
    datasets = []
    for r in range(reps):
        rng = stream.child("replicate", r).generator()
        row_index = int(rng.integers(0, rows.shape[0]))
        indices = np.full(n, row_index)
        times = np.full(n, np.nan)
        pending = np.ones(n, dtype=bool)
        for _ in range(resample_budget):
            if not np.any(pending):
                break
            effects = _effects_from_rows(model, rows, indices[pending], rng)
            solved = _solve_failure_times(model, effects, rates[pending], template.mu_s)
            slot = np.flatnonzero(pending)
            times[slot] = solved
            newly = np.isfinite(solved)
            resampled_total += int(np.count_nonzero(~newly))
            pending[slot[newly]] = False
        if np.any(pending):
            raise BudgetExhausted(
                f"replicate {r}: {int(pending.sum())} specimens still non-failing "
                f"after {resample_budget} resampling rounds"
            )
        datasets.append(lk.Dataset(times, rates.copy(), template.mu_s))
    return datasets, resampled_total


def _ecdf_on_grid(values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    ordered = np.sort(np.asarray(values, dtype=float))
    return np.searchsorted(ordered, grid, side="right") / ordered.size


def ecdf_band(
    replicates: Sequence,
    observed: lk.Dataset,
    grid: Optional[np.ndarray] = None,
    central: Optional[float] = None,
) -> EcdfBand:
    """Pointwise envelope of replicate ECDFs plus the observed ECDF.

    Default is the min/max envelope; ``central=0.9`` switches to the
    central 90% band.  The grid defaults to an even sweep across the
    pooled range of observed and replicated times.
    """
    rep_values = [
        np.asarray(r.failure_times if hasattr(r, "failure_times") else r, dtype=float)
        for r in replicates
    ]
    if not rep_values:
        raise DomainError("at least one replicate is required")
    obs = np.asarray(observed.failure_times, dtype=float)
    if grid is None:
        pooled = np.concatenate(rep_values + [obs])
        grid = np.linspace(pooled.min() * 0.95, pooled.max() * 1.05, 101)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise DomainError("grid must be nonempty and strictly increasing")
    stack = np.vstack([_ecdf_on_grid(v, grid) for v in rep_values])
    if central is None:
        lower, upper = stack.min(axis=0), stack.max(axis=0)
    else:
        if not (0 < central < 1):
            raise DomainError("central band width must lie in (0, 1)")
        tail = (1.0 - central) / 2.0
        lower = np.quantile(stack, tail, axis=0)
        upper = np.quantile(stack, 1.0 - tail, axis=0)
    return EcdfBand(grid=grid, observed=_ecdf_on_grid(obs, grid), lower=lower, upper=upper)
