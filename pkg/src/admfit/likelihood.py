"""Hierarchical probability model and Monte-Carlo likelihood.

Each specimen carries latent random effects drawn from population laws
governed by the hyperparameters being inferred.  The likelihood of an
observed failure time is the probability that the deterministic solve of
the damage model lands within +/- window seconds of it, estimated per
specimen as the proportion of N simulated effect vectors whose solved
failure time falls in that interval.  The estimate is unbiased, which is
what pseudo-marginal MCMC requires; a zero count gives -inf rather than
any smoothing.

Effect draws use counter-based substreams keyed by specimen index under
the stream the caller supplies (itself keyed by chain and iteration), so
results do not depend on evaluation order or thread scheduling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from typing import Optional, Union

import numpy as np
from scipy.special import expit

from . import damage
from .errors import DomainError, ValidationError
from .streams import StreamKey

__all__ = [
    "USParams",
    "CanadianParams",
    "Dataset",
    "LikelihoodConfig",
    "MODEL_IDS",
    "param_names",
    "params_class",
    "make_params",
    "params_vector",
    "sample_effects",
    "sample_effect_arrays",
    "window_indicators",
    "mc_log_likelihood",
    "log_prior",
    "log_power_posterior",
    "PRIOR_MU_SD",
    "PRIOR_SIGMA_SHAPE",
    "PRIOR_SIGMA_RATE",
]

MODEL_IDS = ("us", "canadian", "canadian2")

# Vague priors: Normal(0, 100^2) on every location parameter and
# Inverse-Gamma(0.001, 0.001) on every variance parameter.
PRIOR_MU_SD = 100.0
PRIOR_SIGMA_SHAPE = 0.001
PRIOR_SIGMA_RATE = 0.001


@dataclass(frozen=True)
class USParams:
    """Population hyperparameters of the exponential model; A and B are
    log-normal with log-scale means mu_* and standard deviations sigma_*."""

    mu_A: float
    sigma_A: float
    mu_B: float
    sigma_B: float


@dataclass(frozen=True)
class CanadianParams:
    """Population hyperparameters of the threshold model.

    For the "canadian" model a and c are Normal(mu, sigma^2) in 1/psi; for
    "canadian2" they are log-normal and dimensionless.  b and n are always
    log-normal; sigma0 is logistic-transformed Normal.
    """

    mu_a: float
    sigma_a: float
    mu_b: float
    sigma_b: float
    mu_c: float
    sigma_c: float
    mu_n: float
    sigma_n: float
    mu_s0: float
    sigma_s0: float


_PARAM_CLASSES = {"us": USParams, "canadian": CanadianParams, "canadian2": CanadianParams}


def params_class(model: str):
    try:
        return _PARAM_CLASSES[model]
    except KeyError:
        raise DomainError(f"unknown model id {model!r}") from None


def param_names(model: str) -> tuple:
    return tuple(f.name for f in fields(params_class(model)))


def make_params(model: str, values) -> Union[USParams, CanadianParams]:
    values = [float(v) for v in np.asarray(values).ravel()]
    cls = params_class(model)
    names = param_names(model)
    if len(values) != len(names):
        raise DomainError(f"{model} expects {len(names)} parameters, got {len(values)}")
    return cls(**dict(zip(names, values)))


def params_vector(params) -> np.ndarray:
    return np.array([getattr(params, f.name) for f in fields(params)], dtype=float)


@dataclass
class Dataset:
    """Ramp-test records: failure times (s), loading rates (psi/s), and
    the reference mean failure time mu_s (s)."""

    failure_times: np.ndarray
    loading_rates: np.ndarray
    mu_s: float

    def __post_init__(self):
        self.failure_times = np.asarray(self.failure_times, dtype=float)
        self.loading_rates = np.asarray(self.loading_rates, dtype=float)
        if self.failure_times.shape != self.loading_rates.shape:
            raise ValidationError("failure times and loading rates must align")
        if np.any(self.failure_times <= 0):
            raise ValidationError("failure times must be positive")
        if np.any(self.loading_rates <= 0):
            raise ValidationError("loading rates must be positive")
        if not (self.mu_s > 0):
            raise ValidationError("mu_s must be positive")

    def __len__(self) -> int:
        return int(self.failure_times.size)

    @property
    def records(self):
        return list(zip(self.failure_times.tolist(), self.loading_rates.tolist()))


@dataclass(frozen=True)
class LikelihoodConfig:
    """Monte-Carlo draws per specimen and the failure-time window
    half-width (seconds) of the interval indicator."""

    n_draws: int = 10000
    window: float = 0.5

    def __post_init__(self):
        if self.n_draws < 1:
            raise DomainError("n_draws must be at least 1")
        if not (self.window > 0):
            raise DomainError("window must be positive")


def sample_effect_arrays(model: str, params, rng: np.random.Generator, size: int) -> dict:
    """Draw ``size`` effect vectors as a dict of arrays.

    Draw order is fixed (A, B for the exponential model; a, b, c, n,
    sigma0 for the threshold models) so a given stream always yields the
    same effects.
    """
    with np.errstate(over="ignore"):
        if model == "us":
            z = rng.standard_normal(2 * size)
            A = np.exp(params.mu_A + params.sigma_A * z[:size])
            B = np.exp(params.mu_B + params.sigma_B * z[size:])
            return {"A": A, "B": B}
        if model in ("canadian", "canadian2"):
            z = rng.standard_normal(5 * size)
            raw_a = params.mu_a + params.sigma_a * z[:size]
            b = np.exp(params.mu_b + params.sigma_b * z[size : 2 * size])
            raw_c = params.mu_c + params.sigma_c * z[2 * size : 3 * size]
            n = np.exp(params.mu_n + params.sigma_n * z[3 * size : 4 * size])
            sigma0 = expit(params.mu_s0 + params.sigma_s0 * z[4 * size :])
            if model == "canadian2":
                raw_a = np.exp(raw_a)
                raw_c = np.exp(raw_c)
            return {"a": raw_a, "b": b, "c": raw_c, "n": n, "sigma0": sigma0}
    raise DomainError(f"unknown model id {model!r}")


def sample_effects(model: str, params, rng: np.random.Generator):
    """Single specimen-effect draw as the matching effects dataclass."""
    arrays = sample_effect_arrays(model, params, rng, size=1)
    if model == "us":
        return damage.USEffects(float(arrays["A"][0]), float(arrays["B"][0]))
    return damage.CanadianEffects(
        float(arrays["a"][0]),
        float(arrays["b"][0]),
        float(arrays["c"][0]),
        float(arrays["n"][0]),
        float(arrays["sigma0"][0]),
    )


def window_indicators(model, effects, failure_time, loading_rate, mu_s, window):
    """Boolean array: does each effect draw solve within the window?

    ``failure_time`` and ``loading_rate`` may be scalars or arrays
    broadcasting against the effect draws, so one call can cover a whole
    dataset of specimens at once.

    For the threshold models the failure time T* solves a strictly
    increasing residual r(T), so T* in [T-w, T+w] is decided from the
    residual signs at the window edges; no per-draw root solve is needed.
    Non-failing draws (nonpositive growth coefficient, negative feedback
    coefficient) never count.
    """
    if model == "us":
        solved = damage.us_failure_times(effects["A"], effects["B"], mu_s)
        lo = failure_time - window
        hi = failure_time + window
        return (solved >= lo) & (solved <= hi)

    if model not in ("canadian", "canadian2"):
        raise DomainError(f"unknown model id {model!r}")
    a, b, c = effects["a"], effects["b"], effects["c"]
    n, sigma0 = effects["n"], effects["sigma0"]
    shape = a.shape
    t_arr = np.broadcast_to(np.asarray(failure_time, dtype=float), shape)
    k_arr = np.broadcast_to(np.asarray(loading_rate, dtype=float), shape) if model == "canadian" else None
    lo = t_arr - window
    hi = t_arr + window
    hit = np.zeros(shape, dtype=bool)

    # Draws whose effects land outside float range (possible under the
    # vague priors during initialization) can never sit in a finite
    # window; they count as misses.
    sane = (
        np.isfinite(a)
        & np.isfinite(b)
        & np.isfinite(c)
        & np.isfinite(n)
        & (b > 0)
        & (n > 0)
        & (sigma0 > 0)
        & (sigma0 < 1)
    )
    regular = sane & (a > 0) & (c > 0)
    if np.any(regular):
        kr = None if k_arr is None else k_arr[regular]
        args = (a[regular], b[regular], c[regular], n[regular], sigma0[regular])
        # failure no later than T + w
        ok = damage.canadian_time_residual(hi[regular], *args, mu_s, k=kr) >= 0
        # failure no earlier than T - w, tested only on draws still alive
        lo_reg = lo[regular]
        needs_low = ok & (lo_reg > 0)
        if np.any(needs_low):
            ks = None if kr is None else kr[needs_low]
            lower = damage.canadian_time_residual(
                lo_reg[needs_low], *(v[needs_low] for v in args), mu_s, k=ks
            )
            ok[needs_low] = lower <= 0
        hit[regular] = ok

    boundary = sane & (a > 0) & (c == 0)
    if np.any(boundary):
        kb = None if k_arr is None else k_arr[boundary]
        solved = damage._first_term_failure_times(a[boundary], b[boundary], sigma0[boundary], mu_s, k=kb)
        hit[boundary] = (solved >= lo[boundary]) & (solved <= hi[boundary])
    return hit


# Specimens are evaluated in stacked blocks: big enough to amortize the
# per-call numpy overhead, small enough that a hopeless proposal (some
# specimen with zero matching draws) exits after a fraction of the work.
_SPECIMEN_BLOCK = 32


def mc_log_likelihood(
    model: str,
    params,
    dataset: Dataset,
    cfg: LikelihoodConfig,
    stream: StreamKey,
) -> float:
    """Sum over specimens of log(matching draws / N); -inf on a zero count.

    Specimen i consumes the substream ``stream.child(i)``, so two calls
    with the same stream reproduce the same estimate exactly, regardless
    of how the evaluation is blocked internally.
    """
    n_spec = len(dataset)
    n_draws = cfg.n_draws
    field_names = ("A", "B") if model == "us" else ("a", "b", "c", "n", "sigma0")
    total = 0.0
    for start in range(0, n_spec, _SPECIMEN_BLOCK):
        block = range(start, min(start + _SPECIMEN_BLOCK, n_spec))
        width = len(block)
        stacked = {name: np.empty(width * n_draws) for name in field_names}
        for j, i in enumerate(block):
            rng = stream.child(i).generator()
            effects = sample_effect_arrays(model, params, rng, n_draws)
            sl = slice(j * n_draws, (j + 1) * n_draws)
            for name in field_names:
                stacked[name][sl] = effects[name]
        times = np.repeat(dataset.failure_times[block.start : block.stop], n_draws)
        rates = np.repeat(dataset.loading_rates[block.start : block.stop], n_draws)
        hits = window_indicators(model, stacked, times, rates, dataset.mu_s, cfg.window)
        counts = hits.reshape(width, n_draws).sum(axis=1)
        if np.any(counts == 0):
            return -math.inf
        total += float(np.sum(np.log(counts / n_draws)))
    return total


def _log_normal_pdf(x: float, sd: float) -> float:
    return -0.5 * math.log(2.0 * math.pi * sd * sd) - 0.5 * (x / sd) ** 2


def _log_inv_gamma_pdf(v: float, shape: float, rate: float) -> float:
    if v <= 0:
        return -math.inf
    return shape * math.log(rate) - math.lgamma(shape) - (shape + 1.0) * math.log(v) - rate / v


def log_prior(params) -> float:
    """Joint log prior density over the sampling coordinates (mu, log sigma).

    Location parameters get independent Normal(0, 100^2) densities; each
    variance sigma^2 gets an Inverse-Gamma(0.001, 0.001) density.  Because
    the sampler random-walks in log sigma, the change-of-variable Jacobian
    d(sigma^2)/d(log sigma) = 2 sigma^2 is included here.  -inf whenever a
    sigma is nonpositive.
    """
    total = 0.0
    for f in fields(params):
        value = getattr(params, f.name)
        if f.name.startswith("mu_"):
            if not math.isfinite(value):
                return -math.inf
            total += _log_normal_pdf(value, PRIOR_MU_SD)
        else:
            if not (value > 0) or not math.isfinite(value):
                return -math.inf
            variance = value * value
            if not math.isfinite(variance):
                return -math.inf
            total += _log_inv_gamma_pdf(variance, PRIOR_SIGMA_SHAPE, PRIOR_SIGMA_RATE)
            total += math.log(2.0 * variance)
    return total


def log_power_posterior(
    model: str,
    params,
    dataset: Dataset,
    cfg: LikelihoodConfig,
    t: float,
    stream: Optional[StreamKey] = None,
) -> float:
    """t * estimated log likelihood + log prior; at t = 0 no draws are used."""
    if not (0.0 <= t <= 1.0):
        raise DomainError("temperature t must lie in [0, 1]")
    prior = log_prior(params)
    if t == 0.0 or prior == -math.inf:
        return prior
    if stream is None:
        raise DomainError("a stream is required when t > 0")
    return t * mc_log_likelihood(model, params, dataset, cfg, stream) + prior
