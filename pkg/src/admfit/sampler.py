"""Pseudo-marginal Metropolis-Hastings within parallel tempering.

A ladder of K power posteriors prior * likelihood^t, t from 0 to 1, is
advanced in lockstep: every iteration each rung takes one Gaussian
random-walk step in transformed coordinates (identity for location
parameters, log for scale parameters), then adjacent rungs attempt state
swaps.  Likelihood values are Monte-Carlo *estimates*; pseudo-marginal
discipline keeps the current state's estimate rather than refreshing it,
and a proposal whose estimate is zero is always rejected.

All randomness is drawn from counter-based substreams keyed by rung and
iteration, so a run is reproducible bit-for-bit from its seed no matter
how many worker threads advance the rungs.

The rung traces of the log-likelihood estimate feed a trapezoidal
thermodynamic-integration estimate of the log marginal likelihood, whose
ratios between models give Bayes factors.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import likelihood as lk
from .damage import canadian_failure_times, us_failure_times
from .errors import DomainError, InitializationFailure
from .streams import StreamKey

__all__ = [
    "TemperatureLadder",
    "SamplerConfig",
    "ChainState",
    "TemperedProblem",
    "PosteriorSamples",
    "EvidenceEstimate",
    "BayesFactor",
    "mh_step",
    "swap_step",
    "run_tempering",
    "run_parallel_tempering",
    "estimate_log_marginal",
    "bayes_factor",
    "summarize_posterior",
    "PosteriorSummary",
    "model_problem",
]


@dataclass(frozen=True)
class TemperatureLadder:
    """Strictly increasing temperatures from exactly 0 to exactly 1."""

    temperatures: tuple

    def __post_init__(self):
        ts = tuple(float(t) for t in self.temperatures)
        object.__setattr__(self, "temperatures", ts)
        if len(ts) < 2:
            raise DomainError("a ladder needs at least two rungs")
        if ts[0] != 0.0 or ts[-1] != 1.0:
            raise DomainError("ladder endpoints must be exactly 0 and 1")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise DomainError("temperatures must be strictly increasing")

    @classmethod
    def power_schedule(cls, rungs: int = 20, exponent: float = 5.0) -> "TemperatureLadder":
        """(i / (K-1))^exponent; the usual schedule crowding rungs near 0."""
        if rungs < 2:
            raise DomainError("rungs must be at least 2")
        grid = (np.arange(rungs) / (rungs - 1)) ** exponent
        grid[0], grid[-1] = 0.0, 1.0
        return cls(tuple(grid))

    def __len__(self):
        return len(self.temperatures)

    def __iter__(self):
        return iter(self.temperatures)

    def __getitem__(self, i):
        return self.temperatures[i]


@dataclass
class SamplerConfig:
    iterations: int = 10000
    burn_in: int = 1000
    rungs: int = 20
    ladder_exponent: float = 5.0
    proposal_scales: object = 0.1  # scalar or per-parameter sequence
    swap_stride: int = 1
    seed: int = 0
    likelihood: lk.LikelihoodConfig = field(default_factory=lk.LikelihoodConfig)
    adapt: bool = True
    adapt_target: float = 0.25
    workers: int = 1
    init_attempts: int = 200
    ladder: Optional[TemperatureLadder] = None

    def __post_init__(self):
        if not (0 <= self.burn_in < self.iterations):
            raise DomainError("burn_in must be smaller than iterations")
        if self.swap_stride < 1:
            raise DomainError("swap_stride must be at least 1")

    def make_ladder(self) -> TemperatureLadder:
        if self.ladder is not None:
            return self.ladder
        return TemperatureLadder.power_schedule(self.rungs, self.ladder_exponent)


@dataclass
class ChainState:
    """Position in walk coordinates plus the retained log-likelihood
    estimate and log prior (pseudo-marginal: the estimate travels with
    the state and is never recomputed in place)."""

    position: np.ndarray
    log_likelihood: float
    log_prior: float


@dataclass
class TemperedProblem:
    """What the tempering engine needs to know about a target.

    ``log_likelihood(position, stream)`` may be an exact likelihood (a
    zero-variance estimator) or any unbiased nonnegative estimator of it
    evaluated with the supplied stream.  Positions are walk coordinates;
    ``to_natural`` maps them to the reported parameterization.
    """

    names: tuple
    log_prior: Callable[[np.ndarray], float]
    log_likelihood: Callable[[np.ndarray, StreamKey], float]
    initial_position: np.ndarray
    to_natural: Callable[[np.ndarray], np.ndarray] = lambda v: np.asarray(v, dtype=float)
    initial_log_likelihood: Optional[float] = None


@dataclass
class PosteriorSamples:
    """Post burn-in traces for every rung.

    ``samples`` has shape (rungs, retained, dim) in natural coordinates;
    ``log_likelihoods`` holds the per-rung trace of the retained states'
    log-likelihood estimates.
    """

    parameter_names: tuple
    temperatures: tuple
    samples: np.ndarray
    log_likelihoods: np.ndarray
    acceptance_rates: np.ndarray
    swap_rates: np.ndarray
    proposal_multipliers: np.ndarray

    def rung(self, index: int) -> np.ndarray:
        return self.samples[index]

    @property
    def posterior(self) -> np.ndarray:
        """Samples of the t = 1 rung."""
        return self.samples[-1]


@dataclass
class EvidenceEstimate:
    """Thermodynamic-integration log marginal likelihood."""

    log_marginal: float
    rung_means: np.ndarray
    standard_error: float


@dataclass(frozen=True)
class BayesFactor:
    log_value: float

    @property
    def value(self) -> float:
        return math.exp(self.log_value) if self.log_value < 700 else math.inf


def mh_step(
    state: ChainState,
    temperature: float,
    scales: np.ndarray,
    problem: TemperedProblem,
    stream: StreamKey,
):
    """One Gaussian random-walk step; returns (state, accepted, alpha).

    The acceptance probability is min(1, exp(delta)) with delta the change
    in t * log-likelihood-estimate + log prior.  Proposals with a -inf
    prior are rejected without spending likelihood draws; proposals with
    a -inf likelihood estimate are always rejected.
    """
    rng = stream.child("prop").generator()
    proposal = state.position + rng.normal(size=state.position.size) * scales
    prior = problem.log_prior(proposal)
    if not math.isfinite(prior):
        return state, False, 0.0
    loglik = problem.log_likelihood(proposal, stream.child("lik"))
    if loglik == -math.inf or math.isnan(loglik):
        return state, False, 0.0
    lik_term = 0.0 if temperature == 0.0 else temperature * (loglik - state.log_likelihood)
    delta = lik_term + prior - state.log_prior
    alpha = 1.0 if delta >= 0 else math.exp(delta)
    accept = stream.child("acc").generator().random() < alpha
    if accept:
        return ChainState(proposal, loglik, prior), True, alpha
    return state, False, alpha


def swap_step(
    state_low: ChainState,
    state_high: ChainState,
    t_low: float,
    t_high: float,
    uniform: float,
):
    """Replica-exchange decision for an adjacent rung pair.

    Exchange happens with probability
    min(1, exp((t_low - t_high) * (L_high - L_low))) where L are the
    states' cached log-likelihood estimates, which travel with the
    states.  Returns (new_state_low, new_state_high, swapped).
    """
    log_ratio = (t_low - t_high) * (state_high.log_likelihood - state_low.log_likelihood)
    if log_ratio >= 0 or uniform < math.exp(log_ratio):
        return state_high, state_low, True
    return state_low, state_high, False


def run_tempering(problem: TemperedProblem, cfg: SamplerConfig) -> PosteriorSamples:
    """Advance all rungs in lockstep and collect post burn-in traces.

    Proposal scales adapt toward ``cfg.adapt_target`` acceptance during
    burn-in only (Robbins-Monro on a per-rung log multiplier) and stay
    frozen afterwards.  With ``cfg.workers > 1`` rungs advance on a thread
    pool between swap barriers; the counter-based streams make the result
    identical to the serial schedule.
    """
    ladder = cfg.make_ladder()
    K = len(ladder)
    dim = len(problem.names)
    base_scales = np.asarray(cfg.proposal_scales, dtype=float) * np.ones(dim)
    root = StreamKey(cfg.seed)

    position = np.asarray(problem.initial_position, dtype=float)
    prior0 = problem.log_prior(position)
    if problem.initial_log_likelihood is not None:
        loglik0 = problem.initial_log_likelihood
    else:
        loglik0 = problem.log_likelihood(position, root.child("init-lik"))
    if not (np.isfinite(prior0) and loglik0 > -math.inf):
        raise InitializationFailure("initial state has a non-finite target value")
    states = [ChainState(position.copy(), loglik0, prior0) for _ in range(K)]

    retained = cfg.iterations - cfg.burn_in
    samples = np.empty((K, retained, dim))
    logliks = np.empty((K, retained))
    multipliers = np.zeros(K)
    accept_counts = np.zeros(K, dtype=int)
    swap_attempts = np.zeros(max(K - 1, 1), dtype=int)
    swap_counts = np.zeros(max(K - 1, 1), dtype=int)

    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    try:
        for m in range(cfg.iterations):
            def advance(ri: int):
                scales = base_scales * math.exp(multipliers[ri])
                return mh_step(states[ri], ladder[ri], scales, problem, root.child("mh", ri, m))

            if pool is None:
                results = [advance(ri) for ri in range(K)]
            else:
                results = list(pool.map(advance, range(K)))

            for ri, (state, accepted, alpha) in enumerate(results):
                states[ri] = state
                accept_counts[ri] += accepted
                if cfg.adapt and m < cfg.burn_in:
                    gain = (m + 1) ** -0.6
                    multipliers[ri] += gain * (alpha - cfg.adapt_target)

            if (m + 1) % cfg.swap_stride == 0:
                for parity in (0, 1):
                    for i in range(parity, K - 1, 2):
                        u = root.child("swap", m, i).generator().random()
                        new_low, new_high, swapped = swap_step(
                            states[i], states[i + 1], ladder[i], ladder[i + 1], u
                        )
                        states[i], states[i + 1] = new_low, new_high
                        swap_attempts[i] += 1
                        swap_counts[i] += swapped

            if m >= cfg.burn_in:
                row = m - cfg.burn_in
                for ri in range(K):
                    samples[ri, row] = problem.to_natural(states[ri].position)
                    logliks[ri, row] = states[ri].log_likelihood
    finally:
        if pool is not None:
            pool.shutdown()

    with np.errstate(invalid="ignore", divide="ignore"):
        swap_rates = np.where(swap_attempts > 0, swap_counts / np.maximum(swap_attempts, 1), 0.0)
    return PosteriorSamples(
        parameter_names=tuple(problem.names),
        temperatures=tuple(ladder),
        samples=samples,
        log_likelihoods=logliks,
        acceptance_rates=accept_counts / cfg.iterations,
        swap_rates=swap_rates[: max(K - 1, 0)],
        proposal_multipliers=multipliers,
    )


# --- building tempered problems for the damage models ---------------------


def _walk_to_natural(names: Sequence[str]) -> Callable[[np.ndarray], np.ndarray]:
    is_scale = np.array([not n.startswith("mu_") for n in names])

    def to_natural(v: np.ndarray) -> np.ndarray:
        out = np.asarray(v, dtype=float).copy()
        out[is_scale] = np.exp(out[is_scale])
        return out

    return to_natural


def natural_to_walk(names: Sequence[str], values: np.ndarray) -> np.ndarray:
    out = np.asarray(values, dtype=float).copy()
    for i, n in enumerate(names):
        if not n.startswith("mu_"):
            out[i] = math.log(out[i])
    return out


def _deterministic_failure_time(model: str, mu_vector, k: float, mu_s: float) -> float:
    """Failure time at the central effects implied by location parameters."""
    if model == "us":
        return float(us_failure_times(math.exp(mu_vector[0]), math.exp(mu_vector[1]), mu_s))
    a, b, c, n, s0 = mu_vector
    times = canadian_failure_times(
        a if model == "canadian" else math.exp(a),
        math.exp(b),
        c if model == "canadian" else math.exp(c),
        math.exp(n),
        1.0 / (1.0 + math.exp(-s0)),
        mu_s,
        k=k if model == "canadian" else None,
    )
    return float(np.asarray(times).ravel()[0])


def _moment_seed(model: str, dataset: lk.Dataset) -> np.ndarray:
    """Starting (mu, log sigma) pairs whose central effects roughly hit the
    data mean failure time.

    Scale seeds are 0.1 on log-law parameters; for the Normal-law
    coefficients of the "canadian" model (whose magnitude depends on the
    data units) the seed scales with the located mean instead.
    """
    target = float(np.mean(dataset.failure_times))
    k_mid = float(np.median(dataset.loading_rates))
    mu_s = dataset.mu_s
    if model == "us":
        a_central = max(math.log(target * math.expm1(1.0) / mu_s), 0.05)
        mus = [math.log(a_central), 0.0]
        sigmas = [0.1, 0.1]
    else:
        lo, hi = 1e-12, 1e12

        def solved(v: float) -> float:
            raw = v if model == "canadian" else math.log(v)
            vec = (raw, math.log(2.0), raw, math.log(2.0), 0.0)
            return _deterministic_failure_time(model, vec, k_mid, mu_s)

        for _ in range(200):  # bisect on log v: failure time decreases in v
            mid = math.sqrt(lo * hi)
            if solved(mid) > target:
                lo = mid
            else:
                hi = mid
            if hi / lo < 1 + 1e-10:
                break
        v = math.sqrt(lo * hi)
        if model == "canadian":
            mus = [v, math.log(2.0), v, math.log(2.0), 0.0]
            sigmas = [v / 10.0, 0.1, v / 10.0, 0.1, 0.1]
        else:
            mus = [math.log(v), math.log(2.0), math.log(v), math.log(2.0), 0.0]
            sigmas = [0.1, 0.1, 0.1, 0.1, 0.1]
    walk, jitter = [], []
    for mu, sigma in zip(mus, sigmas):
        walk.append(mu)
        walk.append(math.log(sigma))
        jitter.append(sigma)  # location jitter on the scale of the effect law
        jitter.append(0.3)  # multiplicative jitter on the scale seed
    return np.array(walk, dtype=float), np.array(jitter, dtype=float)


def model_problem(
    model: str,
    dataset: lk.Dataset,
    cfg: SamplerConfig,
) -> TemperedProblem:
    """Tempered problem for a damage model, with a finite-likelihood start.

    Starting positions are searched as: the method-of-moments seed, then
    jittered copies of it, then draws from the prior, each until the
    likelihood estimate is finite or ``cfg.init_attempts`` is exhausted
    (InitializationFailure).
    """
    names = lk.param_names(model)
    to_natural = _walk_to_natural(names)

    def walk_log_prior(v: np.ndarray) -> float:
        return lk.log_prior(lk.make_params(model, to_natural(v)))

    def walk_log_likelihood(v: np.ndarray, stream: StreamKey) -> float:
        params = lk.make_params(model, to_natural(v))
        return lk.mc_log_likelihood(model, params, dataset, cfg.likelihood, stream)

    root = StreamKey(cfg.seed)
    seed_position, jitter_scales = _moment_seed(model, dataset)
    scale_coords = np.array([not n.startswith("mu_") for n in names])
    position = None
    loglik0 = None
    prior_from = max(3 * cfg.init_attempts // 4, 2)
    for attempt in range(cfg.init_attempts):
        rng = root.child("init", attempt).generator()
        if attempt < prior_from:
            # moment seed with progressively overdispersed effect laws
            # (wide sigmas give every specimen some window probability,
            # even when the located center fits the data poorly), plus
            # growing jitter after the first deterministic sweep
            candidate = seed_position.copy()
            candidate[scale_coords] += math.log(2.0) * (attempt % 8)
            if attempt >= 8:
                growth = 1.0 + attempt / 40.0
                candidate += rng.normal(size=candidate.size) * jitter_scales * 0.25 * growth
        else:
            candidate = np.empty(seed_position.size)
            for j, name in enumerate(names):
                if name.startswith("mu_"):
                    candidate[j] = rng.normal(0.0, lk.PRIOR_MU_SD)
                else:
                    gamma_draw = rng.gamma(lk.PRIOR_SIGMA_SHAPE, 1.0 / lk.PRIOR_SIGMA_RATE)
                    # Gamma(0.001) mass sits mostly below float range;
                    # a zero draw means an off-scale variance: skip it.
                    candidate[j] = 0.5 * math.log(1.0 / gamma_draw) if gamma_draw > 0 else math.nan
        if not np.all(np.isfinite(candidate)):
            continue
        value = walk_log_likelihood(candidate, root.child("init-lik", attempt))
        if value > -math.inf:
            position = candidate
            loglik0 = value
            break
    if position is None:
        raise InitializationFailure(
            f"no starting state with a finite likelihood estimate in {cfg.init_attempts} attempts"
        )

    return TemperedProblem(
        names=names,
        log_prior=walk_log_prior,
        log_likelihood=walk_log_likelihood,
        initial_position=position,
        to_natural=to_natural,
        initial_log_likelihood=loglik0,
    )


def run_parallel_tempering(model: str, dataset: lk.Dataset, cfg: SamplerConfig) -> PosteriorSamples:
    """Fit a damage model: build the tempered problem and run the ladder."""
    return run_tempering(model_problem(model, dataset, cfg), cfg)


# --- evidence, Bayes factors, summaries -----------------------------------


def estimate_log_marginal(
    samples: PosteriorSamples,
    ladder: Optional[Sequence[float]] = None,
    batches: int = 20,
) -> EvidenceEstimate:
    """Trapezoidal thermodynamic integration over the rung means.

    The integrand value at rung i is the post burn-in mean of that rung's
    log-likelihood-estimate trace; the standard error combines rung-wise
    batch-means variances through the trapezoid weights (reported, never
    used for gating).
    """
    ts = np.asarray(list(ladder if ladder is not None else samples.temperatures), dtype=float)
    traces = samples.log_likelihoods if isinstance(samples, PosteriorSamples) else np.asarray(samples)
    means = traces.mean(axis=1)
    log_z = float(np.trapezoid(means, ts))

    weights = np.zeros(len(ts))
    weights[0] = (ts[1] - ts[0]) / 2.0
    weights[-1] = (ts[-1] - ts[-2]) / 2.0
    if len(ts) > 2:
        weights[1:-1] = (ts[2:] - ts[:-2]) / 2.0
    variances = np.zeros(len(ts))
    n = traces.shape[1]
    nb = min(batches, n)
    if nb >= 2:
        edges = np.linspace(0, n, nb + 1, dtype=int)
        for i in range(len(ts)):
            batch_means = [traces[i, a:b].mean() for a, b in zip(edges[:-1], edges[1:])]
            variances[i] = np.var(batch_means, ddof=1) / nb
    se = float(np.sqrt(np.sum(weights**2 * variances)))
    return EvidenceEstimate(log_marginal=log_z, rung_means=means, standard_error=se)


def bayes_factor(evidence_1: EvidenceEstimate, evidence_2: EvidenceEstimate) -> BayesFactor:
    """Evidence ratio of model 1 over model 2, carried on the log scale."""
    return BayesFactor(log_value=evidence_1.log_marginal - evidence_2.log_marginal)


@dataclass
class PosteriorSummary:
    """Per-parameter quantiles in the 50% / 2.5% / 97.5% layout."""

    parameter_names: tuple
    quantiles: np.ndarray  # (dim, 3) columns: median, lower, upper

    def row(self, name: str):
        return tuple(self.quantiles[self.parameter_names.index(name)])

    def format(self) -> str:
        lines = [f"{'parameter':>12}  {'50%':>12}  {'2.5%':>12}  {'97.5%':>12}"]
        for name, (mid, lo, hi) in zip(self.parameter_names, self.quantiles):
            lines.append(f"{name:>12}  {mid:>12.4g}  {lo:>12.4g}  {hi:>12.4g}")
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {
            name: {"50%": float(m), "2.5%": float(lo), "97.5%": float(hi)}
            for name, (m, lo, hi) in zip(self.parameter_names, self.quantiles)
        }


def summarize_posterior(samples, parameter_names=None, rung: int = -1) -> PosteriorSummary:
    """Empirical 2.5/50/97.5% quantiles of the chosen rung (default t = 1)."""
    if isinstance(samples, PosteriorSamples):
        matrix = samples.samples[rung]
        names = samples.parameter_names
    else:
        matrix = np.asarray(samples, dtype=float)
        if matrix.ndim == 1:
            matrix = matrix[:, None]
        names = tuple(parameter_names or [f"p{i}" for i in range(matrix.shape[1])])
    if matrix.shape[0] == 0:
        raise DomainError("cannot summarize an empty sample")
    q = np.quantile(matrix, [0.5, 0.025, 0.975], axis=0).T
    return PosteriorSummary(parameter_names=tuple(names), quantiles=q)
