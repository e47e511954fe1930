"""Accumulated-damage models for ramp-load tests.

Two model families are implemented in non-dimensional form, where damage
alpha(t) in [0, 1] grows at a rate scaled by a population reference time
mu_s, and the stress enters only through the ratio tau(t)/tau_s:

* the exponential ("US") model, whose ramp-test failure time has the
  closed form  T_s = mu_s * B * exp(A) / (exp(B) - 1);
* the threshold ("Canadian") model, whose ramp-test failure time solves a
  transcendental balance involving the lower incomplete gamma function,
  here handled entirely in log space; plus its stress-ratio variant
  ("canadian2") in which the rate coefficients are dimensionless and the
  failure time does not depend on the loading rate.

An independent adaptive ODE integrator for the same dynamics lives in
``admfit.ode`` and is used as a cross-check oracle throughout the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConvergenceFailure, DomainError, InvalidEffect
from .gammainc import log_lower_gamma_from_log

__all__ = [
    "USEffects",
    "CanadianEffects",
    "RampContext",
    "Geometry",
    "FailureOutcome",
    "LoadProfile",
    "us_failure_time",
    "us_damage_ramp",
    "us_initial_rate",
    "us_final_rate",
    "us_failure_times",
    "canadian_rate",
    "canadian_failure_time",
    "canadian2_failure_time",
    "canadian_failure_times",
    "canadian_time_residual",
    "deflection_loading_rate",
    "SMALL_B",
    "DEFAULT_HORIZON_FACTOR",
]

# Treat |B| below this as the removable singularity of the US closed form
# and use the B -> 0 limit instead.
SMALL_B = 1e-8

# Failure searches give up past horizon = DEFAULT_HORIZON_FACTOR * mu_s.
DEFAULT_HORIZON_FACTOR = 1e6

_BRACKET_FLOOR_FACTOR = 1e-12


@dataclass(frozen=True)
class USEffects:
    """Specimen random effects of the exponential model (both positive
    under the log-normal population law; A shifts the initial damage rate
    down, B sharpens the end-of-life acceleration)."""

    A: float
    B: float


@dataclass(frozen=True)
class CanadianEffects:
    """Specimen random effects of the threshold model.

    For the "canadian" model a and c carry units 1/psi; for the
    "canadian2" variant they are dimensionless.  b and n are dimensionless
    powers and sigma0 in (0, 1) is the stress-ratio threshold below which
    no damage accumulates.
    """

    a: float
    b: float
    c: float
    n: float
    sigma0: float


@dataclass(frozen=True)
class RampContext:
    """Ramp-test context: loading rate k (psi/s) and reference mean
    failure time mu_ref (seconds)."""

    k: float
    mu_ref: float

    def __post_init__(self):
        if not (self.k > 0):
            raise DomainError("loading rate k must be positive")
        if not (self.mu_ref > 0):
            raise DomainError("reference time mu_ref must be positive")


@dataclass(frozen=True)
class Geometry:
    """Bending-test specimen geometry, all in inches."""

    span: float
    breadth: float
    depth: float

    def __post_init__(self):
        if min(self.span, self.breadth, self.depth) <= 0:
            raise DomainError("geometry dimensions must be positive")


@dataclass(frozen=True)
class FailureOutcome:
    """Either failure at a positive time or no failure within the horizon."""

    time: Optional[float] = None

    @classmethod
    def at(cls, time: float) -> "FailureOutcome":
        if not (time > 0):
            raise DomainError(f"failure time must be positive, got {time}")
        return cls(float(time))

    @classmethod
    def non_failing(cls) -> "FailureOutcome":
        return cls(None)

    @property
    def failed(self) -> bool:
        return self.time is not None


class LoadProfile:
    """Piecewise-linear stress history tau(t).

    Breakpoints start at (0, 0) with strictly increasing times; beyond the
    last breakpoint the final segment's slope extrapolates, which makes a
    single segment through the origin an unbounded ramp.
    """

    def __init__(self, breakpoints):
        pts = [(float(t), float(tau)) for t, tau in breakpoints]
        if len(pts) < 2:
            raise DomainError("a load profile needs at least two breakpoints")
        if pts[0] != (0.0, 0.0):
            raise DomainError("load profiles must start at (t=0, tau=0)")
        times = [t for t, _ in pts]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise DomainError("breakpoint times must be strictly increasing")
        self.breakpoints = tuple(pts)

    @classmethod
    def ramp(cls, k: float) -> "LoadProfile":
        if not (k > 0):
            raise DomainError("ramp rate must be positive")
        return cls([(0.0, 0.0), (1.0, float(k))])

    @property
    def ramp_rate(self) -> Optional[float]:
        """Slope if the profile is a single ray through the origin."""
        if len(self.breakpoints) != 2:
            return None
        (_, tau0), (t1, tau1) = self.breakpoints
        if tau0 != 0.0:
            return None
        return tau1 / t1

    def stress(self, t: float) -> float:
        pts = self.breakpoints
        if t <= 0:
            return 0.0
        if t >= pts[-1][0]:
            (ta, ya), (tb, yb) = pts[-2], pts[-1]
            return yb + (yb - ya) / (tb - ta) * (t - pts[-1][0])
        lo, hi = 0, len(pts) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if pts[mid][0] <= t:
                lo = mid
            else:
                hi = mid
        (ta, ya), (tb, yb) = pts[lo], pts[hi]
        return ya + (yb - ya) * (t - ta) / (tb - ta)


# --- exponential (US) model ---------------------------------------------


def us_failure_times(A, B, mu_s):
    """Vectorized ramp failure times mu_s * B * exp(A) / expm1(B).

    The removable singularity at B = 0 takes the limit mu_s * exp(A).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        small = np.abs(B) < SMALL_B
        denom = np.where(small, 1.0, np.expm1(B))
        ratio = np.where(small, 1.0, B / denom)
        times = mu_s * ratio * np.exp(A)
    # inf * 0 from simultaneous overflow/underflow: no finite failure time
    return np.where(np.isnan(times), np.inf, times)


def us_failure_time(effects: USEffects, mu_s: float) -> FailureOutcome:
    """Closed-form ramp failure time of the exponential model."""
    if not (mu_s > 0):
        raise DomainError("mu_s must be positive")
    B = effects.B
    if abs(B) < SMALL_B:
        return FailureOutcome.at(mu_s * math.exp(effects.A))
    if B < 0:
        raise InvalidEffect(f"rate effect B must be positive, got {B}")
    return FailureOutcome.at(mu_s * B * math.exp(effects.A) / math.expm1(B))


def us_damage_ramp(t: float, failure_time: float, B: float) -> float:
    """Damage fraction alpha(t) = expm1(B t / T_s) / expm1(B) on [0, T_s]."""
    if not (failure_time > 0):
        raise DomainError("failure_time must be positive")
    if t < 0 or t > failure_time:
        raise DomainError(f"t={t} outside [0, {failure_time}]")
    x = t / failure_time
    if abs(B) < SMALL_B:
        return x
    return min(1.0, max(0.0, math.expm1(B * x) / math.expm1(B)))


def us_initial_rate(effects: USEffects, mu_s: float) -> float:
    """Damage rate at t = 0: 1 / (mu_s * exp(A))."""
    if not (mu_s > 0):
        raise DomainError("mu_s must be positive")
    return math.exp(-effects.A) / mu_s


def us_final_rate(effects: USEffects, failure_time: float) -> float:
    """Damage rate at the failure time: (B / T_s) * exp(B) / expm1(B)."""
    if not (failure_time > 0):
        raise DomainError("failure_time must be positive")
    B = effects.B
    if abs(B) < SMALL_B:
        return 1.0 / failure_time
    return B / (failure_time * -math.expm1(-B))


# --- deflection-controlled ramp -----------------------------------------


def deflection_loading_rate(modulus: float, deflection_rate: float, geometry: Geometry) -> float:
    """Force rate (lb/s) equivalent to a constant mid-span deflection rate.

    A four-point bending setup with loads at the third points deflects
    D = C * F / E with C = 276 L^3 / (1296 b d^3), so holding dD/dt = d
    requires the force to ramp at k = E d / C.  The output is a force
    rate; converting to a stress rate needs the section modulus, which is
    left to the caller.
    """
    if not (modulus > 0):
        raise DomainError("elastic modulus must be positive")
    if deflection_rate < 0:
        raise DomainError("deflection rate must be nonnegative")
    c = 276.0 * geometry.span**3 / (1296.0 * geometry.breadth * geometry.depth**3)
    return modulus * deflection_rate / c


# --- threshold (Canadian) model -----------------------------------------


def canadian_rate(
    t: float,
    alpha: float,
    effects: CanadianEffects,
    ctx: RampContext,
    failure_time: float,
) -> float:
    """Ramp-test damage rate of the threshold model at time t.

    mu_s * dalpha/dt = [a k T_s (t/T_s - sigma0)+]^b
                     + [c k T_s (t/T_s - sigma0)+]^n * alpha

    The whole bracketed product clamps at zero when negative, so the rate
    vanishes below the stress-ratio threshold and for nonpositive a or c.
    """
    if t < 0:
        raise DomainError("t must be nonnegative")
    if not (0.0 <= alpha <= 1.0):
        raise DomainError("alpha must lie in [0, 1]")
    over = t / failure_time - effects.sigma0
    if over <= 0:
        return 0.0
    scale = ctx.k * failure_time * over
    growth = _pow_clamped(effects.a * scale, effects.b)
    feedback = _pow_clamped(effects.c * scale, effects.n) * alpha
    return (growth + feedback) / ctx.mu_ref


def _pow_clamped(base: float, power: float) -> float:
    """base**power clamped to 0 for nonpositive base, saturating at inf."""
    if base <= 0:
        return 0.0
    log_value = power * math.log(base)
    if log_value > 709.0:
        return math.inf
    return math.exp(log_value)


def canadian_time_residual(T, a, b, c, n, sigma0, mu_s, k=None):
    """Monotone residual whose unique root is the ramp failure time.

    Built from the log of the integrating-factor balance: negative where
    T is below the failure time, positive above, strictly increasing in
    T.  ``k=None`` selects the stress-ratio variant (dimensionless a, c);
    otherwise a and c are per-psi coefficients and k is the loading rate.
    All inputs broadcast; a > 0, c > 0, b > 0, n > 0 required.
    """
    T = np.asarray(T, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)
    n = np.asarray(n, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    # effects near the edge of float range (reachable under vague priors)
    # may overflow intermediates to +-inf or NaN; comparisons downstream
    # treat those as "no failure in any finite window", which is right
    with np.errstate(over="ignore", invalid="ignore"):
        log_T = np.log(T)
        if k is None:
            # ratio variant: a and c multiply the powers from outside, i.e.
            # a (x)+^b = [a^(1/b) (x)+]^b, so the inner coefficient is a^(1/b)
            log_coef_a = np.log(a) / b
            log_coef_c = np.log(c) / n
        else:
            log_k = np.log(np.asarray(k, dtype=float))
            log_coef_a = np.log(a) + log_k + log_T
            log_coef_c = np.log(c) + log_k + log_T
        shape = (b + 1.0) / (n + 1.0)
        log_ref = math.log(mu_s) if np.ndim(mu_s) == 0 else np.log(mu_s)
        log_u = n * log_coef_c + log_T - np.log(n + 1.0) + (n + 1.0) * np.log1p(-sigma0) - log_ref
        log_u = np.where(np.isnan(log_u), -np.inf, log_u)
        log_gamma_term = log_lower_gamma_from_log(shape, log_u)
        u = np.exp(log_u)
        return (
            b * log_coef_a
            - n * shape * log_coef_c
            + (shape - 1.0) * (log_ref + np.log(n + 1.0) - log_T)
            + log_gamma_term
            + u
        )


def _first_term_failure_times(a, b, sigma0, mu_s, k=None):
    """Closed-form failure time when the damage-feedback coefficient is 0.

    Integrating the growth term alone gives
    T^(b+1) = mu_s (b+1) / ((a k)^b (1 - sigma0)^(b+1))     (per-psi form)
    T       = mu_s (b+1) / (a (1 - sigma0)^(b+1))           (ratio form).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    sigma0 = np.asarray(sigma0, dtype=float)
    log_mu = math.log(mu_s)
    if k is None:
        log_T = log_mu + np.log(b + 1.0) - np.log(a) - (b + 1.0) * np.log1p(-sigma0)
    else:
        log_k = np.log(np.asarray(k, dtype=float))
        log_T = (
            log_mu + np.log(b + 1.0) - b * (np.log(a) + log_k) - (b + 1.0) * np.log1p(-sigma0)
        ) / (b + 1.0)
    return np.exp(log_T)


def canadian_failure_times(
    a,
    b,
    c,
    n,
    sigma0,
    mu_s,
    k=None,
    horizon_factor=DEFAULT_HORIZON_FACTOR,
    rel_tol=1e-10,
    max_iter=400,
):
    """Vectorized ramp failure times of the threshold model.

    Returns an array with NaN marking non-failing draws (a <= 0, c < 0,
    or no root below horizon_factor * mu_s).  c = 0 exactly uses the
    growth-term-only closed form.  The root search brackets by geometric
    expansion from mu_s / 10 and then bisects in log T to ``rel_tol``.
    """
    a, b, c, n, sigma0 = np.broadcast_arrays(
        *(np.atleast_1d(np.asarray(v, dtype=float)) for v in (a, b, c, n, sigma0))
    )
    if k is None:
        k_arr = None
    else:
        k_arr = np.broadcast_to(np.atleast_1d(np.asarray(k, dtype=float)), a.shape)
    if np.any(b <= 0) or np.any(n <= 0):
        raise InvalidEffect("power effects b and n must be positive")
    if np.any((sigma0 <= 0) | (sigma0 >= 1)):
        raise InvalidEffect("stress-ratio threshold sigma0 must lie in (0, 1)")

    out = np.full(a.shape, np.nan)
    failing = a > 0
    boundary = failing & (c == 0)
    if np.any(boundary):
        kb = None if k_arr is None else k_arr[boundary]
        out[boundary] = _first_term_failure_times(
            a[boundary], b[boundary], sigma0[boundary], mu_s, k=kb
        )
    active = failing & (c > 0)
    if not np.any(active):
        return out

    idx = np.flatnonzero(active.ravel())
    flat = lambda arr: arr.ravel()[idx]
    av, bv, cv, nv, sv = flat(a), flat(b), flat(c), flat(n), flat(sigma0)
    kv = None if k_arr is None else flat(k_arr)

    def residual(T, sel=slice(None)):
        kk = None if kv is None else kv[sel]
        return canadian_time_residual(T, av[sel], bv[sel], cv[sel], nv[sel], sv[sel], mu_s, k=kk)

    horizon = horizon_factor * mu_s
    floor = _BRACKET_FLOOR_FACTOR * mu_s
    lo = np.full(idx.shape, mu_s / 10.0)
    hi = lo.copy()
    r_lo = residual(lo)
    r_hi = r_lo.copy()

    for _ in range(max_iter):
        grow = (r_hi < 0) & (hi < horizon)
        if not np.any(grow):
            break
        hi[grow] = np.minimum(hi[grow] * 2.0, horizon)
        r_hi[grow] = residual(hi[grow], grow)
    else:
        raise ConvergenceFailure("upward bracket expansion exhausted its budget")
    beyond = r_hi < 0  # no failure below the horizon

    for _ in range(max_iter):
        sink = (r_lo > 0) & (lo > floor) & ~beyond
        if not np.any(sink):
            break
        lo[sink] = np.maximum(lo[sink] / 2.0, floor)
        r_lo[sink] = residual(lo[sink], sink)
    else:
        raise ConvergenceFailure("downward bracket expansion exhausted its budget")
    if np.any((r_lo > 0) & ~beyond):
        raise ConvergenceFailure(
            "failure-time bracket still open at the lower search floor"
        )

    live = ~beyond
    for _ in range(max_iter):
        open_width = live & (hi > lo * (1.0 + rel_tol))
        if not np.any(open_width):
            break
        mid = np.sqrt(lo * hi)
        r_mid = residual(mid[open_width], open_width)
        below = np.zeros_like(open_width)
        below[open_width] = r_mid < 0
        lo = np.where(open_width & below, mid, lo)
        hi = np.where(open_width & ~below, mid, hi)
    else:
        raise ConvergenceFailure("bisection refinement exhausted its budget")

    roots = np.where(live, np.sqrt(lo * hi), np.nan)
    out.ravel()[idx] = roots
    return out


def canadian_failure_time(
    effects: CanadianEffects,
    ctx: RampContext,
    horizon_factor=DEFAULT_HORIZON_FACTOR,
    rel_tol=1e-10,
) -> FailureOutcome:
    """Ramp failure time of the threshold model (per-psi coefficients).

    Nonpositive growth coefficient a, or negative feedback coefficient c,
    lead to a non-failing specimen; c = 0 uses the closed-form boundary
    solution.  Raises ConvergenceFailure only if the root search cannot
    close its bracket (distinct from NonFailing).
    """
    return _scalar_failure_time(effects, ctx, k=ctx.k, horizon_factor=horizon_factor, rel_tol=rel_tol)


def canadian2_failure_time(
    effects: CanadianEffects,
    ctx: RampContext,
    horizon_factor=DEFAULT_HORIZON_FACTOR,
    rel_tol=1e-10,
) -> FailureOutcome:
    """Ramp failure time of the stress-ratio variant (dimensionless a, c).

    The balance involves only t / T_s, so the result is independent of
    the loading rate k.
    """
    return _scalar_failure_time(effects, ctx, k=None, horizon_factor=horizon_factor, rel_tol=rel_tol)


def _scalar_failure_time(effects, ctx, k, horizon_factor, rel_tol) -> FailureOutcome:
    if effects.a <= 0 or effects.c < 0:
        return FailureOutcome.non_failing()
    times = canadian_failure_times(
        effects.a,
        effects.b,
        effects.c,
        effects.n,
        effects.sigma0,
        ctx.mu_ref,
        k=k,
        horizon_factor=horizon_factor,
        rel_tol=rel_tol,
    )
    value = float(np.asarray(times).ravel()[0])
    if math.isnan(value):
        return FailureOutcome.non_failing()
    return FailureOutcome.at(value)
