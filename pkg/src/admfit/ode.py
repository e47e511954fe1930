"""Adaptive ODE integration of damage trajectories.

This is the cross-check oracle for the closed-form and semi-analytic
failure-time solvers in :mod:`admfit.damage`: an embedded Dormand-Prince
4(5) pair with proportional step control, an event localizer for the
damage-complete condition alpha = 1, and, for ramp loads, an outer root
solve for the self-referential short-term strength tau_s = k * T_s.
"""

from __future__ import annotations

import math
from typing import Callable, Optional

import numpy as np
from scipy.optimize import brentq

from .damage import DEFAULT_HORIZON_FACTOR, FailureOutcome, LoadProfile, _pow_clamped
from .errors import ConvergenceFailure, DomainError, StepFailure

__all__ = ["integrate_damage", "model_rate"]

_MAX_STEPS = 2_000_000
_EVENT_ITERS = 90


def _exp_safe(x: float) -> float:
    return math.inf if x > 709.0 else math.exp(x)


def model_rate(model: str, effects, profile: LoadProfile, mu_ref: float, tau_s: float) -> Callable:
    """Damage-rate function d(alpha)/dt for the given model and profile."""
    if model == "us":
        A, B = effects.A, effects.B

        def rate(t: float, y: float) -> float:
            return _exp_safe(-A + B * profile.stress(t) / tau_s) / mu_ref

    elif model == "canadian":
        a, b, c, n, s0 = effects.a, effects.b, effects.c, effects.n, effects.sigma0

        def rate(t: float, y: float) -> float:
            over = profile.stress(t) / tau_s - s0
            if over <= 0:
                return 0.0
            scale = tau_s * over
            return (_pow_clamped(a * scale, b) + _pow_clamped(c * scale, n) * max(y, 0.0)) / mu_ref

    elif model == "canadian2":
        a, b, c, n, s0 = effects.a, effects.b, effects.c, effects.n, effects.sigma0

        def rate(t: float, y: float) -> float:
            over = profile.stress(t) / tau_s - s0
            if over <= 0:
                return 0.0
            return (
                a * _pow_clamped(over, b) + c * _pow_clamped(over, n) * max(y, 0.0)
            ) / mu_ref

    else:
        raise DomainError(f"unknown model id {model!r}")
    return rate


def _dopri_step(f, t, y, h):
    k1 = f(t, y)
    k2 = f(t + h / 5.0, y + h * (k1 / 5.0))
    k3 = f(t + 3.0 * h / 10.0, y + h * (3.0 * k1 / 40.0 + 9.0 * k2 / 40.0))
    k4 = f(t + 4.0 * h / 5.0, y + h * (44.0 * k1 / 45.0 - 56.0 * k2 / 15.0 + 32.0 * k3 / 9.0))
    k5 = f(
        t + 8.0 * h / 9.0,
        y
        + h
        * (
            19372.0 * k1 / 6561.0
            - 25360.0 * k2 / 2187.0
            + 64448.0 * k3 / 6561.0
            - 212.0 * k4 / 729.0
        ),
    )
    k6 = f(
        t + h,
        y
        + h
        * (
            9017.0 * k1 / 3168.0
            - 355.0 * k2 / 33.0
            + 46732.0 * k3 / 5247.0
            + 49.0 * k4 / 176.0
            - 5103.0 * k5 / 18656.0
        ),
    )
    y5 = y + h * (
        35.0 * k1 / 384.0
        + 500.0 * k3 / 1113.0
        + 125.0 * k4 / 192.0
        - 2187.0 * k5 / 6784.0
        + 11.0 * k6 / 84.0
    )
    k7 = f(t + h, y5)
    err = h * (
        71.0 * k1 / 57600.0
        - 71.0 * k3 / 16695.0
        + 71.0 * k4 / 1920.0
        - 17253.0 * k5 / 339200.0
        + 22.0 * k6 / 525.0
        - k7 / 40.0
    )
    return y5, err


def _integrate_with_event(rate, t0, t_end, tol, t_scale):
    """Advance alpha from 0 at t0; stop at alpha = 1 or t_end.

    Returns (trajectory list, event time or None).  The event is localized
    by bisecting the sub-step length within the step that crossed 1.
    """
    t, y = float(t0), 0.0
    trajectory = [(t, y)]
    h = min(max((t_end - t0) * 1e-3, 1e-12 * t_scale), 0.02 * t_scale)
    h_floor = 1e-14 * max(t_scale, 1e-300)
    for _ in range(_MAX_STEPS):
        if t >= t_end:
            return trajectory, None
        h = min(h, t_end - t)
        y_new, err = _dopri_step(rate, t, y, h)
        if not (math.isfinite(y_new) and math.isfinite(err)):
            h *= 0.2
            if h < h_floor:
                raise StepFailure(f"step size underflow at t={t!r} (tol={tol})")
            continue
        scale = tol * (1.0 + max(abs(y), abs(y_new)))
        ratio = abs(err) / scale if scale > 0 else 0.0
        if ratio <= 1.0:
            if y_new >= 1.0:
                lo, hi = 0.0, h
                for _ in range(_EVENT_ITERS):
                    mid = 0.5 * (lo + hi)
                    y_mid, _ = _dopri_step(rate, t, y, mid)
                    if y_mid >= 1.0:
                        hi = mid
                    else:
                        lo = mid
                    if hi - lo <= 1e-15 * max(t + hi, t_scale):
                        break
                t_event = t + 0.5 * (lo + hi)
                trajectory.append((t_event, 1.0))
                return trajectory, t_event
            t += h
            y = max(y_new, y)  # rate >= 0: never step backwards
            trajectory.append((t, y))
            grow = 0.9 * ratio**-0.2 if ratio > 0 else 5.0
            h *= min(5.0, max(0.2, grow))
        else:
            h *= max(0.2, 0.9 * ratio**-0.2)
            if h < h_floor:
                raise StepFailure(f"step size underflow at t={t!r} (tol={tol})")
    raise StepFailure("step budget exhausted before reaching the horizon")


def integrate_damage(
    model: str,
    effects,
    profile: LoadProfile,
    mu_ref: float,
    tol: float = 1e-9,
    horizon: Optional[float] = None,
    tau_s: Optional[float] = None,
):
    """Integrate the damage ODE; returns (trajectory array, outcome).

    With ``tau_s`` given, one forward integration runs to the horizon.
    Without it the profile must be a pure ramp, and the short-term
    strength tau_s = k * T_s is pinned down by an outer root solve on the
    candidate failure time (geometric bracketing, then Brent refinement),
    since the rate itself depends on T_s.
    """
    if not (mu_ref > 0):
        raise DomainError("mu_ref must be positive")
    if horizon is None:
        horizon = DEFAULT_HORIZON_FACTOR * mu_ref

    if tau_s is not None:
        rate = model_rate(model, effects, profile, mu_ref, tau_s)
        trajectory, event = _integrate_with_event(rate, 0.0, horizon, tol, mu_ref)
        outcome = FailureOutcome.at(event) if event is not None else FailureOutcome.non_failing()
        return np.asarray(trajectory), outcome

    k = profile.ramp_rate
    if k is None or k <= 0:
        raise DomainError("general load profiles require an explicit tau_s")

    threshold = getattr(effects, "sigma0", 0.0) if model in ("canadian", "canadian2") else 0.0

    def event_time(candidate: float) -> float:
        rate = model_rate(model, effects, profile, mu_ref, k * candidate)
        start = threshold * candidate
        _, event = _integrate_with_event(rate, start, horizon, tol, mu_ref)
        return event if event is not None else math.inf

    def mismatch(candidate: float) -> float:
        return event_time(candidate) - candidate

    lo = hi = mu_ref / 10.0
    f_hi = mismatch(hi)
    expansions = 0
    while f_hi > 0:
        hi *= 2.0
        expansions += 1
        if hi > horizon or expansions > 80:
            return np.asarray([(0.0, 0.0)]), FailureOutcome.non_failing()
        f_hi = mismatch(hi)
    f_lo = mismatch(lo)
    contractions = 0
    while f_lo < 0:
        lo /= 2.0
        contractions += 1
        if contractions > 80:
            raise ConvergenceFailure("failure-time bracket does not close from below")
        f_lo = mismatch(lo)

    if f_lo == 0:
        t_star = lo
    elif f_hi == 0:
        t_star = hi
    else:
        t_star = brentq(mismatch, lo, hi, xtol=1e-13 * mu_ref, rtol=1e-14)

    rate = model_rate(model, effects, profile, mu_ref, k * t_star)
    trajectory, event = _integrate_with_event(rate, threshold * t_star, horizon, tol, mu_ref)
    if event is None:
        raise ConvergenceFailure("fixed-point solution lost the failure event")
    if threshold > 0:
        trajectory.insert(0, (0.0, 0.0))
    return np.asarray(trajectory), FailureOutcome.at(event)
