"""Failure-time solvers and their cross-checking ODE oracle.

Both damage models are non-dimensionalized: damage alpha runs from 0 to
1, stress enters as the ratio tau(t)/tau_s, and a population reference
time mu_s carries the units.  The exponential model has a closed-form
ramp failure time; the threshold model needs a root solve of a
log-domain balance equation.  An independent adaptive Runge-Kutta
integration of the same dynamics validates both.
"""

from admfit import damage as dm
from admfit import ode

MU_S = 31.0  # reference mean failure time, seconds
K = 205.0  # ramp loading rate, psi/s

print("== exponential model ==")
effects = dm.USEffects(A=0.3, B=2.5)
closed = dm.us_failure_time(effects, MU_S)
print(f"closed-form failure time: {closed.time:.6f} s")
print(f"initial damage rate: {dm.us_initial_rate(effects, MU_S):.6f} /s")
print(f"final damage rate:   {dm.us_final_rate(effects, closed.time):.6f} /s")

trajectory, oracle = ode.integrate_damage("us", effects, dm.LoadProfile.ramp(K), MU_S, tol=1e-10)
print(f"ODE oracle failure time:  {oracle.time:.6f} s "
      f"(relative gap {abs(oracle.time - closed.time) / closed.time:.2e})")

print("\ndamage profile alpha(t) against the analytic ramp law:")
for frac in (0.25, 0.5, 0.75, 0.95):
    t = frac * closed.time
    print(f"  t = {t:6.2f} s  alpha = {dm.us_damage_ramp(t, closed.time, effects.B):.5f}")

print("\n== threshold model ==")
can = dm.CanadianEffects(a=0.005, b=1.8, c=0.006, n=1.2, sigma0=0.45)
ctx = dm.RampContext(k=K, mu_ref=MU_S)
semi = dm.canadian_failure_time(can, ctx)
_, can_oracle = ode.integrate_damage("canadian", can, dm.LoadProfile.ramp(K), MU_S, tol=1e-10)
print(f"semi-analytic failure time: {semi.time:.6f} s")
print(f"ODE oracle failure time:    {can_oracle.time:.6f} s "
      f"(relative gap {abs(semi.time - can_oracle.time) / semi.time:.2e})")
print(f"no damage accumulates before sigma0 * T = {can.sigma0 * semi.time:.2f} s")

print("\nloading-rate dependence (duration-of-load effect):")
for rate in (0.5 * K, K, 2.0 * K):
    t_fail = dm.canadian_failure_time(can, dm.RampContext(rate, MU_S)).time
    print(f"  k = {rate:6.1f} psi/s -> T = {t_fail:6.2f} s, load at failure {rate * t_fail:7.0f} psi")

print("\n== ratio variant (coefficients outside the powers) ==")
variant = dm.CanadianEffects(a=2.2, b=1.5, c=1.1, n=1.9, sigma0=0.5)
for rate in (0.1, 0.2, 0.3):
    t_fail = dm.canadian2_failure_time(variant, dm.RampContext(rate, MU_S)).time
    print(f"  k = {rate:4.1f} psi/s -> T = {t_fail:.6f} s (independent of k)")

print("\n== deflection-controlled ramp ==")
geometry = dm.Geometry(span=73.5, breadth=1.5, depth=3.5)
for modulus in (1.2e6, 1.5e6, 1.8e6):
    k_force = dm.deflection_loading_rate(modulus, 0.045, geometry)
    print(f"  E = {modulus:.1e} psi -> force rate {k_force:.2f} lb/s")

print("\n== general load profile with an explicit short-term strength ==")
profile = dm.LoadProfile([(0.0, 0.0), (5.0, 4000.0), (40.0, 4000.0)])
trajectory, outcome = ode.integrate_damage(
    "us", dm.USEffects(A=0.0, B=3.0), profile, MU_S, tau_s=6000.0, tol=1e-10
)
status = f"fails at {outcome.time:.2f} s" if outcome.failed else "does not fail"
print(f"ramp-then-hold at 4000 psi with tau_s = 6000 psi: {status}")
print(f"trajectory has {len(trajectory)} points; final damage {trajectory[-1][1]:.4f}")
