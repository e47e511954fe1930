"""Posterior-predictive failure times, replicates, and ECDF bands.

Given posterior rows (here: a near-degenerate ground-truth posterior for
the threshold model), the predictive machinery draws failure times at
chosen loading rates, replicates whole datasets for model checking, and
summarizes the replicate spread as an envelope around the observed
empirical CDF.
"""

import math

import numpy as np

from admfit import dataio
from admfit import likelihood as lk
from admfit import predictive as pr
from admfit.streams import StreamKey

MU_S = 31.0
K_TYPICAL = 205.0

# ten-parameter rows: (mu, sigma) per effect law, canonical order
truth_row = np.array(
    [6.418e-4, 6.4e-5, math.log(2.0), 0.1, 6.418e-4, 6.4e-5, math.log(2.0), 0.1, 0.0, 0.1]
)

print("predictive failure times at three loading rates (10000 draws each):")
for factor in (0.1, 0.2, 0.3):
    rate = factor * K_TYPICAL
    _, summary = pr.predict_failure(
        truth_row[None, :], "canadian", rate, MU_S, n_draws=10000, stream=StreamKey(1)
    )
    print(
        f"  k = {rate:5.1f} psi/s: mean T = {summary.mean_failure_time:6.2f} s, "
        f"mean load = {summary.mean_load:7.0f} psi, "
        f"non-failing draws = {summary.n_nonfailing}"
    )
print("faster loading sustains a higher average load at failure.")

print("\nreplicating a 50-specimen dataset 100 times for model checking...")
observed = dataio.simulate_dataset(
    "canadian",
    lk.make_params("canadian", truth_row),
    n=50,
    k_spec=dataio.LogNormalRates(math.log(K_TYPICAL), 0.3),
    mu_s=MU_S,
    seed=77,
)
replicates, resampled = pr.replicate_datasets(
    truth_row[None, :], "canadian", observed, reps=100, stream=StreamKey(2)
)
print(f"  100 replicates of n={len(observed)}; {resampled} non-failing draws resampled")

grid = np.linspace(10.0, 70.0, 25)
band = pr.ecdf_band(replicates, observed, grid)
print("\nECDF envelope vs observed (o inside band, X outside):")
print(f"  {'t [s]':>6} {'lower':>7} {'obs':>7} {'upper':>7}")
hits = 0
for t, lo, obs, hi in zip(band.grid, band.lower, band.observed, band.upper):
    inside = lo <= obs <= hi
    hits += inside
    print(f"  {t:6.1f} {lo:7.3f} {obs:7.3f} {hi:7.3f}  {'o' if inside else 'X'}")
print(f"\nobserved ECDF inside the envelope at {hits}/{len(grid)} grid points")

central = pr.ecdf_band(replicates, observed, grid, central=0.9)
print("a central 90% band is available too, e.g. at t = 30 s:")
i = int(np.argmin(np.abs(grid - 30.0)))
print(
    f"  envelope [{band.lower[i]:.3f}, {band.upper[i]:.3f}]  "
    f"central [{central.lower[i]:.3f}, {central.upper[i]:.3f}]"
)
