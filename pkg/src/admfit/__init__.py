"""Non-dimensionalized accumulated-damage models with Bayesian fitting.

Modules by concern:

* :mod:`admfit.dimensions` -- exact-rational Buckingham-pi machinery;
* :mod:`admfit.damage` -- closed-form and semi-analytic failure-time
  solvers for the exponential and threshold damage models;
* :mod:`admfit.ode` -- the adaptive Runge-Kutta oracle for the same
  dynamics;
* :mod:`admfit.likelihood` -- hierarchical effect laws, priors, and the
  Monte-Carlo interval likelihood;
* :mod:`admfit.sampler` -- pseudo-marginal Metropolis-Hastings within
  parallel tempering, thermodynamic-integration evidence, Bayes factors;
* :mod:`admfit.predictive` -- posterior-predictive draws, dataset
  replication, ECDF bands;
* :mod:`admfit.dataio` / :mod:`admfit.cli` -- files, configs, manifests,
  and the command-line surface.
"""

__version__ = "0.1.0"
