"""Empirical convergence rate and spectral concentration.

The first part measures how the aligned embedding error shrinks with n
for in-sample and out-of-sample vertices and fits a log-log slope. The
second compares ||A - K|| with the bound 2 sqrt(n rho log(n / eta)).
"""

import numpy as np

from lpgoos import (KernelSpec, LatentDistribution, check_concentration, error_curves,
                    rate_exponent)

dist = LatentDistribution.dirichlet([1.0, 1.0, 1.0], drop_last=True)
curves = error_curves(KernelSpec("dot-product"), dist, 2, [250, 500, 1000, 2000], 5,
                      {"kind": "constant", "constant": 1.0}, master_seed=0, oracle="latent")
for curve in curves:
    slope, se = rate_exponent(curve)
    print("%-14s errors %s  slope %.3f +/- %.3f"
          % (curve.context, np.round(curve.mean_error, 4).tolist(), slope, se))

box = LatentDistribution.uniform_box([0, 0], [1, 1])
rep = check_concentration(KernelSpec("gaussian"), box, 500, 1.0, 0.05, list(range(20)))
print("bound %.1f, largest observed %.1f, violations %.2f"
      % (rep.bound, rep.observed.max(), rep.violation_rate))
