"""
Loop kernels and where they stop being covariances
==================================================

A fractional Brownian loop on a circle of length T has increment variance
(geodesic distance)^{2H}. Pinning the field at the origin and polarizing
gives a covariance matrix. It is positive semidefinite for H <= 1/2 and
turns indefinite above.
"""

import numpy as np

from fbmloops import Grid, KernelSpec, build_cov_matrix, check_positive_definite, lnd_constant

grid = Grid.circle(1.0, 64)
for H in (0.1, 0.3, 0.5, 0.6, 0.7):
    chk = check_positive_definite(build_cov_matrix(KernelSpec.circle(1.0, H, 1), grid))
    print(f"H={H:.1f}  lambda_min/lambda_max = {chk.min_eigenvalue / chk.max_eigenvalue:+.3e}"
          f"  psd={chk.pd}")

# the local nondeterminism constant: the smallest eigenvalue of the
# correlation matrix of consecutive increments
times = np.linspace(0, 1, 8, endpoint=False)
print("lnd constant, H=0.4, 8 equispaced times:",
      lnd_constant(KernelSpec.circle(1.0, 0.4, 1), times))
