# Weighted tilings of the N x N torus.
#
# The weighted count is a signed combination of four trigonometric products.
# For tiny tori it can be checked against brute force; for larger ones the
# normalised log count settles on an explicit integral, and at a slope's
# matching weights the Legendre transform gives back the surface tension.

import numpy as np

from lozenge.lattice import Slope
from lozenge.torus import TorusWeights, Z_bruteforce, Z_exact, frakZ, legendre_check, torus_convergence

w = TorusWeights(1.0, 2.0, 0.7)
for N in (1, 2, 3):
    print(f"N={N}  exact {Z_exact(N, w):.6f}  brute force {Z_bruteforce(N, w):.6f}")

# %% free energy per site at unit weights
print("limit", frakZ(TorusWeights(1, 1, 1)))
for N, f, err in torus_convergence([8, 16, 32, 64, 128]):
    print(f"N={N:4d}  log Z / N^2 = {f:.6f}  error {err:.2e}")

# %% Legendre duality on a slope grid
grid = np.linspace(0.1, 0.45, 5)
res = max(legendre_check(Slope(s, t)).residual for s in grid for t in grid)
print("largest Legendre residual on the grid:", res)
