# The hexagon limit shape and its arctic curve.
#
# Solve the entropy maximisation on the unit regular hexagon, mark the
# triangles whose slope is away from the boundary of the slope triangle, and
# compare that liquid set with the inscribed ellipse.  Then sample tilings of
# two sizes and watch the normalised heights close in on the limit.
#
# Writes hexagon_limit.svg in the working directory.

import numpy as np

from lozenge.experiments import hexagon_globallaw_experiment
from lozenge.render import render_svg
from lozenge.variational import facet_map, hexagon_boundary, hexagon_ellipse, maximize_entropy, Region

for h in (1 / 16, 1 / 32, 1 / 64):
    P = maximize_entropy(Region.hexagon(1, 1, 1), hexagon_boundary(1, 1, 1), h)
    cen = P.mesh.centroids()
    ell = hexagon_ellipse(1, 1, 1)
    sym = np.sum(facet_map(P, 1e-3) != ell.contains(cen[:, 0], cen[:, 1])) * P.mesh.triangle_area / ell.area
    print(f"mesh 1/{round(1 / h)}: newton steps {P.stats.iterations}, symmetric difference {sym:.3f}")
render_svg(P, "hexagon_limit.svg")

# %% sampled heights against the limit
rep = hexagon_globallaw_experiment(1, 1, 1, samples=50, sizes=(8, 24), rng=0)
for N, med, mean, worst, corner in rep.summary():
    print(f"N={N:3d}  median max deviation {med:.4f}  worst {worst:.4f}  corner agreement {corner:.2f}")
for r, emp, bound in rep.tail[24][:5]:
    print(f"r={r}  P[|H - mean| >= r] = {emp:.3f}  bound {bound:.3f}")
