# Local statistics at the centre of a large hexagon.
#
# Uniform tilings of the 24-hexagon are drawn by coupled heat-bath chains.
# Near the centre the type-1 lozenges should look like the translation
# invariant process with slope (1/3, 1/3); we compare one and two point
# frequencies with sine-kernel determinants and show Monte-Carlo z scores.
#
# Takes a couple of minutes; lower `samples` for a quick look.

import numpy as np

from lozenge.experiments import ExperimentConfig, local_stats_experiment

samples = 2000
cfg = ExperimentConfig("local-stats", {"hexagon": [24, 24, 24]}, samples=samples, seed=0)
rep = local_stats_experiment(cfg)
print("target", rep.target, "slope", tuple(round(v, 4) for v in rep.slope))

emp, se, th, z = rep.center()
print(f"centre density {emp:.4f} +- {se:.4f}, theory {th:.4f}, z {z:+.2f}")
for dx, dy, e, s, t, zz in rep.nearest_pairs():
    print(f"pair ({int(dx):+d},{int(dy):+d})  {e:.4f} +- {s:.4f}  theory {t:.4f}  z {zz:+.2f}")

# %% with hundreds of pairs a few |z| > 3 are expected by chance alone
z1, z2 = rep.z_scores()
print(f"{len(z2)} pairs, {int((np.abs(z2) > 3).sum())} beyond 3 sigma, max |z| {np.abs(z2).max():.2f}")
