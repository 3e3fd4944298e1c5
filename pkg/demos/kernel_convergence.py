# Finite walker kernels approaching the sine kernel.
#
# Walkers with jump probability beta start at every other site of a long
# interval.  After T steps their correlation kernel, seen from the middle of
# the interval, should look like the translation invariant kernel with the
# matching complex slope.  We print the worst entrywise gap on a small window
# for a few horizons.
#
# Run:  python3 demos/kernel_convergence.py   (about 15 minutes on one core, mostly T = 64)

from lozenge.kernels import D_diagnostic, kernel_convergence_experiment

beta, rho = 0.5, 0.5
L = 8  # initial interval reaches L * T sites on each side


def initial(T):
    return tuple(range(-L * T - 1, L * T + 2, 2))


# %% harmonic sums stay small for the symmetric start, which is what the
# convergence statement needs
for T in (8, 64):
    print(f"T={T:3d}  D(a; T, inf) = {D_diagnostic(initial(T), T):.3e}")

# %% worst entry gap per horizon
rep = kernel_convergence_experiment(beta, rho, initial, [8, 16, 32, 64], offsets=2)
print(f"xi = {rep.xi:.4f}, sine density {rep.diagonal_sine:.4f}")
for T, gap, diag in zip(rep.T, rep.discrepancy, rep.diagonal_finite):
    print(f"T={T:3d}  max gap {gap:.4f}  one point density {diag:.4f}")
print("decreasing:", rep.decreasing())
