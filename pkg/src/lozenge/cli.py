"""Command line front end.

Tables go to standard output as tab separated text; with the global
``--out DIR`` they are also written to ``DIR/<command>.tsv``.  Errors from the
library exit with the code attached to their type (3 invariant violation,
4 infeasible input, 5 non-convergence, 6 enumeration cap); malformed
arguments exit with 2.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import LozengeError
from .experiments import ExperimentConfig, hexagon_globallaw_experiment, lattice_limit_shape, local_stats_experiment
from .kernels import ComplexSlope, FiniteKernel, SineKernel, correlation_probability, kernel_matrix
from .lattice import Slope, height_from_tiling, hexagon_domain, tiling_from_height
from .linearity import DyadicFunction, linearity_scan, semilinear_to_linear_check
from .perturb import coupling_experiment
from .render import render_svg
from .sampling import RngState, sample_uniform
from .torus import (
    TorusWeights,
    Z_bruteforce,
    frakZ,
    log_Z_exact,
    tile_densities,
)
from .variational import (
    Region,
    entropy,
    euler_lagrange_residual,
    hexagon_boundary,
    maximize_entropy,
    sigma,
)
from .walks import WalkParams, sample_walk_ensemble


def _ints(text: str) -> list[int]:
    return [int(v) for v in text.replace(";", ",").split(",") if v.strip()]


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _points(text: str) -> list[tuple[int, int]]:
    """``"x,y;x,y;..."``"""
    out = []
    for part in text.split(";"):
        if part.strip():
            x, y = (int(v) for v in part.split(","))
            out.append((x, y))
    return out


def _emit(args, name: str, header, rows) -> None:
    path = Path(args.out_dir) / f"{name}.tsv" if args.out_dir else None
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
    sys.stdout.write(io.write_table(rows, header, path))


def _domain(args):
    if getattr(args, "domain", None):
        return io.load_domain(args.domain)
    if getattr(args, "hexagon", None):
        A, B, C = _ints(args.hexagon)
        return hexagon_domain(A, B, C)
    raise SystemExit("a domain is required: --domain FILE or --hexagon A,B,C")


def _config(args, name: str) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig(name)
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


# --- commands -----------------------------------------------------------------

def cmd_sample(args):
    domain, boundary = _domain(args)
    seed = 0 if args.seed is None else args.seed
    hs = sample_uniform(domain, boundary, sweeps=args.sweeps, rng=RngState(seed), batch=args.samples,
                        exact=args.exact)
    tilings = [tiling_from_height(h) for h in hs]
    if args.out_file:
        io.save_tilings(tilings, args.out_file)
    _emit(args, "sample", ["sample", "n1", "n2", "n3"], [(k, *t.counts()) for k, t in enumerate(tilings)])


def cmd_render(args):
    domain, boundary = _domain(args)
    tilings = io.load_tilings(args.tilings, domain)
    tiling = tilings[args.index]
    obj = tiling if args.mode == "tiling" else height_from_tiling(tiling)
    render_svg(obj, args.svg)
    print(args.svg)


def cmd_limit_shape(args):
    if args.hexagon:
        a, b, c = _floats(args.hexagon)
        profile = maximize_entropy(Region.hexagon(a, b, c), hexagon_boundary(a, b, c), mesh_size=args.mesh,
                                   tol=args.tol)
    else:
        domain, boundary = io.load_domain(args.domain)
        profile = lattice_limit_shape(domain, boundary, tol=args.tol)
    if args.out_file:
        io.save_profile_table(profile, args.out_file)
    if args.svg:
        render_svg(profile, args.svg)
    st = profile.stats
    try:
        res = euler_lagrange_residual(profile)
    except ValueError:
        res = math.nan
    _emit(args, "limit-shape", ["vertices", "entropy", "newton_steps", "residual", "euler_lagrange"],
          [(int(profile.mesh.mask.sum()), entropy(profile), st.iterations, st.residual, res)])


def cmd_kernel(args):
    pts = _points(args.points)
    if args.kind == "sine":
        re, im = _floats(args.xi)
        K = SineKernel(ComplexSlope(complex(re, im)))
    else:
        K = FiniteKernel(args.beta, tuple(_ints(args.initial)))
    M = kernel_matrix(K, pts)
    rows = [(f"{p[0]},{p[1]}", *map(float, M[i])) for i, p in enumerate(pts)]
    _emit(args, "kernel", ["point", *[f"{q[0]},{q[1]}" for q in pts]], rows)
    print(f"det\t{correlation_probability(K, pts)!r}")


def cmd_torus(args):
    w = TorusWeights(*_floats(args.weights))
    lz = log_Z_exact(args.n, w)
    d = tile_densities(w)
    limit = frakZ(w)
    u = 1 - d.s - d.t
    legendre = limit - d.s * math.log(w.a) - d.t * math.log(w.b) - u * math.log(w.c)
    row = [args.n, math.exp(lz) if lz < 700 else math.inf, lz / args.n**2, limit, d.s, d.t,
           abs(float(sigma(d.s, d.t)) - legendre)]
    header = ["N", "Z", "logZ_per_site", "frakZ", "p_a", "p_b", "legendre_residual"]
    if args.brute:
        header.append("Z_brute")
        row.append(Z_bruteforce(args.n, w))
    _emit(args, "torus", header, [row])


def cmd_local_stats(args):
    cfg = _config(args, "local-stats")
    if args.hexagon:
        sides = _ints(args.hexagon)
        cfg.domain = {"hexagon": sides * 3 if len(sides) == 1 else sides}
    if not cfg.domain:
        cfg.domain = {"hexagon": [24, 24, 24]}
    if args.samples is not None:
        cfg.samples = args.samples
    if args.sweeps is not None:
        cfg.sweeps = args.sweeps
    r = local_stats_experiment(cfg)
    emp, se, th, z = r.center()
    rows = [("one", 0, 0, emp, se, th, z)]
    rows += [("pair", int(dx), int(dy), e, s, t, zz) for dx, dy, e, s, t, zz in r.nearest_pairs()]
    _emit(args, "local-stats", ["pattern", "dx", "dy", "empirical", "se", "sine", "z"], rows)


def cmd_coupling(args):
    N = args.size
    domain, boundary = hexagon_domain(N, N, N)
    centred = domain.translate(-N, -N)
    bd = boundary.translate(-N, -N)

    def source(gen):
        return sample_uniform(centred, bd, sweeps=args.sweeps, rng=gen)

    seed = 0 if args.seed is None else args.seed
    rep = coupling_experiment(source, Slope(1 / 3, 1 / 3), args.delta, args.ell, args.samples, RngState(seed),
                              window=args.window)
    _emit(args, "coupling", ["beta", "ell", "window", "samples", "ordered_pqr", "ordered_pr", "agree_pqr",
                             "agree_pr", "initial_ordered"],
          [(rep.beta, rep.ell, rep.window, rep.samples, rep.ordered_pqr, rep.ordered_pr, rep.agree_pqr,
            rep.agree_pr, rep.initial_ordered)])


def cmd_linearity(args):
    seed = 0 if args.seed is None else args.seed
    gen = np.random.default_rng(seed)
    N = 2**args.n
    rows = []
    for k in range(args.functions):
        x, y = np.meshgrid(np.arange(N + 1), np.arange(N + 1), indexing="ij")
        centres = gen.uniform(0, N, (args.cones, 2))
        heights = gen.uniform(0, N / 4, args.cones)
        F = np.min(heights[:, None, None] + np.hypot(x[None] - centres[:, 0, None, None],
                                                     y[None] - centres[:, 1, None, None]), axis=0)
        r = linearity_scan(F, args.v, args.n)
        diag = DyadicFunction(np.diagonal(F).copy(), 0.0, N * math.sqrt(2))
        chk = semilinear_to_linear_check(diag, args.n - 1)
        rows.append((k, r.m, r.n_faces, r.n_good, r.guarantee_met, chk.deviation, chk.bound))
    _emit(args, "linearity", ["function", "m", "faces", "good", "guarantee_met", "diag_deviation", "diag_bound"],
          rows)


def cmd_hexagon_globallaw(args):
    cfg = _config(args, "hexagon-globallaw")
    sides = _floats(args.sides) if args.sides else cfg.params.get("sides", [1, 1, 1])
    sizes = _ints(args.sizes) if args.sizes else cfg.params.get("sizes", [8, 24])
    samples = args.samples if args.samples is not None else cfg.samples
    sweeps = args.sweeps if args.sweeps is not None else cfg.sweeps
    r = hexagon_globallaw_experiment(*sides, samples=samples, sweeps=sweeps, rng=cfg.seed, sizes=sizes)
    _emit(args, "hexagon-globallaw", ["N", "median_max_dev", "mean_max_dev", "max_dev", "corner_agreement"],
          r.summary())


def cmd_walk(args):
    seed = 0 if args.seed is None else args.seed
    ens = sample_walk_ensemble(WalkParams(args.beta, tuple(_ints(args.initial)), args.horizon), RngState(seed))
    _emit(args, "walk", ["time", *[f"q{k}" for k in range(ens.n_paths)]],
          [(s, *ens.at(s)) for s in range(ens.length + 1)])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lozenge", description="Random lozenge tilings and their limits")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None, help="experiment config (JSON)")
    p.add_argument("--out", dest="out_dir", default=None, help="directory for result tables")
    sub = p.add_subparsers(dest="command", required=True)

    def domain_opts(q):
        q.add_argument("--domain", help="domain file (JSON)")
        q.add_argument("--hexagon", help="A,B,C")

    q = sub.add_parser("sample", help="sample uniform tilings")
    domain_opts(q)
    q.add_argument("--samples", type=int, default=1)
    q.add_argument("--sweeps", type=int, default=None)
    q.add_argument("--exact", action="store_true", help="coupling from the past")
    q.add_argument("--out", dest="out_file", help="newline-delimited tilings")
    q.set_defaults(func=cmd_sample)

    q = sub.add_parser("render", help="draw a stored tiling as SVG")
    domain_opts(q)
    q.add_argument("--tilings", required=True)
    q.add_argument("--index", type=int, default=0)
    q.add_argument("--mode", choices=["tiling", "heights"], default="tiling")
    q.add_argument("--svg", required=True)
    q.set_defaults(func=cmd_render)

    q = sub.add_parser("limit-shape", help="entropy maximiser")
    q.add_argument("--domain", help="lattice domain file; solved on its own lattice")
    q.add_argument("--hexagon", help="real sides a,b,c")
    q.add_argument("--mesh", type=float, default=1 / 32)
    q.add_argument("--tol", type=float, default=1e-9)
    q.add_argument("--out", dest="out_file", help="mesh-vertex table")
    q.add_argument("--svg", default=None)
    q.set_defaults(func=cmd_limit_shape)

    q = sub.add_parser("kernel", help="kernel matrices and correlation determinants")
    q.add_argument("kind", choices=["sine", "finite"])
    q.add_argument("--xi", default="0.5,0.8660254037844386", help="RE,IM")
    q.add_argument("--beta", type=float, default=0.5)
    q.add_argument("--initial", default="0")
    q.add_argument("--points", required=True, help="x,y;x,y;...")
    q.set_defaults(func=cmd_kernel)

    q = sub.add_parser("torus", help="torus partition function and its limit")
    q.add_argument("--n", type=int, required=True)
    q.add_argument("--weights", default="1,1,1")
    q.add_argument("--brute", action="store_true")
    q.set_defaults(func=cmd_torus)

    q = sub.add_parser("local-stats", help="local statistics against the sine process")
    q.add_argument("--hexagon", help="A,B,C or N for the regular hexagon")
    q.add_argument("--samples", type=int, default=None)
    q.add_argument("--sweeps", type=int, default=None)
    q.set_defaults(func=cmd_local_stats)

    q = sub.add_parser("coupling", help="boundary perturbation coupling frequencies")
    q.add_argument("--size", type=int, default=12)
    q.add_argument("--ell", type=int, default=2)
    q.add_argument("--delta", type=float, default=0.1)
    q.add_argument("--samples", type=int, default=20)
    q.add_argument("--sweeps", type=int, default=None)
    q.add_argument("--window", type=int, default=None)
    q.set_defaults(func=cmd_coupling)

    q = sub.add_parser("linearity", help="dyadic linearity scan of random Lipschitz functions")
    q.add_argument("--n", type=int, default=8)
    q.add_argument("--v", type=int, default=3)
    q.add_argument("--functions", type=int, default=5)
    q.add_argument("--cones", type=int, default=30)
    q.set_defaults(func=cmd_linearity)

    q = sub.add_parser("hexagon-globallaw", help="sampled heights against the limit shape")
    q.add_argument("--sides", default=None, help="A,B,C")
    q.add_argument("--sizes", default=None, help="N1,N2,...")
    q.add_argument("--samples", type=int, default=None)
    q.add_argument("--sweeps", type=int, default=None)
    q.set_defaults(func=cmd_hexagon_globallaw)

    q = sub.add_parser("walk", help="sample non-intersecting Bernoulli walks")
    q.add_argument("--beta", type=float, required=True)
    q.add_argument("--initial", required=True)
    q.add_argument("--horizon", type=int, required=True)
    q.set_defaults(func=cmd_walk)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except LozengeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
