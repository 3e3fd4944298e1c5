import math

import numpy as np
import pytest

from lozenge.errors import Infeasible
from lozenge.experiments import (
    ExperimentConfig,
    height_samples,
    hexagon_globallaw_experiment,
    lattice_limit_shape,
    local_stats_experiment,
    run_chains,
)
from lozenge.lattice import hexagon_domain


def test_config_round_trip(tmp_path):
    cfg = ExperimentConfig("x", {"hexagon": [2, 3, 4]}, samples=7, sweeps=None, seed=3,
                           tolerances={"z": 3.0}, outputs={"table": "a.tsv"}, params={"radius": 1, "eps": 0.1 + 0.2})
    cfg.save(tmp_path / "c.json")
    assert ExperimentConfig.load(tmp_path / "c.json") == cfg


def test_config_rejects_unknown_fields():
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"name": "x", "colour": 1})
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"name": "x", "version": 2})


def _rigid(values):
    verts = [[x, y] for x in range(7) for y in range(7)]
    bd = [[x, y, values(x, y)] for x, y in verts if x in (0, 6) or y in (0, 6)]
    return {"vertices": verts, "boundary": bd}


@pytest.mark.parametrize("values,expected", [(lambda x, y: 0, 0.0), (lambda x, y: x, 1.0)])
def test_rigid_domain_gives_exact_frequencies(values, expected):
    cfg = ExperimentConfig("rigid", _rigid(values), samples=40, sweeps=3,
                           params={"target": [3, 3], "allow_frozen": True})
    r = local_stats_experiment(cfg)
    assert (r.one_point[:, 0] == expected).all()
    assert (r.pairs[:, 2] == expected).all()
    assert np.isnan(r.one_point[:, 2]).all()


def test_frozen_target_is_infeasible():
    cfg = ExperimentConfig("rigid", _rigid(lambda x, y: 0), samples=4, sweeps=1, params={"target": [3, 3]})
    with pytest.raises(Infeasible):
        local_stats_experiment(cfg)


def test_local_stats_small_hexagon():
    cfg = ExperimentConfig("ls", {"hexagon": [6, 6, 6]}, samples=300, seed=1)
    r = local_stats_experiment(cfg)
    assert r.target == (6, 6)
    assert abs(r.slope.s - 1 / 3) < 1e-6
    assert ((0 <= r.one_point[:, 0]) & (r.one_point[:, 0] <= 1)).all()
    assert ((-1e-8 <= r.pairs[:, 4]) & (r.pairs[:, 4] <= 1 + 1e-8)).all()
    emp, se, th, z = r.center()
    assert th == pytest.approx(1 / 3, abs=1e-9)
    assert len(r.nearest_pairs()) == 6
    assert r.coalesced == 1.0


def test_runs_are_reproducible():
    d, b = hexagon_domain(4, 4, 4)
    a, _ = run_chains(d, b, 600, 30, seed=5)
    c, _ = run_chains(d, b, 600, 30, seed=5, workers=2)
    assert np.array_equal(a, c)
    assert all(H.is_valid() and H.boundary() == b for H in height_samples(a[:, :5], d))


def test_lattice_limit_shape_keeps_boundary():
    d, b = hexagon_domain(4, 4, 4)
    P = lattice_limit_shape(d, b)
    assert np.allclose(P.values[d.boundary_mask], b.array[d.boundary_mask])


def test_global_law_improves_with_size():
    r = hexagon_globallaw_experiment(1, 1, 1, samples=40, sizes=(8, 16), rng=0)
    assert r.median(16) < r.median(8)
    assert all(0 <= r.corner[N] <= 1 for N in r.sizes)
    for N in r.sizes:
        for rad, emp, bound in r.tail[N]:
            assert bound == pytest.approx(2 * math.exp(-rad * rad / 32))


def test_global_law_needs_compatible_mesh():
    with pytest.raises(ValueError):
        hexagon_globallaw_experiment(1, 1, 1, samples=2, sizes=(7,), mesh=1 / 16)
