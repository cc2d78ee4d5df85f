from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetcp.engine import Params, Trajectory, init_config, run_direct
from hetcp.errors import ValidationError
from hetcp.experiments import (
    BlockSpec,
    block_goodness,
    block_map,
    boundary_profile,
    coexistence_check,
    critical_alpha,
    densities,
    parse_grid,
    tile_parity,
)
from hetcp.habitat import HabitatSpec, host_map

SPEC = HabitatSpec(2, 4, 1, 16)


def test_densities_examples():
    assert densities(init_config(SPEC, fill=0)) == (1, 0, 0, 0)
    assert densities(init_config(SPEC, fill=3)) == (0, 0, 0, 1)
    assert densities(init_config(SPEC, fill=1))[1] == 0.5


def test_densities_exact_from_counts():
    cfg = init_config(SPEC, (0.1, 0.2, 0.3), seed=2)
    n = cfg.counts()
    assert [Fraction(d).limit_denominator(256) for d in densities(cfg)] == [Fraction(int(c), 256) for c in n]
    assert sum(densities(cfg)) == 1


def test_parse_grid():
    assert parse_grid("1:2:0.25") == [1.0, 1.25, 1.5, 1.75, 2.0]
    assert parse_grid("1, 3,2.5") == [1.0, 3.0, 2.5]
    with pytest.raises(ValidationError):
        parse_grid("1:2")


def test_critical_alpha_validation():
    with pytest.raises(ValidationError):
        critical_alpha(1.0, SPEC, [2, 1])
    with pytest.raises(ValidationError):
        critical_alpha(1.0, SPEC, [])
    with pytest.raises(ValidationError):
        critical_alpha(1.0, SPEC, [1, 2], replicates=0)


def test_grid_below_beta_not_found():
    spec = HabitatSpec(2, 5, 1, 40)
    res = critical_alpha(2.0, spec, [0.5, 1.0, 1.5, 2.0], t_end=20, replicates=2, seed=3)
    assert not res.found
    assert res.alpha_hat is None
    assert all(0 <= v <= 1 for v in res.mean_spec + res.mean_gen)
    assert [r["alpha_hat_flag"] for r in res.rows()] == [0, 0, 0, 0]


def test_critical_alpha_decision_rule_and_workers():
    spec = HabitatSpec(2, 5, 1, 40)
    grid = [1.0, 3.0, 5.0]
    res = critical_alpha(1.0, spec, grid, t_end=10, replicates=2, seed=1)
    winners = [a for a, s, g in zip(res.alpha_grid, res.mean_spec, res.mean_gen) if s > g]
    assert res.alpha_hat == (winners[0] if winners else None)
    par = critical_alpha(1.0, spec, grid, t_end=10, replicates=2, seed=1, workers=2)
    assert (par.alpha_hat, par.mean_spec, par.mean_gen) == (res.alpha_hat, res.mean_spec, res.mean_gen)
    early = critical_alpha(1.0, spec, grid, t_end=10, replicates=2, seed=1, stop_at_first=True)
    assert early.alpha_hat == res.alpha_hat
    assert early.mean_spec == res.mean_spec[:len(early.mean_spec)]


def _traj(rows):
    counts = np.array(rows, dtype=np.int64)
    return Trajectory(SPEC, np.arange(len(rows), dtype=float), counts)


def test_coexistence_examples():
    steady = _traj([[52, 51, 51, 102]] * 5)
    assert coexistence_check(steady, {1, 3}, 0.05, 1.0)
    dying = _traj([[52, 51, 51, 102]] * 4 + [[256, 0, 0, 0]])
    assert not coexistence_check(dying, {1, 3}, 0.05, 1.0)
    assert not coexistence_check(dying, {2}, 0.05, 0.0)


def test_coexistence_validation():
    t = _traj([[256, 0, 0, 0]] * 3)
    with pytest.raises(ValidationError):
        coexistence_check(t, {1}, 1.5, 0.0)
    with pytest.raises(ValidationError):
        coexistence_check(t, {1}, 0.1, 5.0)
    with pytest.raises(ValidationError):
        coexistence_check(t, {0}, 0.1, 0.0)


BIG = HabitatSpec(2, 8, 1, 32)


def _with_box(value, z=(0, 0), bs=BlockSpec(8)):
    cfg = init_config(BIG, fill=0)
    h = bs.half
    g = cfg.grid
    for i in range(-h, h + 1):
        for j in range(-h, h + 1):
            g[(16 * z[0] + i) % 32, (16 * z[1] + j) % 32] = value
    return cfg


def test_blockspec_defaults():
    bs = BlockSpec(25)
    assert bs.side == 2 and bs.half == 6
    assert all(-6 <= o and o + 1 <= 6 for o in bs.subsquare_offsets())
    with pytest.raises(ValidationError):
        BlockSpec(8, n=1)
    with pytest.raises(ValidationError):
        BlockSpec(8, side=0)
    with pytest.raises(ValidationError):
        BlockSpec(4, side=5)


def test_block_examples():
    bs = BlockSpec(8)
    full = _with_box(1)
    assert block_goodness(full, (0, 0), bs, "s")
    assert not block_goodness(full, (0, 0), bs, "g")
    full.grid[0, 1] = 3
    assert not block_goodness(full, (0, 0), bs, "s")
    empty = init_config(BIG, fill=0)
    assert not block_goodness(empty, (0, 0), bs, "s")
    assert not block_goodness(empty, (0, 0), bs, "g")
    assert block_goodness(_with_box(3, (1, 0)), (1, 0), bs, "g")


def test_block_validation():
    cfg = init_config(BIG, fill=0)
    with pytest.raises(ValidationError):
        block_goodness(cfg, (2, 0), BlockSpec(8), "s")
    with pytest.raises(ValidationError):
        block_goodness(cfg, (0, 0), BlockSpec(8), "x")
    with pytest.raises(ValidationError):
        block_goodness(cfg, (0, 0), BlockSpec(4), "s")


def test_block_map_and_parity():
    cfg = _with_box(1)
    m = block_map(cfg, BlockSpec(8))
    assert m.tolist() == [["S", "."], [".", "."]]
    assert tile_parity((0, 0)) == "even" and tile_parity((1, 0)) == "odd"


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.floats(0, 0.5), st.floats(0, 0.5))
def test_goodness_kinds_exclusive(seed, p1, p3):
    cfg = init_config(BIG, (p1, 0, p3), seed=seed)
    bs = BlockSpec(8, side=1)
    for z in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        assert not (block_goodness(cfg, z, bs, "s") and block_goodness(cfg, z, bs, "g"))


def test_boundary_profile():
    cfg = init_config(BIG, fill=1)
    prof = boundary_profile(cfg)
    assert sorted(prof) == list(range(8))
    for rho in prof.values():
        assert sum(rho) == pytest.approx(1)
        assert rho[1] == pytest.approx(0.5)
    # the tile edge runs between rows 7 and 8
    hm = host_map(BIG).reshape(32, 32)
    assert hm[7, 7] != hm[7, 8] and hm[7, 7] == hm[8, 8]


def test_specialists_without_generalists_persist():
    spec = HabitatSpec(2, 10, 1, 40)
    cfg = init_config(spec, (0.25, 0.25, 0))
    traj = run_direct(cfg, Params(3, 0), 20.0, seed=1)
    assert coexistence_check(traj, {1, 2}, 0.02, 10.0)
