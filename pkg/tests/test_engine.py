import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from hetcp import kernels
from hetcp.engine import (
    Configuration,
    EventLog,
    Params,
    evolve_by_events,
    generate_event_log,
    init_config,
    run_direct,
    run_final,
)
from hetcp.engine.direct import SCHEMES
from hetcp.errors import ValidationError
from hetcp.habitat import HabitatSpec, host_map, neighbor_table, site_index
from hetcp.seeding import rng

SPEC8 = HabitatSpec(2, 1, 1, 8)
BACKENDS = kernels.AVAILABLE


# ---------------------------------------------------------------- params / init

def test_params_validation():
    assert Params(np.int64(3), 2).alpha == 3.0
    for bad in ((-1, 1), (1, float("inf")), (float("nan"), 1), ("2", 1), (True, 1)):
        with pytest.raises(ValidationError):
            Params(*bad)


def test_init_all_zero_densities_is_empty():
    c = init_config(SPEC8, (0, 0, 0), seed=1)
    assert c.counts().tolist() == [64, 0, 0, 0]


def test_init_full_generalists():
    c = init_config(SPEC8, (0, 0, 1), seed=1)
    assert c.counts().tolist() == [0, 0, 0, 64]


def test_init_full_specialist_one_fills_its_half():
    c = init_config(SPEC8, (1, 0, 0), seed=1)
    assert np.array_equal(c.states == 1, host_map(SPEC8) == 1)
    assert c.counts().tolist() == [32, 32, 0, 0]


def test_init_fill_and_grid():
    c = init_config(SPEC8, fill=2)
    assert np.array_equal(c.states == 2, host_map(SPEC8) == 2)
    g = np.zeros((8, 8), dtype=np.uint8)
    g[0, 0] = 1
    assert init_config(SPEC8, grid=g).counts()[1] == 1
    g[0, 0] = 2  # site (0, 0) is host 1
    with pytest.raises(ValidationError, match="unsuitable"):
        init_config(SPEC8, grid=g)


@pytest.mark.parametrize("dens", [(0.5, 0.6, 0), (-0.1, 0, 0), (0.2, 0.2), (1.2, 0, 0)])
def test_init_bad_densities(dens):
    with pytest.raises(ValidationError):
        init_config(SPEC8, dens)


def test_init_needs_one_policy():
    with pytest.raises(ValidationError):
        init_config(SPEC8)
    with pytest.raises(ValidationError):
        init_config(SPEC8, (0, 0, 0), fill=1)


def test_init_deterministic():
    spec = HabitatSpec(2, 2, 1, 16)
    assert init_config(spec, (0.3, 0.2, 0.1), seed=5) == init_config(spec, (0.3, 0.2, 0.1), seed=5)
    assert init_config(spec, (0.3, 0.2, 0.1), seed=5) != init_config(spec, (0.3, 0.2, 0.1), seed=6)


def test_configuration_rejects_bad_states():
    with pytest.raises(ValidationError):
        Configuration(SPEC8, np.full(64, 4))
    with pytest.raises(ValidationError):
        Configuration(SPEC8, np.zeros(10))


# ---------------------------------------------------------------- direct runs

def test_empty_state_is_absorbing():
    traj = run_direct(init_config(SPEC8, fill=0), Params(3, 2), 5.0, seed=1)
    assert np.all(traj.counts[:, 0] == 64)
    assert traj.n_events == 0


def test_negative_horizon_rejected():
    with pytest.raises(ValidationError):
        run_direct(init_config(SPEC8, fill=0), Params(1, 1), -1.0)


def test_sampling_plan():
    traj = run_direct(init_config(SPEC8, (0.2, 0.2, 0.2), seed=0), Params(2, 1), 2.5,
                      seed=0, sample_dt=1.0, snapshot_times=(1.25,))
    assert traj.times.tolist() == [0.0, 1.0, 2.0, 2.5]
    assert list(traj.snapshots) == [1.25]
    assert np.all(traj.counts.sum(axis=1) == 64)


@pytest.mark.parametrize("scheme", list(SCHEMES))
def test_backends_walk_identical_paths(scheme):
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernels not built")
    spec = HabitatSpec(2, 2, 2, 16)
    cfg = init_config(spec, (0.2, 0.2, 0.3), seed=3)
    a = run_direct(cfg, Params(1.5, 0.8), 4.0, seed=9, sample_dt=0.5, snapshot_times=(4.0,),
                   backend="compiled", scheme=scheme)
    b = run_direct(cfg, Params(1.5, 0.8), 4.0, seed=9, sample_dt=0.5, snapshot_times=(4.0,),
                   backend="python", scheme=scheme)
    assert a == b
    assert a.n_events == b.n_events > 0


def test_determinism_and_chunking():
    spec = HabitatSpec(2, 2, 1, 16)
    cfg = init_config(spec, (0.2, 0.2, 0.3), seed=3)
    a = run_direct(cfg, Params(2, 1), 5.0, seed=4)
    b = run_direct(cfg, Params(2, 1), 5.0, seed=4)
    c = run_direct(cfg, Params(2, 1), 5.0, seed=5)
    assert a == b
    assert a != c
    # the buffer size changes the draws but never the sampling plan
    d = run_direct(cfg, Params(2, 1), 5.0, seed=4, chunk=7)
    assert d.times.tolist() == a.times.tolist()


def _step_kernel(mod, cfg, params, n_steps, seed):
    spec = cfg.spec
    kern = mod.DirectKernel(cfg.states, neighbor_table(spec), host_map(spec),
                            params.alpha, params.beta, 0)
    gen = np.random.default_rng(seed)
    t, history = 0.0, [kern.get_states()]
    for _ in range(n_steps):
        t, _, _ = kern.advance(t, 1e9, gen.standard_exponential(1), gen.random(3), 0)
        history.append(kern.get_states())
        if kern.ns + kern.ng == 0:
            break
    return history


@pytest.mark.parametrize("backend", BACKENDS)
def test_each_event_changes_one_site_and_keeps_suitability(backend):
    spec = HabitatSpec(2, 2, 1, 16)
    cfg = init_config(spec, (0.2, 0.2, 0.2), seed=11)
    host = host_map(spec)
    hist = _step_kernel(kernels.get(backend), cfg, Params(2.5, 1.5), 3000, 1)
    for before, after in zip(hist, hist[1:]):
        changed = np.flatnonzero(before != after)
        assert changed.size <= 1
        if changed.size:
            x = changed[0]
            assert (before[x] == 0) != (after[x] == 0)
        spec_mask = (after == 1) | (after == 2)
        assert np.all(after[spec_mask] == host[spec_mask])


def test_single_generalist_survival_is_exponential():
    spec = HabitatSpec(2, 1, 1, 8)
    cfg = init_config(spec, fill=0)
    cfg.states[0] = 3
    n = 10_000
    alive = sum(run_direct(cfg, Params(0, 0), 1.0, seed=k, sample_dt=None).final_counts[3]
                for k in range(n))
    p = math.exp(-1.0)
    se = math.sqrt(p * (1 - p) / n)
    assert abs(alive / n - p) < 3 * se


def _plain_contact_process(n_side, lam, occ0, t_end, rng):
    """Standalone site-rate Gillespie for the basic contact process (R=1, d=2)."""
    occ = occ0.reshape(n_side, n_side).astype(float).copy()

    def neighbour_count(a):
        return sum(np.roll(np.roll(a, i, 0), j, 1) for i in (-1, 0, 1) for j in (-1, 0, 1)
                   if (i, j) != (0, 0))

    nb = neighbour_count(occ)
    t = 0.0
    while True:
        rates = np.where(occ == 1, 1.0, lam * nb).ravel()
        total = rates.sum()
        if total == 0:
            break
        t += rng.exponential(1 / total)
        if t > t_end:
            break
        k = int(np.searchsorted(np.cumsum(rates), rng.random() * total, side="right"))
        k = min(k, rates.size - 1)
        i, j = divmod(k, n_side)
        delta = -1.0 if occ[i, j] else 1.0
        occ[i, j] += delta
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di or dj:
                    nb[(i + di) % n_side, (j + dj) % n_side] += delta
    return occ.mean()


@pytest.mark.slow
def test_generalists_only_matches_plain_contact_process():
    spec = HabitatSpec(2, 2, 1, 16)
    lam, t_end, reps = 0.3, 10.0, 1000
    gen = np.random.default_rng(2024)
    ours, oracle = [], []
    for k in range(reps):
        cfg = init_config(spec, (0, 0, 0.5), seed=10_000 + k)
        ours.append(run_direct(cfg, Params(5.0, lam), t_end, seed=k, sample_dt=None).densities[-1, 3])
        oracle.append(_plain_contact_process(16, lam, cfg.states == 3, t_end, gen))
    res = stats.ks_2samp(ours, oracle)
    assert res.pvalue > 1e-3, res


@pytest.mark.slow
def test_direct_and_replay_agree_in_law():
    spec = SPEC8
    params = Params(2, 1)
    reps = 10_000
    a = np.empty((reps, 3))
    b = np.empty((reps, 3))
    for k in range(reps):
        cfg = init_config(spec, (0.25, 0.25, 0.25), seed=k)
        a[k] = run_direct(cfg, params, 2.0, seed=rng(1, k), sample_dt=None).densities[-1, 1:]
        log = generate_event_log(spec, params, 2.0, seed=rng(2, k))
        b[k] = evolve_by_events(cfg, log).counts()[1:] / spec.n_sites
    se = np.sqrt(a.var(axis=0, ddof=1) / reps + b.var(axis=0, ddof=1) / reps)
    assert np.all(np.abs(a.mean(axis=0) - b.mean(axis=0)) < 3 * se)


def test_run_final_matches_snapshot():
    cfg = init_config(SPEC8, (0.25, 0.25, 0.25), seed=0)
    final = run_final(cfg, Params(2, 1), 3.0, seed=1)
    traj = run_direct(cfg, Params(2, 1), 3.0, seed=1, sample_dt=None)
    assert final.counts().tolist() == traj.final_counts.tolist()


# ---------------------------------------------------------------- event logs

def test_equal_rates_never_flag_s():
    log = generate_event_log(SPEC8, Params(2, 2), 3.0, seed=1)
    assert log.n_arrows > 0
    assert not np.any(log.sflag)


def test_g_flag_marks_host_changes():
    log = generate_event_log(SPEC8, Params(2, 1), 3.0, seed=1)
    host = host_map(SPEC8)
    arrows = log.kind == 1
    assert np.array_equal(log.gflag[arrows].astype(bool), host[log.src[arrows]] != host[log.dst[arrows]])
    assert np.all(np.diff(log.times) > 0)
    assert log.times[0] > 0 and log.times[-1] <= 3.0


def test_s_flag_frequency():
    log = generate_event_log(HabitatSpec(2, 2, 1, 16), Params(4, 1), 5.0, seed=3)
    s = log.sflag[log.kind == 1]
    p = 0.75
    assert abs(s.mean() - p) < 4 * math.sqrt(p * (1 - p) / s.size)


def test_arrow_counts_per_pair_are_poisson():
    spec = HabitatSpec(2, 1, 1, 36)  # 10368 directed pairs
    alpha, T = 2.0, 1.5
    log = generate_event_log(spec, Params(alpha, 0), T, seed=8)
    arrows = log.kind == 1
    pair = log.src[arrows].astype(np.int64) * spec.n_sites + log.dst[arrows]
    nbr = neighbor_table(spec)
    all_pairs = np.arange(spec.n_sites)[:, None] * spec.n_sites + nbr
    counts = np.bincount(np.searchsorted(np.sort(all_pairs.ravel()), pair),
                         minlength=all_pairs.size)
    assert counts.size == spec.n_sites * spec.nu
    k_max = 8
    observed = np.bincount(np.minimum(counts, k_max), minlength=k_max + 1)
    pmf = stats.poisson.pmf(np.arange(k_max), alpha * T)
    expected = np.append(pmf, 1 - pmf.sum()) * counts.size
    assert stats.chisquare(observed, expected).pvalue > 1e-3


def test_log_requires_alpha_at_least_beta():
    with pytest.raises(ValidationError):
        generate_event_log(SPEC8, Params(1, 2), 1.0)


def test_log_budget():
    with pytest.raises(ValidationError, match="budget"):
        generate_event_log(SPEC8, Params(2, 1), 10.0, max_events=100)


def _site(c):
    return site_index(c, SPEC8)


def test_replay_examples():
    cfg = init_config(SPEC8, fill=0)
    cfg.states[_site((0, 0))] = 3
    empty = EventLog.from_events(SPEC8, Params(1, 1), 1.0)
    assert evolve_by_events(cfg, empty) == cfg
    died = EventLog.from_events(SPEC8, Params(1, 1), 1.0, deaths=[(_site((0, 0)), 0.5)])
    assert evolve_by_events(cfg, died).counts()[0] == 64
    birth = EventLog.from_events(SPEC8, Params(1, 1), 1.0,
                                 arrows=[(_site((0, 0)), _site((0, 1)), 0.5, False)])
    out = evolve_by_events(cfg, birth)
    assert out.states[_site((0, 1))] == 3


def test_replay_blocking_rules():
    # (0, 0) and (1, 1) share host 1; (0, 1) is host 2
    a, same, other = _site((0, 0)), _site((1, 1)), _site((0, 1))
    cfg = init_config(SPEC8, fill=0)
    cfg.states[a] = 1
    p = Params(2, 1)
    log = EventLog.from_events(SPEC8, p, 1.0, arrows=[(a, other, 0.2, False), (a, same, 0.4, True)])
    out = evolve_by_events(cfg, log).states
    assert out[other] == 0 and out[same] == 1  # g blocks specialists, s does not
    cfg.states[a] = 3
    out = evolve_by_events(cfg, log).states
    assert out[other] == 3 and out[same] == 0  # s blocks generalists, g does not
    both = EventLog.from_events(SPEC8, p, 1.0, arrows=[(a, other, 0.5, True)])
    assert evolve_by_events(cfg, both).states[other] == 0


def test_log_construction_checks():
    with pytest.raises(ValidationError, match="neighbours"):
        EventLog.from_events(SPEC8, Params(1, 1), 1.0, arrows=[(0, 20, 0.5, False)])
    with pytest.raises(ValidationError, match="distinct"):
        EventLog.from_events(SPEC8, Params(1, 1), 1.0, deaths=[(0, 0.5), (1, 0.5)])
    with pytest.raises(ValidationError):
        EventLog.from_events(SPEC8, Params(1, 1), 1.0, deaths=[(0, 1.5)])


@pytest.mark.parametrize("backend", BACKENDS)
def test_replay_restrict(backend):
    cfg = init_config(SPEC8, (0.25, 0.25, 0.25), seed=4)
    log = generate_event_log(SPEC8, Params(3, 1), 2.0, seed=4)
    mid = evolve_by_events(cfg, log, 1.0, backend=backend)
    assert mid == evolve_by_events(cfg, log.restrict(1.0), backend=backend)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.0, 4.0), st.floats(0.0, 4.0))
def test_replay_preserves_suitability(seed, a, b):
    alpha, beta = max(a, b), min(a, b)
    cfg = init_config(SPEC8, (0.3, 0.3, 0.2), seed=seed)
    log = generate_event_log(SPEC8, Params(alpha, beta), 1.0, seed=seed)
    out = evolve_by_events(cfg, log)
    out.check()
