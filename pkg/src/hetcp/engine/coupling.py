"""Two processes driven by one stream of death marks and arrows.

``specialists_vs_replacement``
    xi has specialists only; zeta is the basic contact process with rate
    alpha started from xi with every specialist replaced by a 3.  zeta must
    always have at least the sites of xi occupied.
``hetero_vs_homo``
    xi is the chessboard process; eta is the homogeneous multitype contact
    process (specialists breed at rate alpha everywhere).  xi must always have
    at least the 3's of eta and at most its specialists.

The shared stream is sampled on the fly: every site occupied in either
process rings at ``1 + alpha*nu`` and produces a death mark or an arrow to a
uniform neighbour, with the s/g labels of the graphical representation.
Rings at sites empty in both processes would be no-ops and are skipped.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..habitat import host_map, neighbor_table
from ..seeding import as_generator
from .graphical import s_probability
from .state import Configuration, Params, Trajectory

CHUNK = 4096
MODES = ("specialists_vs_replacement", "hetero_vs_homo")


@dataclass
class Violation:
    time: float
    site: int
    first: int
    second: int


@dataclass
class CoupledRun:
    mode: str
    first: Trajectory
    second: Trajectory
    violations: list = field(default_factory=list)
    n_events: int = 0
    n_checks: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations


def _included(mode: str, a: int, b: int) -> bool:
    if mode == MODES[0]:
        return a == 0 or b != 0
    return (b != 3 or a == 3) and (a not in (1, 2) or b in (1, 2))


def partner(mode: str, config: Configuration) -> np.ndarray:
    """Initial state of the dominating process for ``config``."""
    if mode == MODES[0]:
        return np.where(config.states != 0, 3, 0).astype(np.uint8)
    return config.states.copy()


def run_coupled(mode: str, init: Configuration, params: Params, t_end: float, seed=0,
                *, second=None, sample_dt: float = 1.0) -> CoupledRun:
    """Run both processes of ``mode`` and report every inclusion violation.

    ``second`` optionally gives the partner's initial states explicitly; it
    must equal :func:`partner` of ``init``.  Inclusions are checked at the
    touched site after every event and over the whole lattice at each sample.
    """
    if mode not in MODES:
        raise ValidationError(f"mode must be one of {MODES}, got {mode!r}")
    expected = partner(mode, init)
    if mode == MODES[0] and np.any(init.states == 3):
        raise ValidationError("specialists_vs_replacement needs an initial state without 3's")
    if mode == MODES[1] and params.alpha < params.beta:
        raise ValidationError("hetero_vs_homo needs alpha >= beta")
    if second is not None and not np.array_equal(np.asarray(second, dtype=np.uint8).reshape(-1), expected):
        raise ValidationError(f"invalid initial pairing for {mode}")

    spec = init.spec
    rng = as_generator(seed)
    nbr = neighbor_table(spec).tolist()
    host = host_map(spec).tolist()
    nu = spec.nu
    alpha = params.alpha
    p_s = s_probability(params) if mode == MODES[1] else 0.0
    homo = mode == MODES[1]
    rate = 1.0 + alpha * nu

    a = init.states.tolist()
    b = expected.tolist()
    active = [x for x in range(spec.n_sites) if a[x] or b[x]]
    pos = {x: k for k, x in enumerate(active)}

    def touch(x):
        on = bool(a[x] or b[x])
        if on and x not in pos:
            pos[x] = len(active)
            active.append(x)
        elif not on and x in pos:
            k = pos.pop(x)
            last = active.pop()
            if last != x:
                active[k] = last
                pos[last] = k

    def _arrow(x, z, s):
        g = host[x] != host[z]
        ca_, cb_ = a[x], b[x]
        if ca_ and not a[z] and not (g if ca_ != 3 else s):
            a[z] = ca_
        if cb_ and not b[z]:
            if not homo:
                b[z] = 3
            elif cb_ != 3 or not s:
                b[z] = cb_

    violations: list[Violation] = []
    n_checks = 0

    def full_check(t):
        nonlocal n_checks
        n_checks += 1
        for x in range(spec.n_sites):
            if not _included(mode, a[x], b[x]):
                violations.append(Violation(t, x, a[x], b[x]))

    n_samples = int(np.floor(t_end / sample_dt + 1e-9)) + 1
    stops = [k * sample_dt for k in range(n_samples)]
    if stops[-1] < t_end:
        stops.append(float(t_end))
    times, ca, cb = [], [], []
    t = 0.0
    n_events = 0
    exps, unifs, i = [], [], 0
    for stop in stops:
        while active:
            if i >= len(exps):
                exps = rng.standard_exponential(CHUNK).tolist()
                unifs = rng.random(3 * CHUNK).tolist()
                i = 0
            dt = exps[i] / (len(active) * rate)
            u = unifs[3 * i:3 * i + 3]
            i += 1
            if t + dt > stop:
                break
            t += dt
            n_events += 1
            x = active[min(int(u[0] * len(active)), len(active) - 1)]
            r = u[1] * rate
            if r < 1.0 or alpha == 0.0:
                a[x] = 0
                b[x] = 0
                z = x
            else:
                z = nbr[x][min(int((r - 1.0) / alpha), nu - 1)]
                _arrow(x, z, u[2] < p_s)
            touch(z)
            n_checks += 1
            if not _included(mode, a[z], b[z]):
                violations.append(Violation(t, z, a[z], b[z]))
        t = stop
        full_check(t)
        times.append(stop)
        ca.append(np.bincount(a, minlength=4))
        cb.append(np.bincount(b, minlength=4))
    tr_a = Trajectory(spec, np.array(times), np.array(ca, dtype=np.int64), n_events=n_events)
    tr_b = Trajectory(spec, np.array(times), np.array(cb, dtype=np.int64), n_events=n_events)
    return CoupledRun(mode, tr_a, tr_b, violations, n_events, n_checks)
