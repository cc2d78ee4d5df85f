"""Direct (Gillespie) simulation of the heterogeneous contact process.

Two exact thinnings of the same generator are available:

* source: every occupied site carries one clock, rate ``1 + alpha*nu`` for a
  specialist and ``1 + beta*nu`` for a generalist.  When it rings the
  particle dies with probability ``1/rate`` or picks a uniform neighbour and
  places an offspring there if that site is empty and, for specialists, of
  the matching host type.
* target: occupied sites die at rate 1; each empty site rings at
  ``max(alpha, beta)*nu``, picks a uniform neighbour and accepts its
  offspring with probability ``rate/max(alpha, beta)``.

The default ``"hybrid"`` scheme uses, from each state, whichever of the two
has the smaller total rate.  Self-loops aside both have the same jump
rates, so the choice can depend on the current state without changing the
law; it only removes the flood of failed attempts at high density.

The loop itself lives in :mod:`hetcp.kernels`; this module feeds it
pre-drawn random buffers so the compiled and pure-Python backends walk
through identical paths.
"""
from __future__ import annotations

import numpy as np

from .. import kernels
from ..errors import ValidationError
from ..habitat import host_map, neighbor_table
from ..seeding import as_generator
from .state import Configuration, Params, Trajectory

CHUNK = 1 << 16
FIRST_CHUNK = 256  # buffers double up to CHUNK, so short runs stay cheap
SCHEMES = {"hybrid": 0, "source": 1, "target": 2}


def _sample_grid(t_end: float, sample_dt: float | None, sample_times) -> list[float]:
    if sample_times is not None:
        times = sorted({float(t) for t in sample_times if 0 <= t <= t_end})
    elif sample_dt:
        n = int(np.floor(t_end / sample_dt + 1e-9))
        times = [k * sample_dt for k in range(n + 1)]
    else:
        times = [0.0]
    if not times or times[0] != 0.0:
        times.insert(0, 0.0)
    if times[-1] != t_end:
        times.append(float(t_end))
    return times


def run_direct(config: Configuration, params: Params, t_end: float, seed=0, *,
               sample_dt: float | None = 1.0, sample_times=None,
               snapshot_times=(), backend: str = "auto",
               scheme: str = "hybrid", chunk: int = CHUNK) -> Trajectory:
    """Simulate from ``config`` up to ``t_end``.

    Counts are recorded at 0, at every multiple of ``sample_dt`` (or at the
    explicit ``sample_times``) and at ``t_end``.  Configurations are stored
    for each of ``snapshot_times``.  Output depends only on the inputs and
    ``seed``; the sampling plan is part of the inputs.
    """
    if t_end < 0:
        raise ValidationError(f"t_end must be >= 0, got {t_end}")
    if scheme not in SCHEMES:
        raise ValidationError(f"scheme must be one of {sorted(SCHEMES)}, got {scheme!r}")
    spec = config.spec
    mod = kernels.get(backend)
    kern = mod.DirectKernel(config.states, neighbor_table(spec), host_map(spec),
                            params.alpha, params.beta, SCHEMES[scheme])
    rng = as_generator(seed)

    snaps = sorted({float(t) for t in snapshot_times if 0 <= t <= t_end})
    stops = sorted(set(_sample_grid(t_end, sample_dt, sample_times)) | set(snaps))
    sample_set = set(_sample_grid(t_end, sample_dt, sample_times))

    times, counts, snapshots = [], [], {}
    exps = unifs = np.empty(0)
    i = size = 0
    t = 0.0
    for stop in stops:
        while True:
            t, i, reached = kern.advance(t, stop, exps, unifs, i)
            if reached:
                break
            size = min(size * 2, chunk) if exps.size else min(FIRST_CHUNK, chunk)
            exps = rng.standard_exponential(size)
            unifs = rng.random(3 * size)
            i = 0
        if stop in sample_set:
            times.append(stop)
            counts.append(kern.counts())
        if stop in snaps:
            snapshots[stop] = Configuration(spec, kern.get_states(), check=False)
    return Trajectory(spec, np.array(times), np.array(counts, dtype=np.int64),
                      snapshots, n_events=int(kern.n_events))


def run_final(config: Configuration, params: Params, t_end: float, seed=0,
              backend: str = "auto") -> Configuration:
    """Configuration at ``t_end`` (convenience wrapper around :func:`run_direct`)."""
    traj = run_direct(config, params, t_end, seed, sample_dt=None,
                      snapshot_times=(t_end,), backend=backend)
    return traj.snapshots[float(t_end)]
