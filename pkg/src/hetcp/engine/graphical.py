"""Recorded graphical representation (valid when alpha >= beta).

Every site carries a rate-1 Poisson process of death marks; every directed
neighbour pair ``(x, z)`` carries a rate-``alpha`` Poisson process of arrows.
Each arrow gets an ``s`` flag with probability ``(alpha - beta) / alpha`` and
a ``g`` flag whenever its endpoints lie on different host types.
Specialists may not use g-arrows, generalists may not use s-arrows.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import ValidationError
from ..habitat import HabitatSpec, host_map, neighbor_table
from ..seeding import as_generator
from .state import Configuration, Params

DEATH, ARROW = 0, 1
MAX_EVENTS = 20_000_000


@dataclass(frozen=True, eq=False)
class EventLog:
    """All events of the window (0, T], sorted by time.

    Deaths have ``kind == 0`` and ``dst == -1``.  Flags are zero for deaths.
    """
    spec: HabitatSpec
    params: Params
    T: float
    times: np.ndarray
    kind: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    sflag: np.ndarray
    gflag: np.ndarray

    def __len__(self):
        return self.times.size

    @property
    def n_deaths(self) -> int:
        return int(np.count_nonzero(self.kind == DEATH))

    @property
    def n_arrows(self) -> int:
        return int(np.count_nonzero(self.kind == ARROW))

    def deaths(self, x: int) -> np.ndarray:
        return self.times[(self.kind == DEATH) & (self.src == x)]

    def arrows(self, x: int, z: int) -> tuple[np.ndarray, np.ndarray]:
        m = (self.kind == ARROW) & (self.src == x) & (self.dst == z)
        return self.times[m], self.sflag[m].astype(bool)

    def restrict(self, t: float) -> EventLog:
        """Events with time <= t."""
        n = int(np.searchsorted(self.times, t, side="right"))
        return EventLog(self.spec, self.params, self.T, self.times[:n], self.kind[:n],
                        self.src[:n], self.dst[:n], self.sflag[:n], self.gflag[:n])

    @classmethod
    def from_events(cls, spec: HabitatSpec, params: Params, T: float,
                    deaths=(), arrows=()) -> EventLog:
        """Hand-built log.

        ``deaths`` holds ``(site, time)`` pairs, ``arrows`` holds
        ``(x, z, time, s_flag)`` with flat site indices.  g flags are derived
        from the endpoints.
        """
        _check_params(params)
        host = host_map(spec)
        nbrs = neighbor_table(spec)
        rows = []
        for x, t in deaths:
            rows.append((float(t), DEATH, int(x), -1, 0, 0))
        for x, z, t, s in arrows:
            if int(z) not in set(nbrs[int(x)].tolist()):
                raise ValidationError(f"arrow {x}->{z} joins sites that are not neighbours")
            rows.append((float(t), ARROW, int(x), int(z), int(bool(s)), int(host[x] != host[z])))
        rows.sort(key=lambda r: r[0])
        times = np.array([r[0] for r in rows], dtype=float)
        _check_times(times, T)
        cols = list(zip(*rows)) if rows else [()] * 6
        return cls(spec, params, float(T), times,
                   np.array(cols[1], dtype=np.int8), np.array(cols[2], dtype=np.int32),
                   np.array(cols[3], dtype=np.int32), np.array(cols[4], dtype=np.uint8),
                   np.array(cols[5], dtype=np.uint8))


def _check_params(params: Params) -> None:
    if params.alpha < params.beta:
        raise ValidationError(
            f"the graphical representation needs alpha >= beta (alpha={params.alpha}, beta={params.beta})")


def _check_times(times: np.ndarray, T: float) -> None:
    if times.size and (times[0] <= 0 or times[-1] > T):
        raise ValidationError("event times must lie in (0, T]")
    if times.size > 1 and np.any(np.diff(times) <= 0):
        raise ValidationError("event times must be distinct")


def s_probability(params: Params) -> float:
    return 0.0 if params.alpha == 0 else (params.alpha - params.beta) / params.alpha


def generate_event_log(spec: HabitatSpec, params: Params, T: float, seed=0,
                       max_events: int = MAX_EVENTS) -> EventLog:
    """Sample every death mark, arrow and label in (0, T].

    A draw containing two equal times is discarded and redrawn from the same
    stream.
    """
    _check_params(params)
    if T < 0:
        raise ValidationError(f"T must be >= 0, got {T}")
    n, nu = spec.n_sites, spec.nu
    expected = n * (1 + params.alpha * nu) * T
    if expected > max_events:
        raise ValidationError(
            f"expected {expected:.3g} events exceeds the budget of {max_events}; shrink the window")
    rng = as_generator(seed)
    nbrs = neighbor_table(spec)
    host = host_map(spec)
    p_s = s_probability(params)
    while True:
        n_death = rng.poisson(T, size=n)
        n_arrow = rng.poisson(params.alpha * T, size=n * nu)
        d_src = np.repeat(np.arange(n, dtype=np.int32), n_death)
        pair = np.repeat(np.arange(n * nu), n_arrow)
        a_src = (pair // nu).astype(np.int32)
        a_dst = nbrs.reshape(-1)[pair].astype(np.int32)
        d_times = T - T * rng.random(d_src.size)
        a_times = T - T * rng.random(a_src.size)
        s = (rng.random(a_src.size) < p_s).astype(np.uint8)

        times = np.concatenate([d_times, a_times])
        order = np.argsort(times, kind="stable")
        times = times[order]
        if times.size < 2 or np.all(np.diff(times) > 0):
            break
    kind = np.concatenate([np.zeros(d_src.size, np.int8), np.ones(a_src.size, np.int8)])[order]
    src = np.concatenate([d_src, a_src])[order]
    dst = np.concatenate([np.full(d_src.size, -1, np.int32), a_dst])[order]
    sflag = np.concatenate([np.zeros(d_src.size, np.uint8), s])[order]
    g = (host[a_src] != host[a_dst]).astype(np.uint8)
    gflag = np.concatenate([np.zeros(d_src.size, np.uint8), g])[order]
    return EventLog(spec, params, float(T), times, kind, src, dst, sflag, gflag)


def evolve_by_events(config0: Configuration, log: EventLog, t: float | None = None,
                     backend: str = "auto") -> Configuration:
    """Replay the log forward from ``config0`` up to time ``t`` (default T)."""
    if config0.spec != log.spec:
        raise ValidationError("configuration and event log use different habitats")
    if t is not None:
        log = log.restrict(t)
    states = config0.states.copy()
    kernels.get(backend).replay(states, log.times, log.kind, log.src,
                                np.where(log.dst < 0, 0, log.dst).astype(np.int32),
                                log.sflag, log.gflag)
    return Configuration(config0.spec, states, check=False)
