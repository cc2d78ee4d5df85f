from __future__ import annotations

import math
import numbers
from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from ..habitat import HabitatSpec, host_map
from ..seeding import as_generator

EMPTY, SPEC1, SPEC2, GEN = 0, 1, 2, 3


@dataclass(frozen=True)
class Params:
    """Per-neighbour birth rates: ``alpha`` for specialists, ``beta`` for generalists."""
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("alpha", "beta"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, numbers.Real):
                raise ValidationError(f"{name} must be a real number, got {v!r}")
            v = float(v)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be finite and >= 0, got {v!r}")
            object.__setattr__(self, name, v)


class Configuration:
    """Assignment of a state in {0, 1, 2, 3} to every site of the torus.

    ``states`` is the flat row-major uint8 array; ``grid`` is a reshaped view.
    Specialists may only sit on their own host type.
    """

    def __init__(self, spec: HabitatSpec, states, *, check: bool = True):
        arr = np.ascontiguousarray(states, dtype=np.uint8).reshape(-1)
        if arr.size != spec.n_sites:
            raise ValidationError(f"expected {spec.n_sites} sites, got {arr.size}")
        self.spec = spec
        self.states = arr
        if check:
            self.check()

    def check(self) -> None:
        if self.states.max(initial=0) > 3:
            raise ValidationError("states must lie in {0, 1, 2, 3}")
        host = host_map(self.spec)
        spec_mask = (self.states == SPEC1) | (self.states == SPEC2)
        bad = np.flatnonzero(spec_mask & (self.states != host))
        if bad.size:
            raise ValidationError(
                f"{bad.size} specialists on unsuitable host sites (first flat index {bad[0]})")

    @property
    def grid(self) -> np.ndarray:
        return self.states.reshape(self.spec.shape)

    def counts(self) -> np.ndarray:
        return np.bincount(self.states, minlength=4).astype(np.int64)

    def copy(self) -> Configuration:
        return Configuration(self.spec, self.states.copy(), check=False)

    def __eq__(self, other):
        if not isinstance(other, Configuration):
            return NotImplemented
        return self.spec == other.spec and np.array_equal(self.states, other.states)

    def __repr__(self):
        n = self.counts()
        return f"Configuration({self.spec}, counts={n.tolist()})"


def init_config(spec: HabitatSpec, densities=None, *, fill: int | None = None,
                grid=None, seed=0) -> Configuration:
    """Build an initial configuration.

    Exactly one policy applies:

    * ``densities=(p1, p2, p3)``: independent product draw per site; a
      specialist drawn on the wrong host type is replaced by an empty site.
    * ``fill=k``: every site holds ``k`` (specialists only on their hosts).
    * ``grid=array``: explicit states, validated for habitat suitability.
    """
    chosen = sum(p is not None for p in (densities, fill, grid))
    if chosen != 1:
        raise ValidationError("give exactly one of densities, fill or grid")
    host = host_map(spec)
    if grid is not None:
        return Configuration(spec, np.asarray(grid))
    if fill is not None:
        if fill not in (0, 1, 2, 3):
            raise ValidationError(f"fill must be a state in 0..3, got {fill}")
        states = np.full(spec.n_sites, fill, dtype=np.uint8)
        if fill in (SPEC1, SPEC2):
            states[host != fill] = EMPTY
        return Configuration(spec, states, check=False)

    p = np.asarray(densities, dtype=float)
    if p.shape != (3,) or np.any(p < 0) or np.any(p > 1) or p.sum() > 1 + 1e-12:
        raise ValidationError(f"densities must be three values in [0,1] summing to <= 1, got {densities!r}")
    u = as_generator(seed).random(spec.n_sites)
    edges = np.cumsum(p)
    states = np.where(u < edges[0], 1, np.where(u < edges[1], 2, np.where(u < edges[2], 3, 0)))
    states = states.astype(np.uint8)
    spec_mask = (states == SPEC1) | (states == SPEC2)
    states[spec_mask & (states != host)] = EMPTY
    return Configuration(spec, states, check=False)


@dataclass
class Trajectory:
    """Sampled per-type site counts, plus optional configuration snapshots."""
    spec: HabitatSpec
    times: np.ndarray
    counts: np.ndarray  # (n_samples, 4) int64
    snapshots: dict = field(default_factory=dict)
    n_events: int = 0

    @property
    def densities(self) -> np.ndarray:
        return self.counts / self.spec.n_sites

    @property
    def final_counts(self) -> np.ndarray:
        return self.counts[-1]

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (self.spec == other.spec
                and np.array_equal(self.times, other.times)
                and np.array_equal(self.counts, other.counts)
                and self.snapshots.keys() == other.snapshots.keys()
                and all(self.snapshots[k] == other.snapshots[k] for k in self.snapshots))
