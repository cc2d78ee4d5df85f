"""Measurements and experiment protocols on top of the engine."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine.direct import run_direct
from .engine.state import Configuration, Params, Trajectory, init_config
from .errors import ValidationError
from .habitat import HabitatSpec
from .seeding import rng

DEFAULT_DENSITIES = (0.25, 0.25, 0.25)
NOT_FOUND = None


def densities(config: Configuration) -> tuple[float, float, float, float]:
    """Fraction of sites in each state 0..3 (counts over the site total)."""
    n = config.counts()
    return tuple(int(c) / config.spec.n_sites for c in n)


# ---------------------------------------------------------------- critical alpha

@dataclass
class CriticalAlphaResult:
    beta: float
    L: int
    R: int
    extent: int
    t_end: float
    alpha_grid: list
    replicates: int
    alpha_hat: float | None
    mean_spec: list = field(default_factory=list)
    mean_gen: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.alpha_hat is not NOT_FOUND

    def rows(self):
        for a, ms, mg in zip(self.alpha_grid, self.mean_spec, self.mean_gen):
            yield {"beta": self.beta, "L": self.L, "R": self.R, "extent": self.extent,
                   "t_end": self.t_end, "alpha": a, "mean_rho_spec": ms, "mean_rho_gen": mg,
                   "alpha_hat_flag": int(self.alpha_hat is not NOT_FOUND and a == self.alpha_hat)}


def _final_counts(task):
    spec, alpha, beta, t_end, dens, seed, ai, r = task
    g = rng(seed, ai, r)
    cfg = init_config(spec, dens, seed=g)
    traj = run_direct(cfg, Params(alpha, beta), t_end, g, sample_dt=None)
    return traj.final_counts


def critical_alpha(beta: float, spec: HabitatSpec, alpha_grid, t_end: float = 100.0,
                   replicates: int = 8, seed: int = 0, init_densities=DEFAULT_DENSITIES,
                   workers: int = 1, stop_at_first: bool = False) -> CriticalAlphaResult:
    """Smallest grid alpha whose replicate-mean specialist density beats the
    generalist density at ``t_end``.

    Replicate ``r`` at grid index ``i`` draws both its initial state and its
    dynamics from the stream ``(seed, i, r)``, so results do not depend on
    ``workers``.  With ``stop_at_first`` the scan ends at the first success.
    """
    grid = [float(a) for a in alpha_grid]
    if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValidationError("alpha_grid must be non-empty and strictly ascending")
    if any(a < 0 for a in grid):
        raise ValidationError("alpha_grid values must be >= 0")
    if replicates < 1:
        raise ValidationError("replicates must be >= 1")
    n = spec.n_sites
    res = CriticalAlphaResult(beta, spec.L, spec.R, spec.extent, t_end, [], replicates, NOT_FOUND)
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for i, a in enumerate(grid):
            tasks = [(spec, a, beta, t_end, init_densities, seed, i, r) for r in range(replicates)]
            finals = list(pool.map(_final_counts, tasks) if pool else map(_final_counts, tasks))
            spec_total = sum(int(c[1] + c[2]) for c in finals)
            gen_total = sum(int(c[3]) for c in finals)
            res.alpha_grid.append(a)
            res.mean_spec.append(spec_total / (replicates * n))
            res.mean_gen.append(gen_total / (replicates * n))
            if res.alpha_hat is NOT_FOUND and spec_total > gen_total:
                res.alpha_hat = a
                if stop_at_first:
                    break
    finally:
        if pool:
            pool.shutdown()
    return res


def parse_grid(text: str) -> list[float]:
    """``"start:stop:step"`` (stop inclusive) or a comma list."""
    text = text.strip()
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3 or parts[2] <= 0:
            raise ValidationError(f"bad grid {text!r}; use start:stop:step")
        start, stop, step = parts
        n = int(math.floor((stop - start) / step + 1e-9))
        return [round(start + k * step, 12) for k in range(n + 1)]
    return [float(p) for p in text.split(",") if p.strip()]


# ---------------------------------------------------------------- coexistence

def coexistence_check(traj: Trajectory, types, threshold: float, t_from: float) -> bool:
    """True when every type in ``types`` stays above ``threshold`` at all
    samples taken at or after ``t_from``."""
    if not 0 < threshold < 1:
        raise ValidationError("threshold must lie in (0, 1)")
    if t_from >= traj.times[-1]:
        raise ValidationError("t_from must precede the end of the trajectory")
    types = sorted(set(types))
    if not types or any(k not in (1, 2, 3) for k in types):
        raise ValidationError("types must be a non-empty subset of {1, 2, 3}")
    rho = traj.densities[traj.times >= t_from]
    return bool(np.all(rho[:, types] > threshold))


# ---------------------------------------------------------------- blocks

@dataclass(frozen=True)
class BlockSpec:
    """Central box of side ~2L/n in a tile, cut into sub-squares of ``side`` sites."""
    L: int
    n: int = 4
    side: int | None = None

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("n must be >= 2 so the box stays inside its tile")
        if self.side is None:
            object.__setattr__(self, "side", math.ceil(self.L ** 0.1))
        if self.side < 1:
            raise ValidationError("sub-square side must be >= 1")
        if not self.subsquare_offsets():
            raise ValidationError(f"no sub-square of side {self.side} fits in the box")

    @property
    def half(self) -> int:
        return self.L // self.n

    def subsquare_offsets(self) -> list[int]:
        """Low-corner offsets (from the tile centre) of sub-squares along one axis."""
        m, h = self.side, self.half
        lo_shift = m // 2
        ws = range(-(h + lo_shift) // m - 1, (h + lo_shift) // m + 2)
        return [m * w - lo_shift for w in ws if m * w - lo_shift >= -h and m * w - lo_shift + m - 1 <= h]


def _box(config: Configuration, z, bs: BlockSpec) -> np.ndarray:
    spec = config.spec
    if len(z) != spec.d or any(not 0 <= zi < spec.tiles_per_side for zi in z):
        raise ValidationError(f"tile {z} outside 0..{spec.tiles_per_side - 1}")
    if bs.L != spec.L:
        raise ValidationError("block spec and habitat use different L")
    h = bs.half
    idx = [np.arange(2 * spec.L * zi - h, 2 * spec.L * zi + h + 1) % spec.extent for zi in z]
    return config.grid[np.ix_(*idx)]


def block_goodness(config: Configuration, z, bs: BlockSpec, kind: str) -> bool:
    """s: box free of 3's with a 1 in every sub-square.  g: free of 1's with a 3 in each."""
    if kind not in ("s", "g"):
        raise ValidationError("kind must be 's' or 'g'")
    focal, foe = (1, 3) if kind == "s" else (3, 1)
    box = _box(config, z, bs)
    if np.any(box == foe):
        return False
    h, m = bs.half, bs.side
    offs = [o + h for o in bs.subsquare_offsets()]
    for corner in itertools.product(offs, repeat=config.spec.d):
        sl = tuple(slice(c, c + m) for c in corner)
        if not np.any(box[sl] == focal):
            return False
    return True


def tile_parity(z) -> str:
    return "even" if sum(z) % 2 == 0 else "odd"


def block_map(config: Configuration, bs: BlockSpec) -> np.ndarray:
    """Character per tile: 'S' s-good, 'G' g-good, '.' neither."""
    spec = config.spec
    k = spec.tiles_per_side
    out = np.full((k,) * spec.d, ".", dtype="<U1")
    for z in itertools.product(range(k), repeat=spec.d):
        if block_goodness(config, z, bs, "s"):
            out[z] = "S"
        elif block_goodness(config, z, bs, "g"):
            out[z] = "G"
    return out


# ---------------------------------------------------------------- boundary profile

def boundary_profile(config: Configuration) -> dict[int, tuple[float, float, float, float]]:
    """Type densities grouped by sup-norm distance to the nearest tile edge."""
    spec = config.spec
    axes = np.indices(spec.shape).reshape(spec.d, -1)
    p = (axes + spec.L) % (2 * spec.L)
    dist = np.minimum(p, 2 * spec.L - 1 - p).min(axis=0)
    out = {}
    for d in np.unique(dist):
        sel = config.states[dist == d]
        c = np.bincount(sel, minlength=4)
        out[int(d)] = tuple(int(v) / sel.size for v in c)
    return out
