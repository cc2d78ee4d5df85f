"""Chessboard habitat geometry on a periodic torus.

Sites are stored as flat row-major indices into an ``extent**d`` array.
Host patches are half-open cubes of side ``2L`` centred on the points
``2L*z``; a patch hosts type 1 when the coordinate sum of ``z`` is even.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import GeometryError


@dataclass(frozen=True)
class HabitatSpec:
    d: int
    L: int
    R: int
    extent: int

    def __post_init__(self):
        validate_geometry(self)

    @property
    def n_sites(self) -> int:
        return self.extent ** self.d

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.extent,) * self.d

    @property
    def nu(self) -> int:
        """Size of the dispersal neighbourhood, (2R+1)^d - 1."""
        return (2 * self.R + 1) ** self.d - 1

    @property
    def tiles_per_side(self) -> int:
        return self.extent // (2 * self.L)


def validate_geometry(spec: HabitatSpec) -> None:
    """Raise :class:`GeometryError` naming the first violated constraint."""
    for name in ("d", "L", "R", "extent"):
        value = getattr(spec, name)
        if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
            raise GeometryError(f"{name} must be an integer, got {value!r}")
        if value < 1:
            raise GeometryError(f"{name} must be >= 1, got {value}")
    if spec.extent % (4 * spec.L) != 0:
        raise GeometryError(
            f"extent={spec.extent} is not a multiple of 4L={4 * spec.L}; "
            "the chessboard would not wrap consistently")
    if 2 * spec.R + 1 > spec.extent:
        raise GeometryError(
            f"2R+1={2 * spec.R + 1} exceeds extent={spec.extent}; "
            "neighbourhoods would wrap onto their centre")


def _coords(x, spec: HabitatSpec) -> np.ndarray:
    c = np.asarray(x, dtype=np.int64)
    if c.shape != (spec.d,):
        raise ValueError(f"site must have {spec.d} coordinates, got {x!r}")
    return c % spec.extent


def tile_index(x, spec: HabitatSpec) -> tuple[int, ...]:
    """Tile coordinates ``floor((x + L) / 2L)`` reduced mod the tile count."""
    c = _coords(x, spec)
    z = (c + spec.L) // (2 * spec.L)
    return tuple(int(v) for v in z % spec.tiles_per_side)


def host_type(x, spec: HabitatSpec) -> int:
    """Host type (1 or 2) at site ``x`` given as a coordinate sequence."""
    c = _coords(x, spec)
    z = (c + spec.L) // (2 * spec.L)
    return 1 if int(z.sum()) % 2 == 0 else 2


def site_index(x, spec: HabitatSpec) -> int:
    c = _coords(x, spec)
    return int(np.ravel_multi_index(tuple(c), spec.shape))


def site_coords(i: int, spec: HabitatSpec) -> tuple[int, ...]:
    return tuple(int(v) for v in np.unravel_index(i, spec.shape))


def neighbor_offsets(spec: HabitatSpec) -> list[tuple[int, ...]]:
    """Canonical neighbour order: row-major over [-R, R]^d, origin skipped."""
    rng = range(-spec.R, spec.R + 1)
    return [off for off in itertools.product(rng, repeat=spec.d) if any(off)]


def neighborhood(x, spec: HabitatSpec) -> list[tuple[int, ...]]:
    """All sites z with 0 < |x - z|_inf <= R on the torus, in canonical order."""
    c = _coords(x, spec)
    return [tuple(int(v) for v in (c + np.array(off)) % spec.extent)
            for off in neighbor_offsets(spec)]


@lru_cache(maxsize=32)
def host_map(spec: HabitatSpec) -> np.ndarray:
    """Flat uint8 array of host types for every site (read-only)."""
    axes = np.indices(spec.shape).reshape(spec.d, -1)
    z = (axes + spec.L) // (2 * spec.L)
    out = np.where(z.sum(axis=0) % 2 == 0, 1, 2).astype(np.uint8)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=32)
def neighbor_table(spec: HabitatSpec) -> np.ndarray:
    """``(n_sites, nu)`` int32 table; row i lists neighbours of site i."""
    axes = np.indices(spec.shape).reshape(spec.d, -1)
    offs = np.array(neighbor_offsets(spec), dtype=np.int64)  # (nu, d)
    shifted = (axes[:, :, None] + offs.T[:, None, :]) % spec.extent
    flat = np.ravel_multi_index(tuple(shifted), spec.shape)
    out = np.ascontiguousarray(flat, dtype=np.int32)
    out.flags.writeable = False
    return out
