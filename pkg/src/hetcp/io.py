"""Output files and the run manifest.

Every file starts with ``#`` comment lines; the last of them is
``# manifest <sha256>``, naming the digest of the run manifest that
produced it.  Floats are written with ``repr`` so reruns are byte-identical.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .engine.state import Configuration, Trajectory
from .habitat import HabitatSpec

MANIFEST_NAME = "manifest.json"


@dataclass
class RunManifest:
    subcommand: str
    params: dict
    seed: int
    outputs: list = field(default_factory=list)
    version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def write(self, out_dir: str) -> str:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, MANIFEST_NAME)
        with open(path, "w", newline="\n") as fh:
            fh.write(self.to_json())
        return path

    @classmethod
    def read(cls, path: str) -> RunManifest:
        with open(path) as fh:
            return cls(**json.load(fh))


def _header(fh, lines, digest):
    for line in lines:
        fh.write(f"# {line}\n")
    if digest is not None:
        fh.write(f"# manifest {digest}\n")


def _fmt(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def write_csv(path: str, columns, rows, digest=None, comments=()) -> None:
    with open(path, "w", newline="\n") as fh:
        _header(fh, comments, digest)
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def read_csv(path: str) -> tuple[list[str], list[list[str]]]:
    """Column names and raw string rows, skipping comment lines."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    return lines[0].split(","), [ln.split(",") for ln in lines[1:] if ln]


def read_digest(path: str) -> str | None:
    with open(path) as fh:
        for ln in fh:
            if not ln.startswith("#"):
                break
            if ln.startswith("# manifest "):
                return ln.split()[2]
    return None


TRAJECTORY_COLUMNS = ("t", "n0", "n1", "n2", "n3", "rho1", "rho2", "rho3")


def write_trajectory(path: str, traj: Trajectory, digest=None) -> None:
    n = traj.spec.n_sites
    rows = ([t, *map(int, c), int(c[1]) / n, int(c[2]) / n, int(c[3]) / n]
            for t, c in zip(traj.times.tolist(), traj.counts))
    write_csv(path, TRAJECTORY_COLUMNS, rows, digest)


def write_snapshot(path: str, config: Configuration, t: float, seed, digest=None) -> None:
    """Rows of '0'..'3' characters, one per lattice row (last axis varies along a row)."""
    s = config.spec
    rows = config.states.reshape(-1, s.extent) if s.d > 1 else config.states.reshape(1, -1)
    with open(path, "w", newline="\n") as fh:
        _header(fh, [f"d={s.d} L={s.L} R={s.R} extent={s.extent} t={t!r} seed={seed}"], digest)
        for row in rows:
            fh.write("".join("0123"[v] for v in row.tolist()) + "\n")


def read_snapshot(path: str) -> tuple[Configuration, dict]:
    meta, rows = {}, []
    with open(path) as fh:
        for ln in fh:
            ln = ln.rstrip("\n")
            if ln.startswith("# manifest "):
                meta["manifest"] = ln.split()[2]
            elif ln.startswith("#"):
                meta.update(kv.split("=", 1) for kv in ln[1:].split())
            elif ln:
                rows.append([int(ch) for ch in ln])
    spec = HabitatSpec(int(meta["d"]), int(meta["L"]), int(meta["R"]), int(meta["extent"]))
    return Configuration(spec, np.array(rows, dtype=np.uint8)), meta


MEANFIELD_COLUMNS = ("t", "v11", "v22", "v13", "v23", "u1", "u2")


def write_meanfield(path: str, times, states, digest=None) -> None:
    rows = []
    for t, y in zip(np.asarray(times).tolist(), np.asarray(states).tolist()):
        v11, v22, v13, v23 = y
        rows.append([t, v11, v22, v13, v23, 0.5 - v11 - v13, 0.5 - v22 - v23])
    write_csv(path, MEANFIELD_COLUMNS, rows, digest)


def write_regimes(path: str, grid, digest=None) -> None:
    write_csv(path, ("a", "b", "regime"), ([float(a), float(b), r] for a, b, r in grid), digest)


SWEEP_COLUMNS = ("beta", "L", "R", "extent", "t_end", "alpha", "mean_rho_spec",
                 "mean_rho_gen", "alpha_hat_flag")


def write_sweep(path: str, results, digest=None) -> None:
    rows = ([r[c] for c in SWEEP_COLUMNS] for res in results for r in res.rows())
    write_csv(path, SWEEP_COLUMNS, rows, digest)


def write_block_map(path: str, bmap: np.ndarray, comments=(), digest=None) -> None:
    with open(path, "w", newline="\n") as fh:
        _header(fh, comments, digest)
        rows = bmap.reshape(-1, bmap.shape[-1]) if bmap.ndim > 1 else bmap.reshape(1, -1)
        for row in rows:
            fh.write("".join(row.tolist()) + "\n")


def read_block_map(path: str) -> list[str]:
    with open(path) as fh:
        return [ln.rstrip("\n") for ln in fh if not ln.startswith("#") and ln.strip()]
