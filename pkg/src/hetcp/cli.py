"""Command-line entry point: ``hetcp <subcommand> [flags]``.

Every run writes ``manifest.json`` into ``--out-dir`` before doing any work;
each output file carries the manifest digest in its header.  Values can also
come from ``--config FILE`` holding ``key = value`` lines (``#`` starts a
comment, keys are flag names without the leading dashes); flags given on the
command line win.

Exit codes: 0 success, 2 invalid input, 1 runtime failure or failed check.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import __version__, dual, experiments, io, meanfield
from .engine import coupling, graphical
from .engine.direct import run_direct
from .engine.state import Params, init_config
from .errors import ValidationError
from .habitat import HabitatSpec
from .seeding import rng

DEFAULTS = {
    "d": 2, "L": 10, "R": 1, "extent": 200, "alpha": 3.0, "beta": 2.0,
    "t_end": 100.0, "seed": 0, "replicates": 8, "out_dir": ".",
    "init_density1": 0.25, "init_density2": 0.25, "init_density3": 0.25,
    "sample_dt": 1.0, "backend": "auto", "snapshot_times": "",
    "a": 5.0, "b": 2.0, "h": 0.01, "start": "0.2,0.2,0.05,0.05", "grid": 0,
    "alpha_grid": "1:6:0.25", "workers": 1, "stop_at_first": False,
    "mode": coupling.MODES[0], "threshold": None, "types": None, "t_from": None,
    "n": 4, "side": None,
}


def _floats(text: str) -> list[float]:
    return [float(v) for v in str(text).split(",") if v.strip()]


def _add_geometry(p, extent=True):
    p.add_argument("--d", type=int, help="lattice dimension (default 2)")
    p.add_argument("--L", type=int, help="half side of a habitat tile")
    p.add_argument("--R", type=int, help="dispersal range (sup norm)")
    if extent:
        p.add_argument("--extent", type=int, help="torus side, a multiple of 4L")


def _add_rates(p):
    p.add_argument("--alpha", type=float, help="specialist birth rate per neighbour")
    p.add_argument("--beta", type=float, help="generalist birth rate per neighbour")


def _add_init(p):
    for k in (1, 2, 3):
        p.add_argument(f"--init-density{k}", type=float,
                       help=f"initial probability of type {k} per site (default 0.25)")


def _add_common(p, replicates=False):
    p.add_argument("--t-end", type=float, help="time horizon")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--out-dir", help="directory for outputs (default .)")
    p.add_argument("--config", help="file of 'key = value' lines; flags override it")
    if replicates:
        p.add_argument("--replicates", type=int, help="independent repetitions")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hetcp", description=__doc__.splitlines()[0],
                                 argument_default=None)
    ap.add_argument("--version", action="version", version=f"hetcp {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="direct simulation: trajectory CSV and snapshots")
    _add_geometry(p)
    _add_rates(p)
    _add_init(p)
    _add_common(p)
    p.add_argument("--sample-dt", type=float, help="spacing of trajectory rows (default 1)")
    p.add_argument("--snapshot-times", help="comma list of extra snapshot times")
    p.add_argument("--backend", choices=("auto", "compiled", "python"))
    p.add_argument("--threshold", type=float, help="report coexistence at this density level")
    p.add_argument("--types", help="types for the coexistence report, e.g. 1,2 (default: seeded types)")
    p.add_argument("--t-from", type=float, help="coexistence window start (default t_end/2)")

    p = sub.add_parser("meanfield", help="integrate the mean-field ODEs")
    p.add_argument("--a", type=float, help="scaled specialist birth rate")
    p.add_argument("--b", type=float, help="scaled generalist birth rate")
    p.add_argument("--t-end", type=float, help="time horizon (default 100)")
    p.add_argument("--h", type=float, help="RK4 step (default 0.01)")
    p.add_argument("--start", help="v11,v22,v13,v23 (default 0.2,0.2,0.05,0.05)")
    p.add_argument("--sample-dt", type=float, help="spacing of output rows (default 1)")
    p.add_argument("--out-dir")
    p.add_argument("--config")

    p = sub.add_parser("equilibria", help="equilibria, stability and regime of (a, b)")
    p.add_argument("--a", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--grid", type=int, help="also write an NxN regime map over (0,6]^2")
    p.add_argument("--out-dir")
    p.add_argument("--config")

    p = sub.add_parser("sweep-alpha", help="estimate the critical specialist rate")
    _add_geometry(p)
    p.add_argument("--beta", type=float)
    _add_init(p)
    _add_common(p, replicates=True)
    p.add_argument("--alpha-grid", help="start:stop:step or comma list (default 1:6:0.25)")
    p.add_argument("--workers", type=int, help="worker processes (default 1)")
    p.add_argument("--stop-at-first", action="store_const", const=True,
                   help="stop the scan at the first alpha where specialists win")

    p = sub.add_parser("couple", help="monotone couplings and inclusion checks")
    p.add_argument("--mode", choices=coupling.MODES)
    _add_geometry(p)
    _add_rates(p)
    _add_init(p)
    _add_common(p, replicates=True)

    p = sub.add_parser("dual-check", help="dual reconstruction against forward replay")
    _add_geometry(p)
    _add_rates(p)
    _add_init(p)
    _add_common(p, replicates=True)

    p = sub.add_parser("blocks", help="s-good / g-good tile maps at snapshot times")
    _add_geometry(p)
    _add_rates(p)
    _add_init(p)
    _add_common(p)
    p.add_argument("--snapshot-times", help="comma list of times (default t_end)")
    p.add_argument("--n", type=int, help="inner box divisor (default 4)")
    p.add_argument("--side", type=int, help="sub-square side (default ceil(L**0.1))")
    return ap


def read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValidationError(f"{path}:{lineno}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.lstrip("-").replace("-", "_")] = v
    return out


def resolve(parser: argparse.ArgumentParser, argv) -> argparse.Namespace:
    """Parse flags, fill gaps from the config file, then from defaults."""
    ns = parser.parse_args(argv)
    subparser = parser._subparsers._group_actions[0].choices[ns.command]
    actions = {a.dest: a for a in subparser._actions if a.dest not in ("help", "config")}
    if ns.config:
        for key, value in read_config(ns.config).items():
            if key not in actions:
                raise ValidationError(f"unknown config key {key!r} for {ns.command}")
            if getattr(ns, key) is None:
                act = actions[key]
                if act.const is True:
                    value = value.lower() in ("1", "true", "yes", "on")
                elif act.type is not None:
                    try:
                        value = act.type(value)
                    except ValueError as exc:
                        raise ValidationError(f"config key {key}: {exc}") from None
                if act.choices and value not in act.choices:
                    raise ValidationError(f"config key {key}: {value!r} not in {act.choices}")
                setattr(ns, key, value)
    for key in actions:
        if getattr(ns, key) is None:
            setattr(ns, key, DEFAULTS.get(key))
    return ns


def _spec(ns) -> HabitatSpec:
    return HabitatSpec(ns.d, ns.L, ns.R, ns.extent)


def _dens(ns):
    return (ns.init_density1, ns.init_density2, ns.init_density3)


def _manifest(ns, outputs) -> io.RunManifest:
    params = {k: v for k, v in sorted(vars(ns).items())
              if k not in ("command", "out_dir", "config", "seed")}
    m = io.RunManifest(ns.command, params, int(getattr(ns, "seed", 0) or 0), list(outputs))
    m.write(ns.out_dir)
    return m


def _path(ns, name):
    return os.path.join(ns.out_dir, name)


def _tag(t: float) -> str:
    return f"{t:g}".replace(".", "p")


# ---------------------------------------------------------------- subcommands

def cmd_simulate(ns) -> int:
    spec = _spec(ns)
    params = Params(ns.alpha, ns.beta)
    if ns.t_end < 0:
        raise ValidationError("t_end must be >= 0")
    snaps = sorted(set(_floats(ns.snapshot_times)) | {float(ns.t_end)})
    if any(not 0 <= t <= ns.t_end for t in snaps):
        raise ValidationError("snapshot times must lie in [0, t_end]")
    names = ["trajectory.csv"] + [f"snapshot_t{_tag(t)}.txt" for t in snaps]
    m = _manifest(ns, names)
    config = init_config(spec, _dens(ns), seed=rng(ns.seed, "init"))
    traj = run_direct(config, params, ns.t_end, rng(ns.seed, "dynamics"),
                      sample_dt=ns.sample_dt, snapshot_times=snaps, backend=ns.backend)
    io.write_trajectory(_path(ns, names[0]), traj, m.digest)
    for t, name in zip(snaps, names[1:]):
        io.write_snapshot(_path(ns, name), traj.snapshots[t], t, ns.seed, m.digest)
    rho = traj.densities[-1]
    print(f"t={ns.t_end:g} rho1={rho[1]:.4f} rho2={rho[2]:.4f} rho3={rho[3]:.4f} "
          f"events={traj.n_events}")
    if ns.threshold is not None:
        types = ([int(v) for v in _floats(ns.types)] if ns.types
                 else [k for k, p in zip((1, 2, 3), _dens(ns)) if p > 0])
        t_from = ns.t_end / 2 if ns.t_from is None else ns.t_from
        ok = experiments.coexistence_check(traj, types, ns.threshold, t_from)
        print(f"coexistence {','.join(map(str, types))} above {ns.threshold:g} "
              f"from t={t_from:g}: {'yes' if ok else 'no'}")
    return 0


def cmd_meanfield(ns) -> int:
    p = meanfield.MeanFieldParams(ns.a, ns.b)
    start = _floats(ns.start)
    if len(start) != 4:
        raise ValidationError("--start needs four values v11,v22,v13,v23")
    every = max(1, int(round(ns.sample_dt / ns.h)))
    m = _manifest(ns, ["meanfield.csv"])
    times, states = meanfield.integrate(start, p, ns.t_end, ns.h, every=every)
    io.write_meanfield(_path(ns, "meanfield.csv"), times, states, m.digest)
    v = states[-1]
    print(f"t={times[-1]:g} v11={v[0]:.8f} v22={v[1]:.8f} v13={v[2]:.8f} v23={v[3]:.8f} "
          f"regime={meanfield.classify_regime(p)}")
    return 0


def cmd_equilibria(ns) -> int:
    p = meanfield.MeanFieldParams(ns.a, ns.b)
    names = ["equilibria.csv"] + (["regimes.csv"] if ns.grid else [])
    m = _manifest(ns, names)
    rows = []
    for name, st, stab in meanfield.equilibria(p):
        rows.append([name, *(float(v) for v in st), stab])
        print(f"{name:16s} " + " ".join(f"{float(v):.6f}" for v in st) + f"  {stab}")
    io.write_csv(_path(ns, names[0]), ("name", "v11", "v22", "v13", "v23", "stability"),
                 rows, m.digest)
    print(f"regime: {meanfield.classify_regime(p)}")
    if ns.grid:
        axis = [6.0 * (k + 1) / ns.grid for k in range(ns.grid)]
        io.write_regimes(_path(ns, names[1]), meanfield.regime_grid(axis, axis), m.digest)
    return 0


def cmd_sweep(ns) -> int:
    spec = _spec(ns)
    grid = experiments.parse_grid(ns.alpha_grid)
    m = _manifest(ns, ["sweep.csv"])
    res = experiments.critical_alpha(ns.beta, spec, grid, ns.t_end, ns.replicates, ns.seed,
                                     _dens(ns), workers=ns.workers,
                                     stop_at_first=bool(ns.stop_at_first))
    io.write_sweep(_path(ns, "sweep.csv"), [res], m.digest)
    print(f"alpha_hat={res.alpha_hat if res.found else 'not_found'}")
    return 0


def cmd_couple(ns) -> int:
    spec = _spec(ns)
    params = Params(ns.alpha, ns.beta)
    dens = _dens(ns)
    if ns.mode == coupling.MODES[0]:
        dens = (dens[0], dens[1], 0.0)  # this mode starts without 3's
    m = _manifest(ns, ["couple.csv"])
    rows, bad = [], 0
    for k in range(ns.replicates):
        g = rng(ns.seed, "couple", k)
        init = init_config(spec, dens, seed=g)
        run = coupling.run_coupled(ns.mode, init, params, ns.t_end, g)
        bad += len(run.violations)
        rows.append([k, run.n_events, run.n_checks, len(run.violations)])
    io.write_csv(_path(ns, "couple.csv"), ("trial", "events", "checks", "violations"),
                 rows, m.digest)
    print(f"{ns.mode}: {bad} inclusion violations in {ns.replicates} trials")
    return 0 if bad == 0 else 1


def cmd_dual(ns) -> int:
    spec = _spec(ns)
    params = Params(ns.alpha, ns.beta)
    m = _manifest(ns, ["dual_check.csv"])
    rows, agree = [], 0
    for k in range(ns.replicates):
        g = rng(ns.seed, "dual", k)
        xi0 = init_config(spec, _dens(ns), seed=g)
        log = graphical.generate_event_log(spec, params, ns.t_end, g)
        forward = graphical.evolve_by_events(xi0, log).states
        backward = dual.reconstruct_all(log, xi0)
        hits = int(np.count_nonzero(forward == backward))
        agree += hits == spec.n_sites
        rows.append([k, len(log), hits, spec.n_sites])
    io.write_csv(_path(ns, "dual_check.csv"), ("instance", "events", "agreeing_sites", "sites"),
                 rows, m.digest)
    print(f"{agree}/{ns.replicates} exact agreements")
    return 0 if agree == ns.replicates else 1


def cmd_blocks(ns) -> int:
    spec = _spec(ns)
    params = Params(ns.alpha, ns.beta)
    bs = experiments.BlockSpec(ns.L, ns.n, ns.side)
    snaps = sorted(set(_floats(ns.snapshot_times)) or {float(ns.t_end)})
    if any(not 0 <= t <= ns.t_end for t in snaps):
        raise ValidationError("snapshot times must lie in [0, t_end]")
    names = [f"blocks_t{_tag(t)}.txt" for t in snaps] + ["boundary_profile.csv"]
    m = _manifest(ns, names)
    config = init_config(spec, _dens(ns), seed=rng(ns.seed, "init"))
    traj = run_direct(config, params, ns.t_end, rng(ns.seed, "dynamics"),
                      sample_dt=None, snapshot_times=snaps)
    prof_rows = []
    for t, name in zip(snaps, names):
        snap = traj.snapshots[t]
        bmap = experiments.block_map(snap, bs)
        io.write_block_map(_path(ns, name), bmap,
                           [f"t={t!r} n={bs.n} side={bs.side} rows=tile index along axis 0"],
                           m.digest)
        n_s, n_g = int(np.sum(bmap == "S")), int(np.sum(bmap == "G"))
        print(f"t={t:g} s-good={n_s} g-good={n_g} tiles={bmap.size}")
        for dist, rho in experiments.boundary_profile(snap).items():
            prof_rows.append([t, dist, *rho])
    io.write_csv(_path(ns, names[-1]), ("t", "edge_distance", "rho0", "rho1", "rho2", "rho3"),
                 prof_rows, m.digest)
    return 0


COMMANDS = {"simulate": cmd_simulate, "meanfield": cmd_meanfield, "equilibria": cmd_equilibria,
            "sweep-alpha": cmd_sweep, "couple": cmd_couple, "dual-check": cmd_dual,
            "blocks": cmd_blocks}


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        ns = resolve(parser, argv)
        return COMMANDS[ns.command](ns)
    except SystemExit as exc:
        return int(exc.code or 0)
    except ValidationError as exc:
        print(f"hetcp: error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001
        print(f"hetcp: failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def main(argv=None) -> None:
    sys.exit(run_command(argv))


if __name__ == "__main__":
    main()
