"""Compare the compiled and pure-Python event loops.

Both backends consume the same pre-drawn random numbers, so each case also
checks that they produce identical trajectories.

    python benchmarks/bench_kernels.py --repeats 3
"""
import argparse
import time

import numpy as np

from hetcp import kernels
from hetcp.engine import Params, init_config, run_direct
from hetcp.engine.graphical import evolve_by_events, generate_event_log
from hetcp.habitat import HabitatSpec

# (label, spec, params, t_end)
CASES = [
    ("small R=1", HabitatSpec(2, 5, 1, 40), Params(3.0, 2.0), 40.0),
    ("wide R=4", HabitatSpec(2, 5, 4, 40), Params(0.5, 0.2), 40.0),
    ("specialists", HabitatSpec(2, 10, 1, 80), Params(3.0, 0.0), 20.0),
]


def _best(fn, repeats):
    best, out = float("inf"), None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def bench_direct(spec, params, t_end, backend, repeats, seed):
    cfg = init_config(spec, (0.25, 0.25, 0.25), seed=seed)
    return _best(lambda: run_direct(cfg, params, t_end, seed, backend=backend), repeats)


def bench_replay(spec, params, t_end, backend, repeats, seed):
    cfg = init_config(spec, (0.25, 0.25, 0.25), seed=seed)
    log = generate_event_log(spec, params, t_end, seed)
    return _best(lambda: evolve_by_events(cfg, log, backend=backend), repeats)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    if "compiled" not in kernels.AVAILABLE:
        print("compiled kernels are not built; only the Python backend can run")
        return 1
    print(f"{'case':<14}{'loop':<8}{'compiled s':>12}{'python s':>12}{'speedup':>10}  same")
    for label, spec, params, t_end in CASES:
        for name, bench in (("direct", bench_direct), ("replay", bench_replay)):
            tc, a = bench(spec, params, t_end, "compiled", args.repeats, args.seed)
            tp, b = bench(spec, params, t_end, "python", args.repeats, args.seed)
            if name == "direct":
                same = np.array_equal(a.counts, b.counts) and np.array_equal(a.times, b.times)
            else:
                same = np.array_equal(a.states, b.states)
            print(f"{label:<14}{name:<8}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}  {same}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
