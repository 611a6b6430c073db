"""Compare the compiled kernels with the pure-Python fallback.

    python benchmarks/bench_backends.py --horizon 100000 --repeat 3

Times path sampling and one episode per policy on each backend, checks the
trajectories agree, and prints slots per second and the speedup.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from restless_asr import instance_stats
from restless_asr._backend import compiled
from restless_asr.engine import make_policy_spec, run_episode, sample_paths
from restless_asr.scenarios import load_scenario


def best_of(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", default="fig_5arm")
    ap.add_argument("--horizon", type=int, default=100_000)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--big-l", type=float, default=1.0, help="L override so every policy exploits")
    args = ap.parse_args()
    if compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    arms = list(load_scenario(args.scenario).arms)
    stats = instance_stats(arms)
    T = args.horizon
    print(f"{args.scenario}: {len(arms)} arms, horizon {T}, best of {args.repeat}")
    print(f"{'task':<14}{'python s':>11}{'compiled s':>12}{'speedup':>9}{'Mslot/s':>9}  same")

    tasks = {"sample_paths": None, "asr": "asr", "dsee": "dsee", "rca": "rca"}
    for label, name in tasks.items():
        timings, outs = {}, {}
        for backend in ("python", "compiled"):
            if name is None:
                fn = lambda b=backend: sample_paths(arms, T, np.random.default_rng(0), stats, b)
            else:
                spec = make_policy_spec(name, stats, big_l=args.big_l)
                fn = lambda b=backend, s=spec: run_episode(arms, s, T, 0, stats=stats, backend=b).actions
            timings[backend], outs[backend] = best_of(fn, args.repeat)
        same = np.array_equal(outs["python"], outs["compiled"])
        py, c = timings["python"], timings["compiled"]
        print(f"{label:<14}{py:>11.4f}{c:>12.4f}{py / c:>9.1f}{T / c / 1e6:>9.2f}  {same}")


if __name__ == "__main__":
    main()
