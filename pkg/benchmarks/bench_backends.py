"""Slots per second of the compiled kernels against the pure-Python fallback.

Each backend runs in its own interpreter because the backend is fixed at
import time. The first short run absorbs JIT compilation (or loads the cache)
and is not timed.

    python3 benchmarks/bench_backends.py --variant BWAR-ID --lam 0.08
"""
import argparse
import json
import os
import subprocess
import sys

CHILD = r"""
import json, sys, time
from bwar import SimConfig, Simulation
from bwar._jit import backend_name
a = json.loads(sys.argv[1])
cfg = SimConfig(a["cells"], a["nodes"], a["lam"], a["variant"], slots=a["slots"] + 64, seed=a["seed"])
sim = Simulation(cfg)
sim.advance(64)
t0 = time.perf_counter()
sim.advance(a["slots"])
dt = time.perf_counter() - t0
print(json.dumps({"backend": backend_name(), "slots": a["slots"], "seconds": dt}))
"""


def measure(disable, args, slots):
    env = dict(os.environ, BWAR_DISABLE_NUMBA="1" if disable else "0")
    payload = json.dumps(dict(cells=args.cells, nodes=args.nodes, lam=args.lam,
                              variant=args.variant, seed=args.seed, slots=slots))
    out = subprocess.run([sys.executable, "-c", CHILD, payload], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--variant", default="BWAR-ID")
    p.add_argument("--cells", type=int, default=25)
    p.add_argument("--nodes", type=int, default=44)
    p.add_argument("--lam", type=float, default=0.08)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--slots", type=int, default=50_000, help="timed slots for the compiled backend")
    p.add_argument("--fallback-slots", type=int, default=1_000)
    args = p.parse_args(argv)

    fast = measure(False, args, args.slots)
    slow = measure(True, args, args.fallback_slots)
    rate = {r["backend"]: r["slots"] / r["seconds"] for r in (fast, slow)}
    print(f"{args.variant} C={args.cells} N={args.nodes} lambda={args.lam}")
    for name, r in rate.items():
        print(f"  {name:>6}: {r:12.0f} slots/s")
    print(f"  speedup: {rate['numba'] / rate['python']:.1f}x")


if __name__ == "__main__":
    main()
