"""Compare the compiled kernel against the numpy fallback.

Runs the same simulation on both backends, times them, and verifies the
outputs are bitwise identical (they must be; the fallback is a contract,
not an approximation). Usage:

    python3 benchmarks/bench_kernels.py --iterations 2000000 --chemistry NMC
"""

import argparse
import time

import numpy as np

from evflow._backend import BACKEND_NAMES, get_backend
from evflow.engine import run_simulation
from evflow.ingest import bundled_manifest_path, load_network

FLOAT_FIELDS = ("ep", "pb", "bv", "vm", "land", "sea", "total")


def bench(network, chemistry, iterations, seed, backend, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        started = time.perf_counter()
        result = run_simulation(network, chemistry, iterations, seed, backend=backend)
        best = min(best, time.perf_counter() - started)
    return result, best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--iterations", type=int, default=2_000_000)
    parser.add_argument("--chemistry", default="NMC")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    network = load_network(bundled_manifest_path())
    available = []
    for name in BACKEND_NAMES:
        try:
            get_backend(name)
            available.append(name)
        except ImportError:
            print(f"{name}: not available in this install")

    results = {}
    timings = {}
    for name in available:
        result, seconds = bench(network, args.chemistry, args.iterations, args.seed,
                                name, args.repeats)
        results[name], timings[name] = result, seconds
        rate = args.iterations / seconds
        print(f"{name:>9}: {seconds:8.3f}s  {rate / 1e6:7.2f}M iterations/s  "
              f"mean={result.mean():.6f} kg/kWh")

    if len(available) == 2:
        a, b = (results[n] for n in available)
        assert np.array_equal(a.idx, b.idx), "choice indices diverged"
        for field in FLOAT_FIELDS:
            assert getattr(a, field).tobytes() == getattr(b, field).tobytes(), \
                f"{field} diverged between backends"
        print(f"bitwise identical across backends: idx + {', '.join(FLOAT_FIELDS)}")
        print(f"speedup: {timings['numpy'] / timings['compiled']:.2f}x")


if __name__ == "__main__":
    main()
