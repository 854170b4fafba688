"""Throughput of the compiled chain kernel vs the pure-Python fallback,
plus a bitwise-equality check of their trajectories.

Run:  python benchmarks/bench_chain.py [steps]
"""

import sys
import time

import numpy as np

from dimervar import _chain_py, sampler
from dimervar.lattice import aztec_diamond


def main():
    steps = int(sys.argv[1]) if len(sys.argv) > 1 else 1 << 20
    region = aztec_diamond(16)
    idx = region.index()
    lo, hi = sampler._extremes(region)
    raw = sampler.raw_words(7, 0, 0, steps)

    kernels = [("python", _chain_py)]
    if sampler.backend() == "compiled":
        from dimervar import _chain

        kernels.append(("compiled", _chain))

    results = {}
    for name, mod in kernels:
        top = idx.heights_to_array(hi)
        bot = idx.heights_to_array(lo)
        n = steps if name == "compiled" else min(steps, 1 << 16)
        t0 = time.perf_counter()
        mod.run_pair(top, bot, idx.nbr4, idx.interior, raw[:n])
        dt = time.perf_counter() - t0
        results[name] = (n / dt, top, bot, n)
        print(f"{name:>9}: {n / dt / 1e6:8.2f} M coupled steps/s  ({n} steps in {dt:.2f}s)")

    if len(results) == 2:
        n = results["python"][3]
        top_c = idx.heights_to_array(hi)
        bot_c = idx.heights_to_array(lo)
        from dimervar import _chain

        _chain.run_pair(top_c, bot_c, idx.nbr4, idx.interior, raw[:n])
        same = np.array_equal(top_c, results["python"][1]) and np.array_equal(
            bot_c, results["python"][2]
        )
        print(f"trajectories bitwise identical over {n} steps: {same}")
        print(f"speedup: {results['compiled'][0] / results['python'][0]:.0f}x")


if __name__ == "__main__":
    main()
