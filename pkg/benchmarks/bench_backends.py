"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_backends.py [n_samples]
"""

import sys

from specstack.bench import run_benchmark

if __name__ == "__main__":
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 6
    for line in run_benchmark(n_samples=n):
        print(line)
