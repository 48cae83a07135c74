"""Time the Jacobi eigensolver with the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--sizes 4 8 16 32] [--repeat 5]

Prints one row per matrix size with the median wall time of each backend,
the speedup, and the largest eigenvalue disagreement between the two.
"""
import argparse
import statistics
import time

import numpy as np

from relmeas import linalg
from relmeas.linalg import _backend


def random_hermitian(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (g + g.conj().T) / 2


def time_backend(name, mats, repeat):
    _backend.use_backend(name)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        vals = [linalg.eigh(h)[0] for h in mats]
        times.append(time.perf_counter() - t0)
    return statistics.median(times), vals


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", type=int, nargs="+", default=[4, 8, 16, 32])
    p.add_argument("--count", type=int, default=10, help="matrices per size")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    backends = _backend.available_backends()
    start = _backend.current_backend()
    rng = np.random.default_rng(args.seed)
    print(f"backends: {', '.join(backends)}")
    print(f"{'n':>4} {'python [s]':>12} {'compiled [s]':>13} {'speedup':>8} {'max |dλ|':>10}")
    try:
        for n in args.sizes:
            mats = [random_hermitian(rng, n) for _ in range(args.count)]
            t_py, v_py = time_backend("python", mats, args.repeat)
            if "compiled" in backends:
                t_c, v_c = time_backend("compiled", mats, args.repeat)
                diff = max(float(np.max(np.abs(a - b))) for a, b in zip(v_py, v_c))
                print(f"{n:>4} {t_py:>12.4f} {t_c:>13.4f} {t_py / t_c:>8.1f} {diff:>10.1e}")
            else:
                print(f"{n:>4} {t_py:>12.4f} {'n/a':>13} {'n/a':>8} {'n/a':>10}")
    finally:
        _backend.use_backend(start)


if __name__ == "__main__":
    main()
