"""Time the numba kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel with the best-of-N wall time for each backend.
The first numba call (compilation) is excluded. The package dispatches
max_multiplicity to numpy even on the numba backend, since numba loses there.
"""

import argparse
import time

import numpy as np

from fo_lab import _kernels


def _inputs(rng):
    table = rng.random((4096, 256)) < 0.05
    r_idx = rng.integers(4096, size=200_000)
    k_idx = rng.integers(256, size=(200_000, 16))
    pairs, n, ell, q = 200_000, 2, 2, 17
    lwe = (rng.integers(-1, 2, size=(pairs, n, ell)), rng.integers(-1, 2, size=(pairs, n, ell)),
           rng.integers(-1, 2, size=(pairs, n)), rng.integers(-1, 2, size=(pairs, n)),
           rng.integers(-1, 2, size=(pairs, ell)), np.array([1, 0]), q)
    codes = rng.integers(0, 1 << 16, size=1_000_000)
    values = rng.random(500_000)
    return {
        "key_batch_fail_counts": (table, r_idx, k_idx),
        "lwe_fail": tuple(np.ascontiguousarray(a, dtype=np.int64) if isinstance(a, np.ndarray) else a for a in lwe),
        "max_multiplicity": (codes,),
        "tail_fraction": (values, np.ones_like(values), np.array([0.01, 0.1, 0.5, 0.9])),
    }


def _best(fn, args, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not _kernels.NUMBA_KERNELS:
        raise SystemExit("numba is not installed; nothing to compare")
    inputs = _inputs(np.random.default_rng(args.seed))
    print(f"{'kernel':<24}{'numpy [ms]':>12}{'numba [ms]':>12}{'speedup':>10}")
    for name, fargs in inputs.items():
        fast, slow = _kernels.NUMBA_KERNELS[name], _kernels.NUMPY_KERNELS[name]
        a, b = fast(*fargs), slow(*fargs)  # compile, and check agreement
        if not np.array_equal(np.asarray(a), np.asarray(b)) and not np.allclose(a, b):
            raise SystemExit(f"{name}: backends disagree")
        t_np, t_nb = _best(slow, fargs, args.repeat), _best(fast, fargs, args.repeat)
        print(f"{name:<24}{t_np * 1e3:>12.2f}{t_nb * 1e3:>12.2f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
