"""Hot loops for failure statistics and spreadness enumeration.

Each kernel exists twice: a loop version compiled with numba ``@njit`` and a
vectorized numpy version. ``FO_LAB_KERNELS=numpy`` (or a missing numba)
selects the numpy versions; the default is numba. Both return identical
results, which the tests check directly.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

BACKEND = "numba" if (numba is not None and os.environ.get("FO_LAB_KERNELS", "numba").lower() != "numpy") else "numpy"


# key-batch failure counts -------------------------------------------------

def _key_batch_fail_counts_loops(table, r_idx, k_idx):
    n, b = k_idx.shape
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        row = r_idx[i]
        s = 0
        for j in range(b):
            if table[row, k_idx[i, j]]:
                s += 1
        out[i] = s
    return out


def _key_batch_fail_counts_numpy(table, r_idx, k_idx):
    return table[r_idx[:, None], k_idx].sum(axis=1).astype(np.int64)


# micro-LWE decryption failures ---------------------------------------------

def _lwe_fail_loops(S, E, sp, ep, epp, mbits, q):
    """fail[i] for pair i: key (S[i], E[i]), encryption noise (sp[i], ep[i], epp[i])."""
    n_pairs, n, ell = S.shape
    half = q // 2
    out = np.zeros(n_pairs, dtype=np.bool_)
    for i in range(n_pairs):
        for j in range(ell):
            acc = epp[i, j]
            for k in range(n):
                acc += sp[i, k] * E[i, k, j] - ep[i, k] * S[i, k, j]
            x = (acc + half * mbits[j]) % q
            bit = 1 if (4 * x >= q and 4 * x < 3 * q) else 0
            if bit != mbits[j]:
                out[i] = True
                break
    return out


def _lwe_fail_numpy(S, E, sp, ep, epp, mbits, q):
    noise = (np.einsum("ik,ikj->ij", sp, E) - np.einsum("ik,ikj->ij", ep, S) + epp)
    x = np.mod(noise + (q // 2) * mbits[None, :], q)
    bits = ((4 * x >= q) & (4 * x < 3 * q)).astype(np.int64)
    return np.any(bits != mbits[None, :], axis=1)


# maximal multiplicity of integer codes --------------------------------------

def _max_multiplicity_loops(codes):
    if codes.size == 0:
        return 0
    s = np.sort(codes)
    best = 1
    run = 1
    for i in range(1, s.size):
        if s[i] == s[i - 1]:
            run += 1
            if run > best:
                best = run
        else:
            run = 1
    return best


def _max_multiplicity_numpy(codes):
    if codes.size == 0:
        return 0
    _, counts = np.unique(codes, return_counts=True)
    return int(counts.max())


# tail fractions --------------------------------------------------------------

def _tail_fraction_loops(values, weights, grid):
    """Weighted fraction of values >= t for each t in grid."""
    total = 0.0
    for i in range(values.size):
        total += weights[i]
    out = np.zeros(grid.size, dtype=np.float64)
    for g in range(grid.size):
        acc = 0.0
        for i in range(values.size):
            if values[i] >= grid[g]:
                acc += weights[i]
        out[g] = acc / total
    return out


def _tail_fraction_numpy(values, weights, grid):
    mask = values[None, :] >= grid[:, None]
    return (mask * weights[None, :]).sum(axis=1) / weights.sum()


NUMPY_KERNELS = {
    "key_batch_fail_counts": _key_batch_fail_counts_numpy,
    "lwe_fail": _lwe_fail_numpy,
    "max_multiplicity": _max_multiplicity_numpy,
    "tail_fraction": _tail_fraction_numpy,
}

LOOP_KERNELS = {
    "key_batch_fail_counts": _key_batch_fail_counts_loops,
    "lwe_fail": _lwe_fail_loops,
    "max_multiplicity": _max_multiplicity_loops,
    "tail_fraction": _tail_fraction_loops,
}

if numba is not None:
    NUMBA_KERNELS = {k: numba.njit(cache=True)(f) for k, f in LOOP_KERNELS.items()}
else:  # pragma: no cover
    NUMBA_KERNELS = {}

# numba's sort loses to np.unique here (see benchmarks/bench_kernels.py), so keep numpy for it
_ACTIVE = ({**NUMBA_KERNELS, "max_multiplicity": _max_multiplicity_numpy} if BACKEND == "numba"
           else NUMPY_KERNELS)


def key_batch_fail_counts(table, r_idx, k_idx):
    return _ACTIVE["key_batch_fail_counts"](
        np.ascontiguousarray(table, dtype=np.bool_),
        np.ascontiguousarray(r_idx, dtype=np.int64),
        np.ascontiguousarray(k_idx, dtype=np.int64))


def lwe_fail(S, E, sp, ep, epp, mbits, q):
    as64 = lambda a: np.ascontiguousarray(a, dtype=np.int64)  # noqa: E731
    return _ACTIVE["lwe_fail"](as64(S), as64(E), as64(sp), as64(ep), as64(epp), as64(mbits), int(q))


def max_multiplicity(codes) -> int:
    return int(_ACTIVE["max_multiplicity"](np.ascontiguousarray(codes, dtype=np.int64)))


def tail_fraction(values, weights, grid):
    return _ACTIVE["tail_fraction"](
        np.ascontiguousarray(values, dtype=np.float64),
        np.ascontiguousarray(weights, dtype=np.float64),
        np.ascontiguousarray(grid, dtype=np.float64))
