import os
import subprocess
import sys

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from fo_lab import _kernels

BACKENDS = [_kernels.NUMPY_KERNELS, _kernels.LOOP_KERNELS] + ([_kernels.NUMBA_KERNELS] if _kernels.NUMBA_KERNELS else [])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(1, 30), st.integers(1, 9))
def test_key_batch_fail_counts_agree(seed, n, b):
    rng = np.random.default_rng(seed)
    table = rng.random((17, 11)) < 0.3
    r_idx = rng.integers(17, size=n).astype(np.int64)
    k_idx = rng.integers(11, size=(n, b)).astype(np.int64)
    want = [int(sum(table[r, k] for k in row)) for r, row in zip(r_idx, k_idx)]
    for ks in BACKENDS:
        assert ks["key_batch_fail_counts"](table, r_idx, k_idx).tolist() == want


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from([7, 11, 17]), st.integers(1, 3))
def test_lwe_fail_agree(seed, q, ell):
    rng = np.random.default_rng(seed)
    n, pairs = 2, 25
    S = rng.integers(-2, 3, size=(pairs, n, ell)).astype(np.int64)
    E = rng.integers(-2, 3, size=(pairs, n, ell)).astype(np.int64)
    sp = rng.integers(-2, 3, size=(pairs, n)).astype(np.int64)
    ep = rng.integers(-2, 3, size=(pairs, n)).astype(np.int64)
    epp = rng.integers(-2, 3, size=(pairs, ell)).astype(np.int64)
    mbits = rng.integers(0, 2, size=ell).astype(np.int64)
    outs = [ks["lwe_fail"](S, E, sp, ep, epp, mbits, q).tolist() for ks in BACKENDS]
    assert all(o == outs[0] for o in outs)


@settings(deadline=None)
@given(hnp.arrays(np.int64, st.integers(0, 60), elements=st.integers(-5, 5)))
def test_max_multiplicity_agree(codes):
    want = max(np.unique(codes, return_counts=True)[1], default=0) if codes.size else 0
    for ks in BACKENDS:
        assert int(ks["max_multiplicity"](codes)) == want


@settings(deadline=None)
@given(hnp.arrays(np.float64, st.integers(1, 40), elements=st.floats(0, 1)),
       st.lists(st.floats(0, 1), min_size=1, max_size=5))
def test_tail_fraction_agree(values, grid):
    grid = np.asarray(sorted(grid))
    weights = np.ones_like(values)
    want = [float(np.mean(values >= t)) for t in grid]
    for ks in BACKENDS:
        assert np.allclose(ks["tail_fraction"](values, weights, grid), want)


def test_backend_selection_is_reported():
    assert _kernels.BACKEND in ("numba", "numpy")


def test_env_flag_selects_numpy_backend():
    env = {**os.environ, "FO_LAB_KERNELS": "numpy"}
    res = subprocess.run([sys.executable, "-c", "from fo_lab import _kernels; print(_kernels.BACKEND)"],
                         capture_output=True, text=True, env=env, timeout=120)
    assert res.stdout.strip() == "numpy"
