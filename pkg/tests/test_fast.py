import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mep3 import _fast
from mep3._accel import HAVE_NUMBA
from mep3.discretize import RANDOM_OFFSETS

needs_numba = pytest.mark.skipif(not HAVE_NUMBA, reason="numba not installed")


@needs_numba
@given(st.integers(0, 2 ** 32 - 1), st.tuples(*[st.integers(1, 3)] * 3), st.booleans())
def test_det3_kron_paths_agree(seed, dims, cplx):
    rng = np.random.default_rng(seed)
    rows = []
    for n in dims:
        mats = [rng.standard_normal((n, n)) for _ in range(3)]
        if cplx:
            mats = [m + 1j * rng.standard_normal((n, n)) for m in mats]
        rows.append(tuple(mats))
    ref = _fast._det3_kron_numpy(rows)
    stacks = [np.ascontiguousarray(np.stack(r).astype(np.complex128)) for r in rows]
    out = np.empty(ref.shape, dtype=np.complex128)
    _fast._det3_kron_numba(*stacks, out)
    assert np.allclose(out, ref, atol=1e-12)


@needs_numba
@given(st.integers(0, 2 ** 32 - 1), st.tuples(*[st.integers(1, 5)] * 3))
def test_cramer_paths_agree(seed, dims):
    rng = np.random.default_rng(seed)
    c = [np.column_stack([rng.random(n) + o for o in offs])
         for n, offs in zip(dims, RANDOM_OFFSETS)]
    ref, det_ref = _fast._cramer_numpy(*c)
    m = int(np.prod(dims))
    sol, det = np.empty((m, 3)), np.empty(m)
    _fast._cramer_numba(*c, sol, det)
    assert np.allclose(det, det_ref, rtol=1e-10, atol=1e-13)
    assert np.allclose(sol, ref, rtol=1e-9, atol=1e-12)


def test_real_input_gives_real_delta():
    rows = [tuple(np.eye(2) * k for k in (1, 2, 3))] * 3
    assert np.isrealobj(_fast.det3_kron(rows))


def test_env_flag_selects_numpy_path():
    code = "import mep3._accel as a; print(a.USE_NUMBA)"
    for flag, expect in (("1", "False"), ("0", str(HAVE_NUMBA))):
        env = dict(os.environ, MEP3_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True,
                             text=True, check=True).stdout.strip()
        assert out == expect


def test_solve_direct_same_on_both_paths(tmp_path):
    code = ("from mep3 import gen_random_diag, solve_direct;"
            "from mep3.core import spectrum_array;import numpy as np, sys;"
            "p, o = gen_random_diag(3, seed=9);"
            "np.save(sys.argv[1], spectrum_array(solve_direct(p)))")
    results = []
    for flag in ("0", "1"):
        env = dict(os.environ, MEP3_DISABLE_NUMBA=flag)
        path = tmp_path / f"spec{flag}.npy"
        subprocess.run([sys.executable, "-c", code, str(path)], env=env, check=True)
        results.append(np.load(path))
    assert np.allclose(results[0], results[1], atol=1e-12)
