import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from cknlab import kernels

needs_numba = pytest.mark.skipif(kernels.kp_rows_numba is None, reason="numba unavailable or disabled")

finite = st.floats(min_value=-1e3, max_value=1e3, allow_nan=False)


@settings(max_examples=60, deadline=None)
@given(
    p=st.floats(min_value=1.01, max_value=6.0),
    X=hnp.arrays(float, (16, 3), elements=finite),
    Y=hnp.arrays(float, (16, 3), elements=finite),
)
def test_kp_numpy_matches_loop(p, X, Y):
    X[0] = 0.0  # exercise the X = 0 branch
    np.testing.assert_allclose(kernels.kp_rows_numpy(p, X, Y), kernels._kp_rows_loop(p, X, Y),
                               rtol=1e-12, atol=1e-9 * (1 + np.abs(Y).max() ** p + np.abs(X).max() ** p))


@needs_numba
def test_kp_numba_matches_numpy():
    rng = np.random.default_rng(0)
    X, Y = rng.standard_normal((2, 5000, 4))
    X[:10] = 0.0
    for p in (1.3, 2.0, 3.7):
        np.testing.assert_allclose(kernels.kp_rows_numba(p, X, Y), kernels.kp_rows_numpy(p, X, Y), rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(hnp.arrays(float, (50, 3), elements=st.floats(min_value=-1e6, max_value=1e6)))
def test_block_moments_numpy_matches_loop(v):
    v = v.copy()
    v[::7, 1] = np.nan
    v[3, 2] = np.inf
    a = kernels.block_moments_numpy(v)
    b = kernels._block_moments_loop(v)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[3], b[3])
    np.testing.assert_allclose(a[1], b[1], rtol=1e-9, atol=1e-6)
    np.testing.assert_allclose(a[2], b[2], rtol=1e-8, atol=1e-3)


@needs_numba
def test_block_moments_numba_matches_numpy():
    v = np.random.default_rng(1).standard_normal((10_000, 6))
    v[::97, 2] = np.nan
    a = kernels.block_moments_numpy(v)
    b = kernels.block_moments_numba(v)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=1e-10)


@pytest.mark.parametrize("N, alpha, lemma36", [(4, 0.0, False), (1, -0.67, False), (3, -1.2, True), (2, -1.0, False)])
def test_mode_table_backends_agree(N, alpha, lemma36):
    a = kernels.mode_factor_table_numpy(N, alpha, 200, lemma36)
    b = kernels._mode_factor_loop(N, alpha, 200, lemma36)
    np.testing.assert_allclose(a, b, rtol=1e-14, equal_nan=True)
    if kernels.mode_factor_table_numba is not None:
        np.testing.assert_allclose(kernels.mode_factor_table_numba(N, alpha, 200, lemma36), a, rtol=1e-14, equal_nan=True)


def test_singular_k_is_nan():
    # N + 2k + 2 alpha = 0 at k = 1
    table = kernels.mode_factor_table_numpy(1, -1.5, 3, False)
    assert np.isnan(table[1]) and np.isfinite(table[0])


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, CKNLAB_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c", "from cknlab import kernels; print(kernels.BACKEND, kernels.kp_rows_numba)"],
        capture_output=True, text=True, env=env, check=True,
    )
    assert out.stdout.split() == ["numpy", "None"]
