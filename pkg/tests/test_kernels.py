import numpy as np
import pytest
from hypothesis import given, strategies as st

from driftdiff import fft, kernels
from driftdiff import _kernels_py

needs_ext = pytest.mark.skipif(not kernels.compiled_available(), reason="extension not built")


@needs_ext
@given(n=st.sampled_from([2, 4, 5, 8]), d=st.integers(1, 3), seed=st.integers(0, 2 ** 32 - 1))
def test_stencil_backends_agree(n, d, seed):
    r = np.random.default_rng(seed)
    src = r.random(n ** d)
    out_c, out_p = np.empty_like(src), np.empty_like(src)
    w = (0.5, 0.3, 0.2 / (2 * d - 1) if d > 1 else 0.2)
    kernels.get_backend("cython").apply_stencil(src, out_c, n, d, *w)
    _kernels_py.apply_stencil(src, out_p, n, d, *w)
    np.testing.assert_allclose(out_c, out_p, rtol=0, atol=1e-15)


@needs_ext
def test_evolve_backends_agree_with_trajectory():
    src = np.random.default_rng(1).random(64)
    tc, tp = np.empty((7, 64)), np.empty((7, 64))
    fc = kernels.get_backend("cython").evolve(src, 7, 8, 2, 0.2, 0.25, 0.15, tc)
    fp = _kernels_py.evolve(src, 7, 8, 2, 0.2, 0.25, 0.15, tp)
    np.testing.assert_allclose(fc, fp, atol=1e-15)
    np.testing.assert_allclose(tc, tp, atol=1e-15)
    np.testing.assert_array_equal(tc[-1], fc)


@needs_ext
@given(d=st.integers(1, 3), seed=st.integers(0, 2 ** 32 - 1))
def test_walk_backends_identical(d, seed):
    r = np.random.default_rng(seed)
    n = 5
    start = r.integers(0, n ** d, size=200).astype(np.int64)
    u = r.random((200, 9))
    w = np.concatenate(([0.1], 0.1 + np.cumsum(r.dirichlet(np.ones(2 * d)) * 0.9)[:-1]))
    a = kernels.get_backend("cython").walk(start, u, w, n, d)
    b = _kernels_py.walk(start, u, w, n, d)
    np.testing.assert_array_equal(a, b)


@pytest.mark.parametrize("backend", ["python", pytest.param("cython", marks=needs_ext)])
@pytest.mark.parametrize("n,d", [(1, 1), (2, 1), (8, 1), (64, 1), (4, 2), (16, 2), (4, 3)])
def test_fft_matches_numpy(backend, n, d):
    x = np.random.default_rng(n * 10 + d).standard_normal(n ** d) + 0j
    ours = fft.fftn(x, n, d, backend)
    ref = np.fft.fftn(x.reshape((n,) * d)).reshape(-1)
    np.testing.assert_allclose(ours, ref, atol=1e-12 * max(1, n ** d))
    np.testing.assert_allclose(fft.ifftn(ours, n, d, backend), x, atol=1e-13)


@pytest.mark.parametrize("n,d", [(3, 1), (6, 2), (12, 1)])
def test_dense_fallback_for_other_lengths(n, d):
    x = np.random.default_rng(0).random(n ** d)
    ref = np.fft.fftn(x.reshape((n,) * d)).reshape(-1)
    np.testing.assert_allclose(fft.fftn(x, n, d), ref, atol=1e-12)


def test_dense_fallback_respects_cap():
    from driftdiff import config

    config.set_dense_cap(100)
    try:
        with pytest.raises(ValueError, match="dense cap"):
            fft.fftn(np.ones(12 ** 2), 12, 2)
    finally:
        config.set_dense_cap(None)


@given(seed=st.integers(0, 2 ** 32 - 1), d=st.integers(1, 2))
def test_unitary_transform_preserves_norm(seed, d):
    x = np.random.default_rng(seed).standard_normal(8 ** d) + 0j
    y = fft.unitary_fftn(x, 8, d)
    assert abs(np.linalg.norm(y) - np.linalg.norm(x)) < 1e-12 * np.linalg.norm(x)
    np.testing.assert_allclose(fft.unitary_fftn(y, 8, d, inverse=True), x, atol=1e-13)


def test_backend_names():
    assert kernels.BACKEND in ("cython", "python")
    assert kernels.get_backend("python") is _kernels_py
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_env_var_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, DRIFTDIFF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import driftdiff.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
