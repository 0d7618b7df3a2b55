import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from evflow import _backend, _pykernels

native = pytest.importorskip("evflow._kernels")

shapes = st.tuples(st.integers(1, 40), st.integers(1, 40), st.integers(0, 2**32 - 1))


@given(shapes, st.floats(0.0, 1.0), st.integers(1, 4))
def test_edt_filters_parity(shape, p, threads):
    h, w, seed = shape
    bits = (np.random.default_rng(seed).random((h, w)) < p).astype(np.uint8)
    if bits.any():
        assert np.array_equal(native.edt_squared(bits, threads), _pykernels.edt_squared(bits))
    for n in range(0, 6):
        if n <= 4:
            assert np.array_equal(native.denoise(bits, n, threads), _pykernels.denoise(bits, n))
        if n >= 1:
            assert np.array_equal(native.fill(bits, n, threads), _pykernels.fill(bits, n))


@given(shapes, st.integers(1, 4))
def test_warp_and_relax_bit_identical(shape, threads):
    h, w, seed = shape
    rng = np.random.default_rng(seed)
    img, fx, fy = rng.random((h, w)) * 255, rng.normal(0, 3, (h, w)), rng.normal(0, 3, (h, w))
    assert native.warp_bilinear(img, fx, fy, threads).tobytes() == _pykernels.warp_bilinear(img, fx, fy).tobytes()
    ix, iy, it = rng.normal(0, 5, (3, h, w))
    for lam in (0.0, 50.0):
        a = native.hs_relax(ix, iy, it, lam, 7, fx, fy, threads)
        b = _pykernels.hs_relax(ix, iy, it, lam, 7, fx, fy)
        assert a[0].tobytes() == b[0].tobytes() and a[1].tobytes() == b[1].tobytes()


def test_zero_iterations_returns_input():
    u = np.arange(6.0).reshape(2, 3)
    z = np.zeros((2, 3))
    for k in (native, _pykernels):
        ru, rv = k.hs_relax(z, z, z, 1.0, 0, u, z, 1)
        assert np.array_equal(ru, u)


def test_use_and_env_selection():
    assert _backend.available() == ["native", "python"]
    prev = _backend.use("python")
    try:
        assert _backend.kernels() is _pykernels and _backend.name() == "python"
    finally:
        _backend.use(prev)
    with pytest.raises(ValueError):
        _backend.use("gpu")
    env = dict(os.environ, EVFLOW_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import evflow; print(evflow.backend_name())"],
                         env=env, capture_output=True, text=True).stdout.strip()
    assert out == "python"


def test_default_threads(monkeypatch):
    monkeypatch.setenv("EVFLOW_THREADS", "6")
    assert _backend.default_threads() == 6
    monkeypatch.setenv("EVFLOW_THREADS", "zero")
    assert _backend.default_threads() == 1
