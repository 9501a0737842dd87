import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hodgelocus import _fpenum_py, _kernels

compiled = pytest.importorskip("hodgelocus._fpenum")


def random_R(rng, n):
    A = rng.normal(size=(n, n)) + n * np.eye(n)
    R = np.linalg.qr(A)[1]
    return R * np.sign(np.diag(R))[:, None]


def as_set(points):
    return {tuple(int(x) for x in p) for p in np.asarray(points)}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 6), st.floats(0.0, 30.0))
def test_compiled_matches_python(seed, n, r2):
    R = random_R(np.random.default_rng(seed), n)
    a = as_set(compiled.fincke_pohst(R, r2))
    b = as_set(_fpenum_py.fincke_pohst(R, r2))
    assert a == b
    assert (0,) * n in a
    for x in a:
        assert np.linalg.norm(R @ np.array(x, float)) ** 2 <= r2 + 1e-9


def test_against_box():
    R = np.array([[1.0, 0.5], [0.0, 2.0]])
    got = as_set(_kernels.fincke_pohst(R, 5.0))
    box = {(a, b) for a in range(-6, 7) for b in range(-6, 7) if np.linalg.norm(R @ np.array([a, b], float)) ** 2 <= 5.0}
    assert got == box


def test_zero_dimension():
    assert np.asarray(_fpenum_py.fincke_pohst(np.zeros((0, 0)), 1.0)).shape == (1, 0)


def test_backend_selection():
    assert _kernels.BACKEND == "compiled"
    env = dict(os.environ, HODGELOCUS_PURE_PYTHON="1")
    code = "from hodgelocus import _kernels; print(_kernels.BACKEND)"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
