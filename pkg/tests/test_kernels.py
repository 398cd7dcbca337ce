import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bubbly import _kernels_py, kernels

_kernels_c = pytest.importorskip("bubbly._kernels")

A, B, BETA, G = 3.0, 1.0, 0.5, 1.2
XB = (BETA * A - B) / (1 + BETA)
POLE = BETA * A / (1 + BETA)


def same(x, y):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    assert x.shape == y.shape
    np.testing.assert_array_equal(x, y)


def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"


@given(st.floats(0.01, 0.6), st.floats(0.0, 0.05), st.floats(0.7, 1.3))
def test_samuelson_orbit(x1, x2, gd):
    same(_kernels_py.samuelson_orbit(x1, x2, A, B, BETA, gd / G, 200),
         _kernels_c.samuelson_orbit(x1, x2, A, B, BETA, gd / G, 200))


def test_samuelson_scan_and_escape():
    grid = np.linspace(1e-6, POLE * (1 - 1e-6), 500)
    args = (0.01, A, B, BETA, 1 / G, XB, 0.0, 1.0, 0.0, 0.1, 0.0, POLE, 300)
    same(_kernels_py.samuelson_scan(grid, *args), _kernels_c.samuelson_scan(grid, *args))
    for x in grid[::50]:
        assert _kernels_py.samuelson_escape(x, *args) == _kernels_c.samuelson_escape(x, *args)


@given(st.floats(0.0, 0.5), st.floats(0.0, 0.05))
def test_price_recursion(P0, D0):
    same(_kernels_py.price_recursion(P0, A, B, BETA, G, 1.0, D0, 150),
         _kernels_c.price_recursion(P0, A, B, BETA, G, 1.0, D0, 150))


@given(st.floats(0.5, 4.0), st.floats(0.0, 0.01), st.floats(0.2, 0.6))
def test_leverage_orbit(y0, x2, alpha):
    same(_kernels_py.leverage_orbit_cd(y0, x2, 1.0, alpha, 0.1, 0.3, 1.02, 300),
         _kernels_c.leverage_orbit_cd(y0, x2, 1.0, alpha, 0.1, 0.3, 1.02, 300))


def test_environment_forces_fallback():
    env = dict(os.environ, BUBBLY_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from bubbly import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
