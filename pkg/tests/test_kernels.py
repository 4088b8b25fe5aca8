import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horokit import _kernels_py as py
from horokit import kernels


def _ball(rng, n, dim=2, r_max=1.0 - 1e-9):
    g = rng.normal(size=(n, dim)) + 1j * rng.normal(size=(n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.uniform(0, r_max, size=(n, 1))


def test_backend_flag_is_known():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("kind,dim", [(kernels.KIND_DISC, 1), (kernels.KIND_BALL, 2),
                                      (kernels.KIND_BALL, 3), (kernels.KIND_POLYDISC, 2)])
def test_backends_agree(kind, dim, rng):
    Z, W = _ball(rng, 500, dim), _ball(rng, 500, dim)
    a = kernels.pair_dist(kind, Z, W)
    b = py.pair_dist(kind, Z, W)
    np.testing.assert_allclose(a, b, rtol=1e-13, atol=1e-13)


def test_backends_agree_siegel(rng):
    w2 = rng.normal(size=300) + 1j * rng.normal(size=300)
    w1 = np.abs(w2) ** 2 + np.exp(rng.normal(size=300)) + 1j * rng.normal(size=300)
    Z = np.column_stack([w1, w2])
    W = Z[::-1].copy()
    np.testing.assert_allclose(kernels.pair_dist(kernels.KIND_SIEGEL, Z, W),
                               py.pair_dist(py.KIND_SIEGEL, Z, W), rtol=1e-12, atol=1e-13)


def test_window_stats_backends_agree(rng):
    W, U = _ball(rng, 40), _ball(rng, 16, r_max=0.999999)
    x = np.zeros(2, complex)
    hi_a, lo_a = kernels.window_stats(kernels.KIND_BALL, W, U, x)
    hi_b, lo_b = py.window_stats(py.KIND_BALL, W, U, x)
    np.testing.assert_allclose(hi_a, hi_b, atol=1e-13)
    np.testing.assert_allclose(lo_a, lo_b, atol=1e-13)


def test_disc_origin_formula():
    r = np.array([0.1, 0.5, 0.9, 0.999999])
    got = py.disc_dist(np.zeros_like(r), r)
    np.testing.assert_allclose(got, np.arctanh(r), rtol=1e-14)
    assert got[1] == pytest.approx(0.5 * math.log(3.0), rel=1e-15)


def test_near_boundary_accuracy():
    # two points 1e-12 from the circle, far apart: K = 0.5 log of a large ratio
    z, w = 1 - 1e-12, -(1 - 1e-12)
    exact = 2 * np.arctanh(1 - 1e-12)
    assert py.disc_dist(z, w) == pytest.approx(exact, rel=1e-9)


@given(st.floats(0, 0.999), st.floats(0, 2 * math.pi), st.floats(0, 0.999), st.floats(0, 2 * math.pi))
def test_disc_symmetry(r1, t1, r2, t2):
    z, w = r1 * np.exp(1j * t1), r2 * np.exp(1j * t2)
    assert py.disc_dist(z, w) == py.disc_dist(w, z)


@pytest.mark.parametrize("mod", [py, kernels], ids=["python", "active"])
def test_close_points_near_sphere(mod):
    # consecutive points on a radial ray: K = |atanh r1 - atanh r2| exactly,
    # a regime where |z - w|^2 and the wedge term cancel in the naive formula
    q = np.array([0.6, 0.8j])
    t = np.linspace(6.0, 12.0, 40)
    Z = np.tanh(t)[:, None] * q
    got = mod.pair_dist(mod.KIND_BALL, Z[:-1], Z[1:])
    r = np.linalg.norm(Z, axis=1)
    exact = np.abs(np.diff(np.arctanh(r)))
    np.testing.assert_allclose(got, exact, rtol=1e-5)


@pytest.mark.parametrize("mod", [py, kernels], ids=["python", "active"])
def test_siegel_close_points(mod):
    # on the real axis K((s, 0), (t, 0)) = |log(s / t)| / 2
    s = np.geomspace(1e-6, 1e3, 50)
    Z = np.stack([s, np.zeros_like(s)], axis=1).astype(complex)
    W = np.stack([s * (1 + 1e-7), np.zeros_like(s)], axis=1).astype(complex)
    got = mod.pair_dist(mod.KIND_SIEGEL, Z, W)
    np.testing.assert_allclose(got, 0.5 * np.log1p(1e-7), rtol=1e-6)
    # a tilt in w2 keeps the points inside
    Z[:, 1] = 0.5 * np.sqrt(s)
    W[:, 1] = 0.5 * np.sqrt(s)
    assert np.all(np.isfinite(mod.pair_dist(mod.KIND_SIEGEL, Z, W)))
