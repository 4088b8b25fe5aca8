import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from horokit import domains as dm
from horokit.quadrature import QuadratureError, adaptive_simpson

HALF_LOG3 = 0.5 * math.log(3.0)

disc_pts = st.builds(lambda r, t: r * np.exp(1j * t), st.floats(0, 0.995), st.floats(0, 2 * math.pi))


# ------------------------------------------------------------- config

def test_metric_config_validation():
    with pytest.raises(ValueError):
        dm.MetricConfig(tail_len=4)
    with pytest.raises(ValueError):
        dm.MetricConfig(r_grid=(1.0, 0.5))
    with pytest.raises(ValueError):
        dm.MetricConfig(tol=0)
    cfg = dm.MetricConfig(seed=7)
    assert dm.MetricConfig.from_dict(cfg.to_dict()) == cfg


def test_config_rng_is_seeded():
    a = dm.MetricConfig(seed=3).rng(5).normal(size=4)
    b = dm.MetricConfig(seed=3).rng(5).normal(size=4)
    c = dm.MetricConfig(seed=4).rng(5).normal(size=4)
    assert np.array_equal(a, b) and not np.array_equal(a, c)


# ---------------------------------------------------------- membership

def test_membership_examples():
    assert dm.membership(dm.unit_disc(), [0])
    assert not dm.membership(dm.unit_disc(), [1])
    assert dm.membership(dm.parabolic(), [1, 0.5])
    assert not dm.membership(dm.parabolic(), [0.5, 0.5])
    assert dm.membership(dm.siegel(), [1, 0])


def test_membership_dimension_mismatch():
    with pytest.raises(dm.DomainError):
        dm.membership(dm.unit_ball(2), [0])


@pytest.mark.parametrize("d", [dm.unit_disc(), dm.polydisc(2), dm.unit_ball(3), dm.siegel(),
                               dm.parabolic(), dm.half_space([1, 0, 0, 0], 1.0),
                               dm.ellipsoid([0, 0, 0, 0], [1, 2, 1, 1])])
def test_center_is_member(d):
    assert dm.membership(d, d.center())


@pytest.mark.parametrize("d", [dm.unit_disc(), dm.polydisc(2), dm.unit_ball(2), dm.siegel(), dm.parabolic()])
def test_samples_inside_and_convex_combinations(d, rng):
    Z = dm.sample_points(d, 200, rng)
    assert dm.membership_many(d, Z).all()
    t = rng.uniform(size=(100, 1))
    mix = t * Z[:100] + (1 - t) * Z[100:]
    assert dm.membership_many(d, mix).all()


# --------------------------------------------------- boundary distance

def test_boundary_distance_examples():
    assert dm.boundary_distance(dm.unit_disc(), [0]) == pytest.approx(1.0)
    assert dm.boundary_distance(dm.unit_ball(2), [0.6, 0]) == pytest.approx(0.4)


def test_siegel_boundary_distance_against_dense_sample():
    # boundary points (|w2|^2 + iy, w2); dense sample of the nearest slice y = 0
    r = np.linspace(0, 2, 200001)
    brute = np.sqrt(np.min((r ** 2 - 1) ** 2 + r ** 2))
    got = dm.boundary_distance(dm.siegel(), [1, 0])
    assert got == pytest.approx(brute, abs=1e-9)
    assert got == pytest.approx(math.sqrt(3) / 2, abs=1e-9)


def test_sampled_boundary_distance_matches_half_axis():
    E = dm.ellipsoid([0, 0, 0, 0], [1, 3, 2, 2])
    assert dm.boundary_distance(E, [0, 0]) == pytest.approx(1.0, abs=1e-3)


def test_boundary_distance_rejects_outside():
    with pytest.raises(dm.DomainError):
        dm.boundary_distance(dm.unit_disc(), [1.5])


# ------------------------------------------- directional boundary distance

def test_directional_examples():
    assert dm.directional_boundary_distance(dm.unit_disc(), [0], [1]) == pytest.approx(1.0)
    assert dm.directional_boundary_distance(dm.polydisc(2), [0, 0], [1, 0]) == pytest.approx(1.0)
    H = dm.half_space([1, 0, 0, 0], 1.0)
    assert dm.directional_boundary_distance(H, [0, 0], [1, 0]) == pytest.approx(1.0)


def test_directional_misses_boundary():
    H = dm.half_space([1, 0, 0, 0], 1.0)
    assert dm.directional_boundary_distance(H, [0, 0], [0, 1]) == math.inf


def test_directional_zero_vector():
    with pytest.raises(dm.DomainError):
        dm.directional_boundary_distance(dm.unit_disc(), [0], [0])


def test_directional_ball_closed_form_vs_slice():
    B = dm.unit_ball(2)
    z, v = np.array([0.3, 0.2j]), np.array([1, 1j]) / math.sqrt(2)
    got = dm.directional_boundary_distance(B, z, v)
    # the complex line meets the ball in a disc; compare with a root find
    assert got == pytest.approx(dm._slice_distance(B, z, v), abs=1e-6)


# --------------------------------------------------------- distances

def test_distance_examples():
    assert dm.distance(dm.unit_disc(), [0], [0.5]) == pytest.approx(HALF_LOG3, rel=1e-15)
    assert dm.distance(dm.polydisc(2), [0, 0], [0.5, 0.3j]) == pytest.approx(HALF_LOG3, rel=1e-15)
    assert dm.distance(dm.siegel(), [1, 0], [1, 0]) == 0.0


def test_ball_matches_disc_on_a_line():
    assert dm.distance(dm.unit_ball(3), [0, 0, 0], [0, 0.6j, 0]) == pytest.approx(math.atanh(0.6))


def test_half_space_reduction():
    # {Re z1 < 1} in C^1: the half plane; K(0, 0.5) = 0.5 log((1+r)/(1-r)) with r = 1/3
    H = dm.half_space([1, 0], 1.0)
    assert dm.distance(H, [0], [0.5]) == pytest.approx(math.atanh(1 / 3), rel=1e-13)


def test_parabolic_shear_equals_siegel():
    rng = np.random.default_rng(1)
    P = dm.sample_points(dm.parabolic(), 50, rng)
    S = P.copy()
    S[:, 0] = P[:, 0] - P[:, 1] ** 2
    np.testing.assert_allclose(dm.distance_many(dm.parabolic(), P[:25], P[25:]),
                               dm.distance_many(dm.siegel(), S[:25], S[25:]), rtol=1e-12)


def test_distance_unsupported_kind():
    E = dm.ellipsoid([0, 0], [1, 2])
    with pytest.raises(dm.UnsupportedKind):
        dm.distance(E, [0], [0.1])


@given(disc_pts, disc_pts)
def test_distance_symmetry(z, w):
    D = dm.unit_disc()
    assert dm.distance(D, [z], [w]) == dm.distance(D, [w], [z])


@given(disc_pts, disc_pts, disc_pts)
def test_triangle_inequality(a, b, c):
    D = dm.unit_disc()
    assert dm.distance(D, [a], [c]) <= dm.distance(D, [a], [b]) + dm.distance(D, [b], [c]) + 1e-12


@given(disc_pts, disc_pts, st.builds(lambda r, t: r * np.exp(1j * t), st.floats(0, 0.9), st.floats(0, 6.3)),
       st.floats(0, 2 * math.pi))
def test_moebius_invariance(z, w, a, theta):
    D = dm.unit_disc()
    phi = lambda u: np.exp(1j * theta) * (u - a) / (1 - np.conj(a) * u)
    assert dm.distance(D, [phi(z)], [phi(w)]) == pytest.approx(dm.distance(D, [z], [w]), abs=1e-10)


def test_polydisc_product_law(rng):
    P = dm.polydisc(3)
    Z, W = dm.sample_points(P, 100, rng), dm.sample_points(P, 100, rng)
    per = np.stack([dm.distance_many(dm.unit_disc(), Z[:, j:j + 1], W[:, j:j + 1]) for j in range(3)])
    np.testing.assert_array_equal(dm.distance_many(P, Z, W), per.max(axis=0))


# ------------------------------------------------------ convex bounds

def test_disc_bracket_example():
    lo, hi = dm.convex_distance_bounds(dm.unit_disc(), [0], [0.9])
    assert lo == pytest.approx(0.5 * math.log(10), abs=1e-9)
    true = 0.5 * math.log(19)
    assert lo <= true <= hi


def test_bracket_trivial_and_polydisc():
    assert dm.convex_distance_bounds(dm.unit_ball(2), [0.1, 0], [0.1, 0]) == (0.0, 0.0)
    lo, hi = dm.convex_distance_bounds(dm.polydisc(2), [0, 0], [0.5, 0])
    assert lo <= HALF_LOG3 <= hi


@pytest.mark.parametrize("d", [dm.unit_ball(2), dm.siegel(), dm.parabolic()])
def test_bracket_contains_closed_form(d, rng):
    cfg = dm.MetricConfig(samples=64)
    Z = dm.sample_points(d, 6, rng)
    for z, w in zip(Z[:3], Z[3:]):
        lo, hi = dm.convex_distance_bounds(d, z, w, cfg)
        k = dm.distance(d, z, w)
        assert lo - 1e-9 <= k <= hi + 1e-9


def test_sampled_convex_bracket_is_ordered():
    E = dm.ellipsoid([0, 0, 0, 0], [1, 2, 1, 1])
    lo, hi = dm.convex_distance_bounds(E, [0, 0], [0.5, 0.2j], dm.MetricConfig(samples=64))
    assert 0 < lo <= hi
    # the ellipsoid contains the unit ball, so K_E <= K_ball
    assert lo <= dm.distance(dm.unit_ball(2), [0, 0], [0.5, 0.2j]) + 1e-9


def test_midpoint_upper_bound_below_level():
    d = dm.unit_ball(2)
    x, z, w = np.zeros(2), np.array([0.6, 0.1]), np.array([0.1j, 0.6])
    c = max(dm.distance(d, x, z), dm.distance(d, x, w))
    _, hi = dm.convex_distance_bounds(d, x, 0.5 * (z + w))
    assert hi < c + 1e-3


# ---------------------------------------------------- boundary estimates

def test_estimate_upper_example():
    got = dm.boundary_estimate_upper(dm.unit_disc(), [0.9], [0.99])
    assert got == pytest.approx(0.5 * math.log(10) + 0.5 * math.log(1.9))
    assert dm.boundary_estimate_upper(dm.unit_disc(), [0.3], [0.3]) == 0.0


def test_estimate_upper_defect_bounded_on_ball(rng):
    B = dm.unit_ball(2)
    defects = []
    for eps in (1e-2, 1e-4, 1e-6):
        g = rng.normal(size=(200, 2)) + 1j * rng.normal(size=(200, 2))
        P = np.array([1, 0]) + eps * g
        P = P[dm.membership_many(B, P)]
        Z, W = P[::2][: len(P) // 2], P[1::2][: len(P) // 2]
        defects.append(max(dm.distance(B, z, w) - dm.boundary_estimate_upper(B, z, w)
                           for z, w in zip(Z, W)))
    assert all(np.isfinite(defects))
    assert abs(defects[-1] - defects[-2]) < 1.0


@pytest.mark.parametrize("d,x", [(dm.unit_disc(), [0]), (dm.unit_ball(3), [0, 0, 0])])
def test_estimate_lower_defect_bounded(d, x):
    vals = []
    for k in range(1, 12):
        z = np.zeros(d.dim, complex)
        z[-1] = 1 - 10.0 ** -k
        vals.append(dm.distance(d, x, z) - dm.boundary_estimate_lower(d, x, z))
    assert vals[-1] == pytest.approx(0.5 * math.log(2), abs=1e-6)
    assert min(vals) > 0


# --------------------------------------------------------- serialization

@pytest.mark.parametrize("d", [dm.unit_disc(), dm.polydisc(3), dm.unit_ball(2), dm.siegel(),
                               dm.parabolic(), dm.half_space([0, 1, 0, 0], 2.0),
                               dm.ellipsoid([0, 0], [1, 2]),
                               dm.polytope([[1, 0], [-1, 0], [0, 1], [0, -1]], [1, 1, 1, 1], [0, 0])])
def test_domain_round_trip(d):
    e = dm.domain_from_dict(dm.domain_to_dict(d))
    assert e.kind == d.kind and e.dim == d.dim
    assert dm.domain_to_dict(e) == dm.domain_to_dict(d)


# ---------------------------------------------------------- quadrature

def test_simpson_polynomial_and_singular():
    val, _ = adaptive_simpson(lambda t: t ** 3, 0, 2, tol=1e-12)
    assert val == pytest.approx(4.0, abs=1e-12)
    val, _ = adaptive_simpson(lambda t: 1 / math.sqrt(1 - t + 1e-12), 0, 1, tol=1e-8)
    assert val == pytest.approx(2.0, abs=1e-4)


def test_simpson_budget():
    with pytest.raises(QuadratureError):
        adaptive_simpson(lambda t: math.sin(1 / (t + 1e-9)), 0, 1, tol=1e-14, max_evals=500)
