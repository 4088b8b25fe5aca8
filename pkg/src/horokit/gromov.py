"""Gromov products, geodesics, quasi-geodesic checks and thin-triangle estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import minimize_scalar

from . import domains as dm
from . import sequences as sq
from .verdict import FALSE, INCONCLUSIVE, TRUE, Verdict


def gromov_product(d: dm.Domain, x, y, w) -> float:
    """(x, y)_w = (K(x, w) + K(y, w) - K(x, y)) / 2."""
    dxw = dm.distance(d, x, w)
    dyw = dm.distance(d, y, w)
    dxy = dm.distance(d, x, y)
    val = 0.5 * (dxw + dyw - dxy)
    # the triangle inequality makes this nonnegative up to rounding
    assert val >= -1e-9 * max(1.0, dxw + dyw), "negative Gromov product %g" % val
    return max(val, 0.0)


def gromov_products(d: dm.Domain, X, Y, w) -> np.ndarray:
    """Row-wise products (X_i, Y_i)_w."""
    X = np.asarray(X, dtype=complex)
    Y = np.asarray(Y, dtype=complex)
    Wb = np.repeat(dm.as_point(d, w)[None, :], X.shape[0], axis=0)
    val = 0.5 * (dm.distance_many(d, X, Wb) + dm.distance_many(d, Y, Wb) - dm.distance_many(d, X, Y))
    scale = np.maximum(1.0, np.abs(val))
    assert np.all(val >= -1e-9 * scale), "negative Gromov product"
    return np.maximum(val, 0.0)


# ------------------------------------------------------------------ geodesics

def _disc_move(a):
    """z -> (z + a) / (1 + conj(a) z), sending 0 to a."""
    a = complex(a)
    return lambda z: (z + a) / (1 + np.conj(a) * z)


def _disc_pull(a):
    a = complex(a)
    return lambda z: (z - a) / (1 - np.conj(a) * z)


def _ball_phi(a, Z):
    from .maps import _phi
    return _phi(a, np.atleast_2d(Z))


@dataclass(frozen=True, eq=False)
class Ray:
    """Unit-speed geodesic ray; ``curve`` accepts an array of times."""

    domain: dm.Domain
    curve: Callable

    @property
    def basepoint(self) -> np.ndarray:
        return self(0.0)

    def __call__(self, t):
        T = np.atleast_1d(np.asarray(t, dtype=float))
        out = self.curve(T)
        return out[0] if np.ndim(t) == 0 else out

    def speed_defect(self, ts) -> float:
        """max | K(curve(s), curve(t)) - |t - s| | over consecutive sample times."""
        ts = np.sort(np.asarray(ts, dtype=float))
        P = self(ts)
        k = dm.distance_many(self.domain, P[:-1], P[1:])
        return float(np.max(np.abs(k - np.diff(ts))))


def disc_ray(p, base=0.0) -> Ray:
    """Geodesic ray in the disc from ``base`` to the boundary point p."""
    p = complex(p)
    if abs(abs(p) - 1) > 1e-12:
        raise dm.DomainError("ray target must be on the unit circle")
    move, pull = _disc_move(base), _disc_pull(base)
    q = pull(p)
    q /= abs(q)
    return Ray(dm.unit_disc(), lambda T: move(q * np.tanh(T))[:, None])


def ball_ray(p, base=None) -> Ray:
    p = np.asarray(p, dtype=complex)
    n = p.size
    base = np.zeros(n, dtype=complex) if base is None else np.asarray(base, dtype=complex)
    q = _ball_phi(base, p)[0] if np.any(base) else p
    q = q / np.linalg.norm(q)
    if not np.any(base):
        return Ray(dm.unit_ball(n), lambda T: np.tanh(T)[:, None] * q[None, :])
    return Ray(dm.unit_ball(n), lambda T: _ball_phi(base, np.tanh(T)[:, None] * q[None, :]))


def polydisc_ray(directions, speeds=None, traces=None) -> Ray:
    """Ray with coordinates c_j tanh(s_j t), max s_j = 1.

    ``traces`` may replace any coordinate by a callable of t; it must be
    1-Lipschitz for the disc distance so the ray keeps unit speed.
    """
    c = np.asarray(directions, dtype=complex)
    n = c.size
    s = np.ones(n) if speeds is None else np.asarray(speeds, dtype=float)
    traces = traces or {}
    if abs(s.max() - 1) > 1e-12 or s.min() < 0:
        raise dm.DomainError("speeds must lie in [0, 1] with maximum 1")

    def curve(T):
        out = c[None, :] * np.tanh(np.outer(T, s))
        for j, f in traces.items():
            out[:, j] = f(T)
        return out

    return Ray(dm.polydisc(n), curve)


def geodesic_segment(d: dm.Domain, z, w):
    """Unit-speed geodesic from z to w; returns (curve, length)."""
    z = dm.as_point(d, z)
    w = dm.as_point(d, w)
    L = dm.distance(d, z, w)
    if L == 0:
        return (lambda T: np.repeat(z[None, :], np.size(T), axis=0)), 0.0
    if d.kind == dm.UNIT_DISC:
        v = _disc_pull(z[0])(w[0])
        q = v / abs(v)
        move = _disc_move(z[0])
        return (lambda T: move(q * np.tanh(np.atleast_1d(T)))[:, None]), L
    if d.kind == dm.UNIT_BALL:
        v = _ball_phi(z, w)[0] if np.any(z) else w
        q = v / np.linalg.norm(v)
        if not np.any(z):
            return (lambda T: np.tanh(np.atleast_1d(T))[:, None] * q[None, :]), L
        return (lambda T: _ball_phi(z, np.tanh(np.atleast_1d(T))[:, None] * q[None, :])), L
    if d.kind == dm.POLYDISC:
        # every coordinate runs its own disc geodesic, synchronized to the slowest pace
        parts = []
        for j in range(d.dim):
            Lj = dm.distance(dm.unit_disc(), z[j:j + 1], w[j:j + 1])
            if Lj == 0:
                parts.append((None, 0.0, z[j]))
                continue
            v = _disc_pull(z[j])(w[j])
            parts.append((_disc_move(z[j]), Lj, v / abs(v)))

        def curve(T):
            T = np.atleast_1d(np.asarray(T, dtype=float))
            out = np.empty((T.size, d.dim), dtype=complex)
            for j, (move, Lj, q) in enumerate(parts):
                out[:, j] = q if move is None else move(q * np.tanh(T * Lj / L))
            return out

        return curve, L
    raise dm.UnsupportedKind("no geodesic construction for %s" % d.kind)


# ---------------------------------------------------- sequence equivalence

def _window_min(d, a, b, w, start, length):
    ns = np.arange(start, start + length)
    return float(np.min(gromov_products(d, a.points(ns), b.points(ns), w)))


def tends_to_infinity(d: dm.Domain, w, a: sq.PointSequence, cfg: dm.MetricConfig) -> bool:
    """Diagonal products (a_N, a_2N)_w must climb past a growing threshold."""
    vals = []
    N = cfg.tail_start
    while N * 2 <= cfg.max_start and len(vals) < 6:
        ns = np.arange(N, N + cfg.tail_len)
        vals.append(float(np.min(gromov_products(d, a.points(ns), a.points(2 * ns), w))))
        N *= 2
    steps = np.diff(vals)
    return len(steps) >= 3 and bool(np.all(steps[-3:] > 0.05))


def seq_equiv_s(d: dm.Domain, w, a: sq.PointSequence, b: sq.PointSequence,
                cfg: dm.MetricConfig, growth: float = 0.05, still: float = 1e-6) -> Verdict:
    """Decide whether (a_n, b_n)_w tends to infinity.

    The window minimum of the products is tracked over doubling starts.
    Three consecutive increases above ``growth`` give an escape verdict
    (equivalent); two consecutive moves below ``still`` give a bounded verdict.
    """
    w = dm.as_point(d, w)
    det = {"a_escapes": tends_to_infinity(d, w, a, cfg), "b_escapes": tends_to_infinity(d, w, b, cfg)}
    if not (det["a_escapes"] and det["b_escapes"]):
        return Verdict(INCONCLUSIVE, math.nan, math.nan, False, (cfg.tail_start, cfg.tail_len),
                       dict(det, reason="a sequence does not tend to infinity"))
    start = cfg.tail_start
    hist = [_window_min(d, a, b, w, start, cfg.tail_len)]
    rising = quiet = 0
    while start * 2 <= cfg.max_start:
        start *= 2
        hist.append(_window_min(d, a, b, w, start, cfg.tail_len))
        step = hist[-1] - hist[-2]
        rising = rising + 1 if step > growth else 0
        quiet = quiet + 1 if abs(step) < still else 0
        if rising >= 3:
            det.update(history=hist)
            return Verdict(TRUE, hist[-1], hist[-1], True, (start, cfg.tail_len), det)
        if quiet >= 2:
            det.update(history=hist, stability=float(max(abs(np.diff(hist[-3:])))))
            return Verdict(FALSE, hist[-1], -abs(step), True, (start, cfg.tail_len), det)
    det.update(history=hist)
    return Verdict(INCONCLUSIVE, hist[-1], math.nan, False, (start, cfg.tail_len), det)


def rays_bounded_apart(r1: Ray, r2: Ray, t_max: float = 12.0, n: int = 64) -> Verdict:
    """sup_t K(r1(t), r2(t)) on growing ranges; bounded sups mean equivalent rays."""
    ts = np.linspace(0.0, t_max, n)
    dist = dm.distance_many(r1.domain, r1(ts), r2(ts))
    half = np.max(dist[: n // 2])
    full = np.max(dist)
    bounded = full <= half + 1e-6 or (full - half) < 0.01 * max(full, 1.0)
    return Verdict(TRUE if bounded else FALSE, float(full), float(half - full), True, (0, n),
                   {"sup_half": float(half), "sup_full": float(full)})


# ------------------------------------------------------------ quasi-geodesics

def reparametrize_by_length(d: dm.Domain, path: Callable, s0: float, s1: float,
                            cfg: dm.MetricConfig | None = None, n0: int = 64,
                            max_points: int = 1 << 18):
    """Arc-length reparametrization from cumulative chord sums.

    Intervals whose chord exceeds a resolution ``h`` are bisected until every
    chord is short, so that interpolating the parameter between nodes is
    accurate to about ``h``. Returns (curve, T) with curve defined on [0, T].
    """
    cfg = cfg or dm.MetricConfig()
    s = np.linspace(s0, s1, n0 + 1)
    h = max(cfg.tol, 1e-4) * 5
    while True:
        P = np.atleast_2d(path(s))
        if not np.all(dm.membership_many(d, P)):
            raise dm.DomainError("path leaves the domain")
        chords = dm.distance_many(d, P[:-1], P[1:])
        long = chords > h
        if not long.any() or s.size > max_points:
            break
        mids = 0.5 * (s[:-1][long] + s[1:][long])
        s = np.sort(np.concatenate([s, mids]))
    cum = np.concatenate([[0.0], np.cumsum(chords)])
    if np.any(np.diff(s) <= 0):
        raise dm.DomainError("parametrization is not monotone")
    T = float(cum[-1])

    def curve(t):
        t = np.clip(np.atleast_1d(np.asarray(t, dtype=float)), 0.0, T)
        return np.atleast_2d(path(np.interp(t, cum, s)))

    return curve, T


def _pair_sample(T, n_grid, n_rand, rng):
    g = np.linspace(0.0, T, n_grid)
    ti, tj = np.meshgrid(g, g, indexing="ij")
    mask = ti < tj
    t1 = np.concatenate([ti[mask], rng.uniform(0, T, n_rand)])
    t2 = np.concatenate([tj[mask], rng.uniform(0, T, n_rand)])
    return t1, t2


def quasi_geodesic_slack(d, curve, T, A, B, cfg: dm.MetricConfig):
    rng = cfg.rng(97)
    t1, t2 = _pair_sample(T, 40, cfg.samples, rng)
    D = dm.distance_many(d, curve(t1), curve(t2))
    gap = np.abs(t1 - t2)
    lower = D - (gap / A - B)
    upper = A * gap + B - D
    return lower, upper, gap, D


def quasi_geodesic_check(d: dm.Domain, curve: Callable, T: float, A: float, B: float,
                         cfg: dm.MetricConfig) -> Verdict:
    """Check (1/A)|t-t'| - B <= K(g(t), g(t')) <= A|t-t'| + B on sampled pairs."""
    if A < 1 or B <= 0:
        raise ValueError("need A >= 1 and B > 0")
    lower, upper, _, _ = quasi_geodesic_slack(d, curve, T, A, B, cfg)
    worst = float(min(lower.min(), upper.min()))
    ok = worst >= -cfg.tol
    return Verdict(TRUE if ok else FALSE, worst, worst, True, (0, lower.size),
                   {"A": A, "B": B, "T": T, "lower_slack": float(lower.min()),
                    "upper_slack": float(upper.min())})


def fit_quasi_geodesic(d: dm.Domain, curve: Callable, T: float, cfg: dm.MetricConfig,
                       A_grid=(1.0, 1.25, 1.5, 2.0, 3.0, 5.0, 10.0, 20.0, 50.0, 100.0)):
    """Smallest additive constant B for each A; returns the (A, B) with least A + B."""
    _, _, gap, D = quasi_geodesic_slack(d, curve, T, 1.0, 1.0, cfg)
    best = None
    for A in A_grid:
        B = float(max(np.max(gap / A - D), np.max(D - A * gap), 0.0)) + cfg.tol
        if best is None or A + B < best[0] + best[1]:
            best = (A, B)
    return best


# ---------------------------------------------------------- thin triangles

def _dist_to_side(d, P, side, L, n=48):
    """Distance from each row of P to a geodesic side of length L."""
    ts = np.linspace(0.0, L, n)
    S = side(ts)
    out = np.empty(P.shape[0])
    for i, p in enumerate(P):
        k = dm.distance_many(d, np.repeat(p[None, :], n, axis=0), S)
        j = int(np.argmin(k))
        lo, hi = ts[max(j - 1, 0)], ts[min(j + 1, n - 1)]
        if hi > lo:
            res = minimize_scalar(lambda t: dm.distance_many(d, p[None, :], side(t))[0],
                                  bounds=(lo, hi), method="bounded", options={"xatol": 1e-7})
            out[i] = min(k[j], res.fun)
        else:
            out[i] = k[j]
    return out


def triangle_defect(d: dm.Domain, a, b, c, n_side: int = 48) -> float:
    """Smallest delta such that each side lies in the delta-neighbourhood of the other two."""
    verts = [dm.as_point(d, v) for v in (a, b, c)]
    sides = []
    for i in range(3):
        curve, L = geodesic_segment(d, verts[i], verts[(i + 1) % 3])
        sides.append((curve, L))
    worst = 0.0
    for i in range(3):
        curve, L = sides[i]
        if L == 0:
            continue
        P = curve(np.linspace(0.0, L, n_side))
        others = [sides[(i + 1) % 3], sides[(i + 2) % 3]]
        dist = np.full(P.shape[0], np.inf)
        for oc, oL in others:
            dist = np.minimum(dist, _dist_to_side(d, P, oc, oL))
        worst = max(worst, float(dist.max()))
    return worst


def _vertex_at(d: dm.Domain, scale, rng):
    """A point at invariant distance ``scale`` from the center."""
    r = math.tanh(scale)
    if d.kind == dm.UNIT_DISC:
        return np.array([r * np.exp(2j * np.pi * rng.uniform())])
    if d.kind == dm.UNIT_BALL:
        v = rng.normal(size=d.dim) + 1j * rng.normal(size=d.dim)
        return r * v / np.linalg.norm(v)
    if d.kind == dm.POLYDISC:
        s = rng.uniform(0, 1, d.dim)
        s[rng.integers(d.dim)] = 1.0
        return np.tanh(scale * s) * np.exp(2j * np.pi * rng.uniform(size=d.dim))
    raise dm.UnsupportedKind("no geodesic construction for %s" % d.kind)


def delta_hyperbolicity_estimate(d: dm.Domain, scale: float, cfg: dm.MetricConfig,
                                 n_triangles: int = 24) -> float:
    """Maximum thinness defect over seeded triangles with vertices at distance ``scale``."""
    if d.kind not in (dm.UNIT_DISC, dm.UNIT_BALL, dm.POLYDISC):
        raise dm.UnsupportedKind("no geodesic construction for %s" % d.kind)
    rng = cfg.rng(101)
    worst = 0.0
    for _ in range(n_triangles):
        a, b, c = (_vertex_at(d, scale, rng) for _ in range(3))
        worst = max(worst, triangle_defect(d, a, b, c))
    return worst
