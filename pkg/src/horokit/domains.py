"""Model domains, boundary distances and invariant distances.

Points are 1-d complex numpy arrays. All distances use the 1/2 log
normalization: ``distance(disc, 0, r) == 0.5 * log((1 + r) / (1 - r))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernels
from .quadrature import adaptive_simpson

UNIT_DISC = "UnitDisc"
POLYDISC = "Polydisc"
UNIT_BALL = "UnitBall"
HALF_SPACE = "RealHalfSpace"
SIEGEL = "SiegelH2"
PARABOLIC = "ParabolicConvex"
SAMPLED = "SampledConvex"

KINDS = (UNIT_DISC, POLYDISC, UNIT_BALL, HALF_SPACE, SIEGEL, PARABOLIC, SAMPLED)
CLOSED_FORM_KINDS = (UNIT_DISC, POLYDISC, UNIT_BALL, HALF_SPACE, SIEGEL, PARABOLIC)
BOUNDED_KINDS = (UNIT_DISC, POLYDISC, UNIT_BALL)


class DomainError(ValueError):
    """Point outside the domain, dimension mismatch, or bad descriptor."""


class UnsupportedKind(DomainError):
    """The requested operation has no implementation for this domain kind."""


@dataclass(frozen=True)
class MetricConfig:
    tail_start: int = 1024
    tail_len: int = 16
    tol: float = 1e-3
    r_grid: tuple = (0.01, 0.1, 1.0, 10.0)
    samples: int = 256
    seed: int = 0
    # doublings of tail_start stop here even if not converged
    max_start: int = 1 << 22

    def __post_init__(self):
        object.__setattr__(self, "r_grid", tuple(float(r) for r in self.r_grid))
        if self.tail_start < 1:
            raise ValueError("tail_start must be >= 1")
        if self.tail_len < 8:
            raise ValueError("tail_len must be >= 8")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if not self.r_grid or any(r <= 0 for r in self.r_grid):
            raise ValueError("r_grid must be non-empty and positive")
        if any(b <= a for a, b in zip(self.r_grid, self.r_grid[1:])):
            raise ValueError("r_grid must be strictly increasing")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")

    def rng(self, salt: int = 0) -> np.random.Generator:
        return np.random.default_rng([self.seed, salt])

    def to_dict(self) -> dict:
        return {
            "tail_start": self.tail_start, "tail_len": self.tail_len,
            "tol": self.tol, "r_grid": list(self.r_grid),
            "samples": self.samples, "seed": self.seed,
            "max_start": self.max_start,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MetricConfig":
        return cls(**{k: (tuple(v) if k == "r_grid" else v) for k, v in data.items()})


@dataclass(frozen=True, eq=False)
class Domain:
    """Tagged model domain.

    ``params`` by kind:

    * ``RealHalfSpace``: ``normal`` (real 2n-vector, ordering
      Re z1, Im z1, Re z2, ...) and ``offset``; the domain is
      ``<x, normal> < offset``.
    * ``SampledConvex``: ``support`` (callable on real unit 2n-vectors),
      optional ``center`` (interior point) and ``spec`` (JSON form).
    """

    kind: str
    dim: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError("unknown domain kind %r" % (self.kind,))
        if self.dim < 1:
            raise DomainError("dim must be positive")
        if self.kind == UNIT_DISC and self.dim != 1:
            raise DomainError("UnitDisc has dim 1")
        if self.kind in (SIEGEL, PARABOLIC) and self.dim != 2:
            raise DomainError("%s has dim 2" % self.kind)

    @property
    def convex(self) -> bool:
        return True

    @property
    def bounded(self) -> bool:
        return self.kind in BOUNDED_KINDS or (
            self.kind == SAMPLED and math.isfinite(max(
                _support(self, np.eye(2 * self.dim)[i]) for i in range(2 * self.dim))))

    def center(self) -> np.ndarray:
        if self.kind == SIEGEL:
            return np.array([1.0, 0.0], dtype=complex)
        if self.kind == PARABOLIC:
            return np.array([1.0, 0.0], dtype=complex)
        if self.kind == HALF_SPACE:
            a, c = _half_space(self)
            return a * (c - 1.0)
        if self.kind == SAMPLED and "center" in self.params:
            return from_real(np.asarray(self.params["center"], dtype=float))
        return np.zeros(self.dim, dtype=complex)

    def __repr__(self):
        return "Domain(%s, dim=%d)" % (self.kind, self.dim)


def unit_disc() -> Domain:
    return Domain(UNIT_DISC, 1)


def polydisc(n: int = 2) -> Domain:
    return Domain(POLYDISC, n)


def unit_ball(n: int = 2) -> Domain:
    return Domain(UNIT_BALL, n)


def siegel() -> Domain:
    return Domain(SIEGEL, 2)


def parabolic() -> Domain:
    return Domain(PARABOLIC, 2)


def half_space(normal, offset: float) -> Domain:
    normal = np.asarray(normal, dtype=float)
    if normal.ndim != 1 or normal.size % 2:
        raise DomainError("normal must be a real 2n-vector")
    nrm = np.linalg.norm(normal)
    if nrm == 0:
        raise DomainError("normal must be non-zero")
    return Domain(HALF_SPACE, normal.size // 2,
                  {"normal": tuple(normal / nrm), "offset": float(offset) / nrm})


def ellipsoid(center, axes) -> Domain:
    """Axis-aligned ellipsoid in R^{2n}, exposed through its support function."""
    center = np.asarray(center, dtype=float)
    axes = np.asarray(axes, dtype=float)
    if center.shape != axes.shape or center.size % 2 or np.any(axes <= 0):
        raise DomainError("bad ellipsoid parameters")

    def support(u):
        u = np.asarray(u, dtype=float)
        return float(np.sqrt(np.sum((axes * u) ** 2, axis=-1)) + u @ center)

    return Domain(SAMPLED, center.size // 2, {
        "support": support, "center": tuple(center),
        "spec": {"shape": "ellipsoid", "center": list(center), "axes": list(axes)},
    })


def polytope(normals, offsets, center) -> Domain:
    """Bounded polytope {x : <x, n_i> < b_i} in R^{2n}."""
    normals = np.asarray(normals, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    center = np.asarray(center, dtype=float)
    norms = np.linalg.norm(normals, axis=1)
    normals = normals / norms[:, None]
    offsets = offsets / norms

    def support(u):
        u = np.asarray(u, dtype=float)
        out = optimize.linprog(-u, A_ub=normals, b_ub=offsets, bounds=[(None, None)] * u.size)
        if out.status == 3:
            return math.inf
        return float(-out.fun)

    return Domain(SAMPLED, center.size // 2, {
        "support": support, "center": tuple(center), "facets": (normals, offsets),
        "spec": {"shape": "polytope", "normals": normals.tolist(),
                 "offsets": offsets.tolist(), "center": list(center)},
    })


# ---------------------------------------------------------------- helpers

def to_real(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    out = np.empty(z.shape[:-1] + (2 * z.shape[-1],))
    out[..., 0::2] = z.real
    out[..., 1::2] = z.imag
    return out


def from_real(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x[..., 0::2] + 1j * x[..., 1::2]


def as_point(d: Domain, z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if z.ndim != 1 or z.size != d.dim:
        raise DomainError("point of dimension %d used with %r" % (z.size, d))
    if not np.all(np.isfinite(z.real) & np.isfinite(z.imag)):
        raise DomainError("non-finite coordinates")
    return z


def _as_points(d: Domain, Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=complex)
    if Z.ndim == 1 and d.dim == 1:
        Z = Z[:, None]
    Z = np.atleast_2d(Z)
    if Z.shape[-1] != d.dim:
        raise DomainError("points of dimension %d used with %r" % (Z.shape[-1], d))
    return Z


def _half_space(d: Domain):
    a = from_real(np.asarray(d.params["normal"], dtype=float))
    return a, float(d.params["offset"])


def _support(d: Domain, u) -> float:
    """Support value sup_{z in D} <z, u> for a real direction u in R^{2n}."""
    return float(d.params["support"](np.asarray(u, dtype=float)))


def _inner_re(Z, a):
    """Re <z, a> = Re sum z_j conj(a_j), row-wise."""
    return np.real(np.asarray(Z) @ np.conj(a))


def defining_function(d: Domain, Z) -> np.ndarray:
    """Continuous function that is negative exactly on the domain (rows of Z)."""
    Z = _as_points(d, Z)
    k = d.kind
    if k == UNIT_DISC or k == UNIT_BALL:
        return np.sqrt(np.sum(np.abs(Z) ** 2, axis=1)) - 1.0
    if k == POLYDISC:
        return np.max(np.abs(Z), axis=1) - 1.0
    if k == HALF_SPACE:
        a, c = _half_space(d)
        return _inner_re(Z, a) - c
    if k == SIEGEL:
        return np.sum(np.abs(Z[:, 1:]) ** 2, axis=1) - Z[:, 0].real
    if k == PARABOLIC:
        return 2.0 * Z[:, 1].real ** 2 - Z[:, 0].real
    return np.array([-_sampled_signed_distance(d, z) for z in Z])


def membership_many(d: Domain, Z) -> np.ndarray:
    return defining_function(d, Z) < 0.0


def membership(d: Domain, z) -> bool:
    """True iff z lies in the open domain."""
    z = as_point(d, z)
    return bool(defining_function(d, z[None, :])[0] < 0.0)


def _require_inside(d: Domain, z) -> np.ndarray:
    z = as_point(d, z)
    if not membership(d, z):
        raise DomainError("point %s is not in %r" % (np.round(z, 6), d))
    return z


# ------------------------------------------------------- sampled convex

def _direction_sample(dim_real: int, n: int, seed: int = 12345) -> np.ndarray:
    rng = np.random.default_rng(seed)
    u = rng.normal(size=(n, dim_real))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    return np.vstack([np.eye(dim_real), -np.eye(dim_real), u])


def _sampled_table(d: Domain):
    """Cached (directions, support values) for a SampledConvex domain."""
    table = d.params.get("_table")
    if table is None:
        dirs = _direction_sample(2 * d.dim, int(d.params.get("directions", 512)))
        h = np.array([_support(d, u) for u in dirs])
        keep = np.isfinite(h)
        table = (dirs[keep], h[keep])
        d.params["_table"] = table
    return table


def _sampled_min_gap(d: Domain, x, plane=None) -> float:
    """min over unit u of (h(u) - <x, u>) / w(u).

    With ``plane=None`` the weight is 1 and the value is the signed distance
    from x to the boundary. With ``plane=(E1, E2)`` the weight is the length of
    the projection of u on that real 2-plane, which gives the distance to the
    boundary inside the slice x + plane (exit radius along e is
    min_u gap(u) / <e, u>; minimizing over in-plane e gives the projection).
    """
    facets = d.params.get("facets")
    if facets is not None:
        normals, offsets = facets
        gaps = offsets - normals @ x
        if plane is None:
            return float(gaps.min())
        w = np.hypot(normals @ plane[0], normals @ plane[1])
        with np.errstate(divide="ignore"):
            vals = np.where(w > 1e-15, gaps / w, math.inf)
        return float(vals.min())

    dirs, h = _sampled_table(d)

    def weight(u):
        if plane is None:
            return np.ones(u.shape[:-1]) if u.ndim > 1 else 1.0
        return np.hypot(u @ plane[0], u @ plane[1])

    w = weight(dirs)
    with np.errstate(divide="ignore", invalid="ignore"):
        vals = np.where(w > 1e-12, (h - dirs @ x) / w, math.inf)
    start = dirs[int(np.argmin(vals))]

    def obj(v):
        nv = np.linalg.norm(v)
        if nv == 0:
            return math.inf
        u = v / nv
        wu = weight(u)
        if wu <= 1e-12:
            return math.inf
        return (_support(d, u) - u @ x) / wu

    res = optimize.minimize(obj, start, method="Nelder-Mead",
                            options={"xatol": 1e-9, "fatol": 1e-12, "maxiter": 2000})
    return float(min(res.fun, vals.min()))


def _sampled_signed_distance(d: Domain, z) -> float:
    return _sampled_min_gap(d, to_real(np.asarray(z, dtype=complex)))


# -------------------------------------------------------- boundary distance

def _min_over_curve(fun, lo, hi, n_grid=400):
    grid = np.linspace(lo, hi, n_grid)
    vals = np.array([fun(s) for s in grid])
    i = int(np.argmin(vals))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n_grid - 1)]
    res = optimize.minimize_scalar(fun, bounds=(a, b), method="bounded",
                                   options={"xatol": 1e-13})
    return min(float(res.fun), float(vals[i]))


def boundary_distance(d: Domain, z) -> float:
    """Euclidean distance from z to the boundary of d."""
    z = _require_inside(d, z)
    k = d.kind
    if k == UNIT_DISC or k == UNIT_BALL:
        return float(1.0 - np.linalg.norm(z))
    if k == POLYDISC:
        return float(np.min(1.0 - np.abs(z)))
    if k == HALF_SPACE:
        a, c = _half_space(d)
        return float(c - _inner_re(z[None, :], a)[0])
    if k == SIEGEL:
        # reduces to the plane (Re w1, |w2|) and the parabola x = s^2
        x1, r = z[0].real, abs(z[1])
        hi = max(r, math.sqrt(max(x1, 0.0))) + 1.0
        return math.sqrt(_min_over_curve(
            lambda s: (x1 - s * s) ** 2 + (r - s) ** 2, 0.0, hi))
    if k == PARABOLIC:
        x1, x3 = z[0].real, z[1].real
        hi = abs(x3) + math.sqrt(max(x1, 0.0) / 2.0) + 1.0
        return math.sqrt(_min_over_curve(
            lambda s: (x1 - 2 * s * s) ** 2 + (x3 - s) ** 2, -hi, hi))
    return _sampled_signed_distance(d, z)


def boundary_distance_many(d: Domain, Z) -> np.ndarray:
    Z = _as_points(d, Z)
    k = d.kind
    if k == UNIT_DISC or k == UNIT_BALL:
        return 1.0 - np.sqrt(np.sum(np.abs(Z) ** 2, axis=1))
    if k == POLYDISC:
        return np.min(1.0 - np.abs(Z), axis=1)
    return np.array([boundary_distance(d, z) for z in Z])


def directional_boundary_distance(d: Domain, z, v) -> float:
    """Distance from z to the boundary inside the complex line z + C v."""
    z = _require_inside(d, z)
    v = as_point(d, v)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise DomainError("zero direction")
    e = v / nv
    k = d.kind
    if k == UNIT_DISC:
        return float(1.0 - abs(z[0]))
    if k == UNIT_BALL:
        c = np.vdot(e, z)  # <z, e>
        rad = math.sqrt(max(1.0 - np.linalg.norm(z) ** 2 + abs(c) ** 2, 0.0))
        return float(rad - abs(c))
    if k == POLYDISC:
        vals = [(1.0 - abs(zj)) / abs(ej) for zj, ej in zip(z, e) if ej != 0]
        return float(min(vals))
    if k == HALF_SPACE:
        a, c = _half_space(d)
        beta = np.vdot(a, e)
        if abs(beta) < 1e-15:
            return math.inf
        return float((c - _inner_re(z[None, :], a)[0]) / abs(beta))
    if k == SAMPLED:
        plane = (to_real(e), to_real(1j * e))
        return _sampled_min_gap(d, to_real(z), plane)
    return _slice_distance(d, z, e)


def _ray_exit(d: Domain, z, dirvec, r_max=1e8) -> float:
    def rho(r):
        return float(defining_function(d, (z + r * dirvec)[None, :])[0])

    hi = 1.0
    while rho(hi) < 0.0:
        hi *= 2.0
        if hi > r_max:
            return math.inf
    lo = 0.0
    return optimize.brentq(rho, lo, hi, xtol=1e-14, rtol=1e-13)


def _slice_distance(d: Domain, z, e, n_theta=72) -> float:
    thetas = np.linspace(0.0, 2 * np.pi, n_theta, endpoint=False)
    radii = np.array([_ray_exit(d, z, np.exp(1j * t) * e) for t in thetas])
    if not np.any(np.isfinite(radii)):
        return math.inf
    i = int(np.argmin(radii))
    step = thetas[1]
    res = optimize.minimize_scalar(
        lambda t: _ray_exit(d, z, np.exp(1j * t) * e),
        bounds=(thetas[i] - step, thetas[i] + step), method="bounded",
        options={"xatol": 1e-12})
    return float(min(res.fun, radii[i]))


# ------------------------------------------------------------ distances

def _reduce(d: Domain, Z):
    """Map points to a kernel model: (kernel kind, transformed points)."""
    Z = _as_points(d, Z)
    k = d.kind
    if k == UNIT_DISC:
        return kernels.KIND_DISC, Z
    if k == POLYDISC:
        return kernels.KIND_POLYDISC, Z
    if k == UNIT_BALL:
        return kernels.KIND_BALL, Z
    if k == SIEGEL:
        return kernels.KIND_SIEGEL, Z
    if k == PARABOLIC:
        out = Z.copy()
        out[:, 0] = Z[:, 0] - Z[:, 1] ** 2
        return kernels.KIND_SIEGEL, out
    if k == HALF_SPACE:
        a, c = _half_space(d)
        xi = c - Z @ np.conj(a)
        return kernels.KIND_DISC, ((xi - 1.0) / (xi + 1.0))[:, None]
    raise UnsupportedKind("no closed-form distance for %s; use convex_distance_bounds" % k)


def has_closed_form(d: Domain) -> bool:
    return d.kind in CLOSED_FORM_KINDS


def distance(d: Domain, z, w) -> float:
    """Invariant (Kobayashi) distance for closed-form kinds."""
    z = _require_inside(d, z)
    w = _require_inside(d, w)
    if np.array_equal(z, w):
        return 0.0
    kind, P = _reduce(d, np.vstack([z, w]))
    return float(kernels.pair_dist(kind, P[:1], P[1:])[0])


def distance_many(d: Domain, Z, W) -> np.ndarray:
    """Row-wise distances; rows are not membership-checked."""
    kind, P = _reduce(d, Z)
    _, Q = _reduce(d, W)
    return kernels.pair_dist(kind, P, Q)


def window_stats(d: Domain, W, U, x):
    """Max/min over rows of U of K(w, u) - K(x, u), for each row w of W."""
    kind, P = _reduce(d, W)
    _, Q = _reduce(d, U)
    _, X = _reduce(d, np.asarray(x)[None, :] if np.ndim(x) == 1 else x)
    return kernels.window_stats(kind, P, Q, X[0])


def half_plane_distance(xi, eta) -> float:
    """Distance in the right half-plane {Re xi > 0}."""
    num = abs(xi - eta) ** 2
    a = 4.0 * xi.real * eta.real
    if num == 0.0:
        return 0.0
    den = num + a
    return math.log1p(math.sqrt(num / den)) - 0.5 * math.log(a / den)


# --------------------------------------------------- supporting half-spaces

def support_value(d: Domain, a) -> float:
    """sup over z in d of Re <z, a> for a complex direction a (may be +inf)."""
    a = np.asarray(a, dtype=complex)
    k = d.kind
    if k == UNIT_DISC or k == UNIT_BALL:
        return float(np.linalg.norm(a))
    if k == POLYDISC:
        return float(np.sum(np.abs(a)))
    if k == HALF_SPACE:
        n, c = _half_space(d)
        lam = np.vdot(n, a).real
        if lam > 0 and np.allclose(a, lam * n, atol=1e-12):
            return lam * c
        return math.inf
    if k == SIEGEL:
        if a[0].real < 0 and abs(a[0].imag) < 1e-14:
            return float(np.sum(np.abs(a[1:]) ** 2) / (-4.0 * a[0].real))
        return math.inf
    if k == PARABOLIC:
        if a[0].real < 0 and abs(a[0].imag) < 1e-14 and abs(a[1].imag) < 1e-14:
            return float(a[1].real ** 2 / (-8.0 * a[0].real))
        return math.inf
    return _support(d, to_real(a))


def outward_normal_near(d: Domain, z) -> np.ndarray:
    """Unit complex normal of a supporting half-space near the boundary point
    closest to z (best single half-space for points near that part)."""
    z = np.asarray(z, dtype=complex)
    k = d.kind
    if k in (UNIT_DISC, UNIT_BALL):
        n = np.linalg.norm(z)
        return z / n if n > 0 else np.eye(d.dim, dtype=complex)[0]
    if k == POLYDISC:
        j = int(np.argmax(np.abs(z)))
        out = np.zeros(d.dim, dtype=complex)
        out[j] = z[j] / abs(z[j]) if z[j] != 0 else 1.0
        return out
    if k == HALF_SPACE:
        return _half_space(d)[0]
    if k == SIEGEL:
        # gradient of |w2|^2 - Re w1 at the nearest boundary point
        x1, r = z[0].real, abs(z[1])
        s = _argmin_curve(lambda s: (x1 - s * s) ** 2 + (r - s) ** 2, 0.0,
                          max(r, math.sqrt(max(x1, 0.0))) + 1.0)
        u2 = (z[1] / r if r > 0 else 1.0) * 2 * s
        a = np.array([-1.0, u2], dtype=complex)
        return a / np.linalg.norm(a)
    if k == PARABOLIC:
        x1, x3 = z[0].real, z[1].real
        hi = abs(x3) + math.sqrt(max(x1, 0.0) / 2.0) + 1.0
        s = _argmin_curve(lambda s: (x1 - 2 * s * s) ** 2 + (x3 - s) ** 2, -hi, hi)
        a = np.array([-1.0, 4 * s], dtype=complex)
        return a / np.linalg.norm(a)
    dirs, h = _sampled_table(d)
    return from_real(dirs[int(np.argmin(h - dirs @ to_real(z)))])


def _argmin_curve(fun, lo, hi, n_grid=400):
    grid = np.linspace(lo, hi, n_grid)
    i = int(np.argmin([fun(s) for s in grid]))
    res = optimize.minimize_scalar(fun, bounds=(grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]),
                                   method="bounded", options={"xatol": 1e-13})
    return float(res.x)


def supporting_directions(d: Domain, count: int, rng: np.random.Generator) -> list:
    """Unit complex directions whose support value is finite."""
    n = d.dim
    k = d.kind
    out = []
    if k == HALF_SPACE:
        return [_half_space(d)[0]]
    for _ in range(count):
        if k in (UNIT_DISC, UNIT_BALL, SAMPLED):
            g = rng.normal(size=n) + 1j * rng.normal(size=n)
        elif k == POLYDISC:
            g = rng.uniform(0, 1, size=n) ** 3 * np.exp(2j * np.pi * rng.uniform(size=n))
        elif k == SIEGEL:
            g = np.concatenate([[-rng.exponential()],
                                rng.normal(size=n - 1) + 1j * rng.normal(size=n - 1)])
        else:
            g = np.array([-rng.exponential(), rng.normal()], dtype=complex)
        nrm = np.linalg.norm(g)
        if nrm > 0:
            out.append(g / nrm)
    return out


def convex_distance_bounds(d: Domain, z, w, cfg: MetricConfig | None = None):
    """Certified bracket (lower, upper) for the Kobayashi distance on a convex domain.

    lower: best exact half-space distance over sampled supporting half-spaces.
    upper: Kobayashi-type length of the segment [z, w] with the integrand
    |w - z| / delta(gamma(t); w - z), by adaptive Simpson.
    """
    cfg = cfg or MetricConfig()
    if not d.convex:
        raise UnsupportedKind("convex_distance_bounds needs a convex domain")
    z = _require_inside(d, z)
    w = _require_inside(d, w)
    if np.array_equal(z, w):
        return 0.0, 0.0
    dirs = supporting_directions(d, cfg.samples, cfg.rng(7))
    dirs += [outward_normal_near(d, z), outward_normal_near(d, w),
             outward_normal_near(d, 0.5 * (z + w))]
    lower = 0.0
    for a in dirs:
        h = support_value(d, a)
        if not math.isfinite(h):
            continue
        xi = h - np.vdot(a, z)
        eta = h - np.vdot(a, w)
        if xi.real <= 0 or eta.real <= 0:
            continue
        lower = max(lower, half_plane_distance(xi, eta))

    v = w - z
    length = float(np.linalg.norm(v))

    def integrand(t):
        return length / directional_boundary_distance(d, z + t * v, v)

    upper, _ = adaptive_simpson(integrand, 0.0, 1.0, tol=cfg.tol * 1e-2)
    upper += cfg.tol * 1e-2
    if lower > upper:
        raise AssertionError("bracket inverted: %g > %g" % (lower, upper))
    return lower, upper


def distance_bracket(d: Domain, z, w, cfg: MetricConfig | None = None):
    """(lower, upper) bounds; equal for closed-form kinds."""
    if has_closed_form(d):
        k = distance(d, z, w)
        return k, k
    return convex_distance_bounds(d, z, w, cfg)


# ------------------------------------------------------ boundary estimates

def boundary_estimate_upper(d: Domain, z, w) -> float:
    """Variable part of the upper boundary estimate for K(z, w)."""
    z = _require_inside(d, z)
    w = _require_inside(d, w)
    gap = float(np.linalg.norm(w - z))
    return (0.5 * math.log1p(gap / boundary_distance(d, w))
            + 0.5 * math.log1p(gap / boundary_distance(d, z)))


def boundary_estimate_lower(d: Domain, x, z) -> float:
    """Variable part of the lower estimate K(x, z) >= C' - 1/2 log delta(z)."""
    _require_inside(d, x)
    z = _require_inside(d, z)
    return -0.5 * math.log(boundary_distance(d, z))


# --------------------------------------------------------- serialization

def domain_to_dict(d: Domain) -> dict:
    params = {}
    if d.kind == HALF_SPACE:
        params = {"normal": list(d.params["normal"]), "offset": d.params["offset"]}
    elif d.kind == SAMPLED:
        if "spec" not in d.params:
            raise DomainError("SampledConvex built from a bare callable is not serializable")
        params = dict(d.params["spec"])
    return {"kind": d.kind, "dim": d.dim, "params": params}


def domain_from_dict(data: dict) -> Domain:
    try:
        kind = data["kind"]
        dim = int(data.get("dim", 1 if kind == UNIT_DISC else 2))
        params = data.get("params", {}) or {}
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError("bad domain descriptor: %s" % exc) from exc
    if kind == HALF_SPACE:
        d = half_space(params["normal"], params["offset"])
        if d.dim != dim:
            raise DomainError("normal length does not match dim")
        return d
    if kind == SAMPLED:
        shape = params.get("shape")
        if shape == "ellipsoid":
            return ellipsoid(params["center"], params["axes"])
        if shape == "polytope":
            return polytope(params["normals"], params["offsets"], params["center"])
        raise DomainError("SampledConvex needs shape 'ellipsoid' or 'polytope'")
    return Domain(kind, dim)


# -------------------------------------------------------------- sampling

def _radii(rng, n):
    """Half uniform-in-area radii, half clustered near 1."""
    r = np.sqrt(rng.uniform(size=n))
    near = rng.uniform(size=n) < 0.5
    r[near] = 1.0 - 10.0 ** rng.uniform(-3.0, 0.0, size=near.sum())
    return r


def sample_points(d: Domain, n: int, rng: np.random.Generator) -> np.ndarray:
    """Random interior points, with extra mass near the boundary."""
    k = d.kind
    if k in (UNIT_DISC, POLYDISC):
        shape = (n, d.dim)
        r = _radii(rng, n * d.dim).reshape(shape)
        return r * np.exp(2j * np.pi * rng.uniform(size=shape))
    if k == UNIT_BALL:
        g = rng.normal(size=(n, d.dim)) + 1j * rng.normal(size=(n, d.dim))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = _radii(rng, n) ** (1.0 / d.dim)
        return g * np.minimum(r, 1.0 - 1e-12)[:, None]
    if k == SIEGEL:
        w2 = rng.normal(size=(n, d.dim - 1)) + 1j * rng.normal(size=(n, d.dim - 1))
        gap = np.exp(rng.normal(size=n) * 1.5)
        w1 = np.sum(np.abs(w2) ** 2, axis=1) + gap + 1j * rng.normal(scale=2.0, size=n)
        return np.column_stack([w1, w2])
    if k == PARABOLIC:
        z2 = rng.normal(size=n) + 1j * rng.normal(size=n)
        gap = np.exp(rng.normal(size=n) * 1.5)
        z1 = 2 * z2.real ** 2 + gap + 1j * rng.normal(scale=2.0, size=n)
        return np.column_stack([z1, z2])
    if k == HALF_SPACE:
        a, c = _half_space(d)
        g = rng.normal(size=(n, d.dim)) + 1j * rng.normal(size=(n, d.dim))
        g -= np.outer(np.real(g @ np.conj(a)), a)
        return g + np.outer(c - np.exp(rng.normal(size=n) * 1.5), a)
    c = d.center()
    out = []
    for _ in range(n):
        e = rng.normal(size=d.dim) + 1j * rng.normal(size=d.dim)
        e /= np.linalg.norm(e)
        r = _ray_exit(d, c, e)
        out.append(c + e * r * _radii(rng, 1)[0] * (1 - 1e-9))
    return np.array(out)
