"""Explicit biholomorphisms, boundary cluster sets and Denjoy-Wolff iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from . import domains as dm
from . import horospheres as hs
from . import sequences as sq
from .topology import BoundaryClass, ClusterSet, e_limit, merge_points
from .verdict import FALSE, INCONCLUSIVE, TRUE, Verdict

DISC_AUT = "DiscAutomorphism"
BALL_AUT = "BallAutomorphism"
CAYLEY2 = "Cayley2"
SIEGEL_TO_PARABOLIC = "SiegelToParabolic"
COMPOSITE = "Composite"
INVERSE = "Inverse"
CUSTOM = "CustomSelfMap"

ESCAPE_NORM = 1e6


@dataclass(frozen=True, eq=False)
class MapSpec:
    kind: str
    params: dict
    source: dm.Domain
    target: dm.Domain
    _fwd: Callable = field(repr=False, default=None)
    _inv: Callable = field(repr=False, default=None)
    # boundary extension: returns None where the image is at infinity
    _ext: Callable = field(repr=False, default=None)

    def forward(self, Z) -> np.ndarray:
        Z = np.asarray(Z, dtype=complex)
        one = Z.ndim == 1
        out = self._fwd(np.atleast_2d(Z))
        return out[0] if one else out

    def inverse(self, W) -> np.ndarray:
        if self._inv is None:
            raise NotImplementedError("%s has no inverse" % self.kind)
        W = np.asarray(W, dtype=complex)
        one = W.ndim == 1
        out = self._inv(np.atleast_2d(W))
        return out[0] if one else out

    def __call__(self, Z):
        return self.forward(Z)

    def extended_forward(self, p):
        """Image of a closure point; None when it lies at infinity."""
        p = np.asarray(p, dtype=complex)
        if self._ext is not None:
            return self._ext(p)
        with np.errstate(all="ignore"):
            img = self.forward(p)
        if not np.all(np.isfinite(img)) or np.linalg.norm(img) > ESCAPE_NORM:
            return None
        return img

    def inverted(self) -> "MapSpec":
        return MapSpec(INVERSE, {"of": self}, self.target, self.source,
                       self._inv, self._fwd, None)

    def to_dict(self) -> dict:
        if self.kind == COMPOSITE:
            return {"kind": COMPOSITE, "params": {"maps": [m.to_dict() for m in self.params["maps"]]}}
        if self.kind == INVERSE:
            return {"kind": INVERSE, "params": {"of": self.params["of"].to_dict()}}
        from .verdict import jsonable
        return {"kind": self.kind, "params": jsonable(self.params)}


# ------------------------------------------------------------ constructors

def disc_automorphism(a=0.0, theta=0.0) -> MapSpec:
    """z -> e^{i theta} (z - a) / (1 - conj(a) z)."""
    a = complex(a)
    if abs(a) >= 1:
        raise ValueError("|a| must be < 1")
    rot = complex(np.exp(1j * theta))

    def fwd(Z):
        return rot * (Z - a) / (1 - np.conj(a) * Z)

    def inv(W):
        V = W / rot
        return (V + a) / (1 + np.conj(a) * V)

    D = dm.unit_disc()
    return MapSpec(DISC_AUT, {"a": a, "theta": float(theta)}, D, D, fwd, inv)


def _phi(a, Z):
    """Involutive ball automorphism exchanging a and 0."""
    a = np.asarray(a, dtype=complex)
    na2 = float(np.vdot(a, a).real)
    if na2 == 0:
        return -Z
    s = math.sqrt(1 - na2)
    inner = Z @ np.conj(a)  # <z, a>
    P = np.outer(inner / na2, a)
    Q = Z - P
    return (a[None, :] - P - s * Q) / (1 - inner)[:, None]


def ball_automorphism(a, U=None) -> MapSpec:
    """z -> U phi_a(z)."""
    a = np.asarray(a, dtype=complex)
    n = a.size
    if np.linalg.norm(a) >= 1:
        raise ValueError("|a| must be < 1")
    U = np.eye(n, dtype=complex) if U is None else np.asarray(U, dtype=complex)
    if not np.allclose(U.conj().T @ U, np.eye(n), atol=1e-12):
        raise ValueError("U must be unitary")

    def fwd(Z):
        return _phi(a, Z) @ U.T

    def inv(W):
        return _phi(a, W @ U.conj())

    B = dm.unit_ball(n)
    return MapSpec(BALL_AUT, {"a": a, "U": U}, B, B, fwd, inv)


def cayley2() -> MapSpec:
    """B^2 -> H^2: ((1 + z1)/(1 - z1), z2/(1 - z1))."""

    def fwd(Z):
        d = 1 - Z[:, 0]
        return np.column_stack([(1 + Z[:, 0]) / d, Z[:, 1] / d])

    def inv(W):
        d = W[:, 0] + 1
        return np.column_stack([(W[:, 0] - 1) / d, 2 * W[:, 1] / d])

    def ext(p):
        if abs(1 - p[0]) < 1e-14:
            return None
        return fwd(p[None, :])[0]

    return MapSpec(CAYLEY2, {}, dm.unit_ball(2), dm.siegel(), fwd, inv, ext)


def siegel_to_parabolic() -> MapSpec:
    """(w1, w2) -> (w1 + w2^2, w2)."""

    def fwd(W):
        return np.column_stack([W[:, 0] + W[:, 1] ** 2, W[:, 1]])

    def inv(Z):
        return np.column_stack([Z[:, 0] - Z[:, 1] ** 2, Z[:, 1]])

    return MapSpec(SIEGEL_TO_PARABOLIC, {}, dm.siegel(), dm.parabolic(), fwd, inv)


def composite(maps: list) -> MapSpec:
    """maps[0] applied first."""
    maps = list(maps)
    if not maps:
        raise ValueError("empty composite")
    for f, g in zip(maps, maps[1:]):
        if f.target.kind != g.source.kind or f.target.dim != g.source.dim:
            raise ValueError("composite maps do not chain: %r -> %r" % (f.target, g.source))

    def fwd(Z):
        for m in maps:
            Z = m._fwd(Z)
        return Z

    def inv(W):
        for m in reversed(maps):
            W = m._inv(W)
        return W

    def ext(p):
        for m in maps:
            p = m.extended_forward(p)
            if p is None:
                return None
        return p

    return MapSpec(COMPOSITE, {"maps": maps}, maps[0].source, maps[-1].target, fwd, inv, ext)


def identity(d: dm.Domain) -> MapSpec:
    return MapSpec("Identity", {}, d, d, lambda Z: Z.copy(), lambda W: W.copy())


def self_map(d: dm.Domain, fn, name="custom") -> MapSpec:
    """A holomorphic self-map given by a vectorized closed form (no inverse)."""
    return MapSpec(CUSTOM, {"name": name}, d, d, fn, None)


def chart_to(d: dm.Domain) -> MapSpec:
    """Biholomorphism from the ball onto a model unbounded domain."""
    if d.kind == dm.SIEGEL:
        return cayley2()
    if d.kind == dm.PARABOLIC:
        return composite([cayley2(), siegel_to_parabolic()])
    raise dm.UnsupportedKind("no ball chart for %r" % d)


def map_from_dict(data: dict) -> MapSpec:
    kind = data["kind"]
    prm = data.get("params", {}) or {}
    if kind == DISC_AUT:
        a = prm.get("a", 0.0)
        # a scalar complex serializes as [re, im]
        pair = isinstance(a, (list, tuple)) and len(a) == 2 and all(
            isinstance(c, (int, float)) for c in a)
        a = complex(*a) if pair else sq.decode_complex(a)[0]
        return disc_automorphism(a, float(prm.get("theta", 0.0)))
    if kind == BALL_AUT:
        a = sq.decode_complex(prm["a"])
        U = None
        if "U" in prm:
            U = np.array([sq.decode_complex(row) for row in prm["U"]])
        return ball_automorphism(a, U)
    if kind == CAYLEY2:
        return cayley2()
    if kind == SIEGEL_TO_PARABOLIC:
        return siegel_to_parabolic()
    if kind == COMPOSITE:
        return composite([map_from_dict(m) for m in prm["maps"]])
    if kind == INVERSE:
        return map_from_dict(prm["of"]).inverted()
    raise ValueError("unknown map kind %r" % kind)


# ---------------------------------------------------------- sequence transport

def pushforward_sequence(F: MapSpec, seq: sq.PointSequence) -> sq.PointSequence:
    return sq.PointSequence(F.target, sq.CUSTOM, {"pushed_by": F.kind},
                            fn=lambda ns: F._fwd(seq.points(ns)))


def pullback_sequence(F: MapSpec, seq: sq.PointSequence, source: dm.Domain | None = None):
    return sq.PointSequence(source or F.source, sq.CUSTOM, {"pulled_by": F.kind},
                            fn=lambda ns: F._inv(seq.points(ns)))


def isometry_defect(F: MapSpec, n_pairs: int, rng: np.random.Generator) -> dict:
    """max |K_target(F z, F w) - K_source(z, w)| over sampled pairs."""
    Z = dm.sample_points(F.source, n_pairs, rng)
    W = dm.sample_points(F.source, n_pairs, rng)
    k_src = dm.distance_many(F.source, Z, W)
    k_tgt = dm.distance_many(F.target, F.forward(Z), F.forward(W))
    diff = np.abs(k_src - k_tgt)
    return {"max_abs": float(diff.max()), "max_rel": float(np.max(diff / np.maximum(k_src, 1.0))),
            "pairs": int(n_pairs)}


def pushforward_horosphere_check(F: MapSpec, h: hs.Horosphere, cfg: dm.MetricConfig) -> Verdict:
    """w in E_x({u_n}, R) iff F(w) in E_{F(x)}({F(u_n)}, R), on sampled points."""
    if h.domain.kind != F.source.kind:
        raise dm.DomainError("horosphere does not live on the map's source")
    W = dm.sample_points(F.source, cfg.samples, cfg.rng(67))
    anchors = []
    try:
        anchors = sq.limit_points(h.seq, cfg.tail_start)
    except sq.SequenceError:
        pass
    for q in anchors:
        W = np.vstack([W, hs.cone_points(F.source, h.base, q)])
    img = F.forward(W)
    keep = dm.membership_many(F.target, img)
    W, img = W[keep], img[keep]
    src = hs.membership_verdicts(h, W, cfg)
    tgt_h = hs.Horosphere(F.target, F.forward(h.base), pushforward_sequence(F, h.seq), h.radius)
    tgt = hs.membership_verdicts(tgt_h, img, cfg)
    decided = agree = 0
    excluded = 0
    for a, b in zip(src, tgt):
        if a.decided and b.decided:
            decided += 1
            agree += a.decision == b.decision
        else:
            excluded += 1
    mism = decided - agree
    det = {"decided": decided, "agree": agree, "excluded": excluded,
           "inside": int(sum(v.decision for v in src))}
    if decided == 0:
        return Verdict(INCONCLUSIVE, math.nan, math.nan, False, (cfg.tail_start, cfg.tail_len), det)
    return Verdict(TRUE if mism == 0 else FALSE, agree / decided, float(-mism), True,
                   (cfg.tail_start, cfg.tail_len), det)


# ---------------------------------------------------------------- cluster sets

def probe_sequences(d: dm.Domain, p, rng: np.random.Generator | None = None, n_extra: int = 3):
    """Sequences in d converging to the boundary point p.

    Radial probes come from the domain center and from a few other interior
    points; on the disc and the ball a tangential probe is added.
    """
    p = np.asarray(p, dtype=complex)
    starts = [d.center()]
    rng = rng or np.random.default_rng(0)
    for z in dm.sample_points(d, 8 * n_extra, rng):
        if len(starts) > n_extra:
            break
        if np.linalg.norm(z - p) > 1e-3:
            starts.append(z)
    probes = []
    for c in starts:
        probes.append(sq.custom(d, fn=lambda ns, c=c: c[None, :] + (1 - 1.0 / ns)[:, None] * (p - c)[None, :]))
    if d.kind in (dm.UNIT_DISC, dm.UNIT_BALL):
        probes.append(sq.custom(d, fn=lambda ns: (p[None, :] * (1 - 1.0 / ns)[:, None])
                                * np.exp(1j / np.sqrt(ns))[:, None]))
    return probes


def _probe_limit(F: MapSpec, probe: sq.PointSequence):
    """Image limit along a probe, or None if the images escape."""
    ns = 2 ** np.arange(10, 41, 2)
    with np.errstate(all="ignore"):
        img = F.forward(probe.points(ns))
    norms = np.linalg.norm(img, axis=1)
    if not np.all(np.isfinite(norms)) or norms[-1] > ESCAPE_NORM:
        return None
    return img[-1]


def cluster_set(F: MapSpec, p, cfg: dm.MetricConfig, e_class: BoundaryClass | None = None) -> ClusterSet:
    """Gamma(F; p): limits of F along probes converging to p.

    With ``e_class`` only probes E-converging to that class are used, which
    gives the E-cluster set.
    """
    p = np.asarray(p, dtype=complex)
    probes = probe_sequences(F.source, p, cfg.rng(71))
    pts, esc, used = [], False, 0
    for probe in probes:
        if e_class is not None:
            v = e_limit(F.source, F.source.center(), probe, e_class, cfg)
            if not v.decision:
                continue
        used += 1
        q = _probe_limit(F, probe)
        if q is None:
            esc = True
        else:
            pts.append(q)
    return ClusterSet(merge_points(pts, 10 * cfg.tol), esc,
                      {"probes": len(probes), "used": used})


def e_cluster_set(F: MapSpec, p, cfg: dm.MetricConfig) -> ClusterSet:
    cls = BoundaryClass(sq.radial(F.source, p), F.source)
    return cluster_set(F, p, cfg, e_class=cls)


# ------------------------------------------------------------------ Ch(p)

def _normal_cone(d: dm.Domain, p) -> list:
    """Complex outward normals a of supporting half-spaces Re<z - p, a> <= 0."""
    k = d.kind
    if k in (dm.UNIT_DISC, dm.UNIT_BALL):
        return [p / np.linalg.norm(p)]
    if k == dm.POLYDISC:
        out = []
        for j in range(d.dim):
            if abs(abs(p[j]) - 1) < 1e-12:
                e = np.zeros(d.dim, dtype=complex)
                e[j] = p[j]
                out.append(e)
        return out
    if k == dm.HALF_SPACE:
        return [dm._half_space(d)[0]]
    if k == dm.SIEGEL:
        a = np.concatenate([[-0.5], p[1:]])
        return [a / np.linalg.norm(a)]
    if k == dm.PARABOLIC:
        a = np.array([-0.5, 2 * p[1].real], dtype=complex)
        return [a / np.linalg.norm(a)]
    dirs, h = dm._sampled_table(d)
    gaps = h - dirs @ dm.to_real(p)
    sel = dirs[gaps < 1e-6]
    return [dm.from_real(u) for u in sel]


def char_set(d: dm.Domain, p, cfg: dm.MetricConfig) -> dict:
    """Ch(p): the intersection of complex supporting hyperplanes at p with the closure.

    Returns the real affine hull of the set through p (basis vectors in C^n
    coordinates), its real dimension and the sampled extent along each basis
    direction.
    """
    p = np.asarray(p, dtype=complex)
    if dm.membership(d, p):
        raise dm.DomainError("Ch(p) needs a boundary point, got an interior point")
    rho = lambda Z: dm.defining_function(d, Z)
    if abs(rho(p[None, :])[0]) > 1e-9:
        raise dm.DomainError("point is not on the boundary")
    normals = _normal_cone(d, p)
    if not normals:
        raise dm.DomainError("no supporting functional found at p")
    A = np.array([np.conj(a) for a in normals])  # <z - p, a> = conj(a) . (z - p)
    _, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-10))
    basis_c = vh[rank:].conj()  # complex null space vectors
    if basis_c.shape[0] == 0:
        return {"point": p, "real_dim": 0, "basis": [], "extent": [],
                "supporting_functionals": len(normals)}
    # real directions spanning the complex null space, plus mixtures
    real_dirs = []
    for b in basis_c:
        real_dirs.append(b)
        real_dirs.append(1j * b)
    rng = cfg.rng(73)
    for _ in range(32):
        c = rng.normal(size=len(real_dirs))
        real_dirs.append(sum(ci * v for ci, v in zip(c, real_dirs[:2 * len(basis_c)])))
    feasible = []
    for v in real_dirs:
        v = v / np.linalg.norm(v)
        for sgn in (1, -1):
            pts = p[None, :] + sgn * np.array([1e-3, 1e-1])[:, None] * v[None, :]
            if np.all(rho(pts) <= 1e-12):
                feasible.append(sgn * v)
    if not feasible:
        return {"point": p, "real_dim": 0, "basis": [], "extent": [],
                "supporting_functionals": len(normals)}
    M = np.array([dm.to_real(v) for v in feasible])
    _, s, vh = np.linalg.svd(M)
    r = int(np.sum(s > 1e-8 * s[0]))
    basis = [dm.from_real(vh[i]) for i in range(r)]
    extent = []
    for b in basis:
        ext = []
        for sgn in (1, -1):
            t = 0.0
            for step in np.geomspace(1e-3, 10, 25):
                if rho((p + sgn * step * b)[None, :])[0] <= 1e-12:
                    t = step
            ext.append(t)
        extent.append(ext)
    return {"point": p, "real_dim": r, "basis": basis, "extent": extent,
            "supporting_functionals": len(normals)}


# -------------------------------------------------------- Denjoy-Wolff

@dataclass
class OrbitReport:
    limit: np.ndarray | None
    iterations: int
    stagnated: bool
    orbit: np.ndarray


def iterate_orbit(f: MapSpec, z0, max_iter: int) -> OrbitReport:
    """Iterate f from z0.

    Iteration continues on the closure once the orbit reaches the boundary
    numerically (automorphisms extend there), and stops when a step drops
    below 1e-12. Tangential coordinates of ball orbits only contract at the
    square root of the normal rate, so stopping at the boundary alone would
    leave them far from the limit.
    """
    d = f.source
    z = dm.as_point(d, z0)
    orbit = [z]
    n_inside = 1
    for _ in range(max_iter):
        with np.errstate(all="ignore"):
            z_new = f.forward(z)
        if not np.all(np.isfinite(z_new)):
            break
        if dm.defining_function(d, z_new[None, :])[0] > 1e-9 or (
                not d.bounded and np.linalg.norm(z_new) > ESCAPE_NORM):
            break
        step = np.linalg.norm(z_new - z)
        orbit.append(z_new)
        if dm.membership(d, z_new) and n_inside == len(orbit) - 1:
            n_inside += 1
        z = z_new
        if step < 1e-12:
            break
    orbit = np.array(orbit)
    last = orbit[-1]
    if d.bounded:
        near_bdry = dm.defining_function(d, last[None, :])[0] > -1e-6
    else:
        near_bdry = np.linalg.norm(last) > ESCAPE_NORM
    lim = sq._snap(d, last) if near_bdry else None
    # only strictly interior iterates are usable as a horosphere sequence
    return OrbitReport(lim, len(orbit) - 1, not near_bdry, orbit[:n_inside])


def denjoy_wolff_iterate(d: dm.Domain, f: MapSpec, z0, cfg: dm.MetricConfig, n_starts: int = 5):
    """Orbit target set from several starts and the invariance f(E) in E.

    The horosphere sequence is the orbit of z0 itself; orbits of
    fixed-point-free automorphisms approach the boundary geometrically, so
    the tail window runs over small indices.
    """
    if f.source.kind != d.kind or f.target.kind != d.kind:
        raise dm.DomainError("f must be a self-map of d")
    z0 = dm._require_inside(d, z0)
    max_iter = max(cfg.samples, 64)
    starts = [z0] + list(dm.sample_points(d, 4 * n_starts, cfg.rng(79)))
    starts = [s for s in starts if not d.bounded or dm.boundary_distance(d, s) > 0.05][:n_starts]
    reports = [iterate_orbit(f, s, max_iter) for s in starts]
    details = {"iterations": [r.iterations for r in reports]}
    window = (0, 0)
    if any(r.stagnated for r in reports):
        det = dict(details, reason="orbit stagnates: interior fixed point suspected")
        return (ClusterSet([], False, det),
                Verdict(INCONCLUSIVE, math.nan, math.nan, False, window, det))
    limits = [r.limit for r in reports]
    spread = max(np.linalg.norm(a - b) for a in limits for b in limits)
    target = ClusterSet(merge_points(limits, 1e-6), False, dict(details, spread=float(spread)))

    # horosphere invariance along the orbit of z0
    orbit = reports[0].orbit
    n_avail = len(orbit) - 1
    if n_avail < 16:
        det = dict(details, reason="orbit too short for a tail window")
        return target, Verdict(INCONCLUSIVE, math.nan, math.nan, False, window, det)
    ocfg = replace(cfg, tail_start=4, tail_len=8, max_start=max(4, min(16, n_avail - 8)))
    seq = sq.custom(d, fn=lambda ns: orbit[ns])
    W = dm.sample_points(d, cfg.samples, cfg.rng(83))
    est_w, _, _ = hs.limsup_many(d, z0, seq, W, ocfg)
    est_fw, _, _ = hs.limsup_many(d, z0, seq, f.forward(W), ocfg)
    decided = violations = 0
    for R in cfg.r_grid:
        thr = 0.5 * math.log(R)
        inside = est_w < thr - cfg.tol
        fin = est_fw < thr - cfg.tol
        fout = est_fw > thr + cfg.tol
        decided += int(np.sum(inside & (fin | fout)))
        violations += int(np.sum(inside & fout))
    det = dict(details, decided=decided, violations=violations,
               window=[ocfg.tail_start, ocfg.tail_len])
    outcome = TRUE if violations == 0 and decided > 0 else (FALSE if violations else INCONCLUSIVE)
    return target, Verdict(outcome, float(violations), float(-violations), True,
                           (ocfg.tail_start, ocfg.tail_len), det)
