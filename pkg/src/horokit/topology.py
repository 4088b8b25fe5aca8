"""Horosphere topology: convergence, E-limits, impressions and principal parts.

Both existential definitions (witness classes for convergence, sequences
realising a cluster point) are searched with a finite probe battery, so a
negative answer is evidence rather than proof. Topological statements are
about R -> 0, so the radius grid used here is the configured grid extended
by 1e-3 ... 1e-6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import domains as dm
from . import horospheres as hs
from . import sequences as sq
from .verdict import FALSE, INCONCLUSIVE, TRUE, Verdict

SMALL_RADII = (1e-3, 1e-4, 1e-5, 1e-6)


@dataclass(eq=False)
class BoundaryClass:
    representative: sq.PointSequence
    domain: dm.Domain

    @classmethod
    def of(cls, seq: sq.PointSequence, cfg: dm.MetricConfig | None = None, x=None):
        """Wrap seq, checking admissibility when cfg is given."""
        if cfg is not None:
            base = seq.domain.center() if x is None else x
            v = hs.is_admissible(seq.domain, base, seq, cfg)
            if v.outcome != TRUE:
                raise ValueError("representative is not admissible (%s)" % v.outcome)
        return cls(seq, seq.domain)

    def to_dict(self):
        return {"representative": self.representative.to_dict()}


@dataclass
class ClusterSet:
    points: list = field(default_factory=list)
    escapes_to_infinity: bool = False
    details: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.points)

    def to_dict(self):
        pts = sorted((np.asarray(p, dtype=complex) for p in self.points),
                     key=lambda p: tuple(np.round(np.concatenate([p.real, p.imag]), 9)))
        return {"points": [list(p) for p in pts],
                "escapes_to_infinity": bool(self.escapes_to_infinity),
                "details": self.details}


def merge_points(points, radius):
    """Greedy clustering: representatives pairwise farther apart than radius."""
    reps = []
    for p in points:
        p = np.asarray(p, dtype=complex)
        if not any(np.linalg.norm(p - q) <= radius for q in reps):
            reps.append(p)
    return reps


def radius_grid(cfg: dm.MetricConfig):
    return sorted(set(cfg.r_grid) | set(SMALL_RADII))


def _oracle(d, x, cls: BoundaryClass, cfg):
    return hs.HoroOracle(d, x, cls.representative, cfg)


# --------------------------------------------------------------- convergence

def converges_H(d: dm.Domain, x, classes: list, target: BoundaryClass,
                cfg: dm.MetricConfig) -> Verdict:
    """For each R: an index m_R after which every class meets the target horosphere."""
    x = dm._require_inside(d, x)
    tgt = _oracle(d, x, target, cfg)
    oracles = [_oracle(d, x, c, cfg) for c in classes]
    m_r = {}
    for R in cfg.r_grid:
        hits = [hs.horosphere_intersect(o, tgt, R)[0] for o in oracles]
        m = len(hits)
        while m > 0 and hits[m - 1]:
            m -= 1
        if m == len(hits):
            exact = tgt.exact and all(o.exact for o in oracles)
            return Verdict(FALSE if exact else INCONCLUSIVE, math.nan, math.nan, exact,
                           (0, len(classes)), {"radius": R, "m_R": m_r, "hits": hits})
        m_r[repr(R)] = m
    return Verdict(TRUE, math.nan, math.nan, True, (0, len(classes)), {"m_R": m_r})


def e_limit(d: dm.Domain, x, seq_to_test: sq.PointSequence, target: BoundaryClass,
            cfg: dm.MetricConfig) -> Verdict:
    """Tail of seq_to_test inside the target horosphere for every grid radius."""
    x = dm._require_inside(d, x)
    tgt = _oracle(d, x, target, cfg)
    tails = [seq_to_test.window(cfg.tail_start * 2 ** k, cfg.tail_len) for k in range(3)]
    lv = [tgt.level(T) for T in tails]
    worst = [float(np.max(v)) for v in lv]
    trend_down = worst[-1] <= worst[0] * (1 + 1e-9)
    details = {"tail_level_max": worst}
    for R in cfg.r_grid:
        inside = tgt.contains(tails[-1], R)
        if np.any(inside == 0):
            return Verdict(FALSE, worst[-1], R - worst[-1], True,
                           (cfg.tail_start * 4, cfg.tail_len), dict(details, radius=R))
        if np.any(inside < 0):
            return Verdict(INCONCLUSIVE, worst[-1], R - worst[-1], False,
                           (cfg.tail_start * 4, cfg.tail_len), dict(details, radius=R))
    return Verdict(TRUE, worst[-1], min(cfg.r_grid) - worst[-1], bool(trend_down),
                   (cfg.tail_start * 4, cfg.tail_len), details)


# ------------------------------------------------------- boundary samples

def boundary_samples(d: dm.Domain, n: int, rng: np.random.Generator) -> np.ndarray:
    """Points on the topological boundary of a bounded model domain."""
    if d.kind == dm.UNIT_DISC:
        th = np.linspace(0, 2 * np.pi, n, endpoint=False)
        return np.exp(1j * th)[:, None]
    if d.kind == dm.UNIT_BALL:
        g = rng.normal(size=(n, d.dim)) + 1j * rng.normal(size=(n, d.dim))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    if d.kind == dm.POLYDISC:
        out = []
        per = max(n // d.dim, 1)
        for j in range(d.dim):
            pts = np.sqrt(rng.uniform(size=(per, d.dim))) * np.exp(
                2j * np.pi * rng.uniform(size=(per, d.dim)))
            # include the real diameter and the torus
            lin = np.linspace(-1, 1, 41)
            extra = np.zeros((lin.size, d.dim), dtype=complex)
            extra[:, :] = lin[:, None]
            pts = np.vstack([pts, extra])
            pts[:, j] = np.exp(2j * np.pi * rng.uniform(size=pts.shape[0]))
            pts[-41:, j] = 1.0
            out.append(pts)
        return np.vstack(out)
    raise dm.UnsupportedKind("boundary sampling needs a bounded model domain")


# ----------------------------------------------------------- impressions

def _witness_classes(d: dm.Domain, z: np.ndarray):
    """Candidate admissible classes whose horospheres contain a near-boundary z."""
    if d.kind in (dm.UNIT_DISC, dm.UNIT_BALL):
        return [sq.radial(d, z / np.linalg.norm(z))]
    if d.kind == dm.POLYDISC and d.dim == 2:
        q = np.where(np.abs(z) > 0, z / np.where(np.abs(z) > 0, np.abs(z), 1), 1)
        return [sq.bidisc_w1(q[0], q[1]), sq.bidisc_w2(q[0]), sq.bidisc_w3(q[1])]
    raise dm.UnsupportedKind("no witness families for %r" % d)


def _probe_sequences(d, z0, q, count=24):
    """Radial and tangential probes converging to the boundary point q."""
    eps = 2.0 ** -np.arange(3, 3 + count)
    radial = q[None, :] * (1 - eps)[:, None] + eps[:, None] * z0[None, :]
    probes = [radial]
    if d.kind in (dm.UNIT_DISC, dm.UNIT_BALL):
        # rotate within the complex line of q by an angle ~ sqrt(eps)
        rot = np.exp(1j * np.sqrt(eps))[:, None]
        probes.append(radial * rot)
    return [P[dm.membership_many(d, P)] for P in probes]


def _probe_converges(d, x, probe, tgt: hs.HoroOracle, radii, cfg, tail=6):
    """Last ``tail`` probe points each have a witness class meeting the target."""
    if len(probe) < tail:
        return False
    for z in probe[-tail:]:
        ok_all = True
        for R in radii:
            found = False
            for w in _witness_classes(d, z):
                o = hs.HoroOracle(d, x, w, cfg)
                if o.contains(z[None, :], R)[0] == 1 and hs.horosphere_intersect(o, tgt, R)[0]:
                    found = True
                    break
            if not found:
                ok_all = False
                break
        if not ok_all:
            return False
    return True


def _via_ball_chart(fn, d, x, cls, cfg):
    """Run a bounded-domain estimator through the Cayley chart."""
    from . import maps
    F = maps.chart_to(d)
    ball = dm.unit_ball(2)
    pulled = maps.pullback_sequence(F, cls.representative, ball)
    xb = F.inverse(np.asarray(x, dtype=complex))
    res = fn(ball, xb, BoundaryClass(pulled, ball), cfg)
    pts, esc = [], False
    for p in res.points:
        img = F.extended_forward(p)
        if img is None:
            esc = True
        else:
            pts.append(img)
    return ClusterSet(pts, esc, dict(res.details, chart="ball"))


def impression_estimate(d: dm.Domain, x, cls: BoundaryClass, cfg: dm.MetricConfig) -> ClusterSet:
    """Euclidean limits of probes converging to cls in the horosphere topology."""
    if d.kind in (dm.SIEGEL, dm.PARABOLIC):
        return _via_ball_chart(impression_estimate, d, x, cls, cfg)
    x = dm._require_inside(d, x)
    tgt = _oracle(d, x, cls, cfg)
    radii = radius_grid(cfg)
    rng = cfg.rng(53)
    cands = list(boundary_samples(d, cfg.samples, rng)) + tgt.anchor_points()
    # prefilter: keep targets whose radial probe lies in the closure region
    accepted = []
    for q in cands:
        q = np.asarray(q, dtype=complex)
        for probe in _probe_sequences(d, x, q):
            if _probe_converges(d, x, probe, tgt, radii, cfg):
                accepted.append(q)
                break
    pts = merge_points(accepted, 10 * cfg.tol)
    return ClusterSet(pts, False, {"probed": len(cands), "accepted": len(accepted),
                                   "radii": radii})


def principal_part_estimate(d: dm.Domain, x, cls: BoundaryClass,
                            cfg: dm.MetricConfig) -> ClusterSet:
    """Boundary points in the closure of E_x(R) for every radius of the grid."""
    if d.kind in (dm.SIEGEL, dm.PARABOLIC):
        return _via_ball_chart(principal_part_estimate, d, x, cls, cfg)
    x = dm._require_inside(d, x)
    tgt = _oracle(d, x, cls, cfg)
    radii = radius_grid(cfg)
    rng = cfg.rng(59)
    cands = np.array(list(boundary_samples(d, cfg.samples, rng)) + tgt.anchor_points())
    per_r = []
    for R in radii:
        ok = np.zeros(len(cands), dtype=bool)
        for t in (1e-6 * min(R, 1.0), 1e-8 * min(R, 1.0)):
            W = (1 - t) * cands + t * x[None, :]
            inside = dm.membership_many(d, W)
            res = np.zeros(len(cands), dtype=int)
            if inside.any():
                res[inside] = tgt.contains(W[inside], R)
            ok |= res == 1
        per_r.append(ok)
    keep = np.logical_and.reduce(per_r)
    if not keep.any():
        return ClusterSet([], False, {"outcome": INCONCLUSIVE, "radii": radii})
    coarse = [np.flatnonzero(o) for o in per_r]
    r_indep = all(np.array_equal(coarse[0], c) for c in coarse)
    kept = cands[keep]
    pts = merge_points(kept, 10 * cfg.tol)
    return ClusterSet(pts, False, {"radii": radii, "r_independent": bool(r_indep),
                                   "kept": int(keep.sum()), "probed": len(cands)})


# ------------------------------------------------------------- bidisc

def bidisc_topology_trivial_check(cfg: dm.MetricConfig, n_q: int = 8) -> dict:
    """Closure steps A, B, C: corner and face classes accumulate on each other."""
    P = dm.polydisc(2)
    x = np.zeros(2, dtype=complex)
    rows = []

    def check(step, src, dst):
        v = converges_H(P, x, [BoundaryClass(src, P)] * 4, BoundaryClass(dst, P), cfg)
        rows.append({"step": step, "from": src.describe(), "to": dst.describe(),
                     "verdict": v.to_dict()})
        return v.decision

    ok = True
    w1 = sq.bidisc_w1(1, 1)
    ok &= check("A", w1, sq.bidisc_w2(1))
    ok &= check("A", w1, sq.bidisc_w3(1))
    for k in range(n_q):
        q = complex(np.exp(2j * np.pi * k / n_q))
        ok &= check("B", sq.bidisc_w2(1), sq.bidisc_w1(1, q))
        ok &= check("C", sq.bidisc_w3(1), sq.bidisc_w1(q, 1))
    return {"passed": bool(ok), "pairs": rows}
