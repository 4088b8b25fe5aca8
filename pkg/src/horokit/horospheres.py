"""Sequence horospheres, admissibility, equivalence and the bidisc classification.

The horosphere of a sequence {u_n} with base point x and radius R is

    E_x({u_n}, R) = {w : limsup_n K(w, u_n) - K(x, u_n) < 1/2 log R}.

The limsup is estimated on a tail window (see ``verdict.tail_limsup``).
Closed-form models are used where they exist: the disc and the ball, whose
horospheres only depend on the boundary limit points, and the bidisc, where
the rule max(t1 min(1, T2), t2 min(1, T1)) < R describes every convergent
sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import domains as dm
from . import sequences as sq
from .verdict import (FALSE, INCONCLUSIVE, TRUE, UNDECIDABLE, Verdict,
                      tail_limsup, threshold_verdict)


class NonConvergentSequence(ValueError):
    """The sequence does not converge to a single boundary point."""


@dataclass(frozen=True, eq=False)
class Horosphere:
    domain: dm.Domain
    base: np.ndarray
    seq: sq.PointSequence
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        object.__setattr__(self, "base", dm._require_inside(self.domain, self.base))

    @property
    def threshold(self) -> float:
        return 0.5 * math.log(self.radius)

    def with_radius(self, R: float) -> "Horosphere":
        return Horosphere(self.domain, self.base, self.seq, R)


# ------------------------------------------------------- limsup machinery

def limsup_many(d: dm.Domain, x, seq: sq.PointSequence, W, cfg: dm.MetricConfig):
    """Tail limsup of K(w, u_n) - K(x, u_n) for every row w of W.

    Returns (estimates, converged, starts). Closed-form kinds only.
    """
    W = dm._as_points(d, W)
    x = dm.as_point(d, x)

    def window_fn(start, length, idx):
        rows = W if idx is None else W[idx]
        hi, _ = dm.window_stats(d, rows, seq.window(start, length), x)
        return hi[None, :]

    return tail_limsup(window_fn, cfg)


def _bracketed_limsup(d, x, seq, w, cfg):
    """(low, high) bounds for the window limsup using certified brackets."""
    lo_est, hi_est = -math.inf, -math.inf
    U = seq.window(cfg.tail_start, cfg.tail_len)
    for u in U:
        lw, uw = dm.convex_distance_bounds(d, w, u, cfg)
        lx, ux = dm.convex_distance_bounds(d, x, u, cfg)
        hi_est = max(hi_est, uw - lx)
        lo_est = max(lo_est, lw - ux)
    return lo_est, hi_est


def membership_verdicts(h: Horosphere, W, cfg: dm.MetricConfig) -> list:
    """One Verdict per row of W (vectorized horosphere_contains)."""
    d = h.domain
    W = dm._as_points(d, W)
    inside = dm.membership_many(d, W)
    if not inside.all():
        raise dm.DomainError("sample point outside the domain")
    thr = h.threshold
    if not dm.has_closed_form(d):
        out = []
        for w in W:
            lo, hi = _bracketed_limsup(d, h.base, h.seq, w, cfg)
            window = (cfg.tail_start, cfg.tail_len)
            det = {"bracket": [lo, hi]}
            if hi < thr - cfg.tol:
                out.append(Verdict(TRUE, hi, thr - hi, True, window, det))
            elif lo > thr + cfg.tol:
                out.append(Verdict(FALSE, lo, thr - lo, True, window, det))
            else:
                out.append(Verdict(UNDECIDABLE, 0.5 * (lo + hi), thr - 0.5 * (lo + hi), True, window, det))
        return out
    est, conv, starts = limsup_many(d, h.base, h.seq, W, cfg)
    return [threshold_verdict(e, thr, cfg.tol, c, (int(s), cfg.tail_len))
            for e, c, s in zip(est, conv, starts)]


def horosphere_contains(h: Horosphere, w, cfg: dm.MetricConfig) -> Verdict:
    """Decide w in E_x({u_n}, R); undecidable inside the tolerance band."""
    w = dm._require_inside(h.domain, w)
    return membership_verdicts(h, w[None, :], cfg)[0]


def disc_horosphere_closed_form(p, R: float):
    """(center, radius) of the disc horosphere at the unimodular point p."""
    p = complex(p)
    if abs(abs(p) - 1.0) > 1e-12:
        raise ValueError("p must be unimodular")
    if not R > 0:
        raise ValueError("R must be positive")
    return p / (R + 1.0), R / (R + 1.0)


def horodisc_ratio(p, Z) -> np.ndarray:
    """|p - z|^2 / (1 - |z|^2), the disc horosphere level function."""
    Z = np.asarray(Z, dtype=complex)
    return np.abs(p - Z) ** 2 / (1.0 - np.abs(Z) ** 2)


def ball_horo_ratio(p, Z) -> np.ndarray:
    """|1 - <z, p>|^2 / (1 - |z|^2) for rows z of Z."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    p = np.asarray(p, dtype=complex)
    return np.abs(1.0 - Z @ np.conj(p)) ** 2 / (1.0 - np.sum(np.abs(Z) ** 2, axis=1))


def busemann_value(d: dm.Domain, x, seq: sq.PointSequence, z, cfg: dm.MetricConfig):
    """Windowed limit of K(z, u_n) - K(x, u_n) and whether it settled."""
    x = dm._require_inside(d, x)
    z = dm._require_inside(d, z)
    if np.array_equal(x, z):
        return 0.0, True
    Z = z[None, :]

    def window_fn(start, length, idx):
        hi, lo = dm.window_stats(d, Z, seq.window(start, length), x)
        return np.array([hi[0], lo[0]])

    # both statistics must settle, and the window must not oscillate
    start = cfg.tail_start
    hist = []
    while True:
        hi, lo = window_fn(start, cfg.tail_len, None)
        hist.append((hi, lo))
        if len(hist) >= 3:
            moves = [max(abs(a[0] - b[0]), abs(a[1] - b[1]))
                     for a, b in zip(hist[-3:-1], hist[-2:])]
            if max(moves) < cfg.tol or start * 2 > cfg.max_start:
                break
        elif start * 2 > cfg.max_start:
            break
        start *= 2
    hi, lo = hist[-1]
    settled = len(hist) >= 3 and max(
        max(abs(a[0] - b[0]), abs(a[1] - b[1])) for a, b in zip(hist[-3:-1], hist[-2:])) < cfg.tol
    converged = bool(settled and hi - lo <= cfg.tol)
    return float(0.5 * (hi + lo)) if converged else float(hi), converged


# ------------------------------------------------------ bidisc classification

@dataclass
class BidiscClass:
    T1: float
    T2: float
    case: str  # "FaceZ1", "FaceZ2" or "Corner"
    p: tuple   # limit point (p1, p2)

    def __post_init__(self):
        if self.case == "Corner" and 0 < self.T1 < math.inf and 0 < self.T2 < math.inf:
            if self.T1 * self.T2 < 1 - 1e-6:
                raise ValueError("T1 * T2 must be >= 1")

    @property
    def multipliers(self):
        p1, p2 = self.p
        m1 = min(1.0, self.T2) if abs(abs(p1) - 1) < 1e-9 else 0.0
        m2 = min(1.0, self.T1) if abs(abs(p2) - 1) < 1e-9 else 0.0
        return m1, m2

    def model(self) -> "BidiscModel":
        m1, m2 = self.multipliers
        return BidiscModel((complex(self.p[0]), complex(self.p[1])), (m1, m2))

    def to_dict(self):
        return {"T1": _ext(self.T1), "T2": _ext(self.T2), "case": self.case,
                "p": [complex(c) for c in self.p]}


def _ext(t):
    return "inf" if t == math.inf else float(t)


@dataclass(frozen=True)
class BidiscModel:
    """Closed-form bidisc horosphere {t1 m1 < R, t2 m2 < R} at base point 0.

    Other base points rescale R by value(x) (see ``HoroModel.scales``).
    """

    p: tuple
    m: tuple

    def value(self, W) -> np.ndarray:
        W = np.atleast_2d(np.asarray(W, dtype=complex))
        out = np.zeros(W.shape[0])
        for j in range(2):
            if self.m[j] > 0:
                out = np.maximum(out, self.m[j] * horodisc_ratio(self.p[j], W[:, j]))
        return out

    def contains(self, W, R) -> np.ndarray:
        return self.value(W) < R

    def representative(self) -> sq.PointSequence:
        m1, m2 = self.m
        if m1 > 0 and m2 > 0:
            return sq.bidisc_w1(self.p[0], self.p[1])
        if m1 > 0:
            return sq.bidisc_w2(self.p[0])
        return sq.bidisc_w3(self.p[1])


def _ratio_trend(est):
    """Classify a sequence of window maxima taken at doubling starts as
    0, +inf or a finite limit."""
    e = np.asarray(est, dtype=float)
    if e[-1] == math.inf:
        return math.inf
    if e[-1] <= 0:
        return 0.0
    r1, r2 = e[-2] / e[-3], e[-1] / e[-2]
    if r1 > 1.33 and r2 > 1.33:
        return math.inf
    if r1 < 0.75 and r2 < 0.75:
        return 0.0
    return float(e[-1])


def _precision_cap(seq, start, doublings):
    """Stop doubling before 1 - |u|^2 loses too many digits."""
    n = start
    for k in range(doublings):
        u = seq.point(n * 2)
        if np.min(1.0 - np.abs(u) ** 2) < 1e-11:
            return k
        n *= 2
    return doublings


def bidisc_classify(seq: sq.PointSequence, cfg: dm.MetricConfig) -> BidiscClass:
    """T1, T2 and the case label of a sequence converging in the bidisc."""
    if seq.domain.kind != dm.POLYDISC or seq.domain.dim != 2:
        raise dm.DomainError("bidisc_classify needs Polydisc(2)")
    k, lims = sq.residue_classes(seq, cfg.tail_start, max_period=1, tol=max(cfg.tol, 1e-3))
    if k != 1:
        raise NonConvergentSequence("sequence does not converge; use canonical_form_bidisc")
    doublings = _precision_cap(seq, cfg.tail_start, 8)
    doublings = max(doublings, 3)
    starts = [cfg.tail_start * 2 ** j for j in range(doublings)]
    delta = []
    for s in starts:
        U = seq.window(s, cfg.tail_len)
        delta.append(1.0 - np.abs(U) ** 2)
    dmax = np.array([dl.max(axis=0) for dl in delta])
    to_bdry = [bool(dmax[-1, j] < 1e-2 and dmax[-1, j] < 0.9 * dmax[0, j]) for j in range(2)]
    if not any(to_bdry):
        raise NonConvergentSequence("sequence does not approach the boundary")
    last = sq._snap(seq.domain, lims[0][1])
    p = [last[j] / abs(last[j]) if to_bdry[j] else last[j] for j in range(2)]
    with np.errstate(divide="ignore"):
        t1 = [np.max(dl[:, 0] / dl[:, 1]) for dl in delta]
        t2 = [np.max(dl[:, 1] / dl[:, 0]) for dl in delta]
    T1, T2 = _ratio_trend(t1), _ratio_trend(t2)
    if to_bdry[0] and not to_bdry[1]:
        case, T1, T2 = "FaceZ1", 0.0, math.inf
    elif to_bdry[1] and not to_bdry[0]:
        case, T1, T2 = "FaceZ2", math.inf, 0.0
    else:
        case = "Corner"
    p = tuple(_round_unimodular(c) for c in p)
    return BidiscClass(T1, T2, case, p)


def _round_unimodular(c):
    return complex(c)


def bidisc_model(seq: sq.PointSequence, cfg: dm.MetricConfig) -> BidiscModel:
    """Closed-form horosphere of an admissible bidisc sequence.

    Convergent residue subsequences are classified separately; their
    horospheres are intersected, which per coordinate keeps the largest
    multiplier. Different tangency points on the same active coordinate
    make the intersection empty for small R (not admissible).
    """
    k, lims = sq.residue_classes(seq, cfg.tail_start, tol=max(cfg.tol, 1e-3))
    if k is None:
        raise NonConvergentSequence("no convergent residue subsequences found")
    p = [None, None]
    m = [0.0, 0.0]
    for r, _ in lims:
        cls = bidisc_classify(seq.subsequence(k, r), cfg)
        mm = cls.multipliers
        for j in range(2):
            if mm[j] <= 0:
                continue
            if p[j] is not None and abs(p[j] - cls.p[j]) > 1e-6:
                raise NonConvergentSequence(
                    "subsequences touch different points on coordinate %d" % (j + 1))
            p[j] = cls.p[j]
            m[j] = max(m[j], mm[j])
    return BidiscModel((p[0] if p[0] is not None else 0j, p[1] if p[1] is not None else 0j),
                       tuple(m))


def canonical_form_bidisc(seq: sq.PointSequence, cfg: dm.MetricConfig) -> sq.PointSequence:
    """The W1 / W2 / W3 representative equivalent to seq."""
    return bidisc_model(seq, cfg).representative()


# ------------------------------------------------------- closed-form models

@dataclass
class HoroModel:
    """Exact horosphere family at base point x: {w : level(w) < R * scale}.

    ``kind`` is "disc", "ball" or "bidisc"; ``points`` are the tangency
    points whose horospheres are intersected.
    """

    kind: str
    points: list
    scales: list
    bidisc: BidiscModel | None = None

    def contains(self, W, R) -> np.ndarray:
        W = np.atleast_2d(np.asarray(W, dtype=complex))
        if self.kind == "bidisc":
            return self.bidisc.contains(W, R * self.scales[0])
        ok = np.ones(W.shape[0], dtype=bool)
        for q, s in zip(self.points, self.scales):
            lvl = horodisc_ratio(q[0], W[:, 0]) if self.kind == "disc" else ball_horo_ratio(q, W)
            ok &= lvl < R * s
        return ok

    def level(self, W) -> np.ndarray:
        """Smallest R with w in E(R) (supremum form); membership is level < R."""
        W = np.atleast_2d(np.asarray(W, dtype=complex))
        if self.kind == "bidisc":
            return self.bidisc.value(W) / self.scales[0]
        out = np.zeros(W.shape[0])
        for q, s in zip(self.points, self.scales):
            lvl = horodisc_ratio(q[0], W[:, 0]) if self.kind == "disc" else ball_horo_ratio(q, W)
            out = np.maximum(out, lvl / s)
        return out


def horo_model(d: dm.Domain, x, seq: sq.PointSequence, cfg: dm.MetricConfig):
    """Closed-form horosphere model, or None if none applies."""
    x = dm.as_point(d, x)
    direct = _labelled_model(d, x, seq)
    if direct is not None:
        return direct
    if d.kind in (dm.UNIT_DISC, dm.UNIT_BALL):
        try:
            pts = sq.limit_points(seq, cfg.tail_start, tol=max(cfg.tol, 1e-3))
        except sq.SequenceError:
            return None
        if any(abs(np.linalg.norm(q) - 1.0) > 1e-9 for q in pts):
            return None
        if d.kind == dm.UNIT_DISC:
            scales = [float(horodisc_ratio(q[0], x[0])) for q in pts]
            return HoroModel("disc", pts, scales)
        scales = [float(ball_horo_ratio(q, x)[0]) for q in pts]
        return HoroModel("ball", pts, scales)
    if d.kind == dm.POLYDISC and d.dim == 2:
        at_origin = bool(np.allclose(x, 0))
        try:
            # away from the origin only a convergent class has a Busemann limit,
            # which shifts by the constant log value(x)
            bm = bidisc_model(seq, cfg) if at_origin else bidisc_classify(seq, cfg).model()
        except NonConvergentSequence:
            return None
        return HoroModel("bidisc", list(bm.p), [_bidisc_scale(bm, x)], bm)
    return None


def _bidisc_scale(bm: BidiscModel, x) -> float:
    return float(bm.value(np.asarray(x)[None, :])[0]) if np.any(x) else 1.0


def _labelled_model(d, x, seq):
    """Models read off canonical labels without sampling the sequence."""
    if seq.label == sq.RADIAL and d.kind in (dm.UNIT_DISC, dm.UNIT_BALL):
        q = np.asarray(seq.params["p"], dtype=complex)
        if abs(np.linalg.norm(q) - 1.0) > 1e-12:
            return None
        if d.kind == dm.UNIT_DISC:
            return HoroModel("disc", [q], [float(horodisc_ratio(q[0], x[0]))])
        return HoroModel("ball", [q], [float(ball_horo_ratio(q, x)[0])])
    if d.kind == dm.POLYDISC and d.dim == 2:
        prm = seq.params
        if seq.label == sq.W1:
            bm = BidiscModel((prm["p1"], prm["p2"]), (1.0, 1.0))
        elif seq.label == sq.W2:
            bm = BidiscModel((prm["p"], 0j), (1.0, 0.0))
        elif seq.label == sq.W3:
            bm = BidiscModel((0j, prm["p"]), (0.0, 1.0))
        else:
            return None
        return HoroModel("bidisc", list(bm.p), [_bidisc_scale(bm, x)], bm)
    return None


def _disc_pairwise_empty(model: HoroModel, R: float) -> bool:
    """Exact test: two of the horodiscs are disjoint at radius R."""
    discs = []
    for q, s in zip(model.points, model.scales):
        c, r = disc_horosphere_closed_form(q[0], R * s)
        discs.append((c, r))
    for i in range(len(discs)):
        for j in range(i + 1, len(discs)):
            (c1, r1), (c2, r2) = discs[i], discs[j]
            if abs(c1 - c2) >= r1 + r2:
                return True
    return False


def _bidisc_empty(d, x, seq, cfg, R):
    """Conflicting tangency points on an active coordinate: the two horodiscs
    are disjoint once R <= |p - q| / 2 (R scaled by the multipliers)."""
    k, lims = sq.residue_classes(seq, cfg.tail_start, tol=max(cfg.tol, 1e-3))
    if k is None:
        return False
    per = [[], []]
    for r, _ in lims:
        try:
            cls = bidisc_classify(seq.subsequence(k, r), cfg)
        except NonConvergentSequence:
            return False
        for j, mj in enumerate(cls.multipliers):
            if mj > 0:
                per[j].append((cls.p[j], mj))
    for j in range(2):
        for a in range(len(per[j])):
            for b in range(a + 1, len(per[j])):
                (p, m), (q, n) = per[j][a], per[j][b]
                c1, r1 = disc_horosphere_closed_form(p, R / m)
                c2, r2 = disc_horosphere_closed_form(q, R / n)
                if abs(c1 - c2) >= r1 + r2:
                    return True
    return False


def cone_points(d: dm.Domain, x, q, count: int = 24) -> np.ndarray:
    """Points x + (1 - eps)(q - x) for eps = 2^-1 ... 2^-count."""
    x = np.asarray(x, dtype=complex)
    q = np.asarray(q, dtype=complex)
    eps = 2.0 ** -np.arange(1, count + 1)
    pts = x[None, :] + (1 - eps)[:, None] * (q - x)[None, :]
    return pts[dm.membership_many(d, pts)]


def _escape_check(d, x, seq, cfg):
    """Liminf of K(x, u_n) grows across doublings (compact divergence)."""
    vals = []
    start = cfg.tail_start
    for _ in range(4):
        U = seq.window(start, cfg.tail_len)
        if dm.has_closed_form(d):
            k = dm.distance_many(d, np.repeat(x[None, :], len(U), axis=0), U)
        else:
            k = np.array([dm.convex_distance_bounds(d, x, u, cfg)[0] for u in U])
        vals.append(float(np.min(k)))
        start *= 2
    growth = np.diff(vals)
    return bool(np.all(growth > 0.05)), vals


def is_admissible(d: dm.Domain, x, seq: sq.PointSequence, cfg: dm.MetricConfig) -> Verdict:
    """Escape to the boundary plus a witness in E_x(R) for every R of the grid."""
    x = dm._require_inside(d, x)
    escapes, kvals = _escape_check(d, x, seq, cfg)
    window = (cfg.tail_start, cfg.tail_len)
    details = {"escape_values": kvals, "r_grid": list(cfg.r_grid)}
    if not escapes:
        return Verdict(FALSE, kvals[-1], math.nan, True, window,
                       dict(details, reason="K(x, u_n) does not escape"))
    model = horo_model(d, x, seq, cfg)
    witnesses = {}
    for R in cfg.r_grid:
        if model is not None:
            found = _model_witness(d, x, model, R, cfg)
            empty = found is None and (model.kind == "bidisc" or (
                model.kind == "disc" and _disc_pairwise_empty(model, R)))
        else:
            empty = (d.kind == dm.POLYDISC and d.dim == 2 and np.allclose(x, 0)
                     and _bidisc_empty(d, x, seq, cfg, R))
            found = None if empty else _search_witness(d, x, seq, R, cfg)
        if empty:
            return Verdict(FALSE, math.nan, math.nan, True, window,
                           dict(details, reason="horosphere empty", radius=R,
                                witnesses=witnesses))
        if found is None:
            return Verdict(INCONCLUSIVE, math.nan, math.nan, False, window,
                           dict(details, reason="no witness within budget", radius=R,
                                witnesses=witnesses))
        witnesses[repr(R)] = found
    return Verdict(TRUE, math.nan, math.nan, True, window,
                   dict(details, witnesses=witnesses))


def _model_witness(d, x, model: HoroModel, R, cfg):
    cands = []
    if model.kind == "bidisc":
        bm = model.bidisc
        q = np.array([bm.p[j] if bm.m[j] > 0 else 0j for j in range(2)])
        cands.append(cone_points(d, np.zeros(2, complex), q))
    else:
        for q in model.points:
            cands.append(cone_points(d, x, q))
        mean = np.mean(model.points, axis=0)
        if np.linalg.norm(mean) > 1e-12:
            cands.append(cone_points(d, x, mean / np.linalg.norm(mean)))
    cands.append(dm.sample_points(d, cfg.samples, cfg.rng(11)))
    C = np.vstack(cands)
    ok = model.contains(C, R)
    if ok.any():
        return C[int(np.argmax(ok))]
    return None


def _search_witness(d, x, seq, R, cfg):
    cands = [seq.window(cfg.tail_start, cfg.tail_len)]
    try:
        for q in sq.limit_points(seq, cfg.tail_start):
            cands.insert(0, cone_points(d, x, q))
    except sq.SequenceError:
        pass
    C = np.vstack(cands)
    C = C[dm.membership_many(d, C)]
    h = Horosphere(d, x, seq, R)
    for start in range(0, len(C), 64):
        verdicts = membership_verdicts(h, C[start:start + 64], cfg)
        for w, v in zip(C[start:start + 64], verdicts):
            if v.decision:
                return w
    return None


# --------------------------------------------------------------- equivalence

def _limit_signature(d, seq, cfg):
    pts = sq.limit_points(seq, cfg.tail_start, tol=max(cfg.tol, 1e-3))
    return pts


def sequences_equivalent(d: dm.Domain, x, a: sq.PointSequence, b: sq.PointSequence,
                         cfg: dm.MetricConfig) -> Verdict:
    """Mutual horosphere inclusion up to rescaling the radius."""
    x = dm._require_inside(d, x)
    window = (cfg.tail_start, cfg.tail_len)
    if a is b:
        return Verdict(TRUE, 1.0, math.nan, True, window, {"method": "identical", "R_prime": "R"})
    ma, mb = horo_model(d, x, a, cfg), horo_model(d, x, b, cfg)
    if ma is not None and mb is not None:
        if ma.kind == "bidisc":
            ra, rb = ma.bidisc.representative(), mb.bidisc.representative()
            same = ra.label == rb.label and _same_params(ra, rb)
            det = {"method": "closed form", "canonical_a": ra.describe(),
                   "canonical_b": rb.describe()}
        else:
            same = _same_point_sets(ma.points, mb.points)
            det = {"method": "closed form", "limits_a": ma.points, "limits_b": mb.points}
        return Verdict(TRUE if same else FALSE, float(same), math.nan, True, window, det)
    return _sampled_equivalence(d, x, a, b, cfg)


def _same_params(a, b):
    for k in a.params:
        if abs(complex(a.params[k]) - complex(b.params[k])) > 1e-6:
            return False
    return True


def _same_point_sets(P, Q, tol=1e-6):
    def covered(A, B):
        return all(any(np.linalg.norm(p - q) < tol for q in B) for p in A)
    return covered(P, Q) and covered(Q, P)


def _sampled_equivalence(d, x, a, b, cfg):
    rng = cfg.rng(23)
    S = dm.sample_points(d, cfg.samples, rng)
    for seq in (a, b):
        try:
            for q in sq.limit_points(seq, cfg.tail_start):
                S = np.vstack([S, cone_points(d, x, q)])
        except sq.SequenceError:
            pass
    ea, ca, _ = limsup_many(d, x, a, S, cfg)
    eb, cb, _ = limsup_many(d, x, b, S, cfg)
    grid = np.geomspace(1e-4, 1e4, 33)
    worst = {}
    for src, dst, name in ((ea, eb, "a_in_b"), (eb, ea, "b_in_a")):
        for R in cfg.r_grid:
            thr = 0.5 * math.log(R)
            ok = None
            for f in grid:
                sel = src < 0.5 * math.log(R * f) - cfg.tol
                if sel.any() and np.all(dst[sel] < thr + cfg.tol):
                    ok = f
                    break
            if ok is None:
                return Verdict(FALSE, math.nan, math.nan, bool(ca.all() and cb.all()),
                               (cfg.tail_start, cfg.tail_len),
                               {"method": "sampled", "failed": name, "radius": R})
            worst[name + "@" + repr(R)] = ok
    return Verdict(TRUE, math.nan, math.nan, bool(ca.all() and cb.all()),
                   (cfg.tail_start, cfg.tail_len), {"method": "sampled", "factors": worst})


# -------------------------------------------------------------- rebasing

@dataclass
class RebaseFactors:
    alpha: float
    beta: float
    converged: bool
    checked: int = 0
    violations: int = 0
    k_xy: float = math.nan
    details: dict = field(default_factory=dict)

    def __iter__(self):
        yield self.alpha
        yield self.beta

    def to_dict(self):
        return {"alpha": self.alpha, "beta": self.beta, "converged": self.converged,
                "checked": self.checked, "violations": self.violations, "K_xy": self.k_xy}


def rebase_factors(d: dm.Domain, x, y, seq: sq.PointSequence, cfg: dm.MetricConfig,
                   points_per_radius: int = 100) -> RebaseFactors:
    """alpha, beta with E_y(alpha R) in E_x(R) in E_y(beta R), plus sampled checks."""
    x = dm._require_inside(d, x)
    y = dm._require_inside(d, y)
    if np.array_equal(x, y):
        return RebaseFactors(1.0, 1.0, True, k_xy=0.0)
    half_log_beta, c1, _ = limsup_many(d, y, seq, x[None, :], cfg)
    neg_half_log_alpha, c2, _ = limsup_many(d, x, seq, y[None, :], cfg)
    beta = math.exp(2 * half_log_beta[0])
    alpha = math.exp(-2 * neg_half_log_alpha[0])
    kxy = dm.distance(d, x, y)
    rng = cfg.rng(31)
    checked = violations = 0
    for R in cfg.r_grid:
        S = dm.sample_points(d, 4 * points_per_radius, rng)
        ex, _, _ = limsup_many(d, x, seq, S, cfg)
        ey, _, _ = limsup_many(d, y, seq, S, cfg)
        thr = 0.5 * math.log(R)
        # E_y(alpha R) subset of E_x(R)
        inn = ey < 0.5 * math.log(alpha * R) - cfg.tol
        sel = np.flatnonzero(inn)[:points_per_radius]
        checked += sel.size
        violations += int(np.sum(ex[sel] >= thr + cfg.tol))
        # E_x(R) subset of E_y(beta R)
        inx = ex < thr - cfg.tol
        sel = np.flatnonzero(inx)[:points_per_radius]
        checked += sel.size
        violations += int(np.sum(ey[sel] >= 0.5 * math.log(beta * R) + cfg.tol))
    return RebaseFactors(alpha, beta, bool(c1[0] and c2[0]), checked, violations, kxy)


# ----------------------------------------------------------------- oracles

class HoroOracle:
    """Level function of a horosphere family: w is in E_x(R) iff level(w) < R.

    Uses the exact model when one exists and otherwise exp(2 limsup) from the
    tail estimator, in which case ``band`` is the multiplicative uncertainty.
    """

    def __init__(self, d: dm.Domain, x, seq: sq.PointSequence, cfg: dm.MetricConfig):
        self.domain = d
        self.x = dm.as_point(d, x)
        self.seq = seq
        self.cfg = cfg
        self.model = horo_model(d, self.x, seq, cfg)
        self.band = 0.0 if self.model is not None else 2.0 * cfg.tol

    @property
    def exact(self) -> bool:
        return self.model is not None

    def level(self, W) -> np.ndarray:
        W = dm._as_points(self.domain, W)
        if self.model is not None:
            return self.model.level(W)
        est, _, _ = limsup_many(self.domain, self.x, self.seq, W, self.cfg)
        return np.exp(2.0 * est)

    def contains(self, W, R) -> np.ndarray:
        """1 = inside, 0 = outside, -1 = inside the uncertainty band."""
        lv = self.level(W)
        lo, hi = R * math.exp(-self.band), R * math.exp(self.band)
        return np.where(lv < lo, 1, np.where(lv >= hi, 0, -1))

    def anchor_points(self) -> list:
        """Boundary points the family is attached to."""
        if self.model is not None:
            if self.model.kind == "bidisc":
                bm = self.model.bidisc
                return [np.array([bm.p[j] if bm.m[j] > 0 else 0j for j in range(2)])]
            return list(self.model.points)
        try:
            return sq.limit_points(self.seq, self.cfg.tail_start)
        except sq.SequenceError:
            return []


def horosphere_intersect(a: HoroOracle, b: HoroOracle, R: float):
    """Is E_a(R) intersected with E_b(R) non-empty?  Returns (bool, witness)."""
    if (a.model is not None and b.model is not None
            and a.model.kind == "bidisc" and b.model.kind == "bidisc"):
        return _bidisc_models_intersect(a.model, b.model, R)
    if (a.model is not None and b.model is not None and a.model.kind == "disc"
            and b.model.kind == "disc" and len(a.model.points) == 1 and len(b.model.points) == 1):
        c1, r1 = disc_horosphere_closed_form(a.model.points[0][0], R * a.model.scales[0])
        c2, r2 = disc_horosphere_closed_form(b.model.points[0][0], R * b.model.scales[0])
        gap = abs(c1 - c2)
        if gap >= r1 + r2:
            return False, None
        # a point on the segment of centers inside both discs
        if gap == 0:
            return True, np.array([c1])
        t = min(max((r1 - (r1 + r2 - gap) / 2) / gap, 0.0), 1.0)
        return True, np.array([c1 + t * (c2 - c1)])
    if (a.model is not None and b.model is not None and a.model.kind == "ball"
            and b.model.kind == "ball" and len(a.model.points) == 1 and len(b.model.points) == 1):
        return _ball_models_intersect(a.model, b.model, R)
    return _numeric_intersect(a, b, R)


def _disc_pair(p1, R1, p2, R2):
    """Intersection test and witness for two disc horospheres."""
    c1, r1 = disc_horosphere_closed_form(p1, R1)
    c2, r2 = disc_horosphere_closed_form(p2, R2)
    gap = abs(c1 - c2)
    if gap >= r1 + r2:
        return False, None
    t = 0.0 if gap == 0 else min(max((r1 - r2 + gap) / (2 * gap), 0.0), 1.0)
    return True, c1 + t * (c2 - c1)


def _ball_models_intersect(ma: HoroModel, mb: HoroModel, R):
    """Ball horospheres meet iff they meet on the complex line through both
    tangency points; that slice is a disc where Busemann functions restrict
    to disc Busemann functions up to an additive constant."""
    p, q = ma.points[0], mb.points[0]
    if np.linalg.norm(p - q) < 1e-15:
        return True, p * (1 - 0.5 * min(R * ma.scales[0], R * mb.scales[0], 1.0))
    e = (q - p) / np.linalg.norm(q - p)
    c0 = p - np.vdot(e, p) * e  # foot of the origin on the line
    rho = math.sqrt(max(1.0 - np.linalg.norm(c0) ** 2, 0.0))
    zp, zq = np.vdot(e, p - c0) / rho, np.vdot(e, q - c0) / rho
    lp = float(ball_horo_ratio(p, c0)[0])
    lq = float(ball_horo_ratio(q, c0)[0])
    ok, zeta = _disc_pair(zp / abs(zp), R * ma.scales[0] / lp, zq / abs(zq), R * mb.scales[0] / lq)
    if not ok:
        return False, None
    return True, c0 + rho * zeta * e


def _bidisc_models_intersect(ma: HoroModel, mb: HoroModel, R):
    wit = np.zeros(2, dtype=complex)
    for j in range(2):
        fa = (ma.bidisc.p[j], ma.bidisc.m[j] / ma.scales[0])
        fb = (mb.bidisc.p[j], mb.bidisc.m[j] / mb.scales[0])
        act = [f for f in (fa, fb) if f[1] > 0]
        if not act:
            continue
        if len(act) == 1:
            c, r = disc_horosphere_closed_form(act[0][0], R / act[0][1])
            wit[j] = c
            continue
        c1, r1 = disc_horosphere_closed_form(fa[0], R / fa[1])
        c2, r2 = disc_horosphere_closed_form(fb[0], R / fb[1])
        gap = abs(c1 - c2)
        if gap >= r1 + r2:
            return False, None
        t = 0.0 if gap == 0 else min(max((r1 - (r1 + r2 - gap) / 2) / gap, 0.0), 1.0)
        wit[j] = c1 + t * (c2 - c1)
    return True, wit


def _numeric_intersect(a: HoroOracle, b: HoroOracle, R):
    d = a.domain
    cands = [dm.sample_points(d, a.cfg.samples, a.cfg.rng(41))]
    anchors = a.anchor_points() + b.anchor_points()
    for p in anchors:
        cands.append(cone_points(d, a.x, p))
    for p in a.anchor_points():
        for q in b.anchor_points():
            mid = 0.5 * (p + q)
            if dm.membership(d, mid) if np.all(np.isfinite(mid)) else False:
                cands.append(mid[None, :])
            cands.append(cone_points(d, a.x, mid))
    C = np.vstack(cands)
    C = C[dm.membership_many(d, C)]
    la, lb = a.level(C), b.level(C)
    score = np.maximum(la, lb)
    i = int(np.argmin(score))
    if score[i] < R * math.exp(-max(a.band, b.band)):
        return True, C[i]
    if not (a.exact and b.exact):
        return False, None
    # refine the best candidate: minimize log max(level) over the domain
    x0 = dm.to_real(C[i])

    def obj(v):
        w = dm.from_real(v)
        if not dm.membership(d, w):
            return 1e6
        return math.log(max(a.level(w[None, :])[0], b.level(w[None, :])[0]))

    res = _minimize(obj, x0)
    w = dm.from_real(res.x)
    if res.fun < math.log(R):
        return True, w
    return False, None


def _minimize(obj, x0):
    from scipy import optimize
    return optimize.minimize(obj, x0, method="Nelder-Mead",
                             options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
