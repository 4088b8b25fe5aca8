"""Named experiments run by the command line runner.

Every experiment takes ``(domain, cfg, payload)`` and returns a list of
report rows plus an optional list of plot points ``(tag, point)``. A row is
a dict with a unique ``key``, a serialized ``verdict`` and, when the payload
or the suite states one, the ``expected`` outcome.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import domains as dm
from . import gromov as gr
from . import horospheres as hs
from . import kernels
from . import maps
from . import sequences as sq
from . import topology as tp
from .verdict import FALSE, INCONCLUSIVE, TRUE, UNDECIDABLE, Verdict


class ConfigError(ValueError):
    pass


# ------------------------------------------------------------------ helpers

def _point(d, v, name="point"):
    try:
        z = sq.decode_complex(v)
    except (TypeError, ValueError, sq.SequenceError) as exc:
        raise ConfigError("bad %s: %s" % (name, exc)) from exc
    if z.size != d.dim:
        raise ConfigError("%s has %d coordinates, domain needs %d" % (name, z.size, d.dim))
    return z


def _base(d, payload):
    return _point(d, payload["x"], "x") if "x" in payload else d.center()


def _seq(d, desc):
    if not isinstance(desc, dict):
        raise ConfigError("sequence descriptor must be an object")
    return sq.from_dict(desc, d)


def row(key, verdict: Verdict, expected=None, **extra) -> dict:
    out = {"key": key, "verdict": verdict.to_dict()}
    if expected is not None:
        out["expected"] = expected
    out.update(extra)
    return out


def value_verdict(value, converged=True, details=None) -> Verdict:
    """Wrap a computed quantity so every row carries the same diagnostics."""
    ok = value is not None and np.isfinite(value)
    return Verdict(TRUE if ok else INCONCLUSIVE, value if ok else math.nan, math.nan,
                   converged, (0, 0), details or {})


def check_verdict(ok: bool, estimate=math.nan, margin=math.nan, details=None) -> Verdict:
    return Verdict(TRUE if ok else FALSE, estimate, margin, True, (0, 0), details or {})


def _require(d, *kinds):
    if d.kind not in kinds:
        raise ConfigError("experiment needs one of %s, got %s" % (", ".join(kinds), d.kind))


# -------------------------------------------------------------- experiments

def horosphere_slice(d, cfg, payload):
    """Membership on a 2-D grid of one coordinate plus a traced level curve."""
    seq = _seq(d, payload["sequence"])
    x = _base(d, payload)
    R = float(payload.get("radius", 1.0))
    j = int(payload.get("coordinate", 0))
    fixed = _point(d, payload["fixed"], "fixed") if "fixed" in payload else d.center()
    n = int(payload.get("grid", 61))
    lo, hi = payload.get("window", [-1.0, 1.0]) if d.bounded else payload["window"]
    g = np.linspace(lo, hi, n)
    Z = np.repeat(fixed[None, :], n * n, axis=0)
    Z[:, j] = (g[:, None] + 1j * g[None, :]).ravel()
    Z = Z[dm.membership_many(d, Z)]
    h = hs.Horosphere(d, x, seq, R)
    verdicts = hs.membership_verdicts(h, Z, cfg)
    counts = {k: 0 for k in (TRUE, FALSE, UNDECIDABLE, INCONCLUSIVE)}
    points = []
    for z, v in zip(Z, verdicts):
        counts[v.outcome] += 1
        if v.outcome == TRUE:
            points.append(("inside", z))
    trace = _trace_level_curve(h, Z, verdicts, j, cfg)
    points += [("level", z) for z in trace]
    rows = [row("slice-membership", Verdict(
        TRUE if counts[INCONCLUSIVE] == 0 else INCONCLUSIVE, float(counts[TRUE]), math.nan,
        counts[INCONCLUSIVE] == 0, (cfg.tail_start, cfg.tail_len), {"counts": counts}))]
    if d.kind == dm.UNIT_DISC and seq.label == sq.RADIAL and not np.any(x):
        p = complex(seq.params["p"][0])
        c, r = hs.disc_horosphere_closed_form(p, R)
        dev = float(np.max(np.abs(np.abs(trace[:, 0] - c) - r))) if len(trace) else math.inf
        rows.append(row("trace-vs-closed-form", check_verdict(
            dev < 10 * cfg.tol, dev, 10 * cfg.tol - dev,
            {"center": complex(c), "radius": r, "trace_points": len(trace)}), TRUE))
    return rows, points


def _trace_level_curve(h, Z, verdicts, j, cfg, n_dirs=180, steps=40):
    """Bisect along rays from the deepest inside grid point to the level set."""
    ins = [(v.margin, i) for i, v in enumerate(verdicts) if v.outcome == TRUE]
    if not ins:
        return np.zeros((0, h.domain.dim), dtype=complex)
    anchor = Z[max(ins)[1]]
    d = h.domain
    dirs = np.exp(2j * np.pi * np.arange(n_dirs) / n_dirs)
    # outer end: the domain slice boundary along each direction
    outer = np.array([_exit_length(d, anchor, j, u) for u in dirs])
    lo = np.zeros(n_dirs)
    hi = outer.copy()
    thr = h.threshold
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        W = np.repeat(anchor[None, :], n_dirs, axis=0)
        W[:, j] = anchor[j] + mid * dirs
        est, _, _ = hs.limsup_many(d, h.base, h.seq, W, cfg)
        inside = est < thr
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    keep = hi < outer * (1 - 1e-9)
    W = np.repeat(anchor[None, :], n_dirs, axis=0)
    W[:, j] = anchor[j] + 0.5 * (lo + hi) * dirs
    return W[keep]


def _exit_length(d, z, j, u):
    e = np.zeros(d.dim, dtype=complex)
    e[j] = u
    t = 1.0
    while dm.membership(d, z + t * e) and t < 1e6:
        t *= 2
    lo, hi = 0.0, t
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if dm.membership(d, z + mid * e):
            lo = mid
        else:
            hi = mid
    return lo


def classify_bidisc(d, cfg, payload):
    _require(d, dm.POLYDISC)
    items = payload.get("sequences") or [payload["sequence"]]
    expects = payload.get("expect")
    if expects is not None and not isinstance(expects, list):
        expects = [expects]
    rows = []
    for i, desc in enumerate(items):
        seq = _seq(d, desc)
        try:
            cls = hs.bidisc_classify(seq, cfg).to_dict()
        except hs.NonConvergentSequence:
            # subsequences converge to different classes; only the model is defined
            m = hs.bidisc_model(seq, cfg)
            cls = {"case": "non-convergent", "p": list(m.p), "multipliers": list(m.m)}
        canon = hs.canonical_form_bidisc(seq, cfg).describe()
        exp = expects[i] if expects else None
        if exp is None:
            v = value_verdict(1.0, details={"class": cls, "canonical": canon})
            rows.append(row("classify-%03d" % i, v, canonical=canon))
        else:
            v = check_verdict(canon == exp, details={"class": cls, "canonical": canon,
                                                     "expected_canonical": exp})
            rows.append(row("classify-%03d" % i, v, TRUE, canonical=canon))
    return rows, []


def equivalence(d, cfg, payload):
    a, b = _seq(d, payload["a"]), _seq(d, payload["b"])
    v = hs.sequences_equivalent(d, _base(d, payload), a, b, cfg)
    return [row("equivalence", v, payload.get("expect"))], []


def _boundary_estimate(fn, d, cfg, payload, key):
    seq = _seq(d, payload["sequence"])
    cs = fn(d, _base(d, payload), tp.BoundaryClass(seq, d), cfg)
    v = Verdict(TRUE if cs.points else INCONCLUSIVE, float(len(cs.points)), math.nan,
                bool(cs.points), (cfg.tail_start, cfg.tail_len), cs.details)
    pts = [(key, p) for p in cs.points]
    out = row(key, v, payload.get("expect"), cluster=cs.to_dict())
    if "near" in payload:
        q = _point(d, payload["near"], "near")
        dist = max(float(np.linalg.norm(np.asarray(p) - q)) for p in cs.points) if cs.points else math.inf
        rad = float(payload.get("near_tol", 1e-2))
        out["near"] = row(key + "-near", check_verdict(dist <= rad, dist, rad - dist), TRUE)
    return [out], pts


def impression(d, cfg, payload):
    return _boundary_estimate(tp.impression_estimate, d, cfg, payload, "impression")


def principal_part(d, cfg, payload):
    return _boundary_estimate(tp.principal_part_estimate, d, cfg, payload, "principal-part")


def gromov_product(d, cfg, payload):
    rows = []
    for i, tri in enumerate(payload.get("triples", [])):
        x, y, w = (_point(d, v) for v in tri)
        rows.append(row("product-%03d" % i, value_verdict(gr.gromov_product(d, x, y, w))))
    if payload.get("opposite_face_rays"):
        _require(d, dm.POLYDISC)
        rng = cfg.rng(7)
        n = int(payload.get("pairs", 100))
        ts = rng.uniform(0.01, float(payload.get("t_max", 6.0)), size=(n, 2))
        f = gr.polydisc_ray([1, 1j], [1.0, 0.5])
        g = gr.polydisc_ray([-1, 1], [1.0, 1.0 / 3.0])
        X, Y = f(ts[:, 0]), g(ts[:, 1])
        vals = gr.gromov_products(d, X, Y, np.zeros(d.dim))
        worst = float(vals.max())
        rows.append(row("opposite-face-rays", check_verdict(
            worst <= 1e-9, worst, 1e-9 - worst, {"pairs": n}), TRUE))
    if not rows:
        raise ConfigError("gromov-product needs 'triples' or 'opposite_face_rays'")
    return rows, []


def delta_estimate(d, cfg, payload):
    scales = [float(s) for s in payload.get("scales", [3.0, 6.0])]
    n = int(payload.get("triangles", 24))
    est = {s: gr.delta_hyperbolicity_estimate(d, s, cfg, n) for s in scales}
    rows = [row("delta-scale-%g" % s, value_verdict(v, details={"scale": s, "triangles": n}))
            for s, v in est.items()]
    if "expect_growth" in payload and len(scales) >= 2:
        ratio = est[scales[-1]] / est[scales[0]] if est[scales[0]] > 0 else math.inf
        want = float(payload["expect_growth"])
        rows.append(row("delta-growth", check_verdict(ratio >= want, ratio, ratio - want), TRUE))
    if "expect_stable" in payload and len(scales) >= 2:
        rel = abs(est[scales[-1]] - est[scales[0]]) / max(est[scales[0]], 1e-300)
        want = float(payload["expect_stable"])
        rows.append(row("delta-stability", check_verdict(rel < want, rel, want - rel), TRUE))
    return rows, []


def _path(d, spec):
    kind = spec.get("type", "segment")
    if kind == "segment":
        a, b = _point(d, spec["from"]), _point(d, spec["to"])
        return (lambda s: np.outer(1 - np.atleast_1d(s), a) + np.outer(np.atleast_1d(s), b)), 0.0, 1.0
    if kind == "arc":
        _require(d, dm.UNIT_DISC)
        c = sq.decode_complex(spec.get("center", 0.0))[0]
        r = float(spec["radius"])
        return ((lambda s: (c + r * np.exp(1j * np.atleast_1d(s)))[:, None]),
                float(spec.get("theta0", 0.0)), float(spec.get("theta1", 1.0)))
    raise ConfigError("unknown path type %r" % kind)


def quasi_geodesic(d, cfg, payload):
    path, s0, s1 = _path(d, payload["path"])
    curve, T = gr.reparametrize_by_length(d, path, s0, s1, cfg)
    rows = []
    if "A" in payload:
        v = gr.quasi_geodesic_check(d, curve, T, float(payload["A"]), float(payload["B"]), cfg)
        rows.append(row("given-constants", v, payload.get("expect")))
    A, B = gr.fit_quasi_geodesic(d, curve, T, cfg)
    v = gr.quasi_geodesic_check(d, curve, T, A, B, cfg)
    rows.append(row("fitted-constants", v, TRUE, A=A, B=B))
    pts = [("curve", z) for z in curve(np.linspace(0, T, 101))]
    return rows, pts


def cluster_set(d, cfg, payload):
    F = maps.map_from_dict(payload["map"])
    if F.source.kind != d.kind:
        raise ConfigError("map source %s does not match domain %s" % (F.source.kind, d.kind))
    p = _point(d, payload["point"], "point")
    cs = (maps.e_cluster_set if payload.get("e_cluster") else maps.cluster_set)(F, p, cfg)
    v = Verdict(TRUE, float(len(cs.points)), math.nan, True, (0, 0), cs.details)
    out = row("cluster-set", v, cluster=cs.to_dict())
    rows = [out]
    if "expect_points" in payload:
        want = [_point(F.target, q, "expected point") for q in payload["expect_points"]]
        rad = float(payload.get("expect_tol", 1e-6))
        err = _set_distance(cs.points, want)
        rows.append(row("cluster-set-match", check_verdict(err <= rad, err, rad - err), TRUE))
    if "expect_escape" in payload:
        ok = cs.escapes_to_infinity == bool(payload["expect_escape"])
        rows.append(row("cluster-set-escape", check_verdict(ok), TRUE))
    return rows, [("cluster", q) for q in cs.points]


def _set_distance(P, Q):
    if not P or not Q:
        return math.inf if (P or Q) else 0.0
    dpq = max(min(np.linalg.norm(np.asarray(p) - q) for q in Q) for p in P)
    dqp = max(min(np.linalg.norm(np.asarray(p) - q) for p in P) for q in Q)
    return float(max(dpq, dqp))


def denjoy_wolff(d, cfg, payload):
    f = maps.map_from_dict(payload["map"])
    if f.source.kind != d.kind or f.target.kind != d.kind:
        raise ConfigError("denjoy-wolff needs a self-map of the domain")
    z0 = _point(d, payload.get("z0", list(d.center())), "z0")
    cs, inv = maps.denjoy_wolff_iterate(d, f, z0, cfg, int(payload.get("starts", 5)))
    spread = cs.details.get("spread", math.nan)
    agree = Verdict(TRUE if len(cs.points) == 1 and spread <= 1e-6 else
                    (INCONCLUSIVE if not cs.points else FALSE),
                    float(spread), 1e-6 - spread if np.isfinite(spread) else math.nan,
                    bool(cs.points), (0, 0), cs.details)
    rows = [row("orbit-target", agree, payload.get("expect", TRUE), cluster=cs.to_dict()),
            row("horosphere-invariance", inv, payload.get("expect", TRUE))]
    orbit = maps.iterate_orbit(f, z0, max(cfg.samples, 64)).orbit
    return rows, [("orbit", z) for z in orbit]


def bidisc_topology(d, cfg, payload):
    _require(d, dm.POLYDISC)
    res = tp.bidisc_topology_trivial_check(cfg, int(payload.get("n_q", 8)))
    rows = [row("step-%s-%02d" % (r["step"], i), _verdict_from(r["verdict"]), TRUE,
                pair=[r["from"], r["to"]]) for i, r in enumerate(res["pairs"])]
    return rows, []


def _verdict_from(dct):
    return Verdict(dct["outcome"], _float(dct["estimate"]), _float(dct["margin"]),
                   dct["converged"], tuple(dct["window"]), dct["details"])


def _float(v):
    if v is None:
        return math.nan
    if v == "inf":
        return math.inf
    if v == "-inf":
        return -math.inf
    return float(v)


# ---------------------------------------------------------------- oracle suite

def _suite_disc_horosphere(cfg):
    D = dm.unit_disc()
    rng = cfg.rng(11)
    bad = undecided = 0
    for R in (0.05, 0.5, 1.0, 5.0, 20.0):
        Z = dm.sample_points(D, 100, rng)
        h = hs.Horosphere(D, np.zeros(1, complex), sq.radial(D, [1]), R)
        exact = hs.horodisc_ratio(1, Z[:, 0]) < R
        for v, e in zip(hs.membership_verdicts(h, Z, cfg), exact):
            if v.decided:
                bad += v.decision != e
            else:
                undecided += 1
    return check_verdict(bad == 0, float(bad), -float(bad), {"undecided": undecided})


def _suite_bidisc_rule(cfg):
    P = dm.polydisc(2)
    x = np.zeros(2, complex)
    rng = cfg.rng(13)
    seqs = [sq.bidisc_w1(1, 1), sq.bidisc_w2(1), sq.bidisc_w3(1j),
            sq.custom(P, coords=[{"p": 1, "c": 2.0}, {"p": -1}])]
    bad = dec = 0
    for s in seqs:
        model = hs.bidisc_model(s, cfg)
        Z = dm.sample_points(P, 80, rng)
        est, conv, _ = hs.limsup_many(P, x, s, Z, cfg)
        for R in (0.5, 2.0):
            thr = 0.5 * math.log(R)
            decided = np.abs(est - thr) > cfg.tol
            dec += int(decided.sum())
            bad += int(np.sum((est < thr)[decided] != model.contains(Z[decided], R)))
    return check_verdict(bad <= 0.01 * dec, float(bad), 0.01 * dec - bad, {"decided": dec})


def _suite_interleaved(cfg):
    seq = sq.interleaved(sq.bidisc_w3(1), sq.bidisc_w2(1))
    canon = hs.canonical_form_bidisc(seq, cfg).describe()
    return check_verdict(canon == "BidiscW1(1, 1)", details={"canonical": canon})


def _suite_face_rays(cfg):
    P = dm.polydisc(2)
    rows, _ = gromov_product(P, cfg, {"opposite_face_rays": True, "pairs": 100})
    return _verdict_from(rows[0]["verdict"])


def _suite_seq_equiv(cfg):
    P = dm.polydisc(2)
    w = np.zeros(2)
    a = sq.custom(P, coords=[{"p": 1}, {"p": 0, "c": 0}])
    b = sq.custom(P, coords=[{"p": 0, "c": 0}, {"p": 1}])
    c = sq.custom(P, coords=[{"p": -1}, {"p": 0, "c": 0}])
    out = [gr.seq_equiv_s(P, w, *pair, cfg).outcome for pair in ((a, b), (b, c), (a, c))]
    return check_verdict(out == [TRUE, TRUE, FALSE], details={"outcomes": out})


def _suite_cayley(cfg):
    F = maps.composite([maps.cayley2(), maps.siegel_to_parabolic()])
    cs = maps.cluster_set(F.inverted(), [0, 0], cfg)
    err = _set_distance(cs.points, [np.array([-1, 0], complex)])
    iso = maps.isometry_defect(maps.cayley2(), 1000, cfg.rng(17))["max_abs"]
    ok = err <= 1e-6 and iso < 1e-9
    return check_verdict(ok, max(err, iso), 1e-9 - iso, {"cluster_error": err, "isometry_defect": iso})


def _suite_denjoy(cfg):
    D = dm.unit_disc()
    cs, inv = maps.denjoy_wolff_iterate(D, maps.disc_automorphism(-0.5), [0], cfg)
    ok = inv.decision and len(cs.points) == 1 and abs(cs.points[0][0] - 1) < 1e-6
    return check_verdict(ok, details={"invariance": inv.outcome, "target": cs.to_dict()["points"]})


def _suite_pushforward(cfg):
    D = dm.unit_disc()
    h = hs.Horosphere(D, np.zeros(1, complex), sq.radial(D, [1]), 1.0)
    return maps.pushforward_horosphere_check(maps.disc_automorphism(0, 0.7), h, cfg)


def _suite_char_set(cfg):
    ch = maps.char_set(dm.parabolic(), np.zeros(2, complex), cfg)
    ok = ch["real_dim"] == 1 and abs(abs(ch["basis"][0][1]) - 1) < 1e-9 and abs(ch["basis"][0][1].real) < 1e-9
    return check_verdict(ok, float(ch["real_dim"]), details={"real_dim": ch["real_dim"]})


def _suite_rebase(cfg):
    D = dm.unit_disc()
    rf = hs.rebase_factors(D, [0], [0.5j], sq.radial(D, [1]), cfg, 50)
    return check_verdict(rf.violations == 0, rf.beta, float(-rf.violations), rf.to_dict())


def _suite_backends(cfg):
    from . import _kernels_py as py
    rng = cfg.rng(19)
    Z = dm.sample_points(dm.unit_ball(2), 200, rng)
    W = dm.sample_points(dm.unit_ball(2), 200, rng)
    err = float(np.max(np.abs(kernels.pair_dist(kernels.KIND_BALL, Z, W)
                              - py.pair_dist(py.KIND_BALL, Z, W))))
    return check_verdict(err < 1e-12, err, 1e-12 - err, {"backend": kernels.BACKEND})


SUITE = {
    "backend-agreement": _suite_backends,
    "bidisc-rule": _suite_bidisc_rule,
    "cayley-chain": _suite_cayley,
    "char-set-parabolic": _suite_char_set,
    "denjoy-wolff-disc": _suite_denjoy,
    "disc-horosphere": _suite_disc_horosphere,
    "gromov-face-rays": _suite_face_rays,
    "interleaved-class": _suite_interleaved,
    "pushforward-rotation": _suite_pushforward,
    "rebase-factors": _suite_rebase,
    "seq-equiv-triple": _suite_seq_equiv,
}


def threads() -> int:
    try:
        return max(1, int(os.environ.get("HOROKIT_THREADS", "1")))
    except ValueError:
        return 1


def oracle_suite(d, cfg, payload):
    names = payload.get("only") or sorted(SUITE)
    unknown = [n for n in names if n not in SUITE]
    if unknown:
        raise ConfigError("unknown suite entries: %s" % ", ".join(unknown))
    with ThreadPoolExecutor(max_workers=threads()) as pool:
        results = list(pool.map(lambda n: SUITE[n](cfg), names))
    return [row(n, v, TRUE) for n, v in zip(names, results)], []


EXPERIMENTS = {
    "horosphere-slice": horosphere_slice,
    "classify-bidisc": classify_bidisc,
    "equivalence": equivalence,
    "impression": impression,
    "principal-part": principal_part,
    "gromov-product": gromov_product,
    "delta-estimate": delta_estimate,
    "quasi-geodesic": quasi_geodesic,
    "cluster-set": cluster_set,
    "denjoy-wolff": denjoy_wolff,
    "bidisc-topology": bidisc_topology,
    "oracle-suite": oracle_suite,
}
