"""Lazily evaluated point sequences with canonical constructors.

Indices are 1-based: ``seq.point(1)`` is the first term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import domains as dm

RADIAL = "Radial"
W1 = "BidiscW1"
W2 = "BidiscW2"
W3 = "BidiscW3"
INTERLEAVED = "Interleaved"
CUSTOM = "Custom"

LABELS = (RADIAL, W1, W2, W3, INTERLEAVED, CUSTOM)


class SequenceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PointSequence:
    domain: dm.Domain
    label: str
    params: dict = field(default_factory=dict)
    # vectorized generator: int array of indices -> complex array (len, dim)
    fn: Callable | None = None

    def points(self, ns) -> np.ndarray:
        ns = np.atleast_1d(np.asarray(ns, dtype=np.int64))
        if np.any(ns < 1):
            raise SequenceError("sequence indices start at 1")
        out = np.asarray(_evaluate(self, ns), dtype=complex)
        return out.reshape(ns.size, self.domain.dim)

    def point(self, n: int) -> np.ndarray:
        return self.points([n])[0]

    def window(self, start: int, length: int) -> np.ndarray:
        return self.points(np.arange(start, start + length))

    def gen(self, n: int) -> np.ndarray:
        return self.point(n)

    def subsequence(self, step: int, offset: int) -> "PointSequence":
        """v_m = u_{step*(m-1) + offset}, offset in 1..step."""
        parent = self
        return PointSequence(self.domain, CUSTOM, {"parent_step": (step, offset)},
                             fn=lambda ns: parent.points(step * (ns - 1) + offset))

    def to_dict(self) -> dict:
        if self.label == CUSTOM and "coords" not in self.params:
            raise SequenceError("Custom sequence built from a callable is not serializable")
        params = {}
        for k, v in self.params.items():
            if isinstance(v, PointSequence):
                params[k] = v.to_dict()
            elif k == "coords":
                params[k] = [dict(c) for c in v]
            else:
                params[k] = _encode(v)
        return {"label": self.label, "params": params, "domain": dm.domain_to_dict(self.domain)}

    def describe(self) -> str:
        if self.label == INTERLEAVED:
            return "Interleaved(%s, %s)" % (self.params["a"].describe(), self.params["b"].describe())
        if self.label == RADIAL:
            return "Radial(%s)" % _fmt(self.params["p"])
        if self.label == W1:
            return "BidiscW1(%s, %s)" % (_fmt(self.params["p1"]), _fmt(self.params["p2"]))
        if self.label in (W2, W3):
            return "%s(%s)" % (self.label, _fmt(self.params["p"]))
        return "Custom"

    def __repr__(self):
        return "PointSequence(%s on %r)" % (self.describe(), self.domain)


def _fmt(z) -> str:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    parts = []
    for c in z:
        re, im = round(float(c.real), 12) + 0.0, round(float(c.imag), 12) + 0.0
        if im == 0:
            parts.append("%g" % re)
        elif re == 0:
            parts.append("%gi" % im)
        else:
            parts.append("%g%+gi" % (re, im))
    return parts[0] if len(parts) == 1 else "(" + ", ".join(parts) + ")"


def _encode(v):
    arr = np.asarray(v)
    if np.iscomplexobj(arr) or arr.dtype.kind in "fi":
        arr = np.atleast_1d(arr.astype(complex))
        return [[float(c.real), float(c.imag)] for c in arr]
    return v


def decode_complex(v) -> np.ndarray:
    """Inverse of the [re, im] encoding; also accepts bare reals and pairs."""
    if isinstance(v, (int, float, complex, np.number)):
        return np.array([complex(v)])
    out = []
    for c in v:
        if isinstance(c, (list, tuple)):
            if len(c) != 2:
                raise SequenceError("complex numbers are [re, im] pairs")
            out.append(complex(float(c[0]), float(c[1])))
        else:
            out.append(complex(c))
    return np.array(out, dtype=complex)


def _evaluate(seq: PointSequence, ns: np.ndarray) -> np.ndarray:
    if seq.fn is not None:
        return seq.fn(ns)
    lab, prm = seq.label, seq.params
    s = (1.0 - 1.0 / ns)[:, None]
    if lab == RADIAL:
        c = seq.domain.center()
        return c[None, :] + s * (np.asarray(prm["p"]) - c)[None, :]
    if lab == W1:
        return s * np.array([prm["p1"], prm["p2"]])[None, :]
    if lab == W2:
        return s * np.array([prm["p"], 0.0])[None, :]
    if lab == W3:
        return s * np.array([0.0, prm["p"]])[None, :]
    if lab == INTERLEAVED:
        out = np.empty((ns.size, seq.domain.dim), dtype=complex)
        odd = ns % 2 == 1
        if odd.any():
            out[odd] = prm["a"].points((ns[odd] + 1) // 2)
        if (~odd).any():
            out[~odd] = prm["b"].points(ns[~odd] // 2)
        return out
    if lab == CUSTOM:
        return np.stack([_coord(c, ns) for c in prm["coords"]], axis=1)
    raise SequenceError("unknown label %r" % lab)


def _coord(spec: dict, ns: np.ndarray) -> np.ndarray:
    """p * cycle[n mod m] * (1 - c n^-power) * exp(i twist n^-twist_power)."""
    p = complex(*spec["p"]) if isinstance(spec["p"], (list, tuple)) else complex(spec["p"])
    c = float(spec.get("c", 1.0))
    power = float(spec.get("power", 1.0))
    nf = ns.astype(float)
    val = p * (1.0 - c * nf ** (-power))
    cyc = spec.get("cycle")
    if cyc:
        cyc = decode_complex(cyc)
        val = val * cyc[ns % len(cyc)]
    tw = float(spec.get("twist", 0.0))
    if tw:
        val = val * np.exp(1j * tw * nf ** (-float(spec.get("twist_power", 1.0))))
    return val


# ------------------------------------------------------------ constructors

def _unimodular(p) -> complex:
    p = complex(p)
    if abs(abs(p) - 1.0) > 1e-12:
        raise SequenceError("expected a unimodular point, got %r" % p)
    return p


def radial(d: dm.Domain, p) -> PointSequence:
    """Segment from the domain center toward the boundary point p."""
    p = np.atleast_1d(np.asarray(p, dtype=complex))
    if p.size != d.dim:
        raise SequenceError("boundary point has the wrong dimension")
    return PointSequence(d, RADIAL, {"p": p})


def bidisc_w1(p1, p2) -> PointSequence:
    return PointSequence(dm.polydisc(2), W1, {"p1": _unimodular(p1), "p2": _unimodular(p2)})


def bidisc_w2(p) -> PointSequence:
    return PointSequence(dm.polydisc(2), W2, {"p": _unimodular(p)})


def bidisc_w3(p) -> PointSequence:
    return PointSequence(dm.polydisc(2), W3, {"p": _unimodular(p)})


def interleaved(a: PointSequence, b: PointSequence) -> PointSequence:
    if a.domain.kind != b.domain.kind or a.domain.dim != b.domain.dim:
        raise SequenceError("interleaved sequences must share a domain")
    return PointSequence(a.domain, INTERLEAVED, {"a": a, "b": b})


def custom(d: dm.Domain, coords=None, fn=None) -> PointSequence:
    """Either a list of per-coordinate dicts (see ``_coord``) or a vectorized fn."""
    if (coords is None) == (fn is None):
        raise SequenceError("give exactly one of coords or fn")
    if coords is not None:
        if len(coords) != d.dim:
            raise SequenceError("need one coordinate spec per dimension")
        return PointSequence(d, CUSTOM, {"coords": [dict(c) for c in coords]})
    return PointSequence(d, CUSTOM, {}, fn=fn)


def from_dict(data: dict, domain: dm.Domain | None = None) -> PointSequence:
    try:
        label = data["label"]
        params = data.get("params", {}) or {}
        d = domain or dm.domain_from_dict(data["domain"])
        if label == RADIAL:
            return radial(d, decode_complex(params["p"]))
        if label == W1:
            return bidisc_w1(decode_complex(params["p1"])[0], decode_complex(params["p2"])[0])
        if label == W2:
            return bidisc_w2(decode_complex(params["p"])[0])
        if label == W3:
            return bidisc_w3(decode_complex(params["p"])[0])
        if label == INTERLEAVED:
            return interleaved(from_dict(params["a"], d), from_dict(params["b"], d))
        if label == CUSTOM:
            return custom(d, coords=params["coords"])
    except (KeyError, TypeError, IndexError) as exc:
        raise SequenceError("bad sequence descriptor: %s" % exc) from exc
    raise SequenceError("unknown sequence label %r" % (label,))


# ----------------------------------------------------- limit detection

def residue_classes(seq: PointSequence, start: int, max_period: int = 8, tol: float = 1e-3,
                    far: int = 1 << 28):
    """Smallest period k such that every residue subsequence u_{k(m-1)+r} settles.

    A residue subsequence settles when short windows of consecutive terms at
    m0, 4 m0 and 16 m0 have a spread below ``tol`` and the distance between
    the windows shrinks. Limits are estimated from the term at index ~``far``.

    Returns (k, [(offset, limit_estimate), ...]) or (None, []).
    """
    for k in range(1, max_period + 1):
        limits = []
        ok = True
        m0 = max(start // k, 1)
        for r in range(1, k + 1):
            wins = []
            for m in (m0, 4 * m0, 16 * m0):
                ms = np.arange(m, m + 8)
                wins.append(seq.points(k * (ms - 1) + r))
            spread = max(np.max(np.linalg.norm(w - w[-1], axis=1)) for w in wins[1:])
            step1 = np.linalg.norm(wins[1][-1] - wins[0][-1])
            step2 = np.linalg.norm(wins[2][-1] - wins[1][-1])
            if spread > tol or step2 > max(tol, 0.6 * step1):
                ok = False
                break
            mf = max(far // k, 16 * m0 + 8)
            limits.append((r, seq.point(k * (mf - 1) + r)))
        if ok:
            return k, limits
    return None, []


def limit_points(seq: PointSequence, start: int = 1024, tol: float = 1e-3):
    """Distinct Euclidean cluster points detected through residue classes."""
    k, lims = residue_classes(seq, start, tol=tol)
    if k is None:
        raise SequenceError("no periodic convergent structure detected")
    pts = []
    for _, c in lims:
        c = _snap(seq.domain, c)
        if not any(np.linalg.norm(c - q) < 10 * tol for q in pts):
            pts.append(c)
    return pts


def _snap(d: dm.Domain, c: np.ndarray) -> np.ndarray:
    """Project a far-tail term onto the nearby boundary (bounded models)."""
    c = np.round(c.real, 8) + 1j * np.round(c.imag, 8)
    if d.kind in (dm.UNIT_DISC, dm.POLYDISC):
        for j, cj in enumerate(c):
            if abs(cj) > 1 - 1e-3:
                c[j] = cj / abs(cj)
    elif d.kind == dm.UNIT_BALL:
        n = np.linalg.norm(c)
        if n > 1 - 1e-3:
            c = c / n
    return c
