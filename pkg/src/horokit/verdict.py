"""Diagnosed decisions and the tail limsup estimator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TRUE = "true"
FALSE = "false"
UNDECIDABLE = "undecidable"
INCONCLUSIVE = "inconclusive"


@dataclass
class Verdict:
    """Outcome of a limsup-based decision.

    ``decision`` is True only when the outcome is ``"true"``. Undecidable
    (estimate inside the tolerance band) and inconclusive (search budget
    exhausted) are kept apart from a plain False.
    """

    outcome: str
    estimate: float = math.nan
    margin: float = math.nan
    converged: bool = True
    window: tuple = (0, 0)
    details: dict = field(default_factory=dict)

    @property
    def decision(self) -> bool:
        return self.outcome == TRUE

    @property
    def decided(self) -> bool:
        return self.outcome in (TRUE, FALSE)

    def to_dict(self) -> dict:
        return {
            "outcome": self.outcome,
            "decision": self.decision,
            "estimate": _num(self.estimate),
            "margin": _num(self.margin),
            "converged": bool(self.converged),
            "window": [int(self.window[0]), int(self.window[1])],
            "details": jsonable(self.details),
        }


def _num(x):
    if x is None:
        return None
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def jsonable(obj):
    """Convert numpy / complex containers into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (complex, np.complexfloating)):
        return [_num(obj.real), _num(obj.imag)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    return obj


def threshold_verdict(estimate, threshold, tol, converged, window, details=None,
                      below_is_true=True) -> Verdict:
    """Compare an estimate with a threshold using the undecidable band."""
    margin = threshold - estimate if below_is_true else estimate - threshold
    if not np.isfinite(estimate) and not np.isnan(estimate):
        outcome = TRUE if margin > 0 else FALSE
    elif abs(margin) <= tol:
        outcome = UNDECIDABLE
    elif margin > 0:
        outcome = TRUE if converged else INCONCLUSIVE
    else:
        outcome = FALSE
    return Verdict(outcome, float(estimate), float(margin), bool(converged),
                   tuple(window), dict(details or {}))


def tail_limsup(window_fn, cfg, reduce="max"):
    """Windowed tail estimate with adaptive doubling.

    ``window_fn(start, length, idx=None)`` returns values f(n) for n in
    [start, start + length) as an array of shape (rows, m) or (rows,), for
    the columns ``idx`` (all columns when None). Rows may already be reduced.
    The estimate for a start N is the reduction over rows (max for a limsup,
    min for a liminf). The start
    doubles until two consecutive doublings move every estimate by less than
    ``cfg.tol`` or ``cfg.max_start`` is reached; columns that already
    satisfied the rule are frozen.

    Returns (estimates, converged, starts) where starts gives the final window
    start per column.
    """
    op = np.max if reduce == "max" else np.min
    start = cfg.tail_start
    vals = np.asarray(window_fn(start, cfg.tail_len, None), dtype=float)
    squeeze = vals.ndim == 1
    if squeeze:
        vals = vals.reshape(-1, 1)
    m = vals.shape[1]
    est = op(vals, axis=0)
    converged = np.zeros(m, dtype=bool)
    starts = np.full(m, start, dtype=np.int64)
    quiet = np.zeros(m, dtype=np.int64)  # consecutive small moves
    active = np.ones(m, dtype=bool)
    while active.any() and start * 2 <= cfg.max_start:
        start *= 2
        idx = np.flatnonzero(active)
        new = np.asarray(window_fn(start, cfg.tail_len, idx), dtype=float).reshape(-1, idx.size)
        new_est = op(new, axis=0)
        with np.errstate(invalid="ignore"):
            small = np.abs(new_est - est[idx]) < cfg.tol
        small |= (new_est == est[idx])
        quiet[idx] = np.where(small, quiet[idx] + 1, 0)
        est[idx] = new_est
        starts[idx] = start
        done = quiet[idx] >= 2
        converged[idx[done]] = True
        active[idx[done]] = False
    if squeeze:
        return float(est[0]), bool(converged[0]), int(starts[0])
    return est, converged, starts
