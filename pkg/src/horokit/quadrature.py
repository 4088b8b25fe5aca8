"""Adaptive Simpson quadrature with per-interval error control."""

import math


class QuadratureError(RuntimeError):
    """Raised when the subdivision budget runs out before the tolerance is met."""


def adaptive_simpson(f, a, b, tol=1e-8, max_depth=50, max_evals=200_000):
    """Integrate ``f`` over ``[a, b]``.

    Each interval is split until the Richardson estimate ``|S2 - S1| / 15``
    is below its share of ``tol``. Returns ``(value, error_estimate)``.
    """
    if a == b:
        return 0.0, 0.0
    fa, fm, fb = f(a), f(0.5 * (a + b)), f(b)
    evals = [3]
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    err_total = [0.0]

    def recurse(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        evals[0] += 2
        left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
        right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
        delta = left + right - whole
        if not math.isfinite(delta):
            raise QuadratureError("non-finite integrand on [%g, %g]" % (a, b))
        if abs(delta) <= 15.0 * tol or depth >= max_depth:
            if depth >= max_depth and abs(delta) > 15.0 * tol:
                raise QuadratureError("max depth reached on [%g, %g]" % (a, b))
            err_total[0] += abs(delta) / 15.0
            return left + right + delta / 15.0
        if evals[0] > max_evals:
            raise QuadratureError("evaluation budget exhausted")
        return (recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
                + recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1))

    value = recurse(a, b, fa, fm, fb, whole, tol, 0)
    return value, err_total[0]
