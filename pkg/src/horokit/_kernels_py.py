"""Pure numpy implementations of the hot distance kernels.

Every function here has an identically named twin in the compiled
``_kernels`` extension; :mod:`horokit.kernels` picks one at import time.

Distances use the 1/2 log convention, so ``disc_dist(0, r) = atanh(r)``.
All formulas are written in the "numerator / denominator" form

    K = log(1 + sqrt(N / D)) - 0.5 * log(A / D),   D = N + A,

which stays accurate when both points approach the boundary.
"""

import numpy as np

KIND_DISC = 0
KIND_BALL = 1
KIND_POLYDISC = 2
KIND_SIEGEL = 3


def _combine(num, a):
    """atanh(sqrt(num / (num + a))) evaluated as a single log1p.

    (sqrt(num + a) + sqrt(num)) / sqrt(a) - 1, where the difference
    sqrt(num + a) - sqrt(a) is rewritten as num / (sqrt(num + a) + sqrt(a)).
    """
    num = np.maximum(num, 0.0)
    sa = np.sqrt(a)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log1p((np.sqrt(num) + num / (np.sqrt(num + a) + sa)) / sa)
    return np.where(num == 0.0, 0.0, out)


def _one_minus_sq(r):
    return (1.0 - r) * (1.0 + r)


def disc_dist(z, w):
    z = np.asarray(z, dtype=np.complex128)
    w = np.asarray(w, dtype=np.complex128)
    a = _one_minus_sq(np.abs(z)) * _one_minus_sq(np.abs(w))
    num = np.abs(z - w) ** 2
    return _combine(num, a)


def ball_dist(Z, W):
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    W = np.atleast_2d(np.asarray(W, dtype=np.complex128))
    sz = _one_minus_sq(np.sqrt(np.sum(np.abs(Z) ** 2, axis=-1)))
    sw = _one_minus_sq(np.sqrt(np.sum(np.abs(W) ** 2, axis=-1)))
    # |1 - <z,w>|^2 - (1-|z|^2)(1-|w|^2) = |<d,w>|^2 + (1-|w|^2)|d|^2 with d = z - w,
    # a sum of nonnegative terms; averaging with the z-form keeps K symmetric
    dlt = Z - W
    d2 = np.sum(np.abs(dlt) ** 2, axis=-1)
    cw = np.abs(np.sum(dlt * np.conj(W), axis=-1)) ** 2
    cz = np.abs(np.sum(dlt * np.conj(Z), axis=-1)) ** 2
    num = 0.5 * (cw + cz) + 0.5 * (sw + sz) * d2
    return _combine(num, sz * sw)


def polydisc_dist(Z, W):
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    W = np.atleast_2d(np.asarray(W, dtype=np.complex128))
    return np.max(disc_dist(Z, W), axis=-1)


def siegel_dist(Z, W):
    """Siegel domain {Re w1 > |w2|^2 + ... + |wn|^2}."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    W = np.atleast_2d(np.asarray(W, dtype=np.complex128))
    rz = Z[..., 0].real - np.sum(np.abs(Z[..., 1:]) ** 2, axis=-1)
    rw = W[..., 0].real - np.sum(np.abs(W[..., 1:]) ** 2, axis=-1)
    # |cross|^2 - rho(z) rho(w) = |d1/2 - <d',w'>|^2 + rho(w)|d'|^2 with d = z - w
    dlt = Z - W
    dp2 = np.sum(np.abs(dlt[..., 1:]) ** 2, axis=-1)
    ew = np.abs(0.5 * dlt[..., 0] - np.sum(dlt[..., 1:] * np.conj(W[..., 1:]), axis=-1)) ** 2
    ez = np.abs(0.5 * dlt[..., 0] - np.sum(dlt[..., 1:] * np.conj(Z[..., 1:]), axis=-1)) ** 2
    num = 0.5 * (ew + ez) + 0.5 * (rw + rz) * dp2
    return _combine(num, rz * rw)


_DIST = {
    KIND_DISC: lambda Z, W: disc_dist(Z[..., 0], W[..., 0]),
    KIND_BALL: ball_dist,
    KIND_POLYDISC: polydisc_dist,
    KIND_SIEGEL: siegel_dist,
}


def pair_dist(kind, Z, W):
    """Row-wise distance between two (m, n) point arrays."""
    Z = np.atleast_2d(np.asarray(Z, dtype=np.complex128))
    W = np.atleast_2d(np.asarray(W, dtype=np.complex128))
    Z, W = np.broadcast_arrays(Z, W)
    return np.asarray(_DIST[kind](Z, W), dtype=np.float64)


def window_stats(kind, W, U, x):
    """Max and min over the window of K(w, u_l) - K(x, u_l), for each row w.

    W has shape (m, n), U has shape (L, n), x has shape (n,).
    """
    W = np.atleast_2d(np.asarray(W, dtype=np.complex128))
    U = np.atleast_2d(np.asarray(U, dtype=np.complex128))
    x = np.asarray(x, dtype=np.complex128).reshape(1, -1)
    base = pair_dist(kind, np.broadcast_to(x, U.shape), U)
    m, n = W.shape
    L = U.shape[0]
    big_w = np.repeat(W, L, axis=0)
    big_u = np.tile(U, (m, 1))
    diff = pair_dist(kind, big_w, big_u).reshape(m, L) - base[None, :]
    return diff.max(axis=1), diff.min(axis=1)
