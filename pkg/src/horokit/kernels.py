"""Backend selection for the distance kernels.

The compiled extension is used when it imports; otherwise the numpy
versions are used. Set ``HOROKIT_BACKEND=python`` to force the fallback.
"""

import os

from . import _kernels_py

KIND_DISC = _kernels_py.KIND_DISC
KIND_BALL = _kernels_py.KIND_BALL
KIND_POLYDISC = _kernels_py.KIND_POLYDISC
KIND_SIEGEL = _kernels_py.KIND_SIEGEL

_impl = _kernels_py
BACKEND = "python"
if os.environ.get("HOROKIT_BACKEND", "").lower() != "python":
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"

disc_dist = _impl.disc_dist
ball_dist = _impl.ball_dist
polydisc_dist = _impl.polydisc_dist
siegel_dist = _impl.siegel_dist
pair_dist = _impl.pair_dist
window_stats = _impl.window_stats

__all__ = [
    "BACKEND", "KIND_DISC", "KIND_BALL", "KIND_POLYDISC", "KIND_SIEGEL",
    "disc_dist", "ball_dist", "polydisc_dist", "siegel_dist", "pair_dist",
    "window_stats",
]
