"""Backend selection for the hot Monte Carlo loop.

The compiled extension is used when it imported cleanly; set
``SUPBOUNDS_PURE_PYTHON=1`` to force the numpy fallback.
"""
import os

import numpy as np

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["cython"] = _compiled

if _compiled is not None and not os.environ.get("SUPBOUNDS_PURE_PYTHON"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def available_backends():
    return sorted(_BACKENDS)


def survival_count(sd, thr, n_paths, rng, bridge=False, thr0=0.0, backend=None):
    """Count walks ``S_k = sum_{i<=k} sd[i] Z_i`` that satisfy ``S_k <= thr[k]`` at every step.

    In bridge mode a path that ends a step below the threshold is still
    killed with the Brownian-bridge probability
    ``exp(-2 d_prev d_next / sd[k]**2)`` of having crossed in between; that
    is exact when the threshold is linear over the step. ``thr0`` is the
    threshold at time zero.
    """
    mod = _BACKENDS[backend or BACKEND]
    return mod.survival_count(sd, thr, int(n_paths), rng, bool(bridge), float(thr0))


def skeleton_survival_count(phases, block, n_paths, rng, backend=None):
    """Count Brownian skeletons that stay below a piecewise-linear boundary.

    Same law as stepping every grid point with :func:`survival_count`, but
    the walk advances ``block`` steps at once.  Only when the continuous
    bridge over a block crosses the boundary is its first-passage time
    sampled and the skeleton filled in from that time on.
    """
    mod = _BACKENDS[backend or BACKEND]
    return mod.skeleton_survival_count(np.ascontiguousarray(phases, dtype=float), int(block), int(n_paths), rng)
