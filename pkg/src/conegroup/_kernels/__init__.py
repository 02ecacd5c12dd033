"""Hot kernels with a compiled core and a NumPy fallback.

The Cython module is used when it was built and ``CONEGROUP_PURE_PYTHON``
is unset; otherwise the NumPy versions are used.  ``BACKEND`` records
which one was picked.
"""
import os

import numpy as np

from . import _pyfallback

if os.environ.get("CONEGROUP_PURE_PYTHON"):
    _impl = _pyfallback
    BACKEND = "python"
else:
    try:
        from . import _fast as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pyfallback
        BACKEND = "python"


def _f64(a, ndim):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {a.shape}")
    return a


def quad_margins(Y, Qn, a_unit, impl=None):
    """Quadratic-cone margins of each row of ``Y`` (``Qn`` unit-norm)."""
    impl = impl or _impl
    return impl.quad_margins(_f64(Y, 2), _f64(Qn, 2), _f64(a_unit, 1))


def facet_margins(Y, H, impl=None):
    """min_i <H_i, y>/|y| for each row y of ``Y`` (rows of ``H`` unit)."""
    impl = impl or _impl
    return impl.facet_margins(_f64(Y, 2), _f64(H, 2))


def sproc_min_batch(Ms, Qn, his, iters=90, impl=None):
    """Minimise lambda -> lambda_max(M - lambda Q) over [0, hi] per batch item.

    The function is convex in lambda, so golden-section search is exact up
    to the bracket width ``hi * 0.618**iters``.  Returns ``(lams, vals)``.
    """
    impl = impl or _impl
    Ms = _f64(Ms, 3)
    his = _f64(his, 1)
    if Ms.shape[0] == 0:
        return np.zeros(0), np.zeros(0)
    return impl.sproc_min_batch(Ms, _f64(Qn, 2), his, int(iters))
