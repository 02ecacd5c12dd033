"""The operator space L(X) of n-by-n matrices.

Matrices are vectorised by stacking columns, so ``vec(A M) = (I kron A) vec(M)``
and the functional ``phi_{x,x'}(M) = <x', M x>`` is represented by the
vector ``vec(x' x^T)``.

Membership in the cone ``L(X)_+`` of maps leaving a base cone invariant is
decided exactly for polyhedral bases (images of the generators) and for
quadratic bases (S-procedure); any base can also be probed by sampling.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.optimize

from . import _kernels
from .cones import (
    CapabilityError,
    ConeSpec,
    Membership,
    Operator,
    Polyhedral,
    Quadratic,
    Transformed,
    Verdict,
    batch_margins,
    classify_margin,
    dual,
    flatten,
    member,
    sample,
)
from .linalg import as_matrix, as_vector

__all__ = [
    "FunctionalCombo",
    "Generators",
    "OpFunctional",
    "SProcedure",
    "Sampling",
    "dual_functional_combo",
    "lift_left_mult",
    "op_cone_interior",
    "op_cone_margins",
    "op_cone_member",
    "op_cone_witness",
    "phi_apply",
    "unvec",
    "vec",
]


def vec(M):
    """Column-stacking vectorisation."""
    return np.asarray(M, dtype=float).flatten(order="F")


def unvec(v, n=None):
    v = np.asarray(v, dtype=float)
    if n is None:
        n = int(round(np.sqrt(v.size)))
    if v.ndim != 1 or v.size != n * n:
        raise ValueError(f"expected a vector of length n^2, got shape {v.shape}")
    return v.reshape((n, n), order="F")


@dataclass(frozen=True, eq=False)
class OpFunctional:
    """The functional ``M -> <xp, M x>`` on L(X)."""

    x: np.ndarray
    xp: np.ndarray

    def __post_init__(self):
        x = as_vector(self.x, "x")
        xp = as_vector(self.xp, "xp", dim=x.size)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "xp", xp)

    @property
    def dim(self):
        return self.x.size

    def vector(self):
        """Representation in the vectorised space: ``vec(xp x^T)``."""
        return vec(np.outer(self.xp, self.x))

    def to_dict(self):
        return {"x": self.x.tolist(), "xp": self.xp.tolist()}


# membership methods


@dataclass(frozen=True)
class Generators:
    """Exact test on the images of a polyhedral base's generators."""


@dataclass(frozen=True)
class SProcedure:
    """Exact test for quadratic bases via the lossless S-lemma."""

    iters: int = 90


@dataclass(frozen=True)
class Sampling:
    """Semi-decision: map sampled cone points and look for an escape."""

    count: int = 2000
    seed: int = 0


def _default_method(base):
    flat = flatten(base)
    if isinstance(flat, Polyhedral):
        return Generators()
    if isinstance(flat, Quadratic):
        return SProcedure()
    raise ValueError("base: operator cones cannot be used as a base")


def _check_T(T, base):
    T = as_matrix(T, "T")
    if isinstance(base, Operator) or not isinstance(base, ConeSpec):
        raise ValueError("base: must be a polyhedral, quadratic or transformed cone")
    if T.shape[0] != base.dim:
        raise ValueError(f"T: shape {T.shape} does not act on the base space (dim {base.dim})")
    return T


# ---------------------------------------------------------------------------
# S-procedure


def _sproc_bracket(Ms, q):
    qmin = abs(np.linalg.eigvalsh(q.Qn)[0])
    nrm = np.linalg.norm(Ms, ord=2, axis=(1, 2))
    return 2.0 * nrm / qmin + 1e-12


def _lmax(M, Qn, lam):
    return np.linalg.eigvalsh(M[None] - np.asarray(lam)[:, None, None] * Qn)[:, -1]


def _sproc_min(Ms, q, iters=90):
    """``min_{lam >= 0} lambda_max(M - lam Qn)`` for each ``M`` in the batch."""
    his = _sproc_bracket(Ms, q)
    lams, vals = _kernels.sproc_min_batch(Ms, q.Qn, his, iters)
    # the curve is convex; confirm on three points and fall back to a dense grid
    delta = 1e-3 * his
    left = np.maximum(lams - delta, 0.0)
    right = lams + delta
    for i in range(Ms.shape[0]):
        fl, fr = _lmax(Ms[i], q.Qn, [left[i], right[i]])
        slack = 1e-9 * (1.0 + abs(vals[i]))
        if vals[i] > min(fl, fr) + slack:
            grid = np.linspace(0.0, his[i], 2001)
            fg = _lmax(Ms[i], q.Qn, grid)
            j = int(np.argmin(fg))
            lams[i], vals[i] = grid[j], fg[j]
    return lams, vals


def _sproc_margins(Ts, q, iters=90):
    """S-margins ``-f*/|T|^2`` and dual margins of ``T^T a`` for a batch of maps."""
    Ts = np.asarray(Ts, dtype=float)
    Ms = np.einsum("bji,jk,bkl->bil", Ts, q.Qn, Ts)
    Ms = 0.5 * (Ms + np.transpose(Ms, (0, 2, 1)))
    tn2 = np.linalg.norm(Ts, ord=2, axis=(1, 2)) ** 2
    _, vals = _sproc_min(np.ascontiguousarray(Ms), q, iters)
    s_marg = np.where(tn2 > 0, -vals / np.where(tn2 > 0, tn2, 1.0), 0.0)
    qd = dual(q)
    d_marg = _kernels.quad_margins(np.einsum("bji,j->bi", Ts, q.apex), qd.Qn, qd.apex_unit)
    return s_marg, d_marg


def _trust_region_max(B, b, c):
    """Maximise ``c + 2 b.u + u.B.u`` over ``|u| <= 1``."""
    ev, V = np.linalg.eigh(B)
    bt = V.T @ b
    k = len(ev)

    def unorm(mu):
        return np.linalg.norm(bt / (mu - ev))

    if k == 0:
        return np.zeros(0)
    top = ev[-1]
    if top < 0 and unorm(0.0) <= 1.0:
        return V @ (bt / (0.0 - ev))
    lo = max(top, 0.0)
    near = np.abs(ev - top) <= 1e-12 * (1 + abs(top))
    if np.all(np.abs(bt[near]) <= 1e-14 * (1 + np.linalg.norm(b))):
        # hard case: the secular function stays below 1 up to the top eigenvalue
        rest = ~near
        w = np.zeros(k)
        w[rest] = bt[rest] / (lo - ev[rest])
        if np.linalg.norm(w) <= 1.0 and lo == top:
            j = np.flatnonzero(near)[0]
            w[j] = np.sqrt(max(1.0 - w @ w, 0.0))
            return V @ w
    hi = lo + np.linalg.norm(b) + 1.0
    while unorm(hi) > 1.0:
        hi *= 2.0
    lo_b = lo + 1e-300
    for _ in range(200):
        mid = 0.5 * (lo_b + hi)
        if unorm(mid) > 1.0:
            lo_b = mid
        else:
            hi = mid
    return V @ (bt / (hi - ev))


def _sproc_witness(T, q, apex_side):
    """A cone point whose image leaves the cone (or comes closest to leaving).

    ``apex_side`` selects the failure mode: ``<a, T x> < 0`` (``T^T a``
    outside the dual cone) or the quadratic form ``x^T T^T Q T x > 0``.
    """
    if apex_side:
        # <a, T z> = <T^T a, z>; separate T^T a from the dual cone
        qd = dual(q)
        w = qd.frame_inv @ (T.T @ q.apex)
        wb = w[1:]
        nb = np.linalg.norm(wb)
        z = np.concatenate([[1.0], -wb / nb]) if nb > 0 else np.eye(len(w))[0]
        x = qd.frame_inv.T @ z
        return x / np.linalg.norm(x)
    Mt = q.frame.T @ (T.T @ q.Qn @ T) @ q.frame
    Mt = 0.5 * (Mt + Mt.T)
    u = _trust_region_max(Mt[1:, 1:], Mt[1:, 0], Mt[0, 0])
    x = q.frame @ np.concatenate([[1.0], u])
    return x / np.linalg.norm(x)


# ---------------------------------------------------------------------------
# membership in L(X)_+


def op_cone_margins(Ts, base, iters=90):
    """Sign-exact margins of a batch of maps with respect to ``L(base)_+``.

    Polyhedral bases use the images of the generators; quadratic bases the
    S-procedure.  Only the sign (and whether it exceeds the tolerance) is
    meaningful across methods.
    """
    flat = flatten(base)
    Ts = np.asarray(Ts, dtype=float)
    if isinstance(flat, Polyhedral):
        G = flat.generators
        imgs = np.einsum("bij,kj->bki", Ts, G)
        b, k, n = imgs.shape
        m = _kernels.facet_margins(imgs.reshape(b * k, n), flat.facets).reshape(b, k)
        return m.min(axis=1)
    if isinstance(flat, Quadratic):
        s_marg, d_marg = _sproc_margins(Ts, flat, iters)
        return np.minimum(s_marg, d_marg)
    raise ValueError("base: operator cones cannot be used as a base")


def op_cone_witness(T, base, tol=1e-9):
    """Unit cone point whose image is (approximately) closest to leaving the cone.

    Polyhedral bases: the generator with the smallest image margin.
    Quadratic bases: the S-procedure witness (exact when ``T`` is outside).
    """
    T = _check_T(T, base)
    flat = flatten(base)
    if isinstance(flat, Polyhedral):
        G = flat.generators
        m = _kernels.facet_margins(G @ T.T, flat.facets)
        g = G[int(np.argmin(m))]
        return g / np.linalg.norm(g)
    s_marg, d_marg = _sproc_margins(T[None], flat)
    return _sproc_witness(T, flat, bool(d_marg[0] < s_marg[0]))


def op_cone_member(T, base, method=None, tol=1e-9):
    """Is ``T`` in ``L(base)_+``?  ``witness`` is a cone point mapped outside.

    ``method`` is :class:`Generators`, :class:`SProcedure`,
    :class:`Sampling` or ``None`` (the exact method for the base kind).
    """
    T = _check_T(T, base)
    if method is None:
        method = _default_method(base)
    flat = flatten(base)
    if not np.any(T):
        return Membership(Verdict.BOUNDARY, 0.0)
    if isinstance(method, Generators):
        if not isinstance(flat, Polyhedral):
            raise ValueError("method Generators requires a polyhedral base")
        worst = None
        for g in flat.generators:
            m = member(flat, T @ g, tol)
            if worst is None or m.margin < worst[0].margin:
                worst = (m, g)
        m, g = worst
        wit = g / np.linalg.norm(g) if m.verdict is Verdict.OUTSIDE else None
        return Membership(m.verdict, m.margin, witness=wit)
    if isinstance(method, SProcedure):
        if not isinstance(flat, Quadratic):
            raise ValueError("method SProcedure requires a quadratic base")
        s_marg, d_marg = _sproc_margins(T[None], flat, method.iters)
        margin = float(min(s_marg[0], d_marg[0])) + 0.0
        verdict = classify_margin(margin, tol)
        wit = None
        if verdict is Verdict.OUTSIDE:
            wit = _sproc_witness(T, flat, bool(d_marg[0] < -tol))
        return Membership(verdict, margin, witness=wit)
    if isinstance(method, Sampling):
        half = max(method.count // 2, 1)
        xs = sample(base, half, method.seed, "boundary") + \
            sample(base, max(method.count - half, 1), method.seed + 1, "cone")
        X = np.array(xs)
        marg = batch_margins(base, X @ T.T)
        i = int(np.argmin(marg))
        if marg[i] < -tol:
            x = X[i] / np.linalg.norm(X[i])
            m = member(base, T @ x, tol)
            return Membership(Verdict.OUTSIDE, min(m.margin, float(marg[i])), witness=x)
        return Membership(Verdict.BOUNDARY, float(np.clip(marg[i], -tol, tol)) + 0.0,
                          inconclusive=True)
    raise ValueError(f"unknown method {method!r}")


def _sphere_point(base, z):
    """Map unconstrained parameters onto the cone (interior for finite z)."""
    if isinstance(base, Polyhedral):
        w = np.exp(np.clip(z, -50, 50))
        x = w @ base.generators
    elif isinstance(base, Quadratic):
        u = z / np.sqrt(1.0 + z @ z)
        x = base.frame @ np.concatenate([[1.0], u])
    else:  # Transformed
        x = base.T @ _sphere_point(base.inner, z)
    return x / np.linalg.norm(x)


def _nparams(base):
    if isinstance(base, Polyhedral):
        return base.generators.shape[0]
    if isinstance(base, Quadratic):
        return base.dim - 1
    return _nparams(base.inner)


def op_cone_interior(T, base, tol=1e-9, budget=2000, seed=0):
    """Probe whether ``T`` lies in the interior of ``L(base)_+``.

    An operator is interior when it maps every non-zero cone point into the
    cone's interior, so the quantity of interest is the minimum margin of
    ``T x`` over unit cone points.  It is estimated with ``budget`` margin
    evaluations: a quarter on seeded boundary samples, the rest spread over
    ``max(32, 4 n)`` Nelder-Mead starts.  Interior means the estimate
    exceeds ``tol``; Outside means a sampled point was mapped outside.
    Otherwise the answer is Boundary with ``inconclusive=True``.
    """
    T = _check_T(T, base)
    budget = int(budget)
    if budget < 10:
        raise ValueError("budget must be >= 10")
    rng = np.random.default_rng(seed)
    best = [np.inf, None]

    def record(x, m):
        if m < best[0]:
            best[0], best[1] = m, x

    n_bnd = max(budget // 4, 1)
    X = np.array(sample(base, n_bnd, int(rng.integers(2**31)), "boundary"))
    X /= np.linalg.norm(X, axis=1, keepdims=True)
    marg = batch_margins(base, X @ T.T)
    for x, m in zip(X, marg):
        record(x, float(m))
    remaining = budget - n_bnd
    p = _nparams(base)
    starts = min(max(32, 4 * base.dim), remaining)
    per = max(remaining // max(starts, 1), 1)

    def objective(z):
        x = _sphere_point(base, z)
        m = member(base, T @ x, tol).margin
        record(x, m)
        return m

    for _ in range(starts):
        z0 = rng.normal(size=p)
        if per <= p + 1:
            objective(z0)
            continue
        scipy.optimize.minimize(objective, z0, method="Nelder-Mead",
                                options={"maxfev": per, "xatol": 1e-10, "fatol": 1e-14})
    m, x = best
    if m < -tol:
        return Membership(Verdict.OUTSIDE, float(m), witness=x)
    if m > tol:
        return Membership(Verdict.INTERIOR, float(m))
    return Membership(Verdict.BOUNDARY, float(m) + 0.0, witness=x, inconclusive=True)


# ---------------------------------------------------------------------------
# functionals and the lifted generator


def phi_apply(f, M):
    """``<xp, M x>``."""
    M = as_matrix(M, "M")
    if M.shape[0] != f.dim:
        raise ValueError(f"M: shape {M.shape} does not match functional dimension {f.dim}")
    return float(f.xp @ M @ f.x)


def lift_left_mult(A):
    """Matrix of ``M -> A M`` on column-stacked ``vec(M)``: ``I kron A``."""
    A = as_matrix(A)
    return np.kron(np.eye(A.shape[0]), A)


class FunctionalCombo:
    """Nonnegative combination of functionals ``phi_{x,x'}``."""

    def __init__(self, fs, weights, dim):
        self.functionals = tuple(fs)
        self.weights = np.asarray(weights, dtype=float)
        self.dim = dim

    def vector(self):
        out = np.zeros(self.dim * self.dim)
        for w, f in zip(self.weights, self.functionals):
            out += w * f.vector()
        return out

    def __call__(self, M):
        return float(sum(w * phi_apply(f, M) for w, f in zip(self.weights, self.functionals)))


def dual_functional_combo(fs: Sequence[OpFunctional], weights: Sequence[float], dim=None):
    """Evaluator of ``M -> sum_i w_i <x'_i, M x_i>`` with ``w_i >= 0``.

    At most ``n^2`` terms are accepted, the dimension of L(X).  ``dim`` is
    needed only for the empty combination (the zero functional).
    """
    fs = list(fs)
    w = np.asarray(list(weights), dtype=float)
    if w.shape != (len(fs),):
        raise ValueError(f"weights: expected {len(fs)} entries, got {w.size}")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights: must be finite and nonnegative")
    dims = {f.dim for f in fs}
    if len(dims) > 1:
        raise ValueError("functionals have mismatched dimensions")
    n = dims.pop() if dims else dim
    if n is None:
        n = 0
    if fs and len(fs) > n * n:
        raise CapabilityError(f"at most n^2 = {n * n} functionals per combination")
    return FunctionalCombo(fs, w, n)
