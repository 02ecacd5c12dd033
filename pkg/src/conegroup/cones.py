"""Closed convex cones with non-empty interior, and oracles on them.

Four kinds of cone are supported:

``Polyhedral``
    nonnegative span of finitely many generators.
``Quadratic``
    ``{x : x^T Q x <= 0, <apex, x> >= 0}`` with ``Q`` of signature (1, n-1).
``Transformed``
    the image ``T K`` of another cone under an invertible map.
``Operator``
    the cone ``L(X)_+`` of linear maps leaving a base cone invariant; its
    elements are n-by-n matrices, vectorised by stacking columns.

Membership margins are scale free: quadratic slacks are divided by
``|Q| |x|^2`` and linear slacks by ``|x|``.  The zero vector is always on
the boundary with margin 0.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.optimize

from . import _kernels
from .linalg import as_matrix, as_vector

__all__ = [
    "CapabilityError",
    "ConeSpec",
    "Membership",
    "Operator",
    "Polyhedral",
    "Quadratic",
    "Transformed",
    "Verdict",
    "classify_margin",
    "cone_from_dict",
    "cone_to_dict",
    "conic_hull_member",
    "double_description",
    "dual",
    "flatten",
    "ice_cream",
    "is_pointed",
    "member",
    "orthant",
    "sample",
    "sample_dual",
    "witness_sequence_check",
]

DD_MAX_DIM = 6
DD_MAX_GENERATORS = 64


class CapabilityError(ValueError):
    """Input is valid but beyond what the exact oracles handle."""


class Verdict(str, Enum):
    INTERIOR = "Interior"
    BOUNDARY = "Boundary"
    OUTSIDE = "Outside"


@dataclass(frozen=True, eq=False)
class Membership:
    verdict: Verdict
    margin: float
    witness: Optional[np.ndarray] = None
    inconclusive: bool = False

    @property
    def is_member(self):
        return self.verdict is not Verdict.OUTSIDE

    def to_dict(self):
        return {
            "verdict": self.verdict.value,
            "margin": float(self.margin),
            "witness": None if self.witness is None else [float(v) for v in self.witness],
            "inconclusive": self.inconclusive,
        }


def classify_margin(margin, tol):
    if margin > tol:
        return Verdict.INTERIOR
    if margin < -tol:
        return Verdict.OUTSIDE
    return Verdict.BOUNDARY


# ---------------------------------------------------------------------------
# cone specifications


class ConeSpec:
    """Base class; ``dim`` is the dimension of the ambient space."""

    dim: int


@dataclass(frozen=True, eq=False)
class Polyhedral(ConeSpec):
    generators: np.ndarray

    def __post_init__(self):
        G = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if G.ndim != 2 or G.size == 0:
            raise ValueError("generators: expected a non-empty list of vectors")
        if not np.all(np.isfinite(G)):
            raise ValueError("generators: non-finite entries")
        G = G[np.linalg.norm(G, axis=1) > 0]
        if G.shape[0] == 0:
            raise ValueError("generators: need at least one non-zero generator")
        if np.linalg.matrix_rank(G) < G.shape[1]:
            raise ValueError("generators: they do not span the space, so the cone has empty interior")
        object.__setattr__(self, "generators", G)

    @property
    def dim(self):
        return self.generators.shape[1]

    @cached_property
    def facets(self):
        """Unit inner normals of the facets (extreme rays of the dual)."""
        return double_description(self.generators)


@dataclass(frozen=True, eq=False)
class Quadratic(ConeSpec):
    Q: np.ndarray
    apex: np.ndarray
    _frame: tuple = field(init=False, repr=False)

    def __post_init__(self):
        Q = as_matrix(self.Q, "Q")
        scale = np.linalg.norm(Q, 2)
        if scale == 0 or np.linalg.norm(Q - Q.T) > 1e-12 * scale:
            raise ValueError("Q: must be a non-zero symmetric matrix")
        Q = 0.5 * (Q + Q.T)
        a = as_vector(self.apex, "apex", dim=Q.shape[0])
        if np.linalg.norm(a) == 0:
            raise ValueError("apex: must be non-zero")
        ev, V = np.linalg.eigh(Q)
        thr = 1e-10 * scale
        if not (ev[0] < -thr and np.all(ev[1:] > thr)):
            raise ValueError(
                "Q: signature must be exactly one negative and n-1 positive eigenvalues, "
                f"got {np.round(ev, 12).tolist()}")
        v0 = V[:, 0]
        if a @ np.linalg.solve(Q, a) >= -thr * (a @ a) / scale:
            raise ValueError("apex: <apex, x> must be positive on the cone's interior "
                             "(need apex^T Q^-1 apex < 0)")
        if a @ v0 < 0:
            v0 = -v0
        # x = L w maps the standard ice cream cone {w_0 >= |w_bar|} onto this cone
        L = np.column_stack([v0 / np.sqrt(-ev[0])] + [V[:, i] / np.sqrt(ev[i])
                                                       for i in range(1, len(ev))])
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "apex", a)
        object.__setattr__(self, "_frame", (Q / scale, a / np.linalg.norm(a), L,
                                            np.linalg.inv(L)))

    @property
    def dim(self):
        return self.Q.shape[0]

    @property
    def Qn(self):
        return self._frame[0]

    @property
    def apex_unit(self):
        return self._frame[1]

    @property
    def frame(self):
        """``L`` with ``cone = L * ICE``; columns are (axis, transverse...)."""
        return self._frame[2]

    @property
    def frame_inv(self):
        return self._frame[3]


@dataclass(frozen=True, eq=False)
class Transformed(ConeSpec):
    T: np.ndarray
    inner: ConeSpec

    def __post_init__(self):
        T = as_matrix(self.T, "T")
        if not isinstance(self.inner, ConeSpec) or isinstance(self.inner, Operator):
            raise ValueError("inner: must be a polyhedral, quadratic or transformed cone")
        if T.shape[0] != self.inner.dim:
            raise ValueError(f"T: shape {T.shape} does not match inner dimension {self.inner.dim}")
        cond = np.linalg.cond(T)
        if not np.isfinite(cond) or cond > 1e12:
            raise ValueError(f"T: must be invertible (condition number {cond:.3e})")
        object.__setattr__(self, "T", T)

    @property
    def dim(self):
        return self.T.shape[0]

    @property
    def condition_number(self):
        return float(np.linalg.cond(self.T))


@dataclass(frozen=True, eq=False)
class Operator(ConeSpec):
    base: ConeSpec

    def __post_init__(self):
        if not isinstance(self.base, ConeSpec) or isinstance(self.base, Operator):
            raise ValueError("base: must be a polyhedral, quadratic or transformed cone")

    @property
    def n(self):
        return self.base.dim

    @property
    def dim(self):
        return self.base.dim ** 2


def orthant(n):
    return Polyhedral(np.eye(n))


def ice_cream(n, axis=0):
    """Lorentz cone ``{x : sum_{i != axis} x_i^2 <= x_axis^2, x_axis >= 0}``."""
    d = np.ones(n)
    d[axis] = -1.0
    return Quadratic(np.diag(d), np.eye(n)[axis])


def flatten(cone):
    """Fold ``Transformed`` layers into an equivalent polyhedral/quadratic spec."""
    if isinstance(cone, Transformed):
        inner = flatten(cone.inner)
        T = cone.T
        if isinstance(inner, Polyhedral):
            return Polyhedral(inner.generators @ T.T)
        Ti = np.linalg.inv(T)
        return Quadratic(Ti.T @ inner.Q @ Ti, Ti.T @ inner.apex)
    return cone


# ---------------------------------------------------------------------------
# double description


def double_description(A, tol=1e-9):
    """Extreme rays of ``{y : A y >= 0}`` (rows of ``A`` are the constraints).

    Incremental double description with the combinatorial adjacency test.
    The cone must be pointed, i.e. ``A`` has full column rank.  Rays are
    returned as unit-norm rows.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    m, n = A.shape
    if n > DD_MAX_DIM or m > DD_MAX_GENERATORS:
        raise CapabilityError(
            f"exact facet enumeration is limited to dim <= {DD_MAX_DIM} and "
            f"<= {DD_MAX_GENERATORS} generators (got dim {n}, {m} generators)")
    A = A / np.linalg.norm(A, axis=1, keepdims=True)
    basis = []
    for i in range(m):
        if np.linalg.matrix_rank(A[basis + [i]], tol=1e-10) > len(basis):
            basis.append(i)
        if len(basis) == n:
            break
    if len(basis) < n:
        raise ValueError("constraint rows do not have full rank: the cone is not pointed")
    R = np.linalg.inv(A[basis]).T
    R /= np.linalg.norm(R, axis=1, keepdims=True)
    done = list(basis)
    for i in range(m):
        if i in basis:
            continue
        v = R @ A[i]
        pos = np.flatnonzero(v > tol)
        neg = np.flatnonzero(v < -tol)
        if neg.size == 0:
            done.append(i)
            continue
        zero = np.flatnonzero(np.abs(v) <= tol)
        Z = np.abs(R @ A[done].T) <= tol
        new = []
        for p in pos:
            for q in neg:
                common = Z[p] & Z[q]
                if common.sum() < n - 2:
                    continue
                others = [r for r in range(R.shape[0]) if r != p and r != q]
                if any(np.all(Z[r][common]) for r in others):
                    continue
                r = v[p] * R[q] - v[q] * R[p]
                new.append(r / np.linalg.norm(r))
        keep = np.concatenate([pos, zero])
        R = np.vstack([R[keep]] + ([np.array(new)] if new else []))
        done.append(i)
    return _dedup_rows(R)


def _dedup_rows(R, tol=1e-9):
    out = []
    for r in R:
        if not any(np.linalg.norm(r - s) <= tol for s in out):
            out.append(r)
    return np.array(out)


# ---------------------------------------------------------------------------
# membership


def _is_zero(x):
    return not np.any(x)


def _quad_witness(cone, x):
    # separating functional y in K* with <y, x> < 0, built in ice-cream coordinates
    w = cone.frame_inv @ x
    wb = w[1:]
    nb = np.linalg.norm(wb)
    z = np.concatenate([[1.0], -wb / nb]) if nb > 0 else np.eye(len(w))[0]
    y = cone.frame_inv.T @ z
    return y / np.linalg.norm(y)


def member(cone, x, tol=1e-9):
    """Three-way membership verdict of ``x`` with a signed, scale-free margin.

    For ``Operator`` cones ``x`` may be an n-by-n matrix or its column-stacked
    vectorisation; the exact operator-cone oracle is used.
    """
    if isinstance(cone, Operator):
        from .opspace import op_cone_member, unvec
        X = np.asarray(x, dtype=float)
        M = X if X.ndim == 2 else unvec(X, cone.n)
        return op_cone_member(M, cone.base, None, tol)
    x = as_vector(x, "x", dim=cone.dim)
    if _is_zero(x):
        return Membership(Verdict.BOUNDARY, 0.0)
    if isinstance(cone, Polyhedral):
        fm = float(_kernels.facet_margins(x[None, :], cone.facets)[0]) + 0.0
        if fm >= -tol:
            return Membership(classify_margin(fm, tol), fm)
        lam, _ = scipy.optimize.nnls(cone.generators.T, x)
        p = cone.generators.T @ lam
        gap = p - x
        dist = np.linalg.norm(gap) / np.linalg.norm(x)
        margin = -float(max(dist, -fm))
        return Membership(classify_margin(margin, tol), margin,
                          witness=gap / np.linalg.norm(gap))
    if isinstance(cone, Quadratic):
        margin = float(_kernels.quad_margins(x[None, :], cone.Qn, cone.apex_unit)[0]) + 0.0
        verdict = classify_margin(margin, tol)
        wit = _quad_witness(cone, x) if verdict is Verdict.OUTSIDE else None
        return Membership(verdict, margin, witness=wit)
    if isinstance(cone, Transformed):
        inner = member(cone.inner, np.linalg.solve(cone.T, x), tol)
        wit = None
        if inner.witness is not None:
            wit = np.linalg.solve(cone.T.T, inner.witness)
            wit /= np.linalg.norm(wit)
        return Membership(inner.verdict, inner.margin, wit, inner.inconclusive)
    raise TypeError(f"not a cone spec: {cone!r}")


def batch_margins(cone, Y):
    """Margins of each row of ``Y``; sign-consistent with :func:`member`.

    For polyhedral cones the facet slack is returned, which has the right
    sign but is not the distance used by :func:`member` outside the cone.
    """
    Y = np.asarray(Y, dtype=float)
    if isinstance(cone, Polyhedral):
        return _kernels.facet_margins(Y, cone.facets)
    if isinstance(cone, Quadratic):
        return _kernels.quad_margins(Y, cone.Qn, cone.apex_unit)
    if isinstance(cone, Transformed):
        return batch_margins(cone.inner, np.linalg.solve(cone.T, Y.T).T)
    if isinstance(cone, Operator):
        from .opspace import op_cone_margins
        n = cone.n
        Ms = np.transpose(Y.reshape(Y.shape[0], n, n), (0, 2, 1))
        return op_cone_margins(Ms, cone.base)
    raise TypeError(f"not a cone spec: {cone!r}")


# ---------------------------------------------------------------------------
# duality


def dual(cone):
    """Dual cone under the standard pairing on R^n."""
    if isinstance(cone, Polyhedral):
        rays = double_description(cone.generators)
        if rays.shape[0] == 0 or np.linalg.matrix_rank(rays) < cone.dim:
            raise ValueError("cone is not pointed, so its dual has empty interior")
        return Polyhedral(rays)
    if isinstance(cone, Quadratic):
        Qi = np.linalg.inv(cone.Q)
        return Quadratic(Qi, -Qi @ cone.apex)
    if isinstance(cone, Transformed):
        return Transformed(np.linalg.inv(cone.T).T, dual(cone.inner))
    if isinstance(cone, Operator):
        raise ValueError("the dual of an operator cone is only available through "
                         "functionals phi_{x,x'} (see conegroup.opspace)")
    raise TypeError(f"not a cone spec: {cone!r}")


def is_pointed(cone, tol=1e-9):
    """True when the cone contains no line."""
    if isinstance(cone, Polyhedral):
        G = cone.generators
        k = G.shape[0]
        A_eq = np.vstack([G.T, np.ones((1, k))])
        b_eq = np.concatenate([np.zeros(cone.dim), [1.0]])
        res = scipy.optimize.linprog(np.zeros(k), A_eq=A_eq, b_eq=b_eq,
                                     bounds=[(0, None)] * k, method="highs")
        if res.status == 0:
            # a convex combination of generators vanishes: a line lies in the cone
            return bool(np.linalg.norm(G.T @ res.x) > tol)
        return True
    if isinstance(cone, Quadratic):
        return True
    if isinstance(cone, Transformed):
        return is_pointed(cone.inner, tol)
    if isinstance(cone, Operator):
        return is_pointed(cone.base, tol)
    raise TypeError(f"not a cone spec: {cone!r}")


# ---------------------------------------------------------------------------
# sampling

_REGIONS = ("interior", "boundary", "cone")


def _region(region):
    r = getattr(region, "value", region)
    r = str(r).lower()
    if r not in _REGIONS:
        raise ValueError(f"region must be one of {_REGIONS}, got {region!r}")
    return r


def _unit_sphere(rng, k):
    u = rng.normal(size=k)
    nrm = np.linalg.norm(u)
    return u / nrm if nrm > 0 else np.eye(k)[0]


def _raw_sample(cone, rng, region):
    if isinstance(cone, Quadratic):
        n = cone.dim
        if region == "boundary":
            r = 1.0
        elif region == "interior":
            r = rng.uniform(0.0, 0.9)
        else:
            r = 1.0 if rng.random() < 0.25 else rng.uniform(0.0, 1.0)
        w = np.concatenate([[1.0], r * _unit_sphere(rng, n - 1)]) if n > 1 else np.ones(1)
        x = cone.frame @ w
        return x / np.linalg.norm(x) * rng.uniform(0.5, 2.0)
    if isinstance(cone, Polyhedral):
        G = cone.generators
        k = G.shape[0]
        if region == "boundary" or (region == "cone" and rng.random() < 0.25):
            h = cone.facets[rng.integers(cone.facets.shape[0])]
            on = np.flatnonzero(np.abs(G @ h) <= 1e-9 * np.linalg.norm(G, axis=1))
            wts = rng.exponential(size=on.size) + 0.05
            x = wts @ G[on]
        elif region == "interior":
            x = (rng.exponential(size=k) + 0.05) @ G
        else:
            mask = rng.random(k) < 0.5
            mask[rng.integers(k)] = True
            x = (rng.exponential(size=k) * mask) @ G
        return x / np.linalg.norm(x) * rng.uniform(0.5, 2.0)
    if isinstance(cone, Transformed):
        return cone.T @ _raw_sample(cone.inner, rng, region)
    if isinstance(cone, Operator):
        base = cone.base
        dbase = dual(base)
        if region == "boundary":
            M = np.outer(_raw_sample(base, rng, "boundary"), _raw_sample(dbase, rng, "interior"))
        else:
            sub = "interior" if region == "interior" else "cone"
            M = sum(np.outer(_raw_sample(base, rng, sub), _raw_sample(dbase, rng, sub))
                    for _ in range(int(rng.integers(1, 4))))
        return M.flatten(order="F")
    raise TypeError(f"not a cone spec: {cone!r}")


def _accept(m, region, tol):
    if region == "interior":
        return m.verdict is Verdict.INTERIOR
    if region == "boundary":
        return m.verdict is Verdict.BOUNDARY and not m.inconclusive
    return m.margin >= -tol


def sample(cone, count, seed=0, region="cone", tol=1e-9):
    """Deterministic samples from the cone, each verified with :func:`member`.

    ``region`` is ``"interior"``, ``"boundary"`` or ``"cone"`` (either).
    """
    count = int(count)
    if count < 1:
        raise ValueError("count must be >= 1")
    region = _region(region)
    rng = np.random.default_rng(seed)
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 50 * count + 100:
            raise RuntimeError(f"could not draw {count} {region} samples")
        x = _raw_sample(cone, rng, region)
        if _accept(member(cone, x, tol), region, tol):
            out.append(x)
    return out


def sample_dual(cone, count, seed=0, region="cone", tol=1e-9):
    """Samples from the dual cone.

    For ``Operator`` cones the dual is not available as a spec; the samples
    are then vectorised functionals ``phi_{x,x'}`` (the matrix ``x' x^T``
    stacked by columns) with ``x`` in the base and ``x'`` in its dual.
    """
    if not isinstance(cone, Operator):
        return sample(dual(cone), count, seed, region, tol)
    region = _region(region)
    base = cone.base
    rng = np.random.default_rng(seed)
    xs_region = "interior" if region == "interior" else "cone"
    xs = sample(base, count, rng.integers(2**31), xs_region, tol)
    xps = sample(dual(base), count, rng.integers(2**31), region, tol)
    return [np.outer(xp, x).flatten(order="F") for x, xp in zip(xs, xps)]


# ---------------------------------------------------------------------------
# conic hull of a quadratic cone and at most two rays


def _solve_kkt(H, b, C, e):
    m = H.shape[0]
    k = C.shape[0]
    K = np.zeros((m + k, m + k))
    K[:m, :m] = H
    K[:m, m:] = C.T
    K[m:, :m] = C
    rhs = np.concatenate([b, e])
    if np.linalg.cond(K) > 1e12:
        return None
    return np.linalg.solve(K, rhs)[:m]


def _recession_rays(C, eps):
    m = C.shape[1]
    if m == 1:
        return [np.ones(1)] if np.all(C @ np.ones(1) <= eps) else []
    # m == 2: directions (cos t, sin t) on the quarter circle with C d <= 0
    cands = [np.array([1.0, 0.0]), np.array([0.0, 1.0])]
    for row in C:
        d = np.array([-row[1], row[0]])
        for s in (d, -d):
            if np.linalg.norm(s) > 0 and np.all(s >= -eps):
                cands.append(s / np.linalg.norm(s))
    feas = [d for d in cands if np.all(C @ d <= eps)]
    if not feas:
        return []
    ang = [np.arctan2(d[1], d[0]) for d in feas]
    lo, hi = feas[int(np.argmin(ang))], feas[int(np.argmax(ang))]
    return [lo] if np.allclose(lo, hi) else [lo, hi]


def _sup_quadratic(c0, b, H, C, e):
    """Supremum of ``c0 + b.l - l.H.l/2`` over ``{l : C l <= e}`` in <= 2 dims.

    Exact: KKT points of every face, plus the recession-direction test for
    unboundedness (a quadratic bounded above on a polyhedron attains its
    supremum).  Returns ``(sup, argmax)``; ``sup`` is ``inf`` when unbounded
    and ``None`` when the polyhedron is empty.
    """
    m = H.shape[0]
    scale = 1.0 + np.abs(H).max() + np.abs(b).max() + abs(c0)
    eps = 1e-12 * scale

    def phi(lam):
        return c0 + b @ lam - 0.5 * lam @ H @ lam

    cands = []
    for size in range(m + 1):
        for S in itertools.combinations(range(C.shape[0]), size):
            lam = _solve_kkt(H, b, C[list(S)], e[list(S)])
            if lam is None:
                continue
            if np.all(C @ lam <= e + 1e-10 * (1 + np.abs(e))):
                cands.append(lam)
    if not cands:
        return None, None
    rays = _recession_rays(C, eps)
    vertices = cands
    if rays:
        flat = []
        # minimise d.H.d along the segment between extreme rays
        if len(rays) == 1:
            segs = [rays[0]]
        else:
            r1, r2 = rays
            dr = r2 - r1
            a2 = dr @ H @ dr
            a1 = 2 * r1 @ H @ dr
            us = [0.0, 1.0]
            if a2 > 0:
                us.append(min(max(-a1 / (2 * a2), 0.0), 1.0))
            segs = [r1 + u * dr for u in us]
        for d in segs:
            d = d / np.linalg.norm(d)
            curv = d @ H @ d
            if curv < -eps:
                return np.inf, None
            if curv <= eps:
                flat.append(d)
        for d in flat:
            Hd = H @ d
            if any(-(Hd @ r) > eps for r in rays):
                return np.inf, None
            if max(b @ d - v @ Hd for v in vertices) > eps:
                return np.inf, None
    vals = [phi(lam) for lam in cands]
    i = int(np.argmax(vals))
    return float(vals[i]), cands[i]


def conic_hull_member(target, quad, rays, tol=1e-9):
    """Decide ``target in quad + cone(rays)`` for at most two rays.

    The margin is ``max -r^T Q r / (|Q| |target|^2)`` over residuals
    ``r = target - sum lam_i ray_i`` with ``lam >= 0`` and ``<apex, r> >= 0``,
    clipped to 1.  Unlike :func:`member` it is not normalised by the
    residual, so a target that lies only in the closure of the hull gets a
    strictly negative margin.  The witness is the optimal ``lam``.
    """
    q = flatten(quad)
    if not isinstance(q, Quadratic):
        raise ValueError("quad: must be a quadratic (or transformed quadratic) cone")
    t = as_vector(target, "target", dim=q.dim)
    R = np.array([as_vector(r, "ray", dim=q.dim) for r in rays]).reshape(-1, q.dim).T
    m = R.shape[1]
    if m > 2:
        raise CapabilityError("conic_hull_member supports at most two rays")
    if m and np.any(np.linalg.norm(R, axis=0) == 0):
        raise ValueError("rays: degenerate (zero) ray")
    if m == 2:
        u, v = R[:, 0] / np.linalg.norm(R[:, 0]), R[:, 1] / np.linalg.norm(R[:, 1])
        if abs(u @ v) > 1 - 1e-12:
            raise ValueError("rays: must span distinct directions")
    s = np.linalg.norm(t)
    if s == 0:
        return Membership(Verdict.BOUNDARY, 0.0, witness=np.zeros(m))
    Qn, a = q.Qn, q.apex_unit
    c0 = -(t @ Qn @ t) / s**2
    b = 2 * R.T @ Qn @ t / s**2
    H = 2 * R.T @ Qn @ R / s**2
    d = R.T @ a / s
    e0 = a @ t / s
    C = np.vstack([-np.eye(m), d[None, :]]) if m else np.zeros((1, 0))
    e = np.concatenate([np.zeros(m), [e0]])
    if m == 0:
        if e0 < 0:
            return Membership(Verdict.OUTSIDE, float(min(e0, -tol)) if e0 < -tol else float(e0))
        margin = min(c0, 1.0)
        return Membership(classify_margin(margin, tol), float(margin), witness=np.zeros(0))
    sup, lam = _sup_quadratic(c0, b, H, C, e)
    if sup is None:
        # apex constraint infeasible for every lam >= 0; best slack is at lam = 0
        return Membership(classify_margin(e0, tol), float(e0), witness=np.zeros(m))
    if not np.isfinite(sup):
        return Membership(Verdict.INTERIOR, 1.0, witness=None)
    margin = min(sup, 1.0)
    return Membership(classify_margin(margin, tol), float(margin), witness=lam)


def _in_component(v, comp, tol):
    if isinstance(comp, ConeSpec):
        return member(comp, v, tol).margin >= -tol
    r = as_vector(comp, "ray")
    c = (v @ r) / (r @ r)
    scale = max(np.linalg.norm(v), 1.0)
    return c >= -tol * scale and np.linalg.norm(v - c * r) <= tol * scale


def witness_sequence_check(target, summand_fn: Callable, lambdas: Sequence[float], tol=1e-9):
    """Distances ``|sum summands(lam) - target|`` along a parametrised family.

    ``summand_fn(lam)`` returns ``(vector, component)`` pairs; a component
    is a cone spec or a ray (1-d array).  Each summand must lie in its
    component, otherwise ``ValueError`` is raised.
    """
    t = as_vector(target, "target")
    out = []
    for lam in lambdas:
        total = np.zeros_like(t)
        for i, (v, comp) in enumerate(summand_fn(lam)):
            v = as_vector(v, "summand", dim=t.size)
            if not _in_component(v, comp, tol):
                raise ValueError(f"summand {i} at lambda={lam} is not in its component set")
            total = total + v
        out.append((float(lam), float(np.linalg.norm(total - t))))
    return out


# ---------------------------------------------------------------------------
# JSON form


def _num_list(a):
    return np.asarray(a, dtype=float).tolist()


def cone_to_dict(cone):
    if isinstance(cone, Polyhedral):
        return {"type": "polyhedral", "generators": _num_list(cone.generators)}
    if isinstance(cone, Quadratic):
        return {"type": "quadratic", "Q": _num_list(cone.Q), "apex": _num_list(cone.apex)}
    if isinstance(cone, Transformed):
        return {"type": "transformed", "T": _num_list(cone.T), "inner": cone_to_dict(cone.inner)}
    if isinstance(cone, Operator):
        return {"type": "operator", "base": cone_to_dict(cone.base)}
    raise TypeError(f"not a cone spec: {cone!r}")


def _field(d, key, path):
    if key not in d:
        raise ValueError(f"{path}.{key}: missing field")
    return d[key]


def _array(val, path, ndim):
    try:
        a = np.array(val, dtype=float)
    except (TypeError, ValueError):
        raise ValueError(f"{path}: expected a {ndim}-d array of numbers") from None
    if a.ndim != ndim:
        raise ValueError(f"{path}: expected a {ndim}-d array, got {a.ndim}-d")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{path}: non-finite number")
    return a


def cone_from_dict(d, path="cone"):
    """Parse the JSON cone-spec form; errors name the offending field."""
    if not isinstance(d, dict):
        raise ValueError(f"{path}: expected an object")
    kind = _field(d, "type", path)
    try:
        if kind == "polyhedral":
            return Polyhedral(_array(_field(d, "generators", path), f"{path}.generators", 2))
        if kind == "quadratic":
            return Quadratic(_array(_field(d, "Q", path), f"{path}.Q", 2),
                             _array(_field(d, "apex", path), f"{path}.apex", 1))
        if kind == "transformed":
            inner = cone_from_dict(_field(d, "inner", path), f"{path}.inner")
            return Transformed(_array(_field(d, "T", path), f"{path}.T", 2), inner)
        if kind == "operator":
            return Operator(cone_from_dict(_field(d, "base", path), f"{path}.base"))
    except ValueError as exc:
        msg = str(exc)
        raise ValueError(msg if msg.startswith(path) else f"{path}: {msg}") from None
    raise ValueError(f"{path}.type: unknown cone type {kind!r}")
