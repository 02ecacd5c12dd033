"""Dense real linear algebra used throughout the package.

Matrices are plain ``numpy`` arrays.  Complex arithmetic is confined to
this module (resolvents, spectral projections); everything returned to the
other modules is real unless the function says otherwise.

Norms are Euclidean on vectors and spectral on matrices.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

__all__ = [
    "Eigenvalue",
    "NearSpectrumError",
    "Spectrum",
    "SpectralBoundError",
    "as_matrix",
    "as_vector",
    "default_tol",
    "expm",
    "kernel_basis",
    "laplace_resolvent_quadrature",
    "rank1",
    "resolvent",
    "residue_at_spectral_bound",
    "spectral_bound",
    "spectral_projection",
    "spectrum",
]


class NearSpectrumError(ValueError):
    """Raised when a resolvent is requested too close to the spectrum."""

    def __init__(self, nu, distance):
        self.nu = nu
        self.distance = float(distance)
        super().__init__(f"nu={nu} lies within {distance:.3e} of the spectrum")


class SpectralBoundError(ValueError):
    """The spectral bound is not attained by a real eigenvalue."""

    def __init__(self, bound, nearest):
        self.bound = float(bound)
        self.nearest = complex(nearest)
        super().__init__(
            f"spectral bound {bound:.6g} is not a real eigenvalue; "
            f"nearest eigenvalue on the bound is {nearest:.6g}")


def as_matrix(A, name="A"):
    """Validate and return ``A`` as a finite square float array."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} has non-finite entries")
    return A


def as_vector(x, name="x", dim=None):
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-d vector, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} has non-finite entries")
    if dim is not None and x.size != dim:
        raise ValueError(f"{name} has dimension {x.size}, expected {dim}")
    return x


def default_tol(A):
    """Eigenvalue clustering tolerance: ``1e-8 * max(|A|, 1)``."""
    return 1e-8 * max(np.linalg.norm(A, 2), 1.0)


def expm(A, t=1.0):
    """Return ``e^{tA}``.

    Scaling and squaring with a diagonal Pade approximant (scipy's
    implementation); ``t`` may be negative.
    """
    A = as_matrix(A)
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("t must be finite")
    if t == 0.0:
        return np.eye(A.shape[0])
    return scipy.linalg.expm(t * A)


@dataclass(frozen=True)
class Eigenvalue:
    value: complex
    algebraic: int
    geometric: int


@dataclass(frozen=True)
class Spectrum:
    """Clustered eigenvalues with multiplicities, sorted by decreasing real part."""

    eigenvalues: tuple
    tol: float

    @property
    def dim(self):
        return sum(e.algebraic for e in self.eigenvalues)

    def values(self):
        return np.array([e.value for e in self.eigenvalues])

    def find(self, lam):
        """Cluster nearest to ``lam`` and its distance."""
        vals = self.values()
        i = int(np.argmin(np.abs(vals - lam)))
        return self.eigenvalues[i], float(abs(vals[i] - lam))


def _cluster(vals, tol):
    # single linkage on the complex plane
    n = len(vals)
    parent = list(range(n))

    def root(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(vals[i] - vals[j]) <= tol:
                parent[root(i)] = root(j)
    groups = {}
    for i in range(n):
        groups.setdefault(root(i), []).append(i)
    return list(groups.values())


def spectrum(A, tol=None):
    """Eigenvalues of ``A`` with algebraic and geometric multiplicities.

    Eigenvalues within ``tol`` of each other are merged (single linkage);
    the geometric multiplicity is the number of singular values of
    ``lam I - A`` at or below ``tol``, clipped to ``[1, algebraic]``.
    """
    A = as_matrix(A)
    if tol is None:
        tol = default_tol(A)
    try:
        vals = np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"eigenvalue iteration failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise np.linalg.LinAlgError("eigenvalue iteration returned non-finite values")
    n = A.shape[0]
    out = []
    for group in _cluster(vals, tol):
        lam = complex(np.mean(vals[group]))
        if abs(lam.imag) <= tol:
            lam = complex(lam.real, 0.0)
        sv = np.linalg.svd(lam * np.eye(n) - A, compute_uv=False)
        geo = int(np.sum(sv <= tol))
        geo = min(max(geo, 1), len(group))
        out.append(Eigenvalue(lam, len(group), geo))
    out.sort(key=lambda e: (-e.value.real, -e.value.imag))
    return Spectrum(tuple(out), float(tol))


def spectral_bound(s):
    """Largest real part in a :class:`Spectrum` (or of a matrix's eigenvalues)."""
    if not isinstance(s, Spectrum):
        s = spectrum(s)
    if not s.eigenvalues:
        raise ValueError("empty spectrum")
    return max(e.value.real for e in s.eigenvalues)


def resolvent(A, nu, tol=None):
    """``(nu I - A)^{-1}`` as a complex matrix, by LU factorisation."""
    A = as_matrix(A)
    nu = complex(nu)
    if tol is None:
        tol = default_tol(A)
    dist = float(np.min(np.abs(np.linalg.eigvals(A) - nu)))
    if dist <= tol:
        raise NearSpectrumError(nu, dist)
    n = A.shape[0]
    return scipy.linalg.solve(nu * np.eye(n) - A, np.eye(n, dtype=complex))


def laplace_resolvent_quadrature(A, nu, horizon, steps):
    """Approximate ``int_0^T e^{-t nu} e^{tA} dt`` by composite Simpson.

    Returns ``(Z, err)`` where ``err`` estimates the distance of ``Z`` to the
    full resolvent: the Simpson-vs-trapezoid discrepancy on the same nodes
    plus the size of the truncated tail.
    """
    A = as_matrix(A)
    nu = complex(nu)
    horizon = float(horizon)
    steps = int(steps)
    if horizon <= 0 or steps < 2:
        raise ValueError("horizon must be positive and steps >= 2")
    sb = spectral_bound(spectrum(A))
    if nu.real <= sb:
        raise ValueError(
            f"Re(nu)={nu.real} <= spectral bound {sb}: the Laplace integral diverges")
    n = A.shape[0]
    h = horizon / steps
    step_op = scipy.linalg.expm(h * (A - nu * np.eye(n)))
    vals = np.empty((steps + 1, n, n), dtype=complex)
    vals[0] = np.eye(n)
    for k in range(1, steps + 1):
        vals[k] = vals[k - 1] @ step_op
    Z = scipy.integrate.simpson(vals, dx=h, axis=0)
    if steps % 4 == 0:
        # Richardson: Simpson on the even nodes has 16x the error
        coarse = scipy.integrate.simpson(vals[::2], dx=2 * h, axis=0)
        disc = np.linalg.norm(Z - coarse, 2) / 15.0
    else:
        disc = np.linalg.norm(Z - scipy.integrate.trapezoid(vals, dx=h, axis=0), 2) / 3.0
    # tail: |int_T^inf e^{-t nu} e^{tA}| <~ |e^{T(A - nu)}| / (Re nu - s(A))
    tail = np.linalg.norm(vals[-1], 2) / (nu.real - sb)
    return Z, float(disc + tail)


def rank1(x, xp):
    """Matrix of ``y -> <xp, y> x``."""
    x = as_vector(x, "x")
    xp = as_vector(xp, "xp", dim=x.size)
    return np.outer(x, xp)


def kernel_basis(A, tol=1e-10):
    """Orthonormal basis of the numerical kernel of ``A``.

    Right singular vectors whose singular value is at most
    ``tol * sigma_max``; the zero matrix has the whole space as kernel.
    """
    A = np.asarray(A)
    _, sv, vh = np.linalg.svd(A)
    smax = sv[0] if sv.size else 0.0
    keep = sv <= tol * smax
    basis = vh[keep].conj()
    if not np.iscomplexobj(A):
        basis = basis.real
    return [v for v in basis]


def _null_vectors(M, count):
    """The ``count`` right singular vectors with the smallest singular values."""
    _, _, vh = np.linalg.svd(M)
    return vh[vh.shape[0] - count:].conj()


def spectral_projection(A, lam, radius):
    """Riesz projection onto the generalised eigenspace of eigenvalues near ``lam``.

    Computed from a reordered complex Schur form and a Sylvester solve.
    Returns ``(P, N)`` with ``N = (A - lam) P`` nilpotent on the range of ``P``.
    Both are complex; take real parts for real ``lam``.
    """
    A = as_matrix(A)
    n = A.shape[0]
    T, Z, sdim = scipy.linalg.schur(
        A.astype(complex), output="complex",
        sort=lambda z: abs(z - lam) <= radius)
    if sdim == 0:
        raise ValueError(f"no eigenvalue within {radius} of {lam}")
    if sdim == n:
        P = np.eye(n, dtype=complex)
    else:
        T11, T12, T22 = T[:sdim, :sdim], T[:sdim, sdim:], T[sdim:, sdim:]
        X = scipy.linalg.solve_sylvester(T11, -T22, -T12)
        Ps = np.zeros((n, n), dtype=complex)
        Ps[:sdim, :sdim] = np.eye(sdim)
        Ps[:sdim, sdim:] = -X
        P = Z @ Ps @ Z.conj().T
    N = (A - lam * np.eye(n)) @ P
    return P, N


def nilpotency_index(N, scale, tol=1e-8):
    """Smallest ``k >= 1`` with ``|N^k| <= tol * scale``."""
    n = N.shape[0]
    Nk = N.copy()
    for k in range(1, n + 1):
        if np.linalg.norm(Nk, 2) <= tol * scale:
            return k
        Nk = Nk @ N
    return n + 1


def residue_at_spectral_bound(A, tol=None):
    """Pole order ``k`` and leading coefficient ``Q`` of the resolvent at ``s(A)``.

    ``Q = lim_{r -> 0+} r^k (s(A) + r - A)^{-1} = N^{k-1} P`` where ``P`` is
    the spectral projection for the real eigenvalue ``s(A)`` and ``N`` the
    nilpotent part.  Other eigenvalues on the line ``Re = s(A)`` are ignored.
    """
    A = as_matrix(A)
    spec = spectrum(A, tol)
    s = spectral_bound(spec)
    ev, dist = spec.find(complex(s, 0.0))
    if dist > spec.tol or ev.value.imag != 0.0:
        on_line = [e.value for e in spec.eigenvalues if abs(e.value.real - s) <= spec.tol]
        raise SpectralBoundError(s, on_line[0] if on_line else ev.value)
    lam = ev.value.real
    P, N = spectral_projection(A, lam, spec.tol * A.shape[0])
    P, N = P.real, N.real
    k = nilpotency_index(N, max(np.linalg.norm(P, 2), 1.0))
    Q = np.linalg.matrix_power(N, k - 1) @ P
    return k, Q
