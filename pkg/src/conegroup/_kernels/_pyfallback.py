"""NumPy implementations of the compiled kernels.

Same signatures and probe sequence as ``_fast.pyx``; the golden-section
search is vectorised across the batch instead of looping in C.
"""
import numpy as np

GOLDEN = 0.6180339887498949


def quad_margins(Y, Qn, a_unit):
    nrm2 = np.einsum("ij,ij->i", Y, Y)
    q = np.einsum("ij,jk,ik->i", Y, Qn, Y)
    lin = Y @ a_unit
    out = np.zeros(Y.shape[0])
    nz = nrm2 > 0.0
    out[nz] = np.minimum(-q[nz] / nrm2[nz], lin[nz] / np.sqrt(nrm2[nz]))
    return out


def facet_margins(Y, H):
    nrm = np.sqrt(np.einsum("ij,ij->i", Y, Y))
    out = np.zeros(Y.shape[0])
    nz = nrm > 0.0
    if H.shape[0] == 0:
        return out
    out[nz] = (Y[nz] @ H.T).min(axis=1) / nrm[nz]
    return out


def _lmax(Ms, Qn, lam):
    return np.linalg.eigvalsh(Ms - lam[:, None, None] * Qn)[:, -1]


def sproc_min_batch(Ms, Qn, his, iters):
    lo = np.zeros(Ms.shape[0])
    hi = np.array(his, dtype=float)
    x1 = hi - GOLDEN * (hi - lo)
    x2 = lo + GOLDEN * (hi - lo)
    f1 = _lmax(Ms, Qn, x1)
    f2 = _lmax(Ms, Qn, x2)
    for _ in range(iters):
        left = f1 <= f2
        # left: keep [lo, x2]; right: keep [x1, hi]
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
        nx1 = np.where(left, hi - GOLDEN * (hi - lo), x2)
        nx2 = np.where(left, x1, lo + GOLDEN * (hi - lo))
        nf1 = np.where(left, np.nan, f2)
        nf2 = np.where(left, f1, np.nan)
        probe = np.where(left, nx1, nx2)
        fp = _lmax(Ms, Qn, probe)
        f1 = np.where(left, fp, nf1)
        f2 = np.where(left, nf2, fp)
        x1, x2 = nx1, nx2
    take1 = f1 <= f2
    lams = np.where(take1, x1, x2)
    vals = np.where(take1, f1, f2)
    f0 = _lmax(Ms, Qn, np.zeros(Ms.shape[0]))
    at0 = f0 < vals
    return np.where(at0, 0.0, lams), np.where(at0, f0, vals)
