"""Eventual nonnegativity and positivity of ``t -> e^{tA}`` with respect to a cone.

Three quantifier patterns are distinguished:

* uniform: ``e^{tA}`` maps the cone into itself (its interior) for large t;
* individual: for each x in the cone, ``e^{tA} x`` is eventually in the cone
  (its interior), with a threshold depending on x;
* weak: for each pair (x, x') from the cone and its dual, the pairing
  ``<x', e^{tA} x>`` is eventually nonnegative (positive).

Positivity in all three senses is characterised spectrally and decided by
:func:`classify_eventual_positivity`.  :func:`check` is a grid-based
semi-decision procedure for every notion and reports ``Inconclusive``
instead of extrapolating.

Along the grid the semigroup is rescaled to ``e^{t(A - s)}`` with ``s`` the
spectral bound; positive factors change neither cone membership nor the
sign of pairings.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from math import factorial
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.optimize

from .cones import (
    ConeSpec,
    Operator,
    Polyhedral,
    Quadratic,
    Verdict,
    batch_margins,
    dual,
    flatten,
    member,
    sample,
    sample_dual,
)
from .linalg import (
    SpectralBoundError,
    _null_vectors,
    as_matrix,
    default_tol,
    residue_at_spectral_bound,
    spectral_bound,
    spectral_projection,
    spectrum,
)
from .opspace import Sampling, op_cone_margins, op_cone_member, op_cone_witness

__all__ = [
    "CheckReport",
    "CheckVerdict",
    "Notion",
    "PerronData",
    "PositivityCertificate",
    "check",
    "classify_eventual_positivity",
    "dualize_check",
    "perron_data",
]

OVERFLOW = 1e12
TAIL_FRACTION = 0.2


class Notion(str, Enum):
    UNIFORM_NONNEG = "UniformNonneg"
    INDIVIDUAL_NONNEG = "IndividualNonneg"
    WEAK_NONNEG = "WeakNonneg"
    UNIFORM_POS = "UniformPos"
    INDIVIDUAL_POS = "IndividualPos"
    WEAK_POS = "WeakPos"

    @property
    def kind(self):
        return self.value.replace("Nonneg", "").replace("Pos", "").lower()

    @property
    def strict(self):
        return self.value.endswith("Pos")

    @property
    def cli_name(self):
        return f"{self.kind}-{'pos' if self.strict else 'nonneg'}"

    @classmethod
    def parse(cls, name):
        if isinstance(name, cls):
            return name
        key = str(name).replace("-", "").replace("_", "").lower()
        for n in cls:
            if n.value.lower() == key:
                return n
        raise ValueError(f"unknown notion {name!r}; expected one of "
                         f"{[n.cli_name for n in cls]}")


class CheckVerdict(str, Enum):
    HOLDS = "Holds"
    VIOLATED = "Violated"
    INCONCLUSIVE = "Inconclusive"


def _vec(v):
    return None if v is None else [float(a) for a in np.ravel(v)]


def _num(v):
    if v is None:
        return None
    v = float(v)
    return v if np.isfinite(v) else None


@dataclass(frozen=True, eq=False)
class PerronData:
    spectral_bound: float
    eigvec: np.ndarray
    dual_eigvec: np.ndarray
    eigvec_margin: float
    dual_margin: float
    pole_order: int
    residue: np.ndarray
    residue_nonneg: Optional[bool] = None

    def to_dict(self):
        return {
            "spectral_bound": float(self.spectral_bound),
            "eigvec": _vec(self.eigvec),
            "dual_eigvec": _vec(self.dual_eigvec),
            "eigvec_margin": float(self.eigvec_margin),
            "dual_margin": float(self.dual_margin),
            "pole_order": int(self.pole_order),
            "residue": [_vec(r) for r in self.residue],
            "residue_nonneg": self.residue_nonneg,
        }


@dataclass(frozen=True, eq=False)
class PositivityCertificate:
    spectral_bound: float
    dominance_gap: float
    geometric_mult: int
    algebraic_mult: int
    eigvec_interior_margin: float
    dual_eigvec_interior_margin: float
    positive: bool
    reasons: tuple = ()
    eigvec: Optional[np.ndarray] = None
    dual_eigvec: Optional[np.ndarray] = None

    @property
    def verdict(self):
        return "Positive" if self.positive else "NotPositive"

    @property
    def reason(self):
        return self.reasons[0] if self.reasons else None

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "reason": self.reason,
            "reasons": list(self.reasons),
            "spectral_bound": float(self.spectral_bound),
            "dominance_gap": _num(self.dominance_gap),
            "geometric_mult": int(self.geometric_mult),
            "algebraic_mult": int(self.algebraic_mult),
            "eigvec_interior_margin": _num(self.eigvec_interior_margin),
            "dual_eigvec_interior_margin": _num(self.dual_eigvec_interior_margin),
            "eigvec": _vec(self.eigvec),
            "dual_eigvec": _vec(self.dual_eigvec),
        }


@dataclass(eq=False)
class CheckReport:
    """Outcome of :func:`check`.

    ``witnesses`` are dicts with at least ``t`` and ``margin``, plus the
    vectors needed to re-evaluate the violation (``x``, and ``xp`` for weak
    notions).  ``t0_per_sample`` lists the stabilisation time of each
    sampled trajectory (``None`` where it did not stabilise on the grid).
    """

    notion: Notion
    verdict: CheckVerdict
    t0_estimate: Optional[float]
    witnesses: list
    t_max: float
    step: float
    samples_used: int
    t0_per_sample: Optional[list] = None
    diagnostics: list = field(default_factory=list)
    flags: list = field(default_factory=list)

    def to_dict(self):
        return {
            "notion": self.notion.value,
            "verdict": self.verdict.value,
            "t0_estimate": _num(self.t0_estimate),
            "witnesses": [{k: (_vec(v) if isinstance(v, np.ndarray) else v)
                           for k, v in w.items()} for w in self.witnesses],
            "grid": {"t_max": float(self.t_max), "step": float(self.step)},
            "samples_used": int(self.samples_used),
            "t0_per_sample": None if self.t0_per_sample is None
            else [_num(t) for t in self.t0_per_sample],
            "diagnostics": list(self.diagnostics),
            "flags": list(self.flags),
        }


# ---------------------------------------------------------------------------
# spectral classification


def _check_pair(A, cone):
    A = as_matrix(A)
    if not isinstance(cone, ConeSpec):
        raise TypeError(f"not a cone spec: {cone!r}")
    if A.shape[0] != cone.dim:
        raise ValueError(f"A has shape {A.shape} but the cone lives in dimension {cone.dim}")
    return A


def _kernel_cone_vector(B, cone):
    """A unit vector in span(B) as deep inside ``cone`` as can be found.

    One column: pick the sign with the larger margin.  Several columns:
    polyhedral cones maximise the smallest facet slack by linear
    programming, quadratic cones maximise ``-v^T Q v`` on the unit sphere of
    the span and orient by the apex.
    """
    if B.shape[1] == 1:
        v = B[:, 0] / np.linalg.norm(B[:, 0])
        return -v if member(cone, -v).margin > member(cone, v).margin else v
    flat = flatten(cone)
    if isinstance(flat, Polyhedral):
        H = flat.facets @ B
        g = B.shape[1]
        # maximise s subject to H c >= s, -1 <= c <= 1
        c = np.zeros(g + 1)
        c[-1] = -1.0
        A_ub = np.hstack([-H, np.ones((H.shape[0], 1))])
        res = scipy.optimize.linprog(c, A_ub=A_ub, b_ub=np.zeros(H.shape[0]),
                                     bounds=[(-1, 1)] * g + [(None, None)], method="highs")
        v = B @ res.x[:g] if res.status == 0 and np.any(res.x[:g]) else B[:, 0]
    else:
        W = -B.T @ flat.Qn @ B
        _, V = np.linalg.eigh(0.5 * (W + W.T))
        v = B @ V[:, -1]
        if v @ flat.apex < 0:
            v = -v
    return v / np.linalg.norm(v)


def _dominant_cluster(spec):
    s = spectral_bound(spec)
    ev, dist = spec.find(complex(s, 0.0))
    real = dist <= spec.tol and ev.value.imag == 0.0
    if not real:
        ev = spec.eigenvalues[0]
    others = [e.value.real for e in spec.eigenvalues if e is not ev]
    gap = s - max(others) if others else np.inf
    return s, ev, real, gap


def classify_eventual_positivity(A, cone, tol=1e-9, spectral_tol=None):
    """Spectral test for eventual positivity.

    Positive iff the spectral bound is a real eigenvalue that is dominant
    (gap above ``tol * max(1, |A|)``), algebraically and geometrically
    simple, with eigenvector in the interior of the cone and dual
    eigenvector in the interior of the dual cone.  Then all three
    positivity notions hold; otherwise none does.  Eigenvalues are
    clustered at ``spectral_tol`` (default ``1e-8 max(|A|, 1)``).
    """
    A = _check_pair(A, cone)
    if isinstance(cone, Operator):
        raise ValueError("operator cones have no dual spec; classify on the base instead")
    n = A.shape[0]
    spec = spectrum(A, spectral_tol)
    s, ev, real, gap = _dominant_cluster(spec)
    reasons = []
    v = w = None
    mv = mw = -np.inf
    if not real:
        reasons.append("spectral bound not an eigenvalue")
    else:
        lam = ev.value.real
        v = _kernel_cone_vector(_null_vectors(lam * np.eye(n) - A, ev.geometric).T, cone)
        w = _kernel_cone_vector(_null_vectors(lam * np.eye(n) - A.T, ev.geometric).T, dual(cone))
        mv = member(cone, v, tol).margin
        mw = member(dual(cone), w, tol).margin
    if gap <= tol * max(1.0, np.linalg.norm(A, 2)):
        reasons.append("marginal dominance")
    if ev.geometric != 1:
        reasons.append("geometric multiplicity > 1")
    if ev.algebraic != 1:
        reasons.append("algebraic multiplicity > 1")
    if real and mv <= tol:
        reasons.append("eigenvector not interior")
    if real and mw <= tol:
        reasons.append("dual eigenvector not interior")
    return PositivityCertificate(
        spectral_bound=s, dominance_gap=gap, geometric_mult=ev.geometric,
        algebraic_mult=ev.algebraic, eigvec_interior_margin=mv,
        dual_eigvec_interior_margin=mw, positive=not reasons, reasons=tuple(reasons),
        eigvec=v, dual_eigvec=w)


def perron_data(A, cone, tol=1e-9, spectral_tol=None, seed=0):
    """Eigenvector data at the spectral bound, with auditable cone margins.

    The eigenvector and dual eigenvector are guaranteed to lie in the cone
    and its dual only when the semigroup is weakly eventually nonnegative;
    the margins let the caller see whether that happened.
    ``residue_nonneg`` records whether the residue ``Q`` survived a
    sampling probe of ``Q (cone) in cone``.
    """
    A = _check_pair(A, cone)
    if isinstance(cone, Operator):
        raise ValueError("operator cones have no dual spec; use the base cone")
    n = A.shape[0]
    spec = spectrum(A, spectral_tol)
    s, ev, real, _ = _dominant_cluster(spec)
    if not real:
        raise SpectralBoundError(s, ev.value)
    lam = ev.value.real
    dcone = dual(cone)
    v = _kernel_cone_vector(_null_vectors(lam * np.eye(n) - A, ev.geometric).T, cone)
    w = _kernel_cone_vector(_null_vectors(lam * np.eye(n) - A.T, ev.geometric).T, dcone)
    k, Q = residue_at_spectral_bound(A, spec.tol)
    q_ok = None
    if np.any(Q):
        q_ok = op_cone_member(Q, cone, Sampling(count=400, seed=seed), tol).verdict \
            is not Verdict.OUTSIDE
    return PerronData(spectral_bound=lam, eigvec=v, dual_eigvec=w,
                      eigvec_margin=member(cone, v, tol).margin,
                      dual_margin=member(dcone, w, tol).margin,
                      pole_order=k, residue=Q, residue_nonneg=q_ok)


# ---------------------------------------------------------------------------
# grid checks


def _grid(t_max, step):
    count = int(np.floor(t_max / step + 1e-9))
    return np.round(step * np.arange(count + 1), 12)


def _runs(fail):
    """(start, stop) index pairs of maximal runs of True."""
    idx = np.flatnonzero(fail)
    if idx.size == 0:
        return []
    cuts = np.flatnonzero(np.diff(idx) > 1)
    starts = np.concatenate([[idx[0]], idx[cuts + 1]])
    stops = np.concatenate([idx[cuts], [idx[-1]]]) + 1
    return list(zip(starts.tolist(), stops.tolist()))


def _classify_trajectory(fail):
    """Verdict and stabilisation index for one trajectory of pass/fail flags.

    Holds when no failure occurs in the final ``TAIL_FRACTION`` of the grid
    (``t0`` is the first grid point after the last failure).  Violated when
    the last point fails, or failures recur (two separate runs) inside that
    final window.  Anything else is inconclusive.
    """
    N = fail.size
    idx = np.flatnonzero(fail)
    if idx.size == 0:
        return CheckVerdict.HOLDS, 0
    last = int(idx[-1])
    if N - 1 - last >= TAIL_FRACTION * N:
        return CheckVerdict.HOLDS, last + 1
    if fail[-1]:
        return CheckVerdict.VIOLATED, None
    window = int(np.ceil((1 - TAIL_FRACTION) * N))
    if len(_runs(fail[window:])) >= 2:
        return CheckVerdict.VIOLATED, None
    return CheckVerdict.INCONCLUSIVE, None


def _semigroup_grid(A, grid):
    """``e^{t(A - s)}`` on the grid, and a diagnostic if it overflowed."""
    s = spectral_bound(spectrum(A))
    n = A.shape[0]
    E = scipy.linalg.expm(grid[:, None, None] * (A - s * np.eye(n)))
    norms = np.linalg.norm(E.reshape(E.shape[0], -1), axis=1)
    bad = ~np.isfinite(norms) | (norms > OVERFLOW)
    if np.any(bad):
        t_bad = float(grid[int(np.argmax(bad))])
        return E, s, (f"semigroup overflow: |e^(t(A - s))| exceeds {OVERFLOW:.0e} "
                      f"at t = {t_bad:g}")
    return E, s, None


def _fails(margins, strict, tol):
    return margins <= tol if strict else margins < -tol


def check(notion, A, cone, t_max=100.0, step=0.05, samples=200, seed=0, tol=1e-9):
    """Grid-based semi-decision of an eventual nonnegativity/positivity notion.

    See the module docstring for the notions.  The grid is
    ``{0, step, 2 step, ..., t_max}``; a trajectory's verdict follows the
    rule in ``_classify_trajectory``.  Uniform notions use the exact
    operator-cone oracle at every grid point.  Individual notions sample
    ``samples`` cone points, half of them on the boundary.  Weak notions
    sample pairs from the cone and its dual, and also decide the eventual
    sign of ``<x', e^{tA} x>`` from its spectral expansion when the leading
    term belongs to a single real eigenvalue.
    """
    notion = Notion.parse(notion)
    A = _check_pair(A, cone)
    t_max, step = float(t_max), float(step)
    if not (t_max > 0 and np.isfinite(t_max)):
        raise ValueError("t_max must be positive")
    if not (step > 0 and np.isfinite(step)):
        raise ValueError("step must be positive")
    samples = int(samples)
    if samples < 1:
        raise ValueError("samples must be >= 1")
    grid = _grid(t_max, step)
    base = dict(notion=notion, t_max=t_max, step=step)
    E, s, overflow = _semigroup_grid(A, grid)
    if overflow:
        return CheckReport(verdict=CheckVerdict.INCONCLUSIVE, t0_estimate=None,
                           witnesses=[], samples_used=0, diagnostics=[overflow], **base)
    if notion.kind == "uniform":
        return _check_uniform(notion, A, cone, grid, E, tol, base)
    if notion.kind == "individual":
        return _check_individual(notion, cone, grid, E, samples, seed, tol, base)
    return _check_weak(notion, A, cone, grid, E, s, samples, seed, tol, base)


def _check_uniform(notion, A, cone, grid, E, tol, base):
    if isinstance(cone, Operator):
        raise ValueError("uniform notions on operator cones are not supported")
    margins = op_cone_margins(E, cone)
    fail = _fails(margins, notion.strict, tol)
    verdict, i0 = _classify_trajectory(fail)
    witnesses = []
    for a, b in _runs(fail):
        i = a + int(np.argmin(margins[a:b]))
        t = float(grid[i])
        x = op_cone_witness(E[i], cone, tol)
        y = E[i] @ x
        nrm = np.linalg.norm(y)
        witnesses.append({
            "t": t,
            "margin": float(margins[i]),
            "x": x,
            "image": y / nrm if nrm > 0 else y,
            "image_margin": float(member(cone, y, tol).margin),
        })
    t0 = float(grid[i0]) if verdict is CheckVerdict.HOLDS else None
    return CheckReport(verdict=verdict, t0_estimate=t0, witnesses=witnesses,
                       samples_used=0, **base)


def _cone_samples(cone, samples, seed, dual_side=False):
    half = samples // 2
    draw = sample_dual if dual_side else sample
    rng = np.random.default_rng(seed)
    seeds = rng.integers(2**31, size=2)
    out = []
    if half:
        out += draw(cone, half, int(seeds[0]), "boundary")
    out += draw(cone, samples - half, int(seeds[1]), "cone")
    return np.array(out)


def _merge(notion, verdicts, t0s, witnesses, grid, samples, base, flags=(), diagnostics=()):
    if any(v is CheckVerdict.VIOLATED for v in verdicts):
        verdict, t0 = CheckVerdict.VIOLATED, None
    elif all(v is CheckVerdict.HOLDS for v in verdicts):
        verdict = CheckVerdict.HOLDS
        known = [t for t in t0s if t is not None]
        t0 = max(known) if len(known) == len(t0s) else None
    else:
        verdict, t0 = CheckVerdict.INCONCLUSIVE, None
    return CheckReport(verdict=verdict, t0_estimate=t0, witnesses=witnesses,
                       samples_used=samples, t0_per_sample=list(t0s),
                       flags=sorted(set(flags)), diagnostics=list(diagnostics), **base)


def _check_individual(notion, cone, grid, E, samples, seed, tol, base):
    X = _cone_samples(cone, samples, seed)
    Y = np.einsum("tij,sj->tsi", E, X)
    T, S, n = Y.shape
    margins = batch_margins(cone, Y.reshape(T * S, n)).reshape(T, S)
    fail = _fails(margins, notion.strict, tol)
    verdicts, t0s, witnesses = [], [], []
    for j in range(S):
        v, i0 = _classify_trajectory(fail[:, j])
        verdicts.append(v)
        t0s.append(float(grid[i0]) if v is CheckVerdict.HOLDS else None)
        if v is CheckVerdict.VIOLATED:
            a, b = _runs(fail[:, j])[-1]
            i = a + int(np.argmin(margins[a:b, j]))
            witnesses.append({"t": float(grid[i]), "margin": float(margins[i, j]),
                              "x": X[j], "sample": j})
    return _merge(notion, verdicts, t0s, witnesses, grid, S, base)


def _spectral_parts(A, spec):
    """Per eigenvalue cluster: ``(lam, [N^j P / j!])`` with complex arrays."""
    parts = []
    radius = spec.tol * A.shape[0]
    for ev in spec.eigenvalues:
        P, N = spectral_projection(A, ev.value, radius)
        terms = [P]
        for j in range(1, ev.algebraic):
            terms.append(N @ terms[-1] * (1.0 / j))
        parts.append((ev.value, terms))
    return parts


def _leading_term(parts, x, xp, spec_tol):
    """Leading term of ``<xp, e^{tA} x>`` as ``t -> inf``.

    Returns ``("zero", 0)``, ``("real", sign)`` or ``("oscillatory", 0)``.
    """
    scale = np.linalg.norm(x) * np.linalg.norm(xp)
    sig = []
    for lam, terms in parts:
        for j, Tj in enumerate(terms):
            c = xp @ Tj @ x
            if abs(c) > 1e-9 * scale * max(1.0, np.linalg.norm(Tj, 2)):
                sig.append((lam, j, c))
    if not sig:
        return "zero", 0
    rho = max(lam.real for lam, _, _ in sig)
    top = [t for t in sig if t[0].real >= rho - spec_tol]
    jmax = max(j for _, j, _ in top)
    lead = [t for t in top if t[1] == jmax]
    if len(lead) == 1 and lead[0][0].imag == 0.0:
        return "real", int(np.sign(lead[0][2].real))
    return "oscillatory", 0


def _weak_value(A, s, x, xp, t):
    y = scipy.linalg.expm(t * (A - s * np.eye(A.shape[0]))) @ x
    ny = np.linalg.norm(y)
    return 0.0 if ny == 0 else float(xp @ y / (np.linalg.norm(xp) * ny))


def _check_weak(notion, A, cone, grid, E, s, samples, seed, tol, base):
    X = _cone_samples(cone, samples, seed)
    XP = _cone_samples(cone, samples, seed + 1, dual_side=True)
    Y = np.einsum("tij,sj->tsi", E, X)
    ny = np.linalg.norm(Y, axis=2)
    raw = np.einsum("si,tsi->ts", XP, Y)
    denom = np.linalg.norm(XP, axis=1)[None, :] * ny
    f = np.where(denom > 0, raw / np.where(denom > 0, denom, 1.0), 0.0)
    fail = _fails(f, notion.strict, tol)
    spec = spectrum(A)
    parts = _spectral_parts(A, spec)
    verdicts, t0s, witnesses, flags = [], [], [], []
    for j in range(X.shape[0]):
        v, i0 = _classify_trajectory(fail[:, j])
        kind, sign = _leading_term(parts, X[j], XP[j], spec.tol)
        wit = None
        if kind == "real" or kind == "zero":
            flags.append("certified")
            holds = sign > 0 or (kind == "zero" and not notion.strict)
            if holds:
                t0 = float(grid[i0]) if v is CheckVerdict.HOLDS else None
                v = CheckVerdict.HOLDS
            else:
                v, t0 = CheckVerdict.VIOLATED, None
                wit = _weak_violation(A, s, X[j], XP[j], grid, f[:, j], fail[:, j],
                                      notion.strict, tol)
        else:
            flags.append("oscillatory")
            t0 = float(grid[i0]) if v is CheckVerdict.HOLDS else None
            if v is CheckVerdict.HOLDS and notion.strict:
                # a strictly positive oscillating pairing may touch zero between grid points
                v, t0 = CheckVerdict.INCONCLUSIVE, None
            if v is CheckVerdict.VIOLATED:
                a, b = _runs(fail[:, j])[-1]
                i = a + int(np.argmin(f[a:b, j]))
                wit = {"t": float(grid[i]), "margin": float(f[i, j])}
        if wit is not None:
            wit.update({"x": X[j], "xp": XP[j], "sample": j})
            witnesses.append(wit)
        verdicts.append(v)
        t0s.append(t0)
    return _merge(notion, verdicts, t0s, witnesses, grid, X.shape[0], base, flags)


def _weak_violation(A, s, x, xp, grid, fj, failj, strict, tol):
    """Where the pairing is negative (not positive): on the grid or beyond it."""
    if failj[-1]:
        runs = _runs(failj)
        a, b = runs[-1]
        i = a + int(np.argmin(fj[a:b]))
        return {"t": float(grid[i]), "margin": float(fj[i])}
    t = float(grid[-1])
    for _ in range(60):
        t *= 2.0
        val = _weak_value(A, s, x, xp, t)
        if (val <= tol) if strict else (val < -tol):
            return {"t": t, "margin": val}
    return {"t": t, "margin": _weak_value(A, s, x, xp, t)}


def dualize_check(notion, A, cone, **params):
    """Run :func:`check` on ``(A, cone)`` and on ``(A^T, dual(cone))``.

    Uniform and weak notions are invariant under this dualisation; the
    individual ones are not, so they are rejected.  The two reports are
    returned for the caller to compare.
    """
    notion = Notion.parse(notion)
    if notion.kind == "individual":
        raise ValueError("individual notions do not transfer to the dual semigroup")
    if isinstance(cone, Operator):
        raise ValueError("operator cones have no dual spec")
    A = _check_pair(A, cone)
    return check(notion, A, cone, **params), check(notion, A.T, dual(cone), **params)
