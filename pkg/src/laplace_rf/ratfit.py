"""Pole relocation by linearized rational least squares.

Both fitters minimize ``|| sqrt(lambda) (P - Q W) / Q-hat ||`` over boundary
testing points, with ``Q-hat`` the product of ``(z'_n - z)`` over the current
poles.  Vector fitting (VF) expands ``P`` and ``Q`` in the partial-fraction
basis of the current poles; iterated rational fitting (IRF) uses two
Arnoldi-orthonormalized polynomial bases and extracts the zeros of ``Q``
from a generalized companion matrix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .basis import PoleSet
from .geometry import Boundary, DomainSide, classify
from .numerics import EPS, hessenberg_eigs, lsq_colpivot

log = logging.getLogger(__name__)

SWITCH_RCOND = np.sqrt(EPS)


@dataclass(frozen=True)
class FitInput:
    points: np.ndarray
    weights: np.ndarray
    samples: np.ndarray
    poles: np.ndarray
    order: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=complex))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=complex))
        object.__setattr__(self, "poles", np.atleast_1d(np.asarray(self.poles, dtype=complex)))
        if self.order is None:
            object.__setattr__(self, "order", int(self.poles.size))
        if np.any(self.weights <= 0):
            raise ValueError("weights must be positive")
        if self.points.size < 2 * self.order + 2:
            raise ValueError(f"too few testing points ({self.points.size}) for order {self.order}")

    @classmethod
    def from_rule(cls, rule, samples, poles, order=None) -> "FitInput":
        return cls(rule.points, rule.weights, samples, poles, order)


@dataclass(frozen=True)
class FitResult:
    new_poles: np.ndarray
    method: str
    cond_estimate: float
    residual_norm: float
    n_dropped: int = 0
    use_irf: bool = False
    stalled: bool = False
    residues: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    note: str = ""


def _scaled_weights(inp: FitInput) -> np.ndarray:
    """``sqrt(lambda) / |Q-hat|`` normalized, with the phase of ``1/Q-hat``.

    ``Q-hat`` is accumulated in log space since it under/overflows for
    many poles.
    """
    z = inp.points
    if inp.poles.size == 0:
        d = np.sqrt(inp.weights).astype(complex)
    else:
        diff = inp.poles[None, :] - z[:, None]
        logmag = -np.log(np.abs(diff)).sum(axis=1)
        phase = -np.angle(diff).sum(axis=1)
        logmag += 0.5 * np.log(inp.weights)
        d = np.exp(logmag - logmag.max() + 1j * phase)
    return d / np.linalg.norm(d)


def _is_constant(w: np.ndarray, weights: np.ndarray) -> bool:
    mean = np.sum(weights * w) / np.sum(weights)
    dev = np.sqrt(np.sum(weights * np.abs(w - mean) ** 2) / np.sum(weights))
    return dev <= 1e-13 * max(abs(mean), 1e-300) or np.all(w == 0)


def vf_step(inp: FitInput, switch_rcond: float = SWITCH_RCOND) -> FitResult:
    """One vector-fitting step in the partial-fraction (Lagrange) basis.

    The linear problem is ``[1, phi_n, -W phi_n] [p0; p; q] ~ W`` with
    ``phi_n = 1/(z'_n - z)`` and rows scaled by ``sqrt(lambda)``; the new
    poles are the zeros of ``1 + sum q_n phi_n``, i.e. the eigenvalues of
    ``diag(z') + 1 q^T``.
    """
    zp = inp.poles
    N = zp.size
    if N == 0 or _is_constant(inp.samples, inp.weights):
        return FitResult(np.zeros(0, dtype=complex), "VF", 1.0, 0.0, note="constant data")
    z = inp.points
    sw = np.sqrt(inp.weights)
    phi = 1.0 / (zp[None, :] - z[:, None])
    W = inp.samples
    A = np.hstack([np.ones((z.size, 1)), phi, -W[:, None] * phi]) * sw[:, None]
    b = sw * W
    scale = np.linalg.norm(A, axis=0)
    scale[scale == 0] = 1.0
    sol = lsq_colpivot(A / scale, b)
    rcond = 1.0 / sol.cond_estimate if sol.cond_estimate > 0 else 0.0
    if rcond < switch_rcond or sol.rank < A.shape[1]:
        return FitResult(zp.copy(), "VF", sol.cond_estimate, sol.residual_norm, use_irf=True,
                         note="ill-conditioned partial-fraction basis")
    x = sol.x / scale
    q = x[1 + N:]
    C = np.diag(zp) + np.outer(np.ones(N), q)
    new = np.linalg.eigvals(C)
    return FitResult(new, "VF", sol.cond_estimate, sol.residual_norm)


def arnoldi(z: np.ndarray, d: np.ndarray, n: int, breakdown_tol: float = 1e-13):
    """Orthonormal Krylov basis of ``diag(z)`` with start vector ``d``.

    Classical Gram-Schmidt with one reorthogonalization.  Returns ``V``
    (``K x (m+1)``) and the Hessenberg ``H`` (``(m+1) x m``) with
    ``diag(z) V[:, :m] = V H``; ``m < n`` signals breakdown.
    """
    K = z.size
    V = np.zeros((K, n + 1), dtype=complex)
    H = np.zeros((n + 1, n), dtype=complex)
    V[:, 0] = d / np.linalg.norm(d)
    for k in range(n):
        w = z * V[:, k]
        h = V[:, :k + 1].conj().T @ w
        w = w - V[:, :k + 1] @ h
        h2 = V[:, :k + 1].conj().T @ w
        w = w - V[:, :k + 1] @ h2
        H[:k + 1, k] = h + h2
        nrm = np.linalg.norm(w)
        H[k + 1, k] = nrm
        if nrm < breakdown_tol * max(1.0, np.abs(H[:k + 1, k]).max()):
            return V[:, :k + 1], H[:k + 1, :k]
        V[:, k + 1] = w / nrm
    return V, H


def _eval_arnoldi_poly(H: np.ndarray, coef: np.ndarray, x: np.ndarray, q0: float = 1.0):
    """Evaluate ``sum coef_k q_k(x)`` and its derivative via the Hessenberg recurrence."""
    m = coef.size
    x = np.asarray(x, dtype=complex)
    Q = np.zeros((m, x.size), dtype=complex)
    D = np.zeros((m, x.size), dtype=complex)
    Q[0] = q0
    # far-away roots overflow; their residues only serve as a ranking key
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        for k in range(1, m):
            t = x * Q[k - 1] - H[:k, k - 1] @ Q[:k]
            dt = Q[k - 1] + x * D[k - 1] - H[:k, k - 1] @ D[:k]
            Q[k] = t / H[k, k - 1]
            D[k] = dt / H[k, k - 1]
        return coef @ Q, coef @ D


def irf_step(inp: FitInput) -> FitResult:
    """One IRF step with orthonormal bases for ``P`` and ``Q``.

    Node coordinates are centered and scaled before the Arnoldi iterations;
    the zeros of ``Q`` are mapped back afterwards.
    """
    N = int(inp.order)
    if N == 0 or _is_constant(inp.samples, inp.weights):
        return FitResult(np.zeros(0, dtype=complex), "IRF", 1.0, 0.0, note="constant data")
    z = inp.points
    center = np.mean(z)
    scale = np.max(np.abs(z - center))
    zc = (z - center) / scale
    d = _scaled_weights(inp)
    P, HP = arnoldi(zc, d, N)
    dq = d * inp.samples
    Q, HQ = arnoldi(zc, dq, N)
    n = min(P.shape[1], Q.shape[1]) - 1
    note = ""
    if n < N:
        note = f"Arnoldi breakdown, order reduced to {n}"
        log.debug(note)
        P, HP = P[:, :n + 1], HP[:n + 1, :n]
        Q, HQ = Q[:, :n + 1], HQ[:n + 1, :n]
    if n == 0:
        return FitResult(np.zeros(0, dtype=complex), "IRF", 1.0, 0.0, note=note or "degenerate")
    A = np.hstack([P, -Q[:, :n]])
    sol = lsq_colpivot(A, Q[:, n])
    cP, cQ = sol.x[:n + 1], sol.x[n + 1:]
    roots = hessenberg_eigs(HQ[:n + 1, :n], (HQ[n, n - 1] * cQ, np.eye(n)[n - 1]))
    # residues of P/Q at the roots, for ranking
    qcoef = np.concatenate([cQ, [1.0]])
    pv, _ = _eval_arnoldi_poly(HP, cP, roots, 1.0 / np.linalg.norm(d))
    _, qd = _eval_arnoldi_poly(HQ, qcoef, roots, 1.0 / np.linalg.norm(dq))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        res = -pv / qd * scale
    return FitResult(center + scale * roots, "IRF", sol.cond_estimate, sol.residual_norm,
                     residues=res, note=note)


def relocate(inp: FitInput, switch_rcond: float = SWITCH_RCOND) -> FitResult:
    """VF step, falling back to IRF when VF is ill conditioned or fails."""
    try:
        r = vf_step(inp, switch_rcond)
        if not r.use_irf and np.all(np.isfinite(r.new_poles)):
            return r
    except (ValueError, np.linalg.LinAlgError) as exc:
        log.debug("VF failed: %s", exc)
    try:
        r = irf_step(inp)
        if np.all(np.isfinite(r.new_poles)):
            return r
    except (ValueError, np.linalg.LinAlgError) as exc:
        log.debug("IRF failed: %s", exc)
    return FitResult(inp.poles.copy(), "none", np.inf, np.nan, stalled=True, note="both fitters failed")


def fallback_poles(b: Boundary, n: int, exterior: bool) -> np.ndarray:
    """Deterministic placements used when a fit yields too few zeros.

    Interior problems: a circle of radius ``2 * diameter`` about the
    centroid.  Exterior problems: points halfway between each contour's
    centroid and its boundary, distributed round-robin over contours.
    """
    if n <= 0:
        return np.zeros(0, dtype=complex)
    if not exterior:
        c = b.centroid(0) if b.n_contours == 1 else np.mean(b.dense(2000))
        R = 2.0 * b.diameter
        return c + R * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    out = []
    J = b.n_contours
    per = [n // J + (1 if j < n % J else 0) for j in range(J)]
    for j in range(J):
        if per[j] == 0:
            continue
        c = b.centroid(j)
        pts = b.dense(4096, contour=j)
        idx = (np.arange(per[j]) * pts.size) // per[j]
        out.extend(c + 0.5 * (pts[idx] - c) if per[j] > 1 else [c])
    return np.array(out, dtype=complex)


def initial_poles(b: Boundary, rule, samples, N: int, exterior: bool = False) -> tuple[PoleSet, dict]:
    """Initial poles from a degree-``2N`` fit to the (real) boundary data.

    ``rule`` must be pole free with enough nodes for order ``2N``.  Zeros in
    the usable region are taken first, by descending residue magnitude,
    then other zeros; missing ones come from :func:`fallback_poles`.
    """
    info = {"fallback": 0}
    samples = np.asarray(samples, dtype=complex)
    cand = np.zeros(0, dtype=complex)
    res = np.zeros(0)
    if N > 0 and np.any(samples != 0):
        try:
            fit = irf_step(FitInput(rule.points, rule.weights, samples, np.zeros(0), order=2 * N))
            cand, res = fit.new_poles, np.abs(fit.residues)
        except (ValueError, np.linalg.LinAlgError) as exc:
            log.debug("initial fit failed: %s", exc)
    ok = np.isfinite(cand) & (np.abs(cand - np.mean(rule.points)) < 1e6 * b.diameter)
    cand, res = cand[ok], np.where(np.isfinite(res[ok]), res[ok], 0.0)
    if cand.size:
        sides, _ = classify(b, cand)
        want = DomainSide.INSIDE if exterior else DomainSide.OUTSIDE
        usable = np.array([s == want for s in sides])
        onb = np.array([s == DomainSide.ON_BOUNDARY for s in sides])
        order = np.lexsort((-res, ~usable))
        order = order[~onb[order]]
        chosen = cand[order[:N]]
    else:
        chosen = cand
    if chosen.size < N:
        info["fallback"] = N - chosen.size
        chosen = np.concatenate([chosen, fallback_poles(b, N - chosen.size, exterior)])
    return PoleSet.classify(b, chosen, exterior), info
