"""Dense linear-algebra helpers shared by the solver.

Everything here is a thin, deterministic wrapper around LAPACK (through
scipy) with the conventions the rest of the package relies on: column
pivoted QR for least squares, balanced eigenvalue problems for roots, and
root lists returned in a fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

EPS = np.finfo(float).eps


@dataclass(frozen=True)
class LsqResult:
    x: np.ndarray
    residual_norm: float
    rank: int
    cond_estimate: float


def lsq_colpivot(A, b, rtol: float | None = None) -> LsqResult:
    """Least-squares solve of ``A x ~ b`` by QR with column pivoting.

    Columns whose pivot falls below ``rtol * |R[0, 0]|`` are treated as
    dependent and receive a zero coefficient.  The default ``rtol`` is
    ``eps * max(rows, cols)``.

    Parameters
    ----------
    A : (m, n) array, m >= n
    b : (m,) or (m, k) array

    Returns
    -------
    LsqResult
        ``cond_estimate`` is the ratio of the largest to the smallest
        retained pivot, a cheap lower bound on the 2-norm condition number.
    """
    A = np.asarray(A)
    b = np.asarray(b)
    if A.ndim != 2 or A.size == 0:
        raise ValueError("empty matrix")
    m, n = A.shape
    if m < n:
        raise ValueError(f"underdetermined system ({m} rows < {n} cols)")
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(b)):
        raise ValueError("non-finite entries in least-squares system")
    if rtol is None:
        rtol = EPS * max(m, n)
    Q, R, piv = sla.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag[0] == 0.0:
        x = np.zeros((n,) + b.shape[1:], dtype=np.result_type(A, b))
        return LsqResult(x, float(np.linalg.norm(b)), 0, np.inf)
    rank = int(np.count_nonzero(diag > rtol * diag[0]))
    qtb = Q[:, :rank].conj().T @ b
    y = sla.solve_triangular(R[:rank, :rank], qtb)
    x = np.zeros((n,) + b.shape[1:], dtype=np.result_type(A, b, float))
    x[piv[:rank]] = y
    res = float(np.linalg.norm(A @ x - b))
    cond = float(diag[0] / diag[rank - 1])
    return LsqResult(x, res, rank, cond)


def sort_roots(r) -> np.ndarray:
    r = np.asarray(r, dtype=complex)
    return r[np.lexsort((r.imag, r.real))]


def poly_roots(coeffs) -> np.ndarray:
    """Roots of ``c[0] + c[1] s + ... + c[n] s**n`` (ascending coefficients).

    Computed as eigenvalues of the balanced companion matrix and returned
    sorted by real part, then imaginary part.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    if c.size == 0:
        raise ValueError("all-zero polynomial")
    if c.size == 1:
        return np.zeros(0, dtype=complex)
    n = c.size - 1
    C = np.zeros((n, n), dtype=complex)
    C[1:, :-1] = np.eye(n - 1)
    C[:, -1] = -c[:-1] / c[-1]
    return sort_roots(sla.eigvals(C, check_finite=True))


def hessenberg_eigs(H, rank_one_update=None) -> np.ndarray:
    """Eigenvalues of a (possibly rank-one modified) Hessenberg matrix.

    ``H`` may be square (N x N) or the (N+1) x N matrix produced by an
    Arnoldi iteration, in which case its leading N x N block is used.  With
    ``rank_one_update = (u, v)`` the matrix is ``H[:N, :N] - outer(u, v)``;
    the generalized companion matrix of a polynomial expressed in an
    Arnoldi basis is obtained with ``u = H[N, N-1] * c`` and ``v = e_N``.
    """
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] < H.shape[1] or H.shape[0] > H.shape[1] + 1:
        raise ValueError(f"bad Hessenberg shape {H.shape}")
    N = H.shape[1]
    C = np.array(H[:N, :N], dtype=complex)
    if rank_one_update is not None:
        u, v = (np.asarray(a, dtype=complex) for a in rank_one_update)
        if u.shape != (N,) or v.shape != (N,):
            raise ValueError("dimension mismatch in rank-one update")
        C = C - np.outer(u, v)
    return sort_roots(sla.eigvals(C))


def pair_conjugates(z, tol: float = 1e-9, scale: float = 1.0) -> np.ndarray:
    """Snap an approximately conjugate-closed set to an exactly closed one.

    Points within ``tol * scale`` of the real axis become real; other points
    are matched to their nearest conjugate partner and replaced by the
    symmetric average.  Unmatched points are left alone.
    """
    z = np.array(z, dtype=complex)
    thr = tol * max(scale, 1.0)
    out = z.copy()
    used = np.zeros(z.size, dtype=bool)
    for i in np.argsort(-np.abs(z.imag)):
        if used[i]:
            continue
        if abs(z[i].imag) <= thr:
            out[i] = z[i].real
            used[i] = True
            continue
        cand = np.flatnonzero(~used)
        cand = cand[cand != i]
        if cand.size == 0:
            continue
        d = np.abs(z[cand] - np.conj(z[i]))
        j = cand[np.argmin(d)]
        if d.min() <= thr * max(1.0, abs(z[i])):
            m = 0.5 * (z[i] + np.conj(z[j]))
            out[i], out[j] = m, np.conj(m)
            used[i] = used[j] = True
    return out
