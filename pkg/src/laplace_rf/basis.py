"""Dipole, constant and logarithmic basis functions and the weighted systems built from them."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import Boundary, DomainSide, classify


@dataclass(frozen=True)
class PoleSet:
    """Candidate poles with their position relative to the boundary.

    ``side`` is geometric (inside/outside the contours).  ``exterior`` says
    whether the solution domain is the outside of the contours; usable poles
    (those carrying basis functions) are the ones not in the solution domain.
    """

    poles: np.ndarray
    side: tuple
    exterior: bool = False

    @classmethod
    def classify(cls, b: Boundary, poles, exterior: bool = False, tol: float = 1e-6) -> "PoleSet":
        poles = np.atleast_1d(np.asarray(poles, dtype=complex))
        sides, _ = classify(b, poles, tol) if poles.size else ([], None)
        return cls(poles, tuple(sides), exterior)

    @property
    def usable(self) -> np.ndarray:
        want = DomainSide.INSIDE if self.exterior else DomainSide.OUTSIDE
        return np.array([s == want for s in self.side], dtype=bool)

    @property
    def n_out(self) -> int:
        return int(self.usable.sum())

    @property
    def n_in(self) -> int:
        return self.poles.size - self.n_out

    def __len__(self) -> int:
        return self.poles.size


@dataclass
class PotentialModel:
    """Complex potential ``W = a0 + sum a_n/(z'_n - z) + sum A_j log(z - c_j)``.

    For Neumann problems ``a0`` is zero and ``v_consts`` holds the per-contour
    constants of the harmonic conjugate.
    """

    a0: float = 0.0
    poles: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    residues: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    log_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))
    log_centers: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))
    v_consts: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __call__(self, z):
        return eval_potential(self, z)


def dipole_parts(z, zp):
    """Real and imaginary parts of ``1 / (zp - z)``."""
    z = np.asarray(z, dtype=complex)
    d = zp - z
    if np.any(d == 0):
        raise ValueError("field point coincides with a pole")
    phi = 1.0 / d
    return phi.real, phi.imag


def _log_sum(z, A, c):
    """``sum A_j log(z - c_j)`` grouped so that a zero total stays bounded at infinity."""
    out = np.zeros(z.shape, dtype=complex)
    if len(A) == 0:
        return out
    cJ = c[-1]
    tot = float(np.sum(A))
    for Aj, cj in zip(A[:-1], c[:-1]):
        out += Aj * np.log((z - cj) / (z - cJ))
    if tot != 0.0:
        out += tot * np.log(z - cJ)
    return out


def eval_potential(m: PotentialModel, z) -> np.ndarray:
    """Evaluate ``W(z)``; ``Re W`` is the potential and ``Im W`` its conjugate."""
    z = np.asarray(z, dtype=complex)
    shape = z.shape
    z = z.ravel()
    if m.poles.size and np.any(z[:, None] == m.poles[None, :]):
        raise ValueError("field point coincides with a pole")
    if m.log_centers.size and np.any(z[:, None] == m.log_centers[None, :]):
        raise ValueError("field point coincides with a log center")
    W = np.full(z.shape, complex(m.a0))
    for k in range(0, z.size, 4096):
        zz = z[k:k + 4096]
        if m.poles.size:
            W[k:k + 4096] += (m.residues[None, :] / (m.poles[None, :] - zz[:, None])).sum(axis=1)
        W[k:k + 4096] += _log_sum(zz, np.asarray(m.log_coeffs), np.asarray(m.log_centers))
    return W.reshape(shape)


def eval_potential_deriv(m: PotentialModel, z) -> np.ndarray:
    """``dW/dz``; the field gradient is ``conj(dW/dz)`` for ``U = Re W``."""
    z = np.asarray(z, dtype=complex)
    d = np.zeros(z.shape, dtype=complex)
    for p, a in zip(m.poles, m.residues):
        d += a / (p - z) ** 2
    for A, c in zip(m.log_coeffs, m.log_centers):
        d += A / (z - c)
    return d


@dataclass(frozen=True)
class ColumnMap:
    """Where each coefficient family sits in the real unknown vector."""

    const: slice | None
    real: slice
    imag: slice
    logs: slice | None
    v: slice | None
    n_cols: int


@dataclass(frozen=True)
class WeightedSystem:
    A: np.ndarray
    rhs: np.ndarray
    columns: ColumnMap
    poles: np.ndarray
    log_centers: np.ndarray


def _usable_poles(poles) -> np.ndarray:
    if isinstance(poles, PoleSet):
        return poles.poles[poles.usable]
    return np.atleast_1d(np.asarray(poles, dtype=complex))


def assemble_dirichlet(b: Boundary, rule, poles, f_samples, log_centers=None,
                       allow_constant_only: bool = False) -> WeightedSystem:
    """Weighted least-squares system for Dirichlet data.

    Columns are ``[1, phiR_n, -phiI_n]`` followed, when ``log_centers`` has
    ``J`` entries, by ``log|(z - c_j)/(z - c_J)|`` for ``j < J`` (the last
    log coefficient is eliminated so that the coefficients sum to zero).
    Rows are scaled by the square roots of the quadrature weights.  With no
    usable pole and no log column the basis is empty (only the constant) and
    a ``ValueError`` is raised unless ``allow_constant_only`` is set.
    """
    zp = _usable_poles(poles)
    z = rule.points
    sw = rule.sqrt_weights
    centers = np.zeros(0, dtype=complex) if log_centers is None else np.atleast_1d(np.asarray(log_centers, dtype=complex))
    nlog = max(centers.size - 1, 0)
    if zp.size == 0 and nlog == 0 and not allow_constant_only:
        raise ValueError("empty basis: no usable poles and no log terms")
    N = zp.size
    ncol = 1 + 2 * N + nlog
    A = np.empty((z.size, ncol))
    A[:, 0] = 1.0
    if N:
        phi = 1.0 / (zp[None, :] - z[:, None])
        A[:, 1:1 + N] = phi.real
        A[:, 1 + N:1 + 2 * N] = -phi.imag
    for j in range(nlog):
        A[:, 1 + 2 * N + j] = np.log(np.abs((z - centers[j]) / (z - centers[-1])))
    rhs = sw * np.asarray(f_samples, dtype=float)
    cols = ColumnMap(slice(0, 1), slice(1, 1 + N), slice(1 + N, 1 + 2 * N),
                     slice(1 + 2 * N, ncol) if nlog else None, None, ncol)
    return WeightedSystem(A * sw[:, None], rhs, cols, zp, centers)


def assemble_neumann(b: Boundary, rule, poles, F_samples, contour_of_node=None,
                     allow_constant_only: bool = False) -> WeightedSystem:
    """Weighted system for the harmonic-conjugate boundary values ``F_j``.

    Columns are ``[phiI_n, phiR_n]`` (unknowns ``aR_n``, ``aI_n``) and one
    ``-1`` indicator per contour (unknown ``v_j``).  There is no constant
    column.
    """
    zp = _usable_poles(poles)
    if zp.size == 0 and not allow_constant_only:
        raise ValueError("empty basis: no usable poles")
    z = rule.points
    sw = rule.sqrt_weights
    cj = rule.contour_of_node if contour_of_node is None else np.asarray(contour_of_node)
    J = b.n_contours
    N = zp.size
    ncol = 2 * N + J
    A = np.zeros((z.size, ncol))
    if N:
        phi = 1.0 / (zp[None, :] - z[:, None])
        A[:, :N] = phi.imag
        A[:, N:2 * N] = phi.real
    A[np.arange(z.size), 2 * N + cj] = -1.0
    rhs = sw * np.asarray(F_samples, dtype=float)
    cols = ColumnMap(None, slice(0, N), slice(N, 2 * N), None, slice(2 * N, ncol), ncol)
    return WeightedSystem(A * sw[:, None], rhs, cols, zp, np.zeros(0, dtype=complex))


def model_from_coefficients(system: WeightedSystem, x, log_centers=None, neumann_logs=None) -> PotentialModel:
    """Reassemble complex residues and log coefficients from the real unknowns."""
    c = system.columns
    x = np.asarray(x, dtype=float)
    res = x[c.real] + 1j * x[c.imag]
    a0 = float(x[c.const][0]) if c.const is not None else 0.0
    centers = system.log_centers if log_centers is None else np.asarray(log_centers, dtype=complex)
    if c.logs is not None:
        A = np.concatenate([x[c.logs], [-np.sum(x[c.logs])]])
    elif neumann_logs is not None:
        A = np.asarray(neumann_logs, dtype=float)
    elif centers.size == 1:
        A = np.zeros(1)
    else:
        A = np.zeros(centers.size)
    v = x[c.v] if c.v is not None else np.zeros(0)
    return PotentialModel(a0, system.poles.copy(), res, A, centers.copy(), v)


def conjugate_on_boundary(m: PotentialModel, z) -> np.ndarray:
    """``V-hat`` from the dipole terms only."""
    z = np.asarray(z, dtype=complex)
    if m.poles.size == 0:
        return np.zeros(z.shape)
    phi = 1.0 / (m.poles[None, :] - z.ravel()[:, None])
    return (phi * m.residues[None, :]).imag.sum(axis=1).reshape(z.shape)


def real_on_boundary(m: PotentialModel, z) -> np.ndarray:
    """``Re`` of the dipole terms only."""
    z = np.asarray(z, dtype=complex)
    if m.poles.size == 0:
        return np.zeros(z.shape)
    phi = 1.0 / (m.poles[None, :] - z.ravel()[:, None])
    return (phi * m.residues[None, :]).real.sum(axis=1).reshape(z.shape)


def dump_matrix_market(system: WeightedSystem, path) -> None:
    from scipy.io import mmwrite
    mmwrite(str(path), system.A)
