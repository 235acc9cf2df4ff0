"""Rational Gauss-Chebyshev rules and boundary testing-point construction.

The rule for a pole list ``alpha_1..alpha_P`` (parameter plane, off
``[-1, 1]``) with ``n_inf`` extra poles at infinity has ``n = P + n_inf + 1``
nodes and integrates ``R(x) conj(T(x)) / sqrt(1 - x^2)`` exactly whenever
``R`` and ``T`` are of the form ``p(x) / prod(x - alpha_i)`` with
``deg p <= n - 1``.

Construction: map each pole to the unit disk with the inverse Joukowski map
``beta = 1 / (alpha + sqrt(alpha^2 - 1))``.  On ``x = cos(theta)`` the
orthogonal rational functions are governed by the Blaschke phase

    Phi(theta) = n0 * theta + sum_g [theta + 2 arg(1 - g exp(-i theta))],

summed over ``g in {beta_i, conj(beta_i)}`` with ``n0 = 2 (n_inf + 1)``.
The nodes are ``cos(theta_j)`` with ``Phi(theta_j) = (2j - 1) pi`` and the
weights are ``2 pi / Phi'(theta_j)``.  With no finite poles this is the
classical Gauss-Chebyshev rule.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import integrate

from .geometry import Boundary, shifted_roots_local

EPS = float(np.finfo(float).eps)
DEGREE_CAP = 2000
DEFAULT_N_MIN = 4


class PoleOnBoundaryError(ValueError):
    pass


# ----------------------------------------------------------------------------
# elliptical radius
# ----------------------------------------------------------------------------

def ellipse_params(alpha):
    """Return ``(eta, psi)`` with ``alpha = cosh(eta + i psi)``, ``eta >= 0``, ``psi in [0, pi]``.

    ``eta = log(rho)`` is computed without cancellation for poles close to
    the interval, where ``numpy.arccos`` loses about half the digits.
    """
    a = np.asarray(alpha, dtype=complex)
    x = np.abs(a.real)
    y = a.imag
    y2 = y * y
    r = np.hypot(x + 1.0, y)
    s = np.hypot(x - 1.0, y)
    with np.errstate(divide="ignore", invalid="ignore"):
        am1 = np.where(
            x < 1.0,
            0.5 * (y2 / (r + x + 1.0) + y2 / (s + 1.0 - x)),
            0.5 * (y2 / (r + x + 1.0) + s + x - 1.0),
        )
    am1 = np.where(np.isfinite(am1), am1, 0.5 * (r + s) - 1.0)
    A = am1 + 1.0
    eta = np.log1p(am1 + np.sqrt(am1 * (A + 1.0)))
    with np.errstate(divide="ignore", invalid="ignore"):
        c = a.real / np.cosh(eta)
        sn = np.abs(y) / np.sinh(eta)
    sn = np.where(np.isfinite(sn), sn, 0.0)
    psi = np.arctan2(sn, c)
    return eta, psi


def elliptical_radius(alpha):
    """Bernstein-ellipse parameter ``rho >= 1`` of ``alpha`` w.r.t. ``[-1, 1]``."""
    eta, _ = ellipse_params(alpha)
    return np.exp(eta)


# ----------------------------------------------------------------------------
# the rule
# ----------------------------------------------------------------------------

def _phase_parts(theta, eta, psi, n0):
    """Blaschke phase minus targets' offset and its derivative, vectorized."""
    th = theta[:, None]
    r = np.exp(-eta)[None, :]
    om = -np.expm1(-eta)[None, :]  # 1 - r
    one_m_r2 = -np.expm1(-2.0 * eta)[None, :]
    phi = 0.0 * th
    dphi = 0.0 * th
    for sgn in (1.0, -1.0):
        x = sgn * psi[None, :] - th
        sh = np.sin(0.5 * x)
        denom = om * om + 4.0 * r * sh * sh
        # arg(1 - r e^{i x}) with 1 - r cos x written without cancellation
        ang = np.arctan2(-r * np.sin(x), om + 2.0 * r * sh * sh)
        phi = phi + th + 2.0 * ang
        dphi = dphi + one_m_r2 / denom
    return n0 * theta + phi.sum(axis=1), n0 + dphi.sum(axis=1)


def rational_chebyshev_rule(poles, n_infinite: int):
    """Rational Gauss-Chebyshev rule on ``[-1, 1]``.

    Parameters
    ----------
    poles : array_like of complex
        Parameter-plane poles, repeated according to multiplicity.  Pass the
        list closed under conjugation when the integrand involves both
        ``R(x)`` and ``conj(R(x))``.
    n_infinite : int
        Number of additional poles at infinity (polynomial degree of the
        exactness space beyond the rational part).

    Returns
    -------
    nodes, weights : ndarray
        Nodes ascending in ``(-1, 1)``; positive weights summing to ``pi``.
    """
    if n_infinite < 0:
        raise ValueError("n_infinite must be nonnegative")
    poles = np.atleast_1d(np.asarray(poles, dtype=complex))
    poles = poles[np.isfinite(poles)]
    eta, psi = ellipse_params(poles)
    if np.any(eta <= 1e-15):
        raise PoleOnBoundaryError("pole on boundary: a parameter-plane pole lies on [-1, 1]")
    n = poles.size + n_infinite + 1
    n0 = 2.0 * (n_infinite + 1)
    targets = (2.0 * np.arange(1, n + 1) - 1.0) * np.pi
    if poles.size == 0:
        theta = targets / (2 * n)
    else:
        theta = _solve_phase(targets, eta, psi, n0)
    _, d = _phase_parts(theta, eta, psi, n0)
    x = np.cos(theta)[::-1]
    w = (2.0 * np.pi / d)[::-1]
    return x, w


def _solve_phase(targets, eta, psi, n0, max_iter=200):
    n = targets.size
    # monotone phase: bracket each root on a grid, then safeguarded Newton
    grid = np.unique(np.concatenate([np.linspace(0.0, np.pi, 4 * n + 9), np.clip(psi, 0.0, np.pi)]))
    pg, _ = _phase_parts(grid, eta, psi, n0)
    pg[0], pg[-1] = 0.0, 2.0 * np.pi * n
    k = np.clip(np.searchsorted(pg, targets), 1, grid.size - 1)
    lo, hi = grid[k - 1].copy(), grid[k].copy()
    flo, fhi = pg[k - 1] - targets, pg[k] - targets
    th = lo + (hi - lo) * (-flo) / np.where(fhi - flo > 0, fhi - flo, 1.0)
    th = np.clip(th, lo, hi)
    active = np.arange(n)
    for _ in range(max_iter):
        t = th[active]
        f, d = _phase_parts(t, eta, psi, n0)
        f = f - targets[active]
        lo[active] = np.where(f < 0, t, lo[active])
        hi[active] = np.where(f > 0, t, hi[active])
        tn = t - f / d
        bad = (tn < lo[active]) | (tn > hi[active])
        tn = np.where(bad, 0.5 * (lo[active] + hi[active]), tn)
        # stop once the step is below the rounding level of the phase itself
        floor = np.maximum(2e-16 * np.maximum(t, 1e-3), 8 * EPS * targets[active] / d)
        done = (np.abs(tn - t) <= floor) | (f == 0.0)
        th[active] = np.where(done, t, tn)
        active = active[~done]
        if active.size == 0:
            break
    return th


# ----------------------------------------------------------------------------
# prune table
# ----------------------------------------------------------------------------

def cubic_pole_chebcoeffs(rho: float, kmax: int) -> np.ndarray:
    """Chebyshev coefficients of ``(t - t0)^-3`` with ``t0 = (rho + 1/rho)/2``."""
    t0 = 0.5 * (rho + 1.0 / rho)
    s = 0.5 * (rho - 1.0 / rho)  # sqrt(t0^2 - 1)
    b = 1.0 / rho
    k = np.arange(kmax + 1, dtype=float)
    with np.errstate(under="ignore"):
        bk = np.exp(k * math.log(b))
    c = -bk * ((k * k - 1.0) / s**3 + 3.0 * k * t0 / s**4 + 3.0 * t0 * t0 / s**5)
    c[0] *= 0.5
    return c


def _required_degree(rho: float, eps: float, cap: int = DEGREE_CAP) -> int:
    c = np.abs(cubic_pole_chebcoeffs(rho, cap + 1))
    t0 = 0.5 * (rho + 1.0 / rho)
    norm = (t0 - 1.0) ** -3
    tail = np.cumsum(c[::-1])[::-1]  # tail[k] = sum_{j >= k} |c_j|
    ok = np.flatnonzero(2.0 * tail[1:] <= eps * norm)
    if ok.size == 0:
        return cap
    return int(ok[0])


@dataclass(frozen=True)
class PruneTable:
    """Degree ``d(rho, eps)`` at which the Chebyshev interpolant of a cubic
    pole with elliptical radius ``rho`` reaches relative accuracy ``eps``.

    Degrees equal to ``cap`` mean the pole must be kept.
    """

    rhos: np.ndarray
    epsilons: np.ndarray
    degrees: np.ndarray  # shape (len(rhos), len(epsilons))
    cap: int = DEGREE_CAP

    def degree(self, rho, eps) -> np.ndarray:
        """Bilinear interpolation in ``(log rho, log eps)``; ``inf`` means keep."""
        rho = np.atleast_1d(np.asarray(rho, dtype=float))
        lr = np.log(self.rhos)
        le = np.log(self.epsilons[::-1])  # ascending
        D = self.degrees[:, ::-1].astype(float)
        D[D >= self.cap] = np.inf
        x = np.clip(np.log(np.maximum(rho, 1.0)), lr[0], lr[-1])
        e = float(np.clip(math.log(eps), le[0], le[-1]))
        j = int(np.clip(np.searchsorted(le, e) - 1, 0, le.size - 2))
        te = (e - le[j]) / (le[j + 1] - le[j])
        i = np.clip(np.searchsorted(lr, x) - 1, 0, lr.size - 2)
        tr = (x - lr[i]) / (lr[i + 1] - lr[i])
        out = np.zeros(rho.shape)
        for (di, dj, wt) in ((0, 0, (1 - tr) * (1 - te)), (1, 0, tr * (1 - te)), (0, 1, (1 - tr) * te), (1, 1, tr * te)):
            v = D[i + di, j + dj]
            with np.errstate(invalid="ignore"):
                out = out + np.where(wt > 0, wt * v, 0.0)
        out[rho < self.rhos[0]] = np.inf
        return np.ceil(out - 1e-9)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["rho", "epsilon", "degree"])
            for i, r in enumerate(self.rhos):
                for j, e in enumerate(self.epsilons):
                    w.writerow([repr(float(r)), repr(float(e)), int(self.degrees[i, j])])

    @classmethod
    def from_csv(cls, fh) -> "PruneTable":
        rows = list(csv.DictReader(fh))
        rhos = np.unique([float(r["rho"]) for r in rows])
        eps = np.unique([float(r["epsilon"]) for r in rows])[::-1]
        D = np.zeros((rhos.size, eps.size), dtype=int)
        ri = {v: i for i, v in enumerate(rhos)}
        ei = {v: i for i, v in enumerate(eps)}
        for r in rows:
            D[ri[float(r["rho"])], ei[float(r["epsilon"])]] = int(r["degree"])
        return cls(rhos, eps, D)


DEFAULT_EPSILONS = tuple(10.0 ** -k for k in range(2, 16))


def default_rho_grid(n: int = 80) -> np.ndarray:
    return np.geomspace(1.0005, 1e3, n)


def build_prune_table(epsilons=DEFAULT_EPSILONS, rhos=None, cap: int = DEGREE_CAP) -> PruneTable:
    """Tabulate required degrees and enforce monotonicity.

    Degrees are made nonincreasing in ``rho`` and nondecreasing as ``eps``
    decreases (running maxima), which removes ripples from the tail bound.
    """
    eps = np.sort(np.asarray(epsilons, dtype=float))[::-1]
    if np.any(eps <= 1e-16) or np.any(eps > 1e-2):
        raise ValueError("epsilons must lie in (1e-16, 1e-2]")
    rhos = default_rho_grid() if rhos is None else np.sort(np.asarray(rhos, dtype=float))
    D = np.array([[_required_degree(r, e, cap) for e in eps] for r in rhos], dtype=int)
    D = np.maximum.accumulate(D[::-1, :], axis=0)[::-1, :]
    D = np.maximum.accumulate(D, axis=1)
    return PruneTable(rhos, eps, D, cap)


@lru_cache(maxsize=1)
def default_prune_table() -> PruneTable:
    ref = resources.files("laplace_rf").joinpath("data/prune_table.csv")
    with ref.open("r") as fh:
        return PruneTable.from_csv(fh)


def epsilon_from_error(prev_delta_e: float | None) -> float:
    """Pruning tolerance from the previous iteration's error (capped at 1e-4)."""
    if prev_delta_e is None or not np.isfinite(prev_delta_e):
        return 1e-4
    return float(min(1e-4, 0.01 * prev_delta_e))


def prune(alphas, epsilon: float, table: PruneTable | None = None, n_min: int = DEFAULT_N_MIN,
          extra=None):
    """Replace distant parameter-plane poles by poles at infinity.

    Drops the ``k`` poles with the largest elliptical radius, where ``k``
    minimizes the node count ``(P - k) + n_inf + 1`` and ``n_inf`` is the
    smallest count whose polynomial exactness ``2 n_inf - 1`` covers the
    degree requirement of every dropped pole.  ``extra`` lists additional
    singularities (e.g. log centers) that only raise ``n_inf``.

    Returns
    -------
    kept : ndarray
    n_infinite : int
    """
    table = default_prune_table() if table is None else table
    alphas = np.asarray(alphas, dtype=complex)
    alphas = alphas[np.isfinite(alphas)]
    base = n_min
    if extra is not None and np.size(extra):
        ex = np.asarray(extra, dtype=complex)
        dx = table.degree(elliptical_radius(ex[np.isfinite(ex)]), epsilon)
        dx = dx[np.isfinite(dx)]
        if dx.size:
            base = max(base, int(math.ceil((dx.max() + 1) / 2)))
    if alphas.size == 0:
        return alphas, base
    rho = elliptical_radius(alphas)
    order = np.argsort(-rho, kind="stable")
    d = table.degree(rho[order], epsilon)
    P = alphas.size
    best_k, best_total, best_ninf = 0, P + base + 1, base
    running = -np.inf
    for k in range(1, P + 1):
        running = max(running, d[k - 1])
        if not np.isfinite(running):
            break
        ninf = max(base, int(math.ceil((running + 1) / 2)))
        total = (P - k) + ninf + 1
        if total <= best_total:
            best_k, best_total, best_ninf = k, total, ninf
    kept = alphas[np.sort(order[best_k:])]
    return kept, best_ninf


# ----------------------------------------------------------------------------
# boundary rules
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Testing points on a boundary with their weights.

    ``weights`` are the Chebyshev-weighted quadrature weights in the global
    parameter ``s``; summed over a section they give ``pi * width / 2``.
    """

    nodes: np.ndarray
    weights: np.ndarray
    section_of_node: np.ndarray
    points: np.ndarray
    pole_signature: tuple = ()
    n_infinite: tuple = ()
    epsilon: float = 0.0
    contour_of_node: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))

    @property
    def size(self) -> int:
        return self.nodes.size

    @property
    def sqrt_weights(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def dump_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["section", "s", "weight"])
            for m, s, lam in zip(self.section_of_node, self.nodes, self.weights):
                w.writerow([int(m), repr(float(s)), repr(float(lam))])


def section_pole_list(b: Boundary, m: int, poles, outside) -> np.ndarray:
    """Parameter-plane pole list of section ``m`` in its local variable.

    Every pole contributes the zeros of ``z' q_m - p_m`` once (zeros of
    ``Q-hat``); poles that carry basis functions contribute them again
    together with their conjugates.
    """
    sec = b.sections[m]
    poles = np.atleast_1d(np.asarray(poles, dtype=complex))
    outside = np.asarray(outside, dtype=bool)
    if poles.size == 0:
        return np.zeros(0, dtype=complex)
    roots = shifted_roots_local(sec, poles)
    allr = roots.ravel()
    outr = roots[outside].ravel()
    lst = np.concatenate([allr, outr, np.conj(outr)])
    return lst[np.isfinite(lst)]


def build_boundary_rule(b: Boundary, poles=(), outside=None, extra_log_centers=(),
                        epsilon: float = 1e-4, n_min: int = DEFAULT_N_MIN,
                        prune_poles: bool = True, table: PruneTable | None = None,
                        min_nodes: int = 0) -> QuadratureRule:
    """Concatenate per-section rational Gauss-Chebyshev rules.

    Parameters
    ----------
    poles : array_like or PoleSet
        All current poles; each one enters through the zeros of ``Q-hat``.
    outside : bool array, optional
        Which poles carry basis functions (default: all).  Taken from the
        pole set when a ``PoleSet`` is passed.
    extra_log_centers : complex list
        Log-term centers; they only raise the number of poles at infinity.
    min_nodes : int
        Lower bound on the total node count.  Pruning can leave barely more
        nodes than unknowns, which makes the weighted residual meaningless;
        missing nodes are added as poles at infinity, evenly per section.
    """
    if hasattr(poles, "poles"):
        outside = poles.usable if outside is None else outside
        poles = poles.poles
    poles = np.atleast_1d(np.asarray(poles, dtype=complex))
    outside = np.ones(poles.size, dtype=bool) if outside is None else np.asarray(outside, dtype=bool)
    centers = np.atleast_1d(np.asarray(extra_log_centers, dtype=complex))
    lists, ninfs = [], []
    for m, sec in enumerate(b.sections):
        lst = section_pole_list(b, m, poles, outside)
        extra = shifted_roots_local(sec, centers).ravel() if centers.size else None
        if prune_poles:
            lst, ninf = prune(lst, epsilon, table, n_min, extra)
        else:
            ninf = n_min
        lists.append(lst)
        ninfs.append(ninf)
    total = sum(lst.size + ninf + 1 for lst, ninf in zip(lists, ninfs))
    if total < min_nodes:
        add = -(-(min_nodes - total) // b.n_sections)
        ninfs = [ninf + add for ninf in ninfs]
    nodes, weights, sec_idx = [], [], []
    for m, sec in enumerate(b.sections):
        x, w = rational_chebyshev_rule(lists[m], ninfs[m])
        a, c = sec.interval
        nodes.append(a + 0.5 * (x + 1.0) * (c - a))
        weights.append(0.5 * (c - a) * w)
        sec_idx.append(np.full(x.size, m))
    s = np.concatenate(nodes)
    sec_idx = np.concatenate(sec_idx)
    pts = np.concatenate([b.sections[m].eval(sn) for m, sn in enumerate(nodes)])
    return QuadratureRule(
        nodes=s,
        weights=np.concatenate(weights),
        section_of_node=sec_idx,
        points=pts,
        pole_signature=tuple(np.round(poles, 15)),
        n_infinite=tuple(ninfs),
        epsilon=float(epsilon),
        contour_of_node=b.contour_map[sec_idx],
    )


def testing_point_count(M: int, n_infinite: int, n_out: int, n_in: int, L) -> int:
    """Node count of an unpruned boundary rule."""
    L = np.broadcast_to(np.asarray(L, dtype=int), (M,))
    return int(M * (n_infinite + 1) + (3 * n_out + n_in) * L.sum())


# ----------------------------------------------------------------------------
# exactness oracle
# ----------------------------------------------------------------------------

def adaptive_chebyshev_integral(g) -> complex:
    """``int_{-1}^{1} g(x) / sqrt(1 - x^2) dx`` by adaptive quadrature in ``theta``."""
    def part(fn):
        # the requested accuracy sits at the rounding floor; quad warns but converges
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(lambda th: fn(g(np.cos(th))), 0.0, np.pi, limit=1000,
                                    epsabs=0.0, epsrel=1.2e-14)
        return val
    return part(np.real) + 1j * part(np.imag)


def random_pole_set(rng, n_pairs: int, rho_min: float = 1.05, real_prob: float = 0.2) -> np.ndarray:
    """Conjugate-closed parameter-plane poles with elliptical radius >= rho_min."""
    out = []
    while len(out) < n_pairs:
        rho = rho_min * math.exp(rng.exponential(0.6))
        psi = rng.uniform(0.0, math.pi)
        if rng.random() < real_prob:
            psi = 0.0 if rng.random() < 0.5 else math.pi
        a = math.cosh(math.log(rho)) * math.cos(psi) + 1j * math.sinh(math.log(rho)) * math.sin(psi)
        out.append(a)
    out = np.array(out, dtype=complex)
    return np.concatenate([out, np.conj(out)])


def random_exact_integrand(rng, poles, n_inf: int):
    """Random ``R conj(T)`` in the exactness space of the rule for ``poles``."""
    poles = np.asarray(poles, dtype=complex)

    def make():
        c = rng.normal(size=poles.size) + 1j * rng.normal(size=poles.size)
        p = rng.normal(size=n_inf + 1) + 1j * rng.normal(size=n_inf + 1)
        return lambda x: (c / (np.asarray(x)[..., None] - poles)).sum(-1) + np.polyval(p, x)

    R, T = make(), make()
    return lambda x: R(x) * np.conj(T(x))


def exactness_check(n_trials: int = 200, seed: int = 0, max_pairs: int = 6, max_inf: int = 4):
    """Worst relative error of random rules against the adaptive oracle."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_trials):
        poles = random_pole_set(rng, int(rng.integers(1, max_pairs + 1)))
        ninf = int(rng.integers(0, max_inf + 1))
        x, w = rational_chebyshev_rule(poles, ninf)
        g = random_exact_integrand(rng, poles, ninf)
        ref = adaptive_chebyshev_integral(g)
        worst = max(worst, abs(np.dot(w, g(x)) - ref) / abs(ref))
    return worst
