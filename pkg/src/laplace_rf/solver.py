"""Outer pole-relocation iteration for interior/exterior Dirichlet and exterior Neumann problems."""

from __future__ import annotations

import enum
import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.optimize import linear_sum_assignment

from . import basis, quadrature, ratfit
from .basis import PoleSet, PotentialModel
from .geometry import Boundary, DomainSide, classify, inside_mask
from .numerics import lsq_colpivot, pair_conjugates

log = logging.getLogger(__name__)


class ProblemKind(enum.Enum):
    INTERIOR_DIRICHLET = "interior_dirichlet"
    EXTERIOR_DIRICHLET = "exterior_dirichlet"
    EXTERIOR_NEUMANN = "exterior_neumann"

    @property
    def exterior(self) -> bool:
        return self is not ProblemKind.INTERIOR_DIRICHLET


class CompatibilityError(ValueError):
    pass


# ----------------------------------------------------------------------------
# boundary data
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryData:
    """Boundary values as a function of position.

    ``func(z)`` by default; with ``uses_normal=True`` it is called as
    ``func(z, normal, contour)`` where ``normal`` is the unit normal pointing
    out of the region enclosed by each contour.
    """

    func: Callable
    uses_normal: bool = False

    def evaluate(self, b: Boundary, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        z = b.eval(s)
        if self.uses_normal:
            return np.asarray(self.func(z, b.normal(s), b.contour_of(s)), dtype=float)
        return np.asarray(self.func(z), dtype=float)


@dataclass(frozen=True)
class TabulatedData:
    """Boundary values given at parameter values ``s``; periodic cubic interpolation per contour."""

    s: np.ndarray
    values: np.ndarray

    def evaluate(self, b: Boundary, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.empty(s.shape)
        cs, vs = np.asarray(self.s, float), np.asarray(self.values, float)
        h = b.breakpoints
        for j in range(b.n_contours):
            secs = b.contour_sections(j)
            a, c = h[secs[0]], h[secs[-1] + 1]
            sel = (cs >= a) & (cs <= c)
            x, y = cs[sel], vs[sel]
            order = np.argsort(x)
            x, y = x[order], y[order]
            if x.size < 3:
                raise ValueError(f"too few tabulated values on contour {j}")
            xp = np.concatenate([x, [x[0] + (c - a)]])
            yp = np.concatenate([y, [y[0]]])
            spl = CubicSpline(xp, yp, bc_type="periodic")
            m = b.contour_of(s) == j
            t = (s[m] - x[0]) % (c - a) + x[0]
            out[m] = spl(t)
        return out


def as_data(d) -> BoundaryData | TabulatedData:
    if isinstance(d, (BoundaryData, TabulatedData)) or hasattr(d, "evaluate"):
        return d
    if callable(d):
        return BoundaryData(d)
    raise TypeError("boundary data must be callable, BoundaryData or TabulatedData")


# ----------------------------------------------------------------------------
# problem / report
# ----------------------------------------------------------------------------

@dataclass
class ProblemSpec:
    kind: ProblemKind
    boundary: Boundary
    data: object
    N: int = 10
    tol: float = 1e-12
    max_iter: int = 100
    adaptive: bool = False
    adaptive_K: int = 5
    adaptive_eps: float = 0.5e-2
    seed: int = 0
    n_min: int = quadrature.DEFAULT_N_MIN
    log_centers: np.ndarray | None = None
    initial: np.ndarray | None = None
    require_compatible: bool = True
    compat_tol: float = 1e-10
    prune: bool = True

    def __post_init__(self):
        if isinstance(self.kind, str):
            self.kind = ProblemKind(self.kind)
        self.data = as_data(self.data)
        if self.N < 0:
            raise ValueError("N must be nonnegative")


@dataclass
class IterationRecord:
    iteration: int
    delta_e: float
    n_out: int
    n_in: int
    K: int
    epsilon: float
    method: str
    cond: float
    n_poles: int


@dataclass
class SolveReport:
    kind: str
    iterations: list = field(default_factory=list)
    stop_reason: str = ""
    best_iteration: int = -1
    delta_e: float = math.inf
    wall_time: float = 0.0
    n_poles: int = 0
    n_out: int = 0
    K: int = 0
    notes: list = field(default_factory=list)

    @property
    def history(self) -> np.ndarray:
        return np.array([r.delta_e for r in self.iterations])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["iterations"] = [asdict(r) for r in self.iterations]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(_jsonable(self.to_dict()), **kw)


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        v = float(x)
        return v if math.isfinite(v) else repr(v)
    if isinstance(x, np.integer):
        return int(x)
    return x


# ----------------------------------------------------------------------------
# helpers
# ----------------------------------------------------------------------------

def _inscribed_point(b: Boundary, j: int) -> complex:
    """Midpoint of the longest interior chord along rays from the centroid."""
    c = b.centroid(j)
    poly = b.dense(4096 * b.n_contours, contour=j)
    a, e = poly, np.roll(poly, -1)
    best, best_len = c, -1.0
    for th in np.linspace(0, np.pi, 64, endpoint=False):
        u = np.exp(1j * th)
        # solve c + t u = a + r (e - a), 0 <= r < 1
        d = e - a
        den = (u.conjugate() * d).imag
        ok = np.abs(den) > 1e-300
        t = np.where(ok, ((a - c).conjugate() * d).imag / np.where(ok, den, 1.0), np.nan)
        r = np.where(ok, ((a - c).conjugate() * u).imag / np.where(ok, den, 1.0), np.nan)
        hit = ok & (r >= 0) & (r < 1)
        ts = np.sort(t[hit])
        for k in range(0, ts.size - 1, 2):
            if ts[k + 1] - ts[k] > best_len:
                best_len = ts[k + 1] - ts[k]
                best = c + 0.5 * (ts[k] + ts[k + 1]) * u
    return complex(best)


def default_log_centers(b: Boundary) -> np.ndarray:
    """One interior point per contour: the centroid if inside, else a chord midpoint."""
    out = []
    for j in range(b.n_contours):
        c = b.centroid(j)
        sides, owners = classify(b, [c])
        if sides[0] is not DomainSide.INSIDE or owners[0] != j:
            c = _inscribed_point(b, j)
        out.append(c)
    return np.array(out, dtype=complex)


def _contour_rms_and_length(b: Boundary, data, contours=None) -> tuple[float, float]:
    """``int |f|^2 |dz|`` and total length by adaptive quadrature per section."""
    tot, length = 0.0, 0.0
    for m, sec in enumerate(b.sections):
        if contours is not None and b.contour_map[m] not in contours:
            continue

        def g(t, sec=sec):
            s = sec.to_global(np.atleast_1d(t))
            return float(data.evaluate(b, s)[0] ** 2 * abs(sec.deriv_local(t)))

        val, _ = integrate.quad(g, -1.0, 1.0, limit=200, epsrel=1e-10)
        tot += val
        length += sec.arclength()
    return tot, length


def _chebfun_section(fn, tol=1e-14, max_deg=2048):
    """Chebyshev coefficients of ``fn`` on ``[-1, 1]``, doubling until the tail is small."""
    n = 32
    while True:
        c = C.chebinterpolate(fn, n)
        scale = max(np.max(np.abs(c)), 1e-300)
        if np.max(np.abs(c[-4:])) <= tol * scale or n >= max_deg:
            return c
        n *= 2


# ----------------------------------------------------------------------------
# Neumann preprocessing
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class NeumannData:
    A: np.ndarray
    centers: np.ndarray
    antiderivs: tuple  # per section: (cheb coeffs of F in local t, offset)
    compat_residual: float
    flux: np.ndarray

    def F(self, b: Boundary, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        idx = b.section_index(s)
        out = np.empty(s.shape)
        for m in np.unique(idx):
            mask = idx == m
            coef, off = self.antiderivs[m]
            out[mask] = off + C.chebval(b.sections[m].to_local(s[mask]), coef)
        return out


def neumann_preprocess(p: ProblemSpec) -> NeumannData:
    """Log coefficients, corrected data and its arc-length antiderivative.

    With ``n`` the unit normal pointing out of each obstacle, the flux
    through contour ``j`` is carried by ``A_j log(z - c_j)`` with
    ``A_j = (1/2 pi) oint f_j |dz|``.  The corrected data
    ``f_j - sum_i A_i Re[n / (z - c_i)]`` is integrated along each contour
    (counterclockwise) from its first breakpoint.
    """
    b = p.boundary
    centers = default_log_centers(b) if p.log_centers is None else np.asarray(p.log_centers, dtype=complex)
    data = p.data
    flux = np.zeros(b.n_contours)
    raw = []
    for m, sec in enumerate(b.sections):
        def g(t, sec=sec):
            s = sec.to_global(t)
            return data.evaluate(b, s) * np.abs(sec.deriv_local(t))
        c = _chebfun_section(g)
        raw.append(c)
        flux[b.contour_map[m]] += C.chebval(1.0, C.chebint(c, lbnd=-1.0))
    A = flux / (2 * np.pi)
    total = float(np.sum(flux))
    scale = max(float(np.sum(np.abs(flux))), sum(
        abs(C.chebval(1.0, C.chebint(np.abs(c), lbnd=-1.0))) for c in raw), 1.0)
    compat = abs(total) / scale
    if p.require_compatible and compat > p.compat_tol:
        raise CompatibilityError(f"Neumann data incompatible: net flux {total:.3e}")
    antiderivs = []
    for j in range(b.n_contours):
        off = 0.0
        for m in b.contour_sections(j):
            sec = b.sections[m]

            def g(t, sec=sec):
                s = sec.to_global(t)
                z = sec.eval_local(t)
                dz = sec.deriv_local(t)
                n = -1j * dz / np.abs(dz)
                corr = np.zeros(np.shape(t))
                for Ai, ci in zip(A, centers):
                    corr = corr + Ai * (n / (z - ci)).real
                return (data.evaluate(b, s) - corr) * np.abs(dz)

            c = _chebfun_section(g)
            F = C.chebint(c, lbnd=-1.0)
            antiderivs.append((F, off))
            off += C.chebval(1.0, F)
    return NeumannData(A, centers, tuple(antiderivs), compat, flux)


# ----------------------------------------------------------------------------
# error metrics
# ----------------------------------------------------------------------------

def delta_e(residual_weighted: np.ndarray, target_weighted: np.ndarray) -> float:
    """Weighted relative error ``||u - f||_w / ||f||_w`` from sqrt-weighted vectors."""
    num = float(np.linalg.norm(residual_weighted))
    den = float(np.linalg.norm(target_weighted))
    if den == 0.0:
        return num
    return num / den


def delta_e_model(model: PotentialModel, rule, f_samples, kind=ProblemKind.INTERIOR_DIRICHLET) -> float:
    """``Delta E`` of a model against boundary samples at rule nodes."""
    u = basis.eval_potential(model, rule.points).real
    sw = rule.sqrt_weights
    return delta_e(sw * (u - f_samples), sw * np.asarray(f_samples))


def delta_e_max(model: PotentialModel, b: Boundary, data, n_dense: int = 20000,
                kind: ProblemKind = ProblemKind.INTERIOR_DIRICHLET) -> float:
    """Max boundary error over ``n_dense`` midpoints uniform in ``s``, normalized by the RMS of ``f``.

    For Neumann problems the normal derivative of the potential is compared
    with the data.
    """
    data = as_data(data)
    s = (np.arange(n_dense) + 0.5) / n_dense
    z = b.eval(s)
    f = data.evaluate(b, s)
    if kind is ProblemKind.EXTERIOR_NEUMANN:
        u = (basis.eval_potential_deriv(model, z) * b.normal(s)).real
    else:
        u = basis.eval_potential(model, z).real
    sq, length = _contour_rms_and_length(b, data)
    rms = math.sqrt(sq / length)
    if rms == 0.0:
        return float(np.max(np.abs(f - u)))
    return float(np.max(np.abs(f - u)) / rms)


def eval_field(model: PotentialModel, grid, b: Boundary | None = None, exterior: bool = False):
    """Potential and conjugate on a grid; points outside the solution domain are masked.

    Returns ``(U, V, valid)`` with ``nan`` at masked points.
    """
    z = np.asarray(grid, dtype=complex)
    valid = np.ones(z.shape, dtype=bool)
    if b is not None:
        ins = inside_mask(b, z.ravel()).reshape(z.shape)
        valid &= ins if not exterior else ~ins
    sing = np.concatenate([model.poles, model.log_centers])
    if sing.size:
        valid &= np.min(np.abs(z.ravel()[:, None] - sing[None, :]), axis=1).reshape(z.shape) > 0
    U = np.full(z.shape, np.nan)
    V = np.full(z.shape, np.nan)
    if np.any(valid):
        W = basis.eval_potential(model, z[valid])
        U[valid], V[valid] = W.real, W.imag
    return U, V, valid


# ----------------------------------------------------------------------------
# the iteration
# ----------------------------------------------------------------------------

def _pole_motion(old: np.ndarray, new: np.ndarray) -> float:
    if old.size != new.size or old.size == 0:
        return math.inf
    D = np.abs(old[:, None] - new[None, :])
    r, c = linear_sum_assignment(D)
    return float(D[r, c].max())


def _maybe_pair(poles: np.ndarray, diam: float) -> np.ndarray:
    """Snap to an exactly conjugate-closed set when the set is nearly closed."""
    if poles.size == 0:
        return poles
    tol = 1e-8
    d = np.abs(poles[:, None] - np.conj(poles)[None, :])
    if np.all(d.min(axis=1) <= tol * max(diam, 1.0) * np.maximum(1.0, np.abs(poles))):
        return pair_conjugates(poles, tol=tol, scale=diam)
    return poles


def _clean_poles(b: Boundary, poles: np.ndarray, N: int, exterior: bool, it: int) -> tuple[PoleSet, int]:
    """Drop non-finite, far-away and on-boundary poles, then pad back to ``N``."""
    diam = b.diameter
    center = np.mean(b.dense(1000))
    keep = np.isfinite(poles) & (np.abs(poles - center) <= 1e6 * diam)
    poles = poles[keep]
    ps = PoleSet.classify(b, poles, exterior)
    onb = np.array([s is DomainSide.ON_BOUNDARY for s in ps.side], dtype=bool)
    if np.any(onb):
        ps = PoleSet(ps.poles[~onb], tuple(s for s, o in zip(ps.side, onb) if not o), exterior)
    missing = N - ps.poles.size
    if missing > 0:
        pad = ratfit.fallback_poles(b, missing, exterior)
        if not exterior:
            pad = center + (pad - center) * np.exp(1j * 2.399963 * (it + 1))
        pad = pad + 1e-3 * diam * np.exp(1j * 2.399963 * np.arange(1, pad.size + 1) * (it + 2))
        ps = PoleSet.classify(b, np.concatenate([ps.poles, pad]), exterior)
    return ps, max(missing, 0)


OVERSAMPLING = 2


def _min_nodes(p: ProblemSpec, poles: PoleSet, centers) -> int:
    """Node floor: a fixed multiple of the number of real unknowns."""
    J = p.boundary.n_contours
    if p.kind is ProblemKind.EXTERIOR_NEUMANN:
        cols = 2 * poles.n_out + J
    else:
        nlog = max(np.size(centers) - 1, 0) if p.kind is ProblemKind.EXTERIOR_DIRICHLET else 0
        cols = 1 + 2 * poles.n_out + nlog
    return OVERSAMPLING * cols


def _solve_residues(p: ProblemSpec, rule, poles: PoleSet, centers, ndata: NeumannData | None):
    b = p.boundary
    if p.kind is ProblemKind.EXTERIOR_NEUMANN:
        target = ndata.F(b, rule.nodes)
        system = basis.assemble_neumann(b, rule, poles, target, allow_constant_only=True)
    else:
        target = p.data.evaluate(b, rule.nodes)
        lc = centers if p.kind is ProblemKind.EXTERIOR_DIRICHLET and b.n_contours > 1 else None
        system = basis.assemble_dirichlet(b, rule, poles, target, lc, allow_constant_only=True)
    sol = lsq_colpivot(system.A, system.rhs)
    if p.kind is ProblemKind.EXTERIOR_NEUMANN:
        model = basis.model_from_coefficients(system, sol.x, centers, ndata.A)
        v = sol.x[system.columns.v]
        fitted = target + v[rule.contour_of_node]
        de = delta_e(system.A @ sol.x - system.rhs, rule.sqrt_weights * fitted)
    else:
        model = basis.model_from_coefficients(system, sol.x, centers if p.kind is ProblemKind.EXTERIOR_DIRICHLET else None)
        fitted = target
        de = delta_e(system.A @ sol.x - system.rhs, system.rhs)
    return model, system, sol, target, fitted, de


def _w_hat(p: ProblemSpec, model: PotentialModel, rule, target, fitted) -> np.ndarray:
    """Boundary estimate of the single-valued part of the complex potential."""
    z = rule.points
    if p.kind is ProblemKind.EXTERIOR_NEUMANN:
        return basis.real_on_boundary(model, z) + 1j * fitted
    real = np.asarray(target, dtype=float)
    if p.kind is ProblemKind.EXTERIOR_DIRICHLET and model.log_centers.size > 1:
        real = real - basis._log_sum(z, model.log_coeffs, model.log_centers).real
    return real + 1j * basis.conjugate_on_boundary(model, z)


def solve(p: ProblemSpec, callback=None):
    """Run the pole-relocation iteration.

    Returns
    -------
    model : PotentialModel
        The iterate with the smallest ``Delta E``; only poles outside the
        solution domain are kept.
    poles : PoleSet
        The full pole set of that iterate.
    report : SolveReport
    callback : callable, optional
        Called as ``callback(iteration, model, rule, delta_e)`` after every
        residue solve.
    """
    t0 = time.perf_counter()
    b = p.boundary
    exterior = p.kind.exterior
    report = SolveReport(kind=p.kind.value)
    ndata = None
    centers = np.zeros(0, dtype=complex)
    if exterior:
        centers = default_log_centers(b) if p.log_centers is None else np.asarray(p.log_centers, dtype=complex)
    if p.kind is ProblemKind.EXTERIOR_NEUMANN:
        ndata = neumann_preprocess(p)
        centers = ndata.centers
    diam = b.diameter
    N = int(p.N)

    # initial poles
    if p.initial is not None:
        poles = PoleSet.classify(b, np.asarray(p.initial, dtype=complex), exterior)
    elif N == 0:
        poles = PoleSet(np.zeros(0, dtype=complex), (), exterior)
    else:
        M = b.n_sections
        ninf = max(2 * N + 2, math.ceil(3 * (2 * N + 1) / M))
        r0 = quadrature.build_boundary_rule(b, [], None, (), 1e-14, n_min=ninf, prune_poles=False)
        if p.kind is ProblemKind.EXTERIOR_NEUMANN:
            samples = 1j * ndata.F(b, r0.nodes)
        else:
            samples = p.data.evaluate(b, r0.nodes)
        poles, info = ratfit.initial_poles(b, r0, samples, N, exterior)
        if info["fallback"]:
            report.notes.append(f"initial fit short by {info['fallback']} poles; fallback placement used")
    ln_centers = centers if exterior else np.zeros(0, dtype=complex)

    best = None
    eps = quadrature.epsilon_from_error(None)
    hist: list[float] = []
    since_add = 0
    reason = "max_iter"
    for it in range(p.max_iter):
        rule = quadrature.build_boundary_rule(b, poles.poles, poles.usable, ln_centers, eps,
                                              n_min=p.n_min, prune_poles=p.prune,
                                              min_nodes=_min_nodes(p, poles, ln_centers))
        model, system, sol, target, fitted, de = _solve_residues(p, rule, poles, ln_centers, ndata)
        if not math.isfinite(de):
            raise FloatingPointError("non-finite Delta E")
        hist.append(de)
        since_add += 1
        rec = IterationRecord(it, de, poles.n_out, poles.n_in, rule.size, eps, "", sol.cond_estimate,
                              poles.poles.size)
        report.iterations.append(rec)
        if callback is not None:
            callback(it, model, rule, de)
        if best is None or de < best[0]:
            best = (de, model, poles, rule, it)
        if de <= p.tol:
            reason = "tolerance"
            break
        if it == p.max_iter - 1:
            break
        # relocation
        W = _w_hat(p, model, rule, target, fitted)
        fit = ratfit.relocate(ratfit.FitInput(rule.points, rule.weights, W, poles.poles, order=poles.poles.size))
        rec.method = fit.method
        if fit.stalled:
            report.notes.append(f"iteration {it}: relocation stalled")
            reason = "stalled"
            break
        new = _maybe_pair(fit.new_poles, diam)
        target_n = poles.poles.size
        if p.adaptive and since_add >= p.adaptive_K:
            last = np.array(hist[-p.adaptive_K:])
            if np.std(last) < np.mean(last) * p.adaptive_eps:
                extra = _adaptive_pole(p, model, rule, fitted, exterior, diam)
                if extra is not None:
                    new = np.concatenate([new, [extra]])
                    target_n += 1
                    since_add = 0
                    report.notes.append(f"iteration {it}: added pole at {extra:.6g}")
        newset, padded = _clean_poles(b, new, target_n, exterior, it)
        if padded:
            report.notes.append(f"iteration {it}: replaced {padded} unusable poles")
        motion = _pole_motion(poles.poles, newset.poles)
        poles = newset
        eps = quadrature.epsilon_from_error(de)
        if motion < 1e-12 * diam:
            reason = "poles_converged"
            break

    de, model, bpoles, rule, bit = best
    report.stop_reason = reason
    report.best_iteration = bit
    report.delta_e = de
    report.n_poles = bpoles.poles.size
    report.n_out = bpoles.n_out
    report.K = rule.size
    report.wall_time = time.perf_counter() - t0
    return model, bpoles, report


def _adaptive_pole(p: ProblemSpec, model, rule, fitted, exterior: bool, diam: float):
    """New pole mirrored across the boundary from the worst-fit testing point."""
    if p.kind is ProblemKind.EXTERIOR_NEUMANN:
        approx = basis.conjugate_on_boundary(model, rule.points) - model.v_consts[rule.contour_of_node]
    else:
        approx = basis.eval_potential(model, rule.points).real
    k = int(np.argmax(np.abs(approx - fitted)))
    b = p.boundary
    n = b.normal(np.array([rule.nodes[k]]))[0]
    direction = -n if exterior else n
    d = np.abs(rule.points - rule.points[k])
    d[k] = np.inf
    h = max(2.0 * float(np.min(d)), 1e-3 * diam)
    for _ in range(30):
        cand = rule.points[k] + h * direction
        ps = PoleSet.classify(b, [cand], exterior)
        if ps.usable[0]:
            return complex(cand)
        h *= 0.5
    return None


def dump_model_csv(model: PotentialModel, path) -> None:
    """Poles/residues and log terms as CSV rows ``kind,re,im,coef_re,coef_im``."""
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kind", "re", "im", "coef_re", "coef_im"])
        w.writerow(["constant", "", "", repr(float(model.a0)), "0.0"])
        for zp, a in zip(model.poles, model.residues):
            w.writerow(["pole", repr(float(zp.real)), repr(float(zp.imag)), repr(float(a.real)), repr(float(a.imag))])
        for c, A in zip(model.log_centers, model.log_coeffs):
            w.writerow(["log", repr(float(c.real)), repr(float(c.imag)), repr(float(A)), "0.0"])
        for j, v in enumerate(model.v_consts):
            w.writerow(["v", str(j), "", repr(float(v)), "0.0"])


def solve_with_poles(p: ProblemSpec, poles, epsilon: float = 1e-4):
    """One residue solve with fixed poles (no relocation).

    Returns ``(model, PoleSet, delta_e, rule, system)``.
    """
    b = p.boundary
    exterior = p.kind.exterior
    ps = poles if isinstance(poles, PoleSet) else PoleSet.classify(b, np.asarray(poles, dtype=complex), exterior)
    ndata = None
    centers = np.zeros(0, dtype=complex)
    if exterior:
        centers = default_log_centers(b) if p.log_centers is None else np.asarray(p.log_centers, dtype=complex)
    if p.kind is ProblemKind.EXTERIOR_NEUMANN:
        ndata = neumann_preprocess(p)
        centers = ndata.centers
    rule = quadrature.build_boundary_rule(b, ps.poles, ps.usable, centers, epsilon,
                                          n_min=p.n_min, prune_poles=p.prune,
                                          min_nodes=_min_nodes(p, ps, centers))
    model, system, sol, target, fitted, de = _solve_residues(p, rule, ps, centers, ndata)
    return model, ps, de, rule, system
