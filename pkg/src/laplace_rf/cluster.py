"""Clustering of many contours into local problems with buffer curves, then one global solve."""

from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import solver as S
from .basis import PoleSet
from .geometry import Boundary, DomainSide, classify

log = logging.getLogger(__name__)

THREADS_ENV = "LAPLACE_RF_THREADS"


@dataclass
class KMeansResult:
    assignment: np.ndarray
    centers: np.ndarray
    objective: list
    iterations: int


def _sse(x, centers, assign) -> float:
    return float(np.sum(np.abs(x - centers[assign]) ** 2))


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300) -> KMeansResult:
    """Lloyd's algorithm on complex points with k-means++ seeding.

    An empty cluster is reseeded at the point farthest from its center.
    ``objective`` records the within-cluster sum of squares after every
    assignment step.
    """
    x = np.asarray(points, dtype=complex).ravel()
    n = x.size
    if not 1 <= k <= n:
        raise ValueError("need 1 <= k <= number of points")
    rng = np.random.default_rng(seed)
    centers = np.empty(k, dtype=complex)
    centers[0] = x[rng.integers(n)]
    d2 = np.abs(x - centers[0]) ** 2
    for j in range(1, k):
        tot = d2.sum()
        idx = int(rng.choice(n, p=d2 / tot)) if tot > 0 else int(rng.integers(n))
        centers[j] = x[idx]
        d2 = np.minimum(d2, np.abs(x - centers[j]) ** 2)
    assign = np.full(n, -1)
    objective = []
    it = 0
    for it in range(1, max_iter + 1):
        new = np.argmin(np.abs(x[:, None] - centers[None, :]), axis=1)
        # reseed empty clusters at the worst-served point
        for j in range(k):
            if not np.any(new == j):
                far = int(np.argmax(np.abs(x - centers[new])))
                centers[j] = x[far]
                new[far] = j
        objective.append(_sse(x, centers, new))
        if np.array_equal(new, assign):
            break
        assign = new
        centers = np.array([x[assign == j].mean() for j in range(k)])
    return KMeansResult(assign, centers, objective, it)


@dataclass
class ClusterPlan:
    k: int
    assignment: np.ndarray
    centroids: np.ndarray
    curve_centroids: np.ndarray
    buffer_radius: np.ndarray
    buffers: list = field(default_factory=list)

    def members(self, c: int) -> np.ndarray:
        return np.nonzero(self.assignment == c)[0]

    def local_curves(self, c: int) -> np.ndarray:
        return np.concatenate([self.members(c), np.asarray(sorted(self.buffers[c]), dtype=int)])

    def to_csv(self, path) -> None:
        import csv
        owners = {j: [] for j in range(self.assignment.size)}
        for c, buf in enumerate(self.buffers):
            for j in buf:
                owners[j].append(c)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["curve", "cluster", "is_buffer_of"])
            for j, c in enumerate(self.assignment):
                w.writerow([j, int(c), " ".join(str(x) for x in owners[j])])


def buffer_radii(centroids) -> np.ndarray:
    """Twice the distance from each centroid to the nearest other one."""
    c = np.asarray(centroids, dtype=complex)
    if c.size < 2:
        return np.full(c.size, np.inf)
    D = np.abs(c[:, None] - c[None, :])
    np.fill_diagonal(D, np.inf)
    return 2.0 * D.min(axis=1)


def plan_with_buffers(curves, k: int, seed: int = 0, max_iter: int = 300) -> ClusterPlan:
    """Cluster curves by centroid and attach buffer curves.

    ``curves`` is a :class:`Boundary` or an array of curve centroids.  A
    non-member curve ``j`` buffers cluster ``c`` when some member ``i`` has
    ``|c_j - c_i| <= min(r_i, r_j)``.  Using the smaller of the two radii
    keeps an isolated curve from pulling in, or being pulled into, distant
    clusters.
    """
    if isinstance(curves, Boundary):
        cents = np.array([curves.centroid(j) for j in range(curves.n_contours)])
    else:
        cents = np.asarray(curves, dtype=complex)
    km = kmeans(cents, k, seed, max_iter)
    radii = buffer_radii(cents)
    D = np.abs(cents[:, None] - cents[None, :])
    buffers = []
    for c in range(k):
        mem = km.assignment == c
        near = np.any(D[:, mem] <= np.minimum(radii[mem][None, :], radii[:, None]), axis=1) & ~mem
        buffers.append(set(int(j) for j in np.nonzero(near)[0]))
    return ClusterPlan(k, km.assignment, km.centers, cents, radii, buffers)


@dataclass(frozen=True)
class _SubsetData:
    """Boundary data for a sub-boundary; contour indices are mapped back to the full set."""

    data: object
    parent: Boundary
    sub: Boundary
    curves: np.ndarray

    def evaluate(self, b: Boundary, s) -> np.ndarray:
        d = self.data
        if isinstance(d, S.TabulatedData):
            raise TypeError("tabulated data is not supported in clustered solves")
        s = np.asarray(s, dtype=float)
        z = b.eval(s)
        if getattr(d, "uses_normal", False):
            return np.asarray(d.func(z, b.normal(s), self.curves[b.contour_of(s)]), dtype=float)
        return np.asarray(d.func(z), dtype=float)


@dataclass
class LargeReport:
    delta_e: float
    local_delta_e: list
    n_poles: int
    matrix_shape: tuple
    plan: ClusterPlan
    wall_time: float
    local_reports: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "delta_e": self.delta_e,
            "local_delta_e": list(self.local_delta_e),
            "n_poles": self.n_poles,
            "matrix_shape": list(self.matrix_shape),
            "k": self.plan.k,
            "wall_time": self.wall_time,
        }


def _thread_count(threads: int | None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV)
    return max(1, int(env)) if env else 1


def solve_large(p: S.ProblemSpec, k: int, poles_per_curve: int = 3, tol: float = 1e-2,
                max_iter: int = 100, seed: int | None = None, threads: int | None = None):
    """Local pole optimization per cluster followed by one global least-squares solve.

    Returns ``(model, PoleSet, LargeReport)``.
    """
    if p.kind is S.ProblemKind.INTERIOR_DIRICHLET:
        raise ValueError("clustered solves need an exterior problem")
    t0 = time.perf_counter()
    b = p.boundary
    seed = p.seed if seed is None else seed
    plan = plan_with_buffers(b, k, seed)

    def local(c: int):
        curves = plan.local_curves(c)
        sub = b.subset(curves)
        lp = S.ProblemSpec(p.kind, sub, _SubsetData(p.data, b, sub, curves),
                           N=poles_per_curve * curves.size, tol=tol, max_iter=max_iter,
                           seed=seed, n_min=p.n_min, require_compatible=False, prune=p.prune)
        try:
            model, ps, rep = S.solve(lp)
        except Exception as exc:
            raise RuntimeError(f"cluster {c} failed: {exc}") from exc
        # keep poles inside member curves only
        sides, owners = classify(sub, ps.poles)
        nmem = plan.members(c).size
        keep = np.array([s is DomainSide.INSIDE and o < nmem for s, o in zip(sides, owners)], dtype=bool)
        return ps.poles[keep], rep

    n_threads = _thread_count(threads)
    if n_threads > 1:
        with ThreadPoolExecutor(n_threads) as ex:
            results = list(ex.map(local, range(k)))
    else:
        results = [local(c) for c in range(k)]
    poles = np.concatenate([r[0] for r in results]) if results else np.zeros(0, dtype=complex)
    model, ps, de, rule, system = S.solve_with_poles(p, poles)
    rep = LargeReport(de, [r[1].delta_e for r in results], ps.n_out, system.A.shape, plan,
                      time.perf_counter() - t0, [r[1] for r in results])
    return model, ps, rep
