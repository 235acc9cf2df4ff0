"""Piecewise-rational boundary curves.

A :class:`Boundary` is a list of :class:`RationalSection` objects laid out on
a global parameter ``s`` in ``[0, 1]``.  Each section stores its numerator
and denominator as Chebyshev coefficients in a *local* variable
``t`` in ``[-1, 1]``; the interval ``[h_m, h_{m+1}]`` only places the section
on the global axis, so re-spacing the breakpoints never changes the curve.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
from numpy.polynomial import chebyshev as C
from scipy import integrate
from scipy.interpolate import make_interp_spline

TWO_PI = 2.0 * np.pi


class DomainSide(enum.Enum):
    INSIDE = "inside"
    OUTSIDE = "outside"
    ON_BOUNDARY = "on_boundary"


def _as_complex_coeffs(c) -> np.ndarray:
    out = []
    for v in c:
        if isinstance(v, (list, tuple)):
            out.append(complex(v[0], v[1]))
        else:
            out.append(complex(v))
    return np.array(out, dtype=complex)


def _trim(c, tol=0.0) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    if c.size == 0:
        return np.zeros(1, dtype=complex)
    scale = np.max(np.abs(c))
    k = c.size
    while k > 1 and abs(c[k - 1]) <= tol * scale:
        k -= 1
    return c[:k].copy()


@dataclass(frozen=True)
class RationalSection:
    """One piece ``r(t) = p(t) / q(t)`` of a boundary curve."""

    num: np.ndarray
    den: np.ndarray
    interval: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        object.__setattr__(self, "num", _trim(self.num))
        object.__setattr__(self, "den", _trim(self.den))
        a, b = map(float, self.interval)
        if not b > a:
            raise ValueError(f"section interval must have positive width, got {self.interval}")
        object.__setattr__(self, "interval", (a, b))
        if np.all(self.den == 0):
            raise ValueError("zero denominator")
        if self.den.size > 1:
            rq = C.chebroots(self.den)
            if np.any((np.abs(rq.imag) < 1e-14) & (np.abs(rq.real) <= 1.0)):
                raise ValueError("section denominator vanishes on its interval")

    @classmethod
    def from_monomial(cls, num, den=(1.0,), interval=(0.0, 1.0)) -> "RationalSection":
        """Build from ascending monomial coefficients in the local ``t``."""
        return cls(C.poly2cheb(np.asarray(num, dtype=complex)),
                   C.poly2cheb(np.asarray(den, dtype=complex)), interval)

    @classmethod
    def segment(cls, a: complex, b: complex, interval=(0.0, 1.0)) -> "RationalSection":
        """Straight segment from ``a`` (t=-1) to ``b`` (t=+1)."""
        return cls(np.array([(a + b) / 2, (b - a) / 2]), np.array([1.0]), interval)

    @property
    def width(self) -> float:
        return self.interval[1] - self.interval[0]

    @property
    def degree(self) -> int:
        return max(self.num.size, self.den.size) - 1

    @property
    def is_polynomial(self) -> bool:
        return self.den.size == 1

    def to_local(self, s):
        a, b = self.interval
        return (2.0 * np.asarray(s, dtype=float) - a - b) / (b - a)

    def to_global(self, t):
        a, b = self.interval
        return a + 0.5 * (np.asarray(t) + 1.0) * (b - a)

    def eval_local(self, t):
        return C.chebval(t, self.num) / C.chebval(t, self.den)

    def deriv_local(self, t):
        p, q = C.chebval(t, self.num), C.chebval(t, self.den)
        dp = C.chebval(t, C.chebder(self.num)) if self.num.size > 1 else 0.0 * p
        dq = C.chebval(t, C.chebder(self.den)) if self.den.size > 1 else 0.0 * q
        return (dp * q - p * dq) / (q * q)

    def second_deriv_local(self, t):
        h = 1e-4
        return (self.deriv_local(np.minimum(t + h, 1.0)) - self.deriv_local(np.maximum(t - h, -1.0))) / (
            np.minimum(t + h, 1.0) - np.maximum(t - h, -1.0))

    def eval(self, s):
        return self.eval_local(self.to_local(s))

    def eval_deriv(self, s):
        return self.deriv_local(self.to_local(s)) * (2.0 / self.width)

    def arclength(self) -> float:
        val, _ = integrate.quad(lambda t: abs(self.deriv_local(t)), -1.0, 1.0, limit=200, epsabs=0, epsrel=1e-12)
        return float(val)

    def reversed(self) -> "RationalSection":
        sign = (-1.0) ** np.arange(max(self.num.size, self.den.size))
        return RationalSection(self.num * sign[: self.num.size], self.den * sign[: self.den.size], self.interval)

    def with_interval(self, a: float, b: float) -> "RationalSection":
        return replace(self, interval=(float(a), float(b)))

    def shifted(self, offset: complex) -> "RationalSection":
        """Translate the curve by ``offset``."""
        num = self.num.copy()
        num = C.chebadd(num, offset * self.den)
        return RationalSection(num, self.den, self.interval)


def breakpoints_by_arclength(sections) -> np.ndarray:
    """Breakpoints ``h_0 = 0 < ... < h_M = 1`` with widths proportional to length."""
    lengths = np.array([sec.arclength() for sec in sections])
    if np.any(lengths <= 0.0):
        raise ValueError("zero-length section")
    h = np.concatenate([[0.0], np.cumsum(lengths)])
    h /= h[-1]
    h[-1] = 1.0
    return h


@dataclass(frozen=True)
class Boundary:
    """Closed contours made of rational sections on a shared ``[0, 1]`` axis.

    All contours are counterclockwise.  ``contour_map[m]`` is the contour of
    section ``m``; sections of one contour are consecutive and ordered along
    the curve.
    """

    sections: tuple[RationalSection, ...]
    contour_map: np.ndarray
    closure_tol: float = 1e-10
    orientation: tuple[int, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "sections", tuple(self.sections))
        cmap = np.asarray(self.contour_map, dtype=int)
        object.__setattr__(self, "contour_map", cmap)
        if not self.orientation:
            object.__setattr__(self, "orientation", tuple([1] * (int(cmap.max()) + 1)))
        h = self.breakpoints
        if abs(h[0]) > 1e-14 or abs(h[-1] - 1.0) > 1e-14:
            raise ValueError("breakpoints must start at 0 and end at 1")
        if np.any(np.diff(h) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        for m in range(len(self.sections) - 1):
            if abs(self.sections[m].interval[1] - self.sections[m + 1].interval[0]) > 1e-14:
                raise ValueError("section intervals must tile [0, 1]")
        if np.any(np.diff(cmap) < 0) or np.any(np.diff(cmap) > 1) or cmap[0] != 0:
            raise ValueError("sections of a contour must be consecutive")
        for j in range(self.n_contours):
            idx = self.contour_sections(j)
            length = sum(self.sections[m].arclength() for m in idx)
            tol = self.closure_tol * max(length, 1.0)
            for a, b in zip(idx, list(idx[1:]) + [idx[0]]):
                gap = abs(self.sections[a].eval_local(1.0) - self.sections[b].eval_local(-1.0))
                if gap > tol:
                    raise ValueError(f"contour {j} does not close (gap {gap:.3e} between sections {a} and {b})")

    # construction -------------------------------------------------------
    @classmethod
    def from_contours(cls, contours, closure_tol: float = 1e-10, breakpoints=None) -> "Boundary":
        """Assemble from a list of per-contour section lists.

        Contours are reoriented counterclockwise.  Unless ``breakpoints``
        are given, interval widths follow arc length.
        """
        secs, cmap = [], []
        for j, contour in enumerate(contours):
            contour = list(contour)
            if _signed_area(contour) < 0:
                contour = [s.reversed() for s in reversed(contour)]
            secs.extend(contour)
            cmap.extend([j] * len(contour))
        h = breakpoints_by_arclength(secs) if breakpoints is None else np.asarray(breakpoints, float)
        secs = [s.with_interval(h[m], h[m + 1]) for m, s in enumerate(secs)]
        return cls(tuple(secs), np.array(cmap), closure_tol)

    @classmethod
    def polygon(cls, vertices, closure_tol: float = 1e-10) -> "Boundary":
        return cls.polygons([vertices], closure_tol)

    @classmethod
    def polygons(cls, polys, closure_tol: float = 1e-10) -> "Boundary":
        contours = []
        for verts in polys:
            v = [complex(*p) if isinstance(p, (list, tuple)) else complex(p) for p in verts]
            contours.append([RationalSection.segment(v[k], v[(k + 1) % len(v)]) for k in range(len(v))])
        return cls.from_contours(contours, closure_tol)

    # basic queries ------------------------------------------------------
    @property
    def breakpoints(self) -> np.ndarray:
        return np.array([s.interval[0] for s in self.sections] + [self.sections[-1].interval[1]])

    @property
    def n_sections(self) -> int:
        return len(self.sections)

    @property
    def n_contours(self) -> int:
        return int(self.contour_map.max()) + 1

    def contour_sections(self, j: int) -> list[int]:
        return [int(m) for m in np.flatnonzero(self.contour_map == j)]

    def section_index(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if np.any((s < 0.0) | (s > 1.0)):
            raise ValueError("s outside [0, 1]")
        idx = np.searchsorted(self.breakpoints, s, side="right") - 1
        return np.clip(idx, 0, self.n_sections - 1)

    def contour_of(self, s) -> np.ndarray:
        return self.contour_map[self.section_index(s)]

    def _apply(self, s, method):
        s = np.asarray(s, dtype=float)
        idx = self.section_index(s)
        out = np.empty(s.shape, dtype=complex)
        for m in np.unique(idx):
            mask = idx == m
            out[mask] = getattr(self.sections[m], method)(s[mask])
        return out

    def eval(self, s):
        return self._apply(s, "eval")

    def eval_deriv(self, s):
        return self._apply(s, "eval_deriv")

    def normal(self, s):
        """Unit normal pointing out of the enclosed region of each contour."""
        d = self.eval_deriv(s)
        return -1j * d / np.abs(d)

    def contour_length(self, j: int) -> float:
        return sum(self.sections[m].arclength() for m in self.contour_sections(j))

    @property
    def length(self) -> float:
        return sum(s.arclength() for s in self.sections)

    def dense(self, n: int, contour: int | None = None) -> np.ndarray:
        """Points at ``n`` midpoints of a uniform grid in ``s``."""
        s = (np.arange(n) + 0.5) / n
        if contour is not None:
            s = s[self.contour_of(s) == contour]
        return self.eval(s)

    def centroid(self, j: int = 0, n: int = 4000) -> complex:
        """Area centroid of contour ``j`` (Green's theorem on dense samples)."""
        pts = []
        for m in self.contour_sections(j):
            t = np.cos(np.pi * (np.arange(n // max(1, len(self.contour_sections(j)))) + 0.5)
                       / (n // max(1, len(self.contour_sections(j)))))[::-1]
            pts.append(self.sections[m].eval_local(t))
        z = np.concatenate(pts)
        x, y = z.real, z.imag
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        area = cross.sum() / 2
        cx = ((x + xn) * cross).sum() / (6 * area)
        cy = ((y + yn) * cross).sum() / (6 * area)
        return complex(cx, cy)

    def area(self, j: int = 0) -> float:
        return _signed_area([self.sections[m] for m in self.contour_sections(j)])

    @property
    def diameter(self) -> float:
        z = self.dense(2000)
        hull = z[np.unique(np.concatenate([np.argsort(z.real)[[0, -1]], np.argsort(z.imag)[[0, -1]]]))]
        # cheap bound: max pairwise distance among a subsample
        sub = z[:: max(1, z.size // 400)]
        return float(max(np.max(np.abs(sub[:, None] - sub[None, :])), np.max(np.abs(hull[:, None] - hull[None, :]))))

    def subset(self, contours) -> "Boundary":
        """Boundary restricted to the given contours (re-spaced by arc length)."""
        groups = [[self.sections[m] for m in self.contour_sections(j)] for j in contours]
        return Boundary.from_contours(groups, self.closure_tol)


def _signed_area(sections) -> float:
    total = 0.0
    for sec in sections:
        def integrand(t):
            z = sec.eval_local(t)
            dz = sec.deriv_local(t)
            return (z.real * dz.imag - z.imag * dz.real) / 2
        val, _ = integrate.quad(integrand, -1.0, 1.0, limit=200)
        total += val
    return float(total)


# ----------------------------------------------------------------------------
# roots of z' q(t) - p(t)
# ----------------------------------------------------------------------------

def _shifted_coeffs(sec: RationalSection, zp: np.ndarray) -> np.ndarray:
    """Chebyshev coefficients of ``z' q - p`` for every ``z'`` (rows)."""
    L = sec.degree + 1
    num = np.zeros(L, dtype=complex)
    den = np.zeros(L, dtype=complex)
    num[: sec.num.size] = sec.num
    den[: sec.den.size] = sec.den
    return zp[:, None] * den[None, :] - num[None, :]


def shifted_roots_local(sec: RationalSection, zp) -> np.ndarray:
    """Zeros in the local variable ``t`` of ``z' q(t) - p(t)``.

    Returns an array of shape ``(len(zp), L)``; missing roots (degree drop)
    are reported as ``inf``.
    """
    zp = np.atleast_1d(np.asarray(zp, dtype=complex))
    L = sec.degree
    out = np.full((zp.size, L), np.inf + 0j, dtype=complex)
    c = _shifted_coeffs(sec, zp)
    scale = np.max(np.abs(c), axis=1)
    tiny = 1e-14
    if L == 1:
        a1, a0 = c[:, 1], c[:, 0]
        ok = np.abs(a1) > tiny * scale
        out[ok, 0] = -a0[ok] / a1[ok]
        return out
    if L == 2:
        # c0 T0 + c1 T1 + c2 T2 = 2 c2 t^2 + c1 t + (c0 - c2)
        a, b, cc = 2 * c[:, 2], c[:, 1], c[:, 0] - c[:, 2]
        quad = np.abs(a) > tiny * scale
        disc = np.sqrt(b * b - 4 * a * cc)
        sgn = np.where((np.conj(b) * disc).real >= 0, 1.0, -1.0)
        q = -0.5 * (b + sgn * disc)
        with np.errstate(divide="ignore", invalid="ignore"):
            r1 = q / a
            r2 = cc / q
        both = quad & (q != 0)
        out[both, 0], out[both, 1] = r1[both], r2[both]
        zero_q = quad & (q == 0)
        out[zero_q, :] = 0.0
        lin = ~quad & (np.abs(b) > tiny * scale)
        out[lin, 0] = -cc[lin] / b[lin]
        return out
    # only z' q can cancel the leading term, so polynomial sections never drop degree
    cut = 0.0 if sec.is_polynomial else tiny
    for i in range(zp.size):
        ci = _trim(c[i], cut)
        if ci.size > 1:
            r = C.chebroots(ci)
            out[i, : r.size] = r
    return out


def section_shifted_roots(sec: RationalSection, zp: complex) -> np.ndarray:
    """Zeros ``alpha`` (global parameter ``s``) of ``z' q_m(s) - p_m(s)``.

    The list always has ``L_m`` entries; roots lost to a degree drop are
    returned as ``inf``.
    """
    t = shifted_roots_local(sec, [zp])[0]
    return np.where(np.isfinite(t), sec.to_global(t), np.inf)


# ----------------------------------------------------------------------------
# inside / outside
# ----------------------------------------------------------------------------

def _log_segment(r):
    """Integral of dt / (t - r) over [-1, 1] for roots r off the segment."""
    return np.log(1.0 - r) - np.log(-1.0 - r)


def winding_numbers(b: Boundary, zp, on_tol: float = 1e-13) -> np.ndarray:
    """Per-contour Cauchy integrals ``(1/2 pi i) oint dz / (z - z')``.

    Evaluated exactly by partial fractions of ``r'(t) / (r(t) - z')`` on each
    section.  A root lying on a section's parameter interval gives ``nan``.
    Accepts a scalar or an array of points; the result has shape
    ``(n_points, n_contours)`` for array input.
    """
    scalar = np.ndim(zp) == 0
    zp = np.atleast_1d(np.asarray(zp, dtype=complex))
    total = np.zeros((zp.size, b.n_contours), dtype=complex)
    for m, sec in enumerate(b.sections):
        roots = shifted_roots_local(sec, zp)
        fin = np.isfinite(roots)
        r = np.where(fin, roots, 0.0)
        on = np.any(fin & (np.abs(r.imag) <= on_tol) & (np.abs(r.real) <= 1.0), axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(fin, _log_segment(r), 0.0).sum(axis=1)
        if sec.den.size > 1:
            val = val - np.sum(_log_segment(C.chebroots(sec.den)))
        val = np.where(on, np.nan, val)
        total[:, b.contour_map[m]] += val
    total /= 2j * np.pi
    return total[0] if scalar else total


def point_in_domain(b: Boundary, zp: complex, tol: float = 1e-6) -> DomainSide:
    """Classify ``z'`` relative to the region enclosed by the contours.

    ``tol`` is measured on the winding number (so the integral tolerance is
    ``2 pi tol``).  Points inside any contour are ``INSIDE``.
    """
    side, _ = locate(b, zp, tol)
    return side


def locate(b: Boundary, zp: complex, tol: float = 1e-6) -> tuple[DomainSide, int]:
    """Like :func:`point_in_domain` but also return the enclosing contour (or -1)."""
    if not np.isfinite(complex(zp)):
        raise ValueError("point must be finite")
    sides, owners = classify(b, [zp], tol)
    return sides[0], int(owners[0])


def classify(b: Boundary, points, tol: float = 1e-6) -> tuple[list[DomainSide], np.ndarray]:
    """Vectorized :func:`locate` over many points."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    if pts.size == 0:
        return [], np.zeros(0, dtype=int)
    w = winding_numbers(b, pts)
    orient = np.asarray(b.orientation, dtype=float)
    sides, owners = [], np.full(pts.size, -1, dtype=int)
    for i in range(pts.size):
        wi = w[i]
        if np.any(~np.isfinite(wi)):
            sides.append(DomainSide.ON_BOUNDARY)
            continue
        hit = np.abs(wi - orient) <= tol
        zero = np.abs(wi) <= tol
        if np.all(zero):
            sides.append(DomainSide.OUTSIDE)
        elif np.all(hit | zero) and hit.sum() == 1:
            sides.append(DomainSide.INSIDE)
            owners[i] = int(np.flatnonzero(hit)[0])
        else:
            sides.append(DomainSide.ON_BOUNDARY)
            owners[i] = int(np.argmax(np.abs(wi)))
    return sides, owners


def inside_mask(b: Boundary, points) -> np.ndarray:
    """Vectorized inside test for many field points (winding by dense sampling).

    Used for masking plot grids, where an exact partial-fraction evaluation
    per point is unnecessary.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    out = np.zeros(pts.shape, dtype=bool)
    n = 4096
    for j in range(b.n_contours):
        z = b.dense(n * max(1, b.n_contours), contour=j)
        dz = np.roll(z, -1) - z
        zm = z + 0.5 * dz
        w = np.zeros(pts.shape)
        for k in range(0, pts.size, 2048):
            p = pts.ravel()[k:k + 2048]
            w.ravel()[k:k + 2048] = np.imag(np.sum(dz[None, :] / (zm[None, :] - p[:, None]), axis=1)) / (2 * np.pi)
        out |= w > 0.5
    return out


# ----------------------------------------------------------------------------
# ingestion
# ----------------------------------------------------------------------------

def ingest_samples(points_per_contour, smoothness: str = "cubic", closure_tol: float = 1e-10) -> Boundary:
    """Fit periodic splines through sampled contours.

    Each contour is a list of complex points (first point not repeated).  A
    cubic or quintic periodic spline in cumulative chord length is built and
    every spline span becomes one polynomial section.  Self-intersections are
    not detected.
    """
    k = {"cubic": 3, "quintic": 5}.get(smoothness)
    if k is None:
        raise ValueError(f"unknown smoothness {smoothness!r}")
    contours = []
    for pts in points_per_contour:
        z = np.array([complex(*p) if isinstance(p, (list, tuple)) else complex(p) for p in pts])
        if z.size < 4:
            raise ValueError("too few points (need at least 4 per contour)")
        if abs(z[0] - z[-1]) == 0.0:
            z = z[:-1]
            if z.size < 4:
                raise ValueError("too few points (need at least 4 per contour)")
        chords = np.abs(np.diff(np.concatenate([z, z[:1]])))
        if np.any(chords == 0.0):
            raise ValueError("duplicate consecutive points")
        u = np.concatenate([[0.0], np.cumsum(chords)])
        zz = np.concatenate([z, z[:1]])
        spl = make_interp_spline(u, np.c_[zz.real, zz.imag], k=k, bc_type="periodic")
        secs = []
        for i in range(z.size):
            a, b_ = u[i], u[i + 1]

            def f(t, a=a, b_=b_):
                xy = spl(a + 0.5 * (np.asarray(t) + 1) * (b_ - a))
                return xy[..., 0] + 1j * xy[..., 1]

            tk = np.cos(np.pi * (np.arange(k + 1) + 0.5) / (k + 1))
            coef = C.chebfit(tk, f(tk), k)
            # exact endpoint interpolation keeps the pieces glued to rounding
            coef = _trim(coef)
            secs.append(RationalSection(coef, np.array([1.0])))
        contours.append(secs)
    return Boundary.from_contours(contours, closure_tol)


def _section_from_json(d) -> RationalSection:
    basis = d.get("basis", "monomial")
    num = _as_complex_coeffs(d["num"])
    den = _as_complex_coeffs(d.get("den", [1.0]))
    interval = tuple(d.get("interval", (0.0, 1.0)))
    if basis == "monomial":
        return RationalSection.from_monomial(num, den, interval)
    if basis == "chebyshev":
        return RationalSection(num, den, interval)
    raise ValueError(f"unknown coefficient basis {basis!r}")


def boundary_from_dict(doc) -> Boundary:
    """Build a boundary from the JSON geometry document.

    ``{"contours": [c, ...]}`` where each contour is one of
    ``{"points": [[x, y], ...], "smoothness": "cubic"}``,
    ``{"polygon": [[x, y], ...]}`` or
    ``{"sections": [{"num": [...], "den": [...], "interval": [a, b],
    "basis": "monomial"}, ...]}``.  Section coefficients are in the local
    variable ``t`` in ``[-1, 1]``; complex values are ``[re, im]`` pairs.
    Intervals are honoured only if every section supplies one.
    """
    contours, explicit = [], True
    for c in doc["contours"]:
        if "points" in c:
            sub = ingest_samples([c["points"]], c.get("smoothness", "cubic"))
            contours.append(list(sub.sections))
            explicit = False
        elif "polygon" in c:
            v = [complex(*p) for p in c["polygon"]]
            contours.append([RationalSection.segment(v[k], v[(k + 1) % len(v)]) for k in range(len(v))])
            explicit = False
        elif "sections" in c:
            contours.append([_section_from_json(s) for s in c["sections"]])
            explicit = explicit and all("interval" in s for s in c["sections"])
        else:
            raise ValueError("contour needs 'points', 'polygon' or 'sections'")
    tol = float(doc.get("closure_tol", 1e-10))
    if explicit:
        secs = [s for c in contours for s in c]
        h = np.array([s.interval[0] for s in secs] + [secs[-1].interval[1]])
        return Boundary.from_contours(contours, tol, breakpoints=h)
    return Boundary.from_contours(contours, tol)


def load_geometry(path) -> Boundary:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"geometry not found: {path}")
    return boundary_from_dict(json.loads(path.read_text()))


def boundary_to_dict(b: Boundary) -> dict:
    contours = []
    for j in range(b.n_contours):
        secs = []
        for m in b.contour_sections(j):
            s = b.sections[m]
            secs.append({
                "basis": "chebyshev",
                "num": [[v.real, v.imag] for v in s.num],
                "den": [[v.real, v.imag] for v in s.den],
                "interval": list(s.interval),
            })
        contours.append({"sections": secs})
    return {"contours": contours, "closure_tol": b.closure_tol}
