"""Named test geometries and boundary data."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as C

from .geometry import Boundary, RationalSection

# z(t) = (1 + i t)^2 / (1 + t^2) traces the right half of the unit circle for t in [-1, 1]
_HALF_NUM = np.array([0.5, 2j, -0.5])
_HALF_DEN = np.array([1.5, 0.0, 0.5])


def ellipse_sections(center: complex = 0.0, a: float = 1.0, b: float = 1.0, rotation: float = 0.0):
    """Exact two-section rational parametrization of an ellipse.

    ``a`` and ``b`` are the semi-axes along the rotated x and y directions.
    Uses ``a Re z + i b Im z = (a+b)/2 z + (a-b)/2 conj(z)`` on the unit circle.
    """
    rot = np.exp(1j * rotation)
    secs = []
    for sgn in (1.0, -1.0):
        num = sgn * _HALF_NUM
        num = rot * (0.5 * (a + b) * num + 0.5 * (a - b) * np.conj(num)) + center * _HALF_DEN
        secs.append(RationalSection(num, _HALF_DEN.astype(complex)))
    return secs


def ellipse(a: float = 1.0, b: float = 0.5, center: complex = 0.0, rotation: float = 0.0) -> Boundary:
    return Boundary.from_contours([ellipse_sections(center, a, b, rotation)])


def circle(R: float = 1.0, center: complex = 0.0) -> Boundary:
    return ellipse(R, R, center)


def _chebfit_periodic_section(fn, a: float, b: float, tol: float = 1e-14, max_deg: int = 1024):
    """Chebyshev coefficients of ``fn`` on ``[a, b]`` with the negligible tail chopped.

    ``tol`` sits just above the rounding plateau of the coefficients; a
    smaller value never triggers the chop and runs to ``max_deg``.
    """
    n = 16
    while True:
        c = C.chebinterpolate(lambda t: fn(a + 0.5 * (t + 1) * (b - a)), n)
        big = np.nonzero(np.abs(c) > tol * np.max(np.abs(c)))[0]
        last = int(big[-1]) if big.size else 0
        if last < n - 8 or n >= max_deg:
            return c[:last + 1]
        n *= 2


def trigpoly_point(s, gamma: float, nu: int):
    s = np.asarray(s, dtype=float)
    return (1.0 / gamma + (1.0 / gamma - 1.0) * np.cos(2 * np.pi * nu * s)) * np.exp(2j * np.pi * s)


def trigpoly(gamma: float = 1.75, nu: int = 2, n_sections: int = 4) -> Boundary:
    """Curve ``[1/gamma + (1/gamma - 1) cos(2 pi nu s)] exp(2 pi i s)``, Chebyshev-interpolated.

    The interpolants are exact to rounding; each section is a polynomial in
    its local parameter.
    """
    if not 1.0 < gamma < 2.0:
        raise ValueError("trigpoly needs 1 < gamma < 2")
    if nu < 1:
        raise ValueError("trigpoly needs nu >= 1")
    h = np.linspace(0.0, 1.0, n_sections + 1)
    secs = []
    for m in range(n_sections):
        c = _chebfit_periodic_section(lambda s: trigpoly_point(s, gamma, nu), h[m], h[m + 1])
        secs.append(RationalSection(c, np.array([1.0 + 0j]), (h[m], h[m + 1])))
    # close the seam exactly
    return Boundary(tuple(secs), np.zeros(n_sections, dtype=int), closure_tol=1e-12)


LSHAPE_VERTICES = (0, 2, 2 + 1j, 1 + 1j, 1 + 2j, 2j)
LSHAPE_CORNER = 1 + 1j


def lshape() -> Boundary:
    return Boundary.polygon(LSHAPE_VERTICES)


def two_circles(d_over_R: float = 0.1, R: float = 1.0) -> Boundary:
    """Two circles of radius ``R`` on the imaginary axis with gap ``d``."""
    if d_over_R <= 0:
        raise ValueError("gap must be positive")
    off = R * (1.0 + 0.5 * d_over_R)
    return Boundary.from_contours([ellipse_sections(1j * off, R, R), ellipse_sections(-1j * off, R, R)])


def two_circle_log_coefficient(d_over_R: float) -> float:
    """``|A|`` for potentials +-1 on two equal cylinders: ``1 / arccosh(1 + d / 2R)``."""
    return 1.0 / math.acosh(1.0 + 0.5 * d_over_R)


def random_ellipses(n: int = 100, seed: int = 0, r0: float = 1.0, gap: float = 0.05,
                    max_ecc: float = 0.9, density: float = 0.35, max_tries: int = 200000):
    """Non-overlapping random ellipses by rejection sampling.

    Semi-major axes are uniform in ``[0.5, 1.5] r0``, eccentricity in
    ``[0, max_ecc]``, orientation uniform.  Candidates whose bounding circles
    come closer than ``gap * r0`` to an accepted one are rejected.  The
    square side is chosen so that the bounding disks cover ``density`` of it.
    Returns ``(Boundary, params)`` with ``params`` rows ``(cx, cy, a, b, rot)``.
    """
    rng = np.random.default_rng(seed)
    side = math.sqrt(n * math.pi * r0 ** 2 / density)
    acc = []
    tries = 0
    while len(acc) < n:
        tries += 1
        if tries > max_tries:
            raise RuntimeError("could not place all ellipses; lower the density")
        a = r0 * rng.uniform(0.5, 1.5)
        e = rng.uniform(0.0, max_ecc)
        b = a * math.sqrt(1.0 - e * e)
        rot = rng.uniform(0.0, math.pi)
        c = complex(*rng.uniform(0.0, side, 2))
        if all(abs(c - complex(p[0], p[1])) > a + p[2] + gap * r0 for p in acc):
            acc.append((c.real, c.imag, a, b, rot))
    params = np.array(acc)
    contours = [ellipse_sections(complex(p[0], p[1]), p[2], p[3], p[4]) for p in params]
    return Boundary.from_contours(contours), params


# ----------------------------------------------------------------------------
# boundary data
# ----------------------------------------------------------------------------

def pole_data(poles, residues) -> Callable:
    """``Re sum a_k / (z'_k - z)``."""
    poles = np.asarray(poles, dtype=complex)
    residues = np.asarray(residues, dtype=complex)

    def f(z):
        z = np.asarray(z, dtype=complex)
        return np.real((residues / (poles - z[..., None])).sum(axis=-1))

    f.poles, f.residues = poles, residues
    return f


def ring_poles(N0: int, R: float, center: complex = 0.0):
    """``N0`` poles at ``R exp(i pi (2k+1)/N0)``, residues ``k/N0`` for ``k = 1..N0``."""
    k = np.arange(1, N0 + 1)
    return center + R * np.exp(1j * np.pi * (2 * k + 1) / N0), k / N0


def monopole(z0: complex = 0.0) -> Callable:
    def f(z):
        return np.log(np.abs(np.asarray(z) - z0))
    f.center = z0
    return f


def essential(x0: float = 1.01) -> Callable:
    def f(z):
        with np.errstate(over="ignore"):
            return np.real(np.exp(1.0 / (np.asarray(z) - x0)))
    f.x0 = x0
    return f


def uniform_flow(z, normal, contour):
    """Normal velocity data ``-cos(theta)`` of unit flow along x around impenetrable obstacles."""
    return -np.real(normal)


def plusminus(values=(1.0, -1.0)) -> Callable:
    vals = np.asarray(values, dtype=float)

    def f(z, normal, contour):
        return vals[np.asarray(contour)]
    return f


def constant(c: float = 1.0) -> Callable:
    def f(z):
        return np.full(np.shape(z), float(c))
    return f


# ----------------------------------------------------------------------------
# registry
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class GalleryItem:
    name: str
    kind: str  # "geometry" or "data"
    build: Callable
    params: tuple
    doc: str
    needs_normal: bool = False
    defaults: dict = field(default_factory=dict)


def _geom(name, build, params, doc):
    return GalleryItem(name, "geometry", build, params, doc)


GEOMETRIES = {
    "ellipse": _geom("ellipse", lambda a=1.0, b=0.5: ellipse(a, b), ("a", "b"),
                     "ellipse with semi-axes a (x) and b (y)"),
    "circle": _geom("circle", lambda R=1.0: circle(R), ("R",), "circle of radius R"),
    "trigpoly": _geom("trigpoly", lambda gamma=1.75, nu=2: trigpoly(gamma, int(nu)), ("gamma", "nu"),
                      "[1/gamma + (1/gamma-1) cos(2 pi nu s)] exp(2 pi i s)"),
    "lshape": _geom("lshape", lambda: lshape(), (), "L-shaped hexagon with reentrant corner at 1+1i"),
    "two-circles": _geom("two-circles", lambda d=0.1: two_circles(d), ("d",),
                         "unit circles separated by gap d on the imaginary axis"),
    "random-ellipses": _geom("random-ellipses", lambda n=100, seed=0: random_ellipses(int(n), int(seed))[0],
                             ("n", "seed"), "n non-overlapping random ellipses"),
}

DATA = {
    "poles": GalleryItem("poles", "data", lambda N0=6, R=1.5: pole_data(*ring_poles(int(N0), R)), ("N0", "R"),
                         "Re sum (k/N0)/(z'_k - z), z'_k = R exp(i pi (2k+1)/N0)"),
    "monopole": GalleryItem("monopole", "data", lambda x=0.0, y=0.0: monopole(complex(x, y)), ("x", "y"),
                            "log|z - z0|"),
    "essential": GalleryItem("essential", "data", lambda x0=1.01: essential(x0), ("x0",),
                             "Re exp(1/(z - x0))"),
    "uniform-flow": GalleryItem("uniform-flow", "data", lambda: uniform_flow, (),
                                "-cos(theta) normal data for unit flow along x", needs_normal=True),
    "plusminus": GalleryItem("plusminus", "data", lambda: plusminus(), (),
                             "+1 on the first contour, -1 on the second", needs_normal=True),
    "constant": GalleryItem("constant", "data", lambda c=1.0: constant(c), ("c",), "constant value c"),
}


_CALL = re.compile(r"^\s*([A-Za-z][\w-]*)\s*(?:\((.*)\))?\s*$")


def parse_name(spec: str) -> tuple[str, list[float]]:
    """Split ``"trigpoly(1.75, 2)"`` into ``("trigpoly", [1.75, 2.0])``."""
    m = _CALL.match(spec)
    if not m:
        raise ValueError(f"bad gallery name: {spec!r}")
    args = [float(a) for a in m.group(2).split(",")] if m.group(2) and m.group(2).strip() else []
    return m.group(1), args


def _build(table, spec, params=None):
    name, args = parse_name(spec) if isinstance(spec, str) else (spec, [])
    if name not in table:
        raise KeyError(f"unknown gallery item: {name}")
    item = table[name]
    if len(args) > len(item.params):
        raise ValueError(f"{name} takes at most {len(item.params)} parameters")
    kw = dict(zip(item.params, args))
    kw.update(params or {})
    unknown = set(kw) - set(item.params)
    if unknown:
        raise ValueError(f"unknown parameters for {name}: {sorted(unknown)}")
    return item, item.build(**kw)


def gallery(geometry: str, data: str | None = None, params: dict | None = None,
            data_params: dict | None = None):
    """Build a named geometry and optional data function.

    Returns ``(Boundary, BoundaryData or None)``.
    """
    from .solver import BoundaryData
    _, b = _build(GEOMETRIES, geometry, params)
    if data is None:
        return b, None
    item, fn = _build(DATA, data, data_params)
    return b, BoundaryData(fn, uses_normal=item.needs_normal)


def list_items() -> list[str]:
    out = []
    for table in (GEOMETRIES, DATA):
        for it in table.values():
            sig = f"{it.name}({', '.join(it.params)})" if it.params else it.name
            out.append(f"{it.kind:8s} {sig:28s} {it.doc}")
    return out
