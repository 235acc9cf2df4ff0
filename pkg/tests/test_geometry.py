import json

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import chebyshev as C

from laplace_rf.gallery import circle, ellipse, lshape, trigpoly
from laplace_rf.geometry import (
    Boundary,
    DomainSide,
    RationalSection,
    boundary_from_dict,
    boundary_to_dict,
    breakpoints_by_arclength,
    ingest_samples,
    load_geometry,
    point_in_domain,
    section_shifted_roots,
    winding_numbers,
)


def _dense_winding(b, zp, n=200000):
    # polygonal angle sum; exact for the inscribed polygon
    z = b.dense(n) - zp
    return np.sum(np.angle(np.roll(z, -1) / z)) / (2 * np.pi)


def _eval_at(sec, alpha):
    lo, hi = sec.interval
    return sec.eval_local((2 * alpha - lo - hi) / (hi - lo))


def _conj_closed(r, tol):
    return np.all(np.min(np.abs(r[:, None] - np.conj(r)[None, :]), axis=1) <= tol)


# ingestion ---------------------------------------------------------------

def test_ingest_square_four_sections_closes():
    b = ingest_samples([[0, 1, 1 + 1j, 1j]])
    assert b.n_sections == 4
    for m in range(4):
        gap = abs(b.sections[m].eval_local(1.0) - b.sections[(m + 1) % 4].eval_local(-1.0))
        assert gap <= 1e-12
    assert all(sec.is_polynomial for sec in b.sections)


def test_ingest_circle_radial_deviation():
    pts = np.exp(2j * np.pi * np.arange(16) / 16)
    b = ingest_samples([pts])
    z = b.dense(20000)
    assert np.max(np.abs(np.abs(z) - 1)) < 1e-3


def test_ingest_too_few_points():
    with pytest.raises(ValueError, match="too few points"):
        ingest_samples([[0, 1, 1j]])


def test_ingest_duplicate_points():
    with pytest.raises(ValueError, match="duplicate"):
        ingest_samples([[0, 1, 1, 1 + 1j, 1j]])


def test_ingest_quintic():
    pts = np.exp(2j * np.pi * np.arange(24) / 24)
    b = ingest_samples([pts], smoothness="quintic")
    assert np.max(np.abs(np.abs(b.dense(5000)) - 1)) < 1e-4


# evaluation ---------------------------------------------------------------

def test_segment_midpoint():
    sec = RationalSection.segment(0, 1, (0.0, 0.25))
    assert sec.eval(0.125) == pytest.approx(0.5)


def test_eval_outside_unit_interval():
    with pytest.raises(ValueError, match="outside"):
        lshape().eval(1.5)


@pytest.mark.parametrize("make", [lshape, lambda: ellipse(1, 0.5), lambda: trigpoly(1.75, 2)])
def test_continuity_at_breakpoints(make):
    b = make()
    for m in range(b.n_sections):
        j = b.contour_map[m]
        nxt = [k for k in b.contour_sections(j) if k == m + 1] or [b.contour_sections(j)[0]]
        gap = abs(b.sections[m].eval_local(1.0) - b.sections[nxt[0]].eval_local(-1.0))
        assert gap <= b.closure_tol * max(b.contour_length(j), 1.0)


@given(st.floats(0.01, 0.99).filter(lambda s: abs(s - 0.5) > 1e-3))
def test_derivative_matches_central_difference(s):
    # both stencil points in one section; across a breakpoint only C1 holds
    b = ellipse(1.0, 0.5, 0.2 + 0.1j, 0.4)
    h = 1e-5
    fd = (b.eval(s + h) - b.eval(s - h)) / (2 * h)
    # O(h^2) truncation plus rounding of order eps/h
    assert abs(b.eval_deriv(s) - fd) <= 1e-7 * max(1.0, abs(fd))


# breakpoints ---------------------------------------------------------------

def test_breakpoints_equal_lengths():
    h = breakpoints_by_arclength([RationalSection.segment(0, 1), RationalSection.segment(1, 2)])
    assert h[1] == pytest.approx(0.5)


def test_breakpoints_proportional():
    h = breakpoints_by_arclength([RationalSection.segment(0, 1), RationalSection.segment(1, 4)])
    assert h[1] == pytest.approx(0.25)


def test_breakpoints_lshape():
    h = lshape().breakpoints
    np.testing.assert_allclose(np.diff(h), [0.25, 0.125, 0.125, 0.125, 0.125, 0.25], atol=1e-12)


def test_breakpoints_zero_length():
    with pytest.raises(ValueError, match="zero-length"):
        breakpoints_by_arclength([RationalSection(np.array([1.0 + 0j]), np.array([1.0]))])


def test_reparametrization_preserves_curve():
    b = ellipse(1.0, 0.5)
    secs = [[s for s in b.sections]]
    b2 = Boundary.from_contours(secs, breakpoints=[0.0, 0.3, 1.0])
    t = np.linspace(-1, 1, 11)
    for s1, s2 in zip(b.sections, b2.sections):
        np.testing.assert_array_equal(s1.eval_local(t), s2.eval_local(t))


# shifted roots ---------------------------------------------------------------

def test_shifted_roots_linear():
    sec = RationalSection.segment(0, 1, (0.0, 1.0))
    r = section_shifted_roots(sec, 0.5 + 0.3j)
    assert r.size == 1
    assert abs(r[0] - (0.5 + 0.3j)) < 1e-15


@given(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_shifted_roots_residual_quadratic(zp):
    sec = RationalSection.from_monomial([0.3, 1.0 + 0.5j, 0.7 - 0.2j], [1.0], (0.0, 1.0))
    r = section_shifted_roots(sec, zp)
    assert r.size == 2
    for a in r[np.isfinite(r)]:
        assert abs(zp - _eval_at(sec, a)) <= 1e-9 * (1 + abs(zp))


def test_shifted_roots_rational_residual():
    # the half-circle map has a common factor in p and q, so test z' q - p itself
    sec = circle().sections[0]
    lo, hi = sec.interval
    for zp in [0.3 + 0.2j, 2.0, -1.5 + 4j]:
        r = section_shifted_roots(sec, zp)
        assert r.size == 2
        t = (2 * r - lo - hi) / (hi - lo)
        res = zp * C.chebval(t, sec.den) - C.chebval(t, sec.num)
        assert np.all(np.abs(res) <= 1e-12 * (1 + abs(zp)))


def test_shifted_roots_rational_ellipse():
    sec = ellipse(1.0, 0.5, 0.1, 0.3).sections[1]
    for zp in [0.3 + 0.2j, 2.0, -1.5 + 4j]:
        for a in section_shifted_roots(sec, zp):
            assert abs(zp - _eval_at(sec, a)) <= 1e-9 * (1 + abs(zp))


def test_shifted_roots_far_point_approach_denominator_zeros():
    sec = circle().sections[0]
    zp = 1e8
    t = (section_shifted_roots(sec, zp) - sum(sec.interval) / 2) * 2 / sec.width
    q = C.chebroots(sec.den)
    d = np.min(np.abs(t[:, None] - q[None, :]), axis=1)
    assert np.all(d < 1e-3)


def test_shifted_roots_conjugate_pairs():
    # real coefficients and real z': roots are real or come in conjugate pairs
    sec = RationalSection(np.array([0.2, 0.5, 0.3, 0.1]), np.array([1.0]))
    r = section_shifted_roots(sec, 2.0)
    assert _conj_closed(r, 1e-12)


# point location ---------------------------------------------------------------

def test_circle_center_inside():
    assert point_in_domain(circle(), 0.0) is DomainSide.INSIDE


def test_circle_far_outside():
    assert point_in_domain(circle(), 2.0) is DomainSide.OUTSIDE


def test_circle_just_outside():
    b = circle()
    zp = 1 + 1e-8
    assert round(_dense_winding(b, zp)) == 0
    assert point_in_domain(b, zp) is DomainSide.OUTSIDE


def test_point_on_boundary():
    assert point_in_domain(lshape(), 1.0 + 0j) is DomainSide.ON_BOUNDARY


def test_non_finite_point():
    with pytest.raises(ValueError, match="finite"):
        point_in_domain(circle(), complex(np.inf, 0))


@given(st.floats(0.3, 3.0), st.floats(0.3, 3.0), st.floats(0, np.pi),
       st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))
def test_convex_centroid_inside(a, bb, rot, c):
    b = ellipse(a, bb, c, rot)
    assert point_in_domain(b, b.centroid(0)) is DomainSide.INSIDE


@given(st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_winding_matches_dense_oracle(zp):
    b = lshape()
    w = winding_numbers(b, zp)
    if np.all(np.isfinite(w)) and np.min(np.abs(b.dense(4000) - zp)) > 1e-2:
        assert abs(w[0].real - round(_dense_winding(b, zp, 20000))) < 1e-8


def test_orientation_normalized():
    # clockwise polygon input comes out counterclockwise
    b = Boundary.polygon([0, 1j, 1 + 1j, 1])
    assert b.area(0) > 0


# files ---------------------------------------------------------------

def test_geometry_roundtrip(tmp_path):
    b = trigpoly(1.5, 3)
    p = tmp_path / "g.json"
    p.write_text(json.dumps(boundary_to_dict(b)))
    b2 = load_geometry(p)
    s = np.linspace(0, 1, 101)
    np.testing.assert_allclose(b2.eval(s), b.eval(s), atol=1e-14)


def test_geometry_from_points_and_polygon():
    doc = {"contours": [{"polygon": [[0, 0], [1, 0], [1, 1], [0, 1]]},
                        {"points": [[3 + np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 20, endpoint=False)]}]}
    b = boundary_from_dict(doc)
    assert b.n_contours == 2
    assert point_in_domain(b, 0.5 + 0.5j) is DomainSide.INSIDE
    assert point_in_domain(b, 3.0) is DomainSide.INSIDE
    assert point_in_domain(b, 2.0 + 2j) is DomainSide.OUTSIDE


def test_missing_geometry(tmp_path):
    with pytest.raises(FileNotFoundError, match="geometry not found"):
        load_geometry(tmp_path / "nope.json")


def test_denominator_vanishing_rejected():
    with pytest.raises(ValueError, match="denominator"):
        RationalSection(np.array([1.0]), np.array([0.0, 1.0]))
