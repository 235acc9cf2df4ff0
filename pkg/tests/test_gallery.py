import math

import numpy as np
import pytest

from laplace_rf import gallery as G
from laplace_rf.geometry import DomainSide, point_in_domain


def test_trigpoly_at_zero():
    b, _ = G.gallery("trigpoly(1.75, 6)")
    assert abs(b.eval(0.0) - (2 / 1.75 - 1)) <= 1e-14


@pytest.mark.parametrize("gamma,nu", [(1.1, 2), (1.75, 6), (1.9, 10)])
def test_trigpoly_matches_formula(gamma, nu):
    b = G.trigpoly(gamma, nu)
    s = np.linspace(0, 1, 1001, endpoint=False)
    exact = (1 / gamma + (1 / gamma - 1) * np.cos(2 * np.pi * nu * s)) * np.exp(2j * np.pi * s)
    assert np.max(np.abs(b.eval(s) - exact)) <= 1e-13
    # interpolants stop at the rounding plateau instead of the degree cap
    assert max(sec.degree for sec in b.sections) < 64


def test_two_circles_gap():
    b, _ = G.gallery("two-circles(0.1)")
    z0, z1 = b.dense(4000, contour=0), b.dense(4000, contour=1)
    gap = np.min(np.abs(z0[:, None] - z1[None, :]))
    assert abs(gap - 0.1) <= 1e-5


def test_two_circle_log_coefficient():
    assert G.two_circle_log_coefficient(0.1) == pytest.approx(1 / math.acosh(1.05), rel=1e-15)
    with pytest.raises(ValueError):
        G.two_circles(0.0)


def test_essential_value():
    f = G.essential(1.01)
    assert f(np.array([1.0]))[0] == pytest.approx(math.exp(-100), rel=1e-12)


def test_pole_data_formula():
    poles, res = G.ring_poles(6, 1.5)
    assert np.allclose(np.abs(poles), 1.5)
    assert np.allclose(res, np.arange(1, 7) / 6)
    f = G.pole_data(poles, res)
    z = 0.3 + 0.1j
    assert f(np.array([z]))[0] == pytest.approx(np.real(np.sum(res / (poles - z))), rel=1e-14)


def test_lshape_corner_and_area():
    b = G.lshape()
    assert b.area() == pytest.approx(3.0, rel=1e-12)
    assert point_in_domain(b, 0.5 + 0.5j) is DomainSide.INSIDE
    assert point_in_domain(b, 1.5 + 1.5j) is DomainSide.OUTSIDE


def test_parse_name():
    assert G.parse_name("trigpoly(1.75, 2)") == ("trigpoly", [1.75, 2.0])
    assert G.parse_name("lshape") == ("lshape", [])
    with pytest.raises(ValueError):
        G.parse_name("bad name(")


def test_unknown_items():
    with pytest.raises(KeyError):
        G.gallery("hexagon")
    with pytest.raises(KeyError):
        G.gallery("ellipse", "wobbly")
    with pytest.raises(ValueError):
        G.gallery("circle(1, 2)")
    with pytest.raises(ValueError):
        G.gallery("circle", params={"radius": 2})


def test_gallery_data_flags():
    _, d = G.gallery("two-circles", "plusminus")
    assert d.uses_normal
    _, d = G.gallery("ellipse", "monopole", data_params={"x": 0.1})
    assert not d.uses_normal


def test_list_items_covers_registry():
    lines = G.list_items()
    assert len(lines) == len(G.GEOMETRIES) + len(G.DATA)
    assert any(line.split()[1].startswith("random-ellipses") for line in lines)


def test_random_ellipses_non_overlapping():
    b, params = G.random_ellipses(30, seed=4)
    assert b.n_contours == 30
    c = params[:, 0] + 1j * params[:, 1]
    D = np.abs(c[:, None] - c[None, :])
    R = params[:, 2][:, None] + params[:, 2][None, :]
    np.fill_diagonal(D, np.inf)
    assert np.all(D > R)
    assert np.all(params[:, 3] <= params[:, 2])


def test_random_ellipses_seeded():
    _, p1 = G.random_ellipses(10, seed=7)
    _, p2 = G.random_ellipses(10, seed=7)
    _, p3 = G.random_ellipses(10, seed=8)
    assert np.array_equal(p1, p2)
    assert not np.array_equal(p1, p3)
