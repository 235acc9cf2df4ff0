import numpy as np
import pytest
from hypothesis import given, strategies as st

from laplace_rf.basis import PoleSet
from laplace_rf.gallery import circle, ellipse, pole_data, ring_poles
from laplace_rf.quadrature import build_boundary_rule
from laplace_rf.ratfit import FitInput, arnoldi, initial_poles, irf_step, relocate, vf_step


def _match(found, true):
    found = np.asarray(found)
    return max(np.min(np.abs(found - t)) for t in np.atleast_1d(true))


def _rational(poles, res, const=0.0):
    poles, res = np.asarray(poles, dtype=complex), np.asarray(res, dtype=complex)
    return lambda z: const + (res / (poles - np.asarray(z)[..., None])).sum(-1)


def _input(b, start, W, order=None):
    rule = build_boundary_rule(b, start, epsilon=1e-14)
    return FitInput(rule.points, rule.weights, W(rule.points), start, order)


def test_vf_exact_single_pole():
    W = lambda z: 1 / (2 - z) + 5
    r = vf_step(_input(circle(), np.array([3.0 + 1j]), W))
    assert r.method == "VF" and not r.use_irf
    assert _match(r.new_poles, 2.0) <= 1e-10


def test_irf_exact_single_pole():
    W = lambda z: 1 / (2 - z) + 5
    r = irf_step(_input(circle(), np.array([3.0 + 1j]), W))
    assert _match(r.new_poles, 2.0) <= 1e-10


def test_constant_data_no_poles():
    inp = _input(circle(), np.array([3.0, -2.5]), lambda z: np.full(z.shape, 2.0))
    assert vf_step(inp).new_poles.size == 0
    assert irf_step(inp).new_poles.size == 0


def test_vf_coincident_poles_signal_irf():
    inp = _input(circle(), np.array([3.0, 3.0 + 1e-13]), lambda z: 1 / (2 - z))
    assert vf_step(inp).use_irf


def test_irf_three_poles_random_start():
    true = np.array([1.6 + 0.3j, -1.4 - 0.8j, 0.2 + 1.9j])
    W = _rational(true, [1.0, 0.5 - 0.2j, -0.7j], 0.3)
    rng = np.random.default_rng(0)
    start = 3 * np.exp(2j * np.pi * rng.random(3))
    r = irf_step(_input(circle(), start, W))
    assert _match(r.new_poles, true) <= 1e-8


def test_arnoldi_orthonormal():
    rng = np.random.default_rng(1)
    z = np.exp(2j * np.pi * rng.random(200))
    d = rng.standard_normal(200) + 1j * rng.standard_normal(200)
    V, H = arnoldi(z, d, 20)
    assert np.linalg.norm(V.conj().T @ V - np.eye(V.shape[1])) <= 1e-12
    np.testing.assert_allclose(z[:, None] * V[:, :-1], V @ H, atol=1e-12)


def test_relocate_paths():
    W = lambda z: 1 / (2 - z) + 1 / (-2.5 + 1j - z)
    sep = relocate(_input(circle(), np.array([3.0 + 1j, -3.0]), W))
    assert sep.method == "VF"
    clus = relocate(_input(circle(), np.array([3.0, 3.0 + 1e-13]), W))
    assert clus.method == "IRF"


def test_vf_irf_agree_on_exact_data():
    true = np.array([1.6 + 0.3j, -1.4 - 0.8j])
    W = _rational(true, [1.0, 0.5], 0.1)
    inp = _input(ellipse(1, 0.5), np.array([2.5 + 1j, -2.2 + 0.3j]), W)
    a, b = vf_step(inp).new_poles, irf_step(inp).new_poles
    assert _match(a, b) <= 1e-8 and _match(b, a) <= 1e-8


@pytest.mark.parametrize("step", [vf_step, irf_step])
def test_exact_data_fixed_point(step):
    true = np.array([1.6 + 0.3j, -1.4 - 0.8j, 0.2 + 1.9j])
    W = _rational(true, [1.0, 0.5 - 0.2j, -0.7j], 0.3)
    b = ellipse(1, 0.5)
    r1 = step(_input(b, np.array([2.5 + 1j, -2.2 + 0.3j, 1.0 - 2.0j]), W))
    assert _match(r1.new_poles, true) <= 1e-8
    r2 = step(_input(b, r1.new_poles, W))
    assert _match(r2.new_poles, r1.new_poles) <= 1e-10


def test_conjugate_closure_real_data():
    # real data on a conjugate-symmetric curve: Re of a real rational function
    zp, res = ring_poles(4, 1.6)
    f = pole_data(np.concatenate([zp, np.conj(zp)]), np.concatenate([res, np.conj(res)]))
    b = ellipse(1.0, 0.5)
    start = np.array([2.0 + 1j, 2.0 - 1j, -2.2 + 0.5j, -2.2 - 0.5j])
    rule = build_boundary_rule(b, start, epsilon=1e-14)
    W = f(rule.points) + 0j
    r = relocate(FitInput(rule.points, rule.weights, W, start))
    p = r.new_poles
    assert np.all(np.min(np.abs(p[:, None] - np.conj(p)[None, :]), axis=1) <= 1e-9 * np.max(np.abs(p)))


@given(st.floats(-10, 10).filter(lambda c: abs(c) > 1e-3))
def test_scale_invariance(c):
    true = np.array([1.6 + 0.3j, -1.4 - 0.8j])
    W = _rational(true, [1.0, 0.5], 0.1)
    inp = _input(ellipse(1, 0.5), np.array([2.5 + 1j, -2.2 + 0.3j]), W)
    inp2 = FitInput(inp.points, inp.weights, c * inp.samples, inp.poles)
    a, b = vf_step(inp).new_poles, vf_step(inp2).new_poles
    assert _match(a, b) <= 1e-10


def test_fitinput_too_few_points():
    with pytest.raises(ValueError, match="too few"):
        FitInput(np.zeros(3), np.ones(3), np.zeros(3), np.array([1.0, 2.0]))


# initial guess ---------------------------------------------------------------

def _initial(b, f, N, exterior=False):
    rule = build_boundary_rule(b, [], prune_poles=False, n_min=max(2 * N + 2, 3 * (2 * N + 1) // b.n_sections + 1))
    return initial_poles(b, rule, f(rule.points), N, exterior)


def test_initial_disk_reflection():
    f = lambda z: np.real(1 / (1.5 - z))
    ps, info = _initial(circle(), f, 1)
    assert info["fallback"] == 0
    assert abs(ps.poles[0] - 1.5) <= 1e-8
    # the 2N fit also sees the reflected pole
    b = circle()
    rule = build_boundary_rule(b, [], prune_poles=False, n_min=6)
    r = irf_step(FitInput(rule.points, rule.weights, f(rule.points) + 0j, np.zeros(0), order=2))
    assert _match(r.new_poles, [1.5, 1 / 1.5]) <= 1e-8


def test_initial_zero_data_fallback():
    ps, info = _initial(circle(), lambda z: np.zeros(z.shape), 3)
    assert info["fallback"] == 3
    assert ps.n_out == 3


def test_initial_ellipse_six_poles():
    zp, res = ring_poles(6, 1.5)
    f = pole_data(zp, res)
    b = ellipse(1.0, 0.5)
    ps, _ = _initial(b, f, 7)
    assert len(ps) == 7
    assert ps.n_out >= 6


def test_initial_exterior_uses_inside():
    b = circle()
    f = lambda z: np.real(1 / (0.3 - z))
    ps, _ = _initial(b, f, 1, exterior=True)
    assert isinstance(ps, PoleSet) and ps.exterior
    assert abs(ps.poles[0] - 0.3) <= 1e-8
