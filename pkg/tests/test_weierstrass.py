import math

import numpy as np
import pytest
from scipy.integrate import quad

from kmrstrip.curve import CurvePoint
from kmrstrip.exceptions import ConfigurationError, DomainError, SingularPointError
from kmrstrip.weierstrass import (BETA, END_NAMES, GAUSS_INFINITY, SurfaceParams, end_loop,
                                  end_points, flux_along, flux_around_end, forms_density,
                                  gamma_path, gamma_tilde_path, gauss_map, gauss_of_u,
                                  integrand, integrate_position, normal_of_u, normalize_alpha,
                                  normalize_mu, period_around_end, period_T, periods_report,
                                  position, reduce_a, vanishing_period_check)

from .conftest import GRID

PARAM_SETS = [(0.3, 0.0), (0.7, 0.5), (1.1, 1.0), (1.5, math.pi / 2), (0.9, -0.7),
              (0.05, 1.2), (1.55, 0.01)]


# ---------------------------------------------------------------- parameters


def test_surface_params_fields():
    sp = SurfaceParams(math.pi / 3, math.pi / 2)
    assert sp.beta == BETA == math.pi / 2
    assert sp.lam == pytest.approx(math.sqrt(3))
    assert sp.mu == pytest.approx(4 / (math.sqrt(3) * math.pi), rel=1e-14)
    assert round(sp.mu, 4) == 0.7351


def test_alpha_seam_identified():
    assert normalize_alpha(-math.pi / 2) == math.pi / 2
    assert SurfaceParams(0.8, -math.pi / 2).alpha == math.pi / 2


@pytest.mark.parametrize("alpha", [2.0, -1.6, math.nan])
def test_alpha_domain(alpha):
    with pytest.raises(DomainError):
        SurfaceParams(0.8, alpha)


def test_theta_domain():
    with pytest.raises(DomainError):
        SurfaceParams(math.pi / 2, 0.3)


def test_params_frozen():
    sp = SurfaceParams(0.8, 0.3)
    with pytest.raises(AttributeError):
        sp.theta = 0.2


def test_mu_at_right_angle():
    for t in (0.3, 1.0, 1.4):
        assert normalize_mu(t, math.pi / 2) == pytest.approx(2 / (math.pi * math.sin(t)))


def test_mu_closed_form():
    t, a = 0.9, 0.4
    want = 2 * math.sqrt(1 - math.sin(t) ** 2 * math.cos(a) ** 2) / (math.pi * math.sin(t))
    assert normalize_mu(t, a) == pytest.approx(want, rel=1e-15)


# ---------------------------------------------------------------- Gauss map


def test_gauss_at_origin():
    for a in (0.0, 0.4, -1.0, math.pi / 2):
        sp = SurfaceParams(0.9, a)
        assert gauss_map(CurvePoint(0j, 1 + 0j), sp) == pytest.approx(1j)


def test_gauss_zero_and_pole():
    sp = SurfaceParams(0.9, 0.4)
    e = np.exp(-1j * sp.alpha)
    assert abs(gauss_map(CurvePoint(-1j * e, 0j), sp)) < 1e-14
    assert gauss_map(CurvePoint(1j * e, 0j), sp) == GAUSS_INFINITY


def test_gauss_of_u_matches_pointwise():
    sp = SurfaceParams(0.9, 0.4)
    for u in (0.2 + 0.3j, -0.4 + 1.1j, 0.6 - 0.2j):
        assert gauss_of_u(u, sp) == pytest.approx(gauss_map(sp.chart.point(u), sp), rel=1e-12)


def test_normal_is_inverse_stereographic_image():
    sp = SurfaceParams(1.1, -0.3)
    u = np.array([0.1 + 0.4j, -0.5 + 1.3j, 0.3 + 2.0j])
    N = normal_of_u(u, sp)
    g = gauss_of_u(u, sp)
    r2 = np.abs(g) ** 2
    want = np.stack([2 * g.real, 2 * g.imag, r2 - 1], axis=-1) / (r2 + 1)[:, None]
    assert np.abs(N - want).max() < 1e-10
    assert np.abs(np.linalg.norm(N, axis=-1) - 1).max() < 1e-12


# ---------------------------------------------------------------- forms


def test_third_form_is_constant_mu():
    sp = SurfaceParams(0.7, 0.5)
    u = np.array([0.1 + 0.2j, -0.3 + 1.0j, 0.5 + 2.0j])
    assert np.allclose(forms_density(u, sp)[2], sp.mu, atol=0)


def test_integrand_at_origin():
    sp = SurfaceParams(0.7, 0.5)
    v = integrand(CurvePoint(0j, 1 + 0j), sp)
    assert v[0] == pytest.approx(-1j * sp.mu)
    assert v[2] == pytest.approx(sp.mu)
    assert v[0].real == pytest.approx(0.0, abs=1e-15)


def test_integrand_agrees_with_chart_densities():
    sp = SurfaceParams(0.7, 0.5)
    u = 0.3 + 0.7j
    assert np.allclose(integrand(sp.chart.point(u), sp), forms_density(u, sp), atol=1e-12)


def test_integrand_rejects_end():
    sp = SurfaceParams(0.7, 0.5)
    ends = end_points(sp)
    with pytest.raises(SingularPointError):
        integrand(ends.A, sp)
    with pytest.raises(SingularPointError):
        integrand(CurvePoint(-1j * np.exp(-1j * sp.alpha), 0j), sp)


def test_density_bounded_at_branch_point():
    # oracle: samples along a ray into D'' settle to a finite limit
    sp = SurfaceParams(0.7, 0.5)
    d = np.geomspace(1e-2, 1e-8, 7)
    vals = forms_density(sp.anchor - 1j * d, sp)
    assert np.all(np.isfinite(vals))
    steps = np.abs(np.diff(vals, axis=1)).max(axis=0)
    assert np.all(np.diff(steps) < 0)
    limit = forms_density(np.array([sp.anchor]), sp)[:, 0]
    assert np.abs(vals[:, -1] - limit).max() < 1e-6


# ---------------------------------------------------------------- integration


def test_empty_path():
    sp = SurfaceParams(0.7, 0.5)
    assert np.array_equal(integrate_position([], sp), np.zeros(3))
    assert np.array_equal(integrate_position([0.3j], sp), np.zeros(3))


def test_vertical_segment_is_level():
    sp = SurfaceParams(0.7, 0.5)
    X = integrate_position([0.1 + 0.2j, 0.1 + 1.4j], sp)
    assert X[2] == 0.0


def test_height_is_linear_in_chart():
    sp = SurfaceParams(0.7, 0.5)
    path = [0.1 + 0.2j, 0.35 + 0.9j, -0.2 + 1.3j]
    X = integrate_position(path, sp)
    assert X[2] == pytest.approx(sp.mu * (path[-1] - path[0]).real, abs=1e-12)
    Y = integrate_position(path, sp, conjugate=True)
    assert Y[2] == pytest.approx(sp.mu * (path[-1] - path[0]).imag, abs=1e-12)


def test_concatenation():
    sp = SurfaceParams(1.1, -0.4)
    p1 = [0.1 + 0.2j, 0.35 + 0.9j]
    p2 = [0.35 + 0.9j, -0.2 + 1.3j, 0.0 + 2.0j]
    whole = integrate_position(p1 + p2[1:], sp)
    assert np.abs(whole - integrate_position(p1, sp) - integrate_position(p2, sp)).max() < 1e-10


def test_integration_against_scipy_quad():
    # oracle: scipy's QUADPACK on the same densities along one segment
    sp = SurfaceParams(0.6, 0.8)
    a, b = 0.05 + 0.3j, -0.4 + 1.7j
    X = integrate_position([a, b], sp)
    for k in range(2):
        ref = quad(lambda t: (forms_density(a + t * (b - a), sp)[k] * (b - a)).real, 0, 1,
                   epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        assert X[k] == pytest.approx(ref, abs=1e-10)


def test_path_through_end_is_rejected():
    sp = SurfaceParams(0.7, 0.5)
    uA = end_points(sp).u_A
    with pytest.raises(SingularPointError):
        integrate_position([uA + 0.3, uA - 0.3], sp)


def test_position_anchor_is_origin():
    sp = SurfaceParams(0.7, 0.5)
    assert np.array_equal(position(sp.anchor, sp), np.zeros(3))


# ---------------------------------------------------------------- ends


def test_end_points_on_curve_and_gauss_values():
    for t, a in PARAM_SETS:
        sp = SurfaceParams(t, a)
        ends = end_points(sp)
        e = np.exp(-1j * sp.alpha)
        for name in END_NAMES:
            z, _ = sp.chart.zw(ends.coord(name))
            want = 1j * e if name in ("A", "App") else -1j * e
            assert abs(z - want) < 1e-9
        assert ends.side == {"A": "left", "Ap": "right", "App": "right", "Appp": "left"}


def test_period_sign_table():
    for t, a in PARAM_SETS:
        sp = SurfaceParams(t, a)
        per = {n: period_around_end(n, sp) for n in END_NAMES}
        assert np.abs(per["A"] - [2, 0, 0]).max() < 1e-8
        assert np.abs(per["Ap"] - per["A"]).max() < 1e-8
        assert np.abs(per["App"] + per["A"]).max() < 1e-8
        assert np.abs(per["Appp"] + per["A"]).max() < 1e-8


def test_flux_sign_table():
    for t, a in PARAM_SETS:
        sp = SurfaceParams(t, a)
        fl = {n: flux_around_end(n, sp) for n in END_NAMES}
        assert np.abs(fl["A"] - [0, -2, 0]).max() < 1e-8
        assert np.abs(fl["Ap"] + fl["A"]).max() < 1e-8
        assert np.abs(fl["App"] + fl["A"]).max() < 1e-8
        assert np.abs(fl["Appp"] - fl["A"]).max() < 1e-8


def test_period_closed_form_on_grid():
    # closed form Per_A = (mu pi sin(theta) / sqrt(1 - sin^2 cos^2), 0, 0)
    for t, a in GRID:
        sp = SurfaceParams(t, a)
        closed = sp.mu * math.pi * math.sin(t) / math.sqrt(1 - math.sin(t) ** 2 * math.cos(a) ** 2)
        num = period_around_end("A", sp)[0]
        assert abs(num - closed) / closed < 1e-8


def test_period_independent_of_loop_radius():
    sp = SurfaceParams(0.7, 0.5)
    r1 = period_around_end("A", sp, radius=1.1 * sp.eps_end)
    r2 = period_around_end("A", sp, radius=1.9 * sp.eps_end)
    assert np.abs(r1 - r2).max() < 1e-10


def test_loop_radius_out_of_range():
    sp = SurfaceParams(0.7, 0.5)
    with pytest.raises(ConfigurationError):
        end_loop("A", sp, radius=0.5 * sp.eps_end)
    with pytest.raises(ConfigurationError):
        end_loop("A", sp, radius=3 * sp.eps_end)


def test_null_homotopic_loop():
    sp = SurfaceParams(0.7, 0.5)
    c = 0.2 + 1.2j
    loop = c + 0.3 * np.exp(1j * np.linspace(0, 2 * np.pi, 65))
    loop[-1] = loop[0]
    assert np.abs(integrate_position(loop, sp)).max() < 1e-10
    assert np.abs(flux_along(loop, sp)).max() < 1e-10


# ---------------------------------------------------------------- periods


def test_flux_along_gamma_tilde():
    for t, a in PARAM_SETS:
        sp = SurfaceParams(t, a)
        want = [0, 2, 0] if sp.alpha >= 0 else [0, -2, 0]
        assert np.abs(flux_along(gamma_tilde_path(sp), sp) - want).max() < 1e-8


def test_period_T_structure():
    for t, a in PARAM_SETS:
        sp = SurfaceParams(t, a)
        T = period_T(sp)
        assert abs(T[1]) <= 1e-8
        assert abs(T[2]) > 0
        assert T[0] ** 2 + T[2] ** 2 > 4


def test_period_T_invariant_under_refinement():
    for t, a in PARAM_SETS[:4]:
        sp = SurfaceParams(t, a)
        assert np.abs(period_T(sp) - period_T(sp, refine=5)).max() < 1e-8


def test_period_T_homology_invariance():
    # a vertically shifted copy of the cycle, still clear of the ends
    sp = SurfaceParams(0.9, 0.6)
    pts = np.array(gamma_tilde_path(sp))
    shifted = pts + 0.05j * sp.omega_v
    assert np.abs(integrate_position(shifted, sp) - period_T(sp)).max() < 1e-8


def test_period_T_against_scipy_quad():
    # oracle: QUADPACK along each leg of the same waypoint path
    sp = SurfaceParams(1.0, 0.7)
    pts = gamma_tilde_path(sp)
    T = np.zeros(3)
    for a, b in zip(pts[:-1], pts[1:]):
        for k in range(2):
            T[k] += quad(lambda t: (forms_density(a + t * (b - a), sp)[k] * (b - a)).real,
                         0, 1, epsabs=1e-13, epsrel=1e-13, limit=400)[0]
        T[2] += sp.mu * (b - a).real
    assert np.abs(T - period_T(sp)).max() < 1e-9


@pytest.mark.parametrize("theta", [0.5, 1.0])
def test_a_at_symmetric_alphas(theta):
    # oracle: numeric T1 at alpha = 0 and pi/2 lands on {0, 1/2}; frozen as
    # a(alpha = 0) = 1/2 and a(alpha = pi/2) = 0
    a0 = reduce_a(period_T(SurfaceParams(theta, 0.0))[0] / 4)
    a1 = reduce_a(period_T(SurfaceParams(theta, math.pi / 2))[0] / 4)
    assert min(abs(a0), abs(a0 - 0.5)) <= 1e-6 and min(abs(a1), abs(a1 - 0.5)) <= 1e-6
    assert a0 == pytest.approx(0.5, abs=1e-6)
    assert a1 == pytest.approx(0.0, abs=1e-6)


def test_near_helicoid_T_circle():
    T = period_T(SurfaceParams(1.55, 0.0))
    assert 0 < T[0] ** 2 + T[2] ** 2 - 4 < 0.1


def test_reduce_a():
    assert reduce_a(0.5) == 0.5
    assert reduce_a(-0.5) == 0.5
    assert reduce_a(0.7) == pytest.approx(-0.3)
    assert reduce_a(-1.2) == pytest.approx(-0.2)
    assert reduce_a(-0.5 + 1e-14) == 0.5


def test_vanishing_period():
    for t, a in PARAM_SETS:
        assert vanishing_period_check(SurfaceParams(t, a)) <= 1e-8


def test_gamma_flux_need_not_vanish():
    sp = SurfaceParams(1.0, 0.7)
    fl = flux_along(gamma_path(sp), sp)
    assert np.abs(fl).max() > 1e-3


def test_gamma_route_through_end_rejected():
    sp = SurfaceParams(1.0, 0.7)
    ends = end_points(sp)
    pts = gamma_path(sp)
    bad = [pts[0], complex(-0.5 * sp.omega_h, ends.u_A.imag) - 0.2, ends.u_A + 0.2]
    with pytest.raises(SingularPointError):
        integrate_position(bad, sp)


def test_periods_report():
    rep = periods_report(SurfaceParams(1.0, 0.7))
    assert np.abs(rep.P - [2, 0, 0]).max() < 1e-8
    assert rep.h == pytest.approx(abs(rep.T[2]) / 4)
    assert -0.5 < rep.a <= 0.5
    d = rep.as_dict()
    assert set(d) == {"P", "T", "flux_A", "h", "a"}
