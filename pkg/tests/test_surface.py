import numpy as np
import pytest
from scipy.spatial import cKDTree

from kmrstrip.exceptions import ConfigurationError, DomainError
from kmrstrip.graph import region_mask, strip_of_params
from kmrstrip.surface import (Isometry, apply_isometry, boundary_samples, build_graph_piece,
                              level_curve, mean_curvature, s3_isometry)
from kmrstrip.weierstrass import (SurfaceParams, end_points, gauss_of_u, integrate_position,
                                  period_T, position)


def hausdorff(P, Q):
    return max(cKDTree(Q).query(P)[0].max(), cKDTree(P).query(Q)[0].max())


# ---------------------------------------------------------------- construction


def test_resolution_too_coarse(sp_generic):
    with pytest.raises(ConfigurationError):
        build_graph_piece(sp_generic, (8, 64))


def test_bad_eps_end(sp_generic):
    with pytest.raises(ConfigurationError):
        build_graph_piece(sp_generic, (32, 32), eps_end=0.0)


def test_mesh_shape_and_truncation(sp_generic, mesh_generic):
    m = mesh_generic
    assert m.shape == (64, 64)
    truncated = int((~m.valid).sum())
    assert m.n_vertices == 64 * 64 - truncated
    assert 0 < truncated < 64
    assert np.all(np.isnan(m.X[~m.valid]))


def test_anchor_column_is_level_zero(sp_generic):
    m = build_graph_piece(sp_generic, (65, 65))
    col = np.flatnonzero(np.isclose(m.u[0].real, 0.0, atol=1e-14))
    assert col.size == 1
    assert np.all(m.X[:, col[0], 2] == 0.0)
    assert np.abs(m.X[0, col[0]]).max() < 1e-15  # D'' is the origin


def test_columns_are_level_sets(mesh_generic):
    x3 = mesh_generic.X[..., 2]
    spread = np.nanmax(x3, axis=0) - np.nanmin(x3, axis=0)
    assert spread.max() < 1e-10


def test_boundary_columns_at_plus_minus_h(sp_generic, mesh_generic):
    T = period_T(sp_generic)
    h = abs(T[2]) / 4
    assert np.nanmax(np.abs(mesh_generic.X[:, 0, 2] + h)) < 1e-12
    assert np.nanmax(np.abs(mesh_generic.X[:, -1, 2] - h)) < 1e-12


def test_samples_on_curve(sp_generic, mesh_generic):
    z, w = sp_generic.chart.zw(mesh_generic.u)
    lam = sp_generic.lam
    ok = np.isfinite(z)
    res = np.abs(w ** 2 - (z ** 2 + lam ** 2) * (z ** 2 + lam ** -2))[ok]
    assert (res / (1 + np.abs(z[ok]) ** 4 * lam ** 2)).max() < 1e-10


def test_normals_unit_and_consistent(sp_generic, mesh_generic):
    N = mesh_generic.N[mesh_generic.valid]
    assert np.abs(np.linalg.norm(N, axis=-1) - 1).max() < 1e-12
    g = gauss_of_u(mesh_generic.u[mesh_generic.valid], sp_generic)
    r2 = np.abs(g) ** 2
    want = np.stack([2 * g.real, 2 * g.imag, r2 - 1], -1) / (r2 + 1)[:, None]
    assert np.abs(N - want).max() < 1e-10


def test_normals_on_region_in_upper_half(mesh_generic):
    assert mesh_generic.N[region_mask(mesh_generic)][:, 1].min() >= -1e-10


def test_mesh_positions_against_direct_integration(sp_generic, mesh_generic):
    rng = np.random.default_rng(3)
    rows, cols = np.nonzero(mesh_generic.valid)
    for k in rng.choice(rows.size, 8, replace=False):
        j, i = rows[k], cols[k]
        X = position(mesh_generic.u[j, i], sp_generic)
        assert np.abs(X - mesh_generic.X[j, i]).max() < 1e-10


def test_threads_give_identical_mesh(sp_generic):
    a = build_graph_piece(sp_generic, (48, 48), n_jobs=1)
    b = build_graph_piece(sp_generic, (48, 48), n_jobs=3)
    assert np.array_equal(a.X, b.X, equal_nan=True)


def test_deterministic(sp_generic):
    a = build_graph_piece(sp_generic, (32, 32))
    b = build_graph_piece(sp_generic, (32, 32))
    assert np.array_equal(a.X, b.X, equal_nan=True)


def test_faces(mesh_generic):
    q = mesh_generic.quads()
    assert q.min() >= 0 and q.max() < mesh_generic.n_vertices
    assert len(mesh_generic.triangles()) == 2 * len(q)


@pytest.mark.parametrize("theta,alpha", [(1.0, 0.7), (0.4, 0.0), (1.4, 1.3), (0.7, -0.6)])
def test_conjugate_slab_width(theta, alpha):
    m = build_graph_piece(SurfaceParams(theta, alpha), (128, 128), conjugate=True)
    x2 = m.points()[:, 1]
    assert abs((x2.max() - x2.min()) - 1.0) < 1e-3


# ---------------------------------------------------------------- isometries


def test_deck_involution(mesh_generic):
    d = Isometry("Deck")
    twice = apply_isometry(apply_isometry(mesh_generic, d), d)
    assert np.nanmax(np.abs(twice.X - mesh_generic.X)) <= 1e-12
    assert np.abs(twice.u - mesh_generic.u).max() <= 1e-12


def test_deck_matches_rebuilt_piece(sp_generic, mesh_generic):
    # the chart map u -> 2 D'' - u sends the window onto its translate by -2 i omega_v
    img = apply_isometry(mesh_generic, Isometry("Deck"))
    rebuilt = build_graph_piece(sp_generic, (64, 64), v_offset=-2.0)
    assert hausdorff(img.points(), rebuilt.points()) <= 1e-7


def test_r3_matches_rebuilt_piece(sp_generic, mesh_generic):
    img = apply_isometry(mesh_generic, Isometry("R3"))
    rebuilt = build_graph_piece(sp_generic, (64, 64), v_offset=1.0)
    assert np.nanmax(np.abs(img.X - rebuilt.X)) <= 1e-7


def test_r3_squared_is_period(sp_generic, mesh_generic):
    r3 = Isometry("R3")
    twice = apply_isometry(apply_isometry(mesh_generic, r3), r3)
    assert np.nanmax(np.abs(twice.X - mesh_generic.X - [2, 0, 0])) <= 1e-12
    rebuilt = build_graph_piece(sp_generic, (64, 64), v_offset=2.0)
    assert np.nanmax(np.abs(rebuilt.X - mesh_generic.X - [2, 0, 0])) <= 1e-8


def test_s3_fixes_boundary_line(sp_generic, mesh_generic):
    strip = strip_of_params(sp_generic)
    iso = s3_isometry(sp_generic)
    fixed = [rows for side, x1, rows in boundary_samples(mesh_generic)
             if side < 0 and abs(x1 + strip.a) < 1e-6]
    assert fixed, "no samples on the line through p0"
    X = mesh_generic.X[fixed[0], 0]
    assert np.abs(iso(X) - X).max() <= 1e-8


def test_s3_permutes_boundary_lines(sp_generic, mesh_generic):
    strip = strip_of_params(sp_generic)
    iso = s3_isometry(sp_generic)
    for side, x1, rows in boundary_samples(mesh_generic):
        Y = iso(mesh_generic.X[rows, 0 if side < 0 else -1])
        # lower lines x1 = -a + k go to lower lines; upper lines x1 = a + k to x1 = -3a - k
        shift = strip.a if side < 0 else 3 * strip.a
        k = Y[:, 0] + shift
        assert np.abs(k - np.round(k)).max() < 1e-8
        assert np.abs(Y[:, 2] + strip.h + (side > 0) * 2 * strip.h).max() < 1e-8


def test_s3_matches_chart_reflection(sp_generic):
    # S3 acts on the chart as the reflection across the end column Re u = -omega_h/2
    sp = sp_generic
    oh, ov = sp.omega_h, sp.omega_v
    iso = s3_isometry(sp)
    yc = 0.5 * ov - end_points(sp).y_A  # crossing height midway between A' and A
    for y in np.linspace(0.6 * ov, 2.4 * ov, 4):
        for x in (-0.45 * oh, -0.3 * oh):
            u = complex(x, y)
            v = iso.chart_map(u, sp)
            Xv = integrate_position([sp.anchor, 1j * yc, complex(v.real, yc), v], sp)
            assert np.abs(iso(position(u, sp)) - Xv).max() < 1e-8


def test_isometry_kinds():
    with pytest.raises(DomainError):
        Isometry("Rot")
    assert np.allclose(Isometry("S3", axis=(0.5, -1.0))([0.5, 3.0, -1.0]), [0.5, 3.0, -1.0])


def test_isometry_rejects_conjugate(sp_generic):
    m = build_graph_piece(sp_generic, (16, 16), conjugate=True)
    with pytest.raises(ConfigurationError):
        apply_isometry(m, Isometry("Deck"))


# ---------------------------------------------------------------- level curves


def test_level_curve_period(sp_generic):
    L = level_curve(sp_generic, 0.0)
    gap = L[-1] - L[0]
    assert np.abs(np.abs(gap) - [2, 0, 0]).max() < 1e-8
    assert np.all(L[:, 2] == 0.0)


def test_level_curve_range(sp_generic):
    with pytest.raises(DomainError):
        level_curve(sp_generic, sp_generic.height)
    with pytest.raises(DomainError):
        level_curve(sp_generic, -1.1 * sp_generic.height)


def test_level_curves_approach_boundary_lines(sp_generic):
    strip = strip_of_params(sp_generic)
    med = []
    for delta in (0.3, 0.1, 0.03):
        L = level_curve(sp_generic, strip.h * (1 - delta), n=513)
        k = L[:, 0] - strip.a
        med.append(float(np.median(np.abs(k - np.round(k)))))
    assert med[0] > med[1] > med[2]
    assert med[2] < 0.02


def test_conjugate_level_curve_width(sp_generic):
    for x in (-0.8, 0.0, 0.5):
        L = level_curve(sp_generic, x * sp_generic.height, conjugate=True)
        assert np.ptp(L[:, 1]) <= 1.0 + 1e-9


def test_periodicity_along_T(sp_generic):
    # translating a sample by T reaches the sample one horizontal period over
    sp = sp_generic
    T = period_T(sp)
    from kmrstrip.weierstrass import gamma_tilde_path
    path = list(gamma_tilde_path(sp))
    start = path[0]
    far = path[-1]
    for dy in (0.0, 0.03 * sp.omega_v):
        p = [q + 1j * dy for q in path]
        X0 = position(start + 1j * dy, sp)
        X1 = X0 + integrate_position(p, sp)
        assert abs(far - start - 2 * sp.omega_h) < 1e-12
        assert np.abs(X1 - X0 - T).max() < 1e-7


# ---------------------------------------------------------------- curvature


def test_mean_curvature_decreases_under_refinement(sp_generic):
    sp = sp_generic
    keep = 0.2 * min(sp.omega_h, sp.omega_v)
    ends = end_points(sp).coords()

    def interior_max(n):
        m = build_graph_piece(sp, (n, n))
        H = mean_curvature(m)
        d = m.u[..., None] - ends
        ph, pv = sp.chart.period_h, sp.chart.period_v
        dist = np.hypot(d.real - ph * np.round(d.real / ph),
                        d.imag - pv * np.round(d.imag / pv)).min(-1)
        mask = np.isfinite(H) & (dist > keep)
        return float(H[mask].max())

    coarse, fine = interior_max(33), interior_max(65)
    assert coarse / fine >= 2.0
