"""Marked strips and the checks that a graph piece solves the Jenkins-Serrin problem.

The strip ``S(h, a)`` is ``{-h < x3 < h}`` in the ``x1 x3``-plane with
boundary points ``p_n = (n - a, 0, -h)`` and ``q_n = (n + a, 0, h)``. The
graph height is ``x2``; it tends to ``+inf`` on the edges ``(p_2k, p_2k+1)``
and ``(q_2k, q_2k+1)`` and to ``-inf`` on the others.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
import shapely
from shapely.geometry import LineString

from ._quadrature import integrate_segments
from .exceptions import DomainError, InternalInconsistencyError
from .surface import Isometry, _end_mask, apply_isometry, boundary_samples
from .weierstrass import END_NAMES, end_points, period_T, reduce_a, segment_integrals

N2_TOL = 1e-10
QUARTER_TOL = 1e-9
OVERLAP_RTOL = 1e-9


@dataclass(frozen=True)
class MarkedStrip:
    """The marked strip ``S(h, a)``; ``a = -1/2`` is stored as ``1/2``."""

    h: float
    a: float

    def __post_init__(self):
        h, a = float(self.h), float(self.a)
        if not (math.isfinite(h) and h > 0):
            raise DomainError(f"h={h!r} must be positive")
        if not -0.5 <= a <= 0.5:
            raise DomainError(f"a={a!r} must lie in (-1/2, 1/2]")
        if a == -0.5:
            a = 0.5
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "a", a)

    @property
    def feasible(self):
        """Jenkins-Serrin condition ``|q0 - p0| > 1``, i.e. ``a^2 + h^2 > 1/4``."""
        return self.a ** 2 + self.h ** 2 > 0.25

    def p(self, n):
        return np.array([n - self.a, 0.0, -self.h])

    def q(self, n):
        return np.array([n + self.a, 0.0, self.h])

    def boundary_points(self, n_min=-2, n_max=2):
        """Arrays ``(p, q)`` of the boundary points for ``n_min <= n <= n_max``."""
        n = np.arange(n_min, n_max + 1, dtype=float)
        zeros = np.zeros_like(n)
        p = np.stack([n - self.a, zeros, np.full_like(n, -self.h)], axis=1)
        q = np.stack([n + self.a, zeros, np.full_like(n, self.h)], axis=1)
        return p, q

    @staticmethod
    def edge_label(n):
        """``+1`` (``+inf``) on ``(p_n, p_n+1)`` and ``(q_n, q_n+1)`` for even ``n``."""
        return 1 if int(n) % 2 == 0 else -1

    def edge_of(self, x1, side):
        """Index ``n`` of the edge containing ``x1`` on the lower (-1) or upper (+1) line."""
        shift = self.a if side < 0 else -self.a
        return int(math.floor(x1 + shift))


def strip_of_params(params):
    """Strip ``S(|T3|/4, T1/4 mod 1)`` solved by the surface.

    Raises
    ------
    InternalInconsistencyError
        If the result is not feasible (``T1^2 + T3^2 <= 4`` is impossible for
        this family).
    """
    T = period_T(params)
    strip = MarkedStrip(abs(T[2]) / 4.0, reduce_a(T[0] / 4.0))
    if not strip.feasible:
        raise InternalInconsistencyError(
            f"computed strip h={strip.h:.9g}, a={strip.a:.9g} violates a^2 + h^2 > 1/4 "
            f"(T1^2 + T3^2 = {T[0] ** 2 + T[2] ** 2:.9g})")
    return strip


# ---------------------------------------------------------------- X1 along sigma


def _x1_density(params):
    lam = params.lam
    c2a = math.cos(2.0 * params.alpha)
    mu = params.mu

    def f(phi):
        # s = sin(phi)/lam turns ds / sqrt((lam^2 - s^2)(lam^-2 - s^2)) into
        # dphi / sqrt(lam^2 - s^2)
        phi = phi.real
        s2 = (np.sin(phi) / lam) ** 2
        val = mu * (1.0 - s2 * s2) / ((1.0 - 2.0 * s2 * c2a + s2 * s2) * np.sqrt(lam * lam - s2))
        return val[None, ...].astype(complex)
    return f


def x1_along_sigma(t, params, tol=1e-13):
    """First coordinate along ``c1 = {z = i t, |t| < 1/lam}``, zero at ``t = -1/lam``.

    ``X1(t) = mu int_{-1/lam}^t (1 - s^4) / ((1 - 2 s^2 cos 2 alpha + s^4)
    sqrt((lam^2 - s^2)(lam^-2 - s^2))) ds``. Vectorised over ``t``.

    Raises
    ------
    DomainError
        If ``|t| > 1/lam``; beyond the branch points the integrand is not
        real and ``X1`` along the rest of sigma is not given by this formula.
    """
    t = np.asarray(t, dtype=float)
    lam = params.lam
    if np.any(np.abs(t) >= 1.0):
        raise DomainError("sigma is parametrised by -1 < t < 1")
    if np.any(np.abs(t) > 1.0 / lam * (1 + 1e-15)):
        raise DomainError(f"the closed formula for X1 holds for |t| <= 1/lam = {1 / lam:.12g}")
    phi = np.arcsin(np.clip(t * lam, -1.0, 1.0))
    flat = phi.ravel()
    order = np.argsort(flat, kind="stable")
    nodes = np.concatenate([[-math.pi / 2], flat[order]])
    vals, _ = integrate_segments(_x1_density(params), nodes[:-1].astype(complex),
                                 nodes[1:].astype(complex), tol=tol)
    cum = np.cumsum(vals[0].real)
    out = np.empty_like(flat)
    out[order] = cum
    return out.reshape(t.shape) if t.ndim else float(out[0])


def _clear_prefix(params, pts):
    ok = _end_mask(params, pts, params.eps_end)
    stop = np.flatnonzero(~ok)
    return pts if stop.size == 0 else pts[:stop[0]]


def sigma_curves(params, n=201):
    """Sampled positions along ``c1``, ``c2``, ``c3`` (each of shape (n, 3)).

    ``c1`` joins D'' to D''' on the column ``Re u = 0``; ``c2`` and ``c3``
    leave D'' and D''' horizontally towards the end column ``{x3 = -h}``;
    they stop at the end-exclusion radius when an end sits at their far
    corner (``alpha = 0``).
    """
    oh, ov = params.omega_h, params.omega_v
    ys = np.linspace(0.5 * ov, 1.5 * ov, n)
    xs = np.linspace(0.0, -0.5 * oh, n)
    c1_u = 1j * ys
    c2_u = _clear_prefix(params, xs + 0.5j * ov)
    c3_u = _clear_prefix(params, xs + 1.5j * ov)
    out = []
    start = np.zeros(3)
    for pts in (c1_u, c2_u):
        v = segment_integrals(pts[:-1], pts[1:], params).real
        out.append(np.vstack([start, start + np.cumsum(v, axis=1).T]))
    d3 = out[0][-1]
    v = segment_integrals(c3_u[:-1], c3_u[1:], params).real
    out.append(np.vstack([d3, d3 + np.cumsum(v, axis=1).T]))
    return out


# ---------------------------------------------------------------- graph report


@dataclass
class GraphReport:
    quarter_sphere_ok: bool
    sigma_injective_ok: bool
    projection_collisions: int
    boundary_label_ok: bool
    details: dict = field(default_factory=dict)

    @property
    def ok(self):
        return (self.quarter_sphere_ok and self.sigma_injective_ok
                and self.projection_collisions == 0 and self.boundary_label_ok)

    def as_dict(self):
        return {"quarter_sphere_ok": self.quarter_sphere_ok,
                "sigma_injective_ok": self.sigma_injective_ok,
                "projection_collisions": self.projection_collisions,
                "boundary_label_ok": self.boundary_label_ok,
                "ok": self.ok, "details": self.details}


def region_mask(mesh):
    """Samples of the region R: ``-omega_h/2 <= Re u <= 0``, ``omega_v/2 <= Im u <= 3 omega_v/2``."""
    ov = mesh.params.omega_v
    u = mesh.u
    tol = 1e-12 * ov
    return (mesh.valid & (u.real <= tol) & (u.imag >= 0.5 * ov - tol)
            & (u.imag <= 1.5 * ov + tol))


def quarter_sphere_check(normals):
    """Whether unit normals lie in a closed quarter of the sphere inside ``{x2 >= 0}``.

    The projections onto the ``x1 x3``-plane must fit in a half-plane, i.e.
    their directions span an arc of at most pi.
    """
    N = np.asarray(normals, dtype=float).reshape(-1, 3)
    n2_min = float(N[:, 1].min()) if N.size else 0.0
    proj = N[:, [0, 2]]
    r = np.hypot(proj[:, 0], proj[:, 1])
    ang = np.sort(np.arctan2(proj[r > 1e-12, 1], proj[r > 1e-12, 0]))
    if ang.size < 2:
        span = 0.0
    else:
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
        span = float(2 * np.pi - gaps.max())
    ok = n2_min >= -N2_TOL and span <= np.pi + QUARTER_TOL
    return ok, {"n2_min": n2_min, "arc_span": span,
                "offending": np.flatnonzero(N[:, 1] < -N2_TOL).tolist()[:20]}


def _strictly_monotone(v):
    d = np.diff(v)
    return bool(np.all(d > 0) or np.all(d < 0))


def sigma_check(params, n=201):
    c1, c2, c3 = sigma_curves(params, n)
    mono = {"c1_x1": _strictly_monotone(c1[:, 0]), "c2_x3": _strictly_monotone(c2[:, 2]),
            "c3_x3": _strictly_monotone(c3[:, 2])}
    lines = [LineString(c[:, [0, 2]]) for c in (c1, c2, c3)]
    # c1 meets c2 at D'' and c3 at D'''; c2 and c3 must be disjoint
    shared = {(0, 1): c1[0], (0, 2): c1[-1]}
    meets_ok = True
    meet_info = {}
    for i, j in ((0, 1), (0, 2), (1, 2)):
        inter = lines[i].intersection(lines[j])
        pts = shapely.get_coordinates(inter)
        if (i, j) in shared:
            target = shared[(i, j)][[0, 2]]
            good = inter.geom_type == "Point" and np.allclose(pts[0], target, atol=1e-9)
        else:
            good = inter.is_empty
        meet_info[f"c{i + 1}_c{j + 1}"] = pts.tolist()
        meets_ok &= bool(good)
    k = min(len(c2), len(c3))
    shift = float(np.abs(c3[:k, [0, 2]] - c2[:k, [0, 2]] - [1.0, 0.0]).max())
    ok = all(mono.values()) and meets_ok
    return ok, {"monotone": mono, "intersections": meet_info, "c3_minus_c2_shift_err": shift}


def _triangles_2d(mesh):
    P = mesh.points()[:, [0, 2]]
    tri = mesh.triangles()
    return P, tri


def projection_collisions(meshes, max_report=20):
    """Count overlapping pairs among the projected triangles of several meshes.

    Triangles sharing a vertex are neighbours and are skipped; any other pair
    whose projections overlap with positive area is a violation of the graph
    property.
    """
    polys, verts, owners = [], [], []
    offset = 0
    for k, mesh in enumerate(meshes):
        P, tri = _triangles_2d(mesh)
        polys.append(shapely.polygons(P[tri]))
        verts.append(tri + offset)
        owners.append(np.full(len(tri), k))
        offset += P.shape[0]
    polys = np.concatenate(polys)
    verts = np.concatenate(verts)
    owners = np.concatenate(owners)
    areas = shapely.area(polys)
    tree = shapely.STRtree(polys)
    i, j = tree.query(polys, predicate="intersects")
    keep = i < j
    i, j = i[keep], j[keep]
    share = (verts[i][:, :, None] == verts[j][:, None, :]).any(axis=(1, 2))
    i, j = i[~share], j[~share]
    if i.size == 0:
        return 0, []
    inter = shapely.area(shapely.intersection(polys[i], polys[j]))
    bad = inter > OVERLAP_RTOL * np.minimum(areas[i], areas[j])
    pairs = [(int(a), int(b), int(owners[a]), int(owners[b]))
             for a, b in zip(i[bad][:max_report], j[bad][:max_report])]
    return int(bad.sum()), pairs


def _r3_extension(mesh):
    """The R3-image of the piece, restricted to rows beyond the original window."""
    img = apply_isometry(mesh, Isometry("R3"))
    top = mesh.u[-1, 0].imag
    pre = mesh.u[:, 0].imag + mesh.params.omega_v
    tol = 1e-9 * mesh.params.omega_v
    # start at the image of the top row when the grids line up; otherwise
    # leave a sliver unchecked rather than overlapping the same surface
    rows = np.flatnonzero(pre > top - tol)
    first = int(rows[0])
    sl = slice(first, None)
    ext = replace(img, u=img.u[sl], z=img.z[sl], X=img.X[sl], N=img.N[sl],
                  valid=img.valid[sl])
    return ext, first


def boundary_label_check(mesh, strip=None):
    """Straight boundary lines lie over ``p_n`` and ``q_n`` of the strip."""
    params = mesh.params
    strip = strip if strip is not None else strip_of_params(params)
    worst = 0.0
    lines = []
    for side, x1, rows in boundary_samples(mesh):
        shift = strip.a if side < 0 else -strip.a
        k = x1 + shift
        err = abs(k - round(k))
        col = 0 if side < 0 else mesh.shape[1] - 1
        x3_err = float(np.abs(mesh.X[rows, col, 2] - side * strip.h).max())
        worst = max(worst, err, x3_err)
        lines.append({"side": side, "x1": x1, "n": int(round(k)), "err": max(err, x3_err)})
    return worst <= 1e-8, {"max_error": worst, "lines": lines}


def verify_graph(mesh, params=None, sigma_samples=None):
    """Check that a mesh of the graph piece is a graph over the strip.

    (i) normals over R lie in a quarter sphere with ``N2 >= 0``;
    (ii) the projection is injective on ``sigma = c3 + c1 + c2``;
    (iii) projected triangles of the piece and of its R3-image do not
    overlap except between grid neighbours.
    Failures are reported, never raised.
    """
    params = mesh.params if params is None else params
    if mesh.shape[0] < 64 or mesh.shape[1] < 64:
        raise DomainError("verify_graph needs a mesh of at least 64x64 samples")
    details = {}
    q_ok, details["quarter_sphere"] = quarter_sphere_check(mesh.N[region_mask(mesh)])
    n_sig = sigma_samples or max(mesh.shape)
    s_ok, details["sigma"] = sigma_check(params, n_sig)
    ext, first = _r3_extension(mesh)
    count, pairs = projection_collisions([mesh, ext])
    details["collisions"] = {"pairs": pairs, "r3_rows_from": int(first)}
    b_ok, details["boundary"] = boundary_label_check(mesh)
    return GraphReport(quarter_sphere_ok=q_ok, sigma_injective_ok=s_ok,
                       projection_collisions=count, boundary_label_ok=b_ok, details=details)


# ---------------------------------------------------------------- divergence


def _unchecked_position(params, u):
    pts = np.array([params.anchor, 1j * u.imag, u])
    return segment_integrals(pts[:-1], pts[1:], params, check=False).sum(axis=1).real


def boundary_divergence_check(mesh, strip=None, levels=3, rate_rtol=0.2):
    """Sign and logarithmic growth of ``x2`` near every end of the piece.

    For each end, ``x2`` is sampled on the horizontal chart ray into the
    piece at distances ``eps, eps/2, eps/4`` from the end (``eps`` is the
    mesh truncation). The end sits over one marked edge; ``x2`` must have the
    edge's sign, grow in magnitude, and the two growth rates per ``log 2``
    must agree within ``rate_rtol``.

    Returns
    -------
    dict
        ``{"ok": bool, "edges": [...]}`` with one entry per end.
    """
    params = mesh.params
    strip = strip if strip is not None else strip_of_params(params)
    ov = params.omega_v
    y_lo = mesh.u[0, 0].imag
    ends = end_points(params)
    out = []
    for name in END_NAMES:
        u0 = ends.coord(name)
        y = (u0.imag - y_lo) % (2 * ov) + y_lo
        u0 = complex(u0.real, y)
        side = -1 if u0.real < 0 else 1
        eps = mesh.eps_end * 0.5 ** np.arange(levels)
        X = np.array([_unchecked_position(params, u0 - side * e) for e in eps])
        n = strip.edge_of(X[0, 0], side)
        label = strip.edge_label(n)
        rates = np.diff(X[:, 1]) / math.log(2.0)
        sign_ok = bool(np.all(np.sign(X[:, 1]) == label) and np.all(label * rates > 0))
        rate_ok = bool(abs(rates[-1] - rates[0]) <= rate_rtol * abs(rates[0]))
        out.append({"end": name, "side": "lower" if side < 0 else "upper", "edge": n,
                    "label": "+inf" if label > 0 else "-inf", "x2": X[:, 1].tolist(),
                    "rates": rates.tolist(), "ok": sign_ok and rate_ok})
    return {"ok": all(e["ok"] for e in out), "edges": out}
