"""Meshes of the graph piece, its conjugate, and the symmetries of the surface.

The piece lives over the chart rectangle ``|Re u| <= omega_h/2`` (between
the two columns carrying the ends) and one vertical lattice period
``omega_v/2 <= Im u <= 5 omega_v/2`` starting at D''. Columns of the grid are
level sets of ``x3``.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .exceptions import ConfigurationError, DomainError
from .weierstrass import (end_points, integrate_position, normal_of_u, reduce_a,
                          period_T, segment_integrals)

MIN_RESOLUTION = 16
THREADS_ENV = "KMR_NUM_THREADS"


def _num_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SurfaceMesh:
    """Grid samples of a graph piece (or its conjugate).

    Arrays are indexed ``[row, col]``; rows run along ``Im u`` and columns
    along ``Re u``. Truncated samples (inside the end-exclusion discs) carry
    NaN positions and ``valid == False``.
    """

    params: object
    u: np.ndarray
    z: np.ndarray
    X: np.ndarray
    N: np.ndarray
    valid: np.ndarray
    eps_end: float
    anchor: complex
    conjugate: bool = False

    @property
    def shape(self):
        return self.u.shape

    @property
    def n_vertices(self):
        return int(self.valid.sum())

    def points(self):
        """Valid positions in row-major order, shape (n, 3)."""
        return self.X[self.valid]

    def vertex_index(self):
        """Row-major numbering of valid samples; -1 for truncated ones."""
        idx = np.full(self.shape, -1, dtype=np.int64)
        idx[self.valid] = np.arange(self.n_vertices)
        return idx

    def quads(self):
        """Quad faces (row-major) whose four corners are all valid."""
        idx = self.vertex_index()
        a, b = idx[:-1, :-1], idx[:-1, 1:]
        c, d = idx[1:, 1:], idx[1:, :-1]
        q = np.stack([a, b, c, d], axis=-1).reshape(-1, 4)
        return q[(q >= 0).all(axis=1)]

    def triangles(self):
        q = self.quads()
        return np.concatenate([q[:, [0, 1, 2]], q[:, [0, 2, 3]]])


def _grid(params, resolution, v_offset, periods):
    nu, nv = (int(r) for r in resolution)
    if nu < MIN_RESOLUTION or nv < MIN_RESOLUTION:
        raise ConfigurationError(
            f"resolution {nu}x{nv} is below the minimum {MIN_RESOLUTION}x{MIN_RESOLUTION} "
            "needed to separate the ends from the branch points")
    oh, ov = params.omega_h, params.omega_v
    xs = np.linspace(-0.5 * oh, 0.5 * oh, nu)
    y0 = 0.5 * ov + v_offset * ov
    ys = y0 + np.linspace(0.0, 2.0 * ov * periods, nv)
    return xs, ys


def _end_mask(params, u, eps):
    ends = end_points(params).coords()
    ph, pv = params.chart.period_h, params.chart.period_v
    d = u[..., None] - ends
    dx = d.real - ph * np.round(d.real / ph)
    dy = d.imag - pv * np.round(d.imag / pv)
    return np.hypot(dx, dy).min(axis=-1) >= eps


def _row_segments(xs, ys, valid):
    """Segments from the seam point ``i y`` outward to every valid sample of each row."""
    segs_a, segs_b, owner = [], [], []
    pos = xs >= 0
    neg = ~pos
    right = np.flatnonzero(pos)
    left = np.flatnonzero(neg)[::-1]
    for j, y in enumerate(ys):
        for side in (right, left):
            cols = side[valid[j, side]]
            # samples inside the exclusion disc can only sit at the row ends
            prev = 0.0
            for k in cols:
                segs_a.append(complex(prev, y))
                segs_b.append(complex(xs[k], y))
                owner.append((j, k))
                prev = xs[k]
    return np.array(segs_a), np.array(segs_b), owner


def _integrate_chunks(params, a, b, n_jobs):
    if n_jobs <= 1 or a.size < 2048:
        return segment_integrals(a, b, params)
    chunks = np.array_split(np.arange(a.size), n_jobs)
    with ThreadPoolExecutor(max_workers=n_jobs) as pool:
        parts = list(pool.map(lambda ix: segment_integrals(a[ix], b[ix], params), chunks))
    return np.concatenate(parts, axis=1)


def build_graph_piece(params, resolution=(128, 128), conjugate=False, eps_end=None,
                      v_offset=0.0, periods=1, n_jobs=None):
    """Sample the graph piece on a uniform chart grid.

    Parameters
    ----------
    params : SurfaceParams
    resolution : (int, int)
        Number of columns (along ``Re u``) and rows (along ``Im u``).
    conjugate : bool
        Sample the conjugate surface (imaginary parts of the integrals).
    eps_end : float, optional
        End-exclusion radius; defaults to ``params.eps_end``.
    v_offset : float
        Shift of the row window in units of ``omega_v``; ``1`` gives the
        piece mapped by R3.
    periods : int
        Number of vertical lattice periods covered by the rows.

    Returns
    -------
    SurfaceMesh
        Positions anchored so that D'' is the origin.
    """
    xs, ys = _grid(params, resolution, v_offset, periods)
    return sample_chart_grid(params, xs, ys, conjugate=conjugate, eps_end=eps_end,
                             n_jobs=n_jobs)


def sample_chart_grid(params, xs, ys, conjugate=False, eps_end=None, n_jobs=None):
    """Sample positions on the chart grid ``xs + i ys``.

    Samples are reached from D'' up the column ``Re u = 0`` and then along
    each row, so the grid must not contain an end in that column (ends sit
    on ``Re u = +-omega_h/2``). Samples inside the end-exclusion discs are
    marked invalid.
    """
    eps = params.eps_end if eps_end is None else float(eps_end)
    if not 0 < eps < 0.25 * min(params.omega_h, params.omega_v):
        raise ConfigurationError(f"eps_end={eps!r} out of range")
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    u = xs[None, :] + 1j * ys[:, None]
    valid = _end_mask(params, u, eps)
    n_jobs = _num_threads() if n_jobs is None else int(n_jobs)

    # seam: D'' -> i ys[0] -> i ys[1] -> ...
    anchor = params.anchor
    seam_pts = np.concatenate([[anchor], 1j * ys])
    seam = segment_integrals(seam_pts[:-1], seam_pts[1:], params)
    seam = np.cumsum(seam, axis=1)

    a, b, owner = _row_segments(xs, ys, valid)
    vals = _integrate_chunks(params, a, b, n_jobs)
    total = np.full((3,) + u.shape, np.nan + 0j)
    # cumulative along each row and side, in the order the segments were emitted
    run = np.zeros(3, dtype=complex)
    last_row, last_side = None, None
    for n, (j, k) in enumerate(owner):
        side = xs[k] >= 0
        if (j, side) != (last_row, last_side):
            run = seam[:, j].copy()
            last_row, last_side = j, side
        run = run + vals[:, n]
        total[:, j, k] = run
    X = total.imag if conjugate else total.real
    X = np.moveaxis(X, 0, -1).copy()
    rel = u - anchor
    x3 = params.mu * (rel.imag if conjugate else rel.real)
    X[..., 2] = np.where(valid, x3, np.nan)
    X[~valid] = np.nan
    z, _ = params.chart.zw(u)
    N = normal_of_u(u, params)
    return SurfaceMesh(params=params, u=u, z=z, X=X, N=N, valid=valid, eps_end=eps,
                       anchor=anchor, conjugate=bool(conjugate))


# ---------------------------------------------------------------- isometries


def strip_offset(params):
    """``a = T1/4`` reduced into (-1/2, 1/2]."""
    return reduce_a(period_T(params)[0] / 4.0)


@dataclass(frozen=True)
class Isometry:
    """One of the generators S3, Deck, R3 acting on space and on the chart.

    ``axis`` is ``(x1, x3)`` of the horizontal line (parallel to the
    ``x2``-axis) about which S3 rotates by pi.
    """

    kind: str
    axis: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("S3", "Deck", "R3"):
            raise DomainError(f"unknown isometry {self.kind!r}")

    def linear(self):
        if self.kind == "Deck":
            return np.diag([-1.0, -1.0, -1.0])
        if self.kind == "R3":
            return np.diag([1.0, -1.0, 1.0])
        return np.diag([-1.0, 1.0, -1.0])

    def translation(self):
        if self.kind == "Deck":
            return np.zeros(3)
        if self.kind == "R3":
            return np.array([1.0, 0.0, 0.0])
        c, d = self.axis
        return np.array([2.0 * c, 0.0, 2.0 * d])

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        return X @ self.linear().T + self.translation()

    def chart_map(self, u, params):
        """Action on chart coordinates (S3: reflection across the end column)."""
        u = np.asarray(u, dtype=complex)
        ov, oh = params.omega_v, params.omega_h
        if self.kind == "Deck":
            return 2 * params.anchor - u
        if self.kind == "R3":
            return u + 1j * ov
        return -oh - np.conj(u)


def s3_isometry(params):
    """S3 about the boundary line in ``{x3 = -h}`` closest to the ``x2``-axis.

    That line passes through ``p0 = (-a, 0, -h)``.
    """
    return Isometry("S3", axis=(-strip_offset(params), -params.height))


def apply_isometry(mesh, iso):
    """Transform a mesh of the graph piece by an isometry of the surface.

    Positions and normals are mapped in space; chart data follow the
    corresponding chart symmetry.
    """
    if mesh.conjugate:
        raise ConfigurationError("isometries act on the graph piece, not its conjugate")
    X = iso(mesh.X)
    N = mesh.N @ iso.linear().T
    u = iso.chart_map(mesh.u, mesh.params)
    z, _ = mesh.params.chart.zw(u)
    return replace(mesh, X=X, N=N, u=u, z=z)


def boundary_samples(mesh):
    """Samples on the two end columns, split into the four straight lines.

    Returns a list of ``(side, x1_line, rows)`` where ``side`` is ``-1`` for
    the column in ``{x3 = -h}`` and ``+1`` for ``{x3 = h}``.
    """
    out = []
    for col, side in ((0, -1), (mesh.shape[1] - 1, 1)):
        ok = mesh.valid[:, col]
        x1 = mesh.X[:, col, 0]
        keys = np.round(x1[ok], 6)
        for key in np.unique(keys):
            rows = np.flatnonzero(ok)[keys == key]
            out.append((side, float(np.mean(x1[rows])), rows))
    return out


def level_curve(params, x3_value, n=257, conjugate=False):
    """Polyline of the level section ``{x3 = x3_value}`` over one vertical period.

    Raises
    ------
    DomainError
        If ``|x3_value| >= h``.
    """
    h = params.height
    if not abs(x3_value) < h:
        raise DomainError(f"|x3|={abs(x3_value):.6g} must be below h={h:.6g}")
    x = x3_value / params.mu
    ov = params.omega_v
    ys = 0.5 * ov + np.linspace(0.0, 2.0 * ov, n)
    start = integrate_position([params.anchor, complex(x, 0.5 * ov)], params,
                               conjugate=conjugate)
    pts = x + 1j * ys
    vals = segment_integrals(pts[:-1], pts[1:], params)
    vals = vals.imag if conjugate else vals.real
    X = np.vstack([start, start + np.cumsum(vals, axis=1).T])
    X[:, 2] = x3_value if not conjugate else X[:, 2]
    return X


# ---------------------------------------------------------------- curvature


def _grid_triangles(nv, nu):
    r, c = np.meshgrid(np.arange(nv - 1), np.arange(nu - 1), indexing="ij")
    a = (r * nu + c).ravel()
    b = a + 1
    d = a + nu
    e = d + 1
    return np.concatenate([np.stack([a, b, e], 1), np.stack([a, e, d], 1)])


def mean_curvature(mesh):
    """Discrete mean curvature |H| at vertices by the cotangent formula.

    ``|H| = |sum_j (cot a_ij + cot b_ij)(x_i - x_j)| / (4 A_i)`` with the
    barycentric vertex area ``A_i``. Returns an array of the grid shape with
    NaN wherever the one-ring is incomplete.
    """
    nv, nu = mesh.shape
    P = mesh.X.reshape(-1, 3)
    tri = _grid_triangles(nv, nu)
    ok = mesh.valid.ravel()
    tri = tri[ok[tri].all(axis=1)]
    lap = np.zeros_like(P)
    area = np.zeros(P.shape[0])
    count = np.zeros(P.shape[0], dtype=np.int64)
    for k in range(3):
        i, j, o = tri[:, k], tri[:, (k + 1) % 3], tri[:, (k + 2) % 3]
        e1, e2 = P[i] - P[o], P[j] - P[o]
        cot = (e1 * e2).sum(1) / np.linalg.norm(np.cross(e1, e2), axis=1)
        d = cot[:, None] * (P[i] - P[j])
        np.add.at(lap, i, d)
        np.add.at(lap, j, -d)
    tri_area = 0.5 * np.linalg.norm(np.cross(P[tri[:, 1]] - P[tri[:, 0]],
                                             P[tri[:, 2]] - P[tri[:, 0]]), axis=1)
    for k in range(3):
        np.add.at(area, tri[:, k], tri_area / 3.0)
        np.add.at(count, tri[:, k], 1)
    H = np.full(P.shape[0], np.nan)
    interior = np.zeros((nv, nu), dtype=bool)
    interior[1:-1, 1:-1] = True
    full = interior.ravel() & (count == 6)
    H[full] = np.linalg.norm(lap[full], axis=1) / (4.0 * area[full])
    return H.reshape(nv, nu)
