"""Reference surfaces for the three degenerations of the family.

* ``scherk1p``: ``theta -> 0``. Near the boundary point ``q0 = (a, 0, h)``
  the graph converges to the singly periodic Scherk graph
  ``x2 = arcsinh(sin(pi x1) / sinh(pi |x3|)) / pi`` over the half-plane
  below the boundary line (after translating ``q0`` to the origin).
* ``scherk2p``: ``theta -> pi/2`` with ``alpha -> alpha_inf != 0``. The
  piece over the parallelogram ``p0 p1 q1 q0`` converges to the doubly
  periodic Scherk graph over a unit rhombus of angle ``alpha_inf``.
* ``helicoid``: ``theta -> pi/2`` with ``alpha -> 0``. After dilation by
  ``1/mu`` about the point over ``u = i omega_v`` (where ``g = i``) the
  surface converges to the vertical helicoid
  ``x2 = x1 tan(pi x3 / omega_h)``.

Every probe reports the sup of the vertical (``x2``) gap between the sampled
graph and the reference over a fixed compact window, after removing the best
constant ``x2`` offset. The reference formulas are standard closed forms; the
doubly periodic Scherk surface is integrated from its Weierstrass data
``g = z``, ``dh = i k z dz / (z^4 - 2 cos(2 t) z^2 + 1)`` by partial
fractions.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.spatial import cKDTree

from .exceptions import ConfigurationError, DomainError
from .graph import strip_of_params
from .surface import build_graph_piece, sample_chart_grid
from .weierstrass import SurfaceParams, position

REGIMES = ("scherk1p", "scherk2p", "helicoid")
SCHERK1P_RAY = (0.4, 0.2, 0.1, 0.05)
SCHERK2P_RAY = (1.50, 1.53, 1.56)
DEFAULT_ALPHA = math.pi / 4
HELICOID_RAY = ((1.54, 0.02), (1.55, 0.01), (1.56, 0.005))
# unit window below q0: 0 <= x1 <= 1, -1 <= x3 <= -1/4
SCHERK1P_WINDOW = ((0.0, 1.0), (-1.0, -0.25))
# rhombus coordinates of the compared region
SCHERK2P_WINDOW = (0.25, 0.75)
# dilated coordinates around the helicoid axis
HELICOID_WINDOW = ((-1.0, 1.0), (-0.4, 0.4))


# ---------------------------------------------------------------- references


def scherk1p_height(x1, x3):
    """Singly periodic Scherk graph over ``x3 < 0``, ``+inf`` on ``(0, 1) x {0}``."""
    x1, x3 = np.asarray(x1, dtype=float), np.asarray(x3, dtype=float)
    return np.arcsinh(np.sin(np.pi * x1) / np.sinh(np.pi * np.abs(x3))) / np.pi


def helicoid_height(x1, x3, omega_h):
    """Vertical helicoid ``x2 = x1 tan(pi x3 / omega_h)``."""
    return np.asarray(x1) * np.tan(np.pi * np.asarray(x3) / omega_h)


@dataclass(frozen=True)
class Scherk2p:
    """Doubly periodic Scherk surface over a unit rhombus of angle ``psi``.

    Weierstrass data ``g = z`` on the unit disc and
    ``dh = i k z dz / Q`` with ``Q = z^4 - 2 cos(2 t) z^2 + 1``,
    ``t = (pi - psi)/2`` and ``k = 4 sin(2 t)/pi`` (unit edge length).
    The four roots of ``Q`` are the ends; the arcs of the unit circle between
    them map to the vertical lines over the rhombus vertices.
    """

    psi: float
    roots: np.ndarray = field(init=False, repr=False)
    coef: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0.0 < self.psi < math.pi:
            raise DomainError(f"rhombus angle psi={self.psi!r} must lie in (0, pi)")
        t = 0.5 * (math.pi - self.psi)
        k = 4.0 * math.sin(2.0 * t) / math.pi
        r = np.exp(1j * t)
        roots = np.array([r, -r, np.conj(r), -np.conj(r)])
        roots = roots[np.argsort(np.angle(roots) % (2 * np.pi))]
        dq = np.array([np.prod([z - w for w in roots if w != z]) for z in roots])
        num = np.stack([0.5j * k * (1 - roots ** 2), -0.5 * k * (1 + roots ** 2),
                        1j * k * roots])
        object.__setattr__(self, "roots", roots)
        object.__setattr__(self, "coef", num / dq)

    def position(self, z):
        """Position over the disc point(s) ``z``, shape ``z.shape + (3,)``."""
        logs = np.log(1.0 - np.asarray(z, dtype=complex)[..., None] / self.roots)
        return np.real(np.einsum("cj,...j->...c", self.coef, logs))

    def vertices(self):
        """Rhombus vertices (horizontal projections of the vertical lines), cyclic order."""
        ang = np.angle(self.roots) % (2 * np.pi)
        gaps = np.diff(np.r_[ang, ang[0] + 2 * np.pi])
        return self.position(np.exp(1j * (ang + 0.5 * gaps)))[:, :2]

    def edge_signs(self, depth=1e-6):
        """Sign of the height limit on edge ``i`` (vertex ``i`` to ``i + 1``).

        Each end is located by evaluating just inside the disc at its root
        and matched with the nearest edge midpoint.
        """
        verts = self.vertices()
        mids = 0.5 * (verts + np.roll(verts, -1, axis=0))
        near = self.position((1.0 - depth) * self.roots)
        signs = np.zeros(4)
        for p in near:
            i = int(np.argmin(np.linalg.norm(mids - p[:2], axis=1)))
            signs[i] = np.sign(p[2])
        if np.any(signs == 0):
            raise ConfigurationError("ends could not be matched with rhombus edges")
        return signs

    def samples(self, n_r=160, n_t=256):
        """Disc points on a polar grid and their positions."""
        r = 1.0 - np.geomspace(1e-6, 1.0, n_r)[::-1][:-1]
        t = np.linspace(0.0, 2 * np.pi, n_t, endpoint=False)
        z = np.r_[0.0, (r[:, None] * np.exp(1j * t[None, :])).ravel()]
        return z, self.position(z)

    def _derivative(self, z):
        """Complex derivatives of the three coordinates, shape ``z.shape + (3,)``."""
        inv = 1.0 / (np.asarray(z, dtype=complex)[..., None] - self.roots)
        return np.einsum("cj,...j->...c", self.coef, inv)

    def height_at(self, xy, tol=1e-13, max_iter=60):
        """Height of the graph over horizontal points ``xy`` (shape (n, 2)).

        Inverts the horizontal projection by Newton's method in the disc,
        started from the nearest sample of a polar grid. Points that do not
        converge get NaN.
        """
        xy = np.asarray(xy, dtype=float)
        z0, pos0 = self.samples()
        _, idx = cKDTree(pos0[:, :2]).query(xy)
        z = z0[idx].copy()
        done = np.zeros(len(xy), dtype=bool)
        for _ in range(max_iter):
            r = self.position(z)[:, :2] - xy
            done = np.abs(r).max(axis=1) <= tol
            if done.all():
                break
            d = self._derivative(z)[:, :2]
            # d X_c / d(Re z) = Re d_c, d X_c / d(Im z) = -Im d_c
            jac = np.stack([np.stack([d[:, 0].real, -d[:, 0].imag], -1),
                            np.stack([d[:, 1].real, -d[:, 1].imag], -1)], axis=1)
            step = np.linalg.solve(jac, -r[..., None])[..., 0]
            zn = z + step[:, 0] + 1j * step[:, 1]
            # stay inside the open disc
            out = np.abs(zn) >= 1.0
            zn[out] = z[out] + 0.5 * (1.0 - np.abs(z[out])) * (zn[out] - z[out]) / np.abs(
                zn[out] - z[out])
            z = np.where(done, z, zn)
        out = self.position(z)[:, 2]
        return np.where(done, out, np.nan)


def _rigid_fit(src, dst):
    """Orthogonal map (rotation or reflection) plus translation taking ``src`` to ``dst``."""
    cs, cd = src.mean(axis=0), dst.mean(axis=0)
    u, _, vt = np.linalg.svd((src - cs).T @ (dst - cd))
    rot = u @ vt
    return rot, cd - cs @ rot


def align_scherk2p(ref, quad):
    """Place ``ref`` over the parallelogram ``quad = (p0, p1, q1, q0)`` in the ``(x1, x3)`` plane.

    The vertex correspondence and the height sign are chosen so that the
    ends over ``(p0, p1)`` and ``(q0, q1)`` go to ``+inf``.

    Returns
    -------
    rot, shift, sign, error
        ``(x1, x3) = V @ rot + shift`` and ``x2 = sign * height``; ``error``
        is the max vertex mismatch.
    """
    verts = ref.vertices()
    signs = ref.edge_signs()
    want = np.array([1, -1, 1, -1])
    best = None
    for shift, flip in itertools.product(range(4), (False, True)):
        order = np.roll(np.arange(4), -shift)
        if flip:
            order = order[::-1]
        src = verts[order]
        # edge i of quad joins quad[i] and quad[i+1]; find the ref edge joining the same pair
        edge_sign = np.empty(4)
        for i in range(4):
            a, b = order[i], order[(i + 1) % 4]
            edge_sign[i] = signs[a if (b - a) % 4 == 1 else b]
        for sign in (1.0, -1.0):
            if not np.array_equal(sign * edge_sign, want):
                continue
            rot, tr = _rigid_fit(src, quad)
            err = float(np.abs(src @ rot + tr - quad).max())
            if best is None or err < best[3]:
                best = (rot, tr, sign, err)
    if best is None:
        raise ConfigurationError("no vertex correspondence matches the edge labels")
    return best


# ---------------------------------------------------------------- probes


@dataclass(frozen=True)
class LimitComparison:
    """Distance of one surface of the family to the limit reference."""

    theta: float
    alpha: float
    distance: float
    offset: float
    n_samples: int
    extra: dict = field(default_factory=dict)

    def as_dict(self):
        d = {"theta": self.theta, "alpha": self.alpha, "distance": self.distance,
             "offset": self.offset, "n_samples": self.n_samples}
        d.update(self.extra)
        return d


@dataclass(frozen=True)
class LimitReport:
    regime: str
    steps: tuple
    monotone: bool
    threshold: float = math.nan
    within_threshold: bool = True

    @property
    def distances(self):
        return [s.distance for s in self.steps]

    @property
    def ok(self):
        return self.monotone and self.within_threshold

    def as_dict(self):
        return {"regime": self.regime, "monotone": self.monotone,
                "threshold": None if math.isnan(self.threshold) else self.threshold,
                "within_threshold": self.within_threshold, "ok": self.ok,
                "steps": [s.as_dict() for s in self.steps]}


def _sup_gap(x2, ref):
    d = x2 - ref
    d = d[np.isfinite(d)]
    if d.size == 0:
        raise ConfigurationError("comparison window contains no samples")
    offset = 0.5 * (d.max() + d.min())
    return float(np.abs(d - offset).max()), float(offset), int(d.size)


def _fold_x1(X, start):
    """Translate samples by multiples of the period (2, 0, 0) into ``[start, start + 2)``."""
    Y = X.copy()
    Y[:, 0] = start + np.mod(Y[:, 0] - start, 2.0)
    return Y


def compare_scherk1p(theta, alpha=DEFAULT_ALPHA, resolution=(129, 129)):
    sp = SurfaceParams(theta, alpha)
    strip = strip_of_params(sp)
    pts = build_graph_piece(sp, resolution).points() - np.array([strip.a, 0.0, strip.h])
    pts = _fold_x1(pts, -1.0)
    (x0, x1), (z0, z1) = SCHERK1P_WINDOW
    sel = (pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 2] >= z0) & (pts[:, 2] <= z1)
    P = pts[sel]
    dist, off, n = _sup_gap(P[:, 1], scherk1p_height(P[:, 0], P[:, 2]))
    return LimitComparison(sp.theta, sp.alpha, dist, off, n, {"h": strip.h, "a": strip.a})


def compare_scherk2p(theta, alpha=DEFAULT_ALPHA, resolution=(129, 129)):
    sp = SurfaceParams(theta, alpha)
    strip = strip_of_params(sp)
    h, a = strip.h, strip.a
    quad = np.array([[-a, -h], [1 - a, -h], [1 + a, h], [a, h]])
    e1, e2 = quad[1] - quad[0], quad[3] - quad[0]
    psi = math.atan2(e2[1], e2[0])
    ref = Scherk2p(psi)
    rot, shift, sign, verr = align_scherk2p(ref, quad)

    def ref_height(x1, x3):
        # back to rhombus coordinates of the reference; rot is orthogonal
        xy = (np.stack([x1, x3], axis=1) - shift) @ rot.T
        return sign * ref.height_at(xy)

    pts = _fold_x1(build_graph_piece(sp, resolution).points(), 0.5 - 1.0)
    basis = np.linalg.inv(np.stack([e1, e2], axis=1))
    st = (pts[:, [0, 2]] - quad[0]) @ basis.T
    lo, hi = SCHERK2P_WINDOW
    inside = ((st >= lo) & (st <= hi)).all(axis=1)
    P = pts[inside]
    dist, off, n = _sup_gap(P[:, 1], ref_height(P[:, 0], P[:, 2]))
    # over the next parallelogram the graph should be the reflected reference
    st1 = st - [1.0, 0.0]
    P1 = pts[((st1 >= lo) & (st1 <= hi)).all(axis=1)]
    ref1 = ref_height(P1[:, 0] - 1.0, P1[:, 2])
    gap_reflected = _sup_gap(-P1[:, 1], ref1)[0]
    gap_direct = _sup_gap(P1[:, 1], ref1)[0]
    return LimitComparison(sp.theta, sp.alpha, dist, off, n,
                           {"h": h, "a": a, "rhombus_angle": psi, "vertex_error": verr,
                            "reflected_gap": gap_reflected, "direct_gap": gap_direct,
                            "alternates": bool(gap_reflected < gap_direct)})


def _helicoid_rows(sp, x1_max):
    """Half-height in ``Im u`` of the window around ``i omega_v`` covering ``|x1| <= x1_max``."""
    ov = sp.omega_v
    c = position(1j * ov, sp)[0]

    def excess(y):
        return (position(1j * (ov + y), sp)[0] - c) / sp.mu - x1_max

    return brentq(excess, 1e-12, 0.5 * ov - 2 * sp.eps_end, xtol=1e-12)


def compare_helicoid(theta, alpha, n=(81, 161)):
    sp = SurfaceParams(theta, alpha)
    (x0, x1), (z0, z1) = HELICOID_WINDOW
    if not z1 < 0.5 * sp.omega_h:
        raise DomainError("helicoid window exceeds the strip; theta is too far from pi/2")
    reach = max(abs(x0), abs(x1))
    y = _helicoid_rows(sp, 1.25 * reach)
    ov = sp.omega_v
    xs = np.linspace(z0, z1, n[0])
    ys = ov + np.linspace(-y, y, n[1])
    mesh = sample_chart_grid(sp, xs, ys)
    centre = position(1j * ov, sp)
    P = ((mesh.X - centre) / sp.mu).reshape(-1, 3)
    sel = (P[:, 0] >= x0) & (P[:, 0] <= x1)
    P = P[sel]
    dist, off, k = _sup_gap(P[:, 1], helicoid_height(P[:, 0], P[:, 2], sp.omega_h))
    return LimitComparison(sp.theta, sp.alpha, dist, off, k, {"mu": sp.mu})


def _strictly_decreasing(values):
    return bool(np.all(np.diff(values) < 0))


def limit_probe(regime, closeness=None, alpha=None):
    """Distance series along the parameter ray of a limit regime.

    Parameters
    ----------
    regime : {"scherk1p", "scherk2p", "helicoid"}
    closeness : sequence, optional
        The ray: ``theta`` values for the Scherk regimes, ``(theta, alpha)``
        pairs for the helicoid. Defaults to the built-in rays.
    alpha : float, optional
        Fixed ``alpha`` along the Scherk rays (``alpha_inf`` for
        ``scherk2p``); defaults to ``pi/4``.

    Returns
    -------
    LimitReport
        ``monotone`` is true when the distances strictly decrease along the
        ray. For ``scherk1p`` the last distance must also be at most 0.05.
    """
    if regime not in REGIMES:
        raise DomainError(f"unknown regime {regime!r}; expected one of {REGIMES}")
    alpha = DEFAULT_ALPHA if alpha is None else float(alpha)
    if regime == "scherk1p":
        ray = SCHERK1P_RAY if closeness is None else tuple(closeness)
        steps = tuple(compare_scherk1p(t, alpha) for t in ray)
        threshold = 0.05
    elif regime == "scherk2p":
        if abs(alpha) < 1e-3:
            raise DomainError("scherk2p needs alpha_inf away from 0 (that ray is the helicoid)")
        ray = SCHERK2P_RAY if closeness is None else tuple(closeness)
        steps = tuple(compare_scherk2p(t, alpha) for t in ray)
        threshold = math.nan
    else:
        ray = HELICOID_RAY if closeness is None else tuple(tuple(p) for p in closeness)
        steps = tuple(compare_helicoid(t, a) for t, a in ray)
        threshold = math.nan
    dists = [s.distance for s in steps]
    within = math.isnan(threshold) or dists[-1] <= threshold
    return LimitReport(regime, steps, _strictly_decreasing(dists), threshold, within)
