"""Weierstrass data of the KMR surfaces with beta = pi/2.

The Gauss map and height differential are

    g = -i + 2 / (exp(i alpha) z - i),      dh = mu dz / w.

In the flat coordinate ``u`` of :mod:`kmrstrip.curve` the height differential
is the constant ``mu du`` and the position is

    X(u) = Re int (1/2 (1/g - g), i/2 (1/g + g), 1) mu du

anchored at the branch point D'' (``u = i omega_v / 2``). All path integrals
are computed in the ``u`` chart, where the only singularities are the four
Scherk-type ends.

Writing ``z = i num / (lam den)`` (see :meth:`FlatChart.projective_z`) and
``P = e num + lam den``, ``Q = e num - lam den`` with ``e = exp(i alpha)``
gives ``g = -i P / Q``. The forms then read

    phi_1 = i/2 (Q/P + P/Q),   phi_2 = 1/2 (P/Q - Q/P),   phi_3 = 1,

which stay finite at the poles of ``z``.
"""

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from ._quadrature import integrate_segments
from .curve import CurvePoint, FlatChart, TorusParams, build_flat_chart
from .exceptions import ConfigurationError, DomainError, SingularPointError

BETA = math.pi / 2
END_EXCLUSION = 1e-2
SEGMENT_TOL = 1e-11
GAUSS_INFINITY = complex(math.inf, 0.0)
END_NAMES = ("A", "Ap", "App", "Appp")


def normalize_alpha(alpha):
    """Map ``alpha`` into (-pi/2, pi/2]; the value -pi/2 is identified with pi/2."""
    alpha = float(alpha)
    half = math.pi / 2
    if not -half - 1e-15 <= alpha <= half + 1e-15:
        raise DomainError(f"alpha={alpha!r} must lie in (-pi/2, pi/2]")
    if alpha <= -half + 1e-15:
        return half
    return min(alpha, half)


def normalize_mu(theta, alpha):
    """Height scale fixing the end period to (2, 0, 0).

    ``mu = 2 sqrt(1 - sin^2(theta) cos^2(alpha)) / (pi sin(theta))``.
    """
    s = math.sin(theta)
    c = math.cos(alpha)
    return 2.0 * math.sqrt(1.0 - s * s * c * c) / (math.pi * s)


@dataclass(frozen=True)
class SurfaceParams:
    """One surface M(theta, alpha, pi/2) with its torus and flat chart.

    Examples
    --------
    >>> sp = SurfaceParams(math.pi / 3, math.pi / 2)
    >>> round(sp.mu, 4)
    0.7351
    """

    theta: float
    alpha: float
    beta: float = field(init=False, default=BETA)
    mu: float = field(init=False)
    torus: TorusParams = field(init=False)
    chart: FlatChart = field(init=False, repr=False)

    def __post_init__(self):
        torus = TorusParams(self.theta)
        alpha = normalize_alpha(self.alpha)
        object.__setattr__(self, "theta", torus.theta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "torus", torus)
        object.__setattr__(self, "mu", normalize_mu(torus.theta, alpha))
        object.__setattr__(self, "chart", build_flat_chart(torus))

    @property
    def lam(self):
        return self.torus.lam

    @property
    def omega_h(self):
        return self.chart.omega_h

    @property
    def omega_v(self):
        return self.chart.omega_v

    @property
    def eps_end(self):
        """End-exclusion radius in the chart."""
        return END_EXCLUSION * min(self.chart.omega_h, self.chart.omega_v)

    @property
    def anchor(self):
        """Chart coordinate of D'', mapped to the origin of space."""
        return 0.5j * self.chart.omega_v

    @property
    def height(self):
        """Half-width h of the strip, ``mu omega_h / 2``."""
        return 0.5 * self.mu * self.chart.omega_h


def as_surface_params(params_or_theta, alpha=None):
    if isinstance(params_or_theta, SurfaceParams):
        return params_or_theta
    return SurfaceParams(params_or_theta, alpha)


# ---------------------------------------------------------------- Gauss map


def gauss_map(p, params):
    """Stereographic Gauss map at a curve point; :data:`GAUSS_INFINITY` at a pole."""
    d = np.exp(1j * params.alpha) * complex(p.z) - 1j
    if abs(d) <= 1e-14 * (1.0 + abs(p.z)):
        return GAUSS_INFINITY
    return -1j + 2.0 / d


def _pq(u, sp):
    num, den = sp.chart.projective_z(u)
    e = np.exp(1j * sp.alpha) * num
    ld = sp.lam * den
    return e + ld, e - ld


def gauss_of_u(u, sp):
    """Gauss map as a function of the chart coordinate (vectorised)."""
    p, q = _pq(u, sp)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -1j * p / q


def normal_of_u(u, sp):
    """Unit normal by inverse stereographic projection of g, shape (..., 3)."""
    p, q = _pq(u, sp)
    # g = -i p / q; use homogeneous coordinates to stay finite at the ends
    gn = -1j * p
    gd = q
    n2 = np.abs(gn) ** 2 + np.abs(gd) ** 2
    cross = gn * np.conj(gd)
    return np.stack([2 * cross.real / n2, 2 * cross.imag / n2,
                     (np.abs(gn) ** 2 - np.abs(gd) ** 2) / n2], axis=-1)


def forms_density(u, sp):
    """Densities of the three forms per ``du``, shape (3,) + shape(u)."""
    p, q = _pq(u, sp)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = q / p
        s = p / q
    mu = sp.mu
    return np.stack([0.5j * mu * (r + s), 0.5 * mu * (s - r),
                     np.full(np.shape(r), mu, dtype=complex)])


def integrand(p, params):
    """Weierstrass form densities per ``du`` at a curve point.

    Raises
    ------
    SingularPointError
        At an end, where g is 0 or infinite.
    """
    g = gauss_map(p, params)
    if g == GAUSS_INFINITY or abs(g) < 1e-14:
        raise SingularPointError(f"z={p.z!r} is an end of the surface (g={g!r})")
    mu = params.mu
    return np.array([0.5 * (1 / g - g), 0.5j * (1 / g + g), 1.0]) * mu


# ---------------------------------------------------------------- ends


@dataclass(frozen=True)
class EndPoints:
    """The four Scherk-type ends.

    A and A'' are the poles of g (``z = i exp(-i alpha)``), A' and A''' its
    zeros (``z = -i exp(-i alpha)``). In the chart, A and A' sit on the
    column ``Re u = -omega_h/2`` and A'', A''' on ``Re u = omega_h/2``.
    ``side`` marks A and A''' as left ends (flux (0, -2, 0)).
    """

    A: CurvePoint
    Ap: CurvePoint
    App: CurvePoint
    Appp: CurvePoint
    u_A: complex
    u_Ap: complex
    u_App: complex
    u_Appp: complex
    y_A: float
    side: dict = field(default_factory=lambda: {"A": "left", "Ap": "right",
                                                 "App": "right", "Appp": "left"})

    def coords(self):
        return np.array([self.u_A, self.u_Ap, self.u_App, self.u_Appp])

    def coord(self, name):
        return getattr(self, "u_" + name)


def _pole_height(sp):
    """Height ``y_A`` in [0, omega_v) of the pole of g on the column omega_h/2."""
    if sp.alpha == math.pi / 2:
        return 0.0
    x = 0.5 * sp.omega_h
    target = math.pi / 2 - sp.alpha
    rot = np.exp(-1j * target)

    ov = sp.omega_v

    def f(y):
        # the column maps onto the unit circle, z(x) = 1 and z(x + i ov) = -1
        if y <= 0.0:
            return -target
        if y >= ov:
            return math.pi - target
        z, _ = sp.chart.zw(complex(x, y))
        return float(np.angle(z * rot))

    return brentq(f, 0.0, ov, xtol=1e-15, rtol=1e-15, maxiter=200)


@lru_cache(maxsize=256)
def end_points(params):
    """Chart coordinates and curve points of the four ends."""
    sp = params
    y = _pole_height(sp)
    x = 0.5 * sp.omega_h
    ov = sp.omega_v
    u = {"A": complex(-x, ov - y), "Ap": complex(-x, -y),
         "App": complex(x, y), "Appp": complex(x, y + ov)}
    pts = {k: sp.chart.point(v) for k, v in u.items()}
    return EndPoints(A=pts["A"], Ap=pts["Ap"], App=pts["App"], Appp=pts["Appp"],
                     u_A=u["A"], u_Ap=u["Ap"], u_App=u["App"], u_Appp=u["Appp"], y_A=y)


def _end_distance(sp, pts):
    """Distance from chart points to the nearest lattice image of an end."""
    ends = end_points(sp).coords()
    ph, pv = sp.chart.period_h, sp.chart.period_v
    pts = np.asarray(pts, dtype=complex)
    d = pts[..., None] - ends
    dx = d.real - ph * np.round(d.real / ph)
    dy = d.imag - pv * np.round(d.imag / pv)
    return np.hypot(dx, dy).min(axis=-1)


def _segment_end_distance(sp, a, b, samples=33):
    t = np.linspace(0.0, 1.0, samples)
    pts = a[:, None] + (b - a)[:, None] * t
    # exact point-segment distance for the nearest image on each sample set
    return _end_distance(sp, pts).min(axis=-1)


# ---------------------------------------------------------------- integrals


def segment_integrals(a, b, sp, tol=SEGMENT_TOL, check=True):
    """Complex integrals of the three forms along segments ``a[k] -> b[k]``.

    Returns an array of shape (3, n). The third component is set to the
    exact value ``mu (b - a)``.
    """
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    if check and a.size:
        _check_clear_of_ends(sp, a, b)

    def func(uu):
        return forms_density(uu, sp)[:2]

    vals, _ = integrate_segments(func, a, b, tol=tol)
    return np.vstack([vals, sp.mu * (b - a)[None, :]])


def _check_clear_of_ends(sp, a, b):
    ends = end_points(sp).coords()
    ph, pv = sp.chart.period_h, sp.chart.period_v
    eps = sp.eps_end * (1 - 1e-9)
    for e in ends:
        # nearest image of the end to each segment midpoint, then exact distance
        mid = 0.5 * (a + b)
        d = mid - e
        img = e + ph * np.round(d.real / ph) + 1j * pv * np.round(d.imag / pv)
        for di in (0, ph, -ph):
            for dj in (0, pv, -pv):
                c = img + di + 1j * dj
                seg = b - a
                t = np.where(np.abs(seg) > 0,
                             ((c - a) * np.conj(seg)).real / np.maximum(np.abs(seg) ** 2, 1e-300),
                             0.0)
                t = np.clip(t, 0.0, 1.0)
                dist = np.abs(a + t * seg - c)
                if np.any(dist < eps):
                    k = int(np.argmin(dist))
                    raise SingularPointError(
                        f"path segment {a[k]:.6g} -> {b[k]:.6g} comes within "
                        f"{dist[k]:.3e} of an end at u={c[k]:.6g} "
                        f"(exclusion radius {sp.eps_end:.3e})")


def path_integral(path, params, tol=SEGMENT_TOL):
    """Complex integral of the forms along a polygonal chart path, shape (3,)."""
    path = np.asarray([complex(p) for p in path], dtype=complex)
    if path.size < 2:
        return np.zeros(3, dtype=complex)
    return segment_integrals(path[:-1], path[1:], params, tol=tol).sum(axis=1)


def integrate_position(path, params, conjugate=False, tol=SEGMENT_TOL):
    """Real displacement along a polygonal path in the chart.

    Parameters
    ----------
    path : sequence of complex
        Chart waypoints. An empty or one-point path gives the zero vector.
    params : SurfaceParams
    conjugate : bool
        Take imaginary parts (the conjugate surface) instead of real parts.

    Raises
    ------
    SingularPointError
        If the path enters the end-exclusion disc of an end.
    """
    v = path_integral(path, params, tol=tol)
    return v.imag.copy() if conjugate else v.real.copy()


def position(u, params, conjugate=False):
    """Position of the point ``u`` with D'' at the origin.

    The path runs vertically along ``Re u = 0`` from D'' and then
    horizontally, which avoids the ends for ``|Re u| < omega_h / 2``.
    """
    u = complex(u)
    corner = complex(0.0, u.imag)
    return integrate_position([params.anchor, corner, u], params, conjugate=conjugate)


def end_loop(end, params, radius=None, n_vertices=64):
    """Counter-clockwise polygon around an end (closed: first == last)."""
    sp = params
    eps = sp.eps_end
    r = 1.5 * eps if radius is None else float(radius)
    if not eps < r < 2 * eps:
        raise ConfigurationError(
            f"loop radius {r:.3e} must lie in (eps_end, 2 eps_end) = ({eps:.3e}, {2 * eps:.3e})")
    # inscribed polygon must stay outside eps_end
    if r * math.cos(math.pi / n_vertices) <= eps:
        raise ConfigurationError("too few loop vertices for the requested radius")
    ends = end_points(sp)
    c = ends.coord(end) if isinstance(end, str) else complex(end)
    others = [e for e in ends.coords() if abs(e - c) > 1e-12]
    if others and _nearest_image_distance(sp, c, others) <= 2 * r:
        raise ConfigurationError(
            f"a loop of radius {r:.3e} around {c:.6g} would enclose another end")
    ph = np.linspace(0.0, 2 * np.pi, n_vertices + 1)
    pts = c + r * np.exp(1j * ph)
    pts[-1] = pts[0]
    return pts


def _nearest_image_distance(sp, c, pts):
    ph, pv = sp.chart.period_h, sp.chart.period_v
    d = np.asarray(pts) - c
    dx = d.real - ph * np.round(d.real / ph)
    dy = d.imag - pv * np.round(d.imag / pv)
    return float(np.hypot(dx, dy).min())


def _loop_integral(end, sp, radius=None):
    pts = end_loop(end, sp, radius)
    a, b = pts[:-1], pts[1:]
    # the polygon vertices sit at distance r > eps_end, chords at r cos(pi/n)
    vals = segment_integrals(a, b, sp, check=False)
    return vals.sum(axis=1)


def period_around_end(end, params, radius=None):
    """Period ``Re`` of the counter-clockwise loop integral around an end.

    ``end`` is one of ``"A", "Ap", "App", "Appp"`` or a chart coordinate.
    """
    return _loop_integral(end, params, radius).real


def flux_around_end(end, params, radius=None):
    """Flux ``Im`` of the counter-clockwise loop integral around an end."""
    return _loop_integral(end, params, radius).imag


def flux_along(path, params, tol=SEGMENT_TOL):
    """Flux (imaginary part of the form integrals) along a chart path or loop."""
    return integrate_position(path, params, conjugate=True, tol=tol)


# ---------------------------------------------------------------- periods


def gamma_tilde_path(params):
    """Waypoints of the cycle along which the second period T is taken.

    The cycle is homotopic to the horizontal chart line through D''' and D
    (``Im u = -omega_v/2``) traversed once in the positive direction. It
    crosses the end columns midway between the two ends on each column. At
    ``alpha = 0`` the zero ends sit on the line itself and the class is the
    limit from ``alpha > 0``.
    """
    sp = params
    ov, oh = sp.omega_v, sp.omega_h
    j1 = 0.5 * ov
    y_a = end_points(sp).y_A
    if sp.alpha >= 0:
        y_r, y_l = y_a - j1, -j1 - y_a
    else:
        y_r, y_l = y_a - 3 * j1, j1 - y_a
    return [complex(0.0, -j1), complex(0.25 * oh, y_r), complex(0.75 * oh, y_r),
            complex(oh, -j1), complex(1.25 * oh, y_l), complex(1.75 * oh, y_l),
            complex(2 * oh, -j1)]


def gamma_path(params):
    """Waypoints of a cycle with vanishing period.

    Two vertical lattice periods, up along the column of D'', D''' and up
    along the column of D, D'; the horizontal connectors are lattice
    translates of each other and cancel. Heights are chosen midway between
    the ends.
    """
    sp = params
    ov, oh = sp.omega_v, sp.omega_h
    y0 = end_points(sp).y_A + 0.5 * ov
    return [complex(0.0, y0), complex(0.0, y0 + ov), complex(oh, y0 + ov),
            complex(oh, y0 + 2 * ov), complex(0.0, y0 + 2 * ov)]


def period_T(params, refine=1):
    """Second period T = (T1, 0, T3) along the horizontal cycle.

    ``refine`` splits every leg into that many pieces (used to check
    invariance under refinement).
    """
    pts = gamma_tilde_path(params)
    if refine > 1:
        fine = [pts[0]]
        for a, b in zip(pts[:-1], pts[1:]):
            fine.extend(a + (b - a) * np.arange(1, refine + 1) / refine)
        pts = fine
    return integrate_position(pts, params)


def flux_T(params):
    return flux_along(gamma_tilde_path(params), params)


def vanishing_period_check(params):
    """Max-norm of the period along the cycle gamma (should vanish)."""
    return float(np.abs(integrate_position(gamma_path(params), params)).max())


A_SEAM_TOL = 1e-12


def reduce_a(x):
    """Reduce a real number modulo 1 into (-1/2, 1/2].

    Values within ``A_SEAM_TOL`` of -1/2 are identified with 1/2, so that
    rounding noise at ``alpha = 0`` does not flip the marking of the strip.
    """
    r = float(x - math.ceil(x - 0.5))
    return 0.5 if r < -0.5 + A_SEAM_TOL else r


@dataclass(frozen=True)
class PeriodsReport:
    """Periods and fluxes of one surface; ``a = T1/4`` reduced into (-1/2, 1/2]."""

    P: np.ndarray
    T: np.ndarray
    Fl_A: np.ndarray
    h: float
    a: float

    def as_dict(self):
        return {"P": [float(x) for x in self.P], "T": [float(x) for x in self.T],
                "flux_A": [float(x) for x in self.Fl_A], "h": self.h, "a": self.a}


def periods_report(params):
    P = period_around_end("A", params)
    T = period_T(params)
    fl = flux_around_end("A", params)
    return PeriodsReport(P=P, T=T, Fl_A=fl, h=abs(T[2]) / 4.0, a=reduce_a(T[0] / 4.0))
