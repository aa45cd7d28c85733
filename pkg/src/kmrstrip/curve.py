"""The spectral curve w^2 = (z^2 + lam^2)(z^2 + lam^-2) and its flat chart.

The flat coordinate is ``u = int dz / w`` with base point ``(z, w) = (0, 1)``
at ``u = 0``. In this coordinate the curve is a rectangular torus with lattice
``2*omega_h`` (real) and ``2i*omega_v`` (imaginary).

Two independent evaluators of ``u -> (z, w)`` are provided:

* :func:`z_of_u` transports the point along a path by integrating the
  polynomial system ``z' = w, w' = 2 z^3 + (lam^2 + lam^-2) z`` with an
  adaptive embedded Runge-Kutta pair;
* :meth:`FlatChart.zw` evaluates the closed form
  ``z = (i/lam) sn(-i lam u | lam^-4)``, ``w = cn dn``, vectorised over
  arrays of ``u``.
"""

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.special import ellipj, ellipkm1

from ._quadrature import integrate_real
from .exceptions import BranchProximityError, DomainError, QuadratureError

CURVE_RTOL = 1e-10
TRANSPORT_TOL = 1e-11
BRANCH_EXCLUSION = 1e-3


def lambda_of_theta(theta):
    """Return ``cot(theta / 2)`` for ``theta`` in the open interval (0, pi/2)."""
    theta = float(theta)
    if not 0.0 < theta < math.pi / 2:
        raise DomainError(f"theta={theta!r} must lie in the open interval (0, pi/2)")
    return 1.0 / math.tan(theta / 2.0)


@dataclass(frozen=True)
class TorusParams:
    """Rectangular torus parameter ``theta`` and the derived ``lam = cot(theta/2)``."""

    theta: float
    lam: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "lam", lambda_of_theta(self.theta))

    @property
    def inv_lam(self):
        return 1.0 / self.lam

    @property
    def modulus(self):
        """Jacobi parameter ``m = lam^-4`` of the uniformising sn function."""
        return self.lam ** -4

    @property
    def s_coeff(self):
        """``lam^2 + lam^-2``; equals ``4/sin(theta)^2 - 2``."""
        return self.lam ** 2 + self.lam ** -2


def w_squared(z, params):
    """``(z^2 + lam^2)(z^2 + lam^-2)``, vectorised over ``z``."""
    z = np.asarray(z, dtype=complex)
    z2 = z * z
    out = (z2 + params.lam ** 2) * (z2 + params.lam ** -2)
    return out if out.ndim else complex(out)


@dataclass(frozen=True)
class CurvePoint:
    z: complex
    w: complex

    def residual(self, params):
        """Scaled residual of the curve equation at this point."""
        scale = 1.0 + abs(self.z) ** 4 * params.lam ** 2
        return abs(self.w ** 2 - w_squared(self.z, params)) / scale

    def is_on_curve(self, params, rtol=CURVE_RTOL):
        return self.residual(params) <= rtol


def _omega_h_integrand(lam):
    # int_{1/lam}^{lam} ds / sqrt((s^2 - lam^-2)(lam^2 - s^2)); with
    # s^2 = lam^2 - (lam^2 - lam^-2) sin(phi)^2 and tan(phi) = exp(x) the
    # integrand is smooth and decays like exp(-|x|) even when lam^-4 is tiny
    m = lam ** -4

    def f(x):
        return 1.0 / (lam * np.sqrt((1.0 + np.exp(-2.0 * x)) * (1.0 + m * np.exp(2.0 * x))))
    return f


def _omega_h_range(lam):
    return -45.0, 2.0 * math.log(lam) + 45.0


def _omega_v_integrand(lam):
    # int_{-1/lam}^{1/lam} ds / sqrt((lam^2 - s^2)(lam^-2 - s^2)) after s = sin(phi)/lam
    m = lam ** -4
    return lambda phi: 1.0 / (lam * np.sqrt(1.0 - m * np.sin(phi) ** 2))


def _ellipj_complementary(y, m):
    """sn, cn, dn of real ``y`` for parameter ``1 - m``.

    For tiny ``m`` the library routine falls back to an expansion that loses
    accuracy for arguments near the quarter period ``K(1 - m)``. The argument
    is folded into ``[0, K/2]`` with ``sn(K - t) = cd(t)``, ``cn(K - t) =
    k' sd(t)``, ``dn(K - t) = k' nd(t)``, where ``k' = sqrt(m)``.
    """
    y = np.asarray(y, dtype=float)
    kq = ellipkm1(m)
    sign = np.sign(y)
    t = np.abs(y) % (4.0 * kq)
    # sn(4K - t) = -sn(t); cn, dn even
    upper = t > 2.0 * kq
    sign = np.where(upper, -sign, sign)
    t = np.where(upper, 4.0 * kq - t, t)
    # sn(2K - t) = sn(t), cn(2K - t) = -cn(t)
    flip = t > kq
    t = np.where(flip, 2.0 * kq - t, t)
    refl = t > 0.5 * kq
    tt = np.where(refl, kq - t, t)
    s, c, d, _ = ellipj(tt, 1.0 - m)
    k = math.sqrt(m)
    sn = np.where(refl, c / d, s)
    cn = np.where(refl, k * s / d, c)
    dn = np.where(refl, k / d, d)
    return sign * sn, np.where(flip, -cn, cn), dn


def _jacobi_complex(zeta, m):
    """sn, cn, dn of complex argument as (numerator, denominator) pieces.

    Returns ``(sn_num, cn_num, dn_num, den)`` with ``sn = sn_num / den`` etc.
    Keeping the common denominator separate lets callers handle the poles of
    sn (where ``den -> 0``) without overflow.
    """
    x = zeta.real
    y = zeta.imag
    s, c, d, _ = ellipj(x, m)
    s1, c1, d1 = _ellipj_complementary(y, m)
    den = c1 * c1 + m * (s * s1) ** 2
    sn_num = s * d1 + 1j * c * d * s1 * c1
    cn_num = c * c1 - 1j * s * d * s1 * d1
    dn_num = d * c1 * d1 - 1j * m * s * c * s1
    return sn_num, cn_num, dn_num, den


@dataclass(frozen=True)
class FlatChart:
    """Rectangular conformal model of the torus.

    ``omega_h`` and ``omega_v`` are the horizontal and vertical lattice
    half-periods; the lattice is generated by ``2*omega_h`` and ``2i*omega_v``.
    Vertical lines ``Re u = const`` are the level sets of the height.
    """

    params: TorusParams
    omega_h: float
    omega_v: float
    base: CurvePoint = CurvePoint(0j, 1 + 0j)

    @property
    def lam(self):
        return self.params.lam

    @property
    def period_h(self):
        return 2.0 * self.omega_h

    @property
    def period_v(self):
        return 2.0 * self.omega_v

    @cached_property
    def branch_points(self):
        return branch_points(self)

    @property
    def eps_branch(self):
        return BRANCH_EXCLUSION * min(self.omega_h, self.omega_v)

    def reduce(self, u):
        """Reduce ``u`` into ``[-omega_h, omega_h) x [-omega_v/2, 3 omega_v/2)``."""
        u = np.asarray(u, dtype=complex)
        x = (u.real + self.omega_h) % self.period_h - self.omega_h
        y = (u.imag + 0.5 * self.omega_v) % self.period_v - 0.5 * self.omega_v
        return x + 1j * y

    def projective_z(self, u):
        """Return ``(num, den)`` with ``z = i * num / (lam * den)``.

        ``den`` vanishes at the two points over ``z = infinity``.
        """
        zeta = -1j * self.lam * np.asarray(u, dtype=complex)
        sn_num, _, _, den = _jacobi_complex(zeta, self.params.modulus)
        return sn_num, den

    def zw(self, u):
        """Closed-form ``(z, w)`` at chart coordinates ``u`` (vectorised)."""
        zeta = -1j * self.lam * np.asarray(u, dtype=complex)
        sn_num, cn_num, dn_num, den = _jacobi_complex(zeta, self.params.modulus)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = 1j * sn_num / (self.lam * den)
            w = cn_num * dn_num / (den * den)
        return z, w

    def point(self, u):
        z, w = self.zw(complex(u))
        return CurvePoint(complex(z), complex(w))

    def z_pole_coords(self):
        """Chart coordinates of the two points over ``z = infinity`` in the base cell."""
        return np.array([self.omega_h + 0j, self.omega_h + 1j * self.omega_v])


@dataclass(frozen=True)
class BranchPoints:
    """The four zeros of ``w`` with their chart coordinates."""

    D: CurvePoint
    Dp: CurvePoint
    Dpp: CurvePoint
    Dppp: CurvePoint
    u_D: complex
    u_Dp: complex
    u_Dpp: complex
    u_Dppp: complex

    def coords(self):
        return np.array([self.u_D, self.u_Dp, self.u_Dpp, self.u_Dppp])

    def points(self):
        return [self.D, self.Dp, self.Dpp, self.Dppp]


def branch_points(chart):
    lam = chart.lam
    oh, ov = chart.omega_h, chart.omega_v
    half_v = 0.5 * ov
    return BranchPoints(
        D=CurvePoint(-1j * lam, 0j),
        Dp=CurvePoint(1j * lam, 0j),
        Dpp=CurvePoint(1j / lam, 0j),
        Dppp=CurvePoint(-1j / lam, 0j),
        u_D=complex(oh, -half_v),
        u_Dp=complex(oh, half_v),
        u_Dpp=complex(0.0, half_v),
        u_Dppp=complex(0.0, -half_v),
    )


def build_flat_chart(params, rtol=1e-10):
    """Compute the lattice half-periods of the torus by quadrature.

    Both half-periods are real elliptic integrals of ``dz/w`` along the
    imaginary z-axis between consecutive branch points. Trigonometric
    substitutions remove the square-root endpoint singularities, after which
    adaptive Gauss-Legendre converges quickly.

    Raises
    ------
    QuadratureError
        If the achieved relative error exceeds ``rtol``.
    """
    if not isinstance(params, TorusParams):
        params = TorusParams(params)
    lam = params.lam
    qtol = 1e-2 * rtol
    h_val, h_err = integrate_real(_omega_h_integrand(lam), *_omega_h_range(lam), rtol=qtol)
    v_val, v_err = integrate_real(_omega_v_integrand(lam), -math.pi / 2, math.pi / 2,
                                  rtol=qtol)
    for name, val, err in (("omega_h", h_val, h_err), ("omega_v", v_val, v_err)):
        if not (math.isfinite(val) and val > 0):
            raise QuadratureError(f"{name} quadrature produced {val!r}", achieved=err)
        if err > rtol * val:
            raise QuadratureError(
                f"{name}: relative error {err / val:.2e} exceeds {rtol:.1e}",
                achieved=err / val)
    return FlatChart(params=params, omega_h=h_val, omega_v=v_val)


def _lattice_images(chart, coords, center, radius):
    """All lattice translates of ``coords`` within ``radius`` of ``center``."""
    ph, pv = chart.period_h, chart.period_v
    coords = np.atleast_1d(np.asarray(coords, dtype=complex))
    out = []
    kx = int(math.ceil(radius / ph)) + 1
    ky = int(math.ceil(radius / pv)) + 1
    for c in coords:
        base = c - (round((c.real - center.real) / ph) * ph
                    + 1j * round((c.imag - center.imag) / pv) * pv)
        for i in range(-kx, kx + 1):
            for j in range(-ky, ky + 1):
                out.append(base + i * ph + 1j * j * pv)
    return np.array(out)


def _segment_distance(p, a, b):
    """Distance from points ``p`` to the segment [a, b] in the complex plane."""
    d = b - a
    if d == 0:
        return np.abs(p - a)
    t = np.clip(((p - a) * np.conj(d)).real / abs(d) ** 2, 0.0, 1.0)
    return np.abs(p - (a + t * d))


def _check_path(chart, path, eps):
    special = np.concatenate([chart.branch_points.coords(), chart.z_pole_coords()])
    for a, b in zip(path[:-1], path[1:]):
        center = 0.5 * (a + b)
        radius = 0.5 * abs(b - a) + eps + chart.period_h + chart.period_v
        near = _lattice_images(chart, special, center, radius)
        dist = _segment_distance(near, a, b)
        if np.any(dist < eps):
            k = int(np.argmin(dist))
            raise BranchProximityError(
                f"path segment {a:.6g} -> {b:.6g} passes within {dist[k]:.3e} of the "
                f"singular point u={near[k]:.6g} (exclusion radius {eps:.3e}); "
                "route the path through waypoints that keep clear of it")


def _rhs(chart):
    s = chart.params.s_coeff

    def f(_, y):
        z, w = y
        return np.array([w, 2 * z ** 3 + s * z]) * f.direction

    f.direction = 1.0
    return f


def z_of_u(chart, u, waypoints=None, rtol=TRANSPORT_TOL):
    """Transport the base point ``(0, 1)`` along a polygonal path to ``u``.

    The path runs ``0 -> waypoints... -> u``. The sheet of ``w`` is continuous
    along it because ``(z, w)`` is integrated jointly.

    Raises
    ------
    BranchProximityError
        If the path passes within ``eps_branch`` of a branch point or a pole
        of ``z``.
    """
    path = [0j] + [complex(p) for p in (waypoints or [])] + [complex(u)]
    _check_path(chart, path, chart.eps_branch)
    y = np.array([0j, 1 + 0j])
    rhs = _rhs(chart)
    for a, b in zip(path[:-1], path[1:]):
        if a == b:
            continue
        rhs.direction = b - a
        sol = solve_ivp(rhs, (0.0, 1.0), y, method="DOP853",
                        rtol=rtol, atol=rtol * 1e-2)
        if not sol.success:
            raise BranchProximityError(f"transport failed on {a} -> {b}: {sol.message}")
        y = sol.y[:, -1]
    return CurvePoint(complex(y[0]), complex(y[1]))


def transport_path(chart, path, n_samples=64, rtol=TRANSPORT_TOL):
    """Dense transport along a polygon; returns ``(u, z, w)`` sample arrays."""
    path = [complex(p) for p in path]
    _check_path(chart, path, chart.eps_branch)
    start = z_of_u(chart, path[0]) if path[0] != 0 else chart.base
    y = np.array([start.z, start.w])
    rhs = _rhs(chart)
    us, zs, ws = [path[0]], [y[0]], [y[1]]
    for a, b in zip(path[:-1], path[1:]):
        rhs.direction = b - a
        t = np.linspace(0.0, 1.0, n_samples + 1)
        sol = solve_ivp(rhs, (0.0, 1.0), y, method="DOP853", t_eval=t,
                        rtol=rtol, atol=rtol * 1e-2)
        us.extend(a + (b - a) * t[1:])
        zs.extend(sol.y[0, 1:])
        ws.extend(sol.y[1, 1:])
        y = sol.y[:, -1]
    return np.array(us), np.array(zs), np.array(ws)
