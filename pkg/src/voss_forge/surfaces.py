"""Explicit immersions: K-nets of revolution, the Bour family, rotation
fields, first-kind V-nets, Lax/Sym integration and the squeeze map."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .elliptic import ellint_K, ellint_Pi, jacobi, jacobi_epsilon
from .errors import DomainError, IntegrationError, SolverError
from .grids import GridSpec, SurfaceGrid, affine_transform
from .sine_gordon import AmslerAngle, RevolutionAngle, amsler_partials, domain_strip, omega_revolution

# ---------------------------------------------------------------------------
# cumulative quadrature
# ---------------------------------------------------------------------------

_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_MAX_BISECT = 40


def _gl_panels(func, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    return half * (func(nodes) @ _GL_W)


def _adaptive_panels(func, a: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    """Integral over each [a_i, b_i] by Gauss-Legendre with bisection.

    A panel is accepted when the one-panel and two-half-panel rules agree to
    ``tol`` scaled by the panel's share of the total length.
    """
    total = float(np.sum(b - a)) or 1.0
    out = np.zeros_like(a)
    todo = np.arange(a.size)
    lo, hi = a.copy(), b.copy()
    whole = _gl_panels(func, lo, hi)
    for _ in range(_MAX_BISECT):
        if todo.size == 0:
            return out
        m = 0.5 * (lo + hi)
        left = _gl_panels(func, lo, m)
        right = _gl_panels(func, m, hi)
        halves = left + right
        ok = np.abs(halves - whole) <= tol * np.maximum((hi - lo) / total, 1e-3)
        np.add.at(out, todo[ok], halves[ok])
        bad = ~ok
        # split every failing panel; the halves become new panels
        todo = np.concatenate([todo[bad], todo[bad]])
        lo, hi = np.concatenate([lo[bad], m[bad]]), np.concatenate([m[bad], hi[bad]])
        whole = np.concatenate([left[bad], right[bad]])
    raise SolverError("cumulative quadrature did not converge")


def cumulative_quad(func, x, x_ref: float, tol: float = 1e-10) -> np.ndarray:
    """``int_{x_ref}^{x} func`` at every entry of ``x``.

    The sorted distinct abscissae (with ``x_ref``) split the range into
    panels; the panel integrals are accumulated once and shared by all
    samples, so a full grid costs one pass over its distinct x values.
    """
    x = np.asarray(x, dtype=float)
    pts = np.unique(np.concatenate([x.ravel(), [float(x_ref)]]))
    if pts.size == 1:
        return np.zeros_like(x)
    vals = _adaptive_panels(func, pts[:-1], pts[1:], tol)
    cum = np.concatenate([[0.0], np.cumsum(vals)])
    cum -= cum[np.searchsorted(pts, x_ref)]
    return cum[np.searchsorted(pts, x)]


# ---------------------------------------------------------------------------
# profile curves
# ---------------------------------------------------------------------------


class ProfileCurve:
    """Meridian ``x -> (f(x), 0, g(x))`` of a surface of revolution.

    ``chart`` maps grid coordinates to (meridian parameter, rotation angle):
    ``(x, Y) = chart @ (u, v)``.  Integrals in the Bour formula start at
    ``x_ref``.  Subclasses supply f and g with derivatives up to order
    three (``None`` where unavailable).
    """

    name = "profile"
    chart = np.eye(2)
    x_ref = 0.0

    def params(self) -> dict:
        return {}

    def f(self, x):
        raise NotImplementedError

    def g(self, x):
        raise NotImplementedError

    def derivs(self, x, order: int = 2):
        """Tuple ``(f, f', f'', ..., g', g'', ...)`` up to ``order``."""
        raise NotImplementedError

    def check(self, x) -> None:
        f = self.f(x)
        if not np.all(f > 0):
            bad = np.asarray(x)[~(f > 0)].ravel()[0]
            raise DomainError(f"profile radius f must be positive, fails at x = {bad:.6g}")

    def provenance(self) -> dict:
        return {"profile": self.name, **self.params()}

    def axis_branch(self, s: float, t: float, x):
        """Signed radius ``(R, R', R'')`` for Bour members that pass through
        the axis, or ``None`` when ``R = sqrt(s f^2 - t^2)`` must stay positive."""
        return None


@dataclass
class KNetRevolution(ProfileCurve):
    """Meridian of the K-net of revolution, ``f = dn/k``, ``g = (E(am) - x)/k``.

    In the chart ``x = u + v``, ``Y = k (u - v)`` the grid lines are the
    asymptotic lines.
    """

    k: float
    name = "knet-revolution"

    def __post_init__(self):
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError(f"modulus k must be positive, got {self.k!r}")
        self.chart = np.array([[1.0, 1.0], [self.k, -self.k]])
        # start the Bour integrals in the middle of the first strip, away
        # from the folds where the sliding radicand vanishes
        lo, hi = domain_strip(self.k, 0)
        self.x_ref = 0.5 * (lo + hi) if math.isfinite(hi) else 1.0

    def params(self):
        return {"k": self.k}

    def f(self, x):
        return jacobi(x, self.k**2).dn / self.k

    def g(self, x):
        return (jacobi_epsilon(x, self.k**2) - np.asarray(x, float)) / self.k

    def derivs(self, x, order=2):
        k, m = self.k, self.k**2
        j = jacobi(x, m)
        sn, cn, dn = j.sn, j.cn, j.dn
        d1 = -m * sn * cn
        d2 = -m * dn * (cn * cn - sn * sn)
        out_f = [dn / k, d1 / k, d2 / k]
        out_g = [(dn * dn - 1.0) / k, 2.0 * dn * d1 / k]
        if order >= 3:
            d3 = m * sn * cn * (m * (cn * cn - sn * sn) + 4.0 * dn * dn)
            out_f.append(d3 / k)
            out_g.append(2.0 * (d1 * d1 + dn * d2) / k)
        return tuple(out_f[: order + 1]) + tuple(out_g[:order])


@dataclass
class Catenoid(ProfileCurve):
    """Catenary meridian ``f = a cosh x``, ``g = a x``."""

    a: float = 1.0
    name = "catenoid"

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise DomainError(f"catenoid waist a must be positive, got {self.a!r}")

    def params(self):
        return {"a": self.a}

    def f(self, x):
        return self.a * np.cosh(x)

    def g(self, x):
        return self.a * np.asarray(x, float)

    def derivs(self, x, order=2):
        a = self.a
        x = np.asarray(x, float)
        ch, sh = np.cosh(x), np.sinh(x)
        out_f = [a * ch, a * sh, a * ch, a * sh]
        out_g = [a + 0 * x, 0 * x, 0 * x]
        return tuple(out_f[: order + 1]) + tuple(out_g[:order])

    def axis_branch(self, s, t, x):
        # (s, t) = (1, +-a) is the helicoid R = a sinh x through the axis
        if abs(s - 1.0) > 1e-12 or abs(t * t - self.a**2) > 1e-12 * self.a**2:
            return None
        x = np.asarray(x, float)
        return self.a * np.sinh(x), self.a * np.cosh(x), self.a * np.sinh(x)


@dataclass
class ReciprocalDn(ProfileCurve):
    """Meridian ``f = c/dn``, ``g = c (Pi(k^2; am|k^2) - x)`` in the K-net chart.

    This is the rotation field of the K-net of revolution written as a
    profile curve; ``c`` is a homothety factor.
    """

    k: float
    c: float = 1.0
    name = "reciprocal-dn"

    def __post_init__(self):
        if not (0 < self.k < 1):
            raise DomainError(f"reciprocal-dn profile needs 0 < k < 1, got {self.k!r}")
        self.chart = np.array([[1.0, 1.0], [self.k, -self.k]])

    def params(self):
        return {"k": self.k, "c": self.c}

    def f(self, x):
        return self.c / jacobi(x, self.k**2).dn

    def g(self, x):
        m = self.k**2
        return self.c * (ellint_Pi(m, jacobi(x, m).am, m) - np.asarray(x, float))

    def derivs(self, x, order=2):
        m, c = self.k**2, self.c
        j = jacobi(x, m)
        sn, cn, dn = j.sn, j.cn, j.dn
        f1 = m * sn * cn / dn**2
        f2 = m * ((cn * cn - sn * sn) * dn * dn + 2.0 * m * sn * sn * cn * cn) / dn**3
        g1 = 1.0 / dn**2 - 1.0
        g2 = 2.0 * m * sn * cn / dn**3
        out_f = [c / dn, c * f1, c * f2]
        out_g = [c * g1, c * g2]
        if order >= 3:
            raise NotImplementedError("third derivatives are not provided for this profile")
        return tuple(out_f[: order + 1]) + tuple(out_g[:order])


@dataclass
class ReciprocalSn(ProfileCurve):
    """Meridian ``f = c/sn``, ``g = c ln(sn/(1 - cn))`` in the K-net chart.

    For ``c = 1`` this is the catenoid whose sliding partner is the helicoid
    carrying the negative rotation field of the K-net of revolution.
    """

    k: float
    c: float = 1.0
    name = "reciprocal-sn"

    def __post_init__(self):
        if not (0 < self.k < 1):
            raise DomainError(f"reciprocal-sn profile needs 0 < k < 1, got {self.k!r}")
        self.chart = np.array([[1.0, 1.0], [self.k, -self.k]])
        self.x_ref = ellint_K(self.k**2)

    def params(self):
        return {"k": self.k, "c": self.c}

    def f(self, x):
        return self.c / jacobi(x, self.k**2).sn

    def g(self, x):
        j = jacobi(x, self.k**2)
        return self.c * np.log(j.sn / (1.0 - j.cn))

    def derivs(self, x, order=2):
        m, c = self.k**2, self.c
        j = jacobi(x, m)
        sn, cn, dn = j.sn, j.cn, j.dn
        f1 = -cn * dn / sn**2
        f2 = (sn * sn * (dn * dn + m * cn * cn) + 2.0 * cn * cn * dn * dn) / sn**3
        g1 = -dn / sn
        g2 = cn / sn**2
        out_f = [c / sn, c * f1, c * f2]
        out_g = [c * g1, c * g2]
        if order >= 3:
            raise NotImplementedError("third derivatives are not provided for this profile")
        return tuple(out_f[: order + 1]) + tuple(out_g[:order])

    def axis_branch(self, s, t, x):
        # s c^2 = t^2 with s = 1 is the pure helicoid R = |t| cn/sn, which
        # crosses its axis at x = K; keep the sign so the sheet stays smooth.
        c2, t2 = self.c**2, t * t
        if t2 == 0 or abs(s * c2 - t2) > 1e-12 * t2 or abs(s - 1.0) > 1e-12:
            return None
        m = self.k**2
        j = jacobi(x, m)
        sn, cn, dn = j.sn, j.cn, j.dn
        a = abs(t)
        return a * cn / sn, -a * dn / sn**2, a * cn * (m * sn * sn + 2.0 * dn * dn) / sn**3


@dataclass
class Tabulated(ProfileCurve):
    """Meridian interpolated by cubic splines through samples ``(x, f, g)``."""

    x: np.ndarray
    f_samples: np.ndarray
    g_samples: np.ndarray
    name = "tabulated"
    _fs: CubicSpline = field(init=False, repr=False)
    _gs: CubicSpline = field(init=False, repr=False)

    def __post_init__(self):
        x = np.asarray(self.x, float)
        if x.ndim != 1 or x.size < 4 or np.any(np.diff(x) <= 0):
            raise DomainError("tabulated profile needs >= 4 strictly increasing x samples")
        self._fs = CubicSpline(x, np.asarray(self.f_samples, float))
        self._gs = CubicSpline(x, np.asarray(self.g_samples, float))
        self.x_ref = float(x[0])

    def params(self):
        return {"n": int(np.size(self.x))}

    def f(self, x):
        return self._fs(x)

    def g(self, x):
        return self._gs(x)

    def derivs(self, x, order=2):
        out_f = [self._fs(x, nu) for nu in range(order + 1)]
        out_g = [self._gs(x, nu) for nu in range(1, order + 1)]
        return tuple(out_f) + tuple(out_g)


# ---------------------------------------------------------------------------
# helpers shared by the closed forms
# ---------------------------------------------------------------------------


def _chart_coords(profile: ProfileCurve, grid: GridSpec):
    U, V = grid.mesh()
    A = profile.chart
    return A[0, 0] * U + A[0, 1] * V, A[1, 0] * U + A[1, 1] * V


def _to_grid(A: np.ndarray, Xx, Xw, Xxx=None, Xxw=None, Xww=None):
    """Chain rule from (x, Y) derivatives to (u, v) derivatives."""
    a, b, c, d = A[0, 0], A[0, 1], A[1, 0], A[1, 1]
    d1 = (a * Xx + c * Xw, b * Xx + d * Xw)
    if Xxx is None:
        return d1, None
    d2 = (
        a * a * Xxx + 2 * a * c * Xxw + c * c * Xww,
        a * b * Xxx + (a * d + b * c) * Xxw + c * d * Xww,
        b * b * Xxx + 2 * b * d * Xxw + d * d * Xww,
    )
    return d1, d2


def _polar(Y):
    cY, sY = np.cos(Y), np.sin(Y)
    z = np.zeros_like(Y)
    e_r = np.stack([cY, sY, z], axis=-1)
    e_phi = np.stack([-sY, cY, z], axis=-1)
    e_z = np.stack([z, z, z + 1.0], axis=-1)
    return e_r, e_phi, e_z


def _v(a):
    return np.asarray(a)[..., None]


# ---------------------------------------------------------------------------
# K-nets of revolution
# ---------------------------------------------------------------------------


def knet_revolution(k: float, grid: GridSpec, strip_index: int = 0) -> SurfaceGrid:
    """K-net of the pseudosphere of revolution with modulus ``k``.

    ``psi = (dn cos ky, dn sin ky, E(am x) - x)/k`` with ``x = u + v``,
    ``y = u - v``; exact first and second derivatives are attached.
    """
    k = float(k)
    if not (k > 0 and math.isfinite(k)):
        raise DomainError(f"modulus k must be positive, got {k!r}")
    U, V = grid.mesh()
    x, y = U + V, U - V
    omega_revolution(x, k, strip_index)
    m = k * k
    j = jacobi(x, m)
    sn, cn, dn = j.sn, j.cn, j.dn
    d1 = -m * sn * cn
    d2 = -m * dn * (cn * cn - sn * sn)
    e_r, e_phi, e_z = _polar(k * y)
    eps = jacobi_epsilon(x, m)
    pos = (_v(dn) * e_r + _v(eps - x) * e_z) / k
    Xx = (_v(d1) * e_r + _v(dn * dn - 1.0) * e_z) / k
    Xy = _v(dn) * e_phi
    Xxx = (_v(d2) * e_r + _v(2.0 * dn * d1) * e_z) / k
    Xxy = _v(d1) * e_phi
    Xyy = -k * _v(dn) * e_r
    # x = u + v, y = u - v
    Xu, Xv = Xx + Xy, Xx - Xy
    Xuu = Xxx + 2 * Xxy + Xyy
    Xuv = Xxx - Xyy
    Xvv = Xxx - 2 * Xxy + Xyy
    prov = {"family": "knet-revolution", "k": k, "strip_index": strip_index, "grid": grid.as_dict()}
    return SurfaceGrid(grid, pos, (Xu, Xv), (Xuu, Xuv, Xvv), prov)


# ---------------------------------------------------------------------------
# Bour family
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BourParams:
    """Deformation parameters of the Bour family (wrapping s, sliding t)."""

    s: float
    t: float

    def __post_init__(self):
        if not (math.isfinite(self.s) and math.isfinite(self.t)):
            raise DomainError("Bour parameters must be finite")
        if self.s <= 0:
            raise DomainError(f"Bour parameter s must be positive, got {self.s}")


def _bour_radicands(profile: ProfileCurve, s: float, t: float, x, order: int = 2):
    """Radicands and their derivatives along the meridian.

    Returns a dict with R2 = s f^2 - t^2 and Q = sqrt(R2 |gamma'|^2 - s^2 f^2 f'^2)
    plus derivatives of R2 and Q when ``order >= 2``.
    """
    if order >= 2:
        f, f1, f2, g1, g2 = profile.derivs(x, 2)
    else:
        f, f1, g1 = profile.derivs(x, 1)
    R2 = s * f * f - t * t
    S = f1 * f1 + g1 * g1
    D = R2 * S - s * s * f * f * f1 * f1
    # magnitude of the cancelling terms, so the tolerance covers rounding in R2 as well
    scale = (s * f * f + t * t) * S + s * s * f * f * f1 * f1
    branch = profile.axis_branch(s, t, x)
    if branch is not None:
        R2 = np.where(R2 > 0, R2, 0.0)
        D = np.zeros_like(R2)
    elif np.any(R2 <= 0):
        bad = np.asarray(x)[R2 <= 0].ravel()[0]
        raise DomainError(f"Bour radicand s f^2 - t^2 <= 0 at x = {bad:.6g}")
    tiny = 1e-12 * np.maximum(scale, 1e-300)
    if np.any(D < -tiny):
        bad = np.asarray(x)[D < -tiny].ravel()[0]
        raise DomainError(f"Bour radicand (s f^2 - t^2)|gamma'|^2 - s^2 f^2 f'^2 < 0 at x = {bad:.6g}")
    D = np.where(D < 0, 0.0, D)
    Q = np.sqrt(D)
    out = {"f": f, "f1": f1, "R2": R2, "Q": Q, "branch": branch}
    if order >= 2:
        R2p = 2.0 * s * f * f1
        Dp = R2p * S + R2 * 2.0 * (f1 * f2 + g1 * g2) - 2.0 * s * s * f * f1 * (f1 * f1 + f * f2)
        with np.errstate(divide="ignore", invalid="ignore"):
            Qp = np.where(Q > np.sqrt(tiny), Dp / (2.0 * Q), 0.0)
        out.update(f2=f2, R2p=R2p, R2pp=2.0 * s * (f1 * f1 + f * f2), Qp=Qp)
    return out


def bour_map(profile: ProfileCurve, p: BourParams, x, Y, tol: float = 1e-10, derivatives: bool = True):
    """Bour immersion at meridian parameter ``x`` and rotation angle ``Y``.

    With R = sqrt(s f^2 - t^2) and Q the second radicand,

        phi = (Y + t int Q/(f R^2)) / sqrt(s),
        psi = (R cos phi, R sin phi, sqrt(s) int f Q/R^2 - t phi),

    integrals taken from ``profile.x_ref``.  Returns ``(X, (Xx, XY),
    (Xxx, XxY, XYY))``; the derivative tuples are ``None`` when
    ``derivatives`` is false.
    """
    s, t = float(p.s), float(p.t)
    x = np.asarray(x, float)
    Y = np.asarray(Y, float)
    rs = math.sqrt(s)

    def q_over_r2(z):
        r = _bour_radicands(profile, s, t, z, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            return r["f"], np.where(r["Q"] > 0, r["Q"] / r["R2"], 0.0)

    def q_over_fr2(z):
        f, q = q_over_r2(z)
        return q / f

    def fq_over_r2(z):
        f, q = q_over_r2(z)
        return f * q

    r = _bour_radicands(profile, s, t, x, 2 if derivatives else 1)
    I1 = cumulative_quad(fq_over_r2, x, profile.x_ref, tol)
    I2 = cumulative_quad(q_over_fr2, x, profile.x_ref, tol)
    phi = (Y + t * I2) / rs
    branch = r["branch"]
    R = np.sqrt(r["R2"]) if branch is None else branch[0]
    Z = rs * I1 - t * phi
    e_r, e_phi, e_z = _polar(phi)
    X = _v(R) * e_r + _v(Z) * e_z
    if not derivatives:
        return X, None, None
    f, f1, Q, Qp, R2, R2p, R2pp = r["f"], r["f1"], r["Q"], r["Qp"], r["R2"], r["R2p"], r["R2pp"]
    if branch is not None:
        # pure helicoid: Q vanishes identically, the integrals are constant
        I1p = I2p = I1pp = I2pp = np.zeros_like(R)
        Rp, Rpp = branch[1], branch[2]
    else:
        I1p = f * Q / R2
        I2p = Q / (f * R2)
        I1pp = (f1 * Q + f * Qp) / R2 - f * Q * R2p / R2**2
        I2pp = Qp / (f * R2) - Q * (f1 * R2 + f * R2p) / (f * R2) ** 2
        Rp = R2p / (2.0 * R)
        Rpp = R2pp / (2.0 * R) - R2p**2 / (4.0 * R**3)
    px = t * I2p / rs
    pxx = t * I2pp / rs
    Xx = _v(Rp) * e_r + _v(R * px) * e_phi + _v(rs * I1p - t * px) * e_z
    XY = _v(R / rs) * e_phi - (t / rs) * e_z
    Xxx = (
        _v(Rpp - R * px * px) * e_r
        + _v(2.0 * Rp * px + R * pxx) * e_phi
        + _v(rs * I1pp - t * pxx) * e_z
    )
    XxY = _v(Rp / rs) * e_phi - _v(R * px / rs) * e_r
    XYY = -_v(R / s) * e_r
    return X, (Xx, XY), (Xxx, XxY, XYY)


def bour_immersion(profile: ProfileCurve, p: BourParams, grid: GridSpec, tol: float = 1e-10) -> SurfaceGrid:
    """Member ``(s, t)`` of the Bour family of the surface of revolution
    with meridian ``profile``, sampled on ``grid`` through ``profile.chart``."""
    x, Y = _chart_coords(profile, grid)
    profile.check(x)
    X, (Xx, XY), (Xxx, XxY, XYY) = bour_map(profile, p, x, Y, tol)
    d1, d2 = _to_grid(profile.chart, Xx, XY, Xxx, XxY, XYY)
    prov = {"family": "bour", **profile.provenance(), "s": p.s, "t": p.t, "grid": grid.as_dict()}
    return SurfaceGrid(grid, X, d1, d2, prov)


def bour_second_form(profile: ProfileCurve, p: BourParams, x):
    """Intrinsic prediction of the second form in the orthonormal frame
    (unit meridian direction, unit rotation direction).

    The Killing field is ``d/dY`` of the immersion, so ``G = |X_Y|^2 =
    (s f^2 - t^2)/s + t^2/s = f^2`` and the constants of the intrinsic
    description are ``s' = 1/s``, ``t' = t/s`` with the formula's ``(s, t)``.
    Returns ``(L, M, N)`` up to the overall sign fixed by the normal.
    """
    s, t = float(p.s), float(p.t)
    f, f1, f2, g1, g2 = profile.derivs(x, 2)
    speed = np.sqrt(f1 * f1 + g1 * g1)
    # arc-length derivatives of G = f^2 along the meridian
    G = f * f
    G1 = 2.0 * f * f1 / speed
    dspeed = (f1 * f2 + g1 * g2) / speed
    G11 = (2.0 * (f1 * f1 + f * f2) - G1 * dspeed) / speed**2
    sP, tP = 1.0 / s, t / s
    rad = 4.0 * sP * G - 4.0 * tP**2 - G1**2
    if np.any(rad < -1e-12 * (4 * sP * G + G1**2)):
        raise DomainError("second-form radicand 4 s G - 4 t^2 - G_1^2 is negative")
    rad = np.sqrt(np.maximum(rad, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        L = (G1**2 + 4.0 * tP**2 - 2.0 * G * G11) / (2.0 * G * rad)
    M = tP / G
    N = rad / (2.0 * G)
    return L, M, N


# ---------------------------------------------------------------------------
# rotation fields of surfaces of revolution
# ---------------------------------------------------------------------------


def rotation_field_positive(profile: ProfileCurve, grid: GridSpec, tol: float = 1e-10) -> SurfaceGrid:
    """Rotation field of the wrapping deformation of a surface of revolution.

    ``eta = (cos Y / f, sin Y / f, h)`` with ``h' = -g'/f^2`` and ``h(0) = 0``.
    For a K-net profile with ``k < 1`` the closed form
    ``h = k (Pi(k^2; am x | k^2) - x)`` is used, otherwise ``h`` is an
    adaptive quadrature of ``-g'/f^2``.
    """
    x, Y = _chart_coords(profile, grid)
    profile.check(x)
    f, f1, f2, g1, g2 = profile.derivs(x, 2)
    if isinstance(profile, KNetRevolution) and profile.k < 1:
        k, m = profile.k, profile.k**2
        h = k * (ellint_Pi(m, jacobi(x, m).am, m) - x)
    else:

        def integrand(z):
            d = profile.derivs(z, 1)
            return -d[2] / d[0] ** 2

        h = cumulative_quad(integrand, x, 0.0, tol)
    h1 = -g1 / f**2
    h2 = -g2 / f**2 + 2.0 * g1 * f1 / f**3
    e_r, e_phi, e_z = _polar(Y)
    pos = _v(1.0 / f) * e_r + _v(h) * e_z
    Xx = _v(-f1 / f**2) * e_r + _v(h1) * e_z
    XY = _v(1.0 / f) * e_phi
    Xxx = _v(-f2 / f**2 + 2.0 * f1 * f1 / f**3) * e_r + _v(h2) * e_z
    XxY = _v(-f1 / f**2) * e_phi
    XYY = -_v(1.0 / f) * e_r
    d1, d2 = _to_grid(profile.chart, Xx, XY, Xxx, XxY, XYY)
    prov = {"family": "rotation-field+", **profile.provenance(), "grid": grid.as_dict()}
    return SurfaceGrid(grid, pos, d1, d2, prov)


def rotation_field_negative(profile: ProfileCurve, grid: GridSpec) -> SurfaceGrid:
    """Rotation field of the sliding deformation, ``(rho sin Y, -rho cos Y, Y)``
    with ``rho = f'/g'``; always a helicoid."""
    x, Y = _chart_coords(profile, grid)
    profile.check(x)
    try:
        f, f1, f2, f3, g1, g2, g3 = profile.derivs(x, 3)
    except NotImplementedError:
        f, f1, f2, g1, g2 = profile.derivs(x, 2)
        f3 = g3 = None
    if np.any(g1 == 0) or (np.any(g1 > 0) and np.any(g1 < 0)):
        raise DomainError("g' vanishes or changes sign on the grid; the sliding field is undefined")
    rho = f1 / g1
    rho1 = (f2 * g1 - f1 * g2) / g1**2
    e_r, e_phi, e_z = _polar(Y)
    pos = -_v(rho) * e_phi + _v(Y) * e_z
    Xx = -_v(rho1) * e_phi
    XY = _v(rho) * e_r + e_z
    d2 = None
    if f3 is not None:
        rho2 = ((f3 * g1 - f1 * g3) * g1 - 2.0 * (f2 * g1 - f1 * g2) * g2) / g1**3
        d1, d2 = _to_grid(profile.chart, Xx, XY, -_v(rho2) * e_phi, _v(rho1) * e_r, _v(rho) * e_phi)
    else:
        d1, _ = _to_grid(profile.chart, Xx, XY)
    prov = {"family": "rotation-field-", **profile.provenance(), "grid": grid.as_dict()}
    return SurfaceGrid(grid, pos, d1, d2, prov)


# ---------------------------------------------------------------------------
# alignable V-nets of the first kind
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FirstKindParams:
    """Sign of the alignability, modulus ``k`` and spectral parameter ``lam``."""

    sign: str
    k: float
    lam: float

    def __post_init__(self):
        if self.sign not in ("+", "-"):
            raise DomainError(f"sign must be '+' or '-', got {self.sign!r}")
        if not (self.k > 0 and math.isfinite(self.k)):
            raise DomainError(f"modulus k must be positive, got {self.k!r}")
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise DomainError(f"lambda must be positive, got {self.lam!r}")

    @property
    def t(self) -> float:
        if self.sign == "+":
            return 0.5 * (self.lam - 1.0 / self.lam)
        return -0.5 * (self.lam + 1.0 / self.lam)


NEGATIVE_VARIANTS = ("theorem", "corollary")


def bour_params_first_kind(sign: str, k: float, lam: float, variant: str = "theorem") -> BourParams:
    """Deformation constants ``(s, t)`` of the member with spectral parameter ``lam``.

    Positive: ``t = (lam - 1/lam)/2``, ``s = k^2 + t^2``.  Negative:
    ``t = -(lam + 1/lam)/2`` and ``s = (k^2 + t^2 - 1)/k^2`` (``variant=
    "theorem"``) or ``s = k^2 + t^2 - 1`` (``variant="corollary"``).
    """
    p = FirstKindParams(sign, k, lam)
    t, k2 = p.t, p.k**2
    if sign == "+":
        return BourParams(k2 + t * t, t)
    if variant == "theorem":
        return BourParams((k2 + t * t - 1.0) / k2, t)
    if variant == "corollary":
        return BourParams(k2 + t * t - 1.0, t)
    raise DomainError(f"unknown negative-kind variant {variant!r}; use one of {NEGATIVE_VARIANTS}")


def first_kind_setup(params: FirstKindParams, variant: str = "theorem") -> tuple[ProfileCurve, BourParams]:
    """Profile and formula constants realising a first-kind V-net.

    The intrinsic constants ``(s, t)`` are turned into the constants of
    :func:`bour_map`.  Both signs are scaled so that the metric reads
    ``csc^4(w/2)(du^2 + 2 cos w du dv + dv^2)`` (positive) or
    ``sec^4(w/2)(du^2 - 2 cos w du dv + dv^2)`` (negative):

    * positive: meridian ``1/(k dn)``, constants measured against ``d/dy``:
      ``s_f = k^2/s``, ``t_f = t/s``;
    * negative: meridian ``1/sn`` with rotation angle ``k y`` so that
      ``lam = 1`` is the helicoid ``(s, t) = (1, -1)``; ``s_f = 1/s``,
      ``t_f = t/s``, followed by the homothety ``1/k^2``.

    ``t`` is an even function of ``lam`` on the negative side; for
    ``lam > 1`` its sign is reversed so that the second form scales as
    ``(lam, 1/lam)`` rather than ``(1/lam, lam)``.
    """
    k = params.k
    if not 0 < k < 1:
        raise DomainError(f"first-kind V-nets are built for 0 < k < 1, got k = {k}")
    bp = bour_params_first_kind(params.sign, k, params.lam, variant)
    s, t = bp.s, bp.t
    if params.sign == "+":
        return ReciprocalDn(k, 1.0 / k), BourParams(k * k / s, t / s)
    if params.lam > 1:
        t = -t
    c = 1.0 / k**2
    return ReciprocalSn(k, c), BourParams(1.0 / s, c * t / s)


_MIRROR = np.diag([-1.0, 1.0, 1.0])


def first_kind_vnet(params: FirstKindParams, grid: GridSpec, variant: str = "theorem", tol: float = 1e-10) -> SurfaceGrid:
    """Alignable V-net of the first kind ``eta^{+/-}_k(u, v, lam)``.

    Oriented so that the second form along ``u`` is positive with the normal
    ``X_u x X_v``.
    """
    U, V = grid.mesh()
    omega_revolution(U + V, params.k, 0)
    profile, bp = first_kind_setup(params, variant)
    S = bour_immersion(profile, bp, grid, tol)
    Xu, Xv = S.d1
    n = np.cross(Xu, Xv)
    L = np.sum(S.d2[0] * n, axis=-1)
    if np.median(L) < 0:
        S = affine_transform(S, _MIRROR, np.zeros(3))
    S.provenance = {
        "family": f"first-kind{params.sign}",
        "k": params.k,
        "lambda": params.lam,
        "variant": variant if params.sign == "-" else None,
        "bour": {"s": bp.s, "t": bp.t, **profile.provenance()},
        "grid": grid.as_dict(),
    }
    return S


# ---------------------------------------------------------------------------
# Lax pair and Sym formula
# ---------------------------------------------------------------------------


def _angle_partials(omega):
    """Callable ``(u, v) -> (w, w_u, w_v)`` for the supported angle sources."""
    if isinstance(omega, RevolutionAngle):

        def fn(u, v):
            x = np.asarray(u, float) + np.asarray(v, float)
            w = omega.omega(x)
            wx = omega.omega_x(x)
            return w, wx, wx

        return fn
    if isinstance(omega, AmslerAngle):
        return lambda u, v: amsler_partials(u, v, omega)
    if callable(omega):
        return omega
    raise DomainError("omega must be a RevolutionAngle, an AmslerAngle or a callable (u, v) -> (w, w_u, w_v)")


def _offdiag(a, b):
    z = np.zeros(np.shape(a), complex)
    return np.stack([np.stack([z, a], -1), np.stack([b, z], -1)], -2)


def _lax(w, wu, wv, lam):
    """``U, V`` and their lambda-derivatives, stacked over the sample shape."""
    e = np.exp(0.5j * w)
    ec = np.conj(e)
    z = np.zeros(np.shape(w), complex)
    U = np.stack([np.stack([0.25j * wu + z, -0.5j * lam * ec], -1), np.stack([-0.5j * lam * e, -0.25j * wu + z], -1)], -2)
    V = np.stack([np.stack([-0.25j * wv + z, 0.5j / lam * e], -1), np.stack([0.5j / lam * ec, 0.25j * wv + z], -1)], -2)
    Ul = _offdiag(-0.5j * ec, -0.5j * e)
    Vl = _offdiag(-0.5j / lam**2 * e, -0.5j / lam**2 * ec)
    return U, V, Ul, Vl


def _su2_to_r3(X):
    """``[[iz, ix - y], [ix + y, -iz]] -> (x, y, z)``; this handedness makes
    the lambda = 1 net congruent (not mirror-congruent) to the K-net of revolution."""
    x = 0.5 * np.imag(X[..., 0, 1] + X[..., 1, 0])
    y = 0.5 * np.real(X[..., 1, 0] - X[..., 0, 1])
    z = np.imag(X[..., 0, 0])
    return np.stack([x, y, z], axis=-1)


def _renormalize(Phi):
    det = Phi[..., 0, 0] * Phi[..., 1, 1] - Phi[..., 0, 1] * Phi[..., 1, 0]
    return Phi / np.sqrt(det)[..., None, None]


def _line_rk4(fn, lam, start, h, n_sub, which, Phi, P, other):
    """Advance (Phi, Phi_lam) by one grid step along ``u`` or ``v``.

    ``start`` is the running coordinate (array over the lines), ``other`` the
    fixed coordinate.
    """

    def rhs(s, Phi, P):
        u, v = (s, other) if which == "u" else (other, s)
        U, V, Ul, Vl = _lax(*fn(u, v), lam)
        A, Al = (U, Ul) if which == "u" else (V, Vl)
        return A @ Phi, A @ P + Al @ Phi

    hs = h / n_sub
    s = start
    for _ in range(n_sub):
        k1 = rhs(s, Phi, P)
        k2 = rhs(s + 0.5 * hs, Phi + 0.5 * hs * k1[0], P + 0.5 * hs * k1[1])
        k3 = rhs(s + 0.5 * hs, Phi + 0.5 * hs * k2[0], P + 0.5 * hs * k2[1])
        k4 = rhs(s + hs, Phi + hs * k3[0], P + hs * k3[1])
        Phi = Phi + hs / 6.0 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0])
        P = P + hs / 6.0 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1])
        Phi = _renormalize(Phi)
        s = s + hs
    drift = np.max(np.abs(np.conj(np.swapaxes(Phi, -1, -2)) @ Phi - np.eye(2)))
    if drift > 1e-8:
        raise IntegrationError(f"frame lost unitarity by {drift:.3g} along a {which}-line")
    return Phi, P


def _sweep(fn, lam, grid: GridSpec, n_sub: int, first: str):
    """Frames on the grid: a seed line along ``first``, then the transverse lines."""
    u, v = grid.u, grid.v
    nu, nv = grid.nu, grid.nv
    Phi = np.zeros((nu, nv, 2, 2), complex)
    P = np.zeros_like(Phi)
    if first == "u":
        ph, pl = np.eye(2, dtype=complex), np.zeros((2, 2), complex)
        Phi[0, 0], P[0, 0] = ph, pl
        for i in range(nu - 1):
            ph, pl = _line_rk4(fn, lam, u[i], u[i + 1] - u[i], n_sub, "u", ph, pl, v[0])
            Phi[i + 1, 0], P[i + 1, 0] = ph, pl
        ph, pl = Phi[:, 0].copy(), P[:, 0].copy()
        for j in range(nv - 1):
            ph, pl = _line_rk4(fn, lam, np.full(nu, v[j]), v[j + 1] - v[j], n_sub, "v", ph, pl, u)
            Phi[:, j + 1], P[:, j + 1] = ph, pl
    else:
        ph, pl = np.eye(2, dtype=complex), np.zeros((2, 2), complex)
        Phi[0, 0], P[0, 0] = ph, pl
        for j in range(nv - 1):
            ph, pl = _line_rk4(fn, lam, v[j], v[j + 1] - v[j], n_sub, "v", ph, pl, u[0])
            Phi[0, j + 1], P[0, j + 1] = ph, pl
        ph, pl = Phi[0, :].copy(), P[0, :].copy()
        for i in range(nu - 1):
            ph, pl = _line_rk4(fn, lam, np.full(nv, u[i]), u[i + 1] - u[i], n_sub, "u", ph, pl, v)
            Phi[i + 1, :], P[i + 1, :] = ph, pl
    return Phi, P


def integrate_lax_knet(omega, lam: float, grid: GridSpec, n_sub: int = 4) -> SurfaceGrid:
    """K-net from the Sym formula ``Psi = 2 lam Phi^{-1} Phi_lam``.

    The unitary frame and its lambda-derivative are integrated by RK4
    (``n_sub`` steps per grid cell) along the first u-line, then along all
    v-lines at once.  The result is mapped to R^3 through the
    ``i sigma`` basis.  Exact first and second derivatives follow from the
    frame.  The difference to the opposite path order (v-line first) is
    stored as ``provenance["cross_path_residual"]``.
    """
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError(f"lambda must be positive, got {lam!r}")
    fn = _angle_partials(omega)
    U_, V_ = grid.mesh()
    w, wu, wv = fn(U_, V_)
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(wu)) and np.all(np.isfinite(wv))):
        raise DomainError("angle is not finite on the grid")
    Phi, P = _sweep(fn, lam, grid, n_sub, "u")
    Phi2, P2 = _sweep(fn, lam, grid, n_sub, "v")
    Pinv = np.conj(np.swapaxes(Phi, -1, -2))
    pos = _su2_to_r3(2.0 * lam * Pinv @ P)
    alt = _su2_to_r3(2.0 * lam * np.conj(np.swapaxes(Phi2, -1, -2)) @ P2)

    U, V, Ul, Vl = _lax(w, wu, wv, lam)
    e = np.exp(0.5j * w)
    ec = np.conj(e)
    Ulu = _offdiag(-0.25 * wu * ec, 0.25 * wu * e)
    Ulv = _offdiag(-0.25 * wv * ec, 0.25 * wv * e)
    Vlv = _offdiag(0.25 / lam**2 * wv * e, -0.25 / lam**2 * wv * ec)

    def conj(A):
        return _su2_to_r3(2.0 * lam * Pinv @ A @ Phi)

    d1 = (conj(Ul), conj(Vl))
    d2 = (conj(Ulu + Ul @ U - U @ Ul), conj(Ulv + Ul @ V - V @ Ul), conj(Vlv + Vl @ V - V @ Vl))
    prov = {
        "family": "lax-sym",
        "lambda": lam,
        "omega": getattr(omega, "k", None),
        "n_sub": n_sub,
        "grid": grid.as_dict(),
        "cross_path_residual": float(np.max(np.linalg.norm(pos - alt, axis=-1))),
    }
    return SurfaceGrid(grid, pos, d1, d2, prov)


# ---------------------------------------------------------------------------
# squeeze map
# ---------------------------------------------------------------------------


def squeeze_reparam(obj, lam: float):
    """Relabel the parameter domain by ``(u, v) -> (lam u, v / lam)``.

    Accepts a :class:`GridSpec`, a :class:`SurfaceGrid` (positions kept,
    derivatives rescaled) or any object with a ``squeeze(lam)`` method.
    """
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError(f"squeeze factor must be positive, got {lam!r}")
    if isinstance(obj, GridSpec):
        return GridSpec(
            (lam * obj.u_range[0], lam * obj.u_range[1]),
            (obj.v_range[0] / lam, obj.v_range[1] / lam),
            obj.nu,
            obj.nv,
            obj.margin,
        )
    if isinstance(obj, SurfaceGrid):
        spec = squeeze_reparam(obj.spec, lam)
        d1 = None if obj.d1 is None else (obj.d1[0] / lam, obj.d1[1] * lam)
        d2 = None
        if obj.d2 is not None:
            d2 = (obj.d2[0] / lam**2, obj.d2[1], obj.d2[2] * lam**2)
        prov = dict(obj.provenance)
        prov["squeeze"] = prov.get("squeeze", 1.0) * lam
        return SurfaceGrid(spec, obj.positions, d1, d2, prov)
    if hasattr(obj, "squeeze"):
        return obj.squeeze(lam)
    raise DomainError(f"cannot squeeze an object of type {type(obj).__name__}")


# ---------------------------------------------------------------------------
# control surfaces
# ---------------------------------------------------------------------------


def ellipsoid(axes: tuple[float, float, float], grid: GridSpec) -> SurfaceGrid:
    """Polar-angle net ``(a sin u cos v, b sin u sin v, c cos u)`` of an ellipsoid.

    With unit axes this is the unit sphere with ``E = 1``, ``G = sin^2 u``.
    The net is not alignable for generic axes, which makes it a negative
    control for the alignability checks.
    """
    ax = np.asarray(axes, dtype=float)
    if ax.shape != (3,) or not np.all(ax > 0):
        raise DomainError(f"ellipsoid axes must be three positive numbers, got {axes!r}")
    U, V = grid.mesh()
    su, cu, sv, cv = np.sin(U), np.cos(U), np.sin(V), np.cos(V)
    pos = np.stack([su * cv, su * sv, cu], -1) * ax
    Xu = np.stack([cu * cv, cu * sv, -su], -1) * ax
    Xv = np.stack([-su * sv, su * cv, 0 * su], -1) * ax
    Xuu = np.stack([-su * cv, -su * sv, -cu], -1) * ax
    Xuv = np.stack([-cu * sv, cu * cv, 0 * su], -1) * ax
    Xvv = np.stack([-su * cv, -su * sv, 0 * su], -1) * ax
    prov = {"family": "ellipsoid", "axes": ax.tolist(), "grid": grid.as_dict()}
    return SurfaceGrid(grid, pos, (Xu, Xv), (Xuu, Xuv, Xvv), prov)
