"""Angle fields of the two generator families.

``omega_revolution`` is the travelling-wave sine-Gordon angle of the K-nets
of revolution, a function of ``x = u + v`` only.  ``solve_painleve3`` gives
the radial angle of Amsler surfaces, a function of ``r = sqrt(4 u v)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .elliptic import ellint_K, jacobi
from .errors import DomainError, SingularDomainError, SolverError

SERIES_RADIUS = 1e-3


# ---------------------------------------------------------------------------
# revolution angle
# ---------------------------------------------------------------------------


def domain_strip(k: float, strip_index: int = 0) -> tuple[float, float]:
    """Open x-interval on which the revolution angle lies strictly in (0, pi)."""
    k = float(k)
    if not (k > 0 and math.isfinite(k)):
        raise DomainError(f"modulus k must be positive and finite, got {k!r}")
    j = int(strip_index)
    if k < 1.0:
        K = ellint_K(k * k)
        return (2 * j * K, 2 * (j + 1) * K)
    if k == 1.0:
        if j == 0:
            return (0.0, math.inf)
        if j == -1:
            return (-math.inf, 0.0)
        raise DomainError("k = 1 admits only strip indices 0 and -1")
    kp = 1.0 / k
    w = kp * ellint_K(kp * kp)
    return (2 * j * w, (2 * j + 1) * w)


def _boundary_kind(k: float, xb: float) -> str:
    if not math.isfinite(xb):
        return "cusp"
    sn = float(jacobi(xb, k * k).sn)
    return "fold" if abs(sn) < 0.5 / max(k, 1.0) else "cusp"


def _check_strip(x: np.ndarray, k: float, strip_index: int | None) -> None:
    if strip_index is None:
        sn = jacobi(x, k * k).sn
        if np.any(sn == 0.0):
            raise SingularDomainError("sample on a fold curve (sn = 0)", "fold")
        if k > 1.0 and np.any(np.abs(sn) * k >= 1.0):
            raise SingularDomainError("sample on a cusp curve (sn = 1/k)", "cusp")
        return
    lo, hi = domain_strip(k, strip_index)
    if np.any(x <= lo):
        raise SingularDomainError(f"x below strip ({lo}, {hi})", _boundary_kind(k, lo))
    if np.any(x >= hi):
        raise SingularDomainError(f"x above strip ({lo}, {hi})", _boundary_kind(k, hi))


def omega_revolution(x, k: float, strip_index: int | None = None):
    """Revolution angle arccos(2 k^2 sn^2(x|k^2) - 1), principal branch.

    Evaluated as 2 atan2(|dn|, k |sn|), which is the same angle without the
    cancellation of arccos near 0 and pi.  With ``strip_index`` the samples must lie strictly inside that strip;
    without it any sample off the singular curves is accepted.
    """
    k = float(k)
    if not k > 0:
        raise DomainError(f"modulus k must be positive, got {k!r}")
    x = np.asarray(x, dtype=float)
    _check_strip(x, k, strip_index)
    t = jacobi(x, k * k)
    return 2.0 * np.arctan2(np.abs(t.dn), k * np.abs(t.sn))


def omega_revolution_dx(x, k: float):
    """First x-derivative of the revolution angle, -2 k cn sign(sn)."""
    t = jacobi(np.asarray(x, dtype=float), float(k) ** 2)
    return -2.0 * k * t.cn * np.sign(t.sn)


@dataclass(frozen=True)
class RevolutionAngle:
    """Revolution angle restricted to one strip of the x-axis."""

    k: float
    strip_index: int = 0

    def __post_init__(self):
        if not self.k > 0:
            raise DomainError(f"modulus k must be positive, got {self.k!r}")

    @property
    def interval(self) -> tuple[float, float]:
        return domain_strip(self.k, self.strip_index)

    def omega(self, x):
        return omega_revolution(x, self.k, self.strip_index)

    def omega_x(self, x):
        return omega_revolution_dx(x, self.k)

    def on_grid(self, u, v):
        """Angle and its u-, v-derivatives; only ``u + v`` enters."""
        x = np.add.outer(np.asarray(u, float), np.asarray(v, float))
        w = self.omega(x)
        wx = self.omega_x(x)
        return w, wx, wx.copy()


# ---------------------------------------------------------------------------
# Painleve III radial angle
# ---------------------------------------------------------------------------


def _series(k: float, r):
    s, c = math.sin(k), math.cos(k)
    a2, a4 = s / 4.0, s * c / 64.0
    r = np.asarray(r, dtype=float)
    return k + a2 * r**2 + a4 * r**4, 2 * a2 * r + 4 * a4 * r**3


def _rhs(r, y):
    return [y[1], math.sin(y[0]) - y[1] / r]


def _second_derivative(r, w, dw, k):
    r = np.asarray(r, dtype=float)
    out = np.empty_like(r)
    small = r < 1e-12
    out[small] = 0.5 * math.sin(k)
    out[~small] = np.sin(w[~small]) - dw[~small] / r[~small]
    return out


@dataclass
class AmslerAngle:
    """Sampled solution of w'' + w'/r - sin w = 0 with w(0) = k, w'(0) = 0."""

    k: float
    r_grid: np.ndarray
    omega_samples: np.ndarray
    domega_samples: np.ndarray
    r_first_cusp: float
    tol: float = 1e-10
    cusp_kind: str | None = None
    dense: object = field(default=None, repr=False, compare=False)
    _w: CubicHermiteSpline = field(init=False, repr=False)
    _dw: CubicHermiteSpline = field(init=False, repr=False)

    def __post_init__(self):
        r = np.asarray(self.r_grid, dtype=float)
        w = np.asarray(self.omega_samples, dtype=float)
        dw = np.asarray(self.domega_samples, dtype=float)
        self.r_grid, self.omega_samples, self.domega_samples = r, w, dw
        ddw = _second_derivative(r, w, dw, self.k)
        self._w = CubicHermiteSpline(r, w, dw, extrapolate=False)
        self._dw = CubicHermiteSpline(r, dw, ddw, extrapolate=False)

    @property
    def r_max(self) -> float:
        return float(self.r_grid[-1])

    def _check_r(self, r):
        r = np.abs(np.asarray(r, dtype=float))
        if np.any(r >= self.r_first_cusp):
            raise SingularDomainError(
                f"radius beyond first singular radius {self.r_first_cusp}", self.cusp_kind or "fold"
            )
        if np.any(r > self.r_max):
            raise DomainError(f"radius beyond solved range {self.r_max}")
        return r

    def omega(self, r):
        """Angle at radius r (even extension for r < 0)."""
        return self._w(self._check_r(r))

    def omega_r(self, r):
        """Radial derivative; odd under r -> -r."""
        r = np.asarray(r, dtype=float)
        return np.sign(r) * self._dw(self._check_r(r))

    def omega_rr(self, r):
        ra = np.atleast_1d(self._check_r(r))
        out = _second_derivative(ra, self._w(ra), self._dw(ra), self.k)
        return out.reshape(np.shape(r))

    def residual(self, r):
        """ODE residual at radii r > r0, on the solver's dense output when kept.

        Without a dense solution (e.g. after loading from CSV) the residual of
        the Hermite interpolant is returned instead.
        """
        r = np.asarray(r, dtype=float)
        h = 1e-5 * np.maximum(r, 1e-2)
        if self.dense is not None:
            y = self.dense(r)
            d2 = (self.dense(r + h)[1] - self.dense(r - h)[1]) / (2 * h)
            return d2 + y[1] / r - np.sin(y[0])
        d2 = (self._dw(r + h) - self._dw(r - h)) / (2 * h)
        return d2 + self._dw(r) / r - np.sin(self._w(r))

    def to_csv(self, path) -> None:
        path = Path(path)
        with path.open("w", newline="") as fh:
            fh.write(f"# k={self.k!r},r_first_cusp={self.r_first_cusp!r},tol={self.tol!r},cusp_kind={self.cusp_kind}\n")
            w = csv.writer(fh)
            w.writerow(["r", "omega", "domega"])
            for row in zip(self.r_grid, self.omega_samples, self.domega_samples):
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def from_csv(cls, path) -> "AmslerAngle":
        path = Path(path)
        meta = {}
        rows = []
        with path.open() as fh:
            first = fh.readline()
            if first.startswith("#"):
                for item in first[1:].strip().split(","):
                    key, _, val = item.partition("=")
                    meta[key.strip()] = val.strip()
                header = fh.readline()
            else:
                header = first
            if [h.strip() for h in header.split(",")] != ["r", "omega", "domega"]:
                raise DomainError(f"{path}: expected header 'r,omega,domega'")
            for line in csv.reader(fh):
                if line:
                    rows.append([float(v) for v in line])
        data = np.array(rows)
        k = float(meta.get("k", data[0, 1]))
        cusp = float(meta.get("r_first_cusp", "inf"))
        kind = meta.get("cusp_kind")
        return cls(
            k=k,
            r_grid=data[:, 0],
            omega_samples=data[:, 1],
            domega_samples=data[:, 2],
            r_first_cusp=cusp,
            tol=float(meta.get("tol", 1e-10)),
            cusp_kind=None if kind in (None, "None") else kind,
        )


def solve_painleve3(k: float, r_max: float, tol: float = 1e-10, allow_negative: bool = False) -> AmslerAngle:
    """Integrate w'' + w'/r - sin w = 0, w(0) = k, w'(0) = 0 up to ``r_max``.

    A two-term even series covers [0, 1e-3]; an adaptive 8th-order
    Runge-Kutta integrator with dense output continues from there.  The
    integration stops at the first radius where w reaches 0 or pi, located
    by bisection on the dense output.  ``allow_negative`` admits k in
    (-pi, 0), used to check the odd symmetry in k directly.
    """
    k = float(k)
    lo = -math.pi if allow_negative else 0.0
    if not (lo < k < math.pi) or k == 0.0:
        raise DomainError(f"initial angle k must lie in (0, pi), got {k!r}")
    if not (r_max > 0 and tol > 0):
        raise DomainError("r_max and tol must be positive")
    r0 = min(SERIES_RADIUS, 0.5 * r_max)
    w0, dw0 = _series(k, r0)
    sgn = 1.0 if k > 0 else -1.0
    # singular values: 0 and sgn*pi
    ev_zero = lambda r, y: y[0]
    ev_pi = lambda r, y: y[0] - sgn * math.pi
    ev_zero.terminal = ev_pi.terminal = True
    sol = solve_ivp(
        _rhs,
        (r0, r_max),
        [float(w0), float(dw0)],
        method="DOP853",
        rtol=0.1 * tol,
        atol=1e-3 * tol,
        dense_output=True,
        events=[ev_zero, ev_pi],
    )
    if sol.status == -1:
        raise SolverError(f"Painleve III integration failed: {sol.message}")
    dense = sol.sol
    r_cusp, kind = math.inf, None
    if sol.status == 1:
        hits = [(ev[0], name) for ev, name in zip(sol.t_events, ("cusp", "fold")) if len(ev)]
        r_hit, kind = min(hits)
        target = 0.0 if kind == "cusp" else sgn * math.pi
        a = max(r0, r_hit - 1e-3 * max(1.0, r_hit))
        g = lambda r: dense(r)[0] - target
        if g(a) * g(r_hit) < 0:
            r_cusp = brentq(g, a, r_hit, xtol=1e-13, rtol=1e-15)
        else:
            r_cusp = float(r_hit)
    r_end = min(r_max, r_cusp)

    # sample grid fine enough for the cubic Hermite interpolant
    n = 64
    while True:
        r_lin = np.linspace(r0, r_end, n + 1)
        r_s = np.concatenate([np.linspace(0.0, r0, 9)[:-1], r_lin])
        series = r_s < r0
        Y = np.empty((2, r_s.size))
        Y[:, series] = np.vstack(_series(k, r_s[series]))
        Y[:, ~series] = dense(r_s[~series])
        mid = 0.5 * (r_lin[1:] + r_lin[:-1])
        trial = AmslerAngle(k, r_s, Y[0], Y[1], r_cusp, tol, kind, dense)
        ym = dense(mid)
        err = max(np.max(np.abs(trial._w(mid) - ym[0])), np.max(np.abs(trial._dw(mid) - ym[1])))
        if err < tol or n >= 2**20:
            break
        n *= 2
    return trial


def amsler_omega(u, v, sol: AmslerAngle):
    """Angle of the Amsler net at (u, v), evaluated at r = sqrt(4 u v)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if np.any(u < 0) or np.any(v < 0):
        raise DomainError("Amsler angle is defined on the closed first quadrant u, v >= 0")
    return sol.omega(np.sqrt(4.0 * u * v))


def amsler_partials(u, v, sol: AmslerAngle):
    """Angle and its u-, v-derivatives; r_u = 2v/r and r_v = 2u/r."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    r = np.sqrt(4.0 * u * v)
    w = amsler_omega(u, v, sol)
    dw = sol.omega_r(r)
    with np.errstate(invalid="ignore", divide="ignore"):
        q = np.where(r > 0, dw / np.where(r > 0, r, 1.0), 0.5 * math.sin(sol.k))
    return w, 2.0 * v * q, 2.0 * u * q
