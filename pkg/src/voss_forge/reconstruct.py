"""Fundamental-form specifications and Gauss-Weingarten reconstruction.

Coefficients are built from second-order jets in (u, v), so first and
second partials of every coefficient are exact given the angle function and
its derivatives.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import DegenerateImmersionError, DomainError, IntegrationError
from .geomkit import VerificationReport, fundamental_forms
from .grids import GridSpec, SurfaceGrid
from .sine_gordon import AmslerAngle, domain_strip, omega_revolution, omega_revolution_dx

# ---------------------------------------------------------------------------
# second-order jets in two variables
# ---------------------------------------------------------------------------


class Jet:
    """Value with first and second partials in (u, v)."""

    __slots__ = ("v", "du", "dv", "duu", "duv", "dvv")

    def __init__(self, v, du=0.0, dv=0.0, duu=0.0, duv=0.0, dvv=0.0):
        self.v = np.asarray(v, dtype=float)
        z = np.zeros_like(self.v)
        self.du, self.dv = z + du, z + dv
        self.duu, self.duv, self.dvv = z + duu, z + duv, z + dvv

    @classmethod
    def variables(cls, u, v) -> tuple["Jet", "Jet"]:
        u, v = np.broadcast_arrays(np.asarray(u, float), np.asarray(v, float))
        return cls(u, 1.0), cls(v, 0.0, 1.0)

    def compose(self, f0, f1, f2) -> "Jet":
        """``f(self)`` from the values of ``f, f', f''`` at ``self.v``."""
        return Jet(
            f0,
            f1 * self.du,
            f1 * self.dv,
            f2 * self.du * self.du + f1 * self.duu,
            f2 * self.du * self.dv + f1 * self.duv,
            f2 * self.dv * self.dv + f1 * self.dvv,
        )

    def _lift(self, other) -> "Jet":
        return other if isinstance(other, Jet) else Jet(np.zeros_like(self.v) + other)

    def __add__(self, other):
        o = self._lift(other)
        return Jet(self.v + o.v, self.du + o.du, self.dv + o.dv, self.duu + o.duu, self.duv + o.duv, self.dvv + o.dvv)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.v, -self.du, -self.dv, -self.duu, -self.duv, -self.dvv)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._lift(other)
        return Jet(
            self.v * o.v,
            self.du * o.v + self.v * o.du,
            self.dv * o.v + self.v * o.dv,
            self.duu * o.v + 2 * self.du * o.du + self.v * o.duu,
            self.duv * o.v + self.du * o.dv + self.dv * o.du + self.v * o.duv,
            self.dvv * o.v + 2 * self.dv * o.dv + self.v * o.dvv,
        )

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        x = self.v
        return self.compose(1 / x, -1 / x**2, 2 / x**3)

    def __truediv__(self, other):
        return self * self._lift(other).reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p: float):
        x = self.v
        return self.compose(x**p, p * x ** (p - 1), p * (p - 1) * x ** (p - 2))

    def sin(self) -> "Jet":
        return self.compose(np.sin(self.v), np.cos(self.v), -np.sin(self.v))

    def cos(self) -> "Jet":
        return self.compose(np.cos(self.v), -np.sin(self.v), -np.cos(self.v))


# ---------------------------------------------------------------------------
# form specifications
# ---------------------------------------------------------------------------

_NAMES = ("E", "F", "G", "L", "M", "N")


@dataclass
class FormSpec:
    """Coefficient functions ``(E, F, G, L, M, N)`` on an open parameter box.

    ``jets(u, v)`` returns six :class:`Jet` objects.  ``domain`` is the box
    ``((u0, u1), (v0, v1))``; evaluation outside it raises.
    """

    domain: tuple[tuple[float, float], tuple[float, float]]
    jets: Callable[[np.ndarray, np.ndarray], tuple[Jet, ...]]
    provenance: dict[str, Any] = field(default_factory=dict)

    def _check(self, u, v) -> None:
        (a, b), (c, d) = self.domain
        u, v = np.asarray(u), np.asarray(v)
        if np.any(u <= a) or np.any(u >= b) or np.any(v <= c) or np.any(v >= d):
            raise DomainError(f"point outside the form domain {self.domain}")

    def evaluate(self, u, v) -> dict[str, Jet]:
        self._check(u, v)
        return dict(zip(_NAMES, self.jets(u, v)))

    def values(self, u, v) -> dict[str, np.ndarray]:
        return {k: j.v for k, j in self.evaluate(u, v).items()}

    def squeeze(self, lam: float) -> "FormSpec":
        """Forms in the coordinates ``(U, V) = (lam u, v/lam)``."""
        lam = float(lam)
        if not (lam > 0 and math.isfinite(lam)):
            raise DomainError(f"lambda must be positive, got {lam!r}")
        (a, b), (c, d) = self.domain
        base = self.jets
        # d/dU = (1/lam) d/du and d/dV = lam d/dv; E, L pick up 1/lam^2, G, N lam^2
        scales = (1 / lam**2, 1.0, lam**2)

        def jets(U, V):
            out = []
            for i, j in enumerate(base(np.asarray(U) / lam, np.asarray(V) * lam)):
                s = scales[i % 3]
                out.append(
                    Jet(
                        s * j.v,
                        s * j.du / lam,
                        s * j.dv * lam,
                        s * j.duu / lam**2,
                        s * j.duv,
                        s * j.dvv * lam**2,
                    )
                )
            return tuple(out)

        prov = dict(self.provenance)
        prov["squeeze"] = prov.get("squeeze", 1.0) * lam
        return FormSpec(((lam * a, lam * b), (c / lam, d / lam)), jets, prov)

    def to_csv(self, path, grid: GridSpec) -> None:
        """Sampled coefficients with header ``u,v,E,F,G,L,M,N``."""
        U, V = grid.mesh()
        vals = self.values(U, V)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["u", "v", *_NAMES])
            for idx in np.ndindex(U.shape):
                w.writerow([repr(float(U[idx])), repr(float(V[idx]))] + [repr(float(vals[n][idx])) for n in _NAMES])


def _check_sign(sign: str) -> None:
    if sign not in ("+", "-"):
        raise DomainError(f"sign must be '+' or '-', got {sign!r}")


def _check_lam(lam: float) -> float:
    lam = float(lam)
    if not (lam > 0 and math.isfinite(lam)):
        raise DomainError(f"lambda must be positive, got {lam!r}")
    return lam


def _vnet_forms(sign: str, w: Jet, a: Jet, b: Jet, lu: Jet, lv: Jet):
    """``I = s^4 (a^2 du^2 +- 2ab cos w du dv + b^2 dv^2)``, ``II = 2 t (lu du^2 +- lv dv^2)``.

    ``s`` is ``csc(w/2)`` for the positive sign and ``sec(w/2)`` for the
    negative one; ``t`` is ``cot(w/2)`` or ``tan(w/2)``.
    """
    h = w * 0.5
    if sign == "+":
        s4 = h.sin() ** -4
        t = h.cos() / h.sin()
        e = 1.0
    else:
        s4 = h.cos() ** -4
        t = h.sin() / h.cos()
        e = -1.0
    E = s4 * a * a
    F = s4 * a * b * w.cos() * e
    G = s4 * b * b
    L = 2.0 * t * lu
    M = Jet(np.zeros_like(w.v))
    N = 2.0 * t * lv * e
    return E, F, G, L, M, N


def first_kind_forms(sign: str, k: float, lam: float, strip_index: int = 0, margin: float = 0.0) -> FormSpec:
    """Forms of the first-kind V-nets with ``w = w_k(u + v)``.

    The domain is the square whose diagonal sum stays in the strip.
    """
    _check_sign(sign)
    lam = _check_lam(lam)
    k = float(k)
    if not (k > 0 and math.isfinite(k)):
        raise DomainError(f"modulus k must be positive, got {k!r}")
    lo, hi = domain_strip(k, strip_index)
    g = GridSpec.in_strip(lo, hi, 2, margin)

    def jets(u, v):
        U, V = Jet.variables(u, v)
        x = U + V
        w0 = omega_revolution(x.v, k, strip_index)
        w1 = omega_revolution_dx(x.v, k)
        # pendulum equation w'' = sin w along x = u + v
        w = x.compose(w0, w1, np.sin(w0))
        one = Jet(np.ones_like(w0))
        return _vnet_forms(sign, w, one, one, one * lam, one / lam)

    prov = {"family": f"first-kind{sign}", "k": k, "lambda": lam, "strip_index": strip_index}
    # the strip is open; the square with zero margin touches it only at corners
    return FormSpec((g.u_range, g.v_range), jets, prov)


def amsler_jet(u: Jet, v: Jet, sol: AmslerAngle) -> Jet:
    """Angle jet ``w(r)`` with ``r = 2 sqrt(u v)``."""
    r = 2.0 * (u * v) ** 0.5
    return r.compose(sol.omega(r.v), sol.omega_r(r.v), sol.omega_rr(r.v))


_QUADRANT = ((0.0, math.inf), (0.0, math.inf))


def second_kind_forms(sign: str, k: float, lam: float, sol: AmslerAngle, margin: float = 1e-3) -> FormSpec:
    """Forms of the second-kind V-nets with ``w = w_k(2 sqrt(uv))``.

    The box is the open first quadrant; points with ``2 sqrt(uv)`` at or
    beyond ``(1 - margin)`` times the first singular radius raise.
    """
    _check_sign(sign)
    lam = _check_lam(lam)
    if not (0 < k < math.pi):
        raise DomainError(f"second-kind modulus must lie in (0, pi), got {k!r}")
    if not math.isclose(sol.k, k, rel_tol=1e-12):
        raise DomainError(f"angle solution has k = {sol.k}, expected {k}")
    r_lim = (1.0 - margin) * min(sol.r_first_cusp, sol.r_max)

    def jets(u, v):
        U, V = Jet.variables(u, v)
        if np.any(2.0 * np.sqrt(U.v * V.v) >= r_lim):
            raise DomainError("point beyond the cusp standoff 4uv < (1 - margin)^2 r_cusp^2")
        w = amsler_jet(U, V, sol)
        return _vnet_forms(sign, w, 1.0 / U, 1.0 / V, lam / U, 1.0 / (lam * V))

    prov = {"family": f"second-kind{sign}", "k": float(k), "lambda": lam, "r_first_cusp": sol.r_first_cusp}
    return FormSpec(_QUADRANT, jets, prov)


def counterexample_forms(k: float, sol: AmslerAngle, sign: str = "+", margin: float = 1e-3) -> FormSpec:
    """Second-kind forms (lambda = 1) in the coordinates ``(2 sqrt u, 2 sqrt v)``.

    The angle becomes ``w(r)`` with ``r = u v / 2``; the positive second form
    is ``2 cot(w/2)(du^2 + dv^2)``.
    """
    _check_sign(sign)
    if not (0 < k < math.pi):
        raise DomainError(f"second-kind modulus must lie in (0, pi), got {k!r}")
    if not math.isclose(sol.k, k, rel_tol=1e-12):
        raise DomainError(f"angle solution has k = {sol.k}, expected {k}")
    r_lim = (1.0 - margin) * min(sol.r_first_cusp, sol.r_max)

    def jets(u, v):
        U, V = Jet.variables(u, v)
        r = U * V * 0.5
        if np.any(r.v >= r_lim):
            raise DomainError("point beyond the cusp standoff")
        w = r.compose(sol.omega(r.v), sol.omega_r(r.v), sol.omega_rr(r.v))
        one = Jet(np.ones_like(r.v))
        E, F, G, L, M, N = _vnet_forms(sign, w, 2.0 / U, 2.0 / V, one, one)
        return E, F, G, L, M, N

    prov = {"family": f"counterexample{sign}", "k": float(k), "r_first_cusp": sol.r_first_cusp}
    return FormSpec(_QUADRANT, jets, prov)


def plane_forms(domain=((-10.0, 10.0), (-10.0, 10.0))) -> FormSpec:
    def jets(u, v):
        U, _ = Jet.variables(u, v)
        one, zero = Jet(np.ones_like(U.v)), Jet(np.zeros_like(U.v))
        return one, zero, one, zero, zero, zero

    return FormSpec(domain, jets, {"family": "plane"})


def sphere_forms(domain=((0.0, math.pi), (-10.0, 10.0))) -> FormSpec:
    """Unit sphere in polar angles with the inward normal: ``II = I``."""

    def jets(u, v):
        U, _ = Jet.variables(u, v)
        one, zero = Jet(np.ones_like(U.v)), Jet(np.zeros_like(U.v))
        G = U.sin() * U.sin()
        return one, zero, G, one, zero, G

    return FormSpec(domain, jets, {"family": "sphere"})


# ---------------------------------------------------------------------------
# compatibility
# ---------------------------------------------------------------------------


def _christoffel(E, F, G):
    """Christoffel symbols ``(G111, G211, G112, G212, G122, G222)`` from jets."""
    W = E.v * G.v - F.v**2
    Eu, Ev, Fu, Fv, Gu, Gv = E.du, E.dv, F.du, F.dv, G.du, G.dv
    e, f, g = E.v, F.v, G.v
    return (
        (g * Eu - 2 * f * Fu + f * Ev) / (2 * W),
        (2 * e * Fu - e * Ev - f * Eu) / (2 * W),
        (g * Ev - f * Gu) / (2 * W),
        (e * Gu - f * Ev) / (2 * W),
        (2 * g * Fv - g * Gu - f * Gv) / (2 * W),
        (e * Gv - 2 * f * Fv + f * Gu) / (2 * W),
    )


def gauss_codazzi_residual(spec: FormSpec, grid: GridSpec, tol: float = 1e-5) -> VerificationReport:
    """Gauss (Brioschi against ``(LN - M^2)/(EG - F^2)``) and Codazzi-Mainardi residuals.

    The Gauss residual is relative to ``max |K|``; each Codazzi residual is
    relative to the largest term of its equation.
    """
    U, V = grid.mesh()
    c = spec.evaluate(U, V)
    E, F, G, L, M, N = (c[n] for n in _NAMES)
    W = E.v * G.v - F.v**2
    if np.any(W <= 0):
        idx = tuple(int(i) for i in np.argwhere(W <= 0)[0])
        raise DegenerateImmersionError("EG - F^2 vanishes", idx)
    e, f, g = E.v, F.v, G.v
    m1 = np.empty(W.shape + (3, 3))
    m1[..., 0, 0] = -0.5 * E.dvv + F.duv - 0.5 * G.duu
    m1[..., 0, 1] = 0.5 * E.du
    m1[..., 0, 2] = F.du - 0.5 * E.dv
    m1[..., 1, 0] = F.dv - 0.5 * G.du
    m1[..., 1, 1], m1[..., 1, 2] = e, f
    m1[..., 2, 0] = 0.5 * G.dv
    m1[..., 2, 1], m1[..., 2, 2] = f, g
    m2 = np.zeros_like(m1)
    m2[..., 0, 1] = m2[..., 1, 0] = 0.5 * E.dv
    m2[..., 0, 2] = m2[..., 2, 0] = 0.5 * G.du
    m2[..., 1, 1], m2[..., 1, 2], m2[..., 2, 1], m2[..., 2, 2] = e, f, f, g
    K_brioschi = (np.linalg.det(m1) - np.linalg.det(m2)) / W**2
    K_forms = (L.v * N.v - M.v**2) / W
    kscale = max(float(np.max(np.abs(K_forms))), 1e-300)

    G111, G211, G112, G212, G122, G222 = _christoffel(E, F, G)
    t1 = (L.dv, -M.du, -L.v * G112, -M.v * (G212 - G111), N.v * G211)
    t2 = (M.dv, -N.du, -L.v * G122, -M.v * (G222 - G112), N.v * G212)
    r1, r2 = sum(t1), sum(t2)
    s1 = max(max(float(np.max(np.abs(t))) for t in t1), 1e-300)
    s2 = max(max(float(np.max(np.abs(t))) for t in t2), 1e-300)
    rep = VerificationReport(provenance={"forms": spec.provenance, "grid": grid.as_dict()})
    rep.add("gauss", (K_brioschi - K_forms) / kscale, tol)
    rep.add("codazzi_u", r1 / s1, tol)
    rep.add("codazzi_v", r2 / s2, tol)
    return rep


# ---------------------------------------------------------------------------
# frame integration
# ---------------------------------------------------------------------------


@dataclass
class FrameState:
    position: np.ndarray
    tangent_u: np.ndarray
    tangent_v: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        for name in ("position", "tangent_u", "tangent_v", "normal"):
            a = np.asarray(getattr(self, name), dtype=float)
            if a.shape != (3,):
                raise DomainError(f"{name} must be a 3-vector")
            setattr(self, name, a)

    @classmethod
    def canonical(cls, spec: FormSpec, u: float, v: float, rotation=None, position=None) -> "FrameState":
        """Gram-consistent frame with ``tangent_u`` along the first axis, then
        rotated by ``rotation`` and translated to ``position``."""
        c = spec.values(np.array(u), np.array(v))
        E, F, G = float(c["E"]), float(c["F"]), float(c["G"])
        W = E * G - F * F
        if W <= 0:
            raise DegenerateImmersionError("EG - F^2 vanishes at the seed")
        a = math.sqrt(E)
        R = np.eye(3) if rotation is None else np.asarray(rotation, dtype=float)
        p = np.zeros(3) if position is None else np.asarray(position, dtype=float)
        return cls(p, R @ [a, 0.0, 0.0], R @ [F / a, math.sqrt(W / E), 0.0], R @ [0.0, 0.0, 1.0])

    def gram_defect(self, E: float, F: float, G: float) -> float:
        tu, tv, n = self.tangent_u, self.tangent_v, self.normal
        d = [tu @ tu - E, tu @ tv - F, tv @ tv - G, tu @ n, tv @ n, n @ n - 1]
        return float(np.max(np.abs(d[:3])) / max(E, G) + np.max(np.abs(d[3:])))


def _gw_table(spec: FormSpec, t, fixed, direction: str) -> dict[str, np.ndarray]:
    """Gauss-Weingarten coefficients on the lattice ``t x fixed`` (shape ``(len(t), len(fixed))``)."""
    T, X = np.meshgrid(t, fixed, indexing="ij")
    c = spec.evaluate(T, X) if direction == "u" else spec.evaluate(X, T)
    E, F, G, L, M, N = (c[k] for k in _NAMES)
    W = E.v * G.v - F.v**2
    if np.any(W <= 0):
        raise DegenerateImmersionError("EG - F^2 vanishes along an integration line")
    G111, G211, G112, G212, G122, G222 = _christoffel(E, F, G)
    # shape operator S = I^{-1} II
    ei, fi, gi = G.v / W, -F.v / W, E.v / W
    return {
        "E": E.v, "F": F.v, "G": G.v, "L": L.v, "M": M.v, "N": N.v,
        "G111": G111, "G211": G211, "G112": G112, "G212": G212, "G122": G122, "G222": G222,
        "S11": ei * L.v + fi * M.v, "S12": ei * M.v + fi * N.v,
        "S21": fi * L.v + gi * M.v, "S22": fi * M.v + gi * N.v,
    }


def _frame_rates(c: dict[str, np.ndarray], m: int, Xu, Xv, n, direction: str):
    """Derivatives of (X, X_u, X_v, n) along u or v from the Gauss-Weingarten system."""
    col = lambda key: c[key][m][:, None]
    Xuv = col("G112") * Xu + col("G212") * Xv + col("M") * n
    if direction == "u":
        Xuu = col("G111") * Xu + col("G211") * Xv + col("L") * n
        nu = -(col("S11") * Xu + col("S21") * Xv)
        return Xu, Xuu, Xuv, nu
    Xvv = col("G122") * Xu + col("G222") * Xv + col("N") * n
    nv = -(col("S12") * Xu + col("S22") * Xv)
    return Xv, Xuv, Xvv, nv


def _project(state, E, F, G):
    """Replace the frame ``J`` by ``J Gc^{-1/2} Gt^{1/2}`` so that its Gram matrix is exact."""
    P, Xu, Xv, n = state
    J = np.stack([Xu, Xv, n], -1)
    Gc = np.swapaxes(J, -1, -2) @ J
    Gt = np.zeros_like(Gc)
    Gt[..., 0, 0], Gt[..., 0, 1], Gt[..., 1, 0], Gt[..., 1, 1] = E, F, F, G
    Gt[..., 2, 2] = 1.0

    def msqrt(A, inv=False):
        w, Q = np.linalg.eigh(A)
        w = w ** (-0.5 if inv else 0.5)
        return (Q * w[..., None, :]) @ np.swapaxes(Q, -1, -2)

    Jn = J @ msqrt(Gc, inv=True) @ msqrt(Gt)
    return P, Jn[..., 0], Jn[..., 1], Jn[..., 2]


def _gram_drift(state, E, F, G) -> float:
    _, Xu, Xv, n = state
    d = lambda a, b: np.einsum("...i,...i->...", a, b)
    scale = np.maximum(E, G)
    rel = np.max(np.abs(np.stack([d(Xu, Xu) - E, d(Xu, Xv) - F, d(Xv, Xv) - G])) / scale)
    orth = np.max(np.abs(np.stack([d(Xu, n), d(Xv, n), d(n, n) - 1])))
    return float(max(rel, orth))


class _Stats:
    def __init__(self):
        self.reorth = 0
        self.max_drift = 0.0
        self.steps = 0


def _march(spec: FormSpec, state, fixed, nodes, direction, n_sub, stats, record):
    """RK4 along ``direction`` through the grid ``nodes`` with ``n_sub`` substeps each.

    ``fixed`` holds the other coordinate of every line in the state.  The
    coefficients at all stage points are tabulated in one evaluation.
    ``record(i, state)`` is called at every grid node.
    """
    nsteps = len(nodes) - 1
    h = (nodes[-1] - nodes[0]) / nsteps
    dt = h / n_sub
    t = np.linspace(nodes[0], nodes[-1], 2 * n_sub * nsteps + 1)
    tab = _gw_table(spec, t, np.asarray(fixed, dtype=float), direction)

    def rhs(m, s):
        return _frame_rates(tab, m, s[1], s[2], s[3], direction)

    record(0, state)
    for i in range(nsteps):
        for j in range(n_sub):
            m = 2 * (i * n_sub + j)
            k1 = rhs(m, state)
            s2 = tuple(a + 0.5 * dt * b for a, b in zip(state, k1))
            k2 = rhs(m + 1, s2)
            s3 = tuple(a + 0.5 * dt * b for a, b in zip(state, k2))
            k3 = rhs(m + 1, s3)
            s4 = tuple(a + dt * b for a, b in zip(state, k3))
            k4 = rhs(m + 2, s4)
            state = tuple(a + dt / 6 * (b + 2 * c + 2 * d + e) for a, b, c, d, e in zip(state, k1, k2, k3, k4))
            stats.steps += 1
            if stats.steps % 16 == 0:
                E, F, G = (tab[key][m + 2] for key in "EFG")
                drift = _gram_drift(state, E, F, G)
                stats.max_drift = max(stats.max_drift, drift)
                if drift > 1e-3:
                    raise IntegrationError(f"frame Gram drift {drift:.3g} exceeds 1e-3")
                if drift > 1e-6:
                    state = _project(state, E, F, G)
                    stats.reorth += 1
        record(i + 1, state)
    return state


def _integrate(spec: FormSpec, grid: GridSpec, seed: FrameState, first: str, n_sub: int, stats: _Stats):
    u, v = grid.u, grid.v
    nu, nv = grid.nu, grid.nv
    out = [np.empty((nu, nv, 3)) for _ in range(4)]
    s0 = tuple(np.asarray(a, dtype=float)[None, :] for a in (seed.position, seed.tangent_u, seed.tangent_v, seed.normal))

    if first == "u":
        base = [None] * nu

        def rec_base(i, s):
            base[i] = s

        _march(spec, s0, v[:1], u, "u", n_sub, stats, rec_base)
        state = tuple(np.concatenate([b[k] for b in base]) for k in range(4))

        def rec(j, s):
            for k in range(4):
                out[k][:, j] = s[k]

        _march(spec, state, u, v, "v", n_sub, stats, rec)
    else:
        base = [None] * nv

        def rec_base(j, s):
            base[j] = s

        _march(spec, s0, u[:1], v, "v", n_sub, stats, rec_base)
        state = tuple(np.concatenate([b[k] for b in base]) for k in range(4))

        def rec(i, s):
            for k in range(4):
                out[k][i, :] = s[k]

        _march(spec, state, v, u, "u", n_sub, stats, rec)
    return out


def integrate_gauss_weingarten(
    spec: FormSpec,
    grid: GridSpec,
    seed: FrameState | None = None,
    n_sub: int = 4,
    closure_tol: float = 1e-6,
) -> SurfaceGrid:
    """Recover an immersion from compatible forms by frame integration.

    The frame is integrated along the first u-line, then up all v-lines,
    with RK4 and ``n_sub`` substeps per grid step.  The transposed order is
    integrated as well; its maximum position difference relative to the
    surface diameter is reported as ``closure_residual``.  Every 16 substeps
    the Gram matrix of the frame is compared with the forms: drift above
    1e-6 triggers a projection (counted), above 1e-3 a failure.
    """
    u0, v0 = grid.u[0], grid.v[0]
    spec.evaluate(*grid.mesh())
    if seed is None:
        seed = FrameState.canonical(spec, u0, v0)
    c = spec.values(np.array(u0), np.array(v0))
    if seed.gram_defect(float(c["E"]), float(c["F"]), float(c["G"])) > 1e-8:
        raise DomainError("seed frame is not Gram-consistent with the forms at the base corner")
    stats = _Stats()
    P, Xu, Xv, n = _integrate(spec, grid, seed, "u", n_sub, stats)
    P2 = _integrate(spec, grid, seed, "v", n_sub, _Stats())[0]
    diam = float(np.max(np.ptp(P.reshape(-1, 3), axis=0)))
    closure = float(np.max(np.linalg.norm(P - P2, axis=-1))) / max(diam, 1e-300)
    if closure > closure_tol:
        raise IntegrationError(f"cross-path closure residual {closure:.3g} exceeds {closure_tol:g}")
    prov = {
        "family": "gauss-weingarten",
        "forms": spec.provenance,
        "grid": grid.as_dict(),
        "n_sub": n_sub,
        "closure_residual": closure,
        "reorthonormalizations": stats.reorth,
        "max_gram_drift": stats.max_drift,
    }
    return SurfaceGrid(grid, P, (Xu, Xv), None, prov)


def form_curvatures(spec: FormSpec, u, v) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian and mean curvature straight from the coefficient functions."""
    c = spec.values(u, v)
    W = c["E"] * c["G"] - c["F"] ** 2
    K = (c["L"] * c["N"] - c["M"] ** 2) / W
    H = (c["E"] * c["N"] - 2 * c["F"] * c["M"] + c["G"] * c["L"]) / (2 * W)
    return K, H


def roundtrip_error(surface: SurfaceGrid, spec: FormSpec) -> tuple[float, float]:
    """Max relative error of the finite-difference forms of ``surface`` (positions
    only) against ``spec``: first form relative to ``max(|E|, |G|)``, second
    form relative to ``max(|L|, |N|)``, pointwise."""
    f = fundamental_forms(SurfaceGrid(surface.spec, surface.positions))
    c = spec.values(*surface.spec.mesh())
    s1 = np.maximum(np.abs(c["E"]), np.abs(c["G"]))
    s2 = np.maximum(np.maximum(np.abs(c["L"]), np.abs(c["N"])), 1e-300)
    e1 = max(float(np.max(np.abs(getattr(f, n) - c[n]) / s1)) for n in "EFG")
    e2 = max(float(np.max(np.abs(getattr(f, n) - c[n]) / s2)) for n in "LMN")
    return e1, e2
