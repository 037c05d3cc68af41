"""Discrete differential-geometry operators and verification predicates on
sampled nets: fundamental forms, curvatures, net-character defects,
alignability, rotation operators and Codazzi residuals."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.integrate import simpson

from .errors import DegenerateImmersionError, DomainError, IntegrationError
from .grids import GridSpec, SurfaceGrid
from .surfaces import _angle_partials

EPS = 1e-12

# ---------------------------------------------------------------------------
# finite differences (4th order, one-sided at the ends)
# ---------------------------------------------------------------------------

_D1_CENTRAL = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D1_LEFT = [
    np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0,
    np.array([-3.0, -10.0, 18.0, -6.0, 1.0]) / 12.0,
]
_D2_CENTRAL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D2_LEFT = [
    np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0,
    np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0,
]


def _apply(a: np.ndarray, h: float, axis: int, central, left, odd: bool, power: int) -> np.ndarray:
    a = np.moveaxis(np.asarray(a, dtype=float), axis, 0)
    n = a.shape[0]
    if n < 6:
        raise DomainError(f"finite differences need at least 6 samples per direction, got {n}")
    out = np.empty_like(a)
    out[2:-2] = sum(w * a[i : n - 4 + i] for i, w in enumerate(central))
    for r, w in enumerate(left):
        out[r] = np.tensordot(w, a[: len(w)], axes=(0, 0))
        rev = np.tensordot(w, a[::-1][: len(w)], axes=(0, 0))
        out[n - 1 - r] = -rev if odd else rev
    return np.moveaxis(out / h**power, 0, axis)


def diff1(a, h: float, axis: int) -> np.ndarray:
    """First derivative along ``axis`` with 4th-order stencils."""
    return _apply(a, h, axis, _D1_CENTRAL, _D1_LEFT, True, 1)


def diff2(a, h: float, axis: int) -> np.ndarray:
    """Second derivative along ``axis`` with 4th-order stencils."""
    return _apply(a, h, axis, _D2_CENTRAL, _D2_LEFT, False, 2)


def derivatives(surface: SurfaceGrid):
    """``(X_u, X_v, X_uu, X_uv, X_vv)``, exact when the surface carries them."""
    du, dv = surface.spec.du, surface.spec.dv
    P = surface.positions
    if surface.d1 is not None:
        Xu, Xv = surface.d1
    else:
        Xu, Xv = diff1(P, du, 0), diff1(P, dv, 1)
    if surface.d2 is not None:
        Xuu, Xuv, Xvv = surface.d2
    elif surface.d1 is not None:
        Xuu, Xvv = diff1(Xu, du, 0), diff1(Xv, dv, 1)
        Xuv = 0.5 * (diff1(Xu, dv, 1) + diff1(Xv, du, 0))
    else:
        Xuu, Xvv = diff2(P, du, 0), diff2(P, dv, 1)
        Xuv = diff1(Xu, dv, 1)
    return Xu, Xv, Xuu, Xuv, Xvv


# ---------------------------------------------------------------------------
# fundamental forms and curvatures
# ---------------------------------------------------------------------------


@dataclass
class FundamentalForms:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray
    L: np.ndarray
    M: np.ndarray
    N: np.ndarray
    normal: np.ndarray

    @property
    def first(self) -> np.ndarray:
        return _sym(self.E, self.F, self.G)

    @property
    def second(self) -> np.ndarray:
        return _sym(self.L, self.M, self.N)


def _sym(a, b, c):
    return np.stack([np.stack([a, b], -1), np.stack([b, c], -1)], -2)


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def fundamental_forms(surface: SurfaceGrid) -> FundamentalForms:
    """First and second fundamental forms with normal ``X_u x X_v / |...|``."""
    Xu, Xv, Xuu, Xuv, Xvv = derivatives(surface)
    E, F, G = _dot(Xu, Xu), _dot(Xu, Xv), _dot(Xv, Xv)
    W = E * G - F * F
    bad = ~(W > EPS * np.maximum(E * G, 1e-300))
    if np.any(bad):
        idx = tuple(int(i) for i in np.argwhere(bad)[0])
        raise DegenerateImmersionError("EG - F^2 vanishes", idx)
    n = np.cross(Xu, Xv)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    return FundamentalForms(E, F, G, _dot(Xuu, n), _dot(Xuv, n), _dot(Xvv, n), n)


def curvatures(forms: FundamentalForms) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian and mean curvature fields."""
    W = forms.E * forms.G - forms.F**2
    if np.any(W <= 0):
        idx = tuple(int(i) for i in np.argwhere(W <= 0)[0])
        raise DegenerateImmersionError("EG - F^2 vanishes", idx)
    K = (forms.L * forms.N - forms.M**2) / W
    H = (forms.E * forms.N - 2 * forms.F * forms.M + forms.G * forms.L) / (2 * W)
    return K, H


def third_form(forms: FundamentalForms) -> np.ndarray:
    """III = 2H II - K I, as a field of symmetric 2x2 matrices."""
    K, H = curvatures(forms)
    return 2 * H[..., None, None] * forms.second - K[..., None, None] * forms.first


# ---------------------------------------------------------------------------
# coordinate lines
# ---------------------------------------------------------------------------


def geodesic_curvature_lines(surface: SurfaceGrid) -> tuple[np.ndarray, np.ndarray]:
    """Signed geodesic curvature of the u-lines and of the v-lines."""
    Xu, Xv, Xuu, _, Xvv = derivatives(surface)
    n = np.cross(Xu, Xv)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    out = []
    for T, A in ((Xu, Xuu), (Xv, Xvv)):
        speed = np.linalg.norm(T, axis=-1)
        if np.any(speed <= EPS):
            raise DegenerateImmersionError("coordinate line with zero speed")
        out.append(_dot(A, np.cross(n, T)) / speed**3)
    return out[0], out[1]


def frenet(surface: SurfaceGrid, direction: str = "u") -> tuple[np.ndarray, np.ndarray]:
    """Curvature and torsion of the u- or v-coordinate lines.

    First and second derivatives are exact when available; the third
    derivative is a 4th-order difference of the second along the line.
    """
    Xu, Xv, Xuu, _, Xvv = derivatives(surface)
    if direction == "u":
        d1, d2, h, ax = Xu, Xuu, surface.spec.du, 0
    elif direction == "v":
        d1, d2, h, ax = Xv, Xvv, surface.spec.dv, 1
    else:
        raise DomainError(f"direction must be 'u' or 'v', got {direction!r}")
    d3 = diff1(d2, h, ax)
    cr = np.cross(d1, d2)
    ncr = np.linalg.norm(cr, axis=-1)
    speed = np.linalg.norm(d1, axis=-1)
    kappa = ncr / speed**3
    with np.errstate(divide="ignore", invalid="ignore"):
        tau = _dot(cr, d3) / ncr**2
    return kappa, tau


@dataclass
class NetDefects:
    conjugate: float
    chebyshev_u: float
    chebyshev_v: float
    asymptotic: float
    geodesic_u: float
    geodesic_v: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def net_defects(surface: SurfaceGrid) -> NetDefects:
    """Scale-free defects of the net character.

    conjugate ``|M|/(|L|+|M|+|N|)``, asymptotic ``max(|L|,|N|)/(|L|+|M|+|N|)``,
    Chebyshev
    ``|d_v |X_u||`` and ``|d_u |X_v||`` and geodesic ``|kappa_g| / max |kappa|``
    per line family, all as maxima over the grid.
    """
    f = fundamental_forms(surface)
    Xu, Xv, Xuu, Xuv, Xvv = derivatives(surface)
    su, sv = np.linalg.norm(Xu, axis=-1), np.linalg.norm(Xv, axis=-1)
    cheb_u = np.abs(_dot(Xu, Xuv)) / su
    cheb_v = np.abs(_dot(Xv, Xuv)) / sv
    kg_u, kg_v = geodesic_curvature_lines(surface)
    ku = np.linalg.norm(np.cross(Xu, Xuu), axis=-1) / su**3
    kv = np.linalg.norm(np.cross(Xv, Xvv), axis=-1) / sv**3
    size = np.abs(f.L) + np.abs(f.M) + np.abs(f.N) + EPS
    return NetDefects(
        conjugate=float(np.max(np.abs(f.M) / size)),
        chebyshev_u=float(np.max(cheb_u)),
        chebyshev_v=float(np.max(cheb_v)),
        asymptotic=float(np.max(np.maximum(np.abs(f.L), np.abs(f.N)) / size)),
        geodesic_u=float(np.max(np.abs(kg_u)) / (np.max(ku) + EPS)),
        geodesic_v=float(np.max(np.abs(kg_v)) / (np.max(kv) + EPS)),
    )


# ---------------------------------------------------------------------------
# alignability
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class NetLoop:
    """Index rectangle with corners A = (i0, j0), B = (i1, j0), C = (i1, j1), D = (i0, j1)."""

    i0: int
    j0: int
    i1: int
    j1: int

    def check(self, spec: GridSpec) -> None:
        if not (self.i0 < self.i1 and self.j0 < self.j1):
            raise DomainError(f"degenerate loop {self}")
        if not (0 < self.i0 and self.i1 < spec.nu - 1 and 0 < self.j0 and self.j1 < spec.nv - 1):
            raise DomainError(f"loop {self} touches the grid boundary")


def random_loops(spec: GridSpec, n: int, seed: int = 0) -> list[NetLoop]:
    """``n`` loops with corners drawn uniformly from the interior indices."""
    rng = np.random.default_rng(seed)
    loops = []
    while len(loops) < n:
        i = np.sort(rng.choice(np.arange(1, spec.nu - 1), 2, replace=False))
        j = np.sort(rng.choice(np.arange(1, spec.nv - 1), 2, replace=False))
        loops.append(NetLoop(int(i[0]), int(j[0]), int(i[1]), int(j[1])))
    return loops


def alignability_defect(surface: SurfaceGrid, loop: NetLoop) -> float:
    """``|l1_AB + l3_BC - l3_AD - l1_DC|`` over the loop perimeter.

    Edge lengths are composite-Simpson integrals of the line speeds.
    """
    loop.check(surface.spec)
    Xu, Xv = derivatives(surface)[:2]
    su, sv = np.linalg.norm(Xu, axis=-1), np.linalg.norm(Xv, axis=-1)
    u, v = surface.u, surface.v
    i0, j0, i1, j1 = loop.i0, loop.j0, loop.i1, loop.j1
    ui, vj = u[i0 : i1 + 1], v[j0 : j1 + 1]
    l_ab = simpson(su[i0 : i1 + 1, j0], x=ui)
    l_dc = simpson(su[i0 : i1 + 1, j1], x=ui)
    l_ad = simpson(sv[i0, j0 : j1 + 1], x=vj)
    l_bc = simpson(sv[i1, j0 : j1 + 1], x=vj)
    return float(abs(l_ab + l_bc - l_ad - l_dc) / (l_ab + l_bc + l_ad + l_dc))


# ---------------------------------------------------------------------------
# rotation fields
# ---------------------------------------------------------------------------


def mixed_determinant(A, B):
    """``D(A, B) = (det(A + B) - det A - det B)/2``, batched over leading axes."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    return 0.5 * (np.linalg.det(A + B) - np.linalg.det(A) - np.linalg.det(B))


@dataclass
class VerificationReport:
    """Named residuals with tolerances; ``passed`` iff every max is within tolerance."""

    checks: dict[str, dict[str, Any]] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    def add(self, name: str, residual, tol: float) -> None:
        r = np.abs(np.asarray(residual, dtype=float)).ravel()
        mx = float(np.max(r)) if r.size else 0.0
        rms = float(np.sqrt(np.mean(r**2))) if r.size else 0.0
        self.checks[name] = {"max": mx, "rms": rms, "tol": float(tol), "pass": bool(mx <= tol)}

    @property
    def passed(self) -> bool:
        return all(c["pass"] for c in self.checks.values())

    def as_dict(self) -> dict:
        return {"checks": self.checks, "provenance": self.provenance, "pass": self.passed}

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.as_dict()), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "VerificationReport":
        checks = d.get("checks")
        if not isinstance(checks, dict):
            raise DomainError("report has no 'checks' mapping")
        for name, c in checks.items():
            if not isinstance(c, dict) or not {"max", "rms", "tol", "pass"} <= set(c):
                raise DomainError(f"check {name!r} lacks max/rms/tol/pass")
        return cls(dict(checks), dict(d.get("provenance", {})))

    def merge(self, other: "VerificationReport") -> "VerificationReport":
        out = VerificationReport(dict(self.checks), dict(self.provenance))
        for k, v in other.provenance.items():
            if k in out.provenance and out.provenance[k] != v:
                raise DomainError(f"conflicting provenance for {k!r}")
            out.provenance[k] = v
        for name, c in other.checks.items():
            if name in out.checks and out.checks[name]["max"] >= c["max"]:
                continue
            out.checks[name] = c
        return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def _same_grid(a: SurfaceGrid, b: SurfaceGrid) -> None:
    if a.spec != b.spec:
        raise DomainError("surfaces are sampled on different grids")


def reciprocal_parallel_check(psi: SurfaceGrid, eta: SurfaceGrid, tol: float = 1e-5) -> VerificationReport:
    """Rotation-field test: ``D(II_psi, II_eta) = 0`` and ``III_psi = III_eta``.

    The mixed determinant is divided by ``|II_psi| |II_eta|`` (Frobenius) and
    the third-form difference by ``|III_psi|``.
    """
    _same_grid(psi, eta)
    fp, fe = fundamental_forms(psi), fundamental_forms(eta)
    IIp, IIe = fp.second, fe.second
    D = mixed_determinant(IIp, IIe)
    scale = np.linalg.norm(IIp, axis=(-2, -1)) * np.linalg.norm(IIe, axis=(-2, -1)) + EPS
    IIIp, IIIe = third_form(fp), third_form(fe)
    d3 = np.linalg.norm(IIIp - IIIe, axis=(-2, -1)) / (np.linalg.norm(IIIp, axis=(-2, -1)) + EPS)
    rep = VerificationReport(provenance={"psi": psi.provenance, "eta": eta.provenance})
    rep.add("mixed_determinant", D / scale, tol)
    rep.add("third_form", d3, tol)
    return rep


@dataclass
class RotationCoefficients:
    """Entries of the rotation operator ``A = [[0, b], [c, 0]]`` in the K-net basis."""

    b: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        self.b = np.asarray(self.b, dtype=float)
        self.c = np.asarray(self.c, dtype=float)
        if self.b.shape != self.c.shape:
            raise DomainError("b and c must share a shape")
        if np.any(self.b * self.c == 0):
            raise DomainError("b c must not vanish")

    @property
    def matrix(self) -> np.ndarray:
        z = np.zeros_like(self.b)
        return np.stack([np.stack([z, self.b], -1), np.stack([self.c, z], -1)], -2)


@dataclass
class RotationOperator:
    """Per-sample operator ``A`` with ``(eta_u, eta_v) = (psi_u, psi_v) A``."""

    A: np.ndarray
    trace_defect: float
    antidiagonal_defect: float

    @property
    def b(self) -> np.ndarray:
        return self.A[..., 0, 1]

    @property
    def c(self) -> np.ndarray:
        return self.A[..., 1, 0]

    def coefficients(self) -> RotationCoefficients:
        return RotationCoefficients(self.b, self.c)


def rotation_operator(psi: SurfaceGrid, eta: SurfaceGrid, angle_tol: float = 1e-6) -> RotationOperator:
    """Solve ``d eta = d psi A`` per sample in the tangent basis of ``psi``."""
    _same_grid(psi, eta)
    Pu, Pv = derivatives(psi)[:2]
    Eu, Ev = derivatives(eta)[:2]
    n_p = np.cross(Pu, Pv)
    n_e = np.cross(Eu, Ev)
    sin_angle = np.linalg.norm(np.cross(n_p, n_e), axis=-1) / (
        np.linalg.norm(n_p, axis=-1) * np.linalg.norm(n_e, axis=-1) + EPS
    )
    if np.max(sin_angle) > angle_tol:
        idx = tuple(int(i) for i in np.unravel_index(np.argmax(sin_angle), sin_angle.shape))
        raise DomainError(f"tangent planes are not parallel (angle {np.max(sin_angle):.3g} at sample {idx})")
    J = np.stack([Pu, Pv], -1)
    Y = np.stack([Eu, Ev], -1)
    gram = np.swapaxes(J, -1, -2) @ J
    A = np.linalg.solve(gram, np.swapaxes(J, -1, -2) @ Y)
    size = np.linalg.norm(A, axis=(-2, -1)) + EPS
    tr = np.abs(A[..., 0, 0] + A[..., 1, 1]) / size
    diag = np.maximum(np.abs(A[..., 0, 0]), np.abs(A[..., 1, 1])) / size
    return RotationOperator(A, float(np.max(tr)), float(np.max(diag)))


def _line_integral(f: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Cumulative integral along ``axis`` by the trapezoid rule with the
    end-derivative correction ``h^2/12 (f'_i - f'_{i+1})`` (4th order)."""
    fp = diff1(f, h, axis)
    f = np.moveaxis(f, axis, 0)
    fp = np.moveaxis(fp, axis, 0)
    steps = 0.5 * h * (f[:-1] + f[1:]) + h * h / 12.0 * (fp[:-1] - fp[1:])
    out = np.concatenate([np.zeros_like(f[:1]), np.cumsum(steps, axis=0)])
    return np.moveaxis(out, 0, axis)


def rotation_quadrature(
    psi: SurfaceGrid,
    coeffs: RotationCoefficients,
    omega=None,
    tol: float = 1e-6,
    codazzi_tol: float = 1e-3,
) -> SurfaceGrid:
    """Integrate ``eta_u = c psi_v``, ``eta_v = b psi_u`` from ``eta(u_0, v_0) = 0``.

    The primary path runs along the first u-line and then up every v-column;
    the transposed path (first v-line, then u-rows) gives the
    path-independence residual.  When ``omega`` is given the Codazzi
    residual of ``coeffs`` is checked first at ``codazzi_tol``.
    """
    spec = psi.spec
    if coeffs.b.shape != (spec.nu, spec.nv):
        raise DomainError("coefficient fields do not match the grid")
    if omega is not None:
        rep = codazzi_residual(coeffs, omega, spec, codazzi_tol)
        bad = {k: v for k, v in rep.checks.items() if k.startswith("codazzi") and not v["pass"]}
        if bad:
            raise IntegrationError(f"coefficients violate the Codazzi equations: {sorted(bad)}")
    Pu, Pv = derivatives(psi)[:2]
    b, c = coeffs.b[..., None], coeffs.c[..., None]
    fu, fv = c * Pv, b * Pu
    du, dv = spec.du, spec.dv
    row = _line_integral(fu[:, :1], du, 0)
    eta1 = row + _line_integral(fv, dv, 1)
    col = _line_integral(fv[:1, :], dv, 1)
    eta2 = col + _line_integral(fu, du, 0)
    scale = max(float(np.max(np.abs(eta1))), 1.0)
    resid = float(np.max(np.linalg.norm(eta1 - eta2, axis=-1))) / scale
    if resid > tol:
        raise IntegrationError(f"path-independence residual {resid:.3g} exceeds {tol:g}")
    prov = {"family": "rotation-quadrature", "psi": psi.provenance, "path_residual": resid, "grid": spec.as_dict()}
    return SurfaceGrid(spec, eta1, (fu, fv), None, prov)


def _angle_fields(omega, spec: GridSpec):
    if isinstance(omega, tuple) and len(omega) == 3:
        return tuple(np.asarray(a, dtype=float) for a in omega)
    U, V = spec.mesh()
    return _angle_partials(omega)(U, V)


def codazzi_residual(
    coeffs: RotationCoefficients,
    omega,
    grid: GridSpec,
    tol: float = 1e-5,
    orientation: int = 1,
) -> VerificationReport:
    """Residuals of the Codazzi equations for ``(b, c)`` against the angle ``omega``.

    ``omega`` is an angle object (revolution, Amsler or callable) or a tuple
    of sampled fields ``(w, w_u, w_v)``.  Derivatives of ``b`` and ``c`` use
    4th-order differences.  The alignability identity is ``b_u = c_v`` for
    ``orientation = +1`` and ``b_u = -c_v`` for the reversed frame.
    """
    w, wu, wv = _angle_fields(omega, grid)
    b, c = coeffs.b, coeffs.c
    bu = diff1(b, grid.du, 0)
    cv = diff1(c, grid.dv, 1)
    csc, cot = 1.0 / np.sin(w), np.cos(w) / np.sin(w)
    t1 = (bu, c * csc * wv, b * cot * wu)
    t2 = (cv, c * cot * wv, b * csc * wu)
    r1 = -t1[0] - t1[1] - t1[2]
    r2 = -t2[0] - t2[1] - t2[2]
    s1 = max(max(float(np.max(np.abs(t))) for t in t1), EPS)
    s2 = max(max(float(np.max(np.abs(t))) for t in t2), EPS)
    ra = bu - orientation * cv
    sa = max(float(np.max(np.abs(bu))), float(np.max(np.abs(cv))), EPS)
    rep = VerificationReport(provenance={"grid": grid.as_dict(), "orientation": orientation})
    rep.add("codazzi_1", r1 / s1, tol)
    rep.add("codazzi_2", r2 / s2, tol)
    rep.add("alignability", ra / sa, tol)
    return rep


def rigid_align(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    """Best proper rigid motion ``x -> R x + t`` taking ``A`` onto ``B`` (Kabsch).

    Returns ``(R, t, rms)``.
    """
    a = np.asarray(A, dtype=float).reshape(-1, 3)
    b = np.asarray(B, dtype=float).reshape(-1, 3)
    ca, cb = a.mean(0), b.mean(0)
    H = (a - ca).T @ (b - cb)
    U, _, Vt = np.linalg.svd(H)
    d = np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0
    R = Vt.T @ np.diag([1.0, 1.0, d]) @ U.T
    t = cb - R @ ca
    rms = float(np.sqrt(np.mean(np.sum((a @ R.T + t - b) ** 2, axis=1))))
    return R, t, rms
