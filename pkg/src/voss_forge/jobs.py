"""Job configuration, family builders and named verification checks.

A job names a family with its parameters and a grid.  ``build_job`` turns it
into a sampled net plus whatever reference data the checks need, and
``run_checks`` evaluates a list of named checks into one
:class:`~voss_forge.geomkit.VerificationReport`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Callable

import numpy as np

from . import geomkit as gk
from . import reconstruct as rc
from .grids import GridSpec, SurfaceGrid
from .sine_gordon import RevolutionAngle, domain_strip, omega_revolution, solve_painleve3
from .surfaces import (
    BourParams,
    Catenoid,
    FirstKindParams,
    KNetRevolution,
    bour_immersion,
    ellipsoid,
    first_kind_vnet,
    integrate_lax_knet,
    knet_revolution,
    rotation_field_negative,
    rotation_field_positive,
    squeeze_reparam,
)

FAMILIES = (
    "knet-revolution",
    "bour",
    "rotation-positive",
    "rotation-negative",
    "first-kind-positive",
    "first-kind-negative",
    "second-kind-positive",
    "second-kind-negative",
    "counterexample",
    "lax-knet",
    "ellipsoid",
)

CHECKS = (
    "chebyshev",
    "gauss-curvature",
    "conjugate",
    "geodesic",
    "alignability",
    "kappa-tau",
    "reciprocal-parallel",
    "codazzi",
    "gauss-codazzi",
    "lambda-isometry",
    "roundtrip",
    "counterexample",
)

# parameters each family accepts, with defaults (None = required)
FAMILY_PARAMS: dict[str, dict[str, Any]] = {
    "knet-revolution": {"k": None, "strip_index": 0},
    "bour": {"k": None, "s": None, "t": None, "profile": "knet-revolution"},
    "rotation-positive": {"k": None},
    "rotation-negative": {"k": None},
    "first-kind-positive": {"k": None, "lambda": 1.0},
    "first-kind-negative": {"k": None, "lambda": 1.0, "variant": "theorem"},
    "second-kind-positive": {"k": None, "lambda": 1.0},
    "second-kind-negative": {"k": None, "lambda": 1.0},
    "counterexample": {"k": None},
    "lax-knet": {"k": None, "lambda": 1.0},
    "ellipsoid": {"axes": [1.0, 1.5, 2.0]},
}

DEFAULT_MARGIN = 0.05
# sec^2 of the sliding field has a pole at the fold end of the strip
FAMILY_MARGIN = {"rotation-negative": 0.1}
QUADRANT_FRACTION = 0.4
QUADRANT_LO = 0.3
N_LOOPS = 50


class UsageError(ValueError):
    """Invalid or incomplete job configuration."""


def max_threads() -> int:
    """Worker cap from ``VOSS_FORGE_THREADS`` (default: CPU count)."""
    raw = os.environ.get("VOSS_FORGE_THREADS")
    if raw is None or raw == "":
        return max(1, os.cpu_count() or 1)
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"VOSS_FORGE_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"VOSS_FORGE_THREADS must be a positive integer, got {raw!r}")
    return n


@dataclass(frozen=True)
class JobConfig:
    """Family, parameters, grid size and optional box for one job."""

    family: str
    params: dict[str, Any]
    nu: int = 200
    nv: int = 200
    box: tuple[tuple[float, float], tuple[float, float]] | None = None
    margin: float = DEFAULT_MARGIN
    checks: tuple[str, ...] = ()

    @classmethod
    def create(cls, family: str, params: dict[str, Any], **kw) -> "JobConfig":
        if family not in FAMILY_PARAMS:
            raise UsageError(f"unknown family {family!r}; choose from {', '.join(FAMILIES)}")
        allowed = FAMILY_PARAMS[family]
        given = {k: v for k, v in params.items() if v is not None}
        extra = sorted(set(given) - set(allowed))
        if extra:
            raise UsageError(f"family {family!r} does not take parameter(s) {', '.join(extra)}")
        full = {}
        for name, default in allowed.items():
            if name in given:
                full[name] = given[name]
            elif default is None:
                raise UsageError(f"family {family!r} needs parameter {name!r}")
            else:
                full[name] = default
        _validate_params(family, full)
        checks = tuple(kw.pop("checks", ()) or ())
        unknown = [c for c in checks if c not in CHECKS]
        if unknown:
            raise UsageError(f"unknown check(s) {', '.join(unknown)}; choose from {', '.join(CHECKS)}")
        nu, nv = int(kw.pop("nu", 200)), int(kw.pop("nv", 200))
        if nu < 8 or nv < 8:
            raise UsageError(f"grid must be at least 8x8, got {nu}x{nv}")
        margin = kw.pop("margin", None)
        margin = FAMILY_MARGIN.get(family, DEFAULT_MARGIN) if margin is None else float(margin)
        if not 0 <= margin < 0.5:
            raise UsageError(f"margin must lie in [0, 0.5), got {margin}")
        box = kw.pop("box", None)
        if box is not None:
            try:
                box = tuple((float(a), float(b)) for a, b in box)
            except (TypeError, ValueError):
                raise UsageError(f"box must be [[u0, u1], [v0, v1]], got {box!r}") from None
            if len(box) != 2 or any(not (math.isfinite(a) and math.isfinite(b) and a < b) for a, b in box):
                raise UsageError(f"box must be [[u0, u1], [v0, v1]] with increasing ranges, got {box!r}")
        if kw:
            raise UsageError(f"unknown job option(s) {', '.join(sorted(kw))}")
        return cls(family, full, nu, nv, box, margin, checks)

    def as_dict(self) -> dict:
        d = {"family": self.family, "params": dict(self.params), "grid": f"{self.nu}x{self.nv}", "margin": self.margin}
        if self.box is not None:
            d["box"] = [list(r) for r in self.box]
        if self.checks:
            d["checks"] = list(self.checks)
        return d


def _positive(name: str, x) -> float:
    try:
        x = float(x)
    except (TypeError, ValueError):
        raise UsageError(f"{name} must be a number, got {x!r}") from None
    if not (x > 0 and math.isfinite(x)):
        raise UsageError(f"{name} must be positive and finite, got {x}")
    return x


def _validate_params(family: str, p: dict) -> None:
    for name in ("k", "lambda", "s"):
        if name in p:
            p[name] = _positive(name, p[name])
    if "t" in p:
        try:
            p["t"] = float(p["t"])
        except (TypeError, ValueError):
            raise UsageError(f"t must be a number, got {p['t']!r}") from None
        if not math.isfinite(p["t"]):
            raise UsageError("t must be finite")
    if "strip_index" in p:
        if not isinstance(p["strip_index"], int) or isinstance(p["strip_index"], bool):
            raise UsageError(f"strip_index must be an integer, got {p['strip_index']!r}")
    if family.startswith("first-kind") and not p["k"] < 1:
        raise UsageError(f"first-kind families need 0 < k < 1, got {p['k']}")
    if (family.startswith("second-kind") or family == "counterexample") and not p["k"] < math.pi:
        raise UsageError(f"second-kind families need 0 < k < pi, got {p['k']}")
    if family == "bour" and p["profile"] not in ("knet-revolution", "catenoid"):
        raise UsageError(f"bour profile must be 'knet-revolution' or 'catenoid', got {p['profile']!r}")
    if family == "first-kind-negative" and p["variant"] not in ("theorem", "corollary"):
        raise UsageError(f"variant must be 'theorem' or 'corollary', got {p['variant']!r}")
    if family == "ellipsoid":
        axes = p["axes"]
        if not isinstance(axes, (list, tuple)) or len(axes) != 3:
            raise UsageError(f"axes must be three positive numbers, got {axes!r}")
        p["axes"] = [_positive("axis", a) for a in axes]


# ---------------------------------------------------------------------------
# building
# ---------------------------------------------------------------------------


@dataclass
class Job:
    """A built job: the net plus lazily computed reference data."""

    config: JobConfig
    grid: GridSpec
    builder: Callable[[float, GridSpec], SurfaceGrid]
    extras: dict[str, Any] = field(default_factory=dict)

    @property
    def family(self) -> str:
        return self.config.family

    @property
    def params(self) -> dict:
        return self.config.params

    @cached_property
    def surface(self) -> SurfaceGrid:
        return self.builder(self.params.get("lambda", 1.0), self.grid)

    @cached_property
    def forms(self) -> gk.FundamentalForms:
        return gk.fundamental_forms(self.surface)

    @cached_property
    def defects(self) -> gk.NetDefects:
        return gk.net_defects(self.surface)

    def provenance(self) -> dict:
        cfg = self.config.as_dict()
        cfg.pop("checks", None)
        return {"config": cfg, "grid": self.grid.as_dict()}


def _box_grid(cfg: JobConfig, default) -> GridSpec:
    (u0, u1), (v0, v1) = cfg.box if cfg.box is not None else default
    return GridSpec((u0, u1), (v0, v1), cfg.nu, cfg.nv, cfg.margin)


def _strip_grid(cfg: JobConfig, k: float, strip_index: int = 0) -> GridSpec:
    if cfg.box is not None:
        return _box_grid(cfg, None)
    lo, hi = domain_strip(k, strip_index)
    g = GridSpec.in_strip(lo, hi, cfg.nu, cfg.margin)
    return GridSpec(g.u_range, g.v_range, cfg.nu, cfg.nv, cfg.margin)


def _amsler(k: float):
    return solve_painleve3(k, 12.0)


def build_job(cfg: JobConfig) -> Job:
    """Resolve grid and builder for ``cfg``; the net itself is built lazily."""
    fam, p = cfg.family, cfg.params
    if fam == "knet-revolution":
        k, si = p["k"], p["strip_index"]
        grid = _strip_grid(cfg, k, si)
        return Job(cfg, grid, lambda lam, g: knet_revolution(k, g, si), {"angle": RevolutionAngle(k, si)})
    if fam == "lax-knet":
        k = p["k"]
        grid = _strip_grid(cfg, k)
        return Job(cfg, grid, lambda lam, g: integrate_lax_knet(RevolutionAngle(k), lam, g), {"angle": RevolutionAngle(k)})
    if fam == "bour":
        if p["profile"] == "catenoid":
            prof = Catenoid(p["k"])
            grid = _box_grid(cfg, ((0.1, 0.8), (-1.0, 1.0)))
        else:
            prof = KNetRevolution(p["k"])
            grid = _strip_grid(cfg, p["k"])
        bp = BourParams(p["s"], p["t"])
        return Job(cfg, grid, lambda lam, g: bour_immersion(prof, bp, g), {"profile": prof})
    if fam in ("rotation-positive", "rotation-negative"):
        k = p["k"]
        prof = KNetRevolution(k)
        grid = _strip_grid(cfg, k)
        field_fn = rotation_field_positive if fam == "rotation-positive" else rotation_field_negative
        return Job(cfg, grid, lambda lam, g: field_fn(prof, g), {"profile": prof, "angle": RevolutionAngle(k)})
    if fam.startswith("first-kind"):
        sign = "+" if fam.endswith("positive") else "-"
        k = p["k"]
        variant = p.get("variant", "theorem")
        grid = _strip_grid(cfg, k)
        return Job(
            cfg,
            grid,
            lambda lam, g: first_kind_vnet(FirstKindParams(sign, k, lam), g, variant),
            {"sign": sign, "angle": RevolutionAngle(k), "forms_fn": lambda lam: rc.first_kind_forms(sign, k, lam)},
        )
    if fam.startswith("second-kind"):
        sign = "+" if fam.endswith("positive") else "-"
        k = p["k"]
        sol = _amsler(k)
        r = min(sol.r_first_cusp, sol.r_max)
        grid = _box_grid(cfg, ((QUADRANT_LO, QUADRANT_FRACTION * r),) * 2)

        def forms_fn(lam):
            return rc.second_kind_forms(sign, k, lam, sol)

        return Job(
            cfg,
            grid,
            lambda lam, g: rc.integrate_gauss_weingarten(forms_fn(lam), g),
            {"sign": sign, "amsler": sol, "forms_fn": forms_fn},
        )
    if fam == "counterexample":
        k = p["k"]
        sol = _amsler(k)
        grid = _box_grid(cfg, ((1.0, 2.0), (1.0, 2.0)))

        def forms_fn(lam):
            return rc.counterexample_forms(k, sol)

        return Job(cfg, grid, lambda lam, g: rc.integrate_gauss_weingarten(forms_fn(lam), g), {"amsler": sol, "forms_fn": forms_fn})
    if fam == "ellipsoid":
        axes = tuple(p["axes"])
        grid = _box_grid(cfg, ((0.3, 2.8), (0.1, 3.0)))
        return Job(cfg, grid, lambda lam, g: ellipsoid(axes, g), {"axes": axes})
    raise UsageError(f"unknown family {fam!r}")  # pragma: no cover


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def _not_applicable(check: str, job: Job):
    raise UsageError(f"check {check!r} does not apply to family {job.family!r}")


def _omega(job: Job) -> np.ndarray:
    U, V = job.grid.mesh()
    return omega_revolution(U + V, job.params["k"])


def _rotation_constants(job: Job):
    """Closed-form rotation coefficients ``(b, c)`` of the revolution fields."""
    k = job.params["k"]
    w = _omega(job)
    if job.family == "rotation-positive":
        b = -k * k / np.sin(w / 2) ** 2
        return b, b.copy()
    b = k * k / np.cos(w / 2) ** 2
    return b, -b


def check_chebyshev(job: Job, rep: gk.VerificationReport) -> None:
    d = job.defects
    Xu, Xv = gk.derivatives(job.surface)[:2]
    scale = max(float(np.max(np.linalg.norm(Xu, axis=-1))), float(np.max(np.linalg.norm(Xv, axis=-1))))
    rep.add("chebyshev.u", d.chebyshev_u / scale, 1e-10)
    rep.add("chebyshev.v", d.chebyshev_v / scale, 1e-10)
    if "angle" in job.extras and job.family in ("knet-revolution", "lax-knet"):
        ang = np.arctan2(np.linalg.norm(np.cross(Xu, Xv), axis=-1), np.sum(Xu * Xv, axis=-1))
        w = job.extras["angle"].omega(np.add.outer(job.grid.u, job.grid.v))
        rep.add("chebyshev.angle", ang - w, 1e-8)


def _expected_curvature(job: Job):
    fam = job.family
    U, V = job.grid.mesh()
    if fam in ("knet-revolution", "lax-knet"):
        return -np.ones_like(U), 1e-4
    if fam == "bour":
        base = bour_immersion(job.extras["profile"], BourParams(1.0, 0.0), job.grid)
        return gk.curvatures(gk.fundamental_forms(base))[0], 1e-4
    if fam.startswith("first-kind"):
        w = _omega(job)
        return (np.sin(w / 2) ** 4 if job.extras["sign"] == "+" else -np.cos(w / 2) ** 4), 1e-4
    if fam.startswith("rotation"):
        b, c = _rotation_constants(job)
        return 1.0 / (b * c), 1e-4
    if fam.startswith("second-kind") or fam == "counterexample":
        spec = job.extras["forms_fn"](job.params.get("lambda", 1.0))
        return rc.form_curvatures(spec, U, V)[0], 1e-3
    if fam == "ellipsoid":
        a, b, c = job.extras["axes"]
        X = job.surface.positions
        q = (X[..., 0] / a**2) ** 2 + (X[..., 1] / b**2) ** 2 + (X[..., 2] / c**2) ** 2
        return 1.0 / (a * b * c) ** 2 / q**2, 1e-4
    _not_applicable("gauss-curvature", job)


def check_gauss_curvature(job: Job, rep: gk.VerificationReport) -> None:
    K_ref, tol = _expected_curvature(job)
    K, H = gk.curvatures(job.forms)
    rep.add("gauss-curvature.K", K - K_ref, tol)
    if job.family.startswith("first-kind"):
        lam = job.params["lambda"]
        w = _omega(job)
        if job.extras["sign"] == "+":
            H_ref = 0.25 * (lam + 1 / lam) * np.tan(w / 2)
        else:
            H_ref = 0.25 * (lam - 1 / lam) / np.tan(w / 2)
        rep.add("gauss-curvature.H", H - H_ref, 1e-4)


def check_conjugate(job: Job, rep: gk.VerificationReport) -> None:
    rep.add("conjugate", job.defects.conjugate, 1e-5)


def check_geodesic(job: Job, rep: gk.VerificationReport) -> None:
    d = job.defects
    rep.add("geodesic.u", d.geodesic_u, 1e-5)
    rep.add("geodesic.v", d.geodesic_v, 1e-5)


def check_alignability(job: Job, rep: gk.VerificationReport) -> None:
    reconstructed = job.family.startswith("second-kind") or job.family == "counterexample"
    loops = gk.random_loops(job.grid, N_LOOPS, seed=0)
    defects = [gk.alignability_defect(job.surface, lp) for lp in loops]
    rep.add("alignability", defects, 1e-5 if reconstructed else 1e-6)


def check_kappa_tau(job: Job, rep: gk.VerificationReport) -> None:
    fam = job.family
    if fam.startswith("first-kind"):
        sb, sc = (1.0, 1.0) if job.extras["sign"] == "+" else (1.0, -1.0)
    elif fam.startswith("rotation"):
        b, c = _rotation_constants(job)
        sb, sc = float(np.sign(b.flat[0])), float(np.sign(c.flat[0]))
    else:
        _not_applicable("kappa-tau", job)
    cot = 1 / np.tan(_omega(job))
    for d, expect in (("u", -sc * cot), ("v", sb * cot)):
        kap, tau = gk.frenet(job.surface, d)
        rep.add(f"kappa-tau.{d}", (tau / kap - expect) / (1 + np.abs(expect)), 1e-3)


def _revolution_pair(job: Job):
    if not job.family.startswith("rotation"):
        _not_applicable("reciprocal-parallel", job)
    k = job.params["k"]
    return knet_revolution(k, job.grid), job.extras["profile"]


def check_reciprocal_parallel(job: Job, rep: gk.VerificationReport) -> None:
    psi, prof = _revolution_pair(job)
    eta = job.surface
    other = rotation_field_negative(prof, job.grid) if job.family == "rotation-positive" else rotation_field_positive(prof, job.grid)
    for tag, (a, b) in (("psi-eta", (psi, eta)), ("eta-eta", (eta, other))):
        sub = gk.reciprocal_parallel_check(a, b)
        for name, c in sub.checks.items():
            rep.checks[f"reciprocal-parallel.{tag}.{name}"] = c
    op = gk.rotation_operator(psi, eta)
    rep.add("reciprocal-parallel.trace", op.trace_defect, 1e-5)
    rep.add("reciprocal-parallel.antidiagonal", op.antidiagonal_defect, 1e-5)
    b, c = _rotation_constants(job)
    rep.add("reciprocal-parallel.b", op.b / b - 1, 1e-5)
    rep.add("reciprocal-parallel.c", op.c / c - 1, 1e-5)


def check_codazzi(job: Job, rep: gk.VerificationReport) -> None:
    psi, _ = _revolution_pair(job)
    b, c = _rotation_constants(job)
    orientation = 1 if job.family == "rotation-positive" else -1
    sub = gk.codazzi_residual(gk.RotationCoefficients(b, c), job.extras["angle"], job.grid, tol=1e-4, orientation=orientation)
    for name, entry in sub.checks.items():
        rep.checks[f"codazzi.{name}"] = entry
    eta = gk.rotation_quadrature(psi, gk.RotationCoefficients(b, c), job.extras["angle"])
    rep.add("codazzi.quadrature_path", eta.provenance["path_residual"], 1e-6)
    _, _, rms = gk.rigid_align(eta.positions, job.surface.positions)
    rep.add("codazzi.quadrature_rms", rms, 1e-4)


def check_gauss_codazzi(job: Job, rep: gk.VerificationReport) -> None:
    if "forms_fn" not in job.extras:
        _not_applicable("gauss-codazzi", job)
    spec = job.extras["forms_fn"](job.params.get("lambda", 1.0))
    sub = rc.gauss_codazzi_residual(spec, job.grid)
    for name, entry in sub.checks.items():
        rep.checks[f"gauss-codazzi.{name}"] = entry


def _first_form_deviation(f, g) -> float:
    scale = max(float(np.max(np.abs(g.E))), float(np.max(np.abs(g.G))))
    return max(float(np.max(np.abs(getattr(f, n) - getattr(g, n)))) for n in "EFG") / scale


def check_lambda_isometry(job: Job, rep: gk.VerificationReport) -> None:
    fam = job.family
    lam = job.params.get("lambda", 1.0)
    if fam.startswith("first-kind") or fam == "lax-knet":
        ref = gk.fundamental_forms(job.builder(1.0, job.grid))
        f = job.forms
        if fam == "lax-knet":
            rep.add("lambda-isometry.speed_u", np.sqrt(f.E) - lam, 1e-6)
            rep.add("lambda-isometry.speed_v", np.sqrt(f.G) - 1 / lam, 1e-6)
            for n in "LMN":
                rep.add(f"lambda-isometry.{n}", getattr(f, n) - getattr(ref, n), 1e-5)
            return
        rep.add("lambda-isometry.first_form", _first_form_deviation(f, ref), 1e-6)
        s2 = max(float(np.max(np.abs(ref.L))), float(np.max(np.abs(ref.N))))
        rep.add("lambda-isometry.L", (f.L / lam - ref.L) / s2, 1e-5)
        rep.add("lambda-isometry.N", (f.N * lam - ref.N) / s2, 1e-5)
        return
    if fam == "bour":
        base = bour_immersion(job.extras["profile"], BourParams(1.0, 0.0), job.grid)
        rep.add("lambda-isometry.first_form", _first_form_deviation(job.forms, gk.fundamental_forms(base)), 1e-8)
        return
    if fam.startswith("second-kind"):
        # lambda = 1 net on the squeezed box, relabelled back onto the job grid
        g1 = squeeze_reparam(job.grid, 1 / lam)
        one = job.surface if lam == 1.0 else job.builder(1.0, g1)
        back = squeeze_reparam(SurfaceGrid(g1, one.positions), lam)
        back = SurfaceGrid(job.grid, back.positions)
        f = gk.fundamental_forms(SurfaceGrid(job.grid, job.surface.positions))
        rep.add("lambda-isometry.first_form", _first_form_deviation(f, gk.fundamental_forms(back)), 1e-4)
        return
    _not_applicable("lambda-isometry", job)


def check_roundtrip(job: Job, rep: gk.VerificationReport) -> None:
    fam = job.family
    if not (fam.startswith("second-kind") or fam == "counterexample"):
        _not_applicable("roundtrip", job)
    spec = job.extras["forms_fn"](job.params.get("lambda", 1.0))
    e1, e2 = rc.roundtrip_error(job.surface, spec)
    tol = 1e-4 if min(job.grid.nu, job.grid.nv) >= 200 else 1e-3
    rep.add("roundtrip.first_form", e1, tol)
    rep.add("roundtrip.second_form", e2, tol)
    rep.add("roundtrip.closure", job.surface.provenance["closure_residual"], 1e-6)


def check_counterexample(job: Job, rep: gk.VerificationReport) -> None:
    if job.family != "counterexample":
        _not_applicable("counterexample", job)
    spec = job.extras["forms_fn"](1.0)
    U, V = job.grid.mesh()
    c = spec.values(U, V)
    _, H = rc.form_curvatures(spec, U, V)
    rep.add("counterexample.isothermal", c["L"] - c["N"], 1e-8)
    # lower bounds are reported as ratios threshold / observed, passing at <= 1
    rep.add("counterexample.non_minimal", 0.01 / max(float(np.max(np.abs(H))), 1e-300), 1.0)
    # angle along the anti-diagonal u + v = s through the box centre
    sol = job.extras["amsler"]
    (u0, u1), (v0, v1) = job.grid.u_range, job.grid.v_range
    s = 0.5 * (u0 + u1 + v0 + v1)
    t = np.linspace(max(u0, s - v1), min(u1, s - v0), 33)
    w = sol.omega(t * (s - t) / 2)
    rep.add("counterexample.non_revolution", 0.01 / max(float(np.ptp(w)), 1e-300), 1.0)
    rep.provenance["counterexample"] = {"max_abs_H": float(np.max(np.abs(H))), "omega_spread": float(np.ptp(w))}


CHECK_FUNCS: dict[str, Callable[[Job, gk.VerificationReport], None]] = {
    "chebyshev": check_chebyshev,
    "gauss-curvature": check_gauss_curvature,
    "conjugate": check_conjugate,
    "geodesic": check_geodesic,
    "alignability": check_alignability,
    "kappa-tau": check_kappa_tau,
    "reciprocal-parallel": check_reciprocal_parallel,
    "codazzi": check_codazzi,
    "gauss-codazzi": check_gauss_codazzi,
    "lambda-isometry": check_lambda_isometry,
    "roundtrip": check_roundtrip,
    "counterexample": check_counterexample,
}


def run_checks(job: Job, checks, threads: int | None = None) -> gk.VerificationReport:
    """Evaluate ``checks`` on ``job``; the merged report is independent of
    the thread count because sub-reports are combined in request order."""
    checks = list(dict.fromkeys(checks))
    if not checks:
        raise UsageError("verify needs at least one check")
    unknown = [c for c in checks if c not in CHECK_FUNCS]
    if unknown:
        raise UsageError(f"unknown check(s) {', '.join(unknown)}; choose from {', '.join(CHECKS)}")
    job.surface  # build once before fanning out

    def one(name):
        sub = gk.VerificationReport()
        CHECK_FUNCS[name](job, sub)
        return sub

    n = min(threads or max_threads(), len(checks))
    if n == 1:
        subs = [one(c) for c in checks]
    else:
        # shared lazies are computed up front so workers only read them
        job.forms
        job.defects
        with ThreadPoolExecutor(max_workers=n) as pool:
            subs = list(pool.map(one, checks))
    rep = gk.VerificationReport(provenance=job.provenance())
    for sub in subs:
        rep.checks.update(sub.checks)
        for key, val in sub.provenance.items():
            rep.provenance[key] = val
    return rep
