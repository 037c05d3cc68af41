"""Tests for form specifications and Gauss-Weingarten reconstruction."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from voss_forge import geomkit as gk
from voss_forge import reconstruct as rc
from voss_forge.errors import DomainError
from voss_forge.grids import GridSpec
from voss_forge.sine_gordon import amsler_omega, domain_strip, omega_revolution, solve_painleve3
from voss_forge.surfaces import squeeze_reparam


@pytest.fixture(scope="module")
def amsler():
    return solve_painleve3(math.pi / 4, 8.0)


def quadrant_box(sol, n, frac=0.4, lo=0.3):
    b = frac * sol.r_first_cusp
    return GridSpec((lo, b), (lo, b), n, n)


# ---------------------------------------------------------------------------
# jets
# ---------------------------------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 2.0), st.floats(0.2, 2.0))
def test_jet_partials_match_closed_form(u, v):
    U, V = rc.Jet.variables(u, v)
    f = (U * V).sin() / (U + V**2) + U**0.5
    # f = sin(uv)/(u + v^2) + sqrt(u)
    s, c, d = math.sin(u * v), math.cos(u * v), u + v * v
    fu = v * c / d - s / d**2 + 0.5 / math.sqrt(u)
    fv = u * c / d - 2 * v * s / d**2
    fuv = (c - u * v * s) / d - 2 * v * v * c / d**2 - u * c / d**2 + 4 * v * s / d**3
    fuu = -v * v * s / d - 2 * v * c / d**2 + 2 * s / d**3 - 0.25 * u**-1.5
    assert float(f.v) == pytest.approx(s / d + math.sqrt(u), rel=1e-13)
    assert float(f.du) == pytest.approx(fu, rel=1e-10, abs=1e-12)
    assert float(f.dv) == pytest.approx(fv, rel=1e-10, abs=1e-12)
    assert float(f.duv) == pytest.approx(fuv, rel=1e-9, abs=1e-11)
    assert float(f.duu) == pytest.approx(fuu, rel=1e-9, abs=1e-11)


# ---------------------------------------------------------------------------
# form specifications
# ---------------------------------------------------------------------------


def test_first_kind_forms_values():
    k, lam = 0.7, 1.5
    lo, hi = domain_strip(k)
    g = GridSpec.in_strip(lo, hi, 9, 0.05)
    U, V = g.mesh()
    w = omega_revolution(U + V, k)
    c = rc.first_kind_forms("+", k, lam).values(U, V)
    csc4 = np.sin(w / 2) ** -4
    np.testing.assert_allclose(c["E"], csc4, rtol=1e-13)
    np.testing.assert_allclose(c["G"], csc4, rtol=1e-13)
    np.testing.assert_allclose(c["F"], np.cos(w) * csc4, rtol=1e-12, atol=1e-12)
    c = rc.first_kind_forms("-", k, lam).values(U, V)
    np.testing.assert_allclose(c["L"], 2 * lam * np.tan(w / 2), rtol=1e-13)
    np.testing.assert_allclose(c["N"], -2 / lam * np.tan(w / 2), rtol=1e-13)
    assert np.all(c["M"] == 0)
    c = rc.first_kind_forms("+", k, 1.0).values(U, V)
    np.testing.assert_array_equal(c["L"], c["N"])


def test_first_kind_forms_validation():
    with pytest.raises(DomainError):
        rc.first_kind_forms("x", 0.5, 1.0)
    with pytest.raises(DomainError):
        rc.first_kind_forms("+", 0.5, -1.0)
    fs = rc.first_kind_forms("+", 0.5, 1.0)
    (a, b), _ = fs.domain
    with pytest.raises(DomainError):
        fs.values(np.array([b + 0.1]), np.array([0.5 * (a + b)]))


def test_second_kind_forms_values(amsler):
    g = quadrant_box(amsler, 9)
    U, V = g.mesh()
    w = amsler_omega(U, V, amsler)
    for sign in "+-":
        c = rc.second_kind_forms(sign, math.pi / 4, 2.0, amsler).values(U, V)
        assert np.all(c["M"] == 0)
    c = rc.second_kind_forms("+", math.pi / 4, 2.0, amsler).values(U, V)
    np.testing.assert_allclose(c["E"], np.sin(w / 2) ** -4 / U**2, rtol=1e-13)
    K, _ = rc.form_curvatures(rc.second_kind_forms("+", math.pi / 4, 2.0, amsler), U, V)
    np.testing.assert_allclose(K, U * V * np.sin(w / 2) ** 4, rtol=1e-12)


def test_second_kind_forms_reject_cusp(amsler):
    fs = rc.second_kind_forms("+", math.pi / 4, 1.0, amsler)
    r = amsler.r_first_cusp
    with pytest.raises(DomainError):
        fs.values(np.array([r / 2]), np.array([r / 2]))
    with pytest.raises(DomainError):
        rc.second_kind_forms("+", math.pi / 2, 1.0, amsler)


def test_second_kind_lambda_is_a_squeeze(amsler):
    g = quadrant_box(amsler, 12)
    U, V = g.mesh()
    lam = 2.0
    a = rc.second_kind_forms("+", math.pi / 4, lam, amsler).evaluate(U, V)
    b = squeeze_reparam(rc.second_kind_forms("+", math.pi / 4, 1.0, amsler), 1 / lam).evaluate(U, V)
    for n in a:
        np.testing.assert_allclose(a[n].v, b[n].v, rtol=1e-13, atol=1e-13)
        np.testing.assert_allclose(a[n].du, b[n].du, rtol=1e-12, atol=1e-12)
        np.testing.assert_allclose(a[n].dvv, b[n].dvv, rtol=1e-12, atol=1e-12)
    # the first form is invariant under every squeeze
    c = rc.second_kind_forms("+", math.pi / 4, 1.0, amsler)
    d = c.squeeze(1.7).values(U, V)
    e = c.values(U, V)
    for n in "EFG":
        np.testing.assert_allclose(d[n], e[n], rtol=1e-12)


def test_counterexample_forms(amsler):
    g = GridSpec((1, 2), (1, 2), 21, 21)
    U, V = g.mesh()
    fs = rc.counterexample_forms(math.pi / 4, amsler)
    c = fs.values(U, V)
    assert np.max(np.abs(c["L"] - c["N"])) < 1e-8
    K, H = rc.form_curvatures(fs, U, V)
    w = amsler.omega(U * V / 2)
    np.testing.assert_allclose(H, (U**2 + V**2) / 16 * np.tan(w / 2), rtol=1e-12)
    np.testing.assert_allclose(K, (U * V / 4) ** 2 * np.sin(w / 2) ** 4, rtol=1e-12)
    assert np.max(np.abs(H)) > 0.01
    t = np.linspace(1, 2, 11)
    assert np.ptp(amsler.omega(t * (3 - t) / 2)) > 0.01


def test_counterexample_is_box_reparametrized_second_kind(amsler):
    g = GridSpec((1, 2), (1, 2), 7, 7)
    U, V = g.mesh()
    ce = rc.counterexample_forms(math.pi / 4, amsler).values(U, V)
    sk = rc.second_kind_forms("+", math.pi / 4, 1.0, amsler).values(U**2 / 4, V**2 / 4)
    # u = U^2/4, du = U/2 dU
    np.testing.assert_allclose(ce["E"], sk["E"] * (U / 2) ** 2, rtol=1e-12)
    np.testing.assert_allclose(ce["F"], sk["F"] * (U / 2) * (V / 2), rtol=1e-10, atol=1e-12)
    np.testing.assert_allclose(ce["N"], sk["N"] * (V / 2) ** 2, rtol=1e-12)


def test_forms_csv_export(tmp_path, amsler):
    g = GridSpec((0.5, 1.0), (0.5, 1.0), 3, 4)
    path = tmp_path / "forms.csv"
    rc.second_kind_forms("-", math.pi / 4, 1.0, amsler).to_csv(path, g)
    lines = path.read_text().splitlines()
    assert lines[0] == "u,v,E,F,G,L,M,N"
    assert len(lines) == 13


# ---------------------------------------------------------------------------
# compatibility
# ---------------------------------------------------------------------------


def test_plane_forms_are_compatible():
    rep = rc.gauss_codazzi_residual(rc.plane_forms(), GridSpec((0, 1), (0, 1), 5, 5))
    assert all(c["max"] == 0 for c in rep.checks.values())


@pytest.mark.parametrize("sign", ["+", "-"])
@pytest.mark.parametrize("lam", [0.5, 2.0])
def test_first_kind_forms_are_compatible(sign, lam):
    k = 0.9
    lo, hi = domain_strip(k)
    rep = rc.gauss_codazzi_residual(rc.first_kind_forms(sign, k, lam), GridSpec.in_strip(lo, hi, 30, 0.05))
    assert rep.passed


def test_perturbed_forms_fail_gauss(amsler):
    g = quadrant_box(amsler, 20)
    base = rc.second_kind_forms("+", math.pi / 4, 1.0, amsler)

    def jets(u, v):
        E, F, G, L, M, N = base.jets(u, v)
        U, V = rc.Jet.variables(u, v)
        return E, F, G, L, M, N * (1 + 0.01 * (3 * U + V).sin())

    rep = rc.gauss_codazzi_residual(rc.FormSpec(base.domain, jets), g)
    assert rep.checks["gauss"]["max"] > 1e-3
    assert not rep.passed


# ---------------------------------------------------------------------------
# reconstruction
# ---------------------------------------------------------------------------


def test_plane_reconstruction():
    g = GridSpec((0, 1), (0, 2), 20, 30)
    S = rc.integrate_gauss_weingarten(rc.plane_forms(), g)
    U, V = g.mesh()
    np.testing.assert_allclose(S.positions[..., 0], U - U[0, 0], atol=1e-12)
    np.testing.assert_allclose(S.positions[..., 1], V - V[0, 0], atol=1e-12)
    np.testing.assert_allclose(S.positions[..., 2], 0.0, atol=1e-12)


def test_sphere_reconstruction():
    g = GridSpec((0.3, 2.8), (0.1, 3.0), 64, 64)
    S = rc.integrate_gauss_weingarten(rc.sphere_forms(), g)
    K, _ = gk.curvatures(gk.fundamental_forms(S))
    assert np.max(np.abs(K - 1)) < 1e-5
    # points lie on a unit sphere around some centre: fit it
    P = S.positions.reshape(-1, 3)
    A = np.c_[2 * P, np.ones(len(P))]
    sol, *_ = np.linalg.lstsq(A, np.sum(P * P, axis=1), rcond=None)
    radius = math.sqrt(sol[3] + sol[:3] @ sol[:3])
    assert radius == pytest.approx(1.0, abs=1e-8)
    assert S.provenance["closure_residual"] < 1e-8


def test_seed_gauge_gives_congruent_surfaces(amsler):
    fs = rc.second_kind_forms("-", math.pi / 4, 1.0, amsler)
    g = quadrant_box(amsler, 40)
    a = rc.integrate_gauss_weingarten(fs, g)
    R = Rotation.from_rotvec([0.3, -1.1, 0.7]).as_matrix()
    seed = rc.FrameState.canonical(fs, g.u[0], g.v[0], rotation=R, position=[1.0, 2.0, -3.0])
    b = rc.integrate_gauss_weingarten(fs, g, seed)
    _, _, rms = gk.rigid_align(a.positions, b.positions)
    assert rms < 1e-6


def test_inconsistent_seed_rejected(amsler):
    fs = rc.second_kind_forms("+", math.pi / 4, 1.0, amsler)
    g = quadrant_box(amsler, 10)
    with pytest.raises(DomainError):
        rc.integrate_gauss_weingarten(fs, g, rc.FrameState(np.zeros(3), [1, 0, 0], [0, 1, 0], [0, 0, 1]))


@pytest.mark.parametrize("sign", ["+", "-"])
def test_roundtrip_64(amsler, sign):
    fs = rc.second_kind_forms(sign, math.pi / 4, 2.0, amsler)
    S = rc.integrate_gauss_weingarten(fs, quadrant_box(amsler, 64))
    assert max(rc.roundtrip_error(S, fs)) < 1e-3


def test_reconstructed_second_kind_is_alignable(amsler):
    fs = rc.second_kind_forms("+", math.pi / 4, 1.0, amsler)
    g = quadrant_box(amsler, 80)
    S = rc.integrate_gauss_weingarten(fs, g)
    assert max(gk.alignability_defect(S, l) for l in gk.random_loops(g, 50)) < 1e-5
    U, V = g.mesh()
    w = amsler_omega(U, V, amsler)
    K, _ = gk.curvatures(gk.fundamental_forms(S))
    assert np.max(np.abs(K - U * V * np.sin(w / 2) ** 4)) < 1e-3
