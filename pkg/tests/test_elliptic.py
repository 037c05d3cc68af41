"""Tests for the elliptic substrate against quadrature and ODE oracles."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad, solve_ivp

from voss_forge.elliptic import (
    ellint_E,
    ellint_F,
    ellint_K,
    ellint_Pi,
    jacobi,
    jacobi_epsilon,
)
from voss_forge.errors import DomainError

# Frozen oracle values.  Each one was produced by the independent route named
# next to it (DOP853 at rtol 1e-14, or adaptive quadrature at 1e-15).
SN_07_036 = 0.6299171153234865  # pendulum system sn'=cn dn, cn'=-sn dn, dn'=-m sn cn
K_05 = 1.8540746773013719  # quad of (1 - m sin^2)^(-1/2) on [0, pi/2]
F_1_025 = 1.0373561200021773  # quad on [0, 1]
PI_036_1_036 = 1.186054342814774  # quad of 1/((1-n s^2) sqrt(1-m s^2)) on [0, 1]

PARAMS = [0.0, 0.09, 0.25, 0.64, 0.99]


def pendulum_oracle(x, m):
    sol = solve_ivp(
        lambda t, y: [y[1] * y[2], -y[0] * y[2], -m * y[0] * y[1]],
        (0.0, x),
        [0.0, 1.0, 1.0],
        method="DOP853",
        rtol=1e-13,
        atol=1e-14,
    )
    return sol.y[:, -1]


# ---------------------------------------------------------------------------
# jacobi
# ---------------------------------------------------------------------------


def test_jacobi_at_zero():
    for m in PARAMS + [1.0, 4.0]:
        t = jacobi(0.0, m)
        assert (float(t.am), float(t.sn), float(t.cn), float(t.dn)) == (0.0, 0.0, 1.0, 1.0)


def test_jacobi_hyperbolic_limit():
    x = np.linspace(-6, 6, 101)
    t = jacobi(x, 1.0)
    np.testing.assert_allclose(t.sn, np.tanh(x), atol=1e-15)
    np.testing.assert_allclose(t.dn, 1 / np.cosh(x), atol=1e-15)
    np.testing.assert_allclose(t.cn, 1 / np.cosh(x), atol=1e-15)
    np.testing.assert_allclose(np.sin(t.am), t.sn, atol=1e-15)


def test_jacobi_frozen_value():
    assert abs(float(jacobi(0.7, 0.36).sn) - SN_07_036) < 1e-13


@pytest.mark.parametrize("m", [0.09, 0.5, 0.99, 2.5])
def test_jacobi_matches_pendulum_ode(m):
    for x in [0.3, 1.1, 2.7]:
        sn, cn, dn = pendulum_oracle(x, m)
        t = jacobi(x, m)
        assert abs(t.sn - sn) < 1e-10
        assert abs(t.cn - cn) < 1e-10
        assert abs(t.dn - dn) < 1e-10


@pytest.mark.parametrize("m", PARAMS)
def test_jacobi_algebraic_identities(m):
    x = np.linspace(-15, 15, 3001)
    t = jacobi(x, m)
    assert np.max(np.abs(t.sn**2 + t.cn**2 - 1)) < 1e-12
    assert np.max(np.abs(t.dn**2 + m * t.sn**2 - 1)) < 1e-12
    assert np.max(np.abs(np.sin(t.am) - t.sn)) < 1e-12
    assert np.max(np.abs(np.cos(t.am) - t.cn)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    x=st.floats(-8, 8),
    m=st.floats(1.0001, 30.0),
)
def test_reciprocal_modulus_identity(x, m):
    k = np.sqrt(m)
    assert abs(jacobi(x, m).sn * k - jacobi(k * x, 1 / m).sn) < 1e-10


def test_jacobi_rejects_bad_input():
    with pytest.raises(DomainError):
        jacobi(np.inf, 0.5)
    with pytest.raises(DomainError):
        jacobi(1.0, -0.1)


# ---------------------------------------------------------------------------
# complete and incomplete integrals
# ---------------------------------------------------------------------------


def test_K_values():
    assert ellint_K(0.0) == pytest.approx(np.pi / 2, rel=1e-15)
    assert abs(ellint_K(0.5) - K_05) / K_05 < 1e-13
    with pytest.raises(DomainError):
        ellint_K(1.0)
    assert ellint_K(1 - 1e-12) > 14.0


def test_F_values():
    assert ellint_F(0.0, 0.3) == 0.0
    assert ellint_F(1.234, 0.0) == pytest.approx(1.234, abs=1e-15)
    assert abs(ellint_F(1.0, 0.25) - F_1_025) < 1e-13
    with pytest.raises(DomainError):
        ellint_F(1.0, -1.0)


@pytest.mark.parametrize("m", PARAMS)
def test_F_inverts_amplitude(m):
    K = ellint_K(m)
    x = np.linspace(1e-6, 2 * K - 1e-6, 400)
    assert np.max(np.abs(ellint_F(jacobi(x, m).am, m) - x)) < 1e-10


def test_quasi_periodicity():
    m = 0.7
    for phi in [0.4, 1.3]:
        assert ellint_F(phi + np.pi, m) == pytest.approx(ellint_F(phi, m) + 2 * ellint_K(m), abs=1e-13)
        E_full = quad(lambda t: np.sqrt(1 - m * np.sin(t) ** 2), 0, np.pi / 2, epsabs=1e-14)[0]
        assert ellint_E(phi + np.pi, m) == pytest.approx(ellint_E(phi, m) + 2 * E_full, abs=1e-12)


def test_E_values():
    assert ellint_E(0.0, 0.4) == 0.0
    assert ellint_E(0.8, 0.0) == pytest.approx(0.8, abs=1e-15)
    x = np.linspace(-3, 3, 61)
    np.testing.assert_allclose(ellint_E(jacobi(x, 1.0).am, 1.0), np.tanh(x), atol=1e-14)


def test_Pi_values():
    assert ellint_Pi(0.0, 0.9, 0.0) == pytest.approx(0.9, abs=1e-15)
    assert ellint_Pi(0.4, 0.0, 0.5) == 0.0
    assert abs(ellint_Pi(0.36, 1.0, 0.36) - PI_036_1_036) < 1e-13


def test_Pi_pole_is_rejected():
    # 1 - 4 sin^2 vanishes at pi/6
    ellint_Pi(4.0, 0.5, 0.3)
    with pytest.raises(DomainError):
        ellint_Pi(4.0, 0.6, 0.3)
    with pytest.raises(DomainError):
        ellint_Pi(1.0, 2.0, 0.3)


@pytest.mark.parametrize("m", [0.09, 0.49, 0.81])
def test_derivative_identities(m):
    h = 1e-5
    x = np.linspace(0.1, 2 * ellint_K(m) - 0.1, 25)

    def E_of(z):
        return ellint_E(jacobi(z, m).am, m)

    def Pi_of(z):
        return ellint_Pi(m, jacobi(z, m).am, m)

    dE = (E_of(x + h) - E_of(x - h)) / (2 * h)
    dPi = (Pi_of(x + h) - Pi_of(x - h)) / (2 * h)
    dn = jacobi(x, m).dn
    assert np.max(np.abs(dE - dn**2)) < 1e-7
    assert np.max(np.abs(dPi - dn**-2)) < 1e-7


@pytest.mark.parametrize("m", [0.36, 1.0, 4.0])
def test_epsilon_is_integral_of_dn_squared(m):
    for x in [0.2, 0.9, 1.4]:
        ref = quad(lambda z: float(jacobi(z, m).dn) ** 2, 0, x, epsabs=1e-14)[0]
        assert abs(jacobi_epsilon(x, m) - ref) < 1e-12


@settings(max_examples=100, deadline=None)
@given(phi=st.floats(-1.5, 1.5), m=st.floats(0.0, 0.999))
def test_incomplete_integrals_against_quadrature(phi, m):
    d = lambda t: np.sqrt(1 - m * np.sin(t) ** 2)
    F_ref = quad(lambda t: 1 / d(t), 0, phi, epsabs=1e-14, epsrel=1e-14)[0]
    E_ref = quad(d, 0, phi, epsabs=1e-14, epsrel=1e-14)[0]
    assert abs(ellint_F(phi, m) - F_ref) < 1e-10
    assert abs(ellint_E(phi, m) - E_ref) < 1e-10
