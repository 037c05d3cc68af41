"""Jacobi elliptic functions and Legendre elliptic integrals.

The second argument is always the parameter ``m = k**2``.  Parameters
``m > 1`` are reduced with the reciprocal-modulus transformation and
``m = 1`` uses the hyperbolic closed forms.  Incomplete integrals are
evaluated through Carlson's symmetric forms and extended beyond
``|phi| <= pi/2`` by quasi-periodicity.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.special import elliprd, elliprf, elliprj

from .errors import DomainError

_AGM_TOL = 1e-16
_AGM_MAXITER = 64


class JacobiTriple(NamedTuple):
    """Amplitude and the three Jacobi functions at one argument."""

    am: np.ndarray
    sn: np.ndarray
    cn: np.ndarray
    dn: np.ndarray


def _check_m(m: float, upper: float | None = None, strict_upper: bool = False) -> float:
    m = float(m)
    if not np.isfinite(m) or m < 0.0:
        raise DomainError(f"elliptic parameter m must be finite and >= 0, got {m!r}")
    if upper is not None:
        if (strict_upper and m >= upper) or (not strict_upper and m > upper):
            op = "<" if strict_upper else "<="
            raise DomainError(f"elliptic parameter m must be {op} {upper}, got {m!r}")
    return m


def _agm_sequence(m: float):
    """AGM sequence (a_n, c_n) started from (1, sqrt(1-m), sqrt(m))."""
    a, b, c = 1.0, np.sqrt(1.0 - m), np.sqrt(m)
    a_seq, c_seq = [a], [c]
    for _ in range(_AGM_MAXITER):
        if abs(c) <= _AGM_TOL * a:
            break
        a, b, c = 0.5 * (a + b), np.sqrt(a * b), 0.5 * (a - b)
        a_seq.append(a)
        c_seq.append(c)
    return a_seq, c_seq


def ellint_K(m: float) -> float:
    """Complete elliptic integral of the first kind by the AGM.

    Raises ``DomainError`` for ``m >= 1`` where the integral diverges.
    """
    m = _check_m(m, upper=1.0, strict_upper=True)
    a_seq, _ = _agm_sequence(m)
    return float(np.pi / (2.0 * a_seq[-1]))


def _amplitude(x: np.ndarray, m: float) -> np.ndarray:
    """Jacobi amplitude for 0 <= m < 1 by descending AGM / Landen steps."""
    if m == 0.0:
        return x.copy()
    K = ellint_K(m)
    # am(x + 2jK) = am(x) + j*pi keeps the AGM phase small
    j = np.round(x / (2.0 * K))
    xr = x - 2.0 * K * j
    a_seq, c_seq = _agm_sequence(m)
    n = len(a_seq) - 1
    phi = (2.0 ** n) * a_seq[-1] * xr
    for i in range(n, 0, -1):
        phi = 0.5 * (phi + np.arcsin(c_seq[i] / a_seq[i] * np.sin(phi)))
    return phi + np.pi * j


def jacobi(x, m: float) -> JacobiTriple:
    """Return (am, sn, cn, dn) at argument ``x`` and parameter ``m >= 0``.

    ``x`` may be a scalar or an array.  For ``m > 1`` the functions come from
    ``sn(x|m) = sn(kx|1/m)/k``, ``cn(x|m) = dn(kx|1/m)``,
    ``dn(x|m) = cn(kx|1/m)`` and ``am`` is the angle with ``sin am = sn``,
    ``cos am = cn`` (then ``|am| < pi/2``).
    """
    m = _check_m(m)
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DomainError("jacobi argument must be finite")
    if m == 1.0:
        sn = np.tanh(x)
        sech = 1.0 / np.cosh(x)
        am = 2.0 * np.arctan(np.tanh(0.5 * x))
        return JacobiTriple(am, sn, sech, sech.copy())
    if m > 1.0:
        k = np.sqrt(m)
        inner = jacobi(k * x, 1.0 / m)
        sn = inner.sn / k
        cn = inner.dn
        dn = inner.cn
        return JacobiTriple(np.arctan2(sn, cn), sn, cn, dn)
    am = _amplitude(x, m)
    sn = np.sin(am)
    cn = np.cos(am)
    dn = np.sqrt(1.0 - m * sn * sn)
    return JacobiTriple(am, sn, cn, dn)


def _reduce_phi(phi: np.ndarray):
    """Split phi = j*pi + r with r in [-pi/2, pi/2]."""
    j = np.round(phi / np.pi)
    return j, phi - np.pi * j


def _complete_E(m: float) -> float:
    if m == 1.0:
        return 1.0
    return float(elliprf(0.0, 1.0 - m, 1.0) - m / 3.0 * elliprd(0.0, 1.0 - m, 1.0))


def ellint_F(phi, m: float):
    """Incomplete elliptic integral of the first kind F(phi|m), 0 <= m <= 1."""
    m = _check_m(m, upper=1.0)
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise DomainError("ellint_F amplitude must be finite")
    j, r = _reduce_phi(phi)
    if m == 1.0:
        if np.any(np.abs(phi) >= 0.5 * np.pi):
            raise DomainError("F(phi|1) diverges for |phi| >= pi/2")
        return np.arctanh(np.sin(phi))
    s, c = np.sin(r), np.cos(r)
    out = s * elliprf(c * c, 1.0 - m * s * s, 1.0)
    return out + 2.0 * j * ellint_K(m)


def ellint_E(phi, m: float):
    """Incomplete elliptic integral of the second kind E(phi|m), 0 <= m <= 1."""
    m = _check_m(m, upper=1.0)
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)):
        raise DomainError("ellint_E amplitude must be finite")
    j, r = _reduce_phi(phi)
    s, c = np.sin(r), np.cos(r)
    if m == 1.0:
        out = s
    else:
        c2, d2 = c * c, 1.0 - m * s * s
        out = s * elliprf(c2, d2, 1.0) - m / 3.0 * s ** 3 * elliprd(c2, d2, 1.0)
    return out + 2.0 * j * _complete_E(m)


def ellint_Pi(n: float, phi, m: float):
    """Incomplete elliptic integral of the third kind Pi(n; phi|m), 0 <= m < 1.

    Raises ``DomainError`` when ``1 - n sin^2(theta)`` vanishes or changes
    sign for some theta between 0 and phi.
    """
    m = _check_m(m, upper=1.0, strict_upper=True)
    n = float(n)
    phi = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(phi)) or not np.isfinite(n):
        raise DomainError("ellint_Pi arguments must be finite")
    j, r = _reduce_phi(phi)
    if n >= 1.0:
        # the pole sits at sin^2(theta) = 1/n, reached once |phi| >= asin(1/sqrt(n))
        if np.any(np.abs(phi) >= np.arcsin(1.0 / np.sqrt(n))):
            raise DomainError(f"Pi(n; phi|m) crosses the pole 1 - n sin^2 = 0 (n={n})")
    s, c = np.sin(r), np.cos(r)
    c2, d2, p = c * c, 1.0 - m * s * s, 1.0 - n * s * s
    out = s * elliprf(c2, d2, 1.0) + n / 3.0 * s ** 3 * elliprj(c2, d2, 1.0, p)
    if np.any(j != 0):
        full = elliprf(0.0, 1.0 - m, 1.0) + n / 3.0 * elliprj(0.0, 1.0 - m, 1.0, 1.0 - n)
        out = out + 2.0 * j * full
    return out


def jacobi_epsilon(x, m: float):
    """Integral of dn^2 from 0 to x, valid for every m >= 0.

    For m <= 1 this is E(am(x|m)|m); for m > 1 the reciprocal-modulus
    transformation gives sqrt(m) E(am(kx|1/m)|1/m) - (m - 1) x.
    """
    m = _check_m(m)
    x = np.asarray(x, dtype=float)
    if m == 1.0:
        return np.tanh(x)
    if m < 1.0:
        return ellint_E(jacobi(x, m).am, m)
    k = np.sqrt(m)
    mu = 1.0 / m
    return k * ellint_E(jacobi(k * x, mu).am, mu) - (m - 1.0) * x
