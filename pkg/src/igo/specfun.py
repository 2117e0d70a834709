"""Special functions behind the uniqueness analysis.

Negative-order polylogarithms ``Li_{-k}``, the auxiliary functions

    phi(x) = 1 / (e^x - 1),        psi(x) = x e^x / (e^x - 1)^2,

their derivatives, ``Psi_k = (-1)^k psi^(k)``, the Riemann zeta function at
integers, and the bound polynomials ``p_k``, ``q_k`` whose real roots certify
positivity of ``Psi_k``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as npoly
from scipy.optimize import brentq, minimize_scalar

from .matfun import AnalyticFunction

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Polylogarithms of negative integer order


@lru_cache(maxsize=None)
def eulerian_numbers(n: int) -> tuple[int, ...]:
    """Row ``n`` of the Eulerian triangle, ``A(n, 0), ..., A(n, n-1)``.

    Exact integers; ``eulerian_numbers(0) == (1,)`` by convention.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    row = [1]
    for nn in range(1, n + 1):
        prev = row
        row = []
        for k in range(nn):
            left = prev[k] if k < len(prev) else 0
            right = prev[k - 1] if 0 <= k - 1 < len(prev) else 0
            row.append((k + 1) * left + (nn - k) * right)
    return tuple(row)


def _eulerian_poly(k: int, z):
    coeffs = eulerian_numbers(k)
    acc = np.zeros_like(z) + float(coeffs[-1])
    for c in coeffs[-2::-1]:
        acc = acc * z + float(c)
    return acc


def _as_output(x, out):
    return float(out) if np.ndim(x) == 0 else out


def polylog_neg(k: int, z):
    """``Li_{-k}(z)`` for integer ``k >= 0`` and real ``|z| < 1``.

    Uses the rational closed form ``z E_k(z) / (1 - z)^(k+1)`` where ``E_k``
    is the Eulerian polynomial (``Li_0(z) = z / (1 - z)``).
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    zz = np.asarray(z, dtype=float)
    if np.any(np.abs(zz) >= 1.0):
        raise ValueError("polylog_neg requires |z| < 1")
    if k == 0:
        out = zz / (1.0 - zz)
    else:
        out = zz * _eulerian_poly(k, zz) / (1.0 - zz) ** (k + 1)
    return _as_output(z, out)


def polylog_neg_exp(k: int, x):
    """``Li_{-k}(e^{-x})`` for ``x > 0``.

    Same closed form as :func:`polylog_neg`, with ``1 - e^{-x}`` taken from
    ``expm1`` so that small ``x`` keeps full relative accuracy.
    """
    xx = np.asarray(x, dtype=float)
    if np.any(xx <= 0.0):
        raise ValueError("polylog_neg_exp requires x > 0")
    z = np.exp(-xx)
    om = -np.expm1(-xx)
    if k == 0:
        out = z / om
    else:
        out = z * _eulerian_poly(k, z) / om ** (k + 1)
    return _as_output(x, out)


def polylog_neg_series(k: int, z: float, terms: int | None = None) -> float:
    """Truncated power series ``sum_j j^k z^j``; an oracle for the closed form.

    Summed with ``math.fsum``. For ``z < 0`` the terms alternate and the
    result carries an absolute error of order ``eps * sum_j j^k |z|^j``.
    """
    if abs(z) >= 1.0:
        raise ValueError("series requires |z| < 1")
    parts = []
    j = 1
    peak = 0.0
    while True:
        term = j**k * z**j
        parts.append(term)
        peak = max(peak, abs(term))
        if terms is not None:
            if j >= terms:
                break
        elif abs(term) <= 1e-18 * peak and j > k:
            break
        j += 1
    return math.fsum(parts)


# ---------------------------------------------------------------------------
# phi, psi and Psi_k


def phi_derivative(k: int, y):
    """``phi^(k)(y) = (-1)^k Li_{-k}(e^{-y})`` for ``y > 0``."""
    if np.any(np.asarray(y) <= 0.0):
        raise ValueError("phi_derivative requires y > 0")
    return (-1) ** k * polylog_neg_exp(k, y)


def psi_capital(k: int, x):
    """``Psi_k(x) = x Li_{-k-1}(e^{-x}) - k Li_{-k}(e^{-x})``.

    ``Psi_0`` is ``psi`` itself. Raises for ``x <= 0``.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    xx = np.asarray(x, dtype=float)
    if np.any(xx <= 0.0):
        raise ValueError("psi_capital requires x > 0")
    out = xx * polylog_neg_exp(k + 1, xx)
    if k:
        out = out - k * polylog_neg_exp(k, xx)
    return _as_output(x, out)


def psi_capital_series(k: int, x: float) -> float:
    """Series ``sum_j j^k (x j - k) e^{-j x}``, an independent route to ``Psi_k``."""
    if x <= 0.0:
        raise ValueError("series requires x > 0")
    total = 0.0
    abs_total = 0.0
    j = 1
    while True:
        term = j**k * (x * j - k) * math.exp(-j * x)
        total += term
        abs_total += abs(term)
        if j * x > 40.0 and abs(term) < 1e-16 * abs_total:
            break
        j += 1
    return total


def psi_derivative(k: int, x):
    """``psi^(k)(x) = (-1)^k Psi_k(x)``."""
    return (-1) ** k * psi_capital(k, x)


PHI = AnalyticFunction(phi_derivative, name="phi")
PSI = AnalyticFunction(psi_derivative, name="psi")


# ---------------------------------------------------------------------------
# zeta and derived constants

# B_2, B_4, ..., B_16
_BERNOULLI_EVEN = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def zeta_int(s: int) -> float:
    """Riemann zeta at an integer ``s >= 2`` by Euler-Maclaurin summation."""
    if int(s) != s or s < 2:
        raise ValueError("zeta_int requires an integer s >= 2")
    s = int(s)
    n_head = 10
    head = math.fsum(n ** (-float(s)) for n in range(n_head - 1, 0, -1))
    N = float(n_head)
    tail = N ** (1 - s) / (s - 1) + 0.5 * N ** (-s)
    rising = float(s)  # s (s+1) ... (s+2j-2)
    for j, b in enumerate(_BERNOULLI_EVEN, start=1):
        if j > 1:
            rising *= (s + 2 * j - 3) * (s + 2 * j - 2)
        tail += b / math.factorial(2 * j) * rising * N ** (-s - 2 * j + 1)
    return head + tail


def c_constant(m: int) -> float:
    """``C_m = (2 pi)^m / (2 (m-1) zeta(m))``."""
    if m < 2:
        raise ValueError("c_constant requires m >= 2")
    return TWO_PI**m / (2.0 * (m - 1) * zeta_int(m))


def psi_positivity_threshold(k: int) -> float:
    """Radius below which ``Psi_k`` is provably positive."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return TWO_PI / (2.0 * k * zeta_int(k + 1)) ** (1.0 / (k + 1))


def psi_lower_bound(k: int) -> float:
    """Uniform lower bound ``-2 k k! zeta(k+1) / (2 pi)^(k+1)`` on ``Psi_k``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return -2.0 * k * math.factorial(k) * zeta_int(k + 1) / TWO_PI ** (k + 1)


def psi_minimizer(k: int, upper: float | None = None, grid_points: int = 4001) -> tuple[float, float]:
    """Location and value of the minimum of ``Psi_k`` on ``(0, upper]``.

    Grid scan followed by bounded refinement; ``upper`` defaults to ``k + 6``.
    """
    upper = float(k + 6 if upper is None else upper)
    xs = np.linspace(upper / grid_points, upper, grid_points)
    vals = psi_capital(k, xs)
    i = int(np.argmin(vals))
    lo, hi = xs[max(i - 1, 0)], xs[min(i + 1, len(xs) - 1)]
    res = minimize_scalar(lambda t: psi_capital(k, t), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    if res.fun < vals[i]:
        return float(res.x), float(res.fun)
    return float(xs[i]), float(vals[i])


# ---------------------------------------------------------------------------
# Bound polynomials


@dataclass(frozen=True)
class RealPolynomial:
    """Dense real polynomial, coefficients in ascending degree order."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs)

    @property
    def degree(self) -> int:
        # exact zeros only: the bound polynomials have legitimately tiny leading terms
        nz = np.nonzero(self.array)[0]
        return int(nz[-1]) if nz.size else 0

    def __call__(self, x):
        return npoly.polyval(x, self.array)


def _binomial_power(shift: complex, n: int) -> np.ndarray:
    # coefficients of (x + shift)^n, ascending
    return np.array([math.comb(n, j) * shift ** (n - j) for j in range(n + 1)], dtype=complex)


def _lattice_numerator(k: int, l: int) -> np.ndarray:
    """Real coefficients of ``2 Re[(x - 2 pi k l i)(x - 2 pi l i)^(k+2)]``."""
    w = TWO_PI * l
    prod = npoly.polymul(np.array([-1j * w * k, 1.0]), _binomial_power(-1j * w, k + 2))
    return 2.0 * prod.real


def _xpow(n: int) -> np.ndarray:
    c = np.zeros(n + 1)
    c[n] = 1.0
    return c


def build_pk_polynomial(k: int) -> RealPolynomial:
    """Numerator ``p_k`` of the one-term-refined lower bound on ``Psi_k / k!``.

    Normalised so that ``Psi_k(x) / k! >= p_k(x) / (x^(k+1) (x^2 + 4 pi^2)^(k+2))``
    for ``x > 0``; hence ``p_k(0) = (4 pi^2)^(k+2)``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    c_k = 2.0 * k * (zeta_int(k + 1) - 1.0) / TWO_PI ** (k + 1)
    d1 = npoly.polypow([4.0 * math.pi**2, 0.0, 1.0], k + 2)
    xk1 = _xpow(k + 1)
    out = npoly.polyadd(d1, -c_k * npoly.polymul(xk1, d1))
    out = npoly.polyadd(out, npoly.polymul(xk1, _lattice_numerator(k, 1)))
    return RealPolynomial(tuple(out))


def build_qk_polynomial(k: int) -> RealPolynomial:
    """Numerator ``q_k`` of the two-term-refined bound.

    ``Psi_k(x) / k! >= q_k(x) / (x^(k+1) (x^2 + 4 pi^2)^(k+2) (x^2 + 16 pi^2)^(k+2))``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    cbar = 2.0 * k * (zeta_int(k + 1) - 1.0 - 2.0 ** (-k - 1)) / TWO_PI ** (k + 1)
    d1 = npoly.polypow([4.0 * math.pi**2, 0.0, 1.0], k + 2)
    d2 = npoly.polypow([16.0 * math.pi**2, 0.0, 1.0], k + 2)
    d12 = npoly.polymul(d1, d2)
    xk1 = _xpow(k + 1)
    out = npoly.polyadd(d12, -cbar * npoly.polymul(xk1, d12))
    out = npoly.polyadd(out, npoly.polymul(npoly.polymul(xk1, d2), _lattice_numerator(k, 1)))
    out = npoly.polyadd(out, npoly.polymul(npoly.polymul(xk1, d1), _lattice_numerator(k, 2)))
    return RealPolynomial(tuple(out))


def pk_denominator(k: int, x):
    return np.asarray(x) ** (k + 1) * (np.asarray(x) ** 2 + 4 * math.pi**2) ** (k + 2)


def qk_denominator(k: int, x):
    x = np.asarray(x)
    return x ** (k + 1) * (x**2 + 4 * math.pi**2) ** (k + 2) * (x**2 + 16 * math.pi**2) ** (k + 2)


def real_roots(p, interval: Sequence[float] = (-50.0, 50.0), grid_points: int = 200_001,
               xtol: float = 1e-10) -> list[float]:
    """Real roots of ``p`` in ``interval`` found by sign-change scan and bracketing.

    Roots of even multiplicity that do not produce a sign change between grid
    points are not detected.
    """
    lo, hi = float(interval[0]), float(interval[1])
    if not hi > lo:
        raise ValueError("interval must satisfy hi > lo")
    if grid_points < 2:
        raise ValueError("grid_points must be >= 2")
    xs = np.linspace(lo, hi, int(grid_points))
    vals = np.asarray(p(xs), dtype=float)
    roots = [float(x) for x in xs[vals == 0.0]]
    s = np.sign(vals)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        roots.append(brentq(lambda t: float(p(t)), xs[i], xs[i + 1], xtol=xtol, rtol=4 * np.finfo(float).eps))
    return sorted(roots)
