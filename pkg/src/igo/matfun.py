"""Divided differences, the Opitz formula and matrix functions of chain matrices.

The chain matrix ``A`` (diagonal ``-a_i``, subdiagonal ``g_i``) is similar to
the unit-subdiagonal matrix ``Lambda`` with the same diagonal,
``A = S Lambda S^{-1}`` with ``S = diag(1, g_1, g_1 g_2, ...)``. Functions of
``Lambda`` are lower triangular with divided differences of ``f`` over
contiguous runs of the diagonal as entries (Opitz).
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_triangular

EPS = np.finfo(float).eps
DEFAULT_CONFLUENCE_TOL = 1e-9


class MissingDerivativeError(ValueError):
    """A divided difference needs a derivative order the function does not provide."""


class AnalyticFunction:
    """A real function with derivatives of every needed order.

    Parameters
    ----------
    derivative : callable ``(k, x) -> f^(k)(x)``
        Must accept numpy arrays for ``x``. ``derivative(0, x)`` is the value.
    max_order : int, optional
        Highest derivative order available; ``None`` means unbounded.
    """

    def __init__(self, derivative: Callable, max_order: int | None = None, name: str = "f"):
        self._derivative = derivative
        self.max_order = max_order
        self.name = name

    def derivative(self, k: int, x):
        if k < 0:
            raise ValueError("derivative order must be nonnegative")
        if self.max_order is not None and k > self.max_order:
            raise MissingDerivativeError(
                f"{self.name}: derivative of order {k} requested, only up to {self.max_order} available"
            )
        return self._derivative(k, x)

    def __call__(self, x):
        return self.derivative(0, x)

    value = __call__

    def scaled(self, xi: float) -> "AnalyticFunction":
        return scaled_function(self, xi)

    def _combine(self, other, alpha, beta):
        orders = [o for o in (self.max_order, other.max_order) if o is not None]
        return AnalyticFunction(
            lambda k, x: alpha * self.derivative(k, x) + beta * other.derivative(k, x),
            max_order=min(orders) if orders else None,
            name=f"({self.name}+{other.name})",
        )

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, c: float):
        return AnalyticFunction(lambda k, x: c * self.derivative(k, x), self.max_order, f"{c}*{self.name}")

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __repr__(self):
        return f"AnalyticFunction({self.name})"


EXP = AnalyticFunction(lambda k, x: np.exp(x), name="exp")


def scaled_function(f: AnalyticFunction, xi: float) -> AnalyticFunction:
    """``f_xi(x) = f(xi x)`` with ``f_xi^(k)(x) = xi^k f^(k)(xi x)``."""
    if xi == 0:
        raise ValueError("scale factor must be nonzero")
    return AnalyticFunction(lambda k, x: xi**k * f.derivative(k, xi * np.asarray(x)),
                            f.max_order, f"{f.name}({xi}*x)")


# ---------------------------------------------------------------------------
# Divided differences


def group_nodes(nodes: Sequence[float], tol: float = DEFAULT_CONFLUENCE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Sort nodes and merge near-coincident ones.

    Consecutive sorted nodes whose gap is at most ``tol * max(1, |x|)`` are
    chained into one group (relative spread, with an absolute floor near
    zero); every member is replaced by the group mean. Returns ``(values, labels)`` with equal labels for equal groups.
    """
    x = np.sort(np.asarray(nodes, dtype=float).ravel())
    if x.size == 0:
        raise ValueError("at least one node is required")
    labels = np.zeros(x.size, dtype=int)
    for i in range(1, x.size):
        gap = x[i] - x[i - 1]
        same = gap <= tol * max(abs(x[i]), abs(x[i - 1]), 1.0)
        labels[i] = labels[i - 1] if same else labels[i - 1] + 1
    values = x.copy()
    for lab in np.unique(labels):
        sel = labels == lab
        if sel.sum() > 1:
            values[sel] = x[sel].mean()
    return values, labels


def divided_difference_columns(f: AnalyticFunction, x: np.ndarray, labels: Sequence[int]):
    """Vectorised divided difference over the columns of ``x``.

    ``x`` has shape ``(n, N)``: ``n`` sorted nodes for each of ``N`` problems,
    sharing one confluence pattern ``labels``. Returns ``(value, err)`` where
    ``err`` is a running first-order bound on the rounding error.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    labels = list(labels)
    n = x.shape[0]
    level = [np.asarray(f.derivative(0, x[i]), dtype=float) for i in range(n)]
    err = [4 * EPS * np.abs(v) for v in level]
    for L in range(1, n):
        new_level, new_err = [], []
        for i in range(n - L):
            j = i + L
            if labels[i] == labels[j]:
                v = np.asarray(f.derivative(L, x[i]), dtype=float) / math.factorial(L)
                e = 4 * EPS * np.abs(v)
            else:
                d = x[j] - x[i]
                v = (level[i + 1] - level[i]) / d
                e = (err[i + 1] + err[i]) / np.abs(d) + EPS * np.abs(v)
            new_level.append(v)
            new_err.append(e)
        level, err = new_level, new_err
    return level[0], err[0]


def divided_difference(f: AnalyticFunction, nodes: Sequence[float],
                       confluence_tolerance: float = DEFAULT_CONFLUENCE_TOL) -> float:
    """Divided difference ``f[x_0, ..., x_k]`` over an arbitrary node multiset.

    Repeated (or confluence-tolerance close) nodes are handled through the
    derivative formula ``f[xi, ..., xi] = f^(k)(xi) / k!``; mixed patterns use
    the recursive table on the sorted nodes, falling back to that formula
    whenever both ends of a run lie in the same group.

    Raises
    ------
    MissingDerivativeError
        If a group multiplicity exceeds what ``f`` can differentiate.
    """
    values, labels = group_nodes(nodes, confluence_tolerance)
    val, _ = divided_difference_columns(f, values[:, None], labels)
    return float(val[0])


def opitz_matrix_function(f: AnalyticFunction, diag: Sequence[float],
                          confluence_tolerance: float = DEFAULT_CONFLUENCE_TOL) -> np.ndarray:
    """``f(Lambda)`` for the lower bidiagonal ``Lambda`` with unit subdiagonal.

    Entry ``(i, j)``, ``i >= j``, is ``f[lambda_j, ..., lambda_i]``; entries
    above the diagonal are exactly zero.
    """
    lam = np.asarray(diag, dtype=float)
    m = lam.size
    out = np.zeros((m, m))
    for j in range(m):
        for i in range(j, m):
            out[i, j] = divided_difference(f, lam[j:i + 1], confluence_tolerance)
    return out


# ---------------------------------------------------------------------------
# Matrix exponential and resolvent


def _is_metzler(M: np.ndarray) -> bool:
    off = M - np.diag(np.diag(M))
    return bool(np.all(off >= 0))


def _scaling_norm(N: np.ndarray, max_power: int = 7) -> tuple[float, int]:
    """Norm used to pick the number of squarings, and the minimum Taylor degree.

    For nonnegative ``N`` the Taylor terms cannot cancel, so the scaling can
    follow ``min_p max(||N^p||^(1/p), ||N^(p+1)||^(1/(p+1)))``, which bounds the
    series tail from degree ``p (p - 1)`` on. This avoids the excess squarings
    (each doubling the relative error) that a large but nilpotent-like chain
    coupling would force through ``||N||``. The power is chosen by the
    estimated number of matrix products. General input uses ``||N||_1``.
    """
    norm1 = float(np.abs(N).sum(axis=0).max())
    if np.any(N < 0) or norm1 <= 0.5:
        return norm1, 0
    d = [norm1]
    P = N
    for p in range(2, max_power + 1):
        P = P @ N
        d.append(float(P.sum(axis=0).max()) ** (1.0 / p))
    def cost(eta, p):  # squarings plus Taylor products
        return (math.log2(eta / 0.5) if eta > 0.5 else 0.0) + max(p * (p - 1), 18)

    best, best_p = norm1, 1
    for p in range(2, max_power):
        eta = max(d[p - 1], d[p])
        if cost(eta, p) < cost(best, best_p):
            best, best_p = eta, p
    return best, (best_p * (best_p - 1) if best_p > 1 else 0)


def matrix_exponential(M) -> np.ndarray:
    """``e^M`` by scaling and squaring with a Taylor core.

    The diagonal is first shifted to be nonnegative. For Metzler input the
    shifted matrix is nonnegative, so every Taylor term and every squaring is
    a sum of nonnegative numbers and small entries keep their relative
    accuracy.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("matrix_exponential requires a square matrix")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix has non-finite entries")
    n = M.shape[0]
    if n == 0:
        return M.copy()
    alpha = max(0.0, -float(np.min(np.diag(M))))
    N = M + alpha * np.eye(n)
    norm, min_terms = _scaling_norm(N)
    s = max(0, math.ceil(math.log2(norm / 0.5))) if norm > 0.5 else 0
    X = N / 2.0**s
    T = np.eye(n)
    term = np.eye(n)
    for k in range(1, 80 + min_terms):
        term = term @ X / k
        T = T + term
        if k >= min_terms and np.all(np.abs(term) <= 1e-17 * np.abs(T)):
            break
        if np.abs(term).max() <= 1e-34 * np.abs(T).max():
            break
    T *= math.exp(-alpha / 2.0**s)
    for _ in range(s):
        T = T @ T
    return T


def matrix_expm1(M) -> np.ndarray:
    """``e^M - I`` without cancellation for small ``M``."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    if float(np.abs(M).sum(axis=0).max()) > 0.5:
        return matrix_exponential(M) - np.eye(n)
    term = M.copy()
    T = M.copy()
    for k in range(2, 60):
        term = term @ M / k
        T = T + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(T)):
            break
    return T


def exponential_batch(M, ts) -> tuple[np.ndarray, np.ndarray]:
    """``e^{t M}`` and ``I - e^{t M}`` for a Metzler ``M`` and many ``t > 0``.

    Returns two ``(len(ts), n, n)`` stacks. Same scheme as
    :func:`matrix_exponential`, with one squaring count per distinct value;
    ``I - e^{t M}`` comes from the ``expm1`` series wherever ``t ||M||_1 <= 0.5``.
    """
    M = np.asarray(M, dtype=float)
    ts = np.asarray(ts, dtype=float).ravel()
    if not _is_metzler(M):
        raise ValueError("exponential_batch requires a Metzler matrix")
    n = M.shape[0]
    eye = np.eye(n)
    alpha = max(0.0, -float(np.min(np.diag(M))))
    N = M + alpha * eye
    norm, min_terms = _scaling_norm(N)
    with np.errstate(divide="ignore"):
        s_all = np.where(ts * norm > 0.5, np.ceil(np.log2(ts * norm / 0.5)), 0.0).astype(int)
    E = np.empty((ts.size, n, n))
    for s in np.unique(s_all):
        idx = np.nonzero(s_all == s)[0]
        X = (ts[idx] / 2.0**s)[:, None, None] * N
        T = np.broadcast_to(eye, X.shape).copy()
        term = T.copy()
        for k in range(1, 80 + min_terms):
            term = term @ X / k
            T += term
            if k >= min_terms and np.all(term <= 1e-17 * T):
                break
        T *= np.exp(-alpha * ts[idx] / 2.0**s)[:, None, None]
        for _ in range(s):
            T = T @ T
        E[idx] = T
    D = eye - E
    small = np.nonzero(ts * float(np.abs(M).sum(axis=0).max()) <= 0.5)[0]
    if small.size:
        X = ts[small][:, None, None] * M
        S = X.copy()
        term = X.copy()
        for k in range(2, 60):
            term = term @ X / k
            S += term
            if np.all(np.abs(term) <= 1e-17 * np.abs(S)):
                break
        D[small] = -S
    return E, D


def chain_scaling(g: Sequence[float]) -> np.ndarray:
    """Diagonal of ``S``: cumulative gain products ``1, g_1, g_1 g_2, ...``."""
    return np.concatenate(([1.0], np.cumprod(np.asarray(g, dtype=float))))


def structured_exponential(a: Sequence[float], g: Sequence[float], t: float = 1.0,
                           confluence_tolerance: float = DEFAULT_CONFLUENCE_TOL) -> np.ndarray:
    """``e^{tA}`` for the chain matrix through the Opitz formula."""
    s = chain_scaling(g)
    F = opitz_matrix_function(scaled_function(EXP, t), -np.asarray(a, dtype=float), confluence_tolerance)
    return (s[:, None] / s[None, :]) * F


def resolvent_theta(space, xi: float) -> np.ndarray:
    """``Theta(xi) = (e^{-xi A} - I)^{-1}`` for Hurwitz Metzler ``A`` and ``xi > 0``.

    Solved in the equivalent form ``(I - e^{xi A}) Theta = e^{xi A}``: with
    ``e^{xi A} >= 0`` and spectral radius below one, ``I - e^{xi A}`` is a
    nonsingular M-matrix, and for the triangular chain the forward
    substitution adds only nonnegative terms.
    """
    if not xi > 0:
        raise ValueError("resolvent_theta requires xi > 0")
    A = np.asarray(getattr(space, "A", space), dtype=float)
    M = -matrix_expm1(xi * A)
    E = matrix_exponential(xi * A)
    if np.allclose(np.triu(A, 1), 0.0, atol=0.0):
        return solve_triangular(M, E, lower=True)
    return np.linalg.solve(M, E)
