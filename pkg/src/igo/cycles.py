"""1-cycles: the equation of periods, its roots, fixed points and their stability.

Every 1-cycle corresponds to a root ``y`` of ``y = R(y) = F(y) r(Phi(y))``
with ``r(xi) = C (e^{-xi A} - I)^{-1} B``; the fixed point of the return map
is ``x = F(y) Theta(Phi(y)) B`` and ``C x = y``.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from scipy.optimize import brentq, minimize_scalar

from .matfun import (divided_difference, divided_difference_columns, exponential_batch, group_nodes,
                     matrix_exponential, matrix_expm1)
from .model import IgoModel, InvalidParameterError, StateSpace, build_state_space
from .specfun import PHI, PSI, c_constant

MAX_EXP_ARG = 700.0
TIGHTEN_RATIO = 1e6
UNIQUE_ORDER = 10  # r is decreasing on (0, inf) for every chain up to this order


def _threads() -> int:
    env = os.environ.get("IGO_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _as_space(obj) -> StateSpace:
    return obj if isinstance(obj, StateSpace) else build_state_space(obj)


# ---------------------------------------------------------------------------
# r(xi) and r'(xi)


def _check_xi(space: StateSpace, xi: float) -> None:
    if not xi > 0:
        raise ValueError(f"xi must be positive, got {xi}")
    if xi * max(space.a) > MAX_EXP_ARG:
        raise OverflowError(f"e^(xi * max a) = e^{xi * max(space.a):.1f} exceeds the double range")


def _theta_b(space: StateSpace, xi: float) -> tuple[np.ndarray, np.ndarray]:
    """``(Theta(xi) B, I - e^{xi A})``."""
    E = matrix_exponential(xi * space.A)
    M = -matrix_expm1(xi * space.A)
    return solve_triangular(M, E @ space.B, lower=True), M


def r_of_xi(space, xi: float, method: str = "linear_solve") -> float:
    """``r(xi) = C (e^{-xi A} - I)^{-1} B`` for ``xi > 0``.

    ``method="linear_solve"`` solves with the matrix exponential;
    ``method="divided_difference"`` uses ``(-xi)^(m-1) gbar phi[xi a_1, ..., xi a_m]``.
    """
    space = _as_space(space)
    _check_xi(space, xi)
    if method == "linear_solve":
        z, _ = _theta_b(space, xi)
        return float(space.C @ z)
    if method == "divided_difference":
        m = space.m
        return (-xi) ** (m - 1) * space.gbar * divided_difference(PHI, xi * np.asarray(space.a))
    raise ValueError(f"unknown method {method!r}")


def r_derivative(space, xi: float, method: str = "divided_difference") -> float:
    """``r'(xi)``.

    ``divided_difference``: ``(-xi)^(m-2) gbar psi[xi a_1, ..., xi a_m]``.
    ``linear_solve``: ``C (I - E)^{-1} A Theta B`` with ``E = e^{xi A}``.
    """
    space = _as_space(space)
    _check_xi(space, xi)
    if method == "divided_difference":
        m = space.m
        return (-xi) ** (m - 2) * space.gbar * divided_difference(PSI, xi * np.asarray(space.a))
    if method == "linear_solve":
        z, M = _theta_b(space, xi)
        w = solve_triangular(M, space.A @ z, lower=True)
        return float(space.C @ w)
    raise ValueError(f"unknown method {method!r}")


def r_derivative_upper_bound(space, xi: float) -> float:
    """Upper bound ``xi^(m-2) gbar / C_m`` on ``r'(xi)`` (``m >= 2``).

    Follows from the mean-value form of ``r'`` and the uniform lower bound on
    ``Psi_{m-1}``. The factor ``xi^(m-2)`` matters for ``xi > 1``.
    """
    space = _as_space(space)
    m = space.m
    if m < 2:
        raise ValueError("bound defined for m >= 2")
    return xi ** (m - 2) * space.gbar / c_constant(m)


def _r_linear_batch(space: StateSpace, xs: np.ndarray) -> np.ndarray:
    """Linear-solve ``r`` over many arguments by forward substitution.

    ``I - e^{xi A}`` has a positive diagonal and nonpositive entries below it,
    so every step adds terms of one sign.
    """
    # work with the unit-subdiagonal similar chain; r picks up gbar at the end
    A1 = np.diag(-np.asarray(space.a)) + np.diag(np.ones(space.m - 1), -1)
    u, inv = np.unique(xs, return_inverse=True)
    E, D = exponential_batch(A1, u)
    b = E[:, :, 0]
    z = np.zeros_like(b)
    for i in range(space.m):
        acc = b[:, i] - np.einsum("nj,nj->n", D[:, i, :i], z[:, :i])
        z[:, i] = acc / D[:, i, i]
    return space.gbar * z[inv.ravel(), -1]


def r_values(space, xis, rtol: float = 1e-10) -> np.ndarray:
    """Vectorised ``r`` on many arguments.

    Runs the divided-difference table over all arguments at once, tracking a
    rounding-error bound; arguments whose bound exceeds ``rtol`` are redone
    with a batched linear solve. Non-positive arguments give ``inf`` (the
    limit of ``r`` at ``0+``).
    """
    space = _as_space(space)
    xis = np.atleast_1d(np.asarray(xis, dtype=float))
    out = np.full(xis.shape, np.inf)
    ok = xis > 0
    if not ok.any():
        return out
    xs = xis[ok]
    a_vals, labels = group_nodes(space.a)
    m = space.m
    with np.errstate(all="ignore"):
        val, err = divided_difference_columns(PHI, np.outer(a_vals, xs), labels)
        r = (-xs) ** (m - 1) * space.gbar * val
        bad = ~np.isfinite(r) | ~(r > 0) | (err > rtol * np.abs(val))
    idx = np.nonzero(bad)[0]
    if idx.size:
        with np.errstate(all="ignore"):
            v = _r_linear_batch(space, xs[idx])
        r[idx] = np.where(np.isfinite(v) & (v >= 0), v, np.inf)
    out[ok] = r
    return out


# ---------------------------------------------------------------------------
# Equation of periods


def equation_of_periods(model: IgoModel, y: float, space: StateSpace | None = None) -> float:
    """``R(y) = F(y) r(Phi(y))``; ``inf`` where ``Phi(y)`` underflows to zero."""
    space = space or build_state_space(model)
    xi = float(model.phi.value(y))
    if xi <= 0.0:
        return math.inf
    return float(model.f.value(y)) * r_of_xi(space, xi)


def equation_of_periods_values(model: IgoModel, ys, space: StateSpace | None = None,
                               threads: int | None = None) -> np.ndarray:
    """``R`` on an array of outputs; chunks run concurrently, results in input order."""
    space = space or build_state_space(model)
    ys = np.asarray(ys, dtype=float)
    threads = threads or _threads()

    def block(chunk):
        return model.f.value(chunk) * r_values(space, model.phi.value(chunk))

    if threads <= 1 or ys.size < 20_000:
        return block(ys)
    chunks = np.array_split(ys, threads)
    with ThreadPoolExecutor(threads) as pool:
        return np.concatenate(list(pool.map(block, chunks)))


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float

    def __post_init__(self):
        if not (0.0 <= self.lo <= self.hi):
            raise ValueError(f"invalid bracket [{self.lo}, {self.hi}]")


def _r_extrema(space: StateSpace, lo: float, hi: float, grid_points: int = 1001) -> tuple[float, float]:
    """``(min r, max r)`` over ``[lo, hi]``."""
    if lo == hi:
        v = r_of_xi(space, lo)
        return v, v
    m = space.m
    if m <= UNIQUE_ORDER or (m - 1) / min(space.a) <= lo:
        return r_of_xi(space, hi), r_of_xi(space, lo)
    if hi / lo > 100.0:
        xs = np.geomspace(lo, hi, grid_points)
    else:
        xs = np.linspace(lo, hi, grid_points)
    vals = r_values(space, xs)
    out = []
    for sign, idx in ((1.0, int(np.argmin(vals))), (-1.0, int(np.argmax(vals)))):
        a, b = xs[max(idx - 1, 0)], xs[min(idx + 1, xs.size - 1)]
        best = vals[idx]
        if b > a:
            res = minimize_scalar(lambda t: sign * r_of_xi(space, t), bounds=(a, b), method="bounded",
                                  options={"xatol": 1e-12 * b})
            cand = sign * res.fun
            best = min(best, cand) if sign > 0 else max(best, cand)
        out.append(best)
    return out[0], out[1]


def root_bracket(model: IgoModel) -> Bracket:
    """Interval that contains every root of the equation of periods.

    ``[F1 min r, F2 max r]`` with extrema over ``[Phi1, Phi2]``, the bounds
    being the actual infimum and supremum of the modulation functions on
    ``[0, inf)``. When ``Phi`` reaches (numerically) zero the upper end is
    unbounded, and when ``Phi1`` is merely tiny it is useless for scanning;
    in both cases (upper end more than ``TIGHTEN_RATIO`` times the lower) and
    for non-decreasing ``Phi`` it is replaced by the first doubling ``Y`` with
    ``F2 max_{[Phi(Y), Phi2]} r < Y``, past which no root can exist.
    """
    space = build_state_space(model)
    phi1, phi2 = model.phi.infimum(), model.phi.supremum()
    f1, f2 = model.f.infimum(), model.f.supremum()
    if phi2 <= 0:
        raise InvalidParameterError("phi", "Phi is not positive anywhere")
    hi = math.inf
    if phi1 > 0:
        rmin, rmax = _r_extrema(space, phi1, phi2)
        lo, hi = max(f1 * rmin, 0.0), f2 * rmax
        if math.isfinite(hi) and (hi <= TIGHTEN_RATIO * max(lo, 1e-300) or not model.phi.is_nondecreasing):
            return Bracket(lo, hi)
    else:
        rmin, _ = _r_extrema(space, phi2 * 1e-3, phi2)
        lo = max(f1 * rmin, 0.0)
    if not model.phi.is_nondecreasing:
        raise InvalidParameterError("phi", "roots are unbounded for this Phi; pass an explicit window")
    Y = max(lo, 1e-12)
    for _ in range(2000):
        xi = float(model.phi.value(Y))
        if xi > 0:
            _, rmax = _r_extrema(space, xi, phi2)
            if f2 * rmax < Y:
                return Bracket(lo, Y)
        Y *= 2.0
    raise InvalidParameterError("phi", "could not bound the roots of the equation of periods")


# ---------------------------------------------------------------------------
# Return map


def return_map(model: IgoModel, x, space: StateSpace | None = None) -> np.ndarray:
    """``Q(x) = e^{Phi(Cx) A} (x + F(Cx) B)`` for ``x >= 0``."""
    space = space or build_state_space(model)
    x = np.asarray(x, dtype=float)
    if x.shape != (space.m,):
        raise ValueError(f"state must have shape ({space.m},)")
    if np.any(x < 0):
        raise ValueError("return map is defined for nonnegative states")
    y = float(space.C @ x)
    T = float(model.phi.value(y))
    lam = float(model.f.value(y))
    return matrix_exponential(T * space.A) @ (x + lam * space.B)


def return_map_jacobian(model: IgoModel, x, space: StateSpace | None = None) -> np.ndarray:
    """``Q'(x) = e^{A Phi}(I + F' B C) + Phi' A Q(x) C`` evaluated at ``y = C x``."""
    space = space or build_state_space(model)
    x = np.asarray(x, dtype=float)
    y = float(space.C @ x)
    T = float(model.phi.value(y))
    E = matrix_exponential(T * space.A)
    Qx = E @ (x + float(model.f.value(y)) * space.B)
    J = E @ (np.eye(space.m) + float(model.f.derivative(y)) * np.outer(space.B, space.C))
    return J + float(model.phi.derivative(y)) * np.outer(space.A @ Qx, space.C)


@dataclass(frozen=True)
class Stability:
    spectral_radius: float
    stable: bool


def classify_stability(jac) -> Stability:
    """Schur test: the 1-cycle is orbitally stable iff ``rho(Q'(x*)) < 1``."""
    jac = np.asarray(jac, dtype=float)
    if not np.all(np.isfinite(jac)):
        raise ValueError("Jacobian has non-finite entries")
    try:
        eig = np.linalg.eigvals(jac)
    except np.linalg.LinAlgError as exc:
        raise RuntimeError("eigenvalue iteration did not converge") from exc
    rho = float(np.max(np.abs(eig))) if eig.size else 0.0
    return Stability(rho, rho < 1.0)


# ---------------------------------------------------------------------------
# Cycles


@dataclass(frozen=True)
class CycleReport:
    y_star: float
    period: float
    fixed_point: tuple[float, ...]
    jump_weight: float
    spectral_radius: float
    stable: bool
    residuals: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"y_star": self.y_star, "period": self.period, "fixed_point": list(self.fixed_point),
                "jump_weight": self.jump_weight, "spectral_radius": self.spectral_radius,
                "stable": self.stable, "residuals": dict(self.residuals)}


def fixed_point_from_y(model: IgoModel, y_star: float, space: StateSpace | None = None) -> np.ndarray:
    """Fixed point ``x = F(y) Theta(Phi(y)) B`` of the return map for a root ``y``."""
    space = space or build_state_space(model)
    residual = abs(y_star - equation_of_periods(model, y_star, space))
    if not residual <= 1e-8 * max(1.0, abs(y_star)):
        raise ValueError(f"y = {y_star!r} is not a root of the equation of periods (residual {residual:.3e})")
    xi = float(model.phi.value(y_star))
    z, _ = _theta_b(space, xi)
    return float(model.f.value(y_star)) * z


def cycle_report(model: IgoModel, y_star: float, space: StateSpace | None = None) -> CycleReport:
    space = space or build_state_space(model)
    x = fixed_point_from_y(model, y_star, space)
    stab = classify_stability(return_map_jacobian(model, x, space))
    fp_res = float(np.max(np.abs(return_map(model, x, space) - x)))
    return CycleReport(
        y_star=float(y_star),
        period=float(model.phi.value(y_star)),
        fixed_point=tuple(float(v) for v in x),
        jump_weight=float(model.f.value(y_star)),
        spectral_radius=stab.spectral_radius,
        stable=stab.stable,
        residuals={"equation_of_periods": abs(y_star - equation_of_periods(model, y_star, space)),
                   "fixed_point": fp_res},
    )


def _solve_cell(h, lo: float, hi: float, tol: float) -> float | None:
    flo, fhi = h(lo), h(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) != np.sign(fhi):
        return brentq(h, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=500)
    # scan and accurate values disagree on a sign right at a root
    best, fb = (lo, flo) if abs(flo) < abs(fhi) else (hi, fhi)
    return best if abs(fb) <= 1e-9 * max(1.0, abs(best)) else None


FINE_POINTS = 1001


def _hidden_pair(h, lo: float, mid_sign: float, hi: float, tol: float) -> list[float]:
    """Roots hiding between two grid points where ``h`` keeps its sign."""
    res = minimize_scalar(lambda t: mid_sign * h(t), bounds=(lo, hi), method="bounded", options={"xatol": tol})
    out = []
    if mid_sign * res.fun < 0:
        for a, b in ((lo, res.x), (res.x, hi)):
            r = _solve_cell(h, a, b, tol)
            if r is not None:
                out.append(r)
    return out


def _grid_roots(h, hvec, ys: np.ndarray, hv: np.ndarray, tol: float, scale: float, depth: int) -> list[float]:
    """Roots of ``h`` from its samples ``hv`` on ``ys``.

    Cells with a sign change and neighbourhoods of small local minima of
    ``|h|`` are rescanned on a finer grid ``depth`` times before the final
    bracketing, so clusters of roots inside one coarse cell are separated.
    """
    roots = [float(y) for y in ys[hv == 0.0]]
    s = np.sign(hv)
    ah = np.abs(hv)
    cells: list[tuple[int, int]] = [(int(i), int(i) + 1) for i in np.nonzero(s[:-1] * s[1:] < 0)[0]]
    dips = [i for i in range(1, ys.size - 1)
            if ah[i] <= ah[i - 1] and ah[i] <= ah[i + 1] and ah[i] < 1e-3 * scale
            and s[i] != 0 and s[i - 1] == s[i] == s[i + 1]]
    if depth <= 0:
        for i, j in cells:
            r = _solve_cell(h, ys[i], ys[j], tol)
            if r is not None:
                roots.append(r)
        for i in dips:
            roots += _hidden_pair(h, ys[i - 1], s[i], ys[i + 1], tol)
        return roots

    n = ys.size - 1
    lows = [i for i in range(1, n) if ah[i] <= ah[i - 1] and ah[i] <= ah[i + 1] and ah[i] < 1e-3 * scale]
    regions = sorted([(max(i - 1, 0), min(j + 1, n)) for i, j in cells] + [(i - 1, i + 1) for i in lows])
    merged: list[list[int]] = []
    for i, j in regions:
        if merged and i <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], j)
        else:
            merged.append([i, j])
    for i, j in merged:
        fine = np.linspace(ys[i], ys[j], FINE_POINTS)
        with np.errstate(invalid="ignore"):
            hf = hvec(fine)
        roots += _grid_roots(h, hvec, fine, hf, tol, scale, depth - 1)
    return roots


def find_roots(model: IgoModel, window: Sequence[float] | None = None, points: int = 10_001,
               tol: float = 1e-12, space: StateSpace | None = None, depth: int = 1) -> list[float]:
    """Roots of ``y - R(y)`` on ``window`` (default: :func:`root_bracket`).

    A uniform scan locates sign changes and near-zero dips of
    ``|y - R(y)|``; each is rescanned ``depth`` times on a finer grid, then
    sign changes are refined by bracketing and remaining dips are probed for
    a hidden pair of roots. Roots within ``10 tol`` are merged.
    """
    space = space or build_state_space(model)
    br = root_bracket(model) if window is None else Bracket(float(window[0]), float(window[1]))
    if br.lo == br.hi:
        return [br.lo] if abs(br.lo - equation_of_periods(model, br.lo, space)) <= 1e-9 * max(1.0, br.lo) else []

    def h(y):
        return y - equation_of_periods(model, y, space)

    def hvec(ys):
        return ys - equation_of_periods_values(model, ys, space)

    # tolerances follow the window when it sits far below unit scale
    scale = max(abs(br.lo), abs(br.hi))
    tol = min(tol, 1e-12 * scale)
    ys = np.linspace(br.lo, br.hi, int(points))
    with np.errstate(invalid="ignore"):
        hv = hvec(ys)
    roots = _grid_roots(h, hvec, ys, hv, tol, scale, depth)
    for k in (0, -1):
        if hv[k] != 0.0 and abs(h(ys[k])) <= 1e-12 * abs(ys[k]):
            roots.append(float(ys[k]))
    roots = sorted(roots)
    merged: list[float] = []
    for r in roots:
        if merged and r - merged[-1] < 10 * tol:
            continue
        merged.append(float(r))
    return merged


def find_all_cycles(model: IgoModel, scan_window: Sequence[float] | None = None, scan_points: int = 10_001,
                    tol: float = 1e-12) -> list[CycleReport]:
    """All 1-cycles detectable on the scan grid, sorted by ``y_star``.

    Without ``scan_window`` the whole root bracket is scanned and at least one
    cycle must come out (existence is guaranteed); an empty result then
    signals an internal failure and raises ``RuntimeError``.
    """
    space = build_state_space(model)
    roots = find_roots(model, scan_window, scan_points, tol, space)
    if not roots and scan_window is None:
        raise RuntimeError("no root found inside the root bracket; existence guarantees at least one")
    return [cycle_report(model, y, space) for y in roots]


# ---------------------------------------------------------------------------
# Uniqueness


@dataclass(frozen=True)
class UniquenessCertificate:
    guaranteed: bool
    reasons: tuple[str, ...]
    details: dict = field(default_factory=dict)


def uniqueness_certificate(model: IgoModel) -> UniquenessCertificate:
    """Whether the hypotheses of one of the uniqueness results hold.

    Requires ``Phi`` non-decreasing and ``F`` non-increasing, plus one of:
    ``m <= 10``; ``(m - 1) / min a_i <= Phi1``; or the slope condition
    ``sup Phi' <= C_m / (gbar F(0) max(1, Phi2)^(m-2))``.
    """
    space = build_state_space(model)
    m = space.m
    satisfied: list[str] = []
    violated: list[str] = []
    details: dict = {}

    monotone = True
    if not model.phi.is_nondecreasing:
        monotone = False
        violated.append("Phi is not non-decreasing")
    if not model.f.is_nonincreasing:
        monotone = False
        violated.append("F is not non-increasing")

    if m <= UNIQUE_ORDER:
        satisfied.append(f"m = {m} <= {UNIQUE_ORDER}")
    else:
        violated.append(f"m = {m} > {UNIQUE_ORDER}")

    phi1 = model.phi.infimum()
    sparse = (m - 1) / min(space.a)
    details["sparsity_threshold"] = sparse
    details["Phi1"] = phi1
    if phi1 > 0 and sparse <= phi1:
        satisfied.append(f"(m-1)/min a_i = {sparse:.6g} <= Phi1 = {phi1:.6g}")
    else:
        violated.append(f"(m-1)/min a_i = {sparse:.6g} > Phi1 = {phi1:.6g}")

    if m >= 2:
        sup_d = model.phi.sup_abs_derivative()
        f0 = float(model.f.value(0.0))
        stretch = max(1.0, model.phi.supremum()) ** (m - 2)
        threshold = c_constant(m) / (space.gbar * f0 * stretch)
        details.update(sup_phi_derivative=sup_d, slope_threshold=threshold)
        if sup_d <= threshold:
            satisfied.append(f"sup Phi' = {sup_d:.6g} <= C_m/(gbar F(0) max(1,Phi2)^(m-2)) = {threshold:.6g}")
        else:
            violated.append(f"sup Phi' = {sup_d:.6g} > C_m/(gbar F(0) max(1,Phi2)^(m-2)) = {threshold:.6g}")

    guaranteed = monotone and bool(satisfied)
    reasons = tuple(satisfied) if guaranteed else tuple(violated)
    return UniquenessCertificate(guaranteed, reasons, details)
