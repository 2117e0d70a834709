"""Self-checks of the numerical machinery against reference values and oracles.

Each suite returns a list of :class:`VerifyCheck`. Reference values are
literals; oracles are independent computations (series, plain linear
algebra, simulation).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matfun import EXP, divided_difference, matrix_exponential, opitz_matrix_function
from .model import IgoModel, ModulationSpec
from .simulator import simulate, ultimate_bounds
from .specfun import (build_pk_polynomial, build_qk_polynomial, c_constant, psi_capital,
                      psi_capital_series, real_roots, zeta_int)

SUITES = ("psi", "table1", "cm", "bounds", "dd")

# (k, kind, expected positive roots)
TABLE1 = (
    (5, "p", (9.563,)),
    (6, "p", (10.115,)),
    (7, "p", (10.369,)),
    (8, "p", (10.291,)),
    (9, "q", (15.456,)),
)


@dataclass(frozen=True)
class VerifyCheck:
    name: str
    passed: bool
    detail: str = ""

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}  {self.detail}".rstrip()


def _sig_equal(x: float, ref: float, digits: int) -> bool:
    return float(f"{x:.{digits}g}") == float(f"{ref:.{digits}g}")


def suite_psi() -> list[VerifyCheck]:
    out = []
    v = float(psi_capital(10, 8.64))
    out.append(VerifyCheck("Psi_10(8.64) = -2.087496e-6", abs(v + 2.087496e-6) <= 1e-11, f"value {v:.10e}"))
    s = psi_capital_series(10, 8.64)
    out.append(VerifyCheck("Psi_10(8.64) closed form vs series", abs(v - s) <= 1e-12 * max(1.0, abs(s)) + 1e-18,
                           f"series {s:.10e}"))
    xs = np.linspace(0.01, 40.0, 4000)
    for k in range(1, 10):
        mn = float(np.min(psi_capital(k, xs)))
        out.append(VerifyCheck(f"Psi_{k} > 0 on grid (0, 40]", mn > 0, f"min {mn:.3e}"))
    return out


def suite_table1(tol: float = 2e-3) -> list[VerifyCheck]:
    out = []
    for k, kind, expected in TABLE1:
        poly = build_pk_polynomial(k) if kind == "p" else build_qk_polynomial(k)
        roots = real_roots(poly, (-60.0, 60.0))
        pos = sorted(r for r in roots if r > 0)
        ok = len(pos) == len(expected) and all(abs(a - b) <= tol for a, b in zip(pos, expected))
        symmetric = any(abs(r + pos[0]) <= 1e-6 for r in roots) if pos else False
        out.append(VerifyCheck(f"{kind}_{k} positive real roots {expected}", ok,
                               f"found {[round(r, 6) for r in roots]}" + (" (symmetric)" if symmetric else "")))
    q9 = build_qk_polynomial(9)
    in_range = [r for r in real_roots(q9, (1e-9, 9.0)) if 0 < r <= 9]
    out.append(VerifyCheck("q_9 has no real root in (0, 9]", not in_range, f"found {in_range}"))
    return out


def suite_cm() -> list[VerifyCheck]:
    refs = {11: 3.01e7, 12: 1.72e8, 13: 9.91e8}
    out = [VerifyCheck(f"C_{m} = {ref:.3g}", _sig_equal(c_constant(m), ref, 3), f"value {c_constant(m):.6e}")
           for m, ref in refs.items()]
    z = zeta_int(11)
    out.append(VerifyCheck("zeta(11) = 1.005 (4 significant digits)", _sig_equal(z, 1.005, 4), f"value {z:.9f}"))
    return out


def _random_model(rng: np.random.Generator, m: int) -> IgoModel:
    a = tuple(rng.uniform(0.2, 3.0, m))
    g = tuple(rng.uniform(0.3, 3.0, m - 1))
    phi = ModulationSpec.hill_increasing(lo=rng.uniform(0.3, 1.0), hi=rng.uniform(1.2, 4.0),
                                         h=rng.uniform(0.1, 3.0), p=rng.uniform(1.0, 4.0))
    f = ModulationSpec.hill_decreasing(lo=rng.uniform(0.2, 1.0), hi=rng.uniform(1.2, 5.0),
                                       h=rng.uniform(0.1, 3.0), p=rng.uniform(1.0, 4.0))
    return IgoModel(a, g, phi, f)


def suite_bounds(n_models: int = 5, n_jumps: int = 1000, seed: int = 7) -> list[VerifyCheck]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_models):
        m = int(rng.integers(1, 8))
        model = _random_model(rng, m)
        traj = simulate(model, rng.uniform(0.0, 2.0, m), n_jumps)
        bnd = ultimate_bounds(model)
        tail = traj.pre_jump_states[n_jumps // 2:] + traj.post_jump_states[n_jumps // 2:]
        ok = all(bnd.contains(x) for x in tail) and all(np.all(x > 0) for x in tail)
        out.append(VerifyCheck(f"ultimate bounds, random model {i} (m={m})", ok))
    return out


def _dd_oracle(f_vals: np.ndarray, nodes: np.ndarray) -> float:
    """Leading coefficient of the interpolating polynomial (distinct nodes)."""
    V = np.vander(nodes, increasing=True)
    return float(np.linalg.solve(V, f_vals)[-1])


def suite_dd(seed: int = 11) -> list[VerifyCheck]:
    rng = np.random.default_rng(seed)
    out = []
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 6))
        x = np.sort(rng.uniform(-1.0, 1.0, n))
        if np.min(np.diff(x)) < 0.1:
            continue
        ref = _dd_oracle(np.exp(x), x)
        worst = max(worst, abs(divided_difference(EXP, x) - ref) / abs(ref))
    out.append(VerifyCheck("divided differences vs interpolation system", worst <= 1e-9, f"max rel err {worst:.2e}"))
    lam = np.array([-1.0, -1.0, -0.5, -2.0])
    L = np.diag(lam) + np.diag(np.ones(3), -1)
    series = sum(np.linalg.matrix_power(L, k) / math.factorial(k) for k in range(60))
    err = float(np.max(np.abs(opitz_matrix_function(EXP, lam) - series)))
    out.append(VerifyCheck("Opitz exp vs power series", err <= 1e-10, f"max abs err {err:.2e}"))
    err2 = float(np.max(np.abs(matrix_exponential(L) - series)))
    out.append(VerifyCheck("scaling-and-squaring exp vs power series", err2 <= 1e-12, f"max abs err {err2:.2e}"))
    return out


RUNNERS = {"psi": suite_psi, "table1": suite_table1, "cm": suite_cm, "bounds": suite_bounds, "dd": suite_dd}


def run_suite(name: str) -> list[VerifyCheck]:
    try:
        runner = RUNNERS[name]
    except KeyError:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}") from None
    return runner()
