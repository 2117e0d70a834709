"""Exact simulation of the impulsive system.

Between jumps the state follows ``x(t) = e^{(t - t_n) A} x(t_n^+)``; at
``t_n`` the state jumps by ``F(y(t_n^-)) B`` and the next interval is
``T_n = Phi(y(t_n^-))``. No ODE stepping is involved.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .cycles import return_map
from .matfun import matrix_exponential
from .model import IgoModel, StateSpace, build_state_space


@dataclass(frozen=True)
class Trajectory:
    """Jump times ``t_n`` with pre-/post-jump states ``x(t_n^-)``, ``x(t_n^+)``.

    ``pre_jump_states`` has one more entry than the other lists: the last
    one is the state reached at ``final_time`` after the last interval.
    """

    jump_times: tuple[float, ...]
    pre_jump_states: tuple[np.ndarray, ...]
    post_jump_states: tuple[np.ndarray, ...]
    jump_weights: tuple[float, ...]
    final_time: float
    dense_samples: tuple[tuple[float, np.ndarray], ...] | None = None

    @property
    def intervals(self) -> np.ndarray:
        return np.diff(np.append(self.jump_times, self.final_time))

    def records(self, C) -> list[tuple[float, str, np.ndarray, float]]:
        """Time-ordered rows ``(t, event, x, y)``."""
        C = np.asarray(C, dtype=float)
        dense = list(self.dense_samples or ())
        rows = []
        k = 0
        for n, t in enumerate(self.jump_times):
            rows.append((t, "pre_jump", self.pre_jump_states[n]))
            rows.append((t, "post_jump", self.post_jump_states[n]))
            t_next = self.jump_times[n + 1] if n + 1 < len(self.jump_times) else self.final_time
            while k < len(dense) and dense[k][0] < t_next:
                rows.append((dense[k][0], "dense", dense[k][1]))
                k += 1
        rows.append((self.final_time, "pre_jump", self.pre_jump_states[-1]))
        return [(t, ev, x, float(C @ x)) for t, ev, x in rows]

    def to_csv(self, path_or_file, C) -> None:
        """Write the CSV ``t,event,x1..xm,y`` with 17 significant digits."""
        m = len(self.pre_jump_states[0])
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "event"] + [f"x{i + 1}" for i in range(m)] + ["y"])
            for t, ev, x, y in self.records(C):
                w.writerow([f"{t:.17g}", ev] + [f"{v:.17g}" for v in x] + [f"{y:.17g}"])
        finally:
            if own:
                fh.close()


class _ExpCache:
    """``e^{T A}`` keyed by ``T`` rounded to 1e-15 relative."""

    def __init__(self, A: np.ndarray, max_size: int = 4096):
        self.A = A
        self.max_size = max_size
        self._store: dict[float, np.ndarray] = {}

    def __call__(self, T: float) -> np.ndarray:
        key = float(f"{T:.15e}")
        E = self._store.get(key)
        if E is None:
            E = matrix_exponential(T * self.A)
            if len(self._store) < self.max_size:
                self._store[key] = E
        return E


def _check_state(x0, m: int) -> np.ndarray:
    x = np.asarray(x0, dtype=float)
    if x.shape != (m,):
        raise ValueError(f"initial state must have {m} entries, got shape {x.shape}")
    if not np.all(np.isfinite(x)) or np.any(x < 0):
        raise ValueError("initial state must be finite and entrywise nonnegative")
    return x


def simulate(model: IgoModel, x0: Sequence[float], n_jumps: int, dense_dt: float | None = None) -> Trajectory:
    """Simulate ``n_jumps`` impulses starting from ``x(0^-) = x0``.

    Parameters
    ----------
    model : IgoModel
    x0 : array_like
        Nonnegative state just before the first jump at ``t = 0``.
    n_jumps : int
        Number of impulses, at least 1.
    dense_dt : float, optional
        If given, the continuous state is also sampled at ``t_n + k dense_dt``
        (``k >= 1``) inside each interval, always from the post-jump state.
    """
    if n_jumps < 1:
        raise ValueError("n_jumps must be at least 1")
    if dense_dt is not None and not dense_dt > 0:
        raise ValueError("dense_dt must be positive")
    space = build_state_space(model)
    x = _check_state(x0, space.m)
    expm = _ExpCache(space.A)

    times, pre, post, weights = [], [x], [], []
    dense: list[tuple[float, np.ndarray]] | None = [] if dense_dt else None
    t = 0.0
    for _ in range(n_jumps):
        y = float(space.C @ x)
        lam = float(model.f.value(y))
        T = float(model.phi.value(y))
        xp = x + lam * space.B
        times.append(t)
        weights.append(lam)
        post.append(xp)
        if dense is not None:
            for k in range(1, math.ceil(T / dense_dt) + 1):
                s = k * dense_dt
                if s >= T:
                    break
                dense.append((t + s, expm(s) @ xp))
        x = expm(T) @ xp
        t += T
        pre.append(x)
    return Trajectory(tuple(times), tuple(pre), tuple(post), tuple(weights), t,
                      tuple(dense) if dense is not None else None)


def iterate_return_map(model: IgoModel, x0: Sequence[float], n: int) -> list[np.ndarray]:
    """``[X_0, Q(X_0), ..., Q^n(X_0)]``."""
    space = build_state_space(model)
    x = _check_state(x0, space.m)
    out = [x]
    for _ in range(n):
        x = return_map(model, x, space)
        out.append(x)
    return out


@dataclass(frozen=True)
class UltimateBounds:
    V: np.ndarray
    H: np.ndarray

    def contains(self, x, rtol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.V * (1 - rtol)) and np.all(x <= self.H * (1 + rtol)))


def ultimate_bounds(model: IgoModel) -> UltimateBounds:
    """Asymptotic componentwise bounds on ``x(t)`` for every solution.

    ``V_1 = F1 / (e^{a_1 Phi2} - 1)``, ``H_1 = F2 / (1 - e^{-a_1 Phi1})`` and
    ``V_i = (g_{i-1} / a_i) V_{i-1}``, ``H_i = (g_{i-1} / a_i) H_{i-1}``.
    ``H_1`` is infinite when ``Phi1 = 0``.
    """
    space: StateSpace = build_state_space(model)
    a, g = np.asarray(space.a), np.asarray(space.g)
    phi1, phi2 = model.phi.infimum(), model.phi.supremum()
    f1, f2 = model.f.infimum(), model.f.supremum()
    V = np.empty(space.m)
    H = np.empty(space.m)
    V[0] = f1 / math.expm1(a[0] * phi2)
    H[0] = f2 / -math.expm1(-a[0] * phi1) if phi1 > 0 else math.inf
    for i in range(1, space.m):
        V[i] = g[i - 1] / a[i] * V[i - 1]
        H[i] = g[i - 1] / a[i] * H[i - 1]
    return UltimateBounds(V, H)
