"""IGO(m) models: modulation functions, chain parameters and state-space form."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.special import erfc

from .matfun import chain_scaling

KINDS = ("constant", "hill_increasing", "hill_decreasing", "gaussian_cdf")
_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


class InvalidParameterError(ValueError):
    """A model parameter violates its invariant. ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def normal_cdf(z):
    """Standard normal CDF through ``erfc``, accurate in both tails."""
    return 0.5 * erfc(-np.asarray(z, dtype=float) / _SQRT2)


def _scalar_out(y, out):
    return float(out) if np.ndim(y) == 0 else out


@dataclass(frozen=True)
class ModulationSpec:
    """Parametric modulation function ``y -> value`` with analytic derivative.

    Kinds
    -----
    constant
        ``lo`` (``hi`` must equal ``lo``).
    hill_increasing
        ``lo + (hi - lo) y^p / (h^p + y^p)``.
    hill_decreasing
        ``lo + (hi - lo) h^p / (h^p + y^p)``.
    gaussian_cdf
        ``lo + (hi - lo) NormalCDF((y - center) / sigma)``; ``sigma`` is the
        standard deviation.
    """

    kind: str
    lo: float
    hi: float
    h: float | None = None
    p: float | None = None
    center: float | None = None
    sigma: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError("kind", f"unknown modulation kind {self.kind!r}")
        for name in ("lo", "hi", "h", "p", "center", "sigma"):
            v = getattr(self, name)
            if v is not None:
                v = float(v)
                if not math.isfinite(v):
                    raise InvalidParameterError(name, "must be finite")
                object.__setattr__(self, name, v)
        if self.hi < self.lo:
            raise InvalidParameterError("hi", "hi must be >= lo")
        if self.kind == "constant" and self.hi != self.lo:
            raise InvalidParameterError("hi", "constant modulation needs lo == hi")
        if self.kind.startswith("hill"):
            if self.h is None or self.h <= 0:
                raise InvalidParameterError("h", "half-saturation must be > 0")
            if self.p is None or self.p < 1:
                raise InvalidParameterError("p", "Hill exponent must be >= 1")
        if self.kind == "gaussian_cdf":
            if self.center is None:
                raise InvalidParameterError("center", "gaussian_cdf needs a center")
            if self.sigma is None or self.sigma <= 0:
                raise InvalidParameterError("sigma", "gaussian_cdf needs sigma > 0")

    # -- constructors ------------------------------------------------------
    @classmethod
    def constant(cls, value: float) -> "ModulationSpec":
        return cls("constant", value, value)

    @classmethod
    def hill_increasing(cls, lo, hi, h, p=2.0) -> "ModulationSpec":
        return cls("hill_increasing", lo, hi, h=h, p=p)

    @classmethod
    def hill_decreasing(cls, lo, hi, h, p=2.0) -> "ModulationSpec":
        return cls("hill_decreasing", lo, hi, h=h, p=p)

    @classmethod
    def gaussian_cdf(cls, center, sigma, lo=0.0, hi=1.0) -> "ModulationSpec":
        return cls("gaussian_cdf", lo, hi, center=center, sigma=sigma)

    # -- evaluation --------------------------------------------------------
    def _hill_fraction(self, y):
        # y^p / (h^p + y^p), written to stay finite for large y
        u = (np.maximum(np.asarray(y, dtype=float), 0.0) / self.h) ** self.p
        return u / (1.0 + u)

    def value(self, y):
        yy = np.asarray(y, dtype=float)
        span = self.hi - self.lo
        if self.kind == "constant":
            out = np.full_like(yy, self.lo)
        elif self.kind == "hill_increasing":
            out = self.lo + span * self._hill_fraction(yy)
        elif self.kind == "hill_decreasing":
            out = self.hi - span * self._hill_fraction(yy)
        else:
            out = self.lo + span * normal_cdf((yy - self.center) / self.sigma)
        return _scalar_out(y, out)

    __call__ = value

    def derivative(self, y):
        yy = np.asarray(y, dtype=float)
        span = self.hi - self.lo
        if self.kind == "constant":
            out = np.zeros_like(yy)
        elif self.kind == "gaussian_cdf":
            z = (yy - self.center) / self.sigma
            out = span * np.exp(-0.5 * z * z) / (self.sigma * _SQRT2PI)
        else:
            u = (np.maximum(yy, 0.0) / self.h) ** self.p
            with np.errstate(divide="ignore", invalid="ignore"):
                d = self.p * u / (np.maximum(yy, 0.0) * (1.0 + u) ** 2)
            if self.p == 1.0:
                d = np.where(yy <= 0.0, 1.0 / self.h, d)
            else:
                d = np.where(yy <= 0.0, 0.0, d)
            out = span * d if self.kind == "hill_increasing" else -span * d
        return _scalar_out(y, out)

    # -- analytic properties on [0, inf) ----------------------------------
    @property
    def is_nondecreasing(self) -> bool:
        return self.kind in ("constant", "hill_increasing", "gaussian_cdf")

    @property
    def is_nonincreasing(self) -> bool:
        return self.kind in ("constant", "hill_decreasing")

    def infimum(self) -> float:
        """Greatest lower bound of the function over ``y >= 0``."""
        if self.kind == "hill_decreasing":
            return self.lo
        return float(self.value(0.0))

    def supremum(self) -> float:
        """Least upper bound of the function over ``y >= 0``."""
        if self.kind == "hill_decreasing":
            return float(self.value(0.0))
        return self.hi

    def sup_abs_derivative(self) -> float:
        """Exact ``sup_{y >= 0} |derivative(y)|``."""
        span = self.hi - self.lo
        if self.kind == "constant" or span == 0.0:
            return 0.0
        if self.kind == "gaussian_cdf":
            return float(self.derivative(max(self.center, 0.0)))
        if self.p == 1.0:
            return span / self.h
        y_peak = self.h * ((self.p - 1.0) / (self.p + 1.0)) ** (1.0 / self.p)
        return float(abs(self.derivative(y_peak)))

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"kind": self.kind, "lo": self.lo, "hi": self.hi}
        for name in ("h", "p", "center", "sigma"):
            v = getattr(self, name)
            if v is not None:
                d[name] = v
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModulationSpec":
        d = dict(d)
        if d.get("kind") == "constant" and "value" in d:
            v = d.pop("value")
            d.setdefault("lo", v)
            d.setdefault("hi", v)
        unknown = set(d) - {"kind", "lo", "hi", "h", "p", "center", "sigma"}
        if unknown:
            raise InvalidParameterError(sorted(unknown)[0], "unknown modulation field")
        try:
            return cls(**d)
        except TypeError as exc:
            raise InvalidParameterError("kind", str(exc)) from None


@dataclass(frozen=True)
class IgoModel:
    """Chain parameters and modulation functions of an IGO(m).

    The container accepts any numbers; :func:`validate_model` reports on them
    and :func:`build_state_space` refuses invalid ones.
    """

    a: tuple[float, ...]
    g: tuple[float, ...]
    phi: ModulationSpec
    f: ModulationSpec

    def __post_init__(self):
        object.__setattr__(self, "a", tuple(float(v) for v in np.atleast_1d(self.a)))
        object.__setattr__(self, "g", tuple(float(v) for v in np.atleast_1d(self.g)) if len(self.g) else ())

    @property
    def m(self) -> int:
        return len(self.a)

    @property
    def gbar(self) -> float:
        """Product of all chain gains (1 for m = 1)."""
        return float(np.prod(self.g)) if self.g else 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"m": self.m, "a": list(self.a), "g": list(self.g),
                "phi": self.phi.to_dict(), "f": self.f.to_dict()}

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "IgoModel":
        for key in ("a", "phi", "f"):
            if key not in d:
                raise InvalidParameterError(key, "missing field")
        model = cls(a=tuple(d["a"]), g=tuple(d.get("g", ())),
                    phi=ModulationSpec.from_dict(d["phi"]), f=ModulationSpec.from_dict(d["f"]))
        if "m" in d and int(d["m"]) != model.m:
            raise InvalidParameterError("m", f"m = {d['m']} but len(a) = {model.m}")
        return model

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text: str) -> "IgoModel":
        return cls.from_dict(json.loads(text))


def load_model(path) -> IgoModel:
    return IgoModel.from_json(Path(path).read_text())


def save_model(model: IgoModel, path) -> None:
    Path(path).write_text(model.to_json(indent=2) + "\n")


# ---------------------------------------------------------------------------
# State space


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Chain matrices: ``A`` lower bidiagonal, ``B = e_1``, ``C = e_m^T``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    a: tuple[float, ...] = field(default=())
    g: tuple[float, ...] = field(default=())

    def __post_init__(self):
        for name in ("A", "B", "C"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def m(self) -> int:
        return self.A.shape[0]

    @property
    def gbar(self) -> float:
        return float(np.prod(self.g)) if self.g else 1.0

    @property
    def scaling(self) -> np.ndarray:
        return chain_scaling(self.g)


def _check_parameters(model: IgoModel) -> list[tuple[str, bool, str]]:
    out = []
    m = model.m
    out.append(("m", m >= 1, "m >= 1"))
    out.append(("g", len(model.g) == max(m - 1, 0), f"len(g) == m - 1 = {max(m - 1, 0)}"))
    for i, v in enumerate(model.a):
        out.append((f"a[{i}]", v > 0 and math.isfinite(v), f"a[{i}] = {v} > 0"))
    for i, v in enumerate(model.g):
        out.append((f"g[{i}]", v > 0 and math.isfinite(v), f"g[{i}] = {v} > 0"))
    return out


def build_state_space(model: IgoModel) -> StateSpace:
    """Chain matrices of ``model``; raises :class:`InvalidParameterError` on bad parameters."""
    for name, ok, detail in _check_parameters(model):
        if not ok:
            raise InvalidParameterError(name, f"violates {detail}")
    m = model.m
    A = np.diag(-np.asarray(model.a))
    if m > 1:
        A[np.arange(1, m), np.arange(m - 1)] = model.g
    B = np.zeros(m)
    B[0] = 1.0
    C = np.zeros(m)
    C[-1] = 1.0
    return StateSpace(A, B, C, model.a, model.g)


# ---------------------------------------------------------------------------
# Validation


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    severity: str  # "error", "warning" or "info"
    detail: str = ""

    def to_dict(self):
        return {"name": self.name, "passed": self.passed, "severity": self.severity, "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks if c.severity == "error")

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if c.severity == "error" and not c.passed]

    @property
    def warnings(self) -> list[Check]:
        return [c for c in self.checks if c.severity == "warning" and not c.passed]

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {"ok": self.ok, "checks": [c.to_dict() for c in self.checks]}


def _modulation_checks(spec: ModulationSpec, label: str, lo_name: str, hi_name: str,
                       ys: np.ndarray) -> list[Check]:
    checks = []
    if spec.lo > 0:
        checks.append(Check(f"{lo_name} > 0", True, "error", f"{lo_name} = {spec.lo}"))
    elif spec.kind == "gaussian_cdf" and spec.lo == 0 and spec.hi > 0:
        checks.append(Check(
            f"{lo_name} > 0", False, "warning",
            f"{label} = {label}_lo + span * NormalCDF is positive but its infimum on [0, inf) is "
            f"{spec.infimum():.3e}; the lower bound only holds on compact output ranges"))
    else:
        checks.append(Check(f"{lo_name} > 0", False, "error", f"{lo_name} = {spec.lo} is not positive"))
    checks.append(Check(f"{lo_name} <= {hi_name}", spec.lo <= spec.hi, "error",
                        f"{lo_name} = {spec.lo}, {hi_name} = {spec.hi}"))
    vals = spec.value(ys)
    inside = bool(np.all((vals >= spec.lo) & (vals <= spec.hi)))
    analytic = spec.lo <= spec.infimum() and spec.supremum() <= spec.hi
    checks.append(Check(f"{label} within bounds", inside and analytic, "error",
                        f"sampled range [{vals.min():.6g}, {vals.max():.6g}] on {ys.size} points"))
    return checks


def validate_model(model: IgoModel, y_max: float | None = None, grid_points: int = 10_001) -> ValidationReport:
    """Check every model hypothesis and report each one; never raises.

    Bounds of ``Phi`` and ``F`` are checked analytically per kind and, as a
    safety net, on a grid of ``grid_points`` outputs over ``[0, y_max]``.
    Monotonicity flags (needed only for uniqueness) are ``info`` entries.
    """
    checks = [Check(name, ok, "error", detail) for name, ok, detail in _check_parameters(model)]
    if y_max is None:
        scales = [model.phi.hi, model.f.hi]
        for spec in (model.phi, model.f):
            if spec.h is not None:
                scales.append(spec.h)
            if spec.center is not None:
                scales.append(abs(spec.center) + 10 * spec.sigma)
        y_max = 10.0 * max(scales + [1.0])
    ys = np.linspace(0.0, y_max, grid_points)
    checks += _modulation_checks(model.phi, "Phi", "Phi1", "Phi2", ys)
    checks += _modulation_checks(model.f, "F", "F1", "F2", ys)
    checks.append(Check("Phi non-decreasing", model.phi.is_nondecreasing, "info"))
    checks.append(Check("F non-increasing", model.f.is_nonincreasing, "info"))
    return ValidationReport(tuple(checks))


def check_reachability(space, b, c) -> bool:
    """Whether ``c^T Theta(xi) b`` is positive, from the graph of a Metzler matrix.

    True iff some ``i`` with ``c_i > 0`` and ``j`` with ``b_j > 0`` satisfy
    ``i == j`` or have a directed walk ``i -> j``, where arc ``(i, j)`` exists
    iff ``A[i, j] > 0``. Breadth-first search.
    """
    A = np.asarray(getattr(space, "A", space), dtype=float)
    b = np.asarray(b, dtype=float).ravel()
    c = np.asarray(c, dtype=float).ravel()
    n = A.shape[0]
    if A.shape != (n, n) or b.size != n or c.size != n:
        raise ValueError("dimension mismatch between A, b and c")
    targets = set(np.nonzero(b > 0)[0].tolist())
    if not targets:
        return False
    for start in np.nonzero(c > 0)[0]:
        seen = {int(start)}
        queue = deque([int(start)])
        while queue:
            i = queue.popleft()
            if i in targets:
                return True
            for j in np.nonzero(A[i] > 0)[0]:
                j = int(j)
                if j != i and j not in seen:
                    seen.add(j)
                    queue.append(j)
    return False
