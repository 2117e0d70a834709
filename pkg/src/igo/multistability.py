"""Models with several coexisting 1-cycles.

For ``m >= 11`` the function ``Psi_{m-1}`` takes negative values. Picking
``v0`` with ``Psi_{m-1}(v0) < 0``, equal rates ``a_i = 2 v0`` and a steep
Gaussian-CDF frequency modulation centred at ``y*`` makes ``y*`` a root of the
equation of periods at which ``y - R(y)`` decreases, so two more roots
appear on either side.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from .cycles import equation_of_periods, r_derivative, r_of_xi
from .model import IgoModel, InvalidParameterError, ModulationSpec, build_state_space
from .specfun import phi_derivative, psi_capital, psi_minimizer


class ConstructionError(ValueError):
    """The hypotheses of the multistable construction fail."""


@dataclass(frozen=True)
class MultistableRecipe:
    """Inputs of the construction.

    Parameters
    ----------
    m : int
        Chain order.
    v0 : float
        Point with ``Psi_{m-1}(v0) < 0``.
    y_star : float
        Designed middle root.
    sigma : float
        Standard deviation of the Gaussian CDF used as ``Phi``.
    f_spec : ModulationSpec
        Non-increasing amplitude modulation.
    """

    m: int
    v0: float
    y_star: float
    sigma: float
    f_spec: ModulationSpec = field(default_factory=lambda: ModulationSpec.constant(1.0))

    def __post_init__(self):
        if self.m < 2:
            raise InvalidParameterError("m", "m must be at least 2")
        for name in ("v0", "y_star", "sigma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameterError(name, f"{name} must be positive and finite")
        if not self.f_spec.is_nonincreasing:
            raise InvalidParameterError("f_spec", "F must be non-increasing")
        if not self.f_spec.infimum() > 0:
            raise InvalidParameterError("f_spec", "F must be bounded away from zero")
        psi = self.psi_value
        if not psi < 0:
            raise ConstructionError(f"Psi_{self.m - 1}({self.v0:g}) >= 0 (value {psi:.6g})")

    @property
    def psi_value(self) -> float:
        return float(psi_capital(self.m - 1, self.v0))


def required_gbar(recipe: MultistableRecipe) -> float:
    """Gain product that puts ``y*`` on the equation of periods.

    ``gbar = (-1)^(m-1) 2^(m-1) (m-1)! y* / (phi^(m-1)(v0) F(y*))``.
    """
    m = recipe.m
    d = float(phi_derivative(m - 1, recipe.v0))
    gbar = (-1) ** (m - 1) * 2.0 ** (m - 1) * math.factorial(m - 1) * recipe.y_star / (d * float(recipe.f_spec.value(recipe.y_star)))
    if not (gbar > 0 and math.isfinite(gbar)):
        raise ConstructionError(f"gain product {gbar!r} is not positive and finite")
    return gbar


def construct_multistable(recipe: MultistableRecipe, gains=None) -> IgoModel:
    """Build the model; ``gains`` optionally overrides the equal split of ``gbar``.

    Overriding gains must multiply to the required ``gbar`` (1e-12 relative).
    """
    m = recipe.m
    gbar = required_gbar(recipe)
    if gains is None:
        g = (gbar ** (1.0 / (m - 1)),) * (m - 1)
    else:
        g = tuple(float(v) for v in gains)
        if len(g) != m - 1:
            raise InvalidParameterError("g", f"expected {m - 1} gains")
        if not math.isclose(math.prod(g), gbar, rel_tol=1e-12):
            raise InvalidParameterError("g", f"gains multiply to {math.prod(g):.6g}, need {gbar:.6g}")
    return IgoModel(
        a=(2.0 * recipe.v0,) * m,
        g=g,
        phi=ModulationSpec.gaussian_cdf(recipe.y_star, recipe.sigma, lo=0.0, hi=1.0),
        f=recipe.f_spec,
    )


@dataclass(frozen=True)
class Diagnostics:
    P1: float
    P2: float
    slope: float

    def to_dict(self) -> dict:
        return {"P1": self.P1, "P2": self.P2, "slope": self.slope}


def multistability_diagnostics(model: IgoModel, y_star: float) -> Diagnostics:
    """Slope ``1 - P1 - P2`` of ``y - R(y)`` at a root ``y*``.

    ``P1 = r'(Phi(y*)) Phi'(y*) F(y*)`` and ``P2 = r(Phi(y*)) F'(y*)``. A
    negative slope means two further roots flank ``y*``.
    """
    space = build_state_space(model)
    res = abs(y_star - equation_of_periods(model, y_star, space))
    if not res <= 1e-8 * max(1.0, abs(y_star)):
        raise ValueError(f"y = {y_star!r} is not a root of the equation of periods (residual {res:.3e})")
    xi = float(model.phi.value(y_star))
    P1 = r_derivative(space, xi) * float(model.phi.derivative(y_star)) * float(model.f.value(y_star))
    fd = float(model.f.derivative(y_star))
    P2 = r_of_xi(space, xi) * fd if fd != 0.0 else 0.0
    return Diagnostics(P1, P2, 1.0 - P1 - P2)


def suggested_window(recipe: MultistableRecipe, diagnostics: Diagnostics) -> tuple[float, float]:
    """Heuristic scan window ``y* -/+ 10 sigma P1`` for the flanking roots."""
    half = 10.0 * recipe.sigma * max(abs(diagnostics.P1), 1.0)
    return max(recipe.y_star - half, 0.0), recipe.y_star + half


def find_v0(m: int) -> float:
    """Minimiser of ``Psi_{m-1}`` on ``(0, m + 5]``."""
    x, _ = psi_minimizer(m - 1, upper=m + 5.0)
    return float(x)


def diagnostics_sidecar(recipe: MultistableRecipe, model: IgoModel) -> dict:
    diag = multistability_diagnostics(model, recipe.y_star)
    out = diag.to_dict()
    out.update(v0=recipe.v0, psi_value=recipe.psi_value, gbar=model.gbar,
               suggested_window=list(suggested_window(recipe, diag)))
    return out


def write_sidecar(path, sidecar: dict) -> None:
    with open(path, "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
