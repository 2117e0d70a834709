import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from igo.cycles import equation_of_periods, find_all_cycles, r_of_xi
from igo.model import InvalidParameterError, ModulationSpec, build_state_space, validate_model
from igo.multistability import (ConstructionError, MultistableRecipe, construct_multistable, diagnostics_sidecar,
                                find_v0, multistability_diagnostics, required_gbar, suggested_window,
                                write_sidecar)
from igo.specfun import psi_capital

from models import REF_RECIPE, SIGMA_REF


def test_reference_parameters(ref_model):
    assert ref_model.a == (17.28,) * 11
    assert ref_model.g == pytest.approx((22.6486,) * 10, abs=1e-4)
    assert ref_model.gbar == pytest.approx(3.5515e13, rel=1e-4)
    assert ref_model.phi.kind == "gaussian_cdf" and ref_model.phi.value(2.0) == 0.5


def test_gain_product_is_independent_of_width():
    assert required_gbar(REF_RECIPE) == required_gbar(MultistableRecipe(11, 8.64, 2.0, 1e-3))


def test_recipe_rejects_positive_psi():
    with pytest.raises(ConstructionError, match="Psi_10"):
        MultistableRecipe(11, 2.0, 2.0, SIGMA_REF)


@pytest.mark.parametrize("kwargs", [dict(m=1), dict(sigma=0.0), dict(y_star=-1.0),
                                    dict(f_spec=ModulationSpec.hill_increasing(0.5, 1.0, h=1.0))])
def test_recipe_field_checks(kwargs):
    base = dict(m=11, v0=8.64, y_star=2.0, sigma=SIGMA_REF)
    with pytest.raises(InvalidParameterError):
        MultistableRecipe(**{**base, **kwargs})


def test_reference_diagnostics(ref_model):
    d = multistability_diagnostics(ref_model, 2.0)
    assert d.P1 == pytest.approx(1.1256557638921947, rel=1e-9)
    assert d.P2 == 0.0
    assert d.slope == pytest.approx(1 - d.P1, rel=1e-15)


def test_diagnostics_need_a_root(ref_model):
    with pytest.raises(ValueError):
        multistability_diagnostics(ref_model, 1.5)


@pytest.mark.parametrize("sigma", [SIGMA_REF, 1e-3, 0.05])
def test_halving_width_doubles_p1(sigma):
    p = [multistability_diagnostics(construct_multistable(MultistableRecipe(11, 8.64, 2.0, s)), 2.0).P1
         for s in (sigma, sigma / 2)]
    assert p[1] == pytest.approx(2 * p[0], rel=1e-6)


def test_decreasing_amplitude_modulation_enters_second_term():
    f = ModulationSpec.hill_decreasing(0.5, 2.0, h=2.0, p=2.0)
    model = construct_multistable(MultistableRecipe(11, 8.64, 2.0, SIGMA_REF, f))
    d = multistability_diagnostics(model, 2.0)
    r = r_of_xi(build_state_space(model), 0.5)
    assert d.P2 == pytest.approx(r * f.derivative(2.0), rel=1e-12)
    assert d.P2 < 0


@settings(max_examples=20)
@given(st.sampled_from([11, 12]), st.floats(0.0, 1.0), st.floats(1e-5, 1e-1), st.floats(0.5, 5.0))
def test_designed_root_residual(m, frac, sigma, y_star):
    xs = np.linspace(6.0, m + 5.0, 400)
    neg = xs[psi_capital(m - 1, xs) < 0]
    v0 = float(neg[0] + frac * (neg[-1] - neg[0]))
    if not psi_capital(m - 1, v0) < 0:
        return
    model = construct_multistable(MultistableRecipe(m, v0, y_star, sigma))
    assert abs(equation_of_periods(model, y_star) - y_star) <= 1e-9 * y_star


def test_reference_model_validates_with_warning(ref_model):
    report = validate_model(ref_model)
    assert report.ok and [c.name for c in report.warnings] == ["Phi1 > 0"]


def test_order_twelve_with_automatic_v0():
    v0 = find_v0(12)
    assert psi_capital(11, v0) == pytest.approx(-2.43334e-5, rel=1e-5)
    recipe = MultistableRecipe(12, v0, 2.0, SIGMA_REF)
    model = construct_multistable(recipe)
    d = multistability_diagnostics(model, 2.0)
    assert d.slope < 0
    cycles = find_all_cycles(model, suggested_window(recipe, d))
    assert len(cycles) == 3
    assert cycles[0].y_star < 2.0 < cycles[2].y_star
    assert cycles[1].y_star == pytest.approx(2.0, abs=1e-10)
    assert all(min(c.fixed_point) > 0 for c in cycles)


def test_gain_override(ref_model):
    gbar = ref_model.gbar
    gains = [2.0] * 9 + [gbar / 2.0**9]
    model = construct_multistable(REF_RECIPE, gains)
    assert equation_of_periods(model, 2.0) == pytest.approx(2.0, rel=1e-10)
    with pytest.raises(InvalidParameterError):
        construct_multistable(REF_RECIPE, [2.0] * 10)
    with pytest.raises(InvalidParameterError):
        construct_multistable(REF_RECIPE, [2.0] * 3)


def test_sidecar(ref_model, tmp_path):
    side = diagnostics_sidecar(REF_RECIPE, ref_model)
    assert {"P1", "P2", "slope", "v0", "psi_value"} <= set(side)
    assert side["psi_value"] == pytest.approx(-2.087496080421542e-6, rel=1e-10)
    lo, hi = side["suggested_window"]
    assert lo < 1.9998 and hi > 2.0003
    write_sidecar(tmp_path / "d.json", side)
    assert json.loads((tmp_path / "d.json").read_text()) == side
    assert math.isfinite(side["gbar"])
