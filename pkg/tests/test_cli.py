import csv
import io
import json
import math

import numpy as np
import pytest

from igo.cli import main, set_parameter
from igo.model import IgoModel, InvalidParameterError, ModulationSpec, save_model

from models import REF_RECIPE, constant_model


@pytest.fixture
def ref_file(tmp_path, ref_model):
    path = tmp_path / "ref.json"
    save_model(ref_model, path)
    return str(path)


@pytest.fixture
def m3_file(tmp_path):
    model = IgoModel((1.0, 2.0, 0.5), (1.5, 0.8), ModulationSpec.hill_increasing(0.5, 2.0, h=1.0, p=2.0),
                     ModulationSpec.hill_decreasing(0.5, 2.0, h=1.0, p=2.0))
    path = tmp_path / "m3.json"
    save_model(model, path)
    return str(path)


@pytest.fixture
def scalar_file(tmp_path):
    path = tmp_path / "m1.json"
    save_model(constant_model(), path)
    return str(path)


def read_csv(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_validate_exit_codes(tmp_path, m3_file, capsys):
    assert main(["validate", m3_file]) == 0
    assert json.loads(capsys.readouterr().out)["ok"] is True

    bad = constant_model(a=(1.0, 2.0), g=(1.0,)).to_dict()
    bad["a"][0] = -1.0
    (tmp_path / "neg.json").write_text(json.dumps(bad))
    assert main(["validate", str(tmp_path / "neg.json")]) == 1
    assert "a[0]" in capsys.readouterr().out

    (tmp_path / "broken.json").write_text("{not json")
    assert main(["validate", str(tmp_path / "broken.json")]) == 2
    assert main(["validate", str(tmp_path / "missing.json")]) == 2


def test_cycles_reference_window(ref_file, capsys):
    assert main(["cycles", ref_file, "--window", "1.999:2.001", "--points", "40001"]) == 0
    reports = json.loads(capsys.readouterr().out)
    assert len(reports) == 3
    assert [r["stable"] for r in reports] == [False] * 3


def test_cycles_monotone_and_scalar(m3_file, scalar_file, tmp_path, capsys):
    assert main(["cycles", m3_file]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 1
    out = tmp_path / "c.json"
    assert main(["cycles", scalar_file, "--out", str(out)]) == 0
    (rep,) = json.loads(out.read_text())
    assert rep["y_star"] == pytest.approx(0.58198, abs=1e-5)


def test_simulate_from_cycle(m3_file, tmp_path):
    out = tmp_path / "t.csv"
    assert main(["simulate", m3_file, "--from-cycle", "0", "--jumps", "10", "--out", str(out)]) == 0
    rows = [r for r in read_csv(out.read_text()) if r["event"] == "pre_jump"]
    assert len(rows) == 11
    x = np.array([[float(r[f"x{i}"]) for i in (1, 2, 3)] for r in rows])
    np.testing.assert_allclose(x, np.broadcast_to(x[0], x.shape), rtol=1e-7)


def test_simulate_scalar_closed_form(scalar_file, capsys):
    assert main(["simulate", scalar_file, "--x0", "0", "--jumps", "5"]) == 0
    rows = [r for r in read_csv(capsys.readouterr().out) if r["event"] == "pre_jump"]
    for n, r in enumerate(rows):
        assert float(r["x1"]) == pytest.approx(-math.expm1(-n) / (math.e - 1), rel=1e-14, abs=1e-300)
        assert float(r["t"]) == n


def test_simulate_coarse_dense_grid(scalar_file, capsys):
    assert main(["simulate", scalar_file, "--x0", "0.2", "--jumps", "3", "--dense-dt", "5"]) == 0
    events = {r["event"] for r in read_csv(capsys.readouterr().out)}
    assert events == {"pre_jump", "post_jump"}


def test_simulate_dimension_mismatch(m3_file, capsys):
    assert main(["simulate", m3_file, "--x0", "1,2", "--jumps", "3"]) == 1
    assert "x0" in capsys.readouterr().err


def test_sweep_monotone_is_constant(m3_file, capsys):
    assert main(["sweep", m3_file, "--param", "a[0]", "--range", "0.5:3", "--steps", "6"]) == 0
    rows = read_csv(capsys.readouterr().out)
    assert [int(r["n_cycles"]) for r in rows] == [1] * 6
    values = [float(r["value"]) for r in rows]
    assert values == sorted(values) and values[0] == 0.5 and values[-1] == 3.0


def test_sweep_two_steps(m3_file, capsys):
    assert main(["sweep", m3_file, "--param", "phi.hi", "--range", "1:3", "--steps", "2"]) == 0
    assert len(read_csv(capsys.readouterr().out)) == 2


def test_sweep_width_loses_flanking_cycles(ref_file, capsys):
    args = ["sweep", ref_file, "--param", "phi.variance", "--range", "1e-4:1e-2", "--steps", "5", "--log",
            "--window", "1.9:2.1", "--points", "20001"]
    assert main(args) == 0
    counts = [int(r["n_cycles"]) for r in read_csv(capsys.readouterr().out)]
    assert counts[0] == 3 and counts[-1] == 1
    assert counts == sorted(counts, reverse=True)


def test_sweep_unresolvable_path(m3_file, capsys):
    assert main(["sweep", m3_file, "--param", "b[0]", "--range", "1:2", "--steps", "2"]) == 1
    assert main(["sweep", m3_file, "--param", "a[7]", "--range", "1:2", "--steps", "2"]) == 1


def test_set_parameter_paths():
    model = constant_model(a=(1.0, 2.0), g=(1.0,))
    assert set_parameter(model, "a[1]", 5.0).a == (1.0, 5.0)
    assert set_parameter(model, "f.hi", 3.0).f == ModulationSpec.constant(3.0)
    with pytest.raises(InvalidParameterError):
        set_parameter(model, "phi.sigma", 1.0)
    gauss = IgoModel((1.0,), (), ModulationSpec.gaussian_cdf(2.0, 0.1, lo=0.0, hi=1.0), ModulationSpec.constant(1.0))
    assert set_parameter(gauss, "phi.variance", 0.04).phi.sigma == pytest.approx(0.2)


def test_construct_reference(tmp_path):
    out = tmp_path / "ms.json"
    args = ["construct", "--m", "11", "--v0", "8.64", "--ystar", "2", "--variance", "2e-4", "--out", str(out)]
    assert main(args) == 0
    model = json.loads(out.read_text())
    assert model["a"] == [17.28] * 11
    assert model["g"] == pytest.approx([22.6486] * 10, abs=1e-4)
    side = json.loads((tmp_path / "ms.diagnostics.json").read_text())
    assert side["P1"] == pytest.approx(1.1257, abs=1e-3) and side["P2"] == 0.0


def test_construct_sigma_matches_recipe(capsys):
    assert main(["construct", "--m", "11", "--v0", "8.64", "--ystar", "2", "--sigma", repr(REF_RECIPE.sigma)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["diagnostics"]["slope"] == pytest.approx(-0.1257, abs=1e-3)


def test_construct_rejects_positive_psi(capsys):
    assert main(["construct", "--m", "11", "--v0", "2", "--ystar", "2", "--sigma", "0.01"]) == 1
    assert "Psi_10(2) >= 0" in capsys.readouterr().err


def test_construct_order_twelve_then_cycles(tmp_path, capsys):
    out = tmp_path / "m12.json"
    assert main(["construct", "--m", "12", "--find-v0", "--ystar", "2", "--variance", "2e-4", "--out", str(out)]) == 0
    lo, hi = json.loads((tmp_path / "m12.diagnostics.json").read_text())["suggested_window"]
    assert main(["cycles", str(out), "--window", f"{lo!r}:{hi!r}"]) == 0
    assert len(json.loads(capsys.readouterr().out)) == 3


def test_construct_needs_width(capsys):
    assert main(["construct", "--m", "11", "--v0", "8.64", "--ystar", "2"]) == 2


def test_verify_cm_reports_each_constant(capsys):
    code = main(["verify", "--suite", "cm"])
    out = capsys.readouterr().out
    for m in (11, 12, 13):
        assert f"C_{m}" in out
    assert "zeta(11)" in out
    assert code == (0 if "FAIL" not in out else 1)


def test_verify_psi_passes(capsys):
    assert main(["verify", "--suite", "psi"]) == 0
    assert "FAIL" not in capsys.readouterr().out


def test_verify_table1_lists_rows(capsys):
    main(["verify", "--suite", "table1"])
    out = capsys.readouterr().out
    for name in ("p_5", "p_6", "p_7", "p_8", "q_9"):
        assert name in out


@pytest.mark.parametrize("argv, expected", [
    (["specfun", "psi", "-k", "10", "-x", "8.64"], -2.0874960804219222058e-6),
    (["specfun", "cm", "-m", "12"], 172039780.02894356006),
    (["specfun", "zeta", "-s", "2"], math.pi**2 / 6),
    (["specfun", "polylog", "-k", "1", "-x", "0.3"], 0.61224489795918367347),
])
def test_specfun_prints_one_number(argv, expected, capsys):
    assert main(argv) == 0
    out = capsys.readouterr().out.strip()
    assert "\n" not in out
    assert float(out) == pytest.approx(expected, rel=1e-10)


def test_specfun_missing_argument():
    assert main(["specfun", "psi", "-x", "1.0"]) == 2


def test_unknown_command():
    assert main(["frobnicate"]) == 2


def test_thread_cap_keeps_sweep_order(m3_file, monkeypatch, capsys):
    outputs = []
    for n in ("1", "4"):
        monkeypatch.setenv("IGO_THREADS", n)
        assert main(["sweep", m3_file, "--param", "g[1]", "--range", "0.5:2", "--steps", "5"]) == 0
        outputs.append(capsys.readouterr().out)
    assert outputs[0] == outputs[1]
