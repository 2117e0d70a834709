"""Command-line interface: ``igo validate|cycles|simulate|sweep|construct|verify|specfun``.

Exit codes: 0 success, 1 domain error, 2 I/O or parse error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .cycles import find_all_cycles
from .model import IgoModel, InvalidParameterError, ModulationSpec, build_state_space, save_model, validate_model
from .multistability import (ConstructionError, MultistableRecipe, construct_multistable, diagnostics_sidecar,
                             find_v0, write_sidecar)
from .simulator import simulate
from .specfun import c_constant, phi_derivative, polylog_neg, psi_capital, psi_derivative, zeta_int
from .verify import SUITES, run_suite

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2


class InputError(Exception):
    """Unreadable or unparsable input (exit code 2)."""


def threads() -> int:
    env = os.environ.get("IGO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InputError(f"IGO_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


def ordered_map(fn, items):
    """``map`` over a thread pool capped by ``IGO_THREADS``; output order is input order."""
    items = list(items)
    n = min(threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# Parsing helpers


def load_model_file(path) -> IgoModel:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc})") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}: expected a JSON object")
    try:
        return IgoModel.from_dict(data)
    except (TypeError, KeyError, AttributeError) as exc:
        raise InputError(f"{path}: bad model schema ({exc})") from None


def parse_range(text: str) -> tuple[float, float]:
    try:
        lo, hi = (float(v) for v in text.split(":"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected lo:hi, got {text!r}") from None
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"need lo < hi, got {text!r}")
    return lo, hi


def parse_vector(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def parse_f_spec(text: str) -> ModulationSpec:
    """A modulation from inline JSON, a JSON file, or a bare number (constant)."""
    try:
        return ModulationSpec.constant(float(text))
    except ValueError:
        pass
    path = Path(text)
    if path.exists():
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        raise InputError(f"--f-spec: not a number, JSON object or JSON file: {text!r}") from None
    return ModulationSpec.from_dict(data)


_PATH_RE = re.compile(r"^(a|g)\[(\d+)\]$|^(phi|f)\.(lo|hi|h|p|center|sigma|variance)$")


def set_parameter(model: IgoModel, path: str, value: float) -> IgoModel:
    """Copy of ``model`` with the parameter at ``path`` (``a[0]``, ``phi.sigma``, ...) replaced.

    Setting ``lo`` or ``hi`` of a constant modulation moves both;
    ``<phi|f>.variance`` sets ``sigma`` to the square root of the value.
    """
    m = _PATH_RE.match(path)
    if not m:
        raise InvalidParameterError(path, "unresolvable parameter path")
    d = model.to_dict()
    if m.group(1):
        vec, idx = d[m.group(1)], int(m.group(2))
        if idx >= len(vec):
            raise InvalidParameterError(path, f"index out of range (length {len(vec)})")
        vec[idx] = value
    else:
        spec, key = d[m.group(3)], m.group(4)
        if key == "variance":
            key, value = "sigma", math.sqrt(value) if value >= 0 else math.nan
        if spec["kind"] == "constant" and key in ("lo", "hi"):
            spec["lo"] = spec["hi"] = value
        elif key not in spec:
            raise InvalidParameterError(path, f"{spec['kind']} modulation has no field {key!r}")
        else:
            spec[key] = value
    return IgoModel.from_dict(d)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


# ---------------------------------------------------------------------------
# Commands


def cmd_validate(args) -> int:
    model = load_model_file(args.model)
    report = validate_model(model, y_max=args.y_max)
    print(json.dumps(report.to_dict(), indent=2))
    return EXIT_OK if report.ok else EXIT_DOMAIN


def cmd_cycles(args) -> int:
    model = load_model_file(args.model)
    reports = find_all_cycles(model, args.window, args.points, args.tol)
    _emit(json.dumps([r.to_dict() for r in reports], indent=2), args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = load_model_file(args.model)
    if args.from_cycle is not None:
        reports = find_all_cycles(model, args.window, args.points)
        if not 0 <= args.from_cycle < len(reports):
            raise InvalidParameterError("from-cycle", f"only {len(reports)} cycle(s) found")
        x0 = list(reports[args.from_cycle].fixed_point)
    else:
        x0 = args.x0
    if len(x0) != model.m:
        raise InvalidParameterError("x0", f"expected {model.m} components, got {len(x0)}")
    traj = simulate(model, x0, args.jumps, args.dense_dt)
    C = build_state_space(model).C
    if args.out:
        traj.to_csv(args.out, C)
    else:
        traj.to_csv(sys.stdout, C)
    return EXIT_OK


def _sweep_row(job):
    model, path, value, window, points = job
    try:
        reports = find_all_cycles(set_parameter(model, path, value), window, points)
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return value, None, str(exc)
    return value, reports, ""


def cmd_sweep(args) -> int:
    model = load_model_file(args.model)
    if args.steps < 2:
        raise InvalidParameterError("steps", "need at least 2 steps")
    lo, hi = args.range
    values = np.geomspace(lo, hi, args.steps) if args.log else np.linspace(lo, hi, args.steps)
    set_parameter(model, args.param, float(values[0]))  # resolve the path before fanning out
    jobs = [(model, args.param, float(v), args.window, args.points) for v in values]
    rows = sorted(ordered_map(_sweep_row, jobs), key=lambda r: r[0])

    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["value", "n_cycles", "y_star", "period", "spectral_radius", "error"])
        for value, reports, err in rows:
            if reports is None:
                w.writerow([f"{value:.17g}", "", "", "", "", err])
                continue
            cols = [";".join(f"{getattr(r, k):.17g}" for r in reports) for k in ("y_star", "period", "spectral_radius")]
            w.writerow([f"{value:.17g}", len(reports)] + cols + [""])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def cmd_construct(args) -> int:
    if args.sigma is None and args.variance is None:
        raise InputError("one of --sigma or --variance is required")
    sigma = args.sigma if args.sigma is not None else math.sqrt(args.variance)
    if args.find_v0:
        v0 = find_v0(args.m)
    elif args.v0 is not None:
        v0 = args.v0
    else:
        raise InputError("one of --v0 or --find-v0 is required")
    f_spec = parse_f_spec(args.f_spec)
    recipe = MultistableRecipe(args.m, v0, args.ystar, sigma, f_spec)
    model = construct_multistable(recipe)
    sidecar = diagnostics_sidecar(recipe, model)
    if args.out:
        save_model(model, args.out)
        write_sidecar(f"{Path(args.out).with_suffix('')}.diagnostics.json", sidecar)
    else:
        print(json.dumps({"model": model.to_dict(), "diagnostics": sidecar}, indent=2))
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = ordered_map(run_suite, names)
    ok = True
    for name, checks in zip(names, results):
        print(f"[{name}]")
        for c in checks:
            print("  " + c.line())
            ok &= c.passed
    return EXIT_OK if ok else EXIT_DOMAIN


def cmd_specfun(args) -> int:
    fn = args.function
    if fn in ("psi", "psi_derivative", "phi_derivative", "polylog") and args.k is None:
        raise InputError(f"{fn} needs -k")
    if fn in ("psi", "psi_derivative", "phi_derivative", "polylog") and args.x is None:
        raise InputError(f"{fn} needs -x")
    if fn == "psi":
        v = psi_capital(args.k, args.x)
    elif fn == "psi_derivative":
        v = psi_derivative(args.k, args.x)
    elif fn == "phi_derivative":
        v = phi_derivative(args.k, args.x)
    elif fn == "polylog":
        v = polylog_neg(args.k, args.x)
    elif fn == "zeta":
        v = zeta_int(args.s)
    else:
        v = c_constant(args.m)
    print(repr(float(v)))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="igo", description="Impulsive Goodwin oscillator toolkit.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("validate", help="check model hypotheses")
    s.add_argument("model")
    s.add_argument("--y-max", type=float, default=None, help="upper end of the sampling grid")
    s.set_defaults(func=cmd_validate)

    def scan_opts(sp):
        sp.add_argument("--window", type=parse_range, default=None, help="scan window lo:hi")
        sp.add_argument("--points", type=int, default=10_001, help="scan grid size")

    s = sub.add_parser("cycles", help="find all 1-cycles")
    s.add_argument("model")
    scan_opts(s)
    s.add_argument("--tol", type=float, default=1e-12)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_cycles)

    s = sub.add_parser("simulate", help="simulate and write a CSV trajectory")
    s.add_argument("model")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--x0", type=parse_vector)
    src.add_argument("--from-cycle", type=int, help="start at the fixed point of cycle k (sorted by y*)")
    scan_opts(s)
    s.add_argument("--jumps", type=int, default=100)
    s.add_argument("--dense-dt", type=float, default=None)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("sweep", help="count cycles along a parameter range")
    s.add_argument("model")
    s.add_argument("--param", required=True, help='parameter path, e.g. "a[0]" or "phi.sigma"')
    s.add_argument("--range", type=parse_range, required=True, help="lo:hi")
    s.add_argument("--steps", type=int, default=11)
    s.add_argument("--log", action="store_true", help="geometric spacing")
    scan_opts(s)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("construct", help="build a multistable model")
    s.add_argument("--m", type=int, required=True)
    s.add_argument("--v0", type=float)
    s.add_argument("--find-v0", action="store_true", help="use the minimiser of Psi_{m-1} on (0, m+5]")
    s.add_argument("--ystar", type=float, required=True)
    width = s.add_mutually_exclusive_group()
    width.add_argument("--sigma", type=float, help="standard deviation of the Gaussian CDF")
    width.add_argument("--variance", type=float, help="variance of the Gaussian CDF")
    s.add_argument("--f-spec", default="1", help="number, JSON object or JSON file")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("verify", help="run a self-check suite")
    s.add_argument("--suite", choices=list(SUITES) + ["all"], default="all")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("specfun", help="evaluate a special function")
    s.add_argument("function", choices=["psi", "psi_derivative", "phi_derivative", "polylog", "zeta", "cm"])
    s.add_argument("-k", type=int)
    s.add_argument("-x", type=float)
    s.add_argument("-s", type=int, default=11, help="zeta argument")
    s.add_argument("-m", type=int, default=11, help="C_m order")
    s.set_defaults(func=cmd_specfun)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConstructionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except InvalidParameterError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, ArithmeticError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
