"""Command-line front end.

Problem files are INI-style with quoted expression strings::

    [system]
    a11 = "-1 - cos(t)^2"
    a12 = "-cos(t)^2"
    alpha = -2            # structured form: alpha and beta ...
    beta = -2
    # a21 = "..."         # ... or general form: a21 and a22
    # a22 = "..."
    t0 = 0
    a11_primitive = "..." # optional closed-form primitives
    a11_limit = bounded   # optional: bounded, +inf, -inf, 0, unknown

    [floquet]
    period = "pi"

    [solve]
    x0 = "0, 1"
    t_end = 5
    samples = 101

    [tolerances]
    rel = 1e-10
    fit = 1e-8

Exit codes: 0 success, 1 usage/parse error, 2 model rejected,
3 numerical failure or failed verification.
"""
from __future__ import annotations

import argparse
import configparser
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .expr import DomainError, ExprError, Expression
from .floquet import (FloquetConsistencyError, exponents_from_monodromy,
                      floquet_from_averages, match_distance, monodromy_numeric,
                      periodic_part, stability_verdict, trace_identities)
from .fundamental import FundamentalMatrix, classify_asymptotics
from .numerics import (NumericalOverflowError, QuadratureError, StepUnderflowError,
                       expm2, rk45)
from .reduction import (ZeroCrossing, format_equation, second_order_from_structured,
                        system_from_second_order)
from .sysmodel import (CoefficientFunction, DegenerateA12, GeneralSystem, Limit,
                       NotCommutingClass, StructuredSystem, chebyshev_grid, fit_structure)

EXIT_OK, EXIT_USAGE, EXIT_REJECTED, EXIT_NUMERIC = 0, 1, 2, 3


class ProblemError(ValueError):
    pass


@dataclass
class ProblemSpec:
    entries: dict[str, str]
    alpha: float | None = None
    beta: float | None = None
    t0: float = 0.0
    primitives: dict[str, str] = field(default_factory=dict)
    limits: dict[str, Limit] = field(default_factory=dict)
    period: float | None = None
    x0: tuple[float, float] | None = None
    t_end: float | None = None
    samples: int = 101
    rel_tol: float = 1e-10
    abs_tol: float | None = None
    fit_tol: float = 1e-8

    @property
    def structured(self) -> bool:
        return self.alpha is not None

    @property
    def window(self) -> tuple[float, float]:
        if self.t_end is not None:
            return self.t0, self.t_end
        if self.period is not None:
            return self.t0, self.t0 + self.period
        return self.t0, self.t0 + 2 * math.pi

    @property
    def atol(self) -> float:
        return self.abs_tol if self.abs_tol is not None else self.rel_tol * 1e-2


def _unquote(v: str) -> str:
    v = v.strip()
    if len(v) >= 2 and v[0] == v[-1] and v[0] in "\"'":
        return v[1:-1]
    return v


def _number(v: str, key: str) -> float:
    e = Expression.parse(_unquote(v))
    if not e.is_constant:
        raise ProblemError(f"{key} must not depend on t")
    return e(0.0)


def parse_problem(text: str) -> ProblemSpec:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ProblemError(f"malformed problem file: {exc}") from None
    if "system" not in cp:
        raise ProblemError("missing [system] section")
    sysec = cp["system"]
    keys = set(sysec)
    structured = {"alpha", "beta"} <= keys
    general = {"a21", "a22"} <= keys
    if structured == general:
        raise ProblemError("give exactly one of {alpha, beta} or {a21, a22} in [system]")
    names = ("a11", "a12") if structured else ("a11", "a12", "a21", "a22")
    missing = [n for n in names if n not in keys]
    if missing:
        raise ProblemError(f"[system] is missing {', '.join(missing)}")
    spec = ProblemSpec(entries={n: _unquote(sysec[n]) for n in names})
    if structured:
        spec.alpha = _number(sysec["alpha"], "alpha")
        spec.beta = _number(sysec["beta"], "beta")
    if "t0" in sysec:
        spec.t0 = _number(sysec["t0"], "t0")
    for n in names:
        if f"{n}_primitive" in sysec:
            spec.primitives[n] = _unquote(sysec[f"{n}_primitive"])
        if f"{n}_limit" in sysec:
            try:
                spec.limits[n] = Limit(_unquote(sysec[f"{n}_limit"]))
            except ValueError:
                raise ProblemError(f"{n}_limit must be one of "
                                   f"{[m.value for m in Limit]}") from None

    if "floquet" in cp:
        spec.period = _number(cp["floquet"].get("period", ""), "period")
        if not spec.period > 0:
            raise ProblemError("period must be positive")
    if "solve" in cp:
        sec = cp["solve"]
        try:
            parts = [p for p in _unquote(sec["x0"]).replace(",", " ").split()]
        except KeyError:
            raise ProblemError("[solve] needs x0") from None
        if len(parts) != 2:
            raise ProblemError("x0 needs two components")
        spec.x0 = (_number(parts[0], "x0"), _number(parts[1], "x0"))
        if "t_end" not in sec:
            raise ProblemError("[solve] needs t_end")
        spec.t_end = _number(sec["t_end"], "t_end")
        spec.samples = int(_number(sec.get("samples", "101"), "samples"))
        if spec.samples < 2:
            raise ProblemError("samples must be at least 2")
    if "tolerances" in cp:
        sec = cp["tolerances"]
        if "rel" in sec:
            spec.rel_tol = _number(sec["rel"], "rel")
        if "abs" in sec:
            spec.abs_tol = _number(sec["abs"], "abs")
        if "fit" in sec:
            spec.fit_tol = _number(sec["fit"], "fit")
    return spec


def _coefficient(spec: ProblemSpec, name: str) -> CoefficientFunction:
    src = spec.entries[name]
    prim = spec.primitives.get(name)
    limit = spec.limits.get(name, Limit.UNKNOWN)
    if spec.period is not None:
        try:
            return CoefficientFunction.from_expr(src, prim, spec.period, limit)
        except ValueError as exc:
            if prim is not None and "antiderivative" in str(exc):
                raise ProblemError(f"{name}_primitive: {exc}") from None
    try:
        return CoefficientFunction.from_expr(src, prim, None, limit)
    except ExprError:
        raise
    except ValueError as exc:
        raise ProblemError(f"{name}: {exc}") from None


def build_systems(spec: ProblemSpec) -> tuple[GeneralSystem | None, StructuredSystem]:
    """(original general system or None, structured system)."""
    coeffs = {n: _coefficient(spec, n) for n in spec.entries}
    if spec.structured:
        return None, StructuredSystem(coeffs["a11"], coeffs["a12"], spec.alpha, spec.beta,
                                      spec.t0)
    G = GeneralSystem(coeffs["a11"], coeffs["a12"], coeffs["a21"], coeffs["a22"], spec.t0)
    S = fit_structure(G, chebyshev_grid(*spec.window), spec.fit_tol)
    return G, S


def _original(G, S):
    return G if G is not None else S


# --- output ----------------------------------------------------------------

def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _flatten(report: dict[str, Any]) -> dict[str, Any]:
    out = {}
    for k, v in report.items():
        if isinstance(v, complex):
            out[f"{k}_re"] = v.real
            out[f"{k}_im"] = v.imag
        elif isinstance(v, np.ndarray) and v.shape == (2, 2):
            for i in range(2):
                for j in range(2):
                    out[f"{k}{i + 1}{j + 1}"] = float(np.real(v[i, j]))
        elif isinstance(v, np.floating):
            out[k] = float(v)
        else:
            out[k] = v
    return out


def emit_report(report: dict[str, Any], fmt: str, out) -> None:
    flat = _flatten(report)
    if fmt == "json":
        json.dump(flat, out, indent=2)
        out.write("\n")
    else:
        out.write("key,value\n")
        for k, v in flat.items():
            out.write(f"{k},{_fmt(v)}\n")


def emit_table(columns: list[str], rows, fmt: str, out) -> None:
    if fmt == "json":
        data = {c: [float(r[i]) for r in rows] for i, c in enumerate(columns)}
        json.dump(data, out, indent=2)
        out.write("\n")
    else:
        out.write(",".join(columns) + "\n")
        for r in rows:
            out.write(",".join(_fmt(float(v)) for v in r) + "\n")


# --- commands --------------------------------------------------------------

def cmd_analyze(spec: ProblemSpec, args, out) -> int:
    G, S = build_systems(spec)
    FM = FundamentalMatrix(S)
    grid = chebyshev_grid(*spec.window)
    res = S.commutation_residuals(grid)
    report = {
        "form": "structured" if G is None else "general (fitted)",
        "alpha": S.alpha,
        "beta": S.beta,
        "gamma_sq": FM.gamma.gamma_sq,
        "branch": FM.gamma.branch.value,
    }
    if G is not None:
        report["fit_residual"] = max(
            max(abs(G.a21(t) - S.alpha * G.a12(t)), abs(G.a22(t) - G.a11(t) - S.beta * G.a12(t)))
            for t in grid)
    if FM.gamma.branch.value == "RealPositive":
        report["gamma"] = FM.gamma.gamma
    elif FM.gamma.branch.value == "Imaginary":
        report["omega"] = FM.gamma.omega
    report["asymptotics"] = classify_asymptotics(FM, spec.period).value
    report["commutation_A_D"] = res["A_D"]
    report["commutation_A_Adot"] = res["A_Adot"]
    emit_report(report, args.format, out)
    return EXIT_OK


def _rk45_samples(system, spec: ProblemSpec, times) -> np.ndarray:
    traj = rk45(lambda t, x: system.matrix(t) @ x, spec.t0, np.array(spec.x0, dtype=float),
                spec.t_end, spec.rel_tol, spec.atol, t_eval=times)
    return np.array([traj(t) for t in times])


def cmd_solve(spec: ProblemSpec, args, out) -> int:
    if spec.x0 is None:
        raise ProblemError("solve needs a [solve] section")
    G, S = build_systems(spec)
    FM = FundamentalMatrix(S)
    times = np.linspace(spec.t0, spec.t_end, spec.samples)
    xs = FM.trajectory(spec.x0, times)
    if not args.verify:
        emit_table(["t", "x1", "x2"], np.column_stack([times, xs]), args.format, out)
        return EXIT_OK
    ref = _rk45_samples(_original(G, S), spec, times)
    delta = np.abs(xs - ref)
    emit_table(["t", "x1", "x2", "x1_rk45", "x2_rk45", "dx1", "dx2"],
               np.column_stack([times, xs, ref, delta]), args.format, out)
    return EXIT_OK


def _floquet_report(spec: ProblemSpec, G, S) -> dict[str, Any]:
    T = spec.period
    avg = floquet_from_averages(S, T)
    mono = exponents_from_monodromy(
        monodromy_numeric(_original(G, S), T, spec.rel_tol, spec.atol))
    tr = trace_identities(S, T, avg)
    report: dict[str, Any] = {"T": T, "B": avg.B}
    report["lambda_plus"], report["lambda_minus"] = avg.exponents
    report["rho_plus"], report["rho_minus"] = avg.multipliers
    report["reduced_mod_2pi_i_over_T"] = avg.reduced
    if avg.reduced:
        report["lambda_plus_raw"], report["lambda_minus_raw"] = avg.raw_exponents
    report["lambda_plus_monodromy"], report["lambda_minus_monodromy"] = mono.exponents
    report["pipeline_delta"] = match_distance(avg.exponents, mono.exponents, T)
    report["trace_sum_residual"] = tr.sum_residual
    report["trace_product_residual"] = tr.product_residual
    report["monodromy_defective"] = mono.defective
    report["verdict"] = stability_verdict(avg).value
    return report


def cmd_floquet(spec: ProblemSpec, args, out) -> int:
    if spec.period is None:
        raise ProblemError("floquet needs a [floquet] section")
    G, S = build_systems(spec)
    emit_report(_floquet_report(spec, G, S), args.format, out)
    return EXIT_OK


def _round_trip_delta(S: StructuredSystem, window, rel_tol) -> float:
    E = second_order_from_structured(S, window)
    comp = system_from_second_order(E, window[0])
    t0, t1 = window
    x0 = np.array([1.0, 0.5])
    y0 = np.array([x0[0], S.a11(t0) * x0[0] + S.a12(t0) * x0[1]])
    times = np.linspace(t0, t1, 41)
    a = rk45(lambda t, x: S.matrix(t) @ x, t0, x0, t1, rel_tol, rel_tol * 1e-2, t_eval=times)
    b = rk45(lambda t, x: comp.matrix(t) @ x, t0, y0, t1, rel_tol, rel_tol * 1e-2, t_eval=times)
    return max(abs(a(t)[0] - b(t)[0]) / (1 + abs(a(t)[0])) for t in times)


def cmd_reduce(spec: ProblemSpec, args, out) -> int:
    _, S = build_systems(spec)
    window = spec.window
    E = second_order_from_structured(S, window)
    grid = np.linspace(*window, 21)
    const = E.constant_form(grid)
    if const is not None:
        report: dict[str, Any] = {"equation": format_equation(*const),
                                  "p": const[0], "q": const[1]}
        if args.check:
            d = _round_trip_delta(S, window, spec.rel_tol)
            report["round_trip_delta"] = d
            report["round_trip_pass"] = bool(d <= 1e-7)
        emit_report(report, args.format, out)
        ok = not args.check or report["round_trip_pass"]
    else:
        emit_table(["t", "p", "q"], E.coefficients(grid), args.format, out)
        ok = True
        if args.check:
            d = _round_trip_delta(S, window, spec.rel_tol)
            ok = d <= 1e-7
            print(f"round-trip delta {d:.3e}: {'pass' if ok else 'FAIL'}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_NUMERIC


def verification_checks(spec: ProblemSpec, G, S) -> list[tuple[str, float, float]]:
    """(name, value, threshold) for every residual the problem supports."""
    FM = FundamentalMatrix(S)
    grid = [t for t in chebyshev_grid(*spec.window, n=17)]
    checks = []

    oracle = defining = liouville = 0.0
    for t in grid:
        # central-difference truncation scales like (h ||A||)^2
        h = 1e-4 / max(1.0, float(np.linalg.norm(S.matrix(t), 2)))
        P = FM.phi(t)
        E = expm2(S.primitive_matrix(t))
        oracle = max(oracle, np.linalg.norm(P - E) / np.linalg.norm(E))
        dP = (FM.phi(t + h) - FM.phi(t - h)) / (2 * h)
        defining = max(defining, np.linalg.norm(dP - S.matrix(t) @ P) / np.linalg.norm(P))
        ref = math.exp(2 * S.f(t) + S.beta * S.g(t))
        liouville = max(liouville, abs(np.linalg.det(P) - ref) / ref)
    checks.append(("oracle_phi_vs_expm", oracle, 1e-10))
    checks.append(("defining_property", defining, 1e-6))
    checks.append(("liouville_det", liouville, 1e-8))
    checks.append(("commutation_A_D", S.commutation_residuals(grid)["A_D"], 1e-8))

    if spec.x0 is not None:
        times = np.linspace(spec.t0, spec.t_end, spec.samples)
        xs = FM.trajectory(spec.x0, times)
        ref = _rk45_samples(_original(G, S), spec, times)
        checks.append(("trajectory_vs_rk45", float(np.abs(xs - ref).max()), 1e-6))

    if spec.period is not None:
        T = spec.period
        rep = _floquet_report(spec, G, S)
        checks.append(("floquet_pipeline_delta", rep["pipeline_delta"], 1e-6))
        checks.append(("trace_sum_residual", rep["trace_sum_residual"], 1e-8))
        checks.append(("trace_product_residual", rep["trace_product_residual"], 1e-8))
        avg = floquet_from_averages(S, T)
        t0 = spec.t0
        per = max(np.linalg.norm(periodic_part(FM, avg, t + T) - periodic_part(FM, avg, t))
                  for t in np.linspace(t0, t0 + T, 5))
        checks.append(("periodic_part_periodicity", per, 1e-7))
    return checks


def cmd_verify(spec: ProblemSpec, args, out) -> int:
    G, S = build_systems(spec)
    checks = verification_checks(spec, G, S)
    rows = [{"check": n, "value": float(v), "threshold": thr, "pass": bool(v <= thr)}
            for n, v, thr in checks]
    extra = {}
    if spec.period is not None and S.alpha == 0.0:
        # alpha = 0 shortcut that drops gamma = |beta|/2, shown next to the full value
        B = floquet_from_averages(S, spec.period).B
        extra["alpha0_lambda_plus_without_gamma"] = B[0, 0] + S.beta / 2 * B[0, 1]
        extra["alpha0_lambda_plus"] = B[0, 0] + (S.beta / 2 + abs(S.beta) / 2) * B[0, 1]
    if args.format == "json":
        json.dump({"checks": rows, **extra}, out, indent=2)
        out.write("\n")
    else:
        out.write("check,value,threshold,pass\n")
        for r in rows:
            out.write(f"{r['check']},{_fmt(r['value'])},{_fmt(r['threshold'])},"
                      f"{_fmt(r['pass'])}\n")
        for k, v in extra.items():
            out.write(f"{k},{_fmt(v)},,\n")
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_NUMERIC


COMMANDS = {"analyze": cmd_analyze, "solve": cmd_solve, "floquet": cmd_floquet,
            "reduce": cmd_reduce, "verify": cmd_verify}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(suppress: bool) -> argparse.ArgumentParser:
    # subcommands repeat the flags with suppressed defaults so a value given
    # before the subcommand is not overwritten
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--tol", type=float, default=argparse.SUPPRESS if suppress else None,
                   help="relative tolerance for rk45 (overrides the problem file)")
    p.add_argument("--format", choices=("csv", "json"),
                   default=argparse.SUPPRESS if suppress else "csv")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="commfloq", parents=[_global_flags(False)],
                     description="Closed-form solutions and Floquet analysis of planar "
                                 "commuting-class linear systems.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[_global_flags(True)])
        p.add_argument("file")
        if name == "solve":
            p.add_argument("--verify", action="store_true",
                           help="append rk45 oracle columns and |deltas|")
        if name == "reduce":
            p.add_argument("--check", action="store_true",
                           help="round-trip the reduction against rk45")
    return parser


def main(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        with open(args.file, encoding="utf-8") as fh:
            spec = parse_problem(fh.read())
        if args.tol is not None:
            if not args.tol > 0:
                raise ProblemError("--tol must be positive")
            spec.rel_tol = args.tol
        return COMMANDS[args.command](spec, args, out)
    except (NotCommutingClass, DegenerateA12, ZeroCrossing) as exc:
        print(f"model rejected: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REJECTED
    except (NumericalOverflowError, QuadratureError, StepUnderflowError,
            FloquetConsistencyError, DomainError, OverflowError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ProblemError, ExprError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
