"""Command-line front end.

Exit codes: 0 success, 1 parse/schema error, 2 validation failure,
3 numerical refusal, 4 inequivalent, 5 undecided.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .classification import equivalent, functor_R, validate_datum
from .errors import LogConnError, NumericalRefusal, ParseError, ValidationFailure
from .fuchsian import assemble_global_datum, loop_samples
from .grading import resonance_basis
from .jordan import additive_jc
from .local import DEFAULT_DEGREE, DEFAULT_RTOL, functor_L, linearizability, monodromy
from .matrix_core import DEFAULT_TOL, NUMERIC_TOL, mat_exp
from .schema import (
    complex_to_json,
    connection_to_json,
    datum_to_json,
    dumps,
    matrix_to_json,
    read_file,
    system_to_json,
)

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_REFUSAL, EXIT_INEQUIVALENT, EXIT_UNDECIDED = range(6)


@dataclass(frozen=True)
class RunConfig:
    rtol: float = DEFAULT_RTOL
    tol: float = DEFAULT_TOL
    seed: int = 0
    trials: int = 64
    degree: int = DEFAULT_DEGREE
    # comparisons of integrated matrices
    numeric_tol: float = NUMERIC_TOL


class _Done(Exception):
    """Carries a finished report and exit code out of a command."""

    def __init__(self, report: dict, code: int, text: str):
        self.report, self.code, self.text = report, code, text


def _validation_table(report) -> str:
    lines = ["condition    residual     ok"]
    for k, v in report.residuals.items():
        lines.append(f"{k:<12} {v:<12.3e} {'yes' if report.conditions[k] else 'NO'}")
    return "\n".join(lines)


def _fmt(M: np.ndarray) -> str:
    return np.array2string(np.asarray(M), precision=6, suppress_small=True, max_line_width=120)


def cmd_analyze(args, cfg: RunConfig) -> tuple:
    conn = read_file(args.file, "connection")
    A0 = conn.coeffs[0]
    jc = additive_jc(A0, cfg.tol)
    basis, resonant = resonance_basis(jc.S, cfg.tol)
    M = monodromy(conn, cfg.rtol)
    target = np.exp(2j * np.pi * np.trace(A0))
    det_res = abs(np.linalg.det(M) - target) / max(1.0, abs(target))
    lin = linearizability(conn, cfg.rtol, cfg.numeric_tol, cfg.seed, M=M)
    datum = functor_L(conn, cfg.rtol, cfg.degree, cfg.numeric_tol)
    val = validate_datum(datum, cfg.numeric_tol)

    report = {
        "command": "analyze",
        "input": connection_to_json(conn),
        "config": asdict(cfg),
        "residue": {
            "matrix": matrix_to_json(A0),
            "eigenvalues": [complex_to_json(l) for l in jc.spectral.eigenvalues],
            "multiplicities": list(jc.spectral.multiplicities),
            "S": matrix_to_json(jc.S),
            "N": matrix_to_json(jc.N),
            "tol": cfg.tol,
        },
        "resonance": {"resonant": resonant, "dim_u_N": basis.dim, "tol": cfg.tol},
        "monodromy": {"matrix": matrix_to_json(M), "det_residual": det_res, "rtol": cfg.rtol},
        "linearizability": {
            "linearizable": lin.linearizable,
            "residual": lin.residual,
            "reason": lin.reason,
            "tol": cfg.numeric_tol,
        },
        "datum": dict(datum_to_json(datum), tol=cfg.numeric_tol),
        "validation": {"passed": val.passed, "residuals": val.residuals, "tol": cfg.numeric_tol},
    }
    text = "\n".join([
        f"residue eigenvalues: {', '.join(f'{l:.6g} (x{m})' for l, m in zip(jc.spectral.eigenvalues, jc.spectral.multiplicities))}",
        f"resonant: {'yes' if resonant else 'no'} (dim u_N(S) = {basis.dim})",
        "monodromy:", _fmt(M),
        f"det residual: {det_res:.3e}",
        f"linearizable: {'yes' if lin.linearizable else 'NO'}",
        "datum h:", _fmt(datum.h),
        _validation_table(val),
    ])
    return report, (EXIT_OK if val.passed else EXIT_INVALID), text


def cmd_normal_form(args, cfg: RunConfig) -> tuple:
    d = read_file(args.datum, "datum")
    val = validate_datum(d, cfg.tol)
    if not val:
        report = {"command": "normal-form", "validation": {"passed": False, "residuals": val.residuals,
                                                           "tol": cfg.tol}}
        return report, EXIT_INVALID, "datum is invalid\n" + _validation_table(val)
    conn = functor_R(d, cfg.tol)
    out = connection_to_json(conn)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(dumps(out))
    text = dumps(out).rstrip("\n") if not args.output else f"wrote Levelt form of degree {conn.degree} to {args.output}"
    return out, EXIT_OK, text


def cmd_equiv(args, cfg: RunConfig) -> tuple:
    d1 = read_file(args.datum1, "datum")
    d2 = read_file(args.datum2, "datum")
    for name, d in (("first", d1), ("second", d2)):
        val = validate_datum(d, cfg.tol)
        if not val:
            report = {"command": "equiv", "invalid": name,
                      "validation": {"passed": False, "residuals": val.residuals, "tol": cfg.tol}}
            return report, EXIT_INVALID, f"{name} datum is invalid\n" + _validation_table(val)
    v = equivalent(d1, d2, cfg.trials, cfg.seed, cfg.numeric_tol)
    report = {
        "command": "equiv",
        "verdict": v.verdict,
        "reason": v.reason,
        "solution_dim": v.solution_dim,
        "witness": matrix_to_json(v.witness) if v.witness is not None else None,
        "alignment": matrix_to_json(v.alignment) if v.alignment is not None else None,
        "residual": v.residual if v.witness is not None else None,
        "tol": cfg.numeric_tol,
        "seed": cfg.seed,
        "trials": cfg.trials,
    }
    code = {"equivalent": EXIT_OK, "inequivalent-certified": EXIT_INEQUIVALENT}.get(v.verdict, EXIT_UNDECIDED)
    text = f"verdict: {v.verdict} ({v.reason})"
    if v.witness is not None:
        text += "\nwitness:\n" + _fmt(v.witness)
    return report, code, text


def _write_csv(prefix: str, sys_, rtol: float, count: int = 64) -> list:
    paths = []
    n = sys_.n
    header = ["theta"] + [f"s{i + 1}{j + 1}_{part}" for i in range(n) for j in range(n) for part in ("re", "im")]
    for k, (thetas, mats) in enumerate(loop_samples(sys_, count, rtol)):
        path = f"{prefix}_loop{k + 1}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for th, Y in zip(thetas, mats):
                w.writerow([repr(float(th))] + [repr(float(x)) for v in Y.ravel() for x in (v.real, v.imag)])
        paths.append(path)
    return paths


def cmd_global(args, cfg: RunConfig) -> tuple:
    sys_ = read_file(args.system, "system")
    rep = assemble_global_datum(sys_, cfg.rtol, cfg.numeric_tol)
    gm = rep.monodromy
    poles = []
    lines = [f"basepoint: {gm.loops.x0:.6g}", f"product relation residual: {rep.product_residual:.3e}"]
    for k, p in enumerate(rep.poles):
        poles.append({
            "loop": k + 1,
            "input_index": p.index,
            "pole": complex_to_json(p.pole),
            "M": matrix_to_json(p.M),
            "charpoly_residual": p.charpoly_residual,
            "compatible": p.compatible,
            "h": matrix_to_json(p.datum.h) if p.datum is not None else None,
            "validation": p.validation,
            "failure": p.failure or None,
        })
        status = "ok" if p.compatible else f"FAILED ({p.failure})"
        lines.append(f"loop {k + 1}: pole {p.pole:.6g}  charpoly residual {p.charpoly_residual:.2e}  datum {status}")
    report = {
        "command": "global",
        "input": system_to_json(sys_),
        "config": asdict(cfg),
        "basepoint": complex_to_json(gm.loops.x0),
        "poles": poles,
        "M_infinity": matrix_to_json(gm.infinity),
        "residue_at_infinity": matrix_to_json(rep.infinity_residue),
        "product_residual": rep.product_residual,
        "relative_product_residual": gm.relative_residual,
        "rtol": cfg.rtol,
        "tol": cfg.numeric_tol,
    }
    if args.csv:
        report["csv"] = _write_csv(args.csv, sys_, cfg.rtol)
        lines.append("csv: " + ", ".join(report["csv"]))
    return report, EXIT_OK, "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--rtol", type=float, default=DEFAULT_RTOL, help="ODE tolerance")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="algebraic clustering tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--trials", type=int, default=64)
    common.add_argument("--degree", type=int, default=DEFAULT_DEGREE, help="truncation order")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--timing", action="store_true", help="add wall-clock time to the report")

    p = argparse.ArgumentParser(prog="logconn", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="analyze a connection file")
    a.add_argument("file")
    a.set_defaults(func=cmd_analyze)
    nf = sub.add_parser("normal-form", parents=[common], help="Levelt normal form of a datum")
    nf.add_argument("datum")
    nf.add_argument("-o", "--output")
    nf.set_defaults(func=cmd_normal_form)
    e = sub.add_parser("equiv", parents=[common], help="test two data for equivalence")
    e.add_argument("datum1")
    e.add_argument("datum2")
    e.set_defaults(func=cmd_equiv)
    g = sub.add_parser("global", parents=[common], help="Fuchsian system on the punctured sphere")
    g.add_argument("system")
    g.add_argument("--csv", metavar="PREFIX", help="write loop samples to PREFIX_loopK.csv")
    g.set_defaults(func=cmd_global)
    return p


def _emit(report: dict, text: str, as_json: bool, stream):
    stream.write(dumps(report) if as_json else text + "\n")


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(rtol=args.rtol, tol=args.tol, seed=args.seed, trials=args.trials, degree=args.degree)
    start = time.perf_counter()
    try:
        report, code, text = args.func(args, cfg)
    except ParseError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except NumericalRefusal as err:
        _emit({"command": args.command, "refusal": type(err).__name__, "message": str(err)},
              f"refused: {type(err).__name__}: {err}", args.json, sys.stdout)
        return EXIT_REFUSAL
    except ValidationFailure as err:
        rep = err.report
        body = {"command": args.command, "error": str(err)}
        if rep is not None:
            body["validation"] = {"passed": False, "residuals": rep.residuals, "tol": rep.tol}
        _emit(body, f"invalid: {err}", args.json, sys.stdout)
        return EXIT_INVALID
    except LogConnError as err:
        _emit({"command": args.command, "error": f"{type(err).__name__}: {err}"},
              f"invalid input: {type(err).__name__}: {err}", args.json, sys.stdout)
        return EXIT_INVALID
    if args.timing:
        report["timing_seconds"] = time.perf_counter() - start
    _emit(report, text, args.json, sys.stdout)
    return code


if __name__ == "__main__":
    sys.exit(main())
