"""Command-line front end: ``orthospca {solve,verify,gen,bench}``.

Exit codes: 0 success (all certificates pass), 1 usage or parse error,
2 certificate failure, 3 infeasible configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from pathlib import Path

from . import __version__
from .bench import BENCH_COLUMNS, MODES, bench_rows
from .blocks import block_diagonalize, iter_threshold, predicted_cost
from .bnb import iter_bnb
from .certify import (
    ORACLE_CAP, NON_ORTHOGONAL_MODES, OracleCapExceeded, check_eps_certificate, check_solution,
    iter_deflation,
)
from .exact import SpcaSolution, iter_exact
from .io import (
    MatrixFormatError, component_to_dict, components_csv, dump_document, format_matrix,
    load_document, load_matrix, solution_from_document,
)
from .linalg import SymMatrix
from .synthetic import block_covariance

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CERTIFICATE = 2
EXIT_INFEASIBLE = 3


class UsageError(Exception):
    pass


class InfeasibleConfig(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default, which would collide with certificate failure
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_solver_flags(sp, modes=("exact", "bnb", "threshold", "deflation")):
    sp.add_argument("--matrix", required=True, help="square CSV covariance matrix")
    sp.add_argument("--p", type=int, required=True, help="sparsity level")
    sp.add_argument("--k", type=int, default=None, help="number of components (default n)")
    sp.add_argument("--mode", choices=modes, default="exact")
    sp.add_argument("--eps", type=float, default=None, help="optimality gap for bnb/threshold")
    sp.add_argument("--delta", type=float, default=None, help="threshold for threshold mode")
    sp.add_argument("--oracle-cap", type=int, default=ORACLE_CAP,
                    help="largest n for the exhaustive oracle certificate")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="orthospca", description="Orthogonal sparse PCA with certificates.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("solve", help="compute sparse components of a matrix")
    _add_solver_flags(sp)
    sp.add_argument("--out", default=None, help="output file (default stdout)")
    sp.add_argument("--format", choices=("json", "csv"), default="json")

    vp = sub.add_parser("verify", help="re-certify a saved result against a matrix")
    vp.add_argument("--matrix", required=True)
    vp.add_argument("--result", required=True, help="JSON document written by solve")
    vp.add_argument("--level", choices=("oracle", "cheap", "none"), default="oracle")
    vp.add_argument("--oracle-cap", type=int, default=ORACLE_CAP)
    vp.add_argument("--out", default=None)

    gp = sub.add_parser("gen", help="write a synthetic block covariance matrix")
    gp.add_argument("--n", type=int, required=True)
    gp.add_argument("--d", type=int, required=True, help="number of blocks")
    gp.add_argument("--block-size", type=int, required=True)
    gp.add_argument("--coupling", type=float, default=1.0)
    gp.add_argument("--noise", type=float, default=0.0)
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--out", default=None)

    bp = sub.add_parser("bench", help="per-step variance, timing and angle diagnostics")
    bp.add_argument("--matrix", default=None, help="CSV matrix (default: synthetic from --n/--d)")
    bp.add_argument("--p", type=int, required=True)
    bp.add_argument("--r-max", type=int, default=None, help="steps per mode (default n)")
    bp.add_argument("--modes", default="exact,deflation",
                    help=f"comma-separated subset of {','.join(MODES)}")
    bp.add_argument("--eps", type=float, default=0.0)
    bp.add_argument("--delta", type=float, default=None)
    bp.add_argument("--n", type=int, default=10)
    bp.add_argument("--d", type=int, default=2)
    bp.add_argument("--block-size", type=int, default=None)
    bp.add_argument("--coupling", type=float, default=1.0)
    bp.add_argument("--noise", type=float, default=0.0)
    bp.add_argument("--seed", type=int, default=0)
    bp.add_argument("--out", default=None)
    return parser


def _load(path) -> SymMatrix:
    try:
        return load_matrix(path)
    except OSError as e:
        raise UsageError(f"cannot read matrix {path}: {e.strerror or e}") from None
    except (MatrixFormatError, ValueError) as e:
        raise UsageError(f"{path}: {e}") from None


def _emit(text: str, out) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _validate(Q: SymMatrix, p, K, mode, eps, delta):
    n = Q.n
    if not 1 <= p <= n:
        raise InfeasibleConfig(f"p={p} must satisfy 1 <= p <= n={n}")
    if not 1 <= K <= n:
        raise InfeasibleConfig(f"k={K} must satisfy 1 <= k <= n={n}")
    if eps is not None and eps < 0:
        raise InfeasibleConfig("eps must be non-negative")
    if delta is not None and delta < 0:
        raise InfeasibleConfig("delta must be non-negative")
    if mode == "bnb" and eps is None:
        raise InfeasibleConfig("bnb mode needs --eps")
    if mode == "threshold" and delta is None:
        raise InfeasibleConfig("threshold mode needs --delta")


def _solve(Q, p, K, mode, eps, delta):
    """Run the requested solver; returns (solution, per-step bnb certificates, structure)."""
    n = Q.n
    if mode == "exact":
        return SpcaSolution(list(iter_exact(Q, p, K)), Q.fingerprint(), p, mode, 0.0, 0.0, n), None, None
    if mode == "bnb":
        pairs = list(iter_bnb(Q, p, K, eps))
        sol = SpcaSolution([c for c, _ in pairs], Q.fingerprint(), p, mode, eps, 0.0, n)
        return sol, [cert for _, cert in pairs], None
    if mode == "threshold":
        structure = block_diagonalize(Q, delta)
        comps = list(iter_threshold(Q, p, delta, eps, K, structure=structure))
        return SpcaSolution(comps, Q.fingerprint(), p, mode, eps, delta, n), None, structure
    comps = list(iter_deflation(Q, p, K))
    return SpcaSolution(comps, Q.fingerprint(), p, mode, 0.0, 0.0, n), None, None


def _document(Q, sol, config, certificates, structure, warnings) -> dict:
    doc = {
        "config": config,
        "matrix": {"n": Q.n, "trace": Q.trace(), "fingerprint": Q.fingerprint()},
        "components": [component_to_dict(k, c) for k, c in enumerate(sol.components, 1)],
        "cumulative_variance": float(sol.variances.sum()),
        "certificates": certificates,
    }
    if structure is not None:
        full, decomposed = predicted_cost(structure, sol.p)
        doc["blocks"] = {
            "d": structure.d,
            "sizes": structure.sizes,
            "delta": structure.delta,
            "permutation": list(structure.permutation),
            "predicted_cost": {"full": full, "decomposed": decomposed},
        }
    doc["warnings"] = warnings
    doc["passed"] = all(c.get("passed", True) for c in certificates.values()
                        if isinstance(c, dict))
    return doc


def cmd_solve(args) -> int:
    Q = _load(args.matrix)
    K = Q.n if args.k is None else args.k
    _validate(Q, args.p, K, args.mode, args.eps, args.delta)
    eps = args.eps or 0.0
    delta = (args.delta or 0.0) if args.mode == "threshold" else 0.0
    sol, bnb_certs, structure = _solve(Q, args.p, K, args.mode, eps, delta)

    warnings = []
    relaxed = [k for k, c in enumerate(sol.components, 1) if c.sparsity_relaxed]
    if relaxed:
        warnings.append(f"components {relaxed} relaxed the sparsity bound: no feasible "
                        f"p-sparse vector orthogonal to the prefix")

    certificates = {"solution": check_solution(Q, args.p, sol).to_dict()}
    slack = sol.slack
    if slack > 0 and args.mode not in NON_ORTHOGONAL_MODES:
        if Q.n <= args.oracle_cap:
            certificates["eps"] = check_eps_certificate(
                Q, args.p, sol, slack, "oracle", args.oracle_cap).to_dict()
        else:
            certificates["eps"] = {"skipped": True, "slack": slack}
            warnings.append(f"oracle eps certificate skipped: n={Q.n} exceeds oracle cap "
                            f"{args.oracle_cap}")
    if bnb_certs is not None:
        certificates["bnb"] = [
            {"LB": c.LB, "UB": c.UB, "gap": c.gap, "eps": c.eps, "nodes_explored": c.nodes_explored,
             "nodes_pruned": c.nodes_pruned, "evaluations": c.evaluations}
            for c in bnb_certs
        ]
    config = {"p": args.p, "K": K, "mode": args.mode, "eps": eps, "delta": delta,
              "oracle_cap": args.oracle_cap, "slack": slack}
    doc = _document(Q, sol, config, certificates, structure, warnings)

    _emit(dump_document(doc) if args.format == "json" else components_csv(sol), args.out)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    if not doc["passed"]:
        print("certificate failure", file=sys.stderr)
        return EXIT_CERTIFICATE
    return EXIT_OK


def cmd_verify(args) -> int:
    Q = _load(args.matrix)
    try:
        doc = load_document(args.result)
        sol = solution_from_document(doc)
    except OSError as e:
        raise UsageError(f"cannot read result {args.result}: {e.strerror or e}") from None
    except (ValueError, KeyError, TypeError) as e:
        raise UsageError(f"{args.result}: malformed result document ({e})") from None
    if sol.n != Q.n:
        raise UsageError(f"result is for n={sol.n}, matrix has n={Q.n}")
    warnings = []
    if sol.Q_ref and sol.Q_ref != Q.fingerprint():
        warnings.append("matrix fingerprint differs from the one recorded in the result")

    reports = {"solution": check_solution(Q, sol.p, sol)}
    if args.level != "none" and sol.mode not in NON_ORTHOGONAL_MODES:
        try:
            reports["eps"] = check_eps_certificate(Q, sol.p, sol, sol.slack, args.level,
                                                   args.oracle_cap)
        except OracleCapExceeded as e:
            raise InfeasibleConfig(str(e)) from None
    passed = all(r.passed for r in reports.values())
    out = {"certificates": {k: r.to_dict() for k, r in reports.items()},
           "warnings": warnings, "passed": passed}
    _emit(dump_document(out), args.out)
    for name, r in reports.items():
        print(f"[{name}]\n{r.summary()}", file=sys.stderr)
    for w in warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK if passed else EXIT_CERTIFICATE


def cmd_gen(args) -> int:
    try:
        a = block_covariance(args.n, args.d, args.block_size, args.coupling, args.noise, args.seed)
    except ValueError as e:
        raise InfeasibleConfig(str(e)) from None
    _emit(format_matrix(a), args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.matrix is not None:
        Q = _load(args.matrix)
    else:
        size = args.block_size or (args.n // args.d if args.d > 0 else 0)
        try:
            Q = SymMatrix(block_covariance(args.n, args.d, size, args.coupling, args.noise,
                                           args.seed))
        except ValueError as e:
            raise InfeasibleConfig(str(e)) from None
    modes = [m.strip() for m in args.modes.split(",") if m.strip()]
    unknown = [m for m in modes if m not in MODES]
    if unknown or not modes:
        raise UsageError(f"unknown bench modes {unknown}; choose from {','.join(MODES)}")
    r_max = Q.n if args.r_max is None else args.r_max
    for m in modes:
        _validate(Q, args.p, r_max, m, args.eps, args.delta)
    rows = bench_rows(Q, args.p, r_max, modes, args.eps or 0.0, args.delta or 0.0)
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "gen": cmd_gen, "bench": cmd_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        # --help / --version exit 0, parse errors exit EXIT_USAGE
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleConfig as e:
        print(f"infeasible configuration: {e}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
