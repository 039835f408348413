"""Command-line front end.

Reports go to stdout as JSON and a short human summary goes to stderr.
Exit codes: 0 when everything checked passes, 1 on an axiom or theorem
violation, 2 on usage or parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import dilation, opkernels, povm, qpoly, serialization, suite
from .demos import DEMOS, run_demo
from .errors import AxiomViolation, DomainError, NcpolyError, TheoremViolationError
from .linalg import Tolerance, min_eigenvalue
from .opkernels import OperatorKernel
from .spaces import Event, FiniteSpace, ProductSpace
from .states import DensityOperator

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    """Bad arguments or unreadable input; maps to exit code 2."""


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot encode {type(obj).__name__}")


def _emit(report: dict, out: str | None):
    text = json.dumps(report, indent=2, default=_json_default)
    print(text)
    if out:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _say(msg: str):
    print(msg, file=sys.stderr)


def _tolerance(args) -> Tolerance:
    try:
        tol = Tolerance.from_env()
        if args.tol is not None:
            tol = Tolerance(abs=args.tol, rel=args.tol, pinv_cutoff_ratio=tol.pinv_cutoff_ratio)
    except (ValueError, DomainError) as exc:
        raise UsageError(f"bad tolerance: {exc}") from None
    return tol


def _load(path: str):
    if not Path(path).is_file():
        raise UsageError(f"{path}: no such file")
    try:
        return serialization.load(path)
    except serialization.ParseError as exc:
        raise UsageError(str(exc)) from None


def parse_event(space: FiniteSpace, text: str) -> Event:
    """``"*"`` is the full space, ``""`` the empty event, else comma-separated labels."""
    text = text.strip()
    if text == "*":
        return space.full
    labels = [s.strip() for s in text.split(",") if s.strip()]
    try:
        return space.event(labels)
    except (DomainError, KeyError, ValueError) as exc:
        raise UsageError(f"bad event {text!r}: {exc}; atoms are {', '.join(space.atoms)}") from None


# ---------------------------------------------------------------- commands


def cmd_validate(args) -> int:
    tol = _tolerance(args)
    try:
        obj = _load(args.path)
    except AxiomViolation as exc:
        report = {"path": args.path, "valid": False, "error": str(exc)}
        _emit(report, args.out)
        _say(f"FAIL {args.path}: {exc}")
        return EXIT_VIOLATION

    if isinstance(obj, povm.Povm):
        rep = povm.validate_pvm(obj, tol) if obj.kind == "pvm" else povm.validate_povm(obj, tol)
        report = {"path": args.path, "valid": rep.ok, **rep.to_json()}
        for name, check in rep.checks.items():
            _say(f"{'ok  ' if check['pass'] else 'FAIL'} {name:16s} residual {check['residual']:.3e} {check['detail']}")
        ok = rep.ok
    elif isinstance(obj, OperatorKernel):
        gap = min_eigenvalue(obj.gram())
        ok = opkernels.is_pd(obj, tol)
        report = {"path": args.path, "kind": "kernel", "valid": ok,
                  "checks": {"positive_definite": {"pass": ok, "residual": max(0.0, -gap),
                                                   "detail": f"min eigenvalue of the block Gram matrix {gap:.3e}"}}}
        _say(f"{'ok  ' if ok else 'FAIL'} positive_definite min eigenvalue {gap:.3e}")
    elif isinstance(obj, DensityOperator):
        # construction already enforced Hermitian, PSD and unit trace
        ok = True
        report = {"path": args.path, "kind": "density", "valid": True, "dim": obj.dim,
                  "split": list(obj.split) if obj.split else None,
                  "checks": {"psd": {"pass": True, "residual": max(0.0, -min_eigenvalue(obj.matrix))},
                             "unit_trace": {"pass": True, "residual": abs(np.trace(obj.matrix) - 1.0)}}}
        _say(f"ok   density operator of dimension {obj.dim}")
    else:
        raise UsageError(f"{args.path}: expected a POVM, PVM, kernel or density operator, got {type(obj).__name__}")
    _emit(report, args.out)
    _say(f"{'PASS' if ok else 'FAIL'} {args.path}")
    return EXIT_OK if ok else EXIT_VIOLATION


def _load_povm(path: str) -> povm.Povm:
    obj = _load(path)
    if not isinstance(obj, povm.Povm):
        raise UsageError(f"{path}: expected a POVM or PVM, got {type(obj).__name__}")
    return obj


def cmd_dilate(args) -> int:
    tol = _tolerance(args)
    try:
        Q = _load_povm(args.path)
        D = dilation.dilate(Q, compress=args.compress, tol=tol)
    except DomainError as exc:
        _emit({"path": args.path, "error": str(exc)}, None)
        _say(f"FAIL {exc}")
        return EXIT_VIOLATION
    recon, iso = D.reconstruction_residual(), D.isometry_residual()
    ok = recon <= dilation.RECONSTRUCTION_TOL and iso <= tol.abs
    report = {"dim": Q.dim, "compressed": args.compress, **D.to_json(),
              "reconstruction_residual": recon, "isometry_residual": iso, "pass": ok}
    _emit(report, args.out)
    _say(f"big_dim {D.big_dim} (dim {Q.dim}, {len(Q.space)} atoms)")
    _say(f"max reconstruction residual {recon:.3e}, isometry residual {iso:.3e}")
    return EXIT_OK if ok else EXIT_VIOLATION


def cmd_rn(args) -> int:
    tol = _tolerance(args)
    Q = _load_povm(args.path)
    if not isinstance(Q.space, ProductSpace):
        _emit({"path": args.path, "error": "POVM is not on a product space"}, None)
        _say("FAIL rn needs a POVM on a product space (atoms labeled 'x|y')")
        return EXIT_VIOLATION
    factor = Q.space.right if args.side == "right" else Q.space.left
    event = parse_event(factor, args.B)
    try:
        qp = qpoly.make_qpoly(Q, tol)
        fn = qpoly.disintegrate if args.side == "right" else qpoly.disintegrate_left
        res = fn(qp, event, tol, rng=np.random.default_rng(0))
    except (DomainError, TheoremViolationError) as exc:
        _emit({"path": args.path, "error": str(exc)}, None)
        _say(f"FAIL {exc}")
        return EXIT_VIOLATION
    report = res.to_json()
    atoms, frame = res.atom_frame()
    cond_space = Q.space.left if args.side == "right" else Q.space.right
    report["atom_frame"] = [
        {"atom": cond_space.atoms[a], "diagonal": np.real(np.diag(frame)[sl]).tolist()} for a, sl in atoms
    ]
    _emit(report, args.out)
    spec = ", ".join(f"{x:.6g}" for x in res.gamma_spectrum)
    _say(f"event {event.labels} on the {args.side} factor")
    _say(f"Gamma spectrum [{spec}]")
    _say(f"match residual against the compressed projection {res.residuals['projection_match']:.3e}")
    return EXIT_OK if report["pass"] else EXIT_VIOLATION


def cmd_suite(args) -> int:
    tol = _tolerance(args)
    try:
        cfg = suite.SuiteConfig(seed=args.seed, trials=args.trials, max_atoms=args.max_atoms,
                                max_dim=args.max_dim, tol=tol, workers=args.workers)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = suite.run_suite(cfg)
    _emit(report, args.out)
    for name, entry in report["properties"].items():
        _say(f"{'ok  ' if entry['failed'] == 0 else 'FAIL'} {name:32s} {entry['passed']}/{entry['trials']}"
             f"  worst residual {entry['worst_residual']:.2e}")
    _say(f"{len(report['properties'])} properties, {report['total_failures']} failures")
    return EXIT_OK if report["pass"] else EXIT_VIOLATION


def cmd_demo(args) -> int:
    if args.name not in DEMOS:
        raise UsageError(f"unknown demo {args.name!r}; available: {', '.join(DEMOS)}")
    report = run_demo(args.name)
    _emit(report, args.out)
    for line in report["notes"]:
        _say(f"  {line}")
    for c in report["checks"]:
        _say(f"{'ok  ' if c['pass'] else 'FAIL'} {c['identity']}  residual {c['residual']:.2e}")
    return EXIT_OK if report["pass"] else EXIT_VIOLATION


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=None,
                        help="absolute and relative tolerance (default 1e-9, or $NCPOLY_TOL)")
    common.add_argument("--out", default=None, help="also write the JSON report to this file")

    p = argparse.ArgumentParser(prog="ncpoly", description="Check POVMs, kernels and quantum polymorphisms.")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", parents=[common], help="check the axioms of a POVM, PVM, kernel or state")
    v.add_argument("path")
    v.set_defaults(fn=cmd_validate)

    d = sub.add_parser("dilate", parents=[common], help="Naimark dilation of a POVM")
    d.add_argument("path")
    d.add_argument("--compress", action="store_true", help="use rank(E_j) blocks instead of dim")
    d.set_defaults(fn=cmd_dilate)

    r = sub.add_parser("rn", parents=[common], help="disintegrate a POVM on a product space")
    r.add_argument("path")
    r.add_argument("--B", required=True, help="event: comma-separated atom labels, '*' for all, '' for none")
    r.add_argument("--side", choices=("left", "right"), default="right",
                   help="factor carrying the event (default right)")
    r.set_defaults(fn=cmd_rn)

    s = sub.add_parser("suite", parents=[common], help="run the seeded property suite")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=200)
    s.add_argument("--max-atoms", type=int, default=4)
    s.add_argument("--max-dim", type=int, default=3)
    s.add_argument("--workers", type=int, default=suite.default_workers())
    s.set_defaults(fn=cmd_suite)

    m = sub.add_parser("demo", parents=[common], help=f"run a fixture: {', '.join(DEMOS)}")
    m.add_argument("name")
    m.set_defaults(fn=cmd_demo)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        _say(f"error: {exc}")
        return EXIT_USAGE
    except AxiomViolation as exc:
        _say(f"FAIL {exc}")
        return EXIT_VIOLATION
    except NcpolyError as exc:
        _say(f"error: {exc}")
        return EXIT_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
