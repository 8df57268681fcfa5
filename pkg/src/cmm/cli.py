"""Command-line front end: ``python -m cmm <command> --model FILE ...``.

Exit codes: 0 ok, 1 usage error, 2 validation failure, 3 precondition failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

import numpy as np

from . import core, sampler
from .errors import (
    ConditioningError,
    DomainError,
    InputError,
    InvariantError,
    ModelLookupError,
    PreconditionError,
)
from .modelfile import ModelFileError, digest, load_tree, parse_tolerances, validate_tree
from .quantum.model import QuantumModel, quantum_interference
from .quantum.search import chsh_maximize
from .report import ReportRecord
from .tolerances import Tolerances

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_PRECONDITION = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _tolerances(pairs: list[str] | None, base: Tolerances) -> Tolerances:
    changes = {}
    for item in pairs or []:
        key, sep, val = item.partition("=")
        if not sep:
            raise UsageError(f"--tol expects KEY=VALUE, got {item!r}")
        try:
            changes[key] = float(val)
        except ValueError:
            raise UsageError(f"--tol {key}: {val!r} is not a number") from None
    try:
        return base.override(**changes)
    except KeyError as exc:
        raise UsageError(f"unknown tolerance {exc.args[0]!r}") from None


def _label(model, observable: str, text: str | None):
    """Match a command-line outcome label against the observable's outcomes."""
    outs = model.outcomes(observable)
    if text is None:
        return outs[0]
    for o in outs:
        if str(o) == text:
            return o
        try:
            if isinstance(o, (int, float)) and abs(float(text) - o) <= 1e-9:
                return o
        except ValueError:
            pass
    raise ModelLookupError(f"{text!r} is not an outcome of {observable!r}; outcomes are {list(outs)}")


def _need_seed(args) -> int:
    if args.seed is None:
        raise UsageError(f"'{args.command}' is randomized and requires --seed")
    return args.seed


def _contexts(model, spec: str | None):
    if spec is None:
        return None
    names = [s for s in spec.split(",") if s]
    for n in names:
        model.context(n)
    return {n: model.context(n) for n in names}


# ---------------------------------------------------------------------------
# commands; each returns (outputs, text, csv_rows or None, exit code)


def cmd_validate(args, tree, model, checks):
    ok = all(c.passed for c in checks)
    lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name}"
             + (f"  (residual {c.residual:.3e})" if c.residual else "")
             + (f"  {c.detail}" if c.detail and not c.passed else "") for c in checks]
    lines.append("valid" if ok else "INVALID")
    rows = [["check", "passed", "residual"]] + [[c.name, c.passed, c.residual] for c in checks]
    return {"valid": ok, "checks": [c.to_dict() for c in checks]}, "\n".join(lines), rows, \
        EXIT_OK if ok else EXIT_INVALID


def cmd_diagnose(args, tree, model, checks):
    contexts = _contexts(model, args.contexts)
    if contexts is None and isinstance(model, QuantumModel):
        seed = _need_seed(args)
        contexts = model.default_contexts(seed)
    insts = args.instruments.split(",") if args.instruments else None
    rep = core.feature_report(model, contexts, insts, seed=args.seed)
    rows = [["feature", "value"]] + [[k, "yes" if v else "no"] for k, v in rep.table().items()]
    return rep.to_dict(), rep.to_text(), rows, EXIT_OK


def _sweep_state(t: float, dim: int) -> np.ndarray:
    psi = np.zeros(dim, dtype=complex)
    psi[0], psi[1] = math.cos(t), math.sin(t)
    return psi


def cmd_interference(args, tree, model, checks):
    header = ["parameter", "delta", "delta_crossterm", "lambda", "regime", "theta"]
    rows = []
    if isinstance(model, QuantumModel):
        a, b = model.observable(args.A), model.observable(args.B)
        y = _label(model, args.B, args.y)
        if args.sweep:
            if not hasattr(a, "projectors") or not hasattr(b, "projectors"):
                raise PreconditionError("--sweep needs von Neumann observables")
            for t in np.linspace(0.0, math.pi, args.sweep):
                d = quantum_interference(_sweep_state(t, model.dim), a, b, y, model.tol)
                rows.append([float(t), d.delta, d.delta_crossterm, d.lam, d.regime, d.theta])
        else:
            names = [args.context] if args.context else list(model.contexts())
            for n in names:
                d = core.ftp_interference(model, n, args.A, args.B, y)
                cross = None
                if hasattr(a, "projectors") and hasattr(b, "projectors") and model.find_instrument(args.A).kind == "luders":
                    cross = quantum_interference(model.context(n), a, b, y, model.tol).delta_crossterm
                rows.append([n, d.delta, cross, d.lam, d.regime, d.theta])
    else:
        if args.sweep:
            raise UsageError("--sweep applies to quantum models only")
        y = _label(model, args.B, args.y)
        names = [args.context] if args.context else list(model.contexts())
        for n in names:
            d = core.ftp_interference(model, n, args.A, args.B, y)
            rows.append([n, d.delta, None, d.lam, d.regime, d.theta])
    out = [dict(zip(header, r)) for r in rows]
    text = "\n".join(
        f"{r[0]!s:>12}  delta={r[1]: .6g}  cross={'' if r[2] is None else format(r[2], '.6g'):>10}  "
        f"lambda={'' if r[3] is None else format(r[3], '.6g'):>10}  {r[4]}"
        + ("" if r[5] is None else f"  theta={r[5]:.6g}") for r in rows
    )
    return {"B": args.B, "y": y, "rows": out}, text, [header] + rows, EXIT_OK


def cmd_chsh(args, tree, model, checks):
    if args.A1:
        if not (args.A2 and args.B1 and args.B2 and args.context):
            raise UsageError("evaluating CHSH needs --context, --A1, --A2, --B1, --B2")
        v = core.chsh_value(model, args.context, [args.A1, args.A2], [args.B1, args.B2], force=args.force)
        label = "sequential CHSH" if args.force else "CHSH"
        out = {"value": v, "mode": label, "context": args.context,
               "A": [args.A1, args.A2], "B": [args.B1, args.B2]}
        return out, f"{label} = {v:.10g}", [["value"], [v]], EXIT_OK
    seed = _need_seed(args)
    if not isinstance(model, QuantumModel) or model.dim != 4:
        raise PreconditionError("CHSH maximisation needs a two-qubit (dim 4) quantum model")
    res = chsh_maximize(4, seed=seed, restarts=args.restarts, separable=args.separable)
    check = res.verify()
    out = {"value": res.value, "verified": check, "restarts": args.restarts, **res.witness_summary()}
    text = f"max CHSH = {res.value:.10g} (re-evaluated {check:.10g}, separable={res.separable})"
    return out, text, [["value", "verified"], [res.value, check]], EXIT_OK


def _parse_gamma(model, a: str, b: str, text: str) -> list[tuple]:
    pairs = []
    for item in text.split(","):
        x, sep, y = item.partition(":")
        if not sep:
            raise UsageError(f"--gamma expects x:y pairs, got {item!r}")
        pairs.append((_label(model, a, x), _label(model, b, y)))
    return pairs


def cmd_entangle(args, tree, model, checks):
    inst_a = model.find_instrument(args.A)
    b = args.B
    c = args.context
    conc = core.concurrence(model, c, inst_a, b)
    dep = {str(beta): core.depends_on(model, c, inst_a, b, beta) for beta in model.outcomes(b)}
    ent = core.ab_entangled(model, c, inst_a, model.instrument(b))
    gammas = [_parse_gamma(model, inst_a.observable, b, args.gamma)] if args.gamma else \
        core.complete_gammas(model.outcomes(inst_a.observable), model.outcomes(b))
    epr = []
    for g in gammas:
        r = core.epr_entangled(model, c, inst_a, b, g)
        epr.append({"gamma": [list(p) for p in g], "holds": r.holds, "complete": r.complete,
                    "min_conditional": r.min_conditional})
    out = {"concurrence": conc.value, "excluded": list(conc.excluded), "depends_on": dep,
           "ab_entangled": ent, "epr": epr}
    lines = [f"concurrence = {conc.value:.10g}", f"AB-entangled: {'yes' if ent else 'no'}"]
    lines += [f"depends on A for B={k}: {'yes' if v else 'no'}" for k, v in dep.items()]
    lines += [f"EPR {e['gamma']}: holds={e['holds']} complete={e['complete']}" for e in epr]
    rows = [["concurrence", "ab_entangled"], [conc.value, ent]]
    return out, "\n".join(lines), rows, EXIT_OK


def cmd_sample(args, tree, model, checks):
    seed = _need_seed(args)
    if args.N < 1:
        raise UsageError("--N must be at least 1")
    if args.B:
        pair = sampler.sample_sequential(model, args.context, args.A, args.B, args.N, seed)
        comb = sampler.combinability_run(model, args.context, args.A, args.B, args.N, seed)
        joint = pair.joint_frequencies()
        out = {"N": args.N, "joint": [[x, y, f] for (x, y), f in joint.items()],
               "failed": int(pair.failed.sum()), "combinability": comb.to_dict()}
        text = "\n".join([f"{x!s:>8} {y!s:>8}  {f:.6f}" for (x, y), f in joint.items()]
                         + [f"marginals match: {comb.marginals_match} (max residual {comb.max_residual:.4g})"])
        rows = list(csv.reader(io.StringIO(pair.to_csv())))
    else:
        seq = sampler.sample(model, args.context, args.A, args.N, seed)
        est = sampler.estimate(seq)
        out = est.to_dict()
        text = "\n".join(f"{x!s:>8}  {c:>8d}  {c / est.N:.6f}" for x, c in zip(est.labels, est.counts))
        rows = list(csv.reader(io.StringIO(seq.to_csv())))
    return out, text, rows, EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "diagnose": cmd_diagnose,
    "interference": cmd_interference,
    "chsh": cmd_chsh,
    "entangle": cmd_entangle,
    "sample": cmd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--model", required=True, help="model file (JSON)")
    common.add_argument("--seed", type=int, help="unsigned 64-bit seed (required by randomized commands)")
    common.add_argument("--tol", action="append", metavar="KEY=VAL", help="tolerance override (repeatable)")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--format", choices=("text", "json", "csv"), default="text")

    p = _Parser(prog="cmm", description="Contextual measurement model toolkit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.add_parser("validate", parents=[common], help="check every model invariant")
    d = sub.add_parser("diagnose", parents=[common], help="feature table with witnesses")
    d.add_argument("--contexts", help="comma-separated context names (default: model sample)")
    d.add_argument("--instruments", help="comma-separated instrument names")
    i = sub.add_parser("interference", parents=[common], help="interference term table")
    i.add_argument("--A", required=True)
    i.add_argument("--B", required=True)
    i.add_argument("--y", help="outcome of B (default: first)")
    i.add_argument("--context")
    i.add_argument("--sweep", type=int, metavar="N",
                   help="N points of psi(t) = cos t e0 + sin t e1 for t in [0, pi]")
    c = sub.add_parser("chsh", parents=[common], help="maximise or evaluate CHSH")
    c.add_argument("--restarts", type=int, default=8)
    c.add_argument("--separable", action="store_true")
    c.add_argument("--context")
    for n in ("A1", "A2", "B1", "B2"):
        c.add_argument(f"--{n}")
    c.add_argument("--force", action="store_true", help="evaluate without the compatibility precondition")
    e = sub.add_parser("entangle", parents=[common], help="concurrence, dependence and EPR checks")
    e.add_argument("--A", required=True)
    e.add_argument("--B", required=True)
    e.add_argument("--context", required=True)
    e.add_argument("--gamma", help="pairs x:y separated by commas (default: all complete pairings)")
    s = sub.add_parser("sample", parents=[common], help="seeded outcome sequences")
    s.add_argument("--A", required=True)
    s.add_argument("--B")
    s.add_argument("--context", required=True)
    s.add_argument("--N", type=int, default=100000)
    return p


def _render(fmt: str, record: ReportRecord, text: str, rows) -> str:
    if fmt == "json":
        return record.to_json() + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for r in rows:
            w.writerow(["" if v is None else v for v in r])
        return buf.getvalue()
    return text + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: " + ", ".join(COMMANDS))
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        tree = load_tree(args.model)
        tol = _tolerances(args.tol, parse_tolerances(tree))
        model, checks = validate_tree(tree, tol)
        if args.command != "validate" and model is None:
            failed = [c for c in checks if not c.passed]
            for c in failed:
                print(f"validation failed: {c.name}: {c.detail}", file=sys.stderr)
            return EXIT_INVALID
        outputs, text, rows, code = COMMANDS[args.command](args, tree, model, checks)
        inputs = {k: v for k, v in vars(args).items() if k not in ("out", "format")}
        record = ReportRecord(digest(tree), args.command, inputs, outputs, seed=args.seed)
        rendered = _render(args.format, record, text, rows)
        if args.out:
            Path(args.out).write_text(rendered)
        else:
            sys.stdout.write(rendered)
        return code
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelFileError, InvariantError) as exc:
        print(f"validation failed: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (PreconditionError, ConditioningError, DomainError) as exc:
        print(f"precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (ModelLookupError, InputError) as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def run() -> None:
    sys.exit(main())
