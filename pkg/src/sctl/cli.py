"""Command-line driver.

    sctl [-output FILE] [options] model-file
    sctl --bench FAMILY [parameters] [-output FILE]

Verifies every spec of the model file in order, printing the formula
and a true/false verdict line per spec.  With -output, the proof (or
the counterexample, a proof of the dual formula) is written in the
numbered line format; machine-readable certificates are available with
--proof-format machine.  Exit codes: 0 verification ran, 2 input or
model errors, 3 resource limits.
"""

from __future__ import annotations

import argparse
import sys

from . import benchgen, certify, oracle, parser
from .engine import EngineOptions, StepLimitError, prove, prove_fair
from .formula import dualize, expand_abbrev
from .kripke import ModelError, ResourceLimit, compile_model
from .parser import ParseError, render_formula, resolve_ini


def _arg_parser():
    p = argparse.ArgumentParser(
        prog="sctl",
        description="explicit-state model checker and prover producing "
                    "checkable certificates")
    p.add_argument("model", nargs="?", help="model file to verify")
    p.add_argument("-output", metavar="FILE",
                   help="write proofs/counterexamples (or generated models) here")
    p.add_argument("--oracle", action="store_true",
                   help="decide specs with the brute-force semantic checker")
    p.add_argument("--engine", choices=["cpt", "recursive"], default="cpt")
    p.add_argument("--no-memo", action="store_true",
                   help="disable the visited-state store")
    p.add_argument("--visited", choices=["hash", "bdd"], default="hash",
                   help="visited-set backend")
    p.add_argument("--step-limit", type=int, default=0,
                   help="abort after N rewrite steps (0 = unlimited)")
    p.add_argument("--trace", action="store_true",
                   help="record the full rewrite trace and report search stats")
    p.add_argument("--state-bound", type=int, default=1 << 20,
                   help="oracle state-space bound")
    p.add_argument("--proof-format", choices=["paper", "machine"], default="paper")
    p.add_argument("--seed", type=int, default=1, help="generator seed")
    p.add_argument("--bench", choices=["cp", "csp", "mutex", "ring"],
                   help="emit a generated benchmark model instead of verifying")
    p.add_argument("--a", type=int, default=0, help="bench: process count")
    p.add_argument("--b", type=int, default=0, help="bench: variable count")
    p.add_argument("--t", type=int, default=0, help="bench: transitions per process")
    p.add_argument("--p", type=int, default=4, help="bench: assignments per transition")
    p.add_argument("--n", type=int, default=0, help="bench: mutex/ring process count")
    return p


def _generate(args) -> str:
    if args.bench == "cp":
        md = benchgen.gen_cp(benchgen.CpParams(
            a=args.a or 3, b=args.b or 12, seed=args.seed))
    elif args.bench == "csp":
        md = benchgen.gen_csp(benchgen.CspParams(
            a=args.a or 2, b=args.b or 12, t=args.t, p=args.p, seed=args.seed))
    elif args.bench == "mutex":
        md, _, _ = benchgen.gen_mutex(args.n or 2)
    else:
        md, _, _ = benchgen.gen_ring(args.n or 3)
    return parser.render_modeldef(md)


def run_cli(argv, stdout=None) -> int:
    out = stdout or sys.stdout
    args = _arg_parser().parse_args(argv)

    if args.bench:
        text = _generate(args)
        if args.output:
            with open(args.output, "w") as fh:
                fh.write(text)
        else:
            out.write(text)
        return 0

    if not args.model:
        print("error: no model file given", file=sys.stderr)
        return 2
    try:
        with open(args.model) as fh:
            source = fh.read()
    except OSError as exc:
        print(f"error: cannot read {args.model}: {exc}", file=sys.stderr)
        return 2

    try:
        md = parser.parse(source)
        model = compile_model(md)
    except ParseError as exc:
        for d in exc.diagnostics:
            print(str(d), file=sys.stderr)
        return 2
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    opts = EngineOptions(engine=args.engine, memo=not args.no_memo,
                         visited=args.visited, step_limit=args.step_limit,
                         trace=args.trace)
    fair = model.fairness

    out.write(f"verifying on the model {model.name}...\n")
    proofs = []
    orc = None
    try:
        for name, sugared in model.specs:
            out.write(f"{name}: {render_formula(sugared)}\n")
            phi = expand_abbrev(resolve_ini(sugared, model.init))
            verdict = None
            if args.oracle:
                if orc is None:
                    orc = oracle.Oracle(model, args.state_bound)
                ok = orc.valid_fair(phi, fair) if fair else orc.valid(phi)
            elif fair:
                verdict = prove_fair(model, phi, fair, opts)
                ok = verdict.provable
            else:
                verdict = prove(model, phi, opts)
                ok = verdict.provable
            out.write(f"{name} is {'true' if ok else 'false'}.\n")
            if args.trace and verdict is not None:
                out.write(f"  steps={verdict.stats.steps} "
                          f"trace-events={len(verdict.trace)}\n")
            if args.output and not fair:
                goal = phi if ok else dualize(phi)
                tree = certify.build_proof(model, goal)
                proofs.append(certify.render_proof(tree, args.proof_format, model))
            elif args.output:
                proofs.append(f"/* {name}: no certificate in fair mode */\n")
    except (StepLimitError, ResourceLimit) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except ModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.output:
        with open(args.output, "w") as fh:
            fh.write("\n".join(proofs))
    return 0


def main():
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
