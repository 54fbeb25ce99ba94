"""Explicit-state model checker and prover for branching-time properties
with polyadic state predicates, producing checkable proof certificates."""

from .formula import (AF, AG, AR, AU, AX, EF, EG, ER, EU, EX, And, Atom,
                      Bottom, Const, Formula, Implies, NegAtom, Or, Top, Var,
                      dualize, expand_abbrev, free_vars, substitute)
from .kripke import (CompiledModel, ExplicitModel, KripkeModel, ModelDef,
                     ModelError, compile_model)
from .engine import (EngineOptions, Verdict, VisitedStore, prove, prove_fair,
                     fair_loop_check)
from .oracle import Oracle, valid, valid_fair
from .certify import (CheckReport, ProofTree, build_proof, check_proof,
                      counterexample, parse_proof, reconstruct_proof,
                      render_proof)

__all__ = [
    "AF", "AG", "AR", "AU", "AX", "EF", "EG", "ER", "EU", "EX", "And", "Atom",
    "Bottom", "Const", "Formula", "Implies", "NegAtom", "Or", "Top", "Var",
    "dualize", "expand_abbrev", "free_vars", "substitute",
    "CompiledModel", "ExplicitModel", "KripkeModel", "ModelDef", "ModelError",
    "compile_model",
    "EngineOptions", "Verdict", "VisitedStore", "prove", "prove_fair",
    "fair_loop_check",
    "Oracle", "valid", "valid_fair",
    "CheckReport", "ProofTree", "build_proof", "check_proof", "counterexample",
    "parse_proof", "reconstruct_proof", "render_proof",
]
