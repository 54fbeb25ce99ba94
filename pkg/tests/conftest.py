import random

import pytest

from sctl.formula import (AF, AG, AR, AX, EF, EG, EU, EX, And, Atom, Bottom,
                          Const, NegAtom, Or, Top, Var)
from sctl.kripke import ExplicitModel

MUTUAL_MODEL = """\
Model mutual()
{
  Var {
     flag : Bool; mutex : (0 .. 2);
     a : (1 .. 6); b : (1 .. 6);
  }
  Init {
     flag := false; mutex := 0; a := 1; b := 1;
  }
  Transition {
     a = 1 && flag = false : {a := 2;};
     a = 2 : {a := 3; flag := true;};
     /*A has entered the critical section*/
     a = 3 : {a := 4; mutex := mutex + 1;};
     /*A has left the critical section*/
     a = 4 : {a := 5; mutex := mutex - 1;};
     a = 5 : {a := 6;};
     b = 1 && flag = false : {b := 2;};
     b = 2 : {b := 3; flag := true;};
     /*B has entered the critical section*/
     b = 3 : {b := 4; mutex := mutex + 1;};
     /*B has left the critical section*/
     b = 4 : {b := 5; mutex := mutex - 1;};
     b = 5 : {b := 6;};
  }
  Atomic {bug(s) := s(mutex) = 2;}
  Spec{find_bug := EU(x, y, TRUE, bug(y), ini);}
}
"""


@pytest.fixture
def four_state_model():
    """a -> b, c; b -> d; c -> d; d -> d; P = {b, c}; Q = {(b,d), (c,d)}."""
    return ExplicitModel(
        states="abcd",
        edges={"a": ["b", "c"], "b": ["d"], "c": ["d"], "d": ["d"]},
        preds={"P": {"b", "c"}, "Q": {("b", "d"), ("c", "d")}},
        init="a")


@pytest.fixture
def lasso_model():
    """s0 -> s0 | s1; s1 -> s1; P = {s1}."""
    return ExplicitModel(
        states=["s0", "s1"],
        edges={"s0": ["s0", "s1"], "s1": ["s1"]},
        preds={"P": {"s1"}},
        init="s0")


@pytest.fixture
def mutual_text():
    return MUTUAL_MODEL


def random_explicit_model(rng: random.Random, max_states: int = 8,
                          binary_pred: bool = True) -> ExplicitModel:
    n = rng.randint(2, max_states)
    labels = [f"s{i}" for i in range(n)]
    edges = {lab: rng.sample(labels, rng.randint(1, min(3, n))) for lab in labels}
    preds = {
        "P": {lab for lab in labels if rng.random() < 0.5},
        "Q": {lab for lab in labels if rng.random() < 0.5},
    }
    arities = {"P": 1, "Q": 1}
    if binary_pred:
        preds["R"] = {(a, b) for a in labels for b in labels if rng.random() < 0.25}
        arities["R"] = 2
    return ExplicitModel(labels, edges, preds, labels[0], arities=arities)


def random_formula(rng: random.Random, states, depth: int, scope=(),
                   binary_pred: bool = True, sugar: bool = True):
    scope = list(scope)

    def term():
        if scope and rng.random() < 0.6:
            return Var(rng.choice(scope))
        return Const(rng.choice(states))

    def atom():
        if binary_pred and rng.random() < 0.3:
            pred, args = "R", (term(), term())
        else:
            pred, args = rng.choice("PQ"), (term(),)
        return (Atom if rng.random() < 0.5 else NegAtom)(pred, args)

    if depth <= 0:
        return rng.choice([atom, atom, atom, lambda: Top(), lambda: Bottom()])()
    kind = rng.randrange(12 if sugar else 11)
    if kind == 0:
        return Top()
    if kind == 1:
        return Bottom()
    if kind == 2:
        return atom()
    if kind == 3:
        return And(random_formula(rng, states, depth - 1, scope, binary_pred, sugar),
                   random_formula(rng, states, depth - 1, scope, binary_pred, sugar))
    if kind == 4:
        return Or(random_formula(rng, states, depth - 1, scope, binary_pred, sugar),
                  random_formula(rng, states, depth - 1, scope, binary_pred, sugar))
    v = f"x{len(scope)}"
    at = term()
    if kind in (5, 6, 7, 8):
        cls = [AX, EX, AF, EG][kind - 5]
        return cls(v, random_formula(rng, states, depth - 1, scope + [v],
                                     binary_pred, sugar), at)
    w = f"y{len(scope)}"
    b1 = random_formula(rng, states, depth - 1, scope + [v], binary_pred, sugar)
    b2 = random_formula(rng, states, depth - 1, scope + [w], binary_pred, sugar)
    if kind == 9:
        return AR(v, w, b1, b2, at)
    if kind == 10:
        return EU(v, w, b1, b2, at)
    return rng.choice([EF, AG])(v, random_formula(rng, states, depth - 1,
                                                  scope + [v], binary_pred, sugar), at)


def random_closed_formula(rng, model, depth, **kw):
    from sctl.formula import expand_abbrev, free_vars
    reach = model.reachable()
    while True:
        phi = expand_abbrev(random_formula(rng, reach, depth, **kw))
        if not free_vars(phi):
            return phi


# rule swaps that are invalid for structural reasons alone: the goal
# constructor or the premise count can never fit the new tag
_BREAKING_SWAPS = {
    "atom-R": "¬-R", "¬-R": "atom-R", "⊤-R": "atom-R",
    "∧-R": "∨-R1", "∨-R1": "∧-R", "∨-R2": "∧-R",
    "AF-R1": "AF-R2", "AF-R2": "AF-R1",
    "EG-R": "EG-merge", "EG-merge": "EG-R",
    "EU-R1": "EU-R2", "EU-R2": "EU-R1",
    "AR-R-close": "AR-merge", "AR-R-unfold": "AR-R-close",
    "AR-merge": "AR-R-close",
}

# parents that require an exact premise formula, so changing a child's
# state always breaks the link (EX-R and the EG/EU continuations merely
# require membership in Next, where a swap can produce another proof)
_EXACT_PARENTS = {"∧-R", "∨-R1", "∨-R2", "AX-R", "AF-R1", "AF-R2",
                  "EU-R1", "EU-R2", "EG-R", "AR-R-close", "AR-R-unfold"}


def breaking_mutation(rng, tree, model):
    """One single-node edit (state swap, rule swap, or child drop) that is
    guaranteed to damage the derivation; None if this attempt found no
    applicable edit."""
    from sctl.certify import ProofTree, Sequent
    from sctl.formula import Const

    nodes = []

    def collect(n, path, parent_rule, pos):
        nodes.append((n, path, parent_rule, pos))
        for i, ch in enumerate(n.children):
            collect(ch, path + (i,), n.rule, i)

    collect(tree, (), None, 0)

    def rebuild(n, path, repl):
        if not path:
            return repl
        kids = list(n.children)
        kids[path[0]] = rebuild(kids[path[0]], path[1:], repl)
        return ProofTree(n.rule, n.sequent, kids, n.nid)

    node, path, parent_rule, pos = rng.choice(nodes)
    goal = node.sequent.goal
    choice = rng.randrange(3)
    if choice == 0 and node.children:
        kids = list(node.children)
        del kids[rng.randrange(len(kids))]
        return rebuild(tree, path, ProofTree(node.rule, node.sequent, kids, node.nid))
    if choice == 1:
        swap = _BREAKING_SWAPS.get(node.rule)
        if node.rule in ("AX-R", "EX-R"):
            if len(model.next(goal.at.state)) > 1:
                swap = "EX-R" if node.rule == "AX-R" else "AX-R"
            else:
                swap = None
        if swap is None:
            return None
        return rebuild(tree, path,
                       ProofTree(swap, node.sequent, node.children, node.nid))
    # state swap: only at the root (caught against the expected
    # conclusion) or under an exact-match parent
    if parent_rule is not None and parent_rule not in _EXACT_PARENTS:
        return None
    if parent_rule in ("EU-R2", "EG-R") and pos == 1:
        return None
    states = model.reachable()
    if len(states) < 2:
        return None
    if hasattr(goal, "at") and isinstance(goal.at, Const):
        new_state = rng.choice([s for s in states if s != goal.at.state])
        if hasattr(goal, "var"):
            g2 = type(goal)(goal.var, goal.body, Const(new_state))
        else:
            g2 = type(goal)(goal.var1, goal.var2, goal.body1, goal.body2,
                            Const(new_state))
    elif hasattr(goal, "args") and goal.args and isinstance(goal.args[0], Const):
        new_state = rng.choice([s for s in states if s != goal.args[0].state])
        g2 = type(goal)(goal.pred, (Const(new_state),) + goal.args[1:])
    else:
        return None
    return rebuild(tree, path,
                   ProofTree(node.rule, Sequent(node.sequent.gamma, g2),
                             node.children, node.nid))
