"""Proof certificates: construction, independent checking, serialization.

A proof tree carries one rule instance per node.  Successful searches
yield a certificate for the goal; failed ones yield a counterexample,
which is a certificate for the dual formula (one always exists on a
finite model).  Shared subproofs are represented once and referenced,
so certificates stay small on models with converging paths.

The checker knows nothing about the search: it validates each node
against the model and the rule's side conditions, reaccumulating merge
contexts as it descends.
"""

from __future__ import annotations

import contextlib
import json
import sys
from dataclasses import dataclass

from .formula import (AF, AR, AX, EG, EU, EX, And, Atom, Bottom, Const,
                      Formula, NegAtom, Or, Top, canonical, dualize,
                      fmt, from_json, substitute, to_json)
from .kripke import KripkeModel, ModelError


class CertificateError(Exception):
    pass


class TraceMismatch(CertificateError):
    pass


@dataclass(frozen=True)
class Sequent:
    gamma: tuple        # states recorded at construction; display only
    goal: Formula


class ProofTree:
    """rule tag + sequent + premises; children may be shared (a DAG)."""

    __slots__ = ("rule", "sequent", "children", "nid")

    def __init__(self, rule, sequent, children, nid=0):
        self.rule = rule
        self.sequent = sequent
        self.children = tuple(children)
        self.nid = nid

    def __eq__(self, other):
        if not isinstance(other, ProofTree):
            return NotImplemented
        # pair-memoized walk: shared subproofs make naive recursion
        # exponential in the number of converging paths
        done = set()

        def eq(x, y):
            if x is y:
                return True
            key = (id(x), id(y))
            if key in done:
                return True
            if x.rule != y.rule or x.sequent != y.sequent or \
                    len(x.children) != len(y.children):
                return False
            for cx, cy in zip(x.children, y.children):
                if not eq(cx, cy):
                    return False
            done.add(key)
            return True

        with _deep_recursion():
            return eq(self, other)

    __hash__ = object.__hash__

    def __repr__(self):
        return f"ProofTree({self.rule}, {self.sequent.goal!r}, {len(self.children)} children)"


@dataclass
class CheckReport:
    valid: bool
    failure: tuple | None = None    # (path from root, reason)


@contextlib.contextmanager
def _deep_recursion(limit: int = 200_000):
    old = sys.getrecursionlimit()
    if old < limit:
        sys.setrecursionlimit(limit)
    try:
        yield
    finally:
        sys.setrecursionlimit(old)


ZERO_PREMISE_RULES = {"atom-R", "¬-R", "⊤-R", "EG-merge", "AR-merge"}


class _Builder:
    """Deterministic proof construction mirroring the engine's search order.

    Keeps per-skeleton merge stacks; memoizes verdicts under the same
    context-freedom rules as the engine and reuses proof fragments only
    when their internal merges cannot dangle outside the fragment.
    """

    def __init__(self, model):
        self.model = model
        self.counter = 0
        self._entries = {}

    def _entry(self, goal):
        kind = type(goal).__name__
        if isinstance(goal, (AF, EG)):
            ck = (kind, goal.var, id(goal.body))
            pin = (goal.body,)
        else:
            ck = (kind, goal.var1, goal.var2, id(goal.body1), id(goal.body2))
            pin = (goal.body1, goal.body2)
        e = self._entries.get(ck)
        if e is None:
            # pinning the bodies keeps their ids from being recycled
            e = {"kind": kind, "pin": pin, "stack": [], "pos": {},
                 "verdict": {}, "frag": {}, "mt": [], "parked": []}
            self._entries[ck] = e
        return e

    def _nid(self):
        nid = self.counter
        self.counter += 1
        return nid

    def build(self, goal) -> ProofTree | None:
        nid = self._nid()
        cls = type(goal)
        if cls is Top:
            return ProofTree("⊤-R", Sequent((), goal), (), nid)
        if cls is Bottom:
            return None
        if cls is Atom:
            ok = self.model.eval_atom(goal.pred, tuple(a.state for a in goal.args))
            return ProofTree("atom-R", Sequent((), goal), (), nid) if ok else None
        if cls is NegAtom:
            ok = not self.model.eval_atom(goal.pred, tuple(a.state for a in goal.args))
            return ProofTree("¬-R", Sequent((), goal), (), nid) if ok else None
        if cls is And:
            lhs = self.build(goal.lhs)
            if lhs is None:
                return None
            rhs = self.build(goal.rhs)
            if rhs is None:
                return None
            return ProofTree("∧-R", Sequent((), goal), (lhs, rhs), nid)
        if cls is Or:
            lhs = self.build(goal.lhs)
            if lhs is not None:
                return ProofTree("∨-R1", Sequent((), goal), (lhs,), nid)
            rhs = self.build(goal.rhs)
            if rhs is not None:
                return ProofTree("∨-R2", Sequent((), goal), (rhs,), nid)
            return None
        if cls is AX:
            s = goal.at.state
            children = []
            for si in self.model.next(s):
                c = self.build(substitute(Const(si), goal.var, goal.body))
                if c is None:
                    return None
                children.append(c)
            return ProofTree("AX-R", Sequent((), goal), children, nid)
        if cls is EX:
            s = goal.at.state
            for si in self.model.next(s):
                c = self.build(substitute(Const(si), goal.var, goal.body))
                if c is not None:
                    return ProofTree("EX-R", Sequent((), goal), (c,), nid)
            return None
        if cls in (AF, EG):
            return self._modal1(goal, nid)
        if cls in (EU, AR):
            return self._modal2(goal, nid)
        raise TypeError(f"not a core formula: {goal!r}")

    def _modal1(self, goal, nid):
        e = self._entry(goal)
        kind = e["kind"]
        s = goal.at.state
        known = e["verdict"].get(s)
        gamma = tuple(e["stack"])

        if s in e["pos"]:
            # merge: success for EG, abandoned branch for AF
            if kind == "EG":
                self._note_merge(e, s)
                return ProofTree("EG-merge", Sequent(gamma, goal), (), nid)
            return None
        if known is False:
            return None
        if known is True:
            frag = e["frag"].get(s)
            if frag is None:
                frag = self._rebuild(goal, e, s)
            return frag

        self._push(e, s)
        succs = self.model.next(s)
        verdict = False
        tree = None
        probe = self.build(substitute(Const(s), goal.var, goal.body))
        if kind == "AF":
            if probe is not None:
                verdict, tree = True, ProofTree("AF-R1", Sequent((), goal), (probe,), nid)
            else:
                children = []
                for si in succs:
                    c = self.build(type(goal)(goal.var, goal.body, Const(si)))
                    if c is None:
                        children = None
                        break
                    children.append(c)
                if children is not None:
                    verdict, tree = True, ProofTree("AF-R2", Sequent((), goal), children, nid)
        else:   # EG
            if probe is not None:
                for si in succs:
                    c = self.build(type(goal)(goal.var, goal.body, Const(si)))
                    if c is not None:
                        verdict = True
                        tree = ProofTree("EG-R", Sequent(gamma, goal), (probe, c), nid)
                        break
        self._pop(e, s, verdict, tree)
        return tree

    def _modal2(self, goal, nid):
        e = self._entry(goal)
        kind = e["kind"]
        s = goal.at.state
        known = e["verdict"].get(s)
        gamma = tuple(e["stack"])

        if s in e["pos"]:
            if kind == "AR":
                self._note_merge(e, s)
                return ProofTree("AR-merge", Sequent(gamma, goal), (), nid)
            self._note_merge(e, s)
            return None     # EU loop pruning
        if known is False:
            return None
        if known is True:
            frag = e["frag"].get(s)
            if frag is None:
                frag = self._rebuild(goal, e, s)
            return frag

        self._push(e, s)
        succs = self.model.next(s)
        verdict = False
        tree = None
        p2 = self.build(substitute(Const(s), goal.var2, goal.body2))
        if kind == "EU":
            if p2 is not None:
                verdict, tree = True, ProofTree("EU-R1", Sequent((), goal), (p2,), nid)
            else:
                p1 = self.build(substitute(Const(s), goal.var1, goal.body1))
                if p1 is not None:
                    for si in succs:
                        c = self.build(EU(goal.var1, goal.var2, goal.body1,
                                          goal.body2, Const(si)))
                        if c is not None:
                            verdict = True
                            tree = ProofTree("EU-R2", Sequent((), goal), (p1, c), nid)
                            break
        else:   # AR
            if p2 is not None:
                p1 = self.build(substitute(Const(s), goal.var1, goal.body1))
                if p1 is not None:
                    verdict, tree = True, ProofTree(
                        "AR-R-close", Sequent((), goal), (p1, p2), nid)
                else:
                    children = [p2]
                    for si in succs:
                        c = self.build(AR(goal.var1, goal.var2, goal.body1,
                                          goal.body2, Const(si)))
                        if c is None:
                            children = None
                            break
                        children.append(c)
                    if children is not None:
                        verdict = True
                        tree = ProofTree("AR-R-unfold", Sequent(gamma, goal), children, nid)
        self._pop(e, s, verdict, tree)
        return tree

    def _rebuild(self, goal, e, s):
        """Fragment for a settled-true state that lacks one: re-derive it
        in an isolated context so internal merges stay self-contained."""
        saved = (e["stack"], e["pos"], e["mt"], e["parked"])
        e["stack"], e["pos"], e["mt"], e["parked"] = [], {}, [], []
        del e["verdict"][s]
        try:
            tree = self.build(goal)
        finally:
            e["stack"], e["pos"], e["mt"], e["parked"] = saved
        if tree is None:
            raise CertificateError(f"settled-true goal failed to re-derive: {goal!r}")
        return tree

    def _push(self, e, s):
        e["pos"][s] = len(e["stack"])
        e["stack"].append(s)
        e["mt"].append(float("inf"))
        e["parked"].append([])

    def _note_merge(self, e, s):
        e["mt"][-1] = min(e["mt"][-1], e["pos"][s])

    def _pop(self, e, s, verdict, tree):
        # same component accounting as the engine's visited store: a pop
        # with mt >= depth closes a strongly connected component of the
        # explored subgraph and settles every state parked inside it
        e["stack"].pop()
        depth = e["pos"].pop(s)
        mt = e["mt"].pop()
        park = e["parked"].pop()
        scc_root = mt >= depth
        kind = e["kind"]
        if not scc_root and mt < e["mt"][-1]:
            e["mt"][-1] = mt            # fold the lowlink upward
        # AF/EU trees never contain merge nodes, so their fragments are
        # reusable anywhere; EG/AR fragments only when their merges stay
        # inside the fragment
        if verdict and tree is not None and (kind in ("AF", "EU") or scc_root):
            e["frag"][s] = tree
        if kind in ("AF", "EG"):
            e["verdict"][s] = verdict
            return
        if scc_root:
            e["verdict"][s] = verdict
            for y in park:
                e["verdict"][y] = verdict
            return
        e["parked"][-1].extend(park)
        if (kind == "EU") == verdict:   # own witness in hand
            e["verdict"][s] = verdict
        else:
            e["parked"][-1].append(s)


def build_proof(model: KripkeModel, phi: Formula) -> ProofTree | None:
    """Search for a proof of the closed core formula phi."""
    with _deep_recursion():
        return _Builder(model).build(phi)


def reconstruct_proof(model: KripkeModel, phi: Formula, trace) -> ProofTree:
    """Rebuild the proof tree for a provable phi from a recorded trace.

    The trace validates the claim (its first event must open the search
    for phi and the search must have succeeded); the tree itself is
    re-derived by the deterministic builder, which follows the same
    rule and successor order as the engine that produced the trace.
    """
    if not trace:
        raise TraceMismatch("empty trace")
    first, last = trace[0], trace[-1]
    if first[0] != "goal" or canonical(first[1]) != canonical(phi):
        raise TraceMismatch(f"trace does not open the search for {fmt(phi)}")
    if last[0] != "result":
        raise TraceMismatch("trace is truncated (no final verdict); "
                            "record with trace enabled, not the bounded ring")
    if last[1] is not True:
        raise TraceMismatch("trace records a negative verdict")
    tree = build_proof(model, phi)
    if tree is None:
        raise TraceMismatch("trace claims provable but the goal has no proof")
    return tree


class ProvableError(CertificateError):
    """counterexample() called on a provable formula."""


class InternalInconsistency(CertificateError):
    """Neither the formula nor its dual is provable; impossible on finite models."""


def counterexample(model: KripkeModel, phi: Formula) -> ProofTree:
    """A checkable proof of the dual of a non-provable phi."""
    if build_proof(model, phi) is not None:
        raise ProvableError("formula is provable; no counterexample exists")
    tree = build_proof(model, dualize(phi))
    if tree is None:
        raise InternalInconsistency(
            "dual formula also unprovable; finite-model duality violated")
    return tree


# --- checking ----------------------------------------------------------------

def check_proof(model: KripkeModel, proof: ProofTree,
                expect_goal: Formula | None = None) -> CheckReport:
    """Validate every node against the model and the rule side conditions.

    Merge contexts are reaccumulated during the walk (the stored gamma
    fields are display data).  If expect_goal is given, the root must
    conclude exactly that sequent.
    """
    if expect_goal is not None and canonical(proof.sequent.goal) != canonical(expect_goal):
        return CheckReport(False, ((), "conclusion differs from the expected goal"))

    def fail(path, reason):
        return CheckReport(False, (tuple(path), reason))

    def walk(node, ctx_key, ctx_states, path, seen):
        memo_key = (id(node), ctx_key, ctx_states)
        status = seen.get(memo_key)
        if status == "done":
            return None
        if status == "open":
            return fail(path, "cyclic proof structure")
        seen[memo_key] = "open"
        result = _walk1(node, ctx_key, ctx_states, path, seen)
        seen[memo_key] = "done"
        return result

    def _walk1(node, ctx_key, ctx_states, path, seen):
        goal = node.sequent.goal
        rule = node.rule
        kids = node.children
        if rule in ZERO_PREMISE_RULES and kids:
            return fail(path, f"{rule} takes no premises")

        def child(i, sub, key=None, states=()):
            c = kids[i]
            if canonical(c.sequent.goal) != canonical(sub):
                return fail(path + [i], f"premise {i} proves {fmt(c.sequent.goal)}, "
                                        f"rule needs {fmt(sub)}")
            return walk(c, key, states, path + [i], seen)

        try:
            if rule == "⊤-R":
                return None if isinstance(goal, Top) else fail(path, "⊤-R on non-⊤ goal")
            if rule == "atom-R":
                if not isinstance(goal, Atom):
                    return fail(path, "atom-R on non-atomic goal")
                if not all(isinstance(a, Const) for a in goal.args):
                    return fail(path, "atom-R with unresolved arguments")
                if not model.eval_atom(goal.pred, tuple(a.state for a in goal.args)):
                    return fail(path, "tuple not in the predicate")
                return None
            if rule == "¬-R":
                if not isinstance(goal, NegAtom):
                    return fail(path, "¬-R on non-negated-atom goal")
                if not all(isinstance(a, Const) for a in goal.args):
                    return fail(path, "¬-R with unresolved arguments")
                if model.eval_atom(goal.pred, tuple(a.state for a in goal.args)):
                    return fail(path, "tuple is in the predicate")
                return None
            if rule == "∧-R":
                if not isinstance(goal, And) or len(kids) != 2:
                    return fail(path, "∧-R needs an ∧ goal and two premises")
                return child(0, goal.lhs) or child(1, goal.rhs)
            if rule == "∨-R1":
                if not isinstance(goal, Or) or len(kids) != 1:
                    return fail(path, "∨-R1 needs an ∨ goal and one premise")
                return child(0, goal.lhs)
            if rule == "∨-R2":
                if not isinstance(goal, Or) or len(kids) != 1:
                    return fail(path, "∨-R2 needs an ∨ goal and one premise")
                return child(0, goal.rhs)
            if rule == "AX-R":
                if not isinstance(goal, AX):
                    return fail(path, "AX-R on wrong goal")
                succs = model.next(goal.at.state)
                if len(kids) != len(succs):
                    return fail(path, "premises do not cover Next(s)")
                for i, si in enumerate(succs):
                    r = child(i, substitute(Const(si), goal.var, goal.body))
                    if r:
                        return r
                return None
            if rule == "EX-R":
                if not isinstance(goal, EX) or len(kids) != 1:
                    return fail(path, "EX-R needs one premise")
                succs = model.next(goal.at.state)
                ck = canonical(kids[0].sequent.goal)
                for si in succs:
                    if ck == canonical(substitute(Const(si), goal.var, goal.body)):
                        return walk(kids[0], None, (), path + [0], seen)
                return fail(path, "premise state is not a successor")
            if rule == "AF-R1":
                if not isinstance(goal, AF) or len(kids) != 1:
                    return fail(path, "AF-R1 needs one premise")
                return child(0, substitute(Const(goal.at.state), goal.var, goal.body))
            if rule == "AF-R2":
                if not isinstance(goal, AF):
                    return fail(path, "AF-R2 on wrong goal")
                succs = model.next(goal.at.state)
                if len(kids) != len(succs):
                    return fail(path, "premises do not cover Next(s)")
                for i, si in enumerate(succs):
                    r = child(i, AF(goal.var, goal.body, Const(si)))
                    if r:
                        return r
                return None
            if rule == "EG-R":
                if not isinstance(goal, EG) or len(kids) != 2:
                    return fail(path, "EG-R needs two premises")
                s = goal.at.state
                r = child(0, substitute(Const(s), goal.var, goal.body))
                if r:
                    return r
                succs = model.next(s)
                skel = canonical(EG(goal.var, goal.body, Const(-1)))[2]
                ck = kids[1].sequent.goal
                if not isinstance(ck, EG) or \
                        canonical(EG(ck.var, ck.body, Const(-1)))[2] != skel:
                    return fail(path + [1], "EG-R premise changes the formula")
                if ck.at.state not in succs:
                    return fail(path + [1], "EG-R premise state is not a successor")
                key = ("EG", skel)
                if ctx_key == key:
                    states = ctx_states + (s,)
                else:
                    states = (s,)
                return walk(kids[1], key, states, path + [1], seen)
            if rule == "EG-merge":
                if not isinstance(goal, EG):
                    return fail(path, "EG-merge on wrong goal")
                skel = canonical(EG(goal.var, goal.body, Const(-1)))[2]
                if ctx_key != ("EG", skel) or goal.at.state not in ctx_states:
                    return fail(path, "merge without prior occurrence")
                return None
            if rule == "AR-merge":
                if not isinstance(goal, AR):
                    return fail(path, "AR-merge on wrong goal")
                skel = _ar_skel(goal)
                if ctx_key != ("AR", skel) or goal.at.state not in ctx_states:
                    return fail(path, "merge without prior occurrence")
                return None
            if rule == "AR-R-close":
                if not isinstance(goal, AR) or len(kids) != 2:
                    return fail(path, "AR-R-close needs two premises")
                s = goal.at.state
                return (child(0, substitute(Const(s), goal.var1, goal.body1)) or
                        child(1, substitute(Const(s), goal.var2, goal.body2)))
            if rule == "AR-R-unfold":
                if not isinstance(goal, AR):
                    return fail(path, "AR-R-unfold on wrong goal")
                s = goal.at.state
                succs = model.next(s)
                if len(kids) != 1 + len(succs):
                    return fail(path, "premises do not cover Next(s)")
                r = child(0, substitute(Const(s), goal.var2, goal.body2))
                if r:
                    return r
                skel = _ar_skel(goal)
                key = ("AR", skel)
                states = ctx_states + (s,) if ctx_key == key else (s,)
                for i, si in enumerate(succs):
                    c = kids[i + 1]
                    want = AR(goal.var1, goal.var2, goal.body1, goal.body2, Const(si))
                    if canonical(c.sequent.goal) != canonical(want):
                        return fail(path + [i + 1], "premise does not match successor")
                    r = walk(c, key, states, path + [i + 1], seen)
                    if r:
                        return r
                return None
            if rule == "EU-R1":
                if not isinstance(goal, EU) or len(kids) != 1:
                    return fail(path, "EU-R1 needs one premise")
                s = goal.at.state
                return child(0, substitute(Const(s), goal.var2, goal.body2))
            if rule == "EU-R2":
                if not isinstance(goal, EU) or len(kids) != 2:
                    return fail(path, "EU-R2 needs two premises")
                s = goal.at.state
                r = child(0, substitute(Const(s), goal.var1, goal.body1))
                if r:
                    return r
                succs = model.next(s)
                ck = kids[1].sequent.goal
                want_skel = canonical(EU(goal.var1, goal.var2, goal.body1,
                                         goal.body2, Const(-1)))
                if not isinstance(ck, EU) or \
                        canonical(EU(ck.var1, ck.var2, ck.body1, ck.body2,
                                     Const(-1))) != want_skel:
                    return fail(path + [1], "EU-R2 premise changes the formula")
                if ck.at.state not in succs:
                    return fail(path + [1], "EU-R2 premise state is not a successor")
                return walk(kids[1], None, (), path + [1], seen)
            return fail(path, f"unknown rule {rule!r}")
        except ModelError as exc:
            return fail(path, f"model error: {exc}")

    with _deep_recursion():
        bad = walk(proof, None, (), [], {})
    return bad if bad is not None else CheckReport(True, None)


def _ar_skel(goal):
    return canonical(AR(goal.var1, goal.var2, goal.body1, goal.body2, Const(-1)))[2:]


# --- rendering ---------------------------------------------------------------

def render_proof(proof: ProofTree, fmt_name: str = "paper", model=None) -> str:
    with _deep_recursion():
        if fmt_name == "paper":
            return _render_paper(proof, model)
        if fmt_name == "machine":
            return _render_machine(proof)
    raise ValueError(f"unknown proof format {fmt_name!r}")


def _display_children(node):
    """Premise order in the numbered format: continuation first for EU-R2."""
    if node.rule == "EU-R2":
        return (node.children[1], node.children[0])
    return node.children


def _render_paper(proof, model):
    state_text = model.state_text if model is not None else None
    gammas = {}
    seen = set()

    def assign(node, gamma):
        if id(node) in seen:
            return
        seen.add(id(node))
        gammas[id(node)] = gamma
        goal = node.sequent.goal
        grown = gamma + (goal.at.state,) if hasattr(goal, "at") else gamma
        for i, c in enumerate(node.children):
            if node.rule in ("EG-R", "AF-R2", "AR-R-unfold", "EU-R2"):
                recursive = (node.rule in ("AF-R2",) or
                             (node.rule == "EG-R" and i == 1) or
                             (node.rule == "AR-R-unfold" and i >= 1) or
                             (node.rule == "EU-R2" and i == 1))
                assign(c, grown if recursive else ())
            else:
                assign(c, ())

    assign(proof, ())

    lines = []
    printed = set()
    queue = [proof]
    while queue:
        node = queue.pop(0)
        if node.nid in printed:
            continue
        printed.add(node.nid)
        kids = _display_children(node)
        queue.extend(kids)
        ids = ", ".join(str(c.nid) for c in kids)
        st = state_text or (lambda s: f"#{s}")
        gamma = gammas.get(id(node), ())
        head = f"{node.nid}: "
        if gamma:
            parts = [st(s) for s in gamma]
            head += parts[0]
            for p in parts[1:]:
                head += "\n   " + p
            head += "\n"
            head += f"|- {fmt(node.sequent.goal, state_text)}\t[{ids}]"
        else:
            head += f"|- {fmt(node.sequent.goal, state_text)}\t[{ids}]"
        lines.append(head)
    return "\n".join(lines) + "\n"


def _render_machine(proof):
    nodes = {}
    order = []

    def visit(node):
        if node.nid in nodes:
            return
        nodes[node.nid] = node
        order.append(node.nid)
        for c in node.children:
            visit(c)

    visit(proof)
    payload = {
        "format": "sctl-proof",
        "root": proof.nid,
        "nodes": [
            {
                "id": nid,
                "rule": nodes[nid].rule,
                "gamma": list(nodes[nid].sequent.gamma),
                "goal": to_json(nodes[nid].sequent.goal),
                "children": [c.nid for c in nodes[nid].children],
            }
            for nid in order
        ],
    }
    return json.dumps(payload, indent=1)


def parse_proof(text: str) -> ProofTree:
    """Invert render_proof(..., "machine")."""
    payload = json.loads(text)
    if payload.get("format") != "sctl-proof":
        raise CertificateError("not a machine proof file")
    raw = {n["id"]: n for n in payload["nodes"]}
    built = {}

    def build(nid):
        if nid in built:
            return built[nid]
        n = raw[nid]
        children = tuple(build(c) for c in n["children"])
        node = ProofTree(n["rule"],
                         Sequent(tuple(n["gamma"]), from_json(n["goal"])),
                         children, nid)
        built[nid] = node
        return node

    with _deep_recursion():
        return build(payload["root"])
