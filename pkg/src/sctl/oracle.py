"""Brute-force semantic validity over the enumerated reachable state space.

Each connective is evaluated by its defining clause: successor
quantification for AX/EX, a least fixpoint for AF/EU, a greatest
fixpoint for EG/AR.  Fixpoints run as linear-time worklist passes over
the predecessor lists.  The fair variant restricts path quantifiers to
fair paths via strongly-connected-component analysis: a fair state is
one that reaches a cycle-bearing SCC containing a witness for every
constraint.

This module is the ground truth the search engine is tested against;
it shares no code with the engine beyond the formula syntax.
"""

from __future__ import annotations

from .formula import (AF, AX, EG, EU, EX, And, Atom, Bottom, Const, Formula,
                      NegAtom, Or, Top, canonical, dualize, expand_abbrev,
                      free_vars, substitute)
from .kripke import KripkeModel


class Oracle:
    def __init__(self, model: KripkeModel, state_bound: int = 1 << 20):
        self.model = model
        self.states = model.reachable(state_bound)
        self.succ = {s: list(model.next(s)) for s in self.states}
        self.preds = {s: [] for s in self.states}
        for s, outs in self.succ.items():
            for t in outs:
                self.preds[t].append(s)
        self._memo = {}
        self._sets = {}
        self._fair_memo = {}
        self._fair_sets = {}
        self._fair_states = {}

    # --- plain semantics ---

    def valid(self, phi: Formula, env: dict | None = None) -> bool:
        return self._eval(self._ground(phi, env))

    def _ground(self, phi, env):
        phi = expand_abbrev(phi)
        for name, state in (env or {}).items():
            phi = substitute(Const(state), name, phi)
        fv = free_vars(phi)
        if fv:
            raise ValueError(f"unbound variables: {sorted(fv)}")
        return phi

    def _eval(self, phi) -> bool:
        key = canonical(phi)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        res = self._eval1(phi)
        self._memo[key] = res
        return res

    def _eval1(self, phi) -> bool:
        m = self.model
        cls = type(phi)
        if cls is Top:
            return True
        if cls is Bottom:
            return False
        if cls is Atom:
            return m.eval_atom(phi.pred, tuple(a.state for a in phi.args))
        if cls is NegAtom:
            return not m.eval_atom(phi.pred, tuple(a.state for a in phi.args))
        if cls is And:
            return self._eval(phi.lhs) and self._eval(phi.rhs)
        if cls is Or:
            return self._eval(phi.lhs) or self._eval(phi.rhs)
        if cls is AX:
            return all(self._eval(substitute(Const(t), phi.var, phi.body))
                       for t in self.succ[phi.at.state])
        if cls is EX:
            return any(self._eval(substitute(Const(t), phi.var, phi.body))
                       for t in self.succ[phi.at.state])
        return phi.at.state in self._modal_set(phi)

    def _pointwise(self, var, body):
        """Closure evaluating a modality-free body per state, avoiding
        per-state substitution; None when the body needs the general path."""
        m = self.model
        cls = type(body)
        if cls is Top:
            return lambda u: True
        if cls is Bottom:
            return lambda u: False
        if cls in (Atom, NegAtom):
            pred = body.pred
            spots = []
            for a in body.args:
                if isinstance(a, Const):
                    spots.append(a.state)
                elif a.name == var:
                    spots.append(None)
                else:
                    return None
            neg = cls is NegAtom

            def at(u, _spots=tuple(spots)):
                args = tuple(u if x is None else x for x in _spots)
                got = m.eval_atom(pred, args)
                return not got if neg else got
            return at
        if cls in (And, Or):
            lhs = self._pointwise(var, body.lhs)
            rhs = self._pointwise(var, body.rhs)
            if lhs is None or rhs is None:
                return None
            if cls is And:
                return lambda u: lhs(u) and rhs(u)
            return lambda u: lhs(u) or rhs(u)
        return None

    def _body_set(self, var, body) -> set:
        fast = self._pointwise(var, body)
        if fast is not None:
            return {u for u in self.states if fast(u)}
        return {u for u in self.states
                if self._eval(substitute(Const(u), var, body))}

    def _modal_set(self, phi) -> set:
        cls = type(phi)
        if cls in (AF, EG):
            key = (cls.__name__, canonical(body_key(phi.var, phi.body)))
            hit = self._sets.get(key)
            if hit is None:
                f = self._body_set(phi.var, phi.body)
                hit = self._af_set(f) if cls is AF else self._eg_set(f)
                self._sets[key] = hit
            return hit
        key = (cls.__name__,
               canonical(body_key(phi.var1, phi.body1)),
               canonical(body_key(phi.var2, phi.body2)))
        hit = self._sets.get(key)
        if hit is None:
            f1 = self._body_set(phi.var1, phi.body1)
            f2 = self._body_set(phi.var2, phi.body2)
            hit = self._eu_set(f1, f2) if cls is EU else self._ar_set(f1, f2)
            self._sets[key] = hit
        return hit

    def _af_set(self, f: set) -> set:
        """Least fixpoint of Z = f OR (all successors in Z)."""
        result = set(f)
        count = {u: len(self.succ[u]) for u in self.states}
        queue = list(result)
        while queue:
            u = queue.pop()
            for p in self.preds[u]:
                count[p] -= 1
                if count[p] == 0 and p not in result:
                    result.add(p)
                    queue.append(p)
        return result

    def _eg_set(self, f: set) -> set:
        """Greatest fixpoint of Z = f AND (some successor in Z)."""
        z = set(f)
        alive = {u: sum(1 for t in self.succ[u] if t in z) for u in z}
        queue = [u for u in z if alive[u] == 0]
        while queue:
            u = queue.pop()
            z.discard(u)
            for p in self.preds[u]:
                if p in z:
                    alive[p] -= 1
                    if alive[p] == 0:
                        queue.append(p)
        return z

    def _eu_set(self, f1: set, f2: set) -> set:
        """Least fixpoint of Z = f2 OR (f1 AND some successor in Z)."""
        result = set(f2)
        queue = list(result)
        while queue:
            u = queue.pop()
            for p in self.preds[u]:
                if p in f1 and p not in result:
                    result.add(p)
                    queue.append(p)
        return result

    def _ar_set(self, f1: set, f2: set) -> set:
        """Greatest fixpoint of Z = f2 AND (f1 OR all successors in Z)."""
        z = set(f2)
        out = {u: sum(1 for t in self.succ[u] if t not in z) for u in z}
        queue = [u for u in z if u not in f1 and out[u] > 0]
        while queue:
            u = queue.pop()
            if u not in z:
                continue
            z.discard(u)
            for p in self.preds[u]:
                if p in z:
                    out[p] += 1
                    if p not in f1:
                        queue.append(p)
        return z

    # --- fair semantics ---

    def valid_fair(self, phi: Formula, constraints, env: dict | None = None) -> bool:
        cons = _normalize(constraints)
        if not cons:
            return self.valid(phi, env)
        return self._feval(self._ground(phi, env), cons)

    def _constraint_sets(self, cons):
        key = tuple(canonical(body_key(v, f)) for v, f in cons)
        hit = self._fair_states.get(("sets", key))
        if hit is None:
            hit = [self._body_set(v, f) for v, f in cons]
            self._fair_states[("sets", key)] = hit
        return key, hit

    def fair_states(self, cons) -> set:
        """States from which some fair path starts."""
        key, csets = self._constraint_sets(cons)
        hit = self._fair_states.get(key)
        if hit is None:
            hit = self._ecg_set(set(self.states), csets)
            self._fair_states[key] = hit
        return hit

    def _ecg_set(self, f: set, csets) -> set:
        """States with a fair all-`f` path: reach, inside f, a cycle-bearing
        SCC of f that intersects every constraint set."""
        sccs = _tarjan(f, self.succ)
        good = set()
        for comp in sccs:
            compset = set(comp)
            has_cycle = len(comp) > 1 or any(
                t == comp[0] for t in self.succ[comp[0]])
            if not has_cycle:
                continue
            if all(compset & cs for cs in csets):
                good |= compset
        # backward closure through f
        result = set(good)
        queue = list(good)
        while queue:
            u = queue.pop()
            for p in self.preds[u]:
                if p in f and p not in result:
                    result.add(p)
                    queue.append(p)
        return result

    def _feval(self, phi, cons) -> bool:
        key = (canonical(phi), tuple(canonical(body_key(v, f)) for v, f in cons))
        hit = self._fair_memo.get(key)
        if hit is not None:
            return hit
        res = self._feval1(phi, cons)
        self._fair_memo[key] = res
        return res

    def _feval1(self, phi, cons) -> bool:
        m = self.model
        cls = type(phi)
        if cls is Top:
            return True
        if cls is Bottom:
            return False
        if cls is Atom:
            return m.eval_atom(phi.pred, tuple(a.state for a in phi.args))
        if cls is NegAtom:
            return not m.eval_atom(phi.pred, tuple(a.state for a in phi.args))
        if cls is And:
            return self._feval(phi.lhs, cons) and self._feval(phi.rhs, cons)
        if cls is Or:
            return self._feval(phi.lhs, cons) or self._feval(phi.rhs, cons)
        fair = self.fair_states(cons)
        if cls is EX:
            return any(t in fair and
                       self._feval(substitute(Const(t), phi.var, phi.body), cons)
                       for t in self.succ[phi.at.state])
        if cls is AX:
            return all(t not in fair or
                       self._feval(substitute(Const(t), phi.var, phi.body), cons)
                       for t in self.succ[phi.at.state])
        return phi.at.state in self._fair_modal_set(phi, cons)

    def _fbody_set(self, var, body, cons) -> set:
        # fair and plain semantics agree on modality-free bodies
        fast = self._pointwise(var, body)
        if fast is not None:
            return {u for u in self.states if fast(u)}
        return {u for u in self.states
                if self._feval(substitute(Const(u), var, body), cons)}

    def _fair_modal_set(self, phi, cons) -> set:
        ckey, csets = self._constraint_sets(cons)
        cls = type(phi)
        if cls in (AF, EG):
            key = (cls.__name__, ckey, canonical(body_key(phi.var, phi.body)))
            hit = self._fair_sets.get(key)
            if hit is None:
                if cls is EG:
                    f = self._fbody_set(phi.var, phi.body, cons)
                    hit = self._ecg_set(f, csets)
                else:
                    # fair AF: no fair path avoids the body forever
                    f = self._fbody_set(phi.var, dualize(phi.body), cons)
                    hit = set(self.states) - self._ecg_set(f, csets)
                self._fair_sets[key] = hit
            return hit
        key = (cls.__name__, ckey,
               canonical(body_key(phi.var1, phi.body1)),
               canonical(body_key(phi.var2, phi.body2)))
        hit = self._fair_sets.get(key)
        if hit is None:
            fair = self.fair_states(cons)
            if cls is EU:
                f1 = self._fbody_set(phi.var1, phi.body1, cons)
                f2 = self._fbody_set(phi.var2, phi.body2, cons)
                hit = self._eu_set(f1, f2 & fair)
            else:
                f1 = self._fbody_set(phi.var1, phi.body1, cons)
                f2 = self._fbody_set(phi.var2, phi.body2, cons)
                hit = self._ar_set(f1, f2 | (set(self.states) - fair))
            self._fair_sets[key] = hit
        return hit


def body_key(var, body):
    """A formula standing for `body` with its binder, anchor erased."""
    return EG(var, body, Const(-1))


def _normalize(constraints):
    out = []
    for c in constraints:
        if isinstance(c, tuple):
            out.append(c)
            continue
        fv = sorted(free_vars(c))
        if len(fv) != 1:
            raise ValueError(
                f"fairness constraint must have exactly one free variable, got {fv}")
        out.append((fv[0], expand_abbrev(c)))
    return out


def _tarjan(nodes: set, succ) -> list[list]:
    """Iterative Tarjan SCC over the subgraph induced by `nodes`."""
    index = {}
    low = {}
    on_stack = set()
    stack = []
    sccs = []
    counter = [0]

    for root in nodes:
        if root in index:
            continue
        work = [(root, iter([t for t in succ[root] if t in nodes]))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter([t for t in succ[w] if t in nodes])))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                pv = work[-1][0]
                low[pv] = min(low[pv], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                sccs.append(comp)
    return sccs


def valid(model: KripkeModel, phi: Formula, env: dict | None = None,
          state_bound: int = 1 << 20) -> bool:
    return Oracle(model, state_bound).valid(phi, env)


def valid_fair(model: KripkeModel, phi: Formula, constraints,
               env: dict | None = None, state_bound: int = 1 << 20) -> bool:
    return Oracle(model, state_bound).valid_fair(phi, constraints, env)
