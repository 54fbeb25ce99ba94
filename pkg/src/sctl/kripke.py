"""Finite Kripke models: state interning, successor relation, atomic predicates.

Two concrete model kinds share one interface:

* ExplicitModel -- enumerated states, adjacency lists and predicate
  extensions given as literal sets; used for small hand-built models
  and as the oracle's test bed.
* CompiledModel -- built from a parsed guarded-command program
  (ModelDef); states are interned variable valuations, successors are
  computed on the fly, one enabled transition rule per step.

States are opaque integer ids; two states are equal iff their payloads
are equal (guaranteed by interning).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field


class ModelError(Exception):
    """Static or runtime model fault (range violation, bad declaration)."""


class ResourceLimit(ModelError):
    """A configured exploration bound was hit; not a verdict."""


@dataclass(frozen=True)
class BoolType:
    def contains(self, v):
        return isinstance(v, bool)

    def __str__(self):
        return "Bool"


@dataclass(frozen=True)
class RangeType:
    lo: int
    hi: int

    def contains(self, v):
        return isinstance(v, int) and not isinstance(v, bool) and self.lo <= v <= self.hi

    def __str__(self):
        return f"({self.lo} .. {self.hi})"


@dataclass
class AtomicDef:
    name: str
    params: list[str]
    body: object  # expression AST from the frontend


@dataclass
class ModelDef:
    """Parsed source program; input to compile()."""
    name: str
    vars: list[tuple[str, object]]          # (name, BoolType | RangeType)
    init: dict[str, object]                 # var -> expression AST
    transitions: list[tuple[object, list[tuple[str, object]]]]
    atomics: list[AtomicDef]
    specs: list[tuple[str, object]] = field(default_factory=list)
    fairness: list[tuple[str, object]] = field(default_factory=list)  # (var, formula)


class KripkeModel:
    """Interface shared by explicit and compiled models."""

    init: int

    def next(self, s: int) -> list[int]:
        raise NotImplementedError

    def eval_atom(self, pred: str, args: tuple[int, ...]) -> bool:
        raise NotImplementedError

    def arity(self, pred: str) -> int:
        raise NotImplementedError

    def state_text(self, s: int) -> str:
        raise NotImplementedError

    def state_count(self) -> int:
        """States interned so far (upper bound on what the search touched)."""
        raise NotImplementedError

    def reachable(self, bound: int = 1 << 20) -> list[int]:
        """BFS enumeration from init; raises ResourceLimit past `bound` states."""
        seen = {self.init}
        order = [self.init]
        queue = [self.init]
        while queue:
            nxt = []
            for s in queue:
                for t in self.next(s):
                    if t not in seen:
                        seen.add(t)
                        order.append(t)
                        nxt.append(t)
                        if len(seen) > bound:
                            raise ResourceLimit(f"state space exceeds bound {bound}")
            queue = nxt
        return order


class ExplicitModel(KripkeModel):
    def __init__(self, states, edges, preds, init, arities=None):
        """states: iterable of labels; edges: label -> iterable of labels;
        preds: name -> set of label tuples (unary entries may be bare labels);
        arities: optional name -> arity, needed for empty extensions.
        """
        self.labels = list(states)
        self.index = {lab: i for i, lab in enumerate(self.labels)}
        if len(self.index) != len(self.labels):
            raise ModelError("duplicate state labels")
        self.init = self.index[init]
        self._succ = {}
        for lab, outs in edges.items():
            ids = sorted({self.index[o] for o in outs})
            self._succ[self.index[lab]] = ids
        for i, lab in enumerate(self.labels):
            if not self._succ.get(i):
                raise ModelError(f"state {lab!r} has no successor")
        self._preds = {}
        for name, ext in preds.items():
            norm = set()
            ar = (arities or {}).get(name)
            for entry in ext:
                tup = entry if isinstance(entry, tuple) else (entry,)
                ids = tuple(self.index[e] for e in tup)
                if ar is None:
                    ar = len(ids)
                elif ar != len(ids):
                    raise ModelError(f"mixed arity in predicate {name}")
                norm.add(ids)
            self._preds[name] = (1 if ar is None else ar, norm)

    def next(self, s):
        return self._succ[s]

    def eval_atom(self, pred, args):
        if pred not in self._preds:
            raise ModelError(f"unknown predicate {pred}")
        ar, ext = self._preds[pred]
        if len(args) != ar:
            raise ModelError(f"predicate {pred} expects {ar} arguments, got {len(args)}")
        return tuple(args) in ext

    def arity(self, pred):
        if pred not in self._preds:
            raise ModelError(f"unknown predicate {pred}")
        return self._preds[pred][0]

    def state_text(self, s):
        return str(self.labels[s])

    def state_count(self):
        return len(self.labels)


def _value_text(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


class CompiledModel(KripkeModel):
    """Guarded-command program compiled to an on-the-fly Kripke model.

    Transition rules fire in source order, one rule per step; parallel
    assignments inside a rule read the pre-state.  A state with no
    enabled rule gets a self-loop to keep the relation total.
    An assignment that leaves its variable's declared range is a
    runtime model error, surfaced when the offending state is expanded.
    """

    def __init__(self, *, name, var_names, var_types, init_payload,
                 transitions, atomics, specs, fairness):
        self.name = name
        self.var_names = var_names
        self.var_types = var_types
        self.var_index = {n: i for i, n in enumerate(var_names)}
        self._transitions = transitions   # list of (guard_fn, [(idx, rhs_fn)], label)
        self._atomics = atomics           # name -> (arity, fn(states...))
        self.specs = specs
        self.fairness = fairness
        self._payloads = []
        self._ids = {}
        self._succ_cache = {}
        # expansion mutates the caches, so concurrent prove() calls over
        # one model serialize their cache misses here
        self._lock = threading.Lock()
        self.init = self.intern(init_payload)

    def intern(self, payload: tuple) -> int:
        sid = self._ids.get(payload)
        if sid is None:
            with self._lock:
                sid = self._ids.get(payload)
                if sid is None:
                    sid = len(self._payloads)
                    self._payloads.append(payload)
                    self._ids[payload] = sid
        return sid

    def payload(self, s: int) -> tuple:
        return self._payloads[s]

    def state_id(self, payload: tuple) -> int:
        for v, ty, name in zip(payload, self.var_types, self.var_names):
            if not ty.contains(v):
                raise ModelError(f"value {v!r} out of range for {name} : {ty}")
        return self.intern(payload)

    def next(self, s):
        cached = self._succ_cache.get(s)
        if cached is not None:
            return cached
        pre = self._payloads[s]
        out = []
        seen = set()
        for guard, assigns, label in self._transitions:
            if not guard(pre):
                continue
            post = list(pre)
            for idx, rhs in assigns:
                v = rhs(pre)
                ty = self.var_types[idx]
                if isinstance(ty, BoolType) and isinstance(v, int) and not isinstance(v, bool):
                    raise ModelError(f"non-boolean value for {self.var_names[idx]} in {label}")
                if not ty.contains(v):
                    raise ModelError(
                        f"assignment leaves range: {self.var_names[idx]} := {v!r} "
                        f"(rule {label}, state {self.state_text(s)})")
                post[idx] = v
            t = self.intern(tuple(post))
            if t not in seen:
                seen.add(t)
                out.append(t)
        if not out:
            out = [s]
        self._succ_cache.setdefault(s, out)
        return self._succ_cache[s]

    def eval_atom(self, pred, args):
        ent = self._atomics.get(pred)
        if ent is None:
            raise ModelError(f"unknown predicate {pred}")
        ar, fn = ent
        if len(args) != ar:
            raise ModelError(f"predicate {pred} expects {ar} arguments, got {len(args)}")
        return bool(fn(*[self._payloads[a] for a in args]))

    def arity(self, pred):
        ent = self._atomics.get(pred)
        if ent is None:
            raise ModelError(f"unknown predicate {pred}")
        return ent[0]

    def state_text(self, s):
        pay = self._payloads[s]
        inner = ";".join(f"{n}:={_value_text(v)}" for n, v in zip(self.var_names, pay))
        return "{%s}" % inner

    def state_count(self):
        return len(self._payloads)


def next_states(model: KripkeModel, s: int) -> list[int]:
    return model.next(s)


def eval_atom(model: KripkeModel, pred: str, args) -> bool:
    return model.eval_atom(pred, tuple(args))


def compile_model(md: ModelDef) -> CompiledModel:
    """Static-check a ModelDef and produce a CompiledModel.

    Expression ASTs come from the frontend; they are compiled to Python
    closures over the payload tuple for speed.
    """
    from . import parser as _p

    var_names = [n for n, _ in md.vars]
    var_types = [t for _, t in md.vars]
    if len(set(var_names)) != len(var_names):
        raise ModelError("duplicate variable declaration")
    index = {n: i for i, n in enumerate(var_names)}
    types = dict(md.vars)

    init_payload = []
    for n, ty in md.vars:
        if n not in md.init:
            raise ModelError(f"Init does not assign {n}")
        v = _p.eval_const(md.init[n])
        if isinstance(ty, BoolType) and not isinstance(v, bool):
            raise ModelError(f"Init assigns non-boolean to {n}")
        if not ty.contains(v):
            raise ModelError(f"Init value {v!r} out of range for {n} : {ty}")
        init_payload.append(v)

    transitions = []
    for i, (guard, assigns) in enumerate(md.transitions):
        label = f"transition #{i + 1}"
        gfn = _p.compile_state_expr(guard, index, types, want_bool=True, where=label)
        afns = []
        targets = set()
        for n, rhs in assigns:
            if n not in index:
                raise ModelError(f"{label} assigns undeclared variable {n}")
            if n in targets:
                raise ModelError(f"{label} assigns {n} twice")
            targets.add(n)
            afns.append((index[n], _p.compile_state_expr(rhs, index, types, where=label)))
        transitions.append((gfn, afns, label))

    atomics = {}
    for ad in md.atomics:
        if ad.name in atomics:
            raise ModelError(f"duplicate atomic predicate {ad.name}")
        fn = _p.compile_atomic(ad, index, types)
        atomics[ad.name] = (len(ad.params), fn)

    return CompiledModel(
        name=md.name, var_names=var_names, var_types=var_types,
        init_payload=tuple(init_payload), transitions=transitions,
        atomics=atomics, specs=list(md.specs), fairness=list(md.fairness))
