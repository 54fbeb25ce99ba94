"""Proof search over continuation-passing trees.

A CPT is a binary tree whose leaves are the verdict symbols t and f and
whose internal nodes carry sequents; the left subtree is the
continuation on success, the right one on failure.  Search rewrites the
root until a leaf remains.  Goals with the same modality and body share
a merge context: a stack of states recording the co-inductive
unfoldings above the current goal.  Hitting that context closes EG/AR
goals (merge) and abandons AF/EU branches (loop pruning).

A global visited store remembers, per goal skeleton, the states whose
verdicts are settled, so a state is expanded at most once per
subformula.  A verdict that rests on a merge against a strictly older
context entry is context-dependent; it is parked and settled when the
enclosing strongly connected component of the explored subgraph closes
(see _SkelEntry.pop), which keeps the store free of facts that could be
invalidated later.

Two engines share all bookkeeping: the iterative CPT rewriter (constant
Python stack) and a plain recursive variant kept for comparison.
"""

from __future__ import annotations

import sys
from collections import deque
from dataclasses import dataclass, field

from .formula import (AF, AR, AX, EG, EU, EX, And, Atom, Bottom, Const,
                      Formula, NegAtom, Or, Top, Var, canonical, dualize,
                      free_vars, is_core, size, substitute)
from .kripke import KripkeModel

UNKNOWN, PROVED, DISPROVED, IN_PROGRESS = "Unknown", "Proved", "Disproved", "InProgress"

_INF = float("inf")


class StepLimitError(Exception):
    """The configured rewrite-step budget ran out (tool error, no verdict)."""


@dataclass
class EngineOptions:
    engine: str = "cpt"              # "cpt" | "recursive"
    memo: bool = True
    visited: str = "hash"            # "hash" | "bdd"
    trace: bool = False              # full event recording (certification)
    trace_keep: int = 256            # ring size when trace is off
    step_limit: int = 0              # 0 = unlimited
    fairness: tuple = ()             # fairness constraints; see prove_fair
    debug_ordering: bool = False     # assert the termination measure per step
    visited_store: "VisitedStore | None" = None


@dataclass
class Stats:
    steps: int = 0
    peak_gamma: int = 0
    visited_proved: int = 0
    visited_disproved: int = 0


@dataclass
class Verdict:
    provable: bool
    trace: list = field(default_factory=list)
    stats: Stats = field(default_factory=Stats)


# --- visited store -----------------------------------------------------------


class _HashSet:
    __slots__ = ("_s",)

    def __init__(self, model=None):
        self._s = set()

    def add(self, state):
        self._s.add(state)

    def __contains__(self, state):
        return state in self._s

    def __len__(self):
        return len(self._s)


class _BddSet:
    """Visited set held as a reduced ordered binary decision diagram.

    States are encoded as fixed-width bit vectors (booleans one bit,
    bounded integers in binary); insertion ORs a minterm into the
    diagram, membership walks one path.
    """

    __slots__ = ("_enc", "_root", "_nvars", "_table", "_count")

    def __init__(self, model):
        self._enc = _bit_encoder(model)
        self._root = 0          # terminal 0 = empty set, 1 = full
        self._nvars = None
        self._table = {}
        self._count = 0

    def _mk(self, var, lo, hi):
        if lo == hi:
            return lo
        key = (var, lo, hi)
        node = self._table.get(key)
        if node is None:
            node = (var, lo, hi)
            self._table[key] = node
        return node

    def add(self, state):
        bits = self._enc(state)
        if self._nvars is None:
            self._nvars = len(bits)
        if not self.__contains__(state):
            self._count += 1
        self._root = self._insert(self._root, bits, 0)

    def _insert(self, u, bits, i):
        if u == 1:
            return 1
        if i == len(bits):
            return 1
        if u == 0:
            lo = hi = 0
        elif u[0] == i:
            lo, hi = u[1], u[2]
        else:           # u[0] > i: variable i is don't-care in u
            lo = hi = u
        if bits[i]:
            hi = self._insert(hi, bits, i + 1)
        else:
            lo = self._insert(lo, bits, i + 1)
        return self._mk(i, lo, hi)

    def __contains__(self, state):
        bits = self._enc(state)
        u = self._root
        while u not in (0, 1):
            var, lo, hi = u
            u = hi if bits[var] else lo
        return u == 1

    def __len__(self):
        return self._count


def _bit_encoder(model):
    """Map a state id to a tuple of bits identifying it uniquely."""
    var_types = getattr(model, "var_types", None)
    if var_types is None:
        # explicit models: binary-encode the id itself
        def enc(state):
            bits = []
            s = state
            for _ in range(32):
                bits.append(s & 1)
                s >>= 1
            return tuple(bits)
        return enc

    widths = []
    for ty in var_types:
        if hasattr(ty, "lo"):
            span = ty.hi - ty.lo
            w = max(1, span.bit_length())
            widths.append((ty.lo, w))
        else:
            widths.append((None, 1))

    def enc(state):
        pay = model.payload(state)
        bits = []
        for v, (lo, w) in zip(pay, widths):
            n = int(v) if lo is None else v - lo
            for k in range(w):
                bits.append((n >> k) & 1)
        return tuple(bits)
    return enc


class _SkelEntry:
    """Per-skeleton search state: merge context, frames and settled verdicts.

    The merge context Gamma is `inprog` (state -> push depth) plus the
    LIFO `frames` stack; a frame tracks the shallowest context entry any
    merge inside its subsearch targeted (`min_target`).  On pop, that
    taint decides whether the verdict is context-free and may be kept:

      AF / EG   -- both verdicts are genuine state facts, always kept;
      EU proved, AR disproved -- carry their own witness, always kept;
      EU disproved, AR proved -- context-dependent: the state is parked
                                 and folded into its parent frame.

    min_target works exactly like Tarjan's lowlink over the explored
    subgraph (tree edges = unfoldings, back edges = merges).  A frame
    whose pop satisfies min_target >= depth closes a strongly connected
    component: every parked state in it reaches the popped state and is
    reached by it through chain states, so the popped verdict settles
    them all, positively or negatively.

    While a parked state is pending, the frame at its recorded lowlink
    depth is still an open ancestor, so re-encountering it is treated
    exactly like a merge against that ancestor (and taints the consumer
    the same way).
    """

    __slots__ = ("kind", "key", "proved", "disproved", "inprog", "frames",
                 "pending")

    def __init__(self, kind, key, backend, model):
        self.kind = kind
        self.key = key
        self.proved = backend(model)
        self.disproved = backend(model)
        self.inprog = {}
        self.frames = []    # [state, depth, min_target, parked]
        self.pending = {}   # parked state -> its lowlink depth

    def status(self, state):
        if state in self.inprog:
            return IN_PROGRESS
        if state in self.proved:
            return PROVED
        if state in self.disproved:
            return DISPROVED
        return UNKNOWN

    def lookup(self, state):
        if state in self.proved:
            return True
        if state in self.disproved:
            return False
        return None

    def push(self, state):
        depth = len(self.frames)
        self.inprog[state] = depth
        self.frames.append([state, depth, _INF, []])

    def note_merge(self, target_state):
        self.note_depth(self.inprog[target_state])

    def note_depth(self, depth):
        if depth < self.frames[-1][2]:
            self.frames[-1][2] = depth

    def pop(self, state, verdict, keep):
        st, depth, min_target, parked = self.frames.pop()
        assert st == state, "merge context is not a stack"
        del self.inprog[state]
        scc_root = min_target >= depth
        if not keep:
            return scc_root
        if self.kind in ("AF", "EG"):
            (self.proved if verdict else self.disproved).add(state)
            return scc_root
        cache = self.proved if verdict else self.disproved
        if scc_root:
            cache.add(state)
            for y in parked:
                cache.add(y)
                self.pending.pop(y, None)
            return True
        # the subtree connects strictly above: fold into the parent frame
        parent = self.frames[-1]
        if min_target < parent[2]:
            parent[2] = min_target
        parent[3].extend(parked)
        concrete = (self.kind == "EU") == verdict   # own witness in hand
        if concrete:
            cache.add(state)
        else:
            parent[3].append(state)
            self.pending[state] = min_target
        return False


class VisitedStore:
    """Global memory of settled (skeleton, state) verdicts.

    Skeletons are alpha-canonical keys of a modal goal minus its anchor
    state, so entries survive across prove() calls on the same store.
    """

    def __init__(self, backend: str = "hash"):
        self.backend_name = backend
        self._backend = _HashSet if backend == "hash" else _BddSet
        self._entries: dict = {}

    def entry(self, kind, key, model) -> _SkelEntry:
        e = self._entries.get(key)
        if e is None:
            e = _SkelEntry(kind, key, self._backend, model)
            self._entries[key] = e
        return e

    def counts(self):
        p = sum(len(e.proved) for e in self._entries.values())
        d = sum(len(e.disproved) for e in self._entries.values())
        return p, d


def skeleton_key(goal):
    """Store key of a modal goal: its alpha-canonical shape minus the anchor."""
    if type(goal) not in _MODAL_KIND:
        raise ValueError("skeleton_key() needs an AF/EG/AR/EU goal")
    return canonical(type(goal)(*_strip_anchor(goal)))


def visited_mark(store: VisitedStore, kind, key, state, status, model=None):
    """Record a status directly; InProgress marks must nest like a stack."""
    entry = store.entry(kind, key, model)
    if status == IN_PROGRESS:
        entry.push(state)
    elif status == PROVED:
        entry.proved.add(state)
    elif status == DISPROVED:
        entry.disproved.add(state)
    return entry.status(state)


def visited_query(store: VisitedStore, key, state):
    entry = store._entries.get(key)
    return UNKNOWN if entry is None else entry.status(state)


# --- sequents and CPTs -------------------------------------------------------


class GammaChain:
    """Immutable linked context path; shared by sibling sequents."""

    __slots__ = ("state", "parent", "depth")

    def __init__(self, state, parent):
        self.state = state
        self.parent = parent
        self.depth = 1 if parent is None else parent.depth + 1

    def states(self):
        out = []
        g = self
        while g is not None:
            out.append(g.state)
            g = g.parent
        out.reverse()
        return out


class Sequent:
    __slots__ = ("goal", "chain")

    def __init__(self, goal, chain=None):
        self.goal = goal
        self.chain = chain

    def gamma_states(self):
        return [] if self.chain is None else self.chain.states()

    def __repr__(self):
        g = self.gamma_states()
        left = ",".join(str(s) for s in g)
        return f"<{left} |- {self.goal!r}>"


class CptLeaf:
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = value

    def __repr__(self):
        return "t" if self.value else "f"


CPT_TRUE = CptLeaf(True)
CPT_FALSE = CptLeaf(False)


class CptNode:
    __slots__ = ("seq", "tcont", "fcont")

    def __init__(self, seq, tcont, fcont):
        self.seq = seq
        self.tcont = tcont
        self.fcont = fcont


class CptNote:
    """Bookkeeping continuation: fires its hook when reached, then continues.

    Verdict-transparent; carries the pop/record duties that the paper's
    presentation keeps implicit in the rewrite relation.
    """

    __slots__ = ("hook", "cont")

    def __init__(self, hook, cont):
        self.hook = hook
        self.cont = cont


def cpt_view(c):
    """Nested tuples of a CPT with bookkeeping notes elided (for tests)."""
    while isinstance(c, CptNote):
        c = c.cont
    if isinstance(c, CptLeaf):
        return "t" if c.value else "f"
    return (c.seq.goal, tuple(c.seq.gamma_states()),
            cpt_view(c.tcont), cpt_view(c.fcont))


_MODAL_KIND = {AF: "AF", EG: "EG", AR: "AR", EU: "EU"}


class _Run:
    """Shared engine state for one prove() call."""

    def __init__(self, model: KripkeModel, opts: EngineOptions):
        self.model = model
        self.opts = opts
        self.store = opts.visited_store or VisitedStore(opts.visited)
        self.trace = [] if opts.trace else deque(maxlen=opts.trace_keep)
        self.steps = 0
        self.peak_gamma = 0
        self._skel_cache = {}
        self._sizes = {}

    def record(self, *event):
        self.trace.append(event)

    def skel(self, goal):
        kind = _MODAL_KIND[type(goal)]
        if isinstance(goal, (AF, EG)):
            ck = (kind, goal.var, id(goal.body))
            bodies = (goal.body,)
        else:
            ck = (kind, goal.var1, goal.var2, id(goal.body1), id(goal.body2))
            bodies = (goal.body1, goal.body2)
        hit = self._skel_cache.get(ck)
        if hit is not None:
            return hit
        key = canonical(type(goal)(*_strip_anchor(goal)))
        entry = self.store.entry(kind, key, self.model)
        self._skel_cache[ck] = (entry, bodies)
        return entry, bodies

    def tick(self):
        self.steps += 1
        if self.opts.step_limit and self.steps > self.opts.step_limit:
            raise StepLimitError(f"step limit {self.opts.step_limit} exceeded")

    def size_of(self, phi):
        # cache pins the formula object so its id cannot be recycled
        hit = self._sizes.get(id(phi))
        if hit is not None:
            return hit[1]
        s = size(phi)
        self._sizes[id(phi)] = (phi, s)
        return s


def _strip_anchor(goal):
    anchor = Var("__anchor__")
    if isinstance(goal, (AF, EG)):
        return (goal.var, goal.body, anchor)
    return (goal.var1, goal.var2, goal.body1, goal.body2, anchor)


def initial_cpt(phi: Formula) -> CptNode:
    return CptNode(Sequent(phi, None), CPT_TRUE, CPT_FALSE)


def cpt_step(run: _Run, c: CptNode):
    """One root rewrite; exactly one rule matches any sequent node."""
    seq = c.seq
    goal = seq.goal
    t, f = c.tcont, c.fcont
    model = run.model
    cls = type(goal)

    if cls is Top:
        run.record("top", goal)
        return t
    if cls is Bottom:
        run.record("bottom", goal)
        return f
    if cls is Atom:
        ok = model.eval_atom(goal.pred, tuple(a.state for a in goal.args))
        run.record("atom", goal, ok)
        return t if ok else f
    if cls is NegAtom:
        ok = not model.eval_atom(goal.pred, tuple(a.state for a in goal.args))
        run.record("negatom", goal, ok)
        return t if ok else f
    if cls is And:
        run.record("and", goal)
        rhs = CptNode(Sequent(goal.rhs), t, f)
        return CptNode(Sequent(goal.lhs), rhs, f)
    if cls is Or:
        run.record("or", goal)
        rhs = CptNode(Sequent(goal.rhs), t, f)
        return CptNode(Sequent(goal.lhs), t, rhs)
    if cls is AX:
        s = goal.at.state
        run.record("ax", goal)
        cur = t
        for si in reversed(model.next(s)):
            cur = CptNode(Sequent(substitute(Const(si), goal.var, goal.body)), cur, f)
        return cur
    if cls is EX:
        s = goal.at.state
        run.record("ex", goal)
        cur = f
        for si in reversed(model.next(s)):
            cur = CptNode(Sequent(substitute(Const(si), goal.var, goal.body)), t, cur)
        return cur

    # modal goals with merge contexts
    entry, bodies = run.skel(goal)
    kind = entry.kind
    s = goal.at.state

    if run.opts.memo:
        known = entry.lookup(s)
        if known is not None:
            run.record("memo", kind, s, known)
            return t if known else f

    if s in entry.inprog:
        run.record("merge", kind, s)
        if kind == "EG":
            return t
        if kind == "AR":
            entry.note_merge(s)
            return t
        if kind == "EU":
            entry.note_merge(s)
            return f
        return f                                  # AF
    if s in entry.pending:
        # popped but unsettled: equivalent to a merge against the open
        # ancestor at its lowlink depth
        run.record("pending", kind, s)
        entry.note_depth(entry.pending[s])
        return t if kind == "AR" else f

    # unfold
    run.record("unfold", kind, s)
    entry.push(s)
    if len(entry.frames) > run.peak_gamma:
        run.peak_gamma = len(entry.frames)
    chain = GammaChain(s, seq.chain)
    keep = run.opts.memo

    def close(verdict, _entry=entry, _s=s, _kind=kind, _keep=keep):
        def hook(run=run):
            _entry.pop(_s, verdict, _keep)
            run.record("close", _kind, _s, verdict)
        return hook

    ok = CptNote(close(True), t)
    no = CptNote(close(False), f)
    succs = model.next(s)

    if kind == "AF":
        body = bodies[0]
        cur = ok
        for si in reversed(succs):
            cur = CptNode(Sequent(type(goal)(goal.var, body, Const(si)), chain), cur, no)
        return CptNode(Sequent(substitute(Const(s), goal.var, body)), ok, cur)
    if kind == "EG":
        body = bodies[0]
        cur = no
        for si in reversed(succs):
            cur = CptNode(Sequent(type(goal)(goal.var, body, Const(si)), chain), ok, cur)
        return CptNode(Sequent(substitute(Const(s), goal.var, body)), cur, no)
    if kind == "EU":
        b1, b2 = bodies
        cur = no
        for si in reversed(succs):
            cur = CptNode(Sequent(EU(goal.var1, goal.var2, b1, b2, Const(si)), chain),
                          ok, cur)
        phi1 = CptNode(Sequent(substitute(Const(s), goal.var1, b1)), cur, no)
        return CptNode(Sequent(substitute(Const(s), goal.var2, b2)), ok, phi1)
    # AR
    b1, b2 = bodies
    cur = ok
    for si in reversed(succs):
        cur = CptNode(Sequent(AR(goal.var1, goal.var2, b1, b2, Const(si)), chain),
                      cur, no)
    phi1 = CptNode(Sequent(substitute(Const(s), goal.var1, b1)), ok, cur)
    return CptNode(Sequent(substitute(Const(s), goal.var2, b2)), phi1, no)


def _check_measure(run, parent_seq, old_t, old_f, c):
    """Debug check: every sequent created by one rewrite is smaller than
    the consumed root under the lexicographic ordering (formula size,
    context growth): either a strictly smaller formula, or the same
    modal formula with a strictly longer merge context."""
    psize = run.size_of(parent_seq.goal)
    pdepth = 0 if parent_seq.chain is None else parent_seq.chain.depth
    stack = [c]
    while stack:
        u = stack.pop()
        if u is old_t or u is old_f or isinstance(u, CptLeaf):
            continue
        if isinstance(u, CptNote):
            stack.append(u.cont)
            continue
        depth = 0 if u.seq.chain is None else u.seq.chain.depth
        csize = run.size_of(u.seq.goal)
        assert csize < psize or (csize == psize and depth > pdepth), \
            f"measure did not decrease: {parent_seq!r} -> {u.seq!r}"
        stack.extend([u.tcont, u.fcont])


def _run_cpt(run: _Run, phi: Formula) -> bool:
    c = initial_cpt(phi)
    while True:
        if isinstance(c, CptLeaf):
            return c.value
        if isinstance(c, CptNote):
            c.hook()
            c = c.cont
            continue
        run.tick()
        prev_seq, prev_t, prev_f = c.seq, c.tcont, c.fcont
        c2 = cpt_step(run, c)
        # resolution steps return a pre-existing continuation; only the
        # freshly built structure of an expansion step is measured
        if run.opts.debug_ordering and isinstance(c2, CptNode) \
                and c2 is not prev_t and c2 is not prev_f:
            _check_measure(run, prev_seq, prev_t, prev_f, c2)
        c = c2


def _run_recursive(run: _Run, phi: Formula) -> bool:
    model = run.model
    memo_on = run.opts.memo

    def rec(goal) -> bool:
        run.tick()
        cls = type(goal)
        if cls is Top:
            return True
        if cls is Bottom:
            return False
        if cls is Atom:
            return model.eval_atom(goal.pred, tuple(a.state for a in goal.args))
        if cls is NegAtom:
            return not model.eval_atom(goal.pred, tuple(a.state for a in goal.args))
        if cls is And:
            return rec(goal.lhs) and rec(goal.rhs)
        if cls is Or:
            return rec(goal.lhs) or rec(goal.rhs)
        if cls is AX:
            s = goal.at.state
            return all(rec(substitute(Const(si), goal.var, goal.body))
                       for si in model.next(s))
        if cls is EX:
            s = goal.at.state
            return any(rec(substitute(Const(si), goal.var, goal.body))
                       for si in model.next(s))

        entry, bodies = run.skel(goal)
        kind = entry.kind
        s = goal.at.state
        if memo_on:
            known = entry.lookup(s)
            if known is not None:
                return known
        if s in entry.inprog:
            if kind in ("AR", "EU"):
                entry.note_merge(s)
            return kind in ("EG", "AR")
        if s in entry.pending:
            entry.note_depth(entry.pending[s])
            return kind == "AR"
        entry.push(s)
        if len(entry.frames) > run.peak_gamma:
            run.peak_gamma = len(entry.frames)
        succs = model.next(s)
        if kind == "AF":
            body = bodies[0]
            res = rec(substitute(Const(s), goal.var, body)) or \
                all(rec(type(goal)(goal.var, body, Const(si))) for si in succs)
        elif kind == "EG":
            body = bodies[0]
            res = rec(substitute(Const(s), goal.var, body)) and \
                any(rec(type(goal)(goal.var, body, Const(si))) for si in succs)
        elif kind == "EU":
            b1, b2 = bodies
            res = rec(substitute(Const(s), goal.var2, b2)) or \
                (rec(substitute(Const(s), goal.var1, b1)) and
                 any(rec(EU(goal.var1, goal.var2, b1, b2, Const(si)))
                     for si in succs))
        else:   # AR
            b1, b2 = bodies
            res = rec(substitute(Const(s), goal.var2, b2)) and \
                (rec(substitute(Const(s), goal.var1, b1)) or
                 all(rec(AR(goal.var1, goal.var2, b1, b2, Const(si)))
                     for si in succs))
        entry.pop(s, res, memo_on)
        return res

    limit = sys.getrecursionlimit()
    if limit < 200_000:
        sys.setrecursionlimit(200_000)
    try:
        return rec(phi)
    finally:
        sys.setrecursionlimit(limit)


def prove(model: KripkeModel, phi: Formula, opts: EngineOptions | None = None) -> Verdict:
    """Decide phi on the model; phi must be closed and abbreviation-free."""
    opts = opts or EngineOptions()
    if opts.fairness:
        return prove_fair(model, phi, list(opts.fairness), opts)
    if not is_core(phi):
        raise ValueError("prove() expects a core formula; call expand_abbrev first")
    fv = free_vars(phi)
    if fv:
        raise ValueError(f"prove() expects a closed formula; free: {sorted(fv)}")
    run = _Run(model, opts)
    run.record("goal", phi)
    if opts.engine == "recursive":
        verdict = _run_recursive(run, phi)
    elif opts.engine == "cpt":
        verdict = _run_cpt(run, phi)
    else:
        raise ValueError(f"unknown engine {opts.engine!r}")
    run.record("result", verdict)
    p, d = run.store.counts()
    return Verdict(verdict, list(run.trace),
                   Stats(run.steps, run.peak_gamma, p, d))


# --- fairness ----------------------------------------------------------------


def fair_loop_check(loop, constraints, model, subprove) -> bool:
    """True iff every constraint holds somewhere on the loop.

    `loop` is the context segment from a state's previous occurrence to
    its revisit; `constraints` are (var, formula) pairs with the
    variable standing for the path state; `subprove(formula) -> bool`
    discharges the instantiated obligations.
    """
    for var, f in constraints:
        if not any(subprove(substitute(Const(u), var, f)) for u in loop):
            return False
    return True


def normalize_constraints(constraints):
    """Accept formulas with one free variable, or explicit (var, formula)."""
    out = []
    for c in constraints:
        if isinstance(c, tuple):
            out.append(c)
            continue
        fv = sorted(free_vars(c))
        if len(fv) != 1:
            raise ValueError(
                f"fairness constraint must have exactly one free variable, got {fv}")
        out.append((fv[0], c))
    return out


class _FairRun:
    """Recursive engine for fair-path semantics.

    Path quantifiers range over paths on which every constraint holds
    infinitely often.  EG searches for a lasso: a body-path from the
    goal state to a loop that the fairness check accepts.  The loop
    search walks (state, constraints-covered) pairs, so loops that must
    revisit a state to collect every constraint witness are still
    found, with polynomially many search nodes.  AF and AR are decided
    through their duals; EX/AX/EU restrict to states with some fair
    path onward.
    """

    def __init__(self, model, constraints, opts):
        self.model = model
        self.C = constraints
        self.opts = opts
        self.full_mask = (1 << len(constraints)) - 1
        self.steps = 0
        self._eval_memo = {}
        self._eg_true = {}      # skel key -> states known E_CG-true
        self._eg_false = {}     # skel key -> states known E_CG-false
        self._anchor = {}       # skel key -> state -> bool (fair loop through it)
        self._eu_entries = {}   # skel key -> _SkelEntry bookkeeping
        self._cons_memo = {}
        self._mask_memo = {}
        self._fair_key = ("__fair__",)

    def _tick(self):
        self.steps += 1
        if self.opts.step_limit and self.steps > self.opts.step_limit:
            raise StepLimitError("fair search step limit exceeded")

    def _constraint_holds(self, idx, state):
        hit = self._cons_memo.get((idx, state))
        if hit is None:
            var, f = self.C[idx]
            hit = prove(self.model, substitute(Const(state), var, f),
                        EngineOptions(step_limit=self.opts.step_limit)).provable
            self._cons_memo[(idx, state)] = hit
        return hit

    def _mask_of(self, state):
        m = self._mask_memo.get(state)
        if m is None:
            m = 0
            for i in range(len(self.C)):
                if self._constraint_holds(i, state):
                    m |= 1 << i
            self._mask_memo[state] = m
        return m

    def _loop_ok(self, loop):
        return fair_loop_check(
            loop, self.C, self.model,
            lambda g: prove(self.model, g,
                            EngineOptions(step_limit=self.opts.step_limit)).provable)

    def fair_from(self, state) -> bool:
        """E_CG(TRUE) at state: some fair path starts here."""
        if not self.C:
            return True
        return self.eg_search(self._fair_key, lambda u: True, state)

    def _is_anchor(self, key, body_holds, w) -> bool:
        """Some body-cycle through w satisfies every constraint.

        Walks (state, covered-constraints) pairs; returning to w with
        full coverage closes the loop, which is then confirmed by the
        fairness check on the concrete loop states.
        """
        anchors = self._anchor.setdefault(key, {})
        hit = anchors.get(w)
        if hit is not None:
            return hit
        start = (w, self._mask_of(w))
        parent = {start: None}
        stack = [start]
        while stack:
            self._tick()
            node = stack.pop()
            u, mask = node
            for v in self.model.next(u):
                if not body_holds(v):
                    continue
                vmask = mask | self._mask_of(v)
                if v == w:
                    if vmask != self.full_mask:
                        continue
                    loop = [u]
                    back = parent[node]
                    while back is not None:
                        loop.append(back[0])
                        back = parent[back]
                    loop.reverse()
                    if self._loop_ok(loop):
                        # every state on the loop lies on a fair cycle
                        for x in loop:
                            anchors[x] = True
                        return True
                    continue
                child = (v, vmask)
                if child not in parent:
                    parent[child] = node
                    stack.append(child)
        anchors[w] = False
        return False

    def eg_search(self, key, body_holds, root) -> bool:
        """Search for a body-path from root to a state on a fair body-loop."""
        true_set = self._eg_true.setdefault(key, set())
        false_set = self._eg_false.setdefault(key, set())
        if root in true_set:
            return True
        if root in false_set:
            return False
        if not body_holds(root):
            false_set.add(root)
            return False
        visited = {root}
        parent = {root: None}
        stack = [root]

        def accept(w):
            while w is not None:
                true_set.add(w)
                w = parent[w]
            return True

        while stack:
            self._tick()
            u = stack.pop()
            for v in self.model.next(u):
                if not body_holds(v):
                    continue
                if v in true_set:
                    return accept(u)
                if v in visited:
                    # an edge closing a walk: every cycle is first entered
                    # at an already-visited state, so anchor tests at these
                    # targets find a fair loop whenever one exists
                    if self._is_anchor(key, body_holds, v):
                        return accept(v)
                    continue
                if v in false_set:
                    continue
                visited.add(v)
                parent[v] = u
                stack.append(v)
        # exhaustive failure settles everything visited: a fair body-path
        # from any visited state would extend to one from the root
        false_set.update(visited)
        return False

    def eval(self, goal) -> bool:
        key = canonical(goal)
        hit = self._eval_memo.get(key)
        if hit is not None:
            return hit
        res = self._eval(goal)
        self._eval_memo[key] = res
        return res

    def _eval(self, goal) -> bool:
        model = self.model
        cls = type(goal)
        if cls is Top:
            return True
        if cls is Bottom:
            return False
        if cls is Atom:
            return model.eval_atom(goal.pred, tuple(a.state for a in goal.args))
        if cls is NegAtom:
            return not model.eval_atom(goal.pred, tuple(a.state for a in goal.args))
        if cls is And:
            return self.eval(goal.lhs) and self.eval(goal.rhs)
        if cls is Or:
            return self.eval(goal.lhs) or self.eval(goal.rhs)
        if cls is EX:
            s = goal.at.state
            return any(self.fair_from(si) and
                       self.eval(substitute(Const(si), goal.var, goal.body))
                       for si in model.next(s))
        if cls is AX:
            s = goal.at.state
            return all(not self.fair_from(si) or
                       self.eval(substitute(Const(si), goal.var, goal.body))
                       for si in model.next(s))
        if cls is EG:
            key = ("EG", canonical(type(goal)(*_strip_anchor(goal))))
            body = goal.body
            return self.eg_search(
                key, lambda u: self.eval(substitute(Const(u), goal.var, body)),
                goal.at.state)
        if cls is AF:
            dual_body = dualize(goal.body)
            key = ("EG", canonical(EG(goal.var, dual_body, Var("__anchor__"))))
            return not self.eg_search(
                key, lambda u: self.eval(substitute(Const(u), goal.var, dual_body)),
                goal.at.state)
        if cls is EU:
            key = ("EU", canonical(EU(*_strip_anchor(goal))))
            return self._eu_search(key, goal.var1, goal.body1,
                                   goal.var2, goal.body2, goal.at.state)
        if cls is AR:
            d1, d2 = dualize(goal.body1), dualize(goal.body2)
            key = ("EU", canonical(EU(goal.var1, goal.var2, d1, d2,
                                      Var("__anchor__"))))
            return not self._eu_search(key, goal.var1, d1, goal.var2, d2,
                                       goal.at.state)
        raise TypeError(f"not a core formula: {goal!r}")

    def _eu_search(self, key, x, b1, y, b2, root) -> bool:
        """EU under fairness: the witness's last state must admit a fair path.

        Same merge-context and settled-verdict bookkeeping as the plain
        engine's until search.
        """
        entry = self._eu_entries.get(key)
        if entry is None:
            entry = _SkelEntry("EU", key, _HashSet, self.model)
            self._eu_entries[key] = entry

        def dfs(u) -> bool:
            self._tick()
            known = entry.lookup(u)
            if known is not None:
                return known
            if u in entry.inprog:
                entry.note_merge(u)
                return False
            if u in entry.pending:
                entry.note_depth(entry.pending[u])
                return False
            entry.push(u)
            if self.eval(substitute(Const(u), y, b2)) and self.fair_from(u):
                res = True
            elif not self.eval(substitute(Const(u), x, b1)):
                res = False
            else:
                res = any(dfs(v) for v in self.model.next(u))
            entry.pop(u, res, True)
            return res

        return dfs(root)


def prove_fair(model: KripkeModel, phi: Formula, constraints,
               opts: EngineOptions | None = None) -> Verdict:
    """Decide phi with path quantifiers restricted to fair paths.

    With an empty constraint set this coincides with prove(); totality
    of the transition relation makes every state fair.
    """
    opts = opts or EngineOptions()
    cons = normalize_constraints(constraints)
    if not cons:
        plain = EngineOptions(engine=opts.engine, memo=opts.memo,
                              visited=opts.visited, trace=opts.trace,
                              step_limit=opts.step_limit,
                              visited_store=opts.visited_store)
        return prove(model, phi, plain)
    if not is_core(phi):
        raise ValueError("prove_fair() expects a core formula")
    if free_vars(phi):
        raise ValueError("prove_fair() expects a closed formula")
    limit = sys.getrecursionlimit()
    if limit < 200_000:
        sys.setrecursionlimit(200_000)
    try:
        run = _FairRun(model, cons, opts)
        verdict = run.eval(phi)
    finally:
        sys.setrecursionlimit(limit)
    return Verdict(verdict, [], Stats(run.steps, 0, 0, 0))
