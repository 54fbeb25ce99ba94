"""Benchmark model generators: random boolean programs and two concurrency
families (round-robin mutual exclusion, shift-register rings).

All randomness comes from random.Random(seed) (Mersenne Twister) with a
fixed draw order, so a (family, parameters, seed) triple always yields
the same ModelDef.  Generators emit the same ModelDef structure the
frontend parses, so instances can be written out as .model files.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .formula import (AF, AG, AR, AU, AX, EF, EG, ER, EU, EX, And, Atom,
                      NegAtom, Or, Var)
from .kripke import AtomicDef, BoolType, ModelDef, RangeType
from .parser import BinOp, BoolLit, IntLit, StateAccess, UnOp, VarRef


@dataclass
class CpParams:
    a: int = 3          # processes
    b: int = 12         # variables in total
    c: int = 0          # shared variables; 0 means b/2
    d: int = 0          # locals per process; 0 means c/a
    seed: int = 1

    def resolve(self):
        c = self.c or self.b // 2
        d = self.d or c // self.a
        if self.b != c + self.a * d:
            raise ValueError(f"inconsistent parameters: b={self.b} != c+a*d={c + self.a * d}")
        return self.a, self.b, c, d


@dataclass
class CspParams(CpParams):
    a: int = 2
    t: int = 0          # transitions per process; 0 means c
    p: int = 4          # parallel assignments per transition


def _bool_var(name):
    return (name, BoolType())


def _shared_names(c):
    return [f"v{i}" for i in range(1, c + 1)]


def _atomics_for(names):
    return [AtomicDef(n, ["s"], BinOp("=", StateAccess("s", n), BoolLit(True)))
            for n in names]


def gen_cp(params: CpParams) -> ModelDef:
    """Concurrent processes: every step one process negates one visible
    variable into another; shared variables start at a random boolean,
    locals at false."""
    a, b, c, d = params.resolve()
    rng = random.Random(params.seed)
    shared = _shared_names(c)
    locals_of = [[f"l{p}_{j}" for j in range(1, d + 1)] for p in range(a)]
    vars_ = [_bool_var(n) for n in shared] + \
            [_bool_var(n) for loc in locals_of for n in loc]
    init = {n: BoolLit(rng.random() < 0.5) for n in shared}
    for loc in locals_of:
        for n in loc:
            init[n] = BoolLit(False)
    transitions = []
    for p in range(a):
        visible = shared + locals_of[p]
        for target in visible:
            source = rng.choice(visible)
            transitions.append((BoolLit(True),
                                [(target, UnOp("!", VarRef(source)))]))
    return ModelDef(
        name=f"cp_a{a}_b{b}_s{params.seed}",
        vars=vars_, init=init, transitions=transitions,
        atomics=_atomics_for(shared),
        specs=[(f"P{i:02d}", property_formula(i, c)) for i in range(1, 25)],
        fairness=[])


def gen_csp(params: CspParams) -> ModelDef:
    """Concurrent sequential processes: per process a location counter
    cycling through t transition slots; each slot performs p parallel
    negation assignments between randomly chosen visible variables."""
    a, b, c, d = params.resolve()
    t = params.t or c
    rng = random.Random(params.seed)
    shared = _shared_names(c)
    locals_of = [[f"l{p}_{j}" for j in range(1, d + 1)] for p in range(a)]
    vars_ = [_bool_var(n) for n in shared] + \
            [_bool_var(n) for loc in locals_of for n in loc] + \
            [(f"loc{p}", RangeType(0, t - 1)) for p in range(a)]
    init = {n: BoolLit(rng.random() < 0.5) for n in shared}
    for loc in locals_of:
        for n in loc:
            init[n] = BoolLit(False)
    for p in range(a):
        init[f"loc{p}"] = IntLit(0)
    transitions = []
    for p in range(a):
        visible = shared + locals_of[p]
        for k in range(t):
            targets = rng.sample(visible, params.p)
            assigns = [(tgt, UnOp("!", VarRef(rng.choice(visible))))
                       for tgt in targets]
            assigns.append((f"loc{p}", IntLit((k + 1) % t)))
            guard = BinOp("=", VarRef(f"loc{p}"), IntLit(k))
            transitions.append((guard, assigns))
    return ModelDef(
        name=f"csp_a{a}_b{b}_s{params.seed}",
        vars=vars_, init=init, transitions=transitions,
        atomics=_atomics_for(shared),
        specs=[(f"P{i:02d}", property_formula(i, c)) for i in range(1, 25)],
        fairness=[])


def _v(i, var):
    return Atom(f"v{i}", (Var(var),))


def _fold(op, parts):
    out = parts[0]
    for p in parts[1:]:
        out = op(out, p)
    return out


def property_formula(index: int, c: int):
    """The checked properties, numbered 1..24.

    1..12 use a big disjunction over the shared variables; 13..24 are
    the same shapes with every conjunction and disjunction swapped.
    """
    if not 1 <= index <= 24:
        raise ValueError(f"property index out of range: {index}")
    if c < 3:
        raise ValueError("properties need at least 3 shared variables")
    swap = index > 12
    base = index if index <= 12 else index - 12
    big = _fold(And if swap else Or, [_v(i, "y") for i in range(3, c + 1)])
    join = Or if swap else And
    ini = Var("ini")

    def all_v(var):
        return _fold(And if swap else Or, [_v(i, var) for i in range(1, c + 1)])

    def impl(neg_pred, rest):
        # antecedents are atoms, so implication is a negated atom or'd in
        return Or(NegAtom(neg_pred, (Var("x"),)), rest)

    v2big = join(_v(2, "y"), big)

    if base == 1:
        return AG("x", all_v("x"), ini)
    if base == 2:
        return AF("x", all_v("x"), ini)
    if base == 3:
        return AG("x", impl("v1", AF("y", v2big, Var("x"))), ini)
    if base == 4:
        return AG("x", impl("v1", EF("y", v2big, Var("x"))), ini)
    if base == 5:
        return EG("x", impl("v1", AF("y", v2big, Var("x"))), ini)
    if base == 6:
        return EG("x", impl("v1", EF("y", v2big, Var("x"))), ini)
    big_w = _fold(And if swap else Or, [_v(i, "w") for i in range(3, c + 1)])
    if base == 7:
        return AU("x", "y", _v(1, "x"),
                  AU("u", "w", _v(2, "u"), big_w, Var("y")), ini)
    if base == 8:
        return AU("x", "y", _v(1, "x"),
                  EU("u", "w", _v(2, "u"), big_w, Var("y")), ini)
    if base == 9:
        return AU("x", "y", _v(1, "x"),
                  AR("u", "w", _v(2, "u"), big_w, Var("y")), ini)
    if base == 10:
        return AU("x", "y", _v(1, "x"),
                  ER("u", "w", _v(2, "u"), big_w, Var("y")), ini)
    big_z = _fold(And if swap else Or, [_v(i, "z") for i in range(3, c + 1)])
    if base == 11:
        return AR("x", "y", AX("u", _v(1, "u"), Var("x")),
                  AX("u", AU("w", "z", _v(2, "w"), big_z, Var("u")), Var("y")),
                  ini)
    if base == 12:
        return AR("x", "y", EX("u", _v(1, "u"), Var("x")),
                  EX("u", EU("w", "z", _v(2, "w"), big_z, Var("u")), Var("y")),
                  ini)
    raise AssertionError


# --- mutual exclusion --------------------------------------------------------

def gen_mutex(n: int):
    """Round-robin mutual exclusion: n processes, each cycling through
    noncritical(0) / trying(1) / critical(2).

    On its turn a process may idle or start trying; a trying process may
    enter only while no other process is critical, and may also delay;
    a critical process always releases.  The turn pointer advances every
    step, so the schedule itself is fair by construction; the fairness
    constraints rule out runs where some process stays trying forever
    (no process waits infinitely long).

    Returns (ModelDef, properties P1..P5, fairness constraints).
    """
    if n < 2:
        raise ValueError("mutual exclusion needs at least 2 processes")
    vars_ = [(f"state{i}", RangeType(0, 2)) for i in range(n)]
    vars_.append(("turn", RangeType(0, n - 1)))
    init = {f"state{i}": IntLit(0) for i in range(n)}
    init["turn"] = IntLit(0)

    def my_turn(i):
        return BinOp("=", VarRef("turn"), IntLit(i))

    def state_is(i, v):
        return BinOp("=", VarRef(f"state{i}"), IntLit(v))

    def advance(i):
        return ("turn", IntLit((i + 1) % n))

    transitions = []
    for i in range(n):
        others_critical = _fold(
            lambda a, b: BinOp("||", a, b),
            [state_is(j, 2) for j in range(n) if j != i]) if n > 1 else BoolLit(False)
        # noncritical: start trying, or idle
        transitions.append((BinOp("&&", my_turn(i), state_is(i, 0)),
                            [(f"state{i}", IntLit(1)), advance(i)]))
        transitions.append((BinOp("&&", my_turn(i), state_is(i, 0)),
                            [advance(i)]))
        # trying: enter when free; delaying is always possible
        transitions.append((BinOp("&&", BinOp("&&", my_turn(i), state_is(i, 1)),
                                  UnOp("!", others_critical)),
                            [(f"state{i}", IntLit(2)), advance(i)]))
        transitions.append((BinOp("&&", my_turn(i), state_is(i, 1)),
                            [advance(i)]))
        # critical: always release
        transitions.append((BinOp("&&", my_turn(i), state_is(i, 2)),
                            [(f"state{i}", IntLit(0)), advance(i)]))

    atomics = []
    for i in range(n):
        atomics.append(AtomicDef(f"non{i}", ["s"],
                                 BinOp("=", StateAccess("s", f"state{i}"), IntLit(0))))
        atomics.append(AtomicDef(f"try{i}", ["s"],
                                 BinOp("=", StateAccess("s", f"state{i}"), IntLit(1))))
        atomics.append(AtomicDef(f"cri{i}", ["s"],
                                 BinOp("=", StateAccess("s", f"state{i}"), IntLit(2))))

    fairness = [NegAtom(f"try{i}", (Var("s"),)) for i in range(n)]

    ini = Var("ini")

    def cri(i, var):
        return Atom(f"cri{i}", (Var(var),))

    def ncri(i, var):
        return NegAtom(f"cri{i}", (Var(var),))

    props = [
        ("P1", EF("x", And(cri(0, "x"), cri(1, "x")), ini)),
        ("P2", AG("x", Or(NegAtom("try0", (Var("x"),)),
                          AF("y", cri(0, "y"), Var("x"))), ini)),
        ("P3", AG("x", Or(NegAtom("try1", (Var("x"),)),
                          AF("y", cri(1, "y"), Var("x"))), ini)),
        ("P4", AG("x", Or(ncri(0, "x"),
                          AU("u", "w", cri(0, "u"),
                             And(ncri(0, "w"),
                                 AU("p", "q", ncri(0, "p"), cri(1, "q"), Var("w"))),
                             Var("x"))), ini)),
        ("P5", AG("x", Or(ncri(1, "x"),
                          AU("u", "w", cri(1, "u"),
                             And(ncri(1, "w"),
                                 AU("p", "q", ncri(1, "p"), cri(0, "q"), Var("w"))),
                             Var("x"))), ini)),
    ]

    md = ModelDef(name=f"mutex{n}", vars=vars_, init=init,
                  transitions=transitions, atomics=atomics,
                  specs=list(props), fairness=fairness)
    return md, props, fairness


# --- ring --------------------------------------------------------------------

def gen_ring(n: int):
    """Ring of n shift-register processes.

    Process i holds 5 internal bits and one output bit; on its
    (asynchronously scheduled) step it shifts, feeding in the previous
    process's output xor its own high bit, and publishes the old high
    bit as output.  Scheduling choice is the only nondeterminism, so no
    fairness constraints are generated.  One seed bit in process 0
    keeps the all-false fixed point unreachable.

    Returns (ModelDef, properties P1..P4, fairness constraints = []).
    """
    if n < 3:
        raise ValueError("ring needs at least 3 processes")
    vars_ = []
    for i in range(n):
        vars_ += [(f"r{i}_{k}", BoolType()) for k in range(5)]
        vars_.append((f"out{i}", BoolType()))
    init = {name: BoolLit(False) for name, _ in vars_}
    init["r0_0"] = BoolLit(True)

    transitions = []
    for i in range(n):
        prev = (i - 1) % n
        assigns = [(f"r{i}_0", BinOp("!=", VarRef(f"out{prev}"), VarRef(f"r{i}_4")))]
        assigns += [(f"r{i}_{k}", VarRef(f"r{i}_{k-1}")) for k in range(1, 5)]
        assigns.append((f"out{i}", VarRef(f"r{i}_4")))
        transitions.append((BoolLit(True), assigns))

    atomics = [AtomicDef("out0", ["s"],
                         BinOp("=", StateAccess("s", "out0"), BoolLit(True)))]

    ini = Var("ini")
    o = Atom("out0", (Var("y"),))
    no = NegAtom("out0", (Var("y"),))
    props = [
        ("P1", And(AG("x", AF("y", o, Var("x")), ini),
                   AG("x", AF("y", no, Var("x")), ini))),
        ("P2", And(AG("x", EF("y", o, Var("x")), ini),
                   AG("x", EF("y", no, Var("x")), ini))),
        ("P3", And(EG("x", AF("y", o, Var("x")), ini),
                   EG("x", AF("y", no, Var("x")), ini))),
        ("P4", And(EG("x", EF("y", o, Var("x")), ini),
                   EG("x", EF("y", no, Var("x")), ini))),
    ]

    md = ModelDef(name=f"ring{n}", vars=vars_, init=init,
                  transitions=transitions, atomics=atomics,
                  specs=list(props), fairness=[])
    return md, props, []
