"""Formula syntax for CTL with polyadic state predicates.

Core connectives are Top, Bottom, Atom, NegAtom, And, Or and the six
modalities AX, EX, AF, EG, AR, EU.  Negation appears on atoms only; the
sugared forms (Implies, EF, AG, AU, ER) expand into the core language.
Modalities bind a state variable in their body (AR and EU bind one
variable per body) and are anchored at a term: either a bound variable
or a constant naming a model state.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Var:
    name: str

    def __repr__(self):
        return f"Var({self.name!r})"


@dataclass(frozen=True)
class Const:
    state: int

    def __repr__(self):
        return f"Const({self.state})"


Term = Var | Const


class Formula:
    """Base class; subclasses are frozen dataclasses and hashable."""

    __slots__ = ()


def _node(cls):
    return dataclass(frozen=True, repr=False)(cls)


@_node
class Top(Formula):
    def __repr__(self):
        return "Top()"


@_node
class Bottom(Formula):
    def __repr__(self):
        return "Bottom()"


@_node
class Atom(Formula):
    pred: str
    args: tuple

    def __repr__(self):
        return f"Atom({self.pred!r}, {self.args!r})"


@_node
class NegAtom(Formula):
    pred: str
    args: tuple

    def __repr__(self):
        return f"NegAtom({self.pred!r}, {self.args!r})"


@_node
class And(Formula):
    lhs: Formula
    rhs: Formula

    def __repr__(self):
        return f"And({self.lhs!r}, {self.rhs!r})"


@_node
class Or(Formula):
    lhs: Formula
    rhs: Formula

    def __repr__(self):
        return f"Or({self.lhs!r}, {self.rhs!r})"


class _Unary(Formula):
    """Shared shape for AX/EX/AF/EG and the sugared EF/AG: one binder."""

    __slots__ = ()


class _Binary(Formula):
    """Shared shape for AR/EU and sugared AU/ER: two binders, two bodies."""

    __slots__ = ()


def _unary(cls):
    cls = dataclass(frozen=True, repr=False)(cls)

    def _repr(self):
        return f"{cls.__name__}({self.var!r}, {self.body!r}, {self.at!r})"

    cls.__repr__ = _repr
    return cls


def _binary(cls):
    cls = dataclass(frozen=True, repr=False)(cls)

    def _repr(self):
        return (f"{cls.__name__}({self.var1!r}, {self.var2!r}, "
                f"{self.body1!r}, {self.body2!r}, {self.at!r})")

    cls.__repr__ = _repr
    return cls


@_unary
class AX(_Unary):
    var: str
    body: Formula
    at: Term


@_unary
class EX(_Unary):
    var: str
    body: Formula
    at: Term


@_unary
class AF(_Unary):
    var: str
    body: Formula
    at: Term


@_unary
class EG(_Unary):
    var: str
    body: Formula
    at: Term


@_binary
class AR(_Binary):
    var1: str
    var2: str
    body1: Formula
    body2: Formula
    at: Term


@_binary
class EU(_Binary):
    var1: str
    var2: str
    body1: Formula
    body2: Formula
    at: Term


# Sugared forms; expand_abbrev removes them.

@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@_unary
class EF(_Unary):
    var: str
    body: Formula
    at: Term


@_unary
class AG(_Unary):
    var: str
    body: Formula
    at: Term


@_binary
class AU(_Binary):
    var1: str
    var2: str
    body1: Formula
    body2: Formula
    at: Term


@_binary
class ER(_Binary):
    var1: str
    var2: str
    body1: Formula
    body2: Formula
    at: Term


CORE_UNARY = (AX, EX, AF, EG)
SUGAR_UNARY = (EF, AG)
UNARY_MODAL = CORE_UNARY + SUGAR_UNARY
CORE_BINARY = (AR, EU)
SUGAR_BINARY = (AU, ER)
BINARY_MODAL = CORE_BINARY + SUGAR_BINARY


def is_core(phi: Formula) -> bool:
    if isinstance(phi, (Implies,) + SUGAR_UNARY + SUGAR_BINARY):
        return False
    if isinstance(phi, (And, Or)):
        return is_core(phi.lhs) and is_core(phi.rhs)
    if isinstance(phi, UNARY_MODAL):
        return is_core(phi.body)
    if isinstance(phi, BINARY_MODAL):
        return is_core(phi.body1) and is_core(phi.body2)
    return True


def free_vars(phi: Formula) -> set[str]:
    """Free state variables of phi (sugared forms accepted)."""
    if isinstance(phi, (Top, Bottom)):
        return set()
    if isinstance(phi, (Atom, NegAtom)):
        return {t.name for t in phi.args if isinstance(t, Var)}
    if isinstance(phi, (And, Or, Implies)):
        return free_vars(phi.lhs) | free_vars(phi.rhs)
    if isinstance(phi, UNARY_MODAL):
        out = free_vars(phi.body) - {phi.var}
        if isinstance(phi.at, Var):
            out.add(phi.at.name)
        return out
    if isinstance(phi, BINARY_MODAL):
        out = (free_vars(phi.body1) - {phi.var1}) | (free_vars(phi.body2) - {phi.var2})
        if isinstance(phi.at, Var):
            out.add(phi.at.name)
        return out
    raise TypeError(f"not a formula: {phi!r}")


def all_vars(phi: Formula) -> set[str]:
    """Every variable name occurring in phi, free or bound."""
    if isinstance(phi, (Top, Bottom)):
        return set()
    if isinstance(phi, (Atom, NegAtom)):
        return {t.name for t in phi.args if isinstance(t, Var)}
    if isinstance(phi, (And, Or, Implies)):
        return all_vars(phi.lhs) | all_vars(phi.rhs)
    if isinstance(phi, UNARY_MODAL):
        out = all_vars(phi.body) | {phi.var}
        if isinstance(phi.at, Var):
            out.add(phi.at.name)
        return out
    if isinstance(phi, BINARY_MODAL):
        out = all_vars(phi.body1) | all_vars(phi.body2) | {phi.var1, phi.var2}
        if isinstance(phi.at, Var):
            out.add(phi.at.name)
        return out
    raise TypeError(f"not a formula: {phi!r}")


def size(phi: Formula) -> int:
    """Constructor count; strictly decreases into immediate subformulas."""
    if isinstance(phi, (Top, Bottom, Atom, NegAtom)):
        return 1
    if isinstance(phi, (And, Or, Implies)):
        return 1 + size(phi.lhs) + size(phi.rhs)
    if isinstance(phi, UNARY_MODAL):
        return 1 + size(phi.body)
    if isinstance(phi, BINARY_MODAL):
        return 1 + size(phi.body1) + size(phi.body2)
    raise TypeError(f"not a formula: {phi!r}")


def fresh_var(avoid, base: str = "z") -> str:
    """Deterministic fresh name: base, base1, base2, ... not in avoid."""
    if base not in avoid:
        return base
    i = 1
    while f"{base}{i}" in avoid:
        i += 1
    return f"{base}{i}"


def _subst_term(t: Term, name: str, repl: Term) -> Term:
    if isinstance(t, Var) and t.name == name:
        return repl
    return t


def substitute(repl: Term, name: str, phi: Formula) -> Formula:
    """Replace free occurrences of `name` by `repl`, avoiding capture.

    Binders that collide with a substituted variable are renamed to a
    fresh name before descending.
    """
    if isinstance(phi, (Top, Bottom)):
        return phi
    if isinstance(phi, Atom):
        return Atom(phi.pred, tuple(_subst_term(t, name, repl) for t in phi.args))
    if isinstance(phi, NegAtom):
        return NegAtom(phi.pred, tuple(_subst_term(t, name, repl) for t in phi.args))
    if isinstance(phi, And):
        return And(substitute(repl, name, phi.lhs), substitute(repl, name, phi.rhs))
    if isinstance(phi, Or):
        return Or(substitute(repl, name, phi.lhs), substitute(repl, name, phi.rhs))
    if isinstance(phi, Implies):
        return Implies(substitute(repl, name, phi.lhs), substitute(repl, name, phi.rhs))
    if isinstance(phi, UNARY_MODAL):
        at = _subst_term(phi.at, name, repl)
        var, body = phi.var, phi.body
        if var != name and name in free_vars(body):
            if isinstance(repl, Var) and repl.name == var:
                nv = fresh_var(all_vars(body) | {name, repl.name})
                body = substitute(Var(nv), var, body)
                var = nv
            body = substitute(repl, name, body)
        return type(phi)(var, body, at)
    if isinstance(phi, BINARY_MODAL):
        at = _subst_term(phi.at, name, repl)
        v1, b1 = phi.var1, phi.body1
        v2, b2 = phi.var2, phi.body2
        if v1 != name and name in free_vars(b1):
            if isinstance(repl, Var) and repl.name == v1:
                nv = fresh_var(all_vars(b1) | {name, repl.name})
                b1 = substitute(Var(nv), v1, b1)
                v1 = nv
            b1 = substitute(repl, name, b1)
        if v2 != name and name in free_vars(b2):
            if isinstance(repl, Var) and repl.name == v2:
                nv = fresh_var(all_vars(b2) | {name, repl.name})
                b2 = substitute(Var(nv), v2, b2)
                v2 = nv
            b2 = substitute(repl, name, b2)
        return type(phi)(v1, v2, b1, b2, at)
    raise TypeError(f"not a formula: {phi!r}")


_DUALS = {AX: EX, EX: AX, AF: EG, EG: AF, AR: EU, EU: AR}


def dualize(phi: Formula) -> Formula:
    """Negation-normal form of the negation of a core formula."""
    if isinstance(phi, Top):
        return Bottom()
    if isinstance(phi, Bottom):
        return Top()
    if isinstance(phi, Atom):
        return NegAtom(phi.pred, phi.args)
    if isinstance(phi, NegAtom):
        return Atom(phi.pred, phi.args)
    if isinstance(phi, And):
        return Or(dualize(phi.lhs), dualize(phi.rhs))
    if isinstance(phi, Or):
        return And(dualize(phi.lhs), dualize(phi.rhs))
    if isinstance(phi, CORE_UNARY):
        return _DUALS[type(phi)](phi.var, dualize(phi.body), phi.at)
    if isinstance(phi, CORE_BINARY):
        return _DUALS[type(phi)](phi.var1, phi.var2,
                                 dualize(phi.body1), dualize(phi.body2), phi.at)
    raise TypeError(f"dualize needs a core formula, got {phi!r}")


def expand_abbrev(phi: Formula) -> Formula:
    """Rewrite sugared connectives into the core language.

    Fresh dummy binders are chosen to occur nowhere in the affected
    bodies.  AG and AU expand through dualization of the corresponding
    existential forms; Implies dualizes its antecedent.
    """
    if isinstance(phi, (Top, Bottom, Atom, NegAtom)):
        return phi
    if isinstance(phi, And):
        return And(expand_abbrev(phi.lhs), expand_abbrev(phi.rhs))
    if isinstance(phi, Or):
        return Or(expand_abbrev(phi.lhs), expand_abbrev(phi.rhs))
    if isinstance(phi, Implies):
        return Or(dualize(expand_abbrev(phi.lhs)), expand_abbrev(phi.rhs))
    if isinstance(phi, CORE_UNARY):
        return type(phi)(phi.var, expand_abbrev(phi.body), phi.at)
    if isinstance(phi, CORE_BINARY):
        return type(phi)(phi.var1, phi.var2,
                         expand_abbrev(phi.body1), expand_abbrev(phi.body2), phi.at)
    if isinstance(phi, EF):
        body = expand_abbrev(phi.body)
        z = fresh_var(all_vars(body) | {phi.var})
        return EU(z, phi.var, Top(), body, phi.at)
    if isinstance(phi, AG):
        body = expand_abbrev(phi.body)
        z = fresh_var(all_vars(body) | {phi.var})
        return AR(z, phi.var, Bottom(), body, phi.at)
    if isinstance(phi, ER):
        b1 = expand_abbrev(phi.body1)
        b2 = expand_abbrev(phi.body2)
        z = fresh_var(all_vars(b1) | all_vars(b2) | {phi.var1, phi.var2})
        left = EU(phi.var2, z, b2,
                  And(substitute(Var(z), phi.var1, b1),
                      substitute(Var(z), phi.var2, b2)),
                  phi.at)
        return Or(left, EG(phi.var2, b2, phi.at))
    if isinstance(phi, AU):
        b1 = expand_abbrev(phi.body1)
        b2 = expand_abbrev(phi.body2)
        z = fresh_var(all_vars(b1) | all_vars(b2) | {phi.var1, phi.var2})
        left = AR(phi.var2, z, b2,
                  Or(substitute(Var(z), phi.var1, b1),
                     substitute(Var(z), phi.var2, b2)),
                  phi.at)
        return And(left, AF(phi.var2, b2, phi.at))
    raise TypeError(f"not a formula: {phi!r}")


def canonical(phi: Formula, env: dict | None = None, depth: int = 0):
    """Alpha-canonical structural key: binders become de Bruijn levels.

    Equal keys mean equal formulas modulo binder names; used for
    visited-store and merge-context identity.
    """
    if env is None:
        env = {}

    def term(t):
        if isinstance(t, Const):
            return ("c", t.state)
        lvl = env.get(t.name)
        return ("b", lvl) if lvl is not None else ("f", t.name)

    if isinstance(phi, Top):
        return ("T",)
    if isinstance(phi, Bottom):
        return ("F",)
    if isinstance(phi, (Atom, NegAtom)):
        tag = "P" if isinstance(phi, Atom) else "N"
        return (tag, phi.pred) + tuple(term(t) for t in phi.args)
    if isinstance(phi, (And, Or, Implies)):
        return (type(phi).__name__,
                canonical(phi.lhs, env, depth), canonical(phi.rhs, env, depth))
    if isinstance(phi, UNARY_MODAL):
        inner = dict(env)
        inner[phi.var] = depth
        return (type(phi).__name__, term(phi.at),
                canonical(phi.body, inner, depth + 1))
    if isinstance(phi, BINARY_MODAL):
        in1 = dict(env)
        in1[phi.var1] = depth
        in2 = dict(env)
        in2[phi.var2] = depth
        return (type(phi).__name__, term(phi.at),
                canonical(phi.body1, in1, depth + 1),
                canonical(phi.body2, in2, depth + 1))
    raise TypeError(f"not a formula: {phi!r}")


def alpha_equal(a: Formula, b: Formula) -> bool:
    return canonical(a) == canonical(b)


def fmt(phi: Formula, state_text=None) -> str:
    """Concrete syntax, parseable by the frontend.

    `state_text` maps a state id to its printed form; defaults to `#id`.
    """
    st = state_text or (lambda s: f"#{s}")

    def term(t):
        return t.name if isinstance(t, Var) else st(t.state)

    if isinstance(phi, Top):
        return "TRUE"
    if isinstance(phi, Bottom):
        return "FALSE"
    if isinstance(phi, Atom):
        return f"{phi.pred}({','.join(term(t) for t in phi.args)})"
    if isinstance(phi, NegAtom):
        return f"!{phi.pred}({','.join(term(t) for t in phi.args)})"
    if isinstance(phi, And):
        return f"({fmt(phi.lhs, state_text)} && {fmt(phi.rhs, state_text)})"
    if isinstance(phi, Or):
        return f"({fmt(phi.lhs, state_text)} || {fmt(phi.rhs, state_text)})"
    if isinstance(phi, Implies):
        return f"({fmt(phi.lhs, state_text)} -> {fmt(phi.rhs, state_text)})"
    name = type(phi).__name__
    if isinstance(phi, UNARY_MODAL):
        return f"{name}({phi.var},{fmt(phi.body, state_text)},{term(phi.at)})"
    if isinstance(phi, BINARY_MODAL):
        return (f"{name}({phi.var1},{phi.var2},{fmt(phi.body1, state_text)},"
                f"{fmt(phi.body2, state_text)},{term(phi.at)})")
    raise TypeError(f"not a formula: {phi!r}")


def to_json(phi: Formula):
    """Nested-list encoding, inverted by from_json."""
    def term(t):
        return ["v", t.name] if isinstance(t, Var) else ["s", t.state]

    if isinstance(phi, Top):
        return ["TRUE"]
    if isinstance(phi, Bottom):
        return ["FALSE"]
    if isinstance(phi, (Atom, NegAtom)):
        tag = "atom" if isinstance(phi, Atom) else "negatom"
        return [tag, phi.pred, [term(t) for t in phi.args]]
    if isinstance(phi, (And, Or, Implies)):
        return [type(phi).__name__.lower(), to_json(phi.lhs), to_json(phi.rhs)]
    if isinstance(phi, UNARY_MODAL):
        return [type(phi).__name__, phi.var, to_json(phi.body), term(phi.at)]
    if isinstance(phi, BINARY_MODAL):
        return [type(phi).__name__, phi.var1, phi.var2,
                to_json(phi.body1), to_json(phi.body2), term(phi.at)]
    raise TypeError(f"not a formula: {phi!r}")


_UNARY_BY_NAME = {c.__name__: c for c in UNARY_MODAL}
_BINARY_BY_NAME = {c.__name__: c for c in BINARY_MODAL}


def from_json(data) -> Formula:
    def term(d):
        return Var(d[1]) if d[0] == "v" else Const(d[1])

    tag = data[0]
    if tag == "TRUE":
        return Top()
    if tag == "FALSE":
        return Bottom()
    if tag == "atom":
        return Atom(data[1], tuple(term(t) for t in data[2]))
    if tag == "negatom":
        return NegAtom(data[1], tuple(term(t) for t in data[2]))
    if tag == "and":
        return And(from_json(data[1]), from_json(data[2]))
    if tag == "or":
        return Or(from_json(data[1]), from_json(data[2]))
    if tag == "implies":
        return Implies(from_json(data[1]), from_json(data[2]))
    if tag in _UNARY_BY_NAME:
        return _UNARY_BY_NAME[tag](data[1], from_json(data[2]), term(data[3]))
    if tag in _BINARY_BY_NAME:
        return _BINARY_BY_NAME[tag](data[1], data[2], from_json(data[3]),
                                    from_json(data[4]), term(data[5]))
    raise ValueError(f"bad formula encoding: {data!r}")
