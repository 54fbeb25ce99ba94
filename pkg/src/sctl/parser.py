"""Parser and static checker for the modeling language.

A model file has the shape

    Model name() {
      Var        { id : TYPE; ... }
      Init       { id := expr; ... }
      Transition { guard : { id := expr; ... }; ... }
      Atomic     { name(p, ...) := bexpr; ... }
      Fairness   { fml, fml, ... }          /* optional */
      Spec       { name := fml; ... }
    }

TYPE is `Bool` or `(lo .. hi)`.  Expressions use true/false, integer
literals, variables, + - = != < <= > >= && || ! and parentheses; inside
Atomic bodies a state parameter's variable is read as `param(var)`.
Spec formulas use TRUE/FALSE, (negated) atoms, && ||, and the
modalities AX EX AF EG EF AG AR ER AU EU; anchor terms are `ini` or a
bound variable.  Comments are /* ... */.
"""

from __future__ import annotations

from dataclasses import dataclass

from .formula import (AF, AG, AR, AU, AX, EF, EG, ER, EU, EX, And, Atom,
                      Bottom, Const, Formula, NegAtom, Or, Top, Var,
                      free_vars)
from .kripke import AtomicDef, BoolType, ModelDef, ModelError, RangeType


@dataclass
class Diagnostic:
    severity: str
    line: int
    col: int
    message: str

    def __str__(self):
        return f"{self.severity}:{self.line}:{self.col}: {self.message}"


class ParseError(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = diagnostics
        super().__init__("; ".join(str(d) for d in diagnostics))


# --- expression ASTs (used by Init, guards, assignments, Atomic bodies) ---

@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class VarRef:
    name: str


@dataclass(frozen=True)
class StateAccess:
    param: str
    var: str


@dataclass(frozen=True)
class UnOp:
    op: str
    arg: object


@dataclass(frozen=True)
class BinOp:
    op: str
    lhs: object
    rhs: object


# --- tokenizer ---

_PUNCT = ["..", ":=", "!=", "<=", ">=", "&&", "||",
          "{", "}", "(", ")", ";", ":", ",", "=", "<", ">", "!", "+", "-"]

_KEYWORDS = {"Model", "Var", "Init", "Transition", "Atomic", "Fairness", "Spec",
             "Bool", "true", "false", "TRUE", "FALSE", "ini"}


@dataclass
class Token:
    kind: str   # "ident", "int", "punct", "kw", "eof"
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    toks = []
    i, line, col = 0, 1, 1
    n = len(text)

    def bump(k):
        nonlocal i, line, col
        for ch in text[i:i + k]:
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
        i += k

    while i < n:
        ch = text[i]
        if ch in " \t\r\n":
            bump(1)
            continue
        if text.startswith("/*", i):
            end = text.find("*/", i + 2)
            if end < 0:
                raise ParseError([Diagnostic("error", line, col, "unterminated comment")])
            bump(end + 2 - i)
            continue
        if ch.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(Token("int", text[i:j], line, col))
            bump(j - i)
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            word = text[i:j]
            toks.append(Token("kw" if word in _KEYWORDS else "ident", word, line, col))
            bump(j - i)
            continue
        for p in _PUNCT:
            if text.startswith(p, i):
                toks.append(Token("punct", p, line, col))
                bump(len(p))
                break
        else:
            raise ParseError([Diagnostic("error", line, col, f"unexpected character {ch!r}")])
    toks.append(Token("eof", "", line, col))
    return toks


_MODALITIES = {"AX": AX, "EX": EX, "AF": AF, "EG": EG, "EF": EF, "AG": AG}
_MODALITIES2 = {"AR": AR, "ER": ER, "AU": AU, "EU": EU}


class _Parser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos]

    def at(self, text):
        t = self.peek()
        return t.text == text and t.kind in ("punct", "kw")

    def take(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, text):
        t = self.peek()
        if t.text != text or t.kind == "eof":
            self.fail(f"expected {text!r}, found {t.text!r}" if t.kind != "eof"
                      else f"expected {text!r}, found end of input", t)
        return self.take()

    def ident(self, what="identifier"):
        t = self.peek()
        if t.kind != "ident":
            self.fail(f"expected {what}, found {t.text!r}", t)
        return self.take().text

    def fail(self, msg, tok=None):
        tok = tok or self.peek()
        raise ParseError([Diagnostic("error", tok.line, tok.col, msg)])

    # expressions

    def expr(self):
        return self.or_expr()

    def or_expr(self):
        e = self.and_expr()
        while self.at("||"):
            self.take()
            e = BinOp("||", e, self.and_expr())
        return e

    def and_expr(self):
        e = self.not_expr()
        while self.at("&&"):
            self.take()
            e = BinOp("&&", e, self.not_expr())
        return e

    def not_expr(self):
        if self.at("!"):
            self.take()
            return UnOp("!", self.not_expr())
        return self.cmp_expr()

    def cmp_expr(self):
        e = self.add_expr()
        t = self.peek()
        if t.kind == "punct" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            self.take()
            return BinOp(t.text, e, self.add_expr())
        return e

    def add_expr(self):
        e = self.prim_expr()
        while True:
            t = self.peek()
            if t.kind == "punct" and t.text in ("+", "-"):
                self.take()
                e = BinOp(t.text, e, self.prim_expr())
            else:
                return e

    def prim_expr(self):
        t = self.peek()
        if t.kind == "int":
            self.take()
            return IntLit(int(t.text))
        if t.text in ("true", "false"):
            self.take()
            return BoolLit(t.text == "true")
        if t.text == "(":
            self.take()
            e = self.expr()
            self.expect(")")
            return e
        if t.kind == "ident":
            name = self.take().text
            if self.at("("):
                self.take()
                var = self.ident("variable name")
                self.expect(")")
                return StateAccess(name, var)
            return VarRef(name)
        self.fail(f"expected expression, found {t.text!r}", t)

    # formulas

    def formula(self):
        f = self.formula_and()
        while self.at("||"):
            self.take()
            f = Or(f, self.formula_and())
        return f

    def formula_and(self):
        f = self.formula_prim()
        while self.at("&&"):
            self.take()
            f = And(f, self.formula_prim())
        return f

    def term(self):
        t = self.peek()
        if t.text == "ini":
            self.take()
            return Var("ini")   # resolved to the initial state after parsing
        if t.kind == "ident":
            return Var(self.take().text)
        self.fail(f"expected 'ini' or a variable, found {t.text!r}", t)

    def atom_args(self):
        self.expect("(")
        args = [self.term()]
        while self.at(","):
            self.take()
            args.append(self.term())
        self.expect(")")
        return tuple(args)

    def formula_prim(self):
        t = self.peek()
        if t.text == "TRUE":
            self.take()
            return Top()
        if t.text == "FALSE":
            self.take()
            return Bottom()
        if t.text == "(":
            self.take()
            f = self.formula()
            self.expect(")")
            return f
        if t.text == "!":
            self.take()
            name = self.ident("predicate name")
            return NegAtom(name, self.atom_args())
        if t.kind == "ident" and t.text in _MODALITIES:
            tok = self.take()
            self.expect("(")
            x = self.ident("binder variable")
            self.expect(",")
            body = self.formula()
            self.expect(",")
            at = self.term()
            t2 = self.peek()
            if t2.text == ",":
                self.fail(f"{tok.text} takes (x, formula, term): too many arguments", t2)
            self.expect(")")
            return _MODALITIES[tok.text](x, body, at)
        if t.kind == "ident" and t.text in _MODALITIES2:
            tok = self.take()
            self.expect("(")
            x = self.ident("binder variable")
            self.expect(",")
            y = self.ident("binder variable")
            self.expect(",")
            b1 = self.formula()
            self.expect(",")
            b2 = self.formula()
            if not self.at(","):
                self.fail(f"{tok.text} takes (x, y, formula, formula, term): "
                          "missing argument", self.peek())
            self.take()
            at = self.term()
            self.expect(")")
            return _MODALITIES2[tok.text](x, y, b1, b2, at)
        if t.kind == "ident":
            name = self.take().text
            return Atom(name, self.atom_args())
        self.fail(f"expected formula, found {t.text!r}", t)

    # sections

    def model(self):
        self.expect("Model")
        name = self.ident("model name")
        self.expect("(")
        self.expect(")")
        self.expect("{")
        vars_ = self.var_section()
        init = self.section_init() if self.at("Init") else {}
        transitions = self.section_transitions() if self.at("Transition") else []
        atomics = self.section_atomics() if self.at("Atomic") else []
        fairness = self.section_fairness() if self.at("Fairness") else []
        specs = self.section_specs()
        self.expect("}")
        t = self.peek()
        if t.kind != "eof":
            self.fail(f"trailing input after model: {t.text!r}", t)
        return ModelDef(name=name, vars=vars_, init=init, transitions=transitions,
                        atomics=atomics, specs=specs, fairness=fairness)

    def var_section(self):
        self.expect("Var")
        self.expect("{")
        out = []
        while not self.at("}"):
            name = self.ident("variable name")
            self.expect(":")
            out.append((name, self.type_ann()))
            self.expect(";")
        self.take()
        return out

    def type_ann(self):
        t = self.peek()
        if t.text == "Bool":
            self.take()
            return BoolType()
        if t.text == "(":
            self.take()
            neg = self.at("-")
            if neg:
                self.take()
            lo = int(self.expect_int()) * (-1 if neg else 1)
            self.expect("..")
            neg = self.at("-")
            if neg:
                self.take()
            hi = int(self.expect_int()) * (-1 if neg else 1)
            self.expect(")")
            if hi < lo:
                self.fail(f"empty range ({lo} .. {hi})", t)
            return RangeType(lo, hi)
        self.fail(f"expected a type, found {t.text!r}", t)

    def expect_int(self):
        t = self.peek()
        if t.kind != "int":
            self.fail(f"expected integer, found {t.text!r}", t)
        return self.take().text

    def section_init(self):
        self.expect("Init")
        self.expect("{")
        out = {}
        while not self.at("}"):
            name = self.ident("variable name")
            if name in out:
                self.fail(f"duplicate Init assignment to {name}")
            self.expect(":=")
            out[name] = self.expr()
            self.expect(";")
        self.take()
        return out

    def section_transitions(self):
        self.expect("Transition")
        self.expect("{")
        out = []
        while not self.at("}"):
            guard = self.expr()
            self.expect(":")
            self.expect("{")
            assigns = []
            while not self.at("}"):
                name = self.ident("variable name")
                self.expect(":=")
                assigns.append((name, self.expr()))
                self.expect(";")
            self.take()
            self.expect(";")
            out.append((guard, assigns))
        self.take()
        return out

    def section_atomics(self):
        self.expect("Atomic")
        self.expect("{")
        out = []
        while not self.at("}"):
            name = self.ident("predicate name")
            self.expect("(")
            params = [self.ident("parameter")]
            while self.at(","):
                self.take()
                params.append(self.ident("parameter"))
            self.expect(")")
            self.expect(":=")
            out.append(AtomicDef(name, params, self.expr()))
            self.expect(";")
        self.take()
        return out

    def section_fairness(self):
        self.expect("Fairness")
        self.expect("{")
        out = []
        if not self.at("}"):
            out.append(self.formula())
            while self.at(","):
                self.take()
                out.append(self.formula())
        self.expect("}")
        return out

    def section_specs(self):
        self.expect("Spec")
        self.expect("{")
        out = []
        while not self.at("}"):
            name = self.ident("spec name")
            self.expect(":=")
            out.append((name, self.formula()))
            self.expect(";")
        self.take()
        return out


def parse(text: str) -> ModelDef:
    """Parse a model file; raises ParseError carrying diagnostics."""
    md = _Parser(tokenize(text)).model()
    _static_check(md)
    return md


def _static_check(md: ModelDef):
    diags = []
    declared = {n for n, _ in md.vars}
    preds = {}
    for ad in md.atomics:
        preds[ad.name] = len(ad.params)

    def check_formula(phi: Formula, bound: set, what: str):
        if isinstance(phi, (Top, Bottom)):
            return
        if isinstance(phi, (Atom, NegAtom)):
            if phi.pred not in preds:
                diags.append(Diagnostic("error", 0, 0,
                                        f"{what}: unknown predicate {phi.pred}"))
            elif preds[phi.pred] != len(phi.args):
                diags.append(Diagnostic(
                    "error", 0, 0,
                    f"{what}: predicate {phi.pred} expects {preds[phi.pred]} "
                    f"arguments, got {len(phi.args)}"))
            for a in phi.args:
                if isinstance(a, Var) and a.name != "ini" and a.name not in bound:
                    diags.append(Diagnostic("error", 0, 0,
                                            f"{what}: unbound variable {a.name}"))
            return
        if isinstance(phi, (And, Or)):
            check_formula(phi.lhs, bound, what)
            check_formula(phi.rhs, bound, what)
            return
        if isinstance(phi, (AX, EX, AF, EG, EF, AG)):
            _check_anchor(phi.at, bound, what, diags)
            check_formula(phi.body, bound | {phi.var}, what)
            return
        if isinstance(phi, (AR, ER, AU, EU)):
            _check_anchor(phi.at, bound, what, diags)
            check_formula(phi.body1, bound | {phi.var1}, what)
            check_formula(phi.body2, bound | {phi.var2}, what)
            return
        diags.append(Diagnostic("error", 0, 0, f"{what}: bad formula node {phi!r}"))

    for name, phi in md.specs:
        check_formula(phi, set(), f"spec {name}")
    for phi in md.fairness:
        fv = free_vars(phi) - {"ini"}
        if len(fv) != 1:
            diags.append(Diagnostic(
                "error", 0, 0,
                f"fairness constraint must have exactly one free state "
                f"variable, found {sorted(fv) or 'none'}"))
    for n in md.init:
        if n not in declared:
            diags.append(Diagnostic("error", 0, 0, f"Init assigns undeclared variable {n}"))
    for n, _ in md.vars:
        if n not in md.init:
            diags.append(Diagnostic("error", 0, 0, f"Init does not assign {n}"))
    if diags:
        raise ParseError(diags)


def _check_anchor(at, bound, what, diags):
    if isinstance(at, Var) and at.name != "ini" and at.name not in bound:
        diags.append(Diagnostic("error", 0, 0, f"{what}: unbound anchor {at.name}"))


def resolve_ini(phi: Formula, init_state: int) -> Formula:
    """Replace the reserved `ini` variable by the initial-state constant."""
    from .formula import substitute
    return substitute(Const(init_state), "ini", phi)


# --- expression compilation -------------------------------------------------

def eval_const(e) -> object:
    """Evaluate a constant expression (Init section)."""
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, UnOp) and e.op == "!":
        v = eval_const(e.arg)
        _need_bool(v, "!")
        return not v
    if isinstance(e, UnOp) and e.op == "-":
        v = eval_const(e.arg)
        _need_int(v, "-")
        return -v
    if isinstance(e, BinOp):
        a, b = eval_const(e.lhs), eval_const(e.rhs)
        return _apply_binop(e.op, a, b)
    raise ModelError(f"not a constant expression: {e!r}")


def _need_bool(v, op):
    if not isinstance(v, bool):
        raise ModelError(f"operator {op} needs a boolean, got {v!r}")


def _need_int(v, op):
    if not isinstance(v, int) or isinstance(v, bool):
        raise ModelError(f"operator {op} needs an integer, got {v!r}")


def _apply_binop(op, a, b):
    if op in ("&&", "||"):
        _need_bool(a, op)
        _need_bool(b, op)
        return (a and b) if op == "&&" else (a or b)
    if op in ("+", "-"):
        _need_int(a, op)
        _need_int(b, op)
        return a + b if op == "+" else a - b
    if op in ("=", "!="):
        eq = a == b
        return eq if op == "=" else not eq
    if op in ("<", "<=", ">", ">="):
        _need_int(a, op)
        _need_int(b, op)
        return {"<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b}[op]
    raise ModelError(f"unknown operator {op}")


def _expr_source(e, env, types, where):
    """Render an expression AST as a Python source fragment.

    env maps a variable name to a source fragment reading it; types maps
    names to declared types (used only for error messages and bool
    discipline).  Returns (source, kind) with kind in {"bool","int"}.
    """
    if isinstance(e, IntLit):
        return repr(e.value), "int"
    if isinstance(e, BoolLit):
        return ("True" if e.value else "False"), "bool"
    if isinstance(e, VarRef):
        src = env.get(e.name)
        if src is None:
            raise ModelError(f"{where}: undeclared variable {e.name}")
        kind = "bool" if isinstance(types[e.name], BoolType) else "int"
        return src, kind
    if isinstance(e, StateAccess):
        src = env.get((e.param, e.var))
        if src is None:
            raise ModelError(f"{where}: unknown state access {e.param}({e.var})")
        kind = "bool" if isinstance(types[e.var], BoolType) else "int"
        return src, kind
    if isinstance(e, UnOp) and e.op == "!":
        src, kind = _expr_source(e.arg, env, types, where)
        if kind != "bool":
            raise ModelError(f"{where}: ! applied to non-boolean")
        return f"(not {src})", "bool"
    if isinstance(e, UnOp) and e.op == "-":
        src, kind = _expr_source(e.arg, env, types, where)
        if kind != "int":
            raise ModelError(f"{where}: unary - applied to non-integer")
        return f"(-{src})", "int"
    if isinstance(e, BinOp):
        a, ka = _expr_source(e.lhs, env, types, where)
        b, kb = _expr_source(e.rhs, env, types, where)
        if e.op in ("&&", "||"):
            if ka != "bool" or kb != "bool":
                raise ModelError(f"{where}: {e.op} needs boolean operands")
            pyop = "and" if e.op == "&&" else "or"
            return f"({a} {pyop} {b})", "bool"
        if e.op in ("+", "-"):
            if ka != "int" or kb != "int":
                raise ModelError(f"{where}: {e.op} needs integer operands")
            return f"({a} {e.op} {b})", "int"
        if e.op in ("=", "!="):
            if ka != kb:
                raise ModelError(f"{where}: comparison of {ka} with {kb}")
            pyop = "==" if e.op == "=" else "!="
            return f"({a} {pyop} {b})", "bool"
        if e.op in ("<", "<=", ">", ">="):
            if ka != "int" or kb != "int":
                raise ModelError(f"{where}: {e.op} needs integer operands")
            return f"({a} {e.op} {b})", "bool"
    raise ModelError(f"{where}: bad expression {e!r}")


def compile_state_expr(e, index, types, want_bool=False, where="expression"):
    """Compile an expression over one state into fn(payload) -> value."""
    env = {n: f"s[{i}]" for n, i in index.items()}
    src, kind = _expr_source(e, env, types, where)
    if want_bool and kind != "bool":
        raise ModelError(f"{where}: guard must be boolean")
    return eval(compile(f"lambda s: {src}", f"<{where}>", "eval"))


def compile_atomic(ad: AtomicDef, index, types):
    """Compile an Atomic body into fn(payload, ...) over parameter states."""
    if len(set(ad.params)) != len(ad.params):
        raise ModelError(f"atomic {ad.name}: duplicate parameter")
    env = {}
    for k, p in enumerate(ad.params):
        for n, i in index.items():
            env[(p, n)] = f"a{k}[{i}]"
    src, kind = _expr_source(ad.body, env, types, where=f"atomic {ad.name}")
    if kind != "bool":
        raise ModelError(f"atomic {ad.name}: body must be boolean")
    argl = ", ".join(f"a{k}" for k in range(len(ad.params)))
    return eval(compile(f"lambda {argl}: {src}", f"<atomic {ad.name}>", "eval"))


# --- rendering (inverse of parse, used by benchgen and round-trip tests) ----

def render_expr(e) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, StateAccess):
        return f"{e.param}({e.var})"
    if isinstance(e, UnOp):
        return f"{e.op}{render_expr(e.arg)}" if e.op == "-" else f"!({render_expr(e.arg)})"
    if isinstance(e, BinOp):
        return f"({render_expr(e.lhs)} {e.op} {render_expr(e.rhs)})"
    raise ModelError(f"bad expression {e!r}")


def render_formula(phi: Formula) -> str:
    def term(t):
        if isinstance(t, Var):
            return t.name
        raise ModelError("cannot render state constants in source formulas")

    if isinstance(phi, Top):
        return "TRUE"
    if isinstance(phi, Bottom):
        return "FALSE"
    if isinstance(phi, Atom):
        return f"{phi.pred}({', '.join(term(a) for a in phi.args)})"
    if isinstance(phi, NegAtom):
        return f"!{phi.pred}({', '.join(term(a) for a in phi.args)})"
    if isinstance(phi, And):
        return f"({render_formula(phi.lhs)} && {render_formula(phi.rhs)})"
    if isinstance(phi, Or):
        return f"({render_formula(phi.lhs)} || {render_formula(phi.rhs)})"
    name = type(phi).__name__
    if isinstance(phi, (AX, EX, AF, EG, EF, AG)):
        return f"{name}({phi.var}, {render_formula(phi.body)}, {term(phi.at)})"
    if isinstance(phi, (AR, ER, AU, EU)):
        return (f"{name}({phi.var1}, {phi.var2}, {render_formula(phi.body1)}, "
                f"{render_formula(phi.body2)}, {term(phi.at)})")
    raise ModelError(f"cannot render formula {phi!r}")


def render_modeldef(md: ModelDef) -> str:
    out = [f"Model {md.name}()", "{", "  Var {"]
    for n, ty in md.vars:
        out.append(f"    {n} : {ty};")
    out.append("  }")
    out.append("  Init {")
    for n, _ in md.vars:
        out.append(f"    {n} := {render_expr(md.init[n])};")
    out.append("  }")
    out.append("  Transition {")
    for guard, assigns in md.transitions:
        body = " ".join(f"{n} := {render_expr(e)};" for n, e in assigns)
        out.append(f"    {render_expr(guard)} : {{{body}}};")
    out.append("  }")
    out.append("  Atomic {")
    for ad in md.atomics:
        out.append(f"    {ad.name}({', '.join(ad.params)}) := {render_expr(ad.body)};")
    out.append("  }")
    if md.fairness:
        out.append("  Fairness {")
        out.append("    " + ",\n    ".join(render_formula(f) for f in md.fairness))
        out.append("  }")
    out.append("  Spec {")
    for name, phi in md.specs:
        out.append(f"    {name} := {render_formula(phi)};")
    out.append("  }")
    out.append("}")
    return "\n".join(out) + "\n"
