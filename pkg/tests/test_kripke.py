import pytest

from sctl.engine import prove
from sctl.formula import expand_abbrev
from sctl.kripke import (BoolType, ExplicitModel, ModelError, compile_model,
                         eval_atom, next_states)
from sctl.parser import parse, resolve_ini

from conftest import MUTUAL_MODEL


def test_next_explicit(four_state_model):
    m = four_state_model
    a, b, c, d = (m.index[x] for x in "abcd")
    assert next_states(m, a) == [b, c]
    assert next_states(m, d) == [d]


def test_eval_atom_explicit(four_state_model):
    m = four_state_model
    a, b, c, d = (m.index[x] for x in "abcd")
    assert eval_atom(m, "P", [b])
    assert not eval_atom(m, "P", [a])
    assert eval_atom(m, "Q", [b, d])
    assert not eval_atom(m, "Q", [b, b])
    with pytest.raises(ModelError):
        eval_atom(m, "P", [a, b])
    with pytest.raises(ModelError):
        eval_atom(m, "nosuch", [a])


def test_totality_required():
    with pytest.raises(ModelError):
        ExplicitModel(["a", "b"], {"a": ["b"]}, {}, "a")


def test_mutual_compile_and_init():
    md = parse(MUTUAL_MODEL)
    model = compile_model(md)
    assert model.payload(model.init) == (False, 0, 1, 1)
    first = model.next(model.init)
    assert [model.payload(s) for s in first] == [(False, 0, 2, 1), (False, 0, 1, 2)]


def test_mutual_reachable_bug_state():
    md = parse(MUTUAL_MODEL)
    model = compile_model(md)
    reach = model.reachable()
    assert any(model.payload(s)[1] == 2 for s in reach)
    phi = expand_abbrev(resolve_ini(md.specs[0][1], model.init))
    assert prove(model, phi).provable


def test_totality_fallback_self_loop():
    text = """
    Model stuck() {
      Var { v : Bool; }
      Init { v := true; }
      Transition { v = false : {v := true;}; }
      Atomic { p(s) := s(v) = true; }
      Spec { q := EU(x, y, TRUE, p(y), ini); }
    }
    """
    model = compile_model(parse(text))
    assert model.next(model.init) == [model.init]


def test_parallel_assignment_reads_pre_state():
    text = """
    Model swap() {
      Var { a : Bool; b : Bool; }
      Init { a := true; b := false; }
      Transition { true : {a := b; b := a;}; }
      Atomic { p(s) := s(a) = true; }
      Spec { q := EU(x, y, TRUE, p(y), ini); }
    }
    """
    model = compile_model(parse(text))
    (succ,) = model.next(model.init)
    assert model.payload(succ) == (False, True)


def test_range_violation_at_search_time():
    text = """
    Model over() {
      Var { n : (0 .. 1); }
      Init { n := 0; }
      Transition { true : {n := n + 1;}; }
      Atomic { p(s) := s(n) = 1; }
      Spec { q := EU(x, y, TRUE, p(y), ini); }
    }
    """
    model = compile_model(parse(text))
    mid = model.next(model.init)[0]
    with pytest.raises(ModelError):
        model.next(mid)


def test_interning_bijective():
    md = parse(MUTUAL_MODEL)
    model = compile_model(md)
    reach = model.reachable()
    payloads = [model.payload(s) for s in reach]
    assert len(set(payloads)) == len(payloads)
    for s, pay in zip(reach, payloads):
        assert model.state_id(pay) == s


def test_compile_deterministic():
    m1 = compile_model(parse(MUTUAL_MODEL))
    m2 = compile_model(parse(MUTUAL_MODEL))
    r1, r2 = m1.reachable(), m2.reachable()
    assert [m1.payload(s) for s in r1] == [m2.payload(s) for s in r2]
    for s in r1:
        assert m1.next(s) == m2.next(s)


def test_state_text_format():
    model = compile_model(parse(MUTUAL_MODEL))
    assert model.state_text(model.init) == "{flag:=false;mutex:=0;a:=1;b:=1}"


def test_boolean_program_width():
    from sctl.benchgen import CpParams, gen_cp
    md = gen_cp(CpParams(a=3, b=12, seed=1))
    model = compile_model(md)
    assert len(model.payload(model.init)) == 12
    assert all(isinstance(t, BoolType) for t in model.var_types)


def test_missing_init_rejected():
    text = """
    Model bad() {
      Var { v : Bool; w : Bool; }
      Init { v := true; }
      Atomic { p(s) := s(v) = true; }
      Spec { q := EU(x, y, TRUE, p(y), ini); }
    }
    """
    from sctl.parser import ParseError
    with pytest.raises(ParseError):
        parse(text)
