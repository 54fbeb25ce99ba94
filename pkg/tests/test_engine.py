import random

import pytest

from sctl.engine import (CPT_FALSE, PROVED, UNKNOWN, EngineOptions,
                         StepLimitError, VisitedStore, _Run, cpt_step,
                         cpt_view, fair_loop_check, initial_cpt, prove,
                         prove_fair, skeleton_key, visited_query)
from sctl.formula import (AF, Atom, Const, EG, NegAtom, Top, Var, dualize)
from sctl.kripke import ExplicitModel
from sctl.oracle import Oracle

from conftest import random_closed_formula, random_explicit_model


def P(t):
    return Atom("P", (t,))


def test_cpt_step_af_unfold_shape(four_state_model):
    m = four_state_model
    a, b, c = m.index["a"], m.index["b"], m.index["c"]
    phi = AF("x", P(Var("x")), Const(a))
    run = _Run(m, EngineOptions())
    c0 = initial_cpt(phi)
    c1 = cpt_step(run, c0)
    # cpt(|-P(a), t, cpt(G1|-AF(b), cpt(G1|-AF(c), t, f), f)) with G1 = {a}
    assert cpt_view(c1) == (
        P(Const(a)), (),
        "t",
        (AF("x", P(Var("x")), Const(b)), (a,),
         (AF("x", P(Var("x")), Const(c)), (a,), "t", "f"),
         "f"))


def test_cpt_step_atom_resolution(four_state_model):
    m = four_state_model
    a = m.index["a"]
    run = _Run(m, EngineOptions())
    c2 = initial_cpt(P(Const(a)))
    out = cpt_step(run, c2)
    assert out is CPT_FALSE  # a not in P


def test_cpt_step_eg_merge(four_state_model):
    m = four_state_model
    d = m.index["d"]
    phi = EG("x", Top(), Const(d))
    run = _Run(m, EngineOptions())
    c = cpt_step(run, initial_cpt(phi))     # unfold at d
    entry, _ = run.skel(phi)
    assert d in entry.inprog
    assert cpt_view(c)[0] == Top()
    c = cpt_step(run, c)                    # TRUE takes the t-continuation
    assert isinstance(c.seq.goal, EG) and c.seq.gamma_states() == [d]
    assert cpt_view(cpt_step(run, c)) == "t"   # merge: EG(d) with d in the context


def test_prove_paper_examples(four_state_model):
    m = four_state_model
    a = m.index["a"]
    assert prove(m, AF("x", P(Var("x")), Const(a))).provable
    nested = AF("x", AF("y", Atom("Q", (Var("x"), Var("y"))), Var("x")), Const(a))
    assert prove(m, nested).provable
    assert not prove(m, EG("x", P(Var("x")), Const(a))).provable
    assert prove(m, EG("x", Top(), Const(a))).provable


def test_prove_rejects_open_or_sugared(four_state_model):
    from sctl.formula import EF
    with pytest.raises(ValueError):
        prove(four_state_model, P(Var("x")))
    with pytest.raises(ValueError):
        prove(four_state_model, EF("x", P(Var("x")), Const(0)))


def test_engines_agree_with_oracle_and_dual():
    rng = random.Random(2024)
    for _ in range(200):
        m = random_explicit_model(rng)
        phi = random_closed_formula(rng, m, rng.randint(1, 4))
        want = Oracle(m).valid(phi)
        assert prove(m, phi).provable == want
        assert prove(m, phi, EngineOptions(engine="recursive")).provable == want
        assert prove(m, phi, EngineOptions(memo=False)).provable == want
        assert prove(m, dualize(phi)).provable != want


def test_debug_ordering_measure_holds():
    rng = random.Random(99)
    for _ in range(60):
        m = random_explicit_model(rng, 5)
        phi = random_closed_formula(rng, m, 3)
        prove(m, phi, EngineOptions(debug_ordering=True))


def test_visited_store_lifecycle(four_state_model):
    m = four_state_model
    d = m.index["d"]
    phi = EG("x", Top(), Const(d))
    store = VisitedStore()
    key = skeleton_key(phi)
    assert visited_query(store, key, d) == UNKNOWN
    v1 = prove(m, phi, EngineOptions(visited_store=store))
    assert v1.provable
    assert visited_query(store, key, d) == PROVED
    v2 = prove(m, phi, EngineOptions(visited_store=store))
    assert v2.provable and v2.stats.steps == 1


def test_memo_neutral_and_step_reduction():
    rng = random.Random(4)
    wins = total = 0
    for _ in range(250):
        m = random_explicit_model(rng)
        phi = random_closed_formula(rng, m, rng.randint(1, 4))
        with_memo = prove(m, phi)
        without = prove(m, phi, EngineOptions(memo=False))
        assert with_memo.provable == without.provable
        total += 1
        if with_memo.stats.steps <= without.stats.steps:
            wins += 1
    assert wins / total >= 0.95


def test_bdd_backend_matches_hash():
    rng = random.Random(8)
    for _ in range(150):
        m = random_explicit_model(rng, 6)
        phi = random_closed_formula(rng, m, 3)
        assert prove(m, phi).provable == \
            prove(m, phi, EngineOptions(visited="bdd")).provable


def test_step_limit_is_an_error(four_state_model):
    m = four_state_model
    phi = AF("x", P(Var("x")), Const(m.index["a"]))
    with pytest.raises(StepLimitError):
        prove(m, phi, EngineOptions(step_limit=2))


def test_trace_is_deterministic(four_state_model):
    m = four_state_model
    phi = AF("x", P(Var("x")), Const(m.index["a"]))
    t1 = prove(m, phi, EngineOptions(trace=True)).trace
    t2 = prove(m, phi, EngineOptions(trace=True)).trace
    assert t1 == t2
    assert t1[0][0] == "goal" and t1[-1] == ("result", True)


# --- fairness ---

def test_fair_loop_check_examples():
    m = ExplicitModel(["a", "b"], {"a": ["b"], "b": ["a"]},
                      {"P": {"a"}, "Q": {"b"}}, "a")
    sub = lambda g: prove(m, g).provable
    a, b = m.index["a"], m.index["b"]
    C = [("z", Atom("P", (Var("z"),))), ("z", Atom("Q", (Var("z"),)))]
    assert fair_loop_check([a, b], C, m, sub)
    assert not fair_loop_check([a], C, m, sub)
    assert fair_loop_check([a], [], m, sub)


def test_fair_loop_check_lasso(lasso_model):
    m = lasso_model
    sub = lambda g: prove(m, g).provable
    s0, s1 = m.index["s0"], m.index["s1"]
    C = [("z", P(Var("z")))]
    assert not fair_loop_check([s0], C, m, sub)
    assert fair_loop_check([s1], C, m, sub)


def test_lasso_example(lasso_model):
    m = lasso_model
    s0 = m.index["s0"]
    af = AF("x", P(Var("x")), Const(s0))
    assert not prove_fair(m, af, []).provable
    assert prove_fair(m, af, [P(Var("z"))]).provable
    egt = EG("x", Top(), Const(s0))
    assert prove_fair(m, egt, [P(Var("z"))]).provable
    assert not prove_fair(m, egt, [P(Var("z")), NegAtom("P", (Var("z"),))]).provable


def test_fair_constraints_witnessed_at_different_states():
    m = ExplicitModel(["a", "b"], {"a": ["b"], "b": ["a"]},
                      {"P": {"a"}, "Q": {"b"}}, "a")
    egt = EG("x", Top(), Const(m.index["a"]))
    C = [Atom("P", (Var("z"),)), Atom("Q", (Var("z"),))]
    assert prove_fair(m, egt, C).provable


def test_fair_engine_matches_fair_oracle():
    rng = random.Random(55)
    for _ in range(200):
        m = random_explicit_model(rng, 6, binary_pred=False)
        phi = random_closed_formula(rng, m, rng.randint(1, 3), binary_pred=False)
        C = [(Atom if rng.random() < 0.5 else NegAtom)(rng.choice("PQ"), (Var("z"),))
             for _ in range(rng.randint(0, 2))]
        want = Oracle(m).valid_fair(phi, C)
        assert prove_fair(m, phi, C).provable == want


def test_long_cycle_iterative_engine():
    # a 2000-state ring; the rewriting loop must not hit Python's stack
    n = 2000
    labels = [f"s{i}" for i in range(n)]
    edges = {labels[i]: [labels[(i + 1) % n]] for i in range(n)}
    m = ExplicitModel(labels, edges, {"P": {labels[-1]}}, labels[0],
                      arities={"P": 1})
    phi = AF("x", P(Var("x")), Const(0))
    assert prove(m, phi).provable
    assert prove(m, EG("x", Top(), Const(0))).provable
    assert not prove(m, EG("x", P(Var("x")), Const(0))).provable


def test_concurrent_prove_calls_share_model():
    import threading
    from sctl.kripke import compile_model
    from sctl.parser import parse, resolve_ini
    from sctl.formula import expand_abbrev
    from conftest import MUTUAL_MODEL

    model = compile_model(parse(MUTUAL_MODEL))
    phi = expand_abbrev(resolve_ini(
        parse(MUTUAL_MODEL).specs[0][1], model.init))
    results = []
    errors = []

    def work():
        try:
            results.append(prove(model, phi).provable)
        except Exception as exc:          # noqa: BLE001 - recorded for the assert
            errors.append(exc)

    threads = [threading.Thread(target=work) for _ in range(8)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert not errors
    assert results == [True] * 8
    # interning stayed bijective under the concurrent expansion
    payloads = [model.payload(s) for s in model.reachable()]
    assert len(set(payloads)) == len(payloads)


def test_fair_needs_nonsimple_loop():
    # covering both constraints requires passing through w twice per round
    m = ExplicitModel(["u", "w", "v"],
                      {"u": ["w"], "w": ["u", "v"], "v": ["w"]},
                      {"P": {"u"}, "Q": {"v"}}, "u")
    egt = EG("x", Top(), Const(m.index["u"]))
    C = [Atom("P", (Var("z"),)), Atom("Q", (Var("z"),))]
    assert prove_fair(m, egt, C).provable
    assert Oracle(m).valid_fair(egt, C)
