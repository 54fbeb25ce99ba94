import random

import pytest

from sctl.certify import (ProofTree, ProvableError, Sequent, TraceMismatch,
                          build_proof, check_proof, counterexample,
                          parse_proof, reconstruct_proof, render_proof)
from sctl.engine import EngineOptions, prove
from sctl.formula import (AF, AG, Atom, Const, EG, Top, Var, dualize,
                          expand_abbrev)
from sctl.kripke import ExplicitModel
from conftest import random_closed_formula, random_explicit_model


def P(t):
    return Atom("P", (t,))


def Q(t1, t2):
    return Atom("Q", (t1, t2))


def exp2_expected_tree(m):
    a, b, c = m.index["a"], m.index["b"], m.index["c"]
    phi = AF("x", P(Var("x")), Const(a))
    return ProofTree(
        "AF-R2", Sequent((), phi),
        (ProofTree("AF-R1", Sequent((), AF("x", P(Var("x")), Const(b))),
                   (ProofTree("atom-R", Sequent((), P(Const(b))), ()),)),
         ProofTree("AF-R1", Sequent((), AF("x", P(Var("x")), Const(c))),
                   (ProofTree("atom-R", Sequent((), P(Const(c))), ()),))))


def test_exp2_exact_tree(four_state_model):
    m = four_state_model
    a = m.index["a"]
    tree = build_proof(m, AF("x", P(Var("x")), Const(a)))
    assert tree == exp2_expected_tree(m)
    assert check_proof(m, tree, AF("x", P(Var("x")), Const(a))).valid


def test_nested_af_exact_tree(four_state_model):
    m = four_state_model
    a, b, c, d = (m.index[x] for x in "abcd")
    phi = AF("x", AF("y", Q(Var("x"), Var("y")), Var("x")), Const(a))
    tree = build_proof(m, phi)

    def branch(u):
        inner = AF("y", Q(Const(u), Var("y")), Const(u))
        return ProofTree(
            "AF-R1", Sequent((), AF("x", AF("y", Q(Var("x"), Var("y")), Var("x")),
                                    Const(u))),
            (ProofTree("AF-R2", Sequent((), inner),
                       (ProofTree("AF-R1",
                                  Sequent((), AF("y", Q(Const(u), Var("y")), Const(d))),
                                  (ProofTree("atom-R",
                                             Sequent((), Q(Const(u), Const(d))), ()),)),)),))

    expected = ProofTree("AF-R2", Sequent((), phi), (branch(b), branch(c)))
    assert tree == expected
    assert check_proof(m, tree, phi).valid


def test_eg_top_merge_proof(four_state_model):
    m = four_state_model
    d = m.index["d"]
    phi = EG("x", Top(), Const(d))
    tree = build_proof(m, phi)
    assert tree.rule == "EG-R"
    assert [c.rule for c in tree.children] == ["⊤-R", "EG-merge"]
    assert check_proof(m, tree, phi).valid


def test_merge_without_occurrence_rejected(four_state_model):
    m = four_state_model
    d = m.index["d"]
    phi = EG("x", Top(), Const(d))
    bogus = ProofTree("EG-merge", Sequent((d,), phi), ())
    rep = check_proof(m, bogus)
    assert not rep.valid
    assert "merge without prior occurrence" in rep.failure[1]


def test_leaf_tuple_mutation_rejected(four_state_model):
    m = four_state_model
    tree = exp2_expected_tree(m)
    b = m.index["b"]
    bad_leaf = ProofTree("atom-R", Sequent((), P(Const(m.index["a"]))), ())
    mutated = ProofTree(
        tree.rule, tree.sequent,
        (ProofTree("AF-R1", tree.children[0].sequent, (bad_leaf,)),
         tree.children[1]))
    rep = check_proof(m, mutated)
    assert not rep.valid


def test_counterexample_ag(four_state_model):
    m = four_state_model
    a = m.index["a"]
    agp = expand_abbrev(AG("x", P(Var("x")), Const(a)))
    ce = counterexample(m, agp)
    assert ce.rule == "EU-R1"
    assert ce.children[0].rule == "¬-R"
    assert check_proof(m, ce, dualize(agp)).valid


def test_counterexample_of_provable_raises(four_state_model):
    m = four_state_model
    with pytest.raises(ProvableError):
        counterexample(m, AF("x", P(Var("x")), Const(m.index["a"])))


def test_reconstruct_from_trace(four_state_model):
    m = four_state_model
    a = m.index["a"]
    phi = AF("x", P(Var("x")), Const(a))
    verdict = prove(m, phi, EngineOptions(trace=True))
    tree = reconstruct_proof(m, phi, verdict.trace)
    assert tree == exp2_expected_tree(m)


def test_reconstruct_mismatch(four_state_model):
    m = four_state_model
    a = m.index["a"]
    phi = AF("x", P(Var("x")), Const(a))
    other = EG("x", P(Var("x")), Const(a))
    verdict = prove(m, phi, EngineOptions(trace=True))
    with pytest.raises(TraceMismatch):
        reconstruct_proof(m, other, verdict.trace)
    with pytest.raises(TraceMismatch):
        reconstruct_proof(m, phi, [])
    bad = prove(m, other, EngineOptions(trace=True))
    with pytest.raises(TraceMismatch):
        reconstruct_proof(m, other, bad.trace)     # negative verdict


def test_render_machine_roundtrip(four_state_model):
    rng = random.Random(12)
    for _ in range(60):
        m = random_explicit_model(rng, 6)
        phi = random_closed_formula(rng, m, 3)
        tree = build_proof(m, phi)
        if tree is None:
            tree = build_proof(m, dualize(phi))
        text = render_proof(tree, "machine")
        assert parse_proof(text) == tree


def test_render_paper_single_atom(four_state_model):
    m = four_state_model
    tree = build_proof(m, P(Const(m.index["b"])))
    out = render_proof(tree, "paper", m)
    assert out == "0: |- P(b)\t[]\n"


def test_diamond_chain_certificates_stay_small():
    # k stacked diamonds: without subproof sharing an AF certificate
    # would have 2^k leaves; shared fragments keep it linear
    k = 200
    labels = []
    edges = {}
    for i in range(k):
        labels += [f"t{i}", f"l{i}", f"r{i}"]
        edges[f"t{i}"] = [f"l{i}", f"r{i}"]
        edges[f"l{i}"] = [f"t{i+1}" if i + 1 < k else "goal"]
        edges[f"r{i}"] = [f"t{i+1}" if i + 1 < k else "goal"]
    labels.append("goal")
    edges["goal"] = ["goal"]
    m = ExplicitModel(labels, edges, {"P": {"goal"}}, "t0", arities={"P": 1})
    phi = AF("x", P(Var("x")), Const(m.index["t0"]))
    tree = build_proof(m, phi)
    assert check_proof(m, tree, phi).valid
    distinct = set()

    def count(n):
        if n.nid in distinct:
            return
        distinct.add(n.nid)
        for c in n.children:
            count(c)

    count(tree)
    assert len(distinct) < 10 * k      # linear, not exponential
    text = render_proof(tree, "machine")
    assert parse_proof(text) == tree


def test_checked_proofs_have_true_conclusions():
    # checker soundness: an accepted proof's conclusion holds semantically
    from sctl.oracle import Oracle
    rng = random.Random(44)
    accepted = 0
    for _ in range(150):
        m = random_explicit_model(rng, 6)
        phi = random_closed_formula(rng, m, rng.randint(1, 3))
        tree = build_proof(m, phi)
        if tree is None:
            continue
        assert check_proof(m, tree, phi).valid
        assert Oracle(m).valid(phi)
        accepted += 1
    assert accepted > 40


def test_checker_is_independent_of_builder(four_state_model):
    # hand-written valid proof, never produced by the builder: proves the
    # right disjunct even though the builder prefers the left one
    m = four_state_model
    b = m.index["b"]
    from sctl.formula import Or
    phi = Or(P(Const(b)), Top())
    handmade = ProofTree("∨-R2", Sequent((), phi),
                         (ProofTree("⊤-R", Sequent((), Top()), ()),))
    assert check_proof(m, handmade, phi).valid


def test_mutations_rejected():
    from conftest import breaking_mutation
    rng = random.Random(911)
    rejected = produced = 0
    while produced < 300:
        m = random_explicit_model(rng, 6)
        phi = random_closed_formula(rng, m, rng.randint(1, 3))
        tree = build_proof(m, phi)
        goal = phi
        if tree is None:
            goal = dualize(phi)
            tree = build_proof(m, goal)
        assert check_proof(m, tree, goal).valid
        mut = breaking_mutation(rng, tree, m)
        if mut is None or mut == tree:
            continue
        produced += 1
        if not check_proof(m, mut, goal).valid:
            rejected += 1
    assert rejected == produced
