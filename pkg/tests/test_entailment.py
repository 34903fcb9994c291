import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from conftest import formulas, oracle_entails, truth
from knowbench import entailment as ent
from knowbench import semantics as sem
from knowbench.syntax import And, Atom, Implies, K, Not, Or, basic_subformulas, iff, parse
from knowbench.theory import close, contains, finite, schemas, union

p, q = Atom("p"), Atom("q")
DIAG = iff(p, K(Not(p)))


def few_basics(fs):
    return len(set().union(*(basic_subformulas(f) for f in fs))) <= 12


@settings(max_examples=300, deadline=None)
@given(st.lists(formulas(max_leaves=6), max_size=4), formulas(max_leaves=6))
def test_entails_finite_matches_oracle(axioms, goal):
    if not few_basics(axioms + [goal]):
        return
    v = ent.entails_finite(axioms, goal)
    assert isinstance(v, ent.Entailed) == oracle_entails(axioms, goal)
    if isinstance(v, ent.Entailed):
        assert ent.check_proof(finite(axioms), v.proof)
        assert set(v.proof.premises) <= set(axioms)
    else:
        val = {b: v.countermodel.lookup(b) for b in
               set().union(*(basic_subformulas(f) for f in axioms + [goal]))}
        assert all(truth(a, val) for a in axioms) and not truth(goal, val)


def test_smallest_core_is_chosen():
    v = ent.entails_finite([p, Implies(p, q), q], q)
    assert v.proof.premises == (q,)


def test_validity_pair():
    assert ent.is_valid(parse("Kp | ~Kp"))
    assert not ent.is_valid(parse("K(p | ~p)"))


THEORIES = [
    schemas("V", "K"),
    close(schemas("V", "K")),
    close(union(schemas("V", "K", "KK"), finite([p]))),
    union(schemas("V", "K", "KK"), finite([p])),
    close(union(schemas("V", "K"), finite([DIAG]))),
    close(union(schemas("V", "K", "T"), finite([DIAG]))),
]
GOALS = [parse(s) for s in ("p", "~p", "Kp", "KKp", "K(p | ~p)", "KK(p | ~p)", "K~p",
                            "Kp -> KKp", "K(p -> q) -> Kp -> Kq", "p & ~p", "Kq")]


@pytest.mark.parametrize("t", THEORIES, ids=str)
def test_verdicts_are_sound(t):
    for g in GOALS:
        v = ent.entails(t, g, 2)
        if isinstance(v, ent.Entailed):
            assert ent.check_proof(t, v.proof, 2)
        elif isinstance(v, ent.RefutedByRecipe):
            assert sem.evaluate(v.recipe, g) is False
            assert v.coverage.holds
        elif isinstance(v, ent.RefutedFinite):
            assert sem.evaluate(v.countermodel, g) is False


def test_knower_core_verdicts():
    t = THEORIES[-1]
    assert isinstance(ent.entails(t, parse("p & ~p")), ent.Entailed)
    weak = THEORIES[4]
    v = ent.entails(weak, Not(p))
    assert isinstance(v, ent.RefutedByRecipe)
    assert sem.model_name(v.recipe) == "all-knowing(p)"


def mutants(pf, rng):
    """Broken variants of ``pf``; semantic mutants are kept only when the oracle says unsound."""
    prem = list(pf.premises)
    zz = Atom("zz")
    if prem:
        i = rng.randrange(len(prem))
        rest = prem[:i] + prem[i + 1:]
        yield ent.Proof(tuple(rest), pf.core, pf.goal)
        if not oracle_entails(rest, pf.goal):
            yield ent.Proof(tuple(rest), ent.chain(rest, pf.goal), pf.goal)
    yield ent.Proof(pf.premises, And(pf.core, zz), pf.goal)
    yield ent.Proof(pf.premises, pf.core, Not(pf.goal))
    yield ent.Proof(pf.premises + (zz,), ent.chain(prem + [zz], pf.goal), pf.goal)
    if not oracle_entails(prem, zz):
        yield ent.Proof(pf.premises, ent.chain(prem, zz), zz)


@pytest.mark.parametrize("t", THEORIES, ids=str)
def test_mutated_proofs_rejected(t):
    rng = random.Random(3)
    for g in GOALS:
        v = ent.entails(t, g, 2)
        if isinstance(v, ent.Entailed):
            for m in mutants(v.proof, rng):
                assert not ent.check_proof(t, m, 2)


def test_check_proof_requires_membership():
    pf = ent.make_proof(None, [p], p)
    assert ent.check_proof(finite([p]), pf)
    assert not ent.check_proof(finite([q]), pf)


def test_simulated_necessitation():
    t = close(union(schemas("V", "K", "T"), finite([DIAG])))
    base = ent.entails(t, Not(p)).proof
    lifted = ent.simulated_necessitation(t, base)
    assert lifted.goal == K(Not(p))
    assert ent.check_proof(t, lifted)


def test_necessitation_preconditions():
    open_t = union(schemas("V", "K"), finite([p]))
    pf = ent.make_proof(open_t, [p], p)
    with pytest.raises(ent.NecessitationError) as e:
        ent.simulated_necessitation(open_t, pf)
    assert "not closed" in str(e.value) and "p" in str(e.value)
    no_k = close(union(schemas("V"), finite([p])))
    with pytest.raises(ent.NecessitationError):
        ent.simulated_necessitation(no_k, ent.make_proof(no_k, [p], p))
    vk = close(union(schemas("V", "K"), finite([p])))
    with pytest.raises(ent.NecessitationError):
        ent.simulated_necessitation(vk, ent.make_proof(None, [q], q))


def test_consistency():
    assert isinstance(ent.is_consistent(THEORIES[-1]), ent.Inconsistent)
    c = ent.is_consistent(THEORIES[4])
    assert isinstance(c, ent.Consistent) and c.exact
    c = ent.is_consistent(finite([p, Not(q)]))
    assert isinstance(c, ent.Consistent)


def test_bound_env(monkeypatch):
    monkeypatch.setenv(ent.BOUND_ENV, "5")
    assert ent.default_bound() == 5
    monkeypatch.setenv(ent.BOUND_ENV, "x")
    with pytest.raises(ValueError):
        ent.default_bound()


@pytest.mark.parametrize("t,g,kind", [
    (finite([p, Implies(p, q)]), "q", "entailed"),
    (finite([p]), "q", "refuted-finite"),
    (THEORIES[4], "~p", "refuted-by-recipe"),
])
def test_verdict_json_shape(t, g, kind):
    d = ent.verdict_to_dict(ent.entails(t, parse(g)))
    assert d["kind"] == kind and d["schema_version"] == ent.SCHEMA_VERSION
    json.dumps(d)
    keys = {"entailed": {"premises", "core", "goal", "premise_count", "witnesses"},
            "refuted-finite": {"goal", "countermodel"},
            "refuted-by-recipe": {"goal", "recipe", "coverage", "sample", "note"}}[kind]
    assert keys <= set(d)
