import json
import random

import pytest

from knowbench import entailment as ent
from knowbench import genericity as gen
from knowbench import semantics as sem
from knowbench.syntax import parse
from knowbench.theory import close, schemas, union, finite, normal_kripke_closure, deductive_closure


@pytest.mark.parametrize("t,mode,node", [
    (schemas("V"), gen.GENERIC, "AxiomV"),
    (schemas("K"), gen.GENERIC, "AxiomK"),
    (schemas("V", "K"), gen.GENERIC, "Union"),
    (schemas("V", "K", "KK"), gen.CLOSED, "ClosedGenericVKKK"),
    (schemas("V"), gen.CLOSED, "Weaken"),
    (close(schemas("V", "K")), gen.GENERIC, "Closure"),
    (deductive_closure(schemas("V")), gen.GENERIC, "DeductiveClosure"),
    (normal_kripke_closure(schemas("KK")), gen.CLOSED, "NormalKripkeClosure"),
])
def test_certify(t, mode, node):
    c = gen.certify(t, mode)
    assert gen.cert_to_dict(c)["node"] == node
    assert c.mode == mode
    assert c.theory() == t or node in ("Weaken", "NormalKripkeClosure")


@pytest.mark.parametrize("t", [schemas("T"), schemas("5"), schemas("V", "K", "T"),
                               finite([parse("p")]), schemas("KK")])
@pytest.mark.parametrize("mode", gen.MODES)
def test_not_derivable(t, mode):
    assert isinstance(gen.certify(t, mode), gen.NotDerivable)


def test_vkkk_only_closed():
    assert isinstance(gen.certify(schemas("V", "K", "KK"), gen.GENERIC), gen.NotDerivable)


def test_bad_mode():
    with pytest.raises(ValueError):
        gen.certify(schemas("V"), "sometimes")


@pytest.mark.parametrize("base,mode,violated,strategy", [
    (schemas("V", "K", "KK"), gen.GENERIC, "Kp -> KKp", "add-atom"),
    (schemas("V", "KK"), gen.GENERIC, "Kp -> KKp", "add-atom"),
    (schemas("K", "KK"), gen.GENERIC, "Kp -> KKp", "add-atom"),
    (schemas("V", "KK"), gen.CLOSED, "Kq -> KKq", "kn-two-atoms"),
    (schemas("K", "KK"), gen.CLOSED, "K(p | ~p) -> KK(p | ~p)", "kn-schemas"),
])
def test_falsify(base, mode, violated, strategy):
    f = gen.falsify(base, mode)
    assert isinstance(f, gen.Falsification)
    assert f.violated == parse(violated) and f.strategy == strategy
    ok, reason = f.verify()
    assert ok, reason
    assert f.trace and all(e.verdict.kind != "unknown" for e in f.trace)
    json.dumps(gen.falsification_to_dict(f))


def test_falsify_witness_for_vkkk():
    f = gen.falsify(schemas("V", "K", "KK"), gen.GENERIC)
    assert f.extension == union(schemas("V", "K", "KK"), finite([parse("p")]))
    assert f.s == sem.NO_ATOMS


def test_verify_rejects_tampering():
    f = gen.falsify(schemas("V", "K", "KK"), gen.GENERIC)
    f.violated = parse("K(p | ~p)")
    assert not f.verify()[0]
    f.violated = parse("Kp -> KKp")
    f.extension = schemas("V")
    assert not f.verify()[0]


def test_falsify_unknown_strategy():
    with pytest.raises(ValueError):
        gen.falsify(schemas("V"), strategy="guess")


def test_falsify_certified_theory_finds_nothing():
    cfg = gen.SearchConfig(random_trials=5)
    assert isinstance(gen.falsify(schemas("V", "K"), gen.GENERIC, cfg=cfg), gen.NotFound)


def test_config_json(tmp_path):
    cfg = gen.SearchConfig.from_json('{"seed": 7, "random_trials": 3}')
    assert cfg.seed == 7 and cfg.random_trials == 3 and cfg.bound == 2
    with pytest.raises(ValueError):
        gen.SearchConfig.from_json('{"seeds": 7}')


def test_knower_paradox():
    r = gen.knower_paradox()
    assert r.all_check()
    assert [str(pf.goal) for _, pf in r.proofs] == ["~p", "K~p", "p"]
    assert ent.check_proof(r.theory, r.contradiction)


@pytest.mark.parametrize("t,mode", [(schemas("V", "K"), gen.GENERIC),
                                    (schemas("V", "K", "KK"), gen.CLOSED)])
def test_weakened_consistency(t, mode):
    r = gen.knower_consistency(gen.certify(t, mode))
    assert r.holds


def test_consistency_needs_certificate():
    with pytest.raises(Exception):
        gen.knower_consistency(gen.certify(schemas("T"), gen.GENERIC))


@pytest.mark.parametrize("schema", ["T", "5"])
def test_no_superset(schema):
    r = gen.no_superset_demo(schema)
    assert r.holds


def test_soundness_trials_small():
    cert = gen.certify(schemas("V", "K"), gen.GENERIC)
    rng = random.Random(1)
    reports = [gen.soundness_trial(cert, rng, gen.SearchConfig()) for _ in range(20)]
    assert not any(r.status == "violated" for r in reports)


def test_small_formulas_deterministic():
    a = gen.small_formulas(["p", "q"], 24)
    assert a == gen.small_formulas(["q", "p"], 24) and len(set(a)) == 24
