"""Acceptance criteria 1-9; each prints one PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or ``python tests/test_acceptance.py``.
"""

import contextlib
import io
import itertools
import json
import random
import time

import pytest

from conftest import oracle_entails
from knowbench import entailment as ent
from knowbench import genericity as gen
from knowbench import semantics as sem
from knowbench.cli import main
from knowbench.syntax import And, Atom, Implies, K, Not, basic_subformulas, chain, kn, parse
from knowbench.theory import Schema, finite, kn_family, schema_instances, schemas, union

TIME_KNOWER = 1.0
TIME_THEOREM = 10.0
TIME_SUPERSET = 30.0
MIN_SAMPLE = 500
FUZZ = 10_000
MAX_BASICS = 12
TRIALS = 1_000
MUTANTS = 1_000

p, q = Atom("p"), Atom("q")


def fresh():
    ent.clear_caches()
    sem.clear_caches()


def reproduce(theorem):
    fresh()
    buf = io.StringIO()
    start = time.perf_counter()
    with contextlib.redirect_stdout(buf):
        code = main(["reproduce", theorem, "--json"])
    elapsed = time.perf_counter() - start
    return code, json.loads(buf.getvalue())["results"][theorem], elapsed


def proof_from(d):
    premises = tuple(parse(x) for x in d["premises"])
    return ent.Proof(premises, parse(d["core"]), parse(d["goal"]))


LINES: list = []


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    LINES.append(line)
    print(line)
    return ok, detail


# ---------------------------------------------------------------- criteria

def criterion_1():
    code, d, dt = reproduce("knower")
    theory = gen.knower_theory()
    goals = [x["goal"] for x in d["proofs"]]
    checked = all(ent.check_proof(theory, proof_from(x)) for x in d["proofs"])
    ok = code == 0 and goals == ["~p", "K~p", "p"] and checked and dt < TIME_KNOWER
    return report(1, ok, f"proofs of {', '.join(goals)} checked={checked} in {dt:.2f}s "
                         f"(limit {TIME_KNOWER}s)")


def criterion_2():
    code, d, dt = reproduce("weakened")
    rows = []
    ok = code == 0 and dt < TIME_THEOREM
    for label, r in d.items():
        if label == "reproduced":
            continue
        violated = sum(c["violated"] for c in r["cases"].values())
        unknown = sum(c["unknown"] for c in r["cases"].values())
        exact = r["not_p"]["kind"] == "refuted-by-recipe" and r["not_p"]["recipe"] == "all-knowing(p)"
        good = (r["model"].startswith("M[close(") and r["model"].endswith(", {}]") and exact
                and r["sample"]["status"] == "holds-on-sample"
                and r["sample"]["checked"] >= MIN_SAMPLE and violated == 0 and unknown == 0)
        ok &= good
        rows.append(f"{label}: {r['sample']['checked']} instances, {violated} violated")
    return report(2, ok, "; ".join(rows) + f"; {dt:.2f}s")


def criterion_3():
    code, d, dt = reproduce("kk-not-generic")
    f = d["falsification"]
    ok = (code == 0 and f["extension"] == "V + K + KK + {p}" and f["s"] == []
          and f["violated"] == "Kp -> KKp"
          and d["n1_refutation"]["kind"] == "refuted-by-recipe"
          and d["n1_refutation"]["recipe"] == "n1"
          and d["n1_sample"]["status"] == "holds-on-sample"
          and d["n1_sample"]["checked"] >= MIN_SAMPLE and dt < TIME_THEOREM)
    return report(3, ok, f"witness ({f['extension']}, {{}}, {f['violated']}); "
                         f"N1 sample {d['n1_sample']['checked']} instances; {dt:.2f}s")


def _case_suite(m, t, schemas_used):
    """Coverage table rows agree with sampled instances, and the recipe satisfies ``t``."""
    pool = gen.small_formulas(["p", "q"], 30) + [parse("p | ~p"), parse("q -> p | ~p")]
    for s, n in itertools.product(schemas_used, range(4)):
        sampled = all(sem.evaluate(m, kn(n, x)) for x in schema_instances(s, pool))
        if sem.schema_holds(m, s, n) != sampled:
            return False, 0
    rep = sem.satisfies_theory(m, t, pool[:24], 3)
    return sem.coverage(m, t).holds and rep.holds, rep.checked


def criterion_4():
    ok = True
    rows = []
    suites = {
        "vkk": ("Kq -> KKq", sem.N1OverN2WithKnP("p"),
                kn_family(["V", "KK"], [p, Implies(p, q)])),
        "kkk": ("K(p | ~p) -> KK(p | ~p)", sem.BadFormula("p"), kn_family(["K", "KK"])),
    }
    for rid, (expected, recipe, ext) in suites.items():
        code, d, dt = reproduce(rid)
        suite_ok, n = _case_suite(recipe, ext, list(Schema))
        good = code == 0 and d["violated"] == expected and suite_ok and dt < TIME_THEOREM
        ok &= good
        rows.append(f"{rid}: {d['violated']} via {sem.model_name(recipe)} "
                    f"(case suite {suite_ok}, {n} instances) {dt:.2f}s")
    for base, expected in ((schemas("V", "KK"), "Kp -> KKp"), (schemas("K", "KK"), "Kp -> KKp")):
        f = gen.falsify(base, gen.GENERIC)
        ok &= isinstance(f, gen.Falsification) and str(f.violated) == expected and f.verify()[0]
    return report(4, ok, "; ".join(rows))


def criterion_5():
    ok = True
    rows = []
    for rid in ("t-superset", "five-superset"):
        code, d, dt = reproduce(rid)
        pf = proof_from(d["inconsistency"])
        good = code == 0 and d["holds"] and pf.goal == And(p, Not(p)) and dt < TIME_SUPERSET
        ok &= good
        rows.append(f"{rid}: contradiction from {pf.premise_count} premises {dt:.2f}s")
    return report(5, ok, "; ".join(rows))


def fuzz_instances(seed=11):
    rng = random.Random(seed)
    names = ["p", "q", "r", "s"]
    while True:
        axioms = [gen._random_formula(rng, names, rng.randint(0, 4), 2)
                  for _ in range(rng.randint(0, 4))]
        goal = gen._random_formula(rng, names, rng.randint(0, 4), 2)
        if len(set().union(*(basic_subformulas(f) for f in axioms + [goal]))) <= MAX_BASICS:
            yield axioms, goal


def criterion_6():
    mismatches = entailed = 0
    for axioms, goal in itertools.islice(fuzz_instances(), FUZZ):
        got = isinstance(ent.entails_finite(axioms, goal), ent.Entailed)
        want = oracle_entails(axioms, goal)
        mismatches += got != want
        entailed += want
    return report(6, mismatches == 0,
                  f"{FUZZ} instances ({entailed} entailed), {mismatches} mismatches")


def criterion_7():
    a = ent.is_valid(parse("Kp | ~Kp"))
    b = ent.is_valid(parse("K(p | ~p)"))
    return report(7, a is True and b is False, f"Kp | ~Kp -> {a}; K(p | ~p) -> {b}")


def criterion_8():
    good = [(schemas("V"), gen.GENERIC), (schemas("K"), gen.GENERIC),
            (schemas("V", "K"), gen.GENERIC), (schemas("V", "K", "KK"), gen.CLOSED)]
    certs = [gen.certify(t, m) for t, m in good]
    ok = not any(isinstance(c, gen.NotDerivable) for c in certs)
    for t in (schemas("T"), schemas("5")):
        for mode in gen.MODES:
            ok &= isinstance(gen.certify(t, mode), gen.NotDerivable)
    rng = random.Random(20240601)
    cfg = gen.SearchConfig()
    status = {"holds-on-sample": 0, "violated": 0, "unknown": 0}
    for i in range(TRIALS):
        status[gen.soundness_trial(certs[i % len(certs)], rng, cfg).status] += 1
    ok &= status["violated"] == 0
    return report(8, ok, f"{TRIALS} trials: {status['holds-on-sample']} hold, "
                         f"{status['violated']} violated, {status['unknown']} unknown at bound")


def engine_proofs():
    diag = parse("p <-> K~p")
    from knowbench.theory import close
    theories = [close(union(schemas("V", "K", "T"), finite([diag]))),
                close(union(schemas("V", "K"), finite([diag]))),
                close(union(schemas("V", "K", "KK"), finite([p]))),
                kn_family(["V", "K", "KK"], [p, Implies(p, q)])]
    goals = [parse(s) for s in ("p", "~p", "K~p", "Kp", "KKp", "Kq", "KKq", "p & ~p",
                                "K(p | ~p)", "KK(p -> p)")]
    out = []
    for t in theories:
        for g in goals:
            v = ent.entails(t, g, 2)
            if isinstance(v, ent.Entailed):
                out.append((t, v.proof))
    for axioms, goal in itertools.islice(fuzz_instances(5), 300):
        v = ent.entails_finite(axioms, goal)
        if isinstance(v, ent.Entailed) and v.proof.premises:
            out.append((finite(axioms), v.proof))
    return out


def mutate(pf, rng):
    """One broken variant of ``pf``, or None when the chosen mutation happens to stay sound."""
    prem = list(pf.premises)
    kind = rng.choice(["drop", "drop-rebuild", "corrupt", "swap", "swap-rebuild"])
    zz = Atom("zz")
    if kind.startswith("drop"):
        i = rng.randrange(len(prem))
        rest = prem[:i] + prem[i + 1:]
        if kind == "drop":
            return ent.Proof(tuple(rest), pf.core, pf.goal)
        return None if oracle_entails(rest, pf.goal) else ent.Proof(tuple(rest), chain(rest, pf.goal), pf.goal)
    if kind == "corrupt":
        ants = prem[:]
        j = rng.randrange(len(ants))
        ants[j] = Not(ants[j])
        return ent.Proof(pf.premises, chain(ants, pf.goal), pf.goal)
    other = rng.choice([zz, Not(pf.goal), K(pf.goal)])
    if kind == "swap":
        return ent.Proof(pf.premises, pf.core, other)
    return None if oracle_entails(prem, other) else ent.Proof(pf.premises, chain(prem, other), other)


def criterion_9():
    proofs = engine_proofs()
    accepted = sum(ent.check_proof(t, pf, 2) for t, pf in proofs)
    rng = random.Random(9)
    made = rejected = 0
    while made < MUTANTS:
        t, pf = rng.choice(proofs)
        m = mutate(pf, rng)
        if m is None:
            continue
        made += 1
        rejected += not ent.check_proof(t, m, 2)
    ok = accepted == len(proofs) and rejected == made
    return report(9, ok, f"{accepted}/{len(proofs)} engine proofs accepted; "
                         f"{rejected}/{made} mutants rejected")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
            criterion_6, criterion_7, criterion_8, criterion_9]


@pytest.mark.parametrize("criterion", CRITERIA, ids=lambda c: c.__name__)
def test_criterion(criterion):
    ok, detail = criterion()
    assert ok, detail


if __name__ == "__main__":
    results = [c()[0] for c in CRITERIA]
    print(f"{sum(results)}/{len(results)} criteria pass")
