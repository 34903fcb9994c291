"""Entailment: exact for finite theories, bounded saturation for schematic ones.

Every positive answer carries a :class:`Proof` in compactness normal form:
finitely many members ``x1..xn`` of the theory plus the claim that
``x1 -> ... -> xn -> goal`` is valid. :func:`check_proof` re-verifies both
parts independently of how the proof was found.

Negative answers for infinite theories come from recipe models whose
coverage table proves they satisfy the whole theory (see
:func:`knowbench.semantics.coverage`), so the refutation is exact.
"""

from __future__ import annotations

import itertools
import math
import os
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Optional, Sequence, Union

from .propositional import Problem, tautology
from .syntax import (And, Atom, Formula, Implies, K, Not, atoms, basic_subformulas,
                     chain, formula_key, kn, split_chain, to_text)
from .theory import (Schema, Theory, contains, default_candidates, enumerate_instances,
                     finite, finite_axioms, has_schema, instantiate, is_closed, is_finite,
                     membership, atoms_of)
from . import semantics as sem

DEFAULT_BOUND = 3
BOUND_ENV = "KNOWBENCH_BOUND"
SCHEMA_VERSION = 1

# subset checks spent looking for a minimum-size premise set before settling
# for a deletion-minimal one
MIN_CORE_BUDGET = 512
# K-basics considered as lemma targets / hypotheses per saturation round
LIFT_LIMIT = 40

RECIPE_NOTE = ("the recipe falsifies the goal exactly and its coverage table shows it "
               "satisfies every member of the theory; rows for the named recipes restate "
               "published case analyses and are trusted, not machine-proved")


def default_bound() -> int:
    raw = os.environ.get(BOUND_ENV, "").strip()
    if not raw:
        return DEFAULT_BOUND
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{BOUND_ENV} must be a non-negative integer, got {raw!r}") from None
    if value < 0:
        raise ValueError(f"{BOUND_ENV} must be non-negative")
    return value


def is_valid(f: Formula) -> bool:
    """Classical validity with every basic formula treated as a variable."""
    return tautology(f)


# ---------------------------------------------------------------- proofs

@dataclass(frozen=True)
class Proof:
    premises: tuple
    core: Formula
    goal: Formula
    witnesses: tuple = field(default=(), compare=False)

    @property
    def premise_count(self) -> int:
        return len(self.premises)


def _canonical(fs: Iterable[Formula]) -> list:
    return sorted(set(fs), key=formula_key)


def make_proof(t: Optional[Theory], premises: Iterable[Formula], goal: Formula,
               canonical: bool = True) -> Proof:
    prem = _canonical(premises) if canonical else list(premises)
    if t is None:
        wit = ()
    else:
        wit = tuple(membership(t, p).witness for p in prem)
    return Proof(tuple(prem), chain(prem, goal), goal, wit)


def check_proof(t: Theory, pf: Proof, bound: Optional[int] = None) -> bool:
    """Accept iff the core is exactly ``premises -> goal``, is valid, and every premise is in ``t``."""
    try:
        ants, concl = split_chain(pf.core, len(pf.premises))
    except ValueError:
        return False
    if concl != pf.goal or tuple(ants) != tuple(pf.premises):
        return False
    if not is_valid(pf.core):
        return False
    return all(contains(t, p, bound) is True for p in pf.premises)


# ---------------------------------------------------------------- verdicts

@dataclass(frozen=True)
class Entailed:
    proof: Proof
    kind = "entailed"

    @property
    def goal(self) -> Formula:
        return self.proof.goal


@dataclass(frozen=True)
class RefutedFinite:
    goal: Formula
    countermodel: sem.FiniteTable
    kind = "refuted-finite"


@dataclass(frozen=True)
class RefutedByRecipe:
    goal: Formula
    recipe: object
    coverage: sem.Coverage
    sample: object = field(default=None, compare=False)
    note: str = RECIPE_NOTE
    kind = "refuted-by-recipe"


@dataclass(frozen=True)
class Unknown:
    goal: Formula
    bound: int
    report: tuple = ()
    kind = "unknown"

    @property
    def bound_report(self) -> dict:
        return dict(self.report)


Verdict = Union[Entailed, RefutedFinite, RefutedByRecipe, Unknown]


def is_refuted(v: Verdict) -> bool:
    return isinstance(v, (RefutedFinite, RefutedByRecipe))


# ---------------------------------------------------------------- finite theories

def _smallest_core(pb: Problem, pool: Sequence[Formula], goal: Formula,
                   fallback: list) -> list:
    """Fewest premises, ties broken by printed core; deletion-minimal if over budget."""
    n = len(pool)
    spent = 0
    for k in range(len(fallback) + 1):
        count = math.comb(n, k)
        if spent + count > MIN_CORE_BUDGET:
            return fallback
        spent += count
        found = [list(c) for c in itertools.combinations(range(n), k) if pb.entails(c, goal)]
        if found:
            return min(found, key=lambda c: to_text(chain([pool[i] for i in c], goal)))
    return fallback


def entails_finite(axioms: Iterable[Formula], goal: Formula,
                   theory: Optional[Theory] = None) -> Union[Entailed, RefutedFinite]:
    """Exact decision for a finite set of axioms; never unknown."""
    pool = _canonical(axioms)
    with Problem() as pb:
        pb.add_premises(pool)
        everything = list(range(len(pool)))
        core = pb.minimal_core(everything, goal)
        if core is None:
            values = pb.countermodel(everything, goal)
            return RefutedFinite(goal, sem.FiniteTable.of(values, default=False))
        best = _smallest_core(pb, pool, goal, core)
    t = theory if theory is not None else finite(pool)
    return Entailed(make_proof(t, [pool[i] for i in best], goal))


# ---------------------------------------------------------------- recipe refutation

_TOWER_HEIGHT = {0: 4, 1: 4, 2: 3, 3: 2}


def candidate_recipes(t: Theory, goal: Formula) -> list:
    return _recipes_over(tuple(sorted(atoms_of(t) | atoms(goal))))


@lru_cache(maxsize=64)
def _recipes_over(universe: tuple) -> list:
    out: list = [sem.N2, sem.N1]
    out += [sem.N1OverN2WithKnP(a) for a in universe]
    out += [sem.BadFormula(a) for a in universe]
    small = universe[:3]
    subsets = [sem.AtomSet(frozenset(c)) for r in range(len(small) + 1)
               for c in itertools.combinations(small, r)]
    out += [sem.AllKnowing(s) for s in subsets]
    for h in range(1, _TOWER_HEIGHT[len(small)] + 1):
        out += list(sem.tower_family(small, h))
    for size in (1, 2):
        out += list(sem.kripke_family(universe[:2], size))
    out += list(sem.kripke_family(universe[:1], 3, transitive_only=True))
    return out


_coverage_cache: dict = {}
_sample_cache: dict = {}


def recipe_coverage(m, t: Theory) -> sem.Coverage:
    key = (m, t)
    hit = _coverage_cache.get(key)
    if hit is None:
        hit = _coverage_cache[key] = sem.coverage(m, t)
    return hit


def _recipe_sample(m, t: Theory, bound: int):
    key = (m, t, bound)
    hit = _sample_cache.get(key)
    if hit is None:
        hit = sem.satisfies_theory(m, t, default_candidates(t), bound)
        if hit.status == "violated":
            raise AssertionError(f"coverage table for {sem.model_name(m)} is wrong: "
                                 f"{to_text(hit.witness)} is false")
        _sample_cache[key] = hit
    return hit


def refute_by_recipe(t: Theory, goal: Formula, bound: Optional[int] = None,
                     sample_bound: int = 1) -> Optional[RefutedByRecipe]:
    """First registered recipe that falsifies ``goal`` and provably satisfies ``t``."""
    for m in candidate_recipes(t, goal):
        if sem.evaluate(m, goal) is not False:
            continue
        cov = recipe_coverage(m, t)
        if cov.holds:
            sample = _recipe_sample(m, t, min(sample_bound, default_bound() if bound is None else bound))
            return RefutedByRecipe(goal, m, cov, sample)
    return None


# ---------------------------------------------------------------- saturation

def _lift_ready(t: Theory) -> bool:
    p, q = Atom("p"), Atom("q")
    return (contains(t, K(Implies(p, p))) is True
            and contains(t, instantiate(Schema.KDIST, p, q)) is True)


def _lift_proof(t: Theory, facts: dict, chosen: list, hyp: Optional[Formula],
                inner: Formula) -> Optional[list]:
    """Premises deriving ``K inner`` (or ``K hyp -> K inner``) from known K-facts.

    Uses one V instance ``K(x1 -> ... -> [hyp ->] inner)`` and one K
    instance per antecedent, exactly as in simulated necessitation.
    """
    ants = list(chosen) + ([hyp] if hyp is not None else [])
    body = chain(ants, inner)
    steps = [K(body)]
    cur = body
    for a in ants:
        steps.append(instantiate(Schema.KDIST, a, cur.r))
        cur = cur.r
    if not all(contains(t, s) is True for s in steps):
        return None
    premises = list(steps)
    for x in chosen:
        premises.extend(facts[x])
    return premises


def _k_basics(fs: Iterable[Formula]) -> list:
    out = set()
    for f in fs:
        out.update(b for b in basic_subformulas(f) if isinstance(b, K))
    return sorted(out, key=formula_key)


def _lemmas(t: Theory, pool: list, goal: Formula) -> dict:
    """Map lemma statement -> member premises that entail it."""
    facts: dict = {}
    for f in pool:
        if isinstance(f, K) and f.f not in facts:
            facts[f.f] = [f]
    lemmas: dict = {}
    kb = _k_basics(pool + [goal])
    targets = kb[:LIFT_LIMIT]
    changed = True
    while changed:
        changed = False
        inners = sorted(facts, key=formula_key)
        open_targets = [k for k in targets if k.f not in facts]
        if not open_targets:
            break
        hyps = [k.f for k in kb if k.f not in facts][:LIFT_LIMIT]
        with Problem() as pb:
            pb.add_premises(inners)
            hyp_idx = {h: pb.add_premise(h) for h in hyps}
            base = list(range(len(inners)))
            for k in open_targets:
                phi = k.f
                if pb.entails(base, phi):
                    core = pb.minimal_core(base, phi)
                    prem = _lift_proof(t, facts, [inners[i] for i in core], None, phi)
                    if prem is not None:
                        facts[phi] = prem
                        lemmas[k] = prem
                        changed = True
                    continue
                for h in hyps:
                    if h == phi:
                        continue
                    stmt = Implies(K(h), k)
                    if stmt in lemmas or not pb.entails(base + [hyp_idx[h]], phi):
                        continue
                    core = [i for i in pb.minimal_core(base + [hyp_idx[h]], phi) if i in base]
                    prem = _lift_proof(t, facts, [inners[i] for i in core], h, phi)
                    if prem is not None:
                        lemmas[stmt] = prem
    return lemmas


def _saturate(t: Theory, goal: Formula, bound: int) -> Verdict:
    cands0 = default_candidates(t, [goal])
    lift = _lift_ready(t)
    pool: list = []
    lemmas: dict = {}
    for r in range(bound + 1):
        cands = set(cands0) | {kn(j, c) for c in cands0 for j in range(1, r + 1)}
        pool = enumerate_instances(t, cands, r)
        lemmas = _lemmas(t, pool, goal) if lift else {}
        stmts = pool + [s for s in sorted(lemmas, key=formula_key) if s not in set(pool)]
        with Problem() as pb:
            pb.add_premises(stmts)
            core = pb.core(range(len(stmts)), goal)
        if core is None:
            continue
        expanded: list = []
        for i in core:
            s = stmts[i]
            expanded.extend(lemmas[s] if s in lemmas and s not in set(pool) else [s])
        v = entails_finite(expanded, goal, t)
        if not isinstance(v, Entailed):
            raise AssertionError("lemma expansion lost entailment")
        if not check_proof(t, v.proof, bound):
            raise AssertionError(f"engine produced a proof the kernel rejects: {to_text(goal)}")
        return v
    report = (("bound", bound), ("rounds", bound + 1), ("candidates", len(cands0)),
              ("instances", len(pool)), ("lemmas", len(lemmas)))
    return Unknown(goal, bound, report)


def entails(t: Theory, goal: Formula, bound: Optional[int] = None) -> Verdict:
    """Does ``t`` entail ``goal``?

    Exact for finite theories. Otherwise, in order: membership, recipe
    refutation, then saturation rounds ``0..bound`` in which round ``r``
    instantiates schemas over candidates with K-prefixes up to ``r`` and
    adds lifted lemmas ``K x`` / ``K y -> K x`` built from V and K.
    """
    bound = default_bound() if bound is None else bound
    return _entails(t, goal, bound)


@lru_cache(maxsize=1 << 15)
def _entails(t: Theory, goal: Formula, bound: int) -> Verdict:
    if t.universal:
        return Entailed(make_proof(t, [goal], goal))
    if t.deductive_closure_of is not None:
        v = _entails(t.deductive_closure_of, goal, bound)
        if isinstance(v, Entailed):
            return Entailed(make_proof(t.deductive_closure_of, v.proof.premises, goal))
        return v
    if is_finite(t):
        return entails_finite(finite_axioms(t), goal, t)
    if contains(t, goal, bound) is True:
        return Entailed(make_proof(t, [goal], goal))
    refuted = refute_by_recipe(t, goal, bound)
    if refuted is not None:
        return refuted
    return _saturate(t, goal, bound)


def clear_caches() -> None:
    _entails.cache_clear()
    _coverage_cache.clear()
    _sample_cache.clear()
    sem.clear_caches()


# ---------------------------------------------------------------- necessitation

class NecessitationError(ValueError):
    def __init__(self, requirement: str):
        self.requirement = requirement
        super().__init__(f"simulated necessitation not applicable: {requirement}")


def simulated_necessitation(t: Theory, proof: Proof, bound: Optional[int] = None) -> Proof:
    """From a proof of ``t |= x`` build the proof of ``t |= K x``.

    Premises, in order: ``K(x1 -> ... -> xn -> x)`` from V, the ``n``
    K instances peeling one antecedent each, then ``K x1 .. K xn`` by closure.
    """
    if not is_closed(t):
        outside = [to_text(p) for p in proof.premises if contains(t, K(p), bound) is not True]
        detail = f"; premises whose K-prefix is not a member: {', '.join(outside)}" if outside else ""
        raise NecessitationError("the theory is not closed" + detail)
    for s in (Schema.V, Schema.KDIST):
        if not has_schema(t, s):
            raise NecessitationError(f"the theory does not include schema {s.value}")
    if not check_proof(t, proof, bound):
        raise NecessitationError("the given proof does not check against the theory")
    body = proof.core
    steps = [K(body)]
    cur = body
    for x in proof.premises:
        steps.append(instantiate(Schema.KDIST, x, cur.r))
        cur = cur.r
    steps += [K(x) for x in proof.premises]
    out = make_proof(t, steps, K(proof.goal), canonical=False)
    for s in steps:
        if contains(t, s, bound) is not True:
            raise NecessitationError(f"{to_text(s)} is not a member")
    return out


def combine(t: Theory, proofs: Sequence[Proof], goal: Formula) -> Optional[Proof]:
    """Proof of ``goal`` from the premises of several proofs plus their goals' consequences."""
    premises = [p for pf in proofs for p in pf.premises]
    v = entails_finite(premises, goal, t)
    return v.proof if isinstance(v, Entailed) else None


# ---------------------------------------------------------------- consistency

@dataclass(frozen=True)
class Consistent:
    witness: object
    exact: bool
    evidence: object = None
    kind = "consistent"


@dataclass(frozen=True)
class Inconsistent:
    proof: Proof
    kind = "inconsistent"


@dataclass(frozen=True)
class ConsistencyUnknown:
    bound: int
    report: tuple = ()
    kind = "unknown"


def contradiction_for(t: Theory) -> Formula:
    names = sorted(atoms_of(t))
    p = Atom(names[0] if names else "p")
    return And(p, Not(p))


def _closed_parts(t: Theory) -> list:
    out = [i for i in t.includes if i.closed]
    for i in t.includes:
        out.extend(_closed_parts(i))
    return out


def is_consistent(t: Theory, bound: Optional[int] = None):
    bound = default_bound() if bound is None else bound
    goal = contradiction_for(t)
    v = entails(t, goal, bound)
    if isinstance(v, Entailed):
        return Inconsistent(v.proof)
    if isinstance(v, RefutedFinite):
        return Consistent(v.countermodel, True, "finite model of every axiom")
    if isinstance(v, RefutedByRecipe):
        return Consistent(v.recipe, True, v.coverage)
    tried = []
    for base in _closed_parts(t) + [t]:
        m = sem.Derived(base, sem.NO_ATOMS, bound)
        rep = sem.satisfies_theory(m, t, None, min(bound, 2))
        tried.append((sem.model_name(m), rep.status))
        if rep.holds:
            return Consistent(m, False, rep)
    return ConsistencyUnknown(bound, tuple(tried))


# ---------------------------------------------------------------- serialization

def proof_to_dict(pf: Proof) -> dict:
    return {
        "premises": [to_text(p) for p in pf.premises],
        "witnesses": list(pf.witnesses),
        "core": to_text(pf.core),
        "goal": to_text(pf.goal),
        "premise_count": pf.premise_count,
    }


def model_to_dict(m) -> dict:
    if isinstance(m, sem.FiniteTable):
        return {"assignments": {to_text(b): v for b, v in m.assignments}, "default": m.default}
    return {"name": sem.model_name(m)}


def sample_to_dict(rep) -> Optional[dict]:
    if rep is None:
        return None
    return {"status": rep.status, "checked": rep.checked,
            "witness": to_text(rep.witness) if rep.witness is not None else None,
            "unknown": len(rep.unknown)}


def verdict_to_dict(v) -> dict:
    out: dict = {"schema_version": SCHEMA_VERSION, "kind": v.kind}
    if isinstance(v, Entailed):
        out.update(proof_to_dict(v.proof))
    elif isinstance(v, RefutedFinite):
        out["goal"] = to_text(v.goal)
        out["countermodel"] = model_to_dict(v.countermodel)
    elif isinstance(v, RefutedByRecipe):
        out["goal"] = to_text(v.goal)
        out["recipe"] = sem.model_name(v.recipe)
        out["coverage"] = list(v.coverage.cases)
        out["sample"] = sample_to_dict(v.sample)
        out["note"] = v.note
    elif isinstance(v, Unknown):
        out["goal"] = to_text(v.goal)
        out["bound_report"] = v.bound_report
    elif isinstance(v, Inconsistent):
        out.update(proof_to_dict(v.proof))
    elif isinstance(v, Consistent):
        out["witness"] = model_to_dict(v.witness)
        out["exact"] = v.exact
        if isinstance(v.evidence, sem.Coverage):
            out["evidence"] = {"coverage": list(v.evidence.cases)}
        elif isinstance(v.evidence, sem.SampleReport):
            out["evidence"] = {"sample": sample_to_dict(v.evidence)}
        else:
            out["evidence"] = v.evidence
    elif isinstance(v, ConsistencyUnknown):
        out["bound_report"] = {"bound": v.bound, "tried": [list(x) for x in v.report]}
    return out
