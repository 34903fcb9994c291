"""Genericity certificates, falsification search and the paradox reproductions.

Genericity is never decided here. A theory is either certified by a tree
built from known closure rules, or falsified by an explicit extension
``T' ⊇ T`` and atom set ``S`` for which the derived model ``M_{T',S}``
falsifies some member of ``T`` exactly.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from . import semantics as sem
from .entailment import (Entailed, NecessitationError, Proof, RefutedByRecipe, RefutedFinite,
                         check_proof, entails, entails_finite, is_refuted, make_proof,
                         simulated_necessitation)
from .syntax import And, Atom, Formula, Implies, K, Not, Or, formula_key, iff, kn, parse, to_text
from .theory import (ALL_FORMULAS, Schema, Theory, close, contains, deductive_closure,
                     enumerate_instances, finite, includes_presentation, is_closed, kn_family,
                     normal_kripke_closure, schemas, union, union_all)

GENERIC = "generic"
CLOSED = "closed-generic"
MODES = (GENERIC, CLOSED)

P = Atom("p")
DIAGONAL = iff(P, K(Not(P)))


def _check_mode(mode: str) -> str:
    if mode not in MODES:
        raise ValueError(f"mode must be one of {', '.join(MODES)}, got {mode!r}")
    return mode


# ---------------------------------------------------------------- certificates

@dataclass(frozen=True)
class AxiomV:
    """V is generic."""
    mode = GENERIC

    def theory(self) -> Theory:
        return schemas(Schema.V)


@dataclass(frozen=True)
class AxiomK:
    """K is generic."""
    mode = GENERIC

    def theory(self) -> Theory:
        return schemas(Schema.KDIST)


@dataclass(frozen=True)
class ClosedGenericVKKK:
    """V + K + KK is closed generic (not generic)."""
    mode = CLOSED

    def theory(self) -> Theory:
        return schemas(Schema.V, Schema.KDIST, Schema.KK)


@dataclass(frozen=True)
class UnionCert:
    """Unions of (closed) generic theories are (closed) generic; asserted, not machine-proved."""
    parts: tuple

    @property
    def mode(self) -> str:
        return CLOSED if any(c.mode == CLOSED for c in self.parts) else GENERIC

    def theory(self) -> Theory:
        return union_all(*(c.theory() for c in self.parts))


@dataclass(frozen=True)
class Weaken:
    """Every generic theory is closed generic; asserted, not machine-proved."""
    child: object
    mode = CLOSED

    def theory(self) -> Theory:
        return self.child.theory()


@dataclass(frozen=True)
class Closure:
    """The least closed theory including a (closed) generic theory keeps the mode."""
    child: object

    @property
    def mode(self) -> str:
        return self.child.mode

    def theory(self) -> Theory:
        return close(self.child.theory())


@dataclass(frozen=True)
class DeductiveClosure:
    """``{x : T0 |= x}`` keeps the mode of ``T0``."""
    child: object

    @property
    def mode(self) -> str:
        return self.child.mode

    def theory(self) -> Theory:
        return deductive_closure(self.child.theory())


@dataclass(frozen=True)
class NormalKripkeClosure:
    """Normal Kripke closure; ``child`` certifies the closed base ``close(T0 + V + K)``."""
    child: object

    @property
    def mode(self) -> str:
        return self.child.mode

    def theory(self) -> Theory:
        return Theory(deductive_closure_of=self.child.theory(), closed=True)


@dataclass(frozen=True)
class Assumed:
    """Hypothesis used in reductio arguments; never produced by :func:`certify`."""
    assumed: Theory
    mode: str = CLOSED

    def theory(self) -> Theory:
        return self.assumed


Certificate = Union[AxiomV, AxiomK, ClosedGenericVKKK, UnionCert, Weaken, Closure,
                    DeductiveClosure, NormalKripkeClosure, Assumed]


@dataclass(frozen=True)
class NotDerivable:
    reason: str
    kind = "not-derivable"


def is_hypothetical(c) -> bool:
    if isinstance(c, Assumed):
        return True
    if isinstance(c, UnionCert):
        return any(is_hypothetical(x) for x in c.parts)
    child = getattr(c, "child", None)
    return child is not None and is_hypothetical(child)


def _cert(t: Theory):
    if t.universal:
        return NotDerivable("T_inf has no model, so no derived model satisfies it")
    if t.axioms:
        return NotDerivable("explicit axioms have no certificate rule: "
                            + ", ".join(to_text(a) for a in t.axioms))
    if t.kn_schemas or t.kn_axioms:
        return NotDerivable("K^n-prefixed families have no certificate rule")
    if t.deductive_closure_of is not None:
        child = _cert(t.deductive_closure_of)
        if isinstance(child, NotDerivable):
            return child
        return NormalKripkeClosure(child) if t.closed else DeductiveClosure(child)
    if t.closed:
        child = _cert(replace(t, closed=False, name=""))
        return child if isinstance(child, NotDerivable) else Closure(child)
    parts: list = []
    rest = set(t.schemas)
    for bad in (Schema.T, Schema.FIVE):
        if bad in rest:
            return NotDerivable(f"schema {bad.value} has no certificate rule")
    if {Schema.V, Schema.KDIST, Schema.KK} <= rest:
        parts.append(ClosedGenericVKKK())
        rest -= {Schema.V, Schema.KDIST, Schema.KK}
    if Schema.KK in rest:
        return NotDerivable("schema KK is certified only together with V and K")
    if Schema.V in rest:
        parts.append(AxiomV())
    if Schema.KDIST in rest:
        parts.append(AxiomK())
    for inc in t.includes:
        c = _cert(inc)
        if isinstance(c, NotDerivable):
            return c
        parts.append(c)
    if not parts:
        return NotDerivable("the empty theory has no certificate rule")
    if len(parts) == 1:
        return parts[0]
    if any(p.mode == CLOSED for p in parts):
        parts = [Weaken(p) if p.mode == GENERIC else p for p in parts]
    return UnionCert(tuple(parts))


def certify(goal: Theory, mode: str = GENERIC):
    """Certificate that ``goal`` is (closed) generic, or :class:`NotDerivable`.

    Not-derivable only means the certificate rules do not apply; it never
    claims that the theory fails to be generic.
    """
    _check_mode(mode)
    c = _cert(goal)
    if isinstance(c, NotDerivable):
        return c
    if mode == GENERIC and c.mode == CLOSED:
        return NotDerivable("only closed genericity is derivable (V + K + KK rule)")
    if mode == CLOSED and c.mode == GENERIC:
        c = Weaken(c)
    return c


def cert_to_dict(c) -> dict:
    if isinstance(c, NotDerivable):
        return {"node": "NotDerivable", "reason": c.reason}
    out: dict = {"node": type(c).__name__, "mode": c.mode}
    if isinstance(c, UnionCert):
        out["node"] = "Union"
        out["parts"] = [cert_to_dict(x) for x in c.parts]
    elif isinstance(c, Assumed):
        out["theory"] = str(c.assumed)
        out["hypothetical"] = True
    elif hasattr(c, "child"):
        out["child"] = cert_to_dict(c.child)
    return out


# ---------------------------------------------------------------- falsification

@dataclass(frozen=True)
class SearchConfig:
    seed: int = 20240601
    random_trials: int = 200
    max_atoms: int = 3
    max_axiom_depth: int = 4
    max_k_depth: int = 3
    max_axioms: int = 2
    bound: int = 2

    @classmethod
    def from_json(cls, text: str) -> "SearchConfig":
        data = json.loads(text)
        unknown = set(data) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown search config keys: {', '.join(sorted(unknown))}")
        return cls(**data)

    @classmethod
    def load(cls, path: str) -> "SearchConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())


@dataclass
class Falsification:
    base: Theory
    extension: Theory
    s: sem.AtomSet
    violated: Formula
    mode: str
    strategy: str
    trace: list = field(default_factory=list)
    seed: Optional[int] = None

    def verify(self, bound: Optional[int] = None) -> tuple[bool, str]:
        """Re-check everything from scratch; returns ``(ok, reason)``."""
        if contains(self.base, self.violated) is not True:
            return False, "violated formula is not a member of the base"
        if not includes_presentation(self.extension, self.base):
            return False, "extension does not include the base presentation"
        if self.mode == CLOSED and not is_closed(self.extension):
            return False, "extension is not closed"
        trace: list = []
        ev = sem.Evaluator(trace=trace, bound=bound)
        value = ev.value(sem.Derived(self.extension, self.s), self.violated)
        if value is not False:
            return False, f"derived model gives {value} instead of false"
        for e in trace:
            v = e.verdict
            if not (isinstance(v, Entailed) or is_refuted(v)):
                return False, f"K-query {to_text(e.formula)} is unresolved"
            if isinstance(v, Entailed) and not check_proof(self.extension, v.proof, bound):
                return False, f"proof for {to_text(e.formula)} does not check"
            if isinstance(v, RefutedByRecipe) and not (
                    v.coverage.holds and sem.evaluate(v.recipe, v.goal) is False):
                return False, f"recipe refutation for {to_text(e.formula)} is not exact"
        self.trace = trace
        return True, "verified"


@dataclass(frozen=True)
class NotFound:
    tried: int
    strategies: tuple
    kind = "not-found-at-budget"


def _violation_candidates(base: Theory, names: list) -> list:
    cands = set()
    for a in names:
        x = Atom(a)
        cands.add(x)
        cands.add(Or(x, Not(x)))
    return sorted(set(enumerate_instances(base, cands, 0)), key=formula_key)


def _subsets(names: list) -> list:
    return [sem.AtomSet(frozenset(c)) for r in range(len(names) + 1)
            for c in itertools.combinations(names, r)]


def _try(base, ext, mode, strategy, names, bound, seed=None):
    if not includes_presentation(ext, base) or (mode == CLOSED and not is_closed(ext)):
        return None
    members = _violation_candidates(base, names)
    for s in _subsets(names):
        m = sem.Derived(ext, s, bound)
        for f in members:
            if sem.evaluate(m, f) is False:
                fal = Falsification(base, ext, s, f, mode, strategy, seed=seed)
                ok, _ = fal.verify(bound)
                if ok:
                    return fal
    return None


def _random_formula(rng: random.Random, names: list, depth: int, kdepth: int) -> Formula:
    if depth <= 0 or rng.random() < 0.25:
        return Atom(rng.choice(names))
    op = rng.choice(["not", "and", "or", "imp", "K"] if kdepth > 0 else ["not", "and", "or", "imp"])
    if op == "not":
        return Not(_random_formula(rng, names, depth - 1, kdepth))
    if op == "K":
        return K(_random_formula(rng, names, depth - 1, kdepth - 1))
    l = _random_formula(rng, names, depth - 1, kdepth)
    r = _random_formula(rng, names, depth - 1, kdepth)
    return {"and": And, "or": Or, "imp": Implies}[op](l, r)


def random_extension(base: Theory, mode: str, rng: random.Random, cfg: SearchConfig) -> Theory:
    names = ["p", "q", "r"][:cfg.max_atoms]
    axioms = [_random_formula(rng, names, rng.randint(0, cfg.max_axiom_depth), cfg.max_k_depth)
              for _ in range(rng.randint(1, cfg.max_axioms))]
    if mode == GENERIC:
        return union(base, finite(axioms))
    return close(union(base, finite(axioms)))


def falsify(base: Theory, mode: str = GENERIC, strategy: str = "auto",
            cfg: Optional[SearchConfig] = None, bound: Optional[int] = None):
    """Search for a verified :class:`Falsification` of (closed) genericity of ``base``.

    Named strategies run first: ``add-atom`` (``base + {p}``, generic mode),
    ``kn-schemas`` (``K^n`` of the base schemas) and ``kn-two-atoms``
    (additionally ``K^n p`` and ``K^n (p -> q)``), then ``random``.
    """
    _check_mode(mode)
    cfg = cfg or SearchConfig()
    bound = cfg.bound if bound is None else bound
    named = {
        "add-atom": lambda: union(base, finite([P])) if mode == GENERIC else close(union(base, finite([P]))),
        "kn-schemas": lambda: kn_family(base.schemas | base.kn_schemas),
        "kn-two-atoms": lambda: kn_family(base.schemas | base.kn_schemas,
                                          [P, Implies(P, Atom("q"))]),
    }
    order = {GENERIC: ["add-atom", "random"],
             CLOSED: ["kn-schemas", "kn-two-atoms", "add-atom", "random"]}[mode]
    if strategy != "auto":
        if strategy not in named and strategy != "random":
            raise ValueError(f"unknown strategy {strategy!r}")
        order = [strategy]
    tried = 0
    for name in order:
        if name == "random":
            rng = random.Random(cfg.seed)
            for _ in range(cfg.random_trials):
                ext = random_extension(base, mode, rng, cfg)
                tried += 1
                names = sorted(sem_atoms(ext) | {"p"})[:cfg.max_atoms]
                fal = _try(base, ext, mode, "random", names, bound, cfg.seed)
                if fal:
                    return fal
            continue
        ext = named[name]()
        tried += 1
        names = ["p", "q"] if name == "kn-two-atoms" else ["p"]
        fal = _try(base, ext, mode, name, names, bound)
        if fal:
            return fal
    return NotFound(tried, tuple(order))


def sem_atoms(t: Theory) -> set:
    from .theory import atoms_of
    return set(atoms_of(t))


def falsification_to_dict(f) -> dict:
    if isinstance(f, NotFound):
        return {"kind": f.kind, "tried": f.tried, "strategies": list(f.strategies)}
    return {
        "kind": "falsification",
        "mode": f.mode,
        "strategy": f.strategy,
        "base": str(f.base),
        "extension": str(f.extension),
        "s": sorted(f.s.names),
        "violated": to_text(f.violated),
        "seed": f.seed,
        "trace": [{"query": to_text(e.formula), "value": e.value,
                   "verdict": e.verdict.kind} for e in f.trace],
    }


# ---------------------------------------------------------------- certificate soundness sampling

def soundness_trial(cert, rng: random.Random, cfg: SearchConfig, candidates=None,
                    bound: int = 1) -> sem.SampleReport:
    """One random extension of the certified theory, checked in its derived model."""
    t = cert.theory()
    ext = random_extension(t, cert.mode, rng, cfg)
    names = ["p", "q", "r"][:cfg.max_atoms]
    s = sem.AtomSet(frozenset(x for x in names if rng.random() < 0.5))
    if candidates is None:
        pool = [_random_formula(rng, names, rng.randint(0, 2), 1) for _ in range(3)]
        candidates = set(pool)
    return sem.satisfies_theory(sem.Derived(ext, s, bound), t, candidates, bound)


# ---------------------------------------------------------------- the Knower paradox

def knower_theory() -> Theory:
    """Least closed theory containing V, K, T and ``p <-> K~p``."""
    return close(union(schemas(Schema.V, Schema.KDIST, Schema.T), finite([DIAGONAL])),)


@dataclass
class ParadoxReport:
    theory: Theory
    proofs: list          # (label, Proof)
    contradiction: Proof

    def all_check(self) -> bool:
        return all(check_proof(self.theory, pf) for _, pf in self.proofs) and \
            check_proof(self.theory, self.contradiction)


def knower_paradox(bound: Optional[int] = None) -> ParadoxReport:
    t = knower_theory()
    not_p = Not(P)
    v1 = entails(t, not_p, bound)
    if not isinstance(v1, Entailed):
        raise RuntimeError(f"expected a proof of ~p, got {v1.kind}")
    pf2 = simulated_necessitation(t, v1.proof, bound)
    v3 = entails_finite(list(pf2.premises) + [DIAGONAL], P, t)
    if not isinstance(v3, Entailed):
        raise RuntimeError("p does not follow from the necessitation premises")
    contra = entails_finite(list(v1.proof.premises) + list(v3.proof.premises), And(P, not_p), t)
    return ParadoxReport(t, [("~p", v1.proof), ("K~p", pf2), ("p", v3.proof)], contra.proof)


# ---------------------------------------------------------------- consistency via genericity

def small_formulas(names, count: int) -> list:
    """The ``count`` smallest formulas over ``names`` in :func:`formula_key` order."""
    layers = [[Atom(n) for n in sorted(names)]]
    pool = list(layers[0])
    while len(pool) < count * 4:
        new = []
        for f in pool:
            new += [Not(f), K(f)]
        for a, b in itertools.product(pool, repeat=2):
            new += [And(a, b), Or(a, b), Implies(a, b)]
        pool = sorted(set(pool) | set(new), key=formula_key)
    return pool[:count]


def knower_candidates() -> set:
    """Formula pool for sampling the weakened Knower theories."""
    q = Atom("q")
    base = [P, q, Not(P), K(Not(P)), K(P), Or(P, Not(P)), Implies(P, q), DIAGONAL,
            Implies(K(Not(P)), P), Not(K(Not(P))), K(q), And(P, q)]
    return set(base)


CASES = ("Case 1: member of H", "Case 2: diagonal axiom",
         "Case 3: K of a member of (T_KP)0", "Case 4: instance of T outside (T_KP)0")


@dataclass
class ConsistencyReport:
    h: Theory
    core: Theory          # (T_KP)0
    full: Theory          # T_KP
    s: sem.AtomSet
    model: sem.Derived
    sample: sem.SampleReport
    cases: dict
    all_knowing_coverage: sem.Coverage
    not_p: object         # verdict of (T_KP)0 |= ~p
    certificate: object

    @property
    def holds(self) -> bool:
        return (self.sample.holds and self.all_knowing_coverage.holds
                and isinstance(self.not_p, RefutedByRecipe))


def knower_core(h: Theory) -> Theory:
    return close(union(h, finite([DIAGONAL])))


def _case_of(f: Formula, h: Theory, core: Theory) -> str:
    if contains(h, f) is True:
        return CASES[0]
    if f == DIAGONAL:
        return CASES[1]
    if contains(core, f) is True:
        return CASES[2]
    return CASES[3]


def knower_consistency(cert, s: sem.AtomSet = sem.NO_ATOMS, bound: int = 3,
                       candidates=None) -> ConsistencyReport:
    if "p" in s:
        raise ValueError("precondition violated: p must not be in S")
    if isinstance(cert, NotDerivable):
        raise ValueError(f"precondition violated: no certificate ({cert.reason})")
    _check_mode(cert.mode)
    h = cert.theory()
    core = knower_core(h)
    full = union(core, schemas(Schema.T))
    model = sem.Derived(core, s, bound)
    rep = sem.satisfies_theory(model, full, candidates or knower_candidates(), bound,
                               stop_at_violation=False)
    cases = {c: {"checked": 0, "violated": 0, "unknown": 0} for c in CASES}
    unknown = set(rep.unknown)
    for f in rep.instances:
        row = cases[_case_of(f, h, core)]
        row["checked"] += 1
        if f in unknown:
            row["unknown"] += 1
        elif sem.evaluate(model, f) is False:
            row["violated"] += 1
    all_knowing = sem.AllKnowing(sem.AtomSet(s.names | {"p"}))
    cov = sem.coverage(all_knowing, core)
    v = entails(core, Not(P), bound)
    return ConsistencyReport(h, core, full, s, model, rep, cases, cov, v, cert)


# ---------------------------------------------------------------- no closed-generic supersets

@dataclass
class SupersetReport:
    schema: Schema
    certificate: Assumed
    core: Theory
    full: Theory
    violated: Formula          # member of T_KP false in the derived model
    violated_value: Optional[bool]
    inconsistency: Proof
    paradox: Optional[ParadoxReport]
    trace: list

    @property
    def holds(self) -> bool:
        return (self.violated_value is False and check_proof(self.full, self.inconsistency)
                and (self.paradox is None or self.paradox.all_check()))


def no_superset_demo(schema: Union[Schema, str], bound: int = 3) -> SupersetReport:
    """Reductio: assume ``V + K + schema`` closed generic and reach a contradiction.

    The hypothetical certificate implies ``M_{(T_KP)0, {}}`` satisfies
    ``T_KP = close(H + diagonal) + T``; the engine exhibits a member it
    falsifies exactly, and also proves ``T_KP`` inconsistent outright.
    """
    schema = schema if isinstance(schema, Schema) else Schema.from_name(schema)
    if schema not in (Schema.T, Schema.FIVE):
        raise ValueError("demo is defined for schemas T and 5")
    h = schemas(Schema.V, Schema.KDIST, schema)
    cert = Assumed(h, CLOSED)
    core = knower_core(h)
    full = union(core, schemas(Schema.T))
    if schema is Schema.T:
        violated = DIAGONAL
        paradox = knower_paradox(bound)
    else:
        violated = instantiate_five(Not(P))
        paradox = None
    trace: list = []
    value = sem.Evaluator(trace=trace, bound=bound).value(sem.Derived(core, sem.NO_ATOMS), violated)
    v = entails(full, And(P, Not(P)), bound)
    if not isinstance(v, Entailed):
        raise RuntimeError(f"no inconsistency proof found for the {schema.value} variant")
    return SupersetReport(schema, cert, core, full, violated, value, v.proof, paradox, trace)


def instantiate_five(x: Formula) -> Formula:
    return Implies(Not(K(x)), K(Not(K(x))))
