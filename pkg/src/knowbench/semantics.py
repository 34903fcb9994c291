"""Models, satisfaction and the named countermodel recipes.

A model assigns a truth value to every basic formula. Three kinds exist:

* :class:`FiniteTable`: explicit assignments plus a default;
* :class:`Derived`: ``M_{T,S}`` with atoms from ``S`` and ``K x`` true iff
  ``T |= x`` (three-valued, since entailment may be unknown);
* recipes, defined by well-founded recursion on formulas.

Evaluation is iterative so that long ``K`` chains do not exhaust the Python
stack; ``max_depth`` bounds the number of pending sub-evaluations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Union

from .syntax import (And, Atom, Formula, Implies, K, Not, Or, formula_key,
                     is_basic, kn, parse, strip_k, to_text)
from .theory import (SCHEMA_ORDER, Schema, Theory, default_candidates,
                     enumerate_instances)

DEFAULT_MAX_DEPTH = 10_000


class EvaluationError(RuntimeError):
    """A recipe query exceeded the depth limit or revisited itself."""


# ---------------------------------------------------------------- atom sets

@dataclass(frozen=True)
class AtomSet:
    """A finite or cofinite set of atom names."""
    names: frozenset = frozenset()
    cofinite: bool = False

    def __contains__(self, name: str) -> bool:
        return (name in self.names) != self.cofinite

    def __str__(self) -> str:
        body = "{" + ", ".join(sorted(self.names)) + "}"
        return f"all atoms except {body}" if self.cofinite else body


def atom_set(*names: str) -> AtomSet:
    return AtomSet(frozenset(names))


NO_ATOMS = AtomSet()
ALL_ATOMS = AtomSet(cofinite=True)


# ---------------------------------------------------------------- models

@dataclass(frozen=True)
class FiniteTable:
    assignments: tuple = ()   # sorted (basic formula, bool) pairs
    default: bool = False

    @classmethod
    def of(cls, values: Mapping, default: bool = False) -> "FiniteTable":
        for b in values:
            if not is_basic(b):
                raise ValueError(f"{to_text(b)} is not a basic formula")
        pairs = sorted(values.items(), key=lambda kv: formula_key(kv[0]))
        return cls(tuple(pairs), default)

    def lookup(self, b: Formula) -> bool:
        return dict(self.assignments).get(b, self.default)


@dataclass(frozen=True)
class Derived:
    theory: Theory
    atoms: AtomSet = NO_ATOMS
    bound: Optional[int] = None


@dataclass(frozen=True)
class N2Transparent:
    """All atoms false; ``K x`` true iff ``x`` is true here."""


@dataclass(frozen=True)
class N1OverN2:
    """All atoms true; ``K x`` true iff ``x`` is true in :class:`N2Transparent`."""


@dataclass(frozen=True)
class N1OverN2WithKnP:
    """As :class:`N1OverN2`, but ``K x`` is also true when ``x`` is ``K^n p``."""
    atom: str = "p"


@dataclass(frozen=True)
class BadFormula:
    """All atoms true; ``K x`` true iff ``x`` is not bad for ``atom``."""
    atom: str = "p"


@dataclass(frozen=True)
class AllKnowing:
    """``M_{T_inf,S}``: atoms from ``atoms``, every K-formula true."""
    atoms: AtomSet = NO_ATOMS


@dataclass(frozen=True)
class Tower:
    """Stack of levels; ``K x`` at level ``i`` holds iff ``x`` holds at level ``i+1``.

    The last level is :class:`AllKnowing`. A one-level tower is AllKnowing
    itself; N1/N2 are the analogous infinite stack over a transparent bottom.
    """
    levels: tuple = (NO_ATOMS,)

    def __post_init__(self):
        if not self.levels:
            raise ValueError("a tower needs at least one level")

    @property
    def height(self) -> int:
        return len(self.levels) - 1

    def rest(self) -> "Tower":
        return Tower(self.levels[1:])


@dataclass(frozen=True)
class Kripke:
    """Finite relational model viewed at world ``root``.

    ``K x`` holds at a world iff ``x`` holds at every successor. Only used as
    a countermodel source; the logic itself is not Kripkean.
    """
    worlds: tuple = (NO_ATOMS,)
    succ: tuple = ((),)
    root: int = 0

    def __post_init__(self):
        if len(self.worlds) != len(self.succ) or not 0 <= self.root < len(self.worlds):
            raise ValueError("malformed Kripke frame")
        for row in self.succ:
            if any(not 0 <= v < len(self.worlds) for v in row):
                raise ValueError("successor index out of range")

    def at(self, w: int) -> "Kripke":
        return Kripke(self.worlds, self.succ, w)

    def reachable(self) -> list:
        seen = {self.root}
        stack = [self.root]
        while stack:
            for v in self.succ[stack.pop()]:
                if v not in seen:
                    seen.add(v)
                    stack.append(v)
        return sorted(seen)

    def is_reflexive(self) -> bool:
        return all(w in self.succ[w] for w in range(len(self.worlds)))

    def is_transitive(self) -> bool:
        return all(x in self.succ[u] for u in range(len(self.worlds))
                   for v in self.succ[u] for x in self.succ[v])

    def is_euclidean(self) -> bool:
        return all(x in self.succ[v] for u in range(len(self.worlds))
                   for v in self.succ[u] for x in self.succ[u])


Recipe = Union[N2Transparent, N1OverN2, N1OverN2WithKnP, BadFormula, AllKnowing, Tower, Kripke]
RECIPE_TYPES = (N2Transparent, N1OverN2, N1OverN2WithKnP, BadFormula, AllKnowing, Tower, Kripke)
Model = Union[FiniteTable, Derived, Recipe]

N2 = N2Transparent()
N1 = N1OverN2()


def derived_model(t: Theory, s: AtomSet = NO_ATOMS, bound: Optional[int] = None) -> Derived:
    return Derived(t, s, bound)


def is_kn_of(f: Formula, atom: str) -> bool:
    n, g = strip_k(f)
    return g == Atom(atom)


def is_bad(f: Formula, atom: str) -> bool:
    """``p | ~p``, or a right-nested implication chain ending in it."""
    target = Or(Atom(atom), Not(Atom(atom)))
    while isinstance(f, Implies):
        f = f.r
    return f == target


# ---------------------------------------------------------------- evaluation

@dataclass
class TraceEntry:
    model: Model
    formula: Formula
    value: Optional[bool]
    verdict: object = None


_MISSING = object()


class Evaluator:
    """Three-valued evaluation with memoization shared across queries.

    ``trace``, when a list, receives one :class:`TraceEntry` per K-query that
    was resolved through the entailment engine.
    """

    def __init__(self, max_depth: int = DEFAULT_MAX_DEPTH, trace: Optional[list] = None,
                 bound: Optional[int] = None):
        self.max_depth = max_depth
        self.trace = trace
        self.bound = bound
        self.memo: dict = {}

    def value(self, m: Model, f: Formula) -> Optional[bool]:
        memo = self.memo
        root = (m, f)
        if root in memo:
            return memo[root]
        stack = [root]
        pending = {root}
        while stack:
            key = stack[-1]
            res = self._step(*key)
            if isinstance(res, tuple):
                if res in pending:
                    raise EvaluationError(
                        f"cycle while evaluating {to_text(res[1])} in {model_name(res[0])}")
                if len(stack) >= self.max_depth:
                    raise EvaluationError(f"evaluation depth exceeded {self.max_depth}")
                stack.append(res)
                pending.add(res)
                continue
            memo[key] = None if res is _UNKNOWN else res
            stack.pop()
            pending.discard(key)
        return memo[root]

    # Returns a bool, _UNKNOWN, or a (model, formula) pair that must be evaluated first.
    def _step(self, m: Model, g: Formula):
        tp = type(g)
        memo = self.memo
        if tp is Atom:
            return _atom_value(m, g.name)
        if tp is K:
            return self._k_step(m, g)
        if tp is Not:
            v = memo.get((m, g.f), _MISSING)
            if v is _MISSING:
                return (m, g.f)
            return _UNKNOWN if v is None else not v
        first, second = (g.r, g.l) if tp is Implies else (g.l, g.r)
        a = memo.get((m, first), _MISSING)
        if a is _MISSING:
            return (m, first)
        # consequent first for implications: a true consequent settles it
        if tp is Implies:
            if a is True:
                return True
        elif tp is And:
            if a is False:
                return False
        elif a is True:
            return True
        b = memo.get((m, second), _MISSING)
        if b is _MISSING:
            return (m, second)
        if tp is Implies:
            # a is the consequent, b the antecedent
            if b is False:
                return True
            if a is False and b is True:
                return False
            return _UNKNOWN
        if tp is And:
            if b is False:
                return False
            if a is True and b is True:
                return True
            return _UNKNOWN
        if b is True:
            return True
        if a is False and b is False:
            return False
        return _UNKNOWN

    def _k_step(self, m: Model, g: K):
        inner = g.f
        tp = type(m)
        if tp is FiniteTable:
            return m.lookup(g)
        if tp is AllKnowing:
            return True
        if tp is Tower:
            if m.height == 0:
                return True
            return self._defer(m.rest(), inner)
        if tp is N2Transparent:
            return self._defer(m, inner)
        if tp is N1OverN2:
            return self._defer(N2, inner)
        if tp is N1OverN2WithKnP:
            if is_kn_of(inner, m.atom):
                return True
            return self._defer(N2, inner)
        if tp is BadFormula:
            return not is_bad(inner, m.atom)
        if tp is Kripke:
            pending = None
            for v in m.succ[m.root]:
                val = self.memo.get((m.at(v), inner), _MISSING)
                if val is False:
                    return False
                if val is _MISSING and pending is None:
                    pending = (m.at(v), inner)
            return True if pending is None else pending
        if tp is Derived:
            return self._derived_k(m, inner)
        raise TypeError(f"not a model: {m!r}")

    def _defer(self, m: Model, f: Formula):
        v = self.memo.get((m, f), _MISSING)
        if v is _MISSING:
            return (m, f)
        return _UNKNOWN if v is None else v

    def _derived_k(self, m: Derived, inner: Formula):
        from .entailment import Entailed, Unknown, entails
        bound = m.bound if m.bound is not None else self.bound
        verdict = entails(m.theory, inner, bound)
        if isinstance(verdict, Entailed):
            value = True
        elif isinstance(verdict, Unknown):
            value = None
        else:
            value = False
        if self.trace is not None:
            self.trace.append(TraceEntry(m, K(inner), value, verdict))
        return _UNKNOWN if value is None else value


_UNKNOWN = object()


def _atom_value(m: Model, name: str):
    tp = type(m)
    if tp is FiniteTable:
        return m.lookup(Atom(name))
    if tp is N2Transparent:
        return False
    if tp in (N1OverN2, N1OverN2WithKnP, BadFormula):
        return True
    if tp is AllKnowing:
        return name in m.atoms
    if tp is Tower:
        return name in m.levels[0]
    if tp is Derived:
        return name in m.atoms
    if tp is Kripke:
        return name in m.worlds[m.root]
    raise TypeError(f"not a model: {m!r}")


_shared = Evaluator()


def evaluate(m: Model, f: Formula, max_depth: int = DEFAULT_MAX_DEPTH,
             trace: Optional[list] = None) -> Optional[bool]:
    """Truth value of ``f`` in ``m``; ``None`` means unknown (derived models only)."""
    if trace is None and max_depth == DEFAULT_MAX_DEPTH:
        return _shared.value(m, f)
    return Evaluator(max_depth, trace).value(m, f)


def clear_caches() -> None:
    _shared.memo.clear()


# ---------------------------------------------------------------- coverage tables

@dataclass(frozen=True)
class Coverage:
    """Whether a recipe provably satisfies every member of a theory."""
    holds: bool
    cases: tuple = ()
    reason: str = ""


def _stable_level(m: Recipe) -> int:
    # from this K-prefix depth on, truth of K^n x no longer depends on n
    if isinstance(m, N2Transparent):
        return 0
    if isinstance(m, (N1OverN2, N1OverN2WithKnP, AllKnowing)):
        return 1
    if isinstance(m, BadFormula):
        return 2
    return m.height + 1


def schema_holds(m: Recipe, s: Schema, n: int) -> bool:
    """Does ``m`` satisfy ``K^n x`` for every instance ``x`` of ``s``?

    Each row is a case argument:

    * N2 is transparent, and every schema here is classically valid once K
      is erased (T becomes ``x -> x``, 5 becomes ``~x -> ~x``).
    * Models whose K reads off another model (N1 over N2, tower levels)
      satisfy V and K because the inner model is classical and closed under
      modus ponens; prefixed instances reduce to the inner model.
    * AllKnowing makes every K-formula true, so every schema whose
      consequent is K-headed holds; T does not.
    * The K^n p override keeps V, KK and 5 at depth zero but breaks K
      (``K(K^n p -> q)`` with ``K K^n p`` does not give ``Kq``).
    * BadFormula keeps K, KK and 5 since a chain is bad only if its last
      link is; V fails on ``K(p | ~p)``; every K-headed formula is good.
    """
    if isinstance(m, N2Transparent):
        return True
    if isinstance(m, N1OverN2):
        return n >= 1 or s is not Schema.T
    if isinstance(m, N1OverN2WithKnP):
        return n >= 1 or s in (Schema.V, Schema.KK, Schema.FIVE)
    if isinstance(m, BadFormula):
        if n >= 2:
            return True
        if n == 1:
            return s is not Schema.T
        return s in (Schema.KDIST, Schema.KK, Schema.FIVE)
    if isinstance(m, AllKnowing):
        return n >= 1 or s is not Schema.T
    if isinstance(m, Tower):
        if n > m.height:
            return True
        h = m.height - n
        if h == 0:
            return s is not Schema.T
        if s in (Schema.V, Schema.KDIST):
            return True
        return s is Schema.KK and h == 1
    raise TypeError(f"no coverage table for {m!r}")


def coverage(m: Model, t: Theory) -> Coverage:
    """Exact check that recipe ``m`` satisfies all of ``t``.

    Schemas are settled by :func:`schema_holds`; explicit axioms by evaluating
    ``K^n a`` for every prefix depth up to the recipe's stable level.
    """
    if not isinstance(m, RECIPE_TYPES):
        return Coverage(False, reason="coverage tables exist for recipe models only")
    cases: list = []
    if isinstance(m, Kripke):
        reason = _cover_kripke(m, t, False, cases)
    else:
        reason = _cover(m, t, False, cases)
    if reason:
        return Coverage(False, tuple(cases), reason)
    return Coverage(True, tuple(cases))


def _levels(m: Recipe, lifted: bool) -> range:
    return range(_stable_level(m) + 1) if lifted else range(1)


def _cover(m: Recipe, t: Theory, lifted: bool, cases: list) -> str:
    if t.universal:
        return "T_inf has no model"
    if t.deductive_closure_of is not None:
        if lifted or t.closed:
            return "K-prefixed consequences of a deductive closure are not tabulated"
        return _cover(m, t.deductive_closure_of, False, cases)
    lifted = lifted or t.closed
    for s in SCHEMA_ORDER:
        if s in t.schemas or s in t.kn_schemas:
            all_levels = lifted or s in t.kn_schemas
            for n in _levels(m, all_levels):
                if not schema_holds(m, s, n):
                    return f"schema {s.value} at K-depth {n} fails in {model_name(m)}"
            cases.append(f"schema {s.value}" + (" (all K-depths)" if all_levels else ""))
    for a, all_levels in [(a, lifted) for a in t.axioms] + [(a, True) for a in t.kn_axioms]:
        for n in _levels(m, all_levels):
            if evaluate(m, kn(n, a)) is not True:
                return f"axiom K^{n}({to_text(a)}) is false in {model_name(m)}"
        cases.append(f"axiom {to_text(a)}" + (" (all K-depths)" if all_levels else ""))
    for inc in t.includes:
        reason = _cover(m, inc, lifted, cases)
        if reason:
            return reason
    return ""


_FRAME = {Schema.V: ("any frame", lambda m: True), Schema.KDIST: ("any frame", lambda m: True),
          Schema.T: ("reflexive", Kripke.is_reflexive),
          Schema.KK: ("transitive", Kripke.is_transitive),
          Schema.FIVE: ("euclidean", Kripke.is_euclidean)}


def _cover_kripke(m: Kripke, t: Theory, lifted: bool, cases: list) -> str:
    # a schema valid on the frame holds at every world, hence under every K^n;
    # an axiom true at every reachable world holds under every K^n at the root
    if t.universal:
        return "T_inf has no model"
    if t.deductive_closure_of is not None:
        if lifted or t.closed:
            return "K-prefixed consequences of a deductive closure are not tabulated"
        return _cover_kripke(m, t.deductive_closure_of, False, cases)
    lifted = lifted or t.closed
    for s in SCHEMA_ORDER:
        if s in t.schemas or s in t.kn_schemas:
            label, test = _FRAME[s]
            if not test(m):
                return f"schema {s.value} needs a {label} frame"
            cases.append(f"schema {s.value} ({label} frame)")
    worlds = m.reachable()
    for a, everywhere in [(a, lifted) for a in t.axioms] + [(a, True) for a in t.kn_axioms]:
        for w in (worlds if everywhere else [m.root]):
            if evaluate(m.at(w), a) is not True:
                return f"axiom {to_text(a)} is false at world {w}"
        cases.append(f"axiom {to_text(a)}" + (" (every reachable world)" if everywhere else ""))
    for inc in t.includes:
        reason = _cover_kripke(m, inc, lifted, cases)
        if reason:
            return reason
    return ""


def kripke_family(universe: Iterable[str], size: int, transitive_only: bool = False) -> Iterator[Kripke]:
    """Frames with ``size`` worlds, every world reachable from world 0."""
    names = sorted(set(universe))
    vals = [AtomSet(frozenset(c)) for r in range(len(names) + 1)
            for c in itertools.combinations(names, r)]
    pairs = [(u, v) for u in range(size) for v in range(size)]
    for bits in range(1 << len(pairs)):
        succ = tuple(tuple(v for (u, v), i in zip(pairs, range(len(pairs)))
                           if u == w and bits >> i & 1) for w in range(size))
        frame = Kripke((NO_ATOMS,) * size, succ)
        if len(frame.reachable()) != size:
            continue
        if transitive_only and not frame.is_transitive():
            continue
        for worlds in itertools.product(vals, repeat=size):
            yield Kripke(tuple(worlds), succ)


# ---------------------------------------------------------------- theory satisfaction

@dataclass
class SampleReport:
    """Outcome of checking a model against sampled members of a theory.

    ``status`` is ``"holds-on-sample"``, ``"violated"`` or ``"unknown"``.
    Holding on the sample is not a proof that the model satisfies the theory.
    """
    status: str
    checked: int
    witness: Optional[Formula] = None
    unknown: list = field(default_factory=list)
    instances: list = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return self.status == "holds-on-sample"


def satisfies_theory(m: Model, t: Theory, candidates: Optional[Iterable[Formula]] = None,
                     bound: Optional[int] = None, stop_at_violation: bool = True,
                     evaluator: Optional[Evaluator] = None) -> SampleReport:
    from .entailment import default_bound
    bound = default_bound() if bound is None else bound
    cands = default_candidates(t) if candidates is None else set(candidates)
    members = enumerate_instances(t, cands, bound)
    ev = evaluator or _shared
    unknown = []
    witness = None
    for f in members:
        v = ev.value(m, f)
        if v is False:
            witness = witness or f
            if stop_at_violation:
                break
        elif v is None:
            unknown.append(f)
    if witness is not None:
        status = "violated"
    elif unknown:
        status = "unknown"
    else:
        status = "holds-on-sample"
    return SampleReport(status, len(members), witness, unknown, members)


# ---------------------------------------------------------------- naming

def model_name(m: Model) -> str:
    if isinstance(m, N2Transparent):
        return "n2"
    if isinstance(m, N1OverN2):
        return "n1"
    if isinstance(m, N1OverN2WithKnP):
        return f"n1-knp({m.atom})"
    if isinstance(m, BadFormula):
        return f"bad({m.atom})"
    if isinstance(m, AllKnowing):
        return f"all-knowing({_atoms_text(m.atoms)})"
    if isinstance(m, Tower):
        return "tower(" + ";".join(_atoms_text(a) for a in m.levels) + ")"
    if isinstance(m, Kripke):
        edges = ",".join(f"{u}-{v}" for u, row in enumerate(m.succ) for v in row)
        body = ";".join(_atoms_text(a) for a in m.worlds)
        root = f"@{m.root}" if m.root else ""
        return f"kripke({body}|{edges}){root}"
    if isinstance(m, Derived):
        return f"M[{m.theory}, {m.atoms}]"
    return "finite-table"


def _atoms_text(a: AtomSet) -> str:
    body = ",".join(sorted(a.names))
    return f"*-{body}" if a.cofinite else body


def _parse_atoms(text: str) -> AtomSet:
    text = text.strip()
    if text.startswith("*"):
        rest = text[1:].lstrip("-")
        return AtomSet(frozenset(x for x in rest.split(",") if x), cofinite=True)
    return AtomSet(frozenset(x.strip() for x in text.split(",") if x.strip()))


def recipe_from_name(name: str) -> Recipe:
    """Inverse of :func:`model_name` for recipes (``n2``, ``bad(p)``, ``tower(p;;p)``...)."""
    name = name.strip()
    root = 0
    if name.startswith("kripke(") and "@" in name[name.rfind(")"):]:
        name, _, at = name.rpartition("@")
        root = int(at)
    head, _, rest = name.partition("(")
    arg = rest[:-1] if rest.endswith(")") else None
    if rest and arg is None:
        raise ValueError(f"unbalanced recipe name {name!r}")
    if head == "n2" and not rest:
        return N2
    if head == "n1" and not rest:
        return N1
    if head == "n1-knp":
        return N1OverN2WithKnP((arg or "p").strip())
    if head == "bad":
        return BadFormula((arg or "p").strip())
    if head == "all-knowing":
        return AllKnowing(_parse_atoms(arg or ""))
    if head == "tower" and arg is not None:
        return Tower(tuple(_parse_atoms(x) for x in arg.split(";")))
    if head == "kripke" and arg is not None:
        worlds_text, _, edges_text = arg.partition("|")
        worlds = tuple(_parse_atoms(x) for x in worlds_text.split(";"))
        succ: list = [[] for _ in worlds]
        for e in filter(None, (x.strip() for x in edges_text.split(","))):
            u, _, v = e.partition("-")
            succ[int(u)].append(int(v))
        return Kripke(worlds, tuple(tuple(sorted(set(r))) for r in succ), root)
    raise ValueError(f"unknown recipe {name!r}; try n2, n1, n1-knp(p), bad(p), "
                     f"all-knowing(p,q), tower(S0;S1;...) or kripke(S0;S1|0-1,...)")


# ---------------------------------------------------------------- finite model files

def parse_finite_model(text: str, path: str = "<string>") -> FiniteTable:
    """``basic-formula = true|false`` lines plus an optional ``default = ...``."""
    values = {}
    default = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip() if raw.lstrip().startswith("#") else raw.strip()
        if not line:
            continue
        lhs, sep, rhs = line.rpartition("=")
        rhs = rhs.strip().lower()
        if not sep or rhs not in ("true", "false"):
            raise ValueError(f"{path}:{lineno}: expected '<basic formula> = true|false'")
        lhs = lhs.strip()
        if lhs == "default":
            default = rhs == "true"
            continue
        f = parse(lhs)
        if not is_basic(f):
            raise ValueError(f"{path}:{lineno}: {to_text(f)} is not a basic formula")
        values[f] = rhs == "true"
    return FiniteTable.of(values, default)


def dump_finite_model(m: FiniteTable) -> str:
    lines = [f"{to_text(b)} = {'true' if v else 'false'}" for b, v in m.assignments]
    lines.append(f"default = {'true' if m.default else 'false'}")
    return "\n".join(lines) + "\n"


def tower_family(universe: Iterable[str], height: int) -> Iterator[Tower]:
    """All towers of exactly ``height`` over subsets of ``universe``."""
    names = sorted(set(universe))
    subsets = [AtomSet(frozenset(c)) for r in range(len(names) + 1)
               for c in itertools.combinations(names, r)]
    for levels in itertools.product(subsets, repeat=height + 1):
        yield Tower(tuple(levels))
