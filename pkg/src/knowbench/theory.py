"""Finite presentations of possibly infinite theories.

A :class:`Theory` denotes the set generated by

* its explicit ``axioms``;
* every instance of each schema in ``schemas``;
* ``K^n x`` for every ``n >= 0`` and every ``x`` in ``kn_axioms`` or an
  instance of a schema in ``kn_schemas``;
* the members of each theory in ``includes``;
* ``{x : base |= x}`` when ``deductive_closure_of`` is set;
* every formula, when ``universal`` is set;

and, when ``closed`` is set, the least superset of the above closed under
``x -> Kx``. Membership is decided syntactically, except through deductive
closure wrappers, where it defers to the entailment engine and may be
unknown (``None``).
"""

from __future__ import annotations

import enum
import itertools
import os
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Optional

from .propositional import tautology
from .syntax import (Formula, Implies, K, Not, ParseError, formula_key, kn,
                     parse, to_text)


class Schema(enum.Enum):
    V = "V"
    KDIST = "K"
    T = "T"
    KK = "KK"
    FIVE = "5"

    @classmethod
    def from_name(cls, name: str) -> "Schema":
        for s in cls:
            if s.value == name or s.name == name:
                return s
        raise ValueError(f"unknown schema {name!r}; expected one of V, K, T, KK, 5")


SCHEMA_ORDER = (Schema.V, Schema.KDIST, Schema.T, Schema.KK, Schema.FIVE)


def is_instance(schema: Schema, f: Formula) -> bool:
    """Syntactic test: is ``f`` an instance of ``schema``?"""
    if schema is Schema.V:
        return isinstance(f, K) and tautology(f.f)
    if not isinstance(f, Implies):
        return False
    a, b = f.l, f.r
    if schema is Schema.T:
        return isinstance(a, K) and a.f == b
    if schema is Schema.KK:
        return isinstance(a, K) and b == K(a)
    if schema is Schema.FIVE:
        return isinstance(a, Not) and isinstance(a.f, K) and b == K(a)
    # K(x -> y) -> (Kx -> Ky)
    return (isinstance(a, K) and isinstance(a.f, Implies) and isinstance(b, Implies)
            and b.l == K(a.f.l) and b.r == K(a.f.r))


def instantiate(schema: Schema, *phis: Formula) -> Formula:
    """The instance of ``schema`` at the given metavariable values."""
    if schema is Schema.V:
        (phi,) = phis
        return K(phi)
    if schema is Schema.KDIST:
        phi, psi = phis
        return Implies(K(Implies(phi, psi)), Implies(K(phi), K(psi)))
    (phi,) = phis
    if schema is Schema.T:
        return Implies(K(phi), phi)
    if schema is Schema.KK:
        return Implies(K(phi), K(K(phi)))
    return Implies(Not(K(phi)), K(Not(K(phi))))


def schema_instances(schema: Schema, candidates: list[Formula]) -> Iterator[Formula]:
    if schema is Schema.V:
        for c in candidates:
            if tautology(c):
                yield K(c)
    elif schema is Schema.KDIST:
        for a in candidates:
            for b in candidates:
                yield instantiate(schema, a, b)
    else:
        for c in candidates:
            yield instantiate(schema, c)


@dataclass(frozen=True)
class Theory:
    axioms: tuple = ()
    schemas: frozenset = frozenset()
    kn_schemas: frozenset = frozenset()
    kn_axioms: tuple = ()
    closed: bool = False
    deductive_closure_of: Optional["Theory"] = None
    includes: tuple = ()
    universal: bool = False
    name: str = field(default="", compare=False)

    def __str__(self) -> str:
        return self.name or describe(self)


EMPTY = Theory()
ALL_FORMULAS = Theory(universal=True, name="T_inf")


# ---------------------------------------------------------------- constructors

def finite(axioms: Iterable[Formula], name: str = "") -> Theory:
    return Theory(axioms=tuple(_dedupe(axioms)), name=name)


def schemas(*names, name: str = "") -> Theory:
    return Theory(schemas=frozenset(s if isinstance(s, Schema) else Schema.from_name(s)
                                    for s in names), name=name)


def kn_family(schema_set: Iterable = (), axioms: Iterable[Formula] = (), name: str = "") -> Theory:
    """``K^n x`` for all ``n`` and every ``x`` among the schema instances and axioms."""
    return Theory(kn_schemas=frozenset(s if isinstance(s, Schema) else Schema.from_name(s)
                                       for s in schema_set),
                  kn_axioms=tuple(_dedupe(axioms)), name=name)


def deductive_closure(base: Theory, name: str = "") -> Theory:
    return Theory(deductive_closure_of=base, name=name)


def normal_kripke_closure(t0: Theory, name: str = "") -> Theory:
    """Smallest closed theory containing ``t0``, V and K that is closed under entailment."""
    base = close(union(t0, schemas(Schema.V, Schema.KDIST)))
    return Theory(deductive_closure_of=base, closed=True, name=name)


def close(t: Theory) -> Theory:
    """Least closed theory including ``t``."""
    if t.closed or t.universal:
        return t
    return replace(t, closed=True, name=f"close({t.name})" if t.name else "")


def is_empty(t: Theory) -> bool:
    return (not t.axioms and not t.schemas and not t.kn_schemas and not t.kn_axioms
            and t.deductive_closure_of is None and not t.universal
            and all(is_empty(i) for i in t.includes))


def union(a: Theory, b: Theory) -> Theory:
    """Union of two presentations; deductive-closure wrappers are rejected."""
    for t in (a, b):
        if _has_wrapper(t):
            raise ValueError("union with a deductive-closure theory is not supported")
    if is_empty(b):
        return a
    if is_empty(a):
        return b
    if a.universal or b.universal:
        return ALL_FORMULAS
    if a.closed != b.closed:
        return Theory(includes=(a, b))
    return Theory(
        axioms=tuple(_dedupe(a.axioms + b.axioms)),
        schemas=a.schemas | b.schemas,
        kn_schemas=a.kn_schemas | b.kn_schemas,
        kn_axioms=tuple(_dedupe(a.kn_axioms + b.kn_axioms)),
        closed=a.closed,
        includes=tuple(_dedupe(a.includes + b.includes)),
    )


def union_all(*ts: Theory) -> Theory:
    out = EMPTY
    for t in ts:
        out = union(out, t)
    return out


def _has_wrapper(t: Theory) -> bool:
    return t.deductive_closure_of is not None or any(_has_wrapper(i) for i in t.includes)


def _dedupe(xs: Iterable) -> list:
    seen = set()
    out = []
    for x in xs:
        if x not in seen:
            seen.add(x)
            out.append(x)
    return out


# ---------------------------------------------------------------- structure queries

def is_finite(t: Theory) -> bool:
    """True when the presentation denotes exactly its explicit axioms."""
    return (not t.schemas and not t.kn_schemas and not t.kn_axioms and not t.closed
            and t.deductive_closure_of is None and not t.universal
            and all(is_finite(i) for i in t.includes))


def finite_axioms(t: Theory) -> list[Formula]:
    """Explicit axioms at prefix depth zero, including those of included theories."""
    out = list(t.axioms) + list(t.kn_axioms)
    for i in t.includes:
        out.extend(finite_axioms(i))
    if t.deductive_closure_of is not None:
        out.extend(finite_axioms(t.deductive_closure_of))
    return _dedupe(out)


def has_schema(t: Theory, s: Schema) -> bool:
    """Does the presentation contain every instance of ``s``?"""
    if t.universal or s in t.schemas or s in t.kn_schemas:
        return True
    if t.deductive_closure_of is not None and has_schema(t.deductive_closure_of, s):
        return True
    return any(has_schema(i, s) for i in t.includes)


def is_closed(t: Theory) -> bool:
    """Sufficient syntactic test that the denoted set is closed under K."""
    if t.closed or t.universal:
        return True
    if t.axioms or t.schemas:
        return False
    if t.deductive_closure_of is not None:
        return False
    return all(is_closed(i) for i in t.includes)


def atoms_of(t: Theory) -> frozenset:
    from .syntax import atoms
    out = set()
    for a in finite_axioms(t):
        out |= atoms(a)
    return frozenset(out)


# ---------------------------------------------------------------- membership

class _Unknown:
    def __repr__(self):
        return "UNKNOWN"


UNKNOWN = _Unknown()


@dataclass(frozen=True)
class Membership:
    value: Optional[bool]
    witness: str = ""

    def __bool__(self) -> bool:
        return self.value is True


def _schema_witness(schemas_: frozenset, f: Formula) -> Optional[str]:
    for s in SCHEMA_ORDER:
        if s in schemas_ and is_instance(s, f):
            return f"instance of schema {s.value}"
    return None


def _lookup(t: Theory, f: Formula, bound) -> "str | None | _Unknown":
    if t.universal:
        return "every formula"
    if f in t.axioms:
        return "axiom"
    w = _schema_witness(t.schemas, f)
    if w:
        return w
    if t.kn_schemas or t.kn_axioms:
        g = f
        for n in itertools.count():
            if g in t.kn_axioms:
                return f"K^{n} of axiom {to_text(g)}"
            w = _schema_witness(t.kn_schemas, g)
            if w:
                return f"K^{n} of {w}"
            if not isinstance(g, K):
                break
            g = g.f
    unknown = False
    for inc in t.includes:
        w = _lookup(inc, f, bound)
        if isinstance(w, str):
            return w
        unknown |= w is UNKNOWN
    if t.deductive_closure_of is not None:
        from .entailment import entails, Entailed, Unknown
        v = entails(t.deductive_closure_of, f, bound)
        if isinstance(v, Entailed):
            return f"entailed by base ({len(v.proof.premises)} premises)"
        if isinstance(v, Unknown):
            unknown = True
    if t.closed and isinstance(f, K):
        w = _lookup(t, f.f, bound)
        if isinstance(w, str):
            return f"K of member ({w})"
        unknown |= w is UNKNOWN
    return UNKNOWN if unknown else None


def membership(t: Theory, f: Formula, bound: Optional[int] = None) -> Membership:
    w = _lookup(t, f, bound)
    if w is UNKNOWN:
        return Membership(None, "undecided: entailment unknown at bound")
    if w is None:
        return Membership(False)
    return Membership(True, w)


def contains(t: Theory, f: Formula, bound: Optional[int] = None) -> Optional[bool]:
    """Membership test; ``None`` only through an undecided deductive closure."""
    return membership(t, f, bound).value


# ---------------------------------------------------------------- enumeration

def enumerate_instances(t: Theory, candidates: Iterable[Formula], k_depth_bound: int) -> list[Formula]:
    """Members of ``t`` built from ``candidates`` with K-prefix depth at most the bound.

    Schema metavariables range over ``candidates``; explicit axioms are always
    included. The result is sound (every element is a member) and grows
    monotonically with both arguments.
    """
    cands = sorted(set(candidates), key=formula_key)
    return _dedupe(_enumerate(t, cands, k_depth_bound))


def _enumerate(t: Theory, cands: list, bound: int) -> Iterator[Formula]:
    if t.universal:
        for c in cands:
            for j in range(bound + 1):
                yield kn(j, c)
        return
    level0 = list(t.axioms)
    for s in SCHEMA_ORDER:
        if s in t.schemas:
            level0.extend(schema_instances(s, cands))
    prefixed = list(t.kn_axioms)
    for s in SCHEMA_ORDER:
        if s in t.kn_schemas:
            prefixed.extend(schema_instances(s, cands))
    for inc in t.includes:
        level0.extend(_enumerate(inc, cands, 0))
        if not t.closed:
            yield from _enumerate(inc, cands, bound)
    if t.deductive_closure_of is not None:
        level0.extend(_enumerate(t.deductive_closure_of, cands, 0))
        if not t.closed:
            yield from _enumerate(t.deductive_closure_of, cands, bound)
    yield from level0
    yield from prefixed
    lift = prefixed + (level0 if t.closed else [])
    for j in range(1, bound + 1):
        for x in lift:
            yield kn(j, x)


def default_candidates(t: Theory, goals: Iterable[Formula] = ()) -> set:
    """Basic-subformula closure of the goals and explicit axioms."""
    from .syntax import k_closure
    return k_closure(list(goals) + finite_axioms(t))


# ---------------------------------------------------------------- presentation inclusion

def includes_presentation(ext: Theory, base: Theory, lifted: bool = False) -> bool:
    """Sufficient syntactic check that ``ext`` denotes a superset of ``base``.

    ``lifted`` requires every member of ``base`` to be present under every
    K-prefix as well (used when ``base`` sits inside a closed theory).
    """
    if ext.universal:
        return True
    if base.universal:
        return False
    if base == ext or base in ext.includes:
        return True
    lifted = lifted or base.closed
    if base.deductive_closure_of is not None:
        return False
    ext_closed = is_closed(ext)
    for s in base.schemas:
        if lifted:
            if not (s in ext.kn_schemas or (ext_closed and has_schema(ext, s))):
                return False
        elif not has_schema(ext, s):
            return False
    for s in base.kn_schemas:
        if not (s in ext.kn_schemas or (ext_closed and has_schema(ext, s))):
            return False
    for a in base.axioms:
        if contains(ext, a) is not True:
            return False
        if lifted and not (a in ext.kn_axioms or ext_closed):
            return False
    for a in base.kn_axioms:
        if not (a in ext.kn_axioms or (ext_closed and contains(ext, a) is True)):
            return False
    return all(includes_presentation(ext, i, lifted) for i in base.includes)


# ---------------------------------------------------------------- description

def describe(t: Theory) -> str:
    if t.name:
        return t.name
    if t.universal:
        return "T_inf"
    parts = [s.value for s in SCHEMA_ORDER if s in t.schemas]
    parts += [f"K^n({s.value})" for s in SCHEMA_ORDER if s in t.kn_schemas]
    if t.axioms:
        parts.append("{" + ", ".join(to_text(a) for a in t.axioms) + "}")
    if t.kn_axioms:
        parts.append("K^n{" + ", ".join(to_text(a) for a in t.kn_axioms) + "}")
    parts += [f"({describe(i)})" for i in t.includes]
    if t.deductive_closure_of is not None:
        parts.append("Cn(" + describe(t.deductive_closure_of) + ")")
    body = " + ".join(parts) if parts else "{}"
    return f"close({body})" if t.closed else body


# ---------------------------------------------------------------- file format

class TheoryFormatError(ValueError):
    def __init__(self, message: str, path: str, line: int, offset: Optional[int] = None):
        self.path, self.line, self.offset = path, line, offset
        where = f"{path}:{line}" + (f": byte {offset}" if offset is not None else "")
        super().__init__(f"{where}: {message}")


_DIRECTIVE = re.compile(r"#([a-z][a-z-]*)(?:\s+(.*))?$")
_DIRECTIVES = {"schema", "schema-kn", "axiom-kn", "closed", "include", "all"}


def parse_theory(text: str, path: str = "<string>", base_dir: Optional[str] = None) -> Theory:
    """Parse the line-oriented theory format (see README)."""
    axioms: list = []
    kn_axioms: list = []
    sch: set = set()
    kn_sch: set = set()
    includes: list = []
    closed = universal = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        indent = len(raw) - len(raw.lstrip())
        if not line:
            continue
        m = _DIRECTIVE.match(line)
        if m and m.group(1) in _DIRECTIVES:
            word, arg = m.group(1), (m.group(2) or "").split("#")[0].strip()
            try:
                if word == "schema":
                    sch.update(Schema.from_name(x) for x in arg.split())
                elif word == "schema-kn":
                    kn_sch.update(Schema.from_name(x) for x in arg.split())
                elif word == "axiom-kn":
                    kn_axioms.append(parse(m.group(2) or ""))
                elif word == "closed":
                    closed = True
                elif word == "all":
                    universal = True
                else:
                    inc = os.path.join(base_dir or os.path.dirname(path) or ".", arg)
                    includes.append(load_theory(inc))
            except ParseError as e:
                raise TheoryFormatError(str(e), path, lineno, indent + m.start(2) + e.offset) from e
            except (ValueError, OSError) as e:
                raise TheoryFormatError(str(e), path, lineno) from e
            if word in ("schema", "schema-kn") and not arg:
                raise TheoryFormatError(f"#{word} needs a schema name", path, lineno)
            continue
        if m:
            raise TheoryFormatError(f"unknown directive #{m.group(1)}", path, lineno)
        if line.startswith("#"):
            continue
        try:
            axioms.append(parse(line))
        except ParseError as e:
            raise TheoryFormatError(str(e), path, lineno, indent + e.offset) from e
    if universal:
        return ALL_FORMULAS
    own = Theory(axioms=tuple(_dedupe(axioms)), schemas=frozenset(sch),
                 kn_schemas=frozenset(kn_sch), kn_axioms=tuple(_dedupe(kn_axioms)),
                 closed=closed, includes=tuple(includes))
    return own


def load_theory(path: str) -> Theory:
    with open(path, encoding="utf-8") as fh:
        return parse_theory(fh.read(), path=path)


def dump_theory(t: Theory) -> str:
    """Serialize a presentation without includes or wrappers."""
    if t.universal:
        return "#all\n"
    if t.includes or t.deductive_closure_of is not None:
        raise ValueError("included or wrapped theories have no single-file form")
    lines = [f"#schema {s.value}" for s in SCHEMA_ORDER if s in t.schemas]
    lines += [f"#schema-kn {s.value}" for s in SCHEMA_ORDER if s in t.kn_schemas]
    lines += [f"#axiom-kn {to_text(a)}" for a in t.kn_axioms]
    if t.closed:
        lines.append("#closed")
    lines += [to_text(a) for a in t.axioms]
    return "\n".join(lines) + "\n"

