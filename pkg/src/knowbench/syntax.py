"""Formula AST, parser and printer for the single-agent K language.

Concrete grammar, loosest binding first::

    formula := imp ('<->' formula)?        # sugar, expanded at parse time
    imp     := disj ('->' imp)?            # right-associative
    disj    := conj ('|' conj)*            # left-associative
    conj    := unary ('&' unary)*          # left-associative
    unary   := '~' unary | 'K' unary | ATOM | '(' formula ')'

Atoms match ``[a-z][a-zA-Z0-9_]*``; ``not``, ``and`` and ``or`` are rejected.
``#`` starts a comment that runs to the end of the line.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

__all__ = [
    "Atom", "Not", "And", "Or", "Implies", "K", "Formula", "ParseError",
    "parse", "to_text", "iff", "chain", "split_chain", "kn", "strip_k",
    "is_basic", "basic_subformulas", "subformulas", "atoms", "k_depth",
    "size", "formula_key", "k_closure",
]


def _same(a, b) -> bool:
    """Structural equality with an explicit stack; hashes reject most mismatches early."""
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        if x is y:
            continue
        if type(x) is not type(y) or x._h != y._h:
            return False
        tp = type(x)
        if tp is Atom:
            if x.name != y.name:
                return False
        elif tp is Not or tp is K:
            stack.append((x.f, y.f))
        else:
            stack.append((x.l, y.l))
            stack.append((x.r, y.r))
    return True


def _eq(self, other):
    if type(other) not in _NODES:
        return NotImplemented
    return _same(self, other)


@dataclass(frozen=True, slots=True)
class Atom:
    name: str
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(('Atom', self.name)))

    __eq__ = _eq

    def __hash__(self) -> int:
        return self._h

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Not:
    f: "Formula"
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(('Not', self.f)))

    __eq__ = _eq

    def __hash__(self) -> int:
        return self._h

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class And:
    l: "Formula"
    r: "Formula"
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(('And', self.l, self.r)))

    __eq__ = _eq

    def __hash__(self) -> int:
        return self._h

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Or:
    l: "Formula"
    r: "Formula"
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(('Or', self.l, self.r)))

    __eq__ = _eq

    def __hash__(self) -> int:
        return self._h

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class Implies:
    l: "Formula"
    r: "Formula"
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(('Implies', self.l, self.r)))

    __eq__ = _eq

    def __hash__(self) -> int:
        return self._h

    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, slots=True)
class K:
    f: "Formula"
    _h: int = field(default=0, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_h", hash(('K', self.f)))

    __eq__ = _eq

    def __hash__(self) -> int:
        return self._h

    def __str__(self) -> str:
        return to_text(self)


Formula = Union[Atom, Not, And, Or, Implies, K]
_NODES = (Atom, Not, And, Or, Implies, K)

RESERVED = frozenset({"not", "and", "or", "K"})


# ---------------------------------------------------------------- helpers

def iff(a: Formula, b: Formula) -> Formula:
    """``a <-> b`` as the conjunction of both implications."""
    return And(Implies(a, b), Implies(b, a))


def chain(antecedents: Iterable[Formula], goal: Formula) -> Formula:
    """Right-nested implication ``a1 -> ... -> an -> goal``."""
    out = goal
    for a in reversed(list(antecedents)):
        out = Implies(a, out)
    return out


def split_chain(f: Formula, n: int) -> tuple[list[Formula], Formula]:
    """Peel exactly ``n`` antecedents off a right-nested implication."""
    ants = []
    for _ in range(n):
        if not isinstance(f, Implies):
            raise ValueError(f"expected {n} antecedents, found {len(ants)}")
        ants.append(f.l)
        f = f.r
    return ants, f


def kn(n: int, f: Formula) -> Formula:
    if n < 0:
        raise ValueError("K-prefix depth must be non-negative")
    for _ in range(n):
        f = K(f)
    return f


def strip_k(f: Formula) -> tuple[int, Formula]:
    """Return ``(n, g)`` with ``f == kn(n, g)`` and ``g`` not K-headed."""
    n = 0
    while isinstance(f, K):
        f = f.f
        n += 1
    return n, f


def is_basic(f: Formula) -> bool:
    return isinstance(f, (Atom, K))


def basic_subformulas(f: Formula) -> frozenset:
    """Maximal basic formulas reached through boolean connectives only."""
    out = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, (Atom, K)):
            out.add(g)
        elif isinstance(g, Not):
            stack.append(g.f)
        else:
            stack.append(g.l)
            stack.append(g.r)
    return frozenset(out)


def subformulas(f: Formula) -> Iterator[Formula]:
    stack = [f]
    while stack:
        g = stack.pop()
        yield g
        if isinstance(g, (Not, K)):
            stack.append(g.f)
        elif not isinstance(g, Atom):
            stack.append(g.r)
            stack.append(g.l)


def atoms(f: Formula) -> frozenset:
    return frozenset(g.name for g in subformulas(f) if isinstance(g, Atom))


def size(f: Formula) -> int:
    return sum(1 for _ in subformulas(f))


def k_depth(f: Formula) -> int:
    """Maximum nesting of K operators."""
    if isinstance(f, Atom):
        return 0
    if isinstance(f, K):
        return 1 + k_depth(f.f)
    if isinstance(f, Not):
        return k_depth(f.f)
    return max(k_depth(f.l), k_depth(f.r))


def formula_key(f: Formula) -> tuple[int, str]:
    """Deterministic total order: smaller first, then by printed text."""
    return size(f), to_text(f)


def k_closure(formulas: Iterable[Formula]) -> set:
    """Basic subformulas, closed under stripping one K and re-decomposing."""
    out: set = set()
    stack = []
    for f in formulas:
        stack.extend(basic_subformulas(f))
    while stack:
        b = stack.pop()
        if b in out:
            continue
        out.add(b)
        if isinstance(b, K):
            inner = b.f
            if not is_basic(inner):
                out.add(inner)
            stack.extend(basic_subformulas(inner))
    return out


# ---------------------------------------------------------------- printer

_PREC = {Implies: 1, Or: 2, And: 3, Not: 4, K: 4, Atom: 5}
_OPS = {Implies: " -> ", Or: " | ", And: " & "}


def _fmt(f: Formula) -> str:
    # unary runs are peeled in a loop so deep K^n chains print without recursion
    prefix = []
    while type(f) is Not or type(f) is K:
        prefix.append("~" if type(f) is Not else "K")
        f = f.f
    tp = type(f)
    if tp is Atom:
        body = f.name
    else:
        p = _PREC[tp]
        left, right = _fmt(f.l), _fmt(f.r)
        lp, rp = _PREC[type(f.l)], _PREC[type(f.r)]
        if tp is Implies:
            wrap_l, wrap_r = lp <= p, rp < p
        else:
            wrap_l, wrap_r = lp < p, rp <= p
        if wrap_l:
            left = f"({left})"
        if wrap_r:
            right = f"({right})"
        body = left + _OPS[tp] + right
        if prefix:
            body = f"({body})"
    return "".join(prefix) + body


def to_text(f: Formula) -> str:
    """Canonical text with the fewest parentheses that reparse to ``f``."""
    return _fmt(f)


# ---------------------------------------------------------------- lexer

class ParseError(ValueError):
    """Syntax error at a byte offset, with the set of tokens that would fit."""

    def __init__(self, message: str, offset: int, expected: Iterable[str] = ()):
        self.offset = offset
        self.expected = frozenset(expected)
        detail = f" (expected one of: {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{message} at byte {offset}{detail}")


_UNICODE = {"¬": "~", "∧": "&", "∨": "|", "→": "->", "↔": "<->"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    """Tokens as ``(kind, value, byte_offset)``; ends with an ``end`` token."""
    toks = []
    i, n = 0, len(text)
    byte = 0

    def width(s: str) -> int:
        return len(s.encode("utf-8"))

    while i < n:
        c = text[i]
        if c == "#":
            j = text.find("\n", i)
            j = n if j < 0 else j
            byte += width(text[i:j])
            i = j
            continue
        if c.isspace():
            byte += width(c)
            i += 1
            continue
        if text.startswith("<->", i):
            toks.append(("<->", "<->", byte)); i += 3; byte += 3
            continue
        if text.startswith("->", i):
            toks.append(("->", "->", byte)); i += 2; byte += 2
            continue
        if c in "~&|()K":
            toks.append((c, c, byte)); i += 1; byte += 1
            continue
        if c in _UNICODE:
            toks.append((_UNICODE[c], c, byte)); i += 1; byte += width(c)
            continue
        if "a" <= c <= "z":
            j = i + 1
            while j < n and (text[j].isascii() and (text[j].isalnum() or text[j] == "_")):
                j += 1
            word = text[i:j]
            if word in RESERVED:
                raise ParseError(f"reserved word {word!r} cannot be an atom", byte,
                                 {"atom", "~", "K", "("})
            toks.append(("atom", word, byte))
            byte += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", byte)
    toks.append(("end", "", byte))
    return toks


class _Parser:
    _UNARY_START = frozenset({"~", "K", "(", "atom"})

    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0
        self.depth = 0

    def peek(self) -> str:
        return self.toks[self.pos][0]

    def take(self) -> tuple[str, str, int]:
        tok = self.toks[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected: Iterable[str]):
        kind, value, off = self.toks[self.pos]
        found = "end of input" if kind == "end" else repr(value)
        raise ParseError(f"unexpected {found}", off, expected)

    def formula(self) -> Formula:
        left = self.imp()
        if self.peek() == "<->":
            self.take()
            return iff(left, self.formula())
        return left

    def imp(self) -> Formula:
        left = self.disj()
        if self.peek() == "->":
            self.take()
            return Implies(left, self.imp())
        return left

    def disj(self) -> Formula:
        out = self.conj()
        while self.peek() == "|":
            self.take()
            out = Or(out, self.conj())
        return out

    def conj(self) -> Formula:
        out = self.unary()
        while self.peek() == "&":
            self.take()
            out = And(out, self.unary())
        return out

    def unary(self) -> Formula:
        # prefix chains are iterated so long K/~ runs do not hit the recursion limit
        prefix = []
        while self.peek() in ("~", "K"):
            prefix.append(self.take()[0])
        kind = self.peek()
        if kind == "atom":
            out: Formula = Atom(self.take()[1])
        elif kind == "(":
            self.take()
            out = self.formula()
            if self.peek() != ")":
                self.fail({")", "<->", "->", "|", "&"})
            self.take()
        else:
            self.fail(self._UNARY_START)
        for op in reversed(prefix):
            out = Not(out) if op == "~" else K(out)
        return out


def parse(text: str) -> Formula:
    """Parse one formula; raises :class:`ParseError` on malformed input."""
    p = _Parser(text)
    f = p.formula()
    if p.peek() != "end":
        p.fail({"end of input", "<->", "->", "|", "&"})
    return f
