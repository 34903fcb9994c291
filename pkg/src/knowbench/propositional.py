"""Classical reasoning with basic formulas treated as propositional variables.

Two independent engines live here. ``tautology`` evaluates all rows of the
truth table at once using big-integer bitmasks and is used by the proof
kernel. :class:`Problem` is a Tseitin/SAT encoding (pysat) used for entailment
search, unsat cores and countermodels.
"""

from __future__ import annotations

from typing import Iterable, Optional, Sequence

from pysat.solvers import Solver

from .syntax import And, Atom, Formula, Implies, K, Not, Or, basic_subformulas, formula_key

# Rows double per basic formula; beyond this the SAT route is cheaper.
TRUTH_TABLE_LIMIT = 18


def _masks(n: int) -> tuple[int, list[int]]:
    rows = 1 << n
    full = (1 << rows) - 1
    masks = []
    for i in range(n):
        half = 1 << i
        unit = ((1 << half) - 1) << half
        period = 1 << (i + 1)
        masks.append(unit * (full // ((1 << period) - 1)))
    return full, masks


def _table(f: Formula, env: dict, full: int, memo: dict) -> int:
    hit = memo.get(f)
    if hit is not None:
        return hit
    tp = type(f)
    if tp is Atom or tp is K:
        out = env[f]
    elif tp is Not:
        out = full ^ _table(f.f, env, full, memo)
    elif tp is And:
        out = _table(f.l, env, full, memo) & _table(f.r, env, full, memo)
    elif tp is Or:
        out = _table(f.l, env, full, memo) | _table(f.r, env, full, memo)
    else:
        out = (full ^ _table(f.l, env, full, memo)) | _table(f.r, env, full, memo)
    memo[f] = out
    return out


def tautology(f: Formula) -> bool:
    """True iff ``f`` holds under every assignment to its basic subformulas."""
    basics = sorted(basic_subformulas(f), key=formula_key)
    if len(basics) > TRUTH_TABLE_LIMIT:
        return entails_classically([], f)
    full, masks = _masks(len(basics))
    env = dict(zip(basics, masks))
    return _table(f, env, full, {}) == full


class Problem:
    """Incremental SAT problem over basic formulas.

    Premises are guarded by selector literals so that one solver can answer
    many entailment queries over subsets of a premise pool.
    """

    def __init__(self):
        self.solver = Solver(name="m22")
        self.top = 0
        self.var_of: dict = {}
        self.basic_of: dict[int, Formula] = {}
        self.lit_of: dict = {}
        self.selectors: list[int] = []
        self.premises: list[Formula] = []

    def close(self):
        self.solver.delete()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _fresh(self) -> int:
        self.top += 1
        return self.top

    def lit(self, f: Formula) -> int:
        """Literal equisatisfiably standing for ``f``; subterms are shared."""
        hit = self.lit_of.get(f)
        if hit is not None:
            return hit
        stack = [(f, False)]
        while stack:
            g, ready = stack.pop()
            if g in self.lit_of:
                continue
            tp = type(g)
            if tp is Atom or tp is K:
                v = self._fresh()
                self.var_of[g] = v
                self.basic_of[v] = g
                self.lit_of[g] = v
                continue
            kids = (g.f,) if tp is Not else (g.l, g.r)
            if not ready:
                stack.append((g, True))
                stack.extend((c, False) for c in kids if c not in self.lit_of)
                continue
            if tp is Not:
                self.lit_of[g] = -self.lit_of[g.f]
                continue
            a, b = self.lit_of[g.l], self.lit_of[g.r]
            v = self._fresh()
            add = self.solver.add_clause
            if tp is And:
                add([-v, a]); add([-v, b]); add([v, -a, -b])
            elif tp is Or:
                add([-v, a, b]); add([v, -a]); add([v, -b])
            else:
                add([-v, -a, b]); add([v, a]); add([v, -b])
            self.lit_of[g] = v
        return self.lit_of[f]

    def add_premise(self, f: Formula) -> int:
        """Register a guarded premise; returns its index in the pool."""
        s = self._fresh()
        self.solver.add_clause([-s, self.lit(f)])
        self.selectors.append(s)
        self.premises.append(f)
        return len(self.premises) - 1

    def add_premises(self, fs: Iterable[Formula]) -> None:
        for f in fs:
            self.add_premise(f)

    def _solve(self, active: Iterable[int], goal: Optional[Formula]) -> bool:
        assumptions = [self.selectors[i] for i in active]
        if goal is not None:
            assumptions.append(-self.lit(goal))
        return self.solver.solve(assumptions=assumptions)

    def entails(self, active: Iterable[int], goal: Formula) -> bool:
        """Do the premises with indices ``active`` classically entail ``goal``?"""
        return not self._solve(active, goal)

    def consistent(self, active: Iterable[int]) -> bool:
        return self._solve(active, None)

    def core(self, active: Sequence[int], goal: Formula) -> Optional[list[int]]:
        """Unsat core (premise indices) of ``active + ~goal``, or None if satisfiable."""
        active = list(active)
        if self._solve(active, goal):
            return None
        by_sel = {self.selectors[i]: i for i in active}
        return sorted(by_sel[s] for s in (self.solver.get_core() or []) if s in by_sel)

    def minimal_core(self, active: Sequence[int], goal: Formula) -> Optional[list[int]]:
        """Deletion-minimal subset of ``active`` entailing ``goal``.

        Deletion is attempted largest premise first, so that among minimal
        cores the one kept tends to use the smaller formulas.
        """
        core = self.core(active, goal)
        if core is None:
            return None
        order = sorted(core, key=lambda i: formula_key(self.premises[i]), reverse=True)
        keep = set(core)
        for i in order:
            trial = keep - {i}
            if self.entails(trial, goal):
                keep = trial
        return sorted(keep)

    def model(self) -> dict:
        """Values of registered basic formulas in the last satisfying assignment."""
        out = {}
        for lit in self.solver.get_model() or []:
            v = abs(lit)
            if v in self.basic_of:
                out[self.basic_of[v]] = lit > 0
        return out

    def countermodel(self, active: Iterable[int], goal: Formula) -> Optional[dict]:
        if not self._solve(list(active), goal):
            return None
        return self.model()

    def entails_all(self, premises: Sequence[Formula], goal: Formula) -> bool:
        """Add ``premises`` to the pool and test whether they entail ``goal``."""
        idx = [self.add_premise(p) for p in premises]
        return self.entails(idx, goal)


def entails_classically(premises: Sequence[Formula], goal: Formula) -> bool:
    with Problem() as pb:
        return pb.entails_all(premises, goal)

