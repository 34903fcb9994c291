import itertools

from hypothesis import strategies as st

from knowbench.syntax import And, Atom, Implies, K, Not, Or, basic_subformulas

ATOMS = ("p", "q", "r")


def formulas(max_leaves: int = 12, names=ATOMS, k: bool = True):
    base = st.sampled_from([Atom(n) for n in names])

    def extend(children):
        ops = [
            children.map(Not),
            st.tuples(children, children).map(lambda t: And(*t)),
            st.tuples(children, children).map(lambda t: Or(*t)),
            st.tuples(children, children).map(lambda t: Implies(*t)),
        ]
        if k:
            ops.append(children.map(K))
        return st.one_of(*ops)

    return st.recursive(base, extend, max_leaves=max_leaves)


def truth(f, val):
    """Reference evaluator: ``val`` maps each basic formula to a bool."""
    if isinstance(f, (Atom, K)):
        return val[f]
    if isinstance(f, Not):
        return not truth(f.f, val)
    if isinstance(f, And):
        return truth(f.l, val) and truth(f.r, val)
    if isinstance(f, Or):
        return truth(f.l, val) or truth(f.r, val)
    return (not truth(f.l, val)) or truth(f.r, val)


def valuations(fs):
    basics = sorted(set().union(*(basic_subformulas(f) for f in fs)), key=repr)
    for bits in itertools.product((False, True), repeat=len(basics)):
        yield dict(zip(basics, bits))


def oracle_entails(premises, goal):
    for val in valuations(list(premises) + [goal]):
        if all(truth(p, val) for p in premises) and not truth(goal, val):
            return False
    return True


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is not None and mod.LINES:
        terminalreporter.section("acceptance criteria")
        for line in mod.LINES:
            terminalreporter.write_line(line)
