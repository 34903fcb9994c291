"""Batch command-line front end.

Exit codes: 0 affirmative, 1 negative or falsified, 2 unknown at bound,
3 usage, parse or precondition error.
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources
from typing import Optional

from . import entailment as ent
from . import genericity as gen
from . import semantics as sem
from .syntax import And, Atom, Formula, Implies, K, Not, Or, ParseError, parse, to_text
from .theory import TheoryFormatError, close, finite, load_theory, schemas, union

EXIT_YES, EXIT_NO, EXIT_UNKNOWN, EXIT_USAGE = 0, 1, 2, 3


class UsageError(Exception):
    pass


# ---------------------------------------------------------------- output helpers

class Output:
    def __init__(self, as_json: bool):
        self.as_json = as_json
        self.lines: list = []

    def line(self, text: str = "") -> None:
        self.lines.append(text)

    def emit(self, payload: dict) -> None:
        if self.as_json:
            payload = {"schema_version": ent.SCHEMA_VERSION, **payload}
            print(json.dumps(payload, indent=2, sort_keys=True))
        else:
            print("\n".join(self.lines))


def _ast(f: Formula) -> dict:
    if isinstance(f, Atom):
        return {"Atom": f.name}
    if isinstance(f, (Not, K)):
        return {type(f).__name__: _ast(f.f)}
    return {type(f).__name__: [_ast(f.l), _ast(f.r)]}


def _ast_text(f: Formula, indent: int = 0) -> list:
    pad = "  " * indent
    if isinstance(f, Atom):
        return [f"{pad}Atom {f.name}"]
    kids = [f.f] if isinstance(f, (Not, K)) else [f.l, f.r]
    out = [f"{pad}{type(f).__name__}"]
    for c in kids:
        out += _ast_text(c, indent + 1)
    return out


def _formula(text: str) -> Formula:
    try:
        return parse(text)
    except ParseError as e:
        raise UsageError(f"cannot parse formula {text!r}: {e}") from e


def _theory(path: Optional[str]):
    if not path:
        raise UsageError("--theory FILE is required")
    try:
        return load_theory(path)
    except TheoryFormatError as e:
        raise UsageError(str(e)) from e
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from e


def _proof_lines(label: str, pf: ent.Proof) -> list:
    out = [f"{label}: {to_text(pf.goal)}  ({pf.premise_count} premises)"]
    for p, w in zip(pf.premises, pf.witnesses or [""] * pf.premise_count):
        out.append(f"    {to_text(p)}" + (f"    [{w}]" if w else ""))
    out.append(f"    valid core: {to_text(pf.core)}")
    return out


def _verdict_lines(v) -> list:
    if isinstance(v, ent.Entailed):
        return ["entailed"] + _proof_lines("proof", v.proof)
    if isinstance(v, ent.RefutedFinite):
        vals = ", ".join(f"{to_text(b)}={'T' if x else 'F'}" for b, x in v.countermodel.assignments)
        return ["not entailed (finite countermodel)",
                f"    {vals}; other basics default {'T' if v.countermodel.default else 'F'}"]
    if isinstance(v, ent.RefutedByRecipe):
        out = [f"not entailed: recipe {sem.model_name(v.recipe)} falsifies {to_text(v.goal)}"]
        out += [f"    covers {c}" for c in v.coverage.cases]
        if v.sample is not None:
            out.append(f"    sample: {v.sample.status} on {v.sample.checked} instances")
        out.append(f"    note: {v.note}")
        return out
    rep = ", ".join(f"{k}={x}" for k, x in v.bound_report.items())
    return [f"unknown at bound {v.bound} ({rep})"]


def _verdict_exit(v) -> int:
    if isinstance(v, ent.Entailed):
        return EXIT_YES
    if ent.is_refuted(v):
        return EXIT_NO
    return EXIT_UNKNOWN


# ---------------------------------------------------------------- subcommands

def cmd_parse(a, out: Output) -> int:
    f = _formula(a.formula)
    out.line(to_text(f))
    out.lines += _ast_text(f)
    out.emit({"text": to_text(f), "ast": _ast(f)})
    return EXIT_YES


def _model(a):
    if a.recipe:
        try:
            return sem.recipe_from_name(a.recipe)
        except ValueError as e:
            raise UsageError(str(e)) from e
    if a.model:
        try:
            with open(a.model, encoding="utf-8") as fh:
                return sem.parse_finite_model(fh.read(), a.model)
        except (OSError, ValueError, ParseError) as e:
            raise UsageError(str(e)) from e
    if a.theory:
        atoms = frozenset(x for x in (a.atoms or "").split(",") if x)
        return sem.Derived(_theory(a.theory), sem.AtomSet(atoms), a.bound)
    raise UsageError("eval needs one of --recipe, --model or --theory")


def cmd_eval(a, out: Output) -> int:
    f = _formula(a.formula)
    m = _model(a)
    trace: list = []
    try:
        value = sem.Evaluator(trace=trace, bound=a.bound).value(m, f)
    except sem.EvaluationError as e:
        raise UsageError(str(e)) from e
    word = {True: "true", False: "false", None: "unknown"}[value]
    out.line(word)
    for e in trace:
        out.line(f"    {to_text(e.formula)}: {e.value} ({e.verdict.kind})")
    out.emit({"formula": to_text(f), "model": sem.model_name(m), "value": value,
              "trace": [{"query": to_text(e.formula), "value": e.value,
                         "verdict": e.verdict.kind} for e in trace]})
    return {True: EXIT_YES, False: EXIT_NO, None: EXIT_UNKNOWN}[value]


def cmd_entails(a, out: Output) -> int:
    t = _theory(a.theory)
    f = _formula(a.formula)
    v = ent.entails(t, f, a.bound)
    out.lines += _verdict_lines(v)
    out.emit(ent.verdict_to_dict(v))
    return _verdict_exit(v)


def cmd_consistent(a, out: Output) -> int:
    t = _theory(a.theory)
    v = ent.is_consistent(t, a.bound)
    if isinstance(v, ent.Inconsistent):
        out.line("inconsistent")
        out.lines += _proof_lines("proof", v.proof)
        code = EXIT_NO
    elif isinstance(v, ent.Consistent):
        how = "exact" if v.exact else "sampled evidence only"
        out.line(f"consistent: witness {ent.model_to_dict(v.witness)} ({how})")
        code = EXIT_YES
    else:
        out.line(f"unknown at bound {v.bound}")
        code = EXIT_UNKNOWN
    d = ent.verdict_to_dict(v)
    d.pop("schema_version", None)
    out.emit(d)
    return code


def _load_proof(path: str) -> ent.Proof:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        premises = tuple(parse(x) for x in data["premises"])
        goal = parse(data["goal"])
        core = parse(data["core"]) if "core" in data else None
    except (OSError, ValueError, KeyError, TypeError, ParseError) as e:
        raise UsageError(f"cannot load proof {path}: {e}") from e
    from .syntax import chain
    return ent.Proof(premises, core if core is not None else chain(premises, goal), goal)


def cmd_prove_check(a, out: Output) -> int:
    t = _theory(a.theory)
    pf = _load_proof(a.proof)
    ok = ent.check_proof(t, pf, a.bound)
    out.line("accepted" if ok else "rejected")
    out.emit({"accepted": ok, "goal": to_text(pf.goal)})
    return EXIT_YES if ok else EXIT_NO


def _config(a) -> gen.SearchConfig:
    cfg = gen.SearchConfig()
    if a.config:
        try:
            cfg = gen.SearchConfig.load(a.config)
        except (OSError, ValueError, TypeError) as e:
            raise UsageError(f"bad config {a.config}: {e}") from e
    if a.seed is not None:
        from dataclasses import replace
        cfg = replace(cfg, seed=a.seed)
    return cfg


def cmd_generic(a, out: Output) -> int:
    t = _theory(a.theory)
    if a.action == "certify":
        c = gen.certify(t, a.mode)
        if isinstance(c, gen.NotDerivable):
            out.line(f"not derivable: {c.reason}")
            out.emit({"kind": "not-derivable", "certificate": gen.cert_to_dict(c)})
            return EXIT_UNKNOWN
        out.line(f"certified {c.mode}")
        out.line(json.dumps(gen.cert_to_dict(c)))
        out.emit({"kind": "certified", "certificate": gen.cert_to_dict(c)})
        return EXIT_YES
    f = gen.falsify(t, a.mode, a.strategy, _config(a), a.bound)
    d = gen.falsification_to_dict(f)
    if isinstance(f, gen.NotFound):
        out.line(f"not found at budget ({f.tried} extensions tried)")
        out.emit(d)
        return EXIT_UNKNOWN
    out.lines += _falsification_lines(f)
    out.emit(d)
    return EXIT_NO


def _falsification_lines(f) -> list:
    return [f"falsified ({f.mode}) by strategy {f.strategy}",
            f"    extension T' = {f.extension}",
            f"    S = {f.s}",
            f"    violated member: {to_text(f.violated)}"] + \
        [f"    T' |= {to_text(e.formula.f)}: {e.value} ({e.verdict.kind}"
         + (f" via {sem.model_name(e.verdict.recipe)})" if isinstance(e.verdict, ent.RefutedByRecipe) else ")")
         for e in f.trace]


# ---------------------------------------------------------------- reproduction suite

def _rep_knower(out: Output, bound) -> tuple[bool, dict]:
    r = gen.knower_paradox(bound)
    out.line(f"theory: {r.theory}")
    for label, pf in r.proofs:
        out.lines += _proof_lines(label, pf)
    out.lines += _proof_lines("contradiction", r.contradiction)
    ok = r.all_check()
    out.line(f"all proofs accepted by the kernel: {ok}")
    return ok, {"proofs": [dict(label=l, **ent.proof_to_dict(p)) for l, p in r.proofs],
                "contradiction": ent.proof_to_dict(r.contradiction), "checked": ok}


def _consistency_payload(r) -> dict:
    return {"core": str(r.core), "theory": str(r.full), "model": sem.model_name(r.model),
            "certificate": gen.cert_to_dict(r.certificate),
            "sample": ent.sample_to_dict(r.sample), "cases": r.cases,
            "all_knowing_coverage": list(r.all_knowing_coverage.cases),
            "not_p": ent.verdict_to_dict(r.not_p), "holds": r.holds}


def _rep_weakened(out: Output, bound) -> tuple[bool, dict]:
    payload = {}
    ok = True
    for label, cert in (("V + K (generic)", gen.certify(schemas("V", "K"), gen.GENERIC)),
                        ("V + K + KK (closed generic)", gen.certify(schemas("V", "K", "KK"), gen.CLOSED))):
        r = gen.knower_consistency(cert, sem.NO_ATOMS, 3 if bound is None else bound)
        out.line(f"H = {label}")
        out.line(f"    (T_KP)0 = {r.core}")
        out.line(f"    witness model: {sem.model_name(r.model)}")
        out.line(f"    {r.sample.status} on {r.sample.checked} instances of T_KP")
        for case, row in r.cases.items():
            out.line(f"      {case}: {row['checked']} checked, {row['violated']} violated, "
                     f"{row['unknown']} unknown")
        out.line(f"    (T_KP)0 |= ~p refuted by {sem.model_name(r.not_p.recipe)}"
                 if isinstance(r.not_p, ent.RefutedByRecipe) else f"    (T_KP)0 |= ~p: {r.not_p.kind}")
        out.line(f"    holds: {r.holds}")
        ok &= r.holds
        payload[label] = _consistency_payload(r)
    return ok, payload


def _rep_falsify(base, mode, expected: str, out: Output, bound) -> tuple[bool, dict]:
    f = gen.falsify(base, mode, bound=bound)
    out.line(f"base: {base} ({mode})")
    if isinstance(f, gen.NotFound):
        out.line("    no falsification found")
        return False, gen.falsification_to_dict(f)
    out.lines += ["    " + x for x in _falsification_lines(f)]
    ok = to_text(f.violated) == expected and f.verify(bound)[0]
    out.line(f"    matches expected {expected}: {ok}")
    return ok, gen.falsification_to_dict(f)


def _rep_kk(out, bound):
    ok, d = _rep_falsify(schemas("V", "K", "KK"), gen.GENERIC, "Kp -> KKp", out, bound)
    tprime = union(schemas("V", "K", "KK"), finite([Atom("p")]))
    v = ent.entails(tprime, K(Atom("p")), bound)
    rec_ok = isinstance(v, ent.RefutedByRecipe) and v.recipe == sem.N1
    sample = sem.satisfies_theory(sem.N1, tprime, _n1_candidates(), 2)
    out.line(f"    T' |= Kp: {v.kind} via {sem.model_name(getattr(v, 'recipe', None)) if rec_ok else '-'}")
    out.line(f"    N1 on T': {sample.status} over {sample.checked} instances")
    ok = ok and rec_ok and sample.holds and sample.checked >= 500
    return ok, {"falsification": d, "n1_refutation": ent.verdict_to_dict(v),
                "n1_sample": ent.sample_to_dict(sample)}


def _n1_candidates() -> set:
    return set(gen.small_formulas(["p", "q"], 24))


def _rep_corollaries(out, bound):
    ok = True
    payload = {}
    for base, mode, expected in ((schemas("V", "KK"), gen.GENERIC, "Kp -> KKp"),
                                 (schemas("K", "KK"), gen.GENERIC, "Kp -> KKp"),
                                 (schemas("KK"), gen.CLOSED, "K(p | ~p) -> KK(p | ~p)")):
        good, d = _rep_falsify(base, mode, expected, out, bound)
        ok &= good
        payload[f"{base} {mode}"] = d
    c = gen.certify(schemas("V", "K", "KK"), gen.CLOSED)
    out.line(f"V + K + KK closed generic by {type(c).__name__}, yet not generic (see kk-not-generic)")
    ok &= isinstance(c, gen.ClosedGenericVKKK)
    payload["closed_not_generic"] = gen.cert_to_dict(c)
    return ok, payload


def _rep_vkk(out, bound):
    ok, d = _rep_falsify(schemas("V", "KK"), gen.CLOSED, "Kq -> KKq", out, bound)
    return ok, d


def _rep_kkk(out, bound):
    return _rep_falsify(schemas("K", "KK"), gen.CLOSED, "K(p | ~p) -> KK(p | ~p)", out, bound)


def _superset_payload(r) -> dict:
    return {"schema": r.schema.value, "certificate": gen.cert_to_dict(r.certificate),
            "core": str(r.core), "theory": str(r.full), "violated": to_text(r.violated),
            "violated_value": r.violated_value,
            "inconsistency": ent.proof_to_dict(r.inconsistency), "holds": r.holds}


def _rep_superset(schema: str, out, bound):
    r = gen.no_superset_demo(schema, 3 if bound is None else bound)
    out.line(f"hypothesis: {r.certificate.assumed} closed generic (assumed)")
    out.line(f"    T_KP = {r.full}")
    out.line(f"    genericity would give M[(T_KP)0, {{}}] |= T_KP, but "
             f"{to_text(r.violated)} evaluates to {r.violated_value}")
    out.lines += ["    " + x for x in _proof_lines("T_KP inconsistent", r.inconsistency)]
    payload = _superset_payload(r)
    ok = r.holds
    if schema == "T":
        c = gen.certify(schemas("V", "K", "T", "KK"), gen.CLOSED)
        out.line(f"    S4-style V + K + T + KK: {c.kind if isinstance(c, gen.NotDerivable) else 'certified'}")
        ok &= isinstance(c, gen.NotDerivable)
    else:
        golden = _golden("five_superset.json")
        same = golden == ent.proof_to_dict(r.inconsistency)
        out.line(f"    matches stored golden proof: {same}")
        payload["matches_golden"] = same
        ok &= same
    return ok, payload


def _golden(name: str) -> Optional[dict]:
    try:
        text = resources.files("knowbench").joinpath("golden", name).read_text(encoding="utf-8")
    except (FileNotFoundError, OSError):
        return None
    return json.loads(text)


def _rep_necessitation(out, bound):
    ok = True
    t = close(schemas("V", "K"))
    goal = Implies(Atom("p"), Atom("p"))
    v = ent.entails(t, goal, bound)
    pf = ent.simulated_necessitation(t, v.proof, bound)
    out.lines += _proof_lines("close(V + K) |= K(p -> p)", pf)
    ok &= ent.check_proof(t, pf, bound)
    r = gen.knower_paradox(bound)
    out.lines += _proof_lines("T_KP |= K~p", r.proofs[1][1])
    weak = union(gen.knower_core(schemas("V", "K")), schemas("T"))
    v2 = ent.entails(weak, Not(Atom("p")), bound)
    blocked = ""
    if isinstance(v2, ent.Entailed):
        try:
            ent.simulated_necessitation(weak, v2.proof, bound)
        except ent.NecessitationError as e:
            blocked = e.requirement
    else:
        blocked = f"~p is not even entailed ({v2.kind})"
    out.line(f"weakened theory: necessitation blocked: {blocked or 'NOT BLOCKED'}")
    ok &= bool(blocked)
    return ok, {"k_p_implies_p": ent.proof_to_dict(pf),
                "knower_k_not_p": ent.proof_to_dict(r.proofs[1][1]), "weakened_blocked": blocked}


REPRODUCTIONS: dict = {
    "knower": ("Knower Paradox: T_KP is inconsistent", _rep_knower),
    "weakened": ("weakened Knower theory is consistent (generic and closed-generic H)", _rep_weakened),
    "kk-not-generic": ("V + K + KK is not generic", _rep_kk),
    "corollaries": ("V + KK and K + KK not generic; KK not closed generic", _rep_corollaries),
    "vkk": ("V + KK not closed generic with two atoms", _rep_vkk),
    "kkk": ("K + KK not closed generic", _rep_kkk),
    "t-superset": ("no superset of T is closed generic", lambda o, b: _rep_superset("T", o, b)),
    "five-superset": ("no superset of 5 is closed generic", lambda o, b: _rep_superset("5", o, b)),
    "necessitation": ("simulated necessitation", _rep_necessitation),
}


def cmd_reproduce(a, out: Output) -> int:
    ids = list(REPRODUCTIONS) if a.theorem == "all" else [a.theorem]
    if any(i not in REPRODUCTIONS for i in ids):
        raise UsageError(f"unknown theorem id {a.theorem!r}; choose from "
                         + ", ".join(list(REPRODUCTIONS) + ["all"]))
    results = {}
    all_ok = True
    for i in ids:
        title, fn = REPRODUCTIONS[i]
        out.line(f"== {i}: {title}")
        ok, payload = fn(out, a.bound)
        out.line(f"-> {'reproduced' if ok else 'NOT reproduced'}")
        out.line()
        results[i] = {"reproduced": ok, **payload}
        all_ok &= ok
    out.emit({"results": results, "reproduced": all_ok})
    return EXIT_YES if all_ok else EXIT_NO


# ---------------------------------------------------------------- argument parsing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--bound", type=int, default=None,
                        help=f"saturation bound (default {ent.DEFAULT_BOUND}, env {ent.BOUND_ENV})")
    common.add_argument("--theory", metavar="FILE")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--config", metavar="FILE", help="JSON search configuration")

    ap = argparse.ArgumentParser(prog="knowbench", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("parse", parents=[common], help="parse and pretty-print a formula")
    p.add_argument("formula")
    p.set_defaults(fn=cmd_parse)

    p = sub.add_parser("eval", parents=[common], help="evaluate a formula in a model")
    p.add_argument("formula")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--recipe", metavar="NAME")
    g.add_argument("--model", metavar="FILE")
    p.add_argument("--atoms", metavar="p,q", help="true atoms of the derived model (with --theory)")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("entails", parents=[common], help="does the theory entail the formula?")
    p.add_argument("formula")
    p.set_defaults(fn=cmd_entails)

    p = sub.add_parser("consistent", parents=[common], help="is the theory consistent?")
    p.set_defaults(fn=cmd_consistent)

    p = sub.add_parser("prove-check", parents=[common], help="check a JSON proof against a theory")
    p.add_argument("--proof", metavar="FILE", required=True)
    p.set_defaults(fn=cmd_prove_check)

    p = sub.add_parser("generic", parents=[common], help="certify or falsify genericity")
    p.add_argument("action", choices=["certify", "falsify"])
    p.add_argument("--mode", choices=gen.MODES, default=gen.GENERIC)
    p.add_argument("--strategy", default="auto",
                   choices=["auto", "add-atom", "kn-schemas", "kn-two-atoms", "random"])
    p.set_defaults(fn=cmd_generic)

    p = sub.add_parser("reproduce", parents=[common], help="re-run a published result")
    p.add_argument("theorem", help=", ".join(list(REPRODUCTIONS) + ["all"]))
    p.set_defaults(fn=cmd_reproduce)
    return ap


def main(argv: Optional[list] = None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code not in (0, None) else 0
    out = Output(a.json)
    try:
        return a.fn(a, out)
    except (UsageError, ValueError, ent.NecessitationError) as e:
        print(f"knowbench: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
