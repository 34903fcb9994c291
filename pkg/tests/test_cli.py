import json
import os
import subprocess
import sys

import pytest

from knowbench.cli import main

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
THY = os.path.join(ROOT, "theories")


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, *argv, "--json")
    return code, json.loads(out)


def test_parse(capsys):
    code, d = run_json(capsys, "parse", "K(p -> q) -> Kp -> Kq")
    assert code == 0 and d["text"] == "K(p -> q) -> Kp -> Kq"
    assert d["schema_version"] == 1 and d["ast"]


def test_parse_error_exit(capsys):
    code, _, err = run(capsys, "parse", "p ->")
    assert code == 3 and "byte 4" in err


@pytest.mark.parametrize("argv,code", [
    (["eval", "Kp", "--recipe", "n1"], 1),
    (["eval", "K(p | ~p)", "--recipe", "n2"], 0),
    (["eval", "K(p | ~p)", "--recipe", "bad(p)"], 1),
    (["eval", "Kp", "--theory", os.path.join(THY, "finite_mp.thy")], None),
    (["entails", "~p", "--theory", os.path.join(THY, "tkp0.thy")], 1),
    (["entails", "p & ~p", "--theory", os.path.join(THY, "tkp.thy")], 0),
    (["consistent", "--theory", os.path.join(THY, "tkp.thy")], 1),
    (["consistent", "--theory", os.path.join(THY, "tkp0.thy")], 0),
    (["generic", "certify", "--theory", os.path.join(THY, "vkk_p.thy")], None),
    (["eval", "p", "--recipe", "nonsense"], 3),
    (["entails", "p", "--theory", "/nonexistent.thy"], 3),
    (["reproduce", "nothing"], 3),
    (["frobnicate"], 3),
])
def test_exit_codes(capsys, argv, code):
    got, _, _ = run(capsys, *argv)
    if code is not None:
        assert got == code
    else:
        assert got in (0, 1, 2)


def test_entails_json_is_deterministic(capsys):
    argv = ["entails", "p & ~p", "--theory", os.path.join(THY, "tkp.thy"), "--json"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    d = json.loads(first)
    assert d["kind"] == "entailed" and d["premise_count"] == len(d["premises"])


def test_prove_check_round_trip(capsys, tmp_path):
    thy = os.path.join(THY, "tkp.thy")
    _, d = run_json(capsys, "entails", "p & ~p", "--theory", thy)
    path = tmp_path / "proof.json"
    path.write_text(json.dumps(d))
    assert run(capsys, "prove-check", "--proof", str(path), "--theory", thy)[0] == 0
    d["premises"] = d["premises"][1:]
    path.write_text(json.dumps(d))
    assert run(capsys, "prove-check", "--proof", str(path), "--theory", thy)[0] == 1


def test_generic_falsify(capsys, tmp_path):
    thy = tmp_path / "vkkk.thy"
    thy.write_text("#schema V K KK\n")
    code, d = run_json(capsys, "generic", "falsify", "--theory", str(thy))
    # exit codes answer "is it generic?", so a falsification is a no
    assert code == 1 and d["violated"] == "Kp -> KKp"
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"random_trials": 2}')
    code, d = run_json(capsys, "generic", "certify", "--theory", str(thy), "--mode",
                       "closed-generic", "--config", str(cfg))
    assert code == 0 and d["certificate"]["node"] == "ClosedGenericVKKK"
    code, d = run_json(capsys, "generic", "certify", "--theory", str(thy))
    assert code == 2 and d["kind"] == "not-derivable"


def test_reproduce_json_deterministic(capsys):
    _, a, _ = run(capsys, "reproduce", "vkk", "--json")
    _, b, _ = run(capsys, "reproduce", "vkk", "--json")
    assert a == b and json.loads(a)["reproduced"] is True


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "knowbench", "parse", "p <-> K~p"],
                       capture_output=True, text=True, cwd=ROOT)
    assert r.returncode == 0 and r.stdout.startswith("(p -> K~p) & (K~p -> p)")
