import json
import subprocess
import sys

import pytest

from tggp.cli import cli_main
from tggp.harness import gen_matched_pair
from tggp.localfield import LocalField

FIELD = LocalField(3)


def run(capsys, *argv):
    code = cli_main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


@pytest.fixture
def instance_file(tmp_path):
    inst = gen_matched_pair(FIELD, 2, 0)
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(inst.to_json()))
    return path


def test_invariants_of_a_triple(tmp_path, capsys):
    path = tmp_path / "t.json"
    path.write_text(json.dumps({
        "config": {"p": 3},
        "triple": {
            "xi": {"entries": [["0", "1"], ["1", "0"]]},
            "x": {"entries": [["1", "0"]]},
            "y": {"entries": [["0"], ["1"]]},
        },
    }))
    code, out, _ = run(capsys, "invariants", str(path))
    assert code == 0
    data = json.loads(out)
    assert [a["a"] for a in data["a"]] == ["0", "-1"]
    assert [b["a"] for b in data["b"]] == ["0", "1"]


def test_match_and_transfer_factor(instance_file, capsys):
    code, out, _ = run(capsys, "match", str(instance_file))
    assert code == 0 and json.loads(out) == {"match": True}
    code, out, _ = run(capsys, "transfer-factor", str(instance_file))
    assert code == 0 and "transfer_factor" in json.loads(out)


def test_orbital_integrals(instance_file, capsys, tmp_path):
    out_path = tmp_path / "gl.json"
    code, out, _ = run(capsys, "orb-gl", str(instance_file), "--formal", "--json-out", str(out_path))
    assert code == 0
    assert json.loads(out_path.read_text()) == json.loads(out)
    assert json.loads(out)["complete"] is True
    code, out, _ = run(capsys, "orb-u", str(instance_file))
    assert code == 0 and json.loads(out)["complete"] is True


def test_tiny_budget_is_inconclusive(tmp_path, capsys):
    for seed in range(10):
        inst = gen_matched_pair(FIELD, 2, seed)
        path = tmp_path / f"i{seed}.json"
        path.write_text(json.dumps(inst.to_json()))
        code, out, _ = run(capsys, "orb-u", str(path), "--budget", "1")
        if not json.loads(out)["complete"]:
            assert code == 2
            return
    pytest.fail("every instance fit in a budget of one lattice")


def test_campaign_commands(capsys):
    code, out, err = run(capsys, "verify-fl", "--n", "1", "--count", "5", "--seed", "2")
    assert code == 0 and json.loads(out)["passed"] == 5 and "5/5 passed" in err
    code, out, _ = run(capsys, "verify-vanishing", "--n", "1", "--count", "3", "--timing")
    assert code == 0 and "elapsed_seconds" in json.loads(out)
    code, out, _ = run(capsys, "verify-split", "--count", "2", "--no-n2")
    assert code == 0 and json.loads(out)["passed"] == 2
    code, out, _ = run(capsys, "fourier-selftest", "--count", "2")
    assert code == 0 and json.loads(out)["passed"] == 8


def test_same_seed_same_report(capsys):
    _, a, _ = run(capsys, "verify-fl", "--n", "1", "--count", "4", "--seed", "9")
    _, b, _ = run(capsys, "verify-fl", "--n", "1", "--count", "4", "--seed", "9")
    assert a == b


def test_gen_instance(capsys):
    code, out, _ = run(capsys, "gen-instance", "--n", "2", "--seed", "3")
    assert code == 0 and json.loads(out)["provenance"]["recipe"] == "fl"
    code, out, _ = run(capsys, "gen-instance", "--n", "1", "--beta-minus")
    assert json.loads(out)["provenance"]["recipe"] == "beta-minus"


def test_config_file(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": 5, "n": 1, "count": 3, "seed": 1, "bounds": {"val_lo": -1, "val_hi": 1}}))
    code, out, _ = run(capsys, "verify-fl", "--config", str(cfg))
    data = json.loads(out)
    assert code == 0 and data["params"]["p"] == 5 and data["count"] == 3


def test_invalid_inputs_exit_two(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"config": {"p": 3}, "gl": ')
    code, _, err = run(capsys, "orb-gl", str(bad))
    assert code == 2 and "line 1" in err
    code, _, err = run(capsys, "orb-gl", str(tmp_path / "missing.json"))
    assert code == 2 and "cannot read" in err
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"p": 4}))
    code, _, err = run(capsys, "verify-fl", "--config", str(cfg))
    assert code == 2 and "configuration" in err
    empty = tmp_path / "empty.json"
    empty.write_text("{}")
    code, _, _ = run(capsys, "invariants", str(empty))
    assert code == 2


def test_failing_campaign_exits_one(monkeypatch, capsys):
    from tggp import harness

    real = harness.orb_u_unramified

    def broken(field, r, d=0, budget=200000):
        res = real(field, r, d, budget=budget)
        res.value = res.value * 3
        return res

    monkeypatch.setattr(harness, "orb_u_unramified", broken)
    code, out, _ = run(capsys, "verify-fl", "--n", "1", "--count", "10")
    assert code == 1 and json.loads(out)["counterexamples"]


def test_console_script_entry_point():
    res = subprocess.run([sys.executable, "-m", "tggp.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "verify-fl" in res.stdout
