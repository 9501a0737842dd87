import io
import json
import subprocess
import sys

import pytest

from hodgelocus.cli import COMMANDS, run_command
from hodgelocus.instance import fixture_path, load_fixture


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    rc = run_command([str(a) for a in argv], out, err)
    return rc, out.getvalue(), err.getvalue()


def fx(name):
    return fixture_path(name)


def test_norm_text_and_json():
    rc, out, _ = run("norm", "--instance", fx("i_triv"), "--vector", "3", "--format", "text")
    assert rc == 0 and "9" in out
    rc, out, _ = run("norm", "--instance", fx("i_k3"), "--vector", "0,0,1")
    assert rc == 0
    assert json.loads(out)["hodge_norm2"] == "2"


def test_enumerate_csv():
    rc, out, _ = run("enumerate", "--instance", fx("i_triv"), "-K", "4", "--format", "csv")
    assert rc == 0
    assert out.splitlines() == ["h0", "-2", "-1", "0", "1", "2"]


@pytest.mark.parametrize("name", ["i_triv", "i_k3", "i_cy5", "i_2var", "odp"])
@pytest.mark.parametrize("cmd", ["validate", "wf", "deligne"])
def test_structural_commands_on_fixtures(cmd, name):
    rc, out, err = run(cmd, "--instance", fx(name))
    assert rc == 0, err
    json.loads(out)


def test_closure_k3():
    rc, out, _ = run("closure", "--instance", fx("i_k3"), "--vector", "0,1,0", "--samples", "50", "--format", "text")
    assert rc == 0 and "s1 - 1" in out


@pytest.mark.parametrize("name", ["i_triv", "i_k3", "i_cy5", "i_2var", "odp"])
def test_verify_fixture_expectations(name):
    rc, out, err = run("verify", "--instance", fx(name), "--m-max", "2000")
    assert rc == 0, err
    rep = json.loads(out)
    for body in rep["sequences"].values():
        assert body["as_expected"], body["verdict"]


def test_odp_vanishing_cycle_is_listed():
    rc, out, _ = run("verify", "--instance", fx("odp"), "--m-max", "1000", "--format", "text")
    assert rc == 0
    assert "vanishing_cycle" in out and "self-pairing -2" in out


def test_exit_codes(tmp_path):
    assert run("bogus")[0] == 2
    assert run("norm", "--instance", tmp_path / "missing.json", "--vector", "1")[0] == 2
    rc, _, err = run("norm", "--instance", fx("i_k3"), "--vector", "0,0")
    assert rc == 2 and "3 comma-separated" in err
    rc, _, err = run("wf", "--instance", fx("i_k3"), "--format", "csv")
    assert rc == 2 and "no CSV output" in err
    bad = tmp_path / "bad.json"
    bad.write_text('{"schema": 1, "rank": 1}')
    rc, _, err = run("validate", "--instance", bad)
    assert rc == 2 and "invalid instance" in err


def test_out_directory_and_byte_identical_runs(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        rc, _, _ = run("simulate", "--instance", fx("i_k3"), "--m-max", "200", "--out", d, "--seed", 3)
        assert rc == 0
    names = sorted(p.name for p in a.iterdir())
    assert "simulate.json" in names and any(n.endswith(".csv") for n in names)
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes()
    header = (a / "simulate_kernel_class.csv").read_text().splitlines()[0]
    assert header.startswith("m,t1,hodge_norm,e_norm,T1h_norm")


def test_h_rule_override():
    rc, out, _ = run("verify", "--instance", fx("i_k3"), "--m-max", "500", "--h-rule", "0,0,2")
    assert rc == 0
    seqs = json.loads(out)["sequences"]
    assert [b["verdict"] for b in seqs.values()] == ["conclusions hold"]


def test_every_command_has_a_handler(tmp_path):
    path = tmp_path / "k3.json"
    path.write_text(load_fixture("i_k3").dumps())
    extra = {"norm": ["--vector", "0,0,1"], "closure": ["--vector", "0,0,1", "--samples", "10"]}
    for cmd in COMMANDS:
        argv = [cmd, "--instance", path, "--m-max", "200"] + extra.get(cmd, [])
        rc, _, err = run(*argv)
        assert rc == 0, (cmd, err)


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "hodgelocus.cli", "norm", "--instance", str(fx("i_triv")), "--vector", "2", "--format", "text"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and "4" in proc.stdout
