import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

import main_cli
from bisim import AttackerMove, BisimResult, Verdict
from filters import AbstractAction
from main_cli import (EXIT_DISTINGUISHED, EXIT_INCONCLUSIVE, EXIT_INPUT_ERROR, EXIT_OK, main,
                      parse_assignments, resolve_seed)
from parser import parse_system

@pytest.fixture
def write(tmp_path):
    def _write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)
    return _write

def sample(samples_dir, name: str) -> str:
    return str(samples_dir / name)

def test_explore_summary(samples_dir, capsys):
    assert main(["explore", sample(samples_dir, "distributed_tracing.mdpi")]) == EXIT_OK
    out = capsys.readouterr().out
    assert "conjuntos de trazas terminales: 2" in out
    assert "truncado: no" in out

def test_explore_json_to_file(samples_dir, tmp_path, capsys):
    target = tmp_path / "lts.json"
    code = main(["explore", sample(samples_dir, "parallel_monitoring.mdpi"), "--format", "json",
                 "-o", str(target)])
    assert code == EXIT_OK
    data = json.loads(target.read_text(encoding="utf-8"))
    assert data["initial"] == 0
    assert data["states"] and data["edges"]
    assert "veredictos alcanzables: ok@l" in capsys.readouterr().out

def test_explore_dot_with_filter(samples_dir, capsys):
    assert main(["explore", sample(samples_dir, "sys.mdpi"), "--closed", "--format", "dot",
                 "--filter", "prc"]) == EXIT_OK
    captured = capsys.readouterr()
    assert captured.out.startswith('digraph "lts"')
    assert "estados:" in captured.err

def test_check_bisimilar(samples_dir, capsys):
    path = sample(samples_dir, "sys.mdpi")
    assert main(["check", path, path]) == EXIT_OK
    assert "✓ bisimilares" in capsys.readouterr().out

def test_check_distinguished_writes_witness(write, tmp_path, capsys):
    a = write("a.mdpi", "l[[ c!<v> ]]")
    b = write("b.mdpi", "l[[ d!<v> ]]")
    target = tmp_path / "witness.json"
    assert main(["check", a, b, "-o", str(target)]) == EXIT_DISTINGUISHED
    data = json.loads(target.read_text(encoding="utf-8"))
    assert data["verdict"] == "distinguished"
    assert data["trace"] == ["c!<v>"]
    assert "✗ distinguibles" in capsys.readouterr().out

def test_check_truncated_is_inconclusive(samples_dir, capsys):
    path = sample(samples_dir, "distributed_tracing.mdpi")
    assert main(["check", path, path, "--max-states", "2"]) == EXIT_INCONCLUSIVE
    assert "inconcluso" in capsys.readouterr().out

def test_simulate_is_reproducible(samples_dir, capsys):
    path = sample(samples_dir, "distributed_tracing.mdpi")
    assert main(["simulate", path, "--seed", "3"]) == EXIT_OK
    first = capsys.readouterr().out
    assert main(["simulate", path, "--seed", "3"]) == EXIT_OK
    assert capsys.readouterr().out == first
    assert "semilla: 3" in first
    assert "pasos: 3" in first

def test_simulate_seed_from_environment(samples_dir, monkeypatch, capsys):
    monkeypatch.setenv("MDPI_SEED", "11")
    assert main(["simulate", sample(samples_dir, "sys.mdpi"), "--format", "json"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["seed"] == 11
    monkeypatch.setenv("MDPI_SEED", "eleven")
    assert main(["simulate", sample(samples_dir, "sys.mdpi")]) == EXIT_INPUT_ERROR

def test_compile_prints_a_parseable_monitor(samples_dir, capsys):
    for strategy in ("orch", "chor", "mig"):
        assert main(["compile", sample(samples_dir, "two_events.re"), "--strategy", strategy]) == EXIT_OK
        parse_system(capsys.readouterr().out)

def test_compile_nested_migration(samples_dir, capsys):
    assert main(["compile", sample(samples_dir, "two_events.re"), "--strategy", "mig", "--nested"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "go k" in out and "fail" in out

def test_compile_rejects_bad_placement(samples_dir, capsys):
    code = main(["compile", sample(samples_dir, "two_events.re"), "--strategy", "chor", "--place", "9=h"])
    assert code == EXIT_INPUT_ERROR
    assert "✗ Error" in capsys.readouterr().err

def test_verify_contract(samples_dir, write, capsys):
    system = write("run.mdpi", "l[[ c1!<v> ]] | k[[ c2!<v> ]]")
    code = main(["verify-contract", sample(samples_dir, "two_events.re"), system,
                 "--ctx-init", "clock", "--max-unfold", "2", "--max-trace", "4"])
    assert code == EXIT_OK
    out = capsys.readouterr().out
    assert "orch: fail alcanzable" in out
    assert "✓ oráculo de acuerdo" in out

def test_verify_contract_fails_when_strategies_differ(samples_dir, write, monkeypatch, capsys):
    system = write("run.mdpi", "l[[ c1!<v> ]] | k[[ c2!<v> ]]")
    monkeypatch.setattr(main_cli, "check_weak_bisim",
                        lambda a, b: BisimResult(Verdict.DISTINGUISHED))
    code = main(["verify-contract", sample(samples_dir, "two_events.re"), system, "--strategy", "all",
                 "--ctx-init", "clock", "--max-unfold", "2", "--max-trace", "4"])
    assert code == EXIT_DISTINGUISHED
    out = capsys.readouterr().out
    assert "orch ≈ chor: distinguished" in out
    assert "orch ≈ mig: distinguished" in out

def test_check_reports_attacker_move(write, tmp_path, monkeypatch, capsys):
    a = write("a.mdpi", "l[[ c!<v> ]]")
    move = AttackerMove("a", AbstractAction("output", "c", ("v",)), 1, [("a", 1)], [])
    monkeypatch.setattr(main_cli, "check_weak_bisim",
                        lambda left, right: BisimResult(Verdict.DISTINGUISHED, attack=move))
    target = tmp_path / "attack.json"
    assert main(["check", a, a, "-o", str(target)]) == EXIT_DISTINGUISHED
    data = json.loads(target.read_text(encoding="utf-8"))
    assert data["playable_by"] is None
    assert data["attack"]["action"] == "c!<v>"
    assert "el sistema A juega c!<v>" in capsys.readouterr().out

def test_input_errors(write, samples_dir, capsys):
    broken = write("broken.mdpi", "l[[ c!<v> ")
    assert main(["explore", broken]) == EXIT_INPUT_ERROR
    assert main(["explore", "missing.mdpi"]) == EXIT_INPUT_ERROR
    assert main(["explore", sample(samples_dir, "sys.mdpi"), "--clock", "l"]) == EXIT_INPUT_ERROR
    assert main(["explore", sample(samples_dir, "sys.mdpi"), "--filter", "nope"]) == EXIT_INPUT_ERROR
    assert main(["explore", sample(samples_dir, "sys.mdpi"), "--max-states", "0"]) == EXIT_INPUT_ERROR
    assert capsys.readouterr().err.count("✗ Error") == 5

def test_assignment_parsing():
    assert parse_assignments(["l=2", "k=0"], "--clock", int) == {"l": 2, "k": 0}
    with pytest.raises(ValueError):
        parse_assignments(["l=two"], "--clock", int)
    assert resolve_seed(5) == 5

@pytest.mark.parametrize("fmt", ["json", "dot"])
def test_explore_output_is_identical_across_processes(samples_dir, fmt):
    outputs = []
    for hash_seed in ("1", "2"):
        env = dict(os.environ, PYTHONHASHSEED=hash_seed)
        done = subprocess.run([sys.executable, str(Path(main_cli.__file__)), "explore",
                               sample(samples_dir, "parallel_monitoring.mdpi"), "--format", fmt],
                              capture_output=True, env=env, check=True)
        outputs.append(done.stdout)
    assert outputs[0] == outputs[1]
    assert outputs[0]
