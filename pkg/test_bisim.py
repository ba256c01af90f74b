import pytest

from ast_nodes import chan
from bisim import (FilteredLts, Verdict, check_weak_bisim, filter_graph, replay,
                   verify_witness, weak_closure)
from conftest import config_of, sample_text
from explorer import default_universe, explore
from filters import TAU, AbstractAction, builtin_filter
from semantics import StepOptions

# the environment offers a single value to free inputs
ENVIRONMENT = (chan("v"),)

def filtered(text: str, name: str, universe) -> FilteredLts:
    config = config_of(text)
    return filter_graph(explore(config, options=StepOptions(universe=universe)), builtin_filter(name))

def pair(left: str, right: str, left_filter: str = "ntg", right_filter: str = "ntg", universe=None):
    if universe is None:
        universe = default_universe(config_of(left), config_of(right))
    return filtered(left, left_filter, universe), filtered(right, right_filter, universe)

def test_weak_closure_absorbs_taus():
    lts = FilteredLts.from_edges([(0, "tau", 1), (1, "a!", 2), (2, "tau", 3)])
    weak = weak_closure(lts)
    a = AbstractAction("output", "a")
    assert (0, a, 3) in weak.edges
    assert (0, TAU, 0) in weak.edges
    assert (2, TAU, 3) in weak.edges
    assert (3, a, 3) not in weak.edges

def test_silent_prefix_is_invisible():
    left = FilteredLts.from_edges([(0, "tau", 1), (1, "a!", 2)])
    right = FilteredLts.from_edges([(0, "a!", 1)])
    result = check_weak_bisim(left, right)
    assert result.verdict == Verdict.BISIMILAR
    assert verify_witness(left, right, result.relation)

def test_internal_choice_is_observable():
    left = FilteredLts.from_edges([(0, "tau", 1), (1, "a!", 2), (0, "tau", 3), (3, "b!", 4)])
    right = FilteredLts.from_edges([(0, "a!", 1), (0, "b!", 2)])
    result = check_weak_bisim(left, right)
    assert result.verdict == Verdict.DISTINGUISHED
    assert result.trace
    assert result.side == "a"

def test_trace_equivalent_pair_reports_an_attacker_move():
    # a.(b + c) against a.b + a.c
    left = FilteredLts.from_edges([(0, "a!", 1), (1, "b!", 2), (1, "c!", 3)])
    right = FilteredLts.from_edges([(0, "a!", 1), (0, "a!", 2), (1, "b!", 3), (2, "c!", 4)])
    result = check_weak_bisim(left, right)
    assert result.verdict == Verdict.DISTINGUISHED
    assert result.trace == [] and result.side is None
    attack = result.attack
    assert attack.side == "a"
    assert attack.action == AbstractAction("output", "a")
    assert attack.target == 1
    assert attack.answers == [1, 2]
    assert ("a", 1) in attack.block
    assert ("b", 1) not in attack.block and ("b", 2) not in attack.block
    data = result.to_dict()
    assert data["playable_by"] is None
    assert data["attack"]["action"] == "a!<>"

def test_truncation_makes_bisimilar_inconclusive():
    lts = FilteredLts.from_edges([(0, "a!", 1)], truncated=True)
    assert check_weak_bisim(lts, lts).verdict == Verdict.INCONCLUSIVE

def test_bad_witness_is_rejected():
    left = FilteredLts.from_edges([(0, "a!", 1)])
    right = FilteredLts.from_edges([(0, "a!", 1)])
    assert verify_witness(left, right, [(0, 0), (1, 1)])
    assert not verify_witness(left, right, [(0, 0)])
    assert not verify_witness(left, right, [(1, 1)])

def test_unknown_states_rejected():
    with pytest.raises(ValueError):
        FilteredLts([0], {(0, TAU, 5)}, 0)

def test_system_is_bisimilar_to_itself():
    text = sample_text("sys.mdpi")
    left, right = pair(text, text)
    result = check_weak_bisim(left, right)
    assert result.verdict == Verdict.BISIMILAR
    assert verify_witness(left, right, result.relation)

def test_different_outputs_are_distinguished():
    left, right = pair("l[[ c!<v> ]]", "l[[ d!<v> ]]")
    result = check_weak_bisim(left, right)
    assert result.verdict == Verdict.DISTINGUISHED
    assert [str(a) for a in result.trace] == ["c!<v>"]
    assert replay(left, result.trace)
    assert not replay(right, result.trace)
    assert result.to_dict()["playable_by"] == "a"

def test_bisimilarity_is_symmetric():
    for left, right in (("l[[ c!<v> ]]", "l[[ c!<v> ]] | k[[ stop ]]"),
                        ("l[[ c!<v> ]]", "l[[ d!<v> ]]")):
        a, b = pair(left, right)
        assert check_weak_bisim(a, b).verdict == check_weak_bisim(b, a).verdict

@pytest.mark.slow
def test_orchestrated_and_choreographed_monitors_agree():
    left, right = pair(sample_text("sys_orch.mdpi"), sample_text("sys_chor.mdpi"), universe=ENVIRONMENT)
    result = check_weak_bisim(left, right)
    assert result.verdict == Verdict.BISIMILAR
    assert verify_witness(left, right, result.relation)

@pytest.mark.slow
def test_orchestrated_monitor_does_not_disturb_processes():
    left, right = pair(sample_text("sys.mdpi"), sample_text("sys_orch.mdpi"), "prc", "prc", ENVIRONMENT)
    assert check_weak_bisim(left, right).verdict == Verdict.BISIMILAR

@pytest.mark.slow
def test_migrating_monitor_needs_no_remote_tracing():
    text = sample_text("sys_mig.mdpi")
    left, right = pair(text, text, "ntg", "ltr", ENVIRONMENT)
    assert check_weak_bisim(left, right).verdict == Verdict.BISIMILAR
