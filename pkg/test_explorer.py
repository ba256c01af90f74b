import json
import random
from collections import Counter

import pytest

from conftest import config_of, random_output_system, sample_text
from explorer import (ExploreBounds, LtsGraph, count_maximal_paths, default_universe, explore,
                      fail_states, first_fail_states, simulate, terminal_states, trace_signature)
from semantics import ActionKind, Config, StepOptions, TagKind, trace_logs

def test_bounds_must_be_positive():
    with pytest.raises(ValueError):
        ExploreBounds(max_states=0)
    with pytest.raises(ValueError):
        ExploreBounds(max_repeat_unfold=-1)

def test_stuck_system_has_one_state():
    lts = explore(config_of("l[[ stop ]]"))
    assert lts.number_of_states() == 1
    assert lts.number_of_edges() == 0
    assert terminal_states(lts) == [lts.initial]

def test_distributed_tracing_has_two_final_trace_sets():
    lts = explore(config_of(sample_text("distributed_tracing.mdpi")))
    finals = {trace_signature(lts.config(s)) for s in terminal_states(lts)}
    assert len(finals) == 2
    for signature in finals:
        logs = dict(signature)
        assert [entry[0] for entry in logs["k"]] == ["c3"]
        assert sorted(entry[0] for entry in logs["l"]) == ["c1", "c2"]

def test_distributed_tracing_interleavings():
    lts = explore(config_of(sample_text("distributed_tracing.mdpi")))
    assert count_maximal_paths(lts) == 6

def test_closed_sys_outcomes():
    lts = explore(config_of(sample_text("sys.mdpi")), options=StepOptions(closed=True))
    finals = [dict(trace_signature(lts.config(s))) for s in terminal_states(lts)]
    assert len(finals) == 2
    shapes = sorted((len(f.get("l", ())), len(f.get("k", ()))) for f in finals)
    assert shapes == [(2, 1), (3, 0)]

def test_parallel_monitoring_never_fails():
    lts = explore(config_of(sample_text("parallel_monitoring.mdpi")))
    assert fail_states(lts) == []
    verdicts = {v.value for s in lts.states for _, v in lts.config(s).verdicts}
    assert verdicts == {"ok"}

def test_first_fail_states():
    lts = explore(config_of("l[[ trace c<w>@0 ]] | l[[ c?*(x).if x = v then ok else fail ]]@(l,0)", l=1),
                  options=StepOptions(closed=True))
    assert len(first_fail_states(lts)) == 1
    assert set(first_fail_states(lts)) <= set(fail_states(lts))

def test_state_cap_truncates():
    lts = explore(config_of(sample_text("distributed_tracing.mdpi")), ExploreBounds(max_states=3))
    assert lts.truncated
    assert lts.number_of_states() == 3

def test_cyclic_graph_rejects_path_counting():
    lts = LtsGraph()
    a, _ = lts.add_state(config_of("l[[ a!<v> ]]"))
    b, _ = lts.add_state(config_of("l[[ b!<v> ]]"))
    lts.add_edge(a, "x", b)
    lts.add_edge(b, "y", a)
    with pytest.raises(ValueError):
        count_maximal_paths(lts)

def test_default_universe_collects_free_names():
    universe = default_universe(config_of("l[[ c?(x).d!<v> ]]"))
    assert [n.text for n in universe] == ["c", "d", "l", "v"]

def test_exports():
    lts = explore(config_of("l[[ c!<v> ]]"))
    data = lts.to_json()
    assert len(data["states"]) == lts.number_of_states()
    assert "digraph" in lts.to_dot()

def test_simulation_is_reproducible():
    config = config_of(sample_text("distributed_tracing.mdpi"))
    first = simulate(config, steps=10, seed=7)
    second = simulate(config, steps=10, seed=7)
    assert [str(a) for a, _ in first.steps] == [str(a) for a, _ in second.steps]
    assert len(first.steps) == 3
    assert first.final in {explore(config).config(s) for s in terminal_states(explore(config))}

def test_simulation_halts_on_fail():
    config = config_of("l[[ fail ]]@(l,0) | k[[ c!<v> ]]")
    report = simulate(config, steps=10, seed=1, halt_on_first_fail=True)
    assert report.halted_on_fail

def test_exports_are_reproducible():
    text = sample_text("parallel_monitoring.mdpi")
    first, second = explore(config_of(text)), explore(config_of(text))
    assert json.dumps(first.to_json(), sort_keys=True) == json.dumps(second.to_json(), sort_keys=True)
    assert first.to_dot() == second.to_dot()

def logged(config: Config) -> Counter:
    return Counter((location, e.channel.text, tuple(v.text for v in e.values), e.timestamp)
                   for location, entries in trace_logs(config).items() for e in entries)

def assert_tracing_invariants(lts: LtsGraph, initial_clocks: dict):
    for state in lts.states:
        config = lts.config(state)
        logs = trace_logs(config)
        for location in set(initial_clocks) | set(logs) | set(config.clocks.as_dict()):
            stamps = sorted(e.timestamp for e in logs.get(location, ()))
            assert stamps == list(range(initial_clocks.get(location, 0), config.clocks.get(location)))
    for source, action, target in lts.edges():
        before, after = lts.config(source), lts.config(target)
        traced = action.tag.kind == TagKind.PROCESS and action.kind != ActionKind.INPUT
        for location in set(before.clocks.as_dict()) | set(after.clocks.as_dict()):
            ticks = 1 if traced and action.tag.source == location else 0
            assert after.clocks.get(location) - before.clocks.get(location) == ticks, str(action)
        assert not logged(before) - logged(after)
        assert sum((logged(after) - logged(before)).values()) == (1 if traced else 0)

def check_random_systems(count: int, seed: int):
    rng = random.Random(seed)
    for _ in range(count):
        text, clocks = random_output_system(rng)
        lts = explore(config_of(text, **clocks), options=StepOptions(universe=()))
        assert not lts.truncated, text
        assert_tracing_invariants(lts, clocks)

def test_tracing_invariants_on_random_systems():
    check_random_systems(40, seed=3)

@pytest.mark.slow
def test_tracing_invariants_on_many_random_systems():
    check_random_systems(1000, seed=17)
