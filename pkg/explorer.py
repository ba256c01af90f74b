"""Bounded state-space construction and utilities over explored graphs."""
import logging
import random
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import networkx as nx

from ast_nodes import NameKind, Verdict
from scope_analyzer import free_names
from semantics import Action, Config, StepOptions, successors, trace_logs

logger = logging.getLogger(__name__)

@dataclass(frozen=True)
class ExploreBounds:
    max_repeat_unfold: int = 3
    max_trace_len: int = 8
    max_states: int = 20000

    def __post_init__(self):
        for name in ("max_repeat_unfold", "max_trace_len", "max_states"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")

def default_universe(*configs: Config):
    """Free channel and location names offered to environment inputs."""
    names = set()
    for config in configs:
        names |= {n for n in free_names(config.system) if n.kind != NameKind.VARIABLE}
    by_text = {}
    for name in sorted(names, key=lambda n: (n.text, n.kind.value)):
        by_text.setdefault(name.text, name)
    return tuple(by_text[t] for t in sorted(by_text))

class LtsGraph:
    """Explored configurations as a networkx multigraph.

    Nodes are integers in discovery order carrying a ``config`` attribute;
    edges carry the ``action`` that labels them.
    """

    def __init__(self):
        self.graph = nx.MultiDiGraph()
        self.initial = 0
        self.truncated = False
        self._ids: Dict[Config, int] = {}

    def add_state(self, config: Config) -> Tuple[int, bool]:
        if config in self._ids:
            return self._ids[config], False
        state = len(self._ids)
        self._ids[config] = state
        self.graph.add_node(state, config=config)
        return state, True

    def add_edge(self, source: int, action, target: int):
        self.graph.add_edge(source, target, action=action)

    def config(self, state: int) -> Config:
        return self.graph.nodes[state]["config"]

    def state_of(self, config: Config) -> Optional[int]:
        return self._ids.get(config)

    @property
    def states(self) -> List[int]:
        return list(self.graph.nodes)

    def edges(self) -> Iterator[Tuple[int, object, int]]:
        for source, target, data in self.graph.edges(data=True):
            yield source, data["action"], target

    def out_edges(self, state: int) -> List[Tuple[object, int]]:
        return [(data["action"], target) for _, target, data in self.graph.out_edges(state, data=True)]

    def number_of_states(self) -> int:
        return self.graph.number_of_nodes()

    def number_of_edges(self) -> int:
        return self.graph.number_of_edges()

    def to_json(self, label: Callable = str) -> dict:
        states = []
        for state in sorted(self.graph.nodes):
            entry = {"id": state}
            entry.update(self.config(state).to_dict())
            states.append(entry)
        edges = []
        for source, action, target in sorted(self.edges(), key=lambda e: (e[0], e[2], str(e[1]))):
            text = label(action)
            if text is None:
                continue
            edge = {"from": source, "to": target, "label": text}
            if hasattr(action, "to_dict"):
                edge["action"] = action.to_dict()
            edges.append(edge)
        return {"initial": self.initial, "truncated": self.truncated,
                "states": states, "edges": edges}

    def to_dot(self, label: Callable = str) -> str:
        lines = ['digraph "lts" {', '\trankdir=LR;']
        for state in sorted(self.graph.nodes):
            shape = "doublecircle" if state == self.initial else "circle"
            lines.append(f'\t{state} [shape={shape}];')
        for source, action, target in sorted(self.edges(), key=lambda e: (e[0], e[2], str(e[1]))):
            text = label(action)
            if text is None:
                continue
            text = text.replace('"', '\\"')
            lines.append(f'\t{source} -> {target} [label="{text}"];')
        lines.append('}')
        return "\n".join(lines) + "\n"

def step_options(bounds: ExploreBounds, options: Optional[StepOptions], initial: Config) -> StepOptions:
    options = options or StepOptions()
    if options.universe is None and not options.closed:
        options = replace(options, universe=default_universe(initial))
    return replace(options, max_repeat_unfold=bounds.max_repeat_unfold,
                   max_trace_len=bounds.max_trace_len)

def explore(config: Config, bounds: Optional[ExploreBounds] = None,
            options: Optional[StepOptions] = None) -> LtsGraph:
    bounds = bounds or ExploreBounds()
    options = step_options(bounds, options, config)
    lts = LtsGraph()
    lts.initial, _ = lts.add_state(config)
    frontier = deque([lts.initial])

    while frontier:
        state = frontier.popleft()
        result = successors(lts.config(state), options)
        if result.truncated:
            lts.truncated = True
        for action, target in result.transitions:
            known = lts.state_of(target)
            if known is None:
                if lts.number_of_states() >= bounds.max_states:
                    lts.truncated = True
                    continue
                known, _ = lts.add_state(target)
                frontier.append(known)
            lts.add_edge(state, action, known)

    if lts.truncated:
        logger.warning("Exploration truncated at %d states", lts.number_of_states())
    logger.info("Explored %d states, %d edges", lts.number_of_states(), lts.number_of_edges())
    return lts

# Graph utilities

def progress_graph(lts: LtsGraph) -> nx.DiGraph:
    """Edges between distinct states only."""
    graph = nx.DiGraph()
    graph.add_nodes_from(lts.graph.nodes)
    graph.add_edges_from((s, t) for s, t in lts.graph.edges() if s != t)
    return graph

def terminal_states(lts: LtsGraph) -> List[int]:
    """States whose only moves are self-loops."""
    graph = progress_graph(lts)
    return sorted(s for s in graph.nodes if graph.out_degree(s) == 0)

def count_maximal_paths(lts: LtsGraph) -> int:
    graph = progress_graph(lts)
    if not nx.is_directed_acyclic_graph(graph):
        raise ValueError("Path counting needs an acyclic state graph")
    multiplicity: Dict[Tuple[int, int], int] = {}
    for source, target in lts.graph.edges():
        if source != target:
            multiplicity[(source, target)] = multiplicity.get((source, target), 0) + 1
    paths: Dict[int, int] = {}
    for state in reversed(list(nx.topological_sort(graph))):
        successors_ = list(graph.successors(state))
        if not successors_:
            paths[state] = 1
        else:
            paths[state] = sum(multiplicity[(state, t)] * paths[t] for t in successors_)
    return paths[lts.initial]

def has_fail(config: Config) -> bool:
    return any(v == Verdict.FAIL for _, v in config.verdicts)

def fail_states(lts: LtsGraph) -> List[int]:
    return sorted(s for s in lts.graph.nodes if has_fail(lts.config(s)))

def first_fail_states(lts: LtsGraph) -> List[int]:
    """Fail states entered from a state without a fail verdict."""
    found = set()
    for source, target in lts.graph.edges():
        if has_fail(lts.config(target)) and not has_fail(lts.config(source)):
            found.add(target)
    if has_fail(lts.config(lts.initial)):
        found.add(lts.initial)
    return sorted(found)

def trace_signature(config: Config) -> Tuple:
    """Per-location trace logs as a comparable value."""
    logs = trace_logs(config)
    return tuple(sorted(
        (location, tuple((e.channel.text, tuple(v.text for v in e.values), e.timestamp) for e in entries))
        for location, entries in logs.items()))

# Simulation

@dataclass
class SimulationReport:
    steps: List[Tuple[Action, Config]] = field(default_factory=list)
    initial: Optional[Config] = None
    halted_on_fail: bool = False

    @property
    def final(self) -> Config:
        return self.steps[-1][1] if self.steps else self.initial

def simulate(config: Config, steps: int, seed: int = 0, options: Optional[StepOptions] = None,
             bounds: Optional[ExploreBounds] = None, halt_on_first_fail: bool = False) -> SimulationReport:
    """One uniformly random path of at most ``steps`` moves."""
    rng = random.Random(seed)
    bounds = bounds or ExploreBounds()
    options = step_options(bounds, options, config)
    report = SimulationReport(initial=config)
    current = config
    for _ in range(steps):
        if halt_on_first_fail and has_fail(current):
            report.halted_on_fail = True
            break
        moves = [(a, t) for a, t in successors(current, options).transitions if t != current]
        if not moves:
            break
        action, current = moves[rng.randrange(len(moves))]
        report.steps.append((action, current))
    if halt_on_first_fail and has_fail(current):
        report.halted_on_fail = True
    return report
