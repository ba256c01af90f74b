"""Brute-force trace matching used to cross-check compiled monitors."""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, Iterator, List, Mapping, Sequence, Tuple

import networkx as nx

from ast_nodes import *
from explorer import LtsGraph, first_fail_states, has_fail
from semantics import trace_logs

logger = logging.getLogger(__name__)

MAX_LINEARIZATIONS = 10000

@dataclass(frozen=True)
class TraceStep:
    location: str
    channel: str
    values: Tuple[str, ...]
    timestamp: int = 0

@dataclass(frozen=True)
class LocatedTrace:
    steps: Tuple[TraceStep, ...] = ()

    def __post_init__(self):
        last: Dict[str, int] = {}
        for step in self.steps:
            if step.location in last and step.timestamp <= last[step.location]:
                raise ValueError(f"Timestamps at {step.location} must strictly increase")
            last[step.location] = step.timestamp

    @classmethod
    def of(cls, *steps: Tuple) -> "LocatedTrace":
        """Build from ``(location, channel, values)`` triples, numbering each location from 0."""
        counters: Dict[str, int] = {}
        built = []
        for location, channel, values in steps:
            stamp = counters.get(location, 0)
            counters[location] = stamp + 1
            built.append(TraceStep(location, channel, tuple(values), stamp))
        return cls(tuple(built))

    def __len__(self) -> int:
        return len(self.steps)

    def prefix(self, length: int) -> "LocatedTrace":
        return LocatedTrace(self.steps[:length])

def event_matches(event: Event, step: TraceStep) -> bool:
    return (event.location.text == step.location and event.channel.text == step.channel
            and tuple(v.text for v in event.values) == step.values)

def oracle_match(expr: ContractExpr, trace: LocatedTrace) -> bool:
    """Exact regular-expression membership over located events."""
    steps = trace.steps

    @lru_cache(maxsize=None)
    def match(node: ContractExpr, start: int, end: int) -> bool:
        if isinstance(node, Event):
            return end - start == 1 and event_matches(node, steps[start])
        if isinstance(node, Choice):
            return match(node.left, start, end) or match(node.right, start, end)
        if isinstance(node, Seq):
            return any(match(node.left, start, mid) and match(node.right, mid, end)
                       for mid in range(start, end + 1))
        if isinstance(node, Star):
            if start == end:
                return True
            return any(match(node.body, start, mid) and match(node, mid, end)
                       for mid in range(start + 1, end + 1))
        raise TypeError(f"Unknown contract node {type(node).__name__}")

    return match(expr, 0, len(steps))

def violates(expr: ContractExpr, trace: LocatedTrace) -> bool:
    """Whether some prefix of ``trace`` matches when events may skip unrelated steps.

    A basic event matches any non-empty segment that ends with it.
    """
    steps = trace.steps

    @lru_cache(maxsize=None)
    def match(node: ContractExpr, start: int, end: int) -> bool:
        if isinstance(node, Event):
            return end > start and event_matches(node, steps[end - 1])
        if isinstance(node, Choice):
            return match(node.left, start, end) or match(node.right, start, end)
        if isinstance(node, Seq):
            return any(match(node.left, start, mid) and match(node.right, mid, end)
                       for mid in range(start, end + 1))
        if isinstance(node, Star):
            if start == end:
                return True
            return any(match(node.body, start, mid) and match(node, mid, end)
                       for mid in range(start + 1, end + 1))
        raise TypeError(f"Unknown contract node {type(node).__name__}")

    return any(match(expr, 0, end) for end in range(len(steps) + 1))

def logs_to_steps(logs: Mapping[str, Sequence[TraceEntity]]) -> Dict[str, List[TraceStep]]:
    return {location: [TraceStep(location, e.channel.text, tuple(v.text for v in e.values), e.timestamp)
                       for e in entries]
            for location, entries in logs.items()}

def linearizations(logs: Mapping[str, Sequence[TraceStep]],
                   limit: int = MAX_LINEARIZATIONS) -> Iterator[LocatedTrace]:
    """Interleavings of per-location logs that keep each location's order."""
    locations = sorted(logs)
    produced = 0

    def walk(positions: Tuple[int, ...], built: Tuple[TraceStep, ...]):
        nonlocal produced
        if produced >= limit:
            return
        if all(positions[i] == len(logs[l]) for i, l in enumerate(locations)):
            produced += 1
            yield LocatedTrace(built)
            return
        for i, location in enumerate(locations):
            if positions[i] < len(logs[location]):
                advanced = positions[:i] + (positions[i] + 1,) + positions[i + 1:]
                yield from walk(advanced, built + (logs[location][positions[i]],))

    yield from walk(tuple(0 for _ in locations), ())
    if produced >= limit:
        logger.warning("Stopped after %d linearizations", limit)

@dataclass
class SoundnessReport:
    checked: int = 0
    unsound: List[int] = field(default_factory=list)

    @property
    def sound(self) -> bool:
        return not self.unsound

def check_soundness(lts: LtsGraph, expr: ContractExpr) -> SoundnessReport:
    """Every first fail verdict must be explained by a violating interleaving of the logs."""
    report = SoundnessReport()
    for state in first_fail_states(lts):
        report.checked += 1
        logs = logs_to_steps(trace_logs(lts.config(state)))
        if not any(violates(expr, trace) for trace in linearizations(logs)):
            logger.error("Fail verdict in state %d without a matching trace", state)
            report.unsound.append(state)
    return report

def single_location(expr: ContractExpr) -> bool:
    return len({e.location.text for e in events_of(expr)}) == 1

def check_completeness(lts: LtsGraph, expr: ContractExpr) -> List[int]:
    """States whose local log has a matching prefix but from which no fail is reachable.

    Only meaningful for contracts whose events share one location.
    """
    if not single_location(expr):
        raise ValueError("Completeness is only checked for single-location contracts")
    location = events_of(expr)[0].location.text
    fail_reachable = set()
    for state in lts.graph.nodes:
        if has_fail(lts.config(state)):
            fail_reachable |= nx.ancestors(lts.graph, state) | {state}
    missing = []
    for state in lts.graph.nodes:
        if state in fail_reachable:
            continue
        steps = logs_to_steps(trace_logs(lts.config(state))).get(location, [])
        trace = LocatedTrace(tuple(steps))
        if any(oracle_match(expr, trace.prefix(n)) for n in range(len(steps) + 1)):
            missing.append(state)
    return sorted(missing)
