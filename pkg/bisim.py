"""Weak bisimilarity of bounded, filtered transition systems."""
import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Hashable, Iterable, List, Optional, Set, Tuple

import networkx as nx

from explorer import LtsGraph
from filters import TAU, AbstractAction, Filter, apply_filter

logger = logging.getLogger(__name__)

MAX_TRACE_SEARCH = 10000

Edge = Tuple[Hashable, AbstractAction, Hashable]

@dataclass
class FilteredLts:
    states: List[Hashable]
    edges: Set[Edge]
    initial: Hashable
    truncated: bool = False
    configs: Dict[Hashable, object] = field(default_factory=dict)

    def __post_init__(self):
        known = set(self.states)
        if self.initial not in known:
            raise ValueError(f"Initial state {self.initial!r} is not a state")
        for source, _, target in self.edges:
            if source not in known or target not in known:
                raise ValueError(f"Edge {source!r} -> {target!r} references an unknown state")

    @classmethod
    def from_edges(cls, edges: Iterable[Tuple[Hashable, object, Hashable]], initial: Hashable = 0,
                   truncated: bool = False) -> "FilteredLts":
        """Small graphs where labels may be strings: ``"tau"``, ``"a!"`` or ``"a?"``."""
        converted = set()
        states = {initial}
        for source, label, target in edges:
            converted.add((source, _as_action(label), target))
            states.update((source, target))
        return cls(sorted(states, key=repr), converted, initial, truncated)

    def out_edges(self, state) -> List[Tuple[AbstractAction, Hashable]]:
        return [(a, t) for s, a, t in self.edges if s == state]

def _as_action(label) -> AbstractAction:
    if isinstance(label, AbstractAction):
        return label
    if label == "tau":
        return TAU
    if label.endswith("?"):
        return AbstractAction("input", label[:-1])
    return AbstractAction("output", label.rstrip("!"))

def filter_graph(lts: LtsGraph, f: Filter) -> FilteredLts:
    """Apply ``f`` to every edge and keep the part reachable from the initial state."""
    edges = set()
    for source, action, target in lts.edges():
        image = apply_filter(f, action)
        if image is not None:
            edges.add((source, image, target))
    graph = nx.DiGraph()
    graph.add_node(lts.initial)
    graph.add_edges_from((s, t) for s, _, t in edges)
    reachable = nx.descendants(graph, lts.initial) | {lts.initial}
    kept = {(s, a, t) for s, a, t in edges if s in reachable}
    states = sorted(reachable)
    logger.debug("Filter %s kept %d of %d states", f.name, len(states), lts.number_of_states())
    return FilteredLts(states, kept, lts.initial, lts.truncated,
                       {s: lts.config(s) for s in states})

def tau_closure(lts: FilteredLts) -> Dict[Hashable, Set[Hashable]]:
    graph = nx.DiGraph()
    graph.add_nodes_from(lts.states)
    graph.add_edges_from((s, t) for s, a, t in lts.edges if a.is_tau)
    return {s: nx.descendants(graph, s) | {s} for s in lts.states}

def weak_closure(lts: FilteredLts) -> FilteredLts:
    """Edges become weak moves: tau* for tau, tau* a tau* otherwise."""
    closure = tau_closure(lts)
    by_source: Dict[Hashable, List[Tuple[AbstractAction, Hashable]]] = {s: [] for s in lts.states}
    for source, action, target in lts.edges:
        if not action.is_tau:
            by_source[source].append((action, target))

    weak: Set[Edge] = set()
    for state in lts.states:
        for middle in closure[state]:
            weak.add((state, TAU, middle))
            for action, target in by_source[middle]:
                for end in closure[target]:
                    weak.add((state, action, end))
    return FilteredLts(list(lts.states), weak, lts.initial, lts.truncated, dict(lts.configs))

class Verdict(Enum):
    BISIMILAR = "bisimilar"
    DISTINGUISHED = "distinguished"
    INCONCLUSIVE = "inconclusive"

@dataclass
class AttackerMove:
    """A weak move from one initial state whose every answer leaves ``block``."""
    side: str
    action: AbstractAction
    target: Hashable
    block: List[Tuple[str, Hashable]]
    answers: List[Hashable]

    def to_dict(self) -> dict:
        return {
            "side": self.side,
            "action": str(self.action),
            "target": self.target,
            "block": [[s, state] for s, state in self.block],
            "answers": list(self.answers),
        }

@dataclass
class BisimResult:
    verdict: Verdict
    relation: List[Tuple[Hashable, Hashable]] = field(default_factory=list)
    trace: List[AbstractAction] = field(default_factory=list)
    side: Optional[str] = None
    attack: Optional[AttackerMove] = None

    def to_dict(self) -> dict:
        data = {"verdict": self.verdict.value}
        if self.relation:
            data["relation"] = [[a, b] for a, b in self.relation]
        if self.verdict == Verdict.DISTINGUISHED:
            data["trace"] = [str(a) for a in self.trace]
            data["playable_by"] = self.side
            if self.attack is not None:
                data["attack"] = self.attack.to_dict()
        return data

def _weak_moves(lts: FilteredLts) -> Dict[Hashable, Set[Tuple[AbstractAction, Hashable]]]:
    moves: Dict[Hashable, Set[Tuple[AbstractAction, Hashable]]] = {s: set() for s in lts.states}
    for source, action, target in weak_closure(lts).edges:
        moves[source].add((action, target))
    return moves

def _partition(moves: Dict[Hashable, Set[Tuple[AbstractAction, Hashable]]]) -> Dict[Hashable, int]:
    order = list(moves)
    blocks = {s: 0 for s in order}
    count = 1
    while True:
        ids: Dict[Tuple, int] = {}
        refined = {}
        for state in order:
            signature = (blocks[state], frozenset((a, blocks[t]) for a, t in moves[state]))
            refined[state] = ids.setdefault(signature, len(ids))
        blocks = refined
        if len(ids) == count:
            return blocks
        count = len(ids)

def check_weak_bisim(a: FilteredLts, b: FilteredLts) -> BisimResult:
    moves = {("a", s): {(x, ("a", t)) for x, t in m} for s, m in _weak_moves(a).items()}
    moves.update({("b", s): {(x, ("b", t)) for x, t in m} for s, m in _weak_moves(b).items()})
    blocks = _partition(moves)
    logger.debug("Refinement settled on %d blocks", len(set(blocks.values())))

    if blocks[("a", a.initial)] == blocks[("b", b.initial)]:
        relation = [(sa, sb) for sa in a.states for sb in b.states
                    if blocks[("a", sa)] == blocks[("b", sb)]]
        if a.truncated or b.truncated:
            logger.warning("Bisimilar up to the exploration bounds; reporting inconclusive")
            return BisimResult(Verdict.INCONCLUSIVE, relation)
        return BisimResult(Verdict.BISIMILAR, relation)

    trace, side = distinguishing_trace(a, b)
    if trace is not None:
        return BisimResult(Verdict.DISTINGUISHED, trace=trace, side=side)
    # trace equivalent: no single side owns a trace
    return BisimResult(Verdict.DISTINGUISHED, attack=_attacker_move(a, b, moves, blocks))

def _post(moves, states: FrozenSet, action: AbstractAction) -> FrozenSet:
    return frozenset(t for s in states for x, t in moves[s] if x == action)

def distinguishing_trace(a: FilteredLts, b: FilteredLts) -> Tuple[Optional[List[AbstractAction]], Optional[str]]:
    """Shortest visible trace of exactly one side, if the two differ on traces."""
    moves_a, moves_b = _weak_moves(a), _weak_moves(b)
    start = (_post(moves_a, frozenset([a.initial]), TAU), _post(moves_b, frozenset([b.initial]), TAU))
    seen = {start}
    queue = deque([(start, [])])
    while queue and len(seen) < MAX_TRACE_SEARCH:
        (left, right), trace = queue.popleft()
        labels = {x for s in left for x, _ in moves_a[s] if not x.is_tau}
        labels |= {x for s in right for x, _ in moves_b[s] if not x.is_tau}
        for action in sorted(labels, key=str):
            pair = (_post(moves_a, left, action), _post(moves_b, right, action))
            if bool(pair[0]) != bool(pair[1]):
                return trace + [action], ("a" if pair[0] else "b")
            if pair not in seen:
                seen.add(pair)
                queue.append((pair, trace + [action]))
    return None, None

def _attacker_move(a: FilteredLts, b: FilteredLts, moves, blocks) -> Optional[AttackerMove]:
    """A first move from one initial state that no answer of the other side matches."""
    for side, own, other in (("a", ("a", a.initial), ("b", b.initial)),
                             ("b", ("b", b.initial), ("a", a.initial))):
        candidates = sorted(moves[own], key=lambda m: (m[0].is_tau, str(m[0]), repr(m[1])))
        for action, target in candidates:
            if action.is_tau and blocks[target] == blocks[own]:
                continue
            answers = sorted((t for x, t in moves[other] if x == action), key=repr)
            if all(blocks[t] != blocks[target] for t in answers):
                block = sorted((s for s in blocks if blocks[s] == blocks[target]), key=repr)
                return AttackerMove(side, action, target[1], block, [t[1] for t in answers])
    return None

def verify_witness(a: FilteredLts, b: FilteredLts, relation: Iterable[Tuple[Hashable, Hashable]]) -> bool:
    """Check that ``relation`` relates the initial states and has the weak transfer property."""
    pairs = set(relation)
    if (a.initial, b.initial) not in pairs:
        return False
    weak_a, weak_b = _weak_moves(a), _weak_moves(b)
    for p, q in pairs:
        for action, p2 in a.out_edges(p):
            if not any(x == action and (p2, q2) in pairs for x, q2 in weak_b[q]):
                return False
        for action, q2 in b.out_edges(q):
            if not any(x == action and (p2, q2) in pairs for x, p2 in weak_a[p]):
                return False
    return True

def replay(lts: FilteredLts, trace: Iterable[AbstractAction]) -> bool:
    """Whether ``lts`` can weakly perform the visible actions of ``trace``."""
    moves = _weak_moves(lts)
    current = _post(moves, frozenset([lts.initial]), TAU)
    for action in trace:
        if action.is_tau:
            continue
        current = _post(moves, current, action)
        if not current:
            return False
    return True
