"""Compilation of regular-expression contracts into monitor systems.

Every compiled fragment waits for a start signal ``s!<loc,idx>`` carrying a
monitoring context and announces each match on ``f`` with the context at
which the match was recorded. Three strategies place the same network
differently: ``orch`` keeps everything in one block at a central location,
``chor`` puts listeners where their events happen and spreads the control
logic over configurable locations, ``mig`` ships each listener to its
event's location on demand.
"""
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Set, Tuple

from ast_nodes import *
from scope_analyzer import fresh_name

logger = logging.getLogger(__name__)

STRATEGIES = ("orch", "chor", "mig")
CTX_INIT_MODES = ("literal", "clock")

class CompileError(Exception):
    pass

@dataclass
class Placement:
    """Where the parts of a compiled monitor live.

    ``combs`` and ``bifurcs`` map operator node ids (see ``operator_nodes``)
    to locations; unplaced nodes go to the leftmost event location of their
    right operand, or of the body of a star.
    """
    central: Optional[Name] = None
    start: Optional[Name] = None
    combs: Dict[str, Name] = field(default_factory=dict)
    bifurcs: Dict[str, Name] = field(default_factory=dict)
    ctx_init: str = "literal"
    clocks: Mapping[str, int] = field(default_factory=dict)
    align: bool = True

    def __post_init__(self):
        if self.ctx_init not in CTX_INIT_MODES:
            raise CompileError(f"Unknown context initialisation '{self.ctx_init}'")

    def context_index(self, location: Name) -> int:
        if self.ctx_init == "clock":
            return self.clocks.get(location.text, 0)
        return 1

    def central_location(self, expr: ContractExpr) -> Name:
        return self.central or self.start_location(expr)

    def start_location(self, expr: ContractExpr) -> Name:
        return self.start or events_of(expr)[0].location

    def locations(self, expr: ContractExpr) -> Set[str]:
        used = {e.location.text for e in events_of(expr)}
        used.add(self.central_location(expr).text)
        used.add(self.start_location(expr).text)
        used |= {n.text for n in self.combs.values()} | {n.text for n in self.bifurcs.values()}
        return used

def operator_nodes(expr: ContractExpr) -> List[Tuple[str, ContractExpr]]:
    """Sequence, star and choice nodes numbered from 1 in pre-order."""
    found: List[Tuple[str, ContractExpr]] = []

    def walk(node: ContractExpr):
        if isinstance(node, Event):
            return
        found.append((str(len(found) + 1), node))
        if isinstance(node, Star):
            walk(node.body)
        else:
            walk(node.left)
            walk(node.right)

    walk(expr)
    return found

def contract_names(expr: ContractExpr) -> Set[str]:
    names = set()
    for event in events_of(expr):
        names.add(event.channel.text)
        names.add(event.location.text)
        names |= {v.text for v in event.values}
    return names

# Macros

def build_comb(f1: Name, f2: Name, f: Name, params: Sequence[Name] = (var("x"), var("y"))) -> Term:
    params = tuple(params)
    return Par(Repeat(In(f1, params, Out(f, params))),
               Repeat(In(f2, params, Out(f, params))))

def build_bifurc(s: Name, s1: Name, s2: Name, params: Sequence[Name] = (var("x"), var("y"))) -> Term:
    params = tuple(params)
    return Repeat(In(s, params, Par(Out(s1, params), Out(s2, params))))

def build_trg(c: Name, values: Sequence[Name], f: Name, params: Optional[Sequence[Name]] = None,
              context_vars: Tuple[Name, Name] = (var("yloc"), var("yidx"))) -> Term:
    """Replicated query on ``c`` signalling the current context on ``f`` when the payload matches."""
    values = tuple(values)
    if params is None:
        params = (var("x"),) if len(values) == 1 else tuple(var(f"x{i + 1}") for i in range(len(values)))
    params = tuple(params)
    if len(params) != len(values):
        raise CompileError(f"trg needs {len(values)} parameters, got {len(params)}")
    loc_var, idx_var = context_vars
    body: Term = GetI(loc_var, idx_var, Out(f, (loc_var, idx_var)))
    for param, value in reversed(list(zip(params, values))):
        body = IfThenElse(param, value, body)
    return Repeat(Query(c, params, body))

# Network construction

class _NetworkBuilder:
    """Visitor producing the control network of one contract."""

    CONTROL_HINTS = ("s", "f", "m", "c", "s'", "f'", "s1", "s2", "f1", "f2")

    def __init__(self, expr: ContractExpr, strategy: str, placement: Placement):
        self.expr = expr
        self.strategy = strategy
        self.placement = placement
        self.taken: Set[str] = contract_names(expr)
        self.node_ids = {id(node): key for key, node in operator_nodes(expr)}
        self.signal = self.variables("xloc", "xidx")
        self.context = self.variables("yloc", "yidx")

    def variables(self, *hints: str) -> Tuple[Name, ...]:
        chosen = []
        for hint in hints:
            name = fresh_name(hint, self.taken | {c.text for c in chosen}, NameKind.VARIABLE)
            chosen.append(name)
        return tuple(chosen)

    def channel(self, hint: str) -> Name:
        name = fresh_name(hint, self.taken)
        self.taken.add(name.text)
        return name

    def query_params(self, arity: int) -> Tuple[Name, ...]:
        hints = ["x"] if arity == 1 else [f"x{i + 1}" for i in range(arity)]
        return self.variables(*hints)

    def block(self, location: Name, body: Term) -> Term:
        return LocatedProcess(location, MonitorBlock(body, location, self.placement.context_index(location)))

    def visit(self, node: ContractExpr, s: Name, f: Name) -> Term:
        method = getattr(self, f"visit_{type(node).__name__.lower()}")
        return method(node, s, f)

    def visit_event(self, node: Event, s: Name, f: Name) -> Term:
        trg = build_trg(node.channel, node.values, f, self.query_params(len(node.values)), self.context)
        xloc, xidx = self.signal
        body: Term = IfThenElse(node.location, xloc, SetI(xloc, xidx, trg), Sync(node.location, trg))
        if self.strategy == "mig":
            body = Go(node.location, body)
        listener = Repeat(In(s, self.signal, body))
        if self.strategy == "chor":
            return self.block(node.location, listener)
        return listener

    def visit_seq(self, node: Seq, s: Name, f: Name) -> Term:
        m = self.channel("m")
        return NewChan(m, Par(self.visit(node.left, s, m), self.visit(node.right, m, f)))

    def visit_star(self, node: Star, s: Name, f: Name) -> Term:
        c, s2, f2 = self.channel("c"), self.channel("s'"), self.channel("f'")
        body = par_of([
            self.control(node, "comb", build_comb(s, f2, c, self.signal)),
            self.control(node, "bifurc", build_bifurc(c, s2, f, self.signal)),
            self.visit(node.body, s2, f2),
        ])
        return NewChan(c, NewChan(s2, NewChan(f2, body)))

    def visit_choice(self, node: Choice, s: Name, f: Name) -> Term:
        s1, s2, f1, f2 = (self.channel(h) for h in ("s1", "s2", "f1", "f2"))
        body = par_of([
            self.control(node, "bifurc", build_bifurc(s, s1, s2, self.signal)),
            self.visit(node.left, s1, f1),
            self.visit(node.right, s2, f2),
            self.control(node, "comb", build_comb(f1, f2, f, self.signal)),
        ])
        return NewChan(s1, NewChan(s2, NewChan(f1, NewChan(f2, body))))

    def control(self, node: ContractExpr, part: str, term: Term) -> Term:
        if self.strategy != "chor":
            return term
        key = self.node_ids[id(node)]
        chosen = (self.placement.combs if part == "comb" else self.placement.bifurcs).get(key)
        if chosen is None:
            target = node.body if isinstance(node, Star) else node.right
            chosen = events_of(target)[0].location
        return self.block(chosen, term)

    def top(self) -> Term:
        s, f = self.channel("s"), self.channel("f")
        network = self.visit(self.expr, s, f)
        failure = In(f, self.signal, Fail())
        if self.strategy == "chor":
            k = self.placement.start_location(self.expr)
            starter = self.block(k, Par(Out(s, (k, idx(self.placement.context_index(k)))), failure))
            return NewChan(s, NewChan(f, Par(starter, network)))
        h = self.placement.central_location(self.expr)
        start = Out(s, (h, idx(self.placement.context_index(h))))
        return self.block(h, NewChan(s, NewChan(f, par_of([start, network, failure]))))

def _check_placement(expr: ContractExpr, placement: Placement):
    nodes = dict(operator_nodes(expr))
    for part, chosen in (("comb", placement.combs), ("bifurc", placement.bifurcs)):
        for key in chosen:
            node = nodes.get(key)
            if node is None or isinstance(node, Seq):
                valid = ", ".join(k for k, n in nodes.items() if not isinstance(n, Seq)) or "none"
                raise CompileError(f"Unknown placement node '{key}' for {part} (valid: {valid})")

def compile_orch(expr: ContractExpr, placement: Optional[Placement] = None) -> Term:
    placement = placement or Placement()
    return _NetworkBuilder(expr, "orch", placement).top()

def compile_chor(expr: ContractExpr, placement: Optional[Placement] = None) -> Term:
    placement = placement or Placement()
    _check_placement(expr, placement)
    return _NetworkBuilder(expr, "chor", placement).top()

def sequence_events(expr: ContractExpr) -> List[Event]:
    if isinstance(expr, Event):
        return [expr]
    if isinstance(expr, Seq):
        return sequence_events(expr.left) + sequence_events(expr.right)
    raise CompileError(f"Nested migration only supports sequences of events, found {type(expr).__name__}")

def compile_mig(expr: ContractExpr, placement: Optional[Placement] = None, nested: bool = False) -> Term:
    placement = placement or Placement()
    if not nested:
        return _NetworkBuilder(expr, "mig", placement).top()

    events = sequence_events(expr)
    taken = contract_names(expr)
    body: Term = Fail()
    steps = []
    previous: Optional[Name] = None
    for event in events:
        moves = previous is None or event.location.text != previous.text
        steps.append((event, moves))
        previous = event.location
    for position, (event, moves) in reversed(list(enumerate(steps))):
        hints = [f"x{position + 1}"] if len(event.values) == 1 else \
            [f"x{position + 1}_{i + 1}" for i in range(len(event.values))]
        params = tuple(fresh_name(h, taken, NameKind.VARIABLE) for h in hints)
        for param, value in reversed(list(zip(params, event.values))):
            body = IfThenElse(param, value, body)
        body = Query(event.channel, params, body)
        if moves:
            if placement.align:
                body = Sync(event.location, body)
            body = Go(event.location, body)
    h = placement.central_location(expr)
    return LocatedProcess(h, MonitorBlock(body, h, placement.context_index(h)))

def compile_contract(expr: ContractExpr, strategy: str, placement: Optional[Placement] = None,
                     nested: bool = False) -> Term:
    if strategy == "orch":
        result = compile_orch(expr, placement)
    elif strategy == "chor":
        result = compile_chor(expr, placement)
    elif strategy == "mig":
        result = compile_mig(expr, placement, nested)
    else:
        raise CompileError(f"Unknown strategy '{strategy}', expected one of {', '.join(STRATEGIES)}")
    logger.debug("Compiled %d events with strategy %s", len(events_of(expr)), strategy)
    return result
