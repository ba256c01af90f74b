"""Structural congruence realised as a canonical form.

A normalized system is ``new b1.new b2...(C1 | C2 | ...)`` where every
component ``Ci`` is a located prefix: ``l[[P]]`` with ``P`` neither a
parallel composition, a restriction nor ``stop``, or ``l[[M]]@(k,n)`` with
the same restriction on ``M``. Components are sorted by their printed form
and bound names are chosen canonically.
"""
import logging
from dataclasses import fields, replace
from typing import List, Optional, Sequence, Set, Tuple
from ast_nodes import *
from printer import PrettyPrinter
from scope_analyzer import fresh_name, free_names, rename

logger = logging.getLogger(__name__)

TOP_BINDER_HINT = "ch"

class _Flattener:
    def __init__(self):
        self.binders: List[Name] = []
        self.components: List[Term] = []
        self.locations: Set[str] = set()
        self.counter = 0

    def hoist(self, channel: Name, body: Term) -> Term:
        self.counter += 1
        temp = Name(NameKind.CHANNEL, f"#{self.counter:04d}")
        self.binders.append(temp)
        return rename(body, {channel: temp})

    def system(self, node: Term):
        if isinstance(node, Par):
            self.system(node.left)
            self.system(node.right)
        elif isinstance(node, NewChan):
            self.system(self.hoist(node.channel, node.body))
        elif isinstance(node, LocatedProcess):
            self.locations.add(node.location.text)
            self.process(node.location, node.body, None)
        elif isinstance(node, Stop):
            pass
        else:
            raise TypeError(f"{type(node).__name__} is not a system")

    def process(self, host: Name, node: Term, ctx: Optional[Tuple[Name, int]]):
        if isinstance(node, Par):
            self.process(host, node.left, ctx)
            self.process(host, node.right, ctx)
        elif isinstance(node, NewChan):
            self.process(host, self.hoist(node.channel, node.body), ctx)
        elif isinstance(node, Stop):
            pass
        elif isinstance(node, MonitorBlock):
            self.process(host, node.monitor, (node.ctx_location, node.ctx_index))
        elif isinstance(node, LocatedProcess):
            self.system(node)
        else:
            if ctx is not None:
                node = MonitorBlock(node, ctx[0], ctx[1])
            self.components.append(LocatedProcess(host, node))

def flatten(system: Term) -> Tuple[List[Name], List[Term], Set[str]]:
    flattener = _Flattener()
    flattener.system(system)
    return flattener.binders, flattener.components, flattener.locations

def sort_key(term: Term) -> str:
    return PrettyPrinter(show_unfolds=True).system(term)

def canonical_body(node: Term, depth: int, avoid: Set[str]) -> Term:
    """Canonical bound names and sorted inner parallel compositions."""
    if isinstance(node, (In, Query)):
        chosen = []
        for _ in node.params:
            name = fresh_name(f"x{depth}", avoid | {c.text for c in chosen}, NameKind.VARIABLE)
            chosen.append(name)
        body = rename(node.continuation, dict(zip(node.params, chosen)))
        body = canonical_body(body, depth + 1, avoid | {c.text for c in chosen})
        return replace(node, params=tuple(chosen), continuation=body)
    if isinstance(node, GetI):
        first = fresh_name(f"x{depth}", avoid, NameKind.VARIABLE)
        second = fresh_name(f"x{depth}", avoid | {first.text}, NameKind.VARIABLE)
        body = rename(node.continuation, {node.loc_var: first, node.idx_var: second})
        body = canonical_body(body, depth + 1, avoid | {first.text, second.text})
        return GetI(first, second, body)
    if isinstance(node, NewChan):
        name = fresh_name(f"n{depth}", avoid)
        body = rename(node.body, {node.channel: name})
        return NewChan(name, canonical_body(body, depth + 1, avoid | {name.text}))
    if isinstance(node, Par):
        parts = [canonical_body(p, depth, avoid) for p in par_components(node)]
        flat = []
        for part in parts:
            flat.extend(p for p in par_components(part) if not isinstance(p, Stop))
        flat.sort(key=lambda p: PrettyPrinter(show_unfolds=True).process(p))
        return par_of(flat)

    changes = {}
    for f in fields(node):
        child = getattr(node, f.name)
        if isinstance(child, Term):
            changes[f.name] = canonical_body(child, depth, avoid)
    return replace(node, **changes) if changes else node

def names_in_order(term: Term) -> List[Name]:
    found: List[Name] = []
    for f in fields(term):
        value = getattr(term, f.name)
        if isinstance(value, Name):
            found.append(value)
        elif isinstance(value, tuple):
            found.extend(v for v in value if isinstance(v, Name))
        elif isinstance(value, Term):
            found.extend(names_in_order(value))
    return found

def compose(binders: Sequence[Name], components: Sequence[Term], fallback: Name) -> Term:
    body = par_of(components) if components else LocatedProcess(fallback, Stop())
    for binder in reversed(list(binders)):
        body = NewChan(binder, body)
    return body

def decompose(system: Term) -> Tuple[List[Name], List[Term]]:
    """Split a normalized system into its binders and components."""
    binders = []
    while isinstance(system, NewChan):
        binders.append(system.channel)
        system = system.body
    components = [c for c in par_components(system)
                  if not (isinstance(c, LocatedProcess) and isinstance(c.body, Stop))]
    return binders, components

def normalize(system: Term) -> Term:
    binders, components, locations = flatten(system)

    outer: Set[str] = set()
    for component in components:
        outer |= {n.text for n in free_names(component)}
    components = [canonical_body(c, 0, set(outer)) for c in components]

    used: Set[Name] = set()
    for component in components:
        used |= free_names(component)
    binders = [b for b in binders if b in used]

    masked = PrettyPrinter(show_unfolds=True, masked=binders)
    order = sorted(components, key=lambda c: (masked.system(c), sort_key(c)))

    taken = {n.text for n in used if n not in binders}
    mapping = {}
    pending = set(binders)
    for component in order:
        for name in names_in_order(component):
            if name in pending:
                canonical = fresh_name(TOP_BINDER_HINT, taken)
                taken.add(canonical.text)
                mapping[name] = canonical
                pending.discard(name)

    components = sorted((rename(c, mapping) for c in components), key=sort_key)
    fallback = loc(min(locations)) if locations else loc("l")
    return compose(list(mapping.values()), components, fallback)
