import logging
from dataclasses import fields, replace
from functools import lru_cache
from typing import Callable, Dict, FrozenSet, Iterable, List, Optional, Sequence, Set, Union
from ast_nodes import *

logger = logging.getLogger(__name__)

class SubstitutionError(ValueError):
    pass

class BinderScopes:
    """Stack of names bound by enclosing binders."""

    def __init__(self):
        self.scopes: List[Dict[str, Name]] = []

    def push(self, names: Sequence[Name]) -> List[str]:
        """Open a scope for ``names``; returns the texts bound more than once."""
        scope: Dict[str, Name] = {}
        repeated = []
        for name in names:
            if name.text in scope:
                repeated.append(name.text)
            scope[name.text] = name
        self.scopes.append(scope)
        return repeated

    def pop(self):
        self.scopes.pop()

    def lookup(self, text: str) -> Optional[Name]:
        for scope in reversed(self.scopes):
            if text in scope:
                return scope[text]
        return None

# Binding structure

BINDER_FIELDS = {
    In: ('params',),
    Query: ('params',),
    GetI: ('loc_var', 'idx_var'),
    NewChan: ('channel',),
}

def binders(term: Term) -> Sequence[Name]:
    """Names bound by the outermost constructor of ``term``."""
    if isinstance(term, (In, Query)):
        return term.params
    if isinstance(term, GetI):
        return (term.loc_var, term.idx_var)
    if isinstance(term, NewChan):
        return (term.channel,)
    return ()

def _bound_scope(term: Term) -> Optional[Term]:
    if isinstance(term, (In, Query, GetI)):
        return term.continuation
    if isinstance(term, NewChan):
        return term.body
    return None

def _name_fields(term: Term):
    """(field, value) pairs holding names outside the binder scope."""
    skip = BINDER_FIELDS.get(type(term), ())
    for f in fields(term):
        if f.name in skip:
            continue
        value = getattr(term, f.name)
        if isinstance(value, Name):
            yield f.name, value
        elif isinstance(value, tuple) and value and isinstance(value[0], Name):
            yield f.name, value

def _term_fields(term: Term):
    for f in fields(term):
        value = getattr(term, f.name)
        if isinstance(value, Term):
            yield f.name, value

@lru_cache(maxsize=1 << 16)
def _free(term: Term) -> FrozenSet[Name]:
    found: Set[Name] = set()
    for _, value in _name_fields(term):
        if isinstance(value, Name):
            found.add(value)
        else:
            found.update(value)
    scope = _bound_scope(term)
    for name, child in _term_fields(term):
        inner = _free(child)
        if child is scope:
            inner = inner - set(binders(term))
        found.update(inner)
    return frozenset(n for n in found if n.kind != NameKind.INDEX)

def free_names(term: Term) -> Set[Name]:
    """Channels, locations and unbound variables of ``term``."""
    return set(_free(term))

def fresh_name(hint: str, used: Iterable[Union[Name, str]],
               kind: NameKind = NameKind.CHANNEL) -> Name:
    taken = {u.text if isinstance(u, Name) else u for u in used}
    if hint not in taken:
        return Name(kind, hint)
    n = 1
    while f"{hint}_{n}" in taken:
        n += 1
    return Name(kind, f"{hint}_{n}")

# Substitution

def rename(term: Term, mapping: Dict[Name, Name]) -> Term:
    """Capture-avoiding simultaneous replacement of names."""
    if not mapping:
        return term
    mapping = {k: v for k, v in mapping.items() if k in _free(term)}
    if not mapping:
        return term

    changes = {}
    for field_name, value in _name_fields(term):
        if isinstance(value, Name):
            changes[field_name] = mapping.get(value, value)
        else:
            changes[field_name] = tuple(mapping.get(v, v) for v in value)

    scope = _bound_scope(term)
    bound = list(binders(term))
    for field_name, child in _term_fields(term):
        if child is not scope:
            changes[field_name] = rename(child, mapping)
            continue
        inner = {k: v for k, v in mapping.items() if k not in bound and k in _free(child)}
        if not inner:
            continue
        incoming = {v.text for v in inner.values()}
        clashes = [b for b in bound if b.text in incoming]
        if clashes:
            avoid = {n.text for n in _free(child)} | incoming | {b.text for b in bound}
            alpha = {}
            for b in clashes:
                fresh = fresh_name(b.text, avoid, b.kind)
                avoid.add(fresh.text)
                alpha[b] = fresh
            child = rename(child, alpha)
            bound = [alpha.get(b, b) for b in bound]
            changes.update(_rebind(term, bound))
        changes[field_name] = rename(child, inner)
    return replace(term, **changes)

def _rebind(term: Term, bound: List[Name]) -> dict:
    if isinstance(term, (In, Query)):
        return {'params': tuple(bound)}
    if isinstance(term, GetI):
        return {'loc_var': bound[0], 'idx_var': bound[1]}
    return {'channel': bound[0]}

def substitute(term: Term, variables: Sequence[Name], values: Sequence[Name]) -> Term:
    if len(variables) != len(values):
        raise SubstitutionError(
            f"Arity mismatch: {len(variables)} variables, {len(values)} values")
    return rename(term, dict(zip(variables, values)))

def transform(term: Term, fn: Callable[[Term], Term]) -> Term:
    """Bottom-up rebuild applying ``fn`` to every node."""
    changes = {name: transform(child, fn) for name, child in _term_fields(term)}
    if changes:
        term = replace(term, **changes)
    return fn(term)

def located_names(term: Term) -> Set[str]:
    """Texts appearing in location positions."""
    found: Set[str] = set()

    def collect(node: Term) -> Term:
        if isinstance(node, LocatedProcess):
            found.add(node.location.text)
        elif isinstance(node, MonitorBlock):
            found.add(node.ctx_location.text)
        elif isinstance(node, (Sync, Go, SetI)) and node.location.kind != NameKind.VARIABLE:
            found.add(node.location.text)
        return node

    transform(term, collect)
    return found

def retag_locations(term: Term, locations: Set[str]) -> Term:
    """Turn channel-kind names in value positions into locations."""
    def fix(name: Name) -> Name:
        if name.kind == NameKind.CHANNEL and name.text in locations:
            return Name(NameKind.LOCATION, name.text)
        return name

    def visit(node: Term) -> Term:
        if isinstance(node, (Out, TraceEntity)):
            return replace(node, values=tuple(fix(v) for v in node.values))
        if isinstance(node, IfThenElse):
            return replace(node, lhs=fix(node.lhs), rhs=fix(node.rhs))
        if isinstance(node, SetI) and node.location.kind == NameKind.CHANNEL:
            return replace(node, location=Name(NameKind.LOCATION, node.location.text))
        return node

    return transform(term, visit)

class ScopeAnalyzer:
    """Well-formedness checks the grammar cannot express."""

    def __init__(self):
        self.scopes = BinderScopes()
        self.errors: List[str] = []

    def analyze(self, term: Term) -> List[str]:
        self.errors = []
        self.scopes = BinderScopes()
        self.visit(term, in_monitor=False)
        return self.errors

    def error(self, message: str):
        self.errors.append(message)

    def visit(self, node: Term, in_monitor: bool):
        if isinstance(node, MonitorBlock):
            if in_monitor:
                self.error("Monitor block nested inside a monitor")
            self.use(node.ctx_location)
            self.visit(node.monitor, True)
        elif isinstance(node, TraceEntity):
            if in_monitor:
                self.error(f"Trace entity on '{node.channel}' inside a monitor")
            for value in node.values:
                self.use(value)
        elif isinstance(node, (Ok, Fail)):
            if not in_monitor:
                self.error(f"'{type(node).__name__.lower()}' outside a monitor block")
        elif isinstance(node, MONITOR_ONLY) and not in_monitor:
            self.error(f"Monitor construct {type(node).__name__} outside a monitor block")
            self.visit_children(node, in_monitor)
        else:
            self.visit_children(node, in_monitor)

    def visit_children(self, node: Term, in_monitor: bool):
        for _, value in _name_fields(node):
            for name in (value if isinstance(value, tuple) else (value,)):
                self.use(name)
        scope = _bound_scope(node)
        for _, child in _term_fields(node):
            if child is scope:
                self.visit_binder(node, child, in_monitor)
            else:
                self.visit(child, in_monitor)

    def visit_binder(self, node: Term, body: Term, in_monitor: bool):
        for text in self.scopes.push(binders(node)):
            self.error(f"Variable '{text}' bound twice by the same binder")
        self.visit(body, in_monitor)
        self.scopes.pop()

    def use(self, name: Name):
        if name.kind == NameKind.VARIABLE and self.scopes.lookup(name.text) is None:
            self.error(f"Unbound variable '{name.text}'")
