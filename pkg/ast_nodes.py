from abc import ABC
from enum import Enum
from dataclasses import dataclass
from typing import Tuple

class NameKind(Enum):
    CHANNEL = "channel"
    LOCATION = "location"
    INDEX = "index"
    VARIABLE = "variable"

@dataclass(frozen=True)
class Name:
    kind: NameKind
    text: str

    def __str__(self) -> str:
        return self.text

    def sort_key(self):
        # indices compare numerically
        if self.kind == NameKind.INDEX and self.text.isdigit():
            return (0, int(self.text), "")
        return (1, 0, self.text)

    @property
    def is_concrete(self) -> bool:
        return self.kind != NameKind.VARIABLE

def chan(text: str) -> Name:
    return Name(NameKind.CHANNEL, text)

def loc(text: str) -> Name:
    return Name(NameKind.LOCATION, text)

def var(text: str) -> Name:
    return Name(NameKind.VARIABLE, text)

def idx(value: int) -> Name:
    return Name(NameKind.INDEX, str(value))

class Verdict(Enum):
    OK = "ok"
    FAIL = "fail"

class Term(ABC):
    pass

class ContractExpr(ABC):
    pass

# Systems and processes

@dataclass(frozen=True)
class LocatedProcess(Term):
    location: Name
    body: Term

@dataclass(frozen=True)
class Par(Term):
    left: Term
    right: Term

@dataclass(frozen=True)
class NewChan(Term):
    channel: Name
    body: Term

@dataclass(frozen=True)
class Stop(Term):
    pass

@dataclass(frozen=True)
class Out(Term):
    subject: Name
    values: Tuple[Name, ...]
    continuation: Term = Stop()

@dataclass(frozen=True)
class In(Term):
    subject: Name
    params: Tuple[Name, ...]
    continuation: Term

@dataclass(frozen=True)
class IfThenElse(Term):
    lhs: Name
    rhs: Name
    then: Term
    orelse: Term = Stop()

@dataclass(frozen=True)
class Repeat(Term):
    body: Term
    unfolds: int = 0

@dataclass(frozen=True)
class MonitorBlock(Term):
    monitor: Term
    ctx_location: Name
    ctx_index: int

@dataclass(frozen=True)
class TraceEntity(Term):
    channel: Name
    values: Tuple[Name, ...]
    timestamp: int

# Monitor-only constructs

@dataclass(frozen=True)
class Query(Term):
    channel: Name
    params: Tuple[Name, ...]
    continuation: Term

@dataclass(frozen=True)
class Sync(Term):
    location: Name
    continuation: Term

@dataclass(frozen=True)
class GetI(Term):
    loc_var: Name
    idx_var: Name
    continuation: Term

@dataclass(frozen=True)
class SetI(Term):
    location: Name
    index: Name
    continuation: Term

@dataclass(frozen=True)
class Go(Term):
    location: Name
    continuation: Term

@dataclass(frozen=True)
class Ok(Term):
    pass

@dataclass(frozen=True)
class Fail(Term):
    pass

MONITOR_ONLY = (Query, Sync, GetI, SetI, Go, Ok, Fail)

# Contracts

@dataclass(frozen=True)
class Event(ContractExpr):
    channel: Name
    values: Tuple[Name, ...]
    location: Name

@dataclass(frozen=True)
class Seq(ContractExpr):
    left: ContractExpr
    right: ContractExpr

@dataclass(frozen=True)
class Star(ContractExpr):
    body: ContractExpr

@dataclass(frozen=True)
class Choice(ContractExpr):
    left: ContractExpr
    right: ContractExpr

def par_of(parts) -> Term:
    """Right-nested parallel composition; Stop for an empty list."""
    parts = list(parts)
    if not parts:
        return Stop()
    result = parts[-1]
    for part in reversed(parts[:-1]):
        result = Par(part, result)
    return result

def par_components(term: Term):
    if isinstance(term, Par):
        return par_components(term.left) + par_components(term.right)
    return [term]

def events_of(expr: ContractExpr):
    """Basic events in left-to-right order."""
    if isinstance(expr, Event):
        return [expr]
    if isinstance(expr, Star):
        return events_of(expr.body)
    return events_of(expr.left) + events_of(expr.right)
