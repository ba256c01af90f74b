from typing import Iterable, Optional, Set
from ast_nodes import *

class PrettyPrinter:
    """Emits systems, processes and contracts in the concrete grammar.

    ``show_unfolds`` annotates replications with their unfold count and
    ``masked`` prints the given names as ``#``; both produce keys for
    normalization, not parseable text.
    """

    def __init__(self, show_unfolds: bool = False, masked: Iterable[Name] = ()):
        self.show_unfolds = show_unfolds
        self.masked: Set[Name] = set(masked)

    def name(self, name: Name) -> str:
        return "#" if name in self.masked else name.text

    def names(self, names) -> str:
        return ",".join(self.name(n) for n in names)

    # Systems

    def system(self, node: Term) -> str:
        if isinstance(node, Par):
            left = self.system(node.left)
            if isinstance(node.left, Par):
                left = f"({left})"
            return f"{left} | {self.system(node.right)}"
        if isinstance(node, NewChan):
            body = node.body
            inner = self.system(body)
            if not isinstance(body, (LocatedProcess, NewChan)):
                inner = f"({inner})"
            return f"new {self.name(node.channel)}.{inner}"
        if isinstance(node, LocatedProcess):
            if isinstance(node.body, MonitorBlock):
                block = node.body
                return (f"{self.name(node.location)}[[ {self.process(block.monitor)} ]]"
                        f"@({self.name(block.ctx_location)},{block.ctx_index})")
            return f"{self.name(node.location)}[[ {self.process(node.body)} ]]"
        # a bare process outside any location
        return self.process(node)

    # Processes and monitors

    def process(self, node: Term) -> str:
        if isinstance(node, Par):
            left = self.process(node.left)
            if isinstance(node.left, Par):
                left = f"({left})"
            return f"{left} | {self.process(node.right)}"
        return self.prefix(node)

    def atom(self, node: Term) -> str:
        text = self.prefix(node)
        if isinstance(node, Par):
            return f"({text})"
        return text

    def prefix(self, node: Term) -> str:
        if isinstance(node, Par):
            return self.process(node)
        elif isinstance(node, Stop):
            return "stop"
        elif isinstance(node, Ok):
            return "ok"
        elif isinstance(node, Fail):
            return "fail"
        elif isinstance(node, Out):
            text = f"{self.name(node.subject)}!<{self.names(node.values)}>"
            if not isinstance(node.continuation, Stop):
                text += f".{self.atom(node.continuation)}"
            return text
        elif isinstance(node, In):
            return f"{self.name(node.subject)}?({self.names(node.params)}).{self.atom(node.continuation)}"
        elif isinstance(node, Query):
            return f"{self.name(node.channel)}?*({self.names(node.params)}).{self.atom(node.continuation)}"
        elif isinstance(node, NewChan):
            return f"new {self.name(node.channel)}.{self.atom(node.body)}"
        elif isinstance(node, IfThenElse):
            return (f"if {self.name(node.lhs)} = {self.name(node.rhs)} "
                    f"then {self.atom(node.then)} else {self.atom(node.orelse)}")
        elif isinstance(node, Repeat):
            mark = f"!{{{node.unfolds}}}" if self.show_unfolds and node.unfolds else "!"
            return f"{mark}{self.atom(node.body)}"
        elif isinstance(node, MonitorBlock):
            return (f"[[ {self.process(node.monitor)} ]]"
                    f"@({self.name(node.ctx_location)},{node.ctx_index})")
        elif isinstance(node, TraceEntity):
            return f"trace {self.name(node.channel)}<{self.names(node.values)}>@{node.timestamp}"
        elif isinstance(node, Sync):
            return f"sync {self.name(node.location)}.{self.atom(node.continuation)}"
        elif isinstance(node, Go):
            return f"go {self.name(node.location)}.{self.atom(node.continuation)}"
        elif isinstance(node, GetI):
            return (f"getI({self.name(node.loc_var)},{self.name(node.idx_var)})."
                    f"{self.atom(node.continuation)}")
        elif isinstance(node, SetI):
            return (f"setI({self.name(node.location)},{self.name(node.index)})."
                    f"{self.atom(node.continuation)}")
        elif isinstance(node, LocatedProcess):
            return self.system(node)
        raise TypeError(f"Cannot print {type(node).__name__}")

    # Contracts

    def contract(self, node: ContractExpr) -> str:
        if isinstance(node, Event):
            if node.values:
                args = self.names(node.values)
            else:
                args = "()"
            return f"({self.name(node.channel)},{args})@{self.name(node.location)}"
        if isinstance(node, Star):
            body = self.contract(node.body)
            if not isinstance(node.body, Event):
                body = f"({body})"
            return f"{body}*"
        if isinstance(node, Seq):
            left = self.contract(node.left)
            if isinstance(node.left, (Seq, Choice)):
                left = f"({left})"
            right = self.contract(node.right)
            if isinstance(node.right, Choice):
                right = f"({right})"
            return f"{left} . {right}"
        if isinstance(node, Choice):
            left = self.contract(node.left)
            if isinstance(node.left, Choice):
                left = f"({left})"
            return f"{left} + {self.contract(node.right)}"
        raise TypeError(f"Cannot print {type(node).__name__}")

def pretty(term: Term, show_unfolds: bool = False) -> str:
    return PrettyPrinter(show_unfolds).system(term)

def pretty_contract(expr: ContractExpr) -> str:
    return PrettyPrinter().contract(expr)
