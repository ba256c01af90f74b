"""Tagged transition rules over configurations (clock map, system)."""
import itertools
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Set, Tuple
from ast_nodes import *
from congruence import compose, decompose, normalize
from printer import pretty
from scope_analyzer import free_names, fresh_name, located_names, rename, substitute

logger = logging.getLogger(__name__)

class ActionKind(Enum):
    TAU = "tau"
    OUTPUT = "output"
    INPUT = "input"

class TagKind(Enum):
    PROCESS = "p"
    MONITOR = "m"
    TRACE = "t"

@dataclass(frozen=True)
class Tag:
    kind: TagKind
    source: Optional[str]
    target: Optional[str]
    timestamp: Optional[int] = None

    def __str__(self) -> str:
        text = f"{self.kind.value}:{self.source or '_'},{self.target or '_'}"
        if self.timestamp is not None:
            text += f":{self.timestamp}"
        return f"<{text}>"

@dataclass(frozen=True)
class Action:
    kind: ActionKind
    tag: Tag
    subject: Optional[Name] = None
    payload: Tuple[Name, ...] = ()
    extruded: Tuple[Name, ...] = ()

    def __str__(self) -> str:
        if self.kind == ActionKind.TAU:
            return f"tau{self.tag}"
        args = ",".join(v.text for v in self.payload)
        if self.kind == ActionKind.INPUT:
            return f"{self.subject.text}?<{args}>{self.tag}"
        prefix = f"({','.join(b.text for b in self.extruded)})" if self.extruded else ""
        return f"{prefix}{self.subject.text}!<{args}>{self.tag}"

    def to_dict(self) -> dict:
        data = {"kind": self.kind.value, "tag": {
            "kind": self.tag.kind.value, "from": self.tag.source, "to": self.tag.target}}
        if self.tag.timestamp is not None:
            data["tag"]["timestamp"] = self.tag.timestamp
        if self.kind != ActionKind.TAU:
            data["subject"] = self.subject.text
            data["payload"] = [v.text for v in self.payload]
        if self.extruded:
            data["extruded"] = [b.text for b in self.extruded]
        return data

@dataclass(frozen=True)
class ClockMap:
    entries: Tuple[Tuple[str, int], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping[str, int]) -> "ClockMap":
        return cls(tuple(sorted(mapping.items())))

    def get(self, location: str) -> int:
        for name, value in self.entries:
            if name == location:
                return value
        return 0

    def inc(self, location: str) -> "ClockMap":
        mapping = dict(self.entries)
        mapping[location] = mapping.get(location, 0) + 1
        return ClockMap.of(mapping)

    def as_dict(self) -> Dict[str, int]:
        return dict(self.entries)

@dataclass(frozen=True)
class Config:
    clocks: ClockMap
    system: Term
    verdicts: Tuple[Tuple[str, Verdict], ...] = ()

    def with_verdict(self, location: str, verdict: Verdict) -> Tuple[Tuple[str, Verdict], ...]:
        return tuple(sorted(self.verdicts + ((location, verdict),),
                            key=lambda v: (v[0], v[1].value)))

    def to_dict(self) -> dict:
        return {
            "system": pretty(self.system),
            "clocks": self.clocks.as_dict(),
            "verdicts": [[l, v.value] for l, v in self.verdicts],
        }

@dataclass(frozen=True)
class StepOptions:
    """Knobs for one step of the transition relation.

    ``closed`` keeps only internal steps. ``universe`` is the finite set of
    values offered by the environment to inputs on free channels; when
    absent the free names of the current system are used.
    """
    universe: Optional[Tuple[Name, ...]] = None
    closed: bool = False
    observe_verdicts: bool = False
    max_repeat_unfold: Optional[int] = None
    max_trace_len: Optional[int] = None

@dataclass
class StepResult:
    transitions: List[Tuple[Action, Config]]
    truncated: bool = False

def system_locations(system: Term) -> Set[str]:
    locations = located_names(system)
    locations |= {n.text for n in free_names(system) if n.kind == NameKind.LOCATION}
    return locations

def initial_config(system: Term, clocks: Optional[Mapping[str, int]] = None) -> Config:
    mapping = {location: 0 for location in system_locations(system)}
    mapping.update(clocks or {})
    return Config(ClockMap.of(mapping), normalize(system), ())

def match_communication(out: Action, inp: Action) -> Optional[Tag]:
    """Shared tag of an output and an input able to synchronise."""
    if out.kind != ActionKind.OUTPUT or inp.kind != ActionKind.INPUT:
        return None
    if out.subject.text != inp.subject.text:
        return None
    if [v.text for v in out.payload] != [v.text for v in inp.payload]:
        return None
    if out.tag.kind != inp.tag.kind:
        return None
    if inp.tag.source is not None and inp.tag.source != out.tag.source:
        return None
    if out.tag.target is not None and out.tag.target != inp.tag.target:
        return None
    if out.tag.kind == TagKind.TRACE and out.tag.timestamp != inp.tag.timestamp:
        return None
    timestamp = out.tag.timestamp if out.tag.kind == TagKind.TRACE else None
    return Tag(out.tag.kind, out.tag.source, inp.tag.target, timestamp)

# Capabilities of individual components

@dataclass
class _Capability:
    kind: str                      # out | in | query | tau
    source: int
    host: str
    build: Callable
    channel: Optional[Name] = None
    values: Tuple[Name, ...] = ()
    arity: int = 0
    tag_kind: TagKind = TagKind.PROCESS
    trace: bool = False
    ctx: Optional[Tuple[Name, int]] = None
    tag: Optional[Tag] = None
    verdict: Optional[Verdict] = None
    binders: Tuple[Name, ...] = ()

def _placed(host: Name, ctx: Optional[Tuple[Name, int]], term: Term) -> Term:
    if ctx is not None:
        term = MonitorBlock(term, ctx[0], ctx[1])
    return LocatedProcess(host, term)

def _concrete(*names: Name) -> bool:
    return all(n.kind != NameKind.VARIABLE for n in names)

def offered_channels(monitor: Term) -> Set[str]:
    """Channels a monitor body is ready to query."""
    if isinstance(monitor, Query) and _concrete(monitor.channel):
        return {monitor.channel.text}
    if isinstance(monitor, Repeat):
        return offered_channels(monitor.body)
    if isinstance(monitor, Par):
        return offered_channels(monitor.left) | offered_channels(monitor.right)
    return set()

class _Stepper:
    def __init__(self, config: Config, options: StepOptions):
        self.config = config
        self.options = options
        self.binders, self.components = decompose(config.system)
        self.bound = {b.text for b in self.binders}
        self.truncated = False
        self.copy_counter = 0
        self.taken = {n.text for n in free_names(config.system)} | {b.text for b in self.binders}
        self.log: Dict[Tuple[str, int], TraceEntity] = {}
        self.log_sizes: Dict[str, int] = {}
        for component in self.components:
            if isinstance(component.body, TraceEntity):
                entity = component.body
                self.log[(component.location.text, entity.timestamp)] = entity
                self.log_sizes[component.location.text] = self.log_sizes.get(component.location.text, 0) + 1

    # capability extraction

    def capabilities(self) -> List[_Capability]:
        caps = []
        for index, component in enumerate(self.components):
            body = component.body
            if isinstance(body, TraceEntity):
                continue
            if isinstance(body, MonitorBlock):
                ctx = (body.ctx_location, body.ctx_index)
                caps.extend(self.prefix_caps(body.monitor, component.location, ctx, index))
            else:
                caps.extend(self.prefix_caps(body, component.location, None, index))
        return caps

    def prefix_caps(self, node: Term, host: Name, ctx, source: int) -> List[_Capability]:
        h = host.text
        in_monitor = ctx is not None
        kind = TagKind.MONITOR if in_monitor else TagKind.PROCESS

        if isinstance(node, Out):
            if not _concrete(node.subject, *node.values):
                return []
            return [_Capability("out", source, h, lambda: [_placed(host, ctx, node.continuation)],
                                channel=node.subject, values=node.values, tag_kind=kind,
                                trace=not in_monitor)]
        if isinstance(node, In):
            if not _concrete(node.subject):
                return []
            return [_Capability("in", source, h,
                                lambda values: [_placed(host, ctx, substitute(node.continuation, node.params, values))],
                                channel=node.subject, arity=len(node.params), tag_kind=kind)]
        if isinstance(node, IfThenElse):
            if not _concrete(node.lhs, node.rhs):
                return []
            branch = node.then if node.lhs.text == node.rhs.text else node.orelse
            return [self.tau(source, h, Tag(kind, h, h), lambda clocks: [_placed(host, ctx, branch)])]
        if isinstance(node, Repeat):
            return self.repeat_caps(node, host, ctx, source)
        if not in_monitor:
            return []

        location, index = ctx
        monitor_tag = Tag(TagKind.MONITOR, h, h)
        if isinstance(node, Query):
            if not _concrete(node.channel):
                return []
            return [_Capability("query", source, h,
                                lambda values: [_placed(host, (location, index + 1),
                                                        substitute(node.continuation, node.params, values))],
                                channel=node.channel, arity=len(node.params),
                                tag_kind=TagKind.TRACE, ctx=ctx)]
        if isinstance(node, Sync):
            if not _concrete(node.location):
                return []
            target = Name(NameKind.LOCATION, node.location.text)
            return [self.tau(source, h, monitor_tag, lambda clocks: [
                _placed(host, (target, clocks.get(target.text)), node.continuation)])]
        if isinstance(node, SetI):
            if not _concrete(node.location) or node.index.kind != NameKind.INDEX:
                return []
            target = (Name(NameKind.LOCATION, node.location.text), int(node.index.text))
            return [self.tau(source, h, monitor_tag, lambda clocks: [_placed(host, target, node.continuation)])]
        if isinstance(node, GetI):
            body = substitute(node.continuation, (node.loc_var, node.idx_var), (location, idx(index)))
            return [self.tau(source, h, monitor_tag, lambda clocks: [_placed(host, ctx, body)])]
        if isinstance(node, Go):
            if not _concrete(node.location):
                return []
            target = Name(NameKind.LOCATION, node.location.text)
            return [self.tau(source, h, Tag(TagKind.MONITOR, h, target.text),
                             lambda clocks: [_placed(target, ctx, node.continuation)])]
        if isinstance(node, (Ok, Fail)):
            verdict = Verdict.OK if isinstance(node, Ok) else Verdict.FAIL
            cap = self.tau(source, h, monitor_tag, lambda clocks: [])
            cap.verdict = verdict
            return [cap]
        return []

    def tau(self, source: int, host: str, tag: Tag, build) -> _Capability:
        return _Capability("tau", source, host, build, tag=tag)

    def repeat_caps(self, node: Repeat, host: Name, ctx, source: int) -> List[_Capability]:
        """One virtual copy of the replicated body, materialised on use."""
        copy_binders: List[Name] = []
        parts: List[Tuple[Term, Name, Optional[Tuple[Name, int]]]] = []

        def split(term: Term, where: Name, context):
            if isinstance(term, Par):
                split(term.left, where, context)
                split(term.right, where, context)
            elif isinstance(term, NewChan):
                self.copy_counter += 1
                fresh = fresh_name(f"#r{self.copy_counter}", self.taken)
                self.taken.add(fresh.text)
                copy_binders.append(fresh)
                split(substitute_channel(term.body, term.channel, fresh), where, context)
            elif isinstance(term, MonitorBlock) and context is None:
                split(term.monitor, where, (term.ctx_location, term.ctx_index))
            elif not isinstance(term, Stop):
                parts.append((term, where, context))

        split(node.body, host, ctx)
        caps: List[_Capability] = []
        for position, (part, where, context) in enumerate(parts):
            for cap in self.prefix_caps(part, where, context, source):
                caps.append(self.wrap_copy(cap, node, host, ctx, parts, position, tuple(copy_binders)))
        if caps and self.options.max_repeat_unfold is not None \
                and node.unfolds + 1 > self.options.max_repeat_unfold:
            self.truncated = True
            return []
        return caps

    def wrap_copy(self, cap: _Capability, node: Repeat, host: Name, ctx, parts, position, copy_binders):
        inner = cap.build

        def rebuilt(result: List[Term]) -> List[Term]:
            replicator_ctx = ctx
            if ctx is not None and result and isinstance(result[0], LocatedProcess) \
                    and isinstance(result[0].body, MonitorBlock):
                block = result[0].body
                replicator_ctx = (block.ctx_location, block.ctx_index)
            others = [_placed(where, context, term)
                      for i, (term, where, context) in enumerate(parts) if i != position]
            return [_placed(host, replicator_ctx, Repeat(node.body, node.unfolds + 1))] + others + result

        if cap.kind in ("in", "query"):
            cap.build = lambda values: rebuilt(inner(values))
        else:
            cap.build = lambda *args: rebuilt(inner(*args))
        cap.binders = cap.binders + copy_binders
        return cap

    # assembling transitions

    def successor(self, removed: Sequence[int], added: List[Term], binders: Sequence[Name],
                  clocks: ClockMap, verdicts=None) -> Config:
        removed = set(removed)
        components = [c for i, c in enumerate(self.components) if i not in removed] + added
        fallback = self.components[0].location if self.components else loc("l")
        system = normalize(compose(binders, components, fallback))
        return Config(clocks, system, self.config.verdicts if verdicts is None else verdicts)

    def trace_allowed(self, location: str) -> bool:
        limit = self.options.max_trace_len
        if limit is not None and self.log_sizes.get(location, 0) >= limit:
            self.truncated = True
            return False
        return True

    def emit_output(self, cap: _Capability, added: List[Term]) -> Tuple[List[Term], ClockMap]:
        """Process outputs leave a trace entity and advance the local clock."""
        clocks = self.config.clocks
        if cap.trace:
            stamp = clocks.get(cap.host)
            added = added + [LocatedProcess(loc(cap.host), TraceEntity(cap.channel, cap.values, stamp))]
            clocks = clocks.inc(cap.host)
        return added, clocks

    def universe(self) -> Tuple[Name, ...]:
        if self.options.universe is not None:
            return self.options.universe
        names = {n for n in free_names(self.config.system) if n.kind != NameKind.VARIABLE}
        return tuple(sorted(names, key=lambda n: (n.text, n.kind.value)))

    def run(self) -> StepResult:
        caps = self.capabilities()
        results: List[Tuple[Action, Config]] = []
        clocks = self.config.clocks
        binders = list(self.binders)

        for cap in caps:
            if cap.kind != "tau":
                continue
            added = cap.build(clocks)
            verdicts = None
            action = Action(ActionKind.TAU, cap.tag)
            if cap.verdict is not None:
                verdicts = self.config.with_verdict(cap.host, cap.verdict)
                if self.options.observe_verdicts and not self.options.closed:
                    action = Action(ActionKind.OUTPUT, cap.tag, chan(cap.verdict.value))
            results.append((action, self.successor([cap.source], added, binders + list(cap.binders),
                                                   clocks, verdicts)))

        results.extend(self.skips())
        results.extend(self.queries(caps))
        results.extend(self.communications(caps))
        if not self.options.closed:
            results.extend(self.externals(caps))

        unique = {}
        for action, target in results:
            unique[(action, target)] = (action, target)
        ordered = sorted(unique.values(), key=lambda t: (str(t[0]), pretty(t[1].system, True),
                                                         t[1].clocks.entries, str(t[1].verdicts)))
        return StepResult(ordered, self.truncated)

    def skips(self) -> List[Tuple[Action, Config]]:
        results = []
        for index, component in enumerate(self.components):
            block = component.body
            if not isinstance(block, MonitorBlock):
                continue
            offered = offered_channels(block.monitor)
            entry = self.log.get((block.ctx_location.text, block.ctx_index))
            if not offered or entry is None or entry.channel.text in offered:
                continue
            tag = Tag(TagKind.TRACE, block.ctx_location.text, component.location.text, block.ctx_index)
            moved = LocatedProcess(component.location,
                                   MonitorBlock(block.monitor, block.ctx_location, block.ctx_index + 1))
            results.append((Action(ActionKind.TAU, tag),
                            self.successor([index], [moved], self.binders, self.config.clocks)))
        return results

    def queries(self, caps: List[_Capability]) -> List[Tuple[Action, Config]]:
        results = []
        for cap in caps:
            if cap.kind != "query":
                continue
            location, index = cap.ctx
            entry = self.log.get((location.text, index))
            if entry is None or len(entry.values) != cap.arity:
                continue
            out = Action(ActionKind.OUTPUT, Tag(TagKind.TRACE, location.text, None, index),
                         entry.channel, entry.values)
            inp = Action(ActionKind.INPUT, Tag(TagKind.TRACE, location.text, cap.host, index),
                         cap.channel, entry.values)
            tag = match_communication(out, inp)
            if tag is None:
                continue
            added = cap.build(entry.values)
            results.append((Action(ActionKind.TAU, tag),
                            self.successor([cap.source], added, self.binders + list(cap.binders),
                                           self.config.clocks)))
        return results

    def communications(self, caps: List[_Capability]) -> List[Tuple[Action, Config]]:
        results = []
        outputs = [c for c in caps if c.kind == "out"]
        inputs = [c for c in caps if c.kind == "in"]
        for out_cap, in_cap in itertools.product(outputs, inputs):
            if out_cap.source == in_cap.source:
                continue
            if len(out_cap.values) != in_cap.arity:
                continue
            out = Action(ActionKind.OUTPUT, Tag(out_cap.tag_kind, out_cap.host, None),
                         out_cap.channel, out_cap.values)
            inp = Action(ActionKind.INPUT, Tag(in_cap.tag_kind, None, in_cap.host),
                         in_cap.channel, out_cap.values)
            tag = match_communication(out, inp)
            if tag is None:
                continue
            if out_cap.trace and not self.trace_allowed(out_cap.host):
                continue
            added = out_cap.build() + in_cap.build(out_cap.values)
            added, clocks = self.emit_output(out_cap, added)
            binders = self.binders + list(out_cap.binders) + list(in_cap.binders)
            results.append((Action(ActionKind.TAU, tag),
                            self.successor([out_cap.source, in_cap.source], added, binders, clocks)))
        return results

    def externals(self, caps: List[_Capability]) -> List[Tuple[Action, Config]]:
        results = []
        for cap in caps:
            if cap.kind == "out" and cap.channel.text not in self.bound:
                if cap.trace and not self.trace_allowed(cap.host):
                    continue
                extruded = tuple(dict.fromkeys(v for v in cap.values if v.text in self.bound and v.text != cap.channel.text))
                action = Action(ActionKind.OUTPUT, Tag(cap.tag_kind, cap.host, None),
                                cap.channel, cap.values, extruded)
                added, clocks = self.emit_output(cap, cap.build())
                binders = [b for b in self.binders if b.text not in {e.text for e in extruded}] + list(cap.binders)
                results.append((action, self.successor([cap.source], added, binders, clocks)))
            elif cap.kind == "in" and cap.channel.text not in self.bound:
                for values in itertools.product(self.universe(), repeat=cap.arity):
                    action = Action(ActionKind.INPUT, Tag(cap.tag_kind, None, cap.host),
                                    cap.channel, tuple(values))
                    added = cap.build(tuple(values))
                    results.append((action, self.successor([cap.source], added,
                                                           self.binders + list(cap.binders),
                                                           self.config.clocks)))

        for component in self.components:
            entity = component.body
            if isinstance(entity, TraceEntity) and entity.channel.text not in self.bound:
                extruded = tuple(dict.fromkeys(v for v in entity.values if v.text in self.bound))
                tag = Tag(TagKind.TRACE, component.location.text, None, entity.timestamp)
                results.append((Action(ActionKind.OUTPUT, tag, entity.channel, entity.values, extruded),
                                self.config))
        return results

def substitute_channel(term: Term, old: Name, new: Name) -> Term:
    return rename(term, {old: new})

def successors(config: Config, options: Optional[StepOptions] = None) -> StepResult:
    return _Stepper(config, options or StepOptions()).run()

def enabled_transitions(config: Config, options: Optional[StepOptions] = None) -> List[Tuple[Action, Config]]:
    """Every decorated transition of ``config``; empty when stuck."""
    return successors(config, options).transitions

def trace_logs(config: Config) -> Dict[str, List[TraceEntity]]:
    """Per-location trace entities ordered by timestamp."""
    logs: Dict[str, List[TraceEntity]] = {}
    _, components = decompose(config.system)
    for component in components:
        if isinstance(component.body, TraceEntity):
            logs.setdefault(component.location.text, []).append(component.body)
    for entries in logs.values():
        entries.sort(key=lambda e: e.timestamp)
    return logs

def monitor_contexts(config: Config) -> List[Tuple[str, str, int]]:
    """(host, context location, context index) of every monitor block."""
    _, components = decompose(config.system)
    return [(c.location.text, c.body.ctx_location.text, c.body.ctx_index)
            for c in components if isinstance(c.body, MonitorBlock)]
