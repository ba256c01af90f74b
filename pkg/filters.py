"""Filter functions from decorated actions to abstract LTS actions.

A filter is an ordered list of rules; the first rule whose pattern matches
an action decides its image. Actions matched by no rule, or by a rule that
emits ``drop``, are pruned from the filtered LTS.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple, Union

from semantics import Action, ActionKind, Config, StepOptions, TagKind, enabled_transitions

logger = logging.getLogger(__name__)

KINDS = ("tau", "output", "input")
TAG_KINDS = tuple(t.value for t in TagKind)
EMITS = ("drop", "strip", "located")
MONITOR_TAU_CHOICES = ("tau", "drop")

class FilterError(Exception):
    pass

@dataclass(frozen=True)
class AbstractAction:
    kind: str
    subject: Optional[str] = None
    payload: Tuple[str, ...] = ()
    locations: Optional[Tuple[Optional[str], Optional[str]]] = None
    extruded: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FilterError(f"Unknown action kind '{self.kind}'")
        if self.kind == "tau" and (self.subject or self.payload or self.locations or self.extruded):
            raise FilterError("A tau action carries no subject, payload or decoration")

    @property
    def is_tau(self) -> bool:
        return self.kind == "tau"

    def __str__(self) -> str:
        if self.is_tau:
            return "tau"
        mark = "!" if self.kind == "output" else "?"
        text = f"{self.subject}{mark}<{','.join(self.payload)}>"
        if self.extruded:
            text = f"({','.join(self.extruded)}){text}"
        if self.locations is not None:
            source, target = self.locations
            text += f"@({source or '_'},{target or '_'})"
        return text

    def to_dict(self) -> dict:
        data = {"kind": self.kind}
        if not self.is_tau:
            data["subject"] = self.subject
            data["payload"] = list(self.payload)
        if self.locations is not None:
            data["locations"] = list(self.locations)
        if self.extruded:
            data["extruded"] = list(self.extruded)
        return data

TAU = AbstractAction("tau")

@dataclass(frozen=True)
class FilterRule:
    """Pattern over (kind, tag kind, source, target) and the image to emit."""
    emit: str = "strip"
    kind: Optional[str] = None
    tag: Optional[str] = None
    source: Optional[str] = None
    target: Optional[str] = None
    same_location: Optional[bool] = None

    def __post_init__(self):
        if self.emit not in EMITS:
            raise FilterError(f"Unknown emit '{self.emit}', expected one of {', '.join(EMITS)}")
        if self.kind is not None and self.kind not in KINDS:
            raise FilterError(f"Unknown action kind '{self.kind}'")
        if self.tag is not None and self.tag not in TAG_KINDS:
            raise FilterError(f"Unknown tag kind '{self.tag}'")
        if self.emit == "located" and self.kind in (None, "tau"):
            raise FilterError("A rule that may match tau actions cannot emit a located image")

    def matches(self, action: Action) -> bool:
        tag = action.tag
        if self.kind is not None and action.kind.value != self.kind:
            return False
        if self.tag is not None and tag.kind.value != self.tag:
            return False
        if self.source is not None and tag.source != self.source:
            return False
        if self.target is not None and tag.target != self.target:
            return False
        if self.same_location is not None and (tag.source == tag.target) != self.same_location:
            return False
        return True

    def image(self, action: Action) -> Optional[AbstractAction]:
        if self.emit == "drop":
            return None
        if action.kind == ActionKind.TAU:
            return TAU
        locations = (action.tag.source, action.tag.target) if self.emit == "located" else None
        return AbstractAction(action.kind.value, action.subject.text,
                              tuple(v.text for v in action.payload), locations,
                              tuple(b.text for b in action.extruded))

@dataclass(frozen=True)
class Filter:
    name: str
    rules: Tuple[FilterRule, ...] = field(default_factory=tuple)

    def __call__(self, action: Action) -> Optional[AbstractAction]:
        return apply_filter(self, action)

def apply_filter(f: Filter, action: Action) -> Optional[AbstractAction]:
    for rule in f.rules:
        if rule.matches(action):
            return rule.image(action)
    return None

def builtin_filter(name: str, monitor_taus: str = "tau") -> Filter:
    """``ntg`` strips tags, ``prc`` keeps process behaviour, ``ltr`` forbids remote tracing.

    ``monitor_taus`` decides whether ``ltr`` also prunes monitor-tagged
    silent steps between distinct locations.
    """
    if monitor_taus not in MONITOR_TAU_CHOICES:
        raise FilterError(f"Unknown monitor tau treatment '{monitor_taus}'")
    if name == "ntg":
        return Filter("ntg", (FilterRule("strip"),))
    if name == "prc":
        return Filter("prc", (
            FilterRule("strip", kind="tau"),
            FilterRule("located", kind="output", tag="p"),
            FilterRule("located", kind="input", tag="p"),
        ))
    if name == "ltr":
        rules = [FilterRule("drop", kind="tau", tag="t", same_location=False)]
        if monitor_taus == "drop":
            rules.append(FilterRule("drop", kind="tau", tag="m", same_location=False))
        rules.append(FilterRule("strip"))
        return Filter("ltr", tuple(rules))
    raise FilterError(f"Unknown filter '{name}', expected ntg, prc, ltr or a JSON file")

def filter_from_json(data: Union[dict, list], name: str = "custom") -> Filter:
    """Build a filter from ``{"name": ..., "rules": [{"match": {...}, "emit": ...}]}``."""
    if isinstance(data, list):
        data = {"rules": data}
    if not isinstance(data, dict) or not isinstance(data.get("rules"), list):
        raise FilterError("A filter file needs a 'rules' list")
    rules: List[FilterRule] = []
    for position, entry in enumerate(data["rules"]):
        if not isinstance(entry, dict):
            raise FilterError(f"Rule {position} is not an object")
        match = entry.get("match", {})
        unknown = set(match) - {"kind", "tag", "from", "to", "same_location"}
        if unknown:
            raise FilterError(f"Rule {position} has unknown match keys: {', '.join(sorted(unknown))}")
        try:
            rules.append(FilterRule(emit=entry.get("emit", "strip"), kind=match.get("kind"),
                                    tag=match.get("tag"), source=match.get("from"),
                                    target=match.get("to"), same_location=match.get("same_location")))
        except FilterError as e:
            raise FilterError(f"Rule {position}: {e}") from e
    return Filter(str(data.get("name", name)), tuple(rules))

def load_filter(spec: str, monitor_taus: str = "tau") -> Filter:
    """Resolve a built-in name or a path to a JSON filter file."""
    if spec in ("ntg", "prc", "ltr"):
        return builtin_filter(spec, monitor_taus)
    path = Path(spec)
    if not path.is_file():
        raise FilterError(f"Unknown filter '{spec}', expected ntg, prc, ltr or a JSON file")
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FilterError(f"Malformed filter file {spec}: {e}") from e
    logger.debug("Loaded filter from %s", path)
    return filter_from_json(data, path.stem)

def filtered_transitions(config: Config, f: Filter,
                         options: Optional[StepOptions] = None) -> List[Tuple[AbstractAction, Config]]:
    result = []
    for action, target in enabled_transitions(config, options):
        image = apply_filter(f, action)
        if image is not None:
            result.append((image, target))
    return result
