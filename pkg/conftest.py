import itertools
import random
from pathlib import Path
from typing import Dict, List, Tuple

import pytest

from ast_nodes import Choice, ContractExpr, Event, Seq, Star, chan, events_of, loc
from explorer import ExploreBounds
from parser import parse_system
from printer import pretty_contract
from semantics import initial_config

SAMPLES = Path(__file__).parent / "samples"

def pytest_configure(config):
    config.addinivalue_line("markers", "slow: exhaustive corpus runs")

def sample_text(name: str) -> str:
    return (SAMPLES / name).read_text(encoding="utf-8")

def config_of(text: str, **clocks):
    return initial_config(parse_system(text), clocks)

def event(channel: str, value: str, location: str) -> Event:
    return Event(chan(channel), (chan(value),), loc(location))

def contract_corpus(locations=("l", "k"), channels=("c1", "c2"), depth: int = 1):
    """Contracts over single-valued events up to the given operator depth."""
    level = [event(c, "v", l) for c, l in itertools.product(channels, locations)]
    corpus = list(level)
    for _ in range(depth):
        grown = []
        for left, right in itertools.product(level, repeat=2):
            grown.append(Seq(left, right))
            grown.append(Choice(left, right))
        grown.extend(Star(e) for e in level if not isinstance(e, Star))
        level = grown
        corpus.extend(grown)
    return corpus


# Generators

LOCATIONS = ("l", "k", "h")
CHANNELS = ("a", "b", "c")
VALUES = ("u", "w")

def _value(rng: random.Random, bound: Tuple[str, ...]) -> str:
    return rng.choice(VALUES + bound)

def random_process(rng: random.Random, depth: int, bound: Tuple[str, ...] = ()) -> str:
    channel = rng.choice(CHANNELS)
    if depth == 0 or rng.random() < 0.2:
        return rng.choice(("stop", f"{channel}!<{_value(rng, bound)}>"))
    shape = rng.randrange(5)
    if shape == 0:
        return f"{channel}!<{_value(rng, bound)}>.{random_process(rng, depth - 1, bound)}"
    if shape in (1, 2):
        x = f"x{len(bound) + 1}"
        prefix = "!" if shape == 2 else ""
        return f"{prefix}{channel}?({x}).{random_process(rng, depth - 1, bound + (x,))}"
    if shape == 3:
        return (f"if {_value(rng, bound)} = {_value(rng, bound)} "
                f"then {random_process(rng, depth - 1, bound)} else {random_process(rng, depth - 1, bound)}")
    return f"({random_process(rng, depth - 1, bound)} | {random_process(rng, depth - 1, bound)})"

def random_monitor(rng: random.Random, depth: int, bound: Tuple[str, ...] = ()) -> str:
    if depth == 0 or rng.random() < 0.2:
        return rng.choice(("ok", "fail", "stop"))
    channel, where = rng.choice(CHANNELS), rng.choice(LOCATIONS)

    def rest(extra: Tuple[str, ...] = ()) -> str:
        return random_monitor(rng, depth - 1, bound + extra)

    shape = rng.randrange(7)
    if shape == 0:
        x = f"x{len(bound) + 1}"
        return f"{channel}?*({x}).{rest((x,))}"
    if shape == 1:
        return f"sync {where}.{rest()}"
    if shape == 2:
        return f"go {where}.{rest()}"
    if shape == 3:
        return f"setI({where},{rng.randrange(3)}).{rest()}"
    if shape == 4:
        y, z = f"y{len(bound) + 1}", f"z{len(bound) + 1}"
        return f"getI({y},{z}).{rest((y, z))}"
    if shape == 5:
        return f"{channel}!<{_value(rng, bound)}>.{rest()}"
    return f"if {_value(rng, bound)} = {_value(rng, bound)} then {rest()} else {rest()}"

def random_system_text(rng: random.Random, depth: int = 3) -> str:
    """A well-formed system mixing process blocks, monitors and trace entities."""
    components = []
    for _ in range(rng.randint(1, 4)):
        where = rng.choice(LOCATIONS)
        shape = rng.random()
        if shape < 0.6:
            components.append(f"{where}[[ {random_process(rng, depth)} ]]")
        elif shape < 0.85:
            components.append(f"{where}[[ {random_monitor(rng, depth)} ]]@({rng.choice(LOCATIONS)},{rng.randrange(3)})")
        else:
            components.append(f"{where}[[ trace {rng.choice(CHANNELS)}<{rng.choice(VALUES)}>@{rng.randrange(3)} ]]")
    text = " | ".join(components)
    if rng.random() < 0.3:
        text = f"new {rng.choice(CHANNELS)}.({text})"
    return text

def random_output_system(rng: random.Random, max_outputs: int = 6) -> Tuple[str, Dict[str, int]]:
    """At most ``max_outputs`` process outputs over at most three locations, with initial clocks."""
    locations = LOCATIONS[:rng.randint(1, 3)]
    budget = rng.randint(1, max_outputs)
    components = []
    while budget > 0:
        where, channel, value = rng.choice(locations), rng.choice(CHANNELS), rng.choice(VALUES)
        shape = rng.random()
        if shape < 0.5 or budget == 1:
            components.append(f"{where}[[ {channel}!<{value}> ]]")
            budget -= 1
        elif shape < 0.8:
            components.append(f"{where}[[ {channel}?(x).{rng.choice(CHANNELS)}!<x> ]]")
            budget -= 1
        else:
            components.append(f"{where}[[ {channel}!<{value}>.{rng.choice(CHANNELS)}!<{value}> ]]")
            budget -= 2
    return " | ".join(components), {l: rng.randrange(4) for l in locations}

def congruent_pair(rng: random.Random) -> Tuple[str, str]:
    """Two texts of one system, related by reordering, regrouping, stop units and alpha-renaming."""
    parts = [(rng.choice(LOCATIONS), random_process(rng, 2)) for _ in range(rng.randint(1, 4))]
    sender, receiver = rng.choice(LOCATIONS), rng.choice(LOCATIONS)

    def private(channel: str) -> str:
        return f"{sender}[[ {channel}!<u> ]] | {receiver}[[ {channel}?(x).a!<x> ]]"

    left = [f"new d.({private('d')})"] + [f"{l}[[ {p} ]]" for l, p in parts]

    shuffled = list(parts)
    rng.shuffle(shuffled)
    right = []
    for where, process in shuffled:
        if right and right[-1][0] == where and rng.random() < 0.5:
            right[-1] = (where, f"{right[-1][1]} | {process}")
        else:
            right.append((where, process))
    blocks = [f"{l}[[ {p} ]]" for l, p in right] + [f"{sender}[[ stop ]]"]
    extruded = blocks.pop(rng.randrange(len(blocks)))
    right_text = [f"new e.({extruded} | {private('e')})"] + blocks
    rng.shuffle(right_text)
    return " | ".join(left), " | ".join(right_text)

def random_contract(rng: random.Random, depth: int, locations=LOCATIONS, channels=("c1", "c2")) -> ContractExpr:
    if depth == 0 or rng.random() < 0.35:
        return event(rng.choice(channels), "v", rng.choice(locations))
    shape = rng.random()
    if shape < 0.45:
        return Seq(random_contract(rng, depth - 1, locations, channels),
                   random_contract(rng, depth - 1, locations, channels))
    if shape < 0.8:
        return Choice(random_contract(rng, depth - 1, locations, channels),
                      random_contract(rng, depth - 1, locations, channels))
    return Star(random_contract(rng, depth - 1, locations, channels))

def strategy_corpus(size: int = 56, seed: int = 2024) -> List[ContractExpr]:
    """Distinct contracts of depth at most three with at most three events; stars only over events."""
    rng = random.Random(seed)
    corpus, seen = [], set()
    while len(corpus) < size:
        expr = random_contract(rng, 3)
        stars = [n for n in _contract_nodes(expr) if isinstance(n, Star)]
        if len(events_of(expr)) > 3 or len(stars) > 1 or any(not isinstance(s.body, Event) for s in stars):
            continue
        key = pretty_contract(expr)
        if key not in seen:
            seen.add(key)
            corpus.append(expr)
    return corpus

def _contract_nodes(expr: ContractExpr) -> List[ContractExpr]:
    if isinstance(expr, Event):
        return [expr]
    if isinstance(expr, Star):
        return [expr] + _contract_nodes(expr.body)
    return [expr] + _contract_nodes(expr.left) + _contract_nodes(expr.right)

@pytest.fixture
def samples_dir() -> Path:
    return SAMPLES

@pytest.fixture
def small_bounds() -> ExploreBounds:
    return ExploreBounds(max_repeat_unfold=2, max_trace_len=4, max_states=5000)

@pytest.fixture
def sys_text() -> str:
    return sample_text("sys.mdpi")
