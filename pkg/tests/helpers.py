"""Test-only types, graph generators and independent oracles.

The oracles here deliberately avoid the package's own matching and ranking
code: precedence comes from a literal list, applicability is re-derived
from the rule fields, and graph equality is a plain bijection walk.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

import policyrpc as pr
from policyrpc.policy import Role

# ---- types -----------------------------------------------------------------


@pr.encodable("t.Node")
@dataclass(eq=False)
class Node:
    label: int = 0
    weight: float = 0.0
    text: str = ""
    flag: bool = False
    left: object = None
    right: object = None
    kids: list = field(default_factory=list)


@pr.encodable("t.Address")
@dataclass
class Address:
    street: str
    city: str


@pr.encodable("t.Entry")
@dataclass
class Entry:
    name: str
    phone: str
    address: Address | None = None

    def get_phone(self):
        return self.phone

    def set_phone(self, phone):
        self.phone = phone

    def get_address(self):
        return self.address


@pr.encodable("t.SpecialEntry")
@dataclass
class SpecialEntry(Entry):
    pass


class Service:
    """Callee-side fixture with hooks for mutation-visibility checks."""

    def __init__(self, held=None):
        self.held = held
        self.received = []

    def mutate(self, entry, phone="changed"):
        self.received.append(entry)
        entry.set_phone(phone)
        return "ok"

    def keep(self, entry):
        self.received.append(entry)
        return "kept"

    def give(self):
        return self.held

    def echo(self, value):
        return value

    def identity_check(self, a, b):
        return a is b

    def fail(self):
        raise RuntimeError("boom")

    def size_of(self, items):
        return len(items)


pr.default_types.register(Service, "t.Service", fields=(), methods=None)


@pr.encodable("t.T0")
@dataclass(eq=False)
class T0:
    tag: int = 0
    children: list = field(default_factory=list)


@pr.encodable("t.T1")
@dataclass(eq=False)
class T1(T0):
    pass


@pr.encodable("t.T2")
@dataclass(eq=False)
class T2(T0):
    pass


TYPED = (T0, T1, T2)


# ---- resolution oracle -----------------------------------------------------

# precedence, highest first; index + 1 is the level
PRECEDENCE = [
    ("param", False),
    ("method", False),
    ("class", False),
    ("param", True),
    ("method", True),
    ("class", True),
]


def oracle_applicable(rule: pr.PolicyRule, site: pr.CallSite) -> bool:
    kind = rule.kind.value
    if kind == "class":
        return rule.class_name == site.actual_class_name
    within = rule.depth is None or site.depth <= rule.depth
    same_method = rule.class_name == site.class_name and rule.method_name == site.method_name
    if kind == "method":
        return same_method and within
    return (same_method and within and site.role is Role.ARGUMENT
            and rule.param_index == site.param_index)


def oracle_resolve(rules, default, site):
    """(mechanism name, kind value, level) by exhaustive ranking."""
    candidates = []
    for rule in rules:
        if oracle_applicable(rule, site):
            level = PRECEDENCE.index((rule.kind.value, rule.overridable)) + 1
            candidates.append((level, rule))
    if not candidates:
        return (default.name, "default", 7)
    candidates.sort(key=lambda c: c[0])
    level, rule = candidates[0]
    return (rule.mechanism.name, rule.kind.value, level)


def decision_tuple(d: pr.TransmissionDecision):
    return (d.mechanism.name, d.dominant_kind.value, d.dominant_level)


# ---- contention oracle -----------------------------------------------------

# who wins a same-level tie, from the serializer's point of view
TIE_WINNER = {
    ("argument", True): "other",        # serializer is caller; callee wins
    ("argument", False): "serializer",  # serializer is callee
    ("return", True): "serializer",     # serializer is caller; caller wins
    ("return", False): "other",         # serializer is callee; caller is other
}


def oracle_combine(level_s, level_o, role, serializer_is_caller):
    if level_s < level_o:
        return "serializer"
    if level_o < level_s:
        return "other"
    return TIE_WINNER[role, serializer_is_caller]


LEVEL_KIND = {1: ("param", False), 2: ("method", False), 3: ("class", False),
              4: ("param", True), 5: ("method", True), 6: ("class", True)}


def decision_at(level, mechanism):
    if level == 7:
        return pr.TransmissionDecision.default(mechanism)
    kind, ov = LEVEL_KIND[level]
    return pr.TransmissionDecision(mechanism, pr.RuleKind.parse(kind), level, ov)


# ---- graphs ----------------------------------------------------------------


def random_graph(rng: random.Random, max_depth: int = 6, max_nodes: int = 25) -> Node:
    """A tree of depth <= max_depth plus random extra edges (aliases and cycles)."""
    nodes = []

    def make(depth):
        n = Node(label=rng.randint(-2**40, 2**40), weight=rng.uniform(-1e6, 1e6),
                 text=rng.choice(["", "a", "héllo", "x" * rng.randint(0, 20)]),
                 flag=rng.random() < 0.5)
        nodes.append(n)
        if depth < max_depth and len(nodes) < max_nodes:
            if rng.random() < 0.6:
                n.left = make(depth + 1)
            if rng.random() < 0.4:
                n.right = make(depth + 1)
            for _ in range(rng.randint(0, 2)):
                if len(nodes) < max_nodes:
                    n.kids.append(make(depth + 1) if rng.random() < 0.7 else rng.choice(
                        [None, 7, "s", 2.5, True, [1, [2]]]))
        return n

    root = make(0)
    for _ in range(rng.randint(0, 4)):
        a, b = rng.choice(nodes), rng.choice(nodes)
        slot = rng.choice(["left", "right", "kids"])
        if slot == "kids":
            a.kids.append(b)
        else:
            setattr(a, slot, b)
    return root


def graph_equal(a, b, fwd=None, back=None) -> bool:
    """Structural equality that also requires the same aliasing pattern."""
    if fwd is None:
        fwd, back = {}, {}
    if isinstance(a, (bool, int, float, str)) or a is None:
        return type(a) is type(b) and a == b
    if isinstance(a, list):
        return (isinstance(b, list) and len(a) == len(b)
                and all(graph_equal(x, y, fwd, back) for x, y in zip(a, b)))
    if type(a) is not type(b):
        return False
    if id(a) in fwd or id(b) in back:
        return fwd.get(id(a)) is b and back.get(id(b)) is a
    fwd[id(a)], back[id(b)] = b, a
    names = list(vars(a))
    if names != list(vars(b)):
        return False
    return all(graph_equal(getattr(a, n), getattr(b, n), fwd, back) for n in names)


def random_typed_tree(rng: random.Random, max_depth: int = 5):
    def make(depth):
        obj = rng.choice(TYPED)(tag=depth)
        if depth < max_depth:
            for _ in range(rng.randint(0, 2)):
                child = make(depth + 1)
                obj.children.append([child] if rng.random() < 0.2 else child)
        return obj
    return make(0)
