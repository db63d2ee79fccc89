"""Wire-level data: serialized object-graph nodes and remote references.

The canonical JSON form of a node is::

    {"k": "prim", "t": "int64", "v": 42}
    {"k": "null"}
    {"k": "list", "v": [...]}
    {"k": "val", "t": "Entry", "i": 0, "f": {"name": ..., ...}}
    {"k": "ref", "space": "...", "obj": 3, "t": "Entry"}
    {"k": "back", "i": 0}
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Union

from .errors import MalformedWireTree

INT64_MIN = -(2**63)
INT64_MAX = 2**63 - 1

PRIM_TAGS = {"bool": bool, "int64": int, "float64": float, "string": str}


@dataclass(frozen=True)
class RemoteReference:
    space_id: str
    object_id: int
    type_name: str

    def __str__(self):
        return f"{self.space_id}:{self.object_id}:{self.type_name}"

    @classmethod
    def parse(cls, text: str) -> RemoteReference:
        space_id, object_id, type_name = text.split(":", 2)
        return cls(space_id, int(object_id), type_name)

    def to_dict(self) -> dict:
        return {"space": self.space_id, "obj": self.object_id, "t": self.type_name}

    @classmethod
    def from_dict(cls, data: dict) -> RemoteReference:
        try:
            space, obj, t = data["space"], data["obj"], data["t"]
        except (KeyError, TypeError):
            raise MalformedWireTree(f"bad remote reference {data!r}") from None
        if not isinstance(space, str) or not _is_int(obj) or not isinstance(t, str):
            raise MalformedWireTree(f"bad remote reference {data!r}")
        return cls(space, obj, t)


@dataclass(frozen=True)
class Prim:
    tag: str
    value: Any


@dataclass(frozen=True)
class Null:
    pass


@dataclass(frozen=True)
class ListNode:
    elements: tuple = ()


@dataclass(frozen=True)
class ValueNode:
    type_name: str
    index: int
    fields: dict = field(default_factory=dict, hash=False)


@dataclass(frozen=True)
class RefNode:
    ref: RemoteReference


@dataclass(frozen=True)
class BackRef:
    index: int


WireNode = Union[Prim, Null, ListNode, ValueNode, RefNode, BackRef]


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def to_json(node: WireNode) -> dict:
    if isinstance(node, Prim):
        return {"k": "prim", "t": node.tag, "v": node.value}
    if isinstance(node, Null):
        return {"k": "null"}
    if isinstance(node, ListNode):
        return {"k": "list", "v": [to_json(e) for e in node.elements]}
    if isinstance(node, ValueNode):
        return {"k": "val", "t": node.type_name, "i": node.index,
                "f": {name: to_json(v) for name, v in node.fields.items()}}
    if isinstance(node, RefNode):
        return {"k": "ref", **node.ref.to_dict()}
    if isinstance(node, BackRef):
        return {"k": "back", "i": node.index}
    raise TypeError(f"not a wire node: {node!r}")


def from_json(data: Any) -> WireNode:
    """Parse a JSON wire tree, checking shape but not back-reference targets."""
    if not isinstance(data, dict):
        raise MalformedWireTree(f"wire node must be an object, got {data!r}")
    kind = data.get("k")
    if kind == "prim":
        tag, value = data.get("t"), data.get("v")
        expected = PRIM_TAGS.get(tag)
        if expected is None:
            raise MalformedWireTree(f"unknown primitive tag {tag!r}")
        if expected is float and _is_int(value):
            value = float(value)
        if expected is int:
            if not _is_int(value) or not INT64_MIN <= value <= INT64_MAX:
                raise MalformedWireTree(f"bad int64 value {value!r}")
        elif type(value) is not expected:
            raise MalformedWireTree(f"primitive {tag} holds {value!r}")
        return Prim(tag, value)
    if kind == "null":
        return Null()
    if kind == "list":
        items = data.get("v")
        if not isinstance(items, list):
            raise MalformedWireTree("list node needs a 'v' array")
        return ListNode(tuple(from_json(e) for e in items))
    if kind == "val":
        t, i, f = data.get("t"), data.get("i"), data.get("f")
        if not isinstance(t, str) or not _is_int(i) or not isinstance(f, dict):
            raise MalformedWireTree(f"bad value node {data!r}")
        return ValueNode(t, i, {name: from_json(v) for name, v in f.items()})
    if kind == "ref":
        return RefNode(RemoteReference.from_dict(data))
    if kind == "back":
        i = data.get("i")
        if not _is_int(i):
            raise MalformedWireTree(f"bad back-reference {data!r}")
        return BackRef(i)
    raise MalformedWireTree(f"unknown node kind {kind!r}")


def iter_nodes(node: WireNode):
    """Yield ``node`` and every node beneath it in pre-order."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, ListNode):
            stack.extend(reversed(n.elements))
        elif isinstance(n, ValueNode):
            stack.extend(reversed(list(n.fields.values())))
