"""Policy-driven object graph serialization.

:func:`encode` walks an argument or return value in pre-order.  Each object
node asks ``decide(type_name, depth)`` for a mechanism: by-reference nodes
are exported and cut off, by-value nodes are inlined and their fields walked
at ``depth + 1``.  Lists are transparent and don't add depth.  An object met
a second time as a by-value node becomes a back-reference, which keeps
cycles finite and aliasing intact.

:func:`decode` needs no policy at all; it rebuilds whatever mix of values
and references it is handed.
"""

from __future__ import annotations

from typing import Any, Callable

from .errors import EncodingError, ExportError, MalformedWireTree
from .policy import BY_REFERENCE, BY_VALUE, Mechanism
from .proxy import is_proxy, reference_of
from .typeregistry import TypeRegistry, default_types
from .wire import (
    INT64_MAX, INT64_MIN, BackRef, ListNode, Null, Prim, RefNode, RemoteReference, ValueNode,
    WireNode,
)

Decide = Callable[[str, int], Mechanism]
Export = Callable[[Any], RemoteReference]


def _all_by_value(type_name: str, depth: int) -> Mechanism:
    return BY_VALUE


def _no_export(obj) -> RemoteReference:
    raise ExportError("no export capability available for by-reference encoding")


def encode(root, decide: Decide = _all_by_value, export: Export = _no_export,
           types: TypeRegistry = default_types) -> WireNode:
    return _Encoder(decide, export, types).encode(root, 0, "root")


class _Encoder:
    def __init__(self, decide, export, types):
        self.decide = decide
        self.export = export
        self.types = types
        self.seen: dict[int, int] = {}
        self.keepalive: list = []  # pins ids in ``seen`` for the encoder's lifetime
        self.open_lists: set[int] = set()
        self.next_index = 0

    def encode(self, value, depth: int, path: str) -> WireNode:
        if value is None:
            return Null()
        if isinstance(value, bool):
            return Prim("bool", value)
        if isinstance(value, int):
            if not INT64_MIN <= value <= INT64_MAX:
                raise EncodingError(f"{path}: integer {value} does not fit in int64")
            return Prim("int64", value)
        if isinstance(value, float):
            return Prim("float64", value)
        if isinstance(value, str):
            return Prim("string", value)
        if isinstance(value, (list, tuple)):
            return self.encode_list(value, depth, path)
        if is_proxy(value):
            # already a reference; nothing local to copy
            return RefNode(reference_of(value))
        return self.encode_object(value, depth, path)

    def encode_list(self, items, depth, path) -> ListNode:
        key = id(items)
        if key in self.open_lists:
            raise EncodingError(f"{path}: list contains itself")
        self.open_lists.add(key)
        try:
            return ListNode(tuple(self.encode(v, depth, f"{path}[{i}]")
                                  for i, v in enumerate(items)))
        finally:
            self.open_lists.discard(key)

    def encode_object(self, obj, depth, path) -> WireNode:
        info = self.types.info_for(obj)
        if info is None:
            raise EncodingError(f"{path}: {type(obj).__qualname__} is not a registered type")
        index = self.seen.get(id(obj))
        if index is not None:
            return BackRef(index)
        mechanism = self.decide(info.name, depth)
        if mechanism == BY_REFERENCE:
            try:
                return RefNode(self.export(obj))
            except ExportError:
                raise
            except Exception as exc:
                raise ExportError(f"{path}: could not export {info.name}: {exc}") from exc
        if mechanism != BY_VALUE:
            raise EncodingError(f"{path}: mechanism {mechanism} has no wire encoding")
        index = self.next_index
        self.next_index += 1
        self.seen[id(obj)] = index
        self.keepalive.append(obj)
        fields = {name: self.encode(v, depth + 1, f"{path}.{name}")
                  for name, v in info.get_fields(obj)}
        return ValueNode(info.name, index, fields)


def decode(node: WireNode, proxy_factory: Callable[[RemoteReference], Any],
           types: TypeRegistry = default_types):
    return _Decoder(proxy_factory, types).decode(node)


class _Decoder:
    def __init__(self, proxy_factory, types):
        self.proxy_factory = proxy_factory
        self.types = types
        self.table: dict[int, Any] = {}

    def decode(self, node: WireNode):
        if isinstance(node, Prim):
            return node.value
        if isinstance(node, Null):
            return None
        if isinstance(node, ListNode):
            return [self.decode(e) for e in node.elements]
        if isinstance(node, RefNode):
            return self.proxy_factory(node.ref)
        if isinstance(node, BackRef):
            try:
                return self.table[node.index]
            except KeyError:
                raise MalformedWireTree(f"back-reference to unknown node {node.index}") from None
        if isinstance(node, ValueNode):
            info = self.types.named(node.type_name)
            if node.index in self.table:
                raise MalformedWireTree(f"node index {node.index} used twice")
            unknown = set(node.fields) - set(info.fields)
            if unknown:
                raise MalformedWireTree(f"{node.type_name} has no fields {sorted(unknown)}")
            obj = info.allocate()
            self.table[node.index] = obj
            info.populate(obj, {name: self.decode(v) for name, v in node.fields.items()})
            return obj
        raise MalformedWireTree(f"not a wire node: {node!r}")
