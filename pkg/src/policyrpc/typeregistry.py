"""Registry of encodable, dispatchable types.

Objects cross address spaces only if their class is registered here.  A
registration gives the wire type name, the ordered field list used for
by-value encoding, and the method table used to dispatch remote calls.
"""

from __future__ import annotations

import dataclasses
import inspect
import threading
from dataclasses import dataclass

from .errors import NoSuchMethod, UnknownType


@dataclass(frozen=True)
class TypeInfo:
    cls: type
    name: str
    fields: tuple[str, ...]
    methods: frozenset[str]

    def allocate(self):
        """Make an empty instance, to be filled in field by field."""
        return self.cls.__new__(self.cls)

    def populate(self, obj, values: dict) -> None:
        for name, value in values.items():
            object.__setattr__(obj, name, value)

    def get_fields(self, obj) -> list[tuple[str, object]]:
        return [(name, getattr(obj, name)) for name in self.fields]


def _public_methods(cls) -> frozenset[str]:
    return frozenset(
        name for name, member in inspect.getmembers(cls, callable)
        if not name.startswith("_") and not inspect.isclass(member)
    )


class TypeRegistry:
    def __init__(self):
        self._by_class: dict[type, TypeInfo] = {}
        self._by_name: dict[str, TypeInfo] = {}
        self._lock = threading.Lock()

    def register(self, cls: type, name: str | None = None, fields=None, methods=None) -> type:
        if name is None:
            name = f"{cls.__module__}.{cls.__qualname__}"
        if fields is None:
            if not dataclasses.is_dataclass(cls):
                raise TypeError(f"{cls.__name__}: give fields= or make it a dataclass")
            fields = [f.name for f in dataclasses.fields(cls)]
        methods = _public_methods(cls) if methods is None else frozenset(methods)
        info = TypeInfo(cls, name, tuple(fields), methods)
        with self._lock:
            other = self._by_name.get(name)
            if other is not None and other.cls is not cls:
                raise ValueError(f"type name {name!r} already registered for {other.cls!r}")
            self._by_class[cls] = info
            self._by_name[name] = info
        return cls

    def info_for(self, obj) -> TypeInfo | None:
        """Registration for exactly ``type(obj)``; subclasses don't inherit it."""
        return self._by_class.get(type(obj))

    def named(self, name: str) -> TypeInfo:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownType(f"no registered type named {name!r}") from None

    def method(self, obj, method_name: str):
        info = self.info_for(obj)
        if info is None or method_name not in info.methods:
            raise NoSuchMethod(f"{type(obj).__name__} has no remote method {method_name!r}")
        return getattr(obj, method_name)

    def __contains__(self, cls) -> bool:
        return cls in self._by_class


#: Process-wide registry used when a space isn't given its own.
default_types = TypeRegistry()


def encodable(name: str | None = None, *, fields=None, methods=None, registry=None):
    """Class decorator registering the class for transmission.

    >>> @encodable("Point")
    ... @dataclasses.dataclass
    ... class Point:
    ...     x: int
    ...     y: int
    """
    def wrap(cls):
        return (registry or default_types).register(cls, name, fields, methods)
    return wrap
