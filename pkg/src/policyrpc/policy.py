"""Rule vocabulary and the per-space rule store.

Every address space owns one :class:`RuleStore`.  Rules are keyed by
(kind, class, method, param); setting a rule with an existing key replaces
it.  Writers swap in a fresh mapping under a lock, so readers always see a
consistent snapshot without locking.
"""

from __future__ import annotations

import enum
import json
import threading
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import InvalidSelector, UnknownMechanism

#: Depth bound meaning "the whole closure of the argument".
UNBOUNDED = None


@dataclass(frozen=True)
class Mechanism:
    """A parameter passing mechanism, identified by name."""

    name: str

    def __str__(self) -> str:
        return self.name


_mechanisms: dict[str, Mechanism] = {}
_mechanisms_lock = threading.Lock()


def register_mechanism(name: str) -> Mechanism:
    """Register (or fetch) the mechanism called ``name``."""
    if not name:
        raise ValueError("mechanism name must be non-empty")
    with _mechanisms_lock:
        return _mechanisms.setdefault(name, Mechanism(name))


def get_mechanism(mechanism: Mechanism | str) -> Mechanism:
    """Return the registered mechanism for a name or instance.

    Raises UnknownMechanism if nothing by that name is registered.
    """
    name = mechanism.name if isinstance(mechanism, Mechanism) else mechanism
    try:
        return _mechanisms[name]
    except KeyError:
        raise UnknownMechanism(name) from None


def registered_mechanisms() -> tuple[Mechanism, ...]:
    return tuple(_mechanisms.values())


BY_VALUE = register_mechanism("BY_VALUE")
BY_REFERENCE = register_mechanism("BY_REFERENCE")


class RuleKind(enum.Enum):
    PARAMETER = "param"
    METHOD = "method"
    CLASS = "class"
    DEFAULT = "default"  # decision provenance only, never stored

    @classmethod
    def parse(cls, text: str) -> RuleKind:
        text = text.strip().lower()
        if text == "parameter":
            text = "param"
        return cls(text)


class Role(enum.Enum):
    ARGUMENT = "argument"
    RETURN = "return"


@dataclass(frozen=True)
class PolicyRule:
    kind: RuleKind
    class_name: str
    mechanism: Mechanism
    overridable: bool = True
    method_name: str | None = None
    param_index: int | None = None
    depth: int | None = UNBOUNDED

    def __post_init__(self):
        if self.kind is RuleKind.DEFAULT:
            raise InvalidSelector("DEFAULT is not a storable rule kind")
        if not self.class_name:
            raise InvalidSelector("class name must be non-empty")
        if self.kind is RuleKind.CLASS:
            if self.method_name is not None or self.param_index is not None:
                raise InvalidSelector("class rules take no method or parameter")
            if self.depth is not UNBOUNDED:
                raise InvalidSelector("class rules take no depth")
        else:
            if not self.method_name:
                raise InvalidSelector(f"{self.kind.value} rules need a method name")
            if self.depth is not UNBOUNDED and (
                not isinstance(self.depth, int) or self.depth < 0
            ):
                raise InvalidSelector(f"depth must be >= 0 or unbounded, got {self.depth!r}")
        if self.kind is RuleKind.METHOD and self.param_index is not None:
            raise InvalidSelector("method rules take no parameter index")
        if self.kind is RuleKind.PARAMETER:
            if not isinstance(self.param_index, int) or isinstance(self.param_index, bool):
                raise InvalidSelector("parameter rules need an integer index")
            if self.param_index < 0:
                raise InvalidSelector(f"parameter index must be >= 0, got {self.param_index}")

    @property
    def key(self) -> tuple:
        return (self.kind, self.class_name, self.method_name, self.param_index)

    def reaches(self, depth: int) -> bool:
        return self.depth is UNBOUNDED or depth <= self.depth

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "class": self.class_name,
            "method": self.method_name,
            "param": self.param_index,
            "mechanism": self.mechanism.name,
            "overridable": self.overridable,
            "depth": self.depth,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> PolicyRule:
        try:
            kind = RuleKind.parse(data["kind"])
            return cls(
                kind=kind,
                class_name=data["class"],
                mechanism=get_mechanism(data["mechanism"]),
                overridable=bool(data.get("overridable", True)),
                method_name=data.get("method"),
                param_index=data.get("param"),
                depth=data.get("depth"),
            )
        except (KeyError, ValueError) as exc:
            raise InvalidSelector(f"bad rule object {dict(data)!r}: {exc}") from None


@dataclass(frozen=True)
class CallSite:
    """Where an object node is being transmitted.

    ``class_name`` is the type the method is invoked on; ``actual_class_name``
    is the runtime type of the node being serialized.  Depth 0 is the
    argument (or return value) itself.
    """

    class_name: str
    method_name: str
    role: Role
    actual_class_name: str
    depth: int = 0
    param_index: int | None = None

    def __post_init__(self):
        if self.depth < 0:
            raise InvalidSelector(f"depth must be >= 0, got {self.depth}")
        if self.role is Role.RETURN and self.param_index is not None:
            raise InvalidSelector("return sites have no parameter index")
        if self.role is Role.ARGUMENT and (self.param_index is None or self.param_index < 0):
            raise InvalidSelector("argument sites need a parameter index >= 0")

    def to_dict(self) -> dict:
        return {
            "class": self.class_name,
            "method": self.method_name,
            "role": self.role.value,
            "param": self.param_index,
            "actual": self.actual_class_name,
            "depth": self.depth,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> CallSite:
        try:
            return cls(
                class_name=data["class"],
                method_name=data["method"],
                role=Role(data["role"]),
                actual_class_name=data["actual"],
                depth=int(data.get("depth", 0)),
                param_index=data.get("param"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidSelector(f"bad call site {data!r}: {exc}") from None


def rule_applies(rule: PolicyRule, site: CallSite) -> bool:
    if rule.kind is RuleKind.CLASS:
        return rule.class_name == site.actual_class_name
    if rule.class_name != site.class_name or rule.method_name != site.method_name:
        return False
    if not rule.reaches(site.depth):
        return False
    if rule.kind is RuleKind.PARAMETER:
        return site.role is Role.ARGUMENT and rule.param_index == site.param_index
    return True


_KIND_ORDER = {RuleKind.PARAMETER: 0, RuleKind.METHOD: 1, RuleKind.CLASS: 2}


@dataclass(frozen=True)
class StoreSnapshot:
    rules: Mapping[tuple, PolicyRule]
    default: Mechanism

    def lookup_applicable(self, site: CallSite) -> list[PolicyRule]:
        found = [r for r in self.rules.values() if rule_applies(r, site)]
        found.sort(key=lambda r: (_KIND_ORDER[r.kind], not r.overridable))
        return found


class RuleStore:
    """Mutable, thread-safe database of policy rules for one address space."""

    def __init__(self, default: Mechanism | str = BY_VALUE):
        self._lock = threading.Lock()
        self._snapshot = StoreSnapshot(MappingProxyType({}), get_mechanism(default))

    def snapshot(self) -> StoreSnapshot:
        return self._snapshot

    def _update(self, put: Iterable[PolicyRule] = (), drop: Iterable[tuple] = (),
                default: Mechanism | None = None, clear: bool = False) -> bool:
        with self._lock:
            old = self._snapshot
            rules = {} if clear else dict(old.rules)
            existed = False
            for key in drop:
                existed = rules.pop(key, None) is not None or existed
            for rule in put:
                rules[rule.key] = rule
            self._snapshot = StoreSnapshot(MappingProxyType(rules), default or old.default)
            return existed

    def add_rule(self, rule: PolicyRule) -> None:
        get_mechanism(rule.mechanism)
        self._update(put=[rule])

    def set_class_policy(self, class_name: str, mechanism: Mechanism | str,
                         overridable: bool = True) -> None:
        self.add_rule(PolicyRule(RuleKind.CLASS, class_name, get_mechanism(mechanism),
                                 overridable))

    def set_method_policy(self, class_name: str, method_name: str,
                          mechanism: Mechanism | str, overridable: bool = True,
                          depth: int | None = UNBOUNDED) -> None:
        self.add_rule(PolicyRule(RuleKind.METHOD, class_name, get_mechanism(mechanism),
                                 overridable, method_name=method_name, depth=depth))

    def set_param_policy(self, class_name: str, method_name: str, param_index: int,
                         mechanism: Mechanism | str, overridable: bool = True,
                         depth: int | None = UNBOUNDED) -> None:
        self.add_rule(PolicyRule(RuleKind.PARAMETER, class_name, get_mechanism(mechanism),
                                 overridable, method_name=method_name,
                                 param_index=param_index, depth=depth))

    def set_default_policy(self, mechanism: Mechanism | str) -> None:
        self._update(default=get_mechanism(mechanism))

    @property
    def default(self) -> Mechanism:
        return self._snapshot.default

    def clear_rules(self) -> None:
        self._update(clear=True)

    def remove_rule(self, kind: RuleKind | str, class_name: str,
                    method_name: str | None = None, param_index: int | None = None) -> bool:
        """Remove the rule with the given selector; return whether it existed."""
        if isinstance(kind, str):
            kind = RuleKind.parse(kind)
        return self._update(drop=[(kind, class_name, method_name, param_index)])

    def rules(self) -> list[PolicyRule]:
        return list(self._snapshot.rules.values())

    def lookup_applicable(self, site: CallSite) -> list[PolicyRule]:
        return self._snapshot.lookup_applicable(site)

    def __len__(self) -> int:
        return len(self._snapshot.rules)

    # rule files

    def load_rules(self, rules: Iterable[Mapping]) -> int:
        parsed = [PolicyRule.from_dict(r) for r in rules]
        self._update(put=parsed)
        return len(parsed)

    def load_file(self, path: str | Path) -> int:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list):
            raise InvalidSelector(f"{path}: rule file must hold a JSON array")
        return self.load_rules(data)

    def dump_rules(self) -> list[dict]:
        return [r.to_dict() for r in self.rules()]
