"""Local transmission policy evaluation over a rule store snapshot."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .policy import (
    CallSite, Mechanism, PolicyRule, RuleKind, StoreSnapshot, get_mechanism, rule_applies,
)

_LEVELS = {
    (RuleKind.PARAMETER, False): 1,
    (RuleKind.METHOD, False): 2,
    (RuleKind.CLASS, False): 3,
    (RuleKind.PARAMETER, True): 4,
    (RuleKind.METHOD, True): 5,
    (RuleKind.CLASS, True): 6,
}
DEFAULT_LEVEL = 7


def hierarchy_level(kind: RuleKind, overridable: bool) -> int:
    """Precedence of a rule: 1 is followed first, 7 is the default policy.

    Non-overridable rules of any kind outrank every overridable rule; within
    each band the order is parameter, method, class.
    """
    if kind is RuleKind.DEFAULT:
        return DEFAULT_LEVEL
    return _LEVELS[kind, bool(overridable)]


@dataclass(frozen=True)
class TransmissionDecision:
    mechanism: Mechanism
    dominant_kind: RuleKind
    dominant_level: int
    overridable: bool = True

    def __post_init__(self):
        if (self.dominant_kind is RuleKind.DEFAULT) != (self.dominant_level == DEFAULT_LEVEL):
            raise ValueError(f"inconsistent decision {self!r}")
        if not 1 <= self.dominant_level <= DEFAULT_LEVEL:
            raise ValueError(f"level out of range: {self.dominant_level}")

    @classmethod
    def default(cls, mechanism: Mechanism) -> TransmissionDecision:
        return cls(mechanism, RuleKind.DEFAULT, DEFAULT_LEVEL, True)

    @classmethod
    def from_rule(cls, rule: PolicyRule) -> TransmissionDecision:
        return cls(rule.mechanism, rule.kind, hierarchy_level(rule.kind, rule.overridable),
                   rule.overridable)

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism.name,
            "kind": self.dominant_kind.value,
            "level": self.dominant_level,
            "overridable": self.overridable,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> TransmissionDecision:
        return cls(get_mechanism(data["mechanism"]), RuleKind.parse(data["kind"]),
                   int(data["level"]), bool(data["overridable"]))


def resolve_rules(rules: Iterable[PolicyRule], default: Mechanism,
                  site: CallSite) -> TransmissionDecision:
    """Dominant rule among ``rules`` for ``site``.

    ``rules`` may be any collection, including one holding both an
    overridable and a non-overridable rule of the same kind.  Equal-level
    candidates keep the first one seen.
    """
    best = None
    best_level = DEFAULT_LEVEL
    for rule in rules:
        if not rule_applies(rule, site):
            continue
        level = hierarchy_level(rule.kind, rule.overridable)
        if level < best_level:
            best, best_level = rule, level
    if best is None:
        return TransmissionDecision.default(default)
    return TransmissionDecision.from_rule(best)


def resolve(snapshot: StoreSnapshot, site: CallSite) -> TransmissionDecision:
    """Pick the dominant stored rule for ``site``, or the default when none applies."""
    return resolve_rules(snapshot.lookup_applicable(site), snapshot.default, site)
