import itertools

import pytest
from hypothesis import given, strategies as st

import policyrpc as pr
from policyrpc.policy import CallSite, PolicyRule, Role, RuleKind
from policyrpc.resolution import TransmissionDecision

from helpers import decision_tuple, oracle_resolve
from test_policy import rules as rule_strategy, sites as site_strategy


@pytest.mark.parametrize("kind, ov, level", [
    (RuleKind.PARAMETER, False, 1),
    (RuleKind.METHOD, False, 2),
    (RuleKind.CLASS, False, 3),
    (RuleKind.PARAMETER, True, 4),
    (RuleKind.METHOD, True, 5),
    (RuleKind.CLASS, True, 6),
    (RuleKind.DEFAULT, True, 7),
    (RuleKind.DEFAULT, False, 7),
])
def test_hierarchy_level(kind, ov, level):
    assert pr.hierarchy_level(kind, ov) == level


def test_param_beats_class_among_overridables():
    m = pr.PolicyManager()
    m.set_class_policy("X", pr.BY_VALUE, True)
    m.set_param_policy("X", "m", 1, pr.BY_REFERENCE, True)
    d = m.get_transmission_policy("X", "m", 1, "X", 0)
    assert (d.mechanism, d.dominant_kind, d.dominant_level) == (pr.BY_REFERENCE,
                                                                 RuleKind.PARAMETER, 4)


def test_non_overridable_method_beats_non_overridable_class():
    m = pr.PolicyManager()
    m.set_class_policy("X", pr.BY_VALUE, False)
    m.set_method_policy("X", "m", pr.BY_REFERENCE, False)
    d = m.get_transmission_policy("X", "m", 0, "X", 0)
    assert (d.mechanism, d.dominant_level) == (pr.BY_REFERENCE, 2)


def test_non_overridable_class_beats_overridable_param():
    m = pr.PolicyManager()
    m.set_class_policy("X", pr.BY_REFERENCE, False)
    m.set_param_policy("X", "m", 0, pr.BY_VALUE, True)
    d = m.get_transmission_policy("X", "m", 0, "X", 0)
    expected = oracle_resolve(m.rules(), m.default,
                              CallSite("X", "m", Role.ARGUMENT, "X", 0, 0))
    assert decision_tuple(d) == expected == ("BY_REFERENCE", "class", 3)


def test_return_method_rule():
    m = pr.PolicyManager()
    m.set_method_policy("X", "m", pr.BY_REFERENCE, True)
    d = m.get_return_transmission_policy("X", "m", "Y", 0)
    assert (d.mechanism, d.dominant_level) == (pr.BY_REFERENCE, 5)


def test_return_empty_store_is_default_by_value():
    d = pr.PolicyManager().get_return_transmission_policy("X", "m", "Y", 0)
    assert d == TransmissionDecision(pr.BY_VALUE, RuleKind.DEFAULT, 7, True)


def test_return_class_non_overridable_beats_method_overridable():
    m = pr.PolicyManager()
    m.set_method_policy("X", "m", pr.BY_VALUE, True)
    m.set_class_policy("Y", pr.BY_REFERENCE, False)
    d = m.get_return_transmission_policy("X", "m", "Y", 0)
    expected = oracle_resolve(m.rules(), m.default, CallSite("X", "m", Role.RETURN, "Y", 0))
    assert decision_tuple(d) == expected == ("BY_REFERENCE", "class", 3)


def test_return_ignores_param_rules():
    m = pr.PolicyManager()
    m.set_param_policy("X", "m", 0, pr.BY_REFERENCE, False)
    assert m.get_return_transmission_policy("X", "m", "X").dominant_kind is RuleKind.DEFAULT


def test_custom_default():
    m = pr.PolicyManager()
    m.set_default_policy(pr.BY_REFERENCE)
    d = m.get_transmission_policy("X", "m", 0, "X")
    assert (d.mechanism, d.dominant_level) == (pr.BY_REFERENCE, 7)
    m.clear_rules()
    assert m.get_transmission_policy("X", "m", 0, "X").dominant_kind is RuleKind.DEFAULT


def test_decision_invariants():
    with pytest.raises(ValueError):
        TransmissionDecision(pr.BY_VALUE, RuleKind.CLASS, 7)
    with pytest.raises(ValueError):
        TransmissionDecision(pr.BY_VALUE, RuleKind.DEFAULT, 3)
    d = TransmissionDecision(pr.BY_REFERENCE, RuleKind.METHOD, 2, False)
    assert TransmissionDecision.from_dict(d.to_dict()) == d


@pytest.mark.parametrize("kind, role", [
    (RuleKind.METHOD, Role.ARGUMENT),
    (RuleKind.METHOD, Role.RETURN),
    (RuleKind.PARAMETER, Role.ARGUMENT),
])
@pytest.mark.parametrize("depth", [0, 1, 3])
def test_depth_monotonicity(kind, depth, role):
    m = pr.PolicyManager()
    if kind is RuleKind.METHOD:
        m.set_method_policy("X", "m", pr.BY_REFERENCE, True, depth)
    else:
        m.set_param_policy("X", "m", 0, pr.BY_REFERENCE, True, depth)
    param = 0 if role is Role.ARGUMENT else None
    for d in range(depth + 4):
        decision = m.resolve(CallSite("X", "m", role, "Z", d, param))
        if d <= depth:
            assert decision.dominant_kind is kind
        else:
            assert decision.dominant_kind is RuleKind.DEFAULT


def test_exact_class_property():
    m = pr.PolicyManager()
    m.set_class_policy("t.Entry", pr.BY_REFERENCE, False)
    d = m.get_transmission_policy("S", "m", 0, "t.SpecialEntry", 0)
    assert d.dominant_kind is RuleKind.DEFAULT


@given(st.lists(rule_strategy(), max_size=8), site_strategy())
def test_resolution_matches_oracle(rule_list, site):
    m = pr.PolicyManager()
    for r in rule_list:
        m.add_rule(r)
    first = m.resolve(site)
    assert decision_tuple(first) == oracle_resolve(m.rules(), m.default, site)
    assert m.resolve(site) == first  # deterministic


def test_resolve_rules_accepts_same_kind_both_flags():
    site = CallSite("X", "m", Role.ARGUMENT, "X", 0, 0)
    rules = [PolicyRule(RuleKind.CLASS, "X", pr.BY_VALUE, True),
             PolicyRule(RuleKind.CLASS, "X", pr.BY_REFERENCE, False)]
    for order in itertools.permutations(rules):
        d = pr.resolve_rules(order, pr.BY_VALUE, site)
        assert (d.mechanism, d.dominant_level) == (pr.BY_REFERENCE, 3)
