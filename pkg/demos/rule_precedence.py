"""Walk through the seven levels of the rule hierarchy on one call site."""

import policyrpc as pr

m = pr.PolicyManager()

def show(label):
    d = m.get_transmission_policy("Mailer", "send", 0, "Message")
    print(f"{label:<44} -> {d.mechanism} (level {d.dominant_level}, {d.dominant_kind.value})")

show("empty store")                                   # level 7, the default
m.set_class_policy("Message", pr.BY_REFERENCE)        # 6
show("overridable class rule")
m.set_method_policy("Mailer", "send", pr.BY_VALUE)    # 5
show("overridable method rule")
m.set_param_policy("Mailer", "send", 0, pr.BY_REFERENCE)  # 4
show("overridable parameter rule")

# a non-overridable class rule outranks every overridable rule
m.set_class_policy("Message", pr.BY_VALUE, overridable=False)      # 3
show("class rule made non-overridable")
m.set_method_policy("Mailer", "send", pr.BY_REFERENCE, overridable=False)  # 2
show("method rule made non-overridable")
m.set_param_policy("Mailer", "send", 0, pr.BY_VALUE, overridable=False)    # 1
show("parameter rule made non-overridable")

# class rules match the exact runtime type only
d = m.get_transmission_policy("Other", "op", 0, "Message")
print("class rule on an unrelated method:", d.mechanism, d.dominant_level)
d = m.get_transmission_policy("Other", "op", 0, "UrgentMessage")
print("subclass is not matched:", d.mechanism, d.dominant_level)

# depth bounds: the rule governs the argument and its fields, not further down
m.clear_rules()
m.set_method_policy("Mailer", "send", pr.BY_REFERENCE, depth=1)
for depth in range(4):
    d = m.get_transmission_policy("Mailer", "send", 0, "Message", depth)
    print(f"depth {depth}: {d.mechanism}")

print("rules as JSON:", m.dump_rules())
