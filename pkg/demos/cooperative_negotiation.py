"""Two policy managers disagree.  Who wins?

The lower hierarchy level wins.  On a tie, the callee decides for
arguments and the caller for return values.  An autonomous manager never
asks.
"""

from dataclasses import dataclass

import policyrpc as pr
from policyrpc.negotiation import combine
from policyrpc.policy import Role
from policyrpc.resolution import TransmissionDecision


@pr.encodable("demo.Doc")
@dataclass
class Doc:
    text: str = ""

    def edit(self, text):
        self.text = text


class Editor:
    def rewrite(self, doc, text):
        doc.edit(text)


pr.default_types.register(Editor, "demo.Editor", fields=())


def run(mode):
    caller, callee = pr.Space(mode=mode, name="caller"), pr.Space(name="callee")
    conn, _ = pr.connect_in_memory(caller, callee)
    callee.bind("editor", Editor())
    caller.policy.set_class_policy("demo.Doc", pr.BY_VALUE)                           # level 6
    callee.policy.set_param_policy("demo.Editor", "rewrite", 0, pr.BY_REFERENCE)   # level 4
    doc = Doc("draft")
    conn.lookup("editor").rewrite(doc, "final")
    print(f"{mode:<12} caller's doc: {doc.text!r}  diagnostics: {dict(caller.policy.diagnostics)}")
    caller.close()
    callee.close()


run("cooperative")   # asks the callee, whose level 4 beats the local level 6
run("autonomous")    # local rule only

# combine() on its own: at equal levels the peer wins in both of these seats
mine = TransmissionDecision.from_rule(pr.PolicyRule(pr.RuleKind.CLASS, "X", pr.BY_VALUE))
theirs = TransmissionDecision.from_rule(pr.PolicyRule(pr.RuleKind.CLASS, "X", pr.BY_REFERENCE))
print("tie, argument, I am the caller:", combine(mine, theirs, Role.ARGUMENT, True))
print("tie, return, I am the callee:  ", combine(mine, theirs, Role.RETURN, False))
