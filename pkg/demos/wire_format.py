"""What an encoded object graph looks like on the wire."""

import json
from dataclasses import dataclass, field

import policyrpc as pr
from policyrpc import wire


@pr.encodable("demo.Person")
@dataclass
class Person:
    name: str
    friends: list = field(default_factory=list)


ann, bob = Person("ann"), Person("bob")
ann.friends.append(bob)
bob.friends.append(ann)            # a cycle
group = [ann, bob, ann]            # and aliasing

tree = pr.encode(group)
print(json.dumps(wire.to_json(tree), indent=1))

back = pr.decode(wire.from_json(wire.to_json(tree)), proxy_factory=None)
print("cycle kept:", back[0].friends[0].friends[0] is back[0])
print("alias kept:", back[0] is back[2])

# mark Person by reference: the walk stops at the first Person and exports it
space = pr.Space()
def decide(actual, depth):
    return pr.BY_REFERENCE if actual == "demo.Person" else pr.BY_VALUE
print(json.dumps(wire.to_json(pr.encode(ann, decide, space.export))))
space.close()
