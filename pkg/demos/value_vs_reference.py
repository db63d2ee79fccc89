"""The same method, called twice: once copying its argument, once sharing it.

The class of the argument never changes.  Only the caller's rule does.
"""

from dataclasses import dataclass

import policyrpc as pr


@pr.encodable("demo.Counter")
@dataclass
class Counter:
    value: int = 0

    def bump(self):
        self.value += 1
        return self.value


class Service:
    def bump_it(self, counter):
        # a copy or a proxy, the service can't tell and doesn't care
        return counter.bump()


pr.default_types.register(Service, "demo.Service", fields=())

server, client = pr.Space(name="server"), pr.Space(name="client")
to_server, _ = pr.connect_in_memory(client, server)
server.bind("svc", Service())
svc = to_server.lookup("svc")

mine = Counter()
print("service saw", svc.bump_it(mine), "| my counter is still", mine.value)   # by value

client.policy.set_class_policy("demo.Counter", pr.BY_REFERENCE)
print("service saw", svc.bump_it(mine), "| my counter is now", mine.value)     # by reference

# return values follow the server's rules
@pr.encodable("demo.Box")
@dataclass
class Box:
    counter: Counter


class Shop:
    def __init__(self):
        self.stock = Box(Counter(10))

    def box(self):
        return self.stock


pr.default_types.register(Shop, "demo.Shop", fields=())
the_shop = Shop()
server.bind("shop", the_shop)
shop = to_server.lookup("shop")

copy = shop.box()
print("returned by value:", type(copy).__name__, copy.counter.value)

# by value at depth 0, by reference one hop down
server.policy.set_method_policy("demo.Shop", "box", pr.BY_VALUE, depth=0)
server.policy.set_class_policy("demo.Counter", pr.BY_REFERENCE)
mixed = shop.box()
print("box is a", type(mixed).__name__, "holding a proxy:", pr.is_proxy(mixed.counter))
mixed.counter.bump()
print("server's counter after remote bump:", the_shop.stock.counter.value)

client.close()
server.close()
