"""The address-book / PDA demonstration.

A desktop space holds an address book.  While connected, the PDA fetches
entries by reference, so its edits land directly on the desktop copy.
Before going offline it flips one class rule and refetches; the entries now
arrive by value and keep working after the link is gone.  Nothing in the
address-book classes changes between the two phases.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

from .negotiation import ManagerMode
from .policy import BY_REFERENCE, BY_VALUE
from .proxy import is_proxy
from .rpc import Space
from .transport import in_memory_pair
from .typeregistry import encodable
from .errors import Unreachable


@encodable("Address")
@dataclass
class Address:
    street: str
    city: str


@encodable("AddressBookEntry")
@dataclass
class AddressBookEntry:
    name: str
    phone: str
    address: Address

    def get_name(self):
        return self.name

    def get_phone(self):
        return self.phone

    def set_phone(self, phone):
        self.phone = phone

    def get_address(self):
        return self.address

    def set_address(self, address):
        self.address = address


@encodable("AddressBook")
@dataclass
class AddressBook:
    entries: list = field(default_factory=list)

    def add(self, entry):
        self.entries.append(entry)

    def get_entry(self, name):
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def names(self):
        return [e.name for e in self.entries]

    def size(self):
        return len(self.entries)


def sample_book() -> AddressBook:
    return AddressBook([
        AddressBookEntry("Alice", "555-0100", Address("1 North St", "St Andrews")),
        AddressBookEntry("Bob", "555-0101", Address("2 Market St", "Dundee")),
    ])


@dataclass
class ScenarioReport:
    results: list[tuple[str, bool, str]] = field(default_factory=list)
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(ok for _, ok, _ in self.results)

    @property
    def failures(self) -> list[str]:
        return [name for name, ok, _ in self.results if not ok]

    def lines(self) -> list[str]:
        out = []
        for name, ok, detail in self.results:
            line = f"{'PASS' if ok else 'FAIL'} {name}"
            if detail and not ok:
                line += f"  ({detail})"
            out.append(line)
        return out

    def __str__(self):
        return "\n".join(self.lines())


class ScenarioScript:
    """Ordered named steps.  ``set-policy``, ``call`` and ``disconnect``
    steps only act; ``assert-*`` steps return a truth value that is recorded.
    A step that raises fails the run and stops it.
    """

    STEP_KINDS = ("set-policy", "call", "assert-visible", "assert-copy", "disconnect")

    def __init__(self):
        self.steps: list[tuple[str, str, Callable]] = []

    def step(self, kind: str, name: str):
        if kind not in self.STEP_KINDS:
            raise ValueError(f"unknown step kind {kind!r}")

        def register(fn):
            self.steps.append((kind, name, fn))
            return fn
        return register

    def run(self, report: ScenarioReport | None = None) -> ScenarioReport:
        report = report or ScenarioReport()
        for kind, name, fn in self.steps:
            try:
                outcome = fn()
            except Exception as exc:
                report.results.append((name, False, f"{type(exc).__name__}: {exc}"))
                return report
            if kind.startswith("assert"):
                report.results.append((name, bool(outcome), ""))
        return report


def _link(desktop: Space, pda: Space, transport: str):
    if transport == "tcp":
        server = desktop.serve_tcp("127.0.0.1:0")
        conn = pda.connect_tcp(server.address)
        return conn, server
    if transport != "in_memory":
        raise ValueError(f"unknown transport {transport!r}")
    pda_end, desk_end = in_memory_pair()
    desktop.connect(desk_end)
    return pda.connect(pda_end), None


def run_pda_scenario(transport: str = "in_memory",
                     pda_mode: ManagerMode | str = ManagerMode.COOPERATIVE) -> ScenarioReport:
    """Run both phases of the PDA use case and report every assertion."""
    started = time.perf_counter()
    desktop = Space(ManagerMode.COOPERATIVE, name="desktop")
    pda = Space(pda_mode, name="pda")
    book = sample_book()
    desktop.bind("address-book", book)
    alice = book.get_entry("Alice")
    conn, server = _link(desktop, pda, transport)
    state = {}
    script = ScenarioScript()

    @script.step("set-policy", "connected: entries by reference")
    def _():
        pda.policy.set_class_policy("AddressBookEntry", BY_REFERENCE, True)

    @script.step("call", "fetch Alice by reference")
    def _():
        state["book"] = conn.lookup("address-book")
        state["live"] = state["book"].get_entry("Alice")

    @script.step("assert-visible", "connected fetch yields a proxy")
    def _():
        return is_proxy(state["live"])

    @script.step("call", "edit phone through proxy")
    def _():
        state["live"].set_phone("555-0199")

    @script.step("assert-visible", "desktop sees PDA edit without refetch")
    def _():
        return alice.phone == "555-0199"

    @script.step("call", "desktop edits its entry")
    def _():
        alice.phone = "555-0200"

    @script.step("assert-visible", "PDA proxy sees desktop edit")
    def _():
        return state["live"].get_phone() == "555-0200"

    @script.step("set-policy", "going offline: entries by value")
    def _():
        pda.policy.set_class_policy("AddressBookEntry", BY_VALUE, True)

    @script.step("call", "refetch Alice by value")
    def _():
        state["copy"] = state["book"].get_entry("Alice")

    @script.step("assert-copy", "refetch yields a local copy")
    def _():
        copy = state["copy"]
        return isinstance(copy, AddressBookEntry) and copy.phone == "555-0200"

    @script.step("assert-visible", "rule flip leaves held proxy by reference")
    def _():
        return is_proxy(state["live"]) and state["live"].get_phone() == "555-0200"

    @script.step("call", "desktop edits again")
    def _():
        alice.phone = "555-0300"

    @script.step("assert-copy", "desktop edit invisible on PDA copy")
    def _():
        return state["copy"].phone == "555-0200"

    @script.step("call", "PDA edits its copy")
    def _():
        state["copy"].set_phone("555-0400")
        state["copy"].set_address(Address("3 Harbour Rd", "Anstruther"))

    @script.step("assert-copy", "PDA copy edit invisible on desktop")
    def _():
        return alice.phone == "555-0300" and alice.address.city == "St Andrews"

    @script.step("disconnect", "disconnect PDA")
    def _():
        conn.close()
        if server is not None:
            server.close()

    @script.step("assert-copy", "copy usable offline")
    def _():
        copy = state["copy"]
        return (copy.get_name() == "Alice" and copy.get_phone() == "555-0400"
                and copy.get_address().city == "Anstruther")

    @script.step("assert-visible", "proxy unusable offline")
    def _():
        try:
            state["live"].get_phone()
        except Unreachable:
            return True
        return False

    try:
        report = script.run()
    finally:
        pda.close()
        desktop.close()
    report.elapsed = time.perf_counter() - started
    return report
