"""The address book on a desktop and a PDA, run over real TCP.

While connected the PDA edits desktop entries through references; before
disconnecting it switches to copies so it can keep working offline.
"""

import policyrpc as pr
from policyrpc.scenario import run_pda_scenario, sample_book

report = run_pda_scenario("tcp")
print(report)

# the same idea by hand
desktop = pr.Space(mode="cooperative", name="desktop")
desktop.bind("address-book", sample_book())
server = desktop.serve_tcp()
host, port = server.address

pda = pr.Space(name="pda")
conn = pda.connect_tcp(f"{host}:{port}")
book = conn.lookup("address-book")

desktop.policy.set_class_policy("AddressBookEntry", pr.BY_REFERENCE)
live = book.get_entry("Alice")
live.set_phone("555-9999")
print("connected edit reached the desktop:", book.get_entry("Alice").get_phone())

desktop.policy.set_class_policy("AddressBookEntry", pr.BY_VALUE)
offline = book.get_entry("Bob")
pda.close()
offline.set_phone("555-0000")
print("offline copy still usable:", offline.name, offline.phone)
desktop.close()
