"""Distributed objects whose parameter passing is chosen by policy rules.

Whether an object crosses an address-space boundary by value or by
reference is not fixed by its class.  Each address space keeps a set of
class, method and parameter rules; the serializer consults them for every
object node it writes, and the rules can be changed at any time.
"""

from .codec import decode, encode
from .errors import (
    EncodingError, ExportError, FrameTooLarge, InvalidSelector, MalformedWireTree, NoSuchMethod,
    NotDispatchable, PolicyRPCError, ProtocolError, RemoteError, StaleReference, TransportError,
    UnknownMechanism, UnknownType, Unreachable,
)
from .negotiation import ManagerMode, PolicyManager, combine
from .policy import (
    BY_REFERENCE, BY_VALUE, UNBOUNDED, CallSite, Mechanism, PolicyRule, Role, RuleKind, RuleStore,
    get_mechanism, register_mechanism,
)
from .proxy import RemoteProxy, invoke_remote, is_proxy, reference_of
from .resolution import TransmissionDecision, hierarchy_level, resolve, resolve_rules
from .rpc import Connection, PolicyControl, Space
from .transport import in_memory_pair, tcp_connect, tcp_listen
from .typeregistry import TypeRegistry, default_types, encodable
from .wire import RemoteReference

__version__ = "0.1.0"

COOPERATIVE = ManagerMode.COOPERATIVE
AUTONOMOUS = ManagerMode.AUTONOMOUS


def connect_in_memory(a: Space, b: Space) -> tuple[Connection, Connection]:
    """Join two spaces with an in-process channel; returns (a's side, b's side)."""
    end_a, end_b = in_memory_pair()
    return a.connect(end_a), b.connect(end_b)
