"""Policy managers and cross-space policy agreement.

A :class:`PolicyManager` is the rule store of one address space plus the
evaluation entry points used during serialization.  A co-operative manager
asks the peer space for its dominant rule on the same call site and merges
the two answers with :func:`combine`; an autonomous one looks only at its
own rules.  Both kinds answer queries from peers.
"""

from __future__ import annotations

import enum
import logging
import threading
from collections import Counter
from typing import Protocol

from .policy import BY_VALUE, CallSite, Mechanism, Role, RuleStore
from .resolution import TransmissionDecision, resolve

log = logging.getLogger(__name__)

#: Seconds to wait for a peer's policy answer before using local rules alone.
QUERY_TIMEOUT = 2.0

# Queries and answers carry exactly the same data as sites and decisions.
PolicyQuery = CallSite
PolicyAnswer = TransmissionDecision

_PEER_DOWN = object()


class ManagerMode(enum.Enum):
    COOPERATIVE = "cooperative"
    AUTONOMOUS = "autonomous"


class PolicyPeer(Protocol):
    def query_policy(self, site: CallSite, timeout: float | None = None) -> TransmissionDecision:
        ...


def combine(serializer_side: TransmissionDecision, other_side: TransmissionDecision,
            role: Role, serializer_is_caller: bool) -> Mechanism:
    """Merge the serializing space's decision with the peer's.

    The lower hierarchy level wins outright.  On a tie the callee's rule is
    followed for arguments and the caller's for return values.
    """
    if serializer_side.dominant_level != other_side.dominant_level:
        winner = min(serializer_side, other_side, key=lambda d: d.dominant_level)
        return winner.mechanism
    if serializer_is_caller:
        caller, callee = serializer_side, other_side
    else:
        caller, callee = other_side, serializer_side
    return (callee if role is Role.ARGUMENT else caller).mechanism


class PolicyManager(RuleStore):
    """The single policy manager of an address space."""

    def __init__(self, mode: ManagerMode | str = ManagerMode.AUTONOMOUS,
                 default: Mechanism | str = BY_VALUE, query_timeout: float = QUERY_TIMEOUT):
        super().__init__(default)
        self.mode = ManagerMode(mode)
        self.query_timeout = query_timeout
        self.diagnostics = Counter()
        self._diag_lock = threading.Lock()

    @property
    def cooperative(self) -> bool:
        return self.mode is ManagerMode.COOPERATIVE

    def _count(self, key: str) -> None:
        with self._diag_lock:
            self.diagnostics[key] += 1

    def resolve(self, site: CallSite) -> TransmissionDecision:
        return resolve(self.snapshot(), site)

    def get_transmission_policy(self, class_name: str, method_name: str, param_index: int,
                                actual_class_name: str, depth: int = 0) -> TransmissionDecision:
        return self.resolve(CallSite(class_name, method_name, Role.ARGUMENT,
                                     actual_class_name, depth, param_index))

    def get_return_transmission_policy(self, class_name: str, method_name: str,
                                       actual_class_name: str,
                                       depth: int = 0) -> TransmissionDecision:
        return self.resolve(CallSite(class_name, method_name, Role.RETURN,
                                     actual_class_name, depth))

    def answer_query(self, query: PolicyQuery) -> PolicyAnswer:
        return self.resolve(query)

    def evaluate_for_transmission(self, site: CallSite, peer: PolicyPeer | None = None,
                                  cache: dict | None = None) -> Mechanism:
        """Decide the mechanism for an outgoing node at ``site``.

        ``cache`` memoizes peer answers for the lifetime of one call.
        """
        local = self.resolve(site)
        if not self.cooperative or peer is None:
            return local.mechanism
        if cache is None:
            cache = {}
        if cache.get(_PEER_DOWN):
            self._count("peer_fallbacks")
            return local.mechanism
        remote = cache.get(site)
        if remote is None:
            try:
                self._count("peer_queries")
                remote = peer.query_policy(site, timeout=self.query_timeout)
            except Exception as exc:
                # one failed query per call is enough; don't stall on every node
                cache[_PEER_DOWN] = True
                self._count("peer_fallbacks")
                log.debug("policy query for %s failed, using local rules: %s", site, exc)
                return local.mechanism
            cache[site] = remote
        return combine(local, remote, site.role, serializer_is_caller=site.role is Role.ARGUMENT)
