"""Address spaces, the export registry, connections and call dispatch.

A :class:`Space` is one address space: it owns a policy manager, an export
table and any number of connections.  Connections are symmetric, so either
side can call objects exported by the other, which is what makes
by-reference arguments work (the callee calls back through its proxy).

Every space exports a :class:`PolicyControl` object under object id 0.
A reference with an empty space id and object id 0 reaches the control
object of whatever space is on the other end of a connection; that is how
clients bootstrap.
"""

from __future__ import annotations

import itertools
import json
import logging
import threading
import uuid
from concurrent.futures import Future, TimeoutError as FutureTimeout
from functools import partial

from . import codec
from .errors import (
    EncodingError, FrameTooLarge, InvalidSelector, MalformedWireTree, NoSuchMethod,
    NotDispatchable, PolicyRPCError, ProtocolError, RemoteError, StaleReference, TransportError,
    Unreachable, remote_error,
)
from .negotiation import ManagerMode, PolicyManager
from .policy import CallSite, Role
from .proxy import RemoteProxy
from .resolution import TransmissionDecision
from .transport import (
    ConnectionClosed, Endpoint, Envelope, Kind, OversizeFrame, TcpListener, tcp_connect,
    tcp_listen,
)
from .typeregistry import TypeRegistry, default_types
from .wire import RemoteReference, from_json, to_json

log = logging.getLogger(__name__)

CONTROL_OBJECT_ID = 0


def control_reference(space_id: str = "") -> RemoteReference:
    return RemoteReference(space_id, CONTROL_OBJECT_ID, PolicyControl.TYPE_NAME)


class ExportTable:
    """Objects made remotely accessible, keyed both ways."""

    def __init__(self, space_id: str, types: TypeRegistry):
        self.space_id = space_id
        self.types = types
        self._lock = threading.Lock()
        self._objects: dict[int, object] = {}
        self._refs: dict[int, RemoteReference] = {}  # id(obj) -> ref
        self._ids = itertools.count(CONTROL_OBJECT_ID + 1)

    def export(self, obj, object_id: int | None = None) -> RemoteReference:
        info = self.types.info_for(obj)
        if info is None:
            raise NotDispatchable(f"{type(obj).__qualname__} has no registered method table")
        with self._lock:
            ref = self._refs.get(id(obj))
            if ref is None:
                if object_id is None:
                    object_id = next(self._ids)
                ref = RemoteReference(self.space_id, object_id, info.name)
                self._objects[object_id] = obj
                self._refs[id(obj)] = ref
            return ref

    def unexport(self, ref: RemoteReference) -> bool:
        if ref.space_id != self.space_id:
            return False
        with self._lock:
            obj = self._objects.pop(ref.object_id, None)
            if obj is None:
                return False
            del self._refs[id(obj)]
            return True

    def lookup(self, ref: RemoteReference):
        if ref.space_id not in ("", self.space_id):
            raise StaleReference(f"{ref} is not exported by space {self.space_id}")
        with self._lock:
            try:
                return self._objects[ref.object_id]
            except KeyError:
                raise StaleReference(f"{ref} is not exported") from None

    def is_exported(self, obj) -> bool:
        return id(obj) in self._refs

    def __len__(self):
        return len(self._objects)


class Space:
    """One address space."""

    def __init__(self, mode: ManagerMode | str = ManagerMode.AUTONOMOUS,
                 types: TypeRegistry | None = None, name: str = "",
                 call_timeout: float | None = 30.0):
        self.space_id = uuid.uuid4().hex
        self.name = name or self.space_id[:8]
        self.types = types or default_types
        if PolicyControl not in self.types:
            self.types.register(PolicyControl, PolicyControl.TYPE_NAME, fields=(),
                                methods=PolicyControl.METHODS)
        self.policy = PolicyManager(mode)
        self.exports = ExportTable(self.space_id, self.types)
        self.call_timeout = call_timeout
        self.connections: list[Connection] = []
        self.names: dict[str, RemoteReference] = {}
        self._servers: list[_TcpServer] = []
        self.control = PolicyControl(self)
        self.exports.export(self.control, CONTROL_OBJECT_ID)

    def __repr__(self):
        return f"<Space {self.name} {self.policy.mode.value}>"

    def export(self, obj) -> RemoteReference:
        return self.exports.export(obj)

    def unexport(self, ref: RemoteReference) -> bool:
        return self.exports.unexport(ref)

    def bind(self, name: str, obj) -> RemoteReference:
        """Export ``obj`` and publish it under ``name`` for remote lookup."""
        ref = self.export(obj)
        self.names[name] = ref
        return ref

    # connections

    def connect(self, endpoint: Endpoint) -> Connection:
        conn = Connection(self, endpoint)
        self.connections.append(conn)
        conn.start()
        return conn

    def connect_tcp(self, addr, timeout: float = 5.0) -> Connection:
        return self.connect(tcp_connect(addr, timeout))

    def serve_tcp(self, addr="127.0.0.1:0") -> _TcpServer:
        server = _TcpServer(self, tcp_listen(addr))
        self._servers.append(server)
        server.start()
        return server

    def connection_to(self, space_id: str) -> Connection | None:
        for conn in list(self.connections):
            if not conn.closed and conn.known_peer_id == space_id:
                return conn
        return None

    def close(self):
        for server in self._servers:
            server.close()
        for conn in list(self.connections):
            conn.close()

    # serving side

    def dispatch(self, env: Envelope, conn: Connection) -> Envelope:
        """Run one CALL envelope and produce its RESULT or ERROR reply."""
        try:
            target = RemoteReference.from_dict(env.payload["target"])
            method_name = env.payload["method"]
            arg_nodes = [from_json(a) for a in env.payload.get("args", [])]
            if not isinstance(method_name, str):
                raise ProtocolError("method name must be a string")
        except (KeyError, TypeError, ProtocolError, MalformedWireTree) as exc:
            return env.error("ProtocolError", f"bad CALL payload: {exc}")
        try:
            obj = self.exports.lookup(target)
            method = self.types.method(obj, method_name)
        except (StaleReference, NoSuchMethod) as exc:
            return env.error(exc.code, exc.message)
        try:
            args = [codec.decode(n, conn.proxy, self.types) for n in arg_nodes]
        except StaleReference as exc:
            return env.error(exc.code, exc.message)
        except MalformedWireTree as exc:
            return env.error(type(exc).__name__, str(exc))
        try:
            result = method(*args)
        except Exception as exc:
            log.debug("remote method %s raised", method_name, exc_info=True)
            return env.error("RemoteError", f"{type(exc).__name__}: {exc}")
        class_name = self.types.info_for(obj).name
        cache = {}
        decide = partial(self._decide_return, class_name, method_name, conn, cache)
        try:
            node = codec.encode(result, decide, self.export, self.types)
        except EncodingError as exc:
            return env.error(type(exc).__name__, str(exc))
        return env.reply(Kind.RESULT, {"value": to_json(node)})

    def _decide_return(self, class_name, method_name, conn, cache, actual, depth):
        site = CallSite(class_name, method_name, Role.RETURN, actual, depth)
        return self.policy.evaluate_for_transmission(site, peer=conn, cache=cache)

    def answer(self, env: Envelope) -> Envelope:
        try:
            site = CallSite.from_dict(env.payload)
        except InvalidSelector as exc:
            return env.error("ProtocolError", str(exc))
        return env.reply(Kind.POLICY_ANSWER, self.policy.answer_query(site).to_dict())


class Connection:
    """A live link between this space and one peer space."""

    def __init__(self, space: Space, endpoint: Endpoint):
        self.space = space
        self.endpoint = endpoint
        self.closed = False
        self.known_peer_id: str | None = None
        self._ids = itertools.count(1)
        self._pending: dict[int, Future] = {}
        self._lock = threading.Lock()
        self._proxies: dict[RemoteReference, RemoteProxy] = {}
        self._reader = threading.Thread(target=self._read_loop, daemon=True,
                                        name=f"policyrpc-reader-{space.name}")

    def start(self):
        self._reader.start()

    def close(self):
        self.closed = True
        self.endpoint.close()
        self._fail_pending(ConnectionClosed("connection closed"))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # incoming

    def _read_loop(self):
        while True:
            try:
                env = self.endpoint.recv()
            except OversizeFrame as exc:
                self._oversize(exc)
                continue
            except ProtocolError as exc:
                log.warning("dropping undecodable frame: %s", exc)
                continue
            except TransportError:
                break
            if env.kind.is_request:
                threading.Thread(target=self._serve, args=(env,), daemon=True).start()
            else:
                with self._lock:
                    fut = self._pending.pop(env.call_id, None)
                if fut is None:
                    log.warning("dropping unmatched %s for call %d", env.kind.value, env.call_id)
                else:
                    fut.set_result(env)
        self.closed = True
        self._fail_pending(ConnectionClosed("connection closed"))

    def _oversize(self, exc: OversizeFrame):
        if exc.call_id is None:
            log.warning("dropping oversize frame with no readable header")
        elif exc.kind is not None and exc.kind.is_request:
            self._send_quietly(Envelope(Kind.ERROR, exc.call_id,
                                        {"code": "FrameTooLarge", "message": str(exc)}))
        else:
            with self._lock:
                fut = self._pending.pop(exc.call_id, None)
            if fut is not None:
                fut.set_exception(FrameTooLarge(str(exc)))

    def _serve(self, env: Envelope):
        if env.kind is Kind.CALL:
            reply = self.space.dispatch(env, self)
        else:
            reply = self.space.answer(env)
        try:
            self.endpoint.send(reply)
        except FrameTooLarge as exc:
            self._send_quietly(env.error("FrameTooLarge", str(exc)))
        except TransportError:
            pass

    def _send_quietly(self, env: Envelope):
        try:
            self.endpoint.send(env)
        except TransportError:
            pass

    def _fail_pending(self, exc: Exception):
        with self._lock:
            pending, self._pending = self._pending, {}
        for fut in pending.values():
            if not fut.done():
                fut.set_exception(exc)

    # outgoing

    def request(self, kind: Kind, payload: dict, timeout: float | None = None) -> Envelope:
        """Send a request and wait for the reply carrying the same call id."""
        if self.closed:
            raise ConnectionClosed("connection closed")
        call_id = next(self._ids)
        fut = Future()
        with self._lock:
            self._pending[call_id] = fut
        try:
            self.endpoint.send(Envelope(kind, call_id, payload))
        except BaseException:
            with self._lock:
                self._pending.pop(call_id, None)
            raise
        try:
            return fut.result(timeout)
        except FutureTimeout:
            with self._lock:
                self._pending.pop(call_id, None)
            raise TimeoutError(f"no reply to {kind.value} {call_id} within {timeout}s") from None

    def peer_id(self) -> str:
        if self.known_peer_id is None:
            self.known_peer_id = self.invoke(control_reference(), "space_id")
        return self.known_peer_id

    def _route(self, ref: RemoteReference) -> Connection:
        if ref.space_id == "" or ref.space_id == self.known_peer_id:
            return self
        if self.closed:
            raise ConnectionClosed("connection closed")
        if ref.space_id == self.peer_id():
            return self
        other = self.space.connection_to(ref.space_id)
        if other is None:
            raise Unreachable(f"no connection to space {ref.space_id}")
        return other

    def invoke(self, ref: RemoteReference, method_name: str, *args):
        """Call ``method_name`` on the remote object ``ref``."""
        conn = self._route(ref)
        if conn is not self:
            return conn.invoke(ref, method_name, *args)
        cache = {}
        nodes = []
        for i, arg in enumerate(args):
            decide = partial(self._decide_argument, ref.type_name, method_name, i, cache)
            nodes.append(to_json(codec.encode(arg, decide, self.space.export, self.space.types)))
        payload = {"target": ref.to_dict(), "method": method_name, "args": nodes}
        try:
            reply = self.request(Kind.CALL, payload, self.space.call_timeout)
        except TimeoutError as exc:
            raise Unreachable(str(exc)) from None
        if reply.kind is Kind.ERROR:
            raise remote_error(reply.payload.get("code", "RemoteError"),
                               reply.payload.get("message", ""))
        if reply.kind is not Kind.RESULT:
            raise ProtocolError(f"expected RESULT, got {reply.kind.value}")
        return codec.decode(from_json(reply.payload.get("value")), self.proxy, self.space.types)

    def _decide_argument(self, class_name, method_name, index, cache, actual, depth):
        site = CallSite(class_name, method_name, Role.ARGUMENT, actual, depth, index)
        return self.space.policy.evaluate_for_transmission(site, peer=self, cache=cache)

    def query_policy(self, site: CallSite, timeout: float | None = None) -> TransmissionDecision:
        reply = self.request(Kind.POLICY_QUERY, site.to_dict(), timeout)
        if reply.kind is Kind.ERROR:
            raise remote_error(reply.payload.get("code", "RemoteError"),
                               reply.payload.get("message", ""))
        return TransmissionDecision.from_dict(reply.payload)

    def proxy(self, ref: RemoteReference):
        """Proxy for ``ref``; a reference into this very space yields the object itself."""
        if ref.space_id == self.space.space_id:
            return self.space.exports.lookup(ref)
        with self._lock:
            p = self._proxies.get(ref)
            if p is None:
                p = self._proxies[ref] = RemoteProxy(ref, self)
            return p

    def control(self) -> RemoteProxy:
        """Proxy for the peer space's policy control object."""
        return self.proxy(control_reference())

    def lookup(self, name: str) -> RemoteProxy:
        return self.proxy(RemoteReference.parse(self.control().lookup(name)))


class _TcpServer:
    def __init__(self, space: Space, listener: TcpListener):
        self.space = space
        self.listener = listener
        self._thread = threading.Thread(target=self._accept_loop, daemon=True)

    @property
    def address(self) -> tuple[str, int]:
        return self.listener.address

    def start(self):
        self._thread.start()

    def _accept_loop(self):
        while True:
            try:
                endpoint = self.listener.accept()
            except TransportError:
                return
            self.space.connect(endpoint)

    def close(self):
        self.listener.close()


class PolicyControl:
    """Remote administration of a space's policy manager.

    Results are plain strings and numbers so they cross the wire the same way
    whatever the policy says.
    """

    TYPE_NAME = "policyrpc.PolicyControl"
    METHODS = ("space_id", "lookup", "names", "set_class_policy", "set_method_policy",
               "set_param_policy", "set_default_policy", "remove_rule", "clear_rules",
               "rules", "resolve", "set_mode", "ping")

    def __init__(self, space: Space):
        self._space = space

    @property
    def _policy(self) -> PolicyManager:
        return self._space.policy

    def ping(self):
        return "pong"

    def space_id(self):
        return self._space.space_id

    def lookup(self, name):
        try:
            return str(self._space.names[name])
        except KeyError:
            raise PolicyRPCError(f"nothing bound under {name!r}") from None

    def names(self):
        return sorted(self._space.names)

    def set_class_policy(self, class_name, mechanism, overridable=True):
        self._policy.set_class_policy(class_name, mechanism, overridable)

    def set_method_policy(self, class_name, method_name, mechanism, overridable=True,
                          depth=None):
        self._policy.set_method_policy(class_name, method_name, mechanism, overridable, depth)

    def set_param_policy(self, class_name, method_name, param_index, mechanism,
                         overridable=True, depth=None):
        self._policy.set_param_policy(class_name, method_name, param_index, mechanism,
                                      overridable, depth)

    def set_default_policy(self, mechanism):
        self._policy.set_default_policy(mechanism)

    def remove_rule(self, kind, class_name, method_name=None, param_index=None):
        return self._policy.remove_rule(kind, class_name, method_name, param_index)

    def clear_rules(self):
        self._policy.clear_rules()

    def rules(self):
        return json.dumps(self._policy.dump_rules())

    def resolve(self, site_json):
        site = CallSite.from_dict(json.loads(site_json))
        return json.dumps(self._policy.resolve(site).to_dict())

    def set_mode(self, mode):
        self._policy.mode = ManagerMode(mode)
        return self._policy.mode.value
