"""Envelopes, framing and the two transports.

Frame layout: a 4-byte big-endian unsigned length N followed by N bytes of
UTF-8 JSON holding ``{"kind", "call_id", "payload"}``.
"""

from __future__ import annotations

import enum
import json
import queue
import re
import socket
import struct
import threading
from dataclasses import dataclass, field

from .errors import FrameTooLarge, ProtocolError, TransportError, Unreachable

HEADER = struct.Struct(">I")
MAX_FRAME = 16 * 1024 * 1024


class Kind(enum.Enum):
    CALL = "CALL"
    RESULT = "RESULT"
    ERROR = "ERROR"
    POLICY_QUERY = "POLICY_QUERY"
    POLICY_ANSWER = "POLICY_ANSWER"

    @property
    def is_request(self) -> bool:
        return self in (Kind.CALL, Kind.POLICY_QUERY)


@dataclass
class Envelope:
    kind: Kind
    call_id: int
    payload: dict = field(default_factory=dict)

    def to_bytes(self) -> bytes:
        return json.dumps({"kind": self.kind.value, "call_id": self.call_id,
                           "payload": self.payload},
                          separators=(",", ":"), ensure_ascii=False).encode("utf-8")

    @classmethod
    def from_bytes(cls, data: bytes) -> Envelope:
        try:
            obj = json.loads(data.decode("utf-8"))
            kind = Kind(obj["kind"])
            call_id = obj["call_id"]
            payload = obj.get("payload", {})
        except (UnicodeDecodeError, ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"undecodable envelope: {exc}") from None
        if not isinstance(call_id, int) or isinstance(call_id, bool) or not isinstance(payload, dict):
            raise ProtocolError(f"bad envelope header: call_id={call_id!r}")
        return cls(kind, call_id, payload)

    def reply(self, kind: Kind, payload: dict) -> Envelope:
        return Envelope(kind, self.call_id, payload)

    def error(self, code: str, message: str) -> Envelope:
        return self.reply(Kind.ERROR, {"code": code, "message": message})


def pack_frame(body: bytes, max_frame: int = MAX_FRAME) -> bytes:
    if len(body) > max_frame:
        raise FrameTooLarge(f"frame of {len(body)} bytes exceeds limit of {max_frame}")
    return HEADER.pack(len(body)) + body


class ConnectionClosed(Unreachable):
    pass


class OversizeFrame(FrameTooLarge):
    """An incoming frame was over the limit and has been skipped."""

    def __init__(self, size, kind=None, call_id=None):
        super().__init__(f"incoming frame of {size} bytes exceeds limit")
        self.kind = kind
        self.call_id = call_id


_HEAD_RE = re.compile(rb'"kind"\s*:\s*"(\w+)"\s*,\s*"call_id"\s*:\s*(\d+)')


def _peek_header(prefix: bytes):
    """Best-effort (kind, call_id) from the start of a skipped frame."""
    m = _HEAD_RE.search(prefix)
    if m is None:
        return None, None
    try:
        return Kind(m.group(1).decode()), int(m.group(2))
    except ValueError:
        return None, None


class Endpoint:
    """One end of a bidirectional envelope channel."""

    def __init__(self, max_frame: int = MAX_FRAME):
        self.max_frame = max_frame
        self.taps = []  # callables (direction, envelope), for tracing
        self.closed = False

    def send(self, env: Envelope) -> None:
        if self.closed:
            raise ConnectionClosed("endpoint is closed")
        frame = pack_frame(env.to_bytes(), self.max_frame)
        for tap in self.taps:
            tap("send", env)
        self._send_frame(frame)

    def recv(self) -> Envelope:
        body = self._recv_body()
        env = Envelope.from_bytes(body)
        for tap in self.taps:
            tap("recv", env)
        return env

    def close(self) -> None:
        self.closed = True

    def _send_frame(self, frame: bytes) -> None:
        raise NotImplementedError

    def _recv_body(self) -> bytes:
        raise NotImplementedError


class InMemoryEndpoint(Endpoint):
    """Deterministic FIFO endpoint; frames pass through queues unaltered."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue, max_frame: int = MAX_FRAME):
        super().__init__(max_frame)
        self._inbox = inbox
        self._outbox = outbox

    def _send_frame(self, frame):
        self._outbox.put(frame)

    def _recv_body(self) -> bytes:
        if self.closed and self._inbox.empty():
            raise ConnectionClosed("endpoint is closed")
        frame = self._inbox.get()
        if frame is None:
            self.closed = True
            self._inbox.put(None)  # keep later readers from blocking
            raise ConnectionClosed("peer closed the connection")
        (size,) = HEADER.unpack_from(frame)
        body = frame[HEADER.size:]
        if size > self.max_frame:
            raise OversizeFrame(size, *_peek_header(body))
        return body

    def close(self):
        if not self.closed:
            super().close()
            self._outbox.put(None)
            self._inbox.put(None)


def in_memory_pair(max_frame: int = MAX_FRAME) -> tuple[InMemoryEndpoint, InMemoryEndpoint]:
    a_to_b, b_to_a = queue.Queue(), queue.Queue()
    return (InMemoryEndpoint(b_to_a, a_to_b, max_frame),
            InMemoryEndpoint(a_to_b, b_to_a, max_frame))


class TcpEndpoint(Endpoint):
    def __init__(self, sock: socket.socket, max_frame: int = MAX_FRAME):
        super().__init__(max_frame)
        self.sock = sock
        self._send_lock = threading.Lock()

    def _send_frame(self, frame):
        try:
            with self._send_lock:
                self.sock.sendall(frame)
        except OSError as exc:
            raise ConnectionClosed(f"send failed: {exc}") from exc

    def _recv_exact(self, n: int) -> bytes:
        chunks = []
        while n:
            try:
                chunk = self.sock.recv(min(n, 1 << 20))
            except OSError as exc:
                raise ConnectionClosed(f"receive failed: {exc}") from exc
            if not chunk:
                raise ConnectionClosed("peer closed the connection")
            chunks.append(chunk)
            n -= len(chunk)
        return b"".join(chunks)

    def _recv_body(self) -> bytes:
        (size,) = HEADER.unpack(self._recv_exact(HEADER.size))
        if size > self.max_frame:
            prefix = self._recv_exact(min(size, 256))
            remaining = size - len(prefix)
            while remaining:
                remaining -= len(self._recv_exact(min(remaining, 1 << 20)))
            raise OversizeFrame(size, *_peek_header(prefix))
        return self._recv_exact(size)

    def close(self):
        if self.closed:
            return
        super().close()
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


def parse_addr(addr) -> tuple[str, int]:
    if isinstance(addr, tuple):
        return addr
    host, _, port = str(addr).rpartition(":")
    try:
        return host or "127.0.0.1", int(port)
    except ValueError:
        raise TransportError(f"bad address {addr!r}, expected HOST:PORT") from None


class TcpListener:
    def __init__(self, addr, max_frame: int = MAX_FRAME):
        self.max_frame = max_frame
        try:
            self.sock = socket.create_server(parse_addr(addr))
        except OSError as exc:
            raise TransportError(f"cannot listen on {addr}: {exc}") from exc

    @property
    def address(self) -> tuple[str, int]:
        return self.sock.getsockname()[:2]

    def accept(self) -> TcpEndpoint:
        try:
            conn, _ = self.sock.accept()
        except OSError as exc:
            raise ConnectionClosed(f"listener closed: {exc}") from exc
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        return TcpEndpoint(conn, self.max_frame)

    def close(self):
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


def tcp_listen(addr, max_frame: int = MAX_FRAME) -> TcpListener:
    return TcpListener(addr, max_frame)


def tcp_connect(addr, timeout: float = 5.0, max_frame: int = MAX_FRAME) -> TcpEndpoint:
    try:
        sock = socket.create_connection(parse_addr(addr), timeout=timeout)
    except OSError as exc:
        raise Unreachable(f"cannot connect to {addr}: {exc}") from exc
    sock.settimeout(None)
    sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    return TcpEndpoint(sock, max_frame)
