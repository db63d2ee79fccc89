import json
import socket
import struct
import threading

import pytest

import policyrpc as pr
from policyrpc.transport import (
    MAX_FRAME, ConnectionClosed, Envelope, Kind, OversizeFrame, in_memory_pair, pack_frame,
    tcp_connect, tcp_listen,
)

from helpers import Service


def test_frame_layout_is_bit_exact():
    env = Envelope(Kind.CALL, 7, {"method": "x"})
    body = env.to_bytes()
    frame = pack_frame(body)
    assert frame[:4] == struct.pack(">I", len(body))
    assert json.loads(frame[4:]) == {"kind": "CALL", "call_id": 7, "payload": {"method": "x"}}
    assert Envelope.from_bytes(frame[4:]) == env


def test_max_frame_is_16_mib():
    assert MAX_FRAME == 16 * 1024 * 1024
    with pytest.raises(pr.FrameTooLarge):
        pack_frame(b"x" * (MAX_FRAME + 1))


def test_in_memory_delivery_fifo():
    a, b = in_memory_pair()
    envs = [Envelope(Kind.RESULT, i, {"value": {"k": "prim", "t": "int64", "v": i}})
            for i in range(20)]
    for env in envs:
        a.send(env)
    assert [b.recv() for _ in envs] == envs


def test_in_memory_close_wakes_reader():
    a, b = in_memory_pair()
    got = []
    t = threading.Thread(target=lambda: got.append(pytest.raises(ConnectionClosed, b.recv)))
    t.start()
    a.close()
    t.join(2)
    assert not t.is_alive()
    with pytest.raises(ConnectionClosed):
        a.send(Envelope(Kind.CALL, 1))


def test_undecodable_envelope():
    with pytest.raises(pr.ProtocolError):
        Envelope.from_bytes(b"not json")
    with pytest.raises(pr.ProtocolError):
        Envelope.from_bytes(b'{"kind": "NOPE", "call_id": 1}')
    with pytest.raises(pr.ProtocolError):
        Envelope.from_bytes(b'{"kind": "CALL", "call_id": "1"}')


def test_tcp_one_mib_echo():
    listener = tcp_listen("127.0.0.1:0")
    try:
        def echo():
            ep = listener.accept()
            ep.send(ep.recv())
            ep.close()

        t = threading.Thread(target=echo)
        t.start()
        client = tcp_connect(listener.address)
        blob = "é" * (512 * 1024)  # 1 MiB of UTF-8
        env = Envelope(Kind.RESULT, 1, {"value": {"k": "prim", "t": "string", "v": blob}})
        client.send(env)
        assert client.recv() == env
        client.close()
        t.join(5)
    finally:
        listener.close()


def test_tcp_raw_socket_framing():
    """A hand-framed request from a plain socket is understood and answered."""
    space = pr.Space()
    server = space.serve_tcp()
    try:
        sock = socket.create_connection(server.address)
        body = json.dumps({"kind": "CALL", "call_id": 41, "payload": {
            "target": {"space": "", "obj": 0, "t": "policyrpc.PolicyControl"},
            "method": "ping", "args": []}}).encode()
        sock.sendall(struct.pack(">I", len(body)) + body)
        (n,) = struct.unpack(">I", sock.recv(4, socket.MSG_WAITALL))
        reply = json.loads(sock.recv(n, socket.MSG_WAITALL))
        assert reply == {"kind": "RESULT", "call_id": 41,
                         "payload": {"value": {"k": "prim", "t": "string", "v": "pong"}}}
        sock.close()
    finally:
        space.close()


def test_tcp_connect_failure():
    listener = tcp_listen("127.0.0.1:0")
    addr = listener.address
    listener.close()
    with pytest.raises(pr.Unreachable):
        tcp_connect(addr, timeout=1)


def test_bad_address():
    with pytest.raises(pr.TransportError):
        tcp_listen("localhost:notaport")


def test_oversize_incoming_request_answered_with_error():
    space = pr.Space()
    client_end, server_end = in_memory_pair(max_frame=MAX_FRAME)
    server_end.max_frame = 200
    space.connect(server_end)
    client = pr.Space().connect(client_end)
    with pytest.raises(pr.RemoteError) as info:
        client.invoke(pr.rpc.control_reference(), "lookup", "x" * 500)
    assert info.value.code == "FrameTooLarge"


def test_oversize_tcp_frame_skipped_then_connection_usable():
    space = pr.Space()
    listener = tcp_listen("127.0.0.1:0", max_frame=300)
    t = threading.Thread(target=lambda: space.connect(listener.accept()))
    t.start()
    client = pr.Space().connect_tcp(listener.address)
    t.join(5)
    try:
        with pytest.raises(pr.RemoteError) as info:
            client.invoke(pr.rpc.control_reference(), "lookup", "x" * 2000)
        assert info.value.code == "FrameTooLarge"
        assert client.control().ping() == "pong"
    finally:
        client.close()
        listener.close()
        space.close()


def test_oversize_result_becomes_error(make_pair):
    pair = make_pair()
    pair.conn.endpoint.max_frame = MAX_FRAME
    for conn in pair.callee.connections:
        conn.endpoint.max_frame = 400
    svc = pair.publish(Service())
    with pytest.raises(pr.RemoteError) as info:
        svc.echo("y" * 1000)
    assert info.value.code == "FrameTooLarge"
    assert svc.echo("small") == "small"


def test_oversize_frame_error_kinds():
    exc = OversizeFrame(10, Kind.CALL, 5)
    assert isinstance(exc, pr.FrameTooLarge) and exc.call_id == 5
