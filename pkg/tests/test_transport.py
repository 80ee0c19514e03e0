from __future__ import annotations

import json
import socket

import pytest

from verbalarm.config import Config
from verbalarm.server import Service
from verbalarm.transport import HttpServer, NdjsonServer


class Client:
    """Minimal line-oriented test client for the NDJSON transport."""

    def __init__(self, port):
        self.sock = socket.create_connection(("127.0.0.1", port), timeout=10)
        self.reader = self.sock.makefile("r", encoding="utf-8")
        self.seq = 0
        self.send({"kind": "hello"})
        self.welcome = self.recv()
        assert self.welcome["kind"] == "welcome"
        self.session = self.welcome["payload"]["session"]

    def send(self, message):
        self.seq += 1
        message = {"seq": self.seq, **message}
        self.sock.sendall((json.dumps(message) + "\n").encode())

    def recv(self):
        line = self.reader.readline()
        if not line:
            raise ConnectionError("closed")
        return json.loads(line)

    def command(self, text):
        self.send({"kind": "command", "payload": {"text": text}})

    def drain_until(self, predicate, limit=3000):
        seen = []
        for _ in range(limit):
            message = self.recv()
            seen.append(message)
            if predicate(message):
                return seen
        raise AssertionError("predicate never satisfied")

    def close(self):
        self.sock.close()


def completed(message):
    return message["kind"] == "tick" and any(
        e["type"] == "completed" for e in message["payload"]["events"])


@pytest.fixture(scope="module")
def server(chain_module):
    service = Service(chain=chain_module, config=Config())
    ndjson = NdjsonServer(service, port=0)
    ndjson.start()
    http = HttpServer(service, port=0)
    http.start()
    yield ndjson, http, service
    ndjson.shutdown()
    http.shutdown()


@pytest.fixture(scope="module")
def chain_module():
    from verbalarm.kinematics import default_chain
    return default_chain()


class TestNdjson:
    def test_handshake_and_command_roundtrip(self, server):
        ndjson, _, _ = server
        client = Client(ndjson.port)
        client.command("move forward by 5 centimetres")
        seen = client.drain_until(completed)
        kinds = [m["kind"] for m in seen]
        assert kinds[0] == "sdc_result"
        seqs = [m["seq"] for m in seen]
        assert seqs == sorted(seqs)
        assert all(m["session"] == client.session for m in seen)
        client.close()

    def test_sessions_have_unique_ids(self, server):
        ndjson, _, _ = server
        a, b = Client(ndjson.port), Client(ndjson.port)
        assert a.session != b.session
        a.close()
        b.close()

    def test_stop_interrupts_only_own_session(self, server):
        ndjson, _, service = server
        a, b = Client(ndjson.port), Client(ndjson.port)
        a.command("move forward by 25 centimetres")
        b.command("move forward by 25 centimetres")
        # read a's first few ticks to be sure it's executing, then stop a
        a.drain_until(lambda m: m["kind"] == "tick")
        a.send({"kind": "stop"})
        a_msgs = a.drain_until(
            lambda m: m["kind"] == "tick"
            and any(e["type"] == "stopped" for e in m["payload"]["events"]))
        b_msgs = b.drain_until(completed)
        assert not any(
            e["type"] == "stopped"
            for m in b_msgs if m["kind"] == "tick"
            for e in m["payload"]["events"])
        a.close()
        b.close()

    def test_interleaved_menus_stay_isolated(self, server):
        ndjson, _, _ = server
        a, b = Client(ndjson.port), Client(ndjson.port)
        a.command("grab the bottle")
        b.command("move up")
        a_menu = a.drain_until(lambda m: m["kind"] == "grasp_menu")[-1]
        b_seen = b.drain_until(completed)
        assert not any(m["kind"] == "grasp_menu" for m in b_seen)
        # b selects with no menu -> error; a's selection works
        b.send({"kind": "select_grasp", "payload": {"index": 1}})
        b_err = b.drain_until(lambda m: m["kind"] == "error")[-1]
        assert b_err["payload"]["error"] == "NoPendingMenu"
        a.send({"kind": "select_grasp",
                "payload": {"index": a_menu["payload"]["candidates"][0]["index"]}})
        a.drain_until(completed)
        a.close()
        b.close()

    def test_bad_sequence_rejected(self, server):
        ndjson, _, _ = server
        client = Client(ndjson.port)
        client.sock.sendall(
            (json.dumps({"seq": 1, "kind": "command",
                         "payload": {"text": "move up"}}) + "\n").encode())
        client.sock.sendall(
            (json.dumps({"seq": 1, "kind": "command",
                         "payload": {"text": "move up"}}) + "\n").encode())
        seen = client.drain_until(lambda m: m["kind"] == "error")
        assert seen[-1]["payload"]["error"] == "BadSequence"
        client.close()

    def test_stop_text_interrupts_running_execution(self, server):
        ndjson, _, _ = server
        client = Client(ndjson.port)
        client.command("move forward by 25 centimetres")
        client.drain_until(lambda m: m["kind"] == "tick")
        client.command("quit")
        seen = client.drain_until(
            lambda m: m["kind"] == "tick"
            and any(e["type"] == "stopped" for e in m["payload"]["events"]))
        assert seen
        client.close()


class TestHttp:
    def test_stateless_command(self, server):
        _, http, _ = server
        body = json.dumps({"text": "move joint 3 by 15 degrees"}).encode()
        request = (
            b"POST /command HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\n"
            + f"Content-Length: {len(body)}\r\n\r\n".encode() + body)
        sock = socket.create_connection(("127.0.0.1", http.port), timeout=10)
        sock.sendall(request)
        data = b""
        while True:
            chunk = sock.recv(65536)
            if not chunk:
                break
            data += chunk
        sock.close()
        head, _, payload = data.partition(b"\r\n\r\n")
        assert b"200 OK" in head
        result = json.loads(payload)
        assert result["outcome"] == "completed"
        assert result["messages"][0]["kind"] == "sdc_result"

    def test_static_serving(self, server, tmp_path):
        _, http, service = server
        (tmp_path / "index.html").write_text("<html>console</html>")
        http.static_dir = str(tmp_path)
        sock = socket.create_connection(("127.0.0.1", http.port), timeout=10)
        sock.sendall(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n")
        data = b""
        while True:
            chunk = sock.recv(65536)
            if not chunk:
                break
            data += chunk
        sock.close()
        assert b"200 OK" in data and b"console" in data

    def test_websocket_round_trip(self, server):
        _, http, _ = server
        sock = socket.create_connection(("127.0.0.1", http.port), timeout=10)
        key = "dGhlIHNhbXBsZSBub25jZQ=="
        sock.sendall(
            (f"GET /ws HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\n"
             f"Connection: Upgrade\r\nSec-WebSocket-Key: {key}\r\n"
             f"Sec-WebSocket-Version: 13\r\n\r\n").encode())
        head = b""
        while b"\r\n\r\n" not in head:
            head += sock.recv(4096)
        assert b"101" in head

        def ws_send(text):
            payload = text.encode()
            mask = b"\x01\x02\x03\x04"
            masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
            header = bytes([0x81])
            n = len(payload)
            assert n < 126
            header += bytes([0x80 | n])
            sock.sendall(header + mask + masked)

        buffer = bytearray(head.split(b"\r\n\r\n", 1)[1])

        def ws_recv():
            def need(n):
                while len(buffer) < n:
                    chunk = sock.recv(4096)
                    if not chunk:
                        raise ConnectionError
                    buffer.extend(chunk)
                out = bytes(buffer[:n])
                del buffer[:n]
                return out

            h = need(2)
            length = h[1] & 0x7F
            if length == 126:
                import struct
                length = struct.unpack(">H", need(2))[0]
            return json.loads(need(length).decode())

        ws_send(json.dumps({"kind": "hello"}))
        welcome = ws_recv()
        assert welcome["kind"] == "welcome"
        ws_send(json.dumps({"seq": 1, "kind": "command",
                            "payload": {"text": "move joint 2 by 5 degrees"}}))
        for _ in range(500):
            message = ws_recv()
            if completed(message):
                break
        else:
            raise AssertionError("no completion over websocket")
        sock.close()
