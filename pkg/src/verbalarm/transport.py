"""Network front ends for the session service.

Primary transport: a persistent TCP connection carrying one JSON message
per line (UTF-8). A sibling HTTP port serves the operator console's static
assets, a stateless POST /command fallback for batch-style use, and a
WebSocket endpoint speaking the same JSON messages one per frame.
"""

from __future__ import annotations

import base64
import hashlib
import json
import mimetypes
import os
import queue
import socket
import struct
import threading

from .server import Service

WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class Connection:
    """One client on either transport; owns a session and a worker thread."""

    def __init__(self, service: Service, send_line):
        self.service = service
        self._send_line = send_line
        self._send_lock = threading.Lock()
        self.session = None
        self._queue: queue.Queue = queue.Queue()
        self._worker = threading.Thread(target=self._drain, daemon=True)
        self._closed = threading.Event()

    # -- outgoing ------------------------------------------------------------

    def send(self, kind: str, payload: dict) -> None:
        if self._closed.is_set():
            return
        self.session.out_seq += 1
        envelope = {"session": self.session.id, "seq": self.session.out_seq,
                    "kind": kind, "payload": payload}
        try:
            with self._send_lock:
                self._send_line(json.dumps(envelope))
        except OSError:
            self._closed.set()

    # -- incoming ------------------------------------------------------------

    def handle_line(self, line: str) -> None:
        try:
            message = json.loads(line)
        except json.JSONDecodeError as exc:
            if self.session is not None:
                self.send("error", {"stage": "server", "error": "BadMessage",
                                    "detail": str(exc)})
            return
        kind = message.get("kind")
        if self.session is None:
            if kind != "hello":
                return
            self.session = self.service.create_session()
            self.service.lexicon_listeners.append(self._on_lexicon_update)
            self._worker.start()
            self.send("welcome", {
                "session": self.session.id,
                "world": self.session.world.to_dict(),
                "menu_size": self.service.config.menu_size,
                "eps": self.service.config.diversity_eps,
            })
            return
        seq = message.get("seq")
        if isinstance(seq, int):
            if seq <= self.session.in_seq:
                self.send("error", {"stage": "server", "error": "BadSequence",
                                    "detail": f"seq {seq} not increasing"})
                return
            self.session.in_seq = seq
        if kind == "stop":
            # bypasses the queue: interrupt whatever is executing right now
            self.service.interrupt(self.session.id)
            self.send("stop", {"acknowledged": True})
            return
        if kind == "command":
            text = (message.get("payload") or {}).get("text", "")
            if self.service.is_stop_text(text):
                self.service.interrupt(self.session.id)
            self._queue.put(("command", text))
            return
        if kind == "select_grasp":
            index = (message.get("payload") or {}).get("index")
            self._queue.put(("select", index))
            return
        self.send("error", {"stage": "server", "error": "UnknownKind",
                            "detail": f"kind {kind!r}"})

    def _drain(self) -> None:
        while not self._closed.is_set():
            try:
                op, arg = self._queue.get(timeout=0.2)
            except queue.Empty:
                continue
            try:
                if op == "command":
                    stream = self.service.process(self.session.id, arg)
                else:
                    stream = self.service.select(self.session.id, int(arg))
                for kind, payload in stream:
                    self.send(kind, payload)
            except Exception as exc:  # pragma: no cover - defensive
                self.send("error", {"stage": "server", "error": type(exc).__name__,
                                    "detail": str(exc)})

    def _on_lexicon_update(self, update: dict) -> None:
        if self.session is not None and not self._closed.is_set():
            self.send("lexicon_update", update)

    def close(self) -> None:
        self._closed.set()
        if self._on_lexicon_update in self.service.lexicon_listeners:
            self.service.lexicon_listeners.remove(self._on_lexicon_update)
        if self.session is not None:
            self.service.close_session(self.session.id)


# -- newline-delimited JSON over TCP -------------------------------------------

class NdjsonServer:
    def __init__(self, service: Service, host: str = "127.0.0.1", port: int = 7470):
        self.service = service
        self.sock = socket.create_server((host, port))
        self.port = self.sock.getsockname()[1]
        self._accepting = threading.Event()
        self._threads: list[threading.Thread] = []

    def serve_forever(self) -> None:
        self._accepting.set()
        while self._accepting.is_set():
            try:
                client, _ = self.sock.accept()
            except OSError:
                break
            thread = threading.Thread(target=self._client_loop, args=(client,),
                                      daemon=True)
            thread.start()
            self._threads.append(thread)

    def start(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread

    def shutdown(self) -> None:
        self._accepting.clear()
        try:
            self.sock.close()
        except OSError:
            pass

    def _client_loop(self, client: socket.socket) -> None:
        writer = client.makefile("w", encoding="utf-8", newline="")

        def send_line(line: str) -> None:
            writer.write(line + "\n")
            writer.flush()

        conn = Connection(self.service, send_line)
        try:
            reader = client.makefile("r", encoding="utf-8")
            for line in reader:
                line = line.strip()
                if line:
                    conn.handle_line(line)
        except OSError:
            pass
        finally:
            conn.close()
            client.close()


# -- HTTP fallback: static assets, stateless commands, WebSocket ---------------

def _recv_until(sock: socket.socket, marker: bytes) -> bytes:
    data = bytearray()
    while marker not in data:
        chunk = sock.recv(4096)
        if not chunk:
            break
        data.extend(chunk)
    return bytes(data)


def _http_response(status: str, body: bytes, content_type: str = "text/plain",
                   extra: dict | None = None) -> bytes:
    headers = [f"HTTP/1.1 {status}", f"Content-Type: {content_type}",
               f"Content-Length: {len(body)}", "Connection: close"]
    for key, value in (extra or {}).items():
        headers.append(f"{key}: {value}")
    return ("\r\n".join(headers) + "\r\n\r\n").encode() + body


class HttpServer:
    """Minimal HTTP endpoint: GET static console assets, POST /command for
    stateless one-shot pipeline runs, and GET /ws upgraded to WebSocket."""

    def __init__(self, service: Service, host: str = "127.0.0.1", port: int = 7471,
                 static_dir: str | None = None):
        self.service = service
        self.static_dir = static_dir
        self.sock = socket.create_server((host, port))
        self.port = self.sock.getsockname()[1]
        self._accepting = threading.Event()

    def start(self) -> threading.Thread:
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread

    def serve_forever(self) -> None:
        self._accepting.set()
        while self._accepting.is_set():
            try:
                client, _ = self.sock.accept()
            except OSError:
                break
            threading.Thread(target=self._handle, args=(client,), daemon=True).start()

    def shutdown(self) -> None:
        self._accepting.clear()
        try:
            self.sock.close()
        except OSError:
            pass

    def _handle(self, client: socket.socket) -> None:
        try:
            raw = _recv_until(client, b"\r\n\r\n")
            if not raw:
                return
            head, _, rest = raw.partition(b"\r\n\r\n")
            lines = head.decode("latin-1").split("\r\n")
            method, path, _ = lines[0].split(" ", 2)
            headers = {}
            for line in lines[1:]:
                if ":" in line:
                    key, value = line.split(":", 1)
                    headers[key.strip().lower()] = value.strip()
            if headers.get("upgrade", "").lower() == "websocket":
                self._websocket(client, headers)
                return
            if method == "POST" and path == "/command":
                length = int(headers.get("content-length", "0"))
                body = rest
                while len(body) < length:
                    chunk = client.recv(4096)
                    if not chunk:
                        break
                    body += chunk
                client.sendall(self._stateless_command(body))
                return
            if method == "GET":
                client.sendall(self._static(path))
                return
            client.sendall(_http_response("405 Method Not Allowed", b"nope"))
        except (OSError, ValueError):
            pass
        finally:
            try:
                client.close()
            except OSError:
                pass

    def _stateless_command(self, body: bytes) -> bytes:
        try:
            request = json.loads(body.decode("utf-8"))
            text = request["text"]
        except (ValueError, KeyError):
            return _http_response("400 Bad Request", b'{"error": "bad body"}',
                                  "application/json")
        session = self.service.create_session()
        try:
            messages = [
                {"kind": kind, "payload": payload}
                for kind, payload in self.service.process(session.id, text)
                if kind != "tick"
            ]
            outcome = session.history[-1]["outcome"] if session.history else "error"
        finally:
            self.service.close_session(session.id)
        body_out = json.dumps({"outcome": outcome, "messages": messages}).encode()
        return _http_response("200 OK", body_out, "application/json")

    def _static(self, path: str) -> bytes:
        if self.static_dir is None:
            return _http_response("404 Not Found", b"no static dir configured")
        name = path.split("?")[0]
        if name in ("", "/"):
            name = "/index.html"
        full = os.path.realpath(os.path.join(self.static_dir, name.lstrip("/")))
        root = os.path.realpath(self.static_dir)
        if not full.startswith(root + os.sep) and full != root:
            return _http_response("403 Forbidden", b"outside static root")
        if not os.path.isfile(full):
            return _http_response("404 Not Found", b"missing")
        ctype = mimetypes.guess_type(full)[0] or "application/octet-stream"
        with open(full, "rb") as fh:
            return _http_response("200 OK", fh.read(), ctype)

    # -- WebSocket bridge ------------------------------------------------------

    def _websocket(self, client: socket.socket, headers: dict) -> None:
        key = headers.get("sec-websocket-key", "")
        accept = base64.b64encode(
            hashlib.sha1((key + WS_GUID).encode()).digest()).decode()
        client.sendall((
            "HTTP/1.1 101 Switching Protocols\r\n"
            "Upgrade: websocket\r\nConnection: Upgrade\r\n"
            f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode())

        def send_line(line: str) -> None:
            client.sendall(_ws_encode_text(line))

        conn = Connection(self.service, send_line)
        try:
            buffer = bytearray()
            while True:
                frame = _ws_read_frame(client, buffer)
                if frame is None:
                    break
                opcode, payload = frame
                if opcode == 8:       # close
                    break
                if opcode == 9:       # ping -> pong
                    client.sendall(_ws_encode(0xA, payload))
                    continue
                if opcode == 1:
                    conn.handle_line(payload.decode("utf-8"))
        except OSError:
            pass
        finally:
            conn.close()


def _ws_encode(opcode: int, payload: bytes) -> bytes:
    header = bytes([0x80 | opcode])
    n = len(payload)
    if n < 126:
        header += bytes([n])
    elif n < (1 << 16):
        header += bytes([126]) + struct.pack(">H", n)
    else:
        header += bytes([127]) + struct.pack(">Q", n)
    return header + payload


def _ws_encode_text(text: str) -> bytes:
    return _ws_encode(0x1, text.encode("utf-8"))


def _ws_read_exact(sock: socket.socket, buffer: bytearray, n: int) -> bytes | None:
    while len(buffer) < n:
        chunk = sock.recv(4096)
        if not chunk:
            return None
        buffer.extend(chunk)
    out = bytes(buffer[:n])
    del buffer[:n]
    return out


def _ws_read_frame(sock: socket.socket, buffer: bytearray):
    head = _ws_read_exact(sock, buffer, 2)
    if head is None:
        return None
    opcode = head[0] & 0x0F
    masked = bool(head[1] & 0x80)
    length = head[1] & 0x7F
    if length == 126:
        ext = _ws_read_exact(sock, buffer, 2)
        if ext is None:
            return None
        length = struct.unpack(">H", ext)[0]
    elif length == 127:
        ext = _ws_read_exact(sock, buffer, 8)
        if ext is None:
            return None
        length = struct.unpack(">Q", ext)[0]
    mask = b"\x00" * 4
    if masked:
        mask = _ws_read_exact(sock, buffer, 4)
        if mask is None:
            return None
    payload = _ws_read_exact(sock, buffer, length)
    if payload is None:
        return None
    if masked:
        payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    return opcode, payload
