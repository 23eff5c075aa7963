"""HTTP control plane: JSON endpoints plus the server-sent event stream.

Endpoint paths are a compatibility contract:

    GET    /api/appliances
    PUT    /api/appliances/{selector}/state   {"state": "on"|"off"}
    GET    /api/timers[?status=...]
    POST   /api/timers                        {"fire_at", "device", "state"}
    DELETE /api/timers/{id}
    POST   /api/utterance                     {"word": ...} | {"phonemes": ...}
    GET    /api/events?since=N
    GET    /api/port
    PUT    /api/master                        {"on": bool}
    GET    /api/stream                        text/event-stream

Errors come back as {"error": {"code", "message"}} with a 4xx/5xx status.
When a web root is configured, anything outside /api is served from it so
the operator console can ride on the same origin.
"""

from __future__ import annotations

import json
import logging
import mimetypes
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from urllib.parse import parse_qs, unquote, urlsplit

from .errors import (
    BadDatetimeError,
    BadRequestError,
    ChannelRangeError,
    CorruptSnapshotError,
    DuplicateChannelError,
    DuplicateNameError,
    EmptyUtteranceError,
    HearthError,
    PersistenceError,
    UnknownApplianceError,
    UnknownChannelError,
    UnknownJobError,
    UnknownPhonemeError,
    UnknownPortError,
    UnknownWordError,
)
from .service import ControlService

log = logging.getLogger(__name__)

_STATUS_BY_ERROR = {
    UnknownApplianceError: 404,
    UnknownJobError: 404,
    UnknownWordError: 404,
    UnknownChannelError: 404,
    UnknownPortError: 404,
    DuplicateChannelError: 409,
    DuplicateNameError: 409,
    BadRequestError: 400,
    BadDatetimeError: 400,
    EmptyUtteranceError: 400,
    UnknownPhonemeError: 400,
    ChannelRangeError: 400,
    CorruptSnapshotError: 500,
    PersistenceError: 500,
}


def _error_status(exc: HearthError) -> int:
    for klass, status in _STATUS_BY_ERROR.items():
        if isinstance(exc, klass):
            return status
    return 500


class ApiHandler(BaseHTTPRequestHandler):
    service: ControlService = None  # bound by build_server
    web_root: Path | None = None
    protocol_version = "HTTP/1.1"

    # -- plumbing ------------------------------------------------------

    def log_message(self, fmt, *args):
        log.debug("%s - %s", self.address_string(), fmt % args)

    def _send_json(self, status: int, body: dict) -> None:
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _send_error_json(self, status: int, code: str, message: str) -> None:
        self._send_json(status, {"error": {"code": code, "message": message}})

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length) if length else b""
        if not raw:
            return {}
        try:
            body = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise BadRequestError("request body must be UTF-8 JSON") from None
        if not isinstance(body, dict):
            raise BadRequestError("request body must be a JSON object")
        return body

    def _dispatch(self, method: str) -> None:
        split = urlsplit(self.path)
        parts = [unquote(p) for p in split.path.split("/") if p]
        query = parse_qs(split.query)
        try:
            handled = self._route(method, parts, query)
        except HearthError as exc:
            self._send_error_json(_error_status(exc), exc.code, str(exc))
            return
        except (BrokenPipeError, ConnectionResetError):
            raise
        except Exception as exc:
            log.exception("unhandled error for %s %s", method, self.path)
            self._send_error_json(500, "internal", str(exc))
            return
        if not handled:
            self._send_error_json(404, "not-found", f"no route for {method} {split.path}")

    def do_GET(self):
        self._dispatch("GET")

    def do_PUT(self):
        self._dispatch("PUT")

    def do_POST(self):
        self._dispatch("POST")

    def do_DELETE(self):
        self._dispatch("DELETE")

    # -- routing -------------------------------------------------------

    def _route(self, method: str, parts: list[str], query: dict) -> bool:
        svc = self.service
        if parts[:1] != ["api"]:
            if method == "GET":
                return self._serve_static(parts)
            return False
        route = parts[1:]

        if route == ["appliances"] and method == "GET":
            self._send_json(200, svc.appliances())
            return True
        if len(route) == 3 and route[0] == "appliances" and route[2] == "state" and method == "PUT":
            body = self._read_json()
            if "state" not in body:
                raise BadRequestError("body must carry {\"state\": \"on\"|\"off\"}")
            try:
                result = svc.set_appliance(route[1], body["state"], source="manual")
            except ValueError as exc:
                raise BadRequestError(str(exc)) from None
            self._send_json(200, result)
            return True

        if route == ["timers"] and method == "GET":
            status = query.get("status", [None])[0]
            try:
                jobs = svc.timers(status)
            except ValueError:
                raise BadRequestError(f"unknown status filter {status!r}") from None
            self._send_json(200, {"timers": [svc.job_dict(j) for j in jobs]})
            return True
        if route == ["timers"] and method == "POST":
            body = self._read_json()
            fire_at = body.get("fire_at") or body.get("at")
            selector = body.get("device", body.get("channel"))
            state = body.get("state")
            if fire_at is None or selector is None or state is None:
                raise BadRequestError("body must carry fire_at, device and state")
            try:
                job = svc.add_timer(fire_at, selector, state)
            except ValueError as exc:
                raise BadRequestError(str(exc)) from None
            self._send_json(201, {"timer": svc.job_dict(job)})
            return True
        if len(route) == 2 and route[0] == "timers" and method == "DELETE":
            job = svc.cancel_timer(route[1])
            self._send_json(200, {"timer": svc.job_dict(job)})
            return True

        if route == ["utterance"] and method == "POST":
            body = self._read_json()
            result = svc.utterance(word=body.get("word"), phonemes=body.get("phonemes"))
            self._send_json(200, {"result": result})
            return True

        if route == ["events"] and method == "GET":
            since_raw = query.get("since", ["0"])[0]
            try:
                since = int(since_raw)
            except ValueError:
                raise BadRequestError(f"since must be an integer, got {since_raw!r}") from None
            events = svc.events_since(since)
            self._send_json(200, {
                "events": [e.to_json() for e in events],
                "latest": svc.latest_seq,
            })
            return True

        if route == ["port"] and method == "GET":
            self._send_json(200, svc.port_status())
            return True

        if route == ["master"] and method == "PUT":
            body = self._read_json()
            if not isinstance(body.get("on"), bool):
                raise BadRequestError("body must carry {\"on\": true|false}")
            self._send_json(200, svc.set_master(body["on"], source="manual"))
            return True

        if route == ["stream"] and method == "GET":
            self._stream()
            return True

        return False

    # -- server-sent events ---------------------------------------------

    def _write_chunk(self, data: bytes) -> None:
        # Chunked framing keeps intermediaries from buffering the stream.
        self.wfile.write(f"{len(data):X}\r\n".encode("ascii") + data + b"\r\n")
        self.wfile.flush()

    def _stream(self) -> None:
        sub = self.service.subscribe()
        self.close_connection = True
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Transfer-Encoding", "chunked")
        self.send_header("Connection", "close")
        self.end_headers()
        try:
            for message in sub.messages():
                if message is None:
                    self._write_chunk(b": keepalive\n\n")
                else:
                    payload = json.dumps(message).encode("utf-8")
                    self._write_chunk(b"data: " + payload + b"\n\n")
            self._write_chunk(b"")
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            self.service.unsubscribe(sub)

    # -- static console --------------------------------------------------

    def _serve_static(self, parts: list[str]) -> bool:
        if self.web_root is None:
            return False
        root = self.web_root.resolve()
        target = root.joinpath(*parts) if parts else root / "index.html"
        if target.is_dir():
            target = target / "index.html"
        target = target.resolve()
        if root not in target.parents and target != root:
            return False
        if not target.is_file():
            return False
        data = target.read_bytes()
        ctype = mimetypes.guess_type(str(target))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)
        return True


def build_server(
    service: ControlService,
    host: str | None = None,
    port: int | None = None,
    web_root: str | None = None,
) -> ThreadingHTTPServer:
    """Bind an HTTP server to the service; caller runs serve_forever()."""
    handler = type("BoundApiHandler", (ApiHandler,), {
        "service": service,
        "web_root": Path(web_root).resolve() if web_root else None,
    })
    address = (
        host if host is not None else service.config.bind_host,
        port if port is not None else service.config.bind_port,
    )
    server = ThreadingHTTPServer(address, handler)
    server.daemon_threads = True
    return server
