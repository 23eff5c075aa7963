"""hearthctl: service launcher and thin HTTP client.

All client verbs are stateless calls against the running service; no
control logic lives here.  Data goes to stdout, diagnostics to stderr.
Exit codes: 0 success, 1 API error, 2 usage error, 3 persistence failure
(serve), 4 service unreachable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import signal
import sys
import threading

import requests

from . import __version__
from .api import build_server
from .config import ServiceConfig, load_config
from .errors import ConfigError, PersistenceError
from .interface_box import replay_trace
from .port_model import PortTrace
from .service import ControlService

DEFAULT_ADDR = "http://127.0.0.1:8477"

EXIT_OK = 0
EXIT_API_ERROR = 1
EXIT_USAGE = 2
EXIT_PERSISTENCE = 3
EXIT_UNREACHABLE = 4


class _ApiFailure(Exception):
    pass


class _Unreachable(Exception):
    pass


def _addr(args) -> str:
    return args.addr or os.environ.get("HEARTHCTL_ADDR") or DEFAULT_ADDR


def _request(args, method: str, path: str, body: dict | None = None) -> dict:
    base = _addr(args)
    url = base.rstrip("/") + path
    try:
        resp = requests.request(method, url, json=body, timeout=10)
    except requests.exceptions.RequestException as exc:
        print(f"error: service unreachable at {base}: {exc}", file=sys.stderr)
        raise _Unreachable() from None
    try:
        data = resp.json()
    except ValueError:
        data = {}
    if resp.status_code >= 400:
        err = data.get("error", {})
        code = err.get("code", resp.status_code)
        message = err.get("message", resp.reason)
        print(f"error: {code}: {message}", file=sys.stderr)
        raise _ApiFailure() from None
    return data


def _emit(args, data: dict, human) -> None:
    if args.json:
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        human(data)


# ----------------------------------------------------------------------
# Verb implementations


def _cmd_serve(args) -> int:
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args.config) if args.config else ServiceConfig()
    except ConfigError as exc:
        print(f"error: invalid-config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        service = ControlService(config)
    except PersistenceError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return EXIT_PERSISTENCE
    try:
        server = build_server(
            service,
            host=args.host,
            port=args.port,
            web_root=args.web_root or config.web_root,
        )
    except OSError as exc:
        print(f"error: cannot bind: {exc}", file=sys.stderr)
        service.close()
        return EXIT_API_ERROR

    service.start_background()
    host, port = server.server_address[:2]
    print(f"hearth service on http://{host}:{port} "
          f"(ports: {', '.join(f'0x{a:04X}' for a in config.ports)}, "
          f"clock: {config.clock.mode})", file=sys.stderr)

    stop = threading.Event()

    def _shutdown(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, _shutdown)
    signal.signal(signal.SIGTERM, _shutdown)
    server_thread = threading.Thread(target=server.serve_forever, daemon=True)
    server_thread.start()
    try:
        while not stop.wait(0.2):
            pass
    except KeyboardInterrupt:
        pass
    print("shutting down", file=sys.stderr)
    server.shutdown()
    service.close()
    return EXIT_OK


def _human_status(data: dict) -> None:
    print(f"master: {'on' if data['master'] else 'off'}")
    for port in data["ports"]:
        print(f"port {port['address']} latch {port['latch_hex']}")
    print(f"{'CH':>2} {'NAME':<18} {'KIND':<16} {'STATE':<5} LED")
    for a in data["appliances"]:
        led = "*" if a["led"] else "-"
        print(f"{a['channel']:>2} {a['name']:<18} {a['kind']:<16} {a['state']:<5} {led}")


def _cmd_status(args) -> int:
    appliances = _request(args, "GET", "/api/appliances")
    port = _request(args, "GET", "/api/port")
    data = {**appliances, "ports": port["ports"]}
    _emit(args, data, _human_status)
    return EXIT_OK


def _cmd_switch(args, state: str) -> int:
    data = _request(args, "PUT", f"/api/appliances/{args.selector}/state",
                    {"state": state})
    _emit(args, data, lambda d: print(
        f"{d['appliance']['name']} {d['appliance']['state']} "
        f"(latch {d['latch_hex']})"))
    return EXIT_OK


def _cmd_master(args) -> int:
    data = _request(args, "PUT", "/api/master", {"on": args.state == "on"})
    _emit(args, data, lambda d: print(f"master {'on' if d['master'] else 'off'}"))
    return EXIT_OK


def _cmd_timer_add(args) -> int:
    data = _request(args, "POST", "/api/timers", {
        "fire_at": args.at, "device": args.device, "state": args.state,
    })
    _emit(args, data, lambda d: print(
        f"timer {d['timer']['id']} {d['timer']['device']} "
        f"{d['timer']['desired']} at {d['timer']['fire_at']} ({d['timer']['status']})"))
    return EXIT_OK


def _human_timers(data: dict) -> None:
    print(f"{'ID':<12} {'FIRE_AT':<25} {'DEVICE':<18} {'STATE':<5} STATUS")
    for t in data["timers"]:
        device = t["device"] if t["device"] is not None else f"ch{t['channel']}"
        print(f"{t['id']:<12} {t['fire_at']:<25} {device:<18} {t['desired']:<5} {t['status']}")


def _cmd_timer_ls(args) -> int:
    path = "/api/timers"
    if args.status:
        path += f"?status={args.status}"
    data = _request(args, "GET", path)
    _emit(args, data, _human_timers)
    return EXIT_OK


def _cmd_timer_rm(args) -> int:
    data = _request(args, "DELETE", f"/api/timers/{args.id}")
    _emit(args, data, lambda d: print(f"timer {d['timer']['id']} {d['timer']['status']}"))
    return EXIT_OK


def _human_say(data: dict) -> None:
    result = data["result"]
    if result["accepted"]:
        print(f"recognized {result['word']!r} "
              f"(distance {result['distance']}, confidence {result['confidence']:.2f}) "
              f"-> {result['appliance']['name']} {result['appliance']['state']}")
    else:
        best = result.get("best")
        detail = (f" (best {best['word']!r} confidence {best['confidence']:.2f})"
                  if best else "")
        print(f"rejected: {result['reason']}{detail}")


def _cmd_say(args) -> int:
    utterance = " ".join(args.utterance)
    if utterance.startswith("word:"):
        body = {"word": utterance[len("word:"):].strip()}
    elif utterance.startswith("ph:"):
        body = {"phonemes": utterance[len("ph:"):].strip()}
    else:
        print("error: utterance must start with word: or ph:", file=sys.stderr)
        return EXIT_USAGE
    data = _request(args, "POST", "/api/utterance", body)
    _emit(args, data, _human_say)
    return EXIT_OK


def _cmd_events(args) -> int:
    data = _request(args, "GET", f"/api/events?since={args.since}")
    def human(d):
        for e in d["events"]:
            print(f"{e['seq']:>5} {e['ts']} {e['kind']:<18} {e['source']:<7} "
                  f"{json.dumps(e['payload'], sort_keys=True)}")
    _emit(args, data, human)
    return EXIT_OK


def _cmd_trace_replay(args) -> int:
    try:
        records = PortTrace.load(args.file)
    except OSError as exc:
        print(f"error: cannot read trace: {exc}", file=sys.stderr)
        return EXIT_API_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_API_ERROR
    states = replay_trace(records)
    if args.json:
        out = {
            f"0x{addr:04X}": {
                "latch": state.latch,
                "latch_hex": f"0x{state.latch:02X}",
                "powered_channels": list(state.powered_channels()),
            }
            for addr, state in sorted(states.items())
        }
        print(json.dumps({"writes": len(records), "ports": out}, indent=2, sort_keys=True))
    else:
        print(f"replayed {len(records)} writes (master assumed on)")
        for addr, state in sorted(states.items()):
            powered = ", ".join(str(c) for c in state.powered_channels()) or "none"
            print(f"port 0x{addr:04X}: latch 0x{state.latch:02X}, powered channels: {powered}")
    return EXIT_OK


# ----------------------------------------------------------------------
# Parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hearthctl",
        description="Control the hearth appliance service (manual, timer and voice modes).",
    )
    parser.add_argument("--version", action="version", version=f"hearthctl {__version__}")
    sub = parser.add_subparsers(dest="verb", required=True)

    def client(p):
        p.add_argument("--addr", help="service address (or HEARTHCTL_ADDR env var)")
        p.add_argument("--json", action="store_true", help="machine-readable output")
        return p

    p = sub.add_parser("serve", help="run the control service")
    p.add_argument("--config", help="path to JSON config file")
    p.add_argument("--host", help="override bind host")
    p.add_argument("--port", type=int, help="override bind port")
    p.add_argument("--web-root", help="serve the operator console from this directory")
    p.add_argument("--verbose", action="store_true")
    p.set_defaults(func=_cmd_serve)

    p = client(sub.add_parser("status", help="show appliances, latch and master state"))
    p.set_defaults(func=_cmd_status)

    p = client(sub.add_parser("on", help="turn an appliance on"))
    p.add_argument("selector", help="appliance name or channel number")
    p.set_defaults(func=lambda a: _cmd_switch(a, "on"))

    p = client(sub.add_parser("off", help="turn an appliance off"))
    p.add_argument("selector")
    p.set_defaults(func=lambda a: _cmd_switch(a, "off"))

    p = client(sub.add_parser("master", help="flip the interface-box power switch"))
    p.add_argument("state", choices=("on", "off"))
    p.set_defaults(func=_cmd_master)

    p = client(sub.add_parser("timer-add", help="schedule a one-shot state change"))
    p.add_argument("--at", required=True, help="fire time, RFC 3339")
    p.add_argument("--device", required=True, help="appliance name or channel")
    p.add_argument("--state", required=True, choices=("on", "off"))
    p.set_defaults(func=_cmd_timer_add)

    p = client(sub.add_parser("timer-ls", help="list timer jobs"))
    p.add_argument("--status", choices=("pending", "fired", "missed", "cancelled"))
    p.set_defaults(func=_cmd_timer_ls)

    p = client(sub.add_parser("timer-rm", help="cancel a pending timer job"))
    p.add_argument("id")
    p.set_defaults(func=_cmd_timer_rm)

    p = client(sub.add_parser("say", help="send a voice-style command"))
    p.add_argument("utterance", nargs="+",
                   help="word:<CommandWord> or ph:<SP-separated phonemes>")
    p.set_defaults(func=_cmd_say)

    p = client(sub.add_parser("events", help="read the event log"))
    p.add_argument("--since", type=int, default=0)
    p.set_defaults(func=_cmd_events)

    p = sub.add_parser("trace-replay", help="replay a port trace on a fresh simulator")
    p.add_argument("file")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=_cmd_trace_replay)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _ApiFailure:
        return EXIT_API_ERROR
    except _Unreachable:
        return EXIT_UNREACHABLE


if __name__ == "__main__":
    sys.exit(main())
