"""Service configuration: JSON schema, validation and defaults.

Validation errors name the offending field path so a bad config file is
diagnosable from the error message alone.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from zoneinfo import ZoneInfo

from .errors import ConfigError
from .port_model import CHANNELS_PER_PORT, KNOWN_ADDRESSES, LPT1_BASE, LPT2_BASE, LPT3_BASE

PORT_NAMES = {"LPT1": LPT1_BASE, "LPT2": LPT2_BASE, "LPT3": LPT3_BASE}

DEFAULT_BIND_HOST = "127.0.0.1"
DEFAULT_BIND_PORT = 8477

DEFAULT_APPLIANCES = (
    {"channel": 0, "name": "Light", "kind": "light"},
    {"channel": 1, "name": "Fan", "kind": "fan"},
    {"channel": 2, "name": "Heater", "kind": "heater"},
    {"channel": 3, "name": "WashingMachine", "kind": "washing-machine"},
    {"channel": 4, "name": "Motor", "kind": "motor"},
    {"channel": 5, "name": "TV", "kind": "tv"},
    {"channel": 6, "name": "Device7", "kind": "device"},
    {"channel": 7, "name": "Device8", "kind": "device"},
)


@dataclass(frozen=True)
class ApplianceSpec:
    channel: int
    name: str
    kind: str = "device"


@dataclass(frozen=True)
class ClockConfig:
    mode: str = "real"  # real | virtual
    start: str | None = None  # virtual clock start instant, RFC 3339
    tick_interval_s: float = 1.0  # real seconds between scheduler ticks
    virtual_step_s: float = 10.0  # virtual seconds added per tick in virtual mode


@dataclass(frozen=True)
class ServiceConfig:
    ports: tuple[int, ...] = (LPT1_BASE,)
    appliances: tuple[ApplianceSpec, ...] = tuple(
        ApplianceSpec(**spec) for spec in DEFAULT_APPLIANCES
    )
    grace_window_s: float = 60.0
    threshold: float = 0.6
    timezone: str = "UTC"
    persistence_dir: str = "./hearth-data"
    bind_host: str = DEFAULT_BIND_HOST
    bind_port: int = DEFAULT_BIND_PORT
    master_on: bool = True
    switch_delay_ms: int = 10
    lexicon_path: str | None = None  # None selects the shipped lexicon
    trace_file: str | None = None  # None puts port-trace.log under persistence_dir
    snapshot_interval_s: float = 30.0
    clock: ClockConfig = field(default_factory=ClockConfig)
    web_root: str | None = None

    def tzinfo(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)

    def channel_count(self) -> int:
        return CHANNELS_PER_PORT * len(self.ports)

    def checksum(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        ).hexdigest()

    def to_dict(self) -> dict:
        return {
            "ports": [f"0x{a:04X}" for a in self.ports],
            "appliances": [
                {"channel": a.channel, "name": a.name, "kind": a.kind}
                for a in self.appliances
            ],
            "grace_window_s": self.grace_window_s,
            "threshold": self.threshold,
            "timezone": self.timezone,
            "persistence_dir": self.persistence_dir,
            "bind_host": self.bind_host,
            "bind_port": self.bind_port,
            "master_on": self.master_on,
            "switch_delay_ms": self.switch_delay_ms,
            "lexicon_path": self.lexicon_path,
            "trace_file": self.trace_file,
            "snapshot_interval_s": self.snapshot_interval_s,
            "clock": {
                "mode": self.clock.mode,
                "start": self.clock.start,
                "tick_interval_s": self.clock.tick_interval_s,
                "virtual_step_s": self.clock.virtual_step_s,
            },
            "web_root": self.web_root,
        }


def _fail(path: str, message: str) -> ConfigError:
    return ConfigError(f"{path}: {message}")


def _require(data: dict, known: set[str], path: str) -> None:
    for key in data:
        if key not in known:
            raise _fail(f"{path}{key}" if path else key, "unknown configuration key")


def _number(value, path: str, minimum=None) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _fail(path, "must be a number")
    if minimum is not None and value < minimum:
        raise _fail(path, f"must be >= {minimum}")
    return float(value)


def _parse_port(value, path: str) -> int:
    if isinstance(value, str):
        name = value.strip().upper()
        if name in PORT_NAMES:
            return PORT_NAMES[name]
        try:
            value = int(name, 16) if name.lower().startswith("0x") else int(name)
        except ValueError:
            raise _fail(path, f"unknown port {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, int):
        raise _fail(path, "must be an address or LPT1/LPT2/LPT3")
    if value not in KNOWN_ADDRESSES:
        known = ", ".join(f"0x{a:04X}" for a in KNOWN_ADDRESSES)
        raise _fail(path, f"address 0x{value:04X} not in supported set {{{known}}}")
    return value


def _parse_appliance(value, path: str, channel_count: int) -> ApplianceSpec:
    if not isinstance(value, dict):
        raise _fail(path, "must be an object with channel and name")
    _require(value, {"channel", "name", "kind"}, f"{path}.")
    channel = value.get("channel")
    if isinstance(channel, bool) or not isinstance(channel, int):
        raise _fail(f"{path}.channel", "must be an integer")
    if not 0 <= channel < channel_count:
        raise _fail(f"{path}.channel", f"must be in [0,{channel_count - 1}]")
    name = value.get("name")
    if not isinstance(name, str) or not name.strip():
        raise _fail(f"{path}.name", "must be a non-empty string")
    kind = value.get("kind", "device")
    if not isinstance(kind, str):
        raise _fail(f"{path}.kind", "must be a string")
    return ApplianceSpec(channel=channel, name=name.strip(), kind=kind)


def _parse_clock(value, path: str) -> ClockConfig:
    if not isinstance(value, dict):
        raise _fail(path, "must be an object")
    _require(value, {"mode", "start", "tick_interval_s", "virtual_step_s"}, f"{path}.")
    mode = value.get("mode", "real")
    if mode not in ("real", "virtual"):
        raise _fail(f"{path}.mode", "must be 'real' or 'virtual'")
    start = value.get("start")
    if start is not None and not isinstance(start, str):
        raise _fail(f"{path}.start", "must be an RFC 3339 string")
    return ClockConfig(
        mode=mode,
        start=start,
        tick_interval_s=_number(value.get("tick_interval_s", 1.0), f"{path}.tick_interval_s", 0.01),
        virtual_step_s=_number(value.get("virtual_step_s", 10.0), f"{path}.virtual_step_s", 0.0),
    )


_TOP_LEVEL_KEYS = {
    "ports", "appliances", "grace_window_s", "threshold", "timezone",
    "persistence_dir", "bind_host", "bind_port", "master_on", "switch_delay_ms",
    "lexicon_path", "trace_file", "snapshot_interval_s", "clock", "web_root",
}


def config_from_dict(data: dict) -> ServiceConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be a JSON object")
    _require(data, _TOP_LEVEL_KEYS, "")
    defaults = ServiceConfig()

    ports_raw = data.get("ports", ["LPT1"])
    if not isinstance(ports_raw, list) or not ports_raw:
        raise _fail("ports", "must be a non-empty list")
    ports = tuple(_parse_port(p, f"ports[{i}]") for i, p in enumerate(ports_raw))
    if len(set(ports)) != len(ports):
        raise _fail("ports", "addresses must be unique")

    channel_count = CHANNELS_PER_PORT * len(ports)
    appliances_raw = data.get("appliances", list(DEFAULT_APPLIANCES))
    if not isinstance(appliances_raw, list):
        raise _fail("appliances", "must be a list")
    appliances = tuple(
        _parse_appliance(a, f"appliances[{i}]", channel_count)
        for i, a in enumerate(appliances_raw)
    )
    channels = [a.channel for a in appliances]
    if len(set(channels)) != len(channels):
        raise _fail("appliances", "channels must be unique")
    names = [a.name.casefold() for a in appliances]
    if len(set(names)) != len(names):
        raise _fail("appliances", "names must be unique (case-insensitive)")

    timezone_name = data.get("timezone", defaults.timezone)
    if not isinstance(timezone_name, str):
        raise _fail("timezone", "must be an IANA timezone name")
    try:
        ZoneInfo(timezone_name)
    except Exception:
        raise _fail("timezone", f"unknown timezone {timezone_name!r}") from None

    threshold = _number(data.get("threshold", defaults.threshold), "threshold", 0.0)
    if threshold > 1.0:
        raise _fail("threshold", "must be <= 1.0")

    for key in ("persistence_dir", "bind_host"):
        if key in data and (not isinstance(data[key], str) or not data[key]):
            raise _fail(key, "must be a non-empty string")
    for key in ("lexicon_path", "trace_file", "web_root"):
        if key in data and data[key] is not None and not isinstance(data[key], str):
            raise _fail(key, "must be a string or null")

    bind_port = data.get("bind_port", defaults.bind_port)
    if isinstance(bind_port, bool) or not isinstance(bind_port, int) or not 0 <= bind_port <= 65535:
        raise _fail("bind_port", "must be an integer in [0,65535]")

    master_on = data.get("master_on", defaults.master_on)
    if not isinstance(master_on, bool):
        raise _fail("master_on", "must be a boolean")

    switch_delay_ms = data.get("switch_delay_ms", defaults.switch_delay_ms)
    if isinstance(switch_delay_ms, bool) or not isinstance(switch_delay_ms, int) or switch_delay_ms < 0:
        raise _fail("switch_delay_ms", "must be an integer >= 0")

    return ServiceConfig(
        ports=ports,
        appliances=appliances,
        grace_window_s=_number(data.get("grace_window_s", defaults.grace_window_s), "grace_window_s", 0.0),
        threshold=threshold,
        timezone=timezone_name,
        persistence_dir=data.get("persistence_dir", defaults.persistence_dir),
        bind_host=data.get("bind_host", defaults.bind_host),
        bind_port=bind_port,
        master_on=master_on,
        switch_delay_ms=switch_delay_ms,
        lexicon_path=data.get("lexicon_path"),
        trace_file=data.get("trace_file"),
        snapshot_interval_s=_number(
            data.get("snapshot_interval_s", defaults.snapshot_interval_s), "snapshot_interval_s", 1.0
        ),
        clock=_parse_clock(data.get("clock", {}), "clock"),
        web_root=data.get("web_root"),
    )


def load_config(path: str) -> ServiceConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return config_from_dict(data)
