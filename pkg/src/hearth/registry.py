"""Appliance names bound to port channels.

The registry is the single mutation path from "turn device X on/off" to a
port byte: every state change recomputes the owning port's latch as the OR
of the masks of all appliances currently on, then writes it through the
bus.  Channels are numbered globally across configured ports, eight per
port, so channel c lives on port c // 8 at data bit c % 8.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable

from .errors import (
    DuplicateChannelError,
    DuplicateNameError,
    UnknownApplianceError,
    UnknownChannelError,
)
from .port_model import CHANNELS_PER_PORT, PortBus, channel_mask

log = logging.getLogger(__name__)


class Power(str, Enum):
    ON = "on"
    OFF = "off"

    @classmethod
    def parse(cls, value) -> "Power":
        if isinstance(value, cls):
            return value
        if isinstance(value, bool):
            return cls.ON if value else cls.OFF
        if isinstance(value, str):
            lowered = value.strip().lower()
            if lowered in ("on", "off"):
                return cls(lowered)
        raise ValueError(f"power state must be 'on' or 'off', got {value!r}")


@dataclass(frozen=True)
class Appliance:
    channel: int
    name: str
    kind: str
    state: Power


# Called after each committed state change: (appliance, latch, source).
ChangeHook = Callable[[Appliance, int, str], None]


class ApplianceRegistry:
    def __init__(self, bus: PortBus, on_change: ChangeHook | None = None):
        self._bus = bus
        self._on_change = on_change
        self._by_channel: dict[int, Appliance] = {}
        self._names: dict[str, int] = {}  # casefolded name -> channel
        self._version = 0
        self._lock = threading.RLock()

    @property
    def channel_count(self) -> int:
        return CHANNELS_PER_PORT * len(self._bus.addresses)

    @property
    def version(self) -> int:
        """Mutation counter; bumps on every committed state change."""
        return self._version

    def has_channel(self, channel: int) -> bool:
        with self._lock:
            return channel in self._by_channel

    def port_for(self, channel: int) -> int:
        if not 0 <= channel < self.channel_count:
            raise UnknownChannelError(
                f"channel {channel} outside configured range [0,{self.channel_count - 1}]"
            )
        return self._bus.addresses[channel // CHANNELS_PER_PORT]

    def register(self, channel: int, name: str, kind: str = "device") -> Appliance:
        if not isinstance(name, str) or not name.strip():
            raise ValueError("appliance name must be a non-empty string")
        name = name.strip()
        with self._lock:
            self.port_for(channel)  # validates range against configured ports
            if channel in self._by_channel:
                raise DuplicateChannelError(f"channel {channel} already registered")
            if name.casefold() in self._names:
                raise DuplicateNameError(f"appliance name {name!r} already in use")
            appliance = Appliance(channel=channel, name=name, kind=kind, state=Power.OFF)
            self._by_channel[channel] = appliance
            self._names[name.casefold()] = channel
            return appliance

    def remove(self, selector) -> Appliance:
        """Drop an appliance; its bit is forced off first."""
        with self._lock:
            appliance = self.get(selector)
            if appliance.state is Power.ON:
                self.set_state(appliance.channel, Power.OFF, source="system")
                appliance = self._by_channel[appliance.channel]
            del self._by_channel[appliance.channel]
            del self._names[appliance.name.casefold()]
            return appliance

    def rename(self, selector, new_name: str) -> Appliance:
        """Rename in place; the channel binding never moves."""
        if not isinstance(new_name, str) or not new_name.strip():
            raise ValueError("appliance name must be a non-empty string")
        new_name = new_name.strip()
        with self._lock:
            appliance = self.get(selector)
            folded = new_name.casefold()
            if folded in self._names and self._names[folded] != appliance.channel:
                raise DuplicateNameError(f"appliance name {new_name!r} already in use")
            del self._names[appliance.name.casefold()]
            renamed = replace(appliance, name=new_name)
            self._by_channel[appliance.channel] = renamed
            self._names[folded] = appliance.channel
            return renamed

    def resolve(self, selector) -> int:
        """Map a name or channel number to a channel.

        Names win when a numeric string is also a registered name.
        """
        with self._lock:
            if isinstance(selector, int) and not isinstance(selector, bool):
                if selector in self._by_channel:
                    return selector
                raise UnknownApplianceError(f"no appliance on channel {selector}")
            if isinstance(selector, str):
                folded = selector.strip().casefold()
                if folded in self._names:
                    if folded.isdigit() and int(folded) in self._by_channel:
                        log.warning(
                            "selector %r matches both a name and a channel; using the name",
                            selector,
                        )
                    return self._names[folded]
                if folded.isdigit() and int(folded) in self._by_channel:
                    return int(folded)
            raise UnknownApplianceError(f"unknown appliance: {selector!r}")

    def get(self, selector) -> Appliance:
        with self._lock:
            return self._by_channel[self.resolve(selector)]

    def set_state(self, selector, state, source: str = "manual") -> int:
        """Commit a state change and write the owning port's latch.

        Returns the new latch byte.  The change hook fires on every call,
        including no-op repeats, so each command stays observable.
        """
        state = Power.parse(state)
        with self._lock:
            channel = self.resolve(selector)
            appliance = replace(self._by_channel[channel], state=state)
            self._by_channel[channel] = appliance
            latch = self._write_port(self.port_for(channel))
            self._version += 1
            hook = self._on_change
            if hook is not None:
                hook(appliance, latch, source)
            return latch

    def restore(self, states: dict[int, Power]) -> None:
        """Set states in bulk without firing hooks, then rewrite every latch.

        Used by crash recovery: the restored states are not new changes,
        but the port hardware must be brought back in line with them.
        """
        with self._lock:
            for channel, state in states.items():
                if channel not in self._by_channel:
                    log.warning("ignoring restored state for unknown channel %d", channel)
                    continue
                self._by_channel[channel] = replace(
                    self._by_channel[channel], state=Power.parse(state)
                )
            for addr in self._bus.addresses:
                self._write_port(addr)

    def _write_port(self, addr: int) -> int:
        latch = 0x00
        base = self._bus.addresses.index(addr) * CHANNELS_PER_PORT
        for channel, appliance in self._by_channel.items():
            if appliance.state is Power.ON and base <= channel < base + CHANNELS_PER_PORT:
                latch |= channel_mask(channel % CHANNELS_PER_PORT)
        self._bus.write_byte(addr, latch)
        return latch

    def states(self) -> list[Appliance]:
        """Consistent snapshot of every appliance, ordered by channel."""
        with self._lock:
            return [self._by_channel[c] for c in sorted(self._by_channel)]

    def snapshot_with_version(self) -> tuple[int, list[Appliance]]:
        """Snapshot plus the mutation count it reflects, captured atomically."""
        with self._lock:
            return self._version, self.states()
