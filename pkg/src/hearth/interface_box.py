"""Simulated relay interface box.

Models the observable chain from latch byte to wall socket: each data bit
feeds a relay driver that energizes a 6V DC coil; the relay's normally-open
contact switches mains onto the socket and the panel LED mirrors the
socket.  The normally-closed contact only parks a dummy load, so it has no
observable behavior.  The master power switch cuts the whole box: with it
off nothing is energized or powered no matter what the latch holds, but
the latch itself is preserved.

`SimulatorBackend` plugs the box under a `PortBus`, standing in for a real
port driver.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping

from .clock import Clock, VirtualClock
from .port_model import (
    DATA_LINE_COUNT,
    PortBackend,
    TraceRecord,
    channel_mask,
    validate_byte,
)


class ContactPosition(Enum):
    NORMALLY_OPEN_CLOSED = "no-closed"    # coil energized: socket path closed
    NORMALLY_CLOSED_CLOSED = "nc-closed"  # coil at rest: dummy-load path closed


@dataclass(frozen=True)
class Relay:
    coil_energized: bool

    @property
    def contact(self) -> ContactPosition:
        if self.coil_energized:
            return ContactPosition.NORMALLY_OPEN_CLOSED
        return ContactPosition.NORMALLY_CLOSED_CLOSED


@dataclass(frozen=True)
class Socket:
    powered: bool


@dataclass(frozen=True)
class Led:
    lit: bool


@dataclass(frozen=True)
class InterfaceBoxConfig:
    mains_voltage: int = 220
    mains_freq_hz: int = 50
    coil_supply_v: int = 6
    relay_count: int = DATA_LINE_COUNT
    switch_delay_ms: int = 0  # simulated settle time; 0 keeps tests instant

    def __post_init__(self):
        if self.relay_count != DATA_LINE_COUNT:
            raise ValueError(f"relay count is fixed at {DATA_LINE_COUNT}")
        if self.switch_delay_ms < 0:
            raise ValueError("switch delay must be >= 0")


@dataclass(frozen=True)
class BoxState:
    """Immutable snapshot of one box; safe to hand to any reader."""

    address: int
    master_on: bool
    latch: int
    relays: tuple[Relay, ...]
    sockets: tuple[Socket, ...]
    leds: tuple[Led, ...]

    def powered_channels(self) -> tuple[int, ...]:
        return tuple(i for i, s in enumerate(self.sockets) if s.powered)


class InterfaceBox:
    """One eight-relay box bound to a port address."""

    def __init__(
        self,
        address: int,
        config: InterfaceBoxConfig | None = None,
        clock: Clock | None = None,
        master_on: bool = False,
    ):
        self.address = address
        self.config = config if config is not None else InterfaceBoxConfig()
        self._clock = clock if clock is not None else VirtualClock()
        self._master_on = master_on
        self._latch = 0x00

    @property
    def latch(self) -> int:
        return self._latch

    @property
    def master_on(self) -> bool:
        return self._master_on

    def apply_byte(self, value: int) -> BoxState:
        """Latch a byte and settle relays, sockets and LEDs."""
        validate_byte(value)
        self._latch = value
        self._settle()
        return self.snapshot()

    def set_master(self, on: bool) -> BoxState:
        """Flip the mains power switch; the latch is preserved."""
        self._master_on = bool(on)
        self._settle()
        return self.snapshot()

    def _settle(self) -> None:
        if self.config.switch_delay_ms:
            self._clock.sleep(self.config.switch_delay_ms / 1000.0)

    def snapshot(self) -> BoxState:
        energized = tuple(
            self._master_on and bool(self._latch & channel_mask(i))
            for i in range(DATA_LINE_COUNT)
        )
        return BoxState(
            address=self.address,
            master_on=self._master_on,
            latch=self._latch,
            relays=tuple(Relay(coil_energized=e) for e in energized),
            sockets=tuple(Socket(powered=e) for e in energized),
            leds=tuple(Led(lit=e) for e in energized),
        )


class SimulatorBackend(PortBackend):
    """Routes port bytes to the interface box bound to each address."""

    def __init__(self, boxes: Iterable[InterfaceBox] | Mapping[int, InterfaceBox]):
        if isinstance(boxes, Mapping):
            self._boxes = dict(boxes)
        else:
            self._boxes = {box.address: box for box in boxes}

    def box(self, addr: int) -> InterfaceBox:
        return self._boxes[addr]

    def boxes(self) -> tuple[InterfaceBox, ...]:
        return tuple(self._boxes[a] for a in sorted(self._boxes))

    def out(self, addr: int, value: int) -> None:
        self._boxes[addr].apply_byte(value)

    def inp(self, addr: int) -> int:
        return self._boxes[addr].latch


def replay_trace(
    records: Iterable[TraceRecord],
    master_on: bool = True,
    config: InterfaceBoxConfig | None = None,
) -> dict[int, BoxState]:
    """Re-apply a recorded write sequence to fresh boxes.

    Traces carry only port writes, so the master switch state is an input;
    it defaults to on, matching a box that was powered while recording.
    """
    boxes: dict[int, InterfaceBox] = {}
    for record in records:
        box = boxes.get(record.addr)
        if box is None:
            box = InterfaceBox(record.addr, config=config, master_on=master_on)
            boxes[record.addr] = box
        box.apply_byte(record.value)
    return {addr: box.snapshot() for addr, box in boxes.items()}
