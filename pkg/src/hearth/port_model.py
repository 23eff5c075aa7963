"""Bit-exact model of the PC parallel-port data register.

The 25-pin connector exposes 8 data lines, 4 control lines, 5 status lines
and 8 ground pins; only the data lines carry behavior here.  Data bit i
drives channel i (device i+1): writing a 1 puts the pin at TTL high
(nominal +5V) and turns the device on, a 0 puts it at low (0V) and turns
it off.  The latch holds the last byte written and powers up as 0x00 so
every appliance starts off.

Byte I/O goes through a pluggable backend (the stand-in for a kernel-mode
port driver), so the same code path drives a plain in-memory latch or the
full interface-box simulator.  Every write can be mirrored to an
append-only trace for record/replay.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass
from enum import Enum
from typing import IO, Iterable

from .clock import Clock, RealClock, unix_millis
from .errors import ChannelRangeError, UnknownPortError

# Base I/O addresses a port may be configured at.
LPT1_BASE = 0x378
LPT2_BASE = 0x278
LPT3_BASE = 0x3BC  # no ECP at this address on real hardware
KNOWN_ADDRESSES = (LPT1_BASE, LPT2_BASE, LPT3_BASE)

DATA_LINE_COUNT = 8
CHANNELS_PER_PORT = DATA_LINE_COUNT


class PinLevel(Enum):
    LOW = 0   # nominal 0V
    HIGH = 1  # nominal +5V


@dataclass(frozen=True)
class LineGroups:
    """Connector pin numbers by line group; metadata only."""

    data: tuple[int, ...] = (2, 3, 4, 5, 6, 7, 8, 9)
    control: tuple[int, ...] = (1, 14, 16, 17)
    status: tuple[int, ...] = (10, 11, 12, 13, 15)
    ground: tuple[int, ...] = (18, 19, 20, 21, 22, 23, 24, 25)

    def __post_init__(self):
        counts = (len(self.data), len(self.control), len(self.status), len(self.ground))
        if counts != (8, 4, 5, 8):
            raise ValueError(f"line group counts must be 8/4/5/8, got {counts}")
        groups = self.data + self.control + self.status + self.ground
        if len(set(groups)) != len(groups):
            raise ValueError("line groups must be disjoint")


def validate_byte(value: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 0xFF:
        raise ValueError(f"data byte out of range: {value!r}")
    return value


def validate_channel(idx: int) -> int:
    if not isinstance(idx, int) or isinstance(idx, bool) or not 0 <= idx < CHANNELS_PER_PORT:
        raise ChannelRangeError(f"channel index out of range [0,7]: {idx!r}")
    return idx


def channel_mask(idx: int) -> int:
    """One-hot mask for a channel: bit idx set, everything else clear."""
    return 1 << validate_channel(idx)


def pin_levels(value: int) -> tuple[PinLevel, ...]:
    """TTL level of each data line for a latch byte, D0 first."""
    validate_byte(value)
    return tuple(
        PinLevel.HIGH if value & channel_mask(i) else PinLevel.LOW
        for i in range(DATA_LINE_COUNT)
    )


class PortBackend:
    """Out/in byte operations against a port address."""

    def out(self, addr: int, value: int) -> None:
        raise NotImplementedError

    def inp(self, addr: int) -> int:
        raise NotImplementedError


class LatchBackend(PortBackend):
    """Plain in-memory latch per address; the no-hardware default."""

    def __init__(self):
        self._latches: dict[int, int] = {}

    def out(self, addr: int, value: int) -> None:
        self._latches[addr] = value

    def inp(self, addr: int) -> int:
        return self._latches.get(addr, 0x00)


TRACE_LINE = re.compile(r"^(\d+) OUT 0x([0-9a-fA-F]{4}) 0x([0-9a-fA-F]{2})$")


@dataclass(frozen=True)
class TraceRecord:
    """One port write: `<unix_millis> OUT 0xHHHH 0xHH`."""

    millis: int
    addr: int
    value: int

    def line(self) -> str:
        return f"{self.millis} OUT 0x{self.addr:04X} 0x{self.value:02X}"

    @classmethod
    def parse(cls, line: str) -> "TraceRecord":
        m = TRACE_LINE.match(line.strip())
        if m is None:
            raise ValueError(f"bad trace record: {line!r}")
        return cls(millis=int(m.group(1)), addr=int(m.group(2), 16), value=int(m.group(3), 16))


class PortTrace:
    """Append-only record of every byte written, optionally mirrored to a file."""

    def __init__(self, path: str | None = None):
        self.records: list[TraceRecord] = []
        self.path = path
        self._fh: IO[str] | None = open(path, "a", encoding="ascii") if path else None

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)
        if self._fh is not None:
            self._fh.write(record.line() + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    @staticmethod
    def load(path: str) -> list[TraceRecord]:
        with open(path, encoding="ascii") as fh:
            return [TraceRecord.parse(line) for line in fh if line.strip()]


class PortBus:
    """Validated byte path to the configured port addresses.

    Writes are serialized by an internal lock (single-writer contract);
    reads return the latest committed latch.
    """

    def __init__(
        self,
        addresses: Iterable[int] = (LPT1_BASE,),
        backend: PortBackend | None = None,
        trace: PortTrace | None = None,
        clock: Clock | None = None,
    ):
        self._addresses = tuple(addresses)
        if not self._addresses:
            raise ValueError("at least one port address required")
        for addr in self._addresses:
            if addr not in KNOWN_ADDRESSES:
                raise UnknownPortError(f"unsupported port address 0x{addr:04X}")
        self._backend = backend if backend is not None else LatchBackend()
        self._trace = trace
        self._clock = clock if clock is not None else RealClock()
        self._lock = threading.RLock()

    @property
    def addresses(self) -> tuple[int, ...]:
        return self._addresses

    @property
    def backend(self) -> PortBackend:
        return self._backend

    def _check_addr(self, addr: int) -> int:
        if addr not in self._addresses:
            raise UnknownPortError(f"port 0x{addr:04X} is not configured")
        return addr

    def write_byte(self, addr: int, value: int) -> None:
        self._check_addr(addr)
        validate_byte(value)
        with self._lock:
            self._backend.out(addr, value)
            if self._trace is not None:
                self._trace.append(TraceRecord(unix_millis(self._clock.now()), addr, value))

    def read_byte(self, addr: int) -> int:
        self._check_addr(addr)
        return self._backend.inp(addr)

    def set_pin(self, addr: int, idx: int) -> int:
        """Raise data line idx to high; returns the new latch byte."""
        mask = channel_mask(idx)
        with self._lock:
            value = self.read_byte(addr) | mask
            self.write_byte(addr, value)
        return value

    def clear_pin(self, addr: int, idx: int) -> int:
        """Drop data line idx to low; returns the new latch byte."""
        mask = channel_mask(idx)
        with self._lock:
            value = self.read_byte(addr) & ~mask & 0xFF
            self.write_byte(addr, value)
        return value
