"""The control plane tying everything together.

All mutations (manual, timer, voice, master switch) funnel through one
lock, so the event log is a total order and the registry, port latches
and simulator boxes can never be observed out of step.  Every mutation
appends an event that is flushed to disk before the call returns and
fanned out to stream subscribers; a slow subscriber is dropped rather
than allowed to stall anyone else.

State survives restarts through a JSON snapshot (appliance states,
pending timer jobs, latches) plus the append-only event log.  Recovery
reloads the snapshot, re-arms pending jobs, resolves anything that came
due while the service was down under the usual grace rule, and rewrites
the latches through the backend so the simulated hardware matches.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .clock import Clock, RealClock, VirtualClock, format_rfc3339, parse_rfc3339
from .config import ServiceConfig
from .errors import (
    BadRequestError,
    CorruptSnapshotError,
    PersistenceError,
    UnknownChannelError,
    UnknownWordError,
)
from .interface_box import InterfaceBox, InterfaceBoxConfig, SimulatorBackend
from .port_model import CHANNELS_PER_PORT, PortBus, PortTrace, pin_levels
from .registry import Appliance, ApplianceRegistry, Power
from .scheduler import JobStatus, TimerJob, TimerScheduler
from .voice import Rejection, default_lexicon, disambiguate, execute, interpret_word, load_lexicon, parse_phonemes, recognize

log = logging.getLogger(__name__)

SNAPSHOT_SCHEMA_VERSION = 1

# Event kinds.
STATE_CHANGED = "StateChanged"
TIMER_FIRED = "TimerFired"
TIMER_MISSED = "TimerMissed"
COMMAND_RECOGNIZED = "CommandRecognized"
COMMAND_REJECTED = "CommandRejected"
MASTER_SWITCHED = "MasterSwitched"


@dataclass(frozen=True)
class Event:
    seq: int
    ts: datetime
    kind: str
    source: str  # manual | timer | voice | system
    payload: dict

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "ts": format_rfc3339(self.ts),
            "kind": self.kind,
            "source": self.source,
            "payload": self.payload,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Event":
        return cls(
            seq=data["seq"],
            ts=parse_rfc3339(data["ts"]),
            kind=data["kind"],
            source=data["source"],
            payload=data.get("payload", {}),
        )


class Subscription:
    """One stream subscriber: an initial full-state message, then events.

    The queue is bounded; when a push would block, the subscriber is
    marked dropped and its stream terminates instead of slowing writers.
    """

    def __init__(self, initial: dict, maxsize: int = 256):
        self._q: queue.Queue = queue.Queue(maxsize=maxsize)
        self._q.put(initial)
        self.dropped = False
        self.closed = False

    def push(self, message: dict) -> bool:
        if self.closed or self.dropped:
            return False
        try:
            self._q.put_nowait(message)
            return True
        except queue.Full:
            self.dropped = True
            return False

    def close(self) -> None:
        self.closed = True

    def messages(self, poll_s: float = 0.25):
        """Yield messages as they arrive; None is a keepalive opportunity."""
        while True:
            try:
                yield self._q.get(timeout=poll_s)
            except queue.Empty:
                if self.closed or self.dropped:
                    return
                yield None


class ControlService:
    def __init__(self, config: ServiceConfig | None = None, clock: Clock | None = None):
        self.config = config if config is not None else ServiceConfig()
        self.clock = clock if clock is not None else self._build_clock(self.config)
        self._tz = self.config.tzinfo()
        self._lock = threading.RLock()
        self._subs: list[Subscription] = []
        self._stop = threading.Event()
        self._threads: list[threading.Thread] = []

        root = Path(self.config.persistence_dir)
        try:
            root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise PersistenceError(f"cannot create persistence dir {root}: {exc}") from None
        self.snapshot_path = root / "snapshot.json"
        self.events_path = root / "events.jsonl"
        trace_path = self.config.trace_file or str(root / "port-trace.log")

        self._events: list[Event] = []
        self._next_seq = 1
        self._load_event_log()
        try:
            self._event_fh = open(self.events_path, "a", encoding="utf-8")
        except OSError as exc:
            raise PersistenceError(f"cannot open event log {self.events_path}: {exc}") from None

        box_config = InterfaceBoxConfig(switch_delay_ms=self.config.switch_delay_ms)
        self._boxes = {
            addr: InterfaceBox(addr, config=box_config, clock=self.clock)
            for addr in self.config.ports
        }
        self.trace = PortTrace(trace_path)
        self.backend = SimulatorBackend(self._boxes)
        self.bus = PortBus(self.config.ports, backend=self.backend, trace=self.trace, clock=self.clock)
        self.registry = ApplianceRegistry(self.bus, on_change=self._record_state_change)
        for spec in self.config.appliances:
            self.registry.register(spec.channel, spec.name, spec.kind)
        self.scheduler = TimerScheduler(
            self.clock,
            grace_s=self.config.grace_window_s,
            on_fired=self._on_job_fired,
            on_missed=self._on_job_missed,
            channel_ok=self.registry.has_channel,
            default_tz=self._tz,
        )
        self.lexicon = (
            load_lexicon(self.config.lexicon_path)
            if self.config.lexicon_path
            else default_lexicon()
        )
        self._master = False
        self._recover()

    @staticmethod
    def _build_clock(config: ServiceConfig) -> Clock:
        if config.clock.mode == "virtual":
            start = parse_rfc3339(config.clock.start) if config.clock.start else None
            return VirtualClock(start)
        return RealClock()

    # ------------------------------------------------------------------
    # Event log

    def _load_event_log(self) -> None:
        if not self.events_path.exists():
            return
        try:
            lines = self.events_path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise PersistenceError(f"cannot read event log {self.events_path}: {exc}") from None
        for i, line in enumerate(lines):
            if not line.strip():
                continue
            try:
                self._events.append(Event.from_json(json.loads(line)))
            except (json.JSONDecodeError, KeyError) as exc:
                if i == len(lines) - 1:
                    # A torn final line means the last append never completed.
                    log.warning("dropping torn tail of event log: %s", exc)
                    break
                raise PersistenceError(
                    f"corrupt event log {self.events_path} at line {i + 1}: {exc}"
                ) from None
        if self._events:
            self._next_seq = self._events[-1].seq + 1

    def _append_event(self, kind: str, source: str, payload: dict) -> Event:
        with self._lock:
            event = Event(seq=self._next_seq, ts=self.clock.now(), kind=kind,
                          source=source, payload=payload)
            self._next_seq += 1
            try:
                self._event_fh.write(json.dumps(event.to_json()) + "\n")
                self._event_fh.flush()
            except (OSError, ValueError) as exc:
                raise PersistenceError(f"event append failed: {exc}") from None
            self._events.append(event)
            self._publish(event.to_json())
            return event

    def _publish(self, message: dict) -> None:
        for sub in list(self._subs):
            if not sub.push(message):
                sub.close()
                self._subs.remove(sub)

    def events_since(self, since: int = 0) -> list[Event]:
        with self._lock:
            return [e for e in self._events if e.seq > since]

    @property
    def latest_seq(self) -> int:
        with self._lock:
            return self._next_seq - 1

    # ------------------------------------------------------------------
    # Mutations

    def _record_state_change(self, appliance: Appliance, latch: int, source: str) -> None:
        addr = self.registry.port_for(appliance.channel)
        self._append_event(STATE_CHANGED, source, {
            "name": appliance.name,
            "channel": appliance.channel,
            "kind": appliance.kind,
            "state": appliance.state.value,
            "latch": latch,
            "port": f"0x{addr:04X}",
        })

    def set_appliance(self, selector, state, source: str = "manual") -> dict:
        with self._lock:
            latch = self.registry.set_state(selector, state, source=source)
            appliance = self.registry.get(selector)
            return {"appliance": self._appliance_dict(appliance), "latch": latch,
                    "latch_hex": f"0x{latch:02X}"}

    def set_master(self, on: bool, source: str = "manual") -> dict:
        with self._lock:
            for box in self._boxes.values():
                box.set_master(on)
            self._master = bool(on)
            self._append_event(MASTER_SWITCHED, source, {"on": self._master})
            return {"master": self._master}

    def _apply_master_silently(self, on: bool) -> None:
        for box in self._boxes.values():
            box.set_master(on)
        self._master = bool(on)

    @property
    def master_on(self) -> bool:
        return self._master

    # Timers ------------------------------------------------------------

    def add_timer(self, fire_at, selector, state) -> TimerJob:
        with self._lock:
            channel = self.registry.resolve(selector)
            job = self.scheduler.add_job(fire_at, channel, state)
            self.save_snapshot()
            return job

    def cancel_timer(self, job_id: str) -> TimerJob:
        with self._lock:
            job = self.scheduler.cancel_job(job_id)
            self.save_snapshot()
            return job

    def timers(self, status=None) -> list[TimerJob]:
        return self.scheduler.list_jobs(status)

    def tick(self, now: datetime | None = None) -> list[TimerJob]:
        """Resolve due jobs at `now` (defaults to the clock); persists the
        outcome so a fired job can never fire again after a crash."""
        with self._lock:
            resolved = self.scheduler.tick(now)
            if resolved:
                self.save_snapshot()
            return resolved

    def _on_job_fired(self, job: TimerJob) -> None:
        self._append_event(TIMER_FIRED, "timer", self._job_payload(job))
        self.registry.set_state(job.channel, job.desired, source="timer")

    def _on_job_missed(self, job: TimerJob) -> None:
        self._append_event(TIMER_MISSED, "timer", self._job_payload(job))

    def _job_payload(self, job: TimerJob) -> dict:
        return {
            "id": job.id,
            "channel": job.channel,
            "device": self._device_name(job.channel),
            "desired": job.desired.value,
            "fire_at": format_rfc3339(job.fire_at),
            "seq": job.seq,
        }

    def _device_name(self, channel: int) -> str | None:
        try:
            return self.registry.get(channel).name
        except Exception:
            return None

    def job_dict(self, job: TimerJob) -> dict:
        return {
            "id": job.id,
            "fire_at": format_rfc3339(job.fire_at),
            "channel": job.channel,
            "device": self._device_name(job.channel),
            "desired": job.desired.value,
            "seq": job.seq,
            "status": job.status.value,
        }

    # Voice ---------------------------------------------------------------

    def utterance(self, word: str | None = None, phonemes=None) -> dict:
        if (word is None) == (phonemes is None):
            raise BadRequestError("provide exactly one of 'word' or 'phonemes'")
        with self._lock:
            if word is not None:
                return self._utter_word(word)
            return self._utter_phonemes(phonemes)

    def _utter_word(self, word: str) -> dict:
        try:
            binding = interpret_word(word, self.lexicon)
        except UnknownWordError:
            self._append_event(COMMAND_REJECTED, "voice",
                               {"reason": "unknown-word", "input": word})
            raise
        if not self.registry.has_channel(binding.channel):
            self._append_event(COMMAND_REJECTED, "voice",
                               {"reason": "unknown-channel", "input": word})
            raise UnknownChannelError(
                f"command {word!r} targets unregistered channel {binding.channel}"
            )
        canonical = self.lexicon.get(word).word
        self._append_event(COMMAND_RECOGNIZED, "voice", {
            "word": canonical, "distance": 0, "confidence": 1.0,
            "channel": binding.channel, "state": binding.state.value,
        })
        latch = execute(binding, self.registry)
        return self._voice_result(canonical, 0, 1.0, binding, latch)

    def _utter_phonemes(self, phonemes) -> dict:
        symbols = parse_phonemes(phonemes)
        matches = recognize(symbols, self.lexicon)
        grammar = {
            e.word for e in self.lexicon.command_entries()
            if self.registry.has_channel(e.binding.channel)
        }
        outcome = disambiguate(matches, grammar, threshold=self.config.threshold)
        if isinstance(outcome, Rejection):
            best = outcome.best
            self._append_event(COMMAND_REJECTED, "voice", {
                "reason": outcome.reason,
                "utterance": " ".join(symbols),
                "best_word": best.word if best else None,
                "confidence": best.confidence if best else None,
            })
            return {
                "accepted": False,
                "reason": outcome.reason,
                "best": None if best is None else {
                    "word": best.word,
                    "distance": best.distance,
                    "confidence": round(best.confidence, 4),
                },
            }
        self._append_event(COMMAND_RECOGNIZED, "voice", {
            "word": outcome.word, "distance": outcome.distance,
            "confidence": round(outcome.confidence, 4),
            "channel": outcome.binding.channel, "state": outcome.binding.state.value,
        })
        latch = execute(outcome.binding, self.registry)
        return self._voice_result(
            outcome.word, outcome.distance, outcome.confidence, outcome.binding, latch
        )

    def _voice_result(self, word, distance, confidence, binding, latch) -> dict:
        return {
            "accepted": True,
            "word": word,
            "distance": distance,
            "confidence": round(confidence, 4),
            "binding": {"channel": binding.channel, "state": binding.state.value},
            "appliance": self._appliance_dict(self.registry.get(binding.channel)),
            "latch": latch,
            "latch_hex": f"0x{latch:02X}",
        }

    # ------------------------------------------------------------------
    # Read side

    def _appliance_dict(self, appliance: Appliance) -> dict:
        addr = self.registry.port_for(appliance.channel)
        snap = self._boxes[addr].snapshot()
        bit = appliance.channel % CHANNELS_PER_PORT
        return {
            "name": appliance.name,
            "channel": appliance.channel,
            "kind": appliance.kind,
            "state": appliance.state.value,
            "led": snap.leds[bit].lit,
            "socket_powered": snap.sockets[bit].powered,
        }

    def appliances(self) -> dict:
        with self._lock:
            return {
                "appliances": [self._appliance_dict(a) for a in self.registry.states()],
                "master": self._master,
            }

    def port_status(self) -> dict:
        with self._lock:
            ports = []
            for addr in self.bus.addresses:
                latch = self.bus.read_byte(addr)
                ports.append({
                    "address": f"0x{addr:04X}",
                    "latch": latch,
                    "latch_hex": f"0x{latch:02X}",
                    "pins": [level.value for level in pin_levels(latch)],
                })
            return {"ports": ports, "master": self._master,
                    "now": format_rfc3339(self.clock.now()),
                    "trace_file": self.trace.path}

    # ------------------------------------------------------------------
    # Persistence

    def save_snapshot(self) -> Path:
        with self._lock:
            snapshot = {
                "schema_version": SNAPSHOT_SCHEMA_VERSION,
                "saved_at": format_rfc3339(self.clock.now()),
                "config_checksum": self.config.checksum(),
                "master_on": self._master,
                "appliances": [
                    {"channel": a.channel, "name": a.name, "kind": a.kind,
                     "state": a.state.value}
                    for a in self.registry.states()
                ],
                "jobs": [
                    self.job_dict(j) for j in self.scheduler.list_jobs(JobStatus.PENDING)
                ],
                "latches": {
                    f"0x{addr:04X}": self.bus.read_byte(addr) for addr in self.bus.addresses
                },
            }
            tmp = self.snapshot_path.with_suffix(".json.tmp")
            try:
                tmp.write_text(json.dumps(snapshot, indent=2), encoding="utf-8")
                os.replace(tmp, self.snapshot_path)
            except OSError as exc:
                raise PersistenceError(f"snapshot save failed: {exc}") from None
            return self.snapshot_path

    def _recover(self) -> None:
        if self.snapshot_path.exists():
            self._restore_snapshot()
        else:
            self._apply_master_silently(self.config.master_on)
        # Resolve anything that came due while the service was down.
        self.tick()
        self.save_snapshot()

    def _restore_snapshot(self) -> None:
        path = self.snapshot_path
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptSnapshotError(f"corrupt snapshot at {path}: {exc}") from None
        if not isinstance(data, dict) or data.get("schema_version") != SNAPSHOT_SCHEMA_VERSION:
            raise CorruptSnapshotError(
                f"corrupt snapshot at {path}: unsupported schema "
                f"{data.get('schema_version') if isinstance(data, dict) else data!r}"
            )
        for key in ("appliances", "jobs", "master_on"):
            if key not in data:
                raise CorruptSnapshotError(f"corrupt snapshot at {path}: missing {key!r}")
        if data.get("config_checksum") != self.config.checksum():
            log.warning("snapshot %s was saved under a different config; "
                        "restoring matching channels only", path)
        try:
            states = {
                int(a["channel"]): Power.parse(a["state"]) for a in data["appliances"]
            }
            self._apply_master_silently(bool(data["master_on"]))
            self.registry.restore(states)
            for raw in data["jobs"]:
                if not self.registry.has_channel(int(raw["channel"])):
                    log.warning("dropping restored job %s for unknown channel %s",
                                raw.get("id"), raw.get("channel"))
                    continue
                self.scheduler.restore_job(TimerJob(
                    id=str(raw["id"]),
                    fire_at=parse_rfc3339(raw["fire_at"], self._tz),
                    channel=int(raw["channel"]),
                    desired=Power.parse(raw["desired"]),
                    seq=int(raw["seq"]),
                    status=JobStatus.PENDING,
                ))
        except (KeyError, TypeError, ValueError) as exc:
            raise CorruptSnapshotError(f"corrupt snapshot at {path}: {exc}") from None

    # ------------------------------------------------------------------
    # Streaming

    def subscribe(self, maxsize: int = 256) -> Subscription:
        with self._lock:
            initial = {
                "kind": "FullState",
                "seq": self.latest_seq,
                "payload": self._full_state(),
            }
            sub = Subscription(initial, maxsize=maxsize)
            self._subs.append(sub)
            return sub

    def unsubscribe(self, sub: Subscription) -> None:
        with self._lock:
            sub.close()
            if sub in self._subs:
                self._subs.remove(sub)

    def _full_state(self) -> dict:
        return {
            "appliances": [self._appliance_dict(a) for a in self.registry.states()],
            "master": self._master,
            "timers": [self.job_dict(j) for j in self.scheduler.list_jobs()],
            "ports": self.port_status()["ports"],
            "now": format_rfc3339(self.clock.now()),
        }

    # ------------------------------------------------------------------
    # Background driving (serve mode)

    def start_background(self) -> None:
        """Start the tick and snapshot threads; idempotent."""
        if self._threads:
            return
        self._stop.clear()
        tick = threading.Thread(target=self._tick_loop, name="hearth-tick", daemon=True)
        snap = threading.Thread(target=self._snapshot_loop, name="hearth-snapshot", daemon=True)
        self._threads = [tick, snap]
        tick.start()
        snap.start()

    def _tick_loop(self) -> None:
        interval = self.config.clock.tick_interval_s
        while not self._stop.wait(interval):
            try:
                if isinstance(self.clock, VirtualClock):
                    self.clock.advance(self.config.clock.virtual_step_s)
                self.tick()
            except Exception:
                log.exception("scheduler tick failed")

    def _snapshot_loop(self) -> None:
        while not self._stop.wait(self.config.snapshot_interval_s):
            try:
                self.save_snapshot()
            except Exception:
                log.exception("periodic snapshot failed")

    def close(self) -> None:
        self._stop.set()
        for thread in self._threads:
            thread.join(timeout=5)
        self._threads = []
        with self._lock:
            try:
                self.save_snapshot()
            except PersistenceError:
                log.exception("final snapshot failed")
            for sub in self._subs:
                sub.close()
            self._subs = []
            self._event_fh.close()
            self.trace.close()
