"""Acceptance suite.

One test per acceptance criterion; each prints a PASS/FAIL line via the
hook in conftest.py and enforces its runtime budget.  Every expected value
is computed by an independent oracle (bitwise fold, hand enumeration, or
replay) rather than by the code under test.
"""

import random
import time
from datetime import timedelta

import requests

from hearth.clock import VirtualClock, format_rfc3339
from hearth.cli import main as cli_main
from hearth.interface_box import InterfaceBox, SimulatorBackend, replay_trace
from hearth.port_model import LPT1_BASE, LPT2_BASE, PortBus, PortTrace
from hearth.registry import ApplianceRegistry, Power
from hearth.scheduler import TimerScheduler
from hearth.service import TIMER_FIRED
from hearth.voice import (
    CommandMatch,
    default_lexicon,
    disambiguate,
    edit_distance,
    parse_lexicon,
    recognize,
)

APPLIANCE_NAMES = ["Light", "Fan", "Heater", "WashingMachine",
                   "Motor", "TV", "Device7", "Device8"]


def fold_oracle(states):
    """Independent latch computation: OR of 1<<channel over appliances on."""
    latch = 0
    for channel, state in states.items():
        if state is Power.ON:
            latch |= 1 << channel
    return latch


def assert_three_way_consistent(service):
    expected = fold_oracle({a.channel: a.state for a in service.registry.states()})
    assert service.bus.read_byte(LPT1_BASE) == expected, "port latch disagrees"
    box = service.backend.box(LPT1_BASE)
    assert box.latch == expected, "box latch disagrees"
    assert set(box.snapshot().powered_channels()) == {
        i for i in range(8) if expected & (1 << i)
    }, "box sockets disagree"


def test_acceptance_three_mode_end_to_end(service, http_server, monkeypatch, capsys):
    """All eight appliances controlled via manual, timer and voice modes."""
    started = time.monotonic()
    _, base = http_server(service)
    monkeypatch.setenv("HEARTHCTL_ADDR", base)

    # Phase (a): manual mode, on over HTTP, off over the CLI.
    for name in APPLIANCE_NAMES:
        resp = requests.put(f"{base}/api/appliances/{name}/state",
                            json={"state": "on"}, timeout=5)
        assert resp.status_code == 200
    assert_three_way_consistent(service)
    assert service.bus.read_byte(LPT1_BASE) == 0xFF
    for name in APPLIANCE_NAMES:
        assert cli_main(["off", name]) == 0
    capsys.readouterr()
    assert_three_way_consistent(service)
    assert service.bus.read_byte(LPT1_BASE) == 0x00

    # Phase (b): timer mode, 16 one-shot jobs on the virtual clock.
    t0 = service.clock.now()
    for channel, name in enumerate(APPLIANCE_NAMES):
        on_at = format_rfc3339(t0 + timedelta(seconds=60))
        off_at = format_rfc3339(t0 + timedelta(seconds=120))
        for at, state in ((on_at, "on"), (off_at, "off")):
            resp = requests.post(f"{base}/api/timers",
                                 json={"fire_at": at, "device": name, "state": state},
                                 timeout=5)
            assert resp.status_code == 201
    service.clock.advance(65)
    service.tick()
    assert_three_way_consistent(service)
    assert service.bus.read_byte(LPT1_BASE) == 0xFF
    service.clock.advance(60)
    service.tick()
    assert_three_way_consistent(service)
    assert service.bus.read_byte(LPT1_BASE) == 0x00
    fired = [j for j in service.timers("fired")]
    assert len(fired) == 16

    # Phase (c): voice mode, 16 word-token commands.
    expected = 0
    for channel, name in enumerate(APPLIANCE_NAMES):
        resp = requests.post(f"{base}/api/utterance",
                             json={"word": f"{name}On"}, timeout=5)
        assert resp.json()["result"]["accepted"] is True
        expected |= 1 << channel
        assert service.bus.read_byte(LPT1_BASE) == expected
    assert_three_way_consistent(service)
    for channel, name in enumerate(APPLIANCE_NAMES):
        resp = requests.post(f"{base}/api/utterance",
                             json={"word": f"{name}Off"}, timeout=5)
        assert resp.json()["result"]["accepted"] is True
    assert_three_way_consistent(service)
    assert service.bus.read_byte(LPT1_BASE) == 0x00

    assert time.monotonic() - started < 10.0


def test_acceptance_port_exhaustiveness():
    """set/clear pin, latch round trip and the socket/LED/relay/bit
    equivalence checked over the full byte space, exact equality."""
    started = time.monotonic()
    bus = PortBus(addresses=(LPT1_BASE,), clock=VirtualClock())
    for old in range(256):
        for idx in range(8):
            bus.write_byte(LPT1_BASE, old)
            assert bus.set_pin(LPT1_BASE, idx) == old | (1 << idx)
            bus.write_byte(LPT1_BASE, old)
            assert bus.clear_pin(LPT1_BASE, idx) == old & ~(1 << idx)
    for value in range(256):
        bus.write_byte(LPT1_BASE, value)
        assert bus.read_byte(LPT1_BASE) == value

    box_on = InterfaceBox(LPT1_BASE, master_on=True)
    for value in range(256):
        state = box_on.apply_byte(value)
        bits = {i for i in range(8) if value & (1 << i)}
        assert {i for i, r in enumerate(state.relays) if r.coil_energized} == bits
        assert {i for i, s in enumerate(state.sockets) if s.powered} == bits
        assert {i for i, led in enumerate(state.leds) if led.lit} == bits
    box_off = InterfaceBox(LPT1_BASE, master_on=False)
    for value in range(256):
        state = box_off.apply_byte(value)
        assert state.latch == value
        assert not any(s.powered for s in state.sockets)

    assert time.monotonic() - started < 1.0


def _scheduler_run(seed):
    """One randomized day of jobs against the real registry, returning the
    job set, tick instants, resolution log and final states."""
    rng = random.Random(seed)
    clock = VirtualClock()
    t0 = clock.now()
    bus = PortBus(addresses=(LPT1_BASE,), clock=clock)
    registry = ApplianceRegistry(bus)
    for channel, name in enumerate(APPLIANCE_NAMES):
        registry.register(channel, name)
    resolutions = []
    scheduler = TimerScheduler(
        clock,
        grace_s=60,
        on_fired=lambda job: (registry.set_state(job.channel, job.desired, source="timer"),
                              resolutions.append((job.seq, "fired"))),
        on_missed=lambda job: resolutions.append((job.seq, "missed")),
        channel_ok=registry.has_channel,
    )
    jobs = []
    for _ in range(1000):
        if rng.random() < 0.10:
            offset = -rng.uniform(61, 7200)  # overdue beyond grace
        else:
            offset = rng.uniform(0, 86400)
        jobs.append(scheduler.add_job(t0 + timedelta(seconds=offset),
                                      rng.randrange(8), rng.choice(["on", "off"])))
    ticks = []
    now = t0
    horizon = t0 + timedelta(seconds=86400 + 120)
    while now <= horizon:
        ticks.append(now)
        scheduler.tick(now)
        now += timedelta(seconds=30)
    final = {a.channel: a.state for a in registry.states()}
    return jobs, ticks, resolutions, final, bus.read_byte(LPT1_BASE)


def _replay_oracle(jobs, ticks, grace_s):
    final = {channel: Power.OFF for channel in range(8)}
    for job in sorted(jobs, key=lambda j: (j.fire_at, j.seq)):
        first_tick = next((t for t in ticks if t >= job.fire_at), None)
        if first_tick is None:
            continue
        if (first_tick - job.fire_at).total_seconds() <= grace_s:
            final[job.channel] = job.desired
    return final


def test_acceptance_scheduler_oracle_equivalence():
    """1000 randomized jobs resolve exactly as the independent
    (fire_at, seq)-sorted replay oracle says, deterministically."""
    started = time.monotonic()
    runs = [_scheduler_run(seed=0xD1CE) for _ in range(3)]
    for jobs, ticks, _, final, latch in runs:
        assert final == _replay_oracle(jobs, ticks, grace_s=60)
        assert latch == fold_oracle(final)
    assert runs[0][2] == runs[1][2] == runs[2][2]  # identical resolution logs
    assert runs[0][3] == runs[1][3] == runs[2][3]
    assert time.monotonic() - started < 5.0


def test_acceptance_recognizer():
    """16/16 self-recognition at distance 0, grammar-resolved homophones,
    determinism, and rejection below the 0.6 confidence threshold."""
    started = time.monotonic()
    lexicon = default_lexicon()

    hits = 0
    for entry in lexicon.command_entries():
        ranked = recognize(entry.phonemes, lexicon)
        if ranked[0].word == entry.word and ranked[0].distance == 0:
            hits += 1
    assert hits == 16
    # The guarantee depends on all command entries being pairwise distinct.
    commands = lexicon.command_entries()
    min_pairwise = min(
        edit_distance(a.phonemes, b.phonemes)
        for i, a in enumerate(commands) for b in commands[i + 1:]
    )
    assert min_pairwise >= 1

    homophones = parse_lexicon(["write\tR AY T", "right\tR AY T"])
    outcome = disambiguate(recognize("R AY T", homophones), grammar={"right"})
    assert isinstance(outcome, CommandMatch)
    assert outcome.word == "right"

    utterance = "L AY T AA N"
    assert recognize(utterance, lexicon) == recognize(utterance, lexicon)

    gibberish = recognize("ZH ZH ZH ZH ZH ZH ZH ZH ZH ZH", lexicon)
    assert max(m.confidence for m in gibberish) < 0.6
    rejection = disambiguate(gibberish, lexicon.command_words(), threshold=0.6)
    assert rejection.reason == "low-confidence"

    assert time.monotonic() - started < 1.0


def test_acceptance_crash_recovery(tmp_path, service_factory):
    """Snapshot with 3 appliances on and 2 pending jobs survives a restart;
    the job due during downtime fires exactly once; latches are rewritten."""
    started = time.monotonic()
    clock = VirtualClock()
    first = service_factory(clock=clock, persistence_dir=tmp_path / "state",
                            grace_window_s=60.0)
    for name in ("Light", "Heater", "Motor"):
        first.set_appliance(name, "on")
    downtime_job = first.add_timer(clock.now() + timedelta(seconds=30), "Fan", "on")
    first.add_timer(clock.now() + timedelta(hours=2), "TV", "on")
    first.save_snapshot()
    # Crash: the first service is simply abandoned.

    second = service_factory(clock=VirtualClock(clock.now() + timedelta(seconds=50)),
                             persistence_dir=tmp_path / "state", grace_window_s=60.0)
    states = {a.name: a.state for a in second.registry.states()}
    assert states["Light"] is Power.ON
    assert states["Heater"] is Power.ON
    assert states["Motor"] is Power.ON
    assert states["Fan"] is Power.ON  # fired on recovery, 20s late < grace
    fired_events = [e for e in second.events_since(0) if e.kind == TIMER_FIRED]
    assert [e.payload["id"] for e in fired_events] == [downtime_job.id]
    assert len(second.timers("pending")) == 1  # the far-future job

    expected = fold_oracle({a.channel: a.state for a in second.registry.states()})
    assert second.bus.read_byte(LPT1_BASE) == expected
    assert second.backend.box(LPT1_BASE).latch == expected

    # Recovering again from the rewritten snapshot changes nothing.
    third = service_factory(clock=VirtualClock(clock.now() + timedelta(seconds=60)),
                            persistence_dir=tmp_path / "state", grace_window_s=60.0)
    assert [e.payload["id"] for e in third.events_since(0)
            if e.kind == TIMER_FIRED] == [downtime_job.id]
    assert {a.name: a.state for a in third.registry.states()} == states

    assert time.monotonic() - started < 2.0


def test_acceptance_trace_replay():
    """50 random write sequences of 100 writes each replay to identical
    final box states."""
    started = time.monotonic()
    rng = random.Random(0x7AC3)
    for _ in range(50):
        addresses = (LPT1_BASE, LPT2_BASE)
        boxes = [InterfaceBox(addr, master_on=True) for addr in addresses]
        trace = PortTrace()
        bus = PortBus(addresses=addresses, backend=SimulatorBackend(boxes),
                      trace=trace, clock=VirtualClock())
        for _ in range(100):
            bus.write_byte(rng.choice(addresses), rng.randrange(256))
        live = {box.address: box.snapshot() for box in boxes}
        assert replay_trace(trace.records) == live
    assert time.monotonic() - started < 1.0
