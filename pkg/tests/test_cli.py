import json
from datetime import timedelta

import pytest

from hearth.clock import format_rfc3339
from hearth.cli import main
from hearth.registry import Power


@pytest.fixture
def cli(service, http_server, monkeypatch):
    _, base = http_server(service)
    monkeypatch.setenv("HEARTHCTL_ADDR", base)
    return service


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_on_then_status_shows_on(cli, capsys):
    code, _, _ = run(capsys, "on", "Light")
    assert code == 0
    code, out, _ = run(capsys, "status")
    assert code == 0
    line = next(l for l in out.splitlines() if "Light" in l)
    assert " on " in f"{line} "
    assert cli.registry.get("Light").state is Power.ON


def test_off_by_channel(cli, capsys):
    run(capsys, "on", "2")
    code, out, _ = run(capsys, "off", "2")
    assert code == 0
    assert "Heater off" in out


def test_say_word_equals_manual_on(cli, capsys):
    code, out, _ = run(capsys, "say", "word:LightOn")
    assert code == 0
    assert "recognized 'LightOn'" in out
    assert cli.registry.get("Light").state is Power.ON
    run(capsys, "off", "Light")
    run(capsys, "on", "Light")
    assert cli.registry.get("Light").state is Power.ON


def test_say_phonemes(cli, capsys):
    code, out, _ = run(capsys, "say", "ph:F", "AE", "N", "AA", "N")
    assert code == 0
    assert "FanOn" in out


def test_say_requires_prefix(cli, capsys):
    code, _, err = run(capsys, "say", "LightOn")
    assert code == 2
    assert "word:" in err


def test_master_off(cli, capsys):
    code, out, _ = run(capsys, "master", "off")
    assert code == 0
    assert "master off" in out
    assert cli.master_on is False


def test_timer_add_ls_rm(cli, capsys):
    at = format_rfc3339(cli.clock.now() + timedelta(minutes=10))
    code, out, _ = run(capsys, "timer-add", "--at", at, "--device", "Fan",
                       "--state", "on")
    assert code == 0
    job_id = out.split()[1]

    code, out, _ = run(capsys, "timer-ls")
    assert job_id in out and "pending" in out

    code, out, _ = run(capsys, "timer-rm", job_id)
    assert code == 0
    assert "cancelled" in out


def test_timer_past_beyond_grace_listed_missed(cli, capsys):
    at = format_rfc3339(cli.clock.now() - timedelta(hours=2))
    code, _, _ = run(capsys, "timer-add", "--at", at, "--device", "Fan",
                     "--state", "on")
    assert code == 0
    cli.tick()
    code, out, _ = run(capsys, "timer-ls", "--status", "missed")
    assert code == 0
    assert "missed" in out
    assert cli.registry.get("Fan").state is Power.OFF


def test_events_listing(cli, capsys):
    run(capsys, "on", "Light")
    code, out, _ = run(capsys, "events", "--since", "0")
    assert code == 0
    assert "StateChanged" in out


def test_json_output_round_trips(cli, capsys):
    code, out, _ = run(capsys, "status", "--json")
    assert code == 0
    data = json.loads(out)
    assert len(data["appliances"]) == 8

    code, out, _ = run(capsys, "events", "--since", "0", "--json")
    assert json.loads(out)["latest"] >= 0


def test_api_error_exits_1(cli, capsys):
    code, _, err = run(capsys, "on", "Toaster")
    assert code == 1
    assert "unknown-appliance" in err


def test_unreachable_service_exits_4(capsys, monkeypatch):
    monkeypatch.setenv("HEARTHCTL_ADDR", "http://127.0.0.1:1")
    code, _, err = run(capsys, "status")
    assert code == 4
    assert "unreachable" in err


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["no-such-verb"])
    assert exc.value.code == 2


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["status", "--frobnicate"])
    assert exc.value.code == 2


def test_trace_replay_matches_live_run(cli, capsys, tmp_path):
    run(capsys, "on", "Light")
    run(capsys, "on", "Heater")
    run(capsys, "off", "Light")
    trace_path = cli.trace.path
    code, out, _ = run(capsys, "trace-replay", trace_path)
    assert code == 0
    assert "latch 0x04" in out
    assert "powered channels: 2" in out


def test_trace_replay_json(cli, capsys):
    run(capsys, "on", "Fan")
    code, out, _ = run(capsys, "trace-replay", cli.trace.path, "--json")
    assert code == 0
    data = json.loads(out)
    assert data["ports"]["0x0378"]["latch"] == 0x02


def test_trace_replay_missing_file(capsys, tmp_path):
    code, _, err = run(capsys, "trace-replay", str(tmp_path / "nope.log"))
    assert code == 1
    assert "cannot read trace" in err
