import threading

import pytest

from hearth.clock import VirtualClock
from hearth.config import ServiceConfig
from hearth.service import ControlService

# One line per acceptance criterion, printed whether it passed or failed.
_ACCEPTANCE_PREFIX = "test_acceptance"


def pytest_runtest_logreport(report):
    if report.when != "call" or _ACCEPTANCE_PREFIX not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    word = "PASS" if report.passed else "FAIL"
    print(f"\n[{word}] {name}")


@pytest.fixture
def vclock():
    return VirtualClock()


@pytest.fixture
def service_factory(tmp_path):
    """Build services sharing one persistence dir unless told otherwise."""
    created = []

    def build(clock=None, persistence_dir=None, **overrides):
        overrides.setdefault("switch_delay_ms", 0)
        overrides.setdefault(
            "persistence_dir", str(persistence_dir or tmp_path / "state")
        )
        service = ControlService(
            ServiceConfig(**overrides), clock=clock or VirtualClock()
        )
        created.append(service)
        return service

    yield build
    for service in created:
        try:
            service.close()
        except Exception:
            pass


@pytest.fixture
def service(service_factory):
    return service_factory()


@pytest.fixture
def http_server():
    """Run a real HTTP server for a service; yields (server, base_url)."""
    from hearth.api import build_server

    running = []

    def start(service, web_root=None):
        server = build_server(service, host="127.0.0.1", port=0, web_root=web_root)
        thread = threading.Thread(
            target=lambda: server.serve_forever(poll_interval=0.05), daemon=True
        )
        thread.start()
        running.append((server, thread))
        host, port = server.server_address[:2]
        return server, f"http://{host}:{port}"

    yield start
    for server, thread in running:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)
