"""Live-server fixture: a real uvicorn instance on a random port."""

import socket
import threading
import time

import pytest
import requests
import uvicorn

from exdr_sidecar.app import TraceRecorder, create_app
from exdr_sidecar.providers import HashedProvider, StubGenerator


def free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class LiveSidecar:
    def __init__(self, app, port):
        self.port = port
        self.base_url = f"http://127.0.0.1:{port}"
        config = uvicorn.Config(app, host="127.0.0.1", port=port, log_level="error")
        self.server = uvicorn.Server(config)
        self.thread = threading.Thread(target=self.server.run, daemon=True)

    def start(self, timeout=15.0):
        self.thread.start()
        deadline = time.time() + timeout
        while time.time() < deadline:
            try:
                if requests.get(f"{self.base_url}/health", timeout=1).status_code == 200:
                    return self
            except requests.ConnectionError:
                pass
            time.sleep(0.05)
        raise RuntimeError("sidecar did not come up")

    def stop(self):
        self.server.should_exit = True
        self.thread.join(timeout=10)


def launch(provider=None, generator=None, recorder=None):
    app = create_app(
        provider or HashedProvider(),
        generator=generator,
        recorder=recorder,
        max_request_bytes=1024 * 1024,
    )
    return LiveSidecar(app, free_port()).start()


@pytest.fixture
def live_sidecar():
    server = launch(generator=StubGenerator())
    yield server
    server.stop()


@pytest.fixture
def recording_sidecar(tmp_path):
    trace_path = tmp_path / "traces.jsonl"
    server = launch(generator=StubGenerator(), recorder=TraceRecorder(str(trace_path)))
    yield server, trace_path
    server.stop()
