from pathlib import Path
from typing import Dict

import pytest

from provenance_ipc.config import Config
from provenance_ipc.ipc_bus.bus import Bus
from provenance_ipc.scenarios.clock import ManualClock

GOLDEN = Path(__file__).parent / "golden" / "encodings.txt"


def pytest_configure(config):
    config.addinivalue_line("markers", "bench: timing shape checks, slower than the rest")


def load_golden() -> Dict[str, bytes]:
    values = {}
    for line in GOLDEN.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, value = (part.strip() for part in line.split("=", 1))
        values[name] = bytes.fromhex(value)
    return values


@pytest.fixture(scope="session")
def golden() -> Dict[str, bytes]:
    return load_golden()


@pytest.fixture
def config() -> Config:
    return Config(call_timeout_s=2.0)


@pytest.fixture
def clock() -> ManualClock:
    return ManualClock()


@pytest.fixture
def bus(config):
    with Bus(config) as b:
        yield b
