from __future__ import annotations

import threading
import time
from typing import Protocol

# 2023-11-14T22:13:20Z, a fixed start for simulated time
DEFAULT_EPOCH_MS = 1_700_000_000_000


class Clock(Protocol):
    def now_ms(self) -> int:
        ...


class SystemClock:
    """ Wall clock time in milliseconds """

    def now_ms(self) -> int:
        return time.time_ns() // 1_000_000


class ManualClock:
    """ A clock that only moves when told to; scenarios and tests drive it """

    def __init__(self, start_ms: int = DEFAULT_EPOCH_MS) -> None:
        self._now = start_ms
        self._lock = threading.Lock()

    def now_ms(self) -> int:
        with self._lock:
            return self._now

    def advance(self, ms: int) -> int:
        if ms < 0:
            raise ValueError("time does not run backwards")
        with self._lock:
            self._now += ms
            return self._now

    def set(self, now_ms: int) -> None:
        with self._lock:
            self._now = now_ms
