import sys
import threading
import time
from typing import TextIO

from tapn_reach.modules.search import SearchStats
from tapn_reach.modules.util import format_count, format_timedelta


class Spinner:
    symbols = ["🌑", "🌘", "🌗", "🌖", "🌕", "🌔", "🌓", "🌒"]

    def __init__(self, task_name: str = "search", update_interval: float = 0.5, stream: TextIO | None = None):
        self.task_name = task_name
        self.update_interval = update_interval
        self.stream = stream or sys.stderr
        self.current_symbol = 0
        self.explored = 0
        self.start_time = time.monotonic()
        self._stop_event = threading.Event()
        self._thread: threading.Thread | None = None

    def _update_spinner(self) -> None:
        self.stream.write(
            f"\rRunning {self.task_name} {self.symbols[self.current_symbol]} "
            f"{format_count(self.explored)} explored"
        )
        self.stream.flush()
        self.current_symbol = (self.current_symbol + 1) % len(self.symbols)

    def _spin(self) -> None:
        while not self._stop_event.is_set():
            self._update_spinner()
            self._stop_event.wait(self.update_interval)

    def update(self, stats: SearchStats) -> None:
        self.explored = stats.explored

    def start(self) -> None:
        self.start_time = time.monotonic()
        self._stop_event.clear()
        self._thread = threading.Thread(target=self._spin, daemon=True)
        self._thread.start()

    def stop(self) -> None:
        self._stop_event.set()
        if self._thread:
            self._thread.join()
        elapsed = format_timedelta(time.monotonic() - self.start_time)
        self.stream.write(f"\rFinished {self.task_name} in {elapsed}\n")
        self.stream.flush()

    def __enter__(self) -> "Spinner":
        self.start()
        return self

    def __exit__(self, *_: object) -> None:
        self.stop()
