"""Per-stage wall-clock timers and the serialized result reporter."""

import json
import logging
import sys
import threading
import time
from contextlib import contextmanager
from typing import Dict, Iterator, Optional, TextIO

logger = logging.getLogger(__name__)


class StageTimer:
    """Accumulates wall-clock milliseconds per named stage."""

    def __init__(self):
        self._totals: Dict[str, float] = {}
        self._lock = threading.Lock()

    @contextmanager
    def stage(self, name: str) -> Iterator[None]:
        started = time.perf_counter()
        try:
            yield
        finally:
            elapsed = (time.perf_counter() - started) * 1000.0
            with self._lock:
                self._totals[name] = self._totals.get(name, 0.0) + elapsed

    def totals(self) -> Dict[str, float]:
        with self._lock:
            return dict(self._totals)

    def summary(self) -> str:
        totals = self.totals()
        overall = sum(totals.values()) or 1.0
        return '\n'.join(f"{name:<12} {ms:10.1f} ms  {100.0 * ms / overall:5.1f}%"
                         for name, ms in sorted(totals.items(), key=lambda kv: -kv[1]))


class Reporter:
    """Writes one record per result, human-readable or as json-lines; safe across threads."""

    def __init__(self, json_lines: bool = False, stream: Optional[TextIO] = None):
        self.json_lines = json_lines
        self.stream = stream or sys.stdout
        self._lock = threading.Lock()

    def record(self, stage: str, verdict: str, time_ms: float, depth: Optional[int] = None,
               text: Optional[str] = None) -> None:
        if self.json_lines:
            entry = {'stage': stage, 'verdict': verdict, 'time-ms': round(time_ms, 3)}
            if depth is not None:
                entry['depth'] = depth
            line = json.dumps(entry, sort_keys=True)
        else:
            line = text if text is not None else verdict
        with self._lock:
            print(line, file=self.stream)
            self.stream.flush()

    def note(self, text: str) -> None:
        """Free text; suppressed in json-lines mode."""
        if self.json_lines:
            logger.info(text)
            return
        with self._lock:
            print(text, file=self.stream)
