"""
log_handler.py — In-memory log capture for SmbmSim runs.

A long sweep logs a line per SNR point and a warning for every point that
ran out of blocks before collecting enough bit errors. Those warnings belong
in the run manifest next to the CSV, not only on a terminal that may be gone
by the time anyone looks at the results.

MemoryLogHandler keeps the most recent records in a bounded deque. The CLI
installs it on the root logger for the duration of a run and copies every
WARNING-or-above entry into the manifest.
"""

import logging
from collections import deque
from dataclasses import dataclass
from typing import List, Optional


MAX_LOG_ENTRIES = 1000


@dataclass
class LogEntry:
    """A captured log record."""
    timestamp: float           # Unix timestamp
    level: str                 # "DEBUG", "INFO", "WARNING", ...
    logger_name: str           # e.g. "smbmsim.engine"
    message: str

    def to_dict(self) -> dict:
        return {
            "ts": self.timestamp,
            "level": self.level,
            "logger": self.logger_name,
            "message": self.message,
        }


class MemoryLogHandler(logging.Handler):
    """Logging handler that keeps the last `max_entries` records."""

    def __init__(self, max_entries: int = MAX_LOG_ENTRIES):
        super().__init__()
        self._buffer: deque = deque(maxlen=max_entries)

    def emit(self, record: logging.LogRecord) -> None:
        try:
            self._buffer.append(LogEntry(
                timestamp=record.created,
                level=record.levelname,
                logger_name=record.name,
                message=self.format(record),
            ))
        except Exception:
            self.handleError(record)

    def get_entries(
        self,
        level: Optional[str] = None,
        since: Optional[float] = None,
        limit: Optional[int] = None,
    ) -> List[LogEntry]:
        """Entries in arrival order, optionally filtered by minimum level and start time."""
        level_num = getattr(logging, level.upper(), 0) if level else 0
        entries = list(self._buffer)
        if since is not None:
            entries = [e for e in entries if e.timestamp >= since]
        if level_num > 0:
            entries = [e for e in entries if getattr(logging, e.level, 0) >= level_num]
        return entries if limit is None else entries[-limit:]

    def warnings(self, since: Optional[float] = None) -> List[dict]:
        """WARNING-or-above entries as manifest dicts, oldest first."""
        return [e.to_dict() for e in self.get_entries(level="WARNING", since=since)]

    def clear(self) -> None:
        self._buffer.clear()

    @property
    def count(self) -> int:
        return len(self._buffer)


# ─── Singleton Instance ───

_handler: Optional[MemoryLogHandler] = None


def get_log_handler() -> MemoryLogHandler:
    """Get or create the singleton MemoryLogHandler."""
    global _handler
    if _handler is None:
        _handler = MemoryLogHandler()
        _handler.setFormatter(logging.Formatter("%(name)s: %(message)s"))
        _handler.setLevel(logging.DEBUG)
    return _handler


def install_log_handler() -> MemoryLogHandler:
    """Attach the singleton to the root logger (once)."""
    handler = get_log_handler()
    root = logging.getLogger()
    if handler not in root.handlers:
        root.addHandler(handler)
    return handler
