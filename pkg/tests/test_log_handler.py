"""Tests for the in-memory log capture used by run manifests."""

import logging

from smbmsim.log_handler import MemoryLogHandler, get_log_handler, install_log_handler


def _record(level, msg, name="smbmsim.engine", created=None):
    record = logging.LogRecord(name, level, __file__, 1, msg, None, None)
    if created is not None:
        record.created = created
    return record


class TestMemoryLogHandler:
    def test_keeps_entries_in_order(self):
        handler = MemoryLogHandler()
        handler.emit(_record(logging.INFO, "first"))
        handler.emit(_record(logging.WARNING, "second"))
        entries = handler.get_entries()
        assert [e.message for e in entries] == ["first", "second"]
        assert entries[1].level == "WARNING"
        assert entries[1].logger_name == "smbmsim.engine"

    def test_bounded(self):
        handler = MemoryLogHandler(max_entries=3)
        for i in range(5):
            handler.emit(_record(logging.INFO, f"m{i}"))
        assert handler.count == 3
        assert [e.message for e in handler.get_entries()] == ["m2", "m3", "m4"]

    def test_level_filter(self):
        handler = MemoryLogHandler()
        for level in (logging.DEBUG, logging.INFO, logging.WARNING, logging.ERROR):
            handler.emit(_record(level, logging.getLevelName(level)))
        assert [e.message for e in handler.get_entries(level="warning")] == ["WARNING", "ERROR"]

    def test_since_and_limit(self):
        handler = MemoryLogHandler()
        for t in (10.0, 20.0, 30.0, 40.0):
            handler.emit(_record(logging.WARNING, f"at {t:g}", created=t))
        assert [e.message for e in handler.get_entries(since=25.0)] == ["at 30", "at 40"]
        assert [e.message for e in handler.get_entries(limit=1)] == ["at 40"]
        assert [w["message"] for w in handler.warnings(since=35.0)] == ["at 40"]

    def test_clear(self):
        handler = MemoryLogHandler()
        handler.emit(_record(logging.INFO, "x"))
        handler.clear()
        assert handler.count == 0

    def test_to_dict(self):
        handler = MemoryLogHandler()
        handler.emit(_record(logging.ERROR, "boom", created=1.5))
        assert handler.get_entries()[0].to_dict() == {
            "ts": 1.5, "level": "ERROR", "logger": "smbmsim.engine", "message": "boom",
        }


class TestInstall:
    def test_singleton_installed_once(self):
        handler = install_log_handler()
        assert handler is get_log_handler()
        install_log_handler()
        assert logging.getLogger().handlers.count(handler) == 1

    def test_captures_package_warnings_with_logger_name(self):
        handler = install_log_handler()
        logging.getLogger("smbmsim.engine").warning("SNR %.2f dB: only %d bit errors", 16.0, 3)
        (entry,) = handler.warnings()
        assert entry["level"] == "WARNING"
        assert entry["logger"] == "smbmsim.engine"
        assert entry["message"] == "smbmsim.engine: SNR 16.00 dB: only 3 bit errors"
