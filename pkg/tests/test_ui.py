"""Unit tests for proxima.ui: number formatting, report helpers, log handler."""

from __future__ import annotations

import io
import logging

import pytest
from rich.console import Console

from proxima.ui import (
    ProximaLogHandler,
    error,
    fmt,
    fmt_point,
    info_panel,
    results_table,
    section,
    status_msg,
    success,
    warning,
)


def _capture_console() -> tuple[Console, io.StringIO]:
    """Return a (console, buffer) pair that captures Rich output."""
    buf = io.StringIO()
    con = Console(file=buf, force_terminal=True, width=120)
    return con, buf


class TestFmt:
    @pytest.mark.parametrize(
        "value,expected",
        [
            (0.5, "0.5"),
            (1 / 0.7, "1.4285714"),
            (0.35000000000000003, "0.35"),
            (2.0, "2"),
            (5 ** 0.5, "2.2360680"),
            (1.25, "1.25"),
            (1 + 3e-8, "1.0000000"),
            (-0.0, "0"),
            (-1e-12, "0"),
            (-1.5, "-1.5"),
        ],
    )
    def test_values(self, value, expected):
        assert fmt(value) == expected

    def test_point(self):
        assert fmt_point((1.0,)) == "1"
        assert fmt_point((1.0, -0.25)) == "(1,-0.25)"


class TestHelpers:
    def test_section(self, monkeypatch):
        con, buf = _capture_console()
        monkeypatch.setattr("proxima.ui.console", con)
        section("CERTIFY")
        assert "CERTIFY" in buf.getvalue()

    def test_info_panel(self, monkeypatch):
        con, buf = _capture_console()
        monkeypatch.setattr("proxima.ui.console", con)
        info_panel("INSTANCE", {"family": "midpoint", "D": "2"})
        output = buf.getvalue()
        assert "INSTANCE" in output
        assert "family" in output
        assert "midpoint" in output

    def test_results_table(self, monkeypatch):
        con, buf = _capture_console()
        monkeypatch.setattr("proxima.ui.console", con)
        results_table("Regions", ["label", "count"], [["Delta1", 3], ["Delta2", 4]])
        output = buf.getvalue()
        assert "Regions" in output
        assert "Delta2" in output

    def test_status_msg(self, monkeypatch):
        con, buf = _capture_console()
        monkeypatch.setattr("proxima.ui.console", con)
        status_msg("sampling pairs")
        assert "sampling pairs" in buf.getvalue()

    def test_success(self, monkeypatch):
        con, buf = _capture_console()
        monkeypatch.setattr("proxima.ui.console", con)
        success("certified")
        output = buf.getvalue()
        assert "certified" in output
        assert "✓" in output

    def test_error(self, monkeypatch):
        con, buf = _capture_console()
        monkeypatch.setattr("proxima.ui.err_console", con)
        error("bad instance")
        output = buf.getvalue()
        assert "bad instance" in output
        assert "✗" in output

    def test_warning(self, monkeypatch):
        con, buf = _capture_console()
        monkeypatch.setattr("proxima.ui.console", con)
        warning("heads up")
        assert "heads up" in buf.getvalue()

    def test_markup_is_escaped(self, monkeypatch):
        con, buf = _capture_console()
        monkeypatch.setattr("proxima.ui.console", con)
        status_msg("keys ['K'] and [bold]")
        assert "['K']" in buf.getvalue()
        assert "[bold]" in buf.getvalue()


class TestProximaLogHandler:
    def _log(self, name: str, level: int, msg: str) -> str:
        con, buf = _capture_console()
        handler = ProximaLogHandler(console=con)
        logger = logging.getLogger(name)
        logger.addHandler(handler)
        logger.setLevel(logging.DEBUG)
        try:
            logger.log(level, msg)
        finally:
            logger.removeHandler(handler)
        return buf.getvalue()

    def test_info_has_bullet(self):
        output = self._log("test_ui_info", logging.INFO, "hello info")
        assert "hello info" in output
        assert "▸" in output

    def test_error_has_cross(self):
        output = self._log("test_ui_error", logging.ERROR, "bad stuff")
        assert "bad stuff" in output
        assert "✗" in output

    def test_warning_has_bang(self):
        output = self._log("test_ui_warning", logging.WARNING, "watch out")
        assert "watch out" in output
        assert "!" in output
