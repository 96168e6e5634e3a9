"""
Tests for the console entry point's exit codes.
"""

import sys

import pytest

from quantpareto.cli.main import USAGE_ERROR, run


def exit_code(monkeypatch, *argv):
    monkeypatch.setattr(sys, "argv", ["quantpareto", *argv])
    with pytest.raises(SystemExit) as excinfo:
        run()
    return excinfo.value.code


class TestExitCodes:
    def test_success(self, monkeypatch):
        assert exit_code(monkeypatch, "params", "-a", "mini_resnet", "-c", "1.0") == 0

    def test_unknown_command(self, monkeypatch, capsys):
        assert exit_code(monkeypatch, "bogus") == USAGE_ERROR
        assert "bogus" in capsys.readouterr().err

    def test_unknown_flag(self, monkeypatch):
        assert exit_code(monkeypatch, "quantize-demo", "--nope") == USAGE_ERROR

    def test_bad_option_value(self, monkeypatch):
        assert exit_code(monkeypatch, "cost", "--manifest", "x.json", "--model", "cubic") == USAGE_ERROR

    def test_runtime_failure(self, monkeypatch, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        assert exit_code(monkeypatch, "cost", "--manifest", str(bad)) == 2
