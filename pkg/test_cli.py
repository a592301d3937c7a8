#!/usr/bin/env python3
"""
Tests for the irqracer command line and configuration loading
"""

import json

import pytest
from pydantic import ValidationError

from irqracer.cli import EXIT_ERROR, EXIT_OK, EXIT_RACES, main
from irqracer.config import ToolConfig, load_config
from irqracer.frontend import load_program

from conftest import corpus_source

FAST = ["--timeout", "30", "--lmax", "8"]


@pytest.fixture
def program_file(tmp_path):
    def write(name):
        path = tmp_path / f"{name}.idl"
        path.write_text(corpus_source(name))
        return str(path)
    return write


def test_detect_exit_codes(program_file, capsys):
    assert main(["detect", program_file("uart"), *FAST]) == EXIT_RACES
    out = capsys.readouterr().out
    assert "transmit:6->irq1_handler:2" in out

    assert main(["detect", program_file("race_free"), *FAST]) == EXIT_OK


def test_validate_reports_confirmed_races(program_file, capsys):
    assert main(["validate", program_file("uart"), *FAST]) == EXIT_RACES
    out = capsys.readouterr().out
    assert "(harmful)" in out
    assert "RefutedDisabled" in out


def test_deadlocking_injection_is_flagged(tmp_path, capsys):
    path = tmp_path / "shared_lock.idl"
    path.write_text(
        "lock L;\nglobal v = 0;\n"
        "task main prio 5 {\n    lock(L);\n    v = v + 1;\n    unlock(L);\n}\n"
        "isr h line 1 prio 1 {\n    lock(L);\n    v = 0;\n    unlock(L);\n}\n"
    )

    assert main(["validate", str(path), *FAST]) == EXIT_RACES
    out = capsys.readouterr().out
    assert "🔒" in out
    assert "(Deadlock)" in out


def test_malformed_program(tmp_path, capsys):
    path = tmp_path / "broken.idl"
    path.write_text("task main prio 5 {\n    x = ;\n}\n")

    assert main(["detect", str(path)]) == EXIT_ERROR
    assert "broken.idl" in capsys.readouterr().err


def test_missing_file(tmp_path):
    assert main(["detect", str(tmp_path / "nowhere.idl")]) == EXIT_ERROR


def test_invalid_configuration(program_file, capsys):
    assert main(["detect", program_file("uart"), "--lmax", "0"]) == EXIT_ERROR
    assert "Invalid configuration" in capsys.readouterr().err


def test_catalog(capsys):
    assert main(["catalog"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "IDE" in out and "ECS" in out


def test_repair_writes_patched_program(program_file, tmp_path):
    out = tmp_path / "patched.idl"

    assert main(["repair", program_file("uart"), *FAST, "--out", str(out)]) == EXIT_OK

    patched = out.read_text()
    assert "irq_disable(1);" in patched
    assert load_program(patched).routine("transmit") is not None


def test_json_report(program_file, tmp_path):
    report_path = tmp_path / "report.json"

    main(["validate", program_file("uart"), *FAST, "--json", str(report_path)])

    report = json.loads(report_path.read_text())
    assert report["schema_version"] == 1
    assert report["command"] == "validate"
    assert report["config"]["lmax"] == 8
    assert report["summary"]["Confirmed"] == 2


def test_oracle_budget(program_file, capsys):
    assert main(["oracle", program_file("uart"), *FAST, "--budget", "4"]) == EXIT_ERROR
    assert "budget" in capsys.readouterr().err.lower()

    assert main(["oracle", program_file("keyboard"), *FAST]) == EXIT_RACES


def test_postpone_oracle_on_masked_program(program_file):
    assert main(["oracle", program_file("race_free"), *FAST, "--postpone"]) == EXIT_OK


# --------------------------------------------------------------------- config

def test_config_file_and_overrides(tmp_path, monkeypatch):
    monkeypatch.delenv("IRQRACER_LMAX", raising=False)
    path = tmp_path / "irqracer.conf"
    path.write_text('lmax = 12\nseed = 7\ninterrupt_registers = "IER, IMR"\nbogus = 1\n')

    config = load_config(str(path), {"seed": 3, "workers": None})

    assert config.lmax == 12
    assert config.seed == 3
    assert config.workers == 1
    assert config.interrupt_registers == ["IER", "IMR"]


def test_environment_overrides_file(tmp_path, monkeypatch):
    path = tmp_path / "irqracer.conf"
    path.write_text("lmax = 12\n")
    monkeypatch.setenv("IRQRACER_LMAX", "20")

    assert load_config(str(path)).lmax == 20
    assert load_config(str(path), {"lmax": 4}).lmax == 4


def test_config_validation():
    assert ToolConfig().word_mask == 0xFFFF
    assert ToolConfig(word_width=8).word_mask == 0xFF
    with pytest.raises(ValidationError):
        ToolConfig(repair_strategy="always")
    with pytest.raises(ValidationError):
        ToolConfig(step_limit=0)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
