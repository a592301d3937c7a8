#!/usr/bin/env python3
"""
End-to-end tests for the race pipeline and its JSON report

The corpus goldens under corpus/expected pin the status of every warning and
the outcome of repair.
"""

import json

import pytest

from irqracer.analysis import WarningStatus
from irqracer.config import ToolConfig
from irqracer.pipeline import COMMAND_STAGES, SCHEMA_VERSION, build_report, create_race_pipeline, rank_key
from irqracer.repair import RepairStatus
from irqracer.vm import exhaustive_oracle

from conftest import corpus_expected, corpus_names, corpus_source


def _run(name, command, config):
    pipeline = create_race_pipeline(config)
    return pipeline.run_source(corpus_source(name), f"{name}.idl", command)


@pytest.mark.parametrize("name", corpus_names())
def test_corpus_goldens(name, tool_config):
    expected = corpus_expected(name)
    run = _run(name, "repair", tool_config)

    assert run.errors == []
    assert len(run.records) == expected["static_warnings"]
    by_key = {record.key_text: record for record in run.records}
    for entry in expected["warnings"]:
        record = by_key[entry["key"]]
        assert record.status.value == entry["status"], entry["key"]
        if "harmful" in entry:
            assert record.verdict.harmful == entry["harmful"]
        if "verdict" in entry:
            assert record.verdict.kind.value == entry["verdict"]

    if "repair" in expected:
        status = run.repair.status.value if run.repair is not None else RepairStatus.REPAIRED.value
        assert status == expected["repair"]["status"]
        if "inserted_operations" in expected["repair"]:
            inserted = run.repair.inserted_operations if run.repair is not None else 0
            assert inserted == expected["repair"]["inserted_operations"]


@pytest.mark.parametrize("name", corpus_names())
def test_repaired_corpus_is_race_free(name, tool_config):
    run = _run(name, "repair", tool_config)

    oracle = exhaustive_oracle(run.patched, None, tool_config)

    assert oracle.races == {}
    assert oracle.deadlocks == set()
    assert oracle.aborted == 0


def test_detect_runs_static_stage_only(tool_config):
    run = _run("uart", "detect", tool_config)

    assert set(run.stage_times) == {"static"}
    assert all(r.status is WarningStatus.STATIC for r in run.records)
    assert run.repair is None and run.oracle is None


def test_validate_sets_symbolic_and_dynamic_results(tool_config):
    run = _run("uart", "validate", tool_config)

    assert set(run.stage_times) == set(COMMAND_STAGES["validate"])
    infeasible = run.records_with(WarningStatus.INFEASIBLE)
    assert [r.key_text for r in infeasible] == ["irq2_handler:2->irq1_handler:2[xmit_tail]"]
    assert infeasible[0].verdict is None
    assert all(r.symbolic is not None for r in run.records)
    assert len(run.confirmed()) == 2


def test_repair_keeps_program_when_nothing_is_confirmed(tool_config):
    run = _run("race_free", "repair", tool_config)

    assert run.records == []
    assert run.repair is None
    assert run.patched is run.program


def test_oracle_command(tool_config):
    run = _run("keyboard", "oracle", tool_config)

    oracle_keys = {f"{i}->{j}[{resource}]" for i, j, resource in run.oracle.races}
    assert oracle_keys == {
        "kbd_read:1->kbd_irq:3[count]",
        "kbd_read:2->kbd_irq:2[count]",
        "kbd_read:2->kbd_irq:3[count]",
        "kbd_read:3->kbd_irq:1[last]",
    }
    assert oracle_keys <= {r.key_text for r in run.records}
    assert run.oracle.assignments == 49


def test_unknown_command():
    with pytest.raises(ValueError):
        create_race_pipeline().run_source(corpus_source("uart"), command="explain")


def test_failing_stage_stops_the_run(tool_config, monkeypatch):
    pipeline = create_race_pipeline(tool_config)

    def boom(run):
        raise RuntimeError("boom")

    monkeypatch.setattr(pipeline.processors["symbolic"], "process", boom)
    run = pipeline.run_source(corpus_source("uart"), "uart.idl", "validate")

    assert run.errors == ["symbolic: boom"]
    assert "dynamic" not in run.stage_times
    assert pipeline.get_comprehensive_stats()["pipeline_overview"]["error_rate"] == 100.0


def test_replay_assertion_is_not_swallowed(tool_config, monkeypatch):
    pipeline = create_race_pipeline(tool_config)

    def broken(run):
        raise AssertionError("replay did not cover the events")

    monkeypatch.setattr(pipeline.processors["dynamic"], "process", broken)
    with pytest.raises(AssertionError):
        pipeline.run_source(corpus_source("uart"), "uart.idl", "validate")


def test_pipeline_stats(tool_config):
    pipeline = create_race_pipeline(tool_config)
    assert pipeline.get_comprehensive_stats() == {"message": "No programs processed yet"}

    pipeline.run_source(corpus_source("uart"), "uart.idl", "validate")
    stats = pipeline.get_comprehensive_stats()

    assert stats["pipeline_overview"]["total_processed"] == 1
    assert stats["pipeline_overview"]["success_rate"] == 100.0
    assert stats["processor_stats"]["symbolic"]["total_processed"] == 4
    assert stats["performance"]["verdicts"] == {"Confirmed": 2, "Infeasible": 1, "RefutedDynamic": 1}
    assert set(stats["performance"]["performance"]) == {"static", "symbolic", "dynamic"}

    pipeline.reset_stats()
    assert pipeline.get_comprehensive_stats() == {"message": "No programs processed yet"}
    assert pipeline.processors["symbolic"].get_stats() == {"message": "No warnings processed yet"}


# ------------------------------------------------------------------------- report

def test_report_schema(tool_config):
    run = _run("uart", "validate", tool_config)
    text = build_report(run).to_json()
    report = json.loads(text)

    assert text == json.dumps(report, indent=2, sort_keys=True) + "\n"
    assert report["schema_version"] == SCHEMA_VERSION
    assert report["command"] == "validate"
    assert report["program"]["path"] == "uart.idl"
    assert report["program"]["tasks"] == 1 and report["program"]["isrs"] == 2
    assert len(report["program"]["sha256"]) == 64
    assert report["summary"]["Confirmed"] == 2
    assert report["summary"]["Static"] == 0
    assert "timings" not in report
    assert [w["status"] for w in report["warnings"]] == ["Confirmed", "Confirmed", "Infeasible", "RefutedDynamic"]

    confirmed = next(w for w in report["warnings"] if w["key"] == "transmit:6->irq1_handler:2[xmit_tail]")
    assert confirmed["dynamic"]["harmful"] is True
    assert "isr_entry\tirq1_handler\t-\tline 1" in confirmed["dynamic"]["trace"].splitlines()
    assert confirmed["symbolic"]["assignment"]["THR"] == 0x1101
    assert confirmed["e_i"]["access"] == "R"

    refuted = next(w for w in report["warnings"] if w["status"] == "RefutedDynamic")
    assert "trace" not in refuted["dynamic"]


def test_report_is_reproducible(tool_config):
    first = build_report(_run("uart", "validate", tool_config)).to_json()
    second = build_report(_run("uart", "validate", tool_config)).to_json()
    assert first == second


def test_report_does_not_depend_on_workers(tool_config):
    parallel = tool_config.model_copy(update={"workers": 2})

    sequential_run = _run("uart", "validate", tool_config)
    parallel_run = _run("uart", "validate", parallel)
    first = json.loads(build_report(sequential_run).to_json())
    second = json.loads(build_report(parallel_run).to_json())

    assert first.pop("config")["workers"] == 1
    assert second.pop("config")["workers"] == 2
    assert first == second
    assert all(r.verdict is not None for r in parallel_run.records_with(WarningStatus.CONFIRMED))


def test_report_timings_when_asked():
    config = ToolConfig(symbolic_timeout=30, report_timings=True)
    report = json.loads(build_report(_run("add_lock", "detect", config)).to_json())

    assert set(report["timings"]) == {"static"}


def test_report_repair_section(tool_config):
    report = json.loads(build_report(_run("adjacent_reads", "repair", tool_config)).to_json())

    repair = report["repair"]
    assert repair["status"] == "Repaired"
    assert repair["inserted_operations"] == 2
    assert [plan["strategy"] for plan in repair["plans"]] == ["IDE", "IDE"]
    assert repair["remap"]["sample:1"] == "sample:2"
    assert "+    irq_disable(1);" in repair["diff"]


def test_rank_key_orders_by_severity(tool_config):
    run = _run("uart", "validate", tool_config)
    ranked = sorted(run.records, key=rank_key)

    assert [rank_key(r)[0] for r in ranked] == [0, 0, 3, 3]
    assert ranked[0].key_text == "irq2_handler:2->irq1_handler:3[xmit_tail]"


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v"]))
