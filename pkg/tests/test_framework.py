"""Analyzer registration, execution order, fault isolation, timeouts."""

from __future__ import annotations

import time

import pytest

from archive2didl.framework import (
    AnalyzerDescriptor,
    AnalyzerRegistry,
    DuplicateAnalyzer,
    MeteredReader,
    UnknownAnalyzer,
    run_all,
)
from archive2didl.model import Pdi, PdiEntity, PdiEntry
from archive2didl.timing import TimingCollector

from conftest import explode_entries


def noop_analyzer(name: str):
    descriptor = AnalyzerDescriptor(id=name, signature=f"{name} 1.0 test")

    def run(item, reader):
        return Pdi(signature=descriptor.signature, raw_output=name)

    return descriptor, run


def sizing_analyzer():
    descriptor = AnalyzerDescriptor(id="sizer", signature="sizer 1.0 test")

    def run(item, reader):
        data = reader.read()
        return Pdi(
            signature=descriptor.signature,
            entries=(PdiEntry(PdiEntity.FIXITY, "size", str(len(data))),),
            raw_output=str(len(data)),
        )

    return descriptor, run


class TestRegistry:
    def test_registration_order_is_preserved(self):
        registry = AnalyzerRegistry()
        for name in ("one", "two", "three"):
            registry.register(*noop_analyzer(name))
        assert registry.ids() == ("one", "two", "three")

    def test_duplicate_rejected(self):
        registry = AnalyzerRegistry()
        registry.register(*noop_analyzer("dup"))
        with pytest.raises(DuplicateAnalyzer):
            registry.register(*noop_analyzer("dup"))

    def test_descriptor_lookup(self):
        registry = AnalyzerRegistry()
        registry.register(*noop_analyzer("one"))
        assert registry.descriptor("one").id == "one"
        with pytest.raises(UnknownAnalyzer):
            registry.descriptor("absent")

    def test_descriptor_validation(self):
        with pytest.raises(ValueError):
            AnalyzerDescriptor(id="", signature="s")
        with pytest.raises(ValueError):
            AnalyzerDescriptor(id="a", signature="")
        with pytest.raises(ValueError):
            AnalyzerDescriptor(id="a", signature="s", max_prefix_bytes=0)


class TestMeteredReader:
    def test_counts_bytes(self, tmp_path):
        path = tmp_path / "f"
        path.write_bytes(b"0123456789")
        with open(path, "rb") as fh:
            reader = MeteredReader(fh)
            assert reader.read(4) == b"0123"
            assert reader.read() == b"456789"
            assert reader.bytes_read == 10

    def test_cap_is_enforced(self, tmp_path):
        path = tmp_path / "f"
        path.write_bytes(b"x" * 100)
        with open(path, "rb") as fh:
            reader = MeteredReader(fh, limit=16)
            assert len(reader.read()) == 16
            assert reader.read(10) == b""
            assert reader.bytes_read == 16


class TestRunAll:
    def _workspace(self, tmp_path, entries=None):
        entries = entries or {"a.txt": b"aaaa", "b.txt": b"bb", "c.txt": b"c"}
        return explode_entries(tmp_path, entries)

    def test_reports_are_item_major(self, tmp_path):
        registry = AnalyzerRegistry()
        registry.register(*noop_analyzer("first"))
        registry.register(*noop_analyzer("second"))
        ws = self._workspace(tmp_path)
        reports = run_all(registry, ws)
        assert len(reports) == len(ws.items) * 2
        expected = [
            (item.identifier, analyzer)
            for item in ws.items
            for analyzer in ("first", "second")
        ]
        assert [(r.item, r.analyzer_id) for r in reports] == expected

    def test_selection_filtered_by_registration_order(self, tmp_path):
        registry = AnalyzerRegistry()
        for name in ("one", "two", "three"):
            registry.register(*noop_analyzer(name))
        ws = self._workspace(tmp_path, {"x": b"x"})
        reports = run_all(registry, ws, selection=["three", "one"])
        assert [r.analyzer_id for r in reports] == ["one", "three"]

    def test_unknown_selection_fails_before_any_work(self, tmp_path):
        registry = AnalyzerRegistry()
        registry.register(*noop_analyzer("real"))
        ws = self._workspace(tmp_path)
        collector = TimingCollector()
        with pytest.raises(UnknownAnalyzer):
            run_all(registry, ws, selection=["real", "ghost"], collector=collector)
        assert len(collector) == 0

    def test_empty_workspace_empty_reports(self, tmp_path):
        registry = AnalyzerRegistry()
        registry.register(*noop_analyzer("one"))
        ws = explode_entries(tmp_path, {})
        assert run_all(registry, ws) == []

    def test_identifier_references_injected(self, tmp_path):
        registry = AnalyzerRegistry()
        registry.register(*noop_analyzer("one"))
        ws = self._workspace(tmp_path, {"x": b"payload"})
        (report,) = run_all(registry, ws)
        refs = {
            e.type_name: e.value
            for e in report.pdi.entries
            if e.entity is PdiEntity.REFERENCE
        }
        item = ws.items[0]
        assert refs["identifier"] == item.identifier.external
        assert refs["internalIdentifier"] == item.identifier.internal

    def test_failure_isolated_to_one_pair(self, tmp_path):
        descriptor = AnalyzerDescriptor(id="fragile", signature="fragile 1.0")

        def fragile(item, reader):
            if item.relative_path == "b.txt":
                raise RuntimeError("synthetic fault")
            return Pdi(signature=descriptor.signature, raw_output="ok")

        registry = AnalyzerRegistry()
        registry.register(descriptor, fragile)
        registry.register(*noop_analyzer("steady"))
        ws = self._workspace(tmp_path)
        reports = run_all(registry, ws)
        assert len(reports) == len(ws.items) * 2

        failures = [
            r
            for r in reports
            if any(e.type_name == "analysisError" for e in r.pdi.entries)
        ]
        assert len(failures) == 1
        failure = failures[0]
        assert failure.analyzer_id == "fragile"
        (error_entry,) = [
            e for e in failure.pdi.entries if e.type_name == "analysisError"
        ]
        assert error_entry.entity is PdiEntity.CONTEXT
        assert "synthetic fault" in error_entry.value
        # the failed report still carries the injected references
        ref_names = {
            e.type_name for e in failure.pdi.entries if e.entity is PdiEntity.REFERENCE
        }
        assert ref_names == {"identifier", "internalIdentifier"}

    def test_timeout_produces_error_report(self, tmp_path):
        descriptor = AnalyzerDescriptor(id="sleepy", signature="sleepy 1.0")

        def sleepy(item, reader):
            time.sleep(5)
            return Pdi(signature=descriptor.signature, raw_output="late")

        registry = AnalyzerRegistry()
        registry.register(descriptor, sleepy)
        ws = self._workspace(tmp_path, {"x": b"x"})
        collector = TimingCollector()
        (report,) = run_all(registry, ws, timeout_s=0.05, collector=collector)
        assert any(
            e.type_name == "analysisError" and "timeout" in e.value
            for e in report.pdi.entries
        )
        # a timing record is still produced for the timed-out pair
        assert len(collector) == 1

    def test_worker_count_does_not_change_reports(self, tmp_path):
        registry = AnalyzerRegistry()
        registry.register(*sizing_analyzer())
        registry.register(*noop_analyzer("steady"))
        entries = {f"f{i:02d}.bin": bytes([i]) * (i + 1) for i in range(12)}
        ws = self._workspace(tmp_path, entries)

        def essence(reports):
            return [(r.item, r.analyzer_id, r.pdi) for r in reports]

        serial = essence(run_all(registry, ws, workers=1))
        parallel = essence(run_all(registry, ws, workers=4))
        assert serial == parallel

    def test_timing_records_cover_every_pair(self, tmp_path):
        registry = AnalyzerRegistry()
        registry.register(*noop_analyzer("one"))
        registry.register(*noop_analyzer("two"))
        ws = self._workspace(tmp_path)
        collector = TimingCollector()
        started = time.perf_counter()
        run_all(registry, ws, collector=collector, workers=2)
        wall_ms = (time.perf_counter() - started) * 1000.0
        records = collector.records()
        assert len(records) == len(ws.items) * 2
        assert {(r.item_internal_id, r.analyzer_id) for r in records} == {
            (item.identifier.internal, analyzer)
            for item in ws.items
            for analyzer in ("one", "two")
        }
        assert sum(r.duration_ms for r in records) <= wall_ms * 2 + 1.0

    def test_workers_must_be_positive(self, tmp_path):
        registry = AnalyzerRegistry()
        registry.register(*noop_analyzer("one"))
        ws = self._workspace(tmp_path, {"x": b"x"})
        with pytest.raises(ValueError):
            run_all(registry, ws, workers=0)
