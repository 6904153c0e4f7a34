"""Analyzer registration and the per-item execution engine.

An analyzer is a callable taking (DigitalItem, reader) and returning a
Pdi.  The engine runs every selected analyzer against every workspace
item, injects the item's reference identifiers into each result, converts
failures and timeouts into error reports instead of aborting the run, and
returns reports in a deterministic order regardless of worker count.
"""

from __future__ import annotations

import os
import threading
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from time import perf_counter
from typing import BinaryIO, Callable, Iterable, Iterator, Protocol

from .ingest import Workspace
from .model import DigitalItem, Identifier, Pdi, PdiEntity, PdiEntry
from .timing import TimingCollector

DEFAULT_TIMEOUT_S = 60.0


class DuplicateAnalyzer(ValueError):
    """Two analyzers were registered under the same id."""


class UnknownAnalyzer(LookupError):
    """A selection named an analyzer id that is not registered."""


@dataclass(frozen=True)
class AnalyzerDescriptor:
    """Identity and read policy of an analyzer.

    ``signature`` is the free-text provenance string recorded with every
    result (tool name, version, environment).  When ``max_prefix_bytes``
    is set, the engine hands the analyzer a capped reader so it can never
    consume more than that many bytes.
    """

    id: str
    signature: str
    max_prefix_bytes: int | None = None

    def __post_init__(self) -> None:
        if not self.id or not self.id.strip() == self.id:
            raise ValueError("analyzer id must be non-empty with no surrounding whitespace")
        if not self.signature:
            raise ValueError("analyzer signature must be non-empty")
        if self.max_prefix_bytes is not None and self.max_prefix_bytes <= 0:
            raise ValueError("max_prefix_bytes must be positive when set")


@dataclass(frozen=True)
class AnalyzerReport:
    """One analyzer's result for one item, with its measured duration."""

    item: Identifier
    analyzer_id: str
    pdi: Pdi
    duration_ms: float


class Reader(Protocol):
    def read(self, n: int = -1, /) -> bytes: ...


AnalyzerFunc = Callable[[DigitalItem, Reader], Pdi]


class MeteredReader:
    """Binary reader proxy that counts, and optionally caps, bytes served."""

    def __init__(self, raw: BinaryIO, limit: int | None = None) -> None:
        self._raw = raw
        self._limit = limit
        self.bytes_read = 0

    def read(self, n: int = -1) -> bytes:
        if self._limit is not None:
            remaining = self._limit - self.bytes_read
            if remaining <= 0:
                return b""
            n = remaining if n is None or n < 0 else min(n, remaining)
        chunk = self._raw.read(n)
        self.bytes_read += len(chunk)
        return chunk


class AnalyzerRegistry:
    """Ordered analyzer collection; registration order is execution order."""

    def __init__(self) -> None:
        self._entries: list[tuple[AnalyzerDescriptor, AnalyzerFunc]] = []

    def register(self, descriptor: AnalyzerDescriptor, func: AnalyzerFunc) -> None:
        if descriptor.id in self:
            raise DuplicateAnalyzer(f"analyzer id already registered: {descriptor.id!r}")
        self._entries.append((descriptor, func))

    def ids(self) -> tuple[str, ...]:
        return tuple(d.id for d, _ in self._entries)

    def descriptor(self, analyzer_id: str) -> AnalyzerDescriptor:
        for descriptor, _ in self._entries:
            if descriptor.id == analyzer_id:
                return descriptor
        raise UnknownAnalyzer(f"no such analyzer: {analyzer_id!r}")

    def __contains__(self, analyzer_id: str) -> bool:
        return any(d.id == analyzer_id for d, _ in self._entries)

    def __iter__(self) -> Iterator[tuple[AnalyzerDescriptor, AnalyzerFunc]]:
        return iter(self._entries)

    def __len__(self) -> int:
        return len(self._entries)


def reference_entries(item: DigitalItem) -> tuple[PdiEntry, PdiEntry]:
    """The two identifier references every report must carry."""
    return (
        PdiEntry(PdiEntity.REFERENCE, "identifier", item.identifier.external),
        PdiEntry(PdiEntity.REFERENCE, "internalIdentifier", item.identifier.internal),
    )


def _with_references(pdi: Pdi, item: DigitalItem) -> Pdi:
    return Pdi(
        signature=pdi.signature,
        entries=pdi.entries + reference_entries(item),
        raw_output=pdi.raw_output,
    )


def _error_pdi(descriptor: AnalyzerDescriptor, message: str, detail: str = "") -> Pdi:
    return Pdi(
        signature=descriptor.signature,
        entries=(PdiEntry(PdiEntity.CONTEXT, "analysisError", message),),
        raw_output=detail or message,
    )


def _invoke_with_timeout(
    func: AnalyzerFunc,
    item: DigitalItem,
    reader: MeteredReader,
    timeout_s: float | None,
) -> tuple[Pdi | None, BaseException | None, bool]:
    """Run one analyzer call; returns (pdi, error, timed_out)."""
    if timeout_s is None:
        try:
            return func(item, reader), None, False
        except Exception as exc:
            return None, exc, False

    box: dict[str, object] = {}

    def target() -> None:
        try:
            box["pdi"] = func(item, reader)
        except Exception as exc:
            box["error"] = exc

    worker = threading.Thread(target=target, daemon=True)
    worker.start()
    worker.join(timeout_s)
    if worker.is_alive():
        return None, None, True
    if "error" in box:
        return None, box["error"], False  # type: ignore[return-value]
    return box.get("pdi"), None, False  # type: ignore[return-value]


def _run_one(
    workspace: Workspace,
    item: DigitalItem,
    descriptor: AnalyzerDescriptor,
    func: AnalyzerFunc,
    timeout_s: float | None,
    collector: TimingCollector | None,
) -> AnalyzerReport:
    path = os.path.join(workspace.root_dir, *item.relative_path.split("/"))
    started = perf_counter()
    try:
        fh: BinaryIO | None = open(path, "rb")
    except OSError as exc:
        fh = None
        pdi, error, timed_out = None, exc, False
    if fh is not None:
        reader = MeteredReader(fh, limit=descriptor.max_prefix_bytes)
        try:
            pdi, error, timed_out = _invoke_with_timeout(func, item, reader, timeout_s)
        finally:
            fh.close()
    duration_ms = (perf_counter() - started) * 1000.0

    if timed_out:
        pdi = _error_pdi(descriptor, f"timeout after {timeout_s}s")
    elif error is not None:
        message = f"{type(error).__name__}: {error}"
        detail = "".join(traceback.format_exception_only(type(error), error)).strip()
        pdi = _error_pdi(descriptor, message, detail)
    elif pdi is None:
        pdi = _error_pdi(descriptor, "analyzer returned no result")

    pdi = _with_references(pdi, item)
    if collector is not None:
        collector.record(item.identifier.internal, descriptor.id, item.size_bytes, duration_ms)
    return AnalyzerReport(
        item=item.identifier,
        analyzer_id=descriptor.id,
        pdi=pdi,
        duration_ms=duration_ms,
    )


def run_all(
    registry: AnalyzerRegistry,
    workspace: Workspace,
    selection: Iterable[str] | None = None,
    *,
    workers: int = 1,
    timeout_s: float | None = DEFAULT_TIMEOUT_S,
    collector: TimingCollector | None = None,
) -> list[AnalyzerReport]:
    """Run the selected analyzers over every workspace item.

    The report list is ordered item-major: all analyzers for the first
    item, then the second, and so on, with analyzers in registration
    order filtered by the selection.  The same order is produced for any
    worker count.  Unknown selections fail before any analysis starts.
    """
    if workers < 1:
        raise ValueError("workers must be >= 1")

    if selection is None:
        selected_ids = set(registry.ids())
    else:
        selected_ids = set(selection)
        unknown = sorted(s for s in selected_ids if s not in registry)
        if unknown:
            raise UnknownAnalyzer(f"no such analyzer(s): {', '.join(unknown)}")
    effective = [(d, f) for d, f in registry if d.id in selected_ids]

    tasks = [
        (item_index, analyzer_index, item, descriptor, func)
        for item_index, item in enumerate(workspace.items)
        for analyzer_index, (descriptor, func) in enumerate(effective)
    ]
    results: dict[tuple[int, int], AnalyzerReport] = {}

    if workers == 1 or len(tasks) <= 1:
        for item_index, analyzer_index, item, descriptor, func in tasks:
            results[(item_index, analyzer_index)] = _run_one(
                workspace, item, descriptor, func, timeout_s, collector
            )
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                (item_index, analyzer_index): pool.submit(
                    _run_one, workspace, item, descriptor, func, timeout_s, collector
                )
                for item_index, analyzer_index, item, descriptor, func in tasks
            }
            for key, future in futures.items():
                results[key] = future.result()

    return [
        results[(item_index, analyzer_index)]
        for item_index in range(len(workspace.items))
        for analyzer_index in range(len(effective))
    ]
