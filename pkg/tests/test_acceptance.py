"""Acceptance gate: the eight end-to-end guarantees this package makes.

Each test contributes exactly one pass/fail line to the terminal summary
so a run's verdict can be read off the log directly.
"""

from __future__ import annotations

import hashlib
import io
import math
import random
import time
import zlib
from contextlib import contextmanager
from xml.etree import ElementTree as ET

import pytest

from archive2didl.analyzers import DEFAULT_ANALYZER_IDS, default_registry
from archive2didl.analyzers.checksum import checksum_analyze
from archive2didl.analyzers.filetype import MAX_PREFIX_BYTES
from archive2didl.analyzers.filetype import make_plugin as make_filetype
from archive2didl.analyzers.registry import make_plugin as make_registry
from archive2didl.analyzers.strings import iter_printable_runs
from archive2didl.analyzers.validate import crc32, format_validate
from archive2didl.cli import EXIT_OK, main
from archive2didl.didl import DIDL_NS, PDI_NS_DEFAULT
from archive2didl.framework import MeteredReader
from archive2didl.model import DigitalItem, PdiEntity, make_identifier
from archive2didl.schema import load_default_schema, validate_against_schema
from archive2didl.timing import aggregate, parse_csv

from conftest import record_acceptance_line, synthetic_corpus

DIDL = f"{{{DIDL_NS}}}"
DAAP = f"{{{PDI_NS_DEFAULT}}}"


def _verdict(number: int, label: str, verdict: str, elapsed: float) -> None:
    record_acceptance_line(f"{number}. {label}: {verdict} [{elapsed:.2f}s]")


@contextmanager
def criterion(number: int, label: str, budget_s: float | None):
    started = time.perf_counter()
    try:
        yield
    except BaseException:
        _verdict(number, label, "FAIL", time.perf_counter() - started)
        raise
    elapsed = time.perf_counter() - started
    if budget_s is not None and elapsed >= budget_s:
        _verdict(number, label, "FAIL", elapsed)
        pytest.fail(f"runtime budget exceeded: {elapsed:.2f}s >= {budget_s}s")
    _verdict(number, label, "PASS", elapsed)


def _item_for(payload: bytes, path: str) -> DigitalItem:
    digest = hashlib.md5(payload).hexdigest()
    return DigitalItem(
        relative_path=path,
        size_bytes=len(payload),
        content_md5=digest.upper(),
        last_modified="2005-12-01T18:21:49+00:00",
        identifier=make_identifier(digest),
    )


def test_digest_correctness():
    with criterion(1, "digest correctness", budget_s=1.0):
        vectors = [
            (
                b"",
                "d41d8cd98f00b204e9800998ecf8427e",
                "da39a3ee5e6b4b0d3255bfef95601890afd80709",
            ),
            (
                b"abc",
                "900150983cd24fb0d6963f7d28e17f72",
                "a9993e364706816aba3e25717850c26c9cd0d89d",
            ),
            (
                b"message digest",
                "f96b697d7cb7938d525a2f31aaf161d0",
                "c12252ceda8be8994d5fa0290a47231c1d16aae3",
            ),
            (
                b"a" * 1_000_000,
                "7707d6ae4e027c70eea2a935c2296f21",
                "34aa973cd4c4daa4f61eeb2bdbad27316534016f",
            ),
        ]
        for payload, md5_hex, sha1_hex in vectors:
            pdi = checksum_analyze(io.BytesIO(payload))
            got = {e.type_name: e.value for e in pdi.entries}
            assert got["MD5"] == md5_hex.upper()
            assert got["SHA"] == sha1_hex.upper()
        assert crc32(io.BytesIO(b"123456789")) == "cbf43926"


def test_metadata_mapping_fidelity():
    with criterion(2, "metadata mapping fidelity", budget_s=1.0):
        payload = b"An ASCII text fixture.\nSecond line.\n"
        item = _item_for(payload, "fixture.txt")

        pdi = format_validate(item, io.BytesIO(payload))
        rows = [(e.entity, e.type_name) for e in pdi.entries]
        assert rows == [
            (PdiEntity.PROVENANCE, "lastModified"),
            (PdiEntity.CONTEXT, "mimeType"),
            (PdiEntity.CONTEXT, "format"),
            (PdiEntity.CONTEXT, "status"),
            (PdiEntity.REFERENCE, "uri"),
            (PdiEntity.FIXITY, "size"),
            (PdiEntity.FIXITY, "CRC32"),
            (PdiEntity.FIXITY, "MD5"),
            (PdiEntity.FIXITY, "SHA-1"),
        ]
        values = {e.type_name: e.value for e in pdi.entries}
        assert values["size"] == str(len(payload))
        assert values["MD5"] == hashlib.md5(payload).hexdigest()
        assert values["SHA-1"] == hashlib.sha1(payload).hexdigest()
        assert values["CRC32"] == f"{zlib.crc32(payload) & 0xFFFFFFFF:08x}"

        _, registry_run = make_registry()
        registry_pdi = registry_run(item, io.BytesIO(payload))
        assert [(e.entity, e.type_name) for e in registry_pdi.entries] == [
            (PdiEntity.CONTEXT, "registryUri")
        ]
        assert registry_pdi.entries[0].value == "info:gdfr/fred/f/ascii"


def test_document_validity_at_scale(corpus_archive, tmp_path):
    with criterion(3, "document validity at scale", budget_s=60.0):
        corpus = synthetic_corpus()
        assert len(corpus) == 148
        sizes = sorted(len(v) for v in corpus.values())
        assert sizes[0] == 107 and sizes[-1] == 3588344

        out = tmp_path / "corpus.xml"
        code = main(["analyze", str(corpus_archive), "-o", str(out)])
        assert code == EXIT_OK

        data = out.read_bytes()
        root = ET.fromstring(data)  # independent well-formedness check
        assert validate_against_schema(data, load_default_schema()) == []

        nested = root.findall(f"./{DIDL}Container/{DIDL}Item/{DIDL}Item")
        assert len(nested) == 148
        pdi_statements = list(root.iter(f"{DAAP}PDI"))
        assert len(pdi_statements) == 148 * len(DEFAULT_ANALYZER_IDS)


def test_bounded_prefix_read(tmp_path):
    with criterion(4, "bounded prefix read", budget_s=10.0):
        descriptor, run = make_filetype()
        chunk = (b"sample content line\n" * 64)[:1024]
        for size in (1 << 10, 1 << 20, 30 << 20):
            path = tmp_path / f"f{size}.dat"
            with open(path, "wb") as fh:
                remaining = size
                while remaining > 0:
                    fh.write(chunk[: min(len(chunk), remaining)])
                    remaining -= len(chunk)
            assert path.stat().st_size == size
            payload_item = DigitalItem(
                relative_path=path.name,
                size_bytes=size,
                content_md5="0" * 32,
                last_modified="2005-12-01T18:21:49+00:00",
                identifier=make_identifier("0" * 32),
            )
            with open(path, "rb") as fh:
                reader = MeteredReader(fh)  # no cap: count what the analyzer asks for
                run(payload_item, reader)
                assert reader.bytes_read <= MAX_PREFIX_BYTES == 8192


def test_printable_run_oracle_equivalence():
    with criterion(5, "printable-run oracle equivalence", budget_s=30.0):
        printable = frozenset({0x09} | set(range(0x20, 0x7F)))

        def oracle(data: bytes) -> list[str]:
            runs, current = [], bytearray()
            for b in data:
                if b in printable:
                    current.append(b)
                else:
                    if len(current) >= 4:
                        runs.append(current.decode("ascii"))
                    current.clear()
            if len(current) >= 4:
                runs.append(current.decode("ascii"))
            return runs

        rng = random.Random(0xACCE55)
        for trial in range(1000):
            size = rng.randint(0, 64 * 1024)
            data = rng.randbytes(size)
            if trial % 3 == 0 and size > 16:
                # splice in printable stretches so long runs are common
                text = bytes(rng.choice(range(0x20, 0x7F)) for _ in range(size // 4))
                cut = rng.randint(0, size - 1)
                data = data[:cut] + text + data[cut:]
            got = list(iter_printable_runs(io.BytesIO(data)))
            assert got == oracle(data), f"divergence on trial {trial}"


def test_deterministic_output(corpus_archive, tmp_path, pinned_clock):
    with criterion(6, "deterministic output", budget_s=60.0):
        out1, out2 = tmp_path / "run1.xml", tmp_path / "run2.xml"
        assert main(["analyze", str(corpus_archive), "-o", str(out1)]) == EXIT_OK
        assert main(["analyze", str(corpus_archive), "-o", str(out2)]) == EXIT_OK
        first, second = out1.read_bytes(), out2.read_bytes()
        assert first == second
        assert len(first) > 0


def test_timing_aggregate_structure(corpus_archive, tmp_path):
    with criterion(7, "timing aggregate structure", budget_s=None):
        out = tmp_path / "out.xml"
        timing_path = tmp_path / "timing.csv"
        code = main(
            ["analyze", str(corpus_archive), "-o", str(out), "--timing", str(timing_path)]
        )
        assert code == EXIT_OK

        records = parse_csv(timing_path.read_bytes())
        assert len(records) == 148 * len(DEFAULT_ANALYZER_IDS)

        stats = aggregate(records)
        per_analyzer_totals = [s.total_ms for s in stats.per_analyzer.values()]
        assert stats.total_ms == math.fsum(per_analyzer_totals)
        assert set(stats.per_analyzer) == set(DEFAULT_ANALYZER_IDS)
        for analyzer_stats in stats.per_analyzer.values():
            assert analyzer_stats.count == 148

        shuffled = list(records)
        for seed in (1, 2, 3):
            random.Random(seed).shuffle(shuffled)
            assert aggregate(shuffled) == stats


def test_markup_and_nul_escaping(tmp_path):
    with criterion(8, "markup and NUL escaping robustness", budget_s=5.0):
        hostile = (
            b"Presentation dump\x00<didl:Item>&entity;</didl:Item>\x00\x01\x02"
            b'<?xml version="1.0"?><!DOCTYPE hack>\x07\x1b[31m'
            b"]]></daap:value><daap:bogus/>\x00 trailing text runs here\r\n"
        )
        src = tmp_path / "archive"
        src.mkdir()
        (src / "slide_deck.bin").write_bytes(hostile)
        (src / "normal.txt").write_bytes(b"control sample\n")

        out = tmp_path / "out.xml"
        assert main(["analyze", str(src), "-o", str(out)]) == EXIT_OK

        data = out.read_bytes()
        root = ET.fromstring(data)
        assert validate_against_schema(data, load_default_schema()) == []
        # the hostile markup must appear as character data, not elements
        values = "".join(v.text or "" for v in root.iter(f"{DAAP}value"))
        assert "<didl:Item>" not in [elem.tag for elem in root.iter()]
        assert "didl:Item" in values
