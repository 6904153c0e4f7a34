"""Printable-strings analyzer, in the spirit of the classic strings tool.

A run is a maximal sequence of printable bytes (0x20-0x7E plus tab) of at
least ``min_run`` length.  Runs are reported joined by single spaces as
one fixity entry, giving a content-sensitive text shadow of the file.
"""

from __future__ import annotations

import re
from typing import Iterator

from ..framework import AnalyzerDescriptor, Reader
from ..model import DigitalItem, Pdi, PdiEntity, PdiEntry

DEFAULT_MIN_RUN = 4

_CHUNK = 1 << 20
_PRINTABLE = frozenset({0x09} | set(range(0x20, 0x7F)))

SIGNATURE = f"strings 1.0 printable runs >= {DEFAULT_MIN_RUN} (0x20-0x7E + TAB)"

DESCRIPTOR = AnalyzerDescriptor(id="strings", signature=SIGNATURE)


def _trailing_printable_len(chunk: bytes) -> int:
    n = 0
    for b in reversed(chunk):
        if b not in _PRINTABLE:
            break
        n += 1
    return n


def iter_printable_runs(reader: Reader, min_run: int = DEFAULT_MIN_RUN) -> Iterator[str]:
    """Yield maximal printable runs of length >= min_run, in stream order.

    Chunked so arbitrarily large streams are handled; a printable run
    spanning a chunk boundary is carried over and never split.
    """
    if min_run < 1:
        raise ValueError("min_run must be >= 1")
    pattern = re.compile(b"[\\t\\x20-\\x7e]{%d,}" % min_run)
    carry = b""  # always wholly printable
    while True:
        chunk = reader.read(_CHUNK)
        if not chunk:
            for match in pattern.finditer(carry):
                yield match.group().decode("ascii")
            return
        tail = _trailing_printable_len(chunk)
        if tail == len(chunk):
            carry += chunk
            continue
        data = carry + chunk
        boundary = len(data) - tail
        for match in pattern.finditer(data, 0, boundary):
            yield match.group().decode("ascii")
        carry = data[boundary:]


def strings_analyze(reader: Reader, min_run: int = DEFAULT_MIN_RUN) -> Pdi:
    text = " ".join(iter_printable_runs(reader, min_run))
    return Pdi(
        signature=SIGNATURE,
        entries=(PdiEntry(PdiEntity.FIXITY, "rawCharacters", text),),
        raw_output=text,
    )


def run(item: DigitalItem, reader: Reader) -> Pdi:
    return strings_analyze(reader)
