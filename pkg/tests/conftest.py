"""Shared fixtures: archive builders and a synthetic submission corpus."""

from __future__ import annotations

import io
import random
import tarfile
import zipfile
from pathlib import Path

import pytest

from archive2didl.ingest import ArchiveKind, explode

PINNED_EPOCH = 1133461309  # 2005-12-01T18:21:49Z


def make_zip(path: Path, entries: dict[str, bytes]) -> Path:
    with zipfile.ZipFile(path, "w") as archive:
        for name, data in sorted(entries.items()):
            info = zipfile.ZipInfo(name, date_time=(2005, 12, 1, 13, 21, 48))
            archive.writestr(info, data)
    return path


def make_targz(path: Path, entries: dict[str, bytes], mtime: int = PINNED_EPOCH) -> Path:
    with tarfile.open(path, "w:gz") as archive:
        for name, data in sorted(entries.items()):
            info = tarfile.TarInfo(name)
            info.size = len(data)
            info.mtime = mtime
            archive.addfile(info, io.BytesIO(data))
    return path


def make_tar(path: Path, entries: dict[str, bytes], mtime: int = PINNED_EPOCH) -> Path:
    with tarfile.open(path, "w") as archive:
        for name, data in sorted(entries.items()):
            info = tarfile.TarInfo(name)
            info.size = len(data)
            info.mtime = mtime
            archive.addfile(info, io.BytesIO(data))
    return path


def explode_entries(tmp_path: Path, entries: dict[str, bytes]):
    """Zip up entries, explode them, and return the workspace."""
    archive = make_zip(tmp_path / "input.zip", entries)
    return explode(str(archive), ArchiveKind.ZIP, str(tmp_path / "work"))


def synthetic_corpus(count: int = 148) -> dict[str, bytes]:
    """A deterministic ``count``-file corpus spanning 107..3588344 bytes.

    Mixes plain text, XML, and binary content, including files containing
    markup and NUL bytes, so every analyzer branch gets traffic.
    """
    rng = random.Random(20051201)
    entries: dict[str, bytes] = {}
    entries["data/min.txt"] = (b"0123456789" * 11)[:107]
    big = rng.randbytes(3588344 - 64)
    entries["data/max.bin"] = big + bytes(3588344 - len(big))

    for index in range(count - 2):
        kind = index % 4
        size = 107 + (index * 977) % 24000
        if kind == 0:
            body = (f"text file {index}\n" * 200).encode("ascii")[:size] or b"text\n"
            entries[f"text/file{index:03d}.txt"] = body
        elif kind == 1:
            rows = "".join(f"<row n='{i}'>value {i}</row>" for i in range(size // 30 + 1))
            entries[f"xml/file{index:03d}.xml"] = (
                f'<?xml version="1.0"?><table>{rows}</table>'.encode("ascii")
            )
        elif kind == 2:
            entries[f"bin/file{index:03d}.dat"] = rng.randbytes(size)
        else:
            tricky = b"<didl:Component> & friends\x00" + rng.randbytes(size // 2)
            entries[f"mixed/file{index:03d}.raw"] = tricky
    assert len(entries) == count
    return entries


@pytest.fixture(scope="session")
def corpus_archive(tmp_path_factory) -> Path:
    root = tmp_path_factory.mktemp("corpus")
    return make_targz(root / "corpus.tar.gz", synthetic_corpus())


@pytest.fixture()
def pinned_clock(monkeypatch):
    monkeypatch.setenv("ARCHIVE2DIDL_EPOCH", str(PINNED_EPOCH))
    return PINNED_EPOCH


# One verdict line per acceptance criterion, printed in the terminal
# summary so capture mode cannot swallow them.
_acceptance_lines: list[str] = []


def record_acceptance_line(line: str) -> None:
    _acceptance_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)
