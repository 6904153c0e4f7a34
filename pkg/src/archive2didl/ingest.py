"""Archive detection and safe extraction into a working directory.

Supported submissions are tar, gzip-compressed tar, zip, and plain
directories.  Extraction never writes outside the destination directory:
entry names are normalized, traversal attempts are rejected, and
non-regular entries (symlinks, devices, fifos) are skipped with a warning.
"""

from __future__ import annotations

import gzip
import hashlib
import logging
import os
import shutil
import stat
import tarfile
import time
import zipfile
from dataclasses import dataclass
from enum import Enum

from .clock import modified_timestamp
from .model import DEFAULT_AUTHORITY, DigitalItem, make_identifier

log = logging.getLogger(__name__)

_READ_CHUNK = 1 << 20

# Magic numbers checked against the head of the submitted file.
_GZIP_MAGIC = b"\x1f\x8b"
_ZIP_MAGICS = (b"PK\x03\x04", b"PK\x05\x06")
_TAR_MAGIC_OFFSET = 257
_TAR_MAGIC = b"ustar"


class IngestError(Exception):
    """Base class for archive ingestion failures."""


class UnsupportedArchive(IngestError):
    """The submission is not a recognizable tar, tar+gzip, zip, or directory."""


class PathTraversal(IngestError):
    """An archive entry tried to escape the extraction directory."""


class CorruptArchive(IngestError):
    """The archive container is recognized but cannot be read to the end."""


class ArchiveKind(Enum):
    TAR = "tar"
    TAR_GZIP = "tar+gzip"
    ZIP = "zip"
    DIRECTORY = "directory"


@dataclass(frozen=True)
class Workspace:
    """An exploded archive: extraction root plus the enumerated items.

    ``items`` is sorted by byte-wise lexicographic order of relative_path,
    so it is a pure function of the archive contents.  ``skipped_entries``
    counts non-regular entries that were dropped during extraction.
    """

    root_dir: str
    items: tuple[DigitalItem, ...]
    skipped_entries: int = 0


def _looks_like_tar(head: bytes) -> bool:
    end = _TAR_MAGIC_OFFSET + len(_TAR_MAGIC)
    return len(head) >= end and head[_TAR_MAGIC_OFFSET:end] == _TAR_MAGIC


def detect_archive_kind(path: str) -> ArchiveKind:
    """Classify a submission by content, not by file name.

    The file name extension is consulted only as a tie-break when no magic
    number matches (e.g. pre-POSIX tar files without the ustar field).
    """
    if os.path.isdir(path):
        return ArchiveKind.DIRECTORY
    if not os.path.isfile(path):
        raise UnsupportedArchive(f"not a file or directory: {path}")
    with open(path, "rb") as fh:
        head = fh.read(512)
    if head[:2] == _GZIP_MAGIC:
        try:
            with gzip.open(path, "rb") as gz:
                inner = gz.read(512)
        except (OSError, EOFError) as exc:
            raise CorruptArchive(f"unreadable gzip stream: {path}") from exc
        if _looks_like_tar(inner):
            return ArchiveKind.TAR_GZIP
        raise UnsupportedArchive(f"gzip stream does not contain a tar archive: {path}")
    if head[:4] in _ZIP_MAGICS:
        return ArchiveKind.ZIP
    if _looks_like_tar(head):
        return ArchiveKind.TAR
    # No magic matched; fall back to the extension as a hint, but verify.
    name = path.lower()
    if name.endswith(".tar") and tarfile.is_tarfile(path):
        return ArchiveKind.TAR
    if name.endswith(".zip") and zipfile.is_zipfile(path):
        return ArchiveKind.ZIP
    raise UnsupportedArchive(f"unrecognized archive format: {path}")


def _encode_name_bytes(raw: bytes) -> str:
    """Decode an entry-name path segment, percent-encoding what cannot stay.

    Valid UTF-8 passes through untouched except for '%', control bytes,
    and DEL, which are percent-encoded so the result is unambiguous and
    legal in an XML 1.0 document.  Invalid byte sequences are encoded
    byte-by-byte.
    """
    out: list[str] = []
    i = 0
    n = len(raw)
    while i < n:
        b = raw[i]
        if b < 0x20 or b == 0x7F or b == 0x25:  # controls, DEL, '%'
            out.append(f"%{b:02X}")
            i += 1
        elif b < 0x80:
            out.append(chr(b))
            i += 1
        else:
            for width in (2, 3, 4):
                chunk = raw[i : i + width]
                try:
                    ch = chunk.decode("utf-8")
                except UnicodeDecodeError:
                    continue
                if ch in "￾￿":  # legal UTF-8, illegal XML
                    break
                out.append(ch)
                i += width
                break
            else:
                out.append(f"%{b:02X}")
                i += 1
            continue
    return "".join(out)


def _safe_relative_path(entry_name: str) -> str | None:
    """Normalize an archive entry name into a workspace-relative path.

    Returns None for names that normalize to nothing (the archive root).
    Raises PathTraversal for absolute names or any ``..`` segment.
    """
    if entry_name.startswith("/"):
        raise PathTraversal(f"absolute entry name: {entry_name!r}")
    segments = [s for s in entry_name.split("/") if s not in ("", ".")]
    if any(s == ".." for s in segments):
        raise PathTraversal(f"entry name escapes the workspace: {entry_name!r}")
    if not segments:
        return None
    encoded = [
        _encode_name_bytes(s.encode("utf-8", "surrogateescape")) for s in segments
    ]
    return "/".join(encoded)


def _target_path(dest: str, relative: str) -> str:
    target = os.path.join(dest, *relative.split("/"))
    # Belt and braces: the normalized path must still land inside dest.
    dest_real = os.path.realpath(dest)
    if os.path.commonpath([dest_real, os.path.realpath(os.path.dirname(target) or dest)]) != dest_real:
        raise PathTraversal(f"entry resolves outside the workspace: {relative!r}")
    return target


def _explode_tar(path: str, dest: str, compressed: bool) -> int:
    skipped = 0
    mode = "r:gz" if compressed else "r:"
    try:
        with tarfile.open(path, mode) as archive:
            for member in archive:
                relative = _safe_relative_path(member.name)
                if relative is None:
                    continue
                if member.isdir():
                    os.makedirs(_target_path(dest, relative), exist_ok=True)
                    continue
                if not member.isreg():
                    skipped += 1
                    log.warning("skipping non-regular tar entry: %s", member.name)
                    continue
                target = _target_path(dest, relative)
                os.makedirs(os.path.dirname(target), exist_ok=True)
                source = archive.extractfile(member)
                if source is None:
                    skipped += 1
                    continue
                with source, open(target, "wb") as sink:
                    shutil.copyfileobj(source, sink, _READ_CHUNK)
                os.utime(target, (member.mtime, member.mtime))
    except tarfile.TarError as exc:
        raise CorruptArchive(f"unreadable tar archive: {path}") from exc
    except (EOFError, gzip.BadGzipFile) as exc:
        raise CorruptArchive(f"truncated or corrupt archive: {path}") from exc
    return skipped


def _zip_entry_mtime(info: zipfile.ZipInfo) -> float:
    try:
        return time.mktime(info.date_time + (0, 0, -1))
    except (OverflowError, ValueError):
        return 0.0


def _explode_zip(path: str, dest: str) -> int:
    skipped = 0
    try:
        with zipfile.ZipFile(path) as archive:
            for info in archive.infolist():
                relative = _safe_relative_path(info.filename)
                if relative is None:
                    continue
                if info.is_dir():
                    os.makedirs(_target_path(dest, relative), exist_ok=True)
                    continue
                unix_mode = info.external_attr >> 16
                # Only trust the type bits when the archiver recorded them.
                if stat.S_IFMT(unix_mode) and not stat.S_ISREG(unix_mode):
                    skipped += 1
                    log.warning("skipping non-regular zip entry: %s", info.filename)
                    continue
                target = _target_path(dest, relative)
                os.makedirs(os.path.dirname(target), exist_ok=True)
                with archive.open(info) as source, open(target, "wb") as sink:
                    shutil.copyfileobj(source, sink, _READ_CHUNK)
                mtime = _zip_entry_mtime(info)
                os.utime(target, (mtime, mtime))
    except zipfile.BadZipFile as exc:
        raise CorruptArchive(f"unreadable zip archive: {path}") from exc
    return skipped


def _copy_tree(source_root: str, dest: str) -> int:
    skipped = 0
    for current, dirs, files in os.walk(source_root):
        # Do not descend into symlinked directories.
        pruned = []
        for d in dirs:
            if os.path.islink(os.path.join(current, d)):
                skipped += 1
                log.warning("skipping symlinked directory: %s", os.path.join(current, d))
            else:
                pruned.append(d)
        dirs[:] = pruned
        for name in files:
            source = os.path.join(current, name)
            if os.path.islink(source) or not os.path.isfile(source):
                skipped += 1
                log.warning("skipping non-regular entry: %s", source)
                continue
            entry = os.path.relpath(source, source_root).replace(os.sep, "/")
            relative = _safe_relative_path(entry)
            if relative is None:
                continue
            target = _target_path(dest, relative)
            os.makedirs(os.path.dirname(target), exist_ok=True)
            shutil.copy2(source, target)
    return skipped


def enumerate_item(
    path: str,
    relative_path: str,
    authority: str = DEFAULT_AUTHORITY,
) -> DigitalItem:
    """Describe one workspace file: size, timestamp, digest, identifier.

    The file is streamed exactly once; the recorded size is the number of
    bytes actually digested, so it cannot disagree with the checksum.
    """
    digest = hashlib.md5()
    size = 0
    with open(path, "rb") as fh:
        while True:
            chunk = fh.read(_READ_CHUNK)
            if not chunk:
                break
            digest.update(chunk)
            size += len(chunk)
    content_md5 = digest.hexdigest()
    return DigitalItem(
        relative_path=relative_path,
        size_bytes=size,
        last_modified=modified_timestamp(path),
        content_md5=content_md5,
        identifier=make_identifier(content_md5, authority),
    )


def explode(
    path: str,
    kind: ArchiveKind,
    dest: str,
    authority: str = DEFAULT_AUTHORITY,
) -> Workspace:
    """Extract a submission into ``dest`` and enumerate every regular file.

    ``dest`` must be empty (it is created if missing).  Nested archives
    are not recursed into; they surface as single items.
    """
    os.makedirs(dest, exist_ok=True)
    if os.listdir(dest):
        raise ValueError(f"extraction directory is not empty: {dest}")

    if kind is ArchiveKind.DIRECTORY:
        skipped = _copy_tree(path, dest)
    elif kind is ArchiveKind.ZIP:
        skipped = _explode_zip(path, dest)
    elif kind is ArchiveKind.TAR:
        skipped = _explode_tar(path, dest, compressed=False)
    elif kind is ArchiveKind.TAR_GZIP:
        skipped = _explode_tar(path, dest, compressed=True)
    else:  # pragma: no cover - enum is closed
        raise UnsupportedArchive(f"unhandled archive kind: {kind}")

    relative_paths: list[str] = []
    for current, _dirs, files in os.walk(dest):
        for name in files:
            full = os.path.join(current, name)
            relative_paths.append(os.path.relpath(full, dest).replace(os.sep, "/"))
    relative_paths.sort(key=lambda rel: rel.encode("utf-8"))

    items = tuple(
        enumerate_item(os.path.join(dest, *rel.split("/")), rel, authority)
        for rel in relative_paths
    )
    return Workspace(root_dir=dest, items=items, skipped_entries=skipped)
