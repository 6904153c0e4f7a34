"""Digest analyzer: one streaming pass producing SHA-1 and MD5 fixity."""

from __future__ import annotations

import hashlib
import platform

from ..framework import AnalyzerDescriptor, Reader
from ..model import DigitalItem, Pdi, PdiEntity, PdiEntry

_CHUNK = 1 << 20

SIGNATURE = (
    f"checksum 1.0 SHA-1/MD5 via hashlib "
    f"({platform.python_implementation()} {platform.python_version()})"
)

DESCRIPTOR = AnalyzerDescriptor(id="checksum", signature=SIGNATURE)


def checksum_analyze(reader: Reader) -> Pdi:
    """Digest the full stream; hex digests are reported uppercase."""
    md5 = hashlib.md5()
    sha1 = hashlib.sha1()
    while True:
        chunk = reader.read(_CHUNK)
        if not chunk:
            break
        md5.update(chunk)
        sha1.update(chunk)
    sha_hex = sha1.hexdigest().upper()
    md5_hex = md5.hexdigest().upper()
    return Pdi(
        signature=SIGNATURE,
        entries=(
            PdiEntry(PdiEntity.FIXITY, "SHA", sha_hex),
            PdiEntry(PdiEntity.FIXITY, "MD5", md5_hex),
        ),
        raw_output=f"SHA:{sha_hex} MD5:{md5_hex}",
    )


def run(item: DigitalItem, reader: Reader) -> Pdi:
    return checksum_analyze(reader)
