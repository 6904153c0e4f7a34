"""Format validation analyzer: identify, validate, and fingerprint content.

Three modules cover the supported formats: an XML module (well-formedness
checked with expat), an ASCII text module, and a bytestream fallback that
accepts anything.  Regardless of module, one streaming pass collects the
byte count, CRC32, MD5, and SHA-1, plus line-ending statistics.  The raw
output is an XML report fragment carrying the same facts.
"""

from __future__ import annotations

import hashlib
import platform
import zlib
from dataclasses import dataclass, field
from xml.etree import ElementTree as ET
from xml.parsers import expat

from ..clock import analysis_timestamp
from ..framework import AnalyzerDescriptor, Reader
from ..model import DigitalItem, Pdi, PdiEntity, PdiEntry

_CHUNK = 1 << 20

FORMAT_ASCII = "ASCII"
FORMAT_XML = "XML"
FORMAT_BYTESTREAM = "bytestream"

MIME_ASCII = "text/plain; charset=US-ASCII"
MIME_XML = "text/xml"
MIME_BYTESTREAM = "application/octet-stream"

STATUS_VALID = "Well-formed and valid"
STATUS_WELL_FORMED = "Well-formed"
STATUS_NOT_WELL_FORMED = "Not well-formed"

# Tab, LF, CR, and the printable range: the ASCII module accepts nothing else.
ASCII_BYTES = frozenset({0x09, 0x0A, 0x0D} | set(range(0x20, 0x7F)))

_XML_NAME_START = frozenset(
    b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_:"
)
_UTF8_BOM = b"\xef\xbb\xbf"
_WHITESPACE = b" \t\r\n"

SIGNATURE = (
    f"validate 1.0 modules ASCII/XML/bytestream "
    f"({platform.python_implementation()} {platform.python_version()})"
)

DESCRIPTOR = AnalyzerDescriptor(id="validate", signature=SIGNATURE)


@dataclass
class ValidationResult:
    """Outcome of running one module over one stream."""

    format: str
    status: str
    mime_type: str
    module: str
    size: int
    crc32: str
    md5: str
    sha1: str
    properties: tuple[tuple[str, str], ...] = field(default=())


def crc32(reader: Reader) -> str:
    """CRC-32 (the zlib/IEEE variant) of the stream, lowercase 8-digit hex."""
    value = 0
    while True:
        chunk = reader.read(_CHUNK)
        if not chunk:
            break
        value = zlib.crc32(chunk, value)
    return f"{value & 0xFFFFFFFF:08x}"


def sniffs_as_xml(head: bytes) -> bool:
    """Heuristic identification: optional BOM and whitespace, then either
    an XML declaration or an open angle bracket followed by a name start."""
    if head.startswith(_UTF8_BOM):
        head = head[len(_UTF8_BOM) :]
    head = head.lstrip(_WHITESPACE)
    if head.startswith(b"<?xml"):
        return True
    return len(head) >= 2 and head[0:1] == b"<" and head[1] in _XML_NAME_START


class _XmlCheck:
    """Incremental well-formedness check over the raw byte stream.

    Also notes whether the document declares any external validation
    obligation (a DOCTYPE or a schema-location attribute); those are
    identified but not validated here.
    """

    def __init__(self) -> None:
        self._parser = expat.ParserCreate()
        self._parser.StartDoctypeDeclHandler = self._on_doctype
        self._parser.StartElementHandler = self._on_element
        self.has_dtd = False
        self.has_schema_ref = False
        self.well_formed: bool | None = None

    def _on_doctype(self, *args) -> None:
        self.has_dtd = True

    def _on_element(self, name: str, attributes: dict[str, str]) -> None:
        for attr in attributes:
            local = attr.rsplit(":", 1)[-1]
            if local in ("schemaLocation", "noNamespaceSchemaLocation"):
                self.has_schema_ref = True

    def feed(self, chunk: bytes, final: bool = False) -> None:
        if self.well_formed is False:
            return
        try:
            self._parser.Parse(chunk, final)
        except expat.ExpatError:
            self.well_formed = False
        else:
            if final:
                self.well_formed = True


class _LineEndingCounter:
    def __init__(self) -> None:
        self.crlf = 0
        self.lf = 0
        self.cr = 0
        self._pending_cr = False

    def feed(self, chunk: bytes) -> None:
        for b in chunk:
            if self._pending_cr:
                self._pending_cr = False
                if b == 0x0A:
                    self.crlf += 1
                    continue
                self.cr += 1
            if b == 0x0A:
                self.lf += 1
            elif b == 0x0D:
                self._pending_cr = True

    def finish(self) -> str | None:
        if self._pending_cr:
            self.cr += 1
            self._pending_cr = False
        kinds = [
            name
            for name, count in (("LF", self.lf), ("CR", self.cr), ("CRLF", self.crlf))
            if count
        ]
        if not kinds:
            return None
        if len(kinds) > 1:
            return "mixed"
        return kinds[0]


def validate_stream(relative_path: str, reader: Reader) -> ValidationResult:
    """Identify and validate a stream in a single pass."""
    md5 = hashlib.md5()
    sha1 = hashlib.sha1()
    crc = 0
    size = 0
    all_ascii = True
    endings = _LineEndingCounter()
    xml_check: _XmlCheck | None = None

    first = True
    is_xml_candidate = False
    while True:
        chunk = reader.read(_CHUNK)
        if first:
            is_xml_candidate = bool(chunk) and sniffs_as_xml(chunk[:256])
            if is_xml_candidate:
                xml_check = _XmlCheck()
            first = False
        if not chunk:
            break
        md5.update(chunk)
        sha1.update(chunk)
        crc = zlib.crc32(chunk, crc)
        size += len(chunk)
        if all_ascii and any(b not in ASCII_BYTES for b in chunk):
            all_ascii = False
        endings.feed(chunk)
        if xml_check is not None:
            xml_check.feed(chunk)
    if xml_check is not None:
        xml_check.feed(b"", final=True)

    properties: list[tuple[str, str]] = []
    if size == 0:
        fmt, mime, status, module = (
            FORMAT_BYTESTREAM,
            MIME_BYTESTREAM,
            STATUS_VALID,
            "bytestream",
        )
    elif is_xml_candidate:
        fmt, mime, module = FORMAT_XML, MIME_XML, "XML"
        assert xml_check is not None
        if not xml_check.well_formed:
            status = STATUS_NOT_WELL_FORMED
        elif xml_check.has_dtd or xml_check.has_schema_ref:
            # External grammar declared but not checked here.
            status = STATUS_WELL_FORMED
        else:
            status = STATUS_VALID
    elif all_ascii:
        fmt, mime, status, module = FORMAT_ASCII, MIME_ASCII, STATUS_VALID, "ASCII"
        line_endings = endings.finish()
        if line_endings is not None:
            properties.append(("LineEndings", line_endings))
    else:
        fmt, mime, status, module = (
            FORMAT_BYTESTREAM,
            MIME_BYTESTREAM,
            STATUS_VALID,
            "bytestream",
        )

    return ValidationResult(
        format=fmt,
        status=status,
        mime_type=mime,
        module=module,
        size=size,
        crc32=f"{crc & 0xFFFFFFFF:08x}",
        md5=md5.hexdigest(),
        sha1=sha1.hexdigest(),
        properties=tuple(properties),
    )


def sniff_format(reader: Reader) -> str:
    """Format token (ASCII, XML, or bytestream) for a stream.

    Uses the same dispatch as validate_stream so sibling analyzers agree
    on the format name without re-running the full validation.
    """
    head = b""
    all_ascii = True
    size = 0
    while True:
        chunk = reader.read(_CHUNK)
        if not chunk:
            break
        if not head:
            head = chunk[:256]
        size += len(chunk)
        if all_ascii and any(b not in ASCII_BYTES for b in chunk):
            all_ascii = False
            if sniffs_as_xml(head):
                break
    if size == 0:
        return FORMAT_BYTESTREAM
    if sniffs_as_xml(head):
        return FORMAT_XML
    if all_ascii:
        return FORMAT_ASCII
    return FORMAT_BYTESTREAM


def _report_fragment(item: DigitalItem, result: ValidationResult) -> str:
    """Render the validation facts as a small standalone XML document."""
    root = ET.Element("validationReport")
    ET.SubElement(root, "date").text = analysis_timestamp()
    rep = ET.SubElement(root, "repInfo", {"uri": item.relative_path})
    ET.SubElement(rep, "reportingModule").text = result.module
    ET.SubElement(rep, "lastModified").text = item.last_modified
    ET.SubElement(rep, "size").text = str(result.size)
    ET.SubElement(rep, "format").text = result.format
    ET.SubElement(rep, "status").text = result.status
    ET.SubElement(rep, "mimeType").text = result.mime_type
    if result.properties:
        props = ET.SubElement(rep, "properties")
        for name, value in result.properties:
            prop = ET.SubElement(props, "property")
            ET.SubElement(prop, "name").text = name
            ET.SubElement(prop, "value").text = value
    checksums = ET.SubElement(rep, "checksums")
    for kind, value in (
        ("CRC32", result.crc32),
        ("MD5", result.md5),
        ("SHA-1", result.sha1),
    ):
        ET.SubElement(checksums, "checksum", {"type": kind}).text = value
    body = ET.tostring(root, encoding="unicode")
    return f'<?xml version="1.0" encoding="UTF-8"?>{body}'


def format_validate(item: DigitalItem, reader: Reader) -> Pdi:
    """Full validation result for one item as a Pdi."""
    result = validate_stream(item.relative_path, reader)
    entries = (
        PdiEntry(PdiEntity.PROVENANCE, "lastModified", item.last_modified),
        PdiEntry(PdiEntity.CONTEXT, "mimeType", result.mime_type),
        PdiEntry(PdiEntity.CONTEXT, "format", result.format),
        PdiEntry(PdiEntity.CONTEXT, "status", result.status),
        PdiEntry(PdiEntity.REFERENCE, "uri", item.relative_path),
        PdiEntry(PdiEntity.FIXITY, "size", str(result.size)),
        PdiEntry(PdiEntity.FIXITY, "CRC32", result.crc32),
        PdiEntry(PdiEntity.FIXITY, "MD5", result.md5),
        PdiEntry(PdiEntity.FIXITY, "SHA-1", result.sha1),
    )
    return Pdi(
        signature=SIGNATURE,
        entries=entries,
        raw_output=_report_fragment(item, result),
    )


def run(item: DigitalItem, reader: Reader) -> Pdi:
    return format_validate(item, reader)
