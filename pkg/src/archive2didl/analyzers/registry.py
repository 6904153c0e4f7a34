"""Format registry lookup: map a format name to its registry URI.

The registry ships as a tab-separated data file (``format<TAB>uri``) so a
deployment can point at its own table.  URIs follow the
``info:gdfr/fred/f/<slug>`` scheme with lowercase alphanumeric slugs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from ..framework import AnalyzerDescriptor, Reader
from ..model import DigitalItem, Pdi, PdiEntity, PdiEntry
from .validate import sniff_format

_URI_PATTERN = re.compile(r"info:gdfr/fred/f/[a-z0-9]+")


@dataclass(frozen=True)
class RegistryEntry:
    format_name: str
    uri: str

    def __post_init__(self) -> None:
        if not self.format_name:
            raise ValueError("format_name must be non-empty")
        if not _URI_PATTERN.fullmatch(self.uri):
            raise ValueError(
                f"registry URI must look like info:gdfr/fred/f/<slug>, got {self.uri!r}"
            )


def parse_registry(text: str) -> tuple[RegistryEntry, ...]:
    entries = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) != 2:
            raise ValueError(f"registry line {lineno}: expected 2 tab-separated fields")
        entries.append(RegistryEntry(format_name=fields[0], uri=fields[1]))
    return tuple(entries)


def load_registry(path: str | None = None) -> tuple[RegistryEntry, ...]:
    if path is None:
        text = resources.files("archive2didl.data").joinpath("formats.tsv").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_registry(text)


def _signature_for(registry: tuple[RegistryEntry, ...]) -> str:
    return f"registry 1.0 format registry lookup ({len(registry)} entries)"


def registry_lookup(format_name: str, registry: tuple[RegistryEntry, ...]) -> Pdi:
    """Look up a format; a miss yields zero entries, never a failure."""
    signature = _signature_for(registry)
    for entry in registry:
        if entry.format_name == format_name:
            return Pdi(
                signature=signature,
                entries=(PdiEntry(PdiEntity.CONTEXT, "registryUri", entry.uri),),
                raw_output=entry.uri,
            )
    return Pdi(
        signature=signature,
        entries=(),
        raw_output=f"no registry entry for format {format_name!r}",
    )


def make_plugin(path: str | None = None):
    """Bind a registry table and return (descriptor, analyzer function)."""
    registry = load_registry(path)
    descriptor = AnalyzerDescriptor(id="registry", signature=_signature_for(registry))

    def run(item: DigitalItem, reader: Reader) -> Pdi:
        return registry_lookup(sniff_format(reader), registry)

    return descriptor, run
