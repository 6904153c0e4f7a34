"""Core domain model: preservation description entities, identifiers, items.

Every analyzer result is a bag of typed metadata entries.  Each entry is
classified into one of the four preservation description information
entities (provenance, context, reference, fixity), and the bag is carried
around as a :class:`Pdi` until it is serialized into the output document.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

DEFAULT_AUTHORITY = "100.700"

_MD5_HEX = re.compile(r"[0-9a-fA-F]{32}")
_DIGEST_UPPER = re.compile(r"[0-9A-F]{32}")


class InvalidDigest(ValueError):
    """A digest string is not 32 hexadecimal characters."""


class UnknownPdiType(LookupError):
    """A metadata type name has no registered entity classification."""


class PdiEntity(Enum):
    """The four entity kinds a metadata entry can belong to.

    The enum value doubles as the XML element name used on output.
    Definition order is the canonical serialization order.
    """

    PROVENANCE = "provenance"
    CONTEXT = "context"
    REFERENCE = "reference"
    FIXITY = "fixity"


# Type-name -> entity classification table.  The table is closed: built-in
# analyzers only emit names listed here, and classify() refuses the rest.
_CLASSIFICATION: dict[str, PdiEntity] = {
    "lastModified": PdiEntity.PROVENANCE,
    "mimeType": PdiEntity.CONTEXT,
    "format": PdiEntity.CONTEXT,
    "status": PdiEntity.CONTEXT,
    "registryUri": PdiEntity.CONTEXT,
    "analysisError": PdiEntity.CONTEXT,
    "identifier": PdiEntity.REFERENCE,
    "internalIdentifier": PdiEntity.REFERENCE,
    "uri": PdiEntity.REFERENCE,
    "MD5": PdiEntity.FIXITY,
    "SHA-1": PdiEntity.FIXITY,
    "SHA": PdiEntity.FIXITY,
    "CRC32": PdiEntity.FIXITY,
    "size": PdiEntity.FIXITY,
    "rawCharacters": PdiEntity.FIXITY,
}


def classify(type_name: str) -> PdiEntity:
    """Return the entity a metadata type name belongs to.

    Raises UnknownPdiType for names outside the registered vocabulary.
    """
    try:
        return _CLASSIFICATION[type_name]
    except KeyError:
        raise UnknownPdiType(f"unregistered metadata type name: {type_name!r}") from None


def known_type_names() -> frozenset[str]:
    return frozenset(_CLASSIFICATION)


@dataclass(frozen=True)
class PdiEntry:
    """One typed metadata assertion, e.g. ``fixity MD5 <hex>``."""

    entity: PdiEntity
    type_name: str
    value: str

    def __post_init__(self) -> None:
        if not isinstance(self.entity, PdiEntity):
            raise TypeError("entity must be a PdiEntity")
        if not self.type_name or self.type_name != self.type_name.strip():
            raise ValueError("type_name must be non-empty with no surrounding whitespace")


@dataclass(frozen=True)
class Pdi:
    """An analyzer's full result: its signature, entries, and raw output.

    ``signature`` identifies the producing analyzer (name, version,
    environment).  ``raw_output`` preserves the analyzer's native output
    verbatim so nothing is lost by the entry classification.
    """

    signature: str
    entries: tuple[PdiEntry, ...] = ()
    raw_output: str = ""

    def __post_init__(self) -> None:
        if not self.signature:
            raise ValueError("signature must be non-empty")
        object.__setattr__(self, "entries", tuple(self.entries))

    def ordered_entries(self) -> tuple[PdiEntry, ...]:
        """Entries grouped provenance, context, reference, fixity.

        Within a group the original insertion order is preserved, so the
        result is deterministic for a given entry sequence.
        """
        return tuple(
            entry
            for entity in PdiEntity
            for entry in self.entries
            if entry.entity is entity
        )

    def entries_for(self, entity: PdiEntity) -> tuple[PdiEntry, ...]:
        return tuple(e for e in self.entries if e.entity is entity)


@dataclass(frozen=True)
class Identifier:
    """Content-derived item identifier.

    The digest is the uppercase hex MD5 of the item's bytes; ``authority``
    is an opaque namespace prefix and ``version`` a small revision counter
    (currently always 0).
    """

    authority: str
    digest_hex: str
    version: int = 0

    def __post_init__(self) -> None:
        if not self.authority or "/" in self.authority:
            raise ValueError("authority must be non-empty and must not contain '/'")
        if not _DIGEST_UPPER.fullmatch(self.digest_hex):
            raise InvalidDigest(
                f"digest must be 32 uppercase hex characters, got {self.digest_hex!r}"
            )
        if self.version < 0:
            raise ValueError("version must be >= 0")

    @property
    def external(self) -> str:
        """Globally scoped form: ``<authority>/<digest>``."""
        return f"{self.authority}/{self.digest_hex}"

    @property
    def internal(self) -> str:
        """Collection-scoped form: ``<digest>.<version>``."""
        return f"{self.digest_hex}.{self.version}"


def make_identifier(
    content_md5: str,
    authority: str = DEFAULT_AUTHORITY,
    version: int = 0,
) -> Identifier:
    """Build an Identifier from an MD5 hex digest of any letter case."""
    if not _MD5_HEX.fullmatch(content_md5):
        raise InvalidDigest(
            f"content_md5 must be 32 hex characters, got {content_md5!r}"
        )
    return Identifier(authority=authority, digest_hex=content_md5.upper(), version=version)


def hex_equal(a: str, b: str) -> bool:
    """Case-insensitive comparison for hex digest strings."""
    return a.lower() == b.lower()


@dataclass(frozen=True)
class DigitalItem:
    """One file lifted out of the submitted archive.

    ``relative_path`` uses ``/`` separators and is relative to the
    workspace root.  ``last_modified`` is an ISO-8601 timestamp with a
    numeric UTC offset.  ``content_md5`` is the lowercase hex digest the
    identifier was derived from.
    """

    relative_path: str
    size_bytes: int
    last_modified: str
    content_md5: str
    identifier: Identifier

    def __post_init__(self) -> None:
        if not self.relative_path:
            raise ValueError("relative_path must be non-empty")
        if self.size_bytes < 0:
            raise ValueError("size_bytes must be >= 0")
        if self.identifier.digest_hex != self.content_md5.upper():
            raise ValueError("identifier digest does not match content_md5")
