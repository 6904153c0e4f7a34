"""File type analyzer: magic-number rules with a text-charset fallback.

The rule table lives in a data file so deployments can extend it without
touching code.  Each line is five tab-separated fields::

    offset <TAB> pattern-hex <TAB> mask-hex-or-"-" <TAB> mime <TAB> description

``#`` starts a comment.  The mask, when present, is ANDed with both the
pattern and the file bytes before comparison and must be the pattern's
length.  At load time rules are ordered longest-pattern-first so the most
specific rule wins; ties keep file order.
"""

from __future__ import annotations

import codecs
from dataclasses import dataclass
from importlib import resources

from ..framework import AnalyzerDescriptor, Reader
from ..model import DigitalItem, Pdi, PdiEntity, PdiEntry

MAX_PREFIX_BYTES = 8192

MIME_EMPTY = "application/x-empty"
MIME_ASCII = "text/plain; charset=us-ascii"
MIME_UTF8 = "text/plain; charset=utf-8"
MIME_BINARY = "application/octet-stream"

# Bytes allowed in the ASCII-text charset test: tab, LF, CR, printable.
PRINTABLE_ASCII = frozenset({0x09, 0x0A, 0x0D} | set(range(0x20, 0x7F)))


@dataclass(frozen=True)
class MagicRule:
    offset: int
    pattern: bytes
    mask: bytes | None
    mime: str
    description: str

    def __post_init__(self) -> None:
        if self.offset < 0:
            raise ValueError("offset must be >= 0")
        if not self.pattern:
            raise ValueError("pattern must be non-empty")
        if self.mask is not None and len(self.mask) != len(self.pattern):
            raise ValueError("mask length must equal pattern length")

    def matches(self, data: bytes) -> bool:
        window = data[self.offset : self.offset + len(self.pattern)]
        if len(window) < len(self.pattern):
            return False
        if self.mask is None:
            return window == self.pattern
        return all(
            (w & m) == (p & m) for w, p, m in zip(window, self.pattern, self.mask)
        )


def _parse_rule(line: str, lineno: int) -> MagicRule:
    fields = line.split("\t")
    if len(fields) != 5:
        raise ValueError(f"magic rule line {lineno}: expected 5 tab-separated fields")
    offset_text, pattern_hex, mask_hex, mime, description = fields
    try:
        offset = int(offset_text)
        pattern = bytes.fromhex(pattern_hex)
        mask = None if mask_hex == "-" else bytes.fromhex(mask_hex)
    except ValueError as exc:
        raise ValueError(f"magic rule line {lineno}: {exc}") from None
    return MagicRule(offset=offset, pattern=pattern, mask=mask, mime=mime, description=description)


def parse_magic_rules(text: str) -> tuple[MagicRule, ...]:
    rules = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        rules.append(_parse_rule(line, lineno))
    # Longest pattern first; the sort is stable so equal lengths keep file order.
    return tuple(sorted(rules, key=lambda r: -len(r.pattern)))


def load_magic_rules(path: str | None = None) -> tuple[MagicRule, ...]:
    """Load the rule table from ``path``, or the built-in table."""
    if path is None:
        text = resources.files("archive2didl.data").joinpath("magic.tsv").read_text("utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_magic_rules(text)


def _is_utf8_text(prefix: bytes, truncated: bool) -> bool:
    """True when the prefix is valid UTF-8 containing multibyte sequences.

    A truncated prefix may end mid-sequence; the incremental decoder
    treats that pending tail as acceptable, while a complete file must
    decode fully.
    """
    if not any(b >= 0x80 for b in prefix):
        return False
    decoder = codecs.getincrementaldecoder("utf-8")()
    try:
        decoder.decode(prefix, final=not truncated)
    except UnicodeDecodeError:
        return False
    return True


def filetype_analyze(
    prefix: bytes,
    kind: str = "file",
    rules: tuple[MagicRule, ...] | None = None,
    truncated: bool = False,
) -> Pdi:
    """Classify content from its leading bytes.

    Precedence: non-file inodes, empty, magic rules, ASCII text, UTF-8
    text, then binary data.  ``truncated`` tells the charset tests that
    the prefix is a window on a larger file.
    """
    if rules is None:
        rules = load_magic_rules()

    if kind == "directory":
        mime, description = "inode/directory", "directory"
    elif kind != "file":
        mime, description = "inode/special", "special file"
    elif not prefix:
        mime, description = MIME_EMPTY, "empty"
    else:
        for rule in rules:
            if rule.matches(prefix):
                mime, description = rule.mime, rule.description
                break
        else:
            if all(b in PRINTABLE_ASCII for b in prefix):
                mime, description = MIME_ASCII, "ASCII text"
            elif _is_utf8_text(prefix, truncated):
                mime, description = MIME_UTF8, "UTF-8 Unicode text"
            else:
                mime, description = MIME_BINARY, "data"

    return Pdi(
        signature=_signature_for(rules),
        entries=(PdiEntry(PdiEntity.CONTEXT, "mimeType", mime),),
        raw_output=description,
    )


def _signature_for(rules: tuple[MagicRule, ...]) -> str:
    return f"filetype 1.0 magic rules ({len(rules)} patterns) + charset heuristics"


def make_plugin(path: str | None = None):
    """Bind a rule table and return (descriptor, analyzer function)."""
    rules = load_magic_rules(path)
    descriptor = AnalyzerDescriptor(
        id="filetype",
        signature=_signature_for(rules),
        max_prefix_bytes=MAX_PREFIX_BYTES,
    )

    def run(item: DigitalItem, reader: Reader) -> Pdi:
        prefix = reader.read(MAX_PREFIX_BYTES)
        return filetype_analyze(
            prefix,
            kind="file",
            rules=rules,
            truncated=item.size_bytes > len(prefix),
        )

    return descriptor, run
