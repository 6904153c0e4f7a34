"""Built-in analyzers and the default registry wiring."""

from __future__ import annotations

from ..framework import AnalyzerRegistry
from . import checksum, filetype, registry, strings, validate

DEFAULT_ANALYZER_IDS = ("checksum", "filetype", "strings", "validate", "registry")


def default_registry(
    magic_path: str | None = None,
    registry_path: str | None = None,
) -> AnalyzerRegistry:
    """All built-in analyzers, registered in their canonical order."""
    analyzers = AnalyzerRegistry()
    analyzers.register(checksum.DESCRIPTOR, checksum.run)
    analyzers.register(*filetype.make_plugin(magic_path))
    analyzers.register(strings.DESCRIPTOR, strings.run)
    analyzers.register(validate.DESCRIPTOR, validate.run)
    analyzers.register(*registry.make_plugin(registry_path))
    return analyzers
