"""archive2didl: analyze archived files and emit MPEG-21 DIDL documents.

The pipeline ingests a tar, tar+gzip, zip, or directory submission,
runs a set of pluggable analyzers over every contained file, classifies
the resulting metadata into provenance, context, reference, and fixity
entries, and serializes everything into one deterministic DIDL document.
"""

from .didl import build_document, parse_document, serialize
from .framework import (
    AnalyzerDescriptor,
    AnalyzerRegistry,
    AnalyzerReport,
    run_all,
)
from .ingest import ArchiveKind, Workspace, detect_archive_kind, enumerate_item, explode
from .model import (
    DigitalItem,
    Identifier,
    Pdi,
    PdiEntity,
    PdiEntry,
    classify,
    make_identifier,
)
from .schema import load_default_schema, load_schema, validate_against_schema
from .timing import TimingCollector, TimingRecord, aggregate, emit_csv

__version__ = "0.1.0"

__all__ = [
    "AnalyzerDescriptor",
    "AnalyzerRegistry",
    "AnalyzerReport",
    "ArchiveKind",
    "DigitalItem",
    "Identifier",
    "Pdi",
    "PdiEntity",
    "PdiEntry",
    "TimingCollector",
    "TimingRecord",
    "Workspace",
    "aggregate",
    "build_document",
    "classify",
    "detect_archive_kind",
    "emit_csv",
    "enumerate_item",
    "explode",
    "load_default_schema",
    "load_schema",
    "make_identifier",
    "parse_document",
    "run_all",
    "serialize",
    "validate_against_schema",
    "__version__",
]
