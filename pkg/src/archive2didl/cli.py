"""Command-line interface.

``analyze`` ingests an archive, runs the selected analyzers over every
file, and writes one DIDL document (plus an optional timing CSV).
``validate`` checks an existing document against the shipped schemas.

Exit codes: 0 success, 1 fatal error, 2 completed with analyzer errors
recorded in the output.
"""

from __future__ import annotations

import argparse
import os
import shutil
import sys
import tempfile
from dataclasses import dataclass, field
from time import perf_counter
from xml.etree import ElementTree as ET

from .analyzers import DEFAULT_ANALYZER_IDS, default_registry
from .didl import build_document, serialize
from .framework import DEFAULT_TIMEOUT_S, UnknownAnalyzer, run_all
from .ingest import (
    ArchiveKind,
    IngestError,
    detect_archive_kind,
    explode,
)
from .model import DEFAULT_AUTHORITY
from .schema import load_default_schema, validate_against_schema
from .timing import TimingCollector, aggregate, emit_csv

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_ANALYZER_ERRORS = 2

ARCHIVE_MIME = {
    ArchiveKind.TAR: "application/x-tar",
    ArchiveKind.TAR_GZIP: "application/gzip",
    ArchiveKind.ZIP: "application/zip",
    ArchiveKind.DIRECTORY: "inode/directory",
}


@dataclass
class RunConfig:
    """Everything one analyze run needs."""

    archive_path: str
    output_path: str
    timing_path: str | None = None
    analyzers: tuple[str, ...] = DEFAULT_ANALYZER_IDS
    authority: str = DEFAULT_AUTHORITY
    workdir: str | None = None
    keep_workdir: bool = False
    magic_path: str | None = None
    registry_path: str | None = None
    workers: int = 1
    timeout_s: float | None = DEFAULT_TIMEOUT_S

    def __post_init__(self) -> None:
        if not self.analyzers:
            raise ValueError("at least one analyzer must be selected")
        if len(set(self.analyzers)) != len(self.analyzers):
            raise ValueError("analyzer selection contains duplicates")
        if self.workers < 1:
            raise ValueError("workers must be a positive integer")


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_FATAL


def run(config: RunConfig) -> int:
    """Execute one analyze run; returns the process exit code."""
    if not os.path.exists(config.archive_path):
        return _fail(f"archive not found: {config.archive_path}")

    try:
        kind = detect_archive_kind(config.archive_path)
    except IngestError as exc:
        return _fail(str(exc))

    own_workdir = config.workdir is None
    workdir = config.workdir or tempfile.mkdtemp(prefix="archive2didl-")
    try:
        try:
            workspace = explode(config.archive_path, kind, workdir, config.authority)
        except (IngestError, ValueError, OSError) as exc:
            return _fail(str(exc))

        try:
            registry = default_registry(config.magic_path, config.registry_path)
            collector = TimingCollector()
            started = perf_counter()
            reports = run_all(
                registry,
                workspace,
                config.analyzers,
                workers=config.workers,
                timeout_s=config.timeout_s,
                collector=collector,
            )
            wall_ms = (perf_counter() - started) * 1000.0
        except (UnknownAnalyzer, ValueError, OSError) as exc:
            return _fail(str(exc))

        document = build_document(
            workspace,
            reports,
            archive_ref=os.path.basename(os.path.normpath(config.archive_path)),
            archive_mime=ARCHIVE_MIME[kind],
        )
        xml = serialize(document)

        violations = validate_against_schema(xml, load_default_schema())
        with open(config.output_path, "wb") as fh:
            fh.write(xml)
        if violations:
            for violation in violations:
                print(f"error: output failed schema check: {violation}", file=sys.stderr)
            return EXIT_FATAL

        if config.timing_path is not None:
            stats = aggregate(collector.records(), wall_ms=wall_ms)
            emit_csv(collector.records(), stats, config.timing_path)

        print(
            f"analyzed {len(workspace.items)} item(s) with "
            f"{len(config.analyzers)} analyzer(s) -> {config.output_path}"
        )
        if workspace.skipped_entries:
            print(
                f"warning: skipped {workspace.skipped_entries} non-regular archive entries",
                file=sys.stderr,
            )

        had_errors = any(
            entry.type_name == "analysisError"
            for report in reports
            for entry in report.pdi.entries
        )
        if had_errors:
            print("warning: some analyzers failed; see analysisError entries", file=sys.stderr)
            return EXIT_ANALYZER_ERRORS
        return EXIT_OK
    finally:
        if own_workdir and not config.keep_workdir:
            shutil.rmtree(workdir, ignore_errors=True)
        elif config.keep_workdir:
            print(f"workspace kept at {workdir}", file=sys.stderr)


def validate_document(path: str) -> int:
    try:
        with open(path, "rb") as fh:
            xml = fh.read()
    except OSError as exc:
        return _fail(str(exc))
    try:
        violations = validate_against_schema(xml, load_default_schema())
    except ET.ParseError as exc:
        return _fail(f"not well-formed XML: {exc}")
    if violations:
        for violation in violations:
            print(f"violation: {violation}", file=sys.stderr)
        return EXIT_FATAL
    print(f"{path}: valid")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="archive2didl",
        description="Analyze an archive and emit an MPEG-21 DIDL document.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    analyze = sub.add_parser("analyze", help="analyze an archive")
    analyze.add_argument("archive", help="tar, tar.gz, zip, or directory to analyze")
    analyze.add_argument("-o", "--output", required=True, help="DIDL output path")
    analyze.add_argument("--timing", help="also write a per-analyzer timing CSV")
    analyze.add_argument(
        "--analyzers",
        default=",".join(DEFAULT_ANALYZER_IDS),
        help="comma-separated analyzer ids (execution order is fixed by registration)",
    )
    analyze.add_argument("--authority", default=DEFAULT_AUTHORITY, help="identifier authority")
    analyze.add_argument("--workers", type=int, default=1, help="parallel (item, analyzer) workers")
    analyze.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT_S,
                         help="per-analyzer timeout in seconds")
    analyze.add_argument("--magic", help="alternate magic rule table")
    analyze.add_argument("--registry", help="alternate format registry table")
    analyze.add_argument("--workdir", help="extraction directory (must be empty)")
    analyze.add_argument("--keep-workdir", action="store_true",
                         help="do not delete the extraction directory")

    validate = sub.add_parser("validate", help="validate a DIDL document")
    validate.add_argument("document", help="DIDL document to check")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.command == "validate":
        return validate_document(args.document)

    analyzer_ids = tuple(a.strip() for a in args.analyzers.split(",") if a.strip())
    try:
        config = RunConfig(
            archive_path=args.archive,
            output_path=args.output,
            timing_path=args.timing,
            analyzers=analyzer_ids,
            authority=args.authority,
            workdir=args.workdir,
            keep_workdir=args.keep_workdir,
            magic_path=args.magic,
            registry_path=args.registry,
            workers=args.workers,
            timeout_s=args.timeout,
        )
    except ValueError as exc:
        return _fail(str(exc))
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
