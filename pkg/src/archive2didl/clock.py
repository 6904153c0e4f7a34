"""Timestamp rendering with an override hook for reproducible output.

When the environment variable named by EPOCH_ENV holds a Unix epoch
(seconds, float accepted), every timestamp the pipeline emits is rendered
from that instant in UTC.  This exists solely so golden-file tests and
repeated runs can produce byte-identical documents; normal runs use the
real clock and filesystem times in the local timezone.
"""

from __future__ import annotations

import os
import time
from datetime import datetime, timezone

EPOCH_ENV = "ARCHIVE2DIDL_EPOCH"


def pinned_epoch() -> float | None:
    raw = os.environ.get(EPOCH_ENV)
    if raw is None or raw == "":
        return None
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"{EPOCH_ENV} must be a Unix epoch number, got {raw!r}") from None


def iso_timestamp(epoch: float, utc: bool = False) -> str:
    """Render an epoch as ISO-8601 with a numeric UTC offset."""
    moment = datetime.fromtimestamp(epoch, tz=timezone.utc)
    if not utc:
        moment = moment.astimezone()
    return moment.isoformat(timespec="seconds")


def modified_timestamp(path: str) -> str:
    """Timestamp for a file's last modification, honoring the pin."""
    pinned = pinned_epoch()
    if pinned is not None:
        return iso_timestamp(pinned, utc=True)
    return iso_timestamp(os.stat(path).st_mtime)


def analysis_timestamp() -> str:
    """Timestamp for "when this analysis ran", honoring the pin."""
    pinned = pinned_epoch()
    if pinned is not None:
        return iso_timestamp(pinned, utc=True)
    return iso_timestamp(time.time())
