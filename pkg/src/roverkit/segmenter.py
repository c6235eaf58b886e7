"""Random segmentation of long audio streams into training utterances.

Segment lengths are drawn uniformly from [min_len, max_len] while more
than ``max_len`` seconds remain, so every drawn segment is in range.
The leftover tail is emitted as its own segment when it is at least
``min_len`` long; otherwise it is merged into the previous segment if
that stays within ``max_len``, and only as a last resort emitted as a
flagged short segment.  Segments always partition [0, duration).

Batch segmentation seeds each source independently from
``derive_seed(seed, source_id)``, so results do not depend on manifest
order or on which worker handles which source.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace

import numpy as np

from .errors import DuplicateRecordError, FormatError
from .seeding import derive_seed


@dataclass(frozen=True)
class SegmentParams:
    min_len: float = 5.0
    max_len: float = 15.0
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.min_len <= self.max_len:
            raise ValueError(
                f"need 0 < min_len <= max_len, got ({self.min_len}, {self.max_len})"
            )


@dataclass(frozen=True)
class SegmentRecord:
    source_id: str
    t0: float
    t1: float
    short_flag: bool

    def __post_init__(self):
        if not self.t0 < self.t1:
            raise ValueError(f"segment [{self.t0}, {self.t1}) is empty or reversed")

    @property
    def length(self) -> float:
        return self.t1 - self.t0


def segment_stream(
    duration: float, params: SegmentParams, source_id: str = "stream"
) -> list[SegmentRecord]:
    """Cut one stream of ``duration`` seconds into contiguous segments."""
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    rng = np.random.default_rng(params.seed)
    bounds: list[list[float]] = []
    t = 0.0
    while duration - t > params.max_len:
        length = float(rng.uniform(params.min_len, params.max_len))
        bounds.append([t, t + length])
        t += length
    tail = duration - t
    if tail >= params.min_len:
        bounds.append([t, duration])
    elif bounds and (bounds[-1][1] - bounds[-1][0]) + tail <= params.max_len:
        bounds[-1][1] = duration
    else:
        bounds.append([t, duration])
    return [
        SegmentRecord(source_id, t0, t1, (t1 - t0) < params.min_len)
        for t0, t1 in bounds
    ]


def _parse_manifest_entry(item, line_no: int):
    if not isinstance(item, str):
        source_id, duration = item
        return str(source_id), float(duration)
    parts = item.rstrip("\n").split("\t")
    if len(parts) != 2:
        raise FormatError(
            f"expected 'source_id<TAB>duration', got {item.rstrip()!r}", line_no
        )
    source_id, raw = parts
    if not source_id:
        raise FormatError("empty source_id", line_no)
    try:
        duration = float(raw)
    except ValueError as exc:
        raise FormatError(f"bad duration {raw!r}", line_no) from exc
    return source_id, duration


def segment_manifest(manifest, params: SegmentParams) -> list[SegmentRecord]:
    """Segment every (source_id, duration) entry of a manifest.

    ``manifest`` may be an iterable of tab-separated text lines or of
    (source_id, duration) pairs; blank lines are skipped.  Output is
    sorted by source id and is therefore independent of input order.
    """
    entries: list[tuple[str, float]] = []
    seen: set[str] = set()
    for line_no, item in enumerate(manifest, start=1):
        if isinstance(item, str) and not item.strip():
            continue
        source_id, duration = _parse_manifest_entry(item, line_no)
        if duration <= 0:
            raise FormatError(f"non-positive duration {duration} for {source_id!r}", line_no)
        if source_id in seen:
            raise DuplicateRecordError(f"duplicate source {source_id!r}", line_no)
        seen.add(source_id)
        entries.append((source_id, duration))
    records: list[SegmentRecord] = []
    for source_id, duration in sorted(entries):
        per_source = replace(params, seed=derive_seed(params.seed, source_id))
        records.extend(segment_stream(duration, per_source, source_id))
    return records


def serialize_segments(records) -> str:
    """Render segment records as JSON Lines."""
    lines = []
    for record in records:
        lines.append(
            json.dumps(
                {
                    "source": record.source_id,
                    "t0": record.t0,
                    "t1": record.t1,
                    "short": record.short_flag,
                },
                ensure_ascii=False,
            )
        )
    return "".join(line + "\n" for line in lines)
