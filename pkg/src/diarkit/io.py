"""File formats: RTTM, UEM, embedding/region CSV, and PGM heatmaps.

Parsers are strict: malformed input raises ParseError carrying the
offending line number rather than being silently coerced.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .aggregation import SpeechRegion, WindowEmbedding
from .core import Annotation, InvalidInputError, ParseError, Segment, TimeInterval

RTTM_FIELDS = 10


def _parse_float(token: str, what: str, line: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise ParseError(f"bad {what}: {token!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what}: {token!r}", line)
    return value


def parse_rttm(text: str) -> list[Annotation]:
    """Parse SPEAKER lines into one Annotation per file id.

    Non-SPEAKER lines are ignored. Channels are merged: the channel field
    is parsed but does not split recordings.
    """
    segments: dict[str, list[Segment]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        fields = raw.split()
        if not fields or fields[0] != "SPEAKER":
            continue
        if len(fields) != RTTM_FIELDS:
            raise ParseError(
                f"expected {RTTM_FIELDS} fields in a SPEAKER line, got {len(fields)}",
                lineno,
            )
        file_id, name = fields[1], fields[7]
        tbeg = _parse_float(fields[3], "start time", lineno)
        tdur = _parse_float(fields[4], "duration", lineno)
        if tdur <= 0:
            raise ParseError(f"duration must be positive, got {tdur}", lineno)
        if not name:
            raise ParseError("empty speaker name", lineno)
        try:
            interval = TimeInterval(tbeg, tbeg + tdur)
        except InvalidInputError as exc:
            raise ParseError(str(exc), lineno) from None
        segments.setdefault(file_id, []).append(Segment(interval, name))
    return [Annotation.create(file_id, segs) for file_id, segs in segments.items()]


def write_rttm(annotation: Annotation) -> str:
    """Serialize an annotation as SPEAKER lines, times with 6 decimal places."""
    lines = []
    for seg in annotation:
        iv = seg.interval
        lines.append(
            f"SPEAKER {annotation.recording_id} 1 {iv.start:.6f} {iv.duration:.6f} "
            f"<NA> <NA> {seg.speaker} <NA> <NA>"
        )
    return "".join(line + "\n" for line in lines)


def parse_uem(text: str) -> dict[str, list[TimeInterval]]:
    """Parse 'file channel start end' lines; overlapping spans are merged."""
    raw: dict[str, list[tuple[float, float]]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        fields = line.split()
        if not fields or fields[0].startswith(";;"):
            continue
        if len(fields) != 4:
            raise ParseError(f"expected 4 fields, got {len(fields)}", lineno)
        start = _parse_float(fields[2], "start time", lineno)
        end = _parse_float(fields[3], "end time", lineno)
        if start >= end:
            raise ParseError(f"start {start} must precede end {end}", lineno)
        raw.setdefault(fields[0], []).append((start, end))
    out: dict[str, list[TimeInterval]] = {}
    for file_id, spans in raw.items():
        spans.sort()
        merged = [spans[0]]
        for s, e in spans[1:]:
            if s <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], e))
            else:
                merged.append((s, e))
        out[file_id] = [TimeInterval(s, e) for s, e in merged]
    return out


def _format_float(x: float) -> str:
    # repr gives the shortest string that parses back to the same float
    return repr(float(x))


def write_embeddings_csv(windows: Sequence[WindowEmbedding]) -> str:
    """Header 'start,end,v0,...,v{D-1}' plus one row per window."""
    if not windows:
        raise InvalidInputError("no windows to write")
    dim = windows[0].embedding.size
    header = "start,end," + ",".join(f"v{i}" for i in range(dim))
    lines = [header]
    for w in windows:
        values = ",".join(_format_float(v) for v in w.embedding)
        lines.append(f"{_format_float(w.interval.start)},{_format_float(w.interval.end)},{values}")
    return "".join(line + "\n" for line in lines)


def read_embeddings_csv(text: str) -> list[WindowEmbedding]:
    """Inverse of write_embeddings_csv; dimension comes from the header."""
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise ParseError("missing header", 1)
    header = lines[0].split(",")
    if len(header) < 3 or header[0] != "start" or header[1] != "end":
        raise ParseError("header must be start,end,v0,...", 1)
    dim = len(header) - 2
    for i, name in enumerate(header[2:]):
        if name != f"v{i}":
            raise ParseError(f"expected column v{i}, got {name!r}", 1)
    windows: list[WindowEmbedding] = []
    prev_start = -math.inf
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != dim + 2:
            raise ParseError(f"expected {dim + 2} cells, got {len(cells)}", lineno)
        start = _parse_float(cells[0], "start", lineno)
        end = _parse_float(cells[1], "end", lineno)
        vector = np.array([_parse_float(c, "component", lineno) for c in cells[2:]])
        if start < prev_start:
            raise ParseError("rows must be sorted by start time", lineno)
        prev_start = start
        try:
            windows.append(WindowEmbedding(TimeInterval(start, end), vector))
        except InvalidInputError as exc:
            raise ParseError(str(exc), lineno) from None
    if not windows:
        raise ParseError("no data rows", len(lines))
    return windows


def write_regions_csv(regions: Sequence[SpeechRegion]) -> str:
    """Header 'start,end' plus one row per speech region."""
    lines = ["start,end"]
    for region in regions:
        iv = region.interval
        lines.append(f"{_format_float(iv.start)},{_format_float(iv.end)}")
    return "".join(line + "\n" for line in lines)


def read_regions_csv(text: str) -> list[SpeechRegion]:
    """Inverse of write_regions_csv; regions must be sorted and disjoint."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != "start,end":
        raise ParseError("header must be start,end", 1)
    regions: list[SpeechRegion] = []
    prev_end = -math.inf
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        cells = line.split(",")
        if len(cells) != 2:
            raise ParseError(f"expected 2 cells, got {len(cells)}", lineno)
        start = _parse_float(cells[0], "start", lineno)
        end = _parse_float(cells[1], "end", lineno)
        if start < prev_end:
            raise ParseError("regions must be sorted and non-overlapping", lineno)
        try:
            regions.append(SpeechRegion(TimeInterval(start, end)))
        except InvalidInputError as exc:
            raise ParseError(str(exc), lineno) from None
        prev_end = end
    return regions


def pgm_bytes(matrix) -> bytes:
    """Binary PGM (P5) of a matrix: affine map [min, max] -> [0, 255].

    A constant matrix maps to a uniform 128.
    """
    m = np.asarray(matrix, dtype=np.float64)
    if m.ndim != 2 or m.size == 0:
        raise InvalidInputError(f"expected a non-empty 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidInputError("matrix contains non-finite entries")
    lo, hi = float(m.min()), float(m.max())
    if hi > lo:
        pixels = np.rint((m - lo) / (hi - lo) * 255.0)
    else:
        pixels = np.full(m.shape, 128.0)
    body = np.clip(pixels, 0, 255).astype(np.uint8).tobytes()
    header = f"P5\n{m.shape[1]} {m.shape[0]}\n255\n".encode("ascii")
    return header + body


def write_pgm_heatmap(matrix, path) -> None:
    Path(path).write_bytes(pgm_bytes(matrix))
