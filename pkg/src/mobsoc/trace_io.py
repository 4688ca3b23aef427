"""Session trace parsing, normalization, windowing and sampling.

A session file holds one association interval per line::

    node_id <sep> location_id <sep> start_time <sep> end_time

where ``<sep>`` is a tab or a comma (detected from the first data line) and
times are seconds since the epoch.  Lines starting with ``#`` are comments.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from itertools import groupby
from operator import attrgetter
from typing import Iterable, Iterator, Sequence, TextIO

import numpy as np

DAY = 86400


class EmptyTraceError(ValueError):
    """Raised when a trace source yields no valid session."""


@dataclass(frozen=True)
class SessionRecord:
    node_id: str
    location_id: str
    start_time: int
    end_time: int

    def __post_init__(self):
        if self.end_time <= self.start_time:
            raise ValueError(
                f"session must end after it starts: {self.start_time} >= {self.end_time}"
            )

    @property
    def duration(self) -> int:
        return self.end_time - self.start_time


@dataclass(frozen=True)
class TimeWindow:
    start: int
    duration: int
    slot_length: int = DAY

    def __post_init__(self):
        if self.slot_length <= 0:
            raise ValueError("slot_length must be positive")
        if self.duration <= 0 or self.duration % self.slot_length:
            raise ValueError(
                f"duration {self.duration} is not a positive multiple of slot_length {self.slot_length}"
            )

    @property
    def end(self) -> int:
        return self.start + self.duration

    @property
    def n_slots(self) -> int:
        return self.duration // self.slot_length

    def prefix(self, n_slots: int) -> "TimeWindow":
        """The window covering the first ``n_slots`` slots of this one."""
        return TimeWindow(self.start, n_slots * self.slot_length, self.slot_length)


@dataclass(frozen=True)
class Trace:
    sessions: tuple[SessionRecord, ...]
    window: TimeWindow
    rejected_lines: int = 0

    def __len__(self) -> int:
        return len(self.sessions)

    @property
    def node_ids(self) -> list[str]:
        """Distinct node ids in sorted order."""
        return sorted({s.node_id for s in self.sessions})

    def by_node(self) -> dict[str, tuple[SessionRecord, ...]]:
        return {
            node: tuple(group)
            for node, group in groupby(self.sessions, key=attrgetter("node_id"))
        }

    def select_nodes(self, nodes: Iterable[str]) -> "Trace":
        keep = set(nodes)
        return Trace(
            tuple(s for s in self.sessions if s.node_id in keep),
            self.window,
            self.rejected_lines,
        )


@dataclass(frozen=True)
class LocationUniverse:
    ids: tuple[str, ...]
    index: dict[str, int] = field(compare=False, repr=False)

    @classmethod
    def from_ids(cls, ids: Iterable[str]) -> "LocationUniverse":
        ids = tuple(ids)
        index = {loc: i for i, loc in enumerate(ids)}
        if len(index) != len(ids):
            raise ValueError("duplicate location ids in universe")
        return cls(ids, index)

    def __len__(self) -> int:
        return len(self.ids)


def normalize_node_sessions(sessions: Iterable[SessionRecord]) -> list[SessionRecord]:
    """Resolve overlaps in one node's sessions.

    Overlapping or touching sessions at the same location are unioned.  When
    sessions at different locations overlap, the earlier one is cut at the
    later one's start.
    """
    out: list[list] = []  # [location, start, end]
    node = None
    for s in sorted(sessions, key=lambda s: (s.start_time, s.end_time, s.location_id)):
        node = s.node_id
        if out:
            last = out[-1]
            if last[0] == s.location_id and s.start_time <= last[2]:
                last[2] = max(last[2], s.end_time)
                continue
            if s.start_time < last[2]:
                last[2] = s.start_time
                if last[2] <= last[1]:
                    out.pop()
                    if out and out[-1][0] == s.location_id and s.start_time <= out[-1][2]:
                        out[-1][2] = max(out[-1][2], s.end_time)
                        continue
        out.append([s.location_id, s.start_time, s.end_time])
    return [SessionRecord(node, loc, a, b) for loc, a, b in out]


def normalize_sessions(sessions: Iterable[SessionRecord]) -> tuple[SessionRecord, ...]:
    """Normalize every node and sort by (node_id, start_time)."""
    per_node: dict[str, list[SessionRecord]] = {}
    for s in sessions:
        per_node.setdefault(s.node_id, []).append(s)
    out: list[SessionRecord] = []
    for node in sorted(per_node):
        out.extend(normalize_node_sessions(per_node[node]))
    return tuple(out)


def _detect_separator(line: str) -> str:
    return "\t" if "\t" in line else ","


def _iter_data_lines(stream: TextIO) -> Iterator[str]:
    for raw in stream:
        line = raw.strip()
        if line and not line.startswith("#"):
            yield line


def _parse_time(text: str) -> int:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError(f"non-finite time {text!r}")
    return math.floor(value)


def parse_sessions(
    stream: TextIO | str,
    slot_length: int = DAY,
    window: TimeWindow | None = None,
) -> Trace:
    """Read a session file into a normalized :class:`Trace`.

    ``stream`` may be an open text stream or a path.  Malformed lines are
    skipped and tallied in ``Trace.rejected_lines``.  When ``window`` is not
    given, it starts at the earliest session and spans whole slots up to the
    latest session end.
    """
    if isinstance(stream, (str, bytes)) or hasattr(stream, "__fspath__"):
        with open(stream, encoding="utf-8") as fh:
            return parse_sessions(fh, slot_length, window)

    records: list[SessionRecord] = []
    rejected = 0
    sep = None
    for line in _iter_data_lines(stream):
        if sep is None:
            sep = _detect_separator(line)
        parts = [p.strip() for p in line.split(sep)]
        if len(parts) != 4 or not parts[0] or not parts[1]:
            rejected += 1
            continue
        try:
            start, end = _parse_time(parts[2]), _parse_time(parts[3])
        except ValueError:
            rejected += 1
            continue
        if end <= start:
            rejected += 1
            continue
        records.append(SessionRecord(parts[0], parts[1], start, end))

    if not records:
        raise EmptyTraceError(f"no valid session records ({rejected} rejected lines)")

    sessions = normalize_sessions(records)
    if window is None:
        t0 = min(s.start_time for s in sessions)
        t1 = max(s.end_time for s in sessions)
        n_slots = max(1, -(-(t1 - t0) // slot_length))
        window = TimeWindow(t0, n_slots * slot_length, slot_length)
        return Trace(sessions, window, rejected)
    clipped = clip_to_window(Trace(sessions, window), window)
    return Trace(clipped.sessions, window, rejected)


def format_sessions(trace: Trace | Sequence[SessionRecord], sep: str = "\t") -> str:
    sessions = trace.sessions if isinstance(trace, Trace) else trace
    buf = io.StringIO()
    write_sessions(sessions, buf, sep)
    return buf.getvalue()


def write_sessions(sessions: Iterable[SessionRecord], stream: TextIO, sep: str = "\t") -> None:
    for s in sessions:
        stream.write(f"{s.node_id}{sep}{s.location_id}{sep}{s.start_time}{sep}{s.end_time}\n")


def clip_to_window(trace: Trace, window: TimeWindow) -> Trace:
    """Intersect every session with ``[window.start, window.end)``."""
    out = []
    for s in trace.sessions:
        a = max(s.start_time, window.start)
        b = min(s.end_time, window.end)
        if b > a:
            out.append(s if (a, b) == (s.start_time, s.end_time) else SessionRecord(s.node_id, s.location_id, a, b))
    return Trace(tuple(out), window, trace.rejected_lines)


def systematic_sample(
    node_ids: Sequence[str],
    sample_size: int,
    rng_seed: int,
    offset: int | None = None,
) -> list[str]:
    """Every k-th node from a random start, k = len(node_ids) // sample_size.

    The start offset is drawn uniformly from ``[0, k)`` with a seeded
    generator unless given explicitly.
    """
    population = len(node_ids)
    if sample_size <= 0 or sample_size > population:
        raise ValueError(f"sample_size must be in [1, {population}], got {sample_size}")
    k = population // sample_size
    if offset is None:
        offset = int(np.random.default_rng(rng_seed).integers(0, k))
    elif not 0 <= offset < k:
        raise ValueError(f"offset must be in [0, {k}), got {offset}")
    return [node_ids[offset + i * k] for i in range(sample_size)]


def build_location_universe(trace: Trace | Iterable[SessionRecord]) -> LocationUniverse:
    """Distinct location ids in first-appearance order."""
    sessions = trace.sessions if isinstance(trace, Trace) else trace
    return LocationUniverse.from_ids(dict.fromkeys(s.location_id for s in sessions))
