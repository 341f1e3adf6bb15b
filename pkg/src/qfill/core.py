"""Trade-event data model, CSV round-trip, windowing and summary statistics.

Timestamps are integer microseconds since an arbitrary epoch.  A dataset is
kept sorted ascending by (timestamp, event_id); ties in timestamp are legal,
ties in event_id are not.  Labels are binary fills; unlabeled events carry an
empty label cell on disk and -1 internally.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

PROVENANCE_TAGS = ("classical", "pqfm-sim", "pqfm-noisy", "synthetic", "matched")

MICROS_PER_DAY = 24 * 60 * 60 * 1_000_000


class DatasetError(ValueError):
    """Base class for event-data validation failures."""


class MissingColumn(DatasetError):
    pass


class NonMonotonicTime(DatasetError):
    pass


class RaggedRow(DatasetError):
    pass


class NonBinaryLabel(DatasetError):
    pass


class InvertedWindow(DatasetError):
    pass


class EmptyDataset(DatasetError):
    pass


@dataclass(frozen=True)
class TradeEvent:
    """One RFQ-style event: when it happened, who it is, what was observed."""

    timestamp: int
    event_id: int
    features: np.ndarray
    label: int | None = None


class EventDataset:
    """Columnar store of trade events, validated and ordered on construction.

    `labels` uses -1 for unlabeled events.  Arrays are owned by the dataset;
    callers that need to mutate should copy.
    """

    def __init__(
        self,
        timestamps: np.ndarray,
        event_ids: np.ndarray,
        features: np.ndarray,
        labels: np.ndarray,
        provenance: str = "classical",
    ) -> None:
        timestamps = np.asarray(timestamps, dtype=np.int64)
        event_ids = np.asarray(event_ids, dtype=np.int64)
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int8)
        if features.ndim != 2:
            raise RaggedRow("features must be a 2-D array (n_events, p)")
        n = timestamps.shape[0]
        if not (event_ids.shape[0] == features.shape[0] == labels.shape[0] == n):
            raise RaggedRow("column lengths disagree")
        if provenance not in PROVENANCE_TAGS:
            raise DatasetError(f"unknown provenance tag {provenance!r}")
        bad = np.nonzero((labels != 0) & (labels != 1) & (labels != -1))[0]
        if bad.size:
            raise NonBinaryLabel(f"row {bad[0]}: label must be 0, 1 or empty")
        if n:
            dt = np.diff(timestamps)
            bad = np.nonzero(dt < 0)[0]
            if bad.size:
                raise NonMonotonicTime(f"row {bad[0] + 1}: timestamp decreases")
            tie = dt == 0
            bad = np.nonzero(tie & (np.diff(event_ids) <= 0))[0]
            if bad.size:
                raise NonMonotonicTime(
                    f"row {bad[0] + 1}: event_id must increase within a timestamp tie"
                )
            if np.unique(event_ids).size != n:
                dup = _first_duplicate_row(event_ids)
                raise NonMonotonicTime(f"row {dup}: duplicate event_id")
        self.timestamps = timestamps
        self.event_ids = event_ids
        self.features = features
        self.labels = labels
        self.provenance = provenance

    def __len__(self) -> int:
        return self.timestamps.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def labeled_mask(self) -> np.ndarray:
        return self.labels >= 0

    def event(self, i: int) -> TradeEvent:
        lab = int(self.labels[i])
        return TradeEvent(
            timestamp=int(self.timestamps[i]),
            event_id=int(self.event_ids[i]),
            features=self.features[i].copy(),
            label=None if lab < 0 else lab,
        )

    def __iter__(self) -> Iterator[TradeEvent]:
        return (self.event(i) for i in range(len(self)))

    def take(self, idx: np.ndarray, provenance: str | None = None) -> "EventDataset":
        return EventDataset(
            self.timestamps[idx],
            self.event_ids[idx],
            self.features[idx],
            self.labels[idx],
            provenance=provenance or self.provenance,
        )

    def with_features(self, features: np.ndarray, provenance: str | None = None) -> "EventDataset":
        """Same schedule and labels, new feature matrix (used by transforms)."""
        return EventDataset(
            self.timestamps.copy(),
            self.event_ids.copy(),
            features,
            self.labels.copy(),
            provenance=provenance or self.provenance,
        )

    @classmethod
    def from_events(cls, events: list[TradeEvent], provenance: str = "classical") -> "EventDataset":
        if not events:
            raise EmptyDataset("cannot build a dataset from zero events")
        order = sorted(range(len(events)), key=lambda i: (events[i].timestamp, events[i].event_id))
        ts = np.array([events[i].timestamp for i in order], dtype=np.int64)
        ids = np.array([events[i].event_id for i in order], dtype=np.int64)
        feats = np.vstack([np.asarray(events[i].features, dtype=np.float64) for i in order])
        labs = np.array(
            [-1 if events[i].label is None else int(events[i].label) for i in order],
            dtype=np.int8,
        )
        return cls(ts, ids, feats, labs, provenance=provenance)


def _first_duplicate_row(event_ids: np.ndarray) -> int:
    seen: set[int] = set()
    for i, e in enumerate(event_ids.tolist()):
        if e in seen:
            return i
        seen.add(e)
    return -1


def save_dataset(dataset: EventDataset, path: str) -> None:
    """Write `timestamp,event_id,label,f0..f{p-1}` with round-trippable floats.

    Feature cells use repr(), which emits the shortest decimal string that
    parses back to the identical double (17 significant digits at most).
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        p = dataset.n_features
        writer.writerow(["timestamp", "event_id", "label"] + [f"f{i}" for i in range(p)])
        labels = dataset.labels
        for i in range(len(dataset)):
            lab = "" if labels[i] < 0 else str(int(labels[i]))
            row = [str(int(dataset.timestamps[i])), str(int(dataset.event_ids[i])), lab]
            row.extend(repr(float(v)) for v in dataset.features[i])
            writer.writerow(row)


def save_header_only(path: str, p: int) -> None:
    """Header-only CSV used when a pipeline stage produced no events."""
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerow(["timestamp", "event_id", "label"] + [f"f{i}" for i in range(p)])


def load_dataset(path: str, provenance: str = "classical") -> EventDataset:
    """Parse an event CSV, reporting the offending data-row index on failure."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MissingColumn("empty file: no header row") from None
        for col in ("timestamp", "event_id", "label"):
            if col not in header:
                raise MissingColumn(f"header lacks required column {col!r}")
        if header[:3] != ["timestamp", "event_id", "label"]:
            raise MissingColumn("first three columns must be timestamp,event_id,label")
        p = len(header) - 3
        ts: list[int] = []
        ids: list[int] = []
        labs: list[int] = []
        feats: list[np.ndarray] = []
        for i, row in enumerate(reader):
            if len(row) != p + 3:
                raise RaggedRow(f"row {i}: expected {p + 3} cells, got {len(row)}")
            cell = row[2].strip()
            if cell == "":
                lab = -1
            elif cell in ("0", "1"):
                lab = int(cell)
            else:
                raise NonBinaryLabel(f"row {i}: label {cell!r} is not 0, 1 or empty")
            try:
                ts.append(int(row[0]))
                ids.append(int(row[1]))
                feats.append(np.array(row[3:], dtype=np.float64))
            except ValueError as exc:
                raise RaggedRow(f"row {i}: {exc}") from None
            labs.append(lab)
        if not ts:
            raise EmptyDataset(f"{path} holds a header but no events")
        tsa = np.array(ts, dtype=np.int64)
        if np.any(np.diff(tsa) < 0):
            bad = int(np.nonzero(np.diff(tsa) < 0)[0][0]) + 1
            raise NonMonotonicTime(f"row {bad}: timestamp decreases")
        return EventDataset(
            tsa,
            np.array(ids, dtype=np.int64),
            np.vstack(feats),
            np.array(labs, dtype=np.int8),
            provenance=provenance,
        )


def slice_window(dataset: EventDataset, t_start: int, t_end: int) -> EventDataset:
    """All events with t_start <= timestamp <= t_end (both ends inclusive)."""
    if t_start > t_end:
        raise InvertedWindow(f"window [{t_start}, {t_end}] is inverted")
    lo = int(np.searchsorted(dataset.timestamps, t_start, side="left"))
    hi = int(np.searchsorted(dataset.timestamps, t_end, side="right"))
    return dataset.take(np.arange(lo, hi))


@dataclass(frozen=True)
class DatasetStats:
    n_events: int
    label_rate: float | None
    mean_step_change: float
    per_feature: dict[str, list[float]]

    def to_json(self) -> str:
        payload = {
            "n_events": self.n_events,
            "label_rate": self.label_rate,
            "mean_step_change": self.mean_step_change,
            "per_feature": self.per_feature,
        }
        return json.dumps(payload, sort_keys=True)


def summarize(dataset: EventDataset) -> DatasetStats:
    """Descriptive statistics: label rate over labeled events only and the
    mean absolute per-feature change between consecutive events."""
    if len(dataset) == 0:
        raise EmptyDataset("cannot summarize an empty dataset")
    mask = dataset.labeled_mask
    rate = float(dataset.labels[mask].mean()) if mask.any() else None
    if len(dataset) > 1:
        step = float(np.abs(np.diff(dataset.features, axis=0)).mean())
    else:
        step = 0.0
    feats = dataset.features
    per_feature = {
        "min": [float(v) for v in feats.min(axis=0)],
        "max": [float(v) for v in feats.max(axis=0)],
        "mean": [float(v) for v in feats.mean(axis=0)],
        "std": [float(v) for v in feats.std(axis=0)],
    }
    return DatasetStats(
        n_events=len(dataset),
        label_rate=rate,
        mean_step_change=step,
        per_feature=per_feature,
    )


def bucket_of_day(timestamp: int, day_us: int = MICROS_PER_DAY) -> int:
    """Index of the fixed 24h block a timestamp falls into."""
    return int(timestamp // day_us)


def sha256_file(path: str) -> str:
    import hashlib

    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def stats_close(stats: DatasetStats, label_rate: float, rate_tol: float, step: float, step_rel: float) -> bool:
    """Convenience check used by generator calibration tests."""
    if stats.label_rate is None:
        return False
    ok_rate = abs(stats.label_rate - label_rate) <= rate_tol
    ok_step = abs(stats.mean_step_change - step) <= step_rel * step
    return ok_rate and ok_step


def ensure_finite(features: np.ndarray, error: type[Exception], context: str) -> None:
    if not np.isfinite(features).all():
        raise error(f"{context}: non-finite feature values")


def dumps_canonical(obj: object) -> str:
    """JSON with sorted keys and no whitespace drift, for hashing."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def log10_state_count(n_bins: int, p: int) -> float:
    """Decimal digits of the n_bins**p key space (used in match reports)."""
    return p * math.log10(n_bins)
