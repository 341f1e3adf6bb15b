"""Classical-quantum event matching.

Classical feature vectors in [-1, 1]^p are quantised per component into
n_bins equal-width bins; the joined bin string is the matching key kappa.
Unseen events that land on a key seen in the indexed sample inherit the
unified (componentwise mean) transformed vector stored under that key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .core import EventDataset, log10_state_count
from .preprocess import DimensionMismatch

KAPPA_DELIMITER = "|"


class EmptyIndex(ValueError):
    pass


@dataclass(frozen=True)
class MatchConfig:
    n_bins: int = 30
    exclude_source_ids: bool = True

    def __post_init__(self) -> None:
        if self.n_bins < 2:
            raise ValueError("n_bins must be >= 2")


def bin_component(v: float, n_bins: int) -> int:
    """floor((v + 1) * n_bins / 2) with +1 mapped to the top bin and values
    outside [-1, 1] clamped to the edge bins."""
    b = int(np.floor((v + 1.0) * n_bins / 2.0))
    return min(max(b, 0), n_bins - 1)


def compute_kappa(features: np.ndarray, n_bins: int) -> str:
    features = np.asarray(features, dtype=np.float64).reshape(-1)
    bins = np.floor((features + 1.0) * n_bins / 2.0).astype(np.int64)
    np.clip(bins, 0, n_bins - 1, out=bins)
    return KAPPA_DELIMITER.join(str(int(b)) for b in bins)


def resolution(n_bins: int) -> float:
    """Fraction of per-component value range resolved away: 1 - 1/n_bins."""
    return 1.0 - 1.0 / n_bins


def theoretical_state_count(n_bins: int, p: int) -> float:
    """log10 of the kappa key space n_bins**p."""
    return log10_state_count(n_bins, p)


@dataclass(frozen=True)
class MatchIndex:
    """kappa -> unified transformed vector, with member counts and the source
    event ids used to build it (excluded from matching by default)."""

    n_bins: int
    unified: dict[str, np.ndarray]
    member_counts: dict[str, int]
    source_event_ids: frozenset[int]
    q: int

    @property
    def unique_kappas(self) -> int:
        return len(self.unified)


def _unify(vectors: np.ndarray) -> np.ndarray:
    """Componentwise mean with a fixed reduction order.  Identical members
    short-circuit so unification is exactly idempotent."""
    if vectors.shape[0] == 1 or (vectors == vectors[0]).all():
        return vectors[0].copy()
    return vectors.mean(axis=0)


def build_index(
    classical: EventDataset, transformed: EventDataset, config: MatchConfig
) -> MatchIndex:
    """Group the classical sample by kappa and store the mean transformed
    vector per group.  Alignment is by position after asserting event ids
    agree; labels are never consulted."""
    if len(classical) == 0:
        raise EmptyIndex("cannot index an empty sample")
    if len(classical) != len(transformed) or (
        classical.event_ids != transformed.event_ids
    ).any():
        raise DimensionMismatch("classical and transformed samples must align by event_id")
    groups: dict[str, list[int]] = {}
    for i in range(len(classical)):
        groups.setdefault(compute_kappa(classical.features[i], config.n_bins), []).append(i)
    unified = {
        k: _unify(transformed.features[np.array(idx)]) for k, idx in groups.items()
    }
    counts = {k: len(idx) for k, idx in groups.items()}
    return MatchIndex(
        n_bins=config.n_bins,
        unified=unified,
        member_counts=counts,
        source_event_ids=frozenset(int(e) for e in classical.event_ids),
        q=transformed.n_features,
    )


@dataclass(frozen=True)
class MatchReport:
    n_bins: int
    resolution: float
    unique_kappas: int
    n_candidates: int
    n_matched: int

    @property
    def match_rate(self) -> float:
        return self.n_matched / self.n_candidates if self.n_candidates else 0.0

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_bins": self.n_bins,
                "resolution": self.resolution,
                "unique_kappas": self.unique_kappas,
                "n_candidates": self.n_candidates,
                "n_matched": self.n_matched,
                "match_rate": self.match_rate,
            },
            sort_keys=True,
        )


def match_events(
    index: MatchIndex, pool: EventDataset, config: MatchConfig
) -> tuple[EventDataset | None, MatchReport]:
    """Attach unified vectors to pool events whose kappa was indexed.

    Events whose id belongs to the index's source sample are excluded unless
    the config disables exclusion (test mode).  Returns the matched dataset
    (None when nothing matched) and a report with the match rate."""
    if config.n_bins != index.n_bins:
        raise DimensionMismatch(
            f"index built at n_bins={index.n_bins}, match requested {config.n_bins}"
        )
    keep: list[int] = []
    rows: list[np.ndarray] = []
    n_candidates = 0
    for i in range(len(pool)):
        if config.exclude_source_ids and int(pool.event_ids[i]) in index.source_event_ids:
            continue
        n_candidates += 1
        kappa = compute_kappa(pool.features[i], config.n_bins)
        hit = index.unified.get(kappa)
        if hit is not None:
            keep.append(i)
            rows.append(hit)
    report = MatchReport(
        n_bins=config.n_bins,
        resolution=resolution(config.n_bins),
        unique_kappas=index.unique_kappas,
        n_candidates=n_candidates,
        n_matched=len(keep),
    )
    if not keep:
        return None, report
    matched = pool.take(np.array(keep))
    matched = matched.with_features(np.vstack(rows), provenance="matched")
    return matched, report
