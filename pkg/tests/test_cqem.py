import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qfill.core import EventDataset
from qfill.cqem import (
    KAPPA_DELIMITER,
    EmptyIndex,
    MatchConfig,
    bin_component,
    build_index,
    compute_kappa,
    match_events,
    resolution,
    theoretical_state_count,
)
from qfill.preprocess import DimensionMismatch
from tests.conftest import make_dataset


def paired(n=12, p=3, q=5, seed=0):
    """A classical sample and an aligned fake transformed sample."""
    rng = np.random.default_rng(seed)
    classical = make_dataset(n=n, p=p, seed=seed)
    transformed = classical.with_features(rng.uniform(-1, 1, (n, q)))
    return classical, transformed


class TestBinning:
    def test_two_bins_split_at_zero(self):
        eps = 1e-9
        assert compute_kappa(np.array([-eps, eps]), 2) == "0|1"

    def test_edges_and_clamping(self):
        assert bin_component(-1.0, 4) == 0
        assert bin_component(1.0, 4) == 3  # top edge folds into last bin
        assert bin_component(-5.0, 4) == 0
        assert bin_component(5.0, 4) == 3
        assert bin_component(-0.5 - 1e-12, 4) == 0
        assert bin_component(-0.5, 4) == 1

    def test_kappa_matches_componentwise(self):
        v = np.array([-1.0, -0.3, 0.0, 0.9])
        want = KAPPA_DELIMITER.join(str(bin_component(x, 10)) for x in v)
        assert compute_kappa(v, 10) == want

    def test_resolution_values(self):
        for n_bins, want in [(4, 0.75), (10, 0.9), (30, 0.9667), (60, 0.9833)]:
            assert abs(resolution(n_bins) - want) < 1e-4

    def test_state_count_is_log10_of_key_space(self):
        assert theoretical_state_count(30, 216) == pytest.approx(216 * np.log10(30))

    def test_n_bins_validated(self):
        with pytest.raises(ValueError):
            MatchConfig(n_bins=1)


class TestIndex:
    def test_member_counts_partition_sample(self):
        classical, transformed = paired(n=40, seed=3)
        idx = build_index(classical, transformed, MatchConfig(n_bins=4))
        assert sum(idx.member_counts.values()) == 40
        assert set(idx.member_counts) == set(idx.unified)
        assert idx.q == transformed.n_features

    def test_unified_mean_of_group(self):
        feats = np.array([[0.1, 0.1], [0.11, 0.12], [0.9, -0.9]])
        tfeats = np.array([[1.0, 0.0, 0.5], [0.0, 1.0, 0.5], [0.2, 0.2, 0.2]])
        ds = EventDataset(np.array([1, 2, 3]), np.arange(3), feats, np.array([0, 1, 0]))
        tds = ds.with_features(tfeats)
        idx = build_index(ds, tds, MatchConfig(n_bins=2))
        key = compute_kappa(feats[0], 2)
        np.testing.assert_allclose(idx.unified[key], [0.5, 0.5, 0.5])
        assert idx.member_counts[key] == 2

    def test_unify_duplicates_is_exact(self):
        # averaging equal vectors must return the vector bit-for-bit, even for
        # values where (a + a + a) / 3 != a in floating point
        row = np.array([0.1, -0.3, 1 / 3, 5e-324])
        feats = np.tile(np.array([0.25, 0.25]), (3, 1))
        ds = EventDataset(np.array([1, 2, 3]), np.arange(3), feats, np.array([1, 0, 1]))
        tds = ds.with_features(np.tile(row, (3, 1)))
        idx = build_index(ds, tds, MatchConfig(n_bins=4))
        (vec,) = idx.unified.values()
        assert vec.tobytes() == row.tobytes()

    def test_label_blind(self):
        classical, transformed = paired(n=25, seed=6)
        flipped = EventDataset(
            classical.timestamps,
            classical.event_ids,
            classical.features,
            (1 - classical.labels).astype(np.int8),
        )
        cfg = MatchConfig(n_bins=10)
        a = build_index(classical, transformed, cfg)
        b = build_index(flipped, transformed, cfg)
        assert sorted(a.unified) == sorted(b.unified)
        for k in a.unified:
            assert a.unified[k].tobytes() == b.unified[k].tobytes()

    def test_empty_sample_rejected(self):
        classical, transformed = paired()
        empty = classical.take(np.array([], dtype=np.int64))
        with pytest.raises(EmptyIndex):
            build_index(empty, empty, MatchConfig())

    def test_misaligned_ids_rejected(self):
        classical, transformed = paired()
        renumbered = EventDataset(
            transformed.timestamps,
            transformed.event_ids + 1,
            transformed.features,
            transformed.labels,
        )
        with pytest.raises(DimensionMismatch):
            build_index(classical, renumbered, MatchConfig())

    def test_unique_kappas_nondecreasing_here(self):
        classical, transformed = paired(n=200, p=4, seed=9)
        counts = []
        for n_bins in (4, 10, 30, 60):
            idx = build_index(classical, transformed, MatchConfig(n_bins=n_bins))
            counts.append(idx.unique_kappas)
        assert counts == sorted(counts)

    def test_refinement_splits_coarse_group(self):
        feats = np.array([[0.05, 0.0], [0.2, 0.0]])  # same quarter, different tenth
        ds = EventDataset(np.array([1, 2]), np.arange(2), feats, np.array([0, 1]))
        tds = ds.with_features(np.eye(2))
        assert build_index(ds, tds, MatchConfig(n_bins=4)).unique_kappas == 1
        assert build_index(ds, tds, MatchConfig(n_bins=10)).unique_kappas == 2


class TestMatching:
    def test_self_match_in_test_mode(self):
        classical, transformed = paired(n=30, seed=1)
        cfg = MatchConfig(n_bins=30, exclude_source_ids=False)
        idx = build_index(classical, transformed, cfg)
        matched, report = match_events(idx, classical, cfg)
        assert report.match_rate == 1.0
        assert report.n_candidates == 30
        assert matched is not None and len(matched) == 30

    def test_source_ids_excluded_by_default(self):
        classical, transformed = paired(n=30, seed=1)
        cfg = MatchConfig(n_bins=30)
        idx = build_index(classical, transformed, cfg)
        matched, report = match_events(idx, classical, cfg)
        assert report.n_candidates == 0
        assert report.n_matched == 0
        assert report.match_rate == 0.0
        assert matched is None

    def test_matched_events_inherit_unified_vectors(self):
        feats = np.array([[0.1, 0.1], [0.9, 0.9]])
        ds = EventDataset(np.array([1, 2]), np.array([10, 11]), feats, np.array([0, 1]))
        tds = ds.with_features(np.array([[0.3, 0.4, 0.5], [-0.1, -0.2, -0.3]]))
        cfg = MatchConfig(n_bins=4)
        idx = build_index(ds, tds, cfg)
        pool = EventDataset(
            np.array([5, 6]),
            np.array([20, 21]),
            np.array([[0.12, 0.14], [-0.9, -0.9]]),  # first shares a key, second not
            np.array([1, -1]),
        )
        matched, report = match_events(idx, pool, cfg)
        assert report.n_candidates == 2
        assert report.n_matched == 1
        assert matched.provenance == "matched"
        assert matched.event_ids.tolist() == [20]
        np.testing.assert_array_equal(matched.features[0], tds.features[0])
        assert matched.labels.tolist() == [1]

    def test_match_rate_nonincreasing_here(self):
        classical, transformed = paired(n=150, p=3, seed=4)
        pool = make_dataset(n=80, p=3, seed=99)
        pool = EventDataset(
            pool.timestamps, pool.event_ids + 10_000, pool.features, pool.labels
        )
        rates = []
        for n_bins in (2, 4, 10, 30):
            cfg = MatchConfig(n_bins=n_bins)
            idx = build_index(classical, transformed, cfg)
            _, report = match_events(idx, pool, cfg)
            rates.append(report.match_rate)
        assert all(a >= b for a, b in zip(rates, rates[1:]))
        assert rates[0] > 0  # coarse bins really do match something

    def test_bin_count_mismatch_rejected(self):
        classical, transformed = paired()
        idx = build_index(classical, transformed, MatchConfig(n_bins=4))
        with pytest.raises(DimensionMismatch):
            match_events(idx, classical, MatchConfig(n_bins=10))

    def test_report_json_fields(self):
        classical, transformed = paired(n=10, seed=2)
        cfg = MatchConfig(n_bins=10, exclude_source_ids=False)
        idx = build_index(classical, transformed, cfg)
        _, report = match_events(idx, classical, cfg)
        import json

        d = json.loads(report.to_json())
        assert d["n_bins"] == 10
        assert d["resolution"] == pytest.approx(0.9)
        assert d["match_rate"] == 1.0
        assert d["unique_kappas"] == idx.unique_kappas


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), n_bins=st.integers(2, 40))
def test_kappa_partition_property(seed, n_bins):
    rng = np.random.default_rng(seed)
    n, p = 25, 3
    feats = rng.uniform(-1, 1, (n, p))
    ds = EventDataset(
        np.arange(1, n + 1, dtype=np.int64),
        np.arange(n, dtype=np.int64),
        feats,
        rng.integers(0, 2, n).astype(np.int8),
    )
    tds = ds.with_features(rng.uniform(-1, 1, (n, 4)))
    idx = build_index(ds, tds, MatchConfig(n_bins=n_bins))
    # groups partition the sample
    assert sum(idx.member_counts.values()) == n
    for i in range(n):
        kappa = compute_kappa(feats[i], n_bins)
        assert kappa in idx.unified
        parts = kappa.split(KAPPA_DELIMITER)
        assert len(parts) == p
        assert all(0 <= int(b) < n_bins for b in parts)
