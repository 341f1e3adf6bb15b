import numpy as np
import pytest

from qfill.core import EventDataset


def make_dataset(
    n: int = 20,
    p: int = 4,
    seed: int = 0,
    labeled: bool = True,
    spread_us: int = 10**9,
) -> EventDataset:
    rng = np.random.default_rng(seed)
    ts = np.sort(rng.integers(0, spread_us, n)).astype(np.int64)
    ids = np.arange(n, dtype=np.int64)
    feats = rng.uniform(-1.0, 1.0, (n, p))
    if labeled:
        labels = rng.integers(0, 2, n).astype(np.int8)
        # guard against degenerate single-class draws
        if n >= 2 and (labels == labels[0]).all():
            labels[0] = 1 - labels[0]
    else:
        labels = np.full(n, -1, dtype=np.int8)
    return EventDataset(ts, ids, feats, labels)


@pytest.fixture
def tiny_dataset() -> EventDataset:
    return make_dataset(n=12, p=3, seed=1)
