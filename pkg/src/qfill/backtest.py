"""Walk-forward blinded backtesting over named feature sources.

For every evaluation instance (one per trading day by default), each model
family is tuned by cross-validated grid search on the most recent
training-window events that end strictly before the instance, then scores
every labeled event inside the bucket horizon.  Records are bucketed by how
many whole days the event sits past the training cutoff, so bucket b measures
performance on data blinded by b extra days.  The schedule, seeds, and fold
shuffles depend only on timestamps, labels, and the master seed, never on the
feature source: swapping sources changes records only through feature values.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._svg import histogram_chart, line_chart
from .core import MICROS_PER_DAY, EventDataset, bucket_of_day, dumps_canonical
from .learners import (
    DISPLAY_NAMES,
    FAMILIES,
    CVConfig,
    derive_seed,
    grid_from_table,
    grid_search_cv,
)
from .learners.metrics import SingleClassEval, auc


class InsufficientHistory(RuntimeError):
    pass


class SingleClassWindow(RuntimeError):
    pass


class MissingBaseline(KeyError):
    pass


class NonPositiveDelta(ValueError):
    pass


def bucketize(delta_microseconds: int, day_us: int = MICROS_PER_DAY) -> int:
    """Blinding bucket: 0 covers [1 us, 24 h), then one bucket per 24 h."""
    if delta_microseconds < 1:
        raise NonPositiveDelta(f"blinding delta must be >= 1 microsecond, got {delta_microseconds}")
    return int(delta_microseconds // day_us)


@dataclass(frozen=True)
class BacktestConfig:
    training_sizes: tuple[int, ...] = (500, 1000, 1500, 2000)
    buckets: tuple[int, ...] = (0, 1, 2, 3, 4)
    families: tuple[str, ...] = tuple(FAMILIES)
    stride: str = "per_day"  # per_day | every_event | every_n
    stride_n: int = 1
    day_us: int = MICROS_PER_DAY
    master_seed: int = 0
    eval_start_day: int | None = None  # explicit day range; None = auto-select
    eval_end_day: int | None = None
    param_grids: dict | None = None  # family -> grid table; None = defaults
    cv_folds: int = 4

    def __post_init__(self) -> None:
        if not self.training_sizes or any(t < 2 for t in self.training_sizes):
            raise ValueError("every training size must be >= 2")
        if not self.buckets or any(b < 0 for b in self.buckets):
            raise ValueError("buckets must be non-empty day offsets >= 0")
        if self.stride not in ("per_day", "every_event", "every_n"):
            raise ValueError(f"unknown stride {self.stride!r}")
        if self.stride == "every_n" and self.stride_n < 1:
            raise ValueError("stride_n must be >= 1")
        for fam in self.families:
            if fam not in FAMILIES:
                raise ValueError(f"unknown model family {fam!r}")

    @property
    def horizon_days(self) -> int:
        return max(self.buckets) + 1

    @classmethod
    def from_dict(cls, d: dict) -> "BacktestConfig":
        kw = dict(d)
        for key in ("training_sizes", "buckets", "families"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)


@dataclass(frozen=True)
class BacktestRecord:
    source: str
    family: str
    training_size: int
    instance: int  # day number (per_day) or event row (event strides)
    event_id: int
    timestamp: int
    train_start: int
    train_end: int
    delta_us: int
    bucket: int
    grid_winner: str
    predicted_prob: float
    label: int
    model_checksum: str


@dataclass(frozen=True)
class GroupScore:
    source: str
    family: str
    training_size: int
    instance: int
    bucket: int
    auc: float
    n_events: int


@dataclass
class BacktestResult:
    records: list[BacktestRecord] = field(default_factory=list)
    group_scores: list[GroupScore] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)
    sources: tuple[str, ...] = ()
    families: tuple[str, ...] = ()
    buckets: tuple[int, ...] = ()
    feature_hist: dict[str, list[int]] = field(default_factory=dict)
    hist_edges: list[float] = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)

    def summary(self) -> dict:
        stats: dict[str, dict[str, dict[str, dict]]] = {}
        pool: dict[tuple[str, str, int], list[float]] = {}
        for g in self.group_scores:
            pool.setdefault((g.source, g.family, g.bucket), []).append(g.auc)
        for (src, fam, bucket), vals in sorted(pool.items()):
            arr = np.asarray(vals)
            cell = {
                "mean": float(arr.mean()),
                "median": float(np.median(arr)),
                "std": float(arr.std()),
                "n_groups": int(arr.size),
            }
            stats.setdefault(src, {}).setdefault(fam, {})[str(bucket)] = cell
        return {
            "sources": stats,
            "n_records": len(self.records),
            "skipped": self.skipped,
            "feature_hist": {"edges": self.hist_edges, "counts": self.feature_hist},
            "config": self.config_echo,
        }

    def bucket_means(self, source: str, family: str) -> dict[int, float]:
        pool: dict[int, list[float]] = {}
        for g in self.group_scores:
            if g.source == source and g.family == family:
                pool.setdefault(g.bucket, []).append(g.auc)
        return {b: float(np.mean(v)) for b, v in sorted(pool.items())}


def decay_slope(result: BacktestResult, source: str, family: str) -> float:
    """Least-squares slope of mean AUC against bucket index (AUC per day)."""
    means = result.bucket_means(source, family)
    if len(means) < 2:
        raise ValueError("need at least two populated buckets to fit a slope")
    xs = np.array(sorted(means), dtype=np.float64)
    ys = np.array([means[int(b)] for b in xs])
    return float(np.polyfit(xs, ys, 1)[0])


def _check_alignment(datasets: dict[str, EventDataset]) -> None:
    names = sorted(datasets)
    base = datasets[names[0]]
    for name in names[1:]:
        ds = datasets[name]
        if not (
            np.array_equal(ds.timestamps, base.timestamps)
            and np.array_equal(ds.event_ids, base.event_ids)
            and np.array_equal(ds.labels, base.labels)
        ):
            raise ValueError(
                f"source {name!r} is not time-aligned with {names[0]!r}; "
                "run all sources through the same event pipeline"
            )


def _instance_times(config: BacktestConfig, base: EventDataset) -> list[tuple[int, int]]:
    """(instance id, t0) pairs; t0 is the first microsecond of the instance."""
    ts = base.timestamps
    labeled = np.flatnonzero(base.labels >= 0)
    if config.stride == "per_day":
        first = bucket_of_day(int(ts[0]), config.day_us)
        last = bucket_of_day(int(ts[-1]), config.day_us)
        start = config.eval_start_day if config.eval_start_day is not None else first + 1
        end = config.eval_end_day if config.eval_end_day is not None else last
        explicit = config.eval_start_day is not None or config.eval_end_day is not None
        out = []
        need = max(config.training_sizes)
        horizon_us = config.horizon_days * config.day_us
        for day in range(start, end + 1):
            t0 = day * config.day_us
            n_hist = int(np.searchsorted(ts[labeled], t0, side="left"))
            has_future = np.searchsorted(ts, t0) < np.searchsorted(ts, t0 + horizon_us)
            if n_hist < need:
                if explicit:
                    raise InsufficientHistory(
                        f"day {day}: {n_hist} labeled events precede it, need {need}"
                    )
                continue
            if has_future:
                out.append((day, t0))
        return out
    step = 1 if config.stride == "every_event" else config.stride_n
    out = []
    need = max(config.training_sizes)
    for pos in range(0, labeled.size, step):
        row = int(labeled[pos])
        t0 = int(ts[row])
        n_hist = int(np.searchsorted(ts[labeled], t0, side="left"))
        if n_hist >= need:
            out.append((row, t0))
    return out


def _feature_histograms(datasets: dict[str, EventDataset]) -> tuple[dict[str, list[int]], list[float]]:
    edges = np.linspace(-1.0, 1.0, 25)
    counts = {}
    for name in sorted(datasets):
        hist, _ = np.histogram(datasets[name].features, bins=edges)
        counts[name] = [int(c) for c in hist]
    return counts, [float(e) for e in edges]


def run_protocol(
    config: BacktestConfig, datasets: dict[str, EventDataset], workers: int = 1
) -> BacktestResult:
    if not datasets:
        raise ValueError("no dataset sources given")
    _check_alignment(datasets)
    names = tuple(sorted(datasets))
    base = datasets[names[0]]
    ts = base.timestamps
    labels = base.labels
    labeled_rows = np.flatnonzero(labels >= 0)
    instances = _instance_times(config, base)
    horizon_us = config.horizon_days * config.day_us

    result = BacktestResult(
        sources=names,
        families=tuple(config.families),
        buckets=tuple(config.buckets),
        config_echo={
            "training_sizes": list(config.training_sizes),
            "buckets": list(config.buckets),
            "families": list(config.families),
            "stride": config.stride,
            "master_seed": config.master_seed,
            "day_us": config.day_us,
        },
    )
    result.feature_hist, result.hist_edges = _feature_histograms(datasets)

    grids = {}
    p = base.features.shape[1]
    for fam in config.families:
        if config.param_grids and fam in config.param_grids:
            grids[fam] = config.param_grids[fam]
        else:
            grids[fam] = grid_from_table(fam, p=p)
    cv = CVConfig(folds=config.cv_folds, shuffle_seed=config.master_seed)

    def run_instance(job: tuple[int, int, int, int]) -> tuple[list[BacktestRecord], list[dict]]:
        size_idx, size, instance, t0 = job
        records: list[BacktestRecord] = []
        skipped: list[dict] = []
        train_end = t0 - 1
        n_hist = int(np.searchsorted(ts[labeled_rows], t0, side="left"))
        train_rows = labeled_rows[n_hist - size : n_hist]
        y_train = labels[train_rows].astype(np.float64)
        if np.unique(y_train).size < 2:
            skipped.append(
                {
                    "instance": instance,
                    "training_size": size,
                    "reason": "SingleClassWindow",
                }
            )
            return records, skipped
        lo = int(np.searchsorted(ts, t0, side="left"))
        hi = int(np.searchsorted(ts, t0 + horizon_us, side="left"))
        eval_rows = np.array(
            [r for r in range(lo, hi) if labels[r] >= 0], dtype=np.int64
        )
        if eval_rows.size == 0:
            return records, skipped
        deltas = ts[eval_rows] - train_end
        buckets = deltas // config.day_us
        keep = np.isin(buckets, np.asarray(config.buckets))
        eval_rows, deltas, buckets = eval_rows[keep], deltas[keep], buckets[keep]
        t_start = int(ts[train_rows[0]])
        for fam_idx, fam in enumerate(config.families):
            seed = derive_seed(config.master_seed, size_idx, instance, fam_idx)
            for src in names:
                ds = datasets[src]
                model = grid_search_cv(
                    fam, grids[fam], ds.features[train_rows], y_train, cv=cv, master_seed=seed
                )
                winner = json.dumps(model.spec.params, sort_keys=True)
                # One digest per fitted model; serializing forests per record
                # dominated the whole protocol before this was hoisted.
                csum = model.checksum()
                probs = model.predict_proba(ds.features[eval_rows])
                for i, row in enumerate(eval_rows):
                    records.append(
                        BacktestRecord(
                            source=src,
                            family=fam,
                            training_size=size,
                            instance=instance,
                            event_id=int(ds.event_ids[row]),
                            timestamp=int(ts[row]),
                            train_start=t_start,
                            train_end=train_end,
                            delta_us=int(deltas[i]),
                            bucket=int(buckets[i]),
                            grid_winner=winner,
                            predicted_prob=float(probs[i]),
                            label=int(labels[row]),
                            model_checksum=csum,
                        )
                    )
        return records, skipped

    jobs = [
        (size_idx, size, instance, t0)
        for size_idx, size in enumerate(config.training_sizes)
        for instance, t0 in instances
    ]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(run_instance, jobs))
    else:
        outputs = [run_instance(job) for job in jobs]
    for records, skipped in outputs:
        result.records.extend(records)
        result.skipped.extend(skipped)

    result.group_scores = _score_groups(result.records)
    return result


def _score_groups(records: list[BacktestRecord]) -> list[GroupScore]:
    pool: dict[tuple, tuple[list[float], list[int]]] = {}
    for r in records:
        key = (r.source, r.family, r.training_size, r.instance, r.bucket)
        probs, labs = pool.setdefault(key, ([], []))
        probs.append(r.predicted_prob)
        labs.append(r.label)
    out = []
    for key, (probs, labs) in sorted(pool.items()):
        try:
            score = auc(np.asarray(probs), np.asarray(labs))
        except SingleClassEval:
            continue
        out.append(GroupScore(*key, auc=score, n_events=len(labs)))
    return out


def _summary_view(obj: "BacktestResult | dict") -> tuple[dict, list[str]]:
    """Accept a result or its saved summary dict; give (sources map, families)."""
    full = obj.summary() if isinstance(obj, BacktestResult) else obj
    fams = full.get("config", {}).get("families")
    if not fams:
        fams = sorted({f for cells in full["sources"].values() for f in cells})
    return full["sources"], list(fams)


def compare_sources(result: "BacktestResult | dict", baseline_source: str) -> dict:
    """Median-AUC differences to the baseline, in signed integer percent points."""
    summary, _ = _summary_view(result)
    if baseline_source not in summary:
        raise MissingBaseline(baseline_source)
    base = summary[baseline_source]
    out: dict[str, dict[str, dict[str, int]]] = {}
    for src, fams in summary.items():
        out[src] = {}
        for fam, cells in fams.items():
            out[src][fam] = {}
            for bucket, cell in cells.items():
                ref = base.get(fam, {}).get(bucket)
                if ref is None:
                    continue
                diff = (cell["median"] - ref["median"]) * 100.0
                out[src][fam][bucket] = int(round(diff))
    return out


def _signed(v: int) -> str:
    if v == 0:
        return "±0"
    return f"+{v}" if v > 0 else str(v)


def render_table(result: "BacktestResult | dict", baseline_source: str | None = None) -> str:
    """Median test AUC per source/model/bucket, with optional diff column."""
    summary, families = _summary_view(result)
    diffs = compare_sources(result, baseline_source) if baseline_source else None
    buckets = sorted(
        {int(b) for cells in summary.values() for fam in cells.values() for b in fam}
    )
    lines = []
    header = ["model"] + [f"{b}d" for b in buckets]
    if diffs:
        header.append(f"Diff. to {baseline_source}")
    for src in sorted(summary):
        lines.append(f"source: {src}")
        lines.append("  " + " | ".join(f"{h:>14}" for h in header))
        for fam in families:
            cells = summary[src].get(fam, {})
            row = [DISPLAY_NAMES.get(fam, fam)]
            for b in buckets:
                cell = cells.get(str(b))
                row.append("-" if cell is None else f"{cell['median']:.2f} ± {cell['std']:.2f}")
            if diffs:
                ds = [diffs[src].get(fam, {}).get(str(b)) for b in buckets]
                row.append(" / ".join("-" if d is None else _signed(d) for d in ds))
            lines.append("  " + " | ".join(f"{c:>14}" for c in row))
        lines.append("")
    return "\n".join(lines)


_CSV_COLUMNS = [
    "source",
    "family",
    "training_size",
    "instance",
    "event_id",
    "timestamp",
    "train_start",
    "train_end",
    "delta_us",
    "bucket",
    "grid_winner",
    "predicted_prob",
    "label",
    "model_checksum",
]


def records_csv_bytes(result: BacktestResult) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_CSV_COLUMNS)
    for r in result.records:
        writer.writerow(
            [
                r.source,
                r.family,
                r.training_size,
                r.instance,
                r.event_id,
                r.timestamp,
                r.train_start,
                r.train_end,
                r.delta_us,
                r.bucket,
                r.grid_winner,
                repr(r.predicted_prob),
                r.label,
                r.model_checksum,
            ]
        )
    return buf.getvalue().encode()


def emit_report(result: BacktestResult, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    records_path = out / "records.csv"
    records_path.write_bytes(records_csv_bytes(result))
    paths.append(records_path)

    summary_path = out / "summary.json"
    summary_path.write_text(dumps_canonical(result.summary()) + "\n")
    paths.append(summary_path)

    series: dict[str, list[tuple[float, float]]] = {}
    bands: dict[str, list[tuple[float, float, float]]] = {}
    summary = result.summary()["sources"]
    for src in sorted(summary):
        for fam in result.families:
            cells = summary[src].get(fam)
            if not cells:
                continue
            name = f"{src}/{DISPLAY_NAMES.get(fam, fam)}"
            pts = []
            band = []
            for bucket in sorted(cells, key=int):
                cell = cells[bucket]
                x = float(bucket)
                pts.append((x, cell["mean"]))
                band.append((x, cell["mean"] - cell["std"], cell["mean"] + cell["std"]))
            series[name] = pts
            bands[name] = band
    decay_path = out / "decay.svg"
    decay_path.write_text(
        line_chart(
            series,
            title="Test AUC by blinding bucket (band: ±1 std across evaluation groups)",
            x_label="blinding bucket (days)",
            y_label="AUC",
            bands=bands,
        )
    )
    paths.append(decay_path)

    hist_path = out / "feature_hist.svg"
    hist_path.write_text(
        histogram_chart(
            result.feature_hist,
            result.hist_edges,
            title="Feature value distribution by source",
            x_label="feature value",
        )
    )
    paths.append(hist_path)
    return paths
