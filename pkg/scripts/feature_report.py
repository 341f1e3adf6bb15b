"""Compare transformed-feature distributions across circuit presets.

Transforms one synthetic event set under both presets, optionally with equal
per-gate depolarizing noise averaged over a few trajectories, then writes an
overlay histogram and a JSON stats table (per-feature IQR and |median|).

    python3 scripts/feature_report.py --out results/features --p2 0.1
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from qfill._svg import histogram_chart
from qfill.pqfm import NoiseConfig, assign_features, noisy_variant, preset_config, transform_batch
from qfill.preprocess import fit_scaler
from qfill.synth import SynthConfig, generate


def parse_args(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", required=True, help="output directory")
    ap.add_argument("--events", type=int, default=500)
    ap.add_argument("--p", type=int, default=12)
    ap.add_argument("--qubits", type=int, default=16)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--p2", type=float, default=0.0, help="per-gate depolarizing rate")
    ap.add_argument("--trajectories", type=int, default=2,
                    help="noise trajectories averaged per event (with --p2 > 0)")
    return ap.parse_args(argv)


def preset_features(ds, scaler, name: str, args) -> np.ndarray:
    base = preset_config(name, qubits=args.qubits)
    asg = assign_features(args.p, args.qubits, base.blocks)
    if args.p2 <= 0:
        return transform_batch(ds, scaler, asg, config=base).features
    acc = np.zeros((len(ds), 3 * args.qubits))
    for s in range(args.trajectories):
        cfg = noisy_variant(base, NoiseConfig(p2=args.p2, noise_seed=1000 + s))
        acc += transform_batch(ds, scaler, asg, config=cfg).features
    return acc / args.trajectories


def main(argv=None) -> int:
    args = parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ds, _ = generate(
        SynthConfig(
            n_events=args.events,
            p=args.p,
            events_per_day=100,
            signal_feature_count=min(4, args.p),
            signal_strength=6.0,
            label_rate_target=0.4,
            mean_step_change_target=0.05,
            base_seed=args.seed,
        )
    )
    scaler = fit_scaler(ds.features)

    edges = list(np.linspace(-1.0, 1.0, 25))
    counts: dict[str, list[int]] = {}
    stats: dict[str, dict[str, float]] = {}
    for name in ("shorter", "longer"):
        feats = preset_features(ds, scaler, name, args)
        hist, _ = np.histogram(feats, bins=edges)
        counts[name] = [int(c) for c in hist]
        iqr = np.percentile(feats, 75, axis=0) - np.percentile(feats, 25, axis=0)
        med = np.abs(np.median(feats, axis=0))
        stats[name] = {
            "mean_iqr": float(iqr.mean()),
            "mean_abs_median": float(med.mean()),
        }
        print(
            f"{name:8s} mean IQR {stats[name]['mean_iqr']:.4f}  "
            f"mean |median| {stats[name]['mean_abs_median']:.4f}"
        )

    (out / "feature_stats.json").write_text(json.dumps(stats, indent=2, sort_keys=True))
    (out / "feature_hist.svg").write_text(
        histogram_chart(
            counts,
            edges,
            title=f"Transformed feature distributions (p2={args.p2})",
            x_label="feature value",
        )
    )
    print(f"artifacts in {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
