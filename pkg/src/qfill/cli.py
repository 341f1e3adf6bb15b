"""qfill command line: gen | pqfm | match | backtest | report | repro.

Every run writes a manifest beside its outputs holding the resolved
arguments, the digests of configs and inputs, and the digest of every file
produced.  `qfill repro --manifest m.json` first checks that configs and
inputs still hash the same, then re-runs the recorded subcommand into a
temporary directory and verifies the outputs are byte-identical.

Errors leave a machine-readable JSON object on stderr; argument problems
exit 2, config parsing problems exit 3, everything else 1.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

from . import __version__
from .backtest import BacktestConfig, emit_report, render_table, run_protocol
from .core import (
    dumps_canonical,
    load_dataset,
    save_dataset,
    save_header_only,
    sha256_file,
    summarize,
)
from .cqem import MatchConfig, build_index, match_events
from .pqfm import AnsatzConfig, assign_features, preset_config, transform_batch
from .preprocess import fit_scaler
from .qsim.noise import DriftConfig, NoiseConfig
from .synth import GroundTruth, SynthConfig, generate, plant_report


class ConfigParse(ValueError):
    pass


class UnknownSubcommand(ValueError):
    pass


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """argparse that reports through JSON instead of printing usage."""

    def error(self, message: str) -> None:  # type: ignore[override]
        if "invalid choice" in message and "subcommand" in message:
            raise UnknownSubcommand(message)
        raise _ArgumentError(message)


def _emit_error(kind: str, detail: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "detail": detail}) + "\n")


def _read_json(path: str, what: str) -> dict:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigParse(f"{what} config {path!r}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigParse(f"{what} config {path!r}: expected a JSON object")
    return obj


def _threads(args: argparse.Namespace) -> int:
    if getattr(args, "threads", None):
        return max(1, int(args.threads))
    env = os.environ.get("QFILL_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigParse(f"QFILL_THREADS={env!r} is not an integer") from exc
    return os.cpu_count() or 1


def _synth_config(args: argparse.Namespace) -> SynthConfig:
    raw = _read_json(args.config, "gen") if args.config else {}
    if raw.get("signal_half_life") is None and "signal_half_life" in raw:
        raw["signal_half_life"] = math.inf
    if args.seed is not None:
        raw["base_seed"] = args.seed
    try:
        return SynthConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"gen config: {exc}") from exc


def _ansatz_config(args: argparse.Namespace) -> AnsatzConfig:
    raw = _read_json(args.config, "pqfm") if args.config else {}
    noise_raw = raw.pop("noise", None)
    preset = raw.pop("preset", None) or args.preset
    if args.qubits is not None:
        raw["qubits"] = args.qubits
    if args.seed is not None:
        raw["seed"] = args.seed
    try:
        if noise_raw is not None:
            drift_raw = noise_raw.pop("drift", None)
            drift = DriftConfig(**drift_raw) if drift_raw else DriftConfig()
            raw["noise"] = NoiseConfig(drift=drift, **noise_raw)
        if preset:
            return preset_config(preset, **raw)
        return AnsatzConfig(**raw)
    except (TypeError, ValueError, KeyError) as exc:
        raise ConfigParse(f"pqfm config: {exc}") from exc


def _backtest_config(args: argparse.Namespace) -> BacktestConfig:
    raw = _read_json(args.config, "backtest") if args.config else {}
    if args.seed is not None:
        raw["master_seed"] = args.seed
    try:
        return BacktestConfig.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigParse(f"backtest config: {exc}") from exc


def _parse_sources(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for part in text.split(","):
        if "=" not in part:
            raise ConfigParse(
                f"--sources expects name=path pairs separated by commas, got {part!r}"
            )
        name, path = part.split("=", 1)
        if not name or not path:
            raise ConfigParse(f"--sources entry {part!r} is incomplete")
        out[name] = path
    return out


# Each runner returns (config_paths, input_paths, outputs, master_seed, anchor)
# where outputs maps a stable name to the produced file and anchor decides
# where the manifest lands (file sibling or directory member).


def _run_gen(args: argparse.Namespace):
    config = _synth_config(args)
    dataset, truth = generate(config)
    save_dataset(dataset, args.out)
    outputs = {"out": Path(args.out)}
    if args.truth:
        Path(args.truth).write_text(truth.to_json() + "\n")
        outputs["truth"] = Path(args.truth)
    configs = {"config": Path(args.config)} if args.config else {}
    return configs, {}, outputs, config.base_seed, Path(args.out)


def _run_pqfm(args: argparse.Namespace):
    config = _ansatz_config(args)
    dataset = load_dataset(args.infile)
    scaler = fit_scaler(dataset.features)
    assignment = assign_features(
        dataset.n_features, config.qubits, config.blocks, config.coupling_mode
    )
    out = transform_batch(
        dataset, scaler, assignment, config=config, workers=_threads(args)
    )
    save_dataset(out, args.out)
    configs = {"config": Path(args.config)} if args.config else {}
    return configs, {"in": Path(args.infile)}, {"out": Path(args.out)}, config.seed, Path(args.out)


def _run_match(args: argparse.Namespace):
    sample = load_dataset(args.sample, provenance="pqfm-sim")
    classical_sample = load_dataset(args.classical_sample)
    pool = load_dataset(args.pool)
    config = MatchConfig(n_bins=args.bins, exclude_source_ids=not args.include_source)
    index = build_index(classical_sample, sample, config)
    matched, report = match_events(index, pool, config)
    if matched is None:
        save_header_only(args.out, index.q)
    else:
        save_dataset(matched, args.out)
    report_path = args.report or str(Path(args.out).with_suffix(".report.json"))
    Path(report_path).write_text(report.to_json() + "\n")
    inputs = {
        "sample": Path(args.sample),
        "classical_sample": Path(args.classical_sample),
        "pool": Path(args.pool),
    }
    outputs = {"out": Path(args.out), "report": Path(report_path)}
    return {}, inputs, outputs, None, Path(args.out)


def _run_backtest(args: argparse.Namespace):
    config = _backtest_config(args)
    source_paths = _parse_sources(args.sources)
    datasets = {name: load_dataset(path) for name, path in source_paths.items()}
    result = run_protocol(config, datasets, workers=_threads(args))
    out_dir = Path(args.out)
    paths = emit_report(result, out_dir)
    baseline = args.baseline
    if baseline is None and "classical" in datasets:
        baseline = "classical"
    table_path = out_dir / "table.txt"
    table_path.write_text(render_table(result, baseline))
    paths.append(table_path)
    configs = {"config": Path(args.config)} if args.config else {}
    inputs = {name: Path(path) for name, path in source_paths.items()}
    outputs = {f"out/{p.name}": p for p in paths}
    return configs, inputs, outputs, config.master_seed, out_dir


def _run_report(args: argparse.Namespace):
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs: dict[str, Path] = {}
    inputs: dict[str, Path] = {}
    if args.summary:
        summary = _read_json(args.summary, "report summary")
        table_path = out_dir / "table.txt"
        table_path.write_text(render_table(summary, args.baseline))
        inputs["summary"] = Path(args.summary)
        outputs["out/table.txt"] = table_path
    if args.data:
        dataset = load_dataset(args.data)
        stats_path = out_dir / "dataset_stats.json"
        stats_path.write_text(summarize(dataset).to_json() + "\n")
        inputs["data"] = Path(args.data)
        outputs["out/dataset_stats.json"] = stats_path
        if args.truth:
            truth = GroundTruth.from_json(Path(args.truth).read_text())
            plant_path = out_dir / "plant.json"
            plant_path.write_text(dumps_canonical(plant_report(dataset, truth)) + "\n")
            inputs["truth"] = Path(args.truth)
            outputs["out/plant.json"] = plant_path
    if not outputs:
        raise ConfigParse("report needs --summary and/or --data")
    return {}, inputs, outputs, None, out_dir


_RUNNERS = {
    "gen": _run_gen,
    "pqfm": _run_pqfm,
    "match": _run_match,
    "backtest": _run_backtest,
    "report": _run_report,
}

# Argument names holding output paths, for repro redirection.
_OUTPUT_ARGS = {
    "gen": ("out", "truth"),
    "pqfm": ("out",),
    "match": ("out", "report"),
    "backtest": ("out",),
    "report": ("out",),
}


def _manifest_path(anchor: Path) -> Path:
    if anchor.is_dir():
        return anchor / "manifest.json"
    return anchor.with_name(anchor.name + ".manifest.json")


def _digest_map(paths: dict[str, Path]) -> dict[str, dict[str, str]]:
    return {
        name: {"path": str(p.resolve()), "sha256": sha256_file(str(p))}
        for name, p in sorted(paths.items())
    }


def _execute(subcommand: str, args: argparse.Namespace) -> Path:
    started = time.perf_counter()
    configs, inputs, outputs, master_seed, anchor = _RUNNERS[subcommand](args)
    manifest = {
        "tool_version": __version__,
        "subcommand": subcommand,
        "args": {
            k: v for k, v in vars(args).items() if k != "subcommand" and v is not None
        },
        "master_seed": master_seed,
        "config_digests": _digest_map(configs),
        "input_digests": _digest_map(inputs),
        "outputs": _digest_map(outputs),
        "elapsed_seconds": round(time.perf_counter() - started, 6),
    }
    path = _manifest_path(anchor)
    path.write_text(dumps_canonical(manifest) + "\n")
    return path


def _run_repro(args: argparse.Namespace) -> int:
    try:
        manifest = json.loads(Path(args.manifest).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigParse(f"manifest {args.manifest!r}: {exc}") from exc
    sub = manifest.get("subcommand")
    if sub not in _RUNNERS:
        raise ConfigParse(f"manifest names unknown subcommand {sub!r}")

    stale = []
    for group in ("config_digests", "input_digests"):
        for name, entry in manifest.get(group, {}).items():
            if sha256_file(entry["path"]) != entry["sha256"]:
                stale.append(f"{group[:-8]}:{name}")
    if stale:
        print(json.dumps({"verified": False, "reason": "inputs-changed", "stale": stale}))
        return 1

    stored = dict(manifest["args"])
    with tempfile.TemporaryDirectory(prefix="qfill-repro-") as td:
        tmp = Path(td)
        for key in _OUTPUT_ARGS[sub]:
            if stored.get(key):
                stored[key] = str(tmp / Path(stored[key]).name)
        rerun_args = argparse.Namespace(**{**_DEFAULTS[sub], **stored})
        _, _, outputs, _, _ = _RUNNERS[sub](rerun_args)
        fresh = {name: sha256_file(str(p)) for name, p in outputs.items()}

    recorded = {name: entry["sha256"] for name, entry in manifest["outputs"].items()}
    mismatched = sorted(
        name
        for name in recorded
        if fresh.get(name) != recorded[name]
    )
    missing = sorted(set(recorded) - set(fresh))
    verified = not mismatched and not missing
    print(
        json.dumps(
            {
                "verified": verified,
                "subcommand": sub,
                "checked": len(recorded),
                "mismatched": mismatched,
                "missing": missing,
            },
            sort_keys=True,
        )
    )
    return 0 if verified else 1


# Per-subcommand argparse defaults, reused when repro rebuilds a namespace.
_DEFAULTS: dict[str, dict] = {
    "gen": {"config": None, "out": None, "truth": None, "seed": None},
    "pqfm": {
        "config": None,
        "preset": None,
        "qubits": None,
        "infile": None,
        "out": None,
        "seed": None,
        "threads": None,
    },
    "match": {
        "sample": None,
        "classical_sample": None,
        "pool": None,
        "bins": 30,
        "out": None,
        "report": None,
        "include_source": False,
    },
    "backtest": {
        "config": None,
        "sources": None,
        "out": None,
        "baseline": None,
        "seed": None,
        "threads": None,
    },
    "report": {
        "summary": None,
        "baseline": None,
        "data": None,
        "truth": None,
        "out": None,
    },
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="qfill", description=__doc__, add_help=True)
    parser.add_argument("--version", action="version", version=f"qfill {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")

    gen = sub.add_parser("gen", help="generate a synthetic event dataset")
    gen.add_argument("--config", help="SynthConfig JSON")
    gen.add_argument("--out", required=True, help="dataset CSV to write")
    gen.add_argument("--truth", help="also write the ground-truth JSON here")
    gen.add_argument("--seed", type=int, help="override base_seed")

    pq = sub.add_parser("pqfm", help="transform events through the quantum feature map")
    pq.add_argument("--in", dest="infile", required=True, help="input dataset CSV")
    pq.add_argument("--out", required=True, help="transformed dataset CSV")
    pq.add_argument("--config", help="AnsatzConfig JSON (may name a preset)")
    pq.add_argument("--preset", choices=("shorter", "longer"), help="named circuit preset")
    pq.add_argument("--qubits", type=int, help="override qubit count")
    pq.add_argument("--seed", type=int, help="override fiducial seed")
    pq.add_argument("--threads", type=int, help="worker threads (QFILL_THREADS fallback)")

    ma = sub.add_parser("match", help="classical-quantum event matching")
    ma.add_argument("--sample", required=True, help="transformed sample CSV")
    ma.add_argument("--classical-sample", dest="classical_sample", required=True)
    ma.add_argument("--pool", required=True, help="classical pool CSV to match")
    ma.add_argument("--bins", type=int, default=30)
    ma.add_argument("--out", required=True, help="matched dataset CSV")
    ma.add_argument("--report", help="side report JSON (default: <out>.report.json)")
    ma.add_argument(
        "--include-source",
        dest="include_source",
        action="store_true",
        help="test mode: allow matching the index's own sample events",
    )

    bt = sub.add_parser("backtest", help="walk-forward blinded backtest")
    bt.add_argument("--config", help="BacktestConfig JSON")
    bt.add_argument("--sources", required=True, help="name=path[,name=path...]")
    bt.add_argument("--out", required=True, help="report directory")
    bt.add_argument("--baseline", help="baseline source for the diff table")
    bt.add_argument("--seed", type=int, help="override master_seed")
    bt.add_argument("--threads", type=int, help="worker threads (QFILL_THREADS fallback)")

    rp = sub.add_parser("report", help="render tables and ground-truth reports")
    rp.add_argument("--summary", help="summary.json from a backtest run")
    rp.add_argument("--baseline", help="baseline source for diffs")
    rp.add_argument("--data", help="dataset CSV for stats / plant report")
    rp.add_argument("--truth", help="ground-truth JSON matching --data")
    rp.add_argument("--out", required=True, help="report directory")

    rr = sub.add_parser("repro", help="re-run a manifest and verify output digests")
    rr.add_argument("--manifest", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.subcommand:
            raise UnknownSubcommand("no subcommand given; expected one of "
                                    "gen, pqfm, match, backtest, report, repro")
        if args.subcommand == "repro":
            return _run_repro(args)
        _execute(args.subcommand, args)
        return 0
    except UnknownSubcommand as exc:
        _emit_error("UnknownSubcommand", str(exc))
        return 2
    except _ArgumentError as exc:
        _emit_error("ArgumentError", str(exc))
        return 2
    except ConfigParse as exc:
        _emit_error("ConfigParse", str(exc))
        return 3
    except Exception as exc:  # noqa: BLE001 - boundary: report anything else as JSON
        _emit_error(type(exc).__name__, str(exc))
        return 1


def entrypoint() -> None:
    raise SystemExit(main())
