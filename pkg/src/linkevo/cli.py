"""Command-line entry point: ``linkevo <command> [options]``.

Exit codes: 0 success, 1 runtime failure, 2 configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any

from . import __version__
from .attributes import SchemaValidationError
from .dataset import DatasetError, build_task_dataset, read_dataset, write_dataset
from .evaluation import EvaluationError, ReportStats, emit_report, metrics
from .graphcore import write_snapshots
from .ingest import IngestError
from .models import ALL_KINDS, ModelError
from .pipeline import (ConfigError, FittedPredictor, InputError, PipelineConfig, build_networks, describe_stats,
                       file_digest, load_inputs, run, train_predictor)
from .spectral import write_ranking
from .synth import PRESETS, SynthConfig, SynthConfigError, describe, generate, write_world

log = logging.getLogger("linkevo")

EXIT_OK, EXIT_RUNTIME, EXIT_INPUT = 0, 1, 2
MANIFEST = "manifest.json"
INPUT_ERRORS = (ConfigError, InputError, SynthConfigError, IngestError, SchemaValidationError, DatasetError,
                ModelError, FileNotFoundError, json.JSONDecodeError)


class Manifest:
    """Run record written before any output and marked complete at the end."""

    def __init__(self, out_dir: Path, command: str, config: dict, seed: int, inputs: dict[str, str]):
        self.path = out_dir / MANIFEST
        self.data: dict[str, Any] = {
            "command": command,
            "version": __version__,
            "seed": seed,
            "config": config,
            "inputs": inputs,
            "outputs": [],
            "status": "incomplete",
        }
        out_dir.mkdir(parents=True, exist_ok=True)
        self._write()

    def _write(self) -> None:
        with open(self.path, "w") as f:
            json.dump(self.data, f, indent=2, sort_keys=True)
            f.write("\n")

    def complete(self, outputs) -> None:
        base = self.path.parent
        self.data["outputs"] = sorted(str(Path(p).relative_to(base)) if Path(p).is_relative_to(base) else str(p)
                                      for p in outputs)
        self.data["status"] = "complete"
        self._write()


def _read_json(path: str) -> dict:
    with open(path) as f:
        d = json.load(f)
    if not isinstance(d, dict):
        raise ConfigError("config", f"{path} must hold a JSON object")
    return d


def _config_section(path: str | None, command: str) -> dict:
    """The config object of a file; a manifest contributes its recorded ``config``."""
    if not path:
        return {}
    d = _read_json(path)
    if "command" in d and "config" in d:
        if d["command"] != command:
            raise ConfigError("config", f"manifest was written by {d['command']!r}, not {command!r}")
        return dict(d["config"])
    return d


def _pipeline_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_dict(_config_section(args.config, args.command))
    return cfg.updated(task=getattr(args, "task", None), network=getattr(args, "network", None),
                       max_hops=getattr(args, "max_hops", None), k_values=getattr(args, "k", None),
                       classifiers=getattr(args, "classifiers", None), seed=args.seed,
                       threshold=getattr(args, "threshold", None))


# -- commands -----------------------------------------------------------------

def cmd_synth(args) -> int:
    section = _config_section(args.config, "synth")
    if args.preset is not None:
        section = PRESETS[args.preset] | section
    if args.seed is not None:
        section["seed"] = args.seed
    if args.threshold is not None:
        section["threshold"] = args.threshold
    cfg = SynthConfig.from_dict(section)
    out = Path(args.out)
    digests = {"config": file_digest(args.config)} if args.config else {}
    man = Manifest(out, "synth", cfg.to_dict(), cfg.seed, digests)
    world = generate(cfg)
    paths = write_world(world, out)
    man.complete(paths.values())
    summary = describe(world)
    print(f"wrote {len(paths)} files to {out}: " + ", ".join(f"semester {s['semester']} {s['edges']} edges"
                                                             for s in summary["snapshots"]))
    return EXIT_OK


def cmd_build(args) -> int:
    cfg = _pipeline_config(args)
    inputs = load_inputs(args.data)
    out = Path(args.out)
    man = Manifest(out, "build", cfg.to_dict(), cfg.seed, inputs.digests)
    snaps = build_networks(inputs, cfg)
    written = []
    for name, seq in snaps.items():
        e, n = out / f"{name}_edges.csv", out / f"{name}_nodes.csv"
        write_snapshots(seq, e, n)
        written += [e, n]
        print(f"{name}: " + ", ".join(f"{s.semester.label} {len(s.nodes)} nodes/{len(s.edges)} edges" for s in seq))
    man.complete(written)
    return EXIT_OK


def cmd_dataset(args) -> int:
    cfg = _pipeline_config(args)
    inputs = load_inputs(args.data)
    out = Path(args.out)
    man = Manifest(out.parent, "dataset", cfg.to_dict(), cfg.seed, inputs.digests)
    snaps = build_networks(inputs, cfg)
    ds = build_task_dataset(cfg.task, snaps[cfg.network], inputs.profiles, inputs.schema, cfg.max_hops,
                            cfg.agreement)
    write_dataset(ds, out, {"network": cfg.network})
    man.complete([out, Path(str(out) + ".meta.json")])
    print(f"{cfg.task} dataset: {ds.n_positive} positive, {ds.n_negative} negative -> {out}")
    return EXIT_OK


def _k_arg(text: str | None) -> int | None:
    if text is None or text in ("none", "raw"):
        return None
    return int(text)


def cmd_train(args) -> int:
    cfg = _pipeline_config(args)
    ds = read_dataset(args.dataset)
    k = _k_arg(args.k_single)
    out = Path(args.out)
    man = Manifest(out.parent, "train", cfg.to_dict() | {"classifier": args.classifier, "k": k}, cfg.seed,
                   {"dataset": file_digest(args.dataset)})
    pred = train_predictor(ds, args.classifier, k, cfg.train)
    with open(out, "w") as f:
        json.dump(pred.to_dict(), f)
    man.complete([out])
    print(f"trained {args.classifier} on {len(ds)} examples ({'raw features' if k is None else f'top {k}'}) -> {out}")
    return EXIT_OK


def _load_predictor(path: str) -> FittedPredictor:
    try:
        return FittedPredictor.from_dict(_read_json(path))
    except (KeyError, TypeError) as e:
        raise InputError(f"{path} is not a trained model file ({e})") from None


def cmd_eval(args) -> int:
    pred = _load_predictor(args.model)
    ds = read_dataset(args.dataset)
    acc, rec, c = metrics(pred.predict(ds.X), ds.y)
    result = {"accuracy": acc, "recall": rec, "recall_undefined": c.recall_undefined,
              "tp": c.tp, "fp": c.fp, "tn": c.tn, "fn": c.fn}
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_rank(args) -> int:
    pred = _load_predictor(args.model)
    try:
        ranking = pred.ranking()
    except ValueError as e:
        raise InputError(str(e)) from None
    if args.out:
        write_ranking(ranking, args.out)
    for pos, name in enumerate(ranking.top(args.top), start=1):
        print(f"{pos:2d}. {name} {ranking.scores[ranking.names.index(name)]:.4f}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _pipeline_config(args)
    inputs = load_inputs(args.data)
    out = Path(args.out)
    man = Manifest(out, "pipeline", cfg.to_dict(), cfg.seed, inputs.digests)
    result = run(inputs, cfg)
    written = emit_report(result.stats, result.metric_rows, result.rankings, out, result.labels, plots=args.plots)
    man.complete(written)
    for r in result.metric_rows:
        print(f"{r.classifier:12s} {r.features:8s} accuracy={r.accuracy:.3f} recall={r.recall:.3f}")
    return EXIT_OK


def cmd_stats(args) -> int:
    cfg = _pipeline_config(args)
    inputs = load_inputs(args.data)
    out = Path(args.out)
    man = Manifest(out, "stats", cfg.to_dict(), cfg.seed, inputs.digests)
    stats: ReportStats = describe_stats(build_networks(inputs, cfg), inputs, cfg)
    written = emit_report(stats, [], {}, out, plots=args.plots)
    man.complete(written)
    sys.stdout.write((out / "summary.txt").read_text())
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _add_pipeline_flags(p: argparse.ArgumentParser, training: bool = False) -> None:
    p.add_argument("--task", choices=["formation", "persistence"], help="prediction task (default formation)")
    p.add_argument("--network", choices=["activity", "friendship"], help="network to model (default activity)")
    p.add_argument("--max-hops", dest="max_hops", help="hop radius for formation negatives; 'all' for every pair")
    p.add_argument("--threshold", type=int, help="minimum calls + texts per semester for an activity edge")
    if training:
        p.add_argument("--k", help="comma-separated eigenfeature counts (default 2,15,28)")
        p.add_argument("--classifiers", help=f"comma-separated subset of {','.join(ALL_KINDS)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="linkevo", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file, or a manifest from an earlier run")
    common.add_argument("--seed", type=int, help="random seed (overrides the config file)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic world as input files")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--threshold", type=int, help="activity threshold the contact log is generated for")
    p.add_argument("--preset", choices=sorted(PRESETS),
                   help="start from a named parameter bundle; config file values override it")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("build", parents=[common], help="build activity and friendship snapshots")
    p.add_argument("--data", required=True, help="directory with contacts.csv, profiles.csv, nominations.csv")
    p.add_argument("--out", required=True, help="output directory")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("dataset", parents=[common], help="write a labeled formation or persistence dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output CSV (a .meta.json sidecar is written next to it)")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_dataset)

    p = sub.add_parser("train", parents=[common], help="train one classifier on a dataset file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--classifier", default="logistic", choices=list(ALL_KINDS))
    p.add_argument("--k", dest="k_single", help="eigenfeature count, or 'none' for raw features (default 28)",
                   default="28")
    p.add_argument("--out", required=True, help="model JSON path")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a trained model on a dataset file")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", help="write the metrics JSON here too")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("rank", help="rank original features from a linear eigenfeature model")
    p.add_argument("--model", required=True)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--out", help="write the full ranking CSV here")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("pipeline", parents=[common], help="run everything and write the report tables")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="report directory")
    p.add_argument("--plots", action="store_true", help="also write SVG charts")
    _add_pipeline_flags(p, training=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("stats", parents=[common], help="descriptive statistics only")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--plots", action="store_true")
    _add_pipeline_flags(p)
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except INPUT_ERRORS as e:
        print(f"linkevo {args.command}: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (EvaluationError, OSError) as e:
        print(f"linkevo {args.command}: failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - last-resort guard so the exit code stays meaningful
        log.exception("unexpected failure")
        print(f"linkevo {args.command}: failed: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
