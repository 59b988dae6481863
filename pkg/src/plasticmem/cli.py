"""Command-line entry point.

Subcommands: train, eval, sweep, gradcheck, export, bench, gen-data.
Runs are driven by a flat JSON config file; ``--set key=value`` flags
override config keys.  Every run writes its fully resolved config into
the output directory, and is reproducible from that artifact alone.

Exit codes: 0 success, 1 internal failure, 2 user/config error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import analysis, data as data_mod, kernels, training
from .errors import DataLoadError, InvalidArgumentError, PlasticmemError
from .gradcheck import standard_check
from .model import Classifier, ModelConfig

OUT_DIR_ENV = "PLASTICMEM_OUT"

MODEL_KEYS = (
    "input_dim", "embed_dim", "memory_len", "eta", "alpha_init",
    "num_classes", "memory_kind", "trace_lifetime", "memory_init", "seed",
)
TRAIN_KEYS = (
    "epochs", "learning_rate", "beta1", "beta2", "adam_eps",
    "batch_size", "val_fraction", "shuffle",
)
DATA_KEYS = (
    "data_kind", "manifest_path", "synth_records", "synth_steps",
    "synth_channels", "synth_anomaly", "synth_noise_sd", "synth_windows",
    "synth_seed",
)
RUN_KEYS = MODEL_KEYS + TRAIN_KEYS + DATA_KEYS + ("out_dir",)

DEFAULTS = {
    "input_dim": 1,
    "embed_dim": 16,
    "memory_len": 8,
    "eta": 0.5,
    "alpha_init": 0.01,
    "num_classes": 2,
    "memory_kind": "plastic",
    "trace_lifetime": "per_sequence",
    "memory_init": "uniform",
    "seed": 0,
    "epochs": 50,
    "learning_rate": 1e-3,
    "beta1": 0.9,
    "beta2": 0.999,
    "adam_eps": 1e-8,
    "batch_size": 1,
    "val_fraction": 0.2,
    "shuffle": True,
    "data_kind": "synthetic",
    "manifest_path": None,
    "synth_records": 100,
    "synth_steps": 100,
    "synth_channels": 1,
    "synth_anomaly": "long_range",
    "synth_noise_sd": 0.2,
    "synth_windows": 1,
    "synth_seed": 0,
    "out_dir": "runs/default",
}


def load_run_config(path: str | None, overrides: list[str]) -> dict:
    config = dict(DEFAULTS)
    if path is not None:
        if not Path(path).exists():
            raise InvalidArgumentError(f"config file not found: {path}")
        try:
            with open(path) as fh:
                user = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"malformed config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise InvalidArgumentError(f"config {path} must be a JSON object")
        for key, value in user.items():
            if key not in RUN_KEYS:
                raise InvalidArgumentError(f"unknown config key {key!r}")
            config[key] = value
    for item in overrides:
        if "=" not in item:
            raise InvalidArgumentError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        if key not in RUN_KEYS:
            raise InvalidArgumentError(f"unknown config key {key!r}")
        default = DEFAULTS[key]
        if isinstance(default, bool):
            config[key] = raw.lower() in ("1", "true", "yes")
        elif isinstance(default, int):
            config[key] = int(raw)
        elif isinstance(default, float):
            config[key] = float(raw)
        else:
            config[key] = raw
    env_out = os.environ.get(OUT_DIR_ENV)
    if env_out:
        config["out_dir"] = env_out
    return config


def model_config_from(config: dict) -> ModelConfig:
    cfg = ModelConfig(**{k: config[k] for k in MODEL_KEYS})
    cfg.validate()
    return cfg


def train_config_from(config: dict) -> training.TrainConfig:
    cfg = training.TrainConfig(
        epochs=int(config["epochs"]),
        learning_rate=float(config["learning_rate"]),
        beta1=float(config["beta1"]),
        beta2=float(config["beta2"]),
        adam_eps=float(config["adam_eps"]),
        batch_size=int(config["batch_size"]),
        val_fraction=float(config["val_fraction"]),
        seed=int(config["seed"]),
        shuffle=bool(config["shuffle"]),
    )
    cfg.validate()
    return cfg


def dataset_from(config: dict) -> list[data_mod.LabeledSequence]:
    if config["data_kind"] == "synthetic":
        synth = data_mod.SynthConfig(
            n_records=int(config["synth_records"]),
            steps=int(config["synth_steps"]),
            channels=int(config["synth_channels"]),
            anomaly_kind=config["synth_anomaly"],
            noise_sd=float(config["synth_noise_sd"]),
            windows_per_record=int(config["synth_windows"]),
            seed=int(config["synth_seed"]),
        )
        dataset = data_mod.synth_generate(synth)
    elif config["data_kind"] == "manifest":
        if not config["manifest_path"]:
            raise InvalidArgumentError("manifest_path is required for data_kind=manifest")
        dataset = data_mod.load_csv(config["manifest_path"])
    else:
        raise InvalidArgumentError(
            f"unknown data_kind {config['data_kind']!r} (synthetic|manifest)"
        )
    dim = dataset[0].steps.shape[1] if dataset else 0
    if dataset and dim != int(config["input_dim"]):
        raise InvalidArgumentError(
            f"data dimension {dim} does not match input_dim {config['input_dim']}"
        )
    return dataset


def _write_resolved(config: dict, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config.resolved.json", "w") as fh:
        json.dump(config, fh, indent=1, sort_keys=True)


def cmd_train(args) -> int:
    config = load_run_config(args.config, args.set or [])
    out_dir = Path(config["out_dir"])
    dataset = dataset_from(config)
    model = Classifier(model_config_from(config))
    train_cfg = train_config_from(config)
    _write_resolved(config, out_dir)
    result = training.train(model, dataset, train_cfg, diagnostic_dir=out_dir)
    training.write_metrics_csv(out_dir / "metrics.csv", result.history, train_cfg)
    model.save(out_dir / "checkpoint.json")
    print(f"trained {config['epochs']} epochs; best epoch {result.best_epoch} "
          f"val_acc={result.best_val_acc:.4f}")
    print(f"artifacts in {out_dir}")
    return 0


def cmd_eval(args) -> int:
    model = Classifier.load(args.checkpoint)
    dataset = data_mod.load_csv(args.data)
    if dataset and dataset[0].steps.shape[1] != model.config.input_dim:
        raise InvalidArgumentError(
            f"dimension mismatch: expected {model.config.input_dim}, "
            f"found {dataset[0].steps.shape[1]}"
        )
    result = training.evaluate(model, dataset, vote=args.vote)
    if args.save_checkpoint:
        model.save(args.save_checkpoint)
    json.dump(
        {
            "accuracy": result.accuracy,
            "n": result.n,
            "confusion": result.confusion.tolist(),
            "per_class_counts": result.per_class_counts.tolist(),
        },
        sys.stdout,
        indent=1,
        sort_keys=True,
    )
    print()
    return 0


def cmd_sweep(args) -> int:
    config = load_run_config(args.config, args.set or [])
    out_dir = Path(config["out_dir"])
    dataset = dataset_from(config)
    values = [float(v) for v in args.values.split(",")]
    grid = {args.param: values}
    rows = training.hyper_sweep(
        grid, dataset, model_config_from(config), train_config_from(config)
    )
    _write_resolved(config, out_dir)
    training.write_sweep_csv(out_dir / "sweep.csv", rows)
    for row in rows:
        print(f"{row.param_name}={row.param_value:g} val_acc={row.val_acc:.4f}")
    return 0


def cmd_gradcheck(args) -> int:
    report = standard_check(seed=args.seed, h=args.h, tol=args.tol)
    print(report.summary())
    return 0 if report.passed else 1


def cmd_export(args) -> int:
    model = Classifier.load(args.checkpoint)
    which = args.which.split(",")
    paths = analysis.snapshot_matrices(model, which, args.out, args.tag)
    for path in paths:
        print(path)
    return 0


def cmd_bench(args) -> int:
    rows = analysis.bench_runtime(
        memory_kind=args.kind,
        l_values=[int(v) for v in args.l_values.split(",")],
        k_values=[int(v) for v in args.k_values.split(",")],
        k_fixed=args.k_fixed,
        l_fixed=args.l_fixed,
        n_predictions=args.n,
        steps=args.steps,
    )
    analysis.write_bench_csv(args.out, rows)
    for row in rows:
        print(f"l={row.l} k={row.k} seconds={row.wall_seconds:.4f}")
    print(f"kernel backend: {kernels.backend_name()}")
    return 0


def cmd_gen_data(args) -> int:
    synth = data_mod.SynthConfig(
        n_records=args.records,
        steps=args.steps,
        channels=args.channels,
        anomaly_kind=args.anomaly,
        noise_sd=args.noise_sd,
        windows_per_record=args.windows,
        seed=args.seed,
    )
    dataset = data_mod.synth_generate(synth)
    manifest = data_mod.save_csv(dataset, args.out)
    print(manifest)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plasticmem",
        description="Plastic neural memory networks for sequence anomaly classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a model from a config file")
    p.add_argument("-c", "--config", help="JSON run config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on a manifest dataset")
    p.add_argument("checkpoint")
    p.add_argument("data", help="JSON manifest path")
    p.add_argument("--vote", action="store_true", help="majority-vote per record")
    p.add_argument("--save-checkpoint", help="save post-evaluation state here")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="one-at-a-time hyperparameter sweep")
    p.add_argument("-c", "--config", help="JSON run config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--param", required=True, choices=sorted(training.SWEEP_PARAMS))
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gradcheck", help="finite-difference gradient check")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("export", help="snapshot model matrices to JSON")
    p.add_argument("checkpoint")
    p.add_argument("--which", required=True,
                   help=f"comma-separated from: {','.join(analysis.SNAPSHOT_NAMES)}")
    p.add_argument("--tag", required=True, help="snapshot tag, e.g. after-train")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("bench", help="runtime scaling benchmark")
    p.add_argument("--kind", choices=("plastic", "baseline"), default="plastic")
    p.add_argument("--l-values", default="10,20,40")
    p.add_argument("--k-values", default="40,80,160")
    p.add_argument("--k-fixed", type=int, default=3)
    p.add_argument("--l-fixed", type=int, default=20)
    p.add_argument("-n", type=int, default=1000)
    p.add_argument("--steps", type=int, default=20)
    p.add_argument("--out", default="bench.csv")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("gen-data", help="write a synthetic dataset as CSV + manifest")
    p.add_argument("--out", required=True)
    p.add_argument("--records", type=int, default=100)
    p.add_argument("--steps", type=int, default=100)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--anomaly", choices=data_mod.ANOMALY_KINDS, default="long_range")
    p.add_argument("--noise-sd", type=float, default=0.2)
    p.add_argument("--windows", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_data)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidArgumentError, DataLoadError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except PlasticmemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
