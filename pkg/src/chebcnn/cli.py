"""Command-line front end.

Subcommands: train, crossval, sweep-depth, sweep-k, verify.  Experiment
options can come from a flat key=value config file (--config), overridden
by command-line flags.  Exit codes: 0 success, 1 runtime/training failure,
2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from . import experiments, plots, verify
from .data import prepare_dataset
from .errors import ChebcnnError, ConfigError, DataFormatError, ParameterError
from .models import ARCHITECTURES, VALID_DEPTHS, ModelSpec, save_checkpoint
from .synthetic import make_synthetic_dataset
from .train import TrainConfig, train_fold

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2

TU_DATASETS = ("MUTAG", "PTC", "NCI109", "ENZYMES", "COLLAB",
               "IMDB-BINARY", "IMDB-MULTI")


def _add_common(p):
    p.add_argument("--config", help="key=value config file; flags override")
    p.add_argument("--dataset", help="TU dataset name, or 'synthetic'")
    p.add_argument("--data-root", default="data", help="directory with TU datasets")
    p.add_argument("--arch", choices=ARCHITECTURES, default="plain")
    p.add_argument("--depth", type=int, help="convolution-layer preset")
    p.add_argument("--k", type=int, default=6, help="receptive field")
    p.add_argument("--epochs", type=int, default=300)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--momentum", type=float, default=0.9)
    p.add_argument("--decay", type=float, default=0.95)
    p.add_argument("--decay-every", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--jobs", type=int, default=0,
                   help="fold parallelism; 0 = min(folds, cores)")
    p.add_argument("--out", default="runs/out", help="output directory")
    p.add_argument("--precision", choices=("f32", "f64"), default="f64")
    p.add_argument("--degree-cap", type=int, default=64)
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--dry-run", action="store_true",
                   help="print the resolved configuration and exit")


def build_parser():
    parser = argparse.ArgumentParser(prog="chebcnn",
                                     description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in [("train", "train a single model on the whole dataset"),
                        ("crossval", "10-fold cross-validation"),
                        ("sweep-depth", "cross-validation over depth presets"),
                        ("sweep-k", "cross-validation over receptive fields 3/6/9")]:
        p = sub.add_parser(name, help=help_)
        _add_common(p)
    pv = sub.add_parser("verify", help="run the self-verification suites")
    pv.add_argument("--seed", type=int, default=0)
    pv.add_argument("--data-root", default="data",
                    help="also check spectra of any TU datasets found here")
    return parser


def _apply_config_file(args, parser):
    if not args.config:
        return
    if not os.path.isfile(args.config):
        parser.error(f"config file not found: {args.config}")
    overridden = {a for a in sys.argv if a.startswith("--")}
    with open(args.config) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                parser.error(f"{args.config}:{lineno}: expected key=value")
            key, value = (s.strip() for s in line.split("=", 1))
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                parser.error(f"{args.config}:{lineno}: unknown key {key!r}")
            if f"--{key}" in overridden:
                continue  # command line wins
            current = getattr(args, attr)
            if isinstance(current, bool):
                value = value.lower() in ("1", "true", "yes")
            elif isinstance(current, int):
                value = int(value)
            elif isinstance(current, float):
                value = float(value)
            setattr(args, attr, value)


def _resolve(args):
    """Fail-fast resolution of dataset, model spec and train config."""
    if not args.dataset:
        raise ConfigError("--dataset is required")
    if args.dataset.lower() == "synthetic":
        dataset = make_synthetic_dataset(seed=args.seed)
    else:
        dataset = prepare_dataset(args.data_root, args.dataset,
                                  degree_cap=args.degree_cap)
    depth = args.depth if args.depth is not None else 6
    spec = ModelSpec(architecture=args.arch, num_classes=dataset.num_classes,
                     feature_dim=dataset.feature_dim, depth=depth,
                     receptive_field=args.k, dropout_rate=args.dropout,
                     seed=args.seed, precision=args.precision)
    config = TrainConfig(epochs=args.epochs, learning_rate=args.lr,
                         momentum=args.momentum, decay_rate=args.decay,
                         decay_every=args.decay_every,
                         batch_size=args.batch_size, seed=args.seed,
                         precision=args.precision)
    jobs = args.jobs if args.jobs > 0 else min(args.folds, os.cpu_count() or 1)
    return dataset, spec, config, jobs


def _print_resolved(dataset, spec, config, jobs, out):
    print(json.dumps({
        "dataset": {"name": dataset.name, "graphs": len(dataset),
                    "classes": dataset.num_classes,
                    "feature_dim": dataset.feature_dim},
        "spec": dataclasses.asdict(spec),
        "train": dataclasses.asdict(config),
        "jobs": jobs,
        "out": out,
    }, indent=2))


def cmd_train(args):
    dataset, spec, config, jobs = _resolve(args)
    if args.dry_run:
        _print_resolved(dataset, spec, config, jobs, args.out)
        return EXIT_OK
    os.makedirs(args.out, exist_ok=True)
    model, history = train_fold(dataset.graphs, spec, config)
    history.write_csv(os.path.join(args.out, "history.csv"))
    save_checkpoint(model, os.path.join(args.out, "checkpoint.npz"))
    plots.save_training_curves(history, os.path.join(args.out, "history.png"),
                               title=f"{dataset.name} / {spec.architecture}")
    print(f"final loss {history.loss[-1]:.4f}, "
          f"train accuracy {history.train_acc[-1]:.4f}")
    return EXIT_OK


def cmd_crossval(args):
    dataset, spec, config, jobs = _resolve(args)
    if args.dry_run:
        _print_resolved(dataset, spec, config, jobs, args.out)
        return EXIT_OK
    report = experiments.run_crossval(dataset, spec, config, folds=args.folds,
                                      jobs=jobs, outdir=args.out)
    if report.failed_folds:
        for f in report.failed_folds:
            print(f"fold {f['fold']} FAILED: {f['error']}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"{dataset.name} / {spec.architecture}: {report.summary()}")
    return EXIT_OK


def cmd_sweep_depth(args):
    dataset, spec, config, jobs = _resolve(args)
    depths = VALID_DEPTHS[spec.architecture]
    if args.dry_run:
        _print_resolved(dataset, spec, config, jobs, args.out)
        print(f"depth presets: {list(depths)}")
        return EXIT_OK
    rows = experiments.run_depth_sweep(dataset, spec, config, depths,
                                       folds=args.folds, jobs=jobs,
                                       outdir=args.out)
    for r in rows:
        print(f"depth {r['depth']:3d}: {100 * r['mean']:.2f} ± {100 * r['std']:.2f} "
              f"({r['seconds']:.1f}s)")
    for line in experiments.monotonicity_report(rows, "depth"):
        print(line)
    return EXIT_OK


def cmd_sweep_k(args):
    if args.arch not in ("resnet", "densenet"):
        raise ConfigError(
            "the receptive-field sweep covers resnet and densenet only; the "
            "inception architecture already mixes fields 3/6/9 internally")
    dataset, spec, config, jobs = _resolve(args)
    if args.dry_run:
        _print_resolved(dataset, spec, config, jobs, args.out)
        print("receptive fields: [3, 6, 9]")
        return EXIT_OK
    rows = experiments.run_k_sweep(dataset, spec, config, ks=(3, 6, 9),
                                   folds=args.folds, jobs=jobs, outdir=args.out)
    for r in rows:
        print(f"K {r['k']}: {100 * r['mean']:.2f} ± {100 * r['std']:.2f} "
              f"({r['seconds']:.1f}s)")
    return EXIT_OK


def cmd_verify(args):
    results = verify.run_all(seed=args.seed)
    if os.path.isdir(args.data_root):
        for name in TU_DATASETS:
            try:
                ds = prepare_dataset(args.data_root, name)
            except (IOError, DataFormatError):
                continue
            res = verify.suite_laplacian_spectrum(list(ds.graphs), samples=100)
            res.name = f"laplacian_spectrum[{name}]"
            results.append(res)
    failed = 0
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"[{status}] {r.name}: {r.detail}")
        failed += not r.passed
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


COMMANDS = {
    "train": cmd_train,
    "crossval": cmd_crossval,
    "sweep-depth": cmd_sweep_depth,
    "sweep-k": cmd_sweep_k,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if hasattr(args, "config"):
        _apply_config_file(args, parser)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParameterError, DataFormatError, IOError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChebcnnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
