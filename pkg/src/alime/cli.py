"""Command line entry point: ``alime <command> [options]``.

Commands share one run directory (``--out``). Training commands write model
records there; ``explain`` and ``benchmark`` read them back. Every command
also writes ``<command>.config.json`` holding its fully resolved options, and
``--config FILE`` replays such a file (explicit flags still override).

Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import evaluation, models
from .dataset import REGISTRY, TabularDataset, bundled_path, load_dataset
from .errors import AlimeError, ConfigurationError
from .explain import DEFAULT_ALPHA, explain_alime, explain_lime
from .neural import TrainConfig
from .sampling import attach_embeddings, load_pool, pool_to_dict, sample_pool

log = logging.getLogger("alime")

BLACKBOX_FILE = "blackbox.json"
AUTOENCODER_FILE = "autoencoder.json"
POOL_FILE = "pool.json"


class UsageError(Exception):
    """Bad user input detected after argument parsing (exit code 2)."""


def _n_list(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.replace(";", ",").split(",") if tok.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}")
    return values


def _add_data_args(p):
    p.add_argument("--dataset", choices=sorted(REGISTRY), default="breast_cancer")
    p.add_argument("--data-path", default=None, help="UCI file (default: bundled copy, if any)")
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--test-fraction", type=float, default=0.30)


def _add_train_args(p, epochs: int, lr: float, batch: int):
    p.add_argument("--epochs", type=int, default=epochs)
    p.add_argument("--lr", type=float, default=lr)
    p.add_argument("--batch-size", type=int, default=batch)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="alime", description="LIME / ALIME local explanations for tabular data")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.commands = {}

    def command(name, help):
        p = parser.commands[name] = sub.add_parser(name, help=help)
        p.add_argument("--config", default=None, help="replay a <command>.config.json echo")
        p.add_argument("--out", default="run", help="run directory")
        p.add_argument("--seed", type=int, default=0)
        return p

    p = command("train-blackbox", "train the K-30-2 classifier")
    _add_data_args(p)
    _add_train_args(p, 200, 0.05, 32)

    p = command("train-ae", "train the denoising autoencoder")
    _add_data_args(p)
    _add_train_args(p, 200, 0.05, 32)
    p.add_argument("--latent-dim", type=int, default=None)
    p.add_argument("--noise-sigma", type=float, default=models.DEFAULT_NOISE_SIGMA)

    p = command("pool", "draw (and embed) a Gaussian sample pool")
    p.add_argument("--m", type=int, default=evaluation.DEFAULT_POOL_SIZE)
    p.add_argument("--models", default=None, help="directory with model records (default: --out)")

    p = command("explain", "explain one test instance")
    p.add_argument("--models", default=None, help="directory with model records (default: --out)")
    p.add_argument("--data-path", default=None)
    p.add_argument("--method", choices=("lime", "alime"), default="alime")
    p.add_argument("--instance", type=int, default=0, help="position within the test split")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--m", type=int, default=evaluation.DEFAULT_POOL_SIZE)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--pool", default=None, help="pool file (default: draw one from --m and --seed)")

    p = command("benchmark", "fidelity or stability sweep for both methods")
    p.add_argument("--models", default=None, help="directory with model records (default: --out)")
    p.add_argument("--data-path", default=None)
    p.add_argument("--kind", choices=("fidelity", "stability"), default="fidelity")
    p.add_argument("--n-values", type=_n_list, default=list(evaluation.DEFAULT_N_VALUES))
    p.add_argument("--m", type=int, default=evaluation.DEFAULT_POOL_SIZE)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--iterations", type=int, default=evaluation.DEFAULT_ITERATIONS)
    p.add_argument("--instance", type=int, default=None, help="stability: test position (default: seeded draw)")
    p.add_argument("--max-instances", type=int, default=None, help="fidelity: explain only the first N test rows")
    p.add_argument("--pool", default=None, help="fidelity: pool file for ALIME")
    return parser


# -- helpers ---------------------------------------------------------------


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _existing(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise UsageError(f"{what} not found: {p}")
    return p


def _load_data(args) -> tuple[TabularDataset, str | None]:
    path = args.data_path
    if path is None:
        if bundled_path(args.dataset) is None:
            raise UsageError(f"no bundled copy of {args.dataset!r}; pass --data-path")
    else:
        _existing(path, "data file")
    data = load_dataset(args.dataset, path, args.test_fraction, args.split_seed)
    return data, path


def _split_provenance(args, path) -> dict:
    return {
        "dataset": args.dataset,
        "data_path": path,
        "split_seed": args.split_seed,
        "test_fraction": args.test_fraction,
    }


def _models_dir(args) -> Path:
    return Path(args.models if args.models is not None else args.out)


def _load_blackbox(args):
    record = models.load_record(_existing(_models_dir(args) / BLACKBOX_FILE, "black-box model"))
    return models.blackbox_from_dict(record), record


def _load_autoencoder(args):
    record = models.load_record(_existing(_models_dir(args) / AUTOENCODER_FILE, "autoencoder model"))
    return models.autoencoder_from_dict(record), record


def _data_from_record(args, record) -> TabularDataset:
    path = args.data_path if args.data_path is not None else record.get("data_path")
    if path is not None:
        _existing(path, "data file")
    return load_dataset(record["dataset"], path, record["test_fraction"], record["split_seed"])


def _train_config(args, loss: str) -> TrainConfig:
    return TrainConfig(epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr, seed=args.seed, loss=loss)


# -- commands --------------------------------------------------------------


def cmd_train_blackbox(args, out: Path) -> None:
    data, path = _load_data(args)
    predictor = models.train_blackbox(data, _train_config(args, "bce"))
    provenance = {**_split_provenance(args, path), "seed": args.seed}
    _write_json(out / BLACKBOX_FILE, models.blackbox_to_dict(predictor, **provenance))
    summary = {
        **provenance,
        "n_train": len(data.train_idx),
        "n_test": len(data.test_idx),
        "train_accuracy": models.accuracy(predictor, data.X_train, data.y_train),
        "test_accuracy": models.accuracy(predictor, data.X_test, data.y_test),
        "initial_loss": predictor.model.loss_history[0],
        "final_loss": predictor.model.loss_history[-1],
    }
    _write_json(out / "blackbox_summary.json", summary)
    log.info("test accuracy %.4f", summary["test_accuracy"])


def cmd_train_ae(args, out: Path) -> None:
    data, path = _load_data(args)
    k = data.n_features
    if args.latent_dim is not None and not 1 <= args.latent_dim <= k:
        raise UsageError(f"--latent-dim must lie in [1, {k}] for {args.dataset}, got {args.latent_dim}")
    ae = models.train_autoencoder(data, args.latent_dim, args.noise_sigma, _train_config(args, "mse"))
    provenance = {**_split_provenance(args, path), "seed": args.seed}
    _write_json(out / AUTOENCODER_FILE, models.autoencoder_to_dict(ae, **provenance))
    summary = {
        **provenance,
        "latent_dim": ae.latent_dim,
        "noise_sigma": ae.noise_sigma,
        "reconstruction_mse_test": models.reconstruction_mse(ae, data.X_test),
        "zero_baseline_mse_test": float(np.mean(data.X_test**2)),
        "initial_loss": ae.loss_history[0],
        "final_loss": ae.loss_history[-1],
    }
    _write_json(out / "autoencoder_summary.json", summary)
    log.info("test reconstruction mse %.4f", summary["reconstruction_mse_test"])


def _embedded_pool(args, k: int, ae):
    if getattr(args, "pool", None):
        pool = load_pool(_existing(args.pool, "pool file"))
        if pool.k != k:
            raise UsageError(f"pool has {pool.k} features, model expects {k}")
    else:
        pool = sample_pool(k, args.m, args.seed)
    return attach_embeddings(pool, ae)


def cmd_pool(args, out: Path) -> None:
    mdir = _models_dir(args)
    if (mdir / AUTOENCODER_FILE).exists():
        ae, _ = _load_autoencoder(args)
        pool = attach_embeddings(sample_pool(ae.n_features, args.m, args.seed), ae)
    else:
        predictor, _ = _load_blackbox(args)
        pool = sample_pool(predictor.n_features, args.m, args.seed)
    _write_json(out / POOL_FILE, pool_to_dict(pool))


def cmd_explain(args, out: Path) -> None:
    predictor, record = _load_blackbox(args)
    data = _data_from_record(args, record)
    if not 0 <= args.instance < len(data.test_idx):
        raise UsageError(f"--instance must lie in [0, {len(data.test_idx) - 1}], got {args.instance}")
    x = data.X_test[args.instance]
    if args.method == "lime":
        exp = explain_lime(predictor, x, args.n, args.alpha, args.seed, feature_names=data.feature_names)
    else:
        ae, _ = _load_autoencoder(args)
        pool = _embedded_pool(args, data.n_features, ae)
        if args.n > pool.m:
            raise UsageError(f"--n {args.n} exceeds the pool size {pool.m}")
        exp = explain_alime(predictor, ae, pool, x, args.n, args.alpha, feature_names=data.feature_names)
    stem = f"explanation_{args.method}_{args.instance}"
    doc = {"dataset": data.name, "test_position": args.instance, "row_id": int(data.test_idx[args.instance]), **exp.to_dict()}
    _write_json(out / f"{stem}.json", doc)
    with open(out / f"{stem}.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("feature", "coefficient", "sign"))
        for name, value, sign in exp.bar_rows():
            writer.writerow((name, repr(value), sign))


def cmd_benchmark(args, out: Path) -> None:
    predictor, record = _load_blackbox(args)
    ae, _ = _load_autoencoder(args)
    data = _data_from_record(args, record)
    try:
        evaluation._check_sweep(args.n_values, "alime", args.m)
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None
    if args.kind == "fidelity":
        positions = None
        if args.max_instances is not None:
            positions = range(min(args.max_instances, len(data.test_idx)))
        pool = _embedded_pool(args, data.n_features, ae)
        reports = [
            evaluation.fidelity_sweep(predictor, ae if method == "alime" else None, pool if method == "alime" else None,
                                      data, method, args.n_values, args.alpha, args.seed, positions=positions)
            for method in ("lime", "alime")
        ]
    else:
        if args.instance is not None and not 0 <= args.instance < len(data.test_idx):
            raise UsageError(f"--instance must lie in [0, {len(data.test_idx) - 1}], got {args.instance}")
        if args.iterations < 2:
            raise UsageError("--iterations must be at least 2")
        reports = [
            evaluation.stability_sweep(predictor, ae, data, method, args.n_values, args.iterations, args.alpha,
                                       args.seed, m=args.m, position=args.instance)
            for method in ("lime", "alime")
        ]
    evaluation.write_json(reports, out / f"{args.kind}_report.json", config=_echo(args))
    evaluation.write_csv(reports, out / f"{args.kind}_report.csv")


COMMANDS = {
    "train-blackbox": cmd_train_blackbox,
    "train-ae": cmd_train_ae,
    "pool": cmd_pool,
    "explain": cmd_explain,
    "benchmark": cmd_benchmark,
}


def _echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("config", "verbose")}


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is None:
        return args
    path = Path(args.config)
    if not path.exists():
        parser.error(f"config file not found: {path}")
    saved = json.loads(path.read_text(encoding="utf-8"))
    if saved.get("command") != args.command:
        parser.error(f"{path} echoes command {saved.get('command')!r}, not {args.command!r}")
    # saved values become defaults; flags given explicitly on the command line still win
    parser.commands[args.command].set_defaults(**{k: v for k, v in saved.items() if k != "command"})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        COMMANDS[args.command](args, out)
        _write_json(out / f"{args.command}.config.json", _echo(args))
    except (UsageError, ConfigurationError) as exc:
        print(f"alime {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (AlimeError, OSError) as exc:
        print(f"alime {args.command}: failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
