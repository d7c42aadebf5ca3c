"""Command-line entry point: ``seto {augment,train,eval,sweep}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical error.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import logging
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields
from pathlib import Path

from .augment import PAD, build_training_pair
from .config import RunConfig, coerce, format_value, load_config
from .data import leave_one_out_split, read_tsv
from .errors import InvalidParam, NumericalError, SetoError
from .evaluation import evaluate
from .model import DecayModel, load_checkpoint, save_checkpoint
from .rng import AUGMENT, INSPECT, RngStream
from .train import train

log = logging.getLogger("seto")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

SWEEP_COLUMNS = ["op", "alpha", "scope", "rho", "apply_to", "constrained", "seed",
                 "recall@10", "ndcg@10", "epochs", "seconds", "status"]

_HELP = {
    "input": "tab-separated interaction log: user, item, timestamp",
    "header": "skip one header line in the input",
    "out": "output directory",
    "seed": "global random seed",
    "op": "augmentation operator: none, swap or removal",
    "alpha": "geometric decay of the swap offset distribution",
    "scope": "swap reach as a fraction of subsequence length",
    "rho": "removal budget as a fraction of subsequence length",
    "apply_to": "augment the input, the target or both subsequences",
    "constrained": "false selects the unconstrained Random(S)/Random(R) variants",
    "max_len": "model sequence length L",
    "batch_size": "pairs per SGD step",
    "lr": "SGD learning rate",
    "dim": "embedding dimension",
    "l2": "L2 penalty on scored embeddings and biases",
    "max_epochs": "upper bound on training epochs",
    "eval_every": "epochs between validation evaluations",
    "patience_evals": "non-improving evaluations tolerated before stopping",
    "candidates": "ranking candidates: sampled (100 negatives) or full catalog",
    "ks": "comma-separated cutoffs K for Recall@K / NDCG@K",
    "split": "held-out split to evaluate: valid or test",
}

_COMMAND_KEYS = {
    "augment": ["input", "header", "op", "alpha", "scope", "rho", "apply_to", "constrained",
                "max_len"],
    "train": list(_HELP),
    "eval": ["input", "header", "candidates", "ks", "split", "max_len"],
    "sweep": list(_HELP),
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_run_flags(parser: argparse.ArgumentParser, keys) -> None:
    defaults = RunConfig()
    for key in keys:
        flag = "--" + key.replace("_", "-")
        default = format_value(getattr(defaults, key)) or "required"
        parser.add_argument(flag, dest=key, default=None, metavar=key.upper(),
                            help=f"{_HELP[key]} (default: {default})")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file (default: none)")
    common.add_argument("--seed", default=None, metavar="N", help="global random seed (default: 0)")
    common.add_argument("--out", default=None, metavar="DIR",
                        help="output directory (default: runs/default)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress (default: off)")

    parser = _Parser(prog="seto", description="Temporary sequence augmentation for "
                     "sequential recommendation: inspect, train, evaluate and sweep.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    p = sub.add_parser("augment", parents=[common], help="dump sampled training pairs",
                       description="Write sampled (input, target) pairs, two lines per pair.")
    _add_run_flags(p, _COMMAND_KEYS["augment"])
    p.add_argument("--count", type=int, default=10, help="number of pairs to dump (default: 10)")

    p = sub.add_parser("train", parents=[common], help="train the reference model",
                       description="Train and write model.bin, history.csv and config.txt.")
    _add_run_flags(p, [k for k in _COMMAND_KEYS["train"] if k not in ("seed", "out")])

    p = sub.add_parser("eval", parents=[common], help="evaluate a checkpoint",
                       description="Evaluate a checkpoint on the valid or test split.")
    _add_run_flags(p, _COMMAND_KEYS["eval"])
    p.add_argument("--checkpoint", metavar="PATH",
                   help="model checkpoint (default: OUT/model.bin)")

    p = sub.add_parser("sweep", parents=[common], help="train+eval over a parameter grid",
                       description="Run train+eval for every grid point and seed; write sweep.csv.")
    _add_run_flags(p, [k for k in _COMMAND_KEYS["sweep"] if k not in ("seed", "out")])
    p.add_argument("--grid", action="append", default=[], metavar="KEY=V1,V2",
                   help="grid axis, repeatable, e.g. --grid scope=0.2,0.4 (default: none)")
    p.add_argument("--seeds", default=None, metavar="N,N",
                   help="comma-separated seeds (default: the --seed value)")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes (default: 1)")
    return parser


def _run_config(args) -> RunConfig:
    overrides = {f.name: getattr(args, f.name) for f in fields(RunConfig)
                 if getattr(args, f.name, None) is not None}
    cfg = load_config(args.config, overrides)
    cfg.validate()
    return cfg


def _load_data(cfg: RunConfig):
    if cfg.input is None:
        raise UsageError("no input file given (use --input or 'input =' in the config)")
    path = Path(cfg.input)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    return read_tsv(path, header=cfg.header)


def _write_config(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(cfg.dumps(), encoding="utf-8")
    return out


def render_pair(dataset, user: int, pair) -> str:
    def side(items):
        return ",".join("_" if i == PAD else str(dataset.external_item(i)) for i in items)
    name = dataset.external_user(user)
    return f"{name}\tinput\t{side(pair.input)}\n{name}\ttarget\t{side(pair.target)}\n"


def cmd_augment(cfg: RunConfig, count: int, out_path: Path | None = None) -> str:
    dataset = _load_data(cfg)
    aug = cfg.augment_config()
    users = sorted(u for u, seq in dataset.sequences.items() if len(seq) >= 2)
    if not users:
        raise SetoError("no user has two or more interactions")
    pick = RngStream(cfg.seed, INSPECT)
    buf = io.StringIO()
    for index in range(count):
        user = users[pick.randint(len(users))]
        pair = build_training_pair(dataset.sequences[user], aug,
                                   RngStream(cfg.seed, AUGMENT, 0, 0, index))
        buf.write(render_pair(dataset, user, pair))
    text = buf.getvalue()
    if out_path is not None:
        out_path.parent.mkdir(parents=True, exist_ok=True)
        out_path.write_text(text, encoding="utf-8")
    return text


def cmd_train(cfg: RunConfig):
    dataset = _load_data(cfg)
    out = _write_config(cfg)
    params, history = train(dataset, cfg.augment_config(), cfg.train_config())
    save_checkpoint(params, out / "model.bin")
    (out / "history.csv").write_text(history.to_csv(), encoding="utf-8")
    return params, history


def cmd_eval(cfg: RunConfig, checkpoint=None):
    dataset = _load_data(cfg)
    path = Path(checkpoint) if checkpoint else Path(cfg.out) / "model.bin"
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    params = load_checkpoint(path)
    if params.num_items != dataset.num_items:
        raise SetoError(f"checkpoint has {params.num_items} items, data has {dataset.num_items}")
    splits = leave_one_out_split(dataset)
    report = evaluate(DecayModel(params), splits, dataset, cfg.candidates, cfg.k_list(),
                      seed=cfg.seed, split=cfg.split)
    record = report.to_record()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / f"eval_{cfg.split}_{cfg.candidates}.txt").write_text(record, encoding="utf-8")
    return report, record


def parse_grid(axes_text) -> list[tuple[str, list]]:
    axes = []
    for axis in axes_text:
        if "=" not in axis:
            raise UsageError(f"grid axis {axis!r} is not KEY=V1,V2,...")
        key, values = axis.split("=", 1)
        key = key.strip().replace("-", "_")
        if key in ("input", "out", "seed", "header"):
            raise UsageError(f"{key} cannot be a grid axis")
        try:
            parsed = [coerce(key, v.strip()) for v in values.split(",") if v.strip()]
        except InvalidParam as exc:
            raise UsageError(str(exc)) from None
        if not parsed:
            raise UsageError(f"grid axis {key!r} has no values")
        axes.append((key, parsed))
    return axes


def grid_points(base: RunConfig, axes, seeds) -> list[RunConfig]:
    names = [k for k, _ in axes]
    points = []
    for combo in itertools.product(*(v for _, v in axes)):
        for seed in seeds:
            points.append(base.replace(**dict(zip(names, combo)), seed=seed))
    return points


def run_point(cfg: RunConfig, dataset=None) -> dict:
    row = {"op": cfg.op, "alpha": cfg.alpha, "scope": cfg.scope, "rho": cfg.rho,
           "apply_to": cfg.apply_to, "constrained": format_value(cfg.constrained),
           "seed": cfg.seed}
    start = time.perf_counter()
    try:
        cfg.validate()
        if dataset is None:
            dataset = _load_data(cfg)
        params, history = train(dataset, cfg.augment_config(), cfg.train_config())
        report = evaluate(DecayModel(params), leave_one_out_split(dataset), dataset,
                          cfg.candidates, sorted({10, *cfg.k_list()}), seed=cfg.seed,
                          split=cfg.split)
        row.update({"recall@10": repr(report.recall[10]), "ndcg@10": repr(report.ndcg[10]),
                    "epochs": history.epochs, "status": "ok"})
    except (SetoError, OSError) as exc:
        row.update({"recall@10": "nan", "ndcg@10": "nan", "epochs": 0,
                    "status": f"error: {type(exc).__name__}: {exc}".replace("\n", " ")})
    row["seconds"] = f"{time.perf_counter() - start:.3f}"
    return row


def cmd_sweep(cfg: RunConfig, grid, seeds=None, workers: int = 1) -> list[dict]:
    axes = parse_grid(grid)
    seeds = seeds if seeds else [cfg.seed]
    points = grid_points(cfg, axes, seeds)
    out = _write_config(cfg)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_point, points))
    else:
        dataset = _load_data(cfg)
        rows = [run_point(p, dataset) for p in points]
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    return rows


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _run_config(args)
        if args.command == "augment":
            out_path = Path(cfg.out) / "augment.txt" if args.out or args.config else None
            text = cmd_augment(cfg, args.count, out_path)
            sys.stdout.write(text)
        elif args.command == "train":
            _, history = cmd_train(cfg)
            print(f"epochs\t{history.epochs}\nbest_epoch\t{history.best_epoch}\n"
                  f"best_val_ndcg@10\t{history.best_metric}\nseconds\t{history.seconds:.3f}")
        elif args.command == "eval":
            _, record = cmd_eval(cfg, args.checkpoint)
            sys.stdout.write(record)
        elif args.command == "sweep":
            seeds = None
            if args.seeds:
                try:
                    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
                except ValueError:
                    raise UsageError(f"--seeds must be comma-separated integers") from None
            rows = cmd_sweep(cfg, args.grid, seeds, args.workers)
            failed = sum(r["status"] != "ok" for r in rows)
            print(f"{len(rows)} runs, {failed} failed -> {Path(cfg.out) / 'sweep.csv'}")
    except (UsageError, InvalidParam) as exc:
        print(f"seto: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"seto: numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (SetoError, OSError) as exc:
        print(f"seto: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
