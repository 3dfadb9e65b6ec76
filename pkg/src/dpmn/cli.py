"""Command-line entry points.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
failure (NaN loss or failed gradient check).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .data import parse_tsv
from .errors import ConfigError, DataError, NumericError
from .gradcheck import run_gradcheck
from .prompt import sweep_configs
from .runconfig import TrainConfig, load_config_file
from .trainer import ablate, evaluate_checkpoint, train


def _load_config(args) -> TrainConfig:
    cfg = load_config_file(args.config) if args.config else TrainConfig()
    updates = {}
    if getattr(args, "train", None):
        updates["train_path"] = args.train
    if getattr(args, "dev", None):
        updates["dev_path"] = args.dev
    if getattr(args, "out", None):
        updates["out_dir"] = args.out
    return replace(cfg, **updates) if updates else cfg


def _load_datasets(cfg: TrainConfig):
    if not cfg.train_path or not cfg.dev_path:
        raise ConfigError("both --train and --dev corpora are required")
    for path in (cfg.train_path, cfg.dev_path):
        if not os.path.exists(path):
            raise DataError(f"corpus not found: {path}")
    return parse_tsv(cfg.train_path), parse_tsv(cfg.dev_path)


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    train_set, dev_set = _load_datasets(cfg)
    result = train(cfg, train_set, dev_set, log=print)
    print(f"best epoch {result.best_epoch}: dev macro F1 (task A) {result.best_metric:.4f}")
    if result.checkpoint_path:
        print(f"checkpoint written to {result.checkpoint_path}")
    return 0


def _cmd_eval(args) -> int:
    if not os.path.exists(args.checkpoint):
        raise DataError(f"checkpoint not found: {args.checkpoint}")
    if not os.path.exists(args.data):
        raise DataError(f"corpus not found: {args.data}")
    report = evaluate_checkpoint(args.checkpoint, parse_tsv(args.data))
    for task in ("a", "b", "c"):
        print(f"task {task}: macro_f1 {report.f1[task]:.4f} over {report.counts[task]} examples")
        if report.counts[task]:
            print("confusion (gold rows x predicted columns):")
            for row in report.confusion[task]:
                print("  " + " ".join(f"{v:6d}" for v in row))
    return 0


def _cmd_ablate(args) -> int:
    cfg = _load_config(args)
    train_set, dev_set = _load_datasets(cfg)
    result = ablate(cfg, train_set, dev_set, log=print)
    print(result.to_markdown(), end="")
    if cfg.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)
        for name, text in (("ablation.md", result.to_markdown()),
                           ("ablation.csv", result.to_csv())):
            with open(os.path.join(cfg.out_dir, name), "w", encoding="utf-8") as f:
                f.write(text)
        print(f"tables written to {cfg.out_dir}")
    return 0


def _cmd_gradcheck(args) -> int:
    report = run_gradcheck(n_probes=args.probes, seed=args.seed)
    for line in report.lines():
        print(line)
    if not report.passed:
        raise NumericError("gradient check failed")
    return 0


def _parse_csv_list(raw: str, converter, flag: str):
    try:
        return [converter(v) for v in raw.split(",") if v != ""]
    except ValueError:
        raise ConfigError(f"bad value for {flag}: {raw!r}") from None


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    train_set, dev_set = _load_datasets(cfg)
    lengths = _parse_csv_list(args.lengths, int, "--lengths")
    forms = _parse_csv_list(args.forms, str, "--forms")
    inits = _parse_csv_list(args.inits, str, "--inits")
    configs = sweep_configs(lengths, forms, inits, tuning=cfg.prompt.tuning)
    print("length,form,init,tuning,dev_macro_f1_a,best_epoch")
    lines = []
    for prompt_cfg in configs:
        run_cfg = replace(cfg, prompt=prompt_cfg, out_dir=None)
        result = train(run_cfg, train_set, dev_set)
        line = (f"{prompt_cfg.length},{prompt_cfg.form},{prompt_cfg.init},"
                f"{prompt_cfg.tuning},{result.best_metric!r},{result.best_epoch}")
        print(line)
        lines.append(line)
    if cfg.out_dir:
        os.makedirs(cfg.out_dir, exist_ok=True)
        with open(os.path.join(cfg.out_dir, "sweep.csv"), "w", encoding="utf-8") as f:
            f.write("length,form,init,tuning,dev_macro_f1_a,best_epoch\n")
            f.write("\n".join(lines) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dpmn",
        description="Train and probe the deep-prompt multi-task abuse-language classifier.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and keep the best-dev checkpoint")
    p_train.add_argument("--config", help="flat key=value config file")
    p_train.add_argument("--train", required=True, help="training corpus TSV")
    p_train.add_argument("--dev", required=True, help="validation corpus TSV")
    p_train.add_argument("--out", help="directory for model.ckpt and runlog.csv")
    p_train.set_defaults(fn=_cmd_train)

    p_eval = sub.add_parser("eval", help="score a checkpoint on a corpus")
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.set_defaults(fn=_cmd_eval)

    p_ablate = sub.add_parser("ablate", help="train all six architecture variants")
    p_ablate.add_argument("--config")
    p_ablate.add_argument("--train", required=True)
    p_ablate.add_argument("--dev", required=True)
    p_ablate.add_argument("--out")
    p_ablate.set_defaults(fn=_cmd_ablate)

    p_grad = sub.add_parser("gradcheck", help="compare analytic gradients to finite differences")
    p_grad.add_argument("--probes", type=int, default=200)
    p_grad.add_argument("--seed", type=int, default=0)
    p_grad.set_defaults(fn=_cmd_gradcheck)

    p_sweep = sub.add_parser("sweep", help="train across prompt length/form/init combinations")
    p_sweep.add_argument("--lengths", required=True, help="comma-separated prompt lengths")
    p_sweep.add_argument("--forms", required=True, help="comma-separated: deep,light")
    p_sweep.add_argument("--inits", required=True, help="comma-separated: random,token")
    p_sweep.add_argument("--config")
    p_sweep.add_argument("--train", required=True)
    p_sweep.add_argument("--dev", required=True)
    p_sweep.add_argument("--out")
    p_sweep.set_defaults(fn=_cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except DataError as e:
        print(f"data error: {e}", file=sys.stderr)
        return 3
    except NumericError as e:
        print(f"numeric failure: {e}", file=sys.stderr)
        return 4


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
