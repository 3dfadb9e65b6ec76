"""Training loop with early stopping, evaluation, and the ablation runner.

Everything is deterministic given the config seed: parameter init, batch
shuffling, and dropout all derive from rng_seed, and the persisted run log
and checkpoint are byte-stable across runs. Wall-clock time is reported on
the console only, never written into artifacts.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .checkpoint import checkpoint_bytes, load_checkpoint
from .data import (
    TASK_CLASSES,
    Batch,
    RESERVED,
    Vocab,
    build_vocab,
    make_batches,
)
from .errors import ConfigError, ContractError, NumericError
from .losses import LossWeights, cross_entropy, total_loss
from .metrics import confusion_matrix, macro_f1
from .model import TASKS, DpmnModel
from .optim import make_optimizer
from .prompt import PromptConfig
from .runconfig import TrainConfig, format_checkpoint_header, parse_checkpoint_header
from .tensor import Tape, backward

CHECKPOINT_NAME = "model.ckpt"
RUNLOG_NAME = "runlog.csv"
RUNLOG_HEADER = ("epoch,train_loss_total,train_loss_a,train_loss_b,train_loss_c,"
                 "dev_macro_f1_a,dev_macro_f1_b,dev_macro_f1_c,best")


@dataclass
class EpochRow:
    epoch: int
    loss_total: float
    loss_a: float
    loss_b: float
    loss_c: float
    f1_a: float
    f1_b: float
    f1_c: float
    wall_time: float  # console diagnostics only; kept out of the CSV


@dataclass
class RunLog:
    rows: list[EpochRow] = field(default_factory=list)
    step_losses: list[tuple[float, float, float, float]] = field(default_factory=list)
    best_epoch: int = 0

    def to_csv(self) -> str:
        lines = [RUNLOG_HEADER]
        for r in self.rows:
            best = 1 if r.epoch == self.best_epoch else 0
            lines.append(
                f"{r.epoch},{r.loss_total!r},{r.loss_a!r},{r.loss_b!r},{r.loss_c!r},"
                f"{r.f1_a!r},{r.f1_b!r},{r.f1_c!r},{best}"
            )
        return "\n".join(lines) + "\n"


@dataclass
class EvalReport:
    f1: dict[str, float]
    confusion: dict[str, np.ndarray]
    counts: dict[str, int]


@dataclass
class TrainResult:
    model: DpmnModel
    runlog: RunLog
    vocab: Vocab
    best_epoch: int
    best_metric: float
    header_text: str
    checkpoint_path: str | None = None

    def checkpoint_blob(self) -> bytes:
        return checkpoint_bytes(self.header_text, self.model.state_arrays())


def _resolve_prompt(cfg: TrainConfig, vocab: Vocab) -> PromptConfig:
    """Fill in token-init ids when the config deferred them: the most
    frequent non-reserved tokens, i.e. the first ids after the reserved ones."""
    p = cfg.prompt
    if p.init != "token" or p.token_ids is not None or p.length == 0:
        return p
    first = len(RESERVED)
    if vocab.size < first + p.length:
        raise ConfigError(
            f"vocabulary too small to pick {p.length} prompt token ids"
        )
    return replace(p, token_ids=tuple(range(first, first + p.length)))


def _build_model(cfg: TrainConfig, vocab: Vocab) -> DpmnModel:
    prompt = _resolve_prompt(cfg, vocab)
    return DpmnModel(
        cfg.encoder_config(vocab.size),
        prompt,
        head_kind=cfg.head_kind,
        rng_seed=cfg.rng_seed,
        lstm_hidden=cfg.lstm_hidden,
        head_ffn_size=cfg.head_ffn_size,
    )


def evaluate_model(model: DpmnModel, batches: list[Batch]) -> EvalReport:
    """Macro F1 and confusion matrix per task, over examples whose label is
    present for that task. Forward passes run without a tape (no dropout)."""
    gold: dict[str, list] = {t: [] for t in TASKS}
    pred: dict[str, list] = {t: [] for t in TASKS}
    for batch in batches:
        logits = model.forward(batch)
        for task in TASKS:
            labels = batch.labels(task)
            present = labels >= 0
            if not present.any():
                continue
            choices = np.argmax(logits[task].data, axis=1)
            gold[task].extend(labels[present].tolist())
            pred[task].extend(choices[present].tolist())
    f1, confusion, counts = {}, {}, {}
    for task in TASKS:
        c = TASK_CLASSES[task]
        counts[task] = len(gold[task])
        if gold[task]:
            f1[task] = macro_f1(pred[task], gold[task], c)
            confusion[task] = confusion_matrix(gold[task], pred[task], c)
        else:
            f1[task] = 0.0
            confusion[task] = np.zeros((c, c), dtype=np.int64)
    return EvalReport(f1=f1, confusion=confusion, counts=counts)


def train(cfg: TrainConfig, train_examples, dev_examples, *,
          dev_metric_override=None, log=None) -> TrainResult:
    """Run the full training loop and keep the best-dev-epoch weights.

    dev_metric_override, when given, supplies the monitored dev metric per
    epoch in place of the real task-A Macro F1; it exists so the early-stop
    rule can be exercised against a known metric sequence.
    """
    vocab = build_vocab(train_examples, cfg.min_freq)
    model = _build_model(cfg, vocab)
    trainable = model.trainable_parameters(cfg.prompt.tuning)
    optimizer = make_optimizer(cfg.optimizer, trainable, cfg.learning_rate)
    dropout_rng = np.random.Generator(np.random.PCG64(cfg.rng_seed + 2))
    weights = cfg.loss_weights
    cap = cfg.max_seq_len - model.bank.prompt_len

    dev_batches = make_batches(dev_examples, vocab, cfg.batch_size, cap)
    runlog = RunLog()
    best_metric = -1.0
    best_state: dict[str, np.ndarray] | None = None
    stale_epochs = 0
    step = 0

    for epoch in range(1, cfg.max_epochs + 1):
        started = time.monotonic()
        batches = make_batches(train_examples, vocab, cfg.batch_size, cap,
                               shuffle_seed=cfg.rng_seed * 1_000_003 + epoch)
        epoch_losses = np.zeros(4)
        for batch in batches:
            step += 1
            with Tape() as tape:
                logits = model.forward(
                    batch, dropout_rng if cfg.dropout > 0 else None
                )
                loss_a = cross_entropy(logits["a"], batch.labels_a)
                loss_b = cross_entropy(logits["b"], batch.labels_b)
                loss_c = cross_entropy(logits["c"], batch.labels_c)
                loss = total_loss(loss_a, loss_b, loss_c, weights)
            parts = (loss.item(), loss_a.item(), loss_b.item(), loss_c.item())
            if not all(np.isfinite(parts)):
                raise NumericError(f"non-finite loss at training step {step}")
            runlog.step_losses.append(parts)
            epoch_losses += parts
            optimizer.zero_grad()
            backward(tape, loss)
            optimizer.step()

        report = evaluate_model(model, dev_batches)
        if dev_metric_override is not None:
            if epoch - 1 >= len(dev_metric_override):
                raise ContractError("dev_metric_override ran out of values")
            monitored = float(dev_metric_override[epoch - 1])
        else:
            monitored = report.f1["a"]
        mean = [float(v) for v in epoch_losses / len(batches)]
        row = EpochRow(epoch, mean[0], mean[1], mean[2], mean[3],
                       monitored, report.f1["b"], report.f1["c"],
                       wall_time=time.monotonic() - started)
        runlog.rows.append(row)

        if monitored > best_metric:
            best_metric = monitored
            runlog.best_epoch = epoch
            best_state = model.state_arrays()
            stale_epochs = 0
        else:
            stale_epochs += 1
        if log is not None:
            log(f"epoch {epoch}: loss {row.loss_total:.6f} dev_f1_a {monitored:.4f} "
                f"({row.wall_time:.2f}s)")
        if stale_epochs >= cfg.early_stop_patience:
            break

    model.load_state(best_state)
    header = format_checkpoint_header(cfg, vocab)
    result = TrainResult(model=model, runlog=runlog, vocab=vocab,
                         best_epoch=runlog.best_epoch, best_metric=best_metric,
                         header_text=header)
    if cfg.out_dir is not None:
        os.makedirs(cfg.out_dir, exist_ok=True)
        path = os.path.join(cfg.out_dir, CHECKPOINT_NAME)
        with open(path, "wb") as f:
            f.write(result.checkpoint_blob())
        with open(os.path.join(cfg.out_dir, RUNLOG_NAME), "w", encoding="utf-8") as f:
            f.write(runlog.to_csv())
        result.checkpoint_path = path
    return result


def load_model(checkpoint_path) -> tuple[DpmnModel, TrainConfig, Vocab]:
    header_text, arrays = load_checkpoint(checkpoint_path)
    cfg, vocab = parse_checkpoint_header(header_text)
    model = _build_model(cfg, vocab)
    model.load_state(arrays)
    return model, cfg, vocab


def evaluate_checkpoint(checkpoint_path, examples) -> EvalReport:
    model, cfg, vocab = load_model(checkpoint_path)
    cap = cfg.max_seq_len - model.bank.prompt_len
    return evaluate_model(model, make_batches(examples, vocab, cfg.batch_size, cap))


# The six architecture variants the ablation runner compares:
# (name, head kind, multi-task on, prompt on)
ABLATION_VARIANTS = (
    ("linear-head", "linear", False, False),
    ("bilstm-head", "bilstm-ffn", False, False),
    ("bilstm-mtl", "bilstm-ffn", True, False),
    ("bilstm-prompt", "bilstm-ffn", False, True),
    ("linear-mtl-prompt", "linear", True, True),
    ("full", "bilstm-ffn", True, True),
)


@dataclass
class AblationRow:
    name: str
    architecture: str
    dev_f1_a: float
    best_epoch: int
    prefix_values: int


@dataclass
class AblationResult:
    rows: list[AblationRow]

    def to_markdown(self) -> str:
        lines = ["| model | architecture | dev macro F1 (task A) |",
                 "|---|---|---|"]
        for r in self.rows:
            lines.append(f"| {r.name} | {r.architecture} | {r.dev_f1_a:.4f} |")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        lines = ["model,architecture,dev_macro_f1_a,best_epoch,prefix_values"]
        for r in self.rows:
            lines.append(
                f"{r.name},{r.architecture},{r.dev_f1_a!r},{r.best_epoch},{r.prefix_values}"
            )
        return "\n".join(lines) + "\n"


def _variant_config(base: TrainConfig, head: str, mtl: bool, prompt: bool) -> TrainConfig:
    weights = base.loss_weights if mtl else LossWeights(1.0, 0.0, 0.0)
    prompt_cfg = base.prompt if prompt else PromptConfig(
        length=0, form="light", init="random", tuning=base.prompt.tuning
    )
    return replace(base, head_kind=head, loss_weights=weights, prompt=prompt_cfg,
                   out_dir=None)


def _describe(head: str, mtl: bool, prompt: bool) -> str:
    parts = ["encoder", f"{head} head"]
    if mtl:
        parts.append("multi-task")
    if prompt:
        parts.append("prompt")
    return " + ".join(parts)


def ablate(base: TrainConfig, train_examples, dev_examples, *,
           log=None) -> AblationResult:
    """Train every architecture variant with identical seed and data.

    Multi-task off means loss weights (1, 0, 0); the auxiliary heads still
    exist but receive zero gradient. Prompt off means a zero-length prompt,
    so no prefix parameters exist at all.
    """
    rows = []
    for name, head, mtl, prompt in ABLATION_VARIANTS:
        cfg = _variant_config(base, head, mtl, prompt)
        if log is not None:
            log(f"ablation variant {name}: {_describe(head, mtl, prompt)}")
        result = train(cfg, train_examples, dev_examples)
        rows.append(AblationRow(
            name=name,
            architecture=_describe(head, mtl, prompt),
            dev_f1_a=result.best_metric,
            best_epoch=result.best_epoch,
            prefix_values=result.model.bank.value_count(),
        ))
    return AblationResult(rows)
