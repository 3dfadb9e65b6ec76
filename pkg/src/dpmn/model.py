"""Full network: prompt-injected encoder shared by three task heads."""

from __future__ import annotations

import numpy as np

from .data import TASK_CLASSES, Batch
from .encoder import EncoderConfig, EncoderStack, encode, trainable_parameters
from .errors import ConfigError
from .heads import make_head
from .prompt import PrefixBank, PromptConfig, init_prompt
from .tensor import Tensor

TASKS = ("a", "b", "c")


def head_forward(head, shared: Tensor, lengths: np.ndarray, task: str) -> Tensor:
    if head.n_classes != TASK_CLASSES[task]:
        raise ConfigError(
            f"task {task!r} needs {TASK_CLASSES[task]} classes, head emits {head.n_classes}"
        )
    return head.forward(shared, lengths)


class DpmnModel:
    """Encoder + prefix bank + one head per task, with a stable parameter registry.

    All three heads always exist; single-task training simply weights the
    auxiliary losses to zero. LSTM hidden size defaults to half the encoder
    hidden size so the concatenated state width matches it.
    """

    def __init__(self, encoder_config: EncoderConfig, prompt_config: PromptConfig,
                 head_kind: str = "bilstm-ffn", rng_seed: int = 0,
                 lstm_hidden: int | None = None, head_ffn_size: int | None = None):
        self.encoder_config = encoder_config
        self.prompt_config = prompt_config
        self.head_kind = head_kind
        d = encoder_config.hidden_size
        rng = np.random.Generator(np.random.PCG64(rng_seed))
        self.encoder = EncoderStack(encoder_config, rng)
        self.bank: PrefixBank = init_prompt(
            prompt_config, encoder_config, self.encoder.token_emb.data, rng_seed + 1
        )
        lstm_hidden = lstm_hidden or d // 2
        head_ffn_size = head_ffn_size or d
        self.heads = {
            task: make_head(head_kind, d, lstm_hidden, head_ffn_size,
                            TASK_CLASSES[task], rng, f"head_{task}")
            for task in TASKS
        }

    def parameters(self) -> dict[str, Tensor]:
        params = {**self.encoder.parameters(), **self.bank.parameters()}
        for task in TASKS:
            params.update(self.heads[task].parameters())
        return params

    def trainable_parameters(self, strategy: str) -> dict[str, Tensor]:
        """Optimizer-visible set: heads always train; the encoder only under
        lm-plus-prompt; the prefix bank under both strategies."""
        params = trainable_parameters(self.encoder, self.bank, strategy)
        for task in TASKS:
            params.update(self.heads[task].parameters())
        return params

    def forward(self, batch: Batch,
                dropout_rng: np.random.Generator | None = None) -> dict[str, Tensor]:
        """Logits per task. Pass a dropout generator only while training."""
        p = self.bank.prompt_len
        emb = self.encoder.embed(batch.token_ids, prompt_len=p)
        shared = encode(self.encoder, emb, self.bank, self.prompt_config.form,
                        batch.mask, dropout_rng)
        lengths = batch.lengths + p
        return {task: head_forward(self.heads[task], shared, lengths, task)
                for task in TASKS}

    def load_state(self, arrays: dict[str, np.ndarray]) -> None:
        params = self.parameters()
        missing = set(params) - set(arrays)
        unknown = set(arrays) - set(params)
        if missing or unknown:
            raise ConfigError(
                f"parameter names do not match: missing {sorted(missing)[:3]}, "
                f"unknown {sorted(unknown)[:3]}"
            )
        for name, values in arrays.items():
            p = params[name]
            if p.shape != np.asarray(values).shape:
                raise ConfigError(
                    f"shape mismatch for {name!r}: have {p.shape}, got {np.asarray(values).shape}"
                )
            p.data = np.asarray(values, dtype=np.float64).copy()

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: p.data.copy() for name, p in self.parameters().items()}
