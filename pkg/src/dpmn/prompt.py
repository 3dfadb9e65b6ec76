"""Continuous prompt construction: length, form, initialization, tuning strategy."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ConfigError, EmbeddingIndexError
from .tensor import Tensor

FORMS = ("deep", "light")
INITS = ("random", "token")
TUNINGS = ("fixed-lm", "lm-plus-prompt")

RANDOM_INIT_STD = 0.02  # BERT-style initializer scale


@dataclass(frozen=True)
class PromptConfig:
    """How the continuous prompt is built.

    length is the number of prefix positions (p_n); token init may leave
    token_ids unset until a vocabulary exists, in which case the trainer
    fills in the most frequent non-reserved ids.
    """

    length: int = 1
    form: str = "deep"
    init: str = "random"
    token_ids: tuple[int, ...] | None = None
    tuning: str = "lm-plus-prompt"

    def __post_init__(self):
        if self.form not in FORMS:
            raise ConfigError(f"prompt form must be one of {FORMS}, got {self.form!r}")
        if self.init not in INITS:
            raise ConfigError(f"prompt init must be one of {INITS}, got {self.init!r}")
        if self.tuning not in TUNINGS:
            raise ConfigError(f"tuning must be one of {TUNINGS}, got {self.tuning!r}")
        if self.length < 0:
            raise ConfigError(f"prompt length must be >= 0, got {self.length}")
        if self.length == 0 and self.form != "light":
            raise ConfigError("prompt length 0 (no prompt) is only valid with the light form")
        if self.token_ids is not None:
            if self.init != "token":
                raise ConfigError("token_ids given but init is not 'token'")
            if len(self.token_ids) != self.length:
                raise ConfigError(
                    f"token init needs exactly {self.length} ids, got {len(self.token_ids)}"
                )


class PrefixBank:
    """The trainable prefix matrices: L of them for deep form, 1 for light.

    A zero-length prompt has no matrices at all, so a prompt-off model
    carries zero prefix parameters.
    """

    def __init__(self, form: str, prompt_len: int, matrices: list[Tensor]):
        self.form = form
        self.prompt_len = prompt_len
        self.matrices = matrices

    def parameters(self) -> dict[str, Tensor]:
        return {m.name: m for m in self.matrices}

    def value_count(self) -> int:
        return sum(m.size for m in self.matrices)


def init_prompt(config: PromptConfig, encoder_config, embedding_table: np.ndarray,
                rng_seed: int) -> PrefixBank:
    """Build the prefix bank for an encoder.

    Random init draws every entry i.i.d. Normal(0, 0.02^2) from rng_seed;
    token init copies embedding-table rows, replicated into every layer
    matrix for the deep form.
    """
    if config.length > encoder_config.max_seq_len - 1:
        raise ConfigError(
            f"prompt length {config.length} leaves no room for text "
            f"(max_seq_len {encoder_config.max_seq_len})"
        )
    d = encoder_config.hidden_size
    n_matrices = 0 if config.length == 0 else (
        encoder_config.num_layers if config.form == "deep" else 1
    )

    if config.init == "token" and n_matrices > 0:
        if config.token_ids is None:
            raise ConfigError("token init requires concrete token ids")
        for tid in config.token_ids:
            if not 0 <= tid < embedding_table.shape[0]:
                raise EmbeddingIndexError(tid, embedding_table.shape[0])
        base = np.asarray(embedding_table)[list(config.token_ids)].astype(np.float64)
    else:
        rng = np.random.Generator(np.random.PCG64(rng_seed))
        base = rng.normal(0.0, RANDOM_INIT_STD, size=(n_matrices, config.length, d))

    matrices = []
    for i in range(n_matrices):
        values = base[i] if config.init == "random" else base.copy()
        matrices.append(Tensor(values, trainable=True, name=f"prompt.layer{i}"))
    return PrefixBank(config.form, config.length, matrices)


def sweep_configs(lengths, forms, inits, tuning: str = "lm-plus-prompt") -> list[PromptConfig]:
    """Cartesian product of prompt settings, dropping invalid combinations."""
    if not lengths or not forms or not inits:
        raise ConfigError("sweep needs at least one length, form, and init")
    configs = []
    for length, form, init in product(lengths, forms, inits):
        try:
            configs.append(PromptConfig(length=length, form=form, init=init, tuning=tuning))
        except ConfigError:
            continue
    return configs
