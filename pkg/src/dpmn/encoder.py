"""BERT-style transformer encoder with continuous prompt prefixes.

The prompt occupies the first p_n sequence positions. Light form injects
the prefix once, ahead of layer 0; deep form additionally overwrites the
prompt slots with that layer's own prefix matrix before every later layer.
Attention is unmasked toward prompt positions, and padding stays masked.

Residual ordering is post-layer-norm, matching the original BERT.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError
from .prompt import PrefixBank
from .tensor import (
    Tensor,
    broadcast_to,
    concat,
    dropout,
    embedding_lookup,
    layer_norm,
    matmul,
    mul,
    relu,
    reshape,
    softmax,
    swapaxes,
)

LAYER_NORM_EPS = 1e-12
MASK_BIAS = -1e9  # large enough that masked attention weights underflow to 0.0


@dataclass(frozen=True)
class EncoderConfig:
    """Desk-scale defaults: small enough for fast gradient checks, deep
    enough that deep and light prompt forms behave differently."""

    vocab_size: int
    num_layers: int = 4
    hidden_size: int = 64
    num_heads: int = 4
    ffn_size: int = 256
    max_seq_len: int = 64
    dropout: float = 0.1

    def __post_init__(self):
        for name in ("vocab_size", "num_layers", "hidden_size", "num_heads",
                     "ffn_size", "max_seq_len"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.hidden_size % self.num_heads != 0:
            raise ConfigError(
                f"hidden_size {self.hidden_size} not divisible by num_heads {self.num_heads}"
            )
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")


class TransformerLayer:
    def __init__(self, index: int, config: EncoderConfig, register):
        d = config.hidden_size
        pre = f"layer{index}"
        self.num_heads = config.num_heads
        self.head_size = d // config.num_heads
        self.wq = register(f"{pre}.attention.wq", (d, d), "normal")
        self.bq = register(f"{pre}.attention.bq", (d,), "zeros")
        self.wk = register(f"{pre}.attention.wk", (d, d), "normal")
        self.bk = register(f"{pre}.attention.bk", (d,), "zeros")
        self.wv = register(f"{pre}.attention.wv", (d, d), "normal")
        self.bv = register(f"{pre}.attention.bv", (d,), "zeros")
        self.wo = register(f"{pre}.attention.wo", (d, d), "normal")
        self.bo = register(f"{pre}.attention.bo", (d,), "zeros")
        self.attn_gain = register(f"{pre}.attention_norm.gain", (d,), "ones")
        self.attn_bias = register(f"{pre}.attention_norm.bias", (d,), "zeros")
        self.ffn_w1 = register(f"{pre}.ffn.w1", (d, config.ffn_size), "normal")
        self.ffn_b1 = register(f"{pre}.ffn.b1", (config.ffn_size,), "zeros")
        self.ffn_w2 = register(f"{pre}.ffn.w2", (config.ffn_size, d), "normal")
        self.ffn_b2 = register(f"{pre}.ffn.b2", (d,), "zeros")
        self.ffn_gain = register(f"{pre}.ffn_norm.gain", (d,), "ones")
        self.ffn_bias = register(f"{pre}.ffn_norm.bias", (d,), "zeros")

    def _split_heads(self, t: Tensor, batch: int, seq: int) -> Tensor:
        return swapaxes(reshape(t, (batch, seq, self.num_heads, self.head_size)), 1, 2)

    def forward(self, x: Tensor, attn_bias: Tensor, dropout_rate: float,
                rng: np.random.Generator | None) -> Tensor:
        batch, seq, d = x.shape
        q = self._split_heads(matmul(x, self.wq) + self.bq, batch, seq)
        k = self._split_heads(matmul(x, self.wk) + self.bk, batch, seq)
        v = self._split_heads(matmul(x, self.wv) + self.bv, batch, seq)
        scores = mul(matmul(q, swapaxes(k, 2, 3)), self.head_size ** -0.5)
        weights = softmax(scores + attn_bias, axis=-1)
        context = reshape(swapaxes(matmul(weights, v), 1, 2), (batch, seq, d))
        attn_out = matmul(context, self.wo) + self.bo
        if rng is not None:
            attn_out = dropout(attn_out, dropout_rate, rng)
        x = layer_norm(x + attn_out, self.attn_gain, self.attn_bias, LAYER_NORM_EPS)
        ffn_out = matmul(relu(matmul(x, self.ffn_w1) + self.ffn_b1), self.ffn_w2) + self.ffn_b2
        if rng is not None:
            ffn_out = dropout(ffn_out, dropout_rate, rng)
        return layer_norm(x + ffn_out, self.ffn_gain, self.ffn_bias, LAYER_NORM_EPS)


class EncoderStack:
    """Token/position embeddings plus a stack of transformer layers.

    Parameter names are unique and stable; load_weights() is the import
    hook for externally produced checkpoints with matching names.
    """

    def __init__(self, config: EncoderConfig, rng: np.random.Generator):
        self.config = config
        self._params: dict[str, Tensor] = {}

        def register(name, shape, kind):
            if kind == "normal":
                values = rng.normal(0.0, 0.02, size=shape)
            elif kind == "zeros":
                values = np.zeros(shape)
            else:
                values = np.ones(shape)
            t = Tensor(values, trainable=True, name=name)
            self._params[name] = t
            return t

        self.token_emb = register("embedding.token", (config.vocab_size, config.hidden_size), "normal")
        self.pos_emb = register("embedding.position", (config.max_seq_len, config.hidden_size), "normal")
        self.layers = [TransformerLayer(i, config, register) for i in range(config.num_layers)]

    def parameters(self) -> dict[str, Tensor]:
        return dict(self._params)

    def load_weights(self, arrays: dict[str, np.ndarray]) -> None:
        for name, values in arrays.items():
            if name not in self._params:
                raise ConfigError(f"unknown encoder parameter {name!r}")
            p = self._params[name]
            if p.shape != values.shape:
                raise ConfigError(
                    f"shape mismatch for {name!r}: have {p.shape}, got {values.shape}"
                )
            p.data = np.asarray(values, dtype=np.float64).copy()

    def embed(self, token_ids: np.ndarray, prompt_len: int = 0) -> Tensor:
        """Token plus position embeddings, with positions offset by the
        prompt length so prompt slots own positions 0..p_n-1."""
        token_ids = np.asarray(token_ids)
        seq = token_ids.shape[1]
        limit = self.config.max_seq_len - prompt_len
        if seq > limit:
            raise ContractError(
                f"sequence length {seq} exceeds max_seq_len - p_n = {limit}"
            )
        tok = embedding_lookup(self.token_emb, token_ids)
        positions = np.arange(prompt_len, prompt_len + seq)
        return tok + embedding_lookup(self.pos_emb, positions)


def _check_bank(stack: EncoderStack, bank: PrefixBank, form: str) -> None:
    if form not in ("deep", "light"):
        raise ConfigError(f"prompt form must be 'deep' or 'light', got {form!r}")
    if bank.prompt_len == 0:
        if bank.matrices:
            raise ConfigError("zero-length prompt must carry no prefix matrices")
        return
    expected = stack.config.num_layers if form == "deep" else 1
    if len(bank.matrices) != expected:
        raise ConfigError(
            f"{form} form needs {expected} prefix matrices, bank has {len(bank.matrices)}"
        )
    d = stack.config.hidden_size
    for m in bank.matrices:
        if m.shape != (bank.prompt_len, d):
            raise ConfigError(
                f"prefix matrix {m.name} has shape {m.shape}, expected {(bank.prompt_len, d)}"
            )


def encode(stack: EncoderStack, input_emb: Tensor, bank: PrefixBank, form: str,
           mask: np.ndarray, dropout_rng: np.random.Generator | None = None) -> Tensor:
    """Run the full stack over prompt prefix + text.

    Layer 0 consumes the prefix concatenated ahead of the text embeddings.
    In deep form every later layer first overwrites the prompt slots with
    its own prefix matrix. Returns the last layer's full hidden sequence,
    shape [batch, p_n + T, hidden].
    """
    _check_bank(stack, bank, form)
    batch, seq, d = input_emb.shape
    mask = np.asarray(mask, dtype=np.float64)
    if mask.shape != (batch, seq):
        raise ContractError(f"mask shape {mask.shape} does not match ({batch}, {seq})")
    p = bank.prompt_len

    full_mask = np.concatenate([np.ones((batch, p)), mask], axis=1)
    attn_bias = Tensor((1.0 - full_mask)[:, None, None, :] * MASK_BIAS)

    def prefixed(layer_index: int, x_rest: Tensor) -> Tensor:
        m = bank.matrices[layer_index]
        tile = broadcast_to(reshape(m, (1, p, d)), (batch, p, d))
        return concat([tile, x_rest], axis=1)

    x = prefixed(0, input_emb) if p > 0 else input_emb
    rate = stack.config.dropout
    for i, layer in enumerate(stack.layers):
        if i > 0 and p > 0 and form == "deep":
            x = prefixed(i, x[:, p:, :])
        x = layer.forward(x, attn_bias, rate, dropout_rng)
    return x


def trainable_parameters(stack: EncoderStack, bank: PrefixBank,
                         strategy: str) -> dict[str, Tensor]:
    """Parameters the optimizer may update, before task heads are added.

    fixed-lm freezes the encoder entirely; lm-plus-prompt trains encoder
    and prefix bank together. The prompt is trainable under both.
    """
    if strategy == "fixed-lm":
        return bank.parameters()
    if strategy == "lm-plus-prompt":
        return {**stack.parameters(), **bank.parameters()}
    raise ConfigError(f"unknown tuning strategy {strategy!r}")
