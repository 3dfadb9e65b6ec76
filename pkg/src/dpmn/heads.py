"""Per-task classification heads over the encoder's shared representation.

The main head runs a Bi-LSTM across the sequence, concatenates the forward
state at the last real position with the backward state after a right-to-
left scan from that position, and classifies through a two-layer ReLU FFN.
A linear head over the first sequence position is kept for ablations.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError, ContractError
from .tensor import Tensor, concat, matmul, mul, relu, sigmoid, tanh

INIT_STD = 0.02


def _lstm_scan(x: Tensor, lengths: np.ndarray, w_x: Tensor, w_h: Tensor, b: Tensor,
               hidden: int, reverse: bool) -> Tensor:
    """One LSTM direction with masked state updates.

    Updates only happen at positions t < length, so padded positions leave
    both states bitwise untouched; the returned state is the one at each
    example's last real position (forward) or at position 0 after scanning
    from the last real position (reverse).
    """
    batch, seq, _ = x.shape
    h = Tensor(np.zeros((batch, hidden)))
    c = Tensor(np.zeros((batch, hidden)))
    steps = range(seq - 1, -1, -1) if reverse else range(seq)
    for t in steps:
        gates = matmul(x[:, t, :], w_x) + matmul(h, w_h) + b
        i_gate = sigmoid(gates[:, :hidden])
        f_gate = sigmoid(gates[:, hidden:2 * hidden])
        o_gate = sigmoid(gates[:, 2 * hidden:3 * hidden])
        g_gate = tanh(gates[:, 3 * hidden:])
        c_new = f_gate * c + i_gate * g_gate
        h_new = o_gate * tanh(c_new)
        step_mask = Tensor((t < lengths).astype(np.float64)[:, None])
        keep = Tensor(1.0 - step_mask.data)
        h = mul(step_mask, h_new) + mul(keep, h)
        c = mul(step_mask, c_new) + mul(keep, c)
    return h


class BiLstmFfnHead:
    """Bi-LSTM over the shared sequence, then two linear layers with ReLU."""

    def __init__(self, input_size: int, lstm_hidden: int, ffn_hidden: int,
                 n_classes: int, rng: np.random.Generator, name: str):
        self.input_size = input_size
        self.lstm_hidden = lstm_hidden
        self.n_classes = n_classes
        self._params: dict[str, Tensor] = {}

        def register(suffix, shape, zeros=False):
            values = np.zeros(shape) if zeros else rng.normal(0.0, INIT_STD, size=shape)
            t = Tensor(values, trainable=True, name=f"{name}.{suffix}")
            self._params[t.name] = t
            return t

        gates = 4 * lstm_hidden
        self.fw_x = register("lstm_forward.w_x", (input_size, gates))
        self.fw_h = register("lstm_forward.w_h", (lstm_hidden, gates))
        self.fw_b = register("lstm_forward.b", (gates,), zeros=True)
        self.bw_x = register("lstm_backward.w_x", (input_size, gates))
        self.bw_h = register("lstm_backward.w_h", (lstm_hidden, gates))
        self.bw_b = register("lstm_backward.b", (gates,), zeros=True)
        self.w_f1 = register("ffn.w1", (2 * lstm_hidden, ffn_hidden))
        self.b_f1 = register("ffn.b1", (ffn_hidden,), zeros=True)
        self.w_f2 = register("ffn.w2", (ffn_hidden, n_classes))
        self.b_f2 = register("ffn.b2", (n_classes,), zeros=True)

    def parameters(self) -> dict[str, Tensor]:
        return dict(self._params)

    def bilstm(self, shared: Tensor, lengths: np.ndarray) -> Tensor:
        """Concatenated final states of both directions, shape [batch, 2h]."""
        lengths = np.asarray(lengths)
        if (lengths < 1).any():
            raise ContractError("every sequence must have at least one real position")
        if (lengths > shared.shape[1]).any():
            raise ContractError("length exceeds the sequence axis")
        forward = _lstm_scan(shared, lengths, self.fw_x, self.fw_h, self.fw_b,
                             self.lstm_hidden, reverse=False)
        backward = _lstm_scan(shared, lengths, self.bw_x, self.bw_h, self.bw_b,
                              self.lstm_hidden, reverse=True)
        return concat([forward, backward], axis=1)

    def ffn(self, states: Tensor) -> Tensor:
        hidden = relu(matmul(states, self.w_f1) + self.b_f1)
        return matmul(hidden, self.w_f2) + self.b_f2

    def forward(self, shared: Tensor, lengths: np.ndarray) -> Tensor:
        return self.ffn(self.bilstm(shared, lengths))


class LinearHead:
    """Single linear layer over the first sequence position's hidden vector."""

    def __init__(self, input_size: int, n_classes: int, rng: np.random.Generator, name: str):
        self.n_classes = n_classes
        self.w = Tensor(rng.normal(0.0, INIT_STD, size=(input_size, n_classes)),
                        trainable=True, name=f"{name}.w")
        self.b = Tensor(np.zeros(n_classes), trainable=True, name=f"{name}.b")
        self._params = {self.w.name: self.w, self.b.name: self.b}

    def parameters(self) -> dict[str, Tensor]:
        return dict(self._params)

    def forward(self, shared: Tensor, lengths: np.ndarray) -> Tensor:
        return matmul(shared[:, 0, :], self.w) + self.b


HEAD_KINDS = ("bilstm-ffn", "linear")


def make_head(kind: str, input_size: int, lstm_hidden: int, ffn_hidden: int,
              n_classes: int, rng: np.random.Generator, name: str):
    if kind == "bilstm-ffn":
        return BiLstmFfnHead(input_size, lstm_hidden, ffn_hidden, n_classes, rng, name)
    if kind == "linear":
        return LinearHead(input_size, n_classes, rng, name)
    raise ConfigError(f"head kind must be one of {HEAD_KINDS}, got {kind!r}")
