"""Training configuration and its flat key-value text form.

The same canonical serialization is used for run-config files and for the
checkpoint header, where it is followed by the vocabulary so a checkpoint
can be evaluated without the original corpus. Keys always appear in one
fixed order; optional keys are omitted when unset.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .data import Vocab
from .encoder import EncoderConfig
from .errors import ConfigError
from .heads import HEAD_KINDS
from .losses import LossWeights
from .prompt import PromptConfig


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 3e-6
    batch_size: int = 32
    max_epochs: int = 30
    early_stop_patience: int = 4
    loss_weights: LossWeights = field(default_factory=LossWeights)
    prompt: PromptConfig = field(default_factory=PromptConfig)
    num_layers: int = 4
    hidden_size: int = 64
    num_heads: int = 4
    ffn_size: int = 256
    max_seq_len: int = 64
    dropout: float = 0.1
    head_kind: str = "bilstm-ffn"
    lstm_hidden: int | None = None
    head_ffn_size: int | None = None
    optimizer: str = "adam"
    min_freq: int = 1
    rng_seed: int = 0
    train_path: str | None = None
    dev_path: str | None = None
    out_dir: str | None = None

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be positive, got {self.learning_rate}")
        for name in ("batch_size", "max_epochs", "early_stop_patience", "min_freq"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.head_kind not in HEAD_KINDS:
            raise ConfigError(f"head_kind must be one of {HEAD_KINDS}, got {self.head_kind!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigError(f"optimizer must be 'adam' or 'sgd', got {self.optimizer!r}")

    def encoder_config(self, vocab_size: int) -> EncoderConfig:
        return EncoderConfig(
            vocab_size=vocab_size,
            num_layers=self.num_layers,
            hidden_size=self.hidden_size,
            num_heads=self.num_heads,
            ffn_size=self.ffn_size,
            max_seq_len=self.max_seq_len,
            dropout=self.dropout,
        )


def _fmt(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def format_config(cfg: TrainConfig, include_paths: bool = False) -> str:
    """Canonical text form; parse_config() inverts it."""
    w = cfg.loss_weights
    p = cfg.prompt
    pairs = [
        ("learning_rate", _fmt(cfg.learning_rate)),
        ("batch_size", _fmt(cfg.batch_size)),
        ("max_epochs", _fmt(cfg.max_epochs)),
        ("early_stop_patience", _fmt(cfg.early_stop_patience)),
        ("loss_weight_main", _fmt(w.main)),
        ("loss_weight_auxi1", _fmt(w.auxi1)),
        ("loss_weight_auxi2", _fmt(w.auxi2)),
        ("prompt_length", _fmt(p.length)),
        ("prompt_form", p.form),
        ("prompt_init", p.init),
        ("prompt_token_ids", ",".join(str(i) for i in p.token_ids) if p.token_ids else None),
        ("tuning_strategy", p.tuning),
        ("num_layers", _fmt(cfg.num_layers)),
        ("hidden_size", _fmt(cfg.hidden_size)),
        ("num_heads", _fmt(cfg.num_heads)),
        ("ffn_size", _fmt(cfg.ffn_size)),
        ("max_seq_len", _fmt(cfg.max_seq_len)),
        ("dropout", _fmt(cfg.dropout)),
        ("head_kind", cfg.head_kind),
        ("lstm_hidden", None if cfg.lstm_hidden is None else _fmt(cfg.lstm_hidden)),
        ("head_ffn_size", None if cfg.head_ffn_size is None else _fmt(cfg.head_ffn_size)),
        ("optimizer", cfg.optimizer),
        ("min_freq", _fmt(cfg.min_freq)),
        ("rng_seed", _fmt(cfg.rng_seed)),
    ]
    if include_paths:
        pairs += [
            ("train_path", cfg.train_path),
            ("dev_path", cfg.dev_path),
            ("out_dir", cfg.out_dir),
        ]
    return "\n".join(f"{k} = {v}" for k, v in pairs if v is not None) + "\n"


_INT_KEYS = {
    "batch_size", "max_epochs", "early_stop_patience", "prompt_length",
    "num_layers", "hidden_size", "num_heads", "ffn_size", "max_seq_len",
    "lstm_hidden", "head_ffn_size", "min_freq", "rng_seed",
}
_FLOAT_KEYS = {
    "learning_rate", "loss_weight_main", "loss_weight_auxi1", "loss_weight_auxi2",
    "dropout",
}
_STR_KEYS = {
    "prompt_form", "prompt_init", "prompt_token_ids", "tuning_strategy",
    "head_kind", "optimizer", "train_path", "dev_path", "out_dir",
}
KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS


def _parse_pairs(text: str, allow_prefix: str | None = None) -> dict[str, str]:
    pairs: dict[str, str] = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        key, sep, value = stripped.partition(" = ")
        if not sep:
            raise ConfigError(f"config line {line_no} is not 'key = value': {line!r}")
        if key in pairs:
            raise ConfigError(f"duplicate config key {key!r}")
        if key not in KNOWN_KEYS and not (allow_prefix and key.startswith(allow_prefix)):
            raise ConfigError(f"unknown config key {key!r}")
        pairs[key] = value
    return pairs


def _build_config(pairs: dict[str, str]) -> TrainConfig:
    values: dict = {}
    for key, raw in pairs.items():
        if key in _INT_KEYS:
            try:
                values[key] = int(raw)
            except ValueError:
                raise ConfigError(f"key {key!r} needs an integer, got {raw!r}") from None
        elif key in _FLOAT_KEYS:
            try:
                values[key] = float(raw)
            except ValueError:
                raise ConfigError(f"key {key!r} needs a number, got {raw!r}") from None
        else:
            values[key] = raw

    defaults = TrainConfig()
    weights = LossWeights(
        main=values.pop("loss_weight_main", defaults.loss_weights.main),
        auxi1=values.pop("loss_weight_auxi1", defaults.loss_weights.auxi1),
        auxi2=values.pop("loss_weight_auxi2", defaults.loss_weights.auxi2),
    )
    token_ids = None
    raw_ids = values.pop("prompt_token_ids", None)
    if raw_ids:
        try:
            token_ids = tuple(int(t) for t in raw_ids.split(","))
        except ValueError:
            raise ConfigError(f"prompt_token_ids must be comma-separated ints, got {raw_ids!r}") from None
    prompt = PromptConfig(
        length=values.pop("prompt_length", defaults.prompt.length),
        form=values.pop("prompt_form", defaults.prompt.form),
        init=values.pop("prompt_init", defaults.prompt.init),
        token_ids=token_ids,
        tuning=values.pop("tuning_strategy", defaults.prompt.tuning),
    )
    return TrainConfig(loss_weights=weights, prompt=prompt, **values)


def parse_config(text: str) -> TrainConfig:
    return _build_config(_parse_pairs(text))


def load_config_file(path) -> TrainConfig:
    try:
        with open(path, encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from None
    return parse_config(text)


def format_checkpoint_header(cfg: TrainConfig, vocab: Vocab) -> str:
    """Config followed by the vocabulary, one 'vocab.<id> = <token>' line per token."""
    cfg = replace(cfg, train_path=None, dev_path=None, out_dir=None)
    lines = [format_config(cfg).rstrip("\n")]
    lines += [f"vocab.{i} = {tok}" for i, tok in enumerate(vocab.tokens)]
    return "\n".join(lines) + "\n"


def parse_checkpoint_header(text: str) -> tuple[TrainConfig, Vocab]:
    pairs = _parse_pairs(text, allow_prefix="vocab.")
    vocab_pairs = {k: v for k, v in pairs.items() if k.startswith("vocab.")}
    tokens = [None] * len(vocab_pairs)
    for key, tok in vocab_pairs.items():
        try:
            index = int(key.split(".", 1)[1])
            tokens[index] = tok
        except (ValueError, IndexError):
            raise ConfigError(f"bad vocab entry {key!r}") from None
    if any(t is None for t in tokens):
        raise ConfigError("vocab ids in checkpoint header are not contiguous")
    cfg = _build_config({k: v for k, v in pairs.items() if not k.startswith("vocab.")})
    return cfg, Vocab.from_tokens(tokens)
