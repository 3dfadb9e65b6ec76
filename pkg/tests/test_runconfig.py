"""The flat key-value config format and checkpoint headers."""

import pytest

from dpmn.data import build_vocab, generate_synthetic_corpus
from dpmn.errors import ConfigError
from dpmn.losses import LossWeights
from dpmn.prompt import PromptConfig
from dpmn.runconfig import (
    TrainConfig,
    format_checkpoint_header,
    format_config,
    load_config_file,
    parse_checkpoint_header,
    parse_config,
)


def test_defaults_match_published_training_recipe():
    cfg = TrainConfig()
    assert cfg.learning_rate == 3e-6
    assert cfg.batch_size == 32
    assert cfg.max_epochs == 30
    assert cfg.early_stop_patience == 4
    assert cfg.loss_weights.as_tuple() == (0.4, 0.3, 0.3)


def test_format_parse_round_trip():
    cfg = TrainConfig(
        learning_rate=1e-3,
        batch_size=8,
        max_epochs=5,
        loss_weights=LossWeights(0.5, 0.25, 0.25),
        prompt=PromptConfig(length=2, form="light", init="token", token_ids=(3, 4),
                            tuning="fixed-lm"),
        hidden_size=16,
        num_heads=2,
        lstm_hidden=8,
        rng_seed=11,
    )
    assert parse_config(format_config(cfg)) == cfg


def test_serialization_is_canonical():
    cfg = TrainConfig()
    assert format_config(cfg) == format_config(cfg)
    assert format_config(cfg).startswith("learning_rate = 3e-06\n")


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="mystery"):
        parse_config("mystery = 3\n")


def test_bad_value_types_rejected():
    with pytest.raises(ConfigError, match="batch_size"):
        parse_config("batch_size = many\n")
    with pytest.raises(ConfigError, match="learning_rate"):
        parse_config("learning_rate = fast\n")
    with pytest.raises(ConfigError, match="key = value"):
        parse_config("batch_size: 3\n")
    with pytest.raises(ConfigError, match="duplicate"):
        parse_config("batch_size = 3\nbatch_size = 4\n")


def test_weight_sum_violation_rejected_at_load():
    text = "loss_weight_main = 0.5\nloss_weight_auxi1 = 0.3\nloss_weight_auxi2 = 0.3\n"
    with pytest.raises(ConfigError, match="sum"):
        parse_config(text)


def test_invalid_enum_values_rejected():
    with pytest.raises(ConfigError):
        parse_config("prompt_form = wide\n")
    with pytest.raises(ConfigError):
        parse_config("head_kind = mlp\n")
    with pytest.raises(ConfigError):
        parse_config("optimizer = lbfgs\n")


def test_comments_and_blank_lines_ignored():
    cfg = parse_config("# a comment\n\nbatch_size = 4\n")
    assert cfg.batch_size == 4


def test_load_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("rng_seed = 9\nmax_epochs = 2\n", encoding="utf-8")
    cfg = load_config_file(path)
    assert cfg.rng_seed == 9 and cfg.max_epochs == 2
    with pytest.raises(ConfigError, match="cannot read"):
        load_config_file(tmp_path / "absent.cfg")


def test_checkpoint_header_round_trips_vocab():
    vocab = build_vocab(generate_synthetic_corpus(20, seed=0))
    cfg = TrainConfig(hidden_size=16, num_heads=2, train_path="ignored.tsv")
    header = format_checkpoint_header(cfg, vocab)
    parsed_cfg, parsed_vocab = parse_checkpoint_header(header)
    assert parsed_vocab.tokens == vocab.tokens
    assert parsed_cfg.hidden_size == 16
    assert parsed_cfg.train_path is None  # paths never enter checkpoints


def test_validation_of_basic_invariants():
    with pytest.raises(ConfigError):
        TrainConfig(learning_rate=0.0)
    with pytest.raises(ConfigError):
        TrainConfig(batch_size=0)
    with pytest.raises(ConfigError):
        TrainConfig(early_stop_patience=0)
