"""OLID-style corpora: TSV parsing, tokenization, vocabulary, batching.

Labels are hierarchical across three tasks. Task A is NOT/OFF; task B
(TIN/UNT) may only be present when A is OFF; task C (IND/GRP/OTH) may only
be present when B is TIN. "NULL" or an empty field marks an absent label.

The tokenizer is deliberately simple: lowercase, split on whitespace and
punctuation boundaries, with @-mentions and URLs mapped to dedicated
tokens. It stands in for a subword tokenizer behind the same interface.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, HierarchyError, ParseError

PAD_ID = 0
UNK_ID = 1
CLS_ID = 2
RESERVED = ("[PAD]", "[UNK]", "[CLS]")

ABSENT = -1

LABELS_A = ("NOT", "OFF")
LABELS_B = ("TIN", "UNT")
LABELS_C = ("IND", "GRP", "OTH")
TASK_CLASSES = {"a": len(LABELS_A), "b": len(LABELS_B), "c": len(LABELS_C)}

USER_TOKEN = "<user>"
URL_TOKEN = "<url>"
_USER_RE = re.compile(r"@\w+")
_URL_RE = re.compile(r"https?://\S+|www\.\S+|\bURL\b")
_TOKEN_RE = re.compile(r"<user>|<url>|\w+|[^\w\s]")

_REQUIRED_COLUMNS = ("id", "tweet", "subtask_a", "subtask_b", "subtask_c")


@dataclass(frozen=True)
class Example:
    """One labeled text; label_b/label_c are None when absent."""

    id: str
    text: str
    label_a: str
    label_b: str | None = None
    label_c: str | None = None

    def __post_init__(self):
        if not self.text:
            raise ContractError(f"example {self.id!r} has empty text")
        if self.label_a not in LABELS_A:
            raise ContractError(f"example {self.id!r}: bad task-A label {self.label_a!r}")
        if self.label_b is not None and self.label_b not in LABELS_B:
            raise ContractError(f"example {self.id!r}: bad task-B label {self.label_b!r}")
        if self.label_c is not None and self.label_c not in LABELS_C:
            raise ContractError(f"example {self.id!r}: bad task-C label {self.label_c!r}")
        if self.label_b is not None and self.label_a != "OFF":
            raise ContractError(
                f"example {self.id!r}: task-B label requires label_a == OFF"
            )
        if self.label_c is not None and self.label_b != "TIN":
            raise ContractError(
                f"example {self.id!r}: task-C label requires label_b == TIN"
            )


def _parse_label(raw: str, allowed: tuple, line_no: int, column: str) -> str | None:
    value = raw.strip()
    if value == "" or value == "NULL":
        return None
    if value not in allowed:
        raise ParseError(line_no, f"unknown {column} label {value!r}")
    return value


def parse_tsv(path) -> list[Example]:
    """Parse a header-bearing TSV corpus; rejects malformed or inconsistent rows."""
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines:
        raise ParseError(1, "empty file, expected a header row")
    header = lines[0].split("\t")
    columns = {}
    for name in _REQUIRED_COLUMNS:
        if name not in header:
            raise ParseError(1, f"missing column {name!r} in header {header}")
        columns[name] = header.index(name)

    examples = []
    for line_no, line in enumerate(lines[1:], start=2):
        if line == "":
            continue
        fields = line.split("\t")
        if len(fields) != len(header):
            raise ParseError(
                line_no, f"expected {len(header)} fields, got {len(fields)}"
            )
        text = fields[columns["tweet"]]
        raw_a = fields[columns["subtask_a"]].strip()
        if raw_a not in LABELS_A:
            raise ParseError(line_no, f"unknown subtask_a label {raw_a!r}")
        label_b = _parse_label(fields[columns["subtask_b"]], LABELS_B, line_no, "subtask_b")
        label_c = _parse_label(fields[columns["subtask_c"]], LABELS_C, line_no, "subtask_c")
        if label_b is not None and raw_a != "OFF":
            raise HierarchyError(line_no, f"label_b={label_b} with label_a={raw_a}")
        if label_c is not None and label_b != "TIN":
            raise HierarchyError(line_no, f"label_c={label_c} with label_b={label_b}")
        if not text:
            raise ParseError(line_no, "empty tweet text")
        examples.append(
            Example(
                id=fields[columns["id"]],
                text=text,
                label_a=raw_a,
                label_b=label_b,
                label_c=label_c,
            )
        )
    return examples


def example_to_row(example: Example) -> str:
    """Inverse of parse_tsv for one example, using the canonical column order."""
    return "\t".join(
        (
            example.id,
            example.text,
            example.label_a,
            example.label_b or "NULL",
            example.label_c or "NULL",
        )
    )


def write_tsv(path, examples) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\t".join(_REQUIRED_COLUMNS) + "\n")
        for ex in examples:
            f.write(example_to_row(ex) + "\n")


def tokenize_words(text: str) -> list[str]:
    """Normalized surface tokens, without the [CLS] marker."""
    text = _URL_RE.sub(f" {URL_TOKEN} ", text)
    text = _USER_RE.sub(f" {USER_TOKEN} ", text)
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Vocab:
    """token -> id map with PAD/UNK/CLS reserved at ids 0/1/2."""

    token_to_id: dict[str, int]
    tokens: tuple[str, ...] = field(default=())

    @property
    def size(self) -> int:
        return len(self.tokens)

    def id_of(self, token: str) -> int:
        return self.token_to_id.get(token, UNK_ID)

    @staticmethod
    def from_tokens(tokens) -> "Vocab":
        tokens = tuple(tokens)
        if tokens[: len(RESERVED)] != RESERVED:
            raise ContractError("vocab token list must start with the reserved tokens")
        return Vocab({t: i for i, t in enumerate(tokens)}, tokens)


def build_vocab(examples, min_freq: int = 1) -> Vocab:
    """Frequency-ordered vocabulary (ties broken lexicographically)."""
    if min_freq < 1:
        raise ContractError(f"min_freq must be >= 1, got {min_freq}")
    if not examples:
        raise ContractError("cannot build a vocabulary from an empty corpus")
    counts: dict[str, int] = {}
    for ex in examples:
        for tok in tokenize_words(ex.text):
            counts[tok] = counts.get(tok, 0) + 1
    kept = sorted(
        (t for t, n in counts.items() if n >= min_freq),
        key=lambda t: (-counts[t], t),
    )
    return Vocab.from_tokens(RESERVED + tuple(kept))


def tokenize(text: str, vocab: Vocab) -> list[int]:
    """Token ids with [CLS] prepended; unknown tokens map to [UNK]."""
    return [CLS_ID] + [vocab.id_of(t) for t in tokenize_words(text)]


def _encode_label(value: str | None, allowed: tuple) -> int:
    return ABSENT if value is None else allowed.index(value)


@dataclass(frozen=True)
class Batch:
    """Padded token ids plus masks, lengths, and per-task label arrays."""

    token_ids: np.ndarray      # [batch, T] int64, PAD-padded
    mask: np.ndarray           # [batch, T] float64, 1.0 at real positions
    lengths: np.ndarray        # [batch] int64
    labels_a: np.ndarray       # [batch] int64
    labels_b: np.ndarray       # [batch] int64, ABSENT where missing
    labels_c: np.ndarray       # [batch] int64, ABSENT where missing

    def __post_init__(self):
        if not np.array_equal(self.mask.sum(axis=1).astype(np.int64), self.lengths):
            raise ContractError("mask and lengths disagree")

    def __len__(self):
        return self.token_ids.shape[0]

    def labels(self, task: str) -> np.ndarray:
        return {"a": self.labels_a, "b": self.labels_b, "c": self.labels_c}[task]


def make_batches(examples, vocab: Vocab, batch_size: int, max_len: int,
                 shuffle_seed: int | None = None) -> list[Batch]:
    """Chunk examples into padded batches.

    Token lists (including [CLS]) are truncated from the right to `max_len`,
    so the caller reserves prompt positions by passing max_seq_len - p_n.
    Shuffling is deterministic given the seed; None keeps corpus order.
    """
    if batch_size < 1:
        raise ContractError(f"batch_size must be >= 1, got {batch_size}")
    if max_len < 1:
        raise ContractError(f"max_len must be >= 1, got {max_len}")
    examples = list(examples)
    if not examples:
        raise ContractError("cannot batch an empty corpus")
    if shuffle_seed is not None:
        order = np.random.Generator(np.random.PCG64(shuffle_seed)).permutation(len(examples))
        examples = [examples[i] for i in order]

    batches = []
    for start in range(0, len(examples), batch_size):
        chunk = examples[start:start + batch_size]
        id_lists = [tokenize(ex.text, vocab)[:max_len] for ex in chunk]
        width = max(len(ids) for ids in id_lists)
        token_ids = np.full((len(chunk), width), PAD_ID, dtype=np.int64)
        mask = np.zeros((len(chunk), width))
        for i, ids in enumerate(id_lists):
            token_ids[i, : len(ids)] = ids
            mask[i, : len(ids)] = 1.0
        batches.append(
            Batch(
                token_ids=token_ids,
                mask=mask,
                lengths=np.array([len(ids) for ids in id_lists], dtype=np.int64),
                labels_a=np.array([_encode_label(ex.label_a, LABELS_A) for ex in chunk]),
                labels_b=np.array([_encode_label(ex.label_b, LABELS_B) for ex in chunk]),
                labels_c=np.array([_encode_label(ex.label_c, LABELS_C) for ex in chunk]),
            )
        )
    return batches


_BENIGN = (
    "sunny", "walk", "park", "coffee", "friend", "music", "happy", "weekend",
    "garden", "book", "smile", "lovely", "morning", "dinner", "share",
)
_OFFENSIVE = (
    "idiot", "fool", "trash", "loser", "clown", "pathetic", "awful", "stupid",
)
_GROUP_CUES = ("they", "everyone", "crowd")
_OTHER_CUES = ("that", "thing", "show")


def generate_synthetic_corpus(n: int, seed: int, off_fraction: float = 0.5,
                              targeted_fraction: float = 0.6,
                              target_mix: tuple = (0.5, 0.3, 0.2)) -> list[Example]:
    """Deterministic corpus whose labels are recoverable from surface tokens.

    Offensive texts contain words from a disjoint lexicon, targeted insults
    mention a user, and the target type has its own cue word, so task A is
    linearly separable and tasks B/C carry hierarchy-consistent signal.
    """
    if n < 1:
        raise ContractError("corpus size must be >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    mix = np.asarray(target_mix, dtype=float)
    mix = mix / mix.sum()
    examples = []
    for i in range(n):
        base = list(rng.choice(_BENIGN, size=rng.integers(3, 6)))
        if rng.random() >= off_fraction:
            examples.append(Example(f"syn{i:04d}", " ".join(base), "NOT"))
            continue
        insults = list(rng.choice(_OFFENSIVE, size=rng.integers(1, 3)))
        if rng.random() >= targeted_fraction:
            words = base[:2] + insults
            examples.append(Example(f"syn{i:04d}", " ".join(words), "OFF", "UNT"))
            continue
        target = ("IND", "GRP", "OTH")[int(rng.choice(3, p=mix))]
        cue = {
            "IND": ["@USER", "you"],
            "GRP": ["@USER", str(rng.choice(_GROUP_CUES))],
            "OTH": ["@USER", str(rng.choice(_OTHER_CUES))],
        }[target]
        words = cue + base[:2] + insults
        examples.append(Example(f"syn{i:04d}", " ".join(words), "OFF", "TIN", target))
    return examples
