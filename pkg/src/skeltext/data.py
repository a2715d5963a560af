"""Tables, corpora, tokenization, vocabularies, and table linearization."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass
from typing import IO, Iterable

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
BOS_TOKEN = "<bos>"
EOS_TOKEN = "<eos>"
PLH_TOKEN = "<plh>"

# Reserved ids are frozen so checkpoints stay portable across vocab rebuilds.
RESERVED_TOKENS = (PAD_TOKEN, UNK_TOKEN, BOS_TOKEN, EOS_TOKEN, PLH_TOKEN)
PAD_ID, UNK_ID, BOS_ID, EOS_ID, PLH_ID = range(5)


class CorpusError(ValueError):
    """Raised for malformed corpus files; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def tokenize(text: str) -> list[str]:
    """Split text into maximal runs of non-whitespace, preserving order."""
    return text.split()


def is_numeric_token(token: str) -> bool:
    """Tokens containing a digit count as numeric (dates, counts, years)."""
    return any(ch.isdigit() for ch in token)


@dataclass(frozen=True)
class Attribute:
    """One key/value pair of a table; the value is an ordered token list."""

    key: str
    value_tokens: tuple[str, ...]

    def __post_init__(self):
        if not self.key or any(ch.isspace() for ch in self.key):
            raise ValueError(f"attribute key must be non-empty without whitespace, got {self.key!r}")
        if not self.value_tokens:
            raise ValueError(f"attribute {self.key!r} has an empty value")
        object.__setattr__(self, "value_tokens", tuple(self.value_tokens))


@dataclass(frozen=True)
class Table:
    """An ordered list of attributes. Order is meaningful downstream."""

    attributes: tuple[Attribute, ...]

    def __post_init__(self):
        if not self.attributes:
            raise ValueError("a table needs at least one attribute")
        object.__setattr__(self, "attributes", tuple(self.attributes))

    def value_token_set(self) -> frozenset[str]:
        return frozenset(t for a in self.attributes for t in a.value_tokens)

    def all_value_tokens(self) -> list[str]:
        return [t for a in self.attributes for t in a.value_tokens]


@dataclass(frozen=True)
class Example:
    table: Table
    reference: tuple[str, ...]
    skeleton: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "reference", tuple(self.reference))
        if self.skeleton is not None:
            object.__setattr__(self, "skeleton", tuple(self.skeleton))

    def require_reference(self) -> tuple[str, ...]:
        if not self.reference:
            raise ValueError("training example has an empty reference")
        return self.reference


Corpus = list[Example]


@dataclass(frozen=True)
class LinearizedCell:
    """4-tuple view of one value token: (token, key, fwd position, bwd position).

    Positions count from 1 at each end of the owning value, so within an
    attribute of length l every cell satisfies fwd_pos + bwd_pos == l + 1.
    The clamp for embedding-table bounds happens at lookup time, not here.
    """

    token: str
    key: str
    fwd_pos: int
    bwd_pos: int

    def __post_init__(self):
        if self.fwd_pos < 1 or self.bwd_pos < 1:
            raise ValueError(f"positions must be >= 1, got ({self.fwd_pos}, {self.bwd_pos})")


EOS_CELL = LinearizedCell(EOS_TOKEN, EOS_TOKEN, 1, 1)

LinearizedTable = list[LinearizedCell]


def linearize_table(table: Table) -> LinearizedTable:
    """Flatten a table into cells, attribute by attribute, plus the EOS cell."""
    cells: list[LinearizedCell] = []
    for attr in table.attributes:
        length = len(attr.value_tokens)
        for j, tok in enumerate(attr.value_tokens, start=1):
            cells.append(LinearizedCell(tok, attr.key, j, length - j + 1))
    cells.append(EOS_CELL)
    return cells


class Vocabulary:
    """Bidirectional token<->id map with fixed reserved ids 0..4."""

    def __init__(self, tokens: Iterable[str]):
        self.id_to_token: list[str] = list(RESERVED_TOKENS)
        seen = set(self.id_to_token)
        for tok in tokens:
            if tok in seen:
                continue
            seen.add(tok)
            self.id_to_token.append(tok)
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def id_of(self, token: str) -> int:
        """Id of a token, falling back to UNK."""
        return self.token_to_id.get(token, UNK_ID)

    def token_of(self, idx: int) -> str:
        return self.id_to_token[idx]

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.id_of(t) for t in tokens]

    def to_json(self) -> list[str]:
        return list(self.id_to_token)

    @classmethod
    def from_json(cls, id_to_token: list[str]) -> "Vocabulary":
        if tuple(id_to_token[:5]) != RESERVED_TOKENS:
            raise ValueError("vocabulary file does not start with the reserved tokens")
        return cls(id_to_token[5:])


def build_vocabulary(corpus: Corpus, cap: int = 50_000) -> Vocabulary:
    """Keep the (cap - 5) most frequent tokens from table values and references.

    Frequency ties break toward the token seen first in corpus order
    (table values of an example before its reference text).
    """
    if cap < len(RESERVED_TOKENS):
        raise ValueError(f"cap must be >= {len(RESERVED_TOKENS)}, got {cap}")
    counts: Counter[str] = Counter()
    first_seen: dict[str, int] = {}

    def see(tok: str):
        counts[tok] += 1
        if tok not in first_seen:
            first_seen[tok] = len(first_seen)

    for ex in corpus:
        for attr in ex.table.attributes:
            for tok in attr.value_tokens:
                see(tok)
        for tok in ex.reference:
            see(tok)
    for tok in RESERVED_TOKENS:
        counts.pop(tok, None)
    ranked = sorted(counts, key=lambda t: (-counts[t], first_seen[t]))
    return Vocabulary(ranked[: cap - len(RESERVED_TOKENS)])


def build_key_vocabulary(corpus: Corpus) -> Vocabulary:
    """Vocabulary over attribute keys (EOS key included via reserved ids)."""
    seen: dict[str, None] = {}
    for ex in corpus:
        for attr in ex.table.attributes:
            seen.setdefault(attr.key, None)
    return Vocabulary(seen)


# See stopwords.py for the shipped default list.
class StopWordList:
    """Case-insensitive stop-word membership; numeric tokens never match."""

    def __init__(self, words: Iterable[str]):
        self._words = frozenset(w.lower() for w in words)

    def __contains__(self, token: str) -> bool:
        if is_numeric_token(token):
            return False
        return token.lower() in self._words

    def __len__(self) -> int:
        return len(self._words)

    @classmethod
    def from_file(cls, path) -> "StopWordList":
        with open(path, encoding="utf-8") as fh:
            return cls(line.strip() for line in fh if line.strip())


def _parse_line(obj: dict, line_no: int) -> Example:
    if not isinstance(obj, dict):
        raise CorpusError("expected a JSON object", line_no)
    if "table" not in obj:
        raise CorpusError('missing "table" field', line_no)
    if "text" not in obj:
        raise CorpusError('missing "text" field', line_no)
    raw_table = obj["table"]
    if not isinstance(raw_table, list) or not raw_table:
        raise CorpusError("table must be a non-empty list of attributes", line_no)
    attrs = []
    for k, entry in enumerate(raw_table):
        if not isinstance(entry, dict) or "key" not in entry or "value" not in entry:
            raise CorpusError(f'table entry {k} needs "key" and "value"', line_no)
        value_tokens = tokenize(str(entry["value"]))
        if not value_tokens:
            raise CorpusError(f"table entry {k} ({entry['key']!r}) has an empty value", line_no)
        try:
            attrs.append(Attribute(str(entry["key"]), tuple(value_tokens)))
        except ValueError as err:
            raise CorpusError(str(err), line_no) from err
    skeleton = None
    if "skeleton" in obj:
        if not isinstance(obj["skeleton"], list):
            raise CorpusError('"skeleton" must be a list of tokens', line_no)
        skeleton = tuple(str(t) for t in obj["skeleton"])
    return Example(Table(tuple(attrs)), tuple(tokenize(str(obj["text"]))), skeleton)


def parse_corpus(stream: IO[str] | Iterable[str]) -> Corpus:
    """Parse JSON Lines ({"table": [{"key","value"}...], "text": ...}) into Examples."""
    corpus: Corpus = []
    for line_no, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as err:
            raise CorpusError(f"malformed JSON ({err.msg})", line_no) from err
        corpus.append(_parse_line(obj, line_no))
    return corpus


def load_corpus(path) -> Corpus:
    with open(path, encoding="utf-8") as fh:
        return parse_corpus(fh)


def example_to_json(ex: Example) -> dict:
    obj: dict = {
        "table": [
            {"key": a.key, "value": " ".join(a.value_tokens)} for a in ex.table.attributes
        ],
        "text": " ".join(ex.reference),
    }
    if ex.skeleton is not None:
        obj["skeleton"] = list(ex.skeleton)
    return obj


def write_corpus(corpus: Corpus, fh: IO[str]) -> None:
    for ex in corpus:
        fh.write(json.dumps(example_to_json(ex), ensure_ascii=False) + "\n")


def save_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_corpus(corpus, fh)
