"""Shared test utilities: random fixtures and tiny model builders."""

from __future__ import annotations

import numpy as np

from skeltext.config import RunConfig
from skeltext.data import Attribute, Example, Table, Vocabulary
from skeltext.training import build_editor, build_pointer

WORDS = (
    "Alda Bram Cato Delia Edmund Falk Greta Hollis Lunden Varano Kestwick "
    "physicist sculptor botanist 1950 1961 14 March October won born the a in was ."
).split()

KEYS = ("Name_ID", "Place_of_birth", "Date_of_birth", "Occupation", "Award_received")


def random_table(rng: np.random.Generator, max_attrs: int = 4, max_value_len: int = 3) -> Table:
    n_attrs = int(rng.integers(1, max_attrs + 1))
    keys = list(rng.choice(len(KEYS), size=n_attrs, replace=False))
    attrs = []
    for k in keys:
        length = int(rng.integers(1, max_value_len + 1))
        value = tuple(WORDS[int(i)] for i in rng.integers(0, len(WORDS), size=length))
        attrs.append(Attribute(KEYS[int(k)], value))
    return Table(tuple(attrs))


def random_tokens(rng: np.random.Generator, max_len: int = 8, alphabet=WORDS) -> list[str]:
    length = int(rng.integers(0, max_len + 1))
    return [alphabet[int(i)] for i in rng.integers(0, len(alphabet), size=length)]


def tiny_config(**overrides) -> RunConfig:
    base = dict(
        d_model=16, d_hidden=24, n_heads=2, n_layers=1,
        token_dim=10, key_dim=6, pos_dim=4, k_max=4,
        pointer_epochs=1, editor_epochs=1, batch_size=4,
        pointer_warmup=10, editor_warmup=10, seed=0,
    )
    base.update(overrides)
    return RunConfig(**base).validate()


def tiny_vocabs() -> tuple[Vocabulary, Vocabulary]:
    return Vocabulary(WORDS), Vocabulary(KEYS)


def tiny_pointer(seed: int = 0, **config_overrides):
    cfg = tiny_config(seed=seed, **config_overrides)
    vocab, key_vocab = tiny_vocabs()
    return build_pointer(cfg, vocab, key_vocab), cfg


def tiny_editor(seed: int = 0, **config_overrides):
    cfg = tiny_config(seed=seed, **config_overrides)
    vocab, key_vocab = tiny_vocabs()
    return build_editor(cfg, vocab, key_vocab), cfg


def small_example(rng: np.random.Generator) -> Example:
    """Table plus a reference that overlaps its values (skeleton annotated later)."""
    table = random_table(rng)
    value_tokens = table.all_value_tokens()
    ref: list[str] = []
    for tok in value_tokens:
        if rng.uniform() < 0.3:
            ref.append(WORDS[int(rng.integers(0, len(WORDS)))])
        ref.append(tok)
    ref.append(".")
    return Example(table, tuple(ref))
