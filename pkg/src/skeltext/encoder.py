"""Shared table encoder: fuse each linearized cell, then contextualize."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .data import LinearizedCell, LinearizedTable, Vocabulary
from .nn import Embedding, Linear, Module, TransformerEncoder


@dataclass
class EncoderOutput:
    """Hidden vector per cell plus the parallel token strings for copy addressing."""

    hidden: Tensor
    cell_tokens: list[str]

    def __post_init__(self):
        if self.hidden.shape[0] != len(self.cell_tokens):
            raise ValueError(
                f"{self.hidden.shape[0]} hidden vectors for {len(self.cell_tokens)} cells"
            )

    def __len__(self) -> int:
        return len(self.cell_tokens)


class TableEncoder(Module):
    """Projects (token, key, fwd, bwd) tuples to model width and runs self-attention.

    No global sequence-position encoding is added: the cells behave as a set,
    and attribute-internal order enters only through the two position fields.
    """

    def __init__(
        self,
        rng: np.random.Generator,
        vocab: Vocabulary,
        key_vocab: Vocabulary,
        token_dim: int,
        key_dim: int,
        pos_dim: int,
        pos_clamp: int,
        d_model: int,
        d_hidden: int,
        n_heads: int,
        n_layers: int,
    ):
        self.vocab = vocab
        self.key_vocab = key_vocab
        self.pos_clamp = pos_clamp
        self.tok_emb = Embedding(rng, len(vocab), token_dim)
        self.key_emb = Embedding(rng, len(key_vocab), key_dim)
        self.fwd_emb = Embedding(rng, pos_clamp + 1, pos_dim)
        self.bwd_emb = Embedding(rng, pos_clamp + 1, pos_dim)
        self.fuse = Linear(rng, token_dim + key_dim + 2 * pos_dim, d_model)
        self.encoder = TransformerEncoder(rng, d_model, d_hidden, n_heads, n_layers)

    def _cell_ids(self, cells: LinearizedTable):
        tok = np.array([self.vocab.id_of(c.token) for c in cells], dtype=np.int64)
        key = np.array([self.key_vocab.id_of(c.key) for c in cells], dtype=np.int64)
        fwd = np.array([min(c.fwd_pos, self.pos_clamp) for c in cells], dtype=np.int64)
        bwd = np.array([min(c.bwd_pos, self.pos_clamp) for c in cells], dtype=np.int64)
        return tok, key, fwd, bwd

    def embed_cells(self, cells: LinearizedTable) -> Tensor:
        """Fused per-cell vectors: relu(W_f [token; key; fwd; bwd] + b_f)."""
        tok, key, fwd, bwd = self._cell_ids(cells)
        fused = ag.concat(
            [self.tok_emb(tok), self.key_emb(key), self.fwd_emb(fwd), self.bwd_emb(bwd)],
            axis=1,
        )
        return self.fuse(fused).relu()

    def embed_cell(self, cell: LinearizedCell) -> Tensor:
        return self.embed_cells([cell])[0]

    def __call__(self, cells: LinearizedTable) -> EncoderOutput:
        if not cells:
            raise ValueError("encode_table needs at least the EOS cell")
        hidden = self.encoder(self.embed_cells(cells))
        return EncoderOutput(hidden, [c.token for c in cells])
