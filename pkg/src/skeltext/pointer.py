"""Stage 1: autoregressive pointer network that copies table tokens into a skeleton."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .data import BOS_TOKEN, EOS_TOKEN, Example, Table, Vocabulary, linearize_table
from .encoder import EncoderOutput, TableEncoder
from .nn import Embedding, Linear, Module, TransformerDecoder


class DataIntegrityError(ValueError):
    """A training skeleton references a token the table does not contain."""


def copy_pool(cell_tokens: list[str]) -> tuple[list[str], np.ndarray]:
    """Distinct table tokens (first-occurrence order) and the cell->token pooling matrix."""
    distinct: list[str] = []
    index: dict[str, int] = {}
    for tok in cell_tokens:
        if tok not in index:
            index[tok] = len(distinct)
            distinct.append(tok)
    pool = np.zeros((len(cell_tokens), len(distinct)))
    for i, tok in enumerate(cell_tokens):
        pool[i, index[tok]] = 1.0
    return distinct, pool


def copy_distribution(alpha: np.ndarray, cell_tokens: list[str]) -> dict[str, float]:
    """Pool per-cell attention into per-token copy probability.

    Identical tokens at several cells sum their attention mass, so the
    support is exactly the set of distinct table tokens (EOS included).
    """
    if len(alpha) != len(cell_tokens):
        raise ValueError(f"{len(alpha)} attention weights for {len(cell_tokens)} cells")
    dist: dict[str, float] = {}
    for weight, tok in zip(alpha, cell_tokens):
        dist[tok] = dist.get(tok, 0.0) + float(weight)
    return dist


@dataclass
class BeamHypothesis:
    tokens: tuple[str, ...]
    score: float
    finished: bool


@dataclass
class SkeletonPrediction:
    tokens: list[str]
    score: float
    finished: bool  # False means truncation at max_len was reported


class SkeletonPointer(Module):
    """Table encoder + causal transformer decoder + copy attention over cells."""

    def __init__(
        self,
        rng: np.random.Generator,
        vocab: Vocabulary,
        key_vocab: Vocabulary,
        *,
        token_dim: int,
        key_dim: int,
        pos_dim: int,
        pos_clamp: int,
        d_model: int,
        d_hidden: int,
        n_heads: int,
        n_layers: int,
        max_prefix_len: int = 128,
    ):
        self.vocab = vocab
        self.d_model = d_model
        self.max_prefix_len = max_prefix_len
        self.encoder = TableEncoder(
            rng, vocab, key_vocab, token_dim, key_dim, pos_dim, pos_clamp,
            d_model, d_hidden, n_heads, n_layers,
        )
        # Previously selected tokens reuse the encoder-side embedding table,
        # projected up to decoder width, plus learned absolute positions.
        self.in_proj = Linear(rng, token_dim, d_model)
        self.pos_emb = Embedding(rng, max_prefix_len, d_model)
        self.decoder = TransformerDecoder(rng, d_model, d_hidden, n_heads, n_layers)
        self.wq = Linear(rng, d_model, d_model, bias=False)
        self.wk = Linear(rng, d_model, d_model, bias=False)

    def encode(self, table: Table) -> EncoderOutput:
        return self.encoder(linearize_table(table))

    def decoder_states(self, prefix: list[str], enc: EncoderOutput) -> Tensor:
        """Causal decoder hidden states r_0..r_{T-1} for the selected-token prefix."""
        if len(prefix) > self.max_prefix_len:
            raise ValueError(f"prefix of {len(prefix)} exceeds max length {self.max_prefix_len}")
        ids = np.array([self.vocab.id_of(t) for t in prefix], dtype=np.int64)
        x = self.in_proj(self.encoder.tok_emb(ids)) + self.pos_emb(np.arange(len(prefix)))
        return self.decoder(x, enc.hidden, causal=True)

    def pointer_attention(self, r: Tensor, enc: EncoderOutput) -> Tensor:
        """Attention over cells: softmax of (W_q r) . (W_k h_i) / sqrt(d_r)."""
        logits = (self.wq(r) @ self.wk(enc.hidden).transpose()) / np.sqrt(self.d_model)
        return ag.softmax(logits, axis=-1)

    def copy_log_probs(self, prefix: list[str], enc: EncoderOutput) -> tuple[Tensor, list[str]]:
        """Per-step log P_copy over distinct table tokens (mass pooled across cells)."""
        r = self.decoder_states(prefix, enc)
        attn = self.pointer_attention(r, enc)
        distinct, pool = copy_pool(enc.cell_tokens)
        return (attn @ Tensor(pool)).log(), distinct

    def loss(self, example: Example) -> Tensor:
        """Teacher-forced negative log-likelihood of skeleton + EOS."""
        if example.skeleton is None:
            raise DataIntegrityError("example has no skeleton annotation")
        enc = self.encode(example.table)
        table_tokens = set(enc.cell_tokens)
        for tok in example.skeleton:
            if tok not in table_tokens:
                raise DataIntegrityError(f"skeleton token {tok!r} does not occur in the table")
        prefix = [BOS_TOKEN, *example.skeleton]
        targets = [*example.skeleton, EOS_TOKEN]
        logp, distinct = self.copy_log_probs(prefix, enc)
        idx = {t: i for i, t in enumerate(distinct)}
        target_ids = np.array([idx[t] for t in targets], dtype=np.int64)
        return -logp[np.arange(len(targets)), target_ids].sum()

    def _step_log_probs(self, prefix: list[str], enc: EncoderOutput) -> tuple[np.ndarray, list[str]]:
        # Plain-array path for decoding: tokens whose copy mass underflowed to
        # zero score -inf and are simply never selected.
        r = self.decoder_states(prefix, enc)
        attn = self.pointer_attention(r, enc)
        distinct, pool = copy_pool(enc.cell_tokens)
        with np.errstate(divide="ignore"):
            return np.log(attn.data[-1] @ pool), distinct

    def beam_search(
        self,
        table: Table,
        beam_width: int,
        max_len: int = 64,
        length_normalize: bool = False,
    ) -> SkeletonPrediction:
        """Length-unnormalized beam search over copy distributions.

        Hypotheses end when they select EOS. If nothing finishes within
        max_len the best open prefix is returned with finished=False.
        """
        if beam_width < 1:
            raise ValueError("beam width must be >= 1")
        with ag.no_grad():
            enc = self.encode(table)
            live: list[BeamHypothesis] = [BeamHypothesis((), 0.0, False)]
            done: list[BeamHypothesis] = []
            exhausted: list[BeamHypothesis] = []
            for _ in range(max_len + 1):  # +1: the final EOS step
                if not live:
                    break
                # Scores only fall with extension, so once the best finished
                # hypothesis beats every live one the search is settled.
                if done and not length_normalize:
                    if max(h.score for h in done) >= max(h.score for h in live):
                        break
                expansions: list[BeamHypothesis] = []
                for hyp in live:
                    logp, distinct = self._step_log_probs([BOS_TOKEN, *hyp.tokens], enc)
                    order = np.argsort(-logp)[:beam_width]
                    for j in order:
                        tok = distinct[j]
                        score = hyp.score + float(logp[j])
                        if tok == EOS_TOKEN:
                            done.append(BeamHypothesis(hyp.tokens, score, True))
                        elif len(hyp.tokens) < max_len:
                            expansions.append(BeamHypothesis(hyp.tokens + (tok,), score, False))
                    if len(hyp.tokens) >= max_len:
                        exhausted.append(hyp)
                expansions.sort(key=lambda h: -h.score)
                live = expansions[:beam_width]

        def rank(h: BeamHypothesis) -> float:
            return h.score / (len(h.tokens) + 1) if length_normalize else h.score

        if done:
            best = max(done, key=rank)
            return SkeletonPrediction(list(best.tokens), best.score, True)
        best = max(live + exhausted, key=rank)
        return SkeletonPrediction(list(best.tokens), best.score, False)

    def greedy(self, table: Table, max_len: int = 64) -> SkeletonPrediction:
        return self.beam_search(table, beam_width=1, max_len=max_len)
