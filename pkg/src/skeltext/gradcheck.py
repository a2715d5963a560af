"""Finite-difference verification of every differentiable layer and both models."""

from __future__ import annotations

import numpy as np

from . import autograd as ag
from .autograd import Tensor
from .data import Attribute, Example, Table, Vocabulary, linearize_table
from .nn import (
    Embedding,
    LayerNorm,
    Linear,
    Module,
    MultiHeadAttention,
    TransformerDecoder,
    TransformerEncoder,
    finite_difference_check,
)
from .oracle import build_edit_supervision, edit_loss_from_supervision
from .training import RunConfig, build_editor, build_pointer

TOLERANCE = 1e-4


class _Wrap(Module):
    def __init__(self, **layers):
        for name, layer in layers.items():
            setattr(self, name, layer)


def _toy_vocabs() -> tuple[Vocabulary, Vocabulary]:
    vocab = Vocabulary(["Alda", "Fenwick", "Lunden", "optics", "born", "in", "."])
    key_vocab = Vocabulary(["Name_ID", "Place_of_birth", "Field_of_work"])
    return vocab, key_vocab


def _toy_example() -> Example:
    table = Table(
        (
            Attribute("Name_ID", ("Alda", "Fenwick")),
            Attribute("Place_of_birth", ("Lunden",)),
            Attribute("Field_of_work", ("optics",)),
        )
    )
    reference = ("Alda", "Fenwick", "born", "in", "Lunden", ".")
    return Example(table, reference, ("Alda", "Fenwick", "Lunden"))


def _toy_config() -> RunConfig:
    return RunConfig(
        d_model=8, d_hidden=12, n_heads=2, n_layers=2,
        token_dim=6, key_dim=4, pos_dim=3, k_max=4,
        pointer_epochs=1, editor_epochs=1, seed=7,
    )


def run_gradcheck(seed: int = 0, samples_per_param: int = 12) -> list[tuple[str, float]]:
    """Run the whole suite; returns (check name, max relative error) pairs."""
    rng = np.random.Generator(np.random.PCG64(seed))
    results: list[tuple[str, float]] = []

    def check(name: str, loss_fn, params) -> None:
        err = finite_difference_check(loss_fn, params, rng, samples_per_param)
        results.append((name, err))

    x = Tensor(rng.normal(size=(5, 6)))
    linear = _Wrap(layer=Linear(rng, 6, 4))
    w_lin = Tensor(rng.normal(size=(5, 4)))
    check("linear", lambda: (linear.layer(x) * w_lin).sum(), linear.parameters())

    emb = _Wrap(layer=Embedding(rng, 9, 5))
    ids = np.array([0, 3, 3, 8])
    w_emb = Tensor(rng.normal(size=(4, 5)))
    check("embedding", lambda: (emb.layer(ids) * w_emb).sum(), emb.parameters())

    ln = _Wrap(layer=LayerNorm(6))
    ln_x = Tensor(rng.normal(size=(4, 6)))
    w_ln = Tensor(rng.normal(size=(4, 6)))
    check("layer_norm", lambda: (ln.layer(ln_x) * w_ln).sum(), ln.parameters())

    attn = _Wrap(layer=MultiHeadAttention(rng, 8, 2))
    q_in = Tensor(rng.normal(size=(4, 8)))
    m_in = Tensor(rng.normal(size=(6, 8)))
    w_attn = Tensor(rng.normal(size=(4, 8)))
    check("multi_head_attention", lambda: (attn.layer(q_in, m_in) * w_attn).sum(), attn.parameters())

    enc_block = _Wrap(layer=TransformerEncoder(rng, 8, 12, 2, 2))
    enc_x = Tensor(rng.normal(size=(5, 8)))
    w_enc = Tensor(rng.normal(size=(5, 8)))
    check("transformer_encoder_2layer", lambda: (enc_block.layer(enc_x) * w_enc).sum(), enc_block.parameters())

    dec_block = _Wrap(layer=TransformerDecoder(rng, 8, 12, 2, 2))
    dec_x = Tensor(rng.normal(size=(4, 8)))
    dec_m = Tensor(rng.normal(size=(5, 8)))
    w_dec = Tensor(rng.normal(size=(4, 8)))
    check(
        "transformer_decoder_causal",
        lambda: (dec_block.layer(dec_x, dec_m, causal=True) * w_dec).sum(),
        dec_block.parameters(),
    )

    ce_head = _Wrap(layer=Linear(rng, 6, 5))
    ce_x = Tensor(rng.normal(size=(3, 6)))
    ce_ids = np.array([0, 4, 2])
    check("cross_entropy", lambda: ag.cross_entropy(ce_head.layer(ce_x), ce_ids), ce_head.parameters())

    sm_head = _Wrap(layer=Linear(rng, 6, 6))
    sm_w = Tensor(rng.normal(size=(3, 6)))
    check(
        "softmax",
        lambda: (ag.softmax(sm_head.layer(ce_x), axis=-1) * sm_w).sum(),
        sm_head.parameters(),
    )

    cfg = _toy_config()
    vocab, key_vocab = _toy_vocabs()
    example = _toy_example()

    pointer = build_pointer(cfg, vocab, key_vocab)
    check("pointer_model_loss", lambda: pointer.loss(example), pointer.parameters())

    table_enc = pointer.encoder
    cells = linearize_table(example.table)
    w_cells = Tensor(rng.normal(size=(len(cells), cfg.d_model)))
    check(
        "table_encoder",
        lambda: (table_enc(cells).hidden * w_cells).sum(),
        table_enc.parameters(),
    )

    editor = build_editor(cfg, vocab, key_vocab)
    enc_out = editor.encode(example.table)
    sup = build_edit_supervision(
        editor, enc_out, example.skeleton, example.reference,
        np.random.Generator(np.random.PCG64(11)),
    )
    check(
        "editor_model_loss",
        lambda: edit_loss_from_supervision(editor, editor.encode(example.table), sup).total,
        editor.parameters(),
    )

    empty = finite_difference_check(lambda: Tensor(0.0), [], rng)
    results.append(("zero_parameter_fragment", empty))
    return results


def gradcheck_passed(results: list[tuple[str, float]], tol: float = TOLERANCE) -> bool:
    return all(err < tol for _, err in results)
