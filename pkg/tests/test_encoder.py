"""Table encoder: cell fusion and permutation-equivariant contextualization."""

from __future__ import annotations

import numpy as np
import pytest

from skeltext.data import Attribute, LinearizedCell, Table, linearize_table

from helpers import random_table, tiny_editor, tiny_pointer


def _encoder(seed: int = 0):
    model, _ = tiny_pointer(seed)
    return model.encoder


def test_embed_cell_zero_weights_zero_output():
    enc = _encoder()
    enc.fuse.weight.data[...] = 0.0
    enc.fuse.bias.data[...] = 0.0
    out = enc.embed_cell(LinearizedCell("Alda", "Name_ID", 1, 2))
    assert np.all(out.data == 0.0)


def test_embed_cell_negative_bias_clamped_by_relu():
    enc = _encoder()
    enc.fuse.weight.data[...] = 0.0
    enc.fuse.bias.data[...] = -1.0
    out = enc.embed_cell(LinearizedCell("Alda", "Name_ID", 1, 2))
    assert np.all(out.data == 0.0)


def test_embed_cell_sensitive_to_fwd_position_rows():
    enc = _encoder()
    enc.fwd_emb.weight.data[1, :] = 0.5
    enc.fwd_emb.weight.data[2, :] = -0.5
    a = enc.embed_cell(LinearizedCell("Alda", "Name_ID", 1, 2))
    b = enc.embed_cell(LinearizedCell("Alda", "Name_ID", 2, 1))
    assert not np.allclose(a.data, b.data)


def test_embed_cell_unknown_tokens_fall_back_to_unk():
    enc = _encoder()
    a = enc.embed_cell(LinearizedCell("definitely-oov-1", "Name_ID", 1, 1))
    b = enc.embed_cell(LinearizedCell("definitely-oov-2", "Name_ID", 1, 1))
    assert np.allclose(a.data, b.data)


def test_position_clamp_bounds_lookup():
    enc = _encoder()
    big = enc.embed_cell(LinearizedCell("Alda", "Name_ID", 500, 1))
    at_cap = enc.embed_cell(LinearizedCell("Alda", "Name_ID", enc.pos_clamp, 1))
    assert np.allclose(big.data, at_cap.data)


def test_encode_single_attribute_length():
    enc = _encoder()
    out = enc(linearize_table(Table((Attribute("K", ("x",)),))))
    assert len(out) == 2  # value cell + EOS
    assert out.hidden.shape == (2, 16)
    assert out.cell_tokens[-1] == "<eos>"


def test_encode_published_linearization_example():
    enc = _encoder()
    table = Table((Attribute("Name_ID", ("Thaila", "Ayala")),))
    out = enc(linearize_table(table))
    assert out.cell_tokens == ["Thaila", "Ayala", "<eos>"]
    assert out.hidden.shape[0] == 3


def test_encoder_output_shape_invariants_random():
    rng = np.random.default_rng(1)
    enc = _encoder()
    for _ in range(25):
        table = random_table(rng)
        cells = linearize_table(table)
        out = enc(cells)
        assert out.hidden.shape == (len(cells), 16)
        assert out.cell_tokens == [c.token for c in cells]


def test_permutation_equivariance_over_attributes():
    enc = _encoder(seed=3)
    a = Attribute("Name_ID", ("Alda", "Fenwick"))
    b = Attribute("Place_of_birth", ("Lunden",))
    c = Attribute("Occupation", ("physicist",))
    out1 = enc(linearize_table(Table((a, b, c))))
    out2 = enc(linearize_table(Table((c, a, b))))
    # cells: table1 -> [a0 a1 b0 c0 eos], table2 -> [c0 a0 a1 b0 eos]
    perm = [3, 0, 1, 2, 4]
    assert np.allclose(out2.hidden.data, out1.hidden.data[perm], atol=1e-10)


def test_gradients_reach_fusion_and_embeddings():
    model, _ = tiny_editor(seed=4)
    enc = model.encoder
    table = Table((Attribute("Name_ID", ("Alda",)), Attribute("Occupation", ("sculptor",))))
    out = enc(linearize_table(table))
    (out.hidden * out.hidden).sum().backward()
    assert np.abs(enc.fuse.weight.grad).max() > 0
    assert np.abs(enc.fuse.bias.grad).max() > 0
    tok_ids = [enc.vocab.id_of(t) for t in ("Alda", "sculptor", "<eos>")]
    for tid in tok_ids:
        assert np.abs(enc.tok_emb.weight.grad[tid]).max() > 0
    key_ids = [enc.key_vocab.id_of(k) for k in ("Name_ID", "Occupation", "<eos>")]
    for kid in key_ids:
        assert np.abs(enc.key_emb.weight.grad[kid]).max() > 0
    unused = enc.vocab.id_of("Varano")
    assert np.abs(enc.tok_emb.weight.grad[unused]).max() == 0


def test_encode_requires_cells():
    enc = _encoder()
    with pytest.raises(ValueError):
        enc([])
