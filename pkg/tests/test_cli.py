"""CLI pipeline on a miniature corpus: commands, overrides, determinism."""

from __future__ import annotations

import json
import os

import pytest

from skeltext.cli import main
from skeltext.config import RunConfig, parse_override, resolve_config
from skeltext.data import load_corpus

TINY = [
    "--set", "d_model=16", "--set", "d_hidden=24", "--set", "n_heads=2",
    "--set", "n_layers=1", "--set", "token_dim=10", "--set", "key_dim=6",
    "--set", "pos_dim=4", "--set", "pointer_epochs=4", "--set", "editor_epochs=4",
    "--set", "pointer_warmup=20", "--set", "editor_warmup=20", "--set", "batch_size=5",
    "--set", "k_max=2", "--set", "max_skeleton_len=16",
]


def _read(path) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Run the whole CLI pipeline once on a 20-example corpus."""
    root = tmp_path_factory.mktemp("pipeline")
    corpus = str(root / "corpus.jsonl")
    annotated = str(root / "annotated.jsonl")
    pointer_dir = str(root / "pointer")
    editor_dir = str(root / "editor")
    assert main(["synth-corpus", "--n", "20", "--seed", "3", "--out", corpus]) == 0
    assert main(["annotate", "--corpus", corpus, "--out", annotated]) == 0
    assert main(["train-pointer", "--corpus", annotated, "--out-dir", pointer_dir, *TINY]) == 0
    assert main(["train-editor", "--corpus", annotated, "--out-dir", editor_dir, *TINY]) == 0
    return {
        "root": root,
        "corpus": corpus,
        "annotated": annotated,
        "pointer": pointer_dir,
        "editor": editor_dir,
    }


def test_synth_corpus_deterministic(tmp_path):
    out1, out2 = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
    assert main(["synth-corpus", "--n", "8", "--seed", "1", "--out", out1]) == 0
    assert main(["synth-corpus", "--n", "8", "--seed", "1", "--out", out2]) == 0
    assert _read(out1) == _read(out2)


def test_annotate_adds_skeleton_field(pipeline):
    corpus = load_corpus(pipeline["annotated"])
    assert len(corpus) == 20
    for ex in corpus:
        assert ex.skeleton is not None and len(ex.skeleton) > 0
    raw = _read(pipeline["annotated"]).splitlines()[0]
    assert "skeleton" in json.loads(raw)


def test_checkpoint_directory_layout(pipeline):
    for directory in (pipeline["pointer"], pipeline["editor"]):
        for name in ("manifest.json", "params.bin", "config.json", "vocab.json", "keys.json"):
            assert os.path.exists(os.path.join(directory, name)), name
        manifest = json.loads(_read(os.path.join(directory, "manifest.json")))
        assert all({"name", "shape", "dtype"} <= set(e) for e in manifest)
        size = sum(
            int(__import__("numpy").prod(e["shape"])) if e["shape"] else 1 for e in manifest
        )
        assert os.path.getsize(os.path.join(directory, "params.bin")) == 4 * size


def test_skeleton_command_writes_predictions(pipeline, tmp_path):
    out = str(tmp_path / "skeletons.jsonl")
    code = main(
        ["skeleton", "--checkpoint", pipeline["pointer"], "--corpus", pipeline["corpus"],
         "--out", out, "--beam-width", "2"]
    )
    assert code == 0
    corpus = load_corpus(out)
    assert len(corpus) == 20
    assert all(ex.skeleton is not None for ex in corpus)


def test_generate_with_oracle_skeleton_bypasses_pointer(pipeline, tmp_path):
    out = str(tmp_path / "gen.jsonl")
    code = main(
        ["generate", "--editor", pipeline["editor"], "--corpus", pipeline["annotated"],
         "--out", out, "--oracle-skeleton", "--max-iter", "3"]
    )
    assert code == 0
    lines = [json.loads(l) for l in _read(out).splitlines()]
    assert len(lines) == 20
    for obj in lines:
        assert set(obj) == {"text", "iterations", "termination"}
        assert obj["termination"] in ("fixed_point", "max_iterations")
        assert obj["iterations"] <= 3


def test_generate_requires_pointer_or_oracle(pipeline, tmp_path):
    out = str(tmp_path / "gen.jsonl")
    code = main(
        ["generate", "--editor", pipeline["editor"], "--corpus", pipeline["annotated"],
         "--out", out]
    )
    assert code == 1


def test_generate_with_pointer_checkpoint(pipeline, tmp_path):
    out = str(tmp_path / "gen2.jsonl")
    code = main(
        ["generate", "--editor", pipeline["editor"], "--pointer", pipeline["pointer"],
         "--corpus", pipeline["corpus"], "--out", out, "--beam-width", "2",
         "--max-iter", "2"]
    )
    assert code == 0
    assert len(_read(out).splitlines()) == 20


def test_generate_hard_constraint_flag_accepted(pipeline, tmp_path):
    out = str(tmp_path / "gen3.jsonl")
    code = main(
        ["generate", "--editor", pipeline["editor"], "--corpus", pipeline["annotated"],
         "--out", out, "--oracle-skeleton", "--no-hard-constraints", "--max-iter", "2"]
    )
    assert code == 0


def test_generate_deterministic_outputs(pipeline, tmp_path):
    a, b = str(tmp_path / "a.jsonl"), str(tmp_path / "b.jsonl")
    args = ["generate", "--editor", pipeline["editor"], "--corpus", pipeline["annotated"],
            "--oracle-skeleton", "--max-iter", "3"]
    assert main(args + ["--out", a]) == 0
    assert main(args + ["--out", b]) == 0
    assert _read(a) == _read(b)


def test_evaluate_command(pipeline, tmp_path, capsys):
    gen = str(tmp_path / "gen.jsonl")
    main(["generate", "--editor", pipeline["editor"], "--corpus", pipeline["annotated"],
          "--out", gen, "--oracle-skeleton", "--max-iter", "2"])
    capsys.readouterr()
    code = main(["evaluate", "--system", gen, "--gold", pipeline["corpus"]])
    out = capsys.readouterr().out
    assert code == 0
    report = json.loads(out)
    assert set(report) == {"bleu", "parent", "parent_t", "per_example"}
    assert 0 <= report["bleu"] <= 100
    for block in (report["parent"], report["parent_t"]):
        assert set(block) == {"precision", "recall", "f1"}


def test_evaluate_count_mismatch_fails(pipeline, tmp_path):
    bad = str(tmp_path / "bad.jsonl")
    with open(bad, "w") as fh:
        fh.write('{"text": "only one line"}\n')
    assert main(["evaluate", "--system", bad, "--gold", pipeline["corpus"]]) == 1


def test_train_is_deterministic_given_seed(pipeline, tmp_path):
    dir1 = str(tmp_path / "p1")
    dir2 = str(tmp_path / "p2")
    args = ["train-pointer", "--corpus", pipeline["annotated"], *TINY,
            "--set", "pointer_epochs=2"]
    assert main(args + ["--out-dir", dir1]) == 0
    assert main(args + ["--out-dir", dir2]) == 0
    with open(os.path.join(dir1, "params.bin"), "rb") as fh:
        bytes1 = fh.read()
    with open(os.path.join(dir2, "params.bin"), "rb") as fh:
        bytes2 = fh.read()
    assert bytes1 == bytes2
    assert _read(os.path.join(dir1, "manifest.json")) == _read(os.path.join(dir2, "manifest.json"))


def test_missing_checkpoint_is_clean_failure(tmp_path):
    out = str(tmp_path / "x.jsonl")
    corpus = str(tmp_path / "c.jsonl")
    main(["synth-corpus", "--n", "2", "--seed", "0", "--out", corpus])
    assert main(["skeleton", "--checkpoint", str(tmp_path / "nope"), "--corpus", corpus,
                 "--out", out]) == 1


def test_dimension_mismatch_against_checkpoint_fails(pipeline, tmp_path):
    # retrain with different dims into the same directory layout, then load
    # with a config claiming other dims
    import shutil

    broken = str(tmp_path / "broken")
    shutil.copytree(pipeline["pointer"], broken)
    cfg = RunConfig.from_file(os.path.join(broken, "config.json"))
    cfg.d_model = 32
    cfg.save(os.path.join(broken, "config.json"))
    out = str(tmp_path / "y.jsonl")
    assert main(["skeleton", "--checkpoint", broken, "--corpus", pipeline["corpus"],
                 "--out", out]) == 1


def test_no_hard_constraints_flag_is_live_end_to_end(tmp_path):
    # An untrained editor wants to edit aggressively, so constrained and
    # unconstrained decodes of the same corpus must diverge, and only the
    # constrained outputs are guaranteed to retain their skeletons.
    from skeltext.oracle import is_subsequence
    from skeltext.training import build_editor, build_vocabularies, save_model_dir

    from helpers import tiny_config

    corpus, ann = str(tmp_path / "c.jsonl"), str(tmp_path / "a.jsonl")
    assert main(["synth-corpus", "--n", "5", "--seed", "0", "--out", corpus]) == 0
    assert main(["annotate", "--corpus", corpus, "--out", ann]) == 0
    data = load_corpus(ann)
    cfg = tiny_config(seed=0, k_max=2)
    vocab, key_vocab = build_vocabularies(data, cfg)
    ckpt = str(tmp_path / "editor")
    save_model_dir(ckpt, build_editor(cfg, vocab, key_vocab), cfg)
    constrained = str(tmp_path / "on.jsonl")
    ablated = str(tmp_path / "off.jsonl")
    base = ["generate", "--editor", ckpt, "--corpus", ann, "--oracle-skeleton",
            "--max-iter", "2"]
    assert main(base + ["--out", constrained]) == 0
    assert main(base + ["--out", ablated, "--no-hard-constraints"]) == 0
    assert _read(constrained) != _read(ablated)
    for ex, line in zip(data, _read(constrained).splitlines()):
        assert is_subsequence(list(ex.skeleton), json.loads(line)["text"].split())


def test_gradcheck_command_exits_zero():
    assert main(["gradcheck", "--seed", "1"]) == 0


# -- config resolution ----------------------------------------------------------

def test_parse_override_json_values():
    assert parse_override("d_model=32") == ("d_model", 32)
    assert parse_override("editor_peak_lr=0.001") == ("editor_peak_lr", 0.001)
    assert parse_override("tie_token_head=true") == ("tie_token_head", True)
    with pytest.raises(ValueError):
        parse_override("no-equals-sign")


def test_resolve_config_precedence(tmp_path):
    path = str(tmp_path / "cfg.json")
    RunConfig(seed=1, d_model=32).save(path)
    cfg = resolve_config(path, [], env={})
    assert (cfg.seed, cfg.d_model) == (1, 32)
    cfg = resolve_config(path, [], env={"SANA_SEED": "7"})
    assert cfg.seed == 7
    cfg = resolve_config(path, ["seed=9"], env={"SANA_SEED": "7"})
    assert cfg.seed == 9  # explicit flags win over the environment


def test_resolve_config_rejects_unknown_field(tmp_path):
    with pytest.raises(ValueError):
        resolve_config(None, ["not_a_field=1"], env={})


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(beam_width=0).validate()
    with pytest.raises(ValueError):
        RunConfig(d_model=30, n_heads=4).validate()
    with pytest.raises(ValueError):
        RunConfig(dropout=0.5).validate()
    with pytest.raises(ValueError):
        RunConfig(lambda_mix=1.5).validate()


def test_published_preset_dimensions():
    cfg = RunConfig.published_preset()
    assert (cfg.d_model, cfg.d_hidden, cfg.n_heads, cfg.n_layers) == (512, 2048, 8, 6)
    assert (cfg.token_dim, cfg.key_dim, cfg.pos_dim) == (420, 80, 5)
    assert (cfg.pointer_peak_lr, cfg.pointer_warmup) == (3e-4, 4_000)
    assert (cfg.editor_peak_lr, cfg.editor_warmup) == (5e-4, 10_000)
    assert cfg.beam_width == 5
    assert cfg.vocab_cap == 50_000
    cfg.validate()
