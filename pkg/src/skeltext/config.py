"""Run configuration: one JSON file, flag overrides win, env seed override."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

SEED_ENV_VAR = "SANA_SEED"


@dataclass
class RunConfig:
    # model dimensions (desk defaults; published_preset() restores the published setup)
    d_model: int = 64
    d_hidden: int = 128
    n_heads: int = 2
    n_layers: int = 2
    token_dim: int = 48
    key_dim: int = 16
    pos_dim: int = 8
    pos_clamp: int = 30
    vocab_cap: int = 50_000
    # stage 2
    lambda_del: float = 1.0
    k_max: int = 8
    max_iter: int = 10
    max_state_len: int = 512
    tie_token_head: bool = False
    # stage 1 decoding
    beam_width: int = 5
    beam_length_normalize: bool = False
    max_skeleton_len: int = 64
    # optimization
    pointer_peak_lr: float = 2e-3
    pointer_warmup: int = 150
    pointer_epochs: int = 22
    editor_peak_lr: float = 1.5e-3
    editor_warmup: int = 200
    editor_epochs: int = 40
    batch_size: int = 8
    dropout: float = 0.0  # hook only; nonzero is rejected at this scale
    # metrics
    lambda_mix: float = 0.5
    seed: int = 0

    def validate(self) -> "RunConfig":
        positive = (
            "d_model", "d_hidden", "n_heads", "n_layers", "token_dim", "key_dim",
            "pos_dim", "pos_clamp", "vocab_cap", "k_max", "max_state_len",
            "beam_width", "max_skeleton_len", "pointer_warmup", "editor_warmup",
            "pointer_epochs", "editor_epochs", "batch_size",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"config field {name} must be positive")
        for name in ("pointer_peak_lr", "editor_peak_lr", "lambda_del"):
            if getattr(self, name) < 0:
                raise ValueError(f"config field {name} must be non-negative")
        if self.beam_width < 1:
            raise ValueError("beam_width must be >= 1")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if not 0.0 <= self.lambda_mix <= 1.0:
            raise ValueError("lambda_mix must lie in [0, 1]")
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if self.dropout != 0.0:
            raise ValueError("dropout is reserved; only 0.0 is supported")
        if self.vocab_cap < 5:
            raise ValueError("vocab_cap must leave room for the reserved ids")
        return self

    @classmethod
    def published_preset(cls) -> "RunConfig":
        """Published configuration: base transformer dims and schedules."""
        return cls(
            d_model=512,
            d_hidden=2048,
            n_heads=8,
            n_layers=6,
            token_dim=420,
            key_dim=80,
            pos_dim=5,
            vocab_cap=50_000,
            beam_width=5,
            lambda_del=1.0,
            pointer_peak_lr=3e-4,
            pointer_warmup=4_000,
            editor_peak_lr=5e-4,
            editor_warmup=10_000,
        )

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data).validate()

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        merged = self.to_dict()
        for key, value in overrides.items():
            if key not in merged:
                raise ValueError(f"unknown config field: {key}")
            merged[key] = value
        return RunConfig.from_dict(merged)


def parse_override(text: str) -> tuple[str, object]:
    """Parse a KEY=VALUE override; the value is read as JSON when possible."""
    if "=" not in text:
        raise ValueError(f"override {text!r} is not KEY=VALUE")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def resolve_config(
    config_path: str | None, overrides: list[str] | None = None, env: dict | None = None
) -> RunConfig:
    """File -> SANA_SEED env -> explicit overrides, later sources winning."""
    cfg = RunConfig.from_file(config_path) if config_path else RunConfig()
    env = os.environ if env is None else env
    if SEED_ENV_VAR in env:
        cfg = cfg.with_overrides({"seed": int(env[SEED_ENV_VAR])})
    merged: dict[str, object] = {}
    for item in overrides or []:
        key, value = parse_override(item)
        merged[key] = value
    if merged:
        cfg = cfg.with_overrides(merged)
    return cfg.validate()
