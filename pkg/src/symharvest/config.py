"""Run configuration: flat key = value files with typed coercion.

One file drives a whole pipeline run (split fractions, seeds, embedding
provider, zero-shot thresholds, training hyperparameters, service knobs).
Unknown keys are rejected loudly; silent typos in experiment configs have
burned enough people.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .classifier import TrainConfig


@dataclass
class RunConfig:
    train_frac: float = 0.7
    seed: int = 42
    provider: str = "hashed"  # "hashed" or "remote"
    endpoint: str = ""
    embed_dim: int = 512
    ngram_max: int = 2
    zsl_threshold: float = 1.0
    zsl_k: int = 3
    epsilon: float = 0.01
    dsd_epochs: int = 10
    dpd_epochs: int = 20
    batch_size: int = 32
    max_seq_len: int = 30
    learning_rate: float = 0.1
    predict_threshold: float = 0.5
    dpd_ensemble_size: int = 1
    rules_enabled: bool = True
    rules_closure: bool = False
    weak_recall_floor: float = 0.1
    strong_recall_floor: float = 0.5
    duplicate_rate: float = 0.05

    def __post_init__(self):
        if not 0.0 < self.train_frac < 1.0:
            raise ValueError("train_frac must lie strictly between 0 and 1")
        if self.provider not in ("hashed", "remote"):
            raise ValueError(f"unknown provider: {self.provider!r}")
        if not 0.0 <= self.duplicate_rate < 1.0:
            raise ValueError("duplicate_rate must lie in [0, 1)")
        if self.dpd_ensemble_size < 1:
            raise ValueError("dpd_ensemble_size must be >= 1")

    def dsd_train_config(self, seed: int | None = None) -> TrainConfig:
        return TrainConfig(
            epochs=self.dsd_epochs,
            batch_size=self.batch_size,
            max_seq_len=self.max_seq_len,
            learning_rate=self.learning_rate,
            seed=self.seed if seed is None else seed,
        )

    def dpd_train_config(self, seed: int | None = None) -> TrainConfig:
        return TrainConfig(
            epochs=self.dpd_epochs,
            batch_size=self.batch_size,
            max_seq_len=self.max_seq_len,
            learning_rate=self.learning_rate,
            seed=self.seed if seed is None else seed,
        )


_BOOL_STRINGS = {"true": True, "yes": True, "1": True,
                 "false": False, "no": False, "0": False}


def _coerce(raw: str, target_type):
    if target_type is bool:
        try:
            return _BOOL_STRINGS[raw.lower()]
        except KeyError:
            raise ValueError(f"not a boolean: {raw!r}") from None
    return target_type(raw)


def parse_config(text: str) -> RunConfig:
    """Parse `key = value` lines; # starts a comment, blank lines ignored."""
    types = {f.name: f.type for f in fields(RunConfig)}
    # dataclass field types arrive as strings under future annotations
    py_types = {"float": float, "int": int, "str": str, "bool": bool}
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key, raw = key.strip(), raw.strip()
        if not sep or not key:
            raise ValueError(f"line {lineno}: expected key = value, got {line!r}")
        if key not in types:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        target = py_types[types[key]] if isinstance(types[key], str) else types[key]
        values[key] = _coerce(raw, target)
    return RunConfig(**values)


def load_run_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def make_provider(cfg: RunConfig):
    from .embeddings import HashedNgramEmbedder, RemoteEmbedder

    if cfg.provider == "hashed":
        return HashedNgramEmbedder(dim=cfg.embed_dim, n_max=cfg.ngram_max)
    return RemoteEmbedder(endpoint=cfg.endpoint or None, dim=cfg.embed_dim)
