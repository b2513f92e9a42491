"""Python access to the frgen C++ core."""

from ._frgen import (
    ConfigError,
    FrClassifier,
    Generator,
    RecordError,
    combined_reward,
    fr_distance,
    fr_reward,
    hybrid_loss,
    load_config,
    load_panco,
    rl_loss,
    rouge,
    run_cli,
    tokenize,
    toy_corpus,
    toy_fr_labels,
    toy_taxonomy,
)

__all__ = [
    "ConfigError",
    "FrClassifier",
    "Generator",
    "RecordError",
    "combined_reward",
    "fr_distance",
    "fr_reward",
    "hybrid_loss",
    "load_config",
    "load_panco",
    "rl_loss",
    "rouge",
    "run_cli",
    "tokenize",
    "toy_corpus",
    "toy_fr_labels",
    "toy_taxonomy",
]
