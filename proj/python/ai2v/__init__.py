"""AI2V and I2V item-embedding recommenders (C++ core)."""

from ._ai2v import (
    Ai2vModel,
    Config,
    Corpus,
    DataError,
    I2vModel,
    UsageError,
    cosine,
    evaluate,
    hr_at_k,
    mrr_at_k,
    prepare,
    rank,
    recommend,
    train,
)

__all__ = [
    "Ai2vModel",
    "Config",
    "Corpus",
    "DataError",
    "I2vModel",
    "UsageError",
    "cosine",
    "evaluate",
    "hr_at_k",
    "mrr_at_k",
    "prepare",
    "rank",
    "recommend",
    "train",
]
