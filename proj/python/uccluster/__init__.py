"""Weakly supervised clustering from unique-class-count bag labels.

The heavy lifting lives in the compiled extension; this package re-exports
its surface.
"""

from ._core import (
    ContractError,
    EmptyBagError,
    FormatError,
    KdeConfig,
    NumericError,
    ShapeError,
    TrainConfig,
    UccModel,
    clustering_accuracy,
    gen_synthetic_pool,
    kde_pool,
    kde_pool_backward,
    kmeans,
    load_checkpoint,
    make_model,
    train_on_pool,
)

__all__ = [
    "ContractError",
    "EmptyBagError",
    "FormatError",
    "KdeConfig",
    "NumericError",
    "ShapeError",
    "TrainConfig",
    "UccModel",
    "clustering_accuracy",
    "gen_synthetic_pool",
    "kde_pool",
    "kde_pool_backward",
    "kmeans",
    "load_checkpoint",
    "make_model",
    "train_on_pool",
]
