"""Decision-theoretic summaries of posterior samples of clusterings."""

from .partition import ContingencyTable, LossKind, Partition, canonicalize, contingency, loss
from .epl import (
    GreedyConfig,
    OptResult,
    PartitionSample,
    exhaustive_minimize,
    expected_loss,
    greedy_minimize,
)

__all__ = [
    "ContingencyTable",
    "GreedyConfig",
    "LossKind",
    "OptResult",
    "Partition",
    "PartitionSample",
    "canonicalize",
    "contingency",
    "exhaustive_minimize",
    "expected_loss",
    "greedy_minimize",
    "loss",
]
