"""Partitions, contingency tables and contingency-table losses.

All entropies use the natural log and the convention ``0 log 0 = 0``.
Binder's loss is the number of disagreeing item pairs divided by ``N**2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class LossKind(str, enum.Enum):
    BINDER = "binder"
    VI = "vi"
    NVI = "nvi"
    NID = "nid"

    @classmethod
    def parse(cls, value: "str | LossKind") -> "LossKind":
        if isinstance(value, LossKind):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            names = ", ".join(k.value for k in cls)
            raise ValueError(f"unknown loss {value!r} (expected one of {names})") from None


def canonical_labels(labels) -> np.ndarray:
    """Relabel a 1-D integer array by order of first appearance, 0-based."""
    arr = np.asarray(labels)
    if arr.ndim != 1:
        raise ValueError("labels must be one-dimensional")
    if arr.size == 0:
        raise ValueError("empty partition")
    _, first, inverse = np.unique(arr, return_index=True, return_inverse=True)
    rank = np.empty(first.size, dtype=np.int64)
    rank[np.argsort(first, kind="stable")] = np.arange(first.size)
    return rank[inverse.reshape(-1)]


def canonical_rows(matrix) -> np.ndarray:
    """Row-wise :func:`canonical_labels` for an (S, N) label matrix."""
    mat = np.asarray(matrix)
    if mat.ndim != 2:
        raise ValueError("label matrix must be two-dimensional")
    if mat.shape[0] == 0 or mat.shape[1] == 0:
        raise ValueError("empty partition")
    out = np.empty(mat.shape, dtype=np.int64)
    for s in range(mat.shape[0]):
        out[s] = canonical_labels(mat[s])
    return out


class Partition:
    """A set partition of ``N`` items in restricted-growth form.

    Labels are stored as a read-only array with values ``1..K`` whose first
    occurrences are increasing. Two partitions compare equal iff they describe
    the same set partition.
    """

    __slots__ = ("_z", "_k")

    def __init__(self, labels):
        z = canonical_labels(labels)
        z.setflags(write=False)
        self._z = z
        self._k = int(z.max()) + 1

    @classmethod
    def _from_canonical(cls, zero_based: np.ndarray) -> "Partition":
        obj = cls.__new__(cls)
        z = np.array(zero_based, dtype=np.int64)
        z.setflags(write=False)
        obj._z = z
        obj._k = int(z.max()) + 1
        return obj

    @property
    def labels(self) -> np.ndarray:
        """Cluster ids ``1..K``."""
        return self._z + 1

    @property
    def zero_based(self) -> np.ndarray:
        return self._z

    @property
    def n(self) -> int:
        return self._z.size

    @property
    def k(self) -> int:
        return self._k

    @property
    def cluster_sizes(self) -> np.ndarray:
        return np.bincount(self._z, minlength=self._k)

    def tolist(self) -> list[int]:
        return (self._z + 1).tolist()

    def __len__(self) -> int:
        return self._z.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self._z.shape == other._z.shape and bool(np.array_equal(self._z, other._z))

    def __hash__(self) -> int:
        return hash(self._z.tobytes())

    def __lt__(self, other: "Partition") -> bool:
        return self.tolist() < other.tolist()

    def __repr__(self) -> str:
        body = self.tolist()
        if len(body) > 20:
            return f"Partition(N={self.n}, K={self.k})"
        return f"Partition({body})"


def canonicalize(labels: Sequence[int]) -> Partition:
    return Partition(labels)


def _as_partition(p) -> Partition:
    return p if isinstance(p, Partition) else Partition(p)


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray

    @property
    def row_sums(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_sums(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def contingency(a, z) -> ContingencyTable:
    a, z = _as_partition(a), _as_partition(z)
    if a.n != z.n:
        raise ValueError("partition length mismatch")
    flat = np.bincount(a.zero_based * z.k + z.zero_based, minlength=a.k * z.k)
    counts = flat.reshape(a.k, z.k)
    counts.setflags(write=False)
    return ContingencyTable(counts)


def xlogx(x):
    """Elementwise ``x * ln(x)`` with ``0 ln 0 = 0``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log(x[pos])
    return out


def xlogx_table(n: int) -> np.ndarray:
    """Lookup table of ``k ln k`` for ``k = 0..n``."""
    return xlogx(np.arange(n + 1))


# Nonzero entropies of partitions of N items are at least ln(N)/N.
_ENTROPY_FLOOR = 1e-12


def _entropy(xn, x, n):
    h = (xn - x) / n
    return np.where(h > _ENTROPY_FLOOR, h, 0.0)


def loss_from_stats(kind: LossKind, n: int, xa, xc, xac, sqa, sqc, sqac):
    """Evaluate a loss from contingency-table summaries.

    ``x*`` are sums of ``m ln m`` over cluster sizes (or cells) and ``sq*``
    sums of ``m**2``; ``a`` and ``c`` are the two marginals, ``ac`` the cells.
    Broadcasts over array arguments.
    """
    if kind is LossKind.BINDER:
        return (sqa + sqc - 2 * sqac) / (2.0 * n * n)
    vi = np.maximum((xa + xc - 2.0 * xac) / n, 0.0)
    if kind is LossKind.VI:
        return vi
    xn = _xlogx_scalar(n)
    h_ac = _entropy(xn, xac, n)
    if kind is LossKind.NVI:
        with np.errstate(divide="ignore", invalid="ignore"):
            nvi = np.where(h_ac > 0, vi / np.where(h_ac > 0, h_ac, 1.0), 0.0)
        return np.minimum(nvi, 1.0)
    h_a = _entropy(xn, xa, n)
    h_c = _entropy(xn, xc, n)
    hi = np.maximum(h_a, h_c)
    lo = np.minimum(h_a, h_c)
    with np.errstate(divide="ignore", invalid="ignore"):
        nid = np.where(hi > 0, (h_ac - lo) / np.where(hi > 0, hi, 1.0), 0.0)
    return np.clip(nid, 0.0, 1.0)


def _xlogx_scalar(x: int) -> float:
    return x * math.log(x) if x > 0 else 0.0


def _fsum_xlogx(values: np.ndarray) -> float:
    return math.fsum(_xlogx_scalar(int(v)) for v in values.ravel() if v > 0)


def table_stats(table: ContingencyTable) -> tuple:
    """Correctly rounded entropy sums and exact square sums of a table."""
    counts = table.counts
    rows, cols = counts.sum(axis=1), counts.sum(axis=0)
    return (
        _fsum_xlogx(rows),
        _fsum_xlogx(cols),
        _fsum_xlogx(counts.ravel()),
        int((rows.astype(np.int64) ** 2).sum()),
        int((cols.astype(np.int64) ** 2).sum()),
        int((counts.astype(np.int64) ** 2).sum()),
    )


def loss(a, z, kind: "LossKind | str") -> float:
    """Distance between two partitions under one of the contingency losses.

    Sums of ``m ln m`` are computed with :func:`math.fsum`, so the result is
    exactly symmetric, exactly label-permutation invariant and exactly zero
    for identical partitions.
    """
    kind = LossKind.parse(kind)
    table = contingency(a, z)
    value = loss_from_stats(kind, table.total, *table_stats(table))
    return float(value)


def binder_disagreements(a, z) -> int:
    """Number of unordered item pairs clustered together in exactly one of a, z."""
    table = contingency(a, z)
    counts = table.counts.astype(np.int64)
    sqa = int((table.row_sums.astype(np.int64) ** 2).sum())
    sqz = int((table.col_sums.astype(np.int64) ** 2).sum())
    return (sqa + sqz - 2 * int((counts**2).sum())) // 2
