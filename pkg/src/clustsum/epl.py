"""Expected posterior loss over a partition sample and its minimisation.

The greedy search moves one item at a time. For every draw it keeps the
contingency table between the current candidate and that draw, so scoring
the reassignment of an item to each cluster costs O(S * K) regardless of N.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .partition import LossKind, Partition, canonical_labels, canonical_rows, loss_from_stats

THREADS_ENV = "CLUSTSUM_THREADS"

# Relative improvement a move must achieve to be accepted.
_RTOL = 1e-12


class ExhaustiveRefused(ValueError):
    pass


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def xlogx_lookup(n: int) -> np.ndarray:
    """``k ln k`` for ``k = 0..n`` computed with :func:`math.log`."""
    return np.array([k * math.log(k) if k > 0 else 0.0 for k in range(n + 1)])


class PartitionSample:
    """S posterior draws of partitions of N items, with optional weights.

    ``weights`` may be any positive numbers (e.g. multiplicities); they are
    normalised to sum to one. Draws are stored canonically, 0-based.
    """

    def __init__(self, draws, weights=None):
        if isinstance(draws, PartitionSample):
            draws = draws.labels
        if isinstance(draws, (list, tuple)) and draws and isinstance(draws[0], Partition):
            n = {p.n for p in draws}
            if len(n) != 1:
                raise ValueError("partition length mismatch")
            mat = np.stack([p.zero_based for p in draws])
        else:
            mat = np.asarray(draws)
            if mat.ndim == 1:
                mat = mat[None, :]
            if mat.ndim != 2 or mat.shape[0] == 0:
                raise ValueError("empty sample")
            mat = canonical_rows(mat)
        mat.setflags(write=False)
        self.labels = mat
        if weights is None:
            raw = np.ones(mat.shape[0])
        else:
            raw = np.asarray(weights, dtype=np.float64).reshape(-1)
            if raw.shape[0] != mat.shape[0]:
                raise ValueError("one weight per draw required")
            if not np.all(np.isfinite(raw)) or np.any(raw <= 0):
                raise ValueError("weights must be positive")
        raw.setflags(write=False)
        self.raw_weights = raw
        self.weights = raw / raw.sum()

    @property
    def n_draws(self) -> int:
        return self.labels.shape[0]

    @property
    def n_items(self) -> int:
        return self.labels.shape[1]

    def __len__(self) -> int:
        return self.n_draws

    def __getitem__(self, s: int) -> Partition:
        return Partition._from_canonical(self.labels[s])

    def __iter__(self):
        for s in range(self.n_draws):
            yield self[s]

    @cached_property
    def draw_k(self) -> np.ndarray:
        return self.labels.max(axis=1) + 1

    @cached_property
    def _labels32(self) -> np.ndarray:
        return self.labels.astype(np.int32)

    @cached_property
    def _xl(self) -> np.ndarray:
        return xlogx_lookup(self.n_items)

    @cached_property
    def _marginal_stats(self) -> tuple[np.ndarray, np.ndarray]:
        kc = int(self.draw_k.max())
        s, n = self.labels.shape
        sizes = np.bincount(
            (np.arange(s)[:, None] * kc + self.labels).ravel(), minlength=s * kc
        ).reshape(s, kc)
        xc = np.array([math.fsum(row) for row in self._xl[sizes].tolist()])
        sqc = (sizes.astype(np.int64) ** 2).sum(axis=1)
        return xc, sqc

    def deduplicate(self) -> tuple["PartitionSample", np.ndarray]:
        """Merge identical draws, summing weights.

        Returns the reduced sample and, for every original draw, the index of
        its representative.
        """
        uniq, first, inverse = np.unique(
            self.labels, axis=0, return_index=True, return_inverse=True
        )
        inverse = inverse.reshape(-1)
        # keep first-appearance order so results do not depend on row sorting
        order = np.argsort(first, kind="stable")
        remap = np.empty_like(order)
        remap[order] = np.arange(order.size)
        mass = np.bincount(remap[inverse], weights=self.raw_weights, minlength=order.size)
        return PartitionSample(uniq[order], mass), remap[inverse]


def _as_partition(z) -> Partition:
    return z if isinstance(z, Partition) else Partition(z)


def _check_n(z: Partition, sample: PartitionSample) -> None:
    if z.n != sample.n_items:
        raise ValueError("partition length mismatch")


def per_draw_losses(z, sample: PartitionSample, kind) -> np.ndarray:
    """``loss(z, c_s)`` for every draw ``c_s``, vectorised over draws.

    Identical to :func:`clustsum.partition.loss` draw by draw; cost is
    O(S * N) for building the tables plus O(S * K_z * K_c) for the sums.
    """
    kind = LossKind.parse(kind)
    z = _as_partition(z)
    _check_n(z, sample)
    s, n = sample.labels.shape
    kz = z.k
    kc = int(sample.draw_k.max())
    # one table per draw keeps the working set in cache, so cost stays linear in N
    offset = z.zero_based.astype(np.int32) * kc
    labels = sample._labels32
    cells = np.empty((s, kz * kc), dtype=np.int64)
    for d in range(s):
        cells[d] = np.bincount(offset + labels[d], minlength=kz * kc)
    xl = sample._xl
    sizes = z.cluster_sizes
    xa = math.fsum(xl[sizes].tolist())
    sqa = int((sizes.astype(np.int64) ** 2).sum())
    xc, sqc = sample._marginal_stats
    if kind is LossKind.BINDER:
        xac = np.zeros(s)
    else:
        xac = np.array([math.fsum(row) for row in xl[cells].tolist()])
    sqac = (cells.astype(np.int64) ** 2).sum(axis=1)
    return np.asarray(loss_from_stats(kind, n, xa, xc, xac, sqa, sqc, sqac), dtype=np.float64)


def expected_loss(z, sample: PartitionSample, kind) -> float:
    """Posterior expected loss ``sum_s w_s loss(z, c_s)``."""
    return float(np.dot(sample.weights, per_draw_losses(z, sample, kind)))


@dataclass(frozen=True)
class GreedyConfig:
    """Settings for the item-reassignment search.

    ``init`` is ``"auto"`` (one-cluster, singletons, then random starts),
    ``"singletons"``, ``"one-cluster"``, ``"random"`` or a warm-start
    partition. ``random_k`` overrides the number of clusters of random starts.
    """

    restarts: int = 10
    max_clusters: Optional[int] = None
    max_sweeps: int = 100
    seed: int = 0
    init: Union[str, Partition, Sequence[int]] = "auto"
    random_k: Optional[int] = None
    n_jobs: Optional[int] = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be positive")
        if self.max_clusters is not None and self.max_clusters < 1:
            raise ValueError("max_clusters must be at least 1")
        if self.max_sweeps < 1:
            raise ValueError("max_sweeps must be positive")
        if isinstance(self.init, str) and self.init not in (
            "auto", "singletons", "one-cluster", "random"
        ):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass(frozen=True)
class OptResult:
    partition: Partition
    epl: float
    trace: tuple = field(default_factory=tuple)
    restarts_agreeing: int = 1

    @property
    def k(self) -> int:
        return self.partition.k


class _SearchState:
    """Slot-based cluster bookkeeping shared by the greedy objectives.

    Subclasses implement ``_score(n, k, cand)`` returning objective values for
    moving item ``n`` from slot ``k`` to each slot in ``cand`` and an opaque
    payload, and ``_apply(n, k, dest, i, payload)``.
    """

    def __init__(self, init: np.ndarray, max_clusters: int):
        self.n = init.size
        self.max_clusters = max_clusters
        self.z = np.array(init, dtype=np.int64)
        self.sizes = np.bincount(self.z, minlength=max_clusters)

    def candidates(self, n: int):
        k = int(self.z[n])
        cand = np.flatnonzero(self.sizes)
        if self.sizes[k] > 1 and cand.size < self.max_clusters:
            fresh = int(np.argmin(self.sizes > 0))
            cand = np.append(cand, fresh)
        values, payload = self._score(n, k, cand)
        return cand, values, payload

    def move(self, n: int, dest: int, i: int, payload) -> None:
        k = int(self.z[n])
        self._apply(n, k, dest, i, payload)
        self.sizes[k] -= 1
        self.sizes[dest] += 1
        self.z[n] = dest

    def partition(self) -> Partition:
        return Partition._from_canonical(canonical_labels(self.z))


class _EPLState(_SearchState):
    def __init__(self, sample: PartitionSample, kind: LossKind, init, max_clusters, scale=1.0):
        super().__init__(init, max_clusters)
        self.kind = kind
        self.scale = scale
        self.c = np.ascontiguousarray(sample.labels.T)  # (N, S): draw labels per item
        self.w = sample.weights
        s = sample.n_draws
        self.ar = np.arange(s)
        kc = int(sample.draw_k.max())
        self.xl = sample._xl
        self.xc, self.sqc = sample._marginal_stats
        idx = (self.ar[:, None] * max_clusters + self.z[None, :]) * kc + sample.labels
        self.cell = np.bincount(idx.ravel(), minlength=s * max_clusters * kc).reshape(
            s, max_clusters, kc
        )
        flat = self.cell.reshape(s, -1)
        self.xac = self.xl[flat].sum(axis=1)
        self.sqac = (flat.astype(np.int64) ** 2).sum(axis=1)
        self.xz = float(self.xl[self.sizes].sum())
        self.sqz = int((self.sizes.astype(np.int64) ** 2).sum())

    def value(self) -> float:
        per = loss_from_stats(
            self.kind, self.n, self.xz, self.xc, self.xac, self.sqz, self.sqc, self.sqac
        )
        return self.scale * float(np.dot(self.w, per))

    def _score(self, n, k, cand):
        xl = self.xl
        j = self.c[n]
        nk = self.sizes[k]
        m = self.sizes[cand] - (cand == k)
        xz = self.xz - xl[nk] + xl[nk - 1] - xl[m] + xl[m + 1]
        sqz = self.sqz - 2 * nk + 1 + 2 * m + 1
        ckj = self.cell[self.ar, k, j]
        xac_r = self.xac - xl[ckj] + xl[ckj - 1]
        sqac_r = self.sqac - 2 * ckj + 1
        mm = self.cell[self.ar[:, None], cand[None, :], j[:, None]] - (cand == k)[None, :]
        xac = xac_r[:, None] - xl[mm] + xl[mm + 1]
        sqac = sqac_r[:, None] + 2 * mm + 1
        per = loss_from_stats(
            self.kind, self.n, xz[None, :], self.xc[:, None], xac,
            sqz[None, :], self.sqc[:, None], sqac,
        )
        values = self.scale * (self.w @ per)
        return values, (xz, sqz, xac, sqac)

    def _apply(self, n, k, dest, i, payload):
        xz, sqz, xac, sqac = payload
        j = self.c[n]
        self.cell[self.ar, k, j] -= 1
        self.cell[self.ar, dest, j] += 1
        self.xz = float(xz[i])
        self.sqz = int(sqz[i])
        self.xac = xac[:, i].copy()
        self.sqac = sqac[:, i].copy()


def _choose(cand: np.ndarray, values: np.ndarray, stay: int) -> Optional[int]:
    """Index of the accepted move, or None to keep the current cluster."""
    current = values[stay]
    tol = _RTOL * abs(current)
    best = values.min()
    if not best < current - tol:
        return None
    for i in np.flatnonzero(values <= best + tol):
        if i != stay and values[i] < current - tol:
            return int(i)
    return int(np.argmin(values))


def local_search(
    state: _SearchState,
    rng: np.random.Generator,
    max_sweeps: int,
    on_move: Optional[Callable[[_SearchState], None]] = None,
) -> tuple:
    """Sweep items in shuffled order, taking the best single-item move each time.

    Returns the per-sweep trace: the starting value followed by the value at
    the end of every sweep that moved at least one item.
    """
    trace = [state.value()]
    for _ in range(max_sweeps):
        moved = False
        for n in rng.permutation(state.n):
            cand, values, payload = state.candidates(int(n))
            stay = int(np.flatnonzero(cand == state.z[n])[0])
            i = _choose(cand, values, stay)
            if i is None:
                continue
            state.move(int(n), int(cand[i]), i, payload)
            moved = True
            if on_move is not None:
                on_move(state)
        if not moved:
            break
        trace.append(state.value())
    return tuple(trace)


def _initial_labels(cfg: GreedyConfig, restart: int, n: int, cap: int, rng) -> np.ndarray:
    init = cfg.init
    if not isinstance(init, str):
        z = _as_partition(init)
        if z.n != n:
            raise ValueError("partition length mismatch")
        if z.k > cap:
            raise ValueError("warm start has more clusters than max_clusters")
        return z.zero_based.copy()
    if init == "auto":
        init = {0: "one-cluster", 1: "singletons"}.get(restart, "random")
    if init == "one-cluster":
        return np.zeros(n, dtype=np.int64)
    if init == "singletons":
        # with a cluster cap below N, items wrap around the available clusters
        return np.arange(n, dtype=np.int64) % cap
    k = cfg.random_k or math.ceil(math.sqrt(n))
    k = max(1, min(k, cap))
    return canonical_labels(rng.integers(0, k, size=n))


def run_restarts(make_state: Callable[[np.ndarray], _SearchState], n: int, cfg: GreedyConfig):
    """Run ``cfg.restarts`` independent local searches.

    Returns the best final partition, its trace and how many restarts ended
    at that same partition. Each restart draws from its own RNG stream, so
    results do not depend on ``n_jobs``.
    """
    cap = n if cfg.max_clusters is None else min(cfg.max_clusters, n)
    streams = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts)

    def one(r: int):
        rng = np.random.default_rng(streams[r])
        state = make_state(_initial_labels(cfg, r, n, cap, rng))
        trace = local_search(state, rng, cfg.max_sweeps)
        return state.partition(), trace

    jobs = cfg.n_jobs or default_threads()
    if jobs > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, range(cfg.restarts)))
    else:
        results = [one(r) for r in range(cfg.restarts)]
    best = min(range(len(results)), key=lambda r: (results[r][1][-1], r))
    agreeing = sum(1 for p, _ in results if p == results[best][0])
    return results[best][0], results[best][1], agreeing


def greedy_minimize(sample: PartitionSample, kind, cfg: GreedyConfig = GreedyConfig()) -> OptResult:
    """Local minimiser of the expected posterior loss by greedy item moves."""
    kind = LossKind.parse(kind)
    if sample.n_draws < 1:
        raise ValueError("empty sample")
    reduced, _ = sample.deduplicate()

    n = sample.n_items
    cap = n if cfg.max_clusters is None else min(cfg.max_clusters, n)

    def make_state(init):
        return _EPLState(reduced, kind, init, cap)

    part, trace, agreeing = run_restarts(make_state, n, cfg)
    return OptResult(part, expected_loss(part, sample, kind), trace, agreeing)


def bell_number(n: int) -> int:
    row = [1]
    for _ in range(n):
        nxt = [row[-1]]
        for v in row:
            nxt.append(nxt[-1] + v)
        row = nxt
    return row[0]


def enumerate_partitions(n: int) -> np.ndarray:
    """All set partitions of ``n`` items as 0-based restricted-growth strings.

    Rows are in lexicographic order; there are Bell(n) of them.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rows = np.zeros((1, 1), dtype=np.int8 if n < 127 else np.int64)
    maxes = np.zeros(1, dtype=np.int64)
    for _ in range(1, n):
        fan = maxes + 2
        parent = np.repeat(np.arange(rows.shape[0]), fan)
        starts = np.repeat(np.cumsum(fan) - fan, fan)
        value = np.arange(parent.size) - starts
        rows = np.concatenate([rows[parent], value[:, None].astype(rows.dtype)], axis=1)
        maxes = np.maximum(maxes[parent], value)
    return rows.astype(np.int64)


def _batch_epl(cands: np.ndarray, sample: PartitionSample, kind: LossKind) -> np.ndarray:
    b, n = cands.shape
    s = sample.n_draws
    kc = int(sample.draw_k.max())
    xl = sample._xl
    sizes = np.bincount(
        (np.arange(b)[:, None] * n + cands).ravel(), minlength=b * n
    ).reshape(b, n)
    xa = xl[sizes].sum(axis=1)
    sqa = (sizes**2).sum(axis=1)
    idx = ((np.arange(b)[:, None, None] * s + np.arange(s)[None, :, None]) * n + cands[:, None, :]) * kc
    idx = idx + sample.labels[None, :, :]
    cells = np.bincount(idx.ravel(), minlength=b * s * n * kc).reshape(b, s, n * kc)
    xac = xl[cells].sum(axis=2)
    sqac = (cells.astype(np.int64) ** 2).sum(axis=2)
    xc, sqc = sample._marginal_stats
    per = loss_from_stats(kind, n, xa[:, None], xc[None, :], xac, sqa[:, None], sqc[None, :], sqac)
    return per @ sample.weights


def exhaustive_minimize(sample: PartitionSample, kind, limit: int = 10) -> OptResult:
    """Global minimiser by enumerating every set partition of the items.

    Ties go to the lexicographically smallest canonical label vector.
    """
    kind = LossKind.parse(kind)
    n = sample.n_items
    if n > limit:
        raise ExhaustiveRefused(f"exhaustive search refused: N={n} exceeds limit {limit}")
    reduced, _ = sample.deduplicate()
    allp = enumerate_partitions(n)
    chunk = max(1, 2_000_000 // (reduced.n_draws * n * int(reduced.draw_k.max())))
    values = np.concatenate(
        [_batch_epl(allp[i : i + chunk], reduced, kind) for i in range(0, allp.shape[0], chunk)]
    )
    best = values.min()
    i = int(np.flatnonzero(values <= best + _RTOL * abs(best))[0])
    part = Partition._from_canonical(allp[i])
    epl = expected_loss(part, sample, kind)
    return OptResult(part, epl, (epl,), 1)
