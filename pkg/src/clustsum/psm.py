"""Posterior similarity matrix and the objectives that only need it.

Binder's expected loss is linear in the co-clustering probabilities. The
expected variation of information is not; swapping the expectation and the
logarithm gives a lower bound that depends on the PSM alone.
"""

from __future__ import annotations

import numpy as np

from .epl import GreedyConfig, OptResult, PartitionSample, _SearchState, run_restarts
from .partition import Partition


class PSMatrix:
    """N x N co-clustering probabilities: symmetric, unit diagonal, in [0, 1]."""

    def __init__(self, probs):
        p = np.array(probs, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] == 0:
            raise ValueError("PSM must be a non-empty square matrix")
        if not np.array_equal(p, p.T):
            raise ValueError("PSM must be symmetric")
        if np.any(p < 0) or np.any(p > 1) or not np.all(np.diag(p) == 1):
            raise ValueError("PSM entries must lie in [0, 1] with unit diagonal")
        p.setflags(write=False)
        self.probs = p

    @property
    def n(self) -> int:
        return self.probs.shape[0]


def compute_psm(sample: PartitionSample) -> PSMatrix:
    """Weighted frequency with which each pair of items shares a cluster.

    Weights are accumulated before the single division by their total, so
    integer multiplicities give correctly rounded frequencies.
    """
    if sample.n_draws < 1:
        raise ValueError("empty sample")
    s, n = sample.labels.shape
    k = sample.draw_k
    offsets = np.concatenate([[0], np.cumsum(k)[:-1]])
    cols = sample.labels + offsets[:, None]
    onehot = np.zeros((n, int(k.sum())))
    onehot[np.arange(n)[None, :].repeat(s, axis=0), cols] = 1.0
    col_w = np.repeat(sample.raw_weights, k)
    acc = (onehot * col_w) @ onehot.T
    probs = acc / sample.raw_weights.sum()
    probs = np.triu(probs) + np.triu(probs, 1).T
    np.fill_diagonal(probs, 1.0)
    return PSMatrix(np.clip(probs, 0.0, 1.0))


def _check(z, psm: PSMatrix) -> Partition:
    z = z if isinstance(z, Partition) else Partition(z)
    if z.n != psm.n:
        raise ValueError("dimension mismatch between partition and PSM")
    return z


def binder_epl_from_psm(z, psm: PSMatrix) -> float:
    """Expected Binder loss (pair count over N**2) computed from the PSM."""
    z = _check(z, psm)
    same = z.zero_based[:, None] == z.zero_based[None, :]
    iu = np.triu_indices(z.n, 1)
    p = psm.probs[iu]
    return float(np.where(same[iu], 1.0 - p, p).sum() / z.n**2)


def vi_lower_bound(z, psm: PSMatrix) -> float:
    r"""PSM lower bound on the expected VI of ``z``.

    .. math::
        \frac1N \sum_n \Big[\log \sum_{n'} 1(z_n = z_{n'})
        + \log \sum_{n'} p_{nn'} - 2 \log \sum_{n'} 1(z_n = z_{n'}) p_{nn'}\Big]
    """
    z = _check(z, psm)
    labels = z.zero_based
    sizes = np.bincount(labels)[labels]
    row = psm.probs.sum(axis=1)
    same = labels[:, None] == labels[None, :]
    within = np.where(same, psm.probs, 0.0).sum(axis=1)
    return float(np.mean(np.log(sizes) + np.log(row) - 2.0 * np.log(within)))


class _LowerBoundState(_SearchState):
    """Incremental ``N * vi_lower_bound`` without the z-independent term.

    Keeps ``R_n``, the PSM mass of item n's own cluster, so scoring all moves
    of one item costs O(N).
    """

    def __init__(self, psm: PSMatrix, init, max_clusters):
        super().__init__(init, max_clusters)
        self.p = psm.probs
        self.const = float(np.log(self.p.sum(axis=1)).sum())
        self._refresh()

    def _refresh(self):
        same = self.z[:, None] == self.z[None, :]
        self.r = np.where(same, self.p, 0.0).sum(axis=1)
        sizes = self.sizes[self.sizes > 0]
        self.f = float((sizes * np.log(sizes)).sum() - 2.0 * np.log(self.r).sum())

    def value(self) -> float:
        return (self.f + self.const) / self.n

    def _score(self, n, k, cand):
        pm = self.p[:, n]
        others = np.arange(self.n) != n
        in_k = (self.z == k) & others
        # state with n removed from its cluster
        r_rem = np.where(in_k, self.r - pm, self.r)
        nk = self.sizes[k]
        f_rem = self.f - (nk * np.log(nk) - (nk - 1) * _log0(nk - 1))
        f_rem += 2.0 * np.log(self.r[in_k]).sum() - 2.0 * np.log(r_rem[in_k]).sum()
        f_rem += 2.0 * np.log(self.r[n])
        lab = np.where(others, self.z, self.max_clusters)
        gain = np.bincount(lab, weights=np.log1p(pm / r_rem), minlength=self.max_clusters + 1)
        link = np.bincount(lab, weights=pm, minlength=self.max_clusters + 1)
        m = self.sizes[cand] - (cand == k)
        delta = (m + 1) * np.log(m + 1) - m * _log0(m) - 2.0 * (gain[cand] + np.log1p(link[cand]))
        values = (f_rem + delta + self.const) / self.n
        return values, (f_rem + delta, r_rem, link)

    def _apply(self, n, k, dest, i, payload):
        f, r_rem, link = payload
        pm = self.p[:, n]
        in_dest = (self.z == dest) & (np.arange(self.n) != n)
        self.r = np.where(in_dest, r_rem + pm, r_rem)
        self.r[n] = 1.0 + link[dest]
        self.f = float(f[i])


def _log0(x):
    x = np.asarray(x, dtype=np.float64)
    return np.log(np.where(x > 0, x, 1.0))


def minimize_vi_lb(psm: PSMatrix, cfg: GreedyConfig = GreedyConfig()) -> OptResult:
    """Greedy minimiser of :func:`vi_lower_bound`, same moves as the EPL search."""
    n = psm.n
    cap = n if cfg.max_clusters is None else min(cfg.max_clusters, n)

    def make_state(init):
        return _LowerBoundState(psm, init, cap)

    part, trace, agreeing = run_restarts(make_state, n, cfg)
    return OptResult(part, vi_lower_bound(part, psm), trace, agreeing)
