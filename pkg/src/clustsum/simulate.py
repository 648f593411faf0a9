"""Desk-scale posterior generators.

``gibbs_gmm`` is a collapsed Gibbs sampler for a finite Gaussian mixture with
a symmetric Dirichlet prior on the weights and an independent
Normal-Inverse-Gamma prior per dimension on each component's mean and
variance. ``gen_multimodal_sample`` builds partition posteriors with known
modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numba
import numpy as np

from .epl import PartitionSample
from .partition import Partition, canonical_labels


def gen_uniform_square(n: int, seed: int = 0) -> np.ndarray:
    """``n`` points drawn uniformly from the square [-1, 1] x [-1, 1]."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return np.random.default_rng(seed).uniform(-1.0, 1.0, size=(n, 2))


def gen_gmm_data(n: int, centers, sds, weights=None, seed: int = 0):
    """Draw ``n`` points from an isotropic Gaussian mixture.

    Returns the (n, D) data and the Partition of true component labels.
    """
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    g = centers.shape[0]
    sds = np.broadcast_to(np.asarray(sds, dtype=np.float64), (g,)).copy()
    if weights is None:
        weights = np.full(g, 1.0 / g)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (g,):
        raise ValueError("dimension mismatch between centers and weights")
    if np.any(weights < 0) or not math.isclose(weights.sum(), 1.0, abs_tol=1e-9):
        raise ValueError("weights must be non-negative and sum to 1")
    if np.any(sds < 0):
        raise ValueError("standard deviations must be non-negative")
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    comp = rng.choice(g, size=n, p=weights)
    data = centers[comp] + rng.standard_normal((n, centers.shape[1])) * sds[comp, None]
    return data, Partition(comp)


@dataclass(frozen=True)
class GibbsConfig:
    K: int = 10
    dirichlet_alpha: float = 1.0
    prior_mean: float | Sequence[float] = 0.0
    prior_scale: float = 0.1
    prior_shape: float = 2.0
    prior_rate: float = 0.5
    iters: int = 12000
    burnin: int = 2000
    thin: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.K < 1:
            raise ValueError("K must be at least 1")
        for name in ("dirichlet_alpha", "prior_scale", "prior_shape", "prior_rate"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v}")
        if self.iters <= self.burnin or self.burnin < 0:
            raise ValueError("iters must exceed burnin")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")

    @property
    def n_draws(self) -> int:
        return len(range(self.burnin, self.iters, self.thin))


@numba.njit(cache=True)
def _log_weights(x, counts, sums, sumsq, alpha_k, mu0, kappa0, a0, b0, out):
    """Unnormalised log full conditional of one item over all components.

    Component statistics must already exclude the item.
    """
    K, D = sums.shape
    for k in range(K):
        nk = counts[k]
        lp = math.log(nk + alpha_k)
        for d in range(D):
            kn = kappa0 + nk
            if nk > 0:
                mean = sums[k, d] / nk
                ss = sumsq[k, d] - nk * mean * mean
                if ss < 0.0:
                    ss = 0.0
                mun = (kappa0 * mu0[d] + sums[k, d]) / kn
                bn = b0 + 0.5 * ss + kappa0 * nk * (mean - mu0[d]) ** 2 / (2.0 * kn)
            else:
                mun = mu0[d]
                bn = b0
            an = a0 + 0.5 * nk
            nu = 2.0 * an
            scale2 = bn * (kn + 1.0) / (an * kn)
            r = x[d] - mun
            lp += (
                math.lgamma(0.5 * (nu + 1.0))
                - math.lgamma(0.5 * nu)
                - 0.5 * math.log(nu * math.pi * scale2)
                - 0.5 * (nu + 1.0) * math.log1p(r * r / (nu * scale2))
            )
        out[k] = lp


@numba.njit(cache=True)
def _gibbs_kernel(data, z, uniforms, K, alpha, mu0, kappa0, a0, b0, burnin, thin, draws):
    n, D = data.shape
    counts = np.zeros(K, dtype=np.int64)
    sums = np.zeros((K, D))
    sumsq = np.zeros((K, D))
    for i in range(n):
        counts[z[i]] += 1
        for d in range(D):
            sums[z[i], d] += data[i, d]
            sumsq[z[i], d] += data[i, d] ** 2
    logw = np.empty(K)
    first = np.empty(K, dtype=np.int64)
    mass = np.empty(K + 1)
    owner = np.empty(K + 1, dtype=np.int64)
    alpha_k = alpha / K
    iters = uniforms.shape[0]
    row = 0
    for t in range(iters):
        for i in range(n):
            k = z[i]
            counts[k] -= 1
            for d in range(D):
                sums[k, d] -= data[i, d]
                sumsq[k, d] -= data[i, d] ** 2
            if counts[k] == 0:
                for d in range(D):
                    sums[k, d] = 0.0
                    sumsq[k, d] = 0.0
            _log_weights(data[i], counts, sums, sumsq, alpha_k, mu0, kappa0, a0, b0, logw)
            mx = logw[0]
            for kk in range(1, K):
                if logw[kk] > mx:
                    mx = logw[kk]
            # Occupied components in order of their first member (excluding i),
            # then all empty components pooled; this makes each step a function
            # of the partition only, not of the component labels.
            for kk in range(K):
                first[kk] = -1
            m = 0
            for j in range(n):
                if j == i:
                    continue
                kk = z[j]
                if first[kk] < 0:
                    first[kk] = j
                    owner[m] = kk
                    mass[m] = math.exp(logw[kk] - mx)
                    m += 1
            empty = -1
            n_empty = 0
            for kk in range(K):
                if counts[kk] == 0:
                    n_empty += 1
                    if empty < 0:
                        empty = kk
            cats = m
            if n_empty > 0:
                owner[m] = empty
                mass[m] = n_empty * math.exp(logw[empty] - mx)
                cats = m + 1
            total = 0.0
            for c in range(cats):
                total += mass[c]
            u = uniforms[t, i] * total
            pick = owner[cats - 1]
            acc = 0.0
            for c in range(cats):
                acc += mass[c]
                if u < acc:
                    pick = owner[c]
                    break
            z[i] = pick
            counts[pick] += 1
            for d in range(D):
                sums[pick, d] += data[i, d]
                sumsq[pick, d] += data[i, d] ** 2
        if t >= burnin and (t - burnin) % thin == 0:
            draws[row, :] = z
            row += 1


def _prior_mean(cfg: GibbsConfig, d: int) -> np.ndarray:
    mu0 = np.broadcast_to(np.asarray(cfg.prior_mean, dtype=np.float64), (d,)).copy()
    if not np.all(np.isfinite(mu0)):
        raise ValueError("prior_mean must be finite")
    return mu0


def _check_data(data) -> np.ndarray:
    data = np.ascontiguousarray(np.atleast_2d(np.asarray(data, dtype=np.float64)))
    if data.shape[0] < 1 or data.shape[1] < 1:
        raise ValueError("dataset must have at least one point and one dimension")
    if not np.all(np.isfinite(data)):
        raise ValueError("dataset entries must be finite")
    return data


def full_conditional(data, labels, item: int, cfg: GibbsConfig) -> np.ndarray:
    """Normalised full conditional of ``item`` over the ``cfg.K`` components."""
    data = _check_data(data)
    z = np.asarray(labels, dtype=np.int64)
    mask = np.arange(data.shape[0]) != item
    counts = np.bincount(z[mask], minlength=cfg.K)
    sums = np.zeros((cfg.K, data.shape[1]))
    sumsq = np.zeros_like(sums)
    np.add.at(sums, z[mask], data[mask])
    np.add.at(sumsq, z[mask], data[mask] ** 2)
    logw = np.empty(cfg.K)
    _log_weights(
        data[item], counts, sums, sumsq, cfg.dirichlet_alpha / cfg.K,
        _prior_mean(cfg, data.shape[1]), cfg.prior_scale, cfg.prior_shape, cfg.prior_rate, logw,
    )
    w = np.exp(logw - logw.max())
    return w / w.sum()


def gibbs_gmm(data, cfg: GibbsConfig = GibbsConfig(), init_labels=None) -> PartitionSample:
    """Collapsed Gibbs sample of partitions for a finite Gaussian mixture.

    Items are updated in index order each sweep. Draws are taken at sweeps
    ``burnin, burnin + thin, ...`` (0-based) and returned canonically.
    """
    data = _check_data(data)
    n = data.shape[0]
    rng = np.random.default_rng(cfg.seed)
    if init_labels is None:
        z = rng.integers(0, cfg.K, size=n)
    else:
        z = np.asarray(init_labels, dtype=np.int64).copy()
        if z.shape != (n,) or z.min() < 0 or z.max() >= cfg.K:
            raise ValueError("init_labels must be N component ids in 0..K-1")
    uniforms = rng.random((cfg.iters, n))
    draws = np.empty((cfg.n_draws, n), dtype=np.int64)
    _gibbs_kernel(
        data, z.astype(np.int64), uniforms, cfg.K, float(cfg.dirichlet_alpha),
        _prior_mean(cfg, data.shape[1]), float(cfg.prior_scale), float(cfg.prior_shape),
        float(cfg.prior_rate), cfg.burnin, cfg.thin, draws,
    )
    return PartitionSample(draws)


@dataclass(frozen=True)
class AnchorSpec:
    anchors: tuple
    weights: tuple
    flips: int = 0

    def __init__(self, anchors, weights=None, flips: int = 0):
        parts = tuple(a if isinstance(a, Partition) else Partition(a) for a in anchors)
        if not parts:
            raise ValueError("at least one anchor required")
        if len({p.n for p in parts}) != 1:
            raise ValueError("anchors must have equal length")
        if len(set(parts)) != len(parts):
            raise ValueError("anchors must be pairwise distinct")
        if weights is None:
            weights = [1.0 / len(parts)] * len(parts)
        w = tuple(float(x) for x in weights)
        if len(w) != len(parts) or any(x <= 0 for x in w) or not math.isclose(sum(w), 1.0, abs_tol=1e-9):
            raise ValueError("anchor weights must be positive and sum to 1")
        if flips < 0:
            raise ValueError("flips must be non-negative")
        object.__setattr__(self, "anchors", parts)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "flips", int(flips))


def _allocate(weights, total: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    exact = w / w.sum() * total
    counts = np.floor(exact + 1e-9).astype(np.int64)
    short = total - counts.sum()
    if short > 0:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
    return counts


def gen_multimodal_sample(spec: AnchorSpec, S: int, seed: int = 0) -> PartitionSample:
    """Draws from a mixture of point masses at the anchors, then perturbed.

    Anchors are allotted to draws in proportion to their weights (largest
    remainder rounding, in shuffled order); each draw then applies ``spec.flips`` random
    single-item reassignments to ids in ``1..K_anchor + 1``.
    """
    if S < 1:
        raise ValueError("S must be at least 1")
    rng = np.random.default_rng(seed)
    n = spec.anchors[0].n
    which = rng.permutation(np.repeat(np.arange(len(spec.anchors)), _allocate(spec.weights, S)))
    out = np.empty((S, n), dtype=np.int64)
    for s, a in enumerate(which):
        anchor = spec.anchors[a]
        z = anchor.zero_based.copy()
        for _ in range(spec.flips):
            z[rng.integers(n)] = rng.integers(anchor.k + 1)
        out[s] = canonical_labels(z)
    return PartitionSample(out)


def nearest_anchor(sample: PartitionSample, anchors: Sequence[Partition], kind="vi") -> np.ndarray:
    """Index of the closest anchor for every draw (first on ties)."""
    from .epl import per_draw_losses

    dist = np.stack([per_draw_losses(a, sample, kind) for a in anchors])
    return np.argmin(dist, axis=0)
