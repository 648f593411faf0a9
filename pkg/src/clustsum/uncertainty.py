"""Credible balls and high-posterior-density regions around a point estimate.

Distances between partitions are the contingency losses themselves (VI by
default). Probabilities are raw sample frequencies of canonical partitions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .epl import PartitionSample, per_draw_losses
from .partition import LossKind, Partition

# Slack on cumulative weights, which are sums of floating point fractions.
MASS_TOL = 1e-9
# Distances closer than this are treated as ties.
DIST_TOL = 1e-12


@dataclass(frozen=True)
class Bound:
    partition: Partition
    distance: float

    @property
    def k(self) -> int:
        return self.partition.k


@dataclass(frozen=True)
class CredibleBall:
    center: Partition
    metric: LossKind
    level: float
    radius: float
    member_indices: tuple
    members: tuple
    coverage: float
    horizontal_bounds: tuple
    vertical_upper_bounds: tuple
    vertical_lower_bounds: tuple
    distances: np.ndarray

    @property
    def max_member_distance(self) -> float:
        return self.horizontal_bounds[0].distance


@dataclass(frozen=True)
class HPDMember:
    partition: Partition
    prob: float
    distance: Optional[float]


@dataclass(frozen=True)
class HPDRegion:
    members: tuple
    mode: str
    threshold: float
    total_mass: float
    degenerate: bool = False


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def draw_distances(center, sample: PartitionSample, metric="vi") -> np.ndarray:
    """Distance from ``center`` to every draw, computed once per distinct draw."""
    reduced, inverse = sample.deduplicate()
    return per_draw_losses(center, reduced, metric)[inverse]


def _radius(dist: np.ndarray, weights: np.ndarray, level: float) -> float:
    order = np.argsort(dist, kind="stable")
    cum = np.cumsum(weights[order])
    i = int(np.searchsorted(cum, level - MASS_TOL, side="left"))
    return float(dist[order][min(i, dist.size - 1)])


def ball_radius(center, sample: PartitionSample, metric="vi", alpha: float = 0.05) -> float:
    """Smallest attained distance whose ball around ``center`` holds >= 1 - alpha mass."""
    alpha = _check_alpha(alpha)
    dist = draw_distances(center, sample, metric)
    return _radius(dist, sample.weights, 1.0 - alpha)


def _extremes(entries: list) -> tuple:
    # farthest first, so the first bound carries the attained maximum
    far = max(d for _, d in entries)
    tied = [(p, d) for p, d in entries if d >= far - DIST_TOL]
    tied.sort(key=lambda e: (-e[1], e[0].tolist()))
    return tuple(Bound(p, d) for p, d in tied)


def credible_ball(center, sample: PartitionSample, metric="vi", alpha: float = 0.05) -> CredibleBall:
    """Credible ball of level ``1 - alpha`` and its horizontal and vertical bounds.

    Horizontal bounds are the members farthest from the center. Vertical
    upper bounds are the farthest among members with the fewest clusters,
    vertical lower bounds the farthest among those with the most. Ties are
    all reported.
    """
    alpha = _check_alpha(alpha)
    metric = LossKind.parse(metric)
    center = center if isinstance(center, Partition) else Partition(center)
    dist = draw_distances(center, sample, metric)
    radius = _radius(dist, sample.weights, 1.0 - alpha)
    inside = np.flatnonzero(dist <= radius)
    coverage = float(sample.weights[inside].sum())

    seen: dict[Partition, float] = {}
    for s in inside:
        p = sample[int(s)]
        if p not in seen:
            seen[p] = float(dist[s])
    entries = sorted(seen.items(), key=lambda e: (e[1], e[0].tolist()))
    kmin = min(p.k for p, _ in entries)
    kmax = max(p.k for p, _ in entries)
    return CredibleBall(
        center=center,
        metric=metric,
        level=1.0 - alpha,
        radius=radius,
        member_indices=tuple(int(s) for s in inside),
        members=tuple(p for p, _ in entries),
        coverage=coverage,
        horizontal_bounds=_extremes(entries),
        vertical_upper_bounds=_extremes([e for e in entries if e[0].k == kmin]),
        vertical_lower_bounds=_extremes([e for e in entries if e[0].k == kmax]),
        distances=dist,
    )


def empirical_pmf(sample: PartitionSample) -> list[tuple[Partition, float]]:
    """Distinct sampled partitions with their total weight, most probable first."""
    reduced, _ = sample.deduplicate()
    pmf = [(reduced[i], float(w)) for i, w in enumerate(reduced.weights)]
    pmf.sort(key=lambda e: (-e[1], e[0].tolist()))
    return pmf


def hpd_region(
    pmf,
    center=None,
    metric="vi",
    *,
    gamma: Optional[float] = None,
    mass: Optional[float] = None,
) -> HPDRegion:
    """Partitions with estimated probability at least ``gamma``, or the
    smallest most-probable set whose total probability reaches ``mass``.

    Exactly one of ``gamma`` and ``mass`` must be given. In mass mode all
    partitions tied with the last one included are kept. When every sampled
    partition has the same frequency the region is flagged as degenerate.
    """
    if (gamma is None) == (mass is None):
        raise ValueError("give exactly one of gamma or mass")
    if isinstance(pmf, PartitionSample):
        pmf = empirical_pmf(pmf)
    pmf = sorted(pmf, key=lambda e: (-e[1], e[0].tolist()))
    if not pmf:
        raise ValueError("empty pmf")
    probs = np.array([p for _, p in pmf])
    if gamma is not None:
        gamma = float(gamma)
        if not 0.0 < gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
        keep = int(np.sum(probs >= gamma - MASS_TOL))
        mode, threshold = "threshold", gamma
    else:
        mass = float(mass)
        if not 0.0 < mass < 1.0:
            raise ValueError(f"mass must lie in (0, 1), got {mass}")
        cum = np.cumsum(probs)
        keep = min(int(np.searchsorted(cum, mass - MASS_TOL, side="left")) + 1, probs.size)
        keep = int(np.sum(probs >= probs[keep - 1] - MASS_TOL))
        mode, threshold = "mass", mass

    degenerate = len(pmf) > 1 and bool(np.all(np.abs(probs - probs[0]) <= MASS_TOL))
    if degenerate:
        warnings.warn(
            "every sampled partition has the same estimated probability; "
            "the HPD region is not informative",
            stacklevel=2,
        )
    members = []
    metric = LossKind.parse(metric)
    if center is not None:
        center = center if isinstance(center, Partition) else Partition(center)
    if keep and center is not None:
        chosen = PartitionSample([p for p, _ in pmf[:keep]])
        dists = per_draw_losses(center, chosen, metric)
    for i in range(keep):
        p, pr = pmf[i]
        members.append(HPDMember(p, pr, None if center is None else float(dists[i])))
    return HPDRegion(
        members=tuple(members),
        mode=mode,
        threshold=threshold,
        total_mass=float(probs[:keep].sum()),
        degenerate=degenerate,
    )
