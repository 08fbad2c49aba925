"""Distances and test-set distribution metrics.

All metrics take point sets as ``(n, d)`` array-likes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .core import InputDomain, rng_stream

__all__ = [
    "SubdomainSample",
    "sample_subdomains",
    "dist",
    "discrepancy",
    "dispersion",
    "diversity",
    "divergence",
    "edge_center_ratio",
    "center_distance",
    "center_region",
    "nearest_neighbor_distances",
]

DEFAULT_SUBDOMAINS = 1000


def _as_points(points) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    if p.ndim == 1:
        p = p.reshape(-1, 1)
    return p


def dist(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


@dataclass(frozen=True)
class SubdomainSample:
    """``m`` random boxes used by :func:`discrepancy`."""

    lows: np.ndarray
    highs: np.ndarray
    seed: int | None = None

    def __len__(self) -> int:
        return len(self.lows)

    @property
    def volumes(self) -> np.ndarray:
        return np.prod(self.highs - self.lows, axis=1)


def sample_subdomains(domain: InputDomain, m: int = DEFAULT_SUBDOMAINS, seed: int = 0) -> SubdomainSample:
    """Draw ``m`` boxes whose opposite corners are two independent uniform
    points, sorted per dimension."""
    if m < 1:
        raise ValueError("m must be >= 1")
    rng = rng_stream(seed, 0)
    a = domain.from_unit(rng.random((m, domain.dims)))
    b = domain.from_unit(rng.random((m, domain.dims)))
    lows, highs = np.minimum(a, b), np.maximum(a, b)
    # zero-width boxes are measure-zero events; redraw to keep volumes positive
    while True:
        bad = np.any(highs <= lows, axis=1)
        if not bad.any():
            break
        k = int(bad.sum())
        a = domain.from_unit(rng.random((k, domain.dims)))
        b = domain.from_unit(rng.random((k, domain.dims)))
        lows[bad], highs[bad] = np.minimum(a, b), np.maximum(a, b)
    return SubdomainSample(lows, highs, seed)


def discrepancy(
    points,
    domain: InputDomain,
    m: int = DEFAULT_SUBDOMAINS,
    seed: int = 0,
    subdomains: SubdomainSample | None = None,
) -> float:
    """Largest gap between the share of points and the share of volume over
    a sample of random sub-boxes."""
    t = _as_points(points)
    if len(t) == 0:
        raise ValueError("discrepancy of an empty test set is undefined")
    if subdomains is None:
        subdomains = sample_subdomains(domain, m, seed)
    lows, highs = np.asarray(subdomains.lows), np.asarray(subdomains.highs)
    frac_vol = np.prod(highs - lows, axis=1) / domain.volume
    counts = np.zeros(len(lows))
    # chunk over boxes to bound the (boxes, points, d) temporary
    step = max(1, 4_000_000 // max(1, t.size))
    for s in range(0, len(lows), step):
        lo = lows[s : s + step, None, :]
        hi = highs[s : s + step, None, :]
        inside = np.all((t[None] >= lo) & (t[None] < hi), axis=2)
        counts[s : s + step] = inside.sum(axis=1)
    return float(np.max(np.abs(counts / len(t) - frac_vol)))


def nearest_neighbor_distances(points) -> np.ndarray:
    """Distance from each point to its nearest other point."""
    t = _as_points(points)
    if len(t) < 2:
        raise ValueError("nearest-neighbor distance needs at least 2 points")
    d, _ = cKDTree(t).query(t, k=2)
    return d[:, 1]


def dispersion(points) -> float:
    """Largest nearest-neighbor distance."""
    return float(np.max(nearest_neighbor_distances(points)))


def diversity(points) -> float:
    """Sum of nearest-neighbor distances."""
    return float(np.sum(nearest_neighbor_distances(points)))


def divergence(points) -> float:
    """Sum of distances over all ordered pairs (self-pairs add zero)."""
    t = _as_points(points)
    if len(t) < 2:
        return 0.0
    return float(2.0 * np.sum(pdist(t)))


def center_region(domain: InputDomain) -> tuple[np.ndarray, np.ndarray]:
    """Concentric box holding exactly half the domain volume."""
    half = domain.widths * 2.0 ** (-1.0 / domain.dims) / 2.0
    return domain.center - half, domain.center + half


def edge_center_ratio(points, domain: InputDomain) -> float:
    """``|T_edge| / |T_center|``; ``math.inf`` when the center is empty."""
    t = _as_points(points)
    lo, hi = center_region(domain)
    n_center = int(np.sum(np.all((t >= lo) & (t < hi), axis=1)))
    if n_center == 0:
        return math.inf
    return (len(t) - n_center) / n_center


def center_distance(tc, domain: InputDomain) -> float:
    """Chebyshev distance from ``tc`` to the domain center."""
    return float(np.max(np.abs(np.asarray(tc, dtype=float) - domain.center)))
