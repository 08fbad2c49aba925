"""Statistics for comparing testing strategies."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

__all__ = [
    "required_runs",
    "MannWhitneyResult",
    "mann_whitney_u",
    "a12_effect_size",
    "improvement_percent",
    "CampaignStats",
    "summarize",
]

EXACT_LIMIT = 400


def required_runs(z: float, sigma: float, mu: float, r: float) -> int:
    """Runs needed for a ``z``-confidence interval of half-width ``r`` percent
    around the mean ``mu``."""
    if mu <= 0 or r <= 0:
        raise ValueError("mu and r must be positive")
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    # rounded first so 1536.64 -> 1537, not 1537.0000000001 -> 1538
    return max(1, math.ceil(round((100.0 * z * sigma / (r * mu)) ** 2, 9)))


@dataclass(frozen=True)
class MannWhitneyResult:
    u: float
    p_value: float
    method: str


def _doubled_ranks(pooled: np.ndarray) -> np.ndarray:
    """Twice the mid-ranks, as integers."""
    r = sps.rankdata(pooled, method="average")
    return np.rint(2 * r).astype(np.int64)


def _exact_null_counts(ranks2: np.ndarray, k: int) -> np.ndarray:
    """Number of size-``k`` subsets of the pooled sample per doubled rank sum."""
    total = int(ranks2.sum())
    ways = np.zeros((k + 1, total + 1), dtype=np.int64)
    ways[0, 0] = 1
    for r in ranks2:
        ways[1:, r:] += ways[:-1, : total + 1 - r].copy()
    return ways[k]


def mann_whitney_u(a, b, exact: bool | None = None) -> MannWhitneyResult:
    """Two-sided rank-sum test.

    ``u`` counts pairs with ``a > b`` (ties as one half). The exact null
    distribution, conditional on ties, is used when ``|a| * |b| <= 400``
    unless ``exact`` says otherwise; the large-sample route is the normal
    approximation with tie correction and continuity correction.
    """
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    ranks2 = _doubled_ranks(pooled)
    n = na + nb
    s2 = int(ranks2[:na].sum())
    u = s2 / 2 - na * (na + 1) / 2
    if exact is None:
        exact = na * nb <= EXACT_LIMIT
    if exact:
        # the smaller sample keeps the subset DP cheap
        k, obs = (na, s2) if na <= nb else (nb, int(ranks2[na:].sum()))
        counts = _exact_null_counts(ranks2, k)
        sums = np.nonzero(counts)[0]
        c = counts[sums].astype(float)
        centre2 = k * (n + 1)  # null mean of the doubled rank sum
        dev = np.abs(sums - centre2)
        p = float(c[dev >= abs(obs - centre2)].sum() / c.sum())
        return MannWhitneyResult(u, min(1.0, p), "exact")
    _, t = np.unique(pooled, return_counts=True)
    tie = float(np.sum(t**3 - t)) / (n * (n - 1)) if n > 1 else 0.0
    var = na * nb / 12.0 * ((n + 1) - tie)
    if var <= 0:
        return MannWhitneyResult(u, 1.0, "normal")
    z = (abs(u - na * nb / 2.0) - 0.5) / math.sqrt(var)
    p = 2.0 * sps.norm.sf(max(z, 0.0))
    return MannWhitneyResult(u, min(1.0, float(p)), "normal")


def a12_effect_size(a, b) -> float:
    """Probability that a value drawn from ``a`` exceeds one from ``b``,
    ties counting one half."""
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) == 0 or len(b) == 0:
        raise ValueError("both samples must be non-empty")
    # integer doubled ranks keep the pair count exact, so only the final
    # division rounds
    na, nb = len(a), len(b)
    u2 = int(_doubled_ranks(np.concatenate([a, b]))[:na].sum()) - na * (na + 1)
    return u2 / (2 * na * nb)


def improvement_percent(m_rt: float, m_art: float, lower_is_better: bool = True) -> float:
    """Relative gain of the ART metric over the RT baseline, in percent."""
    if m_rt == 0:
        raise ValueError("baseline metric is zero")
    gain = m_rt - m_art if lower_is_better else m_art - m_rt
    return gain / m_rt * 100.0


@dataclass(frozen=True)
class CampaignStats:
    runs: int
    censored: int
    mean: float
    sd: float
    ci_low: float
    ci_high: float
    z: float

    def as_dict(self) -> dict:
        return {
            "runs": self.runs,
            "censored": self.censored,
            "mean": self.mean,
            "sd": self.sd,
            "ci": [self.ci_low, self.ci_high],
            "z": self.z,
        }


def summarize(values, censored=None, z: float = 1.96) -> CampaignStats:
    """Mean, sd and normal confidence interval of the uncensored values.

    ``censored`` is an optional boolean mask aligned with ``values``; flagged
    entries are left out of every statistic and only counted.
    """
    v = np.asarray(values, dtype=float)
    mask = np.zeros(len(v), dtype=bool) if censored is None else np.asarray(censored, dtype=bool)
    if mask.shape != v.shape:
        raise ValueError("censoring mask does not match values")
    total, n_cens = len(v), int(mask.sum())
    v = v[~mask]
    if len(v) == 0:
        raise ValueError("no uncensored values to summarize")
    mean = float(v.mean())
    sd = float(v.std(ddof=1)) if len(v) > 1 else 0.0
    half = z * sd / math.sqrt(len(v))
    return CampaignStats(total, n_cens, mean, sd, mean - half, mean + half, z)
