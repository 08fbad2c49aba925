"""Select-test-from-candidates generators: FSCS, RRT and MCMC restriction."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ExecutedSet,
    GenerationBudgetExceeded,
    Generator,
    InputDomain,
    eligibility_filter,
    uniform_point,
    uniform_points,
)
from .metrics import SubdomainSample, sample_subdomains

__all__ = [
    "FitnessKind",
    "FscsConfig",
    "RrtConfig",
    "McmcConfig",
    "fitness",
    "candidate_fitness",
    "fscs_select",
    "fscs_next",
    "exclusion_radius",
    "rrt_next",
    "mcmc_accept",
    "FSCS",
    "RRT",
    "MCMC",
    "ball_volume_constant",
]

DEFAULT_BUDGET = 10**6


class FitnessKind(str, enum.Enum):
    MIN_DISTANCE = "min"
    AVG_DISTANCE = "avg"
    MAX_DISTANCE = "max"
    CENTROID_DISTANCE = "centroid"
    DISCREPANCY_GAIN = "discrepancy"


@dataclass(frozen=True)
class FscsConfig:
    k: int = 10
    fitness: FitnessKind = FitnessKind.MIN_DISTANCE
    epsilon: float | None = None
    max_attempts: int = DEFAULT_BUDGET
    n_subdomains: int = 1000

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        object.__setattr__(self, "fitness", FitnessKind(self.fitness))


@dataclass(frozen=True)
class RrtConfig:
    R: float = 0.75
    max_attempts: int = DEFAULT_BUDGET

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError("R must be > 0")
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")


@dataclass(frozen=True)
class McmcConfig:
    beta1: float | None = None  # None -> 0.1 * domain diameter
    max_attempts: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.beta1 is not None and not self.beta1 > 0:
            raise ValueError("beta1 must be > 0")

    def resolved_beta(self, domain: InputDomain) -> float:
        return self.beta1 if self.beta1 is not None else 0.1 * domain.diameter


def _pairwise(c: np.ndarray, e: np.ndarray) -> np.ndarray:
    diff = c[:, None, :] - e[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _box_membership(points: np.ndarray, sub: SubdomainSample) -> np.ndarray:
    lo, hi = np.asarray(sub.lows), np.asarray(sub.highs)
    return np.all((points[:, None, :] >= lo[None]) & (points[:, None, :] < hi[None]), axis=2)


def candidate_fitness(
    candidates,
    executed,
    kind: FitnessKind,
    domain: InputDomain | None = None,
    subdomains: SubdomainSample | None = None,
) -> np.ndarray:
    """Fitness of each row of ``candidates`` against the executed set."""
    kind = FitnessKind(kind)
    c = np.atleast_2d(np.asarray(candidates, dtype=float))
    e = np.asarray(executed, dtype=float).reshape(-1, c.shape[1])
    if kind is FitnessKind.DISCREPANCY_GAIN:
        if subdomains is None:
            if domain is None:
                raise ValueError("discrepancy fitness needs a domain or subdomain sample")
            subdomains = sample_subdomains(domain)
        vol_share = subdomains.volumes / (domain.volume if domain is not None else 1.0)
        base = _box_membership(e, subdomains).sum(axis=0) if len(e) else np.zeros(len(subdomains))
        with_c = base[None, :] + _box_membership(c, subdomains)
        disc = np.max(np.abs(with_c / (len(e) + 1) - vol_share[None, :]), axis=1)
        return 1.0 - disc
    if len(e) == 0:
        raise ValueError(f"{kind.name} fitness needs a non-empty executed set")
    if kind is FitnessKind.CENTROID_DISTANCE:
        return np.linalg.norm(c - e.mean(axis=0), axis=1)
    d = _pairwise(c, e)
    if kind is FitnessKind.MIN_DISTANCE:
        return d.min(axis=1)
    if kind is FitnessKind.AVG_DISTANCE:
        return d.mean(axis=1)
    return d.max(axis=1)


def fitness(c, executed, kind: FitnessKind, domain: InputDomain | None = None, subdomains=None) -> float:
    return float(candidate_fitness([c], executed, kind, domain, subdomains)[0])


def fscs_select(candidates, executed, kind: FitnessKind = FitnessKind.MIN_DISTANCE, domain=None, subdomains=None) -> int:
    """Index of the best candidate; ties go to the earliest one."""
    return int(np.argmax(candidate_fitness(candidates, executed, kind, domain, subdomains)))


def _eligible_candidates(domain, rng, k, executed, epsilon, max_attempts) -> np.ndarray:
    out = np.empty((k, domain.dims))
    got = attempts = 0
    while got < k:
        if attempts >= max_attempts:
            raise GenerationBudgetExceeded(
                f"eligibility filter rejected {attempts} candidates (epsilon={epsilon})",
                attempts,
                epsilon=epsilon,
            )
        attempts += 1
        c = uniform_point(domain, rng)
        if eligibility_filter(c, executed, epsilon):
            out[got] = c
            got += 1
    return out


def fscs_next(executed, cfg: FscsConfig, domain: InputDomain, rng: np.random.Generator, subdomains=None) -> np.ndarray:
    """One FSCS step: the first test is uniform, later ones are the best of
    ``cfg.k`` candidates."""
    e = np.asarray(executed, dtype=float).reshape(-1, domain.dims)
    if len(e) == 0:
        return uniform_point(domain, rng)
    if cfg.epsilon is None:
        cands = uniform_points(domain, rng, cfg.k)
    else:
        cands = _eligible_candidates(domain, rng, cfg.k, e, cfg.epsilon, cfg.max_attempts)
    return cands[fscs_select(cands, e, cfg.fitness, domain, subdomains)]


@dataclass
class FSCS(Generator):
    """Fixed-size-candidate-set ART."""

    config: FscsConfig = field(default_factory=FscsConfig)
    distance_evals: int = field(default=0, init=False)
    last_candidates: np.ndarray | None = field(default=None, init=False, repr=False)
    last_fitness: np.ndarray | None = field(default=None, init=False, repr=False)
    _subdomains: SubdomainSample | None = field(default=None, init=False, repr=False)

    def reference_set(self, rng: np.random.Generator) -> np.ndarray:
        """Executed tests consulted by the fitness function."""
        return self.executed.points

    def _propose(self, rng):
        cfg = self.config
        if len(self.executed) == 0:
            self.last_candidates = self.last_fitness = None
            return uniform_point(self.domain, rng)
        ref = self.reference_set(rng)
        if cfg.epsilon is None:
            cands = uniform_points(self.domain, rng, cfg.k)
        else:
            cands = _eligible_candidates(self.domain, rng, cfg.k, self.executed.points, cfg.epsilon, cfg.max_attempts)
        if cfg.fitness is FitnessKind.DISCREPANCY_GAIN and self._subdomains is None:
            self._subdomains = sample_subdomains(self.domain, cfg.n_subdomains, int(rng.integers(2**63)))
        f = candidate_fitness(cands, ref, cfg.fitness, self.domain, self._subdomains)
        self.distance_evals += len(cands) * len(ref)
        self.last_candidates, self.last_fitness = cands, f
        return cands[int(np.argmax(f))].copy()

    def reset(self):
        super().reset()
        self.distance_evals = 0
        self.last_candidates = self.last_fitness = None
        self._subdomains = None


def ball_volume_constant(d: int) -> float:
    """Volume of the unit ball in ``d`` dimensions."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1)


def exclusion_radius(R: float, domain: InputDomain, n_executed: int) -> float:
    """Radius at which ``n_executed`` balls cover ``R`` times the domain volume."""
    if n_executed < 1:
        raise ValueError("n_executed must be >= 1")
    d = domain.dims
    return (R * domain.volume / (ball_volume_constant(d) * n_executed)) ** (1.0 / d)


def _rrt_search(executed: np.ndarray, cfg: RrtConfig, domain: InputDomain, rng) -> tuple[np.ndarray, int]:
    r = exclusion_radius(cfg.R, domain, len(executed))
    attempts = 0
    batch = 16
    while attempts < cfg.max_attempts:
        batch = min(batch, cfg.max_attempts - attempts)
        cands = uniform_points(domain, rng, batch)
        ok = _pairwise(cands, executed).min(axis=1) >= r
        if ok.any():
            i = int(np.argmax(ok))
            return cands[i], attempts + i + 1
        attempts += batch
        batch = min(batch * 2, 4096)
    raise GenerationBudgetExceeded(
        f"RRT found no candidate outside the exclusion zones after {attempts} attempts "
        f"(radius={r:.6g}, R={cfg.R}, |E|={len(executed)})",
        attempts,
        radius=r,
    )


def rrt_next(executed, cfg: RrtConfig, domain: InputDomain, rng) -> np.ndarray:
    e = np.asarray(executed, dtype=float).reshape(-1, domain.dims)
    if len(e) == 0:
        return uniform_point(domain, rng)
    return _rrt_search(e, cfg, domain, rng)[0]


@dataclass
class RRT(Generator):
    """Restricted random testing with unclipped exclusion balls."""

    config: RrtConfig = field(default_factory=RrtConfig)
    attempts: int = field(default=0, init=False)

    def _propose(self, rng):
        if len(self.executed) == 0:
            return uniform_point(self.domain, rng)
        tc, used = _rrt_search(self.executed.points, self.config, self.domain, rng)
        self.attempts += used
        return tc

    def reset(self):
        super().reset()
        self.attempts = 0


def _log_non_failure_likelihood(x: np.ndarray, executed: np.ndarray, beta1: float) -> float:
    """log prod_e (1 - exp(-dist(e, x) / beta1)); -inf when x hits an e."""
    if len(executed) == 0:
        return 0.0
    d = np.sqrt(np.sum((executed - x) ** 2, axis=1))
    with np.errstate(divide="ignore"):
        return float(np.sum(np.log(-np.expm1(-d / beta1))))


def mcmc_accept(c, c_prev, executed, beta1: float, rng: np.random.Generator, prev_executed=None) -> bool:
    """Metropolis acceptance of ``c`` against the current chain point.

    ``prev_executed`` lets the caller score ``c_prev`` against a different
    reference set (the generator excludes ``c_prev`` itself).
    """
    c = np.asarray(c, dtype=float).ravel()
    e = np.asarray(executed, dtype=float).reshape(-1, c.size)
    if len(e) == 0:
        return True
    pe = e if prev_executed is None else np.asarray(prev_executed, dtype=float).reshape(-1, c.size)
    log_c = _log_non_failure_likelihood(c, e, beta1)
    log_prev = _log_non_failure_likelihood(np.asarray(c_prev, dtype=float).ravel(), pe, beta1)
    if log_prev == -math.inf:
        return True
    log_ratio = log_c - log_prev
    u = rng.random()
    return log_ratio >= 0 or u <= math.exp(log_ratio)


@dataclass
class MCMC(Generator):
    """Restriction by Metropolis acceptance of uniform proposals.

    The chain point is the previous test case; it is scored against the
    executed set without itself, otherwise its likelihood would be zero.
    """

    config: McmcConfig = field(default_factory=McmcConfig)
    proposals: int = field(default=0, init=False)

    def _propose(self, rng):
        e = self.executed.points
        if len(e) == 0:
            return uniform_point(self.domain, rng)
        beta = self.config.resolved_beta(self.domain)
        prev = e[-1]
        for _ in range(self.config.max_attempts):
            c = uniform_point(self.domain, rng)
            self.proposals += 1
            if mcmc_accept(c, prev, e, beta, rng, prev_executed=e[:-1]):
                return c
        raise GenerationBudgetExceeded(
            f"MCMC rejected {self.config.max_attempts} proposals", self.config.max_attempts
        )

    def reset(self):
        super().reset()
        self.proposals = 0
