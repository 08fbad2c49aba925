"""Search-based ART: optimize a fixed-size test set for spread.

Every optimizer takes an ``(N, d)`` array (or a population of them), keeps
``N`` fixed and keeps every point inside the domain.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import pdist

from .core import Generator, InputDomain, uniform_points
from .metrics import diversity

__all__ = [
    "SearchAlgorithm",
    "SearchConfig",
    "fitness_min_pair",
    "fitness_nn_sum",
    "random_population",
    "hill_climb",
    "simulated_annealing",
    "genetic",
    "repulsion_forces",
    "simulated_repulsion",
    "local_spreading",
    "border_points",
    "voronoi_labels",
    "rbcvt",
    "SearchBased",
]


class SearchAlgorithm(str, enum.Enum):
    HILL_CLIMB = "hc"
    SIMULATED_ANNEALING = "sa"
    GENETIC = "ga"
    SIMULATED_REPULSION = "sr"
    LOCAL_SPREADING = "ls"
    RBCVT = "rbcvt"


@dataclass(frozen=True)
class SearchConfig:
    """Budgets and knobs for all optimizers; each reads only its own."""

    iterations: int = 200
    # hill climbing: perturbation amplitude as a fraction of each side
    hc_amplitude: float = 0.1
    hc_decay: float = 0.99
    hc_patience: int = 20
    # simulated annealing; None means derived from the start set / budget
    sa_initial_temperature: float | None = None
    sa_cooling: float | None = None
    sa_final_ratio: float = 1e-9
    step: float = 0.05
    mutation_rate: float | None = None  # None -> 1 / (N * d)
    # genetic algorithm
    population: int = 20
    crossover_rate: float = 0.8
    # simulated repulsion
    charge: float = 1e-3
    mass: float = 1.0
    # local spreading
    step_fraction: float = 0.5
    # RBCVT
    samples_per_point: int = 100
    border_per_point: int = 4

    def __post_init__(self):
        if self.iterations < 1 or self.population < 1 or self.hc_patience < 1:
            raise ValueError("budgets must be >= 1")
        for name in ("crossover_rate", "hc_decay"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.mutation_rate is not None and not 0 <= self.mutation_rate <= 1:
            raise ValueError("mutation_rate must lie in [0, 1]")
        if not 0 < self.step_fraction <= 1:
            raise ValueError("step_fraction must lie in (0, 1]")
        if self.mass <= 0 or self.charge <= 0:
            raise ValueError("charge and mass must be > 0")

    def rate(self, n: int, d: int) -> float:
        return self.mutation_rate if self.mutation_rate is not None else 1.0 / (n * d)


def _as_set(T) -> np.ndarray:
    t = np.array(T, dtype=float)
    return t.reshape(-1, 1) if t.ndim == 1 else t


def fitness_min_pair(T) -> float:
    """Smallest distance between two members."""
    t = _as_set(T)
    if len(t) < 2:
        raise ValueError("needs at least 2 test cases")
    return float(pdist(t).min())


def fitness_nn_sum(T) -> float:
    """Sum of nearest-neighbor distances (same as :func:`metrics.diversity`)."""
    return diversity(_as_set(T))


def random_population(domain: InputDomain, ps: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return np.stack([uniform_points(domain, rng, n) for _ in range(ps)])


def _own_gap(t: np.ndarray, i: int) -> float:
    d = np.sqrt(np.sum((t - t[i]) ** 2, axis=1))
    d[i] = np.inf
    return float(d.min())


def hill_climb(T, domain: InputDomain, cfg: SearchConfig, rng: np.random.Generator, trace: list | None = None) -> np.ndarray:
    """Shake one point at a time; keep a move if the min-pair distance grows,
    or if it is unchanged and the moved point's own nearest-neighbor gap
    grows (otherwise tied closest pairs can never be separated). Stops at the
    sweep budget or after ``hc_patience`` sweeps without a kept move."""
    t = _as_set(T)
    f = fitness_min_pair(t)
    amp = cfg.hc_amplitude
    stale = 0
    for _ in range(cfg.iterations):
        gained = False
        for i in range(len(t)):
            old = t[i].copy()
            gap = _own_gap(t, i)
            t[i] = domain.clip(old + rng.uniform(-amp, amp, domain.dims) * domain.widths)
            f_new = fitness_min_pair(t)
            if f_new > f or (f_new == f and _own_gap(t, i) > gap):
                f, gained = f_new, True
            else:
                t[i] = old
            if trace is not None:
                trace.append(f)
        amp *= cfg.hc_decay
        stale = 0 if gained else stale + 1
        if stale >= cfg.hc_patience:
            break
    return t


def _mutate(t: np.ndarray, domain: InputDomain, rate: float, step: float, rng) -> np.ndarray:
    mask = rng.random(t.shape) < rate
    if not mask.any():
        mask[rng.integers(t.shape[0]), rng.integers(t.shape[1])] = True
    out = t.copy()
    noise = rng.normal(0.0, 1.0, t.shape) * step * domain.widths
    out[mask] += noise[mask]
    return domain.clip(out)


def simulated_annealing(T, domain: InputDomain, cfg: SearchConfig, rng: np.random.Generator, trace: list | None = None) -> np.ndarray:
    """Annealing on the nearest-neighbor-sum fitness; returns the best set seen.

    ``trace`` receives ``(current, best, accepted_worse)`` per iteration.
    """
    cur = _as_set(T)
    fc = fitness_nn_sum(cur)
    best, fb = cur.copy(), fc
    temp = cfg.sa_initial_temperature or max(0.1 * fc, 1e-12)
    cooling = cfg.sa_cooling or cfg.sa_final_ratio ** (1.0 / cfg.iterations)
    rate = cfg.rate(*cur.shape)
    for _ in range(cfg.iterations):
        cand = _mutate(cur, domain, rate, cfg.step, rng)
        fn = fitness_nn_sum(cand)
        delta = fn - fc
        worse = False
        if delta >= 0:
            cur, fc = cand, fn
        elif rng.random() < math.exp(delta / temp):
            cur, fc, worse = cand, fn, True
        if fc > fb:
            best, fb = cur.copy(), fc
        temp *= cooling
        if trace is not None:
            trace.append((fc, fb, worse))
    return best


def genetic(PT, domain: InputDomain, cfg: SearchConfig, rng: np.random.Generator, trace: list | None = None) -> np.ndarray:
    """Roulette selection on nearest-neighbor sum, one-point crossover of
    test-case blocks, per-coordinate mutation, single elite."""
    pop = np.array(PT, dtype=float)
    if pop.ndim != 3 or len(pop) < 2:
        raise ValueError("genetic search needs a population of at least 2 test sets")
    ps, n, d = pop.shape
    rate = cfg.rate(n, d)
    fit = np.array([fitness_nn_sum(t) for t in pop])
    for _ in range(cfg.iterations):
        elite = pop[int(np.argmax(fit))].copy()
        total = fit.sum()
        probs = fit / total if total > 0 else None
        children = pop[rng.choice(ps, size=ps, p=probs)].copy()
        for a in range(0, ps - 1, 2):
            if rng.random() < cfg.crossover_rate:
                cut = int(rng.integers(1, n)) if n > 1 else 0
                tmp = children[a, cut:].copy()
                children[a, cut:] = children[a + 1, cut:]
                children[a + 1, cut:] = tmp
        for k in range(1, ps):
            children[k] = _mutate(children[k], domain, rate, cfg.step, rng)
        children[0] = elite
        pop = children
        fit = np.array([fitness_nn_sum(t) for t in pop])
        if trace is not None:
            trace.append(float(fit.max()))
    return pop[int(np.argmax(fit))].copy()


def repulsion_forces(X, charge: float, domain: InputDomain, rng: np.random.Generator | None = None) -> np.ndarray:
    """Resultant Coulomb force on each point; pair distances are floored at
    ``1e-6 * diameter``. Coincident pairs get a random antisymmetric
    direction."""
    x = _as_set(X)
    n = len(x)
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    floor = 1e-6 * domain.diameter
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = diff / dist[..., None]
    iu, ju = np.triu_indices(n, 1)
    coincident = dist[iu, ju] == 0
    if coincident.any():
        rng = rng or np.random.default_rng(0)
        v = rng.normal(size=(int(coincident.sum()), x.shape[1]))
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        unit[iu[coincident], ju[coincident]] = v
        unit[ju[coincident], iu[coincident]] = -v
    mag = charge**2 / np.maximum(dist, floor) ** 2
    np.fill_diagonal(mag, 0.0)
    unit[np.arange(n), np.arange(n)] = 0.0
    return np.einsum("ij,ijk->ik", mag, unit)


def simulated_repulsion(PT, domain: InputDomain, cfg: SearchConfig, rng: np.random.Generator, trace: list | None = None) -> np.ndarray:
    """Move every point by force / mass each iteration; each set evolves on
    its own and the best set (nearest-neighbor sum) seen anywhere wins."""
    pop = np.array(PT, dtype=float)
    if pop.ndim == 2:
        pop = pop[None]
    best, fb = None, -math.inf
    for member in pop:
        x = member.copy()
        for _ in range(cfg.iterations):
            x = domain.clip(x + repulsion_forces(x, cfg.charge, domain, rng) / cfg.mass)
            f = fitness_nn_sum(x)
            if f > fb:
                best, fb = x.copy(), f
            if trace is not None:
                trace.append(x.copy())
    return best


def local_spreading(T, domain: InputDomain, cfg: SearchConfig, trace: list | None = None, max_sweeps: int | None = None) -> np.ndarray:
    """Push each point away from its nearest neighbor by
    ``step_fraction * (d_second - d_first)`` while that strictly grows its
    nearest-neighbor distance; repeat until nothing moves.

    Moves can cycle, or creep with vanishing gains, so the search also stops
    once the global minimum has not grown by ``1e-6 * diameter`` for
    ``hc_patience`` sweeps.
    ``trace`` receives the global min-pair distance after every sweep.
    """
    t = _as_set(T)
    if len(t) < 3:
        raise ValueError("local spreading needs at least 3 test cases")
    tol = 1e-12 * domain.diameter
    sweeps = max_sweeps if max_sweeps is not None else 100 * cfg.iterations
    best = fitness_min_pair(t)
    stale = 0
    for _ in range(sweeps):
        moved = False
        for i in range(len(t)):
            dists = np.sqrt(np.sum((t - t[i]) ** 2, axis=1))
            dists[i] = np.inf
            f, s = np.argsort(dists, kind="stable")[:2]
            d_f, d_s = dists[f], dists[s]
            if d_s - d_f <= tol or d_f == 0:
                continue
            direction = (t[i] - t[f]) / d_f
            new = domain.clip(t[i] + cfg.step_fraction * (d_s - d_f) * direction)
            nd = np.sqrt(np.sum((t - new) ** 2, axis=1))
            nd[i] = np.inf
            if nd.min() > d_f + tol:
                t[i] = new
                moved = True
        f = fitness_min_pair(t)
        if trace is not None:
            trace.append(f)
        if f > best + 1e-6 * domain.diameter:
            best, stale = f, 0
        else:
            stale += 1
        if not moved or stale >= cfg.hc_patience:
            break
    return t


def border_points(domain: InputDomain, count: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform points on the faces of the domain."""
    u = rng.random((count, domain.dims))
    face = rng.integers(domain.dims, size=count)
    side = rng.integers(2, size=count).astype(float)
    u[np.arange(count), face] = side
    return domain.lo + u * domain.widths


def voronoi_labels(samples, sites) -> np.ndarray:
    """Index of the nearest site for each sample."""
    return cKDTree(_as_set(sites)).query(_as_set(samples))[1]


def rbcvt(T, domain: InputDomain, cfg: SearchConfig, rng: np.random.Generator) -> np.ndarray:
    """Lloyd iterations with Monte-Carlo cell centroids over uniform samples
    plus a random border set; empty cells keep their site."""
    x = _as_set(T)
    n = len(x)
    for _ in range(cfg.iterations):
        samples = np.concatenate(
            [
                uniform_points(domain, rng, cfg.samples_per_point * n),
                border_points(domain, cfg.border_per_point * n, rng),
            ]
        )
        labels = voronoi_labels(samples, x)
        counts = np.bincount(labels, minlength=n)
        sums = np.zeros_like(x)
        np.add.at(sums, labels, samples)
        filled = counts > 0
        x[filled] = sums[filled] / counts[filled, None]
        x = domain.clip(x)
    return x


@dataclass
class SearchBased(Generator):
    """Emits optimized sets of ``planned_n`` points one at a time, building a
    fresh set whenever the previous one is used up."""

    algorithm: SearchAlgorithm = SearchAlgorithm.RBCVT
    config: SearchConfig = field(default_factory=SearchConfig)
    planned_n: int = 100
    _batch: np.ndarray | None = field(default=None, init=False, repr=False)
    _pos: int = field(default=0, init=False, repr=False)

    def __post_init__(self):
        super().__post_init__()
        self.algorithm = SearchAlgorithm(self.algorithm)
        if self.planned_n < 3:
            raise ValueError("planned_n must be >= 3")

    def optimize(self, rng: np.random.Generator) -> np.ndarray:
        n, cfg, dom = self.planned_n, self.config, self.domain
        alg = self.algorithm
        if alg in (SearchAlgorithm.GENETIC, SearchAlgorithm.SIMULATED_REPULSION):
            ps = max(cfg.population, 2) if alg is SearchAlgorithm.GENETIC else cfg.population
            pop = random_population(dom, ps, n, rng)
            if alg is SearchAlgorithm.GENETIC:
                return genetic(pop, dom, cfg, rng)
            return simulated_repulsion(pop, dom, cfg, rng)
        start = uniform_points(dom, rng, n)
        if alg is SearchAlgorithm.HILL_CLIMB:
            return hill_climb(start, dom, cfg, rng)
        if alg is SearchAlgorithm.SIMULATED_ANNEALING:
            return simulated_annealing(start, dom, cfg, rng)
        if alg is SearchAlgorithm.LOCAL_SPREADING:
            return local_spreading(start, dom, cfg)
        return rbcvt(start, dom, cfg, rng)

    def _propose(self, rng):
        if self._batch is None or self._pos >= len(self._batch):
            self._batch = self.optimize(rng)
            self._pos = 0
        tc = self._batch[self._pos].copy()
        self._pos += 1
        return tc

    def reset(self):
        super().reset()
        self._batch = None
        self._pos = 0
