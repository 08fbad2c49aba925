"""Partitioning-based ART: partition the domain, pick a cell, sample in it."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import maximum_filter

from .core import ExecutedSet, Generator, InputDomain
from .metrics import center_region

__all__ = [
    "PartitionSchema",
    "SelectionCriterion",
    "Subdomain",
    "PartitionState",
    "NoQualifyingCell",
    "partition",
    "select_subdomain",
    "ProportionalState",
    "PBS",
]


class PartitionSchema(str, enum.Enum):
    STATIC = "static"
    RANDOM_BREAKPOINT = "random"
    BISECTION_PER_DIM = "bisection_per_dim"
    BISECTION_ALL_DIMS = "bisection_all_dims"
    ITERATIVE_GRID = "iterative_grid"
    ITERATIVE_LARGEST_DIM = "iterative_largest_dim"

    @property
    def is_grid(self) -> bool:
        return self is not PartitionSchema.RANDOM_BREAKPOINT


class SelectionCriterion(str, enum.Enum):
    MAX_SIZE = "max_size"
    FEWEST_TESTS = "fewest_tests"
    NO_TEST_SELF_OR_NEIGHBOR = "no_test_self_or_neighbor"
    PROPORTIONAL = "proportional"


class NoQualifyingCell(LookupError):
    pass


@dataclass(frozen=True)
class Subdomain:
    """A box, optionally with a concentric box cut out of it (edge region)."""

    lo: np.ndarray
    hi: np.ndarray
    index: int | None = None
    hole: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def volume(self) -> float:
        v = float(np.prod(self.hi - self.lo))
        if self.hole is not None:
            v -= float(np.prod(self.hole[1] - self.hole[0]))
        return v

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        inside = bool(np.all((x >= self.lo) & (x < self.hi)))
        if inside and self.hole is not None:
            inside = not bool(np.all((x >= self.hole[0]) & (x < self.hole[1])))
        return inside

    def sample(self, rng: np.random.Generator, max_attempts: int = 10**6) -> np.ndarray:
        top = np.nextafter(self.hi, self.lo)
        for _ in range(max_attempts):
            x = np.minimum(self.lo + (self.hi - self.lo) * rng.random(len(self.lo)), top)
            if self.hole is None or self.contains(x):
                return x
        raise RuntimeError("could not sample subdomain")


@dataclass
class PartitionState:
    """Current cells (as ``(m, d)`` bound arrays) plus per-cell test counts."""

    domain: InputDomain
    lows: np.ndarray = field(init=False)
    highs: np.ndarray = field(init=False)
    counts: np.ndarray = field(init=False)
    round: int = 0
    grid_shape: tuple[int, ...] | None = None
    executed: ExecutedSet = field(init=False, repr=False)

    def __post_init__(self):
        self.lows = self.domain.lo[None].copy()
        self.highs = self.domain.hi[None].copy()
        self.counts = np.zeros(1, dtype=np.int64)
        self.executed = ExecutedSet(self.domain.dims)
        if self.grid_shape is None:
            self.grid_shape = (1,) * self.domain.dims
        self._grid_idx = np.zeros((1, self.domain.dims), dtype=np.int64)

    def __len__(self) -> int:
        return len(self.lows)

    @property
    def volumes(self) -> np.ndarray:
        return np.prod(self.highs - self.lows, axis=1)

    def cell(self, i: int) -> Subdomain:
        return Subdomain(self.lows[i].copy(), self.highs[i].copy(), i)

    def locate(self, x) -> int:
        x = np.asarray(x, dtype=float)
        hit = np.flatnonzero(np.all((x >= self.lows) & (x < self.highs), axis=1))
        if len(hit) != 1:
            raise ValueError(f"point {x} lies in {len(hit)} cells")
        return int(hit[0])

    def set_grid(self, shape: tuple[int, ...]) -> None:
        """Rebuild as a regular grid; cells are ordered with dimension 0 fastest."""
        shape = tuple(int(s) for s in shape)
        w = self.domain.widths / np.asarray(shape)
        idx = np.array(list(itertools.product(*[range(s) for s in reversed(shape)])))[:, ::-1]
        self.lows = self.domain.lo + idx * w
        self.highs = self.domain.lo + (idx + 1) * w
        # exact outer faces so the union is the whole domain
        last = idx == np.asarray(shape) - 1
        self.highs[last] = np.broadcast_to(self.domain.hi, self.highs.shape)[last]
        self.grid_shape = shape
        self._grid_idx = idx
        self.recount()

    def grid_index(self, i: int) -> np.ndarray:
        return self._grid_idx[i]

    def recount(self) -> None:
        pts = self.executed.points
        counts = np.zeros(len(self.lows), dtype=np.int64)
        if len(pts):
            inside = np.all((pts[:, None, :] >= self.lows[None]) & (pts[:, None, :] < self.highs[None]), axis=2)
            if self.grid_shape is None:
                # breakpoints sit on the faces of the cells they created
                on_face = np.any(pts[:, None, :] == self.lows[None], axis=2)
                inside &= ~on_face
            counts = inside.sum(axis=0)
        self.counts = counts

    def record(self, x) -> None:
        self.executed.add(x)
        i = self.locate(x)
        if self.grid_shape is not None:
            self.counts[i] += 1
        elif not np.any(np.asarray(x) == self.lows[i]):
            self.counts[i] += 1

    def split_at(self, x) -> None:
        """Cut the cell containing ``x`` into ``2^d`` children at ``x``."""
        x = np.asarray(x, dtype=float)
        i = self.locate(x)
        lo, hi = self.lows[i], self.highs[i]
        d = self.domain.dims
        corners = np.array(np.meshgrid(*[[0, 1]] * d, indexing="ij")).reshape(d, -1).T
        new_lo = np.where(corners == 0, lo, x)
        new_hi = np.where(corners == 0, x, hi)
        keep = np.all(new_hi > new_lo, axis=1)
        self.lows = np.concatenate([np.delete(self.lows, i, 0), new_lo[keep]])
        self.highs = np.concatenate([np.delete(self.highs, i, 0), new_hi[keep]])
        self.grid_shape = None
        self.recount()

    def neighbors(self, i: int) -> np.ndarray:
        """Cells sharing a face, edge or corner with cell ``i``."""
        if self.grid_shape is not None:
            close = np.all(np.abs(self._grid_idx - self._grid_idx[i]) <= 1, axis=1)
        else:
            close = np.all((self.lows <= self.highs[i]) & (self.lows[i] <= self.highs), axis=1)
        close[i] = False
        return np.flatnonzero(close)


def partition(state: PartitionState, schema: PartitionSchema, latest=None, static_divisions: int = 2) -> PartitionState:
    """Apply one partitioning round of ``schema`` to ``state`` in place.

    ``latest`` is the most recent test; only random partitioning uses it.
    """
    schema = PartitionSchema(schema)
    d = state.domain.dims
    if schema is PartitionSchema.STATIC:
        if state.round == 0:
            if static_divisions < 1:
                raise ValueError("static_divisions must be >= 1")
            state.set_grid((static_divisions,) * d)
            state.round = 1
    elif schema is PartitionSchema.RANDOM_BREAKPOINT:
        if latest is not None:
            state.split_at(latest)
            state.round += 1
    elif schema is PartitionSchema.BISECTION_PER_DIM:
        shape = list(state.grid_shape)
        shape[state.round % d] *= 2
        state.set_grid(tuple(shape))
        state.round += 1
    elif schema is PartitionSchema.BISECTION_ALL_DIMS:
        state.set_grid(tuple(2 * s for s in state.grid_shape))
        state.round += 1
    elif schema is PartitionSchema.ITERATIVE_GRID:
        i = max(state.round, 1) + 1
        state.set_grid((i,) * d)
        state.round = i
    elif schema is PartitionSchema.ITERATIVE_LARGEST_DIM:
        shape = list(state.grid_shape)
        widest = int(np.argmax(state.domain.widths / np.asarray(shape)))
        shape[widest] += 1
        state.set_grid(tuple(shape))
        state.round += 1
    return state


@dataclass
class ProportionalState:
    """Edge/center odds for proportional selection.

    The multiplicative decay after each failure-free test is a stand-in:
    the published criterion calls the probabilities dynamic but gives no
    update rule.
    """

    p_edge: float = 0.5
    p_center: float = 0.5
    decay: float = 0.99

    def __post_init__(self):
        if not (0 <= self.p_edge <= 1 and 0 <= self.p_center <= 1) or self.p_edge + self.p_center <= 0:
            raise ValueError("p_edge and p_center must lie in [0, 1] and not both be 0")

    def update(self, chose_edge: bool) -> None:
        if chose_edge:
            self.p_edge *= self.decay
        else:
            self.p_center *= self.decay
        total = self.p_edge + self.p_center
        self.p_edge, self.p_center = self.p_edge / total, self.p_center / total


def _pick(rng, candidates: np.ndarray) -> int:
    if len(candidates) == 1:
        return int(candidates[0])
    return int(candidates[rng.integers(len(candidates))])


def select_subdomain(
    state: PartitionState,
    criterion: SelectionCriterion,
    rng: np.random.Generator,
    proportional: ProportionalState | None = None,
) -> Subdomain:
    """Choose where the next test goes; raises :class:`NoQualifyingCell`."""
    criterion = SelectionCriterion(criterion)
    if criterion is SelectionCriterion.PROPORTIONAL:
        p = proportional or ProportionalState()
        lo_c, hi_c = center_region(state.domain)
        if rng.random() < p.p_edge / (p.p_edge + p.p_center):
            return Subdomain(state.domain.lo, state.domain.hi, index=0, hole=(lo_c, hi_c))
        return Subdomain(lo_c, hi_c, index=1)
    counts = state.counts
    if criterion is SelectionCriterion.MAX_SIZE:
        empty = np.flatnonzero(counts == 0)
        if len(empty) == 0:
            raise NoQualifyingCell("no empty cell")
        vols = state.volumes[empty]
        best = empty[vols >= vols.max() * (1 - 1e-12)]
        return state.cell(_pick(rng, best))
    if criterion is SelectionCriterion.FEWEST_TESTS:
        return state.cell(_pick(rng, np.flatnonzero(counts == counts.min())))
    occupied = counts > 0
    if state.grid_shape is not None:
        # cell order is dimension-0 fastest, i.e. Fortran order on grid_shape
        grid = occupied.reshape(state.grid_shape, order="F")
        blocked = maximum_filter(grid, size=3, mode="constant", cval=False)
        ok = np.flatnonzero(~blocked.reshape(-1, order="F"))
    else:
        ok = [i for i in np.flatnonzero(~occupied) if not occupied[state.neighbors(i)].any()]
    if len(ok) == 0:
        raise NoQualifyingCell("every empty cell touches an occupied cell")
    return state.cell(_pick(rng, np.asarray(ok)))


@dataclass
class PBS(Generator):
    schema: PartitionSchema = PartitionSchema.BISECTION_ALL_DIMS
    criterion: SelectionCriterion = SelectionCriterion.FEWEST_TESTS
    static_divisions: int = 2
    p_edge: float = 0.5
    p_center: float = 0.5
    decay: float = 0.99
    max_rounds: int = 64
    state: PartitionState = field(init=False, repr=False)
    proportional: ProportionalState = field(init=False, repr=False)
    last_subdomain: Subdomain | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        super().__post_init__()
        self.schema = PartitionSchema(self.schema)
        self.criterion = SelectionCriterion(self.criterion)
        self.reset()

    def reset(self):
        super().reset()
        self.state = PartitionState(self.domain)
        self.proportional = ProportionalState(self.p_edge, self.p_center, self.decay)
        self.last_subdomain = None
        if self.schema is PartitionSchema.STATIC:
            partition(self.state, self.schema, static_divisions=self.static_divisions)

    def _select(self, rng) -> Subdomain:
        st = self.state
        if self.criterion is SelectionCriterion.PROPORTIONAL:
            return select_subdomain(st, self.criterion, rng, self.proportional)
        if self.schema.is_grid and np.all(st.counts > 0):
            partition(st, self.schema, static_divisions=self.static_divisions)
        for _ in range(self.max_rounds):
            try:
                return select_subdomain(st, self.criterion, rng)
            except NoQualifyingCell:
                if self.schema in (PartitionSchema.STATIC, PartitionSchema.RANDOM_BREAKPOINT):
                    break
                partition(st, self.schema, static_divisions=self.static_divisions)
        # cells cannot be refined further: fall back to the least-populated one
        return select_subdomain(st, SelectionCriterion.FEWEST_TESTS, rng)

    def _propose(self, rng):
        if len(self.executed) == 0:
            sub = Subdomain(self.domain.lo, self.domain.hi)
        else:
            sub = self._select(rng)
        tc = sub.sample(rng)
        self.last_subdomain = sub
        if self.criterion is SelectionCriterion.PROPORTIONAL and len(self.executed):
            self.proportional.update(chose_edge=sub.hole is not None)
        self.state.record(tc)
        if self.schema is PartitionSchema.RANDOM_BREAKPOINT:
            partition(self.state, self.schema, latest=tc)
        return tc
