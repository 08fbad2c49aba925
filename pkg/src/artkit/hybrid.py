"""Cost-reducing wrappers: mirroring, forgetting and divide-and-conquer."""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .core import Generator, InputDomain
from .pbs import PartitionSchema, PartitionState, partition
from .stfcs import FSCS, FscsConfig

__all__ = [
    "MirrorScheme",
    "Mirror",
    "ForgettingKind",
    "ForgettingPolicy",
    "forget",
    "ForgettingFSCS",
    "DivideAndConquer",
]


@dataclass(frozen=True)
class MirrorScheme:
    """Equal grid of ``prod(divisions)`` cells; cell 0 (lowest corner) is the
    source and every other cell is its translated copy."""

    domain: InputDomain
    divisions: tuple[int, ...]

    def __post_init__(self):
        div = tuple(int(v) for v in self.divisions)
        if len(div) != self.domain.dims or any(v < 1 for v in div):
            raise ValueError("need one positive division count per dimension")
        if int(np.prod(div)) < 2:
            raise ValueError("mirroring needs at least 2 subdomains")
        object.__setattr__(self, "divisions", div)

    @property
    def m(self) -> int:
        return int(np.prod(self.divisions))

    @property
    def cell_widths(self) -> np.ndarray:
        return self.domain.widths / np.asarray(self.divisions)

    @property
    def source(self) -> InputDomain:
        lo = self.domain.lo
        return InputDomain(tuple(lo), tuple(lo + self.cell_widths))

    @property
    def translations(self) -> np.ndarray:
        """Offsets of the mirror cells, dimension 0 varying fastest."""
        idx = np.array(list(itertools.product(*[range(s) for s in reversed(self.divisions)])))[:, ::-1]
        return idx[1:] * self.cell_widths

    def images(self, tc) -> np.ndarray:
        return self.domain.clip(np.asarray(tc, dtype=float) + self.translations)


@dataclass
class Mirror(Generator):
    """Round robin: one test from ``inner`` (confined to the source cell),
    then its image in each mirror cell.

    Only source tests reach the inner generator's state.
    """

    scheme: MirrorScheme | None = None
    inner: Generator | None = None
    _pending: list = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        super().__post_init__()
        if self.scheme is None or self.inner is None:
            raise ValueError("Mirror needs a scheme and an inner generator")
        if self.inner.domain != self.scheme.source:
            raise ValueError("inner generator must be confined to the source subdomain")

    def _propose(self, rng):
        if self._pending:
            return self._pending.pop(0)
        tc = self.inner.next(rng)
        self._pending = list(self.scheme.images(tc))
        return tc

    def reset(self):
        super().reset()
        self.inner.reset()
        self._pending = []


class ForgettingKind(str, enum.Enum):
    RECENT_WINDOW = "recent"
    RANDOM_SUBSET = "random"


@dataclass(frozen=True)
class ForgettingPolicy:
    kind: ForgettingKind = ForgettingKind.RECENT_WINDOW
    size: int = 30

    def __post_init__(self):
        object.__setattr__(self, "kind", ForgettingKind(self.kind))
        if self.size < 1:
            raise ValueError("forgetting window must be >= 1")


def forget(executed, policy: ForgettingPolicy, rng: np.random.Generator | None = None) -> np.ndarray:
    """The part of the executed set that fitness computations may consult."""
    e = np.asarray(executed, dtype=float)
    n = len(e)
    if n <= policy.size:
        return e
    if policy.kind is ForgettingKind.RECENT_WINDOW:
        return e[n - policy.size :]
    if rng is None:
        raise ValueError("random-subset forgetting needs an rng")
    keep = np.sort(rng.choice(n, size=policy.size, replace=False))
    return e[keep]


@dataclass
class ForgettingFSCS(FSCS):
    policy: ForgettingPolicy = field(default_factory=ForgettingPolicy)

    def reference_set(self, rng):
        return forget(self.executed.points, self.policy, rng)


def _cell_domain(state: PartitionState, i: int) -> InputDomain:
    return InputDomain(tuple(state.lows[i]), tuple(state.highs[i]))


@dataclass
class DivideAndConquer(Generator):
    """One FSCS instance per bisection cell, dispatched round robin.

    All cells are bisected once every cell holds ``quota`` tests, so each
    FSCS step only scans one cell's population.
    """

    config: FscsConfig = field(default_factory=FscsConfig)
    quota: int = 10
    state: PartitionState = field(init=False, repr=False)
    cells: list = field(default_factory=list, init=False, repr=False)
    cursor: int = field(default=0, init=False)
    retired_distance_evals: int = field(default=0, init=False)
    last_cell: int | None = field(default=None, init=False)

    def __post_init__(self):
        super().__post_init__()
        if self.quota < 1:
            raise ValueError("quota must be >= 1")
        self.reset()

    def reset(self):
        super().reset()
        self.state = PartitionState(self.domain)
        self.cells = [FSCS(self.domain, self.config)]
        self.cursor = 0
        self.retired_distance_evals = 0
        self.last_cell = None

    @property
    def distance_evals(self) -> int:
        return self.retired_distance_evals + sum(c.distance_evals for c in self.cells)

    def _repartition(self):
        self.retired_distance_evals += sum(c.distance_evals for c in self.cells)
        partition(self.state, PartitionSchema.BISECTION_ALL_DIMS)
        pts = self.state.executed.points
        cells = []
        for i in range(len(self.state)):
            g = FSCS(_cell_domain(self.state, i), self.config)
            inside = np.all((pts >= self.state.lows[i]) & (pts < self.state.highs[i]), axis=1)
            g.executed.extend(pts[inside])
            cells.append(g)
        self.cells = cells
        self.cursor = 0

    def _propose(self, rng):
        if all(len(c.executed) >= self.quota for c in self.cells):
            self._repartition()
        i = self.cursor
        self.cursor = (self.cursor + 1) % len(self.cells)
        tc = self.cells[i].next(rng)
        self.state.record(tc)
        self.last_cell = i
        return tc
