"""Domain model, seeded random streams and the generator interface."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "InputDomain",
    "ExecutedSet",
    "Generator",
    "RandomTesting",
    "GenerationBudgetExceeded",
    "rng_stream",
    "uniform_point",
    "uniform_points",
    "eligibility_filter",
]

_U64 = 2**64


class GenerationBudgetExceeded(RuntimeError):
    """A generator exhausted its retry budget without producing a test case."""

    def __init__(self, message: str, attempts: int, **details):
        super().__init__(message)
        self.attempts = attempts
        self.details = details


def rng_stream(seed: int, index: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by ``(seed, index)``.

    Philox is used so that sub-streams for replication ``index`` are independent
    of how many numbers any other replication consumed.
    """
    seed = int(seed)
    index = int(index)
    if not (0 <= seed < _U64 and 0 <= index < _U64):
        raise ValueError("seed and index must be unsigned 64-bit integers")
    key = np.array([seed, index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class InputDomain:
    """Axis-aligned box ``[lo_1, hi_1) x ... x [lo_d, hi_d)``."""

    lows: tuple[float, ...]
    highs: tuple[float, ...]

    def __post_init__(self):
        lows = tuple(float(v) for v in self.lows)
        highs = tuple(float(v) for v in self.highs)
        if len(lows) == 0 or len(lows) != len(highs):
            raise ValueError("bounds must be non-empty and of equal length")
        for lo, hi in zip(lows, highs):
            if not (math.isfinite(lo) and math.isfinite(hi)) or not hi > lo:
                raise ValueError(f"invalid bound [{lo}, {hi})")
        object.__setattr__(self, "lows", lows)
        object.__setattr__(self, "highs", highs)
        # cached arrays; not dataclass fields, so equality still uses the tuples
        lo, hi = np.array(lows), np.array(highs)
        for name, arr in (("_lo", lo), ("_hi", hi), ("_w", hi - lo), ("_top", np.nextafter(hi, lo))):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @classmethod
    def unit(cls, dims: int) -> "InputDomain":
        if dims < 1:
            raise ValueError("dims must be >= 1")
        return cls((0.0,) * dims, (1.0,) * dims)

    @classmethod
    def from_bounds(cls, bounds: Iterable[Sequence[float]]) -> "InputDomain":
        pairs = [tuple(b) for b in bounds]
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs))

    @property
    def dims(self) -> int:
        return len(self.lows)

    @property
    def lo(self) -> np.ndarray:
        return self._lo

    @property
    def hi(self) -> np.ndarray:
        return self._hi

    @property
    def widths(self) -> np.ndarray:
        return self._w

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))

    @property
    def center(self) -> np.ndarray:
        return (self.lo + self.hi) / 2.0

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.widths))

    @property
    def bounds(self) -> list[tuple[float, float]]:
        return list(zip(self.lows, self.highs))

    def contains(self, points) -> np.ndarray | bool:
        """Half-open containment test for one point or an ``(n, d)`` array."""
        p = np.asarray(points, dtype=float)
        inside = np.all((p >= self.lo) & (p < self.hi), axis=-1)
        return bool(inside) if p.ndim == 1 else inside

    def clip(self, points) -> np.ndarray:
        """Project onto the domain, keeping the upper bounds open."""
        return np.clip(np.asarray(points, dtype=float), self._lo, self._top)

    def to_unit(self, points) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.lo) / self.widths

    def from_unit(self, points) -> np.ndarray:
        return self.clip(self._lo + np.asarray(points, dtype=float) * self._w)

    def scaled(self, factor: float) -> "InputDomain":
        return InputDomain(tuple(self.lo * factor), tuple(self.hi * factor))


def uniform_points(domain: InputDomain, rng: np.random.Generator, k: int) -> np.ndarray:
    """``k`` independent uniform points as a ``(k, d)`` array."""
    u = rng.random((k, domain.dims))
    return domain.from_unit(u)


def uniform_point(domain: InputDomain, rng: np.random.Generator) -> np.ndarray:
    return domain.from_unit(rng.random(domain.dims))


def eligibility_filter(candidate, executed, epsilon: float = 0.0) -> bool:
    """True when every coordinate differs by more than ``epsilon`` from the
    same coordinate of every executed test."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    e = np.asarray(executed, dtype=float)
    if e.size == 0:
        return True
    c = np.asarray(candidate, dtype=float)
    return bool(np.all(np.abs(e.reshape(-1, c.size) - c) > epsilon))


class ExecutedSet:
    """Append-only point store kept in generation order.

    Backed by a doubling buffer so ``points`` is a cheap contiguous view.
    """

    def __init__(self, dims: int, capacity: int = 64):
        self.dims = dims
        self._buf = np.empty((max(capacity, 1), dims))
        self._n = 0

    def add(self, point) -> None:
        if self._n == len(self._buf):
            grown = np.empty((2 * len(self._buf), self.dims))
            grown[: self._n] = self._buf[: self._n]
            self._buf = grown
        self._buf[self._n] = point
        self._n += 1

    def extend(self, points) -> None:
        for p in np.asarray(points, dtype=float).reshape(-1, self.dims):
            self.add(p)

    def clear(self) -> None:
        self._n = 0

    @property
    def points(self) -> np.ndarray:
        return self._buf[: self._n]

    def __len__(self) -> int:
        return self._n

    def __getitem__(self, i):
        return self.points[i]


@dataclass
class Generator:
    """Base class for every strategy.

    Subclasses implement :meth:`_propose`; the base records each returned
    test case as executed (it was run without failing, otherwise the
    caller would have stopped).
    """

    domain: InputDomain
    executed: ExecutedSet = field(init=False, repr=False)

    def __post_init__(self):
        self.executed = ExecutedSet(self.domain.dims)

    def next(self, rng: np.random.Generator) -> np.ndarray:
        tc = self._propose(rng)
        self.executed.add(tc)
        return tc

    def _propose(self, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def reset(self) -> None:
        self.executed.clear()

    def generate(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = np.empty((n, self.domain.dims))
        for i in range(n):
            out[i] = self.next(rng)
        return out


@dataclass
class RandomTesting(Generator):
    """Pure random testing: independent uniform draws."""

    def next(self, rng: np.random.Generator) -> np.ndarray:
        # RT has no state worth keeping; skip the executed-set bookkeeping.
        return uniform_point(self.domain, rng)
