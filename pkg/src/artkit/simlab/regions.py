"""Simulated failure regions.

Geometry lives in normalized coordinates (the domain mapped onto the unit
cube), so a failure rate is simply the regions' total volume there.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import Polygon, box as shapely_box

from ..core import InputDomain
from ..stfcs import ball_volume_constant

__all__ = [
    "PatternKind",
    "FailurePattern",
    "Box",
    "Ball",
    "Strip",
    "FailureProfile",
    "ProfileSpec",
    "InfeasiblePlacement",
    "place_regions",
    "is_failure",
]


class InfeasiblePlacement(ValueError):
    pass


class PatternKind(str, enum.Enum):
    BLOCK_SQUARE = "block"
    BLOCK_RECT = "rect"
    STRIP = "strip"
    POINT_CIRCLES = "point_circles"
    POINT_SQUARES = "point_squares"
    PREDOMINANT = "predominant"


@dataclass(frozen=True)
class FailurePattern:
    kind: PatternKind = PatternKind.BLOCK_SQUARE
    count: int = 1
    aspect: float = 2.0
    q_percent: float = 100.0

    def __post_init__(self):
        object.__setattr__(self, "kind", PatternKind(self.kind))
        if self.count < 1:
            raise ValueError("count must be >= 1")
        if not 0 < self.q_percent <= 100:
            raise ValueError("q_percent must lie in (0, 100]")
        if not self.aspect > 0:
            raise ValueError("aspect must be > 0")
        if self.kind is PatternKind.PREDOMINANT and self.count == 1 and self.q_percent != 100:
            raise ValueError("a single predominant square must carry 100% of the failure rate")

    @property
    def name(self) -> str:
        return self.kind.value


@dataclass(frozen=True)
class Box:
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.hi, self.lo)))

    def contains(self, u: np.ndarray) -> np.ndarray:
        return np.all((u >= self.lo) & (u < self.hi), axis=-1)

    def overlaps(self, other: "Box") -> bool:
        return bool(np.all((np.asarray(self.lo) < other.hi) & (np.asarray(other.lo) < self.hi)))


@dataclass(frozen=True)
class Ball:
    center: tuple[float, ...]
    radius: float

    @property
    def volume(self) -> float:
        return ball_volume_constant(len(self.center)) * self.radius ** len(self.center)

    def contains(self, u: np.ndarray) -> np.ndarray:
        return np.sum((u - np.asarray(self.center)) ** 2, axis=-1) < self.radius**2

    def overlaps(self, other: "Ball") -> bool:
        return math.dist(self.center, other.center) < self.radius + other.radius


@dataclass(frozen=True)
class Strip:
    """Band of half-width ``half_width`` around a line in the first two
    coordinates; it spans every other coordinate fully."""

    point: tuple[float, float]
    normal: tuple[float, float]
    half_width: float

    @property
    def volume(self) -> float:
        return _strip_area(np.asarray(self.point), np.asarray(self.normal), self.half_width)

    def contains(self, u: np.ndarray) -> np.ndarray:
        off = (u[..., 0] - self.point[0]) * self.normal[0] + (u[..., 1] - self.point[1]) * self.normal[1]
        return np.abs(off) <= self.half_width


def _strip_area(point: np.ndarray, normal: np.ndarray, h: float) -> float:
    axis = np.array([-normal[1], normal[0]])
    far = 4.0
    corners = [
        point - far * axis + h * normal,
        point + far * axis + h * normal,
        point + far * axis - h * normal,
        point - far * axis - h * normal,
    ]
    return Polygon(corners).intersection(shapely_box(0.0, 0.0, 1.0, 1.0)).area


@dataclass
class FailureProfile:
    domain: InputDomain
    theta: float
    pattern: FailurePattern
    regions: tuple = ()
    seed: int | None = None
    _cache: tuple | None = field(default=None, init=False, repr=False, compare=False)

    @property
    def measure(self) -> float:
        """Total failure volume as a fraction of the domain."""
        return float(sum(r.volume for r in self.regions))

    def _boxes(self):
        if self._cache is None:
            boxes = [r for r in self.regions if isinstance(r, Box)]
            d = self.domain.dims
            lo = np.array([b.lo for b in boxes], dtype=float).reshape(len(boxes), d)
            hi = np.array([b.hi for b in boxes], dtype=float).reshape(len(boxes), d)
            others = tuple(r for r in self.regions if not isinstance(r, Box))
            self._cache = (lo, hi, others)
        return self._cache

    def contains(self, points) -> np.ndarray | bool:
        p = np.asarray(points, dtype=float)
        u = (p - self.domain.lo) / self.domain.widths
        lo, hi, others = self._boxes()
        if u.ndim == 1:
            if len(lo) and np.any(np.all((u >= lo) & (u < hi), axis=1)):
                return True
            return any(bool(r.contains(u)) for r in others)
        hit = np.zeros(len(u), dtype=bool)
        if len(lo):
            hit |= np.any(np.all((u[:, None, :] >= lo[None]) & (u[:, None, :] < hi[None]), axis=2), axis=1)
        for r in others:
            hit |= r.contains(u)
        return hit


@dataclass(frozen=True)
class ProfileSpec:
    """Failure rate plus pattern; placed afresh for every run."""

    theta: float
    pattern: FailurePattern = field(default_factory=FailurePattern)

    def place(self, domain: InputDomain, rng: np.random.Generator) -> FailureProfile:
        return place_regions(domain, self.theta, self.pattern, rng)


def _place_box(sides: np.ndarray, rng) -> Box:
    lo = rng.random(len(sides)) * (1.0 - sides)
    return Box(tuple(lo), tuple(lo + sides))


def _place_disjoint(makers, rng, max_attempts: int):
    """Place regions one by one, resampling any that overlaps an earlier one."""
    for _ in range(max_attempts):
        placed = []
        ok = True
        for make in makers:
            for _ in range(max_attempts):
                r = make(rng)
                if not any(r.overlaps(q) for q in placed if type(q) is type(r)):
                    placed.append(r)
                    break
            else:
                ok = False
                break
        if ok:
            return tuple(placed)
    raise InfeasiblePlacement("could not place non-overlapping failure regions")


def _strip(theta: float, rng) -> Strip:
    edges = rng.choice(4, size=2, replace=False)

    def on_edge(e, t):
        return np.array([(t, 0.0), (1.0, t), (t, 1.0), (0.0, t)][e])

    for _ in range(1000):
        p1, p2 = on_edge(edges[0], rng.random()), on_edge(edges[1], rng.random())
        if np.linalg.norm(p2 - p1) > 1e-9:
            break
        edges = rng.choice(4, size=2, replace=False)
    axis = (p2 - p1) / np.linalg.norm(p2 - p1)
    normal = np.array([-axis[1], axis[0]])
    lo, hi = 0.0, math.sqrt(2.0)
    for _ in range(100):
        mid = (lo + hi) / 2
        if _strip_area(p1, normal, mid) < theta:
            lo = mid
        else:
            hi = mid
    return Strip(tuple(p1), tuple(normal), (lo + hi) / 2)


def place_regions(
    domain: InputDomain,
    theta: float,
    pattern: FailurePattern,
    rng: np.random.Generator,
    max_attempts: int = 1000,
) -> FailureProfile:
    """Randomly place failure regions of total measure ``theta`` fully inside
    the domain, without overlaps."""
    if not 0 < theta < 1:
        raise ValueError("theta must lie in (0, 1)")
    d = domain.dims
    kind = pattern.kind
    if kind is PatternKind.BLOCK_SQUARE or (kind is PatternKind.STRIP and d == 1):
        regions = (_place_box(np.full(d, theta ** (1.0 / d)), rng),)
    elif kind is PatternKind.BLOCK_RECT:
        s = (theta / pattern.aspect) ** (1.0 / d)
        sides = np.full(d, s)
        sides[0] *= pattern.aspect
        if np.any(sides >= 1):
            raise InfeasiblePlacement(f"rectangle with aspect {pattern.aspect} does not fit at theta={theta}")
        regions = (_place_box(sides, rng),)
    elif kind is PatternKind.STRIP:
        regions = (_strip(theta, rng),)
    elif kind is PatternKind.POINT_CIRCLES:
        r = (theta / pattern.count / ball_volume_constant(d)) ** (1.0 / d)
        if 2 * r >= 1:
            raise InfeasiblePlacement("circles too large for the domain")
        makers = [lambda g: Ball(tuple(r + g.random(d) * (1 - 2 * r)), r)] * pattern.count
        regions = _place_disjoint(makers, rng, max_attempts)
    elif kind is PatternKind.POINT_SQUARES:
        side = np.full(d, (theta / pattern.count) ** (1.0 / d))
        regions = _place_disjoint([lambda g: _place_box(side, g)] * pattern.count, rng, max_attempts)
    else:
        q = pattern.q_percent / 100.0
        shares = [q * theta]
        if pattern.count > 1:
            shares += list((1 - q) * theta * rng.dirichlet(np.ones(pattern.count - 1)))
        makers = [(lambda s: (lambda g: _place_box(np.full(d, s ** (1.0 / d)), g)))(s) for s in shares if s > 0]
        regions = _place_disjoint(makers, rng, max_attempts)
    return FailureProfile(domain, theta, pattern, tuple(regions))


def is_failure(tc, profile: FailureProfile) -> bool | np.ndarray:
    return profile.contains(tc)
