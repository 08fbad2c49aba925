"""Test-profile-based ART.

The selection density is a product of radial ramps, one per executed test,
each rising from 0 at the test to 1 at distance ``w``. New tests are drawn by
rejection sampling against that density.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import GenerationBudgetExceeded, Generator, InputDomain, uniform_point, uniform_points

__all__ = ["ProfileKind", "ProfileState", "profile_shape", "profile_width", "density", "TPBS"]


class ProfileKind(str, enum.Enum):
    TRIANGLE = "triangle"
    COSINE = "cosine"
    SEMICIRCLE = "semicircle"
    POWER_LAW = "power_law"


def profile_shape(kind: ProfileKind, u, exponent: float = 2.0) -> np.ndarray:
    """Ramp ``g`` with ``g(0) = 0``, ``g(u) = 1`` for ``u >= 1``."""
    u = np.clip(np.asarray(u, dtype=float), 0.0, 1.0)
    kind = ProfileKind(kind)
    if kind is ProfileKind.TRIANGLE:
        return u
    if kind is ProfileKind.COSINE:
        return (1.0 - np.cos(np.pi * u)) / 2.0
    if kind is ProfileKind.SEMICIRCLE:
        return np.sqrt(1.0 - (1.0 - u) ** 2)
    return u**exponent


def profile_width(domain: InputDomain, n_executed: int) -> float:
    d = domain.dims
    return 0.75 * domain.volume ** (1.0 / d) / (n_executed ** (1.0 / d) + 1.0)


@dataclass
class ProfileState:
    executed: np.ndarray
    kind: ProfileKind = ProfileKind.TRIANGLE
    width: float = 0.1
    exponent: float = 2.0

    def __post_init__(self):
        self.kind = ProfileKind(self.kind)
        if self.kind is ProfileKind.POWER_LAW and not self.exponent > 0:
            raise ValueError("power-law exponent must be > 0")
        if not self.width > 0:
            raise ValueError("width must be > 0")


def density(x, state: ProfileState) -> np.ndarray | float:
    """Selection density at one point or at each row of an ``(n, d)`` array."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    pts = np.atleast_2d(x)
    e = np.asarray(state.executed, dtype=float).reshape(-1, pts.shape[1])
    if len(e) == 0:
        out = np.ones(len(pts))
    else:
        diff = pts[:, None, :] - e[None, :, :]
        u = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff)) / state.width
        out = np.prod(profile_shape(state.kind, u, state.exponent), axis=1)
    return float(out[0]) if single else out


@dataclass
class TPBS(Generator):
    profile: ProfileKind = ProfileKind.TRIANGLE
    exponent: float = 2.0
    max_attempts: int = 10**6
    proposals: int = field(default=0, init=False)

    def __post_init__(self):
        super().__post_init__()
        self.profile = ProfileKind(self.profile)

    def profile_state(self) -> ProfileState:
        return ProfileState(
            self.executed.points, self.profile, profile_width(self.domain, len(self.executed)), self.exponent
        )

    def _propose(self, rng):
        if len(self.executed) == 0:
            return uniform_point(self.domain, rng)
        state = self.profile_state()
        tried = 0
        batch = 8
        while tried < self.max_attempts:
            batch = min(batch, self.max_attempts - tried)
            xs = uniform_points(self.domain, rng, batch)
            us = rng.random(batch)
            ok = us < density(xs, state)
            if ok.any():
                i = int(np.argmax(ok))
                self.proposals += tried + i + 1
                return xs[i]
            tried += batch
            batch = min(2 * batch, 1024)
        raise GenerationBudgetExceeded(f"profile rejection sampling failed after {tried} draws", tried)

    def reset(self):
        super().reset()
        self.proposals = 0
