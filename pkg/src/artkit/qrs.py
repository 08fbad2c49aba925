"""Quasi-random ART: Van der Corput, Halton and Sobol sequences plus
randomization (Cranley-Patterson rotation, random shaking and rotation)."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

import numpy as np

from .core import Generator

__all__ = [
    "SOBOL_BITS",
    "DirectionEntry",
    "load_direction_table",
    "sobol_direction_integers",
    "van_der_corput",
    "halton",
    "sobol",
    "first_primes",
    "cranley_patterson",
    "shake_and_rotate",
    "SequenceKind",
    "RandomizerKind",
    "QRS",
]

SOBOL_BITS = 32


def van_der_corput(i: int, b: int) -> float:
    """Radical inverse of ``i`` in base ``b``, rounded once from the exact
    rational."""
    if b < 2:
        raise ValueError("base must be >= 2")
    if i < 0:
        raise ValueError("index must be >= 0")
    num, den = 0, 1
    while i:
        i, digit = divmod(i, b)
        num = num * b + digit
        den *= b
    return num / den


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


def first_primes(d: int) -> tuple[int, ...]:
    out: list[int] = []
    n = 2
    while len(out) < d:
        if _is_prime(n):
            out.append(n)
        n += 1
    return tuple(out)


def _check_bases(bases) -> tuple[int, ...]:
    bases = tuple(int(b) for b in bases)
    if not bases:
        raise ValueError("at least one base is required")
    for b in bases:
        if not _is_prime(b):
            raise ValueError(f"Halton base {b} is not prime")
    if len(set(bases)) != len(bases):
        raise ValueError(f"Halton bases {bases} are not pairwise coprime")
    return bases


def halton(i: int, bases) -> np.ndarray:
    return np.array([van_der_corput(i, b) for b in _check_bases(bases)])


@dataclass(frozen=True)
class DirectionEntry:
    dim: int
    degree: int
    coeffs: int
    m: tuple[int, ...]


def load_direction_table(text: str | None = None) -> tuple[DirectionEntry, ...]:
    """Parse the shipped direction-number file (or ``text`` in the same format)."""
    if text is None:
        text = resources.files("artkit").joinpath("data/sobol_directions.txt").read_text()
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        f = [int(v) for v in line.split()]
        if len(f) < 3 or len(f) != 3 + f[1]:
            raise ValueError(f"direction table line {lineno}: expected dim, degree, coeffs and {f[1] if len(f) > 1 else '?'} initial values")
        entry = DirectionEntry(f[0], f[1], f[2], tuple(f[3:]))
        if entry.dim != len(rows) + 1:
            raise ValueError(f"direction table line {lineno}: dimensions must be listed in order")
        for k, mk in enumerate(entry.m, 1):
            if mk % 2 == 0 or mk >= 2**k:
                raise ValueError(f"direction table line {lineno}: m_{k}={mk} must be odd and < 2^{k}")
        rows.append(entry)
    return tuple(rows)


@lru_cache(maxsize=None)
def _default_table() -> tuple[DirectionEntry, ...]:
    return load_direction_table()


def sobol_direction_integers(entry: DirectionEntry, bits: int = SOBOL_BITS) -> list[int]:
    """Direction integers ``v_1..v_bits`` scaled by ``2^bits``."""
    s, a = entry.degree, entry.coeffs
    if s == 0:
        m = [1] * bits
    else:
        m = list(entry.m)
        for j in range(s, bits):
            new = m[j - s] ^ (m[j - s] << s)
            for k in range(1, s):
                if (a >> (s - 1 - k)) & 1:
                    new ^= m[j - k] << k
            m.append(new)
    return [m[j] << (bits - 1 - j) for j in range(bits)]


@lru_cache(maxsize=64)
def _directions(d: int, table: tuple[DirectionEntry, ...]) -> tuple[tuple[int, ...], ...]:
    if d > len(table):
        raise ValueError(f"Sobol table covers {len(table)} dimensions, {d} requested")
    return tuple(tuple(sobol_direction_integers(table[k])) for k in range(d))


def sobol(i: int, d: int, table: tuple[DirectionEntry, ...] | None = None) -> np.ndarray:
    """``i``-th Sobol point: XOR of the direction numbers selected by the
    binary digits of ``i``."""
    if i < 1 or i >= 2**SOBOL_BITS:
        raise ValueError(f"index must be in [1, 2^{SOBOL_BITS})")
    dirs = _directions(d, table or _default_table())
    out = np.empty(d)
    for k, v in enumerate(dirs):
        x, j, n = 0, 0, i
        while n:
            if n & 1:
                x ^= v[j]
            n >>= 1
            j += 1
        out[k] = x / 2**SOBOL_BITS
    return out


def _wrap(y: np.ndarray) -> np.ndarray:
    y = y - np.floor(y)
    return np.where(y >= 1.0, 0.0, y)


def cranley_patterson(p, v) -> np.ndarray:
    """Shift by ``v`` on the unit torus."""
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if p.shape[-1] != v.shape[-1]:
        raise ValueError("point and shift vector dimensions differ")
    s = p + v
    return _wrap(np.where(s >= 1.0, s - 1.0, s))


def cosine_offsets(rng: np.random.Generator, size) -> np.ndarray:
    """Samples on [-1, 1] with density proportional to ``cos(pi s / 2)``."""
    return (2.0 / np.pi) * np.arcsin(2.0 * rng.random(size) - 1.0)


def shake_and_rotate(p, amplitude: float, v, rng: np.random.Generator) -> np.ndarray:
    """Cosine-distributed jitter of at most ``amplitude`` per coordinate,
    then a torus shift by ``v``."""
    p = np.asarray(p, dtype=float)
    if amplitude < 0:
        raise ValueError("amplitude must be >= 0")
    if amplitude == 0:
        return cranley_patterson(p, v)
    shaken = p + amplitude * cosine_offsets(rng, p.shape)
    return cranley_patterson(_wrap(shaken), v)


class SequenceKind(str, enum.Enum):
    VAN_DER_CORPUT = "van_der_corput"
    HALTON = "halton"
    SOBOL = "sobol"


class RandomizerKind(str, enum.Enum):
    NONE = "none"
    CRANLEY_PATTERSON = "cranley_patterson"
    SHAKE_AND_ROTATE = "shake_and_rotate"


@dataclass
class QRS(Generator):
    """Quasi-random sequence element, randomized, scaled to the domain.

    The rotation vector is drawn on the first call after :meth:`reset`, so
    every run gets its own randomization.
    """

    sequence: SequenceKind = SequenceKind.HALTON
    randomizer: RandomizerKind = RandomizerKind.NONE
    bases: tuple[int, ...] | None = None
    amplitude: float | None = None
    planned_n: int | None = None
    start_index: int = 1
    steps: int = field(default=0, init=False)
    index: int = field(default=1, init=False)
    shift: np.ndarray | None = field(default=None, init=False, repr=False)

    def __post_init__(self):
        super().__post_init__()
        self.sequence = SequenceKind(self.sequence)
        self.randomizer = RandomizerKind(self.randomizer)
        d = self.domain.dims
        if self.sequence is SequenceKind.VAN_DER_CORPUT:
            if d != 1:
                raise ValueError("the Van der Corput sequence is one-dimensional; use halton")
            self.bases = tuple(self.bases or (2,))
        if self.sequence in (SequenceKind.HALTON, SequenceKind.VAN_DER_CORPUT):
            self.bases = _check_bases(self.bases or first_primes(d))
            if len(self.bases) != d:
                raise ValueError(f"need {d} bases, got {len(self.bases)}")
        else:
            _directions(d, _default_table())
        if self.start_index < 1:
            raise ValueError("start_index must be >= 1")
        self.reset()

    @property
    def resolved_amplitude(self) -> float:
        if self.amplitude is not None:
            return self.amplitude
        if self.planned_n:
            return 0.5 / self.planned_n ** (1.0 / self.domain.dims)
        return 1e-3

    def raw(self, i: int) -> np.ndarray:
        if self.sequence is SequenceKind.SOBOL:
            return sobol(i, self.domain.dims)
        return halton(i, self.bases)

    def _propose(self, rng):
        p = self.raw(self.index)
        self.index += 1
        self.steps += 1
        if self.randomizer is not RandomizerKind.NONE:
            if self.shift is None:
                self.shift = rng.random(self.domain.dims)
            if self.randomizer is RandomizerKind.CRANLEY_PATTERSON:
                p = cranley_patterson(p, self.shift)
            else:
                p = shake_and_rotate(p, self.resolved_amplitude, self.shift, rng)
        return self.domain.from_unit(p)

    def reset(self):
        super().reset()
        self.index = self.start_index
        self.steps = 0
        self.shift = None
