"""Brute-force reference implementations used only by the tests.

Each one is written with plain loops and the math module so it shares no
code path with the package under test.
"""

import itertools
import math
from fractions import Fraction


def euclid(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def nn_distances(points):
    out = []
    for i, p in enumerate(points):
        out.append(min(euclid(p, q) for j, q in enumerate(points) if j != i))
    return out


def dispersion(points):
    return max(nn_distances(points))


def diversity(points):
    return sum(nn_distances(points))


def divergence(points):
    return sum(euclid(p, q) for p in points for q in points)


def min_pair(points):
    return min(euclid(p, q) for p, q in itertools.combinations(points, 2))


def discrepancy(points, lows, highs, volume=1.0):
    worst = 0.0
    n = len(points)
    for lo, hi in zip(lows, highs):
        inside = sum(all(l <= x < h for x, l, h in zip(p, lo, hi)) for p in points)
        vol = 1.0
        for l, h in zip(lo, hi):
            vol *= h - l
        worst = max(worst, abs(inside / n - vol / volume))
    return worst


def radical_inverse(i, b):
    """Digit reversal with exact fractions."""
    digits = []
    while i:
        i, r = divmod(i, b)
        digits.append(r)
    return float(sum(Fraction(dg, b ** (k + 1)) for k, dg in enumerate(digits)))


def a12(a, b):
    wins = 0.0
    for x in a:
        for y in b:
            wins += 1.0 if x > y else 0.5 if x == y else 0.0
    return wins / (len(a) * len(b))


def midranks(values):
    order = sorted(range(len(values)), key=lambda k: values[k])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def mann_whitney_exact(a, b):
    """U for ``a`` and the two-sided permutation p-value by enumerating every
    relabelling of the pooled sample."""
    pooled = list(a) + list(b)
    ranks = midranks(pooled)
    na = len(a)
    u = sum(ranks[:na]) - na * (na + 1) / 2
    mean = na * (len(pooled) + 1) / 2
    obs = abs(sum(ranks[:na]) - mean)
    hits = total = 0
    for combo in itertools.combinations(range(len(pooled)), na):
        total += 1
        if abs(sum(ranks[k] for k in combo) - mean) >= obs - 1e-9:
            hits += 1
    return u, hits / total


def sobol_bits(i, m_init, degree, coeffs, bits=32):
    """Sobol coordinate by building each direction number from scratch with
    the bitwise recurrence and XOR-ing those picked by the bits of ``i``."""
    if degree == 0:
        m = [1] * bits
    else:
        m = list(m_init)
        while len(m) < bits:
            j = len(m)
            val = m[j - degree] ^ (2**degree * m[j - degree])
            for k in range(1, degree):
                bit = (coeffs >> (degree - 1 - k)) & 1
                val ^= bit * (2**k) * m[j - k]
            m.append(val)
    x = 0
    for j in range(bits):
        if (i >> j) & 1:
            x ^= m[j] * 2 ** (bits - 1 - j)
    return x / 2**bits
