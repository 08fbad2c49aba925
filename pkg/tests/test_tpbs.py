import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from artkit.core import InputDomain, rng_stream
from artkit.tpbs import TPBS, ProfileKind, ProfileState, density, profile_shape, profile_width

UNIT1 = InputDomain.unit(1)
UNIT2 = InputDomain.unit(2)


def test_density_zero_at_executed():
    e = np.array([[0.2, 0.3], [0.7, 0.7]])
    for kind in ProfileKind:
        s = ProfileState(e, kind, 0.1)
        assert density(e[0], s) == 0.0 and density(e[1], s) == 0.0


def test_density_empty_is_one():
    s = ProfileState(np.empty((0, 2)), ProfileKind.COSINE, 0.1)
    assert density([0.4, 0.9], s) == 1.0


def test_triangle_example():
    s = ProfileState(np.array([[0.5]]), ProfileKind.TRIANGLE, 0.2)
    assert density([0.6], s) == pytest.approx(0.5)
    assert density([0.8], s) == 1.0


@pytest.mark.parametrize("kind", list(ProfileKind))
def test_profiles_are_monotone_ramps(kind):
    u = np.linspace(0, 1.5, 200)
    g = profile_shape(kind, u)
    assert g[0] == 0.0 and np.all(g[u >= 1] == 1.0)
    assert np.all(np.diff(g) >= -1e-15)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6), n=st.integers(1, 10))
def test_density_one_far_from_all(seed, n):
    rng = np.random.default_rng(seed)
    e = rng.random((n, 2)) * 0.4
    s = ProfileState(e, ProfileKind.TRIANGLE, 0.1)
    x = np.array([0.95, 0.95])
    assert density(x, s) == 1.0


def test_width_shrinks():
    assert profile_width(UNIT2, 10) < profile_width(UNIT2, 1)
    assert profile_width(UNIT2, 0) == pytest.approx(0.75)


def test_never_coincides_and_deterministic():
    a = TPBS(UNIT2).generate(100, rng_stream(3))
    b = TPBS(UNIT2).generate(100, rng_stream(3))
    assert a.tobytes() == b.tobytes()
    assert len(np.unique(a, axis=0)) == 100


def test_tpbs_spreads_more_than_rt():
    e = np.random.default_rng(0).random((15, 2))
    rng = rng_stream(5)
    g = TPBS(UNIT2)
    g.executed.extend(e)
    tp, rt = [], []
    for _ in range(2000):
        x = g._propose(rng)
        tp.append(np.min(np.linalg.norm(e - x, axis=1)))
        rt.append(np.min(np.linalg.norm(e - rng.random(2), axis=1)))
    assert np.mean(tp) > np.mean(rt)


def test_acceptance_histogram_matches_density():
    # one executed point at 0.5 with fixed width: accepted draws follow the ramp
    g = TPBS(UNIT1)
    g.executed.add([0.5])
    rng = rng_stream(7)
    xs = np.array([g._propose(rng)[0] for _ in range(20_000)])
    w = profile_width(UNIT1, 1)
    edges = np.linspace(0, 1, 21)
    grid = np.linspace(0, 1, 200_001)
    dens = profile_shape(ProfileKind.TRIANGLE, np.abs(grid - 0.5) / w)
    cdf = np.concatenate([[0], np.cumsum((dens[1:] + dens[:-1]) / 2 * np.diff(grid))])
    cdf /= cdf[-1]
    probs = np.diff(np.interp(edges, grid, cdf))
    counts, _ = np.histogram(xs, bins=edges)
    assert stats.chisquare(counts, probs * len(xs)).pvalue > 0.001
