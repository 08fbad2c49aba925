import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from artkit.core import GenerationBudgetExceeded, InputDomain, RandomTesting, rng_stream
from artkit.stfcs import (
    FSCS,
    MCMC,
    RRT,
    FitnessKind,
    FscsConfig,
    McmcConfig,
    RrtConfig,
    candidate_fitness,
    exclusion_radius,
    fitness,
    fscs_next,
    fscs_select,
    mcmc_accept,
    rrt_next,
)

from . import oracles

UNIT2 = InputDomain.unit(2)


def test_fitness_examples():
    assert fitness((0.5, 0.5), [(0, 0), (1, 1)], FitnessKind.MIN_DISTANCE) == pytest.approx(math.sqrt(0.5))
    assert fitness((0, 0), [(0, 0.3), (0, 0.9)], FitnessKind.MAX_DISTANCE) == pytest.approx(0.9)
    assert fitness((0, 0), [(1, 0), (0, 1)], FitnessKind.CENTROID_DISTANCE) == pytest.approx(math.sqrt(0.5))
    assert fitness((0, 0), [(0, 0.3), (0, 0.9)], FitnessKind.AVG_DISTANCE) == pytest.approx(0.6)


def test_distance_fitness_needs_executed():
    with pytest.raises(ValueError):
        fitness((0.1, 0.1), np.empty((0, 2)), FitnessKind.MIN_DISTANCE)


def test_discrepancy_fitness_prefers_empty_region():
    e = [(0.1, 0.1), (0.15, 0.12), (0.2, 0.05)]
    f = candidate_fitness([(0.12, 0.1), (0.8, 0.8)], e, FitnessKind.DISCREPANCY_GAIN, UNIT2)
    assert f[1] > f[0]


def test_fscs_select_example():
    assert fscs_select([(0.1, 0.1), (0.4, 0.4)], [(0.5, 0.5)]) == 0


def test_fscs_select_ties_go_first():
    assert fscs_select([(0.4, 0.5), (0.6, 0.5)], [(0.5, 0.5)]) == 0


def test_fscs_first_test_uniform_and_deterministic():
    a = fscs_next(np.empty((0, 2)), FscsConfig(), UNIT2, rng_stream(3))
    b = rng_stream(3).random(2)
    assert np.array_equal(a, b)


def test_fscs_selected_is_best_in_batch():
    g = FSCS(UNIT2)
    rng = rng_stream(21)
    for _ in range(60):
        before = g.executed.points.copy()
        tc = g.next(rng)
        if g.last_candidates is None:
            continue
        nn = [min(oracles.euclid(c, e) for e in before) for c in g.last_candidates]
        assert min(oracles.euclid(tc, e) for e in before) == pytest.approx(max(nn))


def test_fscs_argmax_scale_invariant():
    a = FSCS(UNIT2)
    b = FSCS(InputDomain((0.0, 0.0), (7.5, 7.5)))
    ra, rb = rng_stream(4), rng_stream(4)
    for _ in range(40):
        a.next(ra)
        b.next(rb)
        if a.last_fitness is not None:
            assert np.argmax(a.last_fitness) == np.argmax(b.last_fitness)


def test_fscs_eligibility_budget_error():
    g = FSCS(InputDomain.unit(1), FscsConfig(k=2, epsilon=0.6, max_attempts=200))
    rng = rng_stream(0)
    with pytest.raises(GenerationBudgetExceeded) as err:
        for _ in range(5):
            g.next(rng)
    assert err.value.attempts == 200


def test_fscs_eligibility_filter_respected():
    g = FSCS(UNIT2, FscsConfig(k=5, epsilon=0.01))
    rng = rng_stream(2)
    pts = g.generate(30, rng)
    for i in range(1, 30):
        assert np.all(np.abs(pts[:i] - pts[i]) > 0.01)


def test_fscs_distance_counter():
    g = FSCS(UNIT2, FscsConfig(k=10))
    g.generate(20, rng_stream(1))
    assert g.distance_evals == 10 * sum(range(1, 20))


def test_exclusion_radius_examples():
    assert exclusion_radius(1.0, UNIT2, 1) == pytest.approx(0.564190, abs=1e-6)
    assert exclusion_radius(1.0, UNIT2, 4) == pytest.approx(0.282095, abs=1e-6)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 1000), d=st.integers(1, 6), R=st.floats(0.1, 2.0))
def test_exclusion_radius_decreasing(n, d, R):
    dom = InputDomain.unit(d)
    assert exclusion_radius(R, dom, n + 1) < exclusion_radius(R, dom, n)


def test_exclusion_radius_matches_pi_in_2d():
    assert exclusion_radius(0.75, UNIT2, 10) == pytest.approx(math.sqrt(0.75 / (math.pi * 10)))


def test_rrt_rejects_close_candidate():
    r = exclusion_radius(1.0, UNIT2, 1)
    assert oracles.euclid((0.6, 0.6), (0.5, 0.5)) < r
    rng = rng_stream(9)
    for _ in range(200):
        tc = rrt_next([(0.5, 0.5)], RrtConfig(R=1.0), UNIT2, rng)
        assert oracles.euclid(tc, (0.5, 0.5)) >= r


def test_rrt_outputs_respect_radius():
    g = RRT(UNIT2, RrtConfig(R=0.5))
    rng = rng_stream(6)
    for _ in range(80):
        before = g.executed.points.copy()
        tc = g.next(rng)
        if len(before):
            r = exclusion_radius(0.5, UNIT2, len(before))
            assert min(oracles.euclid(tc, e) for e in before) >= r


def test_rrt_tiny_R_behaves_like_rt():
    g = RRT(UNIT2, RrtConfig(R=1e-9))
    g.generate(200, rng_stream(1))
    assert g.attempts == 199


def test_rrt_acceptance_fraction_about_one_minus_R():
    # two well-separated executed points, balls fully inside the square
    e = np.array([[0.3, 0.3], [0.7, 0.7]])
    R = 0.3
    r = exclusion_radius(R, UNIT2, 2)
    assert r < 0.3
    pts = np.random.default_rng(0).random((200_000, 2))
    d = np.min(np.linalg.norm(pts[:, None, :] - e[None], axis=2), axis=1)
    assert np.mean(d >= r) == pytest.approx(1 - R, abs=0.05)


def test_rrt_budget_exceeded_reports_radius():
    g = RRT(InputDomain.unit(1), RrtConfig(R=5.0, max_attempts=100))
    rng = rng_stream(0)
    with pytest.raises(GenerationBudgetExceeded) as err:
        for _ in range(3):
            g.next(rng)
    assert "radius" in err.value.details


def test_mcmc_accept_examples():
    rng = rng_stream(0)
    assert mcmc_accept((0.9,), (0.51,), [(0.5,)], 0.1, rng)
    assert mcmc_accept((0.3,), (0.2,), np.empty((0, 1)), 0.1, rng)
    ratio = (1 - math.exp(-4)) / (1 - math.exp(-0.1))
    assert ratio > 1


def test_mcmc_farther_always_accepted():
    rng = rng_stream(1)
    e = [(0.5, 0.5)]
    assert all(mcmc_accept((0.95, 0.95), (0.55, 0.5), e, 0.1, rng) for _ in range(100))


def test_mcmc_acceptance_rate_matches_ratio():
    rng = rng_stream(2)
    e = [(0.5,)]
    beta = 0.1
    ratio = (1 - math.exp(-0.05 / beta)) / (1 - math.exp(-0.3 / beta))
    hits = sum(mcmc_accept((0.55,), (0.8,), e, beta, rng) for _ in range(20_000))
    assert hits / 20_000 == pytest.approx(ratio, abs=0.02)


def test_mcmc_deterministic_and_spreads_out():
    a = MCMC(UNIT2).generate(50, rng_stream(5))
    b = MCMC(UNIT2).generate(50, rng_stream(5))
    assert np.array_equal(a, b)


def test_mcmc_first_point_is_first_proposal():
    g = MCMC(UNIT2, McmcConfig(beta1=0.2))
    assert np.array_equal(g.next(rng_stream(7)), rng_stream(7).random(2))


def test_mcmc_accepted_points_farther_than_rt():
    rng = rng_stream(8)
    e = np.random.default_rng(1).random((10, 2))
    beta = 0.1 * UNIT2.diameter
    mc, rt = [], []
    for _ in range(1000):
        g = MCMC(UNIT2, McmcConfig(beta1=beta))
        g.executed.extend(e)
        mc.append(np.min(np.linalg.norm(e - g.next(rng), axis=1)))
        rt.append(np.min(np.linalg.norm(e - rng.random(2), axis=1)))
    assert np.mean(mc) > np.mean(rt)


def test_configs_validate():
    with pytest.raises(ValueError):
        FscsConfig(k=0)
    with pytest.raises(ValueError):
        RrtConfig(R=0)
    with pytest.raises(ValueError):
        McmcConfig(beta1=-1)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32), d=st.integers(1, 4))
def test_stfcs_outputs_inside_domain(seed, d):
    dom = InputDomain((-2.0,) * d, (3.0,) * d)
    for g in (FSCS(dom), RRT(dom), MCMC(dom)):
        assert np.all(dom.contains(g.generate(15, rng_stream(seed))))


def test_replay_is_byte_identical():
    for cls in (FSCS, RRT, MCMC, RandomTesting):
        a = cls(UNIT2).generate(30, rng_stream(12)).tobytes()
        b = cls(UNIT2).generate(30, rng_stream(12)).tobytes()
        assert a == b
