import io
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats as sps

from artkit.core import InputDomain, RandomTesting, rng_stream
from artkit.simlab import (
    Ball,
    Box,
    Campaign,
    FailurePattern,
    FailureProfile,
    InfeasiblePlacement,
    PatternKind,
    ProfileSpec,
    RUN_CSV_FIELDS,
    a12_effect_size,
    e_measure,
    failure_counts,
    improvement_percent,
    is_failure,
    mann_whitney_u,
    p_measure,
    place_regions,
    required_runs,
    run_campaign,
    run_f,
    run_fm,
    summarize,
    write_runs_csv,
)

from . import oracles

UNIT2 = InputDomain.unit(2)


def test_block_square_side():
    prof = place_regions(UNIT2, 0.04, FailurePattern(), rng_stream(0))
    box = prof.regions[0]
    assert np.allclose(np.subtract(box.hi, box.lo), 0.2)
    assert np.all(np.asarray(box.lo) >= 0) and np.all(np.asarray(box.hi) <= 1)


def test_point_circles_equal_split():
    prof = place_regions(UNIT2, 0.01, FailurePattern(PatternKind.POINT_CIRCLES, count=4), rng_stream(0))
    assert len(prof.regions) == 4
    assert all(r.volume == pytest.approx(0.0025) for r in prof.regions)


def test_predominant_share():
    prof = place_regions(UNIT2, 0.02, FailurePattern(PatternKind.PREDOMINANT, count=5, q_percent=60), rng_stream(1))
    vols = [r.volume for r in prof.regions]
    assert vols[0] == pytest.approx(0.012)
    assert sum(vols) == pytest.approx(0.02)


@pytest.mark.parametrize("kind", list(PatternKind))
@pytest.mark.parametrize("d", [1, 2, 3])
def test_region_measure_monte_carlo(kind, d):
    dom = InputDomain((0.0,) * d, (2.0,) * d)
    prof = place_regions(dom, 0.05, FailurePattern(kind, count=4, q_percent=50), rng_stream(d))
    pts = dom.from_unit(np.random.default_rng(0).random((1_000_000, d)))
    assert prof.contains(pts).mean() == pytest.approx(0.05, rel=0.02)
    assert prof.measure == pytest.approx(0.05, rel=0.01)


@pytest.mark.parametrize("kind", [PatternKind.POINT_SQUARES, PatternKind.POINT_CIRCLES, PatternKind.PREDOMINANT])
def test_multi_regions_disjoint(kind):
    prof = place_regions(UNIT2, 0.1, FailurePattern(kind, count=6, q_percent=40), rng_stream(3))
    for i, a in enumerate(prof.regions):
        for b in prof.regions[i + 1 :]:
            assert not a.overlaps(b)


def test_infeasible_placement():
    with pytest.raises(InfeasiblePlacement):
        place_regions(UNIT2, 0.9, FailurePattern(PatternKind.BLOCK_RECT, aspect=4), rng_stream(0))
    with pytest.raises(InfeasiblePlacement):
        place_regions(UNIT2, 0.9, FailurePattern(PatternKind.POINT_SQUARES, count=3), rng_stream(0), max_attempts=20)
    with pytest.raises(ValueError):
        place_regions(UNIT2, 1.0, FailurePattern(), rng_stream(0))


def test_pattern_validation():
    with pytest.raises(ValueError):
        FailurePattern(count=0)
    with pytest.raises(ValueError):
        FailurePattern(q_percent=0)


def test_is_failure_examples():
    prof = place_regions(UNIT2, 0.01, FailurePattern(), rng_stream(2))
    box = prof.regions[0]
    center = (np.asarray(box.lo) + np.asarray(box.hi)) / 2
    assert is_failure(center, prof)
    far = [0.0 if c > 0.5 else 0.999 for c in center]
    assert not is_failure(far, prof)


def test_is_failure_matches_membership_oracle():
    prof = place_regions(UNIT2, 0.05, FailurePattern(PatternKind.POINT_CIRCLES, count=3), rng_stream(5))
    pts = np.random.default_rng(1).random((10_000, 2))
    expected = [any(oracles.euclid(p, r.center) < r.radius for r in prof.regions) for p in pts]
    assert prof.contains(pts).tolist() == expected
    assert [bool(is_failure(p, prof)) for p in pts[:200]] == expected[:200]


def test_strip_inside_band():
    prof = place_regions(UNIT2, 0.03, FailurePattern(PatternKind.STRIP), rng_stream(7))
    strip = prof.regions[0]
    assert is_failure(strip.point, prof)


def test_full_domain_profile_first_test_fails():
    prof = FailureProfile(UNIT2, 1.0, FailurePattern(), (Box((0.0, 0.0), (1.0, 1.0)),))
    assert run_f(RandomTesting(UNIT2), prof, rng_stream(0)).f_count == 1


def test_run_f_censoring():
    prof = FailureProfile(UNIT2, 1e-9, FailurePattern(), (Ball((0.5, 0.5), 1e-6),))
    rec = run_f(RandomTesting(UNIT2), prof, rng_stream(0), cap=50)
    assert rec.censored and rec.f_count == 50
    with pytest.raises(ValueError):
        run_f(RandomTesting(UNIT2), prof, rng_stream(0), cap=0)


def test_run_fm_reduces_and_is_monotone():
    spec = ProfileSpec(0.05)
    for i in range(20):
        prof = spec.place(UNIT2, rng_stream(i, 1))
        f1 = run_f(RandomTesting(UNIT2), prof, rng_stream(i, 2))
        fm1 = run_fm(RandomTesting(UNIT2), prof, 1, rng_stream(i, 2))
        f3 = run_fm(RandomTesting(UNIT2), prof, 3, rng_stream(i, 2))
        assert f1 == fm1 and f3.f_count >= f1.f_count


def test_rt_f_and_fm_means():
    f1 = [r.f_count for r in run_campaign(Campaign(RandomTesting(UNIT2), ProfileSpec(0.01), 3000, seed=1))]
    f2 = [r.f_count for r in run_campaign(Campaign(RandomTesting(UNIT2), ProfileSpec(0.01), 3000, seed=2, m=2))]
    assert np.mean(f1) == pytest.approx(100, rel=0.05)
    assert np.mean(f2) == pytest.approx(200, rel=0.05)


def test_rt_f_geometric_ks():
    recs = run_campaign(Campaign(RandomTesting(UNIT2), ProfileSpec(0.01), 5000, seed=3))
    f = np.array([r.f_count for r in recs])
    assert sps.kstest(f, sps.geom(0.01).cdf).pvalue > 0.01


def test_campaign_timing_opt_in():
    camp = Campaign(RandomTesting(UNIT2), ProfileSpec(0.2), 5, seed=0)
    assert all(r.f_time_ns is None for r in run_campaign(camp))
    timed = Campaign(RandomTesting(UNIT2), ProfileSpec(0.2), 5, seed=0, timed=True)
    assert all(r.f_time_ns >= 0 for r in run_campaign(timed))


def test_campaign_parallel_equals_serial():
    camp = Campaign(RandomTesting(UNIT2), ProfileSpec(0.05), 40, seed=9)
    assert run_campaign(camp, jobs=1) == run_campaign(camp, jobs=2)
    assert run_campaign(camp, start=30) == run_campaign(camp)[30:]


def test_p_and_e_measures():
    rt = RandomTesting(UNIT2)
    assert p_measure(rt, ProfileSpec(0.5), 2, 10_000, seed=1) == pytest.approx(0.75, abs=0.02)
    assert e_measure(rt, ProfileSpec(0.01), 100, 10_000, seed=1) == pytest.approx(1.0, abs=0.05)
    assert e_measure(rt, ProfileSpec(0.01), 0, 10, seed=1) == 0.0
    assert p_measure(rt, ProfileSpec(1e-9), 20, 200, seed=1) == 0.0


def test_p_and_e_consistent():
    counts = failure_counts(RandomTesting(UNIT2), ProfileSpec(0.1), 10, 300, seed=4)
    p = np.mean(counts > 0)
    assert p_measure(RandomTesting(UNIT2), ProfileSpec(0.1), 10, 300, seed=4) == p
    assert e_measure(RandomTesting(UNIT2), ProfileSpec(0.1), 10, 300, seed=4) >= p


def test_required_runs_examples():
    assert required_runs(1.96, 1.0, 1.0, 5) == 1537
    assert required_runs(1.96, 0.0, 1.0, 5) == 1
    assert required_runs(1.96, 1.0, 1.0, 10) == math.ceil(1536.64 / 4)
    with pytest.raises(ValueError):
        required_runs(1.96, 1.0, 0.0, 5)
    with pytest.raises(ValueError):
        required_runs(1.96, 1.0, 1.0, -1)


def test_mann_whitney_examples():
    assert mann_whitney_u([1, 2], [3, 4]).u == 0
    same = np.arange(10.0)
    assert mann_whitney_u(same, same).p_value == pytest.approx(1.0)
    assert mann_whitney_u(same, same, exact=False).p_value == pytest.approx(1.0)


@settings(max_examples=60, deadline=None)
@given(
    a=st.lists(st.integers(0, 6), min_size=1, max_size=7),
    b=st.lists(st.integers(0, 6), min_size=1, max_size=7),
)
def test_mann_whitney_exact_matches_enumeration(a, b):
    u, p = oracles.mann_whitney_exact(a, b)
    res = mann_whitney_u(a, b)
    assert res.method == "exact"
    assert res.u == u
    assert res.p_value == pytest.approx(p, abs=1e-12)


def test_mann_whitney_normal_matches_scipy():
    rng = np.random.default_rng(0)
    for _ in range(10):
        a = rng.integers(0, 30, 60)
        b = rng.integers(0, 30, 45)
        ours = mann_whitney_u(a, b)
        ref = sps.mannwhitneyu(a, b, method="asymptotic", use_continuity=True)
        assert ours.method == "normal"
        assert ours.u == ref.statistic
        assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-9)


def test_a12_examples():
    assert a12_effect_size([1, 2], [3, 4]) == 0.0
    assert a12_effect_size([5, 6], [5, 6]) == 0.5
    assert a12_effect_size([1, 3], [2]) == 0.5


@settings(max_examples=60, deadline=None)
@given(
    a=st.lists(st.integers(-5, 5), min_size=1, max_size=20),
    b=st.lists(st.integers(-5, 5), min_size=1, max_size=20),
)
def test_a12_matches_pair_oracle(a, b):
    assert a12_effect_size(a, b) == pytest.approx(oracles.a12(a, b), abs=1e-12)


def test_improvement_percent():
    assert improvement_percent(100, 58) == pytest.approx(42.0)
    assert improvement_percent(80, 80) == 0.0
    assert improvement_percent(100, 120, lower_is_better=False) == pytest.approx(20.0)
    assert improvement_percent(100, 120) == pytest.approx(-20.0)


def test_summarize_excludes_censored():
    s = summarize([10, 20, 30, 1000], censored=[False, False, False, True])
    assert s.runs == 4 and s.censored == 1 and s.mean == 20.0
    assert s.ci_low < 20 < s.ci_high
    with pytest.raises(ValueError):
        summarize([5], censored=[True])


def test_campaign_stats_replay_identical():
    camp = Campaign(RandomTesting(UNIT2), ProfileSpec(0.02), 100, seed=5)
    f1 = [r.f_count for r in run_campaign(camp)]
    f2 = [r.f_count for r in run_campaign(camp)]
    assert repr(summarize(f1).as_dict()) == repr(summarize(f2).as_dict())


def test_runs_csv_schema():
    buf = io.StringIO()
    recs = run_campaign(Campaign(RandomTesting(UNIT2), ProfileSpec(0.1), 3, seed=0))
    write_runs_csv(buf, recs, "rt", "block", 0.1, 2)
    lines = buf.getvalue().splitlines()
    assert lines[0].split(",") == list(RUN_CSV_FIELDS)
    assert len(lines) == 4 and lines[1].startswith("0,rt,block,0.1,2,")
