"""Effectiveness measures and simulation campaigns.

Run ``i`` of a campaign draws everything from ``rng_stream(seed, i)``: the
failure regions are placed first, then the generator consumes the rest of
the stream. Results therefore do not depend on how runs are spread over
worker processes.
"""

from __future__ import annotations

import csv
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from typing import Iterable, TextIO

import numpy as np

from ..core import Generator, rng_stream
from .regions import FailureProfile, ProfileSpec

__all__ = [
    "DEFAULT_CAP",
    "RunRecord",
    "run_f",
    "run_fm",
    "run_n",
    "Campaign",
    "run_campaign",
    "failure_counts",
    "parallel_map",
    "p_measure",
    "e_measure",
    "RUN_CSV_FIELDS",
    "write_runs_csv",
]

DEFAULT_CAP = 10**7
RUN_CSV_FIELDS = ("run_index", "generator", "pattern", "theta", "d", "f_count", "censored", "f_time_ns")


@dataclass(frozen=True)
class RunRecord:
    run_index: int
    f_count: int
    censored: bool = False
    f_time_ns: int | None = None


def run_fm(
    generator: Generator,
    profile: FailureProfile,
    m: int,
    rng: np.random.Generator,
    cap: int = DEFAULT_CAP,
    timed: bool = False,
    run_index: int = 0,
) -> RunRecord:
    """Tests used until the ``m``-th failure; censored at ``cap`` tests."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    generator.reset()
    start = time.perf_counter_ns() if timed else 0
    found = 0
    for count in range(1, cap + 1):
        if profile.contains(generator.next(rng)):
            found += 1
            if found == m:
                elapsed = time.perf_counter_ns() - start if timed else None
                return RunRecord(run_index, count, False, elapsed)
    elapsed = time.perf_counter_ns() - start if timed else None
    return RunRecord(run_index, cap, True, elapsed)


def run_f(generator, profile, rng, cap: int = DEFAULT_CAP, timed: bool = False, run_index: int = 0) -> RunRecord:
    return run_fm(generator, profile, 1, rng, cap, timed, run_index)


def run_n(generator: Generator, profile: FailureProfile, n: int, rng: np.random.Generator) -> np.ndarray:
    """Failure flag of each of the first ``n`` tests."""
    generator.reset()
    return np.array([bool(profile.contains(generator.next(rng))) for _ in range(n)], dtype=bool)


@dataclass(frozen=True)
class Campaign:
    generator: Generator
    profile: ProfileSpec | FailureProfile
    runs: int
    seed: int = 0
    cap: int = DEFAULT_CAP
    m: int = 1
    timed: bool = False

    def profile_for(self, rng: np.random.Generator) -> FailureProfile:
        if isinstance(self.profile, ProfileSpec):
            return self.profile.place(self.generator.domain, rng)
        return self.profile


def _campaign_run(campaign: Campaign, i: int) -> RunRecord:
    rng = rng_stream(campaign.seed, i)
    profile = campaign.profile_for(rng)
    return run_fm(campaign.generator, profile, campaign.m, rng, campaign.cap, campaign.timed, i)


def parallel_map(fn, indices, jobs: int) -> list:
    """``[fn(i) for i in indices]``, optionally spread over processes."""
    indices = list(indices)
    if jobs <= 1 or len(indices) <= 1:
        return [fn(i) for i in indices]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        chunk = max(1, len(indices) // (4 * jobs))
        return list(pool.map(fn, indices, chunksize=chunk))


def run_campaign(campaign: Campaign, jobs: int = 1, start: int = 0) -> list[RunRecord]:
    """Runs ``start .. campaign.runs - 1`` of ``campaign``, ordered by run index."""
    if campaign.runs < 1:
        raise ValueError("a campaign needs at least one run")
    return parallel_map(partial(_campaign_run, campaign), range(start, campaign.runs), jobs)


def _failures_in_n(generator, profile, n, seed, i) -> int:
    rng = rng_stream(seed, i)
    if isinstance(profile, ProfileSpec):
        profile = profile.place(generator.domain, rng)
    return int(run_n(generator, profile, n, rng).sum())


def failure_counts(
    generator: Generator, profile: ProfileSpec | FailureProfile, n: int, runs: int, seed: int = 0, jobs: int = 1
) -> np.ndarray:
    """Number of failing tests among the first ``n`` of each run."""
    if n < 0 or runs < 1:
        raise ValueError("need n >= 0 and runs >= 1")
    fn = partial(_failures_in_n, generator, profile, n, seed)
    return np.array(parallel_map(fn, range(runs), jobs), dtype=np.int64)


def p_measure(generator, profile, n: int, runs: int, seed: int = 0, jobs: int = 1) -> float:
    """Fraction of runs whose first ``n`` tests reveal at least one failure."""
    return float(np.mean(failure_counts(generator, profile, n, runs, seed, jobs) > 0))


def e_measure(generator, profile, n: int, runs: int, seed: int = 0, jobs: int = 1) -> float:
    """Mean number of failures among the first ``n`` tests."""
    return float(np.mean(failure_counts(generator, profile, n, runs, seed, jobs)))


def write_runs_csv(
    out: TextIO, records: Iterable[RunRecord], generator: str, pattern: str, theta: float, d: int
) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(RUN_CSV_FIELDS)
    for r in records:
        w.writerow(
            [
                r.run_index,
                generator,
                pattern,
                repr(float(theta)),
                d,
                r.f_count,
                int(r.censored),
                "" if r.f_time_ns is None else r.f_time_ns,
            ]
        )
