"""Repetition fan-out and the departure experiment.

Repetition r of a scenario runs with seed ``repetition_seed(master_seed, r)``,
so the outcome does not depend on which worker ran it or when.  Results are
reduced in repetition-index order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .engine import Simulation
from .metrics import RegretTrace, aggregate, optimal_set
from .scenarios import Scenario

JOBS_ENV = "MEGA_BANDITS_JOBS"
DEFAULT_STRIDE = 100


class RepetitionError(RuntimeError):
    """A repetition failed; carries its index."""

    def __init__(self, scenario, rep, cause):
        super().__init__(f"{scenario}: repetition {rep} failed: {cause!r}")
        self.rep = rep


def default_jobs():
    raw = os.environ.get(JOBS_ENV)
    if raw is None:
        return 1
    try:
        jobs = int(raw)
    except ValueError:
        raise ValueError(f"{JOBS_ENV} must be an integer, got {raw!r}") from None
    if jobs < 1:
        raise ValueError(f"{JOBS_ENV} must be >= 1")
    return jobs


def simulation_for(s: Scenario, rep):
    seed = streams.repetition_seed(s.master_seed, rep)
    return Simulation(s.arms, s.schedule, s.policies, seed, s.horizon, s.params, s.n_known)


def run_record(s: Scenario, rep):
    """Full-resolution record of repetition ``rep``."""
    return simulation_for(s, rep).advance().record()


def _work(job):
    s, rep, stride, analyze = job
    try:
        rec = run_record(s, rep)
        trace = rec.trace(stride)
        extra = analyze(s, rep, rec) if analyze is not None else None
    except Exception as exc:
        raise RepetitionError(s.name, rep, exc) from exc
    return trace, extra


def _map(fn, jobs_list, jobs):
    if jobs <= 1 or len(jobs_list) <= 1:
        return [fn(j) for j in jobs_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, jobs_list))


@dataclass
class ScenarioResult:
    scenario: Scenario
    aggregate: object
    traces: list | None = None
    extras: list = field(default_factory=list)


def run_scenario(s: Scenario, jobs=None, stride=DEFAULT_STRIDE, keep_traces=False, analyze=None):
    """Run every repetition of ``s`` and aggregate.

    ``analyze(scenario, rep, record)`` runs inside the worker on the full record
    of each repetition; its (picklable) results come back in ``extras``.
    """
    jobs = default_jobs() if jobs is None else int(jobs)
    if jobs < 1:
        raise ValueError("jobs must be >= 1")
    work = [(s, rep, stride, analyze) for rep in range(s.repetitions)]
    out = _map(_work, work, jobs)
    traces = [t for t, _ in out]
    return ScenarioResult(
        scenario=s,
        aggregate=aggregate(traces),
        traces=traces if keep_traces else None,
        extras=[e for _, e in out],
    )


# --- departures -----------------------------------------------------------

SETTLE_WINDOW = 1000
SETTLE_FRACTION = 0.5


@dataclass
class DepartureOutcome:
    """What happened after one departure at round ``t0``.

    ``steady`` is False unless the leaver was alone on its arm in round t0 - 1
    and at least SETTLE_FRACTION of the preceding SETTLE_WINDOW rounds had
    zero pseudo-regret.
    ``reoccupied`` is the first round >= t0 in which a remaining user
    transmits alone on the freed arm (None if never).  ``settled`` is the
    first round >= t0 that starts a window of SETTLE_WINDOW rounds of which at
    least SETTLE_FRACTION have zero pseudo-regret, and ``settle_regret`` is
    the pseudo-regret accumulated over [t0, settled).
    """

    t0: int
    user: int
    arm: int
    n_after: int
    steady: bool
    freed_optimal: bool
    reoccupied: int | None
    settled: int | None
    settle_regret: float


def settling_round(pseudo, t0, window=SETTLE_WINDOW, fraction=SETTLE_FRACTION):
    """First round tau >= t0 such that pseudo[tau-1] == 0 and at least
    ``fraction`` of rounds tau .. tau+window-1 are zero-regret."""
    zero = np.asarray(pseudo)[t0 - 1 :] == 0.0
    if len(zero) < window:
        return None
    run = np.convolve(zero.astype(np.int64), np.ones(window, dtype=np.int64), "valid")
    ok = zero[: len(run)] & (run >= math.ceil(fraction * window))
    idx = np.nonzero(ok)[0]
    return int(t0 + idx[0]) if len(idx) else None


def departure_outcome(mu, choices, collided, pseudo, t0, user_index, user_id, n_after):
    """Measure recovery after ``user_index`` left at the start of round t0."""
    mu = np.asarray(mu)
    prev = t0 - 2  # column of round t0 - 1
    arm = int(choices[user_index, prev])
    before = np.asarray(pseudo[max(0, prev + 1 - SETTLE_WINDOW) : prev + 1])
    steady = (
        prev >= 0
        and arm >= 0
        and not collided[user_index, prev]
        and np.mean(before == 0.0) >= SETTLE_FRACTION
    )
    freed_optimal = steady and arm in optimal_set(mu, n_after)
    others = [i for i in range(choices.shape[0]) if i != user_index]
    reoccupied = None
    if arm >= 0:
        after = choices[others, t0 - 1 :]
        alone = (after == arm) & ~collided[others, t0 - 1 :]
        hit = np.nonzero(alone.any(axis=0))[0]
        reoccupied = int(t0 + hit[0]) if len(hit) else None
    settled = settling_round(pseudo, t0)
    end = settled if settled is not None else len(pseudo) + 1
    return DepartureOutcome(
        t0=t0,
        user=user_id,
        arm=arm,
        n_after=n_after,
        steady=bool(steady),
        freed_optimal=bool(freed_optimal),
        reoccupied=reoccupied,
        settled=settled,
        settle_regret=float(np.sum(pseudo[t0 - 1 : end - 1])),
    )


def schedule_departures(s: Scenario, rep, record):
    """``analyze`` hook: outcomes for every leave event of the schedule."""
    out = []
    for e in s.schedule.events:
        if e.kind != "leave" or e.time > record.horizon:
            continue
        i = s.schedule.users.index(e.user)
        n_after = s.schedule.count(e.time)
        out.append(departure_outcome(s.mu, record.choices, record.collided, record.pseudo,
                                     e.time, i, e.user, n_after))
    return out


def targeted_departure(s: Scenario, rep, t0, arm=None):
    """Run to t0 - 1, remove whoever holds ``arm`` (default: the best arm) at
    round t0 - 1, run on to the horizon and measure recovery."""
    if not 1 < t0 <= s.horizon:
        raise ValueError(f"departure time {t0} outside (1, {s.horizon}]")
    sim = simulation_for(s, rep)
    sim.advance(t0)
    arm = int(np.argmax(s.mu)) if arm is None else arm
    col = sim.choices[:, t0 - 2]
    holders = [i for i in sim.active(t0 - 1) if col[i] == arm and not sim.collided[i, t0 - 2]]
    if not holders:
        rec = sim.advance().record()
        return DepartureOutcome(t0, -1, arm, len(sim.active(t0)), False, False, None, None,
                                float(rec.pseudo[t0 - 1 :].sum()))
    i = holders[0]
    sim.depart(i, t0)
    rec = sim.advance().record()
    return departure_outcome(s.mu, rec.choices, rec.collided, rec.pseudo, t0, i,
                             sim.users[i], len(sim.active(t0)))


def _targeted_work(job):
    s, rep, t0 = job
    try:
        return targeted_departure(s, rep, t0)
    except Exception as exc:
        raise RepetitionError(s.name, rep, exc) from exc


def run_targeted_departures(s: Scenario, t0, jobs=None):
    jobs = default_jobs() if jobs is None else int(jobs)
    return _map(_targeted_work, [(s, rep, t0) for rep in range(s.repetitions)], jobs)


def traces_equal(a: RegretTrace, b: RegretTrace):
    return all(
        np.array_equal(getattr(a, f), getattr(b, f))
        for f in ("t", "pseudo_regret", "realized_regret", "collisions")
    )
