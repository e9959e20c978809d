"""Arms, user population and slot-synchronous collision resolution."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional

import numpy as np

from . import streams

REWARD_KINDS = ("bernoulli",)

JOIN = "join"
LEAVE = "leave"

# leave time of a user that never leaves
NEVER = np.iinfo(np.int64).max


@dataclass(frozen=True)
class ArmSet:
    mu: tuple
    kind: str = "bernoulli"

    def __post_init__(self):
        mu = tuple(float(m) for m in self.mu)
        object.__setattr__(self, "mu", mu)
        if len(mu) < 1:
            raise ValueError("need at least one arm")
        if any(not 0.0 <= m <= 1.0 for m in mu):
            raise ValueError(f"expected rewards must lie in [0, 1], got {mu}")
        if self.kind not in REWARD_KINDS:
            raise ValueError(f"unsupported reward kind {self.kind!r}")

    @property
    def K(self):
        return len(self.mu)

    def as_array(self):
        return np.array(self.mu, dtype=np.float64)


@dataclass(frozen=True, order=True)
class ScheduleEvent:
    time: int
    user: int
    kind: str


@dataclass(frozen=True)
class UserSchedule:
    """Join/leave events.  Events take effect at the start of their round.

    Each user joins exactly once and leaves at most once; a returning user
    is modelled as a new id.
    """

    events: tuple

    def __post_init__(self):
        events = tuple(
            e if isinstance(e, ScheduleEvent) else ScheduleEvent(int(e[0]), int(e[1]), str(e[2]))
            for e in self.events
        )
        events = tuple(sorted(events, key=lambda e: (e.time, e.kind != LEAVE, e.user)))
        object.__setattr__(self, "events", events)
        if not events:
            raise ValueError("schedule has no events")
        joins, leaves = {}, {}
        for e in events:
            if e.kind not in (JOIN, LEAVE):
                raise ValueError(f"unknown event kind {e.kind!r}")
            if e.time < 1:
                raise ValueError(f"event times start at round 1, got {e.time}")
            book = joins if e.kind == JOIN else leaves
            if e.user in book:
                raise ValueError(f"user {e.user} has more than one {e.kind} event")
            book[e.user] = e.time
        for user, t in leaves.items():
            if user not in joins:
                raise ValueError(f"user {user} leaves without joining")
            if t <= joins[user]:
                raise ValueError(f"user {user} must join before it leaves")
        if events[0].time != 1 or events[0].kind != JOIN:
            raise ValueError("the first user must join at round 1")
        for t in self.change_times():
            if self.count(t) < 1:
                raise ValueError(f"no active users at round {t}")

    @classmethod
    def fixed(cls, n_users, start=1):
        return cls(tuple(ScheduleEvent(start, u, JOIN) for u in range(n_users)))

    @property
    def users(self):
        return tuple(sorted(e.user for e in self.events if e.kind == JOIN))

    def join_time(self, user):
        for e in self.events:
            if e.user == user and e.kind == JOIN:
                return e.time
        raise KeyError(user)

    def leave_time(self, user):
        for e in self.events:
            if e.user == user and e.kind == LEAVE:
                return e.time
        return NEVER

    def change_times(self):
        return tuple(sorted({e.time for e in self.events}))

    def active(self, t):
        return frozenset(
            u for u in self.users if self.join_time(u) <= t < self.leave_time(u)
        )

    def count(self, t):
        return len(self.active(t))

    def max_active(self):
        return max(self.count(t) for t in self.change_times())

    def counts(self, horizon):
        """N(t) for t = 1..horizon."""
        n = np.zeros(horizon + 2, dtype=np.int64)
        for u in self.users:
            j = min(self.join_time(u), horizon + 1)
            l = min(self.leave_time(u), horizon + 1)
            n[j] += 1
            n[l] -= 1
        return np.cumsum(n)[1 : horizon + 1]


@dataclass(frozen=True)
class RoundOutcome:
    """Resolution of one round.  ``arms[i]`` is None when user ``users[i]`` refrained."""

    t: int
    users: tuple
    arms: tuple
    rewards: tuple
    collisions: tuple

    def __len__(self):
        return len(self.users)

    def by_user(self, user):
        i = self.users.index(user)
        return self.arms[i], self.rewards[i], self.collisions[i]


class Environment:
    """One repetition's environment.  Single-threaded; owns its generator."""

    def __init__(self, arms: ArmSet, schedule: UserSchedule, seed: int):
        self.arms = arms
        self.schedule = schedule
        self.seed = streams.check_seed(seed)
        over = [t for t in schedule.change_times() if schedule.count(t) > arms.K]
        if over:
            raise ValueError(
                f"N(t)={schedule.count(over[0])} exceeds K={arms.K} at round {over[0]}"
            )
        self.t = 1
        self._mu = arms.as_array()
        self._rng = streams.env_generator(self.seed)

    @property
    def K(self):
        return self.arms.K

    def user_stream(self, user):
        """The private generator of ``user`` (by position in the schedule)."""
        return streams.user_generator(self.seed, self.schedule.users.index(user))

    def active_users(self, t=None):
        t = self.t if t is None else t
        if t < 1:
            raise ValueError("rounds start at 1")
        return self.schedule.active(t)

    def resolve_round(self, choices: Mapping[int, Optional[int]]) -> RoundOutcome:
        active = self.active_users()
        if set(choices) != set(active):
            raise ValueError(
                f"round {self.t}: choices given for {sorted(choices)}, active users are {sorted(active)}"
            )
        for user, arm in choices.items():
            if arm is not None and not 0 <= arm < self.K:
                raise ValueError(f"user {user} chose arm {arm}, valid range is [0, {self.K})")
        draws = self._rng.random(self.K)
        load = Counter(a for a in choices.values() if a is not None)
        users = tuple(sorted(choices))
        arms, rewards, collisions = [], [], []
        for user in users:
            arm = choices[user]
            if arm is None:
                r, c = 0.0, 0
            elif load[arm] > 1:
                r, c = 0.0, 1
            else:
                r, c = (1.0 if draws[arm] < self._mu[arm] else 0.0), 0
            arms.append(arm)
            rewards.append(r)
            collisions.append(c)
        outcome = RoundOutcome(self.t, users, tuple(arms), tuple(rewards), tuple(collisions))
        self.t += 1
        return outcome


def create_environment(arms: ArmSet, schedule: UserSchedule, seed: int) -> Environment:
    return Environment(arms, schedule, seed)


def resolve_round(env: Environment, choices) -> RoundOutcome:
    return env.resolve_round(choices)


def active_users(env: Environment, t: int):
    return env.active_users(t)
