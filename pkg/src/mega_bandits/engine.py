"""Simulation driver.

:class:`Simulation` runs rounds in blocks through a compiled kernel that calls
the same policy functions as :class:`mega_bandits.policies.Policy`.
:func:`reference_run` drives :class:`~mega_bandits.env.Environment` and
:class:`~mega_bandits.policies.Policy` objects round by round in Python; both
consume the same streams and produce identical records.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import streams
from .env import ArmSet, Environment, UserSchedule
from .metrics import (
    RegretTrace,
    descending_order,
    instantaneous_pseudo_regret,
    optimal_sums,
    realized_regret_increment,
)
from .policies import (
    POLICY_CODES,
    REFRAIN,
    MegaParams,
    Policy,
    initial_state,
    select_action,
    update_policy,
)

INACTIVE = -2
BLOCK = 8192


@dataclass
class RunRecord:
    """Full-resolution record of one repetition.

    ``choices[i, t-1]`` is user i's arm in round t, REFRAIN (-1) or INACTIVE (-2).
    """

    users: tuple
    choices: np.ndarray
    pseudo: np.ndarray
    realized: np.ndarray
    collided: np.ndarray

    @property
    def horizon(self):
        return self.pseudo.shape[0]

    def trace(self, stride=1):
        return RegretTrace.from_increments(self.pseudo, self.realized, self.collided, stride)


@njit(cache=True)
def _run_block(codes, ist, fst, prm, t_next, counts, sums, mu_hat, join, leave, mu, opt,
               order, t0, t1, user_draws, env_draws, choices, pseudo, realized, collided):
    U = codes.shape[0]
    K = mu.shape[0]
    load = np.zeros(K, dtype=np.int64)
    served = np.zeros(K, dtype=np.bool_)
    for t in range(t0, t1):
        i = t - t0
        load[:] = 0
        n_active = 0
        for n in range(U):
            if join[n] <= t < leave[n]:
                n_active += 1
                row = user_draws[n, t - max(join[n], t0)]
                a = select_action(codes[n], ist[n], fst[n], prm[n], t_next[n], counts[n],
                                  mu_hat[n], t - join[n] + 1, row)
                choices[n, i] = a
                if a >= 0:
                    load[a] += 1
            else:
                choices[n, i] = -2
        env = env_draws[i]
        served[:] = False
        got = 0.0
        for n in range(U):
            a = choices[n, i]
            if a == -2:
                continue
            row = user_draws[n, t - max(join[n], t0)]
            if a < 0:
                update_policy(codes[n], ist[n], fst[n], prm[n], counts[n], sums[n], mu_hat[n],
                              a, 0.0, False, row)
            elif load[a] > 1:
                collided[n, i] = True
                update_policy(codes[n], ist[n], fst[n], prm[n], counts[n], sums[n], mu_hat[n],
                              a, 0.0, True, row)
            else:
                r = 1.0 if env[a] < mu[a] else 0.0
                served[a] = True
                got += r
                update_policy(codes[n], ist[n], fst[n], prm[n], counts[n], sums[n], mu_hat[n],
                              a, r, False, row)
        # same summation order as opt, so an optimal round gives exactly 0
        gain = 0.0
        for k in order:
            if served[k]:
                gain += mu[k]
        pseudo[i] = opt[n_active] - gain
        realized[i] = opt[n_active] - got


class Simulation:
    """One repetition.  Advance it with :meth:`advance`; schedule departures
    between advances with :meth:`depart`."""

    def __init__(self, arms: ArmSet, schedule: UserSchedule, policies, seed, horizon,
                 params: MegaParams | None = None, n_known=None):
        env = Environment(arms, schedule, seed)  # validates N(t) <= K
        self.arms = arms
        self.seed = env.seed
        self.horizon = int(horizon)
        self.users = schedule.users
        U, K = len(self.users), arms.K
        if isinstance(policies, str):
            policies = (policies,) * U
        if len(policies) != U:
            raise ValueError(f"{len(policies)} policies for {U} users")
        params = params or MegaParams()
        self.codes = np.array([POLICY_CODES[p] for p in policies], dtype=np.int64)
        states = [initial_state(c, K, params, n_known) for c in self.codes]
        (self._ist, self._fst, self._prm, self._t_next,
         self._counts, self._sums, self._mu_hat) = (np.stack(col) for col in zip(*states))
        self.join = np.array([schedule.join_time(u) for u in self.users], dtype=np.int64)
        self.leave = np.array([schedule.leave_time(u) for u in self.users], dtype=np.int64)
        self._mu = arms.as_array()
        self._opt = optimal_sums(self._mu)
        self._order = descending_order(self._mu)
        self._env_rng = streams.env_generator(self.seed)
        self._user_rngs = [streams.user_generator(self.seed, i) for i in range(U)]
        self.choices = np.full((U, self.horizon), INACTIVE, dtype=np.int16)
        self.pseudo = np.zeros(self.horizon)
        self.realized = np.zeros(self.horizon)
        self.collided = np.zeros((U, self.horizon), dtype=bool)
        self.t = 1

    def depart(self, index, t):
        """User at position ``index`` leaves at the start of round ``t``."""
        if t < self.t:
            raise ValueError(f"round {t} already simulated")
        if not self.join[index] < t <= self.leave[index]:
            raise ValueError(f"user {self.users[index]} is not active before round {t}")
        self.leave[index] = t

    def active(self, t):
        return np.nonzero((self.join <= t) & (t < self.leave))[0]

    def advance(self, until=None):
        """Simulate rounds self.t .. until-1 (default: to the horizon)."""
        until = self.horizon + 1 if until is None else min(until, self.horizon + 1)
        U, K = len(self.users), self._mu.shape[0]
        while self.t < until:
            t0, t1 = self.t, min(self.t + BLOCK, until)
            B = t1 - t0
            user_draws = np.zeros((U, B, streams.ROUND_DRAWS))
            for n in range(U):
                lo, hi = max(self.join[n], t0), min(self.leave[n], t1)
                if hi > lo:
                    user_draws[n, : hi - lo] = self._user_rngs[n].random((hi - lo, streams.ROUND_DRAWS))
            env_draws = self._env_rng.random((B, K))
            s = slice(t0 - 1, t1 - 1)
            _run_block(self.codes, self._ist, self._fst, self._prm, self._t_next, self._counts,
                       self._sums, self._mu_hat, self.join, self.leave, self._mu, self._opt,
                       self._order, t0, t1, user_draws, env_draws, self.choices[:, s], self.pseudo[s],
                       self.realized[s], self.collided[:, s])
            self.t = t1
        return self

    def record(self):
        n = self.t - 1
        return RunRecord(self.users, self.choices[:, :n].copy(), self.pseudo[:n].copy(),
                         self.realized[:n].copy(), self.collided[:, :n].copy())

    def mu_hat(self, index):
        return self._mu_hat[index].copy()

    def t_next(self, index):
        return self._t_next[index].copy()


def simulate(arms, schedule, policies, seed, horizon, params=None, n_known=None):
    sim = Simulation(arms, schedule, policies, seed, horizon, params, n_known)
    return sim.advance().record()


def reference_run(arms, schedule, policies, seed, horizon, params=None, n_known=None):
    """Round-by-round run through the object API; slow, used as a cross-check."""
    env = Environment(arms, schedule, seed)
    users = schedule.users
    if isinstance(policies, str):
        policies = (policies,) * len(users)
    agents = {u: Policy(p, arms.K, params, n_known) for u, p in zip(users, policies)}
    rngs = {u: env.user_stream(u) for u in users}
    mu = arms.as_array()
    U = len(users)
    choices = np.full((U, horizon), INACTIVE, dtype=np.int16)
    pseudo = np.zeros(horizon)
    realized = np.zeros(horizon)
    collided = np.zeros((U, horizon), dtype=bool)
    for t in range(1, horizon + 1):
        active = sorted(env.active_users())
        draws = {u: rngs[u].random(streams.ROUND_DRAWS) for u in active}
        local = {u: t - schedule.join_time(u) + 1 for u in active}
        picks = {u: agents[u].select(local[u], draws[u]) for u in active}
        out = env.resolve_round(picks)
        for u, a, r, c in zip(out.users, out.arms, out.rewards, out.collisions):
            agents[u].update(a, r, c, draws[u])
            i = users.index(u)
            choices[i, t - 1] = REFRAIN if a is None else a
            collided[i, t - 1] = bool(c)
        pseudo[t - 1] = instantaneous_pseudo_regret(mu, len(active), out)
        realized[t - 1] = realized_regret_increment(mu, len(active), out)
    return RunRecord(users, choices, pseudo, realized, collided)
