"""Regret, collision counts and cross-repetition aggregates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def optimal_set(mu, N):
    """Indices of the N largest means; ties go to the lower index."""
    mu = np.asarray(mu, dtype=np.float64)
    if not 0 <= N <= mu.shape[0]:
        raise ValueError(f"N={N} users but K={mu.shape[0]} arms")
    return frozenset(int(k) for k in descending_order(mu)[:N])


def descending_order(mu):
    return np.argsort(-np.asarray(mu, dtype=np.float64), kind="stable")


def optimal_sums(mu):
    """opt[n] = sum of the n largest means, n = 0..K."""
    mu = np.asarray(mu, dtype=np.float64)
    return np.concatenate([[0.0], np.cumsum(mu[descending_order(mu)])])


def _served_value(mu, arms):
    # summed in descending-mean order, matching optimal_sums
    total = 0.0
    for k in descending_order(mu):
        if k in arms:
            total += mu[k]
    return total


def instantaneous_pseudo_regret(mu, n_active, outcome):
    """Optimal expected reward of N(t) users minus the expected reward of
    their collision-free transmissions in this round."""
    if len(outcome.users) != n_active:
        raise ValueError(f"outcome lists {len(outcome.users)} users, N(t)={n_active}")
    mu = np.asarray(mu, dtype=np.float64)
    served = {a for a, c in zip(outcome.arms, outcome.collisions) if a is not None and not c}
    return float(optimal_sums(mu)[n_active] - _served_value(mu, served))


def realized_regret_increment(mu, n_active, outcome):
    if len(outcome.users) != n_active:
        raise ValueError(f"outcome lists {len(outcome.users)} users, N(t)={n_active}")
    mu = np.asarray(mu, dtype=np.float64)
    got = 0.0
    for r in outcome.rewards:
        got += r
    return float(optimal_sums(mu)[n_active] - got)


@dataclass
class RegretTrace:
    """Cumulative series of one repetition, sampled at rounds ``t``.

    ``collisions`` has one row per user (every user the schedule ever holds).
    """

    t: np.ndarray
    pseudo_regret: np.ndarray
    realized_regret: np.ndarray
    collisions: np.ndarray

    @classmethod
    def from_increments(cls, pseudo, realized, collided, stride=1):
        horizon = len(pseudo)
        t = logged_rounds(horizon, stride)
        idx = t - 1
        return cls(
            t=t,
            pseudo_regret=np.cumsum(pseudo)[idx],
            realized_regret=np.cumsum(realized)[idx],
            collisions=np.cumsum(collided, axis=1, dtype=np.int64)[:, idx],
        )

    @property
    def collisions_per_user(self):
        if self.collisions.shape[0] == 0:
            return np.zeros(len(self.t))
        return self.collisions.mean(axis=0)


def logged_rounds(horizon, stride):
    """Rounds stride, 2*stride, ..., plus the final round if it is off-stride."""
    if stride < 1:
        raise ValueError("stride must be >= 1")
    t = np.arange(stride, horizon + 1, stride, dtype=np.int64)
    if horizon > 0 and (len(t) == 0 or t[-1] != horizon):
        t = np.append(t, horizon)
    return t


@dataclass
class TraceAggregate:
    t: np.ndarray
    pseudo_regret_mean: np.ndarray
    pseudo_regret_std: np.ndarray
    realized_regret_mean: np.ndarray
    realized_regret_std: np.ndarray
    collisions_per_user_mean: np.ndarray
    collisions_per_user_std: np.ndarray
    repetitions: int

    COLUMNS = (
        "t",
        "pseudo_regret_mean",
        "pseudo_regret_std",
        "realized_regret_mean",
        "realized_regret_std",
        "collisions_per_user_mean",
        "collisions_per_user_std",
    )

    def __len__(self):
        return len(self.t)

    @property
    def average_regret_mean(self):
        """Cumulative pseudo-regret divided by t."""
        return self.pseudo_regret_mean / np.maximum(self.t, 1)

    @property
    def average_regret_std(self):
        return self.pseudo_regret_std / np.maximum(self.t, 1)

    def rows(self):
        cols = [getattr(self, c) for c in self.COLUMNS]
        return zip(*cols)


def aggregate(traces):
    """Pointwise mean and (population) std across repetitions.

    Collisions are first averaged over users within each repetition.
    """
    traces = list(traces)
    if not traces:
        raise ValueError("nothing to aggregate")
    t = traces[0].t
    for tr in traces[1:]:
        if not np.array_equal(tr.t, t):
            raise ValueError("traces are logged at different rounds")
    pseudo = np.stack([tr.pseudo_regret for tr in traces])
    realized = np.stack([tr.realized_regret for tr in traces])
    coll = np.stack([tr.collisions_per_user for tr in traces])
    return TraceAggregate(
        t=t.copy(),
        pseudo_regret_mean=pseudo.mean(axis=0),
        pseudo_regret_std=pseudo.std(axis=0),
        realized_regret_mean=realized.mean(axis=0),
        realized_regret_std=realized.std(axis=0),
        collisions_per_user_mean=coll.mean(axis=0),
        collisions_per_user_std=coll.std(axis=0),
        repetitions=len(traces),
    )


def collision_indicators(choices):
    """Per-user collision flags from a (users, rounds) matrix of choices.

    Negative entries (refrain, inactive) never collide.
    """
    choices = np.asarray(choices)
    out = np.zeros(choices.shape, dtype=bool)
    for i in range(choices.shape[0]):
        a = choices[i]
        same = (choices == a[None, :]) & (a[None, :] >= 0)
        out[i] = same.sum(axis=0) > 1
    return out


def pairwise_collision_counts(choices, checkpoints, K):
    """counts[c, i, j, k]: rounds <= checkpoints[c] in which users i and j
    both transmitted on arm k."""
    choices = np.asarray(choices)
    U, T = choices.shape
    cps = np.asarray(checkpoints, dtype=np.int64)
    out = np.zeros((len(cps), U, U, K), dtype=np.int64)
    for i in range(U):
        for j in range(i + 1, U):
            hit = (choices[i] == choices[j]) & (choices[i] >= 0)
            rounds = np.nonzero(hit)[0]
            arms = choices[i, rounds]
            for c, cp in enumerate(cps):
                sel = rounds < cp
                counts = np.bincount(arms[sel], minlength=K)
                out[c, i, j] = counts
                out[c, j, i] = counts
    return out


def loglog_slope(t, y, lo, hi):
    """Least-squares slope of log y against log t for lo <= t <= hi."""
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    sel = (t >= lo) & (t <= hi) & (y > 0)
    if sel.sum() < 2:
        raise ValueError("need at least two positive points in range")
    slope, _ = np.polyfit(np.log(t[sel]), np.log(y[sel]), 1)
    return float(slope)
